//! Formant estimation by linear-prediction analysis.

use nalgebra::DMatrix;

use crate::dsp::frame::Frame;

/// Pre-emphasis coefficient applied before linear prediction.
pub const PRE_EMPHASIS: f64 = 0.97;

/// Candidate roots must have bandwidth below this to count as formants.
pub const MAX_BANDWIDTH_HZ: f64 = 400.0;

/// Candidate roots below this frequency are discarded.
pub const MIN_FORMANT_HZ: f64 = 90.0;

/// F1–F3 estimates for one frame; absent formants are 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct FormantFrame {
    pub freqs_hz: [f64; 3],
    /// Spectral-envelope level at each formant minus the frame's overall
    /// level, in dB.
    pub rel_energy_db: [f64; 3],
    /// False when the LP recursion was unstable and the frame was skipped.
    pub valid: bool,
}

/// Conventional analysis order: 2 + one pole pair per kHz of bandwidth.
pub fn default_lpc_order(sample_rate: u32) -> usize {
    2 + (sample_rate as f64 / 1000.0).round() as usize
}

/// Levinson-Durbin recursion. Returns (coefficients a_1..a_p, final
/// prediction error), or None when the recursion loses positivity.
fn levinson(autocorr: &[f64], order: usize) -> Option<(Vec<f64>, f64)> {
    let r0 = autocorr[0];
    if r0 <= 0.0 {
        return None;
    }
    let mut a = vec![0.0f64; order + 1];
    let mut error = r0;
    for i in 1..=order {
        let mut acc = autocorr[i];
        for j in 1..i {
            acc -= a[j] * autocorr[i - j];
        }
        let k = acc / error;
        let mut new_a = a.clone();
        new_a[i] = k;
        for j in 1..i {
            new_a[j] = a[j] - k * a[i - j];
        }
        a = new_a;
        error *= 1.0 - k * k;
        if error <= 0.0 || !error.is_finite() {
            return None;
        }
    }
    Some((a[1..].to_vec(), error))
}

/// Roots of the monic polynomial z^p − a1·z^(p−1) − … − ap via the
/// companion matrix.
fn prediction_polynomial_roots(coeffs: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    let p = coeffs.len();
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (i, &a) in coeffs.iter().enumerate() {
        companion[(0, i)] = a;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Estimate F1–F3 on every frame. Returns the per-frame estimates plus the
/// count of frames skipped for unstable recursions.
pub fn formants_lpc(frames: &[Frame], sample_rate: u32, order: usize) -> (Vec<FormantFrame>, usize) {
    let rate = sample_rate as f64;
    let nyquist = rate / 2.0;
    let mut skipped = 0usize;
    let out = frames
        .iter()
        .map(|frame| {
            let n = frame.samples.len();
            if n <= order + 1 {
                skipped += 1;
                return FormantFrame::default();
            }
            // pre-emphasis inside the frame
            let mut y = Vec::with_capacity(n);
            y.push(frame.samples[0]);
            for t in 1..n {
                y.push(frame.samples[t] - PRE_EMPHASIS * frame.samples[t - 1]);
            }
            let mut autocorr = vec![0.0; order + 1];
            for (k, slot) in autocorr.iter_mut().enumerate() {
                *slot = (0..n - k).map(|t| y[t] * y[t + k]).sum();
            }
            let Some((a, error)) = levinson(&autocorr, order) else {
                skipped += 1;
                return FormantFrame::default();
            };
            let mut candidates: Vec<f64> = prediction_polynomial_roots(&a)
                .into_iter()
                .filter(|z| z.im > 0.0)
                .filter_map(|z| {
                    let radius = z.norm();
                    if radius <= 0.0 || radius >= 1.0 {
                        return None;
                    }
                    let freq = z.arg() * rate / (2.0 * std::f64::consts::PI);
                    let bandwidth = -radius.ln() * rate / std::f64::consts::PI;
                    (freq > MIN_FORMANT_HZ && freq < nyquist - 50.0 && bandwidth < MAX_BANDWIDTH_HZ)
                        .then_some(freq)
                })
                .collect();
            candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut result = FormantFrame { valid: true, ..FormantFrame::default() };
            let frame_power_db = 10.0 * (autocorr[0] / n as f64).max(1e-30).log10();
            let gain = error.max(1e-30).sqrt();
            for (slot, &freq) in result.freqs_hz.iter_mut().zip(candidates.iter().take(3)) {
                *slot = freq;
            }
            for i in 0..3 {
                let f = result.freqs_hz[i];
                if f > 0.0 {
                    // LP envelope level: gain / |A(e^{jw})|
                    let omega = 2.0 * std::f64::consts::PI * f / rate;
                    let mut re = 1.0;
                    let mut im = 0.0;
                    for (k, &ak) in a.iter().enumerate() {
                        let phase = omega * (k + 1) as f64;
                        re -= ak * phase.cos();
                        im += ak * phase.sin();
                    }
                    let envelope = gain / (re * re + im * im).sqrt().max(1e-30);
                    result.rel_energy_db[i] = 20.0 * envelope.max(1e-30).log10() - frame_power_db;
                }
            }
            result
        })
        .collect();
    (out, skipped)
}
