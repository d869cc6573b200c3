//! Mel-frequency cepstral coefficients.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dsp::frame::Frame;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Energy floor applied before the log, so silence maps to ln(1e-10).
pub const LOG_FLOOR_ENERGY: f64 = 1e-10;

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

fn next_pow2(n: usize) -> usize {
    let mut p = 1;
    while p < n {
        p <<= 1;
    }
    p
}

/// Triangular mel filterbank over FFT bins 0..=fft_len/2.
fn filterbank(n_mels: usize, fft_len: usize, sample_rate: f64) -> Vec<Vec<(usize, f64)>> {
    let n_bins = fft_len / 2 + 1;
    let mel_lo = hz_to_mel(0.0);
    let mel_hi = hz_to_mel(sample_rate / 2.0);
    let centers: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let hz_per_bin = sample_rate / fft_len as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (centers[m], centers[m + 1], centers[m + 2]);
            let mut weights = Vec::new();
            for k in 0..n_bins {
                let f = k as f64 * hz_per_bin;
                let w = if f <= lo || f >= hi {
                    0.0
                } else if f <= mid {
                    (f - lo) / (mid - lo)
                } else {
                    (hi - f) / (hi - mid)
                };
                if w > 0.0 {
                    weights.push((k, w));
                }
            }
            weights
        })
        .collect()
}

/// Per-frame MFCCs: log-mel filterbank energies followed by a DCT-II.
///
/// Coefficient 0 is the mean of the log energies (so silence lands exactly
/// at the log floor) and coefficients k ≥ 1 use the 2/M-normalized DCT-II.
/// Scaling the audio therefore shifts only coefficient 0.
pub fn mfcc(
    frames: &[Frame],
    sample_rate: u32,
    n_coeffs: usize,
    n_mels: usize,
) -> Result<Matrix> {
    if n_coeffs == 0 || n_mels == 0 {
        return Err(Error::contract("n_coeffs and n_mels must be positive"));
    }
    if n_coeffs > n_mels {
        return Err(Error::contract(format!(
            "n_coeffs {n_coeffs} exceeds n_mels {n_mels}"
        )));
    }
    if sample_rate < 8000 {
        return Err(Error::contract("MFCC extraction expects a sample rate of at least 8 kHz"));
    }
    if frames.is_empty() {
        return Err(Error::contract("no frames"));
    }
    let fft_len = next_pow2(frames[0].samples.len());
    let bank = filterbank(n_mels, fft_len, sample_rate as f64);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(fft_len);

    let m = n_mels as f64;
    let mut values = Vec::with_capacity(frames.len() * n_coeffs);
    for frame in frames {
        let mut buf: Vec<Complex<f64>> = frame
            .samples
            .iter()
            .map(|&s| Complex::new(s, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(fft_len)
            .collect();
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..fft_len / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        let log_energies: Vec<f64> = bank
            .iter()
            .map(|weights| {
                let e: f64 = weights.iter().map(|&(k, w)| power[k] * w).sum();
                e.max(LOG_FLOOR_ENERGY).ln()
            })
            .collect();
        for k in 0..n_coeffs {
            let c = if k == 0 {
                log_energies.iter().sum::<f64>() / m
            } else {
                (2.0 / m)
                    * log_energies
                        .iter()
                        .enumerate()
                        .map(|(i, &e)| {
                            e * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / m).cos()
                        })
                        .sum::<f64>()
            };
            values.push(c);
        }
    }
    Matrix::from_vec(frames.len(), n_coeffs, values)
}
