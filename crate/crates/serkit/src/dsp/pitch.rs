//! Autocorrelation pitch tracking, voice-quality perturbation measures, and
//! the harmonics-to-noise ratio.

use crate::audio::AudioBuffer;
use crate::dsp::frame::{frame_count, FrameConfig};
use crate::error::{Error, Result};

/// Pitch search range and voicing decision threshold.
#[derive(Debug, Clone, Copy)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    /// Minimum normalized autocorrelation peak for a frame to count voiced.
    pub voicing_threshold: f64,
    /// Per-octave penalty discouraging subharmonic (longer-lag) candidates
    /// whose correlation ties the true period's.
    pub octave_cost: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig { f0_min: 60.0, f0_max: 500.0, voicing_threshold: 0.45, octave_cost: 0.01 }
    }
}

/// Per-frame pitch decisions plus the cycle markers feeding jitter/shimmer.
#[derive(Debug, Clone)]
pub struct PitchTrack {
    /// Hz per frame; 0 on unvoiced frames.
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    /// Normalized autocorrelation peak per frame (0 on silent frames).
    pub peak_corr: Vec<f64>,
    /// Durations of successive glottal cycles, seconds.
    pub periods_s: Vec<f64>,
    /// Absolute amplitude at each detected cycle peak.
    pub cycle_peaks: Vec<f64>,
}

impl PitchTrack {
    pub fn voiced_fraction(&self) -> f64 {
        if self.voiced.is_empty() {
            return 0.0;
        }
        self.voiced.iter().filter(|v| **v).count() as f64 / self.voiced.len() as f64
    }

    /// Median f0 over voiced frames.
    pub fn median_voiced_f0(&self) -> Option<f64> {
        let mut voiced: Vec<f64> = self
            .f0_hz
            .iter()
            .zip(&self.voiced)
            .filter(|(_, v)| **v)
            .map(|(f, _)| *f)
            .collect();
        if voiced.is_empty() {
            return None;
        }
        voiced.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(voiced[voiced.len() / 2])
    }
}

const SILENCE_POWER: f64 = 1e-12;

/// Track pitch by normalized cross-correlation over the frame grid of `cfg`.
///
/// Per frame the correlation is searched over lags in
/// [rate/f0_max, rate/f0_min]; the peak lag is refined by parabolic
/// interpolation and a frame is voiced when the peak correlation reaches
/// the voicing threshold. Cycle markers are then placed through the voiced
/// regions by period-guided peak picking with sub-sample refinement.
pub fn track_pitch(
    audio: &AudioBuffer,
    cfg: &FrameConfig,
    pitch: &PitchConfig,
) -> Result<PitchTrack> {
    if pitch.f0_min >= pitch.f0_max {
        return Err(Error::contract(format!(
            "f0_min {} must be below f0_max {}",
            pitch.f0_min, pitch.f0_max
        )));
    }
    if pitch.f0_min <= 0.0 {
        return Err(Error::contract("f0_min must be positive"));
    }
    let rate = audio.sample_rate as f64;
    if rate < 2.0 * pitch.f0_max * 4.0 {
        return Err(Error::contract(format!(
            "sample rate {rate} too low for f0_max {} (need at least {})",
            pitch.f0_max,
            2.0 * pitch.f0_max * 4.0
        )));
    }
    cfg.validate()?;
    let frame_len = cfg.frame_len(audio.sample_rate);
    let hop = cfg.hop(audio.sample_rate);
    if audio.samples.len() < frame_len {
        return Err(Error::contract("signal shorter than one frame"));
    }

    let lag_min = (rate / pitch.f0_max).floor().max(2.0) as usize;
    let mut lag_max = (rate / pitch.f0_min).ceil() as usize;
    if lag_max >= frame_len {
        lag_max = frame_len - 1;
    }
    if lag_min >= lag_max {
        return Err(Error::contract(
            "frame too short for the requested f0 range; increase frame_len_ms",
        ));
    }
    let window = frame_len - lag_max;

    let count = frame_count(audio.samples.len(), frame_len, hop);
    let mut f0_hz = vec![0.0; count];
    let mut voiced = vec![false; count];
    let mut peak_corr = vec![0.0; count];

    for idx in 0..count {
        let x = &audio.samples[idx * hop..idx * hop + frame_len];
        let energy0: f64 = x[..window].iter().map(|s| s * s).sum();
        let frame_power = x.iter().map(|s| s * s).sum::<f64>() / frame_len as f64;
        if frame_power < SILENCE_POWER || energy0 <= 0.0 {
            continue;
        }
        // sliding lagged energy keeps the scan linear in the lag span
        let mut lagged: f64 = x[lag_min..lag_min + window].iter().map(|s| s * s).sum();
        let mut corr = vec![0.0f64; lag_max + 1];
        for lag in lag_min..=lag_max {
            if lag > lag_min {
                lagged += x[lag + window - 1] * x[lag + window - 1];
                lagged -= x[lag - 1] * x[lag - 1];
            }
            let dot: f64 = (0..window).map(|t| x[t] * x[t + lag]).sum();
            let denom = (energy0 * lagged).sqrt();
            corr[lag] = if denom > 0.0 { dot / denom } else { 0.0 };
        }
        // candidate local maxima scored with an octave cost, so the true
        // period beats its subharmonics when their correlations tie
        let mut lag = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for cand in lag_min..=lag_max {
            let left = if cand > lag_min { corr[cand - 1] } else { f64::NEG_INFINITY };
            let right = if cand < lag_max { corr[cand + 1] } else { f64::NEG_INFINITY };
            if corr[cand] < left || corr[cand] < right {
                continue;
            }
            let score =
                corr[cand] - pitch.octave_cost * (cand as f64 / lag_min as f64).log2();
            if score > best_score {
                best_score = score;
                lag = cand;
            }
        }
        if lag == 0 {
            continue;
        }
        let r = corr[lag];
        peak_corr[idx] = r.max(0.0);
        if r >= pitch.voicing_threshold {
            // parabolic lag refinement where neighbors exist
            let refined = if lag > lag_min && lag < lag_max {
                let (rl, rc, rr) = (corr[lag - 1], corr[lag], corr[lag + 1]);
                let denom = rl - 2.0 * rc + rr;
                let delta = if denom.abs() > 1e-12 { 0.5 * (rl - rr) / denom } else { 0.0 };
                lag as f64 + delta.clamp(-0.5, 0.5)
            } else {
                lag as f64
            };
            let f0 = rate / refined;
            if f0 >= pitch.f0_min && f0 <= pitch.f0_max {
                f0_hz[idx] = f0;
                voiced[idx] = true;
            }
        }
    }

    let (periods_s, cycle_peaks) = mark_cycles(audio, hop, frame_len, &f0_hz, &voiced);
    Ok(PitchTrack { f0_hz, voiced, peak_corr, periods_s, cycle_peaks })
}

/// Parabolic refinement of a sample-domain peak: returns (position, value).
fn refine_peak(samples: &[f64], at: usize) -> (f64, f64) {
    if at == 0 || at + 1 >= samples.len() {
        return (at as f64, samples[at].abs());
    }
    let (l, c, r) = (samples[at - 1].abs(), samples[at].abs(), samples[at + 1].abs());
    let denom = l - 2.0 * c + r;
    if denom.abs() < 1e-30 {
        return (at as f64, c);
    }
    let delta = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
    let value = c - 0.25 * (l - r) * delta;
    (at as f64 + delta, value)
}

/// Walk voiced regions cycle by cycle: seed at the strongest peak of the
/// first period, then repeatedly search one local period ahead.
fn mark_cycles(
    audio: &AudioBuffer,
    hop: usize,
    frame_len: usize,
    f0_hz: &[f64],
    voiced: &[bool],
) -> (Vec<f64>, Vec<f64>) {
    let rate = audio.sample_rate as f64;
    let samples = &audio.samples;
    let period_at = |sample: usize| -> Option<f64> {
        // frame whose center is nearest the sample position
        let center_offset = frame_len / 2;
        let idx = sample.saturating_sub(center_offset.min(sample)) / hop;
        let idx = idx.min(f0_hz.len().saturating_sub(1));
        for probe in [idx, idx.saturating_sub(1), (idx + 1).min(f0_hz.len().saturating_sub(1))] {
            if voiced[probe] {
                return Some(rate / f0_hz[probe]);
            }
        }
        None
    };

    let mut periods = Vec::new();
    let mut peaks = Vec::new();
    let mut idx = 0usize;
    while idx < voiced.len() {
        if !voiced[idx] {
            idx += 1;
            continue;
        }
        let region_start = idx;
        while idx < voiced.len() && voiced[idx] {
            idx += 1;
        }
        let region_end_frame = idx; // exclusive
        let start_sample = region_start * hop;
        let end_sample = ((region_end_frame - 1) * hop + frame_len).min(samples.len());

        let Some(first_period) = period_at(start_sample) else { continue };
        let seed_end = (start_sample + first_period.ceil() as usize + 1).min(end_sample);
        if seed_end <= start_sample + 2 {
            continue;
        }
        let mut best = start_sample;
        for s in start_sample..seed_end {
            if samples[s].abs() > samples[best].abs() {
                best = s;
            }
        }
        let (mut prev_pos, prev_val) = refine_peak(samples, best);
        peaks.push(prev_val);
        loop {
            let here = prev_pos.round() as usize;
            let Some(period) = period_at(here.min(samples.len() - 1)) else { break };
            let predicted = prev_pos + period;
            let search_lo = (predicted - period / 3.0).round().max(0.0) as usize;
            let search_hi = ((predicted + period / 3.0).round() as usize).min(end_sample);
            if search_lo + 2 >= search_hi || search_hi > samples.len() {
                break;
            }
            let mut best = search_lo;
            for s in search_lo..search_hi {
                if samples[s].abs() > samples[best].abs() {
                    best = s;
                }
            }
            // a maximum on the search boundary is not a trustworthy cycle
            // peak (clipped window near the region edge); end the walk
            if best == search_lo || best + 1 >= search_hi {
                break;
            }
            let (pos, val) = refine_peak(samples, best);
            if pos <= prev_pos + 1.0 {
                break;
            }
            periods.push((pos - prev_pos) / rate);
            peaks.push(val);
            prev_pos = pos;
        }
    }
    (periods, peaks)
}

/// Local jitter and shimmer from cycle markers:
/// jitter = mean(|T_i − T_{i−1}|) / mean(T),
/// shimmer = mean(|A_i − A_{i−1}|) / mean(A).
pub fn jitter_shimmer(track: &PitchTrack) -> Result<(f64, f64)> {
    if track.periods_s.len() < 2 || track.cycle_peaks.len() < 2 {
        return Err(Error::numeric(format!(
            "jitter/shimmer undefined with {} cycles",
            track.periods_s.len()
        )));
    }
    let mean_abs_diff = |xs: &[f64]| {
        xs.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (xs.len() - 1) as f64
    };
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let jitter = mean_abs_diff(&track.periods_s) / mean(&track.periods_s);
    let shimmer = mean_abs_diff(&track.cycle_peaks) / mean(&track.cycle_peaks);
    Ok((jitter, shimmer))
}

/// Per-frame harmonics-to-noise ratio in dB from the normalized
/// autocorrelation peak r: 10·log10(r / (1 − r)), clipped to [floor, 100];
/// unvoiced frames sit at the floor (default −100 dB).
pub fn hnr_db(track: &PitchTrack, floor_db: f64) -> Vec<f64> {
    track
        .peak_corr
        .iter()
        .zip(&track.voiced)
        .map(|(&r, &v)| {
            if !v {
                return floor_db;
            }
            let r = r.clamp(1e-10, 1.0 - 1e-10);
            (10.0 * (r / (1.0 - r)).log10()).clamp(floor_db.max(-100.0), 100.0)
        })
        .collect()
}
