//! Signal framing and per-frame loudness.

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Analysis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    #[default]
    Hann,
    Hamming,
}

impl WindowKind {
    pub fn parse(s: &str) -> Result<WindowKind> {
        match s {
            "hann" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            other => Err(Error::contract(format!("unknown window {other:?}"))),
        }
    }

    pub fn coefficients(&self, len: usize) -> Vec<f64> {
        let n = len.max(1) as f64;
        (0..len)
            .map(|i| {
                let phase = 2.0 * std::f64::consts::PI * i as f64 / (n - 1.0).max(1.0);
                match self {
                    WindowKind::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                }
            })
            .collect()
    }
}

/// Frame length, hop, and window for all short-time analyses.
#[derive(Debug, Clone, Copy)]
pub struct FrameConfig {
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub window: WindowKind,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig { frame_len_ms: 25.0, hop_ms: 10.0, window: WindowKind::Hann }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop_ms <= 0.0 || !self.hop_ms.is_finite() {
            return Err(Error::contract("hop_ms must be positive"));
        }
        if self.frame_len_ms < self.hop_ms {
            return Err(Error::contract("frame_len_ms must be at least hop_ms"));
        }
        Ok(())
    }

    pub fn frame_len(&self, sample_rate: u32) -> usize {
        (self.frame_len_ms / 1000.0 * sample_rate as f64).round() as usize
    }

    pub fn hop(&self, sample_rate: u32) -> usize {
        (self.hop_ms / 1000.0 * sample_rate as f64).round().max(1.0) as usize
    }
}

/// One windowed analysis frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub samples: Vec<f64>,
}

/// Number of frames for a signal of `len` samples:
/// floor((len − frame_len)/hop) + 1.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len {
        0
    } else {
        (len - frame_len) / hop + 1
    }
}

/// Split into windowed frames. Errors when the signal is shorter than one
/// frame.
pub fn frame_signal(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<Vec<Frame>> {
    cfg.validate()?;
    let frame_len = cfg.frame_len(audio.sample_rate);
    let hop = cfg.hop(audio.sample_rate);
    if frame_len == 0 {
        return Err(Error::contract("frame length rounds to zero samples"));
    }
    if audio.samples.len() < frame_len {
        return Err(Error::contract(format!(
            "signal of {} samples is shorter than one {frame_len}-sample frame",
            audio.samples.len()
        )));
    }
    let coeffs = cfg.window.coefficients(frame_len);
    let count = frame_count(audio.samples.len(), frame_len, hop);
    let mut frames = Vec::with_capacity(count);
    for idx in 0..count {
        let start = idx * hop;
        let samples = audio.samples[start..start + frame_len]
            .iter()
            .zip(&coeffs)
            .map(|(s, w)| s * w)
            .collect();
        frames.push(Frame { samples });
    }
    Ok(frames)
}

/// Raw (unwindowed) frames over the same grid; used by the pitch tracker and
/// the loudness measure, which must not see the window taper.
pub fn raw_frames(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let frame_len = cfg.frame_len(audio.sample_rate);
    let hop = cfg.hop(audio.sample_rate);
    if frame_len == 0 || audio.samples.len() < frame_len {
        return Err(Error::contract("signal shorter than one frame"));
    }
    let count = frame_count(audio.samples.len(), frame_len, hop);
    Ok((0..count)
        .map(|idx| audio.samples[idx * hop..idx * hop + frame_len].to_vec())
        .collect())
}

const RMS_FLOOR: f64 = 1e-10;

/// Per-frame loudness as log-RMS in dB: 20·log10(rms). Scaling the signal
/// by c shifts every frame by exactly 20·log10(c).
pub fn loudness_db(audio: &AudioBuffer, cfg: &FrameConfig) -> Result<Vec<f64>> {
    Ok(raw_frames(audio, cfg)?
        .iter()
        .map(|frame| {
            let power = frame.iter().map(|s| s * s).sum::<f64>() / frame.len() as f64;
            20.0 * power.sqrt().max(RMS_FLOOR).log10()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn audio(samples: Vec<f64>, rate: u32) -> AudioBuffer {
        AudioBuffer { samples, sample_rate: rate }
    }

    #[test]
    fn one_second_at_default_config_gives_98_frames() {
        let a = audio(vec![0.0; 16000], 16000);
        let frames = frame_signal(&a, &FrameConfig::default()).unwrap();
        assert_eq!(frames.len(), 98);
        assert_eq!(frames[0].samples.len(), 400);
    }

    #[test]
    fn zero_signal_gives_zero_frames_values() {
        let a = audio(vec![0.0; 1000], 8000);
        let frames = frame_signal(&a, &FrameConfig::default()).unwrap();
        assert!(frames.iter().all(|f| f.samples.iter().all(|&s| s == 0.0)));
    }

    #[test]
    fn full_signal_frame_is_single() {
        let a = audio(vec![0.1; 800], 8000);
        let cfg = FrameConfig { frame_len_ms: 100.0, hop_ms: 100.0, window: WindowKind::Hann };
        let frames = frame_signal(&a, &cfg).unwrap();
        assert_eq!(frames.len(), 1);
    }

    #[test]
    fn too_short_signal_rejected() {
        let a = audio(vec![0.0; 100], 16000);
        assert!(frame_signal(&a, &FrameConfig::default()).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = FrameConfig { frame_len_ms: 5.0, hop_ms: 10.0, window: WindowKind::Hann };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn loudness_tracks_scaling_exactly() {
        let rate = 16000;
        let samples: Vec<f64> = (0..rate)
            .map(|i| (2.0 * std::f64::consts::PI * 100.0 * i as f64 / rate as f64).sin() * 0.5)
            .collect();
        let a = audio(samples.clone(), rate as u32);
        let scaled = audio(samples.iter().map(|s| s * 0.25).collect(), rate as u32);
        let base = loudness_db(&a, &FrameConfig::default()).unwrap();
        let quiet = loudness_db(&scaled, &FrameConfig::default()).unwrap();
        let shift = 20.0 * 0.25f64.log10();
        for (b, q) in base.iter().zip(&quiet) {
            assert!((q - b - shift).abs() < 1e-9, "{q} vs {b}");
        }
    }
}
