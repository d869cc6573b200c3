//! Paralinguistic feature extraction.
//!
//! [`extract_features`] runs the whole per-utterance pipeline: framing,
//! pitch, HNR, formants, spectral balance descriptors, and MFCCs, assembled
//! into one named-column matrix plus the utterance-level jitter/shimmer
//! scalars.

pub mod aggregate;
pub mod formant;
pub mod frame;
pub mod mfcc;
pub mod pitch;
pub mod spectral;

pub use aggregate::{bucketize_by_percentile, hierarchical_aggregate, AggregateLevel, Bucket};
pub use formant::{default_lpc_order, formants_lpc, FormantFrame};
pub use frame::{frame_signal, loudness_db, Frame, FrameConfig, WindowKind};
pub use mfcc::mfcc;
pub use pitch::{hnr_db, jitter_shimmer, track_pitch, PitchConfig, PitchTrack};
pub use spectral::{spectral_descriptors, SpectralFrame};

use crate::audio::AudioBuffer;
use crate::error::Result;
use crate::matrix::Matrix;

/// Everything the extraction pipeline needs to know.
#[derive(Debug, Clone)]
pub struct DspConfig {
    pub frame: FrameConfig,
    pub pitch: PitchConfig,
    pub n_mfcc: usize,
    pub n_mels: usize,
    pub hnr_floor_db: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            frame: FrameConfig::default(),
            pitch: PitchConfig::default(),
            n_mfcc: 40,
            n_mels: 64,
            hnr_floor_db: -100.0,
        }
    }
}

/// The documented output column order (before the MFCC block).
pub const SCALAR_COLUMNS: [&str; 15] = [
    "loudness_db",
    "hnr_db",
    "f0_hz",
    "f1_hz",
    "f2_hz",
    "f3_hz",
    "f1_rel_energy_db",
    "f2_rel_energy_db",
    "f3_rel_energy_db",
    "alpha_ratio_db",
    "hammarberg_db",
    "slope_0_500_db_per_hz",
    "slope_500_1500_db_per_hz",
    "h1_h2_db",
    "h1_a3_db",
];

/// Per-frame features plus utterance-level scalars and extraction notes.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    /// frames × (15 scalar descriptors + n_mfcc coefficients), with column
    /// names attached. Formant and harmonic columns are zero on unvoiced
    /// frames; unavailable descriptors are zero-filled and listed below.
    pub matrix: Matrix,
    /// None when the utterance has fewer than two detected cycles.
    pub jitter_local: Option<f64>,
    pub shimmer_local: Option<f64>,
    pub skipped_formant_frames: usize,
    /// Descriptor columns that were unavailable on at least one frame
    /// (for example band measures at low sample rates).
    pub unavailable: Vec<String>,
}

/// Run the full extraction pipeline on one utterance.
pub fn extract_features(audio: &AudioBuffer, cfg: &DspConfig) -> Result<FeatureMatrix> {
    let frames = frame_signal(audio, &cfg.frame)?;
    let n = frames.len();
    let loudness = loudness_db(audio, &cfg.frame)?;
    let track = track_pitch(audio, &cfg.frame, &cfg.pitch)?;
    let hnr = hnr_db(&track, cfg.hnr_floor_db);
    let (formants, skipped_formant_frames) =
        formants_lpc(&frames, audio.sample_rate, default_lpc_order(audio.sample_rate));
    let spectral = spectral_descriptors(&frames, &track, &formants, audio.sample_rate)?;
    let mfccs = mfcc(&frames, audio.sample_rate, cfg.n_mfcc, cfg.n_mels)?;

    let n_cols = SCALAR_COLUMNS.len() + cfg.n_mfcc;
    let mut values = Vec::with_capacity(n * n_cols);
    let mut unavailable = std::collections::BTreeSet::new();
    let mut take = |opt: Option<f64>, name: &str| match opt {
        Some(v) => v,
        None => {
            unavailable.insert(name.to_string());
            0.0
        }
    };
    for i in 0..n {
        let voiced = track.voiced[i];
        values.push(loudness[i]);
        values.push(hnr[i]);
        values.push(track.f0_hz[i]);
        // formant columns are zero-filled on unvoiced frames
        let f = &formants[i];
        for d in 0..3 {
            values.push(if voiced && f.valid { f.freqs_hz[d] } else { 0.0 });
        }
        for d in 0..3 {
            values.push(if voiced && f.valid { f.rel_energy_db[d] } else { 0.0 });
        }
        let s = &spectral[i];
        values.push(take(s.alpha_ratio_db, "alpha_ratio_db"));
        values.push(take(s.hammarberg_db, "hammarberg_db"));
        values.push(take(s.slope_0_500, "slope_0_500_db_per_hz"));
        values.push(take(s.slope_500_1500, "slope_500_1500_db_per_hz"));
        values.push(if voiced { s.h1_h2_db.unwrap_or(0.0) } else { 0.0 });
        values.push(if voiced { s.h1_a3_db.unwrap_or(0.0) } else { 0.0 });
        values.extend_from_slice(mfccs.row(i));
    }
    let mut names: Vec<String> = SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in 0..cfg.n_mfcc {
        names.push(format!("mfcc_{k}"));
    }
    let matrix = Matrix::from_vec(n, n_cols, values)?.with_column_names(names)?;

    let (jitter_local, shimmer_local) = match jitter_shimmer(&track) {
        Ok((j, s)) => (Some(j), Some(s)),
        Err(_) => (None, None),
    };
    Ok(FeatureMatrix {
        matrix,
        jitter_local,
        shimmer_local,
        skipped_formant_frames,
        unavailable: unavailable.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: u32, secs: f64, amp: f64) -> AudioBuffer {
        let n = (rate as f64 * secs) as usize;
        let samples = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
            .collect();
        AudioBuffer { samples, sample_rate: rate }
    }

    #[test]
    fn pipeline_shapes_and_names() {
        let audio = tone(200.0, 16000, 1.0, 0.6);
        let features = extract_features(&audio, &DspConfig::default()).unwrap();
        assert_eq!(features.matrix.rows(), 98);
        assert_eq!(features.matrix.cols(), 55);
        let names = features.matrix.column_names().unwrap();
        assert_eq!(names[0], "loudness_db");
        assert_eq!(names[54], "mfcc_39");
        assert!(features.jitter_local.unwrap() < 1e-3);
    }

    #[test]
    fn silence_yields_no_jitter() {
        let audio = AudioBuffer { samples: vec![0.0; 16000], sample_rate: 16000 };
        let features = extract_features(&audio, &DspConfig::default()).unwrap();
        assert!(features.jitter_local.is_none());
        assert!(features.shimmer_local.is_none());
        // f0 column all zero
        let f0_col = 2;
        for r in 0..features.matrix.rows() {
            assert_eq!(features.matrix.get(r, f0_col), 0.0);
        }
    }

    #[test]
    fn amplitude_invariance_of_ratio_features() {
        let rate = 16000u32;
        // harmonically rich signal so all descriptors engage
        let samples: Vec<f64> = (0..16000)
            .map(|i| {
                let t = i as f64 / rate as f64;
                let phase = (t * 180.0).fract();
                (2.0 * phase - 1.0) * 0.45
            })
            .collect();
        let base = AudioBuffer { samples: samples.clone(), sample_rate: rate };
        let c = 0.5f64;
        let scaled =
            AudioBuffer { samples: samples.iter().map(|s| s * c).collect(), sample_rate: rate };
        let cfg = DspConfig::default();
        let a = extract_features(&base, &cfg).unwrap();
        let b = extract_features(&scaled, &cfg).unwrap();
        let names = a.matrix.column_names().unwrap().to_vec();
        let col = |name: &str| names.iter().position(|n| n == name).unwrap();

        // jitter/shimmer are ratios
        assert!((a.jitter_local.unwrap() - b.jitter_local.unwrap()).abs() < 1e-6);
        assert!((a.shimmer_local.unwrap() - b.shimmer_local.unwrap()).abs() < 1e-6);

        let invariant_cols = [
            "f0_hz",
            "alpha_ratio_db",
            "hammarberg_db",
            "slope_0_500_db_per_hz",
            "slope_500_1500_db_per_hz",
            "h1_h2_db",
        ];
        for name in invariant_cols {
            let idx = col(name);
            for r in 0..a.matrix.rows() {
                let (va, vb) = (a.matrix.get(r, idx), b.matrix.get(r, idx));
                assert!((va - vb).abs() < 1e-6, "{name} row {r}: {va} vs {vb}");
            }
        }
        let loud = col("loudness_db");
        let shift = 20.0 * c.log10();
        for r in 0..a.matrix.rows() {
            let d = b.matrix.get(r, loud) - a.matrix.get(r, loud);
            assert!((d - shift).abs() < 1e-9, "loudness shift {d}");
        }
    }
}
