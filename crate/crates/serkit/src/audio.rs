//! Mono PCM audio buffer and 16-bit WAV I/O.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Mono audio: samples in [-1.0, 1.0] plus a sample rate in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::contract("sample_rate must be positive"));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::contract(format!(
                "sample {pos} out of range: {}",
                samples[pos]
            )));
        }
        Ok(AudioBuffer { samples, sample_rate })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Read a RIFF/WAVE file containing 16-bit signed PCM.
///
/// Stereo (or higher channel count) input is rejected unless `downmix` is
/// set, in which case channels are averaged. Samples are scaled by 1/32768.
pub fn read_wav(path: &Path, downmix: bool) -> Result<AudioBuffer> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes, downmix)
}

fn parse_wav(bytes: &[u8], downmix: bool) -> Result<AudioBuffer> {
    let bad = |detail: &str| Error::format("WAV", detail.to_string());
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("missing RIFF/WAVE header"));
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (audio_format, channels, sample_rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut off = 12;
    while off + 8 <= bytes.len() {
        let id = &bytes[off..off + 4];
        let size = u32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap()) as usize;
        let body_end = off + 8 + size;
        if body_end > bytes.len() {
            return Err(bad("chunk extends past end of file"));
        }
        let body = &bytes[off + 8..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                let audio_format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((audio_format, channels, sample_rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned
        off = body_end + (size & 1);
    }
    let (audio_format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| bad("missing fmt chunk"))?;
    let data = data.ok_or_else(|| bad("missing data chunk"))?;
    if audio_format != 1 {
        return Err(Error::format("WAV", format!("unsupported encoding {audio_format} (PCM only)")));
    }
    if bits != 16 {
        return Err(Error::format("WAV", format!("unsupported bit depth {bits} (16-bit only)")));
    }
    if channels == 0 {
        return Err(bad("zero channels"));
    }
    if channels > 1 && !downmix {
        return Err(Error::format(
            "WAV",
            format!("{channels} channels; pass --downmix to average to mono"),
        ));
    }
    if sample_rate == 0 {
        return Err(bad("zero sample rate"));
    }
    let ch = channels as usize;
    let frame_bytes = 2 * ch;
    if data.len() % frame_bytes != 0 {
        return Err(bad("data chunk not a whole number of sample frames"));
    }
    let n = data.len() / frame_bytes;
    let mut samples = Vec::with_capacity(n);
    for frame in data.chunks_exact(frame_bytes) {
        let mut acc = 0.0;
        for c in 0..ch {
            let v = i16::from_le_bytes(frame[2 * c..2 * c + 2].try_into().unwrap());
            acc += v as f64 / 32768.0;
        }
        samples.push(acc / ch as f64);
    }
    Ok(AudioBuffer { samples, sample_rate })
}

/// Write a mono 16-bit PCM WAV file. Samples are clamped to [-1, 1] and
/// quantized with round-to-nearest.
pub fn write_wav(audio: &AudioBuffer, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let data_len = (audio.samples.len() * 2) as u32;
    w.write_all(b"RIFF").map_err(io)?;
    w.write_all(&(36 + data_len).to_le_bytes()).map_err(io)?;
    w.write_all(b"WAVE").map_err(io)?;
    w.write_all(b"fmt ").map_err(io)?;
    w.write_all(&16u32.to_le_bytes()).map_err(io)?;
    w.write_all(&1u16.to_le_bytes()).map_err(io)?; // PCM
    w.write_all(&1u16.to_le_bytes()).map_err(io)?; // mono
    w.write_all(&audio.sample_rate.to_le_bytes()).map_err(io)?;
    w.write_all(&(audio.sample_rate * 2).to_le_bytes()).map_err(io)?; // byte rate
    w.write_all(&2u16.to_le_bytes()).map_err(io)?; // block align
    w.write_all(&16u16.to_le_bytes()).map_err(io)?;
    w.write_all(b"data").map_err(io)?;
    w.write_all(&data_len.to_le_bytes()).map_err(io)?;
    for s in &audio.samples {
        let q = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_all(&q.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}
