//! PCM audio containers, WAV and raw PCM readers, and level helpers.

use std::io::{Read, Seek};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Interleaved floating-point samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioTrack {
    samples: Vec<f32>,
    sample_rate: u32,
    channels: u16,
}

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("audio track has no samples")]
    Empty,
    #[error("invalid audio parameters: {0}")]
    InvalidParameters(String),
    #[error("unsupported sample format: {0}")]
    UnsupportedFormat(String),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Sample encodings accepted for headerless PCM input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawFormat {
    S16le,
    F32le,
}

impl AudioTrack {
    pub fn new(samples: Vec<f32>, sample_rate: u32, channels: u16) -> Result<Self, AudioError> {
        if sample_rate == 0 || channels == 0 {
            return Err(AudioError::InvalidParameters(format!("sample rate {sample_rate}, channels {channels}")));
        }
        if samples.is_empty() {
            return Err(AudioError::Empty);
        }
        if !samples.len().is_multiple_of(channels as usize) {
            return Err(AudioError::InvalidParameters(format!(
                "{} samples do not divide into {channels} channels",
                samples.len()
            )));
        }
        Ok(AudioTrack { samples, sample_rate, channels })
    }

    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        AudioTrack::new(samples, sample_rate, 1)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn duration_ms(&self) -> u64 {
        frames_to_ms(self.frames(), self.sample_rate)
    }

    /// Mean of all channels per frame.
    pub fn downmix(&self) -> Vec<f32> {
        let ch = self.channels as usize;
        if ch == 1 {
            return self.samples.clone();
        }
        self.samples.chunks_exact(ch).map(|frame| frame.iter().sum::<f32>() / ch as f32).collect()
    }

    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self, AudioError> {
        let reader = hound::WavReader::open(path)?;
        Self::from_wav_reader(reader)
    }

    pub fn read_wav_from<R: Read>(reader: R) -> Result<Self, AudioError> {
        Self::from_wav_reader(hound::WavReader::new(reader)?)
    }

    fn from_wav_reader<R: Read>(reader: hound::WavReader<R>) -> Result<Self, AudioError> {
        let spec = reader.spec();
        let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
            (hound::SampleFormat::Float, 32) => reader.into_samples::<f32>().collect::<Result<_, _>>()?,
            (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
                let scale = (1u64 << (bits - 1)) as f32;
                reader.into_samples::<i32>().map(|s| s.map(|v| v as f32 / scale)).collect::<Result<_, _>>()?
            }
            (fmt, bits) => {
                return Err(AudioError::UnsupportedFormat(format!("{fmt:?} {bits}-bit")));
            }
        };
        AudioTrack::new(samples, spec.sample_rate, spec.channels)
    }

    /// Decodes headerless little-endian PCM.
    pub fn from_raw_pcm(bytes: &[u8], format: RawFormat, sample_rate: u32, channels: u16) -> Result<Self, AudioError> {
        let samples: Vec<f32> = match format {
            RawFormat::S16le => {
                bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0).collect()
            }
            RawFormat::F32le => bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect(),
        };
        AudioTrack::new(samples, sample_rate, channels)
    }

    /// Writes 16-bit PCM WAV with this track's rate and channel count.
    pub fn write_wav16(&self, path: impl AsRef<Path>) -> Result<(), AudioError> {
        write_wav16(path, &self.samples, self.sample_rate, self.channels)
    }
}

pub fn write_wav16(path: impl AsRef<Path>, samples: &[f32], sample_rate: u32, channels: u16) -> Result<(), AudioError> {
    let spec = hound::WavSpec { channels, sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        writer.write_sample(f32_to_i16(s))?;
    }
    writer.finalize()?;
    Ok(())
}

/// [`write_wav16`] into memory.
pub fn encode_wav16(samples: &[f32], sample_rate: u32, channels: u16) -> Result<Vec<u8>, AudioError> {
    let spec = hound::WavSpec { channels, sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let mut out = std::io::Cursor::new(Vec::new());
    let mut writer = hound::WavWriter::new(&mut out, spec)?;
    for &s in samples {
        writer.write_sample(f32_to_i16(s))?;
    }
    writer.finalize()?;
    Ok(out.into_inner())
}

pub fn f32_to_i16(s: f32) -> i16 {
    (s.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// Reads just the duration of a WAV file.
pub fn wav_duration_ms<R: Read + Seek>(reader: R) -> Result<u64, AudioError> {
    let r = hound::WavReader::new(reader)?;
    let spec = r.spec();
    Ok(frames_to_ms(r.duration() as usize, spec.sample_rate))
}

pub fn frames_to_ms(frames: usize, sample_rate: u32) -> u64 {
    ((frames as u128 * 1000 + sample_rate as u128 / 2) / sample_rate as u128) as u64
}

pub fn ms_to_frames(ms: u64, sample_rate: u32) -> usize {
    ((ms as u128 * sample_rate as u128 + 500) / 1000) as usize
}

pub fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (sum / samples.len() as f64).sqrt()
}

/// RMS level in dBFS (`-inf` for digital silence).
pub fn rms_dbfs(samples: &[f32]) -> f64 {
    20.0 * rms(samples).log10()
}

/// Linear-interpolation resampler; adequate for narration previews.
pub fn resample_linear(samples: &[f32], from_rate: u32, to_rate: u32) -> Vec<f32> {
    if from_rate == to_rate || samples.is_empty() {
        return samples.to_vec();
    }
    let out_len = ((samples.len() as u128 * to_rate as u128) / from_rate as u128) as usize;
    let step = from_rate as f64 / to_rate as f64;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let idx = pos.floor() as usize;
            let frac = (pos - idx as f64) as f32;
            let a = samples[idx.min(samples.len() - 1)];
            let b = samples[(idx + 1).min(samples.len() - 1)];
            a + (b - a) * frac
        })
        .collect()
}

/// A sine tone, used for fixtures and the tone speech backend.
pub fn sine(freq_hz: f64, amplitude: f32, duration_ms: u64, sample_rate: u32) -> Vec<f32> {
    let n = ms_to_frames(duration_ms, sample_rate);
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            amplitude * (2.0 * std::f64::consts::PI * freq_hz * t).sin() as f32
        })
        .collect()
}
