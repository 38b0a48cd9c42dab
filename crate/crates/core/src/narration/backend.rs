use thiserror::Error;

use super::SpeechRateModel;
use crate::audio::{frames_to_ms, ms_to_frames, sine};
use crate::script::word_count;

/// Sample rate of narration clips exchanged with media tools.
pub const CLIP_SAMPLE_RATE: u32 = 24_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct BackendError(pub String);

/// Mono synthesized narration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeechClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl SpeechClip {
    pub fn duration_ms(&self) -> u64 {
        frames_to_ms(self.samples.len(), self.sample_rate)
    }
}

pub trait SpeechBackend: Send + Sync {
    /// Speaks `text` at `rate_factor` times the normal speed.
    fn synthesize(&self, text: &str, rate_factor: f64, voice: &str) -> Result<SpeechClip, BackendError>;
}

fn clip_len_ms(model: &SpeechRateModel, text: &str, rate_factor: f64) -> Result<u64, BackendError> {
    if !(rate_factor > 0.0 && rate_factor.is_finite()) {
        return Err(BackendError(format!("invalid rate factor {rate_factor}")));
    }
    let words = word_count(text);
    if words == 0 {
        return Err(BackendError("nothing to say".into()));
    }
    Ok((model.duration_ms_for_words(words) as f64 / rate_factor).round() as u64)
}

/// Deterministic backend: silence lasting exactly the modelled reading time
/// divided by the rate factor.
#[derive(Debug, Clone, Default)]
pub struct SilentSpeechBackend {
    pub model: SpeechRateModel,
}

impl SpeechBackend for SilentSpeechBackend {
    fn synthesize(&self, text: &str, rate_factor: f64, _voice: &str) -> Result<SpeechClip, BackendError> {
        let ms = clip_len_ms(&self.model, text, rate_factor)?;
        Ok(SpeechClip { samples: vec![0.0; ms_to_frames(ms, CLIP_SAMPLE_RATE)], sample_rate: CLIP_SAMPLE_RATE })
    }
}

/// Like [`SilentSpeechBackend`] but emits a sine tone, so mixes can be measured.
#[derive(Debug, Clone)]
pub struct ToneSpeechBackend {
    pub model: SpeechRateModel,
    pub frequency_hz: f64,
    pub amplitude: f32,
}

impl Default for ToneSpeechBackend {
    fn default() -> Self {
        ToneSpeechBackend { model: SpeechRateModel::default(), frequency_hz: 660.0, amplitude: 0.5 }
    }
}

impl SpeechBackend for ToneSpeechBackend {
    fn synthesize(&self, text: &str, rate_factor: f64, _voice: &str) -> Result<SpeechClip, BackendError> {
        let ms = clip_len_ms(&self.model, text, rate_factor)?;
        Ok(SpeechClip {
            samples: sine(self.frequency_hz, self.amplitude, ms, CLIP_SAMPLE_RATE),
            sample_rate: CLIP_SAMPLE_RATE,
        })
    }
}
