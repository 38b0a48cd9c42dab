//! Narration timing: how long a line takes to read, how much it must be sped
//! up to fit its slot, and the preview/export timeline built from that.

mod backend;
mod export;
mod render;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::script::{word_count, Cue};
use crate::time::TimeCode;

pub use backend::{BackendError, SilentSpeechBackend, SpeechBackend, SpeechClip, ToneSpeechBackend, CLIP_SAMPLE_RATE};
pub use export::{
    build_ffmpeg_mix_args, export_video, volume_expression, ExportError, ExportReport, FfmpegTool, MediaTool,
    MixRequest, NativeWavMixer, DURATION_TOLERANCE_MS,
};
pub use render::{
    preview_line, render_track, synthesize_fitted, Annotation, EnvelopePoint, GainEnvelope, MixPlan, PlaybackDirective,
    Timeline, TimelineClip,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpeechRateModel {
    pub base_words_per_minute: f64,
    pub max_rate_factor: f64,
}

impl Default for SpeechRateModel {
    fn default() -> Self {
        SpeechRateModel { base_words_per_minute: 100.0, max_rate_factor: 2.0 }
    }
}

impl SpeechRateModel {
    pub fn new(base_words_per_minute: f64, max_rate_factor: f64) -> Result<Self, NarrationError> {
        if !(base_words_per_minute > 0.0 && base_words_per_minute.is_finite()) {
            return Err(NarrationError::InvalidModel("base words per minute must be positive".into()));
        }
        if !(max_rate_factor >= 1.0 && max_rate_factor.is_finite()) {
            return Err(NarrationError::InvalidModel("max rate factor must be at least 1.0".into()));
        }
        Ok(SpeechRateModel { base_words_per_minute, max_rate_factor })
    }

    /// Reading time at 1x for `words` words, in milliseconds.
    pub fn duration_ms_for_words(&self, words: usize) -> u64 {
        (words as f64 * 60_000.0 / self.base_words_per_minute).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NarrationError {
    #[error("narration text is empty")]
    EmptyText,
    #[error("cue {0} has no narration to play")]
    EmptyNarration(usize),
    #[error("cue {0} does not exist in the script")]
    CueNotFound(usize),
    #[error("invalid speech rate model: {0}")]
    InvalidModel(String),
    #[error("invalid mix plan: {0}")]
    InvalidMix(String),
    #[error("speech backend failed: {0}")]
    Backend(#[from] BackendError),
}

/// Time needed to read `text` aloud at the model's base rate.
pub fn required_duration(text: &str, model: &SpeechRateModel) -> Result<TimeCode, NarrationError> {
    match word_count(text) {
        0 => Err(NarrationError::EmptyText),
        n => Ok(TimeCode::from_millis(model.duration_ms_for_words(n))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CuePlan {
    pub cue_index: usize,
    pub required_ms: u64,
    pub slot_ms: u64,
    pub rate_factor: f64,
    pub fits: bool,
}

impl CuePlan {
    /// Speed-up the line would need with no cap.
    pub fn needed_rate(&self) -> f64 {
        if self.slot_ms == 0 {
            f64::INFINITY
        } else {
            (self.required_ms as f64 / self.slot_ms as f64).max(1.0)
        }
    }
}

/// Lines that fit at base rate are read at 1x; longer ones are sped up just
/// enough, capped at the model's maximum.
pub fn plan_cue(cue_index: usize, cue: &Cue, model: &SpeechRateModel) -> CuePlan {
    let required_ms = model.duration_ms_for_words(word_count(&cue.text));
    let slot_ms = cue.slot_ms();
    let rate_factor = if required_ms <= slot_ms {
        1.0
    } else if slot_ms == 0 {
        model.max_rate_factor
    } else {
        (required_ms as f64 / slot_ms as f64).min(model.max_rate_factor)
    };
    let fits = required_ms as f64 / model.max_rate_factor <= slot_ms as f64;
    CuePlan { cue_index, required_ms, slot_ms, rate_factor, fits }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEN: &str = "one two three four five six seven eight nine ten";

    #[test]
    fn required_durations() {
        let m = SpeechRateModel::default();
        assert_eq!(required_duration(TEN, &m).unwrap().as_millis(), 6_000);
        assert_eq!(required_duration(&"word ".repeat(100), &m).unwrap().as_millis(), 60_000);
        assert_eq!(required_duration("a b c d e", &m).unwrap().as_millis(), 3_000);
        assert_eq!(required_duration("  ", &m), Err(NarrationError::EmptyText));
    }

    #[test]
    fn plan_examples() {
        let m = SpeechRateModel::default();
        let p = plan_cue(0, &Cue::from_secs(0, 6, TEN), &m);
        assert_eq!((p.rate_factor, p.fits), (1.0, true));
        let p = plan_cue(0, &Cue::from_secs(0, 4, TEN), &m);
        assert_eq!((p.rate_factor, p.fits), (1.5, true));
        let p = plan_cue(0, &Cue::from_secs(0, 2, TEN), &m);
        assert_eq!((p.rate_factor, p.fits), (2.0, false));
        assert_eq!(p.needed_rate(), 3.0);
    }

    #[test]
    fn model_bounds() {
        assert!(SpeechRateModel::new(0.0, 2.0).is_err());
        assert!(SpeechRateModel::new(100.0, 0.5).is_err());
        assert!(SpeechRateModel::new(150.0, 1.0).is_ok());
    }
}
