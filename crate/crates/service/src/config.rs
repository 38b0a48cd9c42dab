//! Service settings, read from `ADSCRIBE_*` environment variables.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use adscribe_core::narration::{MixPlan, SpeechRateModel};

use crate::model_client::HttpModelConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum StoreConfig {
    Memory,
    Dir(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    /// Replies come from a recorded transcript, in order.
    Mock(PathBuf),
    Http(HttpModelConfig),
    /// Every command fails with MODEL_UNAVAILABLE.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeechBackendKind {
    Silent,
    Tone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub store: StoreConfig,
    pub token: Option<String>,
    pub model: ModelConfig,
    pub prompt_template: Option<PathBuf>,
    /// Relative video references resolve against this directory.
    pub media_root: PathBuf,
    pub export_dir: PathBuf,
    pub mix: MixPlan,
    pub speech: SpeechRateModel,
    pub speech_backend: SpeechBackendKind,
    pub ffmpeg: String,
    pub ffprobe: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            store: StoreConfig::Memory,
            token: None,
            model: ModelConfig::None,
            prompt_template: None,
            media_root: PathBuf::from("."),
            export_dir: std::env::temp_dir().join("adscribe-exports"),
            mix: MixPlan::default(),
            speech: SpeechRateModel::default(),
            speech_backend: SpeechBackendKind::Silent,
            ffmpeg: "ffmpeg".into(),
            ffprobe: "ffprobe".into(),
        }
    }
}

fn parse<T: std::str::FromStr>(name: &str, value: String) -> Result<T, String> {
    value.parse().map_err(|_| format!("{name}: cannot parse {value:?}"))
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds a config from any variable source; unset variables keep defaults.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut c = ServiceConfig::default();
        if let Some(v) = get("ADSCRIBE_ADDR") {
            c.addr = parse("ADSCRIBE_ADDR", v)?;
        }
        if let Some(v) = get("ADSCRIBE_STORE") {
            c.store = if v == "memory" { StoreConfig::Memory } else { StoreConfig::Dir(v.into()) };
        }
        c.token = get("ADSCRIBE_TOKEN").filter(|t| !t.is_empty());
        c.prompt_template = get("ADSCRIBE_PROMPT_TEMPLATE").map(PathBuf::from);
        if let Some(v) = get("ADSCRIBE_MEDIA_ROOT") {
            c.media_root = v.into();
        }
        if let Some(v) = get("ADSCRIBE_EXPORT_DIR") {
            c.export_dir = v.into();
        }
        if let Some(v) = get("ADSCRIBE_DUCKING_LEVEL") {
            c.mix.ducking_level = parse("ADSCRIBE_DUCKING_LEVEL", v)?;
        }
        if let Some(v) = get("ADSCRIBE_NARRATION_GAIN") {
            c.mix.narration_gain = parse("ADSCRIBE_NARRATION_GAIN", v)?;
        }
        if let Some(v) = get("ADSCRIBE_RAMP_MS") {
            c.mix.ramp_ms = parse("ADSCRIBE_RAMP_MS", v)?;
        }
        if let Some(v) = get("ADSCRIBE_VOICE") {
            c.mix.voice = v;
        }
        c.mix.validate().map_err(|e| e.to_string())?;
        if let Some(v) = get("ADSCRIBE_SPEECH_WPM") {
            c.speech.base_words_per_minute = parse("ADSCRIBE_SPEECH_WPM", v)?;
        }
        if let Some(v) = get("ADSCRIBE_MAX_RATE") {
            c.speech.max_rate_factor = parse("ADSCRIBE_MAX_RATE", v)?;
        }
        c.speech = SpeechRateModel::new(c.speech.base_words_per_minute, c.speech.max_rate_factor)
            .map_err(|e| e.to_string())?;
        c.speech_backend = match get("ADSCRIBE_SPEECH_BACKEND").as_deref() {
            None | Some("silent") | Some("test") => SpeechBackendKind::Silent,
            Some("tone") => SpeechBackendKind::Tone,
            Some(other) => return Err(format!("ADSCRIBE_SPEECH_BACKEND: unknown backend {other:?}")),
        };
        if let Some(v) = get("ADSCRIBE_FFMPEG") {
            c.ffmpeg = v;
        }
        if let Some(v) = get("ADSCRIBE_FFPROBE") {
            c.ffprobe = v;
        }
        c.model = match (get("ADSCRIBE_MOCK"), get("ADSCRIBE_MODEL_URL")) {
            (Some(path), _) => ModelConfig::Mock(path.into()),
            (None, Some(base_url)) => {
                let conversation_model = get("ADSCRIBE_MODEL").unwrap_or_else(|| "default".into());
                ModelConfig::Http(HttpModelConfig {
                    base_url,
                    api_key: get("ADSCRIBE_MODEL_KEY"),
                    generation_model: get("ADSCRIBE_GENERATION_MODEL").unwrap_or_else(|| conversation_model.clone()),
                    conversation_model,
                    attach_media: get("ADSCRIBE_ATTACH_MEDIA").is_some_and(|v| v == "1" || v == "true"),
                    timeout: Duration::from_secs(match get("ADSCRIBE_MODEL_TIMEOUT_SECS") {
                        Some(v) => parse("ADSCRIBE_MODEL_TIMEOUT_SECS", v)?,
                        None => 120,
                    }),
                })
            }
            (None, None) => ModelConfig::None,
        };
        Ok(c)
    }
}
