//! The authoring service: projects with committed script revisions, the
//! agent loop, playback announcements, logs and export, behind an HTTP+JSON
//! API with a server-sent event stream.

pub mod config;
pub mod error;
pub mod http;
pub mod model_client;
pub mod ops;
pub mod project;
pub mod replay;
pub mod service;
pub mod store;

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use adscribe_core::agent::replay::{mock_client, read_log};
use adscribe_core::agent::{AgentConfig, ModelClient, PromptTemplate, ScriptedClient};
use adscribe_core::narration::{SilentSpeechBackend, SpeechBackend, ToneSpeechBackend};
use adscribe_core::session::SystemClock;

pub use config::ServiceConfig;
pub use error::ServiceError;
pub use service::{MediaSettings, SessionService};

use config::{ModelConfig, SpeechBackendKind, StoreConfig};
use model_client::HttpModelClient;
use store::{FileStore, MemoryStore, ProjectStore};

/// Wires a service from its configuration.
pub fn build_service(config: &ServiceConfig) -> Result<SessionService, String> {
    let store: Arc<dyn ProjectStore> = match &config.store {
        StoreConfig::Memory => Arc::new(MemoryStore::default()),
        StoreConfig::Dir(dir) => Arc::new(FileStore::open(dir).map_err(|e| e.to_string())?),
    };
    let client: Arc<dyn ModelClient> = match &config.model {
        ModelConfig::Mock(path) => {
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let records = read_log(BufReader::new(file)).map_err(|e| e.to_string())?;
            Arc::new(mock_client(&records))
        }
        ModelConfig::Http(http) => Arc::new(HttpModelClient::new(http.clone())),
        ModelConfig::None => Arc::new(ScriptedClient::default()),
    };
    let mut agent = AgentConfig::default();
    if let Some(path) = &config.prompt_template {
        agent.template = PromptTemplate::load(path).map_err(|e| e.to_string())?;
    }
    let backend: Arc<dyn SpeechBackend> = match config.speech_backend {
        SpeechBackendKind::Silent => Arc::new(SilentSpeechBackend { model: config.speech }),
        SpeechBackendKind::Tone => Arc::new(ToneSpeechBackend { model: config.speech, ..ToneSpeechBackend::default() }),
    };
    let media = MediaSettings {
        media_root: config.media_root.clone(),
        export_dir: config.export_dir.clone(),
        mix: config.mix.clone(),
        speech: config.speech,
        backend,
        ffmpeg: config.ffmpeg.clone(),
        ffprobe: config.ffprobe.clone(),
    };
    Ok(SessionService::new(store, client, agent, Arc::new(SystemClock), media))
}
