//! Project operations with per-project serialization, persistence and event
//! fan-out. Mutations take the project's lock, work on a freshly loaded copy
//! and save it only when they succeed; reads go straight to the store.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use adscribe_core::agent::{AgentConfig, AgentEvent, Congruence, ModelClient, Orchestrator};
use adscribe_core::announce::PlaybackEvent;
use adscribe_core::audio::encode_wav16;
use adscribe_core::narration::{
    export_video, preview_line, ExportReport, FfmpegTool, MediaTool, MixPlan, NativeWavMixer, PlaybackDirective,
    SpeechBackend, SpeechRateModel,
};
use adscribe_core::script::{validate, Cue, ScriptEdit, Violation};
use adscribe_core::session::{Clock, SessionState};
use adscribe_core::TimeCode;
use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, Mutex};

use crate::error::ServiceError;
use crate::ops;
use crate::project::{
    CommandPayload, ExportPayload, InteractionLogEntry, LogEvent, Project, ProjectSummary, Revision, RevisionRef,
};
use crate::replay::{verify_project, ProjectReplay};
use crate::store::ProjectStore;

const EVENT_BUFFER: usize = 256;

/// Everything preview and export need besides the project itself.
#[derive(Clone)]
pub struct MediaSettings {
    pub media_root: PathBuf,
    pub export_dir: PathBuf,
    pub mix: MixPlan,
    pub speech: SpeechRateModel,
    pub backend: Arc<dyn SpeechBackend>,
    pub ffmpeg: String,
    pub ffprobe: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScriptView {
    pub revision: u64,
    pub script: String,
    pub cues: Vec<Cue>,
    /// Advisory findings such as word-budget overruns.
    pub warnings: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MutationReply {
    pub revision: u64,
    /// False when the change matched the current script and no revision was added.
    pub created: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub announcement: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Announcement {
    pub announcement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommandReply {
    pub text_response: String,
    pub events: Vec<AgentEvent>,
    pub revision: Option<RevisionRef>,
    pub congruence: Congruence,
}

pub struct SessionService {
    store: Arc<dyn ProjectStore>,
    client: Arc<dyn ModelClient>,
    agent: Arc<AgentConfig>,
    clock: Arc<dyn Clock>,
    media: MediaSettings,
    locks: DashMap<String, Arc<Mutex<()>>>,
    channels: DashMap<String, broadcast::Sender<InteractionLogEntry>>,
}

fn join_error(e: tokio::task::JoinError) -> ServiceError {
    ServiceError::Internal(format!("worker task failed: {e}"))
}

impl SessionService {
    pub fn new(
        store: Arc<dyn ProjectStore>,
        client: Arc<dyn ModelClient>,
        agent: AgentConfig,
        clock: Arc<dyn Clock>,
        media: MediaSettings,
    ) -> Self {
        SessionService {
            store,
            client,
            agent: Arc::new(agent),
            clock,
            media,
            locks: DashMap::new(),
            channels: DashMap::new(),
        }
    }

    pub fn agent_config(&self) -> &AgentConfig {
        &self.agent
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.entry(id.to_string()).or_default().clone()
    }

    fn sender(&self, id: &str) -> broadcast::Sender<InteractionLogEntry> {
        self.channels.entry(id.to_string()).or_insert_with(|| broadcast::channel(EVENT_BUFFER).0).clone()
    }

    /// Live log entries for one project, starting now.
    pub fn subscribe(&self, id: &str) -> broadcast::Receiver<InteractionLogEntry> {
        self.sender(id).subscribe()
    }

    fn publish(&self, id: &str, entry: InteractionLogEntry) {
        // No subscribers is fine.
        let _ = self.sender(id).send(entry);
    }

    pub fn load(&self, id: &str) -> Result<Project, ServiceError> {
        self.store.load(id)?.ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    /// Appends `event` to the log, saves, then announces it.
    fn commit(&self, project: &mut Project, event: LogEvent, now: u64) -> Result<InteractionLogEntry, ServiceError> {
        let entry = project.append_log(event, now).clone();
        self.store.save(project)?;
        self.publish(&project.id, entry.clone());
        Ok(entry)
    }

    async fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Project, u64) -> Result<(LogEvent, T), ServiceError>,
    ) -> Result<T, ServiceError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;
        let mut project = self.load(id)?;
        let now = self.clock.now_ms();
        let (event, out) = f(&mut project, now)?;
        self.commit(&mut project, event, now)?;
        Ok(out)
    }

    pub async fn create_project(&self, video_ref: &str, duration_ms: u64) -> Result<ProjectSummary, ServiceError> {
        if video_ref.trim().is_empty() {
            return Err(ServiceError::BadRequest("videoRef must not be empty".into()));
        }
        let session = SessionState::new(video_ref, TimeCode::from_millis(duration_ms))
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let project = Project::new(uuid::Uuid::new_v4().to_string(), session, self.clock.now_ms());
        self.store.save(&project)?;
        Ok(ProjectSummary::from(&project))
    }

    pub fn list_projects(&self) -> Result<Vec<ProjectSummary>, ServiceError> {
        let mut out = Vec::new();
        for id in self.store.list()? {
            if let Some(p) = self.store.load(&id)? {
                out.push(ProjectSummary::from(&p));
            }
        }
        Ok(out)
    }

    pub fn summary(&self, id: &str) -> Result<ProjectSummary, ServiceError> {
        Ok(ProjectSummary::from(&self.load(id)?))
    }

    pub fn session(&self, id: &str) -> Result<SessionState, ServiceError> {
        Ok(self.load(id)?.session)
    }

    pub fn get_script(&self, id: &str) -> Result<ScriptView, ServiceError> {
        let p = self.load(id)?;
        Ok(ScriptView {
            revision: p.current().number,
            script: p.current().script.clone(),
            cues: p.current_script().cues.clone(),
            warnings: validate(p.current_script()),
        })
    }

    pub fn revisions(&self, id: &str) -> Result<Vec<Revision>, ServiceError> {
        Ok(self.load(id)?.revisions)
    }

    fn mutation_reply(project: &Project, revision: &Option<RevisionRef>) -> MutationReply {
        MutationReply {
            revision: project.current().number,
            created: revision.is_some(),
            announcement: revision
                .as_ref()
                .map(|_| adscribe_core::announce::announce_changes(&project.current().changes)),
        }
    }

    pub async fn put_script(&self, id: &str, text: &str) -> Result<MutationReply, ServiceError> {
        self.mutate(id, |p, now| {
            let event = ops::put_script(p, text, now)?;
            let reply = Self::mutation_reply(p, &revision_of(&event));
            Ok((event, reply))
        })
        .await
    }

    pub async fn edit_script(&self, id: &str, edit: &ScriptEdit) -> Result<MutationReply, ServiceError> {
        self.mutate(id, |p, now| {
            let event = ops::edit_script(p, edit, now)?;
            let reply = Self::mutation_reply(p, &revision_of(&event));
            Ok((event, reply))
        })
        .await
    }

    pub async fn accept_suggestion(&self, id: &str) -> Result<MutationReply, ServiceError> {
        self.mutate(id, |p, now| {
            let event = ops::accept(p, now)?;
            let reply = Self::mutation_reply(p, &revision_of(&event));
            Ok((event, reply))
        })
        .await
    }

    pub async fn reject_suggestion(&self, id: &str) -> Result<MutationReply, ServiceError> {
        self.mutate(id, |p, _| {
            let event = ops::reject(p)?;
            let reply = MutationReply {
                revision: p.current().number,
                created: false,
                announcement: Some("Suggestion discarded".into()),
            };
            Ok((event, reply))
        })
        .await
    }

    pub async fn playback(&self, id: &str, event: PlaybackEvent) -> Result<Announcement, ServiceError> {
        self.mutate(id, |p, _| {
            let logged = ops::playback(p, event)?;
            Ok((logged.clone(), Announcement { announcement: announcement_of(&logged) }))
        })
        .await
    }

    pub async fn set_ad_track(&self, id: &str, enabled: bool) -> Result<Announcement, ServiceError> {
        self.mutate(id, |p, _| {
            let logged = ops::set_ad_track(p, enabled);
            Ok((logged.clone(), Announcement { announcement: announcement_of(&logged) }))
        })
        .await
    }

    pub async fn set_cursor(
        &self,
        id: &str,
        current_line: Option<usize>,
        ask_only: Option<bool>,
    ) -> Result<Announcement, ServiceError> {
        self.mutate(id, |p, _| {
            let logged = ops::set_cursor(p, current_line, ask_only)?;
            Ok((logged.clone(), Announcement { announcement: announcement_of(&logged) }))
        })
        .await
    }

    /// Runs one agent round trip. Commands on the same project queue behind
    /// each other; the command is logged (and streamed) before the model is asked.
    pub async fn post_command(&self, id: &str, command: &str) -> Result<CommandReply, ServiceError> {
        let command = command.trim().to_string();
        if command.is_empty() {
            return Err(ServiceError::BadRequest("command must not be empty".into()));
        }
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;
        let mut project = self.load(id)?;
        let now = self.clock.now_ms();
        self.commit(&mut project, LogEvent::Command(CommandPayload { command: command.clone() }), now)?;

        let (client, agent, clock) = (self.client.clone(), self.agent.clone(), self.clock.clone());
        let session = project.session.clone();
        let cmd = command.clone();
        let result = tokio::task::spawn_blocking(move || {
            Orchestrator::new(&*client, &agent, &*clock).run_command(&cmd, &session)
        })
        .await
        .map_err(join_error)?;

        let now = self.clock.now_ms();
        let event = ops::record_command(&mut project, &command, &result, now);
        self.commit(&mut project, event.clone(), now)?;
        match (result, event) {
            (Ok(outcome), LogEvent::Response(r)) => Ok(CommandReply {
                text_response: r.text_response,
                events: r.events,
                revision: r.revision,
                congruence: outcome.congruence,
            }),
            (Err(failure), LogEvent::Response(r)) => Err(ServiceError::Agent {
                code: failure.error.code(),
                message: failure.error.to_string(),
                text_response: r.text_response,
            }),
            _ => unreachable!("record_command always yields a response entry"),
        }
    }

    pub fn preview(&self, id: &str, cue_index: usize) -> Result<PlaybackDirective, ServiceError> {
        let p = self.load(id)?;
        Ok(preview_line(cue_index, &p.session, &*self.media.backend, &self.media.mix, &self.media.speech)?)
    }

    /// The narration clip for one cue as WAV bytes.
    pub fn preview_audio(&self, id: &str, cue_index: usize) -> Result<Vec<u8>, ServiceError> {
        let directive = self.preview(id, cue_index)?;
        let clip = directive.clip.ok_or_else(|| ServiceError::Internal("preview produced no audio".into()))?;
        encode_wav16(&clip.samples, clip.sample_rate, 1).map_err(|e| ServiceError::Internal(e.to_string()))
    }

    /// All log entries as JSON lines. Empty for a project nothing has happened in.
    pub fn export_logs(&self, id: &str) -> Result<String, ServiceError> {
        Ok(self.load(id)?.log_archive())
    }

    fn resolve_media(&self, video_ref: &str) -> PathBuf {
        let path = video_ref.strip_prefix("file://").unwrap_or(video_ref);
        let path = Path::new(path);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.media.media_root.join(path)
        }
    }

    fn tool_for(&self, source: &Path) -> Box<dyn MediaTool> {
        match source.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("wav") => Box::new(NativeWavMixer),
            _ => Box::new(FfmpegTool {
                ffmpeg: self.media.ffmpeg.clone().into(),
                ffprobe: self.media.ffprobe.clone().into(),
            }),
        }
    }

    /// Mixes narration for the current revision into a copy of the video.
    pub async fn export_media(&self, id: &str) -> Result<ExportReport, ServiceError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;
        let mut project = self.load(id)?;
        let source = self.resolve_media(&project.video_ref);
        let ext = source.extension().and_then(|e| e.to_str()).unwrap_or("mp4").to_string();
        std::fs::create_dir_all(&self.media.export_dir).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let revision = project.current().number;
        let output = self.media.export_dir.join(format!("{}-r{revision}.{ext}", project.id));
        let tool = self.tool_for(&source);
        let (script, enabled, media) =
            (project.current_script().clone(), project.session.ad_track_enabled, self.media.clone());
        let report = tokio::task::spawn_blocking(move || {
            export_video(&*tool, &source, &output, &script, enabled, &*media.backend, &media.mix, &media.speech)
        })
        .await
        .map_err(join_error)??;
        let now = self.clock.now_ms();
        self.commit(&mut project, LogEvent::Export(ExportPayload { revision, report: report.clone() }), now)?;
        Ok(report)
    }

    /// Path of the file the last export wrote, if any.
    pub fn exported_file(&self, id: &str) -> Result<Option<PathBuf>, ServiceError> {
        let p = self.load(id)?;
        Ok(p.log.iter().rev().find_map(|e| match &e.event {
            LogEvent::Export(x) => Some(x.report.output.clone()),
            _ => None,
        }))
    }

    /// Replays the project's log against its recorded replies.
    pub fn verify(&self, id: &str) -> Result<ProjectReplay, ServiceError> {
        let p = self.load(id)?;
        verify_project(&p, &self.agent).map_err(|e| ServiceError::Internal(e.to_string()))
    }
}

fn revision_of(event: &LogEvent) -> Option<RevisionRef> {
    match event {
        LogEvent::Edit(e) => e.revision.clone(),
        LogEvent::Response(r) => r.revision.clone(),
        _ => None,
    }
}

fn announcement_of(event: &LogEvent) -> String {
    match event {
        LogEvent::Playback(p) => p.announcement.clone(),
        _ => String::new(),
    }
}
