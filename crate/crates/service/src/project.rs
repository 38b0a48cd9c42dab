//! Stored projects: the committed script revisions, the live session and the
//! interaction log.

use adscribe_core::agent::{AgentEvent, Congruence};
use adscribe_core::announce::PlaybackEvent;
use adscribe_core::narration::ExportReport;
use adscribe_core::script::{diff, ChangeRecord, ScriptEdit};
use adscribe_core::session::SessionState;
use adscribe_core::{AdScript, TimeCode};
use serde::{Deserialize, Serialize};

pub type ProjectId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RevisionSource {
    Created,
    Put,
    Edit,
    Agent,
    Suggestion,
}

/// A full snapshot of the script plus the changes from the previous one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Revision {
    pub number: u64,
    pub script: String,
    pub changes: Vec<ChangeRecord>,
    pub source: RevisionSource,
    pub wall_clock_time: u64,
}

/// The revision a log entry produced, with its snapshot so a replay can be
/// checked against it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionRef {
    pub number: u64,
    pub script: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogKind {
    Command,
    Response,
    Edit,
    Playback,
    Export,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommandPayload {
    pub command: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResponsePayload {
    pub command: String,
    /// None when the model could not be reached at all.
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_response: Option<String>,
    pub text_response: String,
    pub events: Vec<AgentEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub congruence: Option<Congruence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<RevisionRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum EditAction {
    Apply { edit: ScriptEdit },
    Put { script: String },
    AcceptSuggestion,
    RejectSuggestion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EditPayload {
    #[serde(flatten)]
    pub action: EditAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<RevisionRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum PlaybackAction {
    Playback {
        event: PlaybackEvent,
    },
    AdTrack {
        enabled: bool,
    },
    Cursor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        current_line: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ask_only: Option<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaybackPayload {
    #[serde(flatten)]
    pub action: PlaybackAction,
    pub announcement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportPayload {
    pub revision: u64,
    pub report: ExportReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum LogEvent {
    Command(CommandPayload),
    Response(ResponsePayload),
    Edit(EditPayload),
    Playback(PlaybackPayload),
    Export(ExportPayload),
}

impl LogEvent {
    pub fn kind(&self) -> LogKind {
        match self {
            LogEvent::Command(_) => LogKind::Command,
            LogEvent::Response(_) => LogKind::Response,
            LogEvent::Edit(_) => LogKind::Edit,
            LogEvent::Playback(_) => LogKind::Playback,
            LogEvent::Export(_) => LogKind::Export,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionLogEntry {
    pub seq: u64,
    /// Milliseconds since the Unix epoch; strictly increasing within a project.
    pub wall_clock_time: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Project {
    pub id: ProjectId,
    pub video_ref: String,
    #[serde(rename = "videoDurationMs")]
    pub video_duration: TimeCode,
    pub created_at: u64,
    pub revisions: Vec<Revision>,
    pub log: Vec<InteractionLogEntry>,
    pub session: SessionState,
}

impl Project {
    pub fn new(id: ProjectId, session: SessionState, now: u64) -> Self {
        Project {
            id,
            video_ref: session.video_ref.clone(),
            video_duration: session.video_duration,
            created_at: now,
            revisions: vec![Revision {
                number: 0,
                script: String::new(),
                changes: Vec::new(),
                source: RevisionSource::Created,
                wall_clock_time: now,
            }],
            log: Vec::new(),
            session,
        }
    }

    pub fn current(&self) -> &Revision {
        self.revisions.last().expect("a project always has its initial revision")
    }

    pub fn current_script(&self) -> &AdScript {
        &self.session.script
    }

    /// Makes `script` the session script and appends a revision unless it
    /// serializes identically to the current one. Returns the new revision.
    pub fn commit(&mut self, script: AdScript, source: RevisionSource, now: u64) -> Option<RevisionRef> {
        let text = script.serialize();
        let old = self.session.script.clone();
        self.session.script = script.with_duration(self.video_duration);
        self.session.current_line = self.session.current_line.clamp(1, self.session.max_line());
        if text == self.current().script {
            return None;
        }
        let number = self.current().number + 1;
        self.revisions.push(Revision {
            number,
            script: text.clone(),
            changes: diff(&old, &self.session.script),
            source,
            wall_clock_time: now.max(self.current().wall_clock_time),
        });
        Some(RevisionRef { number, script: text })
    }

    /// Appends to the log, nudging the time forward if the clock has not moved.
    pub fn append_log(&mut self, event: LogEvent, now: u64) -> &InteractionLogEntry {
        let wall_clock_time = match self.log.last() {
            Some(last) if now <= last.wall_clock_time => last.wall_clock_time + 1,
            _ => now,
        };
        self.log.push(InteractionLogEntry { seq: self.log.len() as u64, wall_clock_time, event });
        self.log.last().expect("just pushed")
    }

    /// JSON lines, one entry per line, newline-terminated. Empty for a fresh project.
    pub fn log_archive(&self) -> String {
        self.log.iter().map(|e| serde_json::to_string(e).expect("log entry serializes") + "\n").collect()
    }
}

/// What clients see when they ask about a project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectSummary {
    pub id: ProjectId,
    pub video_ref: String,
    #[serde(rename = "videoDurationMs")]
    pub video_duration: TimeCode,
    pub revision: u64,
    pub revision_count: usize,
    pub log_length: usize,
    #[serde(rename = "playheadMs")]
    pub playhead: TimeCode,
    pub current_line: usize,
    pub ad_track_enabled: bool,
    pub ask_only: bool,
    pub pending_suggestion: Option<String>,
}

impl From<&Project> for ProjectSummary {
    fn from(p: &Project) -> Self {
        ProjectSummary {
            id: p.id.clone(),
            video_ref: p.video_ref.clone(),
            video_duration: p.video_duration,
            revision: p.current().number,
            revision_count: p.revisions.len(),
            log_length: p.log.len(),
            playhead: p.session.playhead,
            current_line: p.session.current_line,
            ad_track_enabled: p.session.ad_track_enabled,
            ask_only: p.session.ask_only,
            pending_suggestion: p.session.pending_suggestion.as_ref().map(AdScript::serialize),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use adscribe_core::Cue;

    fn project() -> Project {
        let session = SessionState::new("file://a.mp4", TimeCode::from_secs(60)).unwrap();
        Project::new("p1".into(), session, 100)
    }

    #[test]
    fn identical_commit_is_deduplicated() {
        let mut p = project();
        let s = AdScript::new(vec![Cue::from_secs(1, 3, "A cat.")]);
        assert_eq!(p.commit(s.clone(), RevisionSource::Put, 200).unwrap().number, 1);
        assert!(p.commit(s, RevisionSource::Put, 300).is_none());
        assert_eq!(p.revisions.len(), 2);
    }

    #[test]
    fn log_times_strictly_increase() {
        let mut p = project();
        for _ in 0..3 {
            p.append_log(LogEvent::Command(CommandPayload { command: "x".into() }), 50);
        }
        let times: Vec<u64> = p.log.iter().map(|e| e.wall_clock_time).collect();
        assert_eq!(times, vec![50, 51, 52]);
        assert_eq!(p.log_archive().lines().count(), 3);
    }

    #[test]
    fn entry_wire_shape() {
        let mut p = project();
        p.append_log(LogEvent::Command(CommandPayload { command: "Summarize this video".into() }), 7);
        let line = p.log_archive();
        assert_eq!(
            line,
            "{\"seq\":0,\"wallClockTime\":7,\"kind\":\"command\",\"payload\":{\"command\":\"Summarize this video\"}}\n"
        );
        let back: InteractionLogEntry = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, p.log[0]);
    }
}
