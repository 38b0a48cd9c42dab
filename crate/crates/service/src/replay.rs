//! Rebuilding a project from its interaction log. Every recorded model reply
//! is fed back through a scripted client, every edit and playback action is
//! re-applied, and each revision the log recorded is compared with the one
//! the replay produced.

use std::io::BufRead;

use adscribe_core::agent::{AgentConfig, Orchestrator, ScriptedClient};
use adscribe_core::session::{SessionState, StepClock};
use adscribe_core::TimeCode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ServiceError;
use crate::ops;
use crate::project::{EditAction, InteractionLogEntry, LogEvent, PlaybackAction, Project, Revision, RevisionRef};

#[derive(Debug, Error)]
pub enum LogReplayError {
    #[error("line {line}: {source}")]
    BadEntry { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot start a session: {0}")]
    Session(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogDivergence {
    pub seq: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectReplay {
    pub final_script: String,
    pub revisions: Vec<Revision>,
    pub divergences: Vec<LogDivergence>,
    pub commands: usize,
    pub incongruent: usize,
    pub failures: usize,
    #[serde(skip)]
    pub project: Option<Project>,
}

impl ProjectReplay {
    pub fn is_consistent(&self) -> bool {
        self.divergences.is_empty()
    }
}

pub fn read_project_log(reader: impl BufRead) -> Result<Vec<InteractionLogEntry>, LogReplayError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| LogReplayError::BadEntry { line: i + 1, source })?);
    }
    Ok(out)
}

fn check_revision(
    divergences: &mut Vec<LogDivergence>,
    seq: u64,
    recorded: &Option<RevisionRef>,
    produced: &Option<RevisionRef>,
) {
    if recorded != produced {
        divergences.push(LogDivergence {
            seq,
            detail: format!("recorded revision {recorded:?}, replay produced {produced:?}"),
        });
    }
}

fn diverge(seq: u64, detail: String) -> LogDivergence {
    LogDivergence { seq, detail }
}

fn revision_of(event: &LogEvent) -> Option<RevisionRef> {
    match event {
        LogEvent::Response(r) => r.revision.clone(),
        LogEvent::Edit(e) => e.revision.clone(),
        _ => None,
    }
}

/// Replays `entries` against a fresh project for the given video.
pub fn replay_project_log(
    video_ref: &str,
    video_duration: TimeCode,
    entries: &[InteractionLogEntry],
    config: &AgentConfig,
) -> Result<ProjectReplay, LogReplayError> {
    let session = SessionState::new(video_ref, video_duration).map_err(|e| LogReplayError::Session(e.to_string()))?;
    let mut project = Project::new("replay".into(), session, 0);
    let clock = StepClock::new(1, 1);
    let mut divergences = Vec::new();
    let (mut commands, mut incongruent, mut failures) = (0, 0, 0);

    for entry in entries {
        let seq = entry.seq;
        let now = entry.wall_clock_time;
        let applied: Result<LogEvent, ServiceError> = match &entry.event {
            LogEvent::Command(_) | LogEvent::Export(_) => continue,
            LogEvent::Response(recorded) => {
                commands += 1;
                let client = ScriptedClient::default();
                match &recorded.raw_response {
                    Some(raw) => client.push(raw.clone()),
                    None => client.push_failure("recorded as unavailable"),
                }
                if let Some(repair) = &recorded.repair_response {
                    client.push(repair.clone());
                }
                let result =
                    Orchestrator::new(&client, config, &clock).run_command(&recorded.command, &project.session);
                let event = ops::record_command(&mut project, &recorded.command, &result, now);
                if let LogEvent::Response(produced) = &event {
                    if produced.error != recorded.error {
                        divergences.push(diverge(
                            seq,
                            format!("recorded error {:?}, replay gave {:?}", recorded.error, produced.error),
                        ));
                    }
                    if produced.events != recorded.events {
                        divergences.push(diverge(seq, "applied events differ".into()));
                    }
                    if produced.error.is_some() {
                        failures += 1;
                    }
                    if produced.congruence == Some(adscribe_core::agent::Congruence::Incongruent) {
                        incongruent += 1;
                    }
                }
                Ok(event)
            }
            LogEvent::Edit(edit) => match &edit.action {
                EditAction::Apply { edit } => ops::edit_script(&mut project, edit, now),
                EditAction::Put { script } => ops::put_script(&mut project, script, now),
                EditAction::AcceptSuggestion => ops::accept(&mut project, now),
                EditAction::RejectSuggestion => ops::reject(&mut project),
            },
            LogEvent::Playback(p) => match &p.action {
                PlaybackAction::Playback { event } => ops::playback(&mut project, *event),
                PlaybackAction::AdTrack { enabled } => Ok(ops::set_ad_track(&mut project, *enabled)),
                PlaybackAction::Cursor { current_line, ask_only } => {
                    ops::set_cursor(&mut project, *current_line, *ask_only)
                }
            },
        };
        match applied {
            Ok(event) => {
                check_revision(&mut divergences, seq, &revision_of(&entry.event), &revision_of(&event));
                project.append_log(event, now);
            }
            Err(e) => divergences.push(diverge(seq, format!("logged action no longer applies: {e}"))),
        }
    }

    Ok(ProjectReplay {
        final_script: project.current().script.clone(),
        revisions: project.revisions.clone(),
        divergences,
        commands,
        incongruent,
        failures,
        project: Some(project),
    })
}

/// Replays a stored project's own log and compares the outcome with what was
/// committed.
pub fn verify_project(project: &Project, config: &AgentConfig) -> Result<ProjectReplay, LogReplayError> {
    let mut report = replay_project_log(&project.video_ref, project.video_duration, &project.log, config)?;
    let committed = &project.current().script;
    if &report.final_script != committed {
        report.divergences.push(LogDivergence {
            seq: project.log.len() as u64,
            detail: format!(
                "final script differs from committed revision {} ({} vs {} bytes)",
                project.current().number,
                report.final_script.len(),
                committed.len()
            ),
        });
    }
    let ours: Vec<(u64, &str)> = report.revisions.iter().map(|r| (r.number, r.script.as_str())).collect();
    let theirs: Vec<(u64, &str)> = project.revisions.iter().map(|r| (r.number, r.script.as_str())).collect();
    if ours != theirs {
        report.divergences.push(LogDivergence {
            seq: project.log.len() as u64,
            detail: format!("replay produced {} revisions, project has {}", ours.len(), theirs.len()),
        });
    }
    Ok(report)
}
