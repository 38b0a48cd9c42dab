//! Project mutations as plain functions over a [`Project`]. The service runs
//! them under the project lock; log replay runs the same functions again.
//! Each returns the log event describing what it did, or an error with the
//! project untouched.

use adscribe_core::agent::{accept_suggestion, CommandFailure, CommandOutcome};
use adscribe_core::announce::{announce_playback, PlaybackEvent};
use adscribe_core::script::{apply_edit, parse_script, validate, ScriptEdit, Violation};
use adscribe_core::AdScript;

use crate::error::ServiceError;
use crate::project::{
    EditAction, EditPayload, LogEvent, PlaybackAction, PlaybackPayload, Project, ResponsePayload, RevisionSource,
};

fn blocking(script: &AdScript) -> Result<(), ServiceError> {
    let errors: Vec<Violation> = validate(script).into_iter().filter(Violation::is_error).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ServiceError::Invalid(errors))
    }
}

/// Replaces the script wholesale. An identical script adds no revision.
pub fn put_script(project: &mut Project, text: &str, now: u64) -> Result<LogEvent, ServiceError> {
    let script = parse_script(text).map_err(ServiceError::Parse)?.with_duration(project.video_duration);
    blocking(&script)?;
    let revision = project.commit(script, RevisionSource::Put, now);
    Ok(LogEvent::Edit(EditPayload { action: EditAction::Put { script: text.to_string() }, revision }))
}

pub fn edit_script(project: &mut Project, edit: &ScriptEdit, now: u64) -> Result<LogEvent, ServiceError> {
    let (script, _) = apply_edit(project.current_script(), edit)?;
    blocking(&script)?;
    let revision = project.commit(script, RevisionSource::Edit, now);
    Ok(LogEvent::Edit(EditPayload { action: EditAction::Apply { edit: edit.clone() }, revision }))
}

pub fn accept(project: &mut Project, now: u64) -> Result<LogEvent, ServiceError> {
    let (next, _) = accept_suggestion(&project.session).ok_or(ServiceError::NoSuggestion)?;
    blocking(&next.script)?;
    project.session.pending_suggestion = None;
    let revision = project.commit(next.script, RevisionSource::Suggestion, now);
    Ok(LogEvent::Edit(EditPayload { action: EditAction::AcceptSuggestion, revision }))
}

pub fn reject(project: &mut Project) -> Result<LogEvent, ServiceError> {
    project.session.pending_suggestion.take().ok_or(ServiceError::NoSuggestion)?;
    Ok(LogEvent::Edit(EditPayload { action: EditAction::RejectSuggestion, revision: None }))
}

pub fn playback(project: &mut Project, event: PlaybackEvent) -> Result<LogEvent, ServiceError> {
    if event.playhead > project.video_duration {
        return Err(ServiceError::BadRequest(format!(
            "playhead {} ms is past the end of the video",
            event.playhead.as_millis()
        )));
    }
    project.session.playhead = event.playhead;
    Ok(LogEvent::Playback(PlaybackPayload {
        action: PlaybackAction::Playback { event },
        announcement: announce_playback(&event),
    }))
}

pub fn set_ad_track(project: &mut Project, enabled: bool) -> LogEvent {
    project.session.ad_track_enabled = enabled;
    LogEvent::Playback(PlaybackPayload {
        action: PlaybackAction::AdTrack { enabled },
        announcement: format!("AD track {}", if enabled { "on" } else { "off" }),
    })
}

pub fn set_cursor(
    project: &mut Project,
    current_line: Option<usize>,
    ask_only: Option<bool>,
) -> Result<LogEvent, ServiceError> {
    if let Some(line) = current_line {
        let max = project.session.max_line();
        if line == 0 || line > max {
            return Err(ServiceError::BadRequest(format!("line {line} is outside 1..={max}")));
        }
    }
    let mut said = Vec::new();
    if let Some(line) = current_line {
        project.session.current_line = line;
        said.push(format!("Line {line}"));
    }
    if let Some(ask) = ask_only {
        project.session.ask_only = ask;
        said.push(format!("Ask-only mode {}", if ask { "on" } else { "off" }));
    }
    Ok(LogEvent::Playback(PlaybackPayload {
        action: PlaybackAction::Cursor { current_line, ask_only },
        announcement: said.join(". "),
    }))
}

/// Folds the result of an agent round trip into the project. A failure only
/// adds to the conversation history.
pub fn record_command(
    project: &mut Project,
    command: &str,
    result: &Result<CommandOutcome, Box<CommandFailure>>,
    now: u64,
) -> LogEvent {
    match result {
        Ok(outcome) => {
            let mut state = outcome.state.clone();
            let script = std::mem::replace(&mut state.script, project.session.script.clone());
            project.session = state;
            let revision = project.commit(script, RevisionSource::Agent, now);
            LogEvent::Response(ResponsePayload {
                command: command.to_string(),
                raw_response: Some(outcome.raw_response.clone()),
                repair_response: outcome.repair_response.clone(),
                text_response: outcome.text_response().to_string(),
                events: outcome.events.clone(),
                error: None,
                congruence: Some(outcome.congruence),
                revision,
            })
        }
        Err(failure) => {
            project.session = failure.state.clone();
            LogEvent::Response(ResponsePayload {
                command: command.to_string(),
                raw_response: failure.raw_response.clone(),
                repair_response: failure.repair_response.clone(),
                text_response: failure.state.history.last().map(|t| t.text.clone()).unwrap_or_default(),
                events: Vec::new(),
                error: Some(failure.error.code().to_string()),
                congruence: None,
                revision: None,
            })
        }
    }
}
