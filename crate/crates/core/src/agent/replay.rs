//! JSON-lines logs of agent sessions, and deterministic replay against them.
//!
//! One record per line: a `{"session": ...}` header that starts a fresh
//! session, an agent exchange (`command` + `rawResponse`), a manual script
//! edit (`edit`), or a cursor move (`navigate`). Records before any header
//! run against a default session.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classify::Congruence;
use super::client::ScriptedClient;
use super::orchestrator::{AgentConfig, AgentEvent, Orchestrator};
use crate::script::{apply_edit, parse_script, AdScript, ScriptEdit};
use crate::session::{SessionState, StepClock};
use crate::time::TimeCode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayHeader {
    pub video_ref: String,
    pub video_duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_script: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ask_only: bool,
}

impl Default for ReplayHeader {
    fn default() -> Self {
        ReplayHeader { video_ref: "replay".into(), video_duration_ms: 3_600_000, initial_script: None, ask_only: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayLabels {
    /// The command was a question about the video.
    #[serde(default)]
    pub vqa: bool,
    #[serde(default)]
    pub incongruent: bool,
    #[serde(default)]
    pub vqa_error: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExchangeRecord {
    pub command: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_response: Option<String>,
    /// What applying the response produced when it was recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied_events: Option<Vec<AgentEvent>>,
    /// Error code when the exchange failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<ReplayLabels>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Navigation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub playhead_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplayRecord {
    Header { session: ReplayHeader },
    Edit { edit: ScriptEdit },
    Navigate { navigate: Navigation },
    Exchange(ExchangeRecord),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {detail}")]
    BadRecord { line: usize, detail: String },
    #[error("invalid session: {0}")]
    Session(String),
    #[error("reading log: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads records, skipping blank lines. Returns each record with its 1-based line.
pub fn read_log(reader: impl BufRead) -> Result<Vec<(usize, ReplayRecord)>, ReplayError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|e| ReplayError::BadRecord { line: i + 1, detail: e.to_string() })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn parse_log(text: &str) -> Result<Vec<(usize, ReplayRecord)>, ReplayError> {
    read_log(text.as_bytes())
}

pub fn write_log(records: &[ReplayRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("record serializes")).collect::<Vec<_>>().join("\n")
}

/// A client that answers with the log's recorded replies, in order. Lets a
/// transcript stand in for a live model.
pub fn mock_client(records: &[(usize, ReplayRecord)]) -> ScriptedClient {
    let client = ScriptedClient::default();
    for (_, record) in records {
        if let ReplayRecord::Exchange(ex) = record {
            client.push(ex.raw_response.clone());
            if let Some(repair) = &ex.repair_response {
                client.push(repair.clone());
            }
        }
    }
    client
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Divergence {
    pub line: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExchangeResult {
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub congruence: Option<Congruence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub events: Vec<AgentEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayMetrics {
    pub responses: usize,
    pub vqa_responses: usize,
    /// Flagged by the incongruence heuristic.
    pub incongruent: usize,
    /// Labeled as wrong answers about the video.
    pub vqa_errors: usize,
    pub labeled_incongruent: usize,
    /// Exchanges whose heuristic flag disagrees with its label.
    pub label_mismatches: Vec<usize>,
    pub failures: usize,
    pub flagged_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayReport {
    pub final_script: AdScript,
    pub final_state: SessionState,
    pub metrics: ReplayMetrics,
    pub divergences: Vec<Divergence>,
    pub exchanges: Vec<ExchangeResult>,
}

impl ReplayReport {
    pub fn is_consistent(&self) -> bool {
        self.divergences.is_empty()
    }
}

fn initial_state(header: &ReplayHeader) -> Result<SessionState, ReplayError> {
    let mut state = SessionState::new(header.video_ref.clone(), TimeCode::from_millis(header.video_duration_ms))
        .map_err(|e| ReplayError::Session(e.to_string()))?;
    if let Some(text) = &header.initial_script {
        let script = parse_script(text)
            .map_err(|errs| ReplayError::Session(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")))?;
        state = state.with_script(script);
    }
    state.ask_only = header.ask_only;
    Ok(state)
}

/// Re-runs every exchange against a scripted client that returns exactly the
/// recorded replies, checking that the same events come out.
pub fn replay(records: &[(usize, ReplayRecord)], config: &AgentConfig) -> Result<ReplayReport, ReplayError> {
    let clock = StepClock::new(0, 1);
    let mut iter = records.iter().peekable();
    let header = match iter.peek() {
        Some((_, ReplayRecord::Header { session })) => {
            iter.next();
            session.clone()
        }
        _ => ReplayHeader::default(),
    };
    let mut state = initial_state(&header)?;
    let mut metrics = ReplayMetrics::default();
    let mut divergences = Vec::new();
    let mut exchanges = Vec::new();

    for (line, record) in iter {
        match record {
            ReplayRecord::Header { session } => state = initial_state(session)?,
            ReplayRecord::Edit { edit } => match apply_edit(&state.script, edit) {
                Ok((script, violations)) if !violations.iter().any(|v| v.is_error()) => {
                    state.script = script;
                    state.current_line = state.current_line.clamp(1, state.max_line());
                }
                Ok((_, violations)) => divergences.push(Divergence {
                    line: *line,
                    detail: format!("edit produced an invalid script ({} errors)", violations.len()),
                }),
                Err(e) => divergences.push(Divergence { line: *line, detail: format!("edit failed: {e}") }),
            },
            ReplayRecord::Navigate { navigate } => {
                if let Some(ms) = navigate.playhead_ms {
                    state.playhead = TimeCode::from_millis(ms.min(state.video_duration.as_millis()));
                }
                if let Some(l) = navigate.line {
                    state.current_line = l.clamp(1, state.max_line());
                }
            }
            ReplayRecord::Exchange(ex) => {
                metrics.responses += 1;
                let client =
                    ScriptedClient::new(std::iter::once(ex.raw_response.clone()).chain(ex.repair_response.clone()));
                let orchestrator = Orchestrator::new(&client, config, &clock);
                let labels = ex.labels.unwrap_or_default();
                metrics.vqa_errors += labels.vqa_error as usize;
                metrics.vqa_responses += labels.vqa as usize;
                metrics.labeled_incongruent += labels.incongruent as usize;
                match orchestrator.run_command(&ex.command, &state) {
                    Ok(outcome) => {
                        let flagged = outcome.congruence == Congruence::Incongruent;
                        metrics.incongruent += flagged as usize;
                        if ex.labels.is_some() && flagged != labels.incongruent {
                            metrics.label_mismatches.push(*line);
                        }
                        if let Some(code) = &ex.error {
                            divergences.push(Divergence {
                                line: *line,
                                detail: format!("recorded failure {code} but replay succeeded"),
                            });
                        }
                        if let Some(recorded) = &ex.applied_events {
                            if recorded != &outcome.events {
                                divergences.push(Divergence {
                                    line: *line,
                                    detail: "replayed events differ from the recorded ones".into(),
                                });
                            }
                        }
                        exchanges.push(ExchangeResult {
                            line: *line,
                            congruence: Some(outcome.congruence),
                            error: None,
                            events: outcome.events,
                        });
                        state = outcome.state;
                    }
                    Err(failure) => {
                        metrics.failures += 1;
                        let code = failure.error.code();
                        if ex.error.as_deref() != Some(code) {
                            divergences.push(Divergence {
                                line: *line,
                                detail: format!("replay failed with {code}: {}", failure.error),
                            });
                        }
                        exchanges.push(ExchangeResult {
                            line: *line,
                            congruence: None,
                            error: Some(code.to_string()),
                            events: Vec::new(),
                        });
                        state = failure.state;
                    }
                }
            }
        }
    }
    if metrics.responses > 0 {
        metrics.flagged_rate = (metrics.incongruent + metrics.vqa_errors) as f64 / metrics.responses as f64;
    }
    Ok(ReplayReport { final_script: state.script.clone(), final_state: state, metrics, divergences, exchanges })
}
