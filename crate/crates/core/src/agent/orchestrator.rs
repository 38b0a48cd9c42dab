use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classify::{classify_incongruence, is_generation_request, Congruence};
use super::client::{Capability, ClientError, ModelClient, ModelRequest};
use super::prompt::{assemble_prompt, PromptTemplate};
use super::response::{parse_new_script, parse_response, AgentResponse, ParseOptions, SchemaError};
use crate::script::{diff, validate, AdScript, ChangeRecord, Rule, Violation, MIN_CUE_GAP_MS};
use crate::session::{Clock, Role, SessionState};
use crate::time::TimeCode;

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub template: PromptTemplate,
    pub conversation_temperature: f64,
    pub generation_temperature: f64,
    pub history_token_budget: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            template: PromptTemplate::default(),
            conversation_temperature: 0.3,
            generation_temperature: 0.3,
            history_token_budget: 8_000,
        }
    }
}

/// State changes reported to the UI, in the order they were applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all_fields = "camelCase")]
pub enum AgentEvent {
    TimestampJumped {
        #[serde(rename = "fromMs")]
        from: TimeCode,
        #[serde(rename = "toMs")]
        to: TimeCode,
    },
    ScriptReplaced {
        changes: Vec<ChangeRecord>,
        script: String,
        /// Cues whose end was pulled in to restore the minimum gap.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        repaired: Vec<usize>,
    },
    /// Ask-only sessions: the change is held back for the user to accept.
    SuggestionPending {
        changes: Vec<ChangeRecord>,
        script: String,
    },
    LineMoved {
        from: usize,
        to: usize,
    },
    TextSpoken {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplyError {
    #[error("new script rejected: {detail}")]
    InvalidScript { detail: String, violations: Vec<Violation> },
    #[error("timestamp {secs} s is past the end of the video")]
    TimestampOutOfRange { secs: u64 },
    #[error("aborted during {0}")]
    Aborted(&'static str),
}

/// Points inside [`apply_response_with`] where a fault hook may stop the update.
pub const APPLY_STAGES: [&str; 3] = ["timestamp", "script", "line"];

/// Pulls each cue's end in so the next cue starts at least the minimum gap
/// later. Returns the repaired script and the indices that changed, or the
/// remaining violations when that is not enough.
pub fn repair_spacing(script: &AdScript) -> Result<(AdScript, Vec<usize>), Vec<Violation>> {
    let mut out = script.clone();
    let mut repaired = Vec::new();
    for i in 0..out.cues.len().saturating_sub(1) {
        let next_start = out.cues[i + 1].start;
        let cue = &mut out.cues[i];
        if next_start > cue.start && next_start.as_millis() < cue.end.as_millis() + MIN_CUE_GAP_MS {
            let end = next_start.as_millis().saturating_sub(MIN_CUE_GAP_MS);
            if end > cue.start.as_millis() {
                cue.end = TimeCode::from_millis(end);
                repaired.push(i);
            }
        }
    }
    let errors: Vec<Violation> = validate(&out).into_iter().filter(Violation::is_error).collect();
    if errors.is_empty() {
        Ok((out, repaired))
    } else {
        Err(errors)
    }
}

/// Applies a parsed response to a copy of `state`. On success the copy has
/// the user command and agent reply appended to its history; on failure
/// `state` is left as it was and the error is returned.
pub fn apply_response(
    state: &SessionState,
    command: &str,
    response: &AgentResponse,
    clock: &dyn Clock,
) -> Result<(SessionState, Vec<AgentEvent>), ApplyError> {
    apply_response_with(state, command, response, clock, &mut |_| true)
}

/// [`apply_response`] with a hook consulted at each of [`APPLY_STAGES`];
/// returning false aborts the whole update.
pub fn apply_response_with(
    state: &SessionState,
    command: &str,
    response: &AgentResponse,
    clock: &dyn Clock,
    proceed: &mut dyn FnMut(&'static str) -> bool,
) -> Result<(SessionState, Vec<AgentEvent>), ApplyError> {
    let mut next = state.clone();
    let mut events = Vec::new();

    if response.did_change_timestamp {
        let secs = response.new_time_stamp.unwrap_or(0);
        let to = TimeCode::from_millis(secs.saturating_mul(1000));
        if to > next.video_duration {
            return Err(ApplyError::TimestampOutOfRange { secs });
        }
        events.push(AgentEvent::TimestampJumped { from: next.playhead, to });
        next.playhead = to;
    }
    if !proceed(APPLY_STAGES[0]) {
        return Err(ApplyError::Aborted(APPLY_STAGES[0]));
    }

    if response.did_change_script {
        let parsed = parse_new_script(&response.new_script, Some(next.video_duration))
            .map_err(|e| ApplyError::InvalidScript { detail: e.to_string(), violations: Vec::new() })?;
        let (script, repaired) = repair_spacing(&parsed).map_err(|violations| {
            let ids: Vec<&str> = violations.iter().map(|v| v.rule.id()).collect();
            ApplyError::InvalidScript { detail: ids.join(", "), violations }
        })?;
        let changes = diff(&next.script, &script);
        if next.ask_only {
            events.push(AgentEvent::SuggestionPending { changes, script: script.serialize() });
            next.pending_suggestion = Some(script);
        } else {
            events.push(AgentEvent::ScriptReplaced { changes, script: script.serialize(), repaired });
            next.script = script;
        }
    }
    if !proceed(APPLY_STAGES[1]) {
        return Err(ApplyError::Aborted(APPLY_STAGES[1]));
    }

    let from = next.current_line;
    let wanted = match (response.did_change_ad_line_number, response.ad_line_number) {
        (true, Some(line)) => usize::try_from(line).unwrap_or(usize::MAX),
        _ => from,
    };
    next.current_line = wanted.clamp(1, next.max_line());
    if next.current_line != from {
        events.push(AgentEvent::LineMoved { from, to: next.current_line });
    }
    if !proceed(APPLY_STAGES[2]) {
        return Err(ApplyError::Aborted(APPLY_STAGES[2]));
    }

    next.push_turn(Role::User, command, clock);
    next.push_turn(Role::Agent, response.text_response.clone(), clock);
    events.push(AgentEvent::TextSpoken { text: next.history.last().map(|t| t.text.clone()).unwrap_or_default() });
    Ok((next, events))
}

/// Makes a held-back suggestion the current script.
pub fn accept_suggestion(state: &SessionState) -> Option<(SessionState, AgentEvent)> {
    let script = state.pending_suggestion.clone()?;
    let mut next = state.clone();
    let changes = diff(&next.script, &script);
    let event = AgentEvent::ScriptReplaced { changes, script: script.serialize(), repaired: Vec::new() };
    next.script = script;
    next.pending_suggestion = None;
    next.current_line = next.current_line.clamp(1, next.max_line());
    Some((next, event))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("{0}")]
    ModelUnavailable(String),
    #[error("model reply unusable after a retry: {second}")]
    SchemaFailureAfterRetry { first: SchemaError, second: SchemaError },
    #[error(transparent)]
    Rejected(#[from] ApplyError),
}

impl AgentError {
    pub fn code(&self) -> &'static str {
        match self {
            AgentError::ModelUnavailable(_) => "MODEL_UNAVAILABLE",
            AgentError::SchemaFailureAfterRetry { .. } => "SCHEMA_FAILURE_AFTER_RETRY",
            AgentError::Rejected(_) => "RESPONSE_REJECTED",
        }
    }
}

impl From<ClientError> for AgentError {
    fn from(e: ClientError) -> Self {
        AgentError::ModelUnavailable(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub state: SessionState,
    pub response: AgentResponse,
    pub events: Vec<AgentEvent>,
    pub raw_response: String,
    pub repair_response: Option<String>,
    pub congruence: Congruence,
}

impl CommandOutcome {
    pub fn text_response(&self) -> &str {
        &self.response.text_response
    }
}

/// A failed command. `state` is the input state plus the command and an
/// apology in the history; nothing else differs.
#[derive(Debug, Clone)]
pub struct CommandFailure {
    pub error: AgentError,
    pub state: SessionState,
    pub raw_response: Option<String>,
    pub repair_response: Option<String>,
}

fn repair_prompt(prompt: &str, error: &SchemaError) -> String {
    format!(
        "{prompt}\n\nYour previous reply could not be used ({}: {error}). Reply again with only the JSON object described above, including all eight fields.",
        error.code()
    )
}

pub struct Orchestrator<'a> {
    pub client: &'a dyn ModelClient,
    pub config: &'a AgentConfig,
    pub clock: &'a dyn Clock,
}

impl<'a> Orchestrator<'a> {
    pub fn new(client: &'a dyn ModelClient, config: &'a AgentConfig, clock: &'a dyn Clock) -> Self {
        Orchestrator { client, config, clock }
    }

    pub fn request_for(&self, command: &str, state: &SessionState) -> ModelRequest {
        let capability = if is_generation_request(command) { Capability::Generation } else { Capability::Conversation };
        let temperature = match capability {
            Capability::Generation => self.config.generation_temperature,
            Capability::Conversation => self.config.conversation_temperature,
        };
        ModelRequest {
            prompt: assemble_prompt(&self.config.template, command, state, self.config.history_token_budget),
            media_ref: Some(state.video_ref.clone()),
            capability,
            temperature,
        }
    }

    /// Prompt, ask, check (re-asking once on a malformed reply) and apply.
    pub fn run_command(&self, command: &str, state: &SessionState) -> Result<CommandOutcome, Box<CommandFailure>> {
        self.run_command_with(command, state, &mut |_| true)
    }

    pub fn run_command_with(
        &self,
        command: &str,
        state: &SessionState,
        proceed: &mut dyn FnMut(&'static str) -> bool,
    ) -> Result<CommandOutcome, Box<CommandFailure>> {
        let mut raw_response = None;
        let mut repair_response = None;
        let result = self.exchange(command, state, &mut raw_response, &mut repair_response).and_then(|response| {
            let (next, events) = apply_response_with(state, command, &response, self.clock, proceed)?;
            Ok((response, next, events))
        });
        match result {
            Ok((response, next, events)) => Ok(CommandOutcome {
                congruence: classify_incongruence(command, &response),
                state: next,
                response,
                events,
                raw_response: raw_response.unwrap_or_default(),
                repair_response,
            }),
            Err(error) => {
                let mut failed = state.clone();
                failed.push_turn(Role::User, command, self.clock);
                failed.push_turn(Role::Agent, format!("Sorry, that did not work: {error}"), self.clock);
                Err(Box::new(CommandFailure { error, state: failed, raw_response, repair_response }))
            }
        }
    }

    fn exchange(
        &self,
        command: &str,
        state: &SessionState,
        raw_out: &mut Option<String>,
        repair_out: &mut Option<String>,
    ) -> Result<AgentResponse, AgentError> {
        let request = self.request_for(command, state);
        let raw = self.client.send(&request)?;
        *raw_out = Some(raw.clone());
        let strict = ParseOptions { video_duration: Some(state.video_duration), allow_repairable: false };
        let first = match parse_response(&raw, strict) {
            Ok(r) => return Ok(r),
            Err(e) => e,
        };
        let retry = ModelRequest { prompt: repair_prompt(&request.prompt, &first), ..request };
        let raw2 = self.client.send(&retry)?;
        *repair_out = Some(raw2.clone());
        match parse_response(&raw2, strict) {
            Ok(r) => Ok(r),
            Err(second) if second.is_repairable() => {
                let lenient = ParseOptions { allow_repairable: true, ..strict };
                parse_response(&raw2, lenient).map_err(|second| AgentError::SchemaFailureAfterRetry { first, second })
            }
            Err(second) => Err(AgentError::SchemaFailureAfterRetry { first, second }),
        }
    }
}

/// True when the script has no spacing or ordering problems.
pub fn spacing_clean(script: &AdScript) -> bool {
    !validate(script).iter().any(|v| matches!(v.rule, Rule::MinGap | Rule::Unsorted | Rule::Overlap))
}
