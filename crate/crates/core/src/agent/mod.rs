//! The conversational agent: prompt assembly, reply checking, and applying
//! replies to a session.

mod classify;
mod client;
mod orchestrator;
mod prompt;
pub mod replay;
mod response;

pub use classify::{classify_incongruence, is_generation_request, requests_action, Congruence};
pub use client::{Capability, ClientError, ModelClient, ModelRequest, ScriptedClient};
pub use orchestrator::{
    accept_suggestion, apply_response, apply_response_with, repair_spacing, spacing_clean, AgentConfig, AgentError,
    AgentEvent, ApplyError, CommandFailure, CommandOutcome, Orchestrator, APPLY_STAGES,
};
pub use prompt::{
    assemble_prompt, estimate_tokens, format_history, PromptTemplate, TemplateError, DEFAULT_TEMPLATE, PLACEHOLDERS,
    SCRIPT_END_SENTINEL, SCRIPT_START_SENTINEL,
};
pub use response::{extract_json, parse_new_script, parse_response, AgentResponse, ParseOptions, SchemaError};
