use std::path::Path;

use thiserror::Error;

use crate::session::{ConversationTurn, Role, SessionState};

/// The bundled prompt, version 1.
pub const DEFAULT_TEMPLATE: &str = include_str!("../../assets/prompt_template.txt");

pub const PLACEHOLDERS: [&str; 6] =
    ["command", "conversationHistory", "videoURL", "timestamp", "adScriptLine", "adScriptText"];

pub const SCRIPT_START_SENTINEL: &str = "===== START OF AD SCRIPT (NOT A LINE IN THE SCRIPT) =====";
pub const SCRIPT_END_SENTINEL: &str = "===== END OF AD SCRIPT (NOT A LINE IN THE SCRIPT) =====";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template is missing placeholder {{{{{0}}}}}")]
    MissingPlaceholder(String),
    #[error("reading template: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate { text: DEFAULT_TEMPLATE.to_string() }
    }
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self, TemplateError> {
        let text = text.into();
        if let Some(missing) = PLACEHOLDERS.iter().find(|p| !text.contains(&format!("{{{{{p}}}}}"))) {
            return Err(TemplateError::MissingPlaceholder(missing.to_string()));
        }
        Ok(PromptTemplate { text })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        PromptTemplate::new(std::fs::read_to_string(path)?)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Substitutes `{{name}}` markers in one pass. Substituted values are
    /// never rescanned, and unknown markers are left as they are.
    pub fn render(&self, lookup: impl Fn(&str) -> Option<String>) -> String {
        let mut out = String::with_capacity(self.text.len() + 256);
        let mut rest = self.text.as_str();
        while let Some(open) = rest.find("{{") {
            out.push_str(&rest[..open]);
            let after = &rest[open + 2..];
            match after.find("}}") {
                Some(close) => match lookup(&after[..close]) {
                    Some(value) => {
                        out.push_str(&value);
                        rest = &after[close + 2..];
                    }
                    None => {
                        out.push_str("{{");
                        rest = after;
                    }
                },
                None => {
                    out.push_str(&rest[open..]);
                    rest = "";
                }
            }
        }
        out.push_str(rest);
        out
    }
}

/// Rough token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

fn format_turn(turn: &ConversationTurn) -> String {
    let who = match turn.role {
        Role::User => "User",
        Role::Agent => "Agent",
    };
    format!("{who}: {}", turn.text)
}

/// History oldest first, dropping the oldest turns until it fits the budget.
pub fn format_history(history: &[ConversationTurn], token_budget: usize) -> String {
    let lines: Vec<String> = history.iter().map(format_turn).collect();
    let mut used = 0;
    let mut keep_from = lines.len();
    for (i, line) in lines.iter().enumerate().rev() {
        let cost = estimate_tokens(line) + 1;
        if used + cost > token_budget {
            break;
        }
        used += cost;
        keep_from = i;
    }
    if keep_from == lines.len() {
        return "(none)".to_string();
    }
    format!("\n{}", lines[keep_from..].join("\n"))
}

pub fn assemble_prompt(
    template: &PromptTemplate,
    command: &str,
    state: &SessionState,
    history_token_budget: usize,
) -> String {
    template.render(|name| {
        Some(match name {
            "command" => command.to_string(),
            "conversationHistory" => format_history(&state.history, history_token_budget),
            "videoURL" => state.video_ref.clone(),
            "timestamp" => state.playhead.rounded_secs().to_string(),
            "adScriptLine" => state.current_line.to_string(),
            "adScriptText" => state.script.serialize(),
            _ => return None,
        })
    })
}
