use serde::{Deserialize, Serialize};

use super::AgentResponse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Congruence {
    Congruent,
    /// The agent acted on the script although the user only asked something.
    Incongruent,
}

const EDIT_VERBS: &[&str] = &[
    "add",
    "adjust",
    "append",
    "change",
    "combine",
    "condense",
    "convert",
    "correct",
    "delete",
    "edit",
    "erase",
    "expand",
    "extend",
    "fix",
    "include",
    "insert",
    "lengthen",
    "make",
    "merge",
    "modify",
    "move",
    "put",
    "rearrange",
    "remove",
    "rename",
    "rephrase",
    "replace",
    "reword",
    "rewrite",
    "retime",
    "revise",
    "shift",
    "shorten",
    "simplify",
    "split",
    "substitute",
    "swap",
    "tighten",
    "translate",
    "trim",
    "tweak",
    "update",
];

const GENERATION_VERBS: &[&str] =
    &["compose", "create", "draft", "fill", "generate", "produce", "regenerate", "redo", "write"];

fn tokens(command: &str) -> impl Iterator<Item = String> + '_ {
    command
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
        .map(|t| t.trim_matches('\'').to_lowercase())
}

/// True when the command asks for new script material.
pub fn is_generation_request(command: &str) -> bool {
    tokens(command).any(|t| GENERATION_VERBS.contains(&t.as_str()))
}

/// True when the command names any edit or generation action.
pub fn requests_action(command: &str) -> bool {
    tokens(command).any(|t| EDIT_VERBS.contains(&t.as_str()) || GENERATION_VERBS.contains(&t.as_str()))
}

/// Flags script changes made in reply to a purely informational command.
/// Used for metrics only.
pub fn classify_incongruence(command: &str, response: &AgentResponse) -> Congruence {
    if response.did_change_script && !requests_action(command) {
        Congruence::Incongruent
    } else {
        Congruence::Congruent
    }
}
