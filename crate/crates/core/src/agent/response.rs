use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::script::{parse_script, validate, AdScript, Rule, Violation};
use crate::time::TimeCode;

/// The model's structured reply. Field names on the wire are PascalCase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase")]
pub struct AgentResponse {
    pub command: String,
    pub text_response: String,
    pub did_change_timestamp: bool,
    /// Whole seconds.
    pub new_time_stamp: Option<u64>,
    pub did_change_script: bool,
    pub new_script: String,
    #[serde(rename = "DidChangeADLineNumber")]
    pub did_change_ad_line_number: bool,
    #[serde(rename = "ADLineNumber")]
    pub ad_line_number: Option<u64>,
}

impl AgentResponse {
    /// A reply that only talks.
    pub fn text_only(command: impl Into<String>, text: impl Into<String>) -> Self {
        AgentResponse {
            command: command.into(),
            text_response: text.into(),
            did_change_timestamp: false,
            new_time_stamp: None,
            did_change_script: false,
            new_script: String::new(),
            did_change_ad_line_number: false,
            ad_line_number: None,
        }
    }

    pub fn with_timestamp(mut self, secs: u64) -> Self {
        self.did_change_timestamp = true;
        self.new_time_stamp = Some(secs);
        self
    }

    pub fn with_script(mut self, script: impl Into<String>) -> Self {
        self.did_change_script = true;
        self.new_script = script.into();
        self
    }

    pub fn with_line(mut self, line: u64) -> Self {
        self.did_change_ad_line_number = true;
        self.ad_line_number = Some(line);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemaError {
    #[error("response is not a JSON object: {detail}")]
    NotJson { detail: String },
    #[error("response is missing field {field}")]
    MissingField { field: String },
    #[error("field {field} should be {expected}")]
    TypeMismatch { field: String, expected: String },
    #[error("{detail}")]
    ConditionalFieldViolation {
        detail: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        violations: Vec<Violation>,
    },
}

impl SchemaError {
    pub fn code(&self) -> &'static str {
        match self {
            SchemaError::NotJson { .. } => "NOT_JSON",
            SchemaError::MissingField { .. } => "MISSING_FIELD",
            SchemaError::TypeMismatch { .. } => "TYPE_MISMATCH",
            SchemaError::ConditionalFieldViolation { .. } => "CONDITIONAL_FIELD_VIOLATION",
        }
    }

    fn conditional(detail: impl Into<String>) -> Self {
        SchemaError::ConditionalFieldViolation { detail: detail.into(), violations: Vec::new() }
    }

    /// True when every problem is one the orchestrator repairs itself.
    pub fn is_repairable(&self) -> bool {
        match self {
            SchemaError::ConditionalFieldViolation { violations, .. } => {
                !violations.is_empty() && violations.iter().all(|v| is_repairable_rule(v.rule))
            }
            _ => false,
        }
    }
}

pub(crate) fn is_repairable_rule(rule: Rule) -> bool {
    matches!(rule, Rule::MinGap | Rule::Overlap)
}

/// How strictly `NewScript` is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    /// Length of the video, for range checks on `NewTimeStamp` and cue ends.
    pub video_duration: Option<TimeCode>,
    /// Accept scripts whose only errors are spacing problems that
    /// [`repair_spacing`](super::repair_spacing) can fix.
    pub allow_repairable: bool,
}

/// Pulls the JSON object out of a reply that may be wrapped in a code fence
/// or surrounded by prose.
pub fn extract_json(raw: &str) -> Option<&str> {
    let trimmed = raw.trim();
    if trimmed.starts_with('{') && trimmed.ends_with('}') {
        return Some(trimmed);
    }
    if let Some(open) = trimmed.find("```") {
        let after = &trimmed[open + 3..];
        let body_start = after.find('\n').map_or(0, |i| i + 1);
        let body = &after[body_start..];
        if let Some(close) = body.find("```") {
            let inner = body[..close].trim();
            if inner.starts_with('{') {
                return Some(inner);
            }
        }
    }
    let start = trimmed.find('{')?;
    let end = trimmed.rfind('}')?;
    (end > start).then(|| &trimmed[start..=end])
}

const FIELDS: [&str; 8] = [
    "Command",
    "TextResponse",
    "DidChangeTimestamp",
    "NewTimeStamp",
    "DidChangeScript",
    "NewScript",
    "DidChangeADLineNumber",
    "ADLineNumber",
];

/// Exact key first, then a case-insensitive match.
fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value, SchemaError> {
    obj.get(name)
        .or_else(|| obj.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v))
        .ok_or_else(|| SchemaError::MissingField { field: name.to_string() })
}

fn mismatch(field: &str, expected: &str) -> SchemaError {
    SchemaError::TypeMismatch { field: field.to_string(), expected: expected.to_string() }
}

fn as_string(v: &Value, name: &str) -> Result<String, SchemaError> {
    v.as_str().map(str::to_string).ok_or_else(|| mismatch(name, "a string"))
}

fn as_bool(v: &Value, name: &str) -> Result<bool, SchemaError> {
    v.as_bool().ok_or_else(|| mismatch(name, "true or false"))
}

/// Non-negative whole number, or null.
fn as_count(v: &Value, name: &str) -> Result<Option<u64>, SchemaError> {
    if v.is_null() {
        return Ok(None);
    }
    if let Some(n) = v.as_u64() {
        return Ok(Some(n));
    }
    match v.as_f64() {
        Some(f) if f >= 0.0 && f.fract() == 0.0 && f <= u64::MAX as f64 => Ok(Some(f as u64)),
        _ => Err(mismatch(name, "a non-negative integer")),
    }
}

/// Parses and checks a raw model reply.
pub fn parse_response(raw: &str, options: ParseOptions) -> Result<AgentResponse, SchemaError> {
    let json = extract_json(raw).ok_or_else(|| SchemaError::NotJson { detail: "no JSON object found".into() })?;
    let value: Value = serde_json::from_str(json).map_err(|e| SchemaError::NotJson { detail: e.to_string() })?;
    let obj = value.as_object().ok_or_else(|| SchemaError::NotJson { detail: "top level is not an object".into() })?;
    for name in FIELDS {
        field(obj, name)?;
    }
    let new_script_value = field(obj, "NewScript")?;
    let resp = AgentResponse {
        command: as_string(field(obj, "Command")?, "Command")?,
        text_response: as_string(field(obj, "TextResponse")?, "TextResponse")?,
        did_change_timestamp: as_bool(field(obj, "DidChangeTimestamp")?, "DidChangeTimestamp")?,
        new_time_stamp: as_count(field(obj, "NewTimeStamp")?, "NewTimeStamp")?,
        did_change_script: as_bool(field(obj, "DidChangeScript")?, "DidChangeScript")?,
        new_script: if new_script_value.is_null() { String::new() } else { as_string(new_script_value, "NewScript")? },
        did_change_ad_line_number: as_bool(field(obj, "DidChangeADLineNumber")?, "DidChangeADLineNumber")?,
        ad_line_number: as_count(field(obj, "ADLineNumber")?, "ADLineNumber")?,
    };
    check_conditionals(&resp, options)?;
    Ok(resp)
}

fn check_conditionals(resp: &AgentResponse, options: ParseOptions) -> Result<(), SchemaError> {
    if resp.did_change_timestamp {
        let secs = resp
            .new_time_stamp
            .ok_or_else(|| SchemaError::conditional("DidChangeTimestamp is true but NewTimeStamp is not set"))?;
        if let Some(d) = options.video_duration {
            if secs.saturating_mul(1000) > d.as_millis() {
                return Err(SchemaError::conditional(format!(
                    "NewTimeStamp {secs} is past the end of the video ({} s)",
                    d.rounded_secs()
                )));
            }
        }
    }
    if resp.did_change_ad_line_number {
        match resp.ad_line_number {
            None => return Err(SchemaError::conditional("DidChangeADLineNumber is true but ADLineNumber is not set")),
            Some(0) => return Err(SchemaError::conditional("ADLineNumber counts from 1")),
            Some(_) => {}
        }
    }
    if resp.did_change_script {
        check_new_script(&resp.new_script, options)?;
    } else if !resp.new_script.trim().is_empty() {
        return Err(SchemaError::conditional("DidChangeScript is false but NewScript is not empty"));
    }
    Ok(())
}

/// Parses `NewScript`, attaching the video duration when known.
pub fn parse_new_script(text: &str, video_duration: Option<TimeCode>) -> Result<AdScript, SchemaError> {
    let script = parse_script(text).map_err(|errs| {
        let detail = errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ");
        SchemaError::conditional(format!("NewScript does not parse: {detail}"))
    })?;
    Ok(match video_duration {
        Some(d) => script.with_duration(d),
        None => script,
    })
}

fn check_new_script(text: &str, options: ParseOptions) -> Result<(), SchemaError> {
    let script = parse_new_script(text, options.video_duration)?;
    let errors: Vec<Violation> = validate(&script).into_iter().filter(Violation::is_error).collect();
    if errors.is_empty() || (options.allow_repairable && errors.iter().all(|v| is_repairable_rule(v.rule))) {
        return Ok(());
    }
    let ids: Vec<&str> = errors.iter().map(|v| v.rule.id()).collect();
    Err(SchemaError::ConditionalFieldViolation {
        detail: format!("NewScript breaks script rules: {}", ids.join(", ")),
        violations: errors,
    })
}
