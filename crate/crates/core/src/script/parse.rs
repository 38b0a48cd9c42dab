use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{AdScript, Cue, Rule};
use crate::time::TimeCode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseErrorKind {
    /// A timestamp line that could not be read, or whose start is not before its end.
    MalformedTimestamp { detail: String },
    /// A timestamp line with no narration line after it.
    DanglingTimestamp,
    /// A narration line with no timestamp line before it.
    OrphanText,
    /// A segment whose start does not come strictly after the previous one.
    Unsorted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    /// 1-based line number in the input.
    pub line: usize,
    #[serde(flatten)]
    pub kind: ParseErrorKind,
}

impl ParseError {
    /// The validation rule this error corresponds to, when there is one.
    pub fn rule(&self) -> Option<Rule> {
        match self.kind {
            ParseErrorKind::MalformedTimestamp { .. } => Some(Rule::MalformedTimestamp),
            ParseErrorKind::Unsorted => Some(Rule::Unsorted),
            _ => None,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::MalformedTimestamp { detail } => {
                write!(f, "line {}: MALFORMED_TIMESTAMP: {detail}", self.line)
            }
            ParseErrorKind::DanglingTimestamp => {
                write!(f, "line {}: timestamp line has no narration text", self.line)
            }
            ParseErrorKind::OrphanText => {
                write!(f, "line {}: text line has no timestamp line", self.line)
            }
            ParseErrorKind::Unsorted => {
                write!(f, "line {}: UNSORTED: segment does not start after the previous one", self.line)
            }
        }
    }
}

impl std::error::Error for ParseError {}

static SEPARATOR_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\s+(?:to|-->|-|–)\s+").expect("separator regex"));

static TIMESTAMPISH_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\d\s*(?:minutes?|mins?|m|seconds?|secs?|s)\b|\d:\d|\bto\s+\d").expect("timestampish regex")
});

/// Parses `<start> to <end>`. Accepts `-`, `–` and `-->` as separators.
pub fn parse_timestamp_line(line: &str) -> Result<(TimeCode, TimeCode), String> {
    let trimmed = line.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = SEPARATOR_RE.splitn(trimmed, 3).collect();
    if parts.len() != 2 {
        return Err(format!("expected `<start> to <end>`, found {:?}", line.trim()));
    }
    let start = TimeCode::parse_human(parts[0]).map_err(|e| e.to_string())?;
    let end = TimeCode::parse_human(parts[1]).map_err(|e| e.to_string())?;
    Ok((start, end))
}

fn looks_like_timestamp(line: &str) -> bool {
    TIMESTAMPISH_RE.is_match(line)
}

enum Expect {
    Timestamp,
    Text { start: TimeCode, end: TimeCode, line: usize },
    AfterText,
    SkipBlock,
}

/// Parses the script dialect. Cue-level structure (timestamps, one text line
/// per cue, strictly ascending starts) is enforced here; spacing and duration
/// rules are left to [`validate`](super::validate).
pub fn parse_script(text: &str) -> Result<AdScript, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut cues: Vec<(usize, Cue)> = Vec::new();
    let mut expect = Expect::Timestamp;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r').trim();

        if line.is_empty() {
            if let Expect::Text { line, .. } = expect {
                errors.push(ParseError { line, kind: ParseErrorKind::DanglingTimestamp });
            }
            expect = Expect::Timestamp;
            continue;
        }

        expect = match expect {
            Expect::SkipBlock => Expect::SkipBlock,
            Expect::Timestamp | Expect::AfterText => match parse_timestamp_line(line) {
                Ok((start, end)) => Expect::Text { start, end, line: line_no },
                Err(detail) if looks_like_timestamp(line) => {
                    errors.push(ParseError { line: line_no, kind: ParseErrorKind::MalformedTimestamp { detail } });
                    Expect::SkipBlock
                }
                Err(_) => {
                    errors.push(ParseError { line: line_no, kind: ParseErrorKind::OrphanText });
                    Expect::SkipBlock
                }
            },
            Expect::Text { start, end, line: ts_line } => match parse_timestamp_line(line) {
                Ok((s, e)) => {
                    errors.push(ParseError { line: ts_line, kind: ParseErrorKind::DanglingTimestamp });
                    Expect::Text { start: s, end: e, line: line_no }
                }
                Err(_) => {
                    cues.push((ts_line, Cue::new(start, end, line)));
                    Expect::AfterText
                }
            },
        };
    }
    if let Expect::Text { line, .. } = expect {
        errors.push(ParseError { line, kind: ParseErrorKind::DanglingTimestamp });
    }

    for (line, cue) in &cues {
        if cue.start >= cue.end {
            errors.push(ParseError {
                line: *line,
                kind: ParseErrorKind::MalformedTimestamp {
                    detail: format!("start {} is not before end {}", cue.start.to_human(), cue.end.to_human()),
                },
            });
        }
    }
    for pair in cues.windows(2) {
        if pair[1].1.start <= pair[0].1.start {
            errors.push(ParseError { line: pair[1].0, kind: ParseErrorKind::Unsorted });
        }
    }

    if errors.is_empty() {
        Ok(AdScript::new(cues.into_iter().map(|(_, c)| c).collect()))
    } else {
        errors.sort_by_key(|e| e.line);
        Err(errors)
    }
}
