//! The timed audio-description script: a WebVTT-style plain-text dialect where
//! each segment is a `X min Y sec to X min Y sec` line followed by one line of
//! narration, and segments are separated by a single blank line.

mod diff;
mod edit;
mod parse;
mod validate;

use serde::{Deserialize, Serialize};

use crate::time::TimeCode;

pub use diff::{apply_diff, diff, ChangeRecord};
pub use edit::{apply_edit, substitute_phrases, EditError, ScriptEdit};
pub use parse::{parse_script, parse_timestamp_line, ParseError, ParseErrorKind};
pub use validate::{validate, word_budget, Location, Rule, Severity, Violation, WordBudgetError};

/// Minimum spacing between consecutive segments.
pub const MIN_CUE_GAP_MS: u64 = 1_000;

/// Text written into cues that still need a description.
pub const PLACEHOLDER_TEXT: &str = "[describe]";

/// One timed narration unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cue {
    #[serde(rename = "startMs")]
    pub start: TimeCode,
    #[serde(rename = "endMs")]
    pub end: TimeCode,
    pub text: String,
}

impl Cue {
    pub fn new(start: TimeCode, end: TimeCode, text: impl Into<String>) -> Self {
        Cue { start, end, text: text.into() }
    }

    pub fn from_secs(start: u64, end: u64, text: impl Into<String>) -> Self {
        Cue::new(TimeCode::from_secs(start), TimeCode::from_secs(end), text)
    }

    pub fn slot_ms(&self) -> u64 {
        self.end - self.start
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }

    pub fn is_placeholder(&self) -> bool {
        self.text.trim() == PLACEHOLDER_TEXT
    }

    pub fn timestamp_line(&self) -> String {
        format!("{} to {}", self.start.to_human(), self.end.to_human())
    }
}

/// An ordered list of cues, optionally bound to the length of its video.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdScript {
    pub cues: Vec<Cue>,
    #[serde(default, rename = "videoDurationMs", skip_serializing_if = "Option::is_none")]
    pub video_duration: Option<TimeCode>,
}

/// Which part of the serialized document a line belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineField {
    TimestampLine,
    TextLine,
    BlankLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineLocation {
    pub cue: Option<usize>,
    pub field: LineField,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line} is outside the script (1..={line_count})")]
pub struct LineOutOfRange {
    pub line: usize,
    pub line_count: usize,
}

impl AdScript {
    pub fn new(cues: Vec<Cue>) -> Self {
        AdScript { cues, video_duration: None }
    }

    pub fn with_duration(mut self, duration: TimeCode) -> Self {
        self.video_duration = Some(duration);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.cues.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cues.len()
    }

    /// Renders the canonical text form: `\n` line endings, one blank line
    /// between segments, no trailing newline.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (i, cue) in self.cues.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&cue.timestamp_line());
            out.push('\n');
            out.push_str(cue.text.trim());
        }
        out
    }

    /// Number of lines in the serialized document, blank separators included.
    pub fn line_count(&self) -> usize {
        match self.cues.len() {
            0 => 0,
            n => 3 * n - 1,
        }
    }

    /// Maps a 1-based serialized line number to the cue and field it belongs to.
    pub fn line_locate(&self, line: usize) -> Result<LineLocation, LineOutOfRange> {
        let line_count = self.line_count();
        if line == 0 || line > line_count {
            return Err(LineOutOfRange { line, line_count });
        }
        let zero = line - 1;
        let cue = zero / 3;
        Ok(match zero % 3 {
            0 => LineLocation { cue: Some(cue), field: LineField::TimestampLine },
            1 => LineLocation { cue: Some(cue), field: LineField::TextLine },
            _ => LineLocation { cue: None, field: LineField::BlankLine },
        })
    }

    /// First serialized line (the timestamp line) of cue `index`.
    pub fn line_of_cue(&self, index: usize) -> Option<usize> {
        (index < self.cues.len()).then_some(3 * index + 1)
    }

    /// The cue whose segment contains `line`; blank separators belong to the
    /// cue above them.
    pub fn cue_at_line(&self, line: usize) -> Option<usize> {
        if line == 0 || line > self.line_count() {
            return None;
        }
        Some((line - 1) / 3)
    }

    /// The cue playing at `at`, if any.
    pub fn cue_at_time(&self, at: TimeCode) -> Option<usize> {
        self.cues.iter().position(|c| c.start <= at && at < c.end)
    }

    pub fn is_sorted(&self) -> bool {
        self.cues.windows(2).all(|w| w[0].start < w[1].start)
    }
}

/// Counts whitespace-separated tokens, ignoring tokens made only of punctuation.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().filter(|tok| tok.chars().any(char::is_alphanumeric)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fox() -> AdScript {
        AdScript::new(vec![
            Cue::from_secs(10, 13, "The fox walks slowly through the snow."),
            Cue::from_secs(81, 85, "The fox approaches, looking around."),
        ])
    }

    #[test]
    fn serializes_single_segment() {
        let script = AdScript::new(vec![Cue::from_secs(81, 85, "The fox approaches, looking around.")]);
        assert_eq!(script.serialize(), "1 min 21 sec to 1 min 25 sec\nThe fox approaches, looking around.");
        assert_eq!(AdScript::default().serialize(), "");
    }

    #[test]
    fn word_count_skips_punctuation_tokens() {
        assert_eq!(word_count("The man sits - on the bed ."), 6);
        assert_eq!(word_count("  "), 0);
        assert_eq!(word_count("[describe]"), 1);
    }

    #[test]
    fn line_locate_follows_layout() {
        let s = fox();
        assert_eq!(s.line_locate(1).unwrap(), LineLocation { cue: Some(0), field: LineField::TimestampLine });
        assert_eq!(s.line_locate(3).unwrap(), LineLocation { cue: None, field: LineField::BlankLine });
        assert_eq!(s.line_locate(5).unwrap(), LineLocation { cue: Some(1), field: LineField::TextLine });
        assert!(s.line_locate(0).is_err());
        assert!(s.line_locate(6).is_err());
        assert!(AdScript::default().line_locate(1).is_err());
    }

    #[test]
    fn located_line_matches_serialized_text() {
        let s = fox();
        let text = s.serialize();
        for (i, line) in text.lines().enumerate() {
            let loc = s.line_locate(i + 1).unwrap();
            match (loc.cue, loc.field) {
                (Some(c), LineField::TimestampLine) => assert_eq!(line, s.cues[c].timestamp_line()),
                (Some(c), LineField::TextLine) => assert_eq!(line, s.cues[c].text),
                (None, LineField::BlankLine) => assert!(line.is_empty()),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}
