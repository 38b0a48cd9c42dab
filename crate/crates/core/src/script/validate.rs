use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{word_count, AdScript, MIN_CUE_GAP_MS};
use crate::time::TimeCode;

/// Words allowed per second of slot when drafting descriptions.
pub const WORDS_PER_SECOND_BUDGET: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    MinGap,
    Overlap,
    DurationExceeded,
    EmptyText,
    WordBudget,
    Unsorted,
    MalformedTimestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::MinGap,
        Rule::Overlap,
        Rule::DurationExceeded,
        Rule::EmptyText,
        Rule::WordBudget,
        Rule::Unsorted,
        Rule::MalformedTimestamp,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::MinGap => "MIN_GAP",
            Rule::Overlap => "OVERLAP",
            Rule::DurationExceeded => "DURATION_EXCEEDED",
            Rule::EmptyText => "EMPTY_TEXT",
            Rule::WordBudget => "WORD_BUDGET",
            Rule::Unsorted => "UNSORTED",
            Rule::MalformedTimestamp => "MALFORMED_TIMESTAMP",
        }
    }

    /// Word budget overruns are advisory; everything else blocks storing a script.
    pub fn severity(self) -> Severity {
        match self {
            Rule::WordBudget => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Cue(usize),
    Pair(usize, usize),
}

impl Location {
    pub fn first_index(self) -> usize {
        match self {
            Location::Cue(i) | Location::Pair(i, _) => i,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub location: Location,
    pub message: String,
}

impl Violation {
    pub fn is_error(&self) -> bool {
        self.rule.severity() == Severity::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Location::Cue(i) => write!(f, "{} (cue {}): {}", self.rule, i, self.message),
            Location::Pair(i, j) => write!(f, "{} (cues {}-{}): {}", self.rule, i, j, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("gap duration must be positive")]
pub struct WordBudgetError;

/// Maximum word count for a slot: three words per second, rounded down.
pub fn word_budget(gap: TimeCode) -> Result<u64, WordBudgetError> {
    match gap.as_millis() {
        0 => Err(WordBudgetError),
        ms => Ok(ms * WORDS_PER_SECOND_BUDGET / 1000),
    }
}

/// Checks every semantic rule. The result is empty iff the script is clean,
/// and is ordered by the (first) cue index it refers to.
pub fn validate(script: &AdScript) -> Vec<Violation> {
    let mut out = Vec::new();
    let cues = &script.cues;

    for (i, cue) in cues.iter().enumerate() {
        let inverted = cue.end <= cue.start;
        if inverted {
            out.push(Violation {
                rule: Rule::MalformedTimestamp,
                location: Location::Cue(i),
                message: format!("start {} is not before end {}", cue.start.to_human(), cue.end.to_human()),
            });
        }
        let words = word_count(&cue.text);
        if words == 0 {
            out.push(Violation {
                rule: Rule::EmptyText,
                location: Location::Cue(i),
                message: "segment has no narration text".into(),
            });
        } else if !inverted {
            let budget = word_budget(TimeCode::from_millis(cue.slot_ms())).unwrap_or(0);
            if words as u64 > budget {
                out.push(Violation {
                    rule: Rule::WordBudget,
                    location: Location::Cue(i),
                    message: format!(
                        "{words} words in a {:.1} s slot; about {budget} fit",
                        cue.slot_ms() as f64 / 1000.0
                    ),
                });
            }
        }
        if let Some(duration) = script.video_duration {
            if cue.end > duration {
                out.push(Violation {
                    rule: Rule::DurationExceeded,
                    location: Location::Cue(i),
                    message: format!("ends at {} but the video is {} long", cue.end.to_human(), duration.to_human()),
                });
            }
        }
        if let Some(next) = cues.get(i + 1) {
            let loc = Location::Pair(i, i + 1);
            if next.start <= cue.start {
                out.push(Violation {
                    rule: Rule::Unsorted,
                    location: loc,
                    message: format!(
                        "segment starting at {} follows one starting at {}",
                        next.start.to_human(),
                        cue.start.to_human()
                    ),
                });
            } else if next.start < cue.end {
                out.push(Violation {
                    rule: Rule::Overlap,
                    location: loc,
                    message: format!(
                        "segment starting at {} begins before the previous one ends at {}",
                        next.start.to_human(),
                        cue.end.to_human()
                    ),
                });
            } else if next.start - cue.end < MIN_CUE_GAP_MS {
                out.push(Violation {
                    rule: Rule::MinGap,
                    location: loc,
                    message: format!(
                        "only {} ms between segments; at least {MIN_CUE_GAP_MS} ms required",
                        next.start - cue.end
                    ),
                });
            }
        }
    }
    out.sort_by_key(|v| v.location.first_index());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::Cue;

    #[test]
    fn budget_arithmetic() {
        assert_eq!(word_budget(TimeCode::from_millis(3_000)), Ok(9));
        assert_eq!(word_budget(TimeCode::from_millis(1_000)), Ok(3));
        assert_eq!(word_budget(TimeCode::from_millis(4_500)), Ok(13));
        assert_eq!(word_budget(TimeCode::ZERO), Err(WordBudgetError));
    }

    #[test]
    fn touching_segments_violate_min_gap() {
        let s = AdScript::new(vec![
            Cue::from_secs(53, 57, "A framed photo of a smiling girl."),
            Cue::from_secs(57, 60, "Credits roll over the photo."),
        ]);
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::MinGap);
        assert_eq!(v[0].location, Location::Pair(0, 1));
    }

    #[test]
    fn isolated_cue_is_clean() {
        let s = AdScript::new(vec![Cue::from_secs(2, 7, "The alarm clock rings loudly. A man wakes up.")])
            .with_duration(TimeCode::from_secs(60));
        assert_eq!(word_count(&s.cues[0].text), 9);
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn end_past_video_duration() {
        let s = AdScript::new(vec![Cue::from_secs(70, 75, "Credits.")]).with_duration(TimeCode::from_secs(72));
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::DurationExceeded);
    }

    #[test]
    fn overlap_reported_instead_of_min_gap() {
        let s = AdScript::new(vec![Cue::from_secs(1, 5, "One."), Cue::from_secs(4, 8, "Two.")]);
        let rules: Vec<_> = validate(&s).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![Rule::Overlap]);
    }

    #[test]
    fn word_budget_is_warning() {
        let s = AdScript::new(vec![Cue::from_secs(1, 2, "one two three four")]);
        let v = validate(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::WordBudget);
        assert!(!v[0].is_error());
    }
}
