use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{validate, AdScript, Cue, Violation};
use crate::time::TimeCode;

/// A single change to a script, as issued by an editor or derived from an
/// agent response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum ScriptEdit {
    InsertCue {
        cue: Cue,
    },
    #[serde(rename_all = "camelCase")]
    UpdateText {
        cue_index: usize,
        new_text: String,
    },
    #[serde(rename_all = "camelCase")]
    Retime {
        cue_index: usize,
        #[serde(rename = "newStartMs")]
        new_start: TimeCode,
        #[serde(rename = "newEndMs")]
        new_end: TimeCode,
    },
    #[serde(rename_all = "camelCase")]
    DeleteCue {
        cue_index: usize,
    },
    GlobalSubstitute {
        sources: Vec<String>,
        replacement: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("cue index {index} out of bounds for a script of {len} cues")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("start {start} must be before end {end}")]
    InvalidRange { start: TimeCode, end: TimeCode },
    #[error("another segment already starts at {0}")]
    DuplicateStart(TimeCode),
    #[error("narration text must be a single non-empty line")]
    InvalidText,
    #[error("substitution needs at least one non-empty source phrase")]
    EmptyPattern,
}

fn check_text(text: &str) -> Result<String, EditError> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.contains('\n') || trimmed.contains('\r') {
        return Err(EditError::InvalidText);
    }
    Ok(trimmed.to_string())
}

fn check_index(script: &AdScript, index: usize) -> Result<(), EditError> {
    if index >= script.cues.len() {
        return Err(EditError::IndexOutOfBounds { index, len: script.cues.len() });
    }
    Ok(())
}

/// Places `cue` by start time, rejecting a start already taken.
fn insert_sorted(cues: &mut Vec<Cue>, cue: Cue) -> Result<(), EditError> {
    match cues.binary_search_by_key(&cue.start, |c| c.start) {
        Ok(_) => Err(EditError::DuplicateStart(cue.start)),
        Err(pos) => {
            cues.insert(pos, cue);
            Ok(())
        }
    }
}

/// Applies one edit without touching the input, returning the edited script
/// together with its recomputed violations.
pub fn apply_edit(script: &AdScript, edit: &ScriptEdit) -> Result<(AdScript, Vec<Violation>), EditError> {
    let mut next = script.clone();
    match edit {
        ScriptEdit::InsertCue { cue } => {
            if cue.start >= cue.end {
                return Err(EditError::InvalidRange { start: cue.start, end: cue.end });
            }
            let text = check_text(&cue.text)?;
            insert_sorted(&mut next.cues, Cue::new(cue.start, cue.end, text))?;
        }
        ScriptEdit::UpdateText { cue_index, new_text } => {
            check_index(script, *cue_index)?;
            next.cues[*cue_index].text = check_text(new_text)?;
        }
        ScriptEdit::Retime { cue_index, new_start, new_end } => {
            check_index(script, *cue_index)?;
            if new_start >= new_end {
                return Err(EditError::InvalidRange { start: *new_start, end: *new_end });
            }
            let mut cue = next.cues.remove(*cue_index);
            cue.start = *new_start;
            cue.end = *new_end;
            insert_sorted(&mut next.cues, cue)?;
        }
        ScriptEdit::DeleteCue { cue_index } => {
            check_index(script, *cue_index)?;
            next.cues.remove(*cue_index);
        }
        ScriptEdit::GlobalSubstitute { sources, replacement } => {
            if sources.iter().all(|s| s.trim().is_empty()) {
                return Err(EditError::EmptyPattern);
            }
            next = substitute_phrases(script, sources, replacement).0;
        }
    }
    let violations = validate(&next);
    Ok((next, violations))
}

/// Replaces every whole-phrase, case-insensitive occurrence of any source
/// phrase in every cue. Returns the new script and the number of replacements.
pub fn substitute_phrases(script: &AdScript, sources: &[String], replacement: &str) -> (AdScript, usize) {
    let mut patterns: Vec<Vec<char>> =
        sources.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).map(|s| s.chars().collect()).collect();
    // Longest first so "the man" wins over "man".
    patterns.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    patterns.dedup();

    let mut total = 0;
    let mut next = script.clone();
    for cue in &mut next.cues {
        let (text, n) = substitute_in_text(&cue.text, &patterns, replacement);
        cue.text = text;
        total += n;
    }
    (next, total)
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '’'
}

fn at_sentence_start(before: &[char]) -> bool {
    let trimmed: Vec<char> = before
        .iter()
        .rev()
        .skip_while(|c| c.is_whitespace() || matches!(c, '"' | '“' | '‘' | '(' | '['))
        .copied()
        .take(1)
        .collect();
    match trimmed.first() {
        None => true,
        Some(c) => matches!(c, '.' | '!' | '?'),
    }
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn substitute_in_text(text: &str, patterns: &[Vec<char>], replacement: &str) -> (String, usize) {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<char> = Vec::with_capacity(chars.len());
    let mut count = 0;
    let mut i = 0;
    while i < chars.len() {
        let boundary_before = i == 0 || !is_word_char(chars[i - 1]);
        let hit = boundary_before
            .then(|| {
                patterns.iter().find(|p| {
                    let end = i + p.len();
                    end <= chars.len()
                        && chars[i..end].iter().zip(p.iter()).all(|(a, b)| chars_eq_ignore_case(*a, *b))
                        && (end == chars.len() || !is_word_char(chars[end]))
                })
            })
            .flatten();
        match hit {
            Some(p) => {
                let rendered =
                    if at_sentence_start(&out) { capitalize_first(replacement) } else { replacement.to_string() };
                out.extend(rendered.chars());
                i += p.len();
                count += 1;
            }
            None => {
                out.push(chars[i]);
                i += 1;
            }
        }
    }
    (out.into_iter().collect(), count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::word_count;

    fn sources() -> Vec<String> {
        ["a man", "the man", "the guy"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn substitution_respects_case_and_boundaries() {
        let pats: Vec<Vec<char>> = vec!["the man".chars().collect(), "a man".chars().collect()];
        let (t, n) = substitute_in_text("The man smiles at a man. Then the mango falls.", &pats, "Tom");
        assert_eq!(t, "Tom smiles at Tom. Then the mango falls.");
        assert_eq!(n, 2);

        let pats: Vec<Vec<char>> = vec!["tom".chars().collect()];
        let (t, _) = substitute_in_text("Tom waves. He sees tom.", &pats, "the man");
        assert_eq!(t, "The man waves. He sees the man.");
    }

    #[test]
    fn global_substitute_counts_across_cues() {
        let s = AdScript::new(vec![
            Cue::from_secs(2, 7, "A man wakes up."),
            Cue::from_secs(9, 14, "The guy yawns while the man stretches."),
        ]);
        let (out, n) = substitute_phrases(&s, &sources(), "Tom");
        assert_eq!(n, 3);
        assert_eq!(out.cues[1].text, "Tom yawns while Tom stretches.");
        assert_eq!(s.cues[0].text, "A man wakes up.");
    }

    #[test]
    fn delete_only_cue() {
        let s = AdScript::new(vec![Cue::from_secs(2, 7, "Only.")]);
        let (out, v) = apply_edit(&s, &ScriptEdit::DeleteCue { cue_index: 0 }).unwrap();
        assert!(out.is_empty());
        assert!(v.is_empty());
    }

    #[test]
    fn update_text_shortens_line() {
        let before = "The man sits on the edge of the bed, rubbing his face. Two white slippers sit on the floor.";
        let s = AdScript::new(vec![Cue::from_secs(8, 12, before)]);
        let after = before.replacen("the edge of ", "", 1);
        let (out, _) = apply_edit(&s, &ScriptEdit::UpdateText { cue_index: 0, new_text: after }).unwrap();
        assert_eq!(word_count(before) - word_count(&out.cues[0].text), 3);
    }

    #[test]
    fn insert_and_retime_keep_order() {
        let s = AdScript::new(vec![Cue::from_secs(2, 5, "One."), Cue::from_secs(10, 12, "Three.")]);
        let (s, _) = apply_edit(&s, &ScriptEdit::InsertCue { cue: Cue::from_secs(6, 8, "Two.") }).unwrap();
        assert_eq!(s.cues[1].text, "Two.");
        let (s, _) = apply_edit(
            &s,
            &ScriptEdit::Retime { cue_index: 0, new_start: TimeCode::from_secs(20), new_end: TimeCode::from_secs(22) },
        )
        .unwrap();
        let texts: Vec<_> = s.cues.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["Two.", "Three.", "One."]);
    }

    #[test]
    fn edit_errors() {
        let s = AdScript::new(vec![Cue::from_secs(2, 5, "One.")]);
        assert_eq!(
            apply_edit(&s, &ScriptEdit::DeleteCue { cue_index: 1 }).unwrap_err(),
            EditError::IndexOutOfBounds { index: 1, len: 1 }
        );
        assert!(matches!(
            apply_edit(
                &s,
                &ScriptEdit::Retime {
                    cue_index: 0,
                    new_start: TimeCode::from_secs(5),
                    new_end: TimeCode::from_secs(5)
                }
            ),
            Err(EditError::InvalidRange { .. })
        ));
        assert_eq!(
            apply_edit(&s, &ScriptEdit::InsertCue { cue: Cue::from_secs(2, 3, "Dup.") }).unwrap_err(),
            EditError::DuplicateStart(TimeCode::from_secs(2))
        );
        assert_eq!(
            apply_edit(&s, &ScriptEdit::UpdateText { cue_index: 0, new_text: "a\n\nb".into() }).unwrap_err(),
            EditError::InvalidText
        );
    }
}
