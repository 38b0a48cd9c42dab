use serde::{Deserialize, Serialize};

use super::{AdScript, Cue};
use crate::time::TimeCode;

/// One per-cue difference between two scripts. Indices named `index` refer to
/// the old script; `new_index` to the new one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ChangeRecord {
    #[serde(rename_all = "camelCase")]
    Added {
        new_index: usize,
        cue: Cue,
    },
    Removed {
        index: usize,
        cue: Cue,
    },
    #[serde(rename_all = "camelCase")]
    TextChanged {
        index: usize,
        new_index: usize,
        from: String,
        to: String,
    },
    #[serde(rename_all = "camelCase")]
    Retimed {
        index: usize,
        new_index: usize,
        #[serde(rename = "fromStartMs")]
        from_start: TimeCode,
        #[serde(rename = "fromEndMs")]
        from_end: TimeCode,
        #[serde(rename = "toStartMs")]
        to_start: TimeCode,
        #[serde(rename = "toEndMs")]
        to_end: TimeCode,
    },
}

fn affinity(a: &Cue, b: &Cue) -> u32 {
    if a == b {
        4
    } else if a.start == b.start && a.end == b.end {
        3
    } else if a.text == b.text {
        2
    } else if a.start == b.start {
        1
    } else {
        0
    }
}

/// Aligns the two cue lists (a weighted LCS over cue affinity) and reports
/// what changed.
pub fn diff(old: &AdScript, new: &AdScript) -> Vec<ChangeRecord> {
    let (a, b) = (&old.cues, &new.cues);
    let (n, m) = (a.len(), b.len());
    let mut score = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let w = affinity(&a[i], &b[j]);
            let take = if w > 0 { w + score[i + 1][j + 1] } else { 0 };
            score[i][j] = take.max(score[i + 1][j]).max(score[i][j + 1]);
        }
    }

    let mut records = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m {
            let w = affinity(&a[i], &b[j]);
            if w > 0 && score[i][j] == w + score[i + 1][j + 1] {
                if a[i].text != b[j].text {
                    records.push(ChangeRecord::TextChanged {
                        index: i,
                        new_index: j,
                        from: a[i].text.clone(),
                        to: b[j].text.clone(),
                    });
                }
                if a[i].start != b[j].start || a[i].end != b[j].end {
                    records.push(ChangeRecord::Retimed {
                        index: i,
                        new_index: j,
                        from_start: a[i].start,
                        from_end: a[i].end,
                        to_start: b[j].start,
                        to_end: b[j].end,
                    });
                }
                i += 1;
                j += 1;
                continue;
            }
        }
        if i < n && (j == m || score[i][j] == score[i + 1][j]) {
            records.push(ChangeRecord::Removed { index: i, cue: a[i].clone() });
            i += 1;
        } else {
            records.push(ChangeRecord::Added { new_index: j, cue: b[j].clone() });
            j += 1;
        }
    }
    records
}

/// Replays change records produced by [`diff`] onto the old script.
pub fn apply_diff(old: &AdScript, records: &[ChangeRecord]) -> AdScript {
    let mut slots: Vec<Option<Cue>> = old.cues.iter().cloned().map(Some).collect();
    let mut added = Vec::new();
    for record in records {
        match record {
            ChangeRecord::Added { new_index, cue } => added.push((*new_index, cue.clone())),
            ChangeRecord::Removed { index, .. } => {
                if let Some(slot) = slots.get_mut(*index) {
                    *slot = None;
                }
            }
            ChangeRecord::TextChanged { index, to, .. } => {
                if let Some(Some(cue)) = slots.get_mut(*index) {
                    cue.text = to.clone();
                }
            }
            ChangeRecord::Retimed { index, to_start, to_end, .. } => {
                if let Some(Some(cue)) = slots.get_mut(*index) {
                    cue.start = *to_start;
                    cue.end = *to_end;
                }
            }
        }
    }
    // Survivors keep their relative order; additions go to their recorded positions.
    let mut cues: Vec<Cue> = slots.into_iter().flatten().collect();
    added.sort_by_key(|(idx, _)| *idx);
    for (idx, cue) in added {
        let pos = idx.min(cues.len());
        cues.insert(pos, cue);
    }
    AdScript { cues, video_duration: old.video_duration }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> AdScript {
        AdScript::new(vec![
            Cue::from_secs(2, 7, "A man wakes up."),
            Cue::from_secs(9, 12, "He sits up."),
            Cue::from_secs(20, 24, "Faces follow him."),
        ])
    }

    #[test]
    fn identical_scripts_have_no_changes() {
        assert!(diff(&base(), &base()).is_empty());
    }

    #[test]
    fn single_insert_is_one_added_record() {
        let mut new = base();
        new.cues.insert(2, Cue::from_secs(14, 17, "Slippers."));
        let d = diff(&base(), &new);
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0], ChangeRecord::Added { new_index: 2, .. }));
        assert_eq!(apply_diff(&base(), &d), new);
    }

    #[test]
    fn text_and_timing_changes() {
        let mut new = base();
        new.cues[0].text = "Tom wakes up.".into();
        new.cues[1].end = TimeCode::from_secs(13);
        new.cues.remove(2);
        let d = diff(&base(), &new);
        assert_eq!(d.len(), 3);
        assert!(matches!(d[0], ChangeRecord::TextChanged { index: 0, .. }));
        assert!(matches!(d[1], ChangeRecord::Retimed { index: 1, .. }));
        assert!(matches!(d[2], ChangeRecord::Removed { index: 2, .. }));
        assert_eq!(apply_diff(&base(), &d), new);
    }
}
