//! Spoken status strings for screen-reader users.

use serde::{Deserialize, Serialize};

use crate::script::{ChangeRecord, Cue};
use crate::time::TimeCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PlaybackKind {
    Paused,
    Resumed,
    JumpedBack,
    JumpedForward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaybackEvent {
    pub kind: PlaybackKind,
    #[serde(rename = "playheadMs")]
    pub playhead: TimeCode,
}

pub fn announce_playback(event: &PlaybackEvent) -> String {
    let at = event.playhead.to_spoken();
    match event.kind {
        PlaybackKind::Paused => format!("Paused at {at}"),
        PlaybackKind::Resumed => format!("Playing from {at}"),
        PlaybackKind::JumpedBack => format!("Back to {at}"),
        PlaybackKind::JumpedForward => format!("Forward to {at}"),
    }
}

/// Start, end and length of a cue, as read while moving through the script.
pub fn announce_cue_timing(cue: &Cue) -> String {
    format!("{} to {}, {}", cue.start.to_human(), cue.end.to_human(), TimeCode::from_millis(cue.slot_ms()).to_spoken())
}

/// One-sentence summary of a set of script changes.
pub fn announce_changes(records: &[ChangeRecord]) -> String {
    if records.is_empty() {
        return "No changes to the script".to_string();
    }
    let mut added = 0;
    let mut removed = 0;
    let mut edited = 0;
    let mut retimed = 0;
    for r in records {
        match r {
            ChangeRecord::Added { .. } => added += 1,
            ChangeRecord::Removed { .. } => removed += 1,
            ChangeRecord::TextChanged { .. } => edited += 1,
            ChangeRecord::Retimed { .. } => retimed += 1,
        }
    }
    let parts: Vec<String> = [(added, "added"), (removed, "removed"), (edited, "edited"), (retimed, "retimed")]
        .into_iter()
        .filter(|(n, _)| *n > 0)
        .map(|(n, what)| format!("{n} {} {what}", if n == 1 { "line" } else { "lines" }))
        .collect();
    format!("Script updated: {}", parts.join(", "))
}
