//! Silence detection over an audio track and the describable-gap scaffold
//! derived from it.
//!
//! Silence is judged per fixed analysis window by RMS energy. Adjacent silent
//! runs separated by a short non-silent interruption are merged, and the
//! resulting intervals are then reduced to the regions an existing script
//! does not already occupy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{frames_to_ms, AudioTrack};
use crate::script::{AdScript, Cue, MIN_CUE_GAP_MS, PLACEHOLDER_TEXT};
use crate::time::TimeCode;

/// Shortest gap worth describing.
pub const DEFAULT_MIN_GAP_MS: u64 = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SilenceConfig {
    pub window_ms: u64,
    pub threshold_db: f64,
    pub merge_tolerance_ms: u64,
    pub min_gap_ms: u64,
}

impl Default for SilenceConfig {
    fn default() -> Self {
        SilenceConfig { window_ms: 50, threshold_db: -40.0, merge_tolerance_ms: 200, min_gap_ms: DEFAULT_MIN_GAP_MS }
    }
}

impl SilenceConfig {
    pub fn validate(&self) -> Result<(), GapError> {
        if self.window_ms == 0 {
            return Err(GapError::InvalidConfig("windowMs must be positive".into()));
        }
        if !self.threshold_db.is_finite() {
            return Err(GapError::InvalidConfig("thresholdDb must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GapError {
    #[error("audio track is empty")]
    EmptyTrack,
    #[error("invalid silence config: {0}")]
    InvalidConfig(String),
}

/// A half-open interval `[start, end)` on the video timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Gap {
    #[serde(rename = "startMs")]
    pub start: TimeCode,
    #[serde(rename = "endMs")]
    pub end: TimeCode,
}

impl Gap {
    pub fn from_millis(start: u64, end: u64) -> Self {
        Gap { start: TimeCode::from_millis(start), end: TimeCode::from_millis(end) }
    }

    pub fn len_ms(&self) -> u64 {
        self.end - self.start
    }
}

/// Finds maximal silent intervals: runs of windows whose RMS is at or below
/// the threshold, with interruptions of at most `merge_tolerance_ms` absorbed.
pub fn detect_silence(track: &AudioTrack, config: &SilenceConfig) -> Result<Vec<Gap>, GapError> {
    config.validate()?;
    let mono = track.downmix();
    if mono.is_empty() {
        return Err(GapError::EmptyTrack);
    }
    let rate = track.sample_rate();
    let window = ((config.window_ms as u128 * rate as u128 + 500) / 1000).max(1) as usize;
    let threshold = config.threshold_db;

    // Silent runs as frame ranges.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (w, chunk) in mono.chunks(window).enumerate() {
        let sum: f64 = chunk.iter().map(|&s| s as f64 * s as f64).sum();
        let rms = (sum / chunk.len() as f64).sqrt();
        let silent = 20.0 * rms.log10() <= threshold;
        if !silent {
            continue;
        }
        let start = w * window;
        let end = start + chunk.len();
        match runs.last_mut() {
            Some(last) if last.1 == start => last.1 = end,
            _ => runs.push((start, end)),
        }
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(last) if frames_to_ms(run.0 - last.1, rate) <= config.merge_tolerance_ms => {
                last.1 = run.1;
            }
            _ => merged.push(run),
        }
    }

    Ok(merged
        .into_iter()
        .map(|(s, e)| Gap::from_millis(frames_to_ms(s, rate), frames_to_ms(e, rate)))
        // A trailing partial window can round to nothing.
        .filter(|g| g.start < g.end)
        .collect())
}

/// Removes the parts of `intervals` that existing cues occupy (each cue padded
/// by the minimum segment spacing on both sides) and keeps what remains if it
/// is at least `min_gap_ms` long.
pub fn eligible_gaps(intervals: &[Gap], script: &AdScript, config: &SilenceConfig) -> Vec<Gap> {
    let blocked: Vec<(u64, u64)> = script
        .cues
        .iter()
        .map(|c| (c.start.as_millis().saturating_sub(MIN_CUE_GAP_MS), c.end.as_millis() + MIN_CUE_GAP_MS))
        .collect();

    let mut out = Vec::new();
    for interval in intervals {
        let mut pieces = vec![(interval.start.as_millis(), interval.end.as_millis())];
        for &(bs, be) in &blocked {
            pieces = pieces
                .into_iter()
                .flat_map(|(s, e)| {
                    let mut keep = Vec::with_capacity(2);
                    if be <= s || bs >= e {
                        keep.push((s, e));
                    } else {
                        if bs > s {
                            keep.push((s, bs));
                        }
                        if be < e {
                            keep.push((be, e));
                        }
                    }
                    keep
                })
                .collect();
        }
        out.extend(pieces.into_iter().filter(|(s, e)| e - s >= config.min_gap_ms).map(|(s, e)| Gap::from_millis(s, e)));
    }
    out.sort();
    out
}

/// Builds a placeholder script with one cue per gap. A cue that would start
/// less than the minimum spacing after the previous cue is pushed later; a
/// gap left with no room is dropped.
pub fn scaffold(gaps: &[Gap]) -> AdScript {
    let mut cues: Vec<Cue> = Vec::with_capacity(gaps.len());
    for gap in gaps {
        let mut start = gap.start;
        if let Some(prev) = cues.last() {
            let earliest = prev.end + MIN_CUE_GAP_MS;
            if start < earliest {
                start = earliest;
            }
        }
        if start < gap.end {
            cues.push(Cue::new(start, gap.end, PLACEHOLDER_TEXT));
        }
    }
    AdScript::new(cues)
}
