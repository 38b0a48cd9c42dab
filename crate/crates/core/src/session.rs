//! Per-video authoring state that the agent sees and edits.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::script::AdScript;
use crate::time::TimeCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConversationTurn {
    pub role: Role,
    pub text: String,
    /// Milliseconds since the Unix epoch.
    pub wall_clock_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("video duration must be positive")]
    ZeroDuration,
    #[error("playhead {playhead} is past the end of the video ({duration})")]
    PlayheadOutOfRange { playhead: TimeCode, duration: TimeCode },
    #[error("current line {line} is past the end of the script ({max})")]
    LineOutOfRange { line: usize, max: usize },
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Advances by a fixed step on every reading. For tests and replays.
#[derive(Debug)]
pub struct StepClock {
    next: AtomicU64,
    step: u64,
}

impl StepClock {
    pub fn new(start_ms: u64, step_ms: u64) -> Self {
        StepClock { next: AtomicU64::new(start_ms), step: step_ms }
    }
}

impl Clock for StepClock {
    fn now_ms(&self) -> u64 {
        self.next.fetch_add(self.step, Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub video_ref: String,
    #[serde(rename = "videoDurationMs")]
    pub video_duration: TimeCode,
    #[serde(rename = "playheadMs")]
    pub playhead: TimeCode,
    /// 1-based line in the serialized script, blank lines counted.
    pub current_line: usize,
    pub script: AdScript,
    pub history: Vec<ConversationTurn>,
    pub ad_track_enabled: bool,
    /// When set, agent script changes are held as a pending suggestion.
    #[serde(default)]
    pub ask_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_suggestion: Option<AdScript>,
}

impl SessionState {
    pub fn new(video_ref: impl Into<String>, video_duration: TimeCode) -> Result<Self, SessionError> {
        if video_duration == TimeCode::ZERO {
            return Err(SessionError::ZeroDuration);
        }
        Ok(SessionState {
            video_ref: video_ref.into(),
            video_duration,
            playhead: TimeCode::ZERO,
            current_line: 1,
            script: AdScript::default().with_duration(video_duration),
            history: Vec::new(),
            ad_track_enabled: false,
            ask_only: false,
            pending_suggestion: None,
        })
    }

    pub fn with_script(mut self, script: AdScript) -> Self {
        self.script = script.with_duration(self.video_duration);
        self
    }

    /// Highest valid `current_line` for the current script.
    pub fn max_line(&self) -> usize {
        self.script.line_count().max(1)
    }

    pub fn check_invariants(&self) -> Result<(), SessionError> {
        if self.video_duration == TimeCode::ZERO {
            return Err(SessionError::ZeroDuration);
        }
        if self.playhead > self.video_duration {
            return Err(SessionError::PlayheadOutOfRange { playhead: self.playhead, duration: self.video_duration });
        }
        if self.current_line == 0 || self.current_line > self.max_line() {
            return Err(SessionError::LineOutOfRange { line: self.current_line, max: self.max_line() });
        }
        Ok(())
    }

    /// Appends a turn, keeping wall-clock times strictly increasing.
    pub fn push_turn(&mut self, role: Role, text: impl Into<String>, clock: &dyn Clock) {
        let mut text = text.into();
        if text.trim().is_empty() {
            text = "(no response)".into();
        }
        let now = clock.now_ms();
        let wall_clock_time = match self.history.last() {
            Some(last) if now <= last.wall_clock_time => last.wall_clock_time + 1,
            _ => now,
        };
        self.history.push(ConversationTurn { role, text, wall_clock_time });
    }

    /// Equality ignoring conversation history.
    pub fn same_except_history(&self, other: &SessionState) -> bool {
        self.video_ref == other.video_ref
            && self.video_duration == other.video_duration
            && self.playhead == other.playhead
            && self.current_line == other.current_line
            && self.script == other.script
            && self.ad_track_enabled == other.ad_track_enabled
            && self.ask_only == other.ask_only
            && self.pending_suggestion == other.pending_suggestion
    }
}
