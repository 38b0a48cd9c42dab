//! Millisecond time codes and the human-readable "X min Y sec" form.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A non-negative offset from the start of a video, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeCode(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed timestamp {0:?}")]
pub struct TimeCodeParseError(pub String);

static TIMESTAMP_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?ix)^
        (?:(?P<min>\d+)\s*(?:minutes?|mins?|m)\b\.?\s*)?
        (?:(?P<sec>\d+(?:\.\d{1,3})?)\s*(?:seconds?|secs?|s)\b)?
        \s*\.?$",
    )
    .expect("timestamp regex")
});

impl TimeCode {
    pub const ZERO: TimeCode = TimeCode(0);

    pub const fn from_millis(ms: u64) -> Self {
        TimeCode(ms)
    }

    pub const fn from_secs(secs: u64) -> Self {
        TimeCode(secs * 1000)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Whole seconds, rounded half-up.
    pub const fn rounded_secs(self) -> u64 {
        (self.0 + 500) / 1000
    }

    pub fn saturating_sub(self, other: TimeCode) -> TimeCode {
        TimeCode(self.0.saturating_sub(other.0))
    }

    /// Signed difference `self - other` in milliseconds.
    pub fn delta_ms(self, other: TimeCode) -> i64 {
        self.0 as i64 - other.0 as i64
    }

    /// Parses one timestamp such as `1 min 21 sec`, `2 min 50 s`, `8 sec` or `0 mins 12.5 secs`.
    pub fn parse_human(text: &str) -> Result<Self, TimeCodeParseError> {
        let trimmed = text.trim();
        let caps = TIMESTAMP_RE.captures(trimmed).ok_or_else(|| TimeCodeParseError(trimmed.to_string()))?;
        let min = caps.name("min");
        let sec = caps.name("sec");
        if min.is_none() && sec.is_none() {
            return Err(TimeCodeParseError(trimmed.to_string()));
        }
        let minutes: u64 = match min {
            Some(m) => m.as_str().parse().map_err(|_| TimeCodeParseError(trimmed.to_string()))?,
            None => 0,
        };
        let millis = match sec {
            Some(s) => parse_decimal_millis(s.as_str()).ok_or_else(|| TimeCodeParseError(trimmed.to_string()))?,
            None => 0,
        };
        minutes
            .checked_mul(60_000)
            .and_then(|m| m.checked_add(millis))
            .map(TimeCode)
            .ok_or_else(|| TimeCodeParseError(trimmed.to_string()))
    }

    /// Canonical `X min Y sec`, rounded to the nearest whole second.
    pub fn to_human(self) -> String {
        let total = self.rounded_secs();
        format!("{} min {} sec", total / 60, total % 60)
    }

    /// Spoken form: `N seconds` below one minute, otherwise `X min Y sec`.
    pub fn to_spoken(self) -> String {
        let total = self.rounded_secs();
        match total {
            1 => "1 second".to_string(),
            t if t < 60 => format!("{t} seconds"),
            _ => self.to_human(),
        }
    }
}

fn parse_decimal_millis(s: &str) -> Option<u64> {
    let (whole, frac) = match s.split_once('.') {
        Some((w, f)) => (w, f),
        None => (s, ""),
    };
    let whole: u64 = whole.parse().ok()?;
    let mut frac_ms = 0u64;
    let mut scale = 100u64;
    for c in frac.chars() {
        frac_ms += c.to_digit(10)? as u64 * scale;
        scale /= 10;
    }
    whole.checked_mul(1000)?.checked_add(frac_ms)
}

impl fmt::Display for TimeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_human())
    }
}

impl FromStr for TimeCode {
    type Err = TimeCodeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeCode::parse_human(s)
    }
}

impl Add<u64> for TimeCode {
    type Output = TimeCode;

    fn add(self, ms: u64) -> TimeCode {
        TimeCode(self.0 + ms)
    }
}

impl Sub for TimeCode {
    type Output = u64;

    /// Saturating difference in milliseconds.
    fn sub(self, other: TimeCode) -> u64 {
        self.0.saturating_sub(other.0)
    }
}
