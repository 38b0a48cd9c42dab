//! Core engine for authoring timed audio-description scripts.

pub mod agent;
pub mod announce;
pub mod audio;
pub mod gaps;
pub mod narration;
pub mod script;
pub mod session;
pub mod testkit;
pub mod time;

pub use script::{AdScript, Cue};
pub use time::TimeCode;
