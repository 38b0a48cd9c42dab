//! Bundled fixtures: the script corpus, mock-model transcripts and synthetic
//! gap-detection cases. Shared by the test suites of every crate.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::audio::{ms_to_frames, AudioTrack};
use crate::gaps::Gap;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn transcript_path(name: &str) -> PathBuf {
    fixtures_dir().join("transcripts").join(name)
}

/// `(file name, contents)` for every document in the script corpus, by name.
pub fn script_corpus() -> std::io::Result<Vec<(String, String)>> {
    let mut docs = Vec::new();
    for entry in std::fs::read_dir(fixtures_dir().join("scripts"))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            docs.push((name, std::fs::read_to_string(&path)?));
        }
    }
    docs.sort();
    Ok(docs)
}

fn default_tone() -> f32 {
    0.5
}

/// A synthetic soundtrack: a 440 Hz tone everywhere except the listed silences.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GapCase {
    pub name: String,
    pub duration_ms: u64,
    pub sample_rate: u32,
    pub channels: u16,
    pub silences: Vec<(u64, u64)>,
    #[serde(default = "default_tone")]
    pub tone_amplitude: f32,
    /// Low 100 Hz hum left in the silences; zero means digital silence.
    #[serde(default)]
    pub floor_amplitude: f32,
}

impl GapCase {
    pub fn truth(&self) -> Vec<Gap> {
        self.silences.iter().map(|&(s, e)| Gap::from_millis(s, e)).collect()
    }

    pub fn render(&self) -> AudioTrack {
        let rate = self.sample_rate;
        let frames = ms_to_frames(self.duration_ms, rate);
        let bounds: Vec<(usize, usize)> =
            self.silences.iter().map(|&(s, e)| (ms_to_frames(s, rate), ms_to_frames(e, rate))).collect();
        let mut samples = Vec::with_capacity(frames * self.channels as usize);
        for i in 0..frames {
            let t = i as f64 / rate as f64;
            let silent = bounds.iter().any(|&(s, e)| i >= s && i < e);
            let v = if silent {
                self.floor_amplitude * (2.0 * std::f64::consts::PI * 100.0 * t).sin() as f32
            } else {
                self.tone_amplitude * (2.0 * std::f64::consts::PI * 440.0 * t).sin() as f32
            };
            samples.extend(std::iter::repeat_n(v, self.channels as usize));
        }
        AudioTrack::new(samples, rate, self.channels).expect("fixture parameters are valid")
    }
}

pub fn gap_cases() -> Vec<GapCase> {
    let text = std::fs::read_to_string(fixtures_dir().join("gaps").join("cases.json")).expect("gap cases readable");
    serde_json::from_str(&text).expect("gap cases parse")
}
