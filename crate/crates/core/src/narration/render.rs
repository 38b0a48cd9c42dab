use serde::{Deserialize, Serialize};

use super::{plan_cue, CuePlan, NarrationError, SpeechBackend, SpeechClip, SpeechRateModel};
use crate::audio::ms_to_frames;
use crate::script::{word_count, AdScript, Cue};
use crate::session::SessionState;
use crate::time::TimeCode;

/// Gains shared by preview and export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MixPlan {
    /// Gain applied to the original soundtrack while narration plays.
    pub ducking_level: f64,
    pub narration_gain: f64,
    pub ramp_ms: u64,
    pub voice: String,
}

impl Default for MixPlan {
    fn default() -> Self {
        MixPlan { ducking_level: 0.2, narration_gain: 0.8, ramp_ms: 100, voice: "default".into() }
    }
}

impl MixPlan {
    pub fn validate(&self) -> Result<(), NarrationError> {
        for (name, g) in [("duckingLevel", self.ducking_level), ("narrationGain", self.narration_gain)] {
            if !(0.0..=1.0).contains(&g) {
                return Err(NarrationError::InvalidMix(format!("{name} {g} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnvelopePoint {
    pub at_ms: u64,
    pub gain: f64,
}

/// Piecewise-linear gain for the original soundtrack; 1.0 outside all points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GainEnvelope {
    pub points: Vec<EnvelopePoint>,
}

impl GainEnvelope {
    pub fn is_flat(&self) -> bool {
        self.points.iter().all(|p| p.gain == 1.0)
    }

    pub fn gain_at(&self, at_ms: f64) -> f64 {
        let pts = &self.points;
        match pts.iter().position(|p| p.at_ms as f64 > at_ms) {
            None => pts.last().map_or(1.0, |p| p.gain),
            Some(0) => 1.0,
            Some(i) => {
                let (a, b) = (pts[i - 1], pts[i]);
                let span = (b.at_ms - a.at_ms) as f64;
                let t = (at_ms - a.at_ms as f64) / span;
                a.gain + (b.gain - a.gain) * t
            }
        }
    }

    /// Ducks over each span, ramping down before it and back up after it.
    /// Spans whose ramps would meet are joined.
    pub fn ducking(spans: &[(u64, u64)], level: f64, ramp_ms: u64) -> Self {
        let mut joined: Vec<(u64, u64)> = Vec::new();
        for &(s, e) in spans {
            match joined.last_mut() {
                Some(last) if s.saturating_sub(ramp_ms) <= last.1 + ramp_ms => last.1 = last.1.max(e),
                _ => joined.push((s, e)),
            }
        }
        let mut points = Vec::new();
        for (s, e) in joined {
            if s >= ramp_ms && ramp_ms > 0 {
                points.push(EnvelopePoint { at_ms: s - ramp_ms, gain: 1.0 });
            }
            points.push(EnvelopePoint { at_ms: s, gain: level });
            points.push(EnvelopePoint { at_ms: e, gain: level });
            if ramp_ms > 0 {
                points.push(EnvelopePoint { at_ms: e + ramp_ms, gain: 1.0 });
            }
        }
        points.dedup_by(|b, a| a.at_ms == b.at_ms && a.gain == b.gain);
        GainEnvelope { points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimelineClip {
    pub cue_index: usize,
    #[serde(rename = "offsetMs")]
    pub offset: TimeCode,
    pub duration_ms: u64,
    pub rate_factor: f64,
    pub fits: bool,
    /// Cut short so it does not run into the next cue.
    pub truncated: bool,
    #[serde(skip)]
    pub audio: Option<SpeechClip>,
}

impl TimelineClip {
    pub fn end_ms(&self) -> u64 {
        self.offset.as_millis() + self.duration_ms
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timeline {
    pub clips: Vec<TimelineClip>,
    pub envelope: GainEnvelope,
    pub plans: Vec<CuePlan>,
    /// Cues with nothing to narrate (placeholders).
    pub skipped: Vec<usize>,
}

impl Timeline {
    pub fn unfit(&self) -> impl Iterator<Item = &CuePlan> {
        self.plans.iter().filter(|p| !p.fits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Annotation {
    #[serde(rename_all = "camelCase")]
    DoesNotFit { needed_rate: f64, max_rate: f64 },
}

/// What the player should do to preview one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaybackDirective {
    pub cue_index: usize,
    #[serde(rename = "videoStartMs")]
    pub video_start: TimeCode,
    #[serde(rename = "videoEndMs")]
    pub video_end: TimeCode,
    #[serde(rename = "narrationOffsetMs")]
    pub narration_offset: TimeCode,
    pub clip_duration_ms: u64,
    pub rate_factor: f64,
    pub plan: CuePlan,
    pub ducking_level: f64,
    pub narration_gain: f64,
    pub annotations: Vec<Annotation>,
    #[serde(skip)]
    pub clip: Option<SpeechClip>,
}

fn narratable(cue: &Cue) -> bool {
    !cue.is_placeholder() && word_count(&cue.text) > 0
}

/// Synthesizes at the planned rate; if the clip comes back longer than the
/// slot, re-rates from the measured length and synthesizes once more.
pub fn synthesize_fitted(
    cue: &Cue,
    plan: &CuePlan,
    backend: &dyn SpeechBackend,
    model: &SpeechRateModel,
    voice: &str,
) -> Result<(SpeechClip, f64), NarrationError> {
    let mut rate = plan.rate_factor;
    let clip = backend.synthesize(&cue.text, rate, voice)?;
    let measured = clip.duration_ms();
    if measured > plan.slot_ms && rate < model.max_rate_factor && plan.slot_ms > 0 {
        rate = (rate * measured as f64 / plan.slot_ms as f64).min(model.max_rate_factor);
        let again = backend.synthesize(&cue.text, rate, voice)?;
        return Ok((again, rate));
    }
    Ok((clip, rate))
}

/// Plays one line's narration over its stretch of video.
pub fn preview_line(
    cue_index: usize,
    state: &SessionState,
    backend: &dyn SpeechBackend,
    mix: &MixPlan,
    model: &SpeechRateModel,
) -> Result<PlaybackDirective, NarrationError> {
    mix.validate()?;
    let cue = state.script.cues.get(cue_index).ok_or(NarrationError::CueNotFound(cue_index))?;
    if !narratable(cue) {
        return Err(NarrationError::EmptyNarration(cue_index));
    }
    let plan = plan_cue(cue_index, cue, model);
    let (clip, rate) = synthesize_fitted(cue, &plan, backend, model, &mix.voice)?;
    let mut annotations = Vec::new();
    if !plan.fits {
        annotations.push(Annotation::DoesNotFit { needed_rate: plan.needed_rate(), max_rate: model.max_rate_factor });
    }
    let clip_duration_ms = clip.duration_ms();
    let video_end = TimeCode::from_millis(
        (cue.start.as_millis() + clip_duration_ms)
            .max(cue.end.as_millis())
            .min(state.video_duration.as_millis().max(cue.end.as_millis())),
    );
    Ok(PlaybackDirective {
        cue_index,
        video_start: cue.start,
        video_end,
        narration_offset: cue.start,
        clip_duration_ms,
        rate_factor: rate,
        plan,
        ducking_level: mix.ducking_level,
        narration_gain: mix.narration_gain,
        annotations,
        clip: Some(clip),
    })
}

/// Synthesizes every narratable cue and lays the clips out at their cue starts,
/// with a ducking envelope covering each clip.
pub fn render_track(
    script: &AdScript,
    backend: &dyn SpeechBackend,
    mix: &MixPlan,
    model: &SpeechRateModel,
) -> Result<Timeline, NarrationError> {
    mix.validate()?;
    let mut timeline = Timeline::default();
    for (i, cue) in script.cues.iter().enumerate() {
        if !narratable(cue) {
            timeline.skipped.push(i);
            continue;
        }
        let plan = plan_cue(i, cue, model);
        timeline.plans.push(plan);
        let (mut clip, rate) = synthesize_fitted(cue, &plan, backend, model, &mix.voice)?;

        let mut truncated = false;
        if let Some(next) = script.cues.get(i + 1) {
            let room = next.start - cue.start;
            if clip.duration_ms() > room {
                clip.samples.truncate(ms_to_frames(room, clip.sample_rate));
                truncated = true;
            }
        }
        timeline.clips.push(TimelineClip {
            cue_index: i,
            offset: cue.start,
            duration_ms: clip.duration_ms(),
            rate_factor: rate,
            fits: plan.fits,
            truncated,
            audio: Some(clip),
        });
    }
    let spans: Vec<(u64, u64)> = timeline.clips.iter().map(|c| (c.offset.as_millis(), c.end_ms())).collect();
    timeline.envelope = GainEnvelope::ducking(&spans, mix.ducking_level, mix.ramp_ms);
    Ok(timeline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::narration::SilentSpeechBackend;

    #[test]
    fn envelope_shape() {
        let env = GainEnvelope::ducking(&[(2_000, 3_000)], 0.2, 100);
        assert_eq!(env.gain_at(0.0), 1.0);
        assert_eq!(env.gain_at(1_900.0), 1.0);
        assert!((env.gain_at(1_950.0) - 0.6).abs() < 1e-9);
        assert_eq!(env.gain_at(2_000.0), 0.2);
        assert_eq!(env.gain_at(2_999.0), 0.2);
        assert!((env.gain_at(3_050.0) - 0.6).abs() < 1e-9);
        assert_eq!(env.gain_at(3_100.0), 1.0);
        assert_eq!(env.gain_at(9_000.0), 1.0);
    }

    #[test]
    fn close_spans_join() {
        let env = GainEnvelope::ducking(&[(1_000, 2_000), (2_150, 3_000)], 0.2, 100);
        assert_eq!(env.gain_at(2_100.0), 0.2);
    }

    #[test]
    fn clip_at_zero_has_no_leading_ramp() {
        let env = GainEnvelope::ducking(&[(0, 1_000)], 0.5, 100);
        assert_eq!(env.points[0], EnvelopePoint { at_ms: 0, gain: 0.5 });
    }

    #[test]
    fn empty_script_renders_flat() {
        let t = render_track(
            &AdScript::default(),
            &SilentSpeechBackend::default(),
            &MixPlan::default(),
            &SpeechRateModel::default(),
        )
        .unwrap();
        assert!(t.clips.is_empty());
        assert!(t.envelope.is_flat());
    }

    #[test]
    fn placeholders_are_skipped() {
        let script = AdScript::new(vec![Cue::from_secs(1, 4, "[describe]"), Cue::from_secs(6, 9, "A dog.")]);
        let t =
            render_track(&script, &SilentSpeechBackend::default(), &MixPlan::default(), &SpeechRateModel::default())
                .unwrap();
        assert_eq!(t.skipped, vec![0]);
        assert_eq!(t.clips.len(), 1);
        assert_eq!(t.clips[0].offset, TimeCode::from_secs(6));
    }

    #[test]
    fn preview_errors() {
        let state = SessionState::new("v", TimeCode::from_secs(30))
            .unwrap()
            .with_script(AdScript::new(vec![Cue::from_secs(1, 4, "[describe]")]));
        let b = SilentSpeechBackend::default();
        let (mix, model) = (MixPlan::default(), SpeechRateModel::default());
        assert_eq!(preview_line(0, &state, &b, &mix, &model), Err(NarrationError::EmptyNarration(0)));
        assert_eq!(preview_line(3, &state, &b, &mix, &model), Err(NarrationError::CueNotFound(3)));
    }
}
