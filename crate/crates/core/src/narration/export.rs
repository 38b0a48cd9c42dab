use std::fs::File;
use std::io::{BufReader, ErrorKind};
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{render_track, GainEnvelope, MixPlan, NarrationError, SpeechBackend, SpeechRateModel, Timeline};
use crate::audio::{frames_to_ms, ms_to_frames, resample_linear, write_wav16, AudioError, AudioTrack};
use crate::script::{validate, AdScript, Violation};

/// Largest allowed difference between source and exported durations.
pub const DURATION_TOLERANCE_MS: u64 = 100;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("script has blocking violations")]
    InvalidScript(Vec<Violation>),
    #[error("{0} is not installed or not on PATH")]
    ToolMissing(String),
    #[error("{tool} failed: {detail}")]
    ToolFailed { tool: String, detail: String },
    #[error("exported duration {output_ms} ms differs from source {source_ms} ms")]
    DurationMismatch { source_ms: u64, output_ms: u64 },
    #[error(transparent)]
    Narration(#[from] NarrationError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything a media tool needs to lay narration over the source.
pub struct MixRequest<'a> {
    pub source: &'a Path,
    pub output: &'a Path,
    pub timeline: &'a Timeline,
    pub mix: &'a MixPlan,
}

pub trait MediaTool: Send + Sync {
    fn name(&self) -> &str;
    fn probe_duration_ms(&self, path: &Path) -> Result<u64, ExportError>;
    /// Copies the source unchanged.
    fn passthrough(&self, source: &Path, output: &Path) -> Result<(), ExportError>;
    fn mix(&self, request: &MixRequest<'_>) -> Result<(), ExportError>;
}

/// In-process mixer for WAV sources. The soundtrack is scaled by the ducking
/// envelope, narration clips are resampled to the source rate and summed in on
/// every channel, and the result is written as 16-bit WAV.
#[derive(Debug, Default, Clone, Copy)]
pub struct NativeWavMixer;

impl NativeWavMixer {
    pub fn mix_samples(track: &AudioTrack, timeline: &Timeline, mix: &MixPlan) -> Vec<f32> {
        let rate = track.sample_rate();
        let channels = track.channels() as usize;
        let mut out = track.samples().to_vec();
        if !timeline.envelope.points.is_empty() {
            for (frame, chunk) in out.chunks_mut(channels).enumerate() {
                let g = timeline.envelope.gain_at(frame as f64 * 1000.0 / rate as f64) as f32;
                chunk.iter_mut().for_each(|s| *s *= g);
            }
        }
        let frames = track.frames();
        let gain = mix.narration_gain as f32;
        for clip in &timeline.clips {
            let Some(audio) = &clip.audio else { continue };
            let samples = resample_linear(&audio.samples, audio.sample_rate, rate);
            let start = ms_to_frames(clip.offset.as_millis(), rate);
            for (i, &s) in samples.iter().enumerate() {
                let frame = start + i;
                if frame >= frames {
                    break;
                }
                for c in 0..channels {
                    out[frame * channels + c] += gain * s;
                }
            }
        }
        out
    }
}

impl MediaTool for NativeWavMixer {
    fn name(&self) -> &str {
        "native-wav"
    }

    fn probe_duration_ms(&self, path: &Path) -> Result<u64, ExportError> {
        let reader = hound::WavReader::new(BufReader::new(File::open(path)?)).map_err(AudioError::from)?;
        Ok(frames_to_ms(reader.duration() as usize, reader.spec().sample_rate))
    }

    fn passthrough(&self, source: &Path, output: &Path) -> Result<(), ExportError> {
        std::fs::copy(source, output)?;
        Ok(())
    }

    fn mix(&self, request: &MixRequest<'_>) -> Result<(), ExportError> {
        let track = AudioTrack::read_wav(request.source)?;
        let mixed = Self::mix_samples(&track, request.timeline, request.mix);
        write_wav16(request.output, &mixed, track.sample_rate(), track.channels())?;
        Ok(())
    }
}

/// Drives the `ffmpeg` and `ffprobe` executables.
#[derive(Debug, Clone)]
pub struct FfmpegTool {
    pub ffmpeg: PathBuf,
    pub ffprobe: PathBuf,
}

impl Default for FfmpegTool {
    fn default() -> Self {
        FfmpegTool { ffmpeg: "ffmpeg".into(), ffprobe: "ffprobe".into() }
    }
}

fn run(program: &Path, args: &[String]) -> Result<String, ExportError> {
    let name = program.display().to_string();
    let output = Command::new(program).args(args).output().map_err(|e| match e.kind() {
        ErrorKind::NotFound => ExportError::ToolMissing(name.clone()),
        _ => ExportError::Io(e),
    })?;
    if !output.status.success() {
        return Err(ExportError::ToolFailed {
            tool: name,
            detail: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&output.stdout).into_owned())
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// The envelope as an ffmpeg `volume` expression of `t` in seconds.
pub fn volume_expression(envelope: &GainEnvelope) -> String {
    let pts = &envelope.points;
    let Some(last) = pts.last() else { return "1".into() };
    let mut expr = fmt_num(last.gain);
    for i in (0..pts.len()).rev() {
        let p = pts[i];
        let t = fmt_num(p.at_ms as f64 / 1000.0);
        let before = if i == 0 {
            "1".to_string()
        } else {
            let a = pts[i - 1];
            if a.gain == p.gain {
                fmt_num(a.gain)
            } else {
                let span = (p.at_ms - a.at_ms) as f64 / 1000.0;
                format!(
                    "{}+({})*(t-{})/{}",
                    fmt_num(a.gain),
                    fmt_num(p.gain - a.gain),
                    fmt_num(a.at_ms as f64 / 1000.0),
                    fmt_num(span)
                )
            }
        };
        expr = format!("if(lt(t,{t}),{before},{expr})");
    }
    expr
}

/// Arguments for one ffmpeg run mixing pre-rendered clip files over the source.
/// Clip `i` in `clip_files` belongs to `timeline.clips[i]`.
pub fn build_ffmpeg_mix_args(request: &MixRequest<'_>, clip_files: &[PathBuf]) -> Vec<String> {
    let mut args: Vec<String> = vec!["-y".into(), "-i".into(), request.source.display().to_string()];
    for f in clip_files {
        args.push("-i".into());
        args.push(f.display().to_string());
    }
    let mut graph = format!("[0:a]volume='{}':eval=frame[bg]", volume_expression(&request.timeline.envelope));
    let mut labels = String::from("[bg]");
    for (i, clip) in request.timeline.clips.iter().enumerate().take(clip_files.len()) {
        let delay = clip.offset.as_millis();
        graph.push_str(&format!(
            ";[{}:a]adelay={delay}:all=1,volume={}[n{i}]",
            i + 1,
            fmt_num(request.mix.narration_gain)
        ));
        labels.push_str(&format!("[n{i}]"));
    }
    graph.push_str(&format!(";{labels}amix=inputs={}:normalize=0:duration=first[aout]", clip_files.len() + 1));
    args.extend(["-filter_complex", &graph, "-map", "0:v?", "-map", "[aout]", "-c:v", "copy"].map(String::from));
    args.push(request.output.display().to_string());
    args
}

impl MediaTool for FfmpegTool {
    fn name(&self) -> &str {
        "ffmpeg"
    }

    fn probe_duration_ms(&self, path: &Path) -> Result<u64, ExportError> {
        let args: Vec<String> = ["-v", "error", "-show_entries", "format=duration", "-of", "csv=p=0"]
            .map(String::from)
            .into_iter()
            .chain([path.display().to_string()])
            .collect();
        let out = run(&self.ffprobe, &args)?;
        let secs: f64 = out.trim().parse().map_err(|_| ExportError::ToolFailed {
            tool: "ffprobe".into(),
            detail: format!("unexpected duration output {:?}", out.trim()),
        })?;
        Ok((secs * 1000.0).round() as u64)
    }

    fn passthrough(&self, source: &Path, output: &Path) -> Result<(), ExportError> {
        let args = ["-y", "-i"]
            .map(String::from)
            .into_iter()
            .chain([source.display().to_string(), "-c".into(), "copy".into(), output.display().to_string()])
            .collect::<Vec<_>>();
        run(&self.ffmpeg, &args).map(|_| ())
    }

    fn mix(&self, request: &MixRequest<'_>) -> Result<(), ExportError> {
        let dir = tempfile::tempdir()?;
        let mut files = Vec::new();
        for (i, clip) in request.timeline.clips.iter().enumerate() {
            let Some(audio) = &clip.audio else { continue };
            let path = dir.path().join(format!("clip{i}.wav"));
            write_wav16(&path, &audio.samples, audio.sample_rate, 1)?;
            files.push(path);
        }
        run(&self.ffmpeg, &build_ffmpeg_mix_args(request, &files)).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportReport {
    pub output: PathBuf,
    pub tool: String,
    /// True when the source was copied without narration.
    pub passthrough: bool,
    pub source_duration_ms: u64,
    pub output_duration_ms: u64,
    pub clips: usize,
    pub unfit: Vec<usize>,
    pub truncated: Vec<usize>,
    pub skipped: Vec<usize>,
}

/// Renders narration for `script` and writes a copy of `source` with it mixed
/// in. With the narration track disabled, or nothing to narrate, the source is
/// passed through untouched.
#[allow(clippy::too_many_arguments)]
pub fn export_video(
    tool: &dyn MediaTool,
    source: &Path,
    output: &Path,
    script: &AdScript,
    ad_track_enabled: bool,
    backend: &dyn SpeechBackend,
    mix: &MixPlan,
    model: &SpeechRateModel,
) -> Result<ExportReport, ExportError> {
    let blocking: Vec<Violation> = validate(script).into_iter().filter(Violation::is_error).collect();
    if !blocking.is_empty() {
        return Err(ExportError::InvalidScript(blocking));
    }
    let source_ms = tool.probe_duration_ms(source)?;
    let timeline = if ad_track_enabled { render_track(script, backend, mix, model)? } else { Timeline::default() };
    let passthrough = timeline.clips.is_empty();
    if passthrough {
        tool.passthrough(source, output)?;
    } else {
        tool.mix(&MixRequest { source, output, timeline: &timeline, mix })?;
    }
    let output_ms = tool.probe_duration_ms(output)?;
    if source_ms.abs_diff(output_ms) > DURATION_TOLERANCE_MS {
        return Err(ExportError::DurationMismatch { source_ms, output_ms });
    }
    Ok(ExportReport {
        output: output.to_path_buf(),
        tool: tool.name().to_string(),
        passthrough,
        source_duration_ms: source_ms,
        output_duration_ms: output_ms,
        clips: timeline.clips.len(),
        unfit: timeline.unfit().map(|p| p.cue_index).collect(),
        truncated: timeline.clips.iter().filter(|c| c.truncated).map(|c| c.cue_index).collect(),
        skipped: timeline.skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_volume_expression() {
        assert_eq!(volume_expression(&GainEnvelope::default()), "1");
    }

    #[test]
    fn volume_expression_follows_envelope() {
        let env = GainEnvelope::ducking(&[(2_000, 3_000)], 0.2, 100);
        let expr = volume_expression(&env);
        assert_eq!(
            expr,
            "if(lt(t,1.9),1,if(lt(t,2),1+(-0.8)*(t-1.9)/0.1,if(lt(t,3),0.2,if(lt(t,3.1),0.2+(0.8)*(t-3)/0.1,1))))"
        );
    }

    #[test]
    fn ffmpeg_args_shape() {
        let timeline = Timeline {
            clips: vec![crate::narration::TimelineClip {
                cue_index: 0,
                offset: crate::TimeCode::from_secs(16),
                duration_ms: 1_200,
                rate_factor: 1.0,
                fits: true,
                truncated: false,
                audio: None,
            }],
            ..Default::default()
        };
        let mix = MixPlan::default();
        let req =
            MixRequest { source: Path::new("in.mp4"), output: Path::new("out.mp4"), timeline: &timeline, mix: &mix };
        let args = build_ffmpeg_mix_args(&req, &[PathBuf::from("c0.wav")]);
        let graph = &args[args.iter().position(|a| a == "-filter_complex").unwrap() + 1];
        assert!(graph.contains("[1:a]adelay=16000:all=1,volume=0.8[n0]"));
        assert!(graph.ends_with("[bg][n0]amix=inputs=2:normalize=0:duration=first[aout]"));
        assert_eq!(args.last().unwrap(), "out.mp4");
    }

    #[test]
    fn missing_tool_is_reported() {
        let tool = FfmpegTool { ffmpeg: "/nonexistent/ffmpeg".into(), ffprobe: "/nonexistent/ffprobe".into() };
        match tool.probe_duration_ms(Path::new("x.mp4")) {
            Err(ExportError::ToolMissing(name)) => assert!(name.contains("ffprobe")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
