//! Headless access to the engine: validate scripts, find gaps, generate,
//! plan narration and replay logs. Every subcommand prints a report and
//! exits 0 on success, 1 on a domain failure and 2 on bad usage or input.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use adscribe_core::agent::replay::{read_log, replay, ReplayHeader, ReplayRecord};
use adscribe_core::agent::{
    parse_response, AgentConfig, AgentEvent, ModelClient, Orchestrator, ParseOptions, ScriptedClient,
};
use adscribe_core::audio::{write_wav16, AudioTrack};
use adscribe_core::gaps::{detect_silence, eligible_gaps, scaffold, Gap, SilenceConfig, DEFAULT_MIN_GAP_MS};
use adscribe_core::narration::{
    render_track, MixPlan, SilentSpeechBackend, SpeechBackend, SpeechRateModel, ToneSpeechBackend,
};
use adscribe_core::script::{parse_script, validate, Violation};
use adscribe_core::session::{SessionState, StepClock};
use adscribe_core::{AdScript, TimeCode};
use adscribe_service::config::{ModelConfig, ServiceConfig};
use adscribe_service::model_client::HttpModelClient;
use adscribe_service::replay::{read_project_log, replay_project_log};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub const DEFAULT_COMMAND: &str = "Generate descriptions for this video with time stamps.";

#[derive(Debug, Parser)]
#[command(name = "adscribe", version, about = "Audio-description script tools")]
pub struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a script against the timing and wording rules.
    Validate {
        file: PathBuf,
        /// Length of the video, for the duration rule.
        #[arg(long)]
        duration_ms: Option<u64>,
    },
    /// Find silent stretches in a WAV soundtrack.
    Gaps {
        audio: PathBuf,
        #[command(flatten)]
        silence: SilenceArgs,
        /// Only report gaps clear of this script's cues.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Produce a starting script for a video.
    Generate {
        video_ref: String,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        /// Recorded transcript to answer in place of a live model.
        #[arg(long)]
        mock: Option<PathBuf>,
        /// Soundtrack for `--mode gaps`; defaults to the video ref when it is a WAV.
        #[arg(long)]
        audio: Option<PathBuf>,
        #[arg(long)]
        duration_ms: Option<u64>,
        #[arg(long, default_value = DEFAULT_COMMAND)]
        command: String,
        #[command(flatten)]
        silence: SilenceArgs,
        /// Write the script here instead of printing it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plan narration speed for every cue, optionally writing the clips.
    Narrate {
        script: PathBuf,
        #[arg(long, value_enum, default_value_t = Backend::Test)]
        backend: Backend,
        #[arg(long, default_value_t = 100.0)]
        wpm: f64,
        #[arg(long, default_value_t = 2.0)]
        max_rate: f64,
        /// Directory for one WAV per narrated cue.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-run a transcript or project log and report what it reconstructs.
    Replay {
        log: PathBuf,
        #[arg(long, value_enum, default_value_t = LogFormat::Auto)]
        format: LogFormat,
        /// Video for a project log, which records neither.
        #[arg(long, default_value = "replay")]
        video_ref: String,
        #[arg(long)]
        duration_ms: Option<u64>,
        /// Write the reconstructed script here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SilenceArgs {
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    pub threshold_db: f64,
    #[arg(long, default_value_t = 50)]
    pub window_ms: u64,
    #[arg(long, default_value_t = 200)]
    pub merge_ms: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_GAP_MS)]
    pub min_gap_ms: u64,
}

impl SilenceArgs {
    fn config(&self) -> SilenceConfig {
        SilenceConfig {
            window_ms: self.window_ms,
            threshold_db: self.threshold_db,
            merge_tolerance_ms: self.merge_ms,
            min_gap_ms: self.min_gap_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Gaps,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    /// Silence lasting the modelled reading time.
    Test,
    /// A sine tone instead of silence.
    Tone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogFormat {
    Auto,
    Transcript,
    Project,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable input. Exit 2.
    Usage(String),
    /// The input was read but the operation failed. Exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => m,
        }
    }
}

/// A finished subcommand: its JSON report, a plain-text rendering and whether
/// it counts as a domain failure.
#[derive(Debug)]
pub struct Report {
    pub ok: bool,
    pub json: Value,
    pub text: String,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Validate { file, duration_ms } => validate_cmd(file, *duration_ms),
        Command::Gaps { audio, silence, script } => gaps_cmd(audio, silence, script.as_deref()),
        Command::Generate { video_ref, mode, mock, audio, duration_ms, command, silence, output } => {
            let report =
                generate_cmd(video_ref, *mode, mock.as_deref(), audio.as_deref(), *duration_ms, command, silence)?;
            finish_with_script(report, output.as_deref())
        }
        Command::Narrate { script, backend, wpm, max_rate, out_dir } => {
            narrate_cmd(script, *backend, *wpm, *max_rate, out_dir.as_deref())
        }
        Command::Replay { log, format, video_ref, duration_ms, output } => {
            let report = replay_cmd(log, *format, video_ref, *duration_ms)?;
            finish_with_script(report, output.as_deref())
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_script(path: &Path) -> Result<AdScript, CliError> {
    let text = read_text(path)?;
    parse_script(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        CliError::Failed(format!("{}: {}", path.display(), lines.join("; ")))
    })
}

fn read_audio(path: &Path) -> Result<AudioTrack, CliError> {
    AudioTrack::read_wav(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Writes the report's `script` to `output` when given; otherwise the text
/// rendering of the report is the script itself.
fn finish_with_script(mut report: Report, output: Option<&Path>) -> Result<Report, CliError> {
    if let Some(path) = output {
        let script = report.json["script"].as_str().unwrap_or_default();
        let body = if script.is_empty() { String::new() } else { format!("{script}\n") };
        std::fs::write(path, body).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        report.json["output"] = json!(path.display().to_string());
        report.text = format!("wrote {}\n", path.display());
    }
    Ok(report)
}

fn violation_lines(violations: &[Violation]) -> String {
    violations.iter().map(|v| format!("{v}\n")).collect()
}

fn validate_cmd(file: &Path, duration_ms: Option<u64>) -> Result<Report, CliError> {
    let text = read_text(file)?;
    match parse_script(&text) {
        Err(errors) => {
            let text = errors.iter().map(|e| format!("{e}\n")).collect();
            Ok(Report { ok: false, json: json!({ "ok": false, "parseErrors": errors, "violations": [] }), text })
        }
        Ok(mut script) => {
            if let Some(ms) = duration_ms {
                script = script.with_duration(TimeCode::from_millis(ms));
            }
            let violations = validate(&script);
            let ok = !violations.iter().any(Violation::is_error);
            let mut text = violation_lines(&violations);
            if ok {
                text.push_str(&format!("ok: {} cues\n", script.len()));
            }
            Ok(Report {
                ok,
                json: json!({ "ok": ok, "cues": script.len(), "parseErrors": [], "violations": violations }),
                text,
            })
        }
    }
}

fn gap_lines(gaps: &[Gap]) -> String {
    gaps.iter().map(|g| format!("{}-{} ms ({} ms)\n", g.start.as_millis(), g.end.as_millis(), g.len_ms())).collect()
}

fn gaps_cmd(audio: &Path, silence: &SilenceArgs, script: Option<&Path>) -> Result<Report, CliError> {
    let config = silence.config();
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let track = read_audio(audio)?;
    let script = match script {
        Some(p) => read_script(p)?,
        None => AdScript::default(),
    };
    let silences = detect_silence(&track, &config).map_err(|e| CliError::Failed(e.to_string()))?;
    let gaps = eligible_gaps(&silences, &script, &config);
    Ok(Report {
        ok: true,
        text: gap_lines(&gaps),
        json: json!({ "durationMs": track.duration_ms(), "config": config, "silences": silences, "gaps": gaps }),
    })
}

/// The first recorded reply that carries a script, with its repair reply.
fn first_script_reply(records: &[(usize, ReplayRecord)]) -> Option<(String, Option<String>)> {
    let lenient = ParseOptions { allow_repairable: true, ..ParseOptions::default() };
    records.iter().find_map(|(_, r)| match r {
        ReplayRecord::Exchange(ex) => {
            let carries = |raw: &str| {
                parse_response(raw, lenient)
                    .is_ok_and(|resp| resp.did_change_script && !resp.new_script.trim().is_empty())
            };
            let hit = carries(&ex.raw_response) || ex.repair_response.as_deref().is_some_and(carries);
            hit.then(|| (ex.raw_response.clone(), ex.repair_response.clone()))
        }
        _ => None,
    })
}

fn transcript_header(records: &[(usize, ReplayRecord)]) -> Option<ReplayHeader> {
    match records.first() {
        Some((_, ReplayRecord::Header { session })) => Some(session.clone()),
        _ => None,
    }
}

fn generate_cmd(
    video_ref: &str,
    mode: Mode,
    mock: Option<&Path>,
    audio: Option<&Path>,
    duration_ms: Option<u64>,
    command: &str,
    silence: &SilenceArgs,
) -> Result<Report, CliError> {
    let script_report = |mode: &str, script: &AdScript, extra: Value| {
        let text = script.serialize();
        let mut json = json!({ "mode": mode, "cues": script.len(), "script": text });
        if let (Value::Object(into), Value::Object(from)) = (&mut json, extra) {
            into.extend(from);
        }
        Report { ok: true, text: if text.is_empty() { text } else { format!("{text}\n") }, json }
    };
    match mode {
        Mode::None => Ok(script_report("none", &AdScript::default(), json!({}))),
        Mode::Gaps => {
            let source = match audio {
                Some(p) => p.to_path_buf(),
                None if video_ref.to_ascii_lowercase().ends_with(".wav") => PathBuf::from(video_ref),
                None => return Err(CliError::Usage("--mode gaps needs --audio <wav> for a non-WAV video".into())),
            };
            let config = silence.config();
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let track = read_audio(&source)?;
            let silences = detect_silence(&track, &config).map_err(|e| CliError::Failed(e.to_string()))?;
            let gaps = eligible_gaps(&silences, &AdScript::default(), &config);
            let script = scaffold(&gaps).with_duration(TimeCode::from_millis(track.duration_ms()));
            Ok(script_report("gaps", &script, json!({ "gaps": gaps })))
        }
        Mode::Full => {
            let env = ServiceConfig::from_env().map_err(CliError::Usage)?.model;
            let mock = mock.map(Path::to_path_buf).or(match &env {
                ModelConfig::Mock(path) => Some(path.clone()),
                _ => None,
            });
            let (client, header): (Box<dyn ModelClient>, Option<ReplayHeader>) = match (mock, env) {
                (Some(path), _) => {
                    let records = read_transcript(&path)?;
                    let (raw, repair) = first_script_reply(&records)
                        .ok_or_else(|| CliError::Failed(format!("{} has no reply with a script", path.display())))?;
                    let client = ScriptedClient::new(std::iter::once(raw).chain(repair));
                    (Box::new(client), transcript_header(&records))
                }
                (None, ModelConfig::Http(http)) => (Box::new(HttpModelClient::new(http)), None),
                (None, _) => {
                    return Err(CliError::Usage("no model: pass --mock <transcript> or set ADSCRIBE_MODEL_URL".into()))
                }
            };
            let duration = duration_ms
                .or(header.as_ref().map(|h| h.video_duration_ms))
                .ok_or_else(|| CliError::Usage("--duration-ms is required".into()))?;
            let state = SessionState::new(video_ref, TimeCode::from_millis(duration))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let config = AgentConfig::default();
            let clock = StepClock::new(0, 1);
            let outcome = Orchestrator::new(client.as_ref(), &config, &clock)
                .run_command(command, &state)
                .map_err(|f| CliError::Failed(format!("{}: {}", f.error.code(), f.error)))?;
            let script = outcome.state.pending_suggestion.clone().unwrap_or(outcome.state.script.clone());
            let repaired: Vec<usize> = outcome
                .events
                .iter()
                .flat_map(|e| match e {
                    AgentEvent::ScriptReplaced { repaired, .. } => repaired.clone(),
                    _ => Vec::new(),
                })
                .collect();
            Ok(script_report("full", &script, json!({ "textResponse": outcome.text_response(), "repaired": repaired })))
        }
    }
}

fn narrate_cmd(
    path: &Path,
    backend: Backend,
    wpm: f64,
    max_rate: f64,
    out_dir: Option<&Path>,
) -> Result<Report, CliError> {
    let model = SpeechRateModel::new(wpm, max_rate).map_err(|e| CliError::Usage(e.to_string()))?;
    let script = read_script(path)?;
    let backend: Box<dyn SpeechBackend> = match backend {
        Backend::Test => Box::new(SilentSpeechBackend { model }),
        Backend::Tone => Box::new(ToneSpeechBackend { model, ..ToneSpeechBackend::default() }),
    };
    let mix = MixPlan::default();
    let timeline =
        render_track(&script, backend.as_ref(), &mix, &model).map_err(|e| CliError::Failed(e.to_string()))?;

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
        for clip in &timeline.clips {
            if let Some(audio) = &clip.audio {
                let file = dir.join(format!("cue-{:03}.wav", clip.cue_index));
                write_wav16(&file, &audio.samples, audio.sample_rate, 1)
                    .map_err(|e| CliError::Failed(format!("{}: {e}", file.display())))?;
                files.push(file.display().to_string());
            }
        }
    }

    let unfit: Vec<usize> = timeline.unfit().map(|p| p.cue_index).collect();
    let mut text = String::new();
    for plan in &timeline.plans {
        text.push_str(&format!(
            "cue {}: needs {} ms in {} ms, rate {:.2}{}\n",
            plan.cue_index,
            plan.required_ms,
            plan.slot_ms,
            plan.rate_factor,
            if plan.fits { "" } else { " (does not fit)" }
        ));
    }
    for plan in timeline.unfit() {
        text.push_str(&format!(
            "cue {} does not fit: needs {:.2}x, max {:.2}x\n",
            plan.cue_index,
            plan.needed_rate(),
            model.max_rate_factor
        ));
    }
    Ok(Report {
        ok: unfit.is_empty(),
        json: json!({
            "plans": timeline.plans,
            "clips": timeline.clips,
            "skipped": timeline.skipped,
            "unfit": unfit,
            "files": files,
        }),
        text,
    })
}

fn read_transcript(path: &Path) -> Result<Vec<(usize, ReplayRecord)>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    read_log(BufReader::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Project logs are sequences of `{seq, wallClockTime, kind, payload}`.
fn looks_like_project_log(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .and_then(|l| serde_json::from_str::<Value>(l).ok())
        .is_some_and(|v| v.get("seq").is_some() && v.get("kind").is_some())
}

fn replay_cmd(path: &Path, format: LogFormat, video_ref: &str, duration_ms: Option<u64>) -> Result<Report, CliError> {
    let text = read_text(path)?;
    let project = match format {
        LogFormat::Project => true,
        LogFormat::Transcript => false,
        LogFormat::Auto => looks_like_project_log(&text),
    };
    let config = AgentConfig::default();
    if project {
        let duration =
            duration_ms.ok_or_else(|| CliError::Usage("--duration-ms is required for project logs".into()))?;
        let entries = read_project_log(text.as_bytes()).map_err(|e| CliError::Usage(e.to_string()))?;
        let result = replay_project_log(video_ref, TimeCode::from_millis(duration), &entries, &config)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        let mut text: String =
            result.divergences.iter().map(|d| format!("divergence at seq {}: {}\n", d.seq, d.detail)).collect();
        text.push_str(&format!(
            "{} commands, {} incongruent, {} failed, {} revisions\n",
            result.commands,
            result.incongruent,
            result.failures,
            result.revisions.len()
        ));
        let mut json = serde_json::to_value(&result).map_err(|e| CliError::Failed(e.to_string()))?;
        json["format"] = json!("project");
        json["script"] = json!(result.final_script);
        return Ok(Report { ok: result.is_consistent(), json, text });
    }

    let records = adscribe_core::agent::replay::parse_log(&text).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = replay(&records, &config).map_err(|e| CliError::Failed(e.to_string()))?;
    let m = &report.metrics;
    let mut out: String =
        report.divergences.iter().map(|d| format!("divergence at line {}: {}\n", d.line, d.detail)).collect();
    out.push_str(&format!(
        "{} responses, {} incongruent, {} VQA errors, {} flagged ({:.1}%), {} failed\n",
        m.responses,
        m.incongruent,
        m.vqa_errors,
        m.incongruent + m.vqa_errors,
        m.flagged_rate * 100.0,
        m.failures
    ));
    let script = report.final_script.serialize();
    Ok(Report {
        ok: report.is_consistent(),
        json: json!({
            "format": "transcript",
            "script": script,
            "cues": report.final_script.len(),
            "metrics": report.metrics,
            "divergences": report.divergences,
            "exchanges": report.exchanges,
        }),
        text: out,
    })
}
