//! Acceptance gate. Runs each criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

mod common;

use std::fs::File;
use std::io::BufReader;
use std::process::{Command, ExitCode};
use std::time::Instant;

use adscribe_core::agent::replay::{read_log, replay, ReplayRecord};
use adscribe_core::agent::{AgentConfig, AgentEvent, AgentResponse, Orchestrator, ScriptedClient, APPLY_STAGES};
use adscribe_core::audio::{sine, AudioTrack};
use adscribe_core::gaps::{detect_silence, eligible_gaps, SilenceConfig};
use adscribe_core::narration::{export_video, plan_cue, MixPlan, NativeWavMixer, SpeechRateModel, ToneSpeechBackend};
use adscribe_core::script::{parse_script, validate, word_budget, ChangeRecord, Location, Rule};
use adscribe_core::session::{SessionState, StepClock};
use adscribe_core::testkit::{gap_cases, script_corpus, transcript_path};
use adscribe_core::{AdScript, Cue, TimeCode};
use adscribe_service::replay::{read_project_log, replay_project_log};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use regex::Regex;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. Format round-trip

/// Canonical text built without the crate's parser.
fn normalize(doc: &str) -> String {
    let ts = Regex::new(
        r"(?i)^\[?\s*(?:(\d+)\s*(?:minutes?|mins?|m)\.?\s*)?(\d+)\s*(?:seconds?|secs?|s)\.?\s*(?:to|-|–|-->)\s*(?:(\d+)\s*(?:minutes?|mins?|m)\.?\s*)?(\d+)\s*(?:seconds?|secs?|s)\.?\s*\]?$",
    )
    .unwrap();
    let spell = |m: Option<regex::Match>, s: regex::Match| {
        let total = m.map_or(0, |m| m.as_str().parse::<u64>().unwrap() * 60) + s.as_str().parse::<u64>().unwrap();
        format!("{} min {} sec", total / 60, total % 60)
    };
    let mut segments: Vec<String> = Vec::new();
    for line in doc.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match ts.captures(line) {
            Some(c) => segments.push(format!(
                "{} to {}",
                spell(c.get(1), c.get(2).unwrap()),
                spell(c.get(3), c.get(4).unwrap())
            )),
            None => {
                let last = segments.last_mut().expect("text follows a timestamp");
                last.push('\n');
                last.push_str(line);
            }
        }
    }
    segments.join("\n\n")
}

fn format_round_trip() -> Outcome {
    let corpus = script_corpus().map_err(|e| e.to_string())?;
    check(corpus.len() >= 20, || format!("corpus has {} documents", corpus.len()))?;
    let expected: Vec<String> = corpus.iter().map(|(_, d)| normalize(d)).collect();
    let started = Instant::now();
    for ((name, doc), want) in corpus.iter().zip(&expected) {
        let parsed = parse_script(doc).map_err(|e| format!("{name}: {e:?}"))?;
        check(&parsed.serialize() == want, || format!("{name} does not round-trip"))?;
    }
    let elapsed = started.elapsed();
    check(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("{} documents in {:.1} ms", corpus.len(), elapsed.as_secs_f64() * 1e3))
}

// 2. Rule enforcement

fn clean_script(rng: &mut StdRng) -> AdScript {
    let mut t = 0;
    let cues: Vec<Cue> = (0..rng.random_range(2..8))
        .map(|_| {
            let start = t + rng.random_range(2..10);
            t = start + rng.random_range(2..8);
            Cue::from_secs(start, t, vec!["word"; rng.random_range(1..6)].join(" "))
        })
        .collect();
    AdScript::new(cues).with_duration(TimeCode::from_secs(t + 5))
}

/// Breaks exactly `rule` once; returns where.
fn inject(rng: &mut StdRng, script: &mut AdScript, rule: Rule) -> Location {
    let n = script.cues.len();
    let i = rng.random_range(0..n);
    let p = rng.random_range(0..n - 1);
    let cues = &mut script.cues;
    let ms = TimeCode::from_millis;
    match rule {
        Rule::MinGap => {
            let next = cues[p + 1].start.as_millis();
            cues[p].end = ms(next - rng.random_range(1..1_000));
            Location::Pair(p, p + 1)
        }
        Rule::Overlap => {
            let (s, e) = (cues[p + 1].start.as_millis(), cues[p + 1].end.as_millis());
            cues[p].end = ms(rng.random_range(s + 1..e));
            Location::Pair(p, p + 1)
        }
        Rule::DurationExceeded => {
            script.video_duration = Some(ms(cues[n - 1].end.as_millis() - rng.random_range(1..500)));
            Location::Cue(n - 1)
        }
        Rule::EmptyText => {
            cues[i].text = ["", " ", "\t"][rng.random_range(0..3)].into();
            Location::Cue(i)
        }
        Rule::WordBudget => {
            // Three words per second of slot.
            let budget = cues[i].slot_ms() * 3 / 1000;
            cues[i].text = vec!["word"; budget as usize + rng.random_range(1..6)].join(" ");
            Location::Cue(i)
        }
        Rule::Unsorted => {
            cues[p + 1].start = cues[p].start;
            Location::Pair(p, p + 1)
        }
        Rule::MalformedTimestamp => {
            cues[i].end = ms(cues[i].start.as_millis().saturating_sub(rng.random_range(0..2_000)));
            Location::Cue(i)
        }
    }
}

fn rule_enforcement() -> Outcome {
    let doc = "0 min 53 sec to 0 min 57 sec\nA framed photo rests on the shelf.\n\n0 min 57 sec to 1 min 0 sec\nThe screen fades to black.";
    let v = validate(&parse_script(doc).map_err(|e| format!("{e:?}"))?);
    check(v.len() == 1 && v[0].rule == Rule::MinGap, || format!("counterexample gave {v:?}"))?;

    let mut rng = StdRng::seed_from_u64(0xAD5C);
    let runs = 1_400;
    for run in 0..runs {
        let mut script = clean_script(&mut rng);
        check(validate(&script).is_empty(), || format!("run {run}: generator produced a dirty script"))?;
        let rule = Rule::ALL[run % Rule::ALL.len()];
        let at = inject(&mut rng, &mut script, rule);
        let v = validate(&script);
        check(v.len() == 1 && v[0].rule == rule && v[0].location == at, || {
            format!("run {run}: injected {rule:?} at {at:?}, got {v:?}")
        })?;
    }
    Ok(format!("counterexample -> 1 MIN_GAP; {runs}/{runs} fuzz runs exact"))
}

// 3. Word budget

fn word_budget_examples() -> Outcome {
    let three = word_budget(TimeCode::from_secs(3)).map_err(|e| format!("{e:?}"))?;
    let one = word_budget(TimeCode::from_secs(1)).map_err(|e| format!("{e:?}"))?;
    check((three, one) == (9, 3), || format!("got {three} and {one}"))?;
    Ok("3 s -> 9, 1 s -> 3".into())
}

// 4. Gap detection

fn gap_detection() -> Outcome {
    let cases = gap_cases();
    check(cases.len() == 10, || format!("{} fixtures", cases.len()))?;
    let tracks: Vec<_> = cases.iter().map(|c| c.render()).collect();
    let config = SilenceConfig::default();
    let started = Instant::now();
    let mut worst = 0u64;
    for (case, track) in cases.iter().zip(&tracks) {
        let found = detect_silence(track, &config).map_err(|e| e.to_string())?;
        let truth = case.truth();
        check(found.len() == truth.len(), || format!("{}: found {found:?}, expected {truth:?}", case.name))?;
        for (f, t) in found.iter().zip(&truth) {
            let err =
                f.start.as_millis().abs_diff(t.start.as_millis()).max(f.end.as_millis().abs_diff(t.end.as_millis()));
            worst = worst.max(err);
            check(err <= 50, || format!("{}: {f:?} vs {t:?}", case.name))?;
        }
        let eligible = eligible_gaps(&found, &AdScript::default(), &config);
        let long_truth = truth.iter().filter(|g| g.len_ms() >= 3_000).count();
        check(eligible.iter().all(|g| g.len_ms() >= 3_000) && eligible.len() == long_truth, || {
            format!("{}: eligible {eligible:?}", case.name)
        })?;
    }
    let elapsed = started.elapsed();
    check(elapsed.as_secs_f64() < 5.0, || format!("took {elapsed:?}"))?;
    Ok(format!("10 fixtures, worst boundary error {worst} ms, {:.0} ms total", elapsed.as_secs_f64() * 1e3))
}

// 5. Agent replay

fn transcript(name: &str) -> Result<Vec<(usize, ReplayRecord)>, String> {
    let file = File::open(transcript_path(name)).map_err(|e| e.to_string())?;
    read_log(BufReader::new(file)).map_err(|e| e.to_string())
}

fn agent_replay() -> Outcome {
    let config = AgentConfig::default();
    let clara = replay(&transcript("clara_session.jsonl")?, &config).map_err(|e| e.to_string())?;
    check(clara.is_consistent(), || format!("clara diverged: {:?}", clara.divergences))?;
    let slipper = clara.final_script.cues.iter().find(|c| c.text.to_lowercase().contains("slipper"));
    check(slipper.is_some_and(|c| (c.start, c.end) == (TimeCode::from_secs(8), TimeCode::from_secs(12))), || {
        format!("slipper cue: {slipper:?}")
    })?;

    let rename = replay(&transcript("rename_session.jsonl")?, &config).map_err(|e| e.to_string())?;
    let text_changed = rename
        .exchanges
        .last()
        .into_iter()
        .flat_map(|x| &x.events)
        .filter_map(|e| match e {
            AgentEvent::ScriptReplaced { changes, .. } => Some(changes),
            _ => None,
        })
        .flatten()
        .filter(|c| matches!(c, ChangeRecord::TextChanged { .. }))
        .count();
    check(text_changed == 6, || format!("rename produced {text_changed} text changes"))?;

    let out = Command::new(env!("CARGO_BIN_EXE_adscribe"))
        .args(["--json", "replay"])
        .arg(transcript_path("labeled_corpus.jsonl"))
        .output()
        .map_err(|e| e.to_string())?;
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let m = &json["metrics"];
    let (responses, incongruent, vqa_errors) =
        (m["responses"].as_u64(), m["incongruent"].as_u64(), m["vqaErrors"].as_u64());
    check((responses, incongruent, vqa_errors) == (Some(202), Some(18), Some(4)), || format!("metrics {m}"))?;
    let rate = format!("{:.1}", m["flaggedRate"].as_f64().unwrap_or(0.0) * 100.0);
    check(rate == "10.9", || format!("flagged rate {rate}%"))?;
    Ok(format!("slipper cue at 8-12 s; 6 text changes; 18 + 4 = 22/202 = {rate}%"))
}

// 6. Atomicity

fn random_state(rng: &mut StdRng) -> SessionState {
    let duration_s = rng.random_range(30..200);
    let script = common::random_script(rng, duration_s);
    let mut state = SessionState::new("file://clip.mp4", TimeCode::from_secs(duration_s)).unwrap().with_script(script);
    state.playhead = TimeCode::from_millis(rng.random_range(0..duration_s * 1000));
    state.current_line = rng.random_range(1..=state.max_line());
    state.ask_only = rng.random_bool(0.2);
    state
}

fn atomicity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xA70);
    let config = AgentConfig::default();
    let clock = StepClock::new(1, 1);
    let trials = 600;
    let mut kinds = [0usize; 3];
    for trial in 0..trials {
        let pre = random_state(&mut rng);
        let duration_s = pre.video_duration.as_millis() / 1000;
        let good = AgentResponse::text_only("cmd", "Done.")
            .with_timestamp(rng.random_range(0..duration_s))
            .with_script(common::random_script(&mut rng, duration_s).serialize())
            .with_line(rng.random_range(1..20));
        let json = good.to_json();
        let kind = trial % 3;
        kinds[kind] += 1;
        let (replies, abort_at) = match kind {
            0 => {
                let cut = rng.random_range(1..json.len());
                (vec![json[..cut].to_string(), "I'd rather not answer in JSON.".to_string()], None)
            }
            1 => {
                let mut bad = good.clone();
                bad.new_script = ["0 min 9 sec to 0 min 4 sec\nBackwards.", "later\nNo timestamp."]
                    [rng.random_range(0..2)]
                .to_string();
                (vec![bad.to_json(), bad.to_json()], None)
            }
            _ => (vec![json], Some(APPLY_STAGES[rng.random_range(0..APPLY_STAGES.len())])),
        };
        let client = ScriptedClient::new(replies);
        let result = Orchestrator::new(&client, &config, &clock)
            .run_command_with("cmd", &pre, &mut |stage| Some(stage) != abort_at);
        let failure = match result {
            Err(f) => f,
            Ok(_) => return Err(format!("trial {trial}: fault kind {kind} was accepted")),
        };
        check(failure.state.same_except_history(&pre), || format!("trial {trial}: state changed"))?;
    }
    Ok(format!(
        "{trials} trials ({} malformed JSON, {} invalid NewScript, {} mid-apply aborts), 100% unchanged",
        kinds[0], kinds[1], kinds[2]
    ))
}

// 7. Narration fit

fn narration_fit() -> Outcome {
    let m = SpeechRateModel::default();
    let ten = "one two three four five six seven eight nine ten";
    for (slot, rate, fits) in [(6, 1.0, true), (4, 1.5, true), (2, 2.0, false)] {
        let p = plan_cue(0, &Cue::from_secs(0, slot, ten), &m);
        check(p.rate_factor == rate && p.fits == fits, || format!("{slot} s slot: {p:?}"))?;
    }
    let mut rng = StdRng::seed_from_u64(0xF17);
    let mut base_cases = 0;
    for _ in 0..10_000 {
        let words = rng.random_range(1..60usize);
        let slot = rng.random_range(1..40_000u64);
        // 100 words per minute is 600 ms per word.
        let base_ms = words as u64 * 600;
        let p = plan_cue(0, &Cue::new(TimeCode::ZERO, TimeCode::from_millis(slot), vec!["w"; words].join(" ")), &m);
        if base_ms <= slot {
            base_cases += 1;
            check(p.rate_factor == 1.0, || format!("{words} words in {slot} ms: {p:?}"))?;
        }
    }
    Ok(format!("1.0 / 1.5 / 2.0 (no fit); 10000 pairs, {base_cases} at base rate"))
}

// 8. Mix correctness

fn band_rms(samples: &[f32], freq: f64, rate: u32) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq / rate as f64;
    let coeff = 2.0 * w.cos();
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for &x in samples {
        let s0 = x as f64 + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    (2.0 * (s1 * s1 + s2 * s2 - coeff * s1 * s2)).sqrt() / samples.len() as f64
}

fn mix_correctness() -> Outcome {
    const RATE: u32 = 16_000;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (source, output) = (dir.path().join("source.wav"), dir.path().join("mixed.wav"));
    let track = AudioTrack::mono(sine(440.0, 0.5, 12_000, RATE), RATE).map_err(|e| e.to_string())?;
    track.write_wav16(&source).map_err(|e| e.to_string())?;
    let script = AdScript::new(vec![Cue::from_secs(3, 7, "A kettle starts to boil.")]);
    let mix = MixPlan::default();
    let report = export_video(
        &NativeWavMixer,
        &source,
        &output,
        &script,
        true,
        &ToneSpeechBackend::default(),
        &mix,
        &SpeechRateModel::default(),
    )
    .map_err(|e| e.to_string())?;
    let out = AudioTrack::read_wav(&output).map_err(|e| e.to_string())?;
    let span = |t: &AudioTrack, a: u64, b: u64| t.downmix()[(a * 16) as usize..(b * 16) as usize].to_vec();
    // Narration runs 3.0-6.0 s; measure inside the ramps.
    let ratio = band_rms(&span(&out, 3_200, 5_800), 440.0, RATE) / band_rms(&span(&track, 3_200, 5_800), 440.0, RATE);
    let (got, want) = (20.0 * ratio.log10(), 20.0 * mix.ducking_level.log10());
    check((got - want).abs() <= 1.0, || format!("ducked {got:.2} dB, want {want:.2} dB"))?;
    let drift = out.duration_ms().abs_diff(track.duration_ms());
    check(drift <= 100, || format!("duration drift {drift} ms"))?;
    check(!report.passthrough, || "export skipped the narration".into())?;
    Ok(format!("ducked band {got:.2} dB (target {want:.2} +/- 1), duration drift {drift} ms"))
}

// 9. Replay determinism

fn replay_determinism() -> Outcome {
    let sessions = 100;
    let mut entries_total = 0;
    for seed in 0..sessions {
        let rec = common::record_session(1_000 + seed, 60 + seed % 90);
        let entries = read_project_log(rec.archive.as_bytes()).map_err(|e| e.to_string())?;
        entries_total += entries.len();
        let result =
            replay_project_log(&rec.project.video_ref, rec.project.video_duration, &entries, &AgentConfig::default())
                .map_err(|e| format!("seed {seed}: {e}"))?;
        check(result.is_consistent(), || format!("seed {seed}: {:?}", result.divergences))?;
        check(result.final_script.as_bytes() == rec.project.current().script.as_bytes(), || {
            format!("seed {seed}: final script differs")
        })?;
        let numbered = |r: &[adscribe_service::project::Revision]| -> Vec<(u64, String)> {
            r.iter().map(|r| (r.number, r.script.clone())).collect()
        };
        check(numbered(&result.revisions) == numbered(&rec.project.revisions), || {
            format!("seed {seed}: revision history differs")
        })?;
    }
    Ok(format!("{sessions} recorded projects, {entries_total} log entries, all final revisions byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("format round-trip", format_round_trip),
        ("rule enforcement", rule_enforcement),
        ("word budget", word_budget_examples),
        ("gap detection", gap_detection),
        ("agent replay", agent_replay),
        ("atomicity", atomicity),
        ("narration fit", narration_fit),
        ("mix correctness", mix_correctness),
        ("replay determinism", replay_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
