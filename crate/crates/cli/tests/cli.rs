mod common;

use std::path::Path;
use std::process::Command;

use adscribe_core::agent::replay::{read_log, ReplayRecord};
use adscribe_core::audio::{sine, AudioTrack};
use adscribe_core::script::{parse_script, validate};
use adscribe_core::testkit::{fixtures_dir, gap_cases, transcript_path};
use adscribe_service::replay::{read_project_log, replay_project_log};
use serde_json::Value;

fn adscribe(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_adscribe")).arg("--json").args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

fn fixture(rel: &str) -> String {
    fixtures_dir().join(rel).display().to_string()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn validate_exit_codes() {
    let (code, json, _) = adscribe(&["validate", &fixture("scripts/01_fox_example.txt")]);
    assert_eq!((code, &json["ok"]), (0, &Value::Bool(true)));

    let (code, json, _) = adscribe(&["validate", &fixture("scripts/02_no_gap_counterexample.txt")]);
    assert_eq!(code, 1);
    let rules: Vec<&str> = json["violations"].as_array().unwrap().iter().map(|v| v["rule"].as_str().unwrap()).collect();
    assert_eq!(rules, ["MIN_GAP"]);

    let (code, json, stderr) = adscribe(&["validate", "/no/such/script.txt"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["code"], "USAGE");
    assert!(stderr.contains("/no/such/script.txt"));

    let (code, _, _) = adscribe(&["validate", "--strict", &fixture("scripts/01_fox_example.txt")]);
    assert_eq!(code, 2);
    let (code, _, _) = adscribe(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn validate_reports_parse_errors_and_duration() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "soon\nA door opens.");
    let (code, json, _) = adscribe(&["validate", &bad]);
    assert_eq!(code, 1);
    assert_eq!(json["parseErrors"].as_array().unwrap().len(), 1);

    let long = write(dir.path(), "long.txt", "0 min 2 sec to 0 min 9 sec\nA door opens.");
    assert_eq!(adscribe(&["validate", &long]).0, 0);
    let (code, json, _) = adscribe(&["validate", &long, "--duration-ms", "5000"]);
    assert_eq!(code, 1);
    assert_eq!(json["violations"][0]["rule"], "DURATION_EXCEEDED");
}

#[test]
fn gaps_on_constructed_audio() {
    let dir = tempfile::tempdir().unwrap();
    let case = gap_cases().into_iter().find(|c| c.name == "single-gap").unwrap();
    let wav = dir.path().join("single.wav");
    case.render().write_wav16(&wav).unwrap();
    let wav = wav.display().to_string();

    let (code, json, _) = adscribe(&["gaps", &wav]);
    assert_eq!(code, 0);
    let gaps = json["gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), 1);
    assert!(gaps[0]["startMs"].as_u64().unwrap().abs_diff(2_000) <= 50);
    assert!(gaps[0]["endMs"].as_u64().unwrap().abs_diff(6_500) <= 50);

    let tone = dir.path().join("tone.wav");
    AudioTrack::mono(sine(440.0, 0.5, 8_000, 16_000), 16_000).unwrap().write_wav16(&tone).unwrap();
    let (_, json, _) = adscribe(&["gaps", &tone.display().to_string()]);
    assert_eq!(json["gaps"], Value::Array(vec![]));

    let many = gap_cases().into_iter().find(|c| c.name == "many-gaps").unwrap();
    let wav = dir.path().join("many.wav");
    many.render().write_wav16(&wav).unwrap();
    let wav = wav.display().to_string();
    let count = |min: &str| adscribe(&["gaps", &wav, "--min-gap-ms", min]).1["gaps"].as_array().unwrap().len();
    let (strict, loose) = (count("3000"), count("2000"));
    assert!(loose >= strict, "{loose} < {strict}");
    assert_eq!(strict, 4);

    assert_eq!(adscribe(&["gaps", &wav, "--window-ms", "0"]).0, 2);
    assert_eq!(adscribe(&["gaps", &fixture("scripts/01_fox_example.txt")]).0, 2);
}

#[test]
fn gaps_respect_an_existing_script() {
    let dir = tempfile::tempdir().unwrap();
    let case = gap_cases().into_iter().find(|c| c.name == "single-gap").unwrap();
    let wav = dir.path().join("single.wav");
    case.render().write_wav16(&wav).unwrap();
    let script = write(dir.path(), "s.txt", "0 min 3 sec to 0 min 5 sec\nA bell.");
    let (_, json, _) = adscribe(&["gaps", &wav.display().to_string(), "--script", &script]);
    assert_eq!(json["gaps"], Value::Array(vec![]));
}

#[test]
fn generate_modes() {
    let (code, json, _) = adscribe(&["generate", "file://clip.mp4", "--mode", "none"]);
    assert_eq!((code, json["script"].as_str()), (0, Some("")));

    let dir = tempfile::tempdir().unwrap();
    let case = gap_cases().into_iter().find(|c| c.name == "mixed-lengths").unwrap();
    let wav = dir.path().join("mixed.wav");
    case.render().write_wav16(&wav).unwrap();
    let out = dir.path().join("scaffold.txt");
    let (code, json, _) =
        adscribe(&["generate", &wav.display().to_string(), "--mode", "gaps", "-o", &out.display().to_string()]);
    assert_eq!(code, 0);
    // Silences of 4 s and 7 s; the 1 s and 2.5 s ones are too short.
    assert_eq!(json["cues"], 2);
    let scaffold = parse_script(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(scaffold.cues.iter().all(|c| c.is_placeholder()));
    assert!(validate(&scaffold).iter().all(|v| !v.is_error()));

    assert_eq!(adscribe(&["generate", "file://clip.mp4", "--mode", "gaps"]).0, 2);
}

#[test]
fn generate_full_follows_the_mock() {
    let path = transcript_path("clara_session.jsonl");
    let (code, json, _) = adscribe(&["generate", "file://pareidolia.mp4", "--mock", &path.display().to_string()]);
    assert_eq!(code, 0);

    // Oracle: the first recorded NewScript, read straight from the transcript JSON.
    let records = read_log(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    let expected = records
        .iter()
        .find_map(|(_, r)| match r {
            ReplayRecord::Exchange(ex) => {
                let v: Value = serde_json::from_str(&ex.raw_response).ok()?;
                let s = v["NewScript"].as_str()?;
                (!s.trim().is_empty()).then(|| s.to_string())
            }
            _ => None,
        })
        .unwrap();
    // Back-to-back cues get their ends pulled in to leave one second.
    let mut repaired = parse_script(&expected).unwrap();
    let mut pulled = Vec::new();
    for i in 0..repaired.cues.len() - 1 {
        let next_start = repaired.cues[i + 1].start.as_millis();
        if next_start < repaired.cues[i].end.as_millis() + 1_000 {
            repaired.cues[i].end = adscribe_core::TimeCode::from_millis(next_start - 1_000);
            pulled.push(i);
        }
    }
    assert_eq!(json["script"].as_str().unwrap(), repaired.serialize());
    assert_eq!(json["repaired"], serde_json::json!(pulled));
    assert_eq!(json["cues"], 11);

    let (code, _, stderr) = adscribe(&["generate", "file://x.mp4", "--duration-ms", "1000"]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn narrate_fit_report() {
    let dir = tempfile::tempdir().unwrap();
    let fits =
        write(dir.path(), "fits.txt", "0 min 10 sec to 0 min 14 sec\none two three four five six seven eight nine ten");
    let (code, json, _) = adscribe(&["narrate", &fits]);
    assert_eq!(code, 0);
    assert_eq!(json["plans"][0]["rateFactor"], 1.5);

    let mixed = write(
        dir.path(),
        "mixed.txt",
        "0 min 1 sec to 0 min 7 sec\nA door opens.\n\n0 min 9 sec to 0 min 11 sec\none two three four five six seven eight nine ten",
    );
    let (code, json, _) = adscribe(&["narrate", &mixed]);
    assert_eq!(code, 1);
    assert_eq!(json["unfit"], serde_json::json!([1]));
    let out = Command::new(env!("CARGO_BIN_EXE_adscribe")).args(["narrate", &mixed]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("cue 1 does not fit"));

    let clips = dir.path().join("clips");
    let (code, json, _) = adscribe(&["narrate", &fits, "--backend", "tone", "--out-dir", &clips.display().to_string()]);
    assert_eq!(code, 0);
    assert_eq!(json["files"].as_array().unwrap().len(), 1);
    let clip = AudioTrack::read_wav(clips.join("cue-000.wav")).unwrap();
    assert!(clip.duration_ms().abs_diff(4_000) <= 5);
}

#[test]
fn replay_transcripts() {
    let (code, json, _) = adscribe(&["replay", &transcript_path("labeled_corpus.jsonl").display().to_string()]);
    assert_eq!(code, 0);
    assert_eq!(json["metrics"]["responses"], 202);
    assert_eq!(json["metrics"]["incongruent"], 18);
    assert_eq!(json["metrics"]["vqaErrors"], 4);

    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.jsonl", "");
    let (code, json, _) = adscribe(&["replay", &empty]);
    assert_eq!((code, json["script"].as_str()), (0, Some("")));
    let garbage = write(dir.path(), "garbage.jsonl", "{not json}\n");
    assert_eq!(adscribe(&["replay", &garbage]).0, 2);
}

#[test]
fn replay_project_logs_like_the_service() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let rec = common::record_session(seed, 60);
        let log = write(dir.path(), &format!("p{seed}.jsonl"), &rec.archive);
        let (code, json, stderr) =
            adscribe(&["replay", &log, "--video-ref", "file://clip.mp4", "--duration-ms", "60000"]);
        assert_eq!(code, 0, "seed {seed}: {json} {stderr}");
        assert_eq!(json["script"].as_str().unwrap(), rec.project.current().script);

        let entries = read_project_log(rec.archive.as_bytes()).unwrap();
        let service = replay_project_log(
            &rec.project.video_ref,
            rec.project.video_duration,
            &entries,
            &adscribe_core::agent::AgentConfig::default(),
        )
        .unwrap();
        let mut cli = json.clone();
        for key in ["format", "script"] {
            cli.as_object_mut().unwrap().remove(key);
        }
        assert_eq!(cli, serde_json::to_value(&service).unwrap());
    }

    assert_eq!(adscribe(&["replay", "--format", "project", &fixture("transcripts/clara_session.jsonl")]).0, 2);
}

#[test]
fn tampered_project_log_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let rec = (0..50)
        .map(|seed| common::record_session(seed, 60))
        .find(|r| r.archive.contains("\"source\":\"agent\"") || r.archive.contains("\"kind\":\"response\""))
        .unwrap();
    // Change one recorded reply so that it no longer produces the logged revision.
    let mut lines: Vec<String> = rec.archive.lines().map(String::from).collect();
    let target = lines
        .iter()
        .position(|l| l.contains("\"kind\":\"response\"") && l.contains("\"revision\":{"))
        .expect("a response that committed a revision");
    let mut entry: Value = serde_json::from_str(&lines[target]).unwrap();
    let raw = entry["payload"]["rawResponse"].as_str().unwrap().to_string();
    let mut reply: Value = serde_json::from_str(&raw).unwrap();
    let script = reply["NewScript"].as_str().unwrap().to_string();
    reply["NewScript"] = Value::String(script.replacen("The ", "A ", 1));
    entry["payload"]["rawResponse"] = Value::String(reply.to_string());
    lines[target] = entry.to_string();
    let log = write(dir.path(), "tampered.jsonl", &(lines.join("\n") + "\n"));

    let (code, json, _) = adscribe(&["replay", &log, "--video-ref", "file://clip.mp4", "--duration-ms", "60000"]);
    assert_eq!(code, 1);
    assert!(!json["divergences"].as_array().unwrap().is_empty());
}
