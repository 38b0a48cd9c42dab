use std::fs::File;
use std::io::BufReader;

use adscribe_core::agent::replay::{read_log, replay, ReplayRecord, ReplayReport};
use adscribe_core::agent::{AgentConfig, AgentEvent};
use adscribe_core::script::{parse_script, substitute_phrases, ChangeRecord};
use adscribe_core::testkit::transcript_path;
use adscribe_core::{Cue, TimeCode};

fn run(name: &str) -> ReplayReport {
    let records = read_log(BufReader::new(File::open(transcript_path(name)).unwrap())).unwrap();
    replay(&records, &AgentConfig::default()).unwrap()
}

#[test]
fn clara_session_ends_with_the_slipper_cue() {
    let report = run("clara_session.jsonl");
    assert!(report.is_consistent(), "{:?}", report.divergences);
    let slipper = report.final_script.cues.iter().find(|c| c.text.contains("slippers")).expect("slipper cue present");
    assert_eq!((slipper.start, slipper.end), (TimeCode::from_secs(8), TimeCode::from_secs(12)));
    assert_eq!(
        slipper.text,
        "The man sits on the bed, rubbing his face. Two white slippers, resembling faces, sit on the floor."
    );
    let montage = report.final_script.cues.iter().find(|c| c.text.starts_with("Faces follow him")).unwrap();
    assert_eq!(*montage, Cue::new(TimeCode::from_secs(16), TimeCode::from_secs(24), montage.text.clone()));
    assert_eq!(report.metrics.failures, 0);
}

#[test]
fn rename_touches_six_cues() {
    let records = read_log(BufReader::new(File::open(transcript_path("rename_session.jsonl")).unwrap())).unwrap();
    let config = AgentConfig::default();
    let report = replay(&records, &config).unwrap();
    assert!(report.is_consistent());

    let before = match &records[0].1 {
        ReplayRecord::Header { session } => parse_script(session.initial_script.as_deref().unwrap()).unwrap(),
        _ => panic!("header expected"),
    };
    let last = report.exchanges.last().unwrap();
    let changes = match &last.events[0] {
        AgentEvent::ScriptReplaced { changes, .. } => changes.clone(),
        other => panic!("unexpected {other:?}"),
    };
    let text_changed = changes.iter().filter(|c| matches!(c, ChangeRecord::TextChanged { .. })).count();
    assert_eq!(text_changed, 6);
    assert_eq!(changes.len(), 6);

    // Independent oracle: a plain phrase substitution makes the same six edits.
    let sources = ["a man", "the man", "the guy"].map(String::from);
    let (substituted, count) = substitute_phrases(&before, &sources, "Tom");
    assert_eq!(count, 6);
    assert_eq!(substituted.cues, report.final_script.cues);
}

#[test]
fn microwave_question_changes_nothing() {
    let report = run("microwave_session.jsonl");
    assert!(report.is_consistent());
    let answer = report
        .final_state
        .history
        .iter()
        .find(|t| t.text.starts_with("The microwave itself is not shown in the video at the 36-second mark"));
    assert!(answer.is_some());
    assert_eq!(report.final_script.len(), 5);
    assert_eq!(report.metrics.incongruent, 0);
}

#[test]
fn labeled_corpus_counts() {
    let report = run("labeled_corpus.jsonl");
    let m = &report.metrics;
    assert!(report.is_consistent(), "{:?}", report.divergences);
    assert_eq!(m.responses, 202);
    assert_eq!(m.vqa_responses, 68);
    assert_eq!(m.incongruent, 18);
    assert_eq!(m.labeled_incongruent, 18);
    assert_eq!(m.vqa_errors, 4);
    assert!(m.label_mismatches.is_empty(), "{:?}", m.label_mismatches);
    assert_eq!(m.failures, 0);
    assert_eq!(format!("{:.1}", m.flagged_rate * 100.0), "10.9");
}

#[test]
fn recorded_events_survive_serialization() {
    let ev = AgentEvent::LineMoved { from: 1, to: 4 };
    let json = serde_json::to_string(&ev).unwrap();
    assert_eq!(json, r#"{"type":"LineMoved","from":1,"to":4}"#);
    assert_eq!(serde_json::from_str::<AgentEvent>(&json).unwrap(), ev);
}
