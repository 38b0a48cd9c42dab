//! Randomized sessions recorded through the service, for replay tests.

use std::sync::Arc;

use adscribe_core::agent::{AgentConfig, AgentResponse, ScriptedClient};
use adscribe_core::announce::{PlaybackEvent, PlaybackKind};
use adscribe_core::narration::{MixPlan, SilentSpeechBackend, SpeechRateModel};
use adscribe_core::script::ScriptEdit;
use adscribe_core::session::StepClock;
use adscribe_core::{AdScript, Cue, TimeCode};
use adscribe_service::project::Project;
use adscribe_service::store::MemoryStore;
use adscribe_service::{MediaSettings, SessionService};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct Recorded {
    pub project: Project,
    /// The exported JSON-lines log.
    pub archive: String,
}

const WORDS: [&str; 8] = ["man", "door", "kettle", "slippers", "sunlight", "coffee", "smiles", "walks"];

fn sentence(rng: &mut StdRng) -> String {
    let n = rng.random_range(1..5);
    let words: Vec<&str> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
    format!("The {}.", words.join(" "))
}

pub fn random_script(rng: &mut StdRng, duration_s: u64) -> AdScript {
    let mut t = 0;
    let mut cues = Vec::new();
    for _ in 0..rng.random_range(1..7) {
        let start = t + rng.random_range(2..9);
        let end = start + rng.random_range(3..8);
        if end >= duration_s {
            break;
        }
        cues.push(Cue::from_secs(start, end, sentence(rng)));
        t = end;
    }
    AdScript::new(cues)
}

fn service(client: Arc<ScriptedClient>) -> SessionService {
    let media = MediaSettings {
        media_root: std::env::temp_dir(),
        export_dir: std::env::temp_dir(),
        mix: MixPlan::default(),
        speech: SpeechRateModel::default(),
        backend: Arc::new(SilentSpeechBackend::default()),
        ffmpeg: "ffmpeg".into(),
        ffprobe: "ffprobe".into(),
    };
    SessionService::new(
        Arc::new(MemoryStore::default()),
        client,
        AgentConfig::default(),
        Arc::new(StepClock::new(1_700_000_000_000, 250)),
        media,
    )
}

/// Drives one project through a random mix of commands, edits, puts,
/// playback and suggestion handling. Failed operations are part of the mix.
pub fn record_session(seed: u64, duration_s: u64) -> Recorded {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let mut rng = StdRng::seed_from_u64(seed);
        let client = Arc::new(ScriptedClient::default());
        let svc = service(client.clone());
        let id = svc.create_project("file://clip.mp4", duration_s * 1000).await.unwrap().id;

        for step in 0..rng.random_range(8..25) {
            let cues = svc.load(&id).unwrap().session.script.len();
            match rng.random_range(0..9) {
                0 => {
                    let script = random_script(&mut rng, duration_s);
                    let mut reply = AgentResponse::text_only("gen", "Here is a draft.").with_script(script.serialize());
                    if rng.random_bool(0.3) {
                        reply = reply.with_line(rng.random_range(1..12));
                    }
                    client.push(reply.to_json());
                    let _ = svc.post_command(&id, "Generate descriptions for this video with time stamps.").await;
                }
                1 => {
                    let mut reply = AgentResponse::text_only("q", format!("Answer {step}."));
                    if rng.random_bool(0.3) {
                        reply = reply.with_timestamp(rng.random_range(0..duration_s));
                    }
                    client.push(reply.to_json());
                    let _ = svc.post_command(&id, "What is happening here?").await;
                }
                2 if cues > 0 => {
                    let edit =
                        ScriptEdit::UpdateText { cue_index: rng.random_range(0..cues), new_text: sentence(&mut rng) };
                    let _ = svc.edit_script(&id, &edit).await;
                }
                3 => {
                    let script = random_script(&mut rng, duration_s);
                    let _ = svc.put_script(&id, &script.serialize()).await;
                }
                4 => {
                    let line = rng.random_range(1..15);
                    let ask = rng.random_bool(0.3).then(|| rng.random_bool(0.5));
                    let _ = svc.set_cursor(&id, Some(line), ask).await;
                }
                5 => {
                    let kind =
                        [PlaybackKind::Paused, PlaybackKind::Resumed, PlaybackKind::JumpedBack][rng.random_range(0..3)];
                    let playhead = TimeCode::from_millis(rng.random_range(0..duration_s * 1000));
                    let _ = svc.playback(&id, PlaybackEvent { kind, playhead }).await;
                }
                6 => {
                    client.push("{\"Command\": ");
                    client.push("not json either");
                    let _ = svc.post_command(&id, "Add a line at 30 seconds").await;
                }
                7 => {
                    if rng.random_bool(0.5) {
                        let _ = svc.accept_suggestion(&id).await;
                    } else {
                        let _ = svc.reject_suggestion(&id).await;
                    }
                }
                _ => {
                    let edit = match rng.random_range(0..3) {
                        0 if cues > 0 => ScriptEdit::DeleteCue { cue_index: rng.random_range(0..cues) },
                        1 => ScriptEdit::GlobalSubstitute { sources: vec!["man".into()], replacement: "Tom".into() },
                        _ => {
                            let s = rng.random_range(0..duration_s - 4);
                            ScriptEdit::InsertCue { cue: Cue::from_secs(s, s + 3, sentence(&mut rng)) }
                        }
                    };
                    let _ = svc.set_ad_track(&id, rng.random_bool(0.5)).await;
                    let _ = svc.edit_script(&id, &edit).await;
                }
            }
        }
        let project = svc.load(&id).unwrap();
        let archive = svc.export_logs(&id).unwrap();
        Recorded { project, archive }
    })
}
