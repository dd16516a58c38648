//! Killing the service and replaying its log gives the same sessions as a
//! run that was never interrupted.

mod common;

use std::io::Write;
use std::sync::Arc;

use alterfactual_service::router;
use alterfactual_study::clock::{Clock, ManualClock};
use alterfactual_study::session::session_rng;
use alterfactual_study::simulate::{Bot, MIXED_PROFILES};
use axum::Router;
use common::*;

const SESSIONS: usize = 10;

/// Advances all sessions round-robin, one bot step at a time, calling
/// `after_step` with the step count after each acknowledged step.
async fn drive(mut app: Router, mut after_step: impl FnMut(usize) -> Option<Router>) {
    let config = study();
    let mut ids = Vec::new();
    for _ in 0..SESSIONS {
        ids.push(create(&app).await);
    }
    let mut bots: Vec<Bot> = (0..SESSIONS)
        .map(|k| Bot::new(&config, MIXED_PROFILES[k % 5], session_rng(21, k as u64)))
        .collect();
    let mut live = vec![true; SESSIONS];
    let mut steps = 0;
    while live.iter().any(|l| *l) {
        for k in 0..SESSIONS {
            if live[k] {
                live[k] = step(&app, &ids[k], &mut bots[k], &mut |_, _| {}).await;
                steps += 1;
                if let Some(restarted) = after_step(steps) {
                    app = restarted;
                }
            }
        }
    }
}

#[tokio::test]
async fn replay_after_kills_matches_an_uninterrupted_run() {
    let control_dir = tempfile::tempdir().unwrap();
    let control_clock: Arc<dyn Clock> = Arc::new(ManualClock::fixed());
    let control = open(control_dir.path(), Arc::clone(&control_clock));
    drive(router(control.clone()), |_| None).await;

    let dir = tempfile::tempdir().unwrap();
    let clock: Arc<dyn Clock> = Arc::new(ManualClock::fixed());
    let first = open(dir.path(), Arc::clone(&clock));
    let log_path = first.log_path().to_path_buf();
    let mut current = Some(first);
    let mut kills = 0;
    drive(router(current.clone().unwrap()), |steps| {
        if steps % 7 != 0 {
            return None;
        }
        // drop every handle to the state, as a killed process would
        drop(current.take());
        if kills % 2 == 0 {
            // a write cut short by the kill
            let mut f = std::fs::OpenOptions::new().append(true).open(&log_path).unwrap();
            f.write_all(br#"{"session_id":"s0000"#).unwrap();
        }
        kills += 1;
        let state = open(dir.path(), Arc::clone(&clock));
        current = Some(state.clone());
        Some(router(state))
    })
    .await;
    assert!(kills > 10);

    let recovered = open(dir.path(), Arc::clone(&clock)).snapshot();
    let expected = control.snapshot();
    assert_eq!(recovered.len(), SESSIONS);
    assert!(expected.values().all(|s| s.stage.is_terminal()));
    assert_eq!(recovered, expected);
    assert_eq!(
        std::fs::read_to_string(&log_path).unwrap(),
        std::fs::read_to_string(control.log_path()).unwrap()
    );
}
