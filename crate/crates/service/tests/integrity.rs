//! Responses before the end of a session never reveal a prediction item's
//! decision, a margin, or the condition.

mod common;

use alterfactual_study::simulate::MIXED_PROFILES;
use alterfactual_study::{Condition, Stage, StagePayload, StateView};
use alterfactual_study::session::session_rng;
use alterfactual_study::simulate::Bot;
use axum::http::Method;
use common::*;
use serde_json::{json, Value};

fn keys(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.push(k.clone());
                keys(x, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| keys(x, out)),
        _ => {}
    }
}

fn check(v: &StateView, raw: &str, labels: &[String], seen: &mut Vec<Stage>) {
    seen.push(v.stage);
    if matches!(v.stage, Stage::Done | Stage::Excluded) {
        return;
    }
    let mut json: Value = serde_json::from_str(raw).unwrap();
    let mut names = Vec::new();
    keys(&json, &mut names);
    for k in &names {
        for banned in ["label", "margin", "condition", "correct", "truth"] {
            assert!(!k.contains(banned), "key `{k}` at stage {}", v.stage);
        }
    }
    if let StagePayload::Prediction { .. } = v.payload {
        assert!(!names.iter().any(|k| k == "decision"), "prediction payload has a decision");
        json["payload"].as_object_mut().unwrap().remove("choices");
        let text = json.to_string().to_lowercase();
        for l in labels {
            assert!(!text.contains(&l.to_lowercase()), "`{l}` in prediction payload: {text}");
        }
    }
}

#[tokio::test]
async fn no_leaks_in_any_condition() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let config = study();
    let labels: Vec<String> = config.model.labels().iter().map(|l| l.to_string()).collect();
    for (k, c) in Condition::ALL.into_iter().enumerate() {
        for (j, profile) in MIXED_PROFILES.iter().enumerate() {
            let r = call(&app, Method::POST, "/api/sessions", Some(json!({"forced_condition": c})), Some(TOKEN)).await;
            let id = r.json()["session_id"].as_str().unwrap().to_string();
            let mut bot = Bot::new(&config, *profile, session_rng(5, (k * 10 + j) as u64));
            let mut seen = Vec::new();
            while step(&app, &id, &mut bot, &mut |v, raw| check(v, raw, &labels, &mut seen)).await {}
            assert!(seen.contains(&Stage::Quiz));
        }
    }
}

#[tokio::test]
async fn prediction_payload_matches_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let config = study();
    for c in Condition::ALL {
        let r = call(&app, Method::POST, "/api/sessions", Some(json!({"forced_condition": c})), Some(TOKEN)).await;
        let id = r.json()["session_id"].as_str().unwrap().to_string();
        advance_to(&app, &config, &id, Stage::Prediction).await;
        let StagePayload::Prediction { explanations, descriptor, .. } = view(&app, &id).await.payload else {
            panic!()
        };
        let kinds: Vec<&str> = explanations.iter().map(|e| e.kind.as_str()).collect();
        let want: &[&str] = match c {
            Condition::Alterfactual => &["alterfactual"],
            Condition::Counterfactual => &["counterfactual"],
            Condition::Combination => &["alterfactual", "counterfactual"],
            Condition::NoExplanation => &[],
        };
        assert_eq!(kinds, want, "{c}");
        assert_eq!(descriptor.len(), 3);
    }
}
