#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use alterfactual_service::{router, AppState};
use alterfactual_study::clock::{Clock, ManualClock};
use alterfactual_study::simulate::{Action, Bot};
use alterfactual_study::{StateView, StudyConfig};
use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const TOKEN: &str = "test-token";

pub fn study() -> StudyConfig {
    StudyConfig::document(11).unwrap()
}

pub fn open(dir: &Path, clock: Arc<dyn Clock>) -> AppState {
    AppState::open(Ok(study()), dir, Some(TOKEN.into()), clock).unwrap()
}

pub fn app(dir: &Path) -> (Router, AppState) {
    let state = open(dir, Arc::new(ManualClock::fixed()));
    (router(state.clone()), state)
}

pub struct Reply {
    pub status: StatusCode,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>, token: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        text: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None, None).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body), None).await
}

pub async fn create(app: &Router) -> String {
    let r = call(app, Method::POST, "/api/sessions", None, None).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
    r.json()["session_id"].as_str().unwrap().to_string()
}

pub async fn view(app: &Router, id: &str) -> StateView {
    let r = get(app, &format!("/api/sessions/{id}")).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    serde_json::from_str(&r.text).unwrap()
}

/// Sends the bot's next batch of actions over HTTP. Returns false once the
/// session is over. Every response is passed to `inspect`.
pub async fn step(app: &Router, id: &str, bot: &mut Bot<'_>, inspect: &mut (dyn FnMut(&StateView, &str) + Send)) -> bool {
    let raw = get(app, &format!("/api/sessions/{id}")).await.text;
    let v: StateView = serde_json::from_str(&raw).unwrap();
    inspect(&v, &raw);
    let actions = bot.actions(&v).unwrap();
    if actions.is_empty() {
        return false;
    }
    for a in actions {
        match a {
            Action::Event(e) => {
                let r = post(app, &format!("/api/sessions/{id}/events"), serde_json::to_value(e).unwrap()).await;
                assert_eq!(r.status, StatusCode::NO_CONTENT, "{}", r.text);
            }
            Action::Submit(s) => {
                let mut body = serde_json::to_value(s).unwrap();
                body["seq"] = view(app, id).await.seq.into();
                let r = post(app, &format!("/api/sessions/{id}/submit"), body).await;
                assert_eq!(r.status, StatusCode::OK, "{}", r.text);
                let after: StateView = serde_json::from_str(&r.text).unwrap();
                inspect(&after, &r.text);
            }
        }
    }
    true
}

/// Drives one session to its end.
pub async fn run(app: &Router, id: &str, bot: &mut Bot<'_>) {
    while step(app, id, bot, &mut |_, _| {}).await {}
}

pub fn oracle_bot(config: &StudyConfig, stream: u64) -> Bot<'_> {
    use alterfactual_study::simulate::{AnswerPolicy, BotProfile};
    let profile = BotProfile {
        policy: AnswerPolicy::Oracle,
        reveal_probability: 1.0,
    };
    Bot::new(config, profile, alterfactual_study::session::session_rng(1, stream))
}

/// Steps an oracle bot until the session reaches `stage`.
pub async fn advance_to(app: &Router, config: &StudyConfig, id: &str, stage: alterfactual_study::Stage) {
    let mut bot = oracle_bot(config, 0);
    while view(app, id).await.stage != stage {
        assert!(step(app, id, &mut bot, &mut |_, _| {}).await, "session ended before {stage}");
    }
}
