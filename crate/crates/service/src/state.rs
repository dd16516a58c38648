//! Sessions in memory, backed by the append-only event log.
//!
//! Every mutation is computed on a copy of the session, appended to the log,
//! and only then made visible. A session's mutex is held for the whole
//! sequence, so one session sees one writer at a time.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, PoisonError, RwLock};

use alterfactual_study::clock::Clock;
use alterfactual_study::log::{read_log, replay, EventLog};
use alterfactual_study::{
    finalize, view, ClientEvent, Condition, LogEntry, SessionEvent, SessionRecord, StateView, StudyConfig,
    StudyError, StudySession, Submission,
};

use crate::config::LOG_FILE;
use crate::error::ServiceError;

type Result<T> = std::result::Result<T, ServiceError>;

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(PoisonError::into_inner)
}

struct Inner {
    study: std::result::Result<Arc<StudyConfig>, String>,
    admin_token: Option<String>,
    clock: Arc<dyn Clock>,
    log: Mutex<EventLog>,
    log_path: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<StudySession>>>>,
    /// Ordinal of the next session; held while a session is being created.
    next_ordinal: Mutex<u64>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for AppState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AppState").field("log", &self.inner.log_path).finish_non_exhaustive()
    }
}

impl AppState {
    /// Opens (or creates) the log in `data_dir` and replays it.
    pub fn open(
        study: std::result::Result<StudyConfig, String>,
        data_dir: &Path,
        admin_token: Option<String>,
        clock: Arc<dyn Clock>,
    ) -> std::result::Result<Self, StudyError> {
        std::fs::create_dir_all(data_dir)?;
        let log_path = data_dir.join(LOG_FILE);
        let entries = if log_path.exists() { read_log(&log_path)? } else { Vec::new() };
        let (sessions, order) = replay(&entries)?;
        // a torn final line is dropped by the reader; cut it off so new lines start clean
        truncate_torn_tail(&log_path)?;
        let log = EventLog::open(&log_path)?;
        let sessions = sessions.into_iter().map(|(id, s)| (id, Arc::new(Mutex::new(s)))).collect();
        Ok(AppState {
            inner: Arc::new(Inner {
                study: study.map(Arc::new),
                admin_token,
                clock,
                log: Mutex::new(log),
                log_path,
                sessions: RwLock::new(sessions),
                next_ordinal: Mutex::new(order.len() as u64),
            }),
        })
    }

    pub fn log_path(&self) -> &Path {
        &self.inner.log_path
    }

    pub fn study(&self) -> Result<&Arc<StudyConfig>> {
        self.inner.study.as_ref().map_err(|e| ServiceError::Unavailable(e.clone()))
    }

    pub fn check_admin(&self, token: Option<&str>) -> Result<()> {
        match (&self.inner.admin_token, token) {
            (Some(want), Some(got)) if want == got => Ok(()),
            _ => Err(ServiceError::Forbidden),
        }
    }

    fn append(&self, entry: &LogEntry) -> Result<()> {
        lock(&self.inner.log).append(entry).map_err(ServiceError::from)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<StudySession>>> {
        let sessions = self.inner.sessions.read().unwrap_or_else(PoisonError::into_inner);
        sessions.get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    pub fn create_session(&self, forced: Option<Condition>) -> Result<StateView> {
        let config = self.study()?;
        let mut ordinal = lock(&self.inner.next_ordinal);
        let (session, entry) = StudySession::create_with(config, *ordinal, forced, self.inner.clock.now());
        self.append(&entry)?;
        *ordinal += 1;
        let v = view(&session, config)?;
        self.inner
            .sessions
            .write()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(session.id.clone(), Arc::new(Mutex::new(session)));
        Ok(v)
    }

    pub fn state(&self, id: &str) -> Result<StateView> {
        let config = self.study()?;
        let session = self.session(id)?;
        let s = lock(&session);
        Ok(view(&s, config)?)
    }

    /// Applies a submission. With `seq`, the request is tied to one log
    /// position: a resend of what is already logged there is answered with
    /// the current state, anything else that is not the next position is
    /// stale.
    pub fn submit(&self, id: &str, seq: Option<u64>, submission: Submission) -> Result<StateView> {
        let config = self.study()?;
        let session = self.session(id)?;
        let mut s = lock(&session);
        if let Some(seq) = seq {
            let next = s.next_seq();
            if seq < next && is_resend(&s, config, seq, &submission) {
                return Ok(view(&s, config)?);
            }
            if seq != next {
                return Err(ServiceError::Stale(format!("seq {seq} does not match the next position {next}")));
            }
        }
        let mut draft = s.clone();
        let entry = draft.advance(config, submission, self.inner.clock.now())?;
        self.append(&entry)?;
        *s = draft;
        Ok(view(&s, config)?)
    }

    pub fn record_event(&self, id: &str, event: ClientEvent) -> Result<()> {
        let config = self.study()?;
        let session = self.session(id)?;
        let mut s = lock(&session);
        let mut draft = s.clone();
        let entry = draft.record_event(config, event, self.inner.clock.now())?;
        self.append(&entry)?;
        *s = draft;
        Ok(())
    }

    /// Records of finished sessions; quiz failures only when asked for.
    pub fn records(&self, include_excluded: bool) -> Result<Vec<SessionRecord>> {
        let config = self.study()?;
        let mut out = Vec::new();
        for s in self.snapshot().values() {
            if s.stage.is_terminal() {
                let r = finalize(s, config)?;
                if include_excluded || !r.excluded() {
                    out.push(r);
                }
            }
        }
        Ok(out)
    }

    /// A copy of every session, keyed by id.
    pub fn snapshot(&self) -> BTreeMap<String, StudySession> {
        let sessions = self.inner.sessions.read().unwrap_or_else(PoisonError::into_inner);
        sessions.iter().map(|(id, s)| (id.clone(), lock(s).clone())).collect()
    }
}

/// Whether `submission` is what was accepted at log position `seq`.
fn is_resend(s: &StudySession, config: &StudyConfig, seq: u64, submission: &Submission) -> bool {
    let seq = seq as usize;
    let SessionEvent::Submitted(logged) = &s.log[seq].event else {
        return false;
    };
    match StudySession::replay(&s.log[..seq]) {
        Ok(before) => before.validate(config, submission.clone()).is_ok_and(|a| &a == logged),
        Err(_) => false,
    }
}

fn truncate_torn_tail(path: &Path) -> std::io::Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let bytes = std::fs::read(path)?;
    if bytes.last().is_some_and(|b| *b != b'\n') {
        let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        let file = std::fs::OpenOptions::new().write(true).open(path)?;
        file.set_len(keep as u64)?;
        file.sync_all()?;
    }
    Ok(())
}
