//! One participant's pass through the protocol, event-sourced.
//!
//! Every change to a session is a [`LogEntry`]. Live calls validate input,
//! build the entry and apply it; replay applies stored entries in order, so
//! both paths share [`StudySession::apply`].

use std::collections::BTreeMap;
use std::fmt;

use alterfactual_core::Label;
use chrono::{DateTime, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Condition, StudyConfig, CONFIDENCE_MAX, LIKERT_MAX};
use crate::error::{FieldError, Result, StudyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Demographics,
    Intro,
    Examples,
    Quiz,
    Training,
    Prediction,
    Understanding,
    Satisfaction,
    Feedback,
    Done,
    Excluded,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Demographics => "demographics",
            Stage::Intro => "intro",
            Stage::Examples => "examples",
            Stage::Quiz => "quiz",
            Stage::Training => "training",
            Stage::Prediction => "prediction",
            Stage::Understanding => "understanding",
            Stage::Satisfaction => "satisfaction",
            Stage::Feedback => "feedback",
            Stage::Done => "done",
            Stage::Excluded => "excluded",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Stage::Done | Stage::Excluded)
    }

    /// The stages a participant in `condition` passes through, in order.
    /// The satisfaction scale is only shown alongside explanations.
    pub fn sequence(condition: Condition) -> Vec<Stage> {
        use Stage::*;
        let mut stages = vec![Demographics, Intro, Examples, Quiz, Training, Prediction, Understanding];
        if condition.shows_explanations() {
            stages.push(Satisfaction);
        }
        stages.extend([Feedback, Done]);
        stages
    }

    fn after(self, condition: Condition) -> Stage {
        let seq = Stage::sequence(condition);
        let i = seq.iter().position(|s| *s == self).expect("stage belongs to the sequence");
        seq[i + 1]
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: u32,
    pub gender: String,
    /// Self-rated experience with AI, 0..4.
    pub ai_experience: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionAnswer {
    /// Index into the prediction bank.
    pub item: usize,
    /// Position in the session's presentation order.
    pub position: usize,
    pub predicted: Label,
    pub confidence: u8,
    pub justification: String,
    pub explain_revealed: bool,
}

/// A raw submission as sent by a client. Every field is optional so that
/// validation can report all missing or bad fields at once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Submission {
    Demographics {
        #[serde(default)]
        age: Option<i64>,
        #[serde(default)]
        gender: Option<String>,
        #[serde(default)]
        ai_experience: Option<i64>,
    },
    Intro {},
    Examples {},
    Quiz {
        #[serde(default)]
        answers: Option<Vec<i64>>,
    },
    Training {},
    Prediction {
        #[serde(default)]
        item: Option<i64>,
        #[serde(default)]
        predicted: Option<String>,
        #[serde(default)]
        confidence: Option<i64>,
        #[serde(default)]
        justification: Option<String>,
    },
    Understanding {
        #[serde(default)]
        ratings: Option<BTreeMap<String, i64>>,
    },
    Satisfaction {
        #[serde(default)]
        ratings: Option<Vec<i64>>,
    },
    Feedback {
        #[serde(default)]
        text: Option<String>,
    },
}

impl Submission {
    pub fn stage(&self) -> Stage {
        match self {
            Submission::Demographics { .. } => Stage::Demographics,
            Submission::Intro {} => Stage::Intro,
            Submission::Examples {} => Stage::Examples,
            Submission::Quiz { .. } => Stage::Quiz,
            Submission::Training {} => Stage::Training,
            Submission::Prediction { .. } => Stage::Prediction,
            Submission::Understanding { .. } => Stage::Understanding,
            Submission::Satisfaction { .. } => Stage::Satisfaction,
            Submission::Feedback { .. } => Stage::Feedback,
        }
    }
}

/// A validated submission, as stored in the log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Answer {
    Demographics(Demographics),
    Intro,
    Examples,
    Quiz { answers: Vec<usize>, passed: bool },
    Training,
    Prediction(PredictionAnswer),
    Understanding { ratings: BTreeMap<String, u8> },
    Satisfaction { ratings: Vec<u8> },
    Feedback { text: String },
}

/// Where an explain button was pressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Examples,
    Training,
    #[default]
    Prediction,
}

impl Phase {
    fn as_str(self) -> &'static str {
        match self {
            Phase::Examples => "examples",
            Phase::Training => "training",
            Phase::Prediction => "prediction",
        }
    }
}

/// Tracking events sent by the client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientEvent {
    ExplainRevealed {
        item_index: usize,
        #[serde(default)]
        phase: Phase,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum SessionEvent {
    Created { condition: Condition, item_order: Vec<usize> },
    Submitted(Answer),
    ExplainRevealed { item_index: usize, phase: Phase },
}

/// One line of the JSONL event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub session_id: String,
    /// Position in the session's own event sequence, from 0.
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub event: SessionEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudySession {
    pub id: String,
    pub condition: Condition,
    pub stage: Stage,
    /// Prediction bank indices in presentation order.
    pub item_order: Vec<usize>,
    pub demographics: Option<Demographics>,
    pub quiz_answers: Option<Vec<usize>>,
    pub quiz_passed: Option<bool>,
    /// In presentation order.
    pub predictions: Vec<PredictionAnswer>,
    /// Per prediction bank item.
    pub revealed: Vec<bool>,
    pub explain_clicks: u32,
    pub understanding: Option<BTreeMap<String, u8>>,
    pub satisfaction: Option<Vec<u8>>,
    pub feedback: Option<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub log: Vec<LogEntry>,
}

/// The seeded generator for the `ordinal`-th session of a study.
pub fn session_rng(master_seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(ordinal);
    rng
}

/// Weighted draw over [`Condition::ALL`].
pub fn assign_condition<R: Rng>(config: &StudyConfig, rng: &mut R) -> Condition {
    let dist = WeightedIndex::new(config.condition_weights.as_array()).expect("weights validated with the config");
    Condition::ALL[dist.sample(rng)]
}

fn int_in(errors: &mut Vec<FieldError>, field: &str, v: Option<i64>, max: i64) -> Option<u8> {
    match v {
        None => {
            errors.push(FieldError::new(field, "required"));
            None
        }
        Some(v) if !(0..=max).contains(&v) => {
            errors.push(FieldError::new(field, format!("must be between 0 and {max}")));
            None
        }
        Some(v) => Some(v as u8),
    }
}

fn text(errors: &mut Vec<FieldError>, field: &str, v: Option<String>) -> Option<String> {
    match v {
        Some(t) if !t.trim().is_empty() => Some(t),
        _ => {
            errors.push(FieldError::new(field, "required"));
            None
        }
    }
}

fn checked<T>(errors: Vec<FieldError>, value: impl FnOnce() -> T) -> Result<T> {
    if errors.is_empty() {
        Ok(value())
    } else {
        Err(StudyError::Validation(errors))
    }
}

impl StudySession {
    /// Creates the `ordinal`-th session of a study: draws the condition and
    /// the item order from the session's generator.
    pub fn create(config: &StudyConfig, ordinal: u64, now: DateTime<Utc>) -> (StudySession, LogEntry) {
        Self::create_with(config, ordinal, None, now)
    }

    /// Like [`create`](Self::create), optionally forcing the condition. The
    /// generator is advanced identically either way.
    pub fn create_with(
        config: &StudyConfig,
        ordinal: u64,
        forced: Option<Condition>,
        now: DateTime<Utc>,
    ) -> (StudySession, LogEntry) {
        let mut rng = session_rng(config.seed, ordinal);
        let tag: u32 = rng.gen();
        let drawn = assign_condition(config, &mut rng);
        let mut item_order: Vec<usize> = (0..config.prediction.len()).collect();
        item_order.shuffle(&mut rng);
        let entry = LogEntry {
            session_id: format!("s{ordinal:06}-{tag:08x}"),
            seq: 0,
            timestamp: now,
            event: SessionEvent::Created {
                condition: forced.unwrap_or(drawn),
                item_order,
            },
        };
        let session = StudySession::from_created(&entry).expect("created entry");
        (session, entry)
    }

    fn from_created(entry: &LogEntry) -> Result<StudySession> {
        let SessionEvent::Created { condition, item_order } = &entry.event else {
            return Err(StudyError::Log(format!("session {} does not start with `created`", entry.session_id)));
        };
        if entry.seq != 0 {
            return Err(StudyError::Log(format!("session {} created at seq {}", entry.session_id, entry.seq)));
        }
        Ok(StudySession {
            id: entry.session_id.clone(),
            condition: *condition,
            stage: Stage::Demographics,
            item_order: item_order.clone(),
            demographics: None,
            quiz_answers: None,
            quiz_passed: None,
            predictions: Vec::new(),
            revealed: vec![false; item_order.len()],
            explain_clicks: 0,
            understanding: None,
            satisfaction: None,
            feedback: None,
            started_at: entry.timestamp,
            finished_at: None,
            log: vec![entry.clone()],
        })
    }

    /// Rebuilds a session from its entries in order.
    pub fn replay<'a>(entries: impl IntoIterator<Item = &'a LogEntry>) -> Result<StudySession> {
        let mut it = entries.into_iter();
        let first = it.next().ok_or_else(|| StudyError::Log("empty session".into()))?;
        let mut s = StudySession::from_created(first)?;
        for e in it {
            s.apply(e)?;
        }
        Ok(s)
    }

    /// Sequence number the next entry will get.
    pub fn next_seq(&self) -> u64 {
        self.log.len() as u64
    }

    /// The prediction bank index shown next, if the prediction task is running.
    pub fn current_item(&self) -> Option<usize> {
        (self.stage == Stage::Prediction).then(|| self.item_order[self.predictions.len()])
    }

    /// Applies a logged entry. Entries must come in sequence.
    pub fn apply(&mut self, entry: &LogEntry) -> Result<()> {
        if entry.session_id != self.id || entry.seq != self.next_seq() {
            return Err(StudyError::Log(format!(
                "entry {}#{} does not follow {}#{}",
                entry.session_id,
                entry.seq,
                self.id,
                self.next_seq()
            )));
        }
        match &entry.event {
            SessionEvent::Created { .. } => {
                return Err(StudyError::Log(format!("session {} created twice", self.id)));
            }
            SessionEvent::ExplainRevealed { item_index, phase } => {
                self.explain_clicks += 1;
                if *phase == Phase::Prediction {
                    self.revealed[*item_index] = true;
                    if let Some(p) = self.predictions.iter_mut().find(|p| p.item == *item_index) {
                        p.explain_revealed = true;
                    }
                }
            }
            SessionEvent::Submitted(answer) => {
                let mut next = self.stage.after(self.condition);
                match answer {
                    Answer::Demographics(d) => self.demographics = Some(d.clone()),
                    Answer::Intro | Answer::Examples | Answer::Training => {}
                    Answer::Quiz { answers, passed } => {
                        self.quiz_answers = Some(answers.clone());
                        self.quiz_passed = Some(*passed);
                        if !passed {
                            next = Stage::Excluded;
                        }
                    }
                    Answer::Prediction(p) => {
                        self.predictions.push(p.clone());
                        if self.predictions.len() < self.item_order.len() {
                            next = Stage::Prediction;
                        }
                    }
                    Answer::Understanding { ratings } => self.understanding = Some(ratings.clone()),
                    Answer::Satisfaction { ratings } => self.satisfaction = Some(ratings.clone()),
                    Answer::Feedback { text } => self.feedback = Some(text.clone()),
                }
                self.stage = next;
                if next.is_terminal() {
                    self.finished_at = Some(entry.timestamp);
                }
            }
        }
        self.log.push(entry.clone());
        Ok(())
    }

    fn push(&mut self, event: SessionEvent, now: DateTime<Utc>) -> Result<LogEntry> {
        let entry = LogEntry {
            session_id: self.id.clone(),
            seq: self.next_seq(),
            timestamp: now,
            event,
        };
        self.apply(&entry)?;
        Ok(entry)
    }

    /// Validates a submission against the current stage without changing
    /// the session.
    pub fn validate(&self, config: &StudyConfig, submission: Submission) -> Result<Answer> {
        if self.stage.is_terminal() {
            return Err(StudyError::Terminal(self.stage));
        }
        if submission.stage() != self.stage {
            return Err(StudyError::WrongStage {
                expected: self.stage,
                got: submission.stage(),
            });
        }
        let mut errors = Vec::new();
        let e = &mut errors;
        match submission {
            Submission::Demographics {
                age,
                gender,
                ai_experience,
            } => {
                let age = match age {
                    Some(a) if (18..=120).contains(&a) => Some(a as u32),
                    Some(_) => {
                        e.push(FieldError::new("age", "must be between 18 and 120"));
                        None
                    }
                    None => {
                        e.push(FieldError::new("age", "required"));
                        None
                    }
                };
                let gender = text(e, "gender", gender);
                let ai_experience = int_in(e, "ai_experience", ai_experience, i64::from(LIKERT_MAX));
                checked(errors, || {
                    Answer::Demographics(Demographics {
                        age: age.unwrap(),
                        gender: gender.unwrap(),
                        ai_experience: ai_experience.unwrap(),
                    })
                })
            }
            Submission::Intro {} => Ok(Answer::Intro),
            Submission::Examples {} => Ok(Answer::Examples),
            Submission::Training {} => Ok(Answer::Training),
            Submission::Quiz { answers } => {
                let questions = &config.quiz.questions;
                let answers = match answers {
                    None => {
                        e.push(FieldError::new("answers", "required"));
                        Vec::new()
                    }
                    Some(a) if a.len() != questions.len() => {
                        e.push(FieldError::new("answers", format!("expected {} answers", questions.len())));
                        Vec::new()
                    }
                    Some(a) => a
                        .into_iter()
                        .zip(questions)
                        .enumerate()
                        .filter_map(|(i, (v, q))| {
                            if (0..q.options.len() as i64).contains(&v) {
                                Some(v as usize)
                            } else {
                                e.push(FieldError::new(format!("answers[{i}]"), "no such option"));
                                None
                            }
                        })
                        .collect(),
                };
                checked(errors, || {
                    let right = answers.iter().zip(questions).filter(|(a, q)| **a == q.correct).count();
                    Answer::Quiz {
                        passed: right >= config.quiz.threshold(),
                        answers,
                    }
                })
            }
            Submission::Prediction {
                item,
                predicted,
                confidence,
                justification,
            } => {
                let current = self.current_item().expect("prediction stage has a current item");
                // another bank item means the client is out of step, not malformed
                if let Some(i) = item.filter(|i| *i != current as i64 && (0..config.prediction.len() as i64).contains(i)) {
                    return Err(StudyError::StaleItem { current, got: i as usize });
                }
                match item {
                    None => e.push(FieldError::new("item", "required")),
                    Some(i) if i != current as i64 => {
                        e.push(FieldError::new("item", format!("the current item is {current}")))
                    }
                    Some(_) => {}
                }
                let predicted = match predicted {
                    None => {
                        e.push(FieldError::new("predicted", "required"));
                        None
                    }
                    Some(p) => match config.model.labels().iter().find(|l| l.as_str() == p) {
                        Some(l) => Some(l.clone()),
                        None => {
                            e.push(FieldError::new("predicted", format!("unknown decision `{p}`")));
                            None
                        }
                    },
                };
                let confidence = int_in(e, "confidence", confidence, i64::from(CONFIDENCE_MAX));
                let justification = text(e, "justification", justification);
                checked(errors, || {
                    Answer::Prediction(PredictionAnswer {
                        item: current,
                        position: self.predictions.len(),
                        predicted: predicted.unwrap(),
                        confidence: confidence.unwrap(),
                        justification: justification.unwrap(),
                        explain_revealed: self.revealed[current],
                    })
                })
            }
            Submission::Understanding { ratings } => {
                let mut out = BTreeMap::new();
                let mut ratings = ratings.unwrap_or_default();
                for f in config.schema.features() {
                    let field = format!("ratings.{}", f.name);
                    if let Some(v) = int_in(e, &field, ratings.remove(&f.name), i64::from(LIKERT_MAX)) {
                        out.insert(f.name.clone(), v);
                    }
                }
                for extra in ratings.keys() {
                    e.push(FieldError::new(format!("ratings.{extra}"), "unknown feature"));
                }
                checked(errors, || Answer::Understanding { ratings: out })
            }
            Submission::Satisfaction { ratings } => {
                let n = config.satisfaction_items.len();
                let ratings = ratings.unwrap_or_default();
                if ratings.len() != n {
                    e.push(FieldError::new("ratings", format!("expected {n} ratings")));
                }
                let out: Vec<u8> = ratings
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| int_in(e, &format!("ratings[{i}]"), Some(*v), i64::from(LIKERT_MAX)))
                    .collect();
                checked(errors, || Answer::Satisfaction { ratings: out })
            }
            Submission::Feedback { text } => Ok(Answer::Feedback {
                text: text.unwrap_or_default(),
            }),
        }
    }

    /// Validates and applies a submission, moving to the next stage.
    pub fn advance(&mut self, config: &StudyConfig, submission: Submission, now: DateTime<Utc>) -> Result<LogEntry> {
        let answer = self.validate(config, submission)?;
        self.push(SessionEvent::Submitted(answer), now)
    }

    /// Records a tracking event. Never changes the stage.
    pub fn record_event(&mut self, config: &StudyConfig, event: ClientEvent, now: DateTime<Utc>) -> Result<LogEntry> {
        if self.stage.is_terminal() {
            return Err(StudyError::Terminal(self.stage));
        }
        let ClientEvent::ExplainRevealed { item_index, phase } = event;
        let len = match phase {
            Phase::Examples => config.examples.len(),
            Phase::Training => config.training.len(),
            Phase::Prediction => config.prediction.len(),
        };
        if item_index >= len {
            return Err(StudyError::UnknownItem {
                phase: phase.as_str(),
                index: item_index,
            });
        }
        self.push(SessionEvent::ExplainRevealed { item_index, phase }, now)
    }
}
