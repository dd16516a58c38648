//! Scores and the flattened per-session record.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::config::{Cents, Condition, StudyConfig, LIKERT_MAX};
use crate::error::{Result, StudyError};
use crate::session::{Stage, StudySession};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionScore {
    /// Correctness per prediction bank item.
    pub correct: Vec<bool>,
    pub accuracy: u32,
    pub bonus: Cents,
    pub total: Cents,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderstandingScore {
    pub correct: BTreeMap<String, bool>,
    pub score: u32,
}

pub fn score_predictions(session: &StudySession, config: &StudyConfig) -> Result<PredictionScore> {
    let n = config.prediction.len();
    if session.predictions.len() != n {
        return Err(StudyError::Incomplete(format!(
            "{} of {n} predictions answered",
            session.predictions.len()
        )));
    }
    let mut correct = vec![false; n];
    for p in &session.predictions {
        correct[p.item] = p.predicted == config.prediction[p.item].label;
    }
    let accuracy = correct.iter().filter(|c| **c).count() as u32;
    let bonus = config.payment.per_correct.times(accuracy);
    Ok(PredictionScore {
        correct,
        accuracy,
        bonus,
        total: config.payment.base + bonus,
    })
}

/// A relevant feature rated 3 or 4 and an irrelevant feature rated 0 or 1
/// count as correct; the midpoint never does.
pub fn rating_is_correct(relevant: bool, rating: u8) -> bool {
    if relevant {
        rating >= 3
    } else {
        rating <= 1
    }
}

pub fn score_understanding(session: &StudySession, config: &StudyConfig) -> Result<UnderstandingScore> {
    let ratings = session
        .understanding
        .as_ref()
        .ok_or_else(|| StudyError::Incomplete("understanding ratings missing".into()))?;
    let mut correct = BTreeMap::new();
    for (feature, relevant) in &config.understanding {
        let r = ratings
            .get(feature)
            .ok_or_else(|| StudyError::Incomplete(format!("no understanding rating for `{feature}`")))?;
        correct.insert(feature.clone(), rating_is_correct(*relevant, *r));
    }
    let score = correct.values().filter(|c| **c).count() as u32;
    Ok(UnderstandingScore { correct, score })
}

pub fn score_satisfaction(session: &StudySession, config: &StudyConfig) -> Result<f64> {
    let ratings = session
        .satisfaction
        .as_ref()
        .ok_or_else(|| StudyError::Incomplete("satisfaction ratings missing".into()))?;
    let n = config.satisfaction_items.len();
    if ratings.len() != n {
        return Err(StudyError::Incomplete(format!("{} of {n} satisfaction items answered", ratings.len())));
    }
    if ratings.iter().any(|r| *r > LIKERT_MAX) {
        return Err(StudyError::Incomplete("satisfaction rating out of range".into()));
    }
    Ok(ratings.iter().map(|r| f64::from(*r)).sum::<f64>() / n as f64)
}

/// Participants in an explanation condition who never revealed an
/// explanation are analysed as `no_explanation`.
pub fn effective_condition(assigned: Condition, explain_clicks: u32) -> Condition {
    if explain_clicks == 0 {
        Condition::NoExplanation
    } else {
        assigned
    }
}

/// One export row. Score fields are `None` for excluded sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub assigned_condition: Condition,
    pub effective_condition: Condition,
    pub quiz_passed: bool,
    /// Per prediction bank item.
    pub item_correct: Vec<Option<bool>>,
    pub accuracy: Option<u32>,
    pub bonus: Option<Cents>,
    pub understanding: BTreeMap<String, bool>,
    pub understanding_score: Option<u32>,
    pub satisfaction_mean: Option<f64>,
    pub explain_clicks: u32,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
}

impl SessionRecord {
    pub fn excluded(&self) -> bool {
        !self.quiz_passed
    }
}

pub fn finalize(session: &StudySession, config: &StudyConfig) -> Result<SessionRecord> {
    let mut record = SessionRecord {
        session_id: session.id.clone(),
        assigned_condition: session.condition,
        effective_condition: effective_condition(session.condition, session.explain_clicks),
        quiz_passed: session.quiz_passed == Some(true),
        item_correct: vec![None; config.prediction.len()],
        accuracy: None,
        bonus: None,
        understanding: BTreeMap::new(),
        understanding_score: None,
        satisfaction_mean: None,
        explain_clicks: session.explain_clicks,
        started_at: session.started_at,
        finished_at: session.finished_at,
    };
    match session.stage {
        Stage::Excluded => {}
        Stage::Done => {
            let p = score_predictions(session, config)?;
            record.item_correct = p.correct.into_iter().map(Some).collect();
            record.accuracy = Some(p.accuracy);
            record.bonus = Some(p.bonus);
            let u = score_understanding(session, config)?;
            record.understanding = u.correct;
            record.understanding_score = Some(u.score);
            if session.satisfaction.is_some() {
                record.satisfaction_mean = Some(score_satisfaction(session, config)?);
            }
        }
        stage => return Err(StudyError::Incomplete(format!("session is at stage `{stage}`"))),
    }
    Ok(record)
}
