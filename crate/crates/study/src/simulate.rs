//! Synthetic participants. Their answers are generated, not collected, and
//! exist to exercise the protocol and feed the analysis with test data.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::config::{StudyConfig, CONFIDENCE_MAX, LIKERT_MAX};
use crate::error::Result;
use crate::session::{session_rng, ClientEvent, LogEntry, Phase, StudySession, Submission};
use crate::view::{view, StagePayload, StateView};

/// How a bot answers the quiz, the predictions and the understanding items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnswerPolicy {
    /// Applies the model's true rules and the true relevance.
    Oracle,
    /// Uniform answers everywhere, including the quiz.
    Random,
    /// Passes the quiz; each prediction and rating is right with probability p.
    Biased(f64),
}

impl fmt::Display for AnswerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerPolicy::Oracle => f.write_str("oracle"),
            AnswerPolicy::Random => f.write_str("random"),
            AnswerPolicy::Biased(p) => write!(f, "biased({p})"),
        }
    }
}

impl FromStr for AnswerPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "oracle" => Ok(AnswerPolicy::Oracle),
            "random" => Ok(AnswerPolicy::Random),
            other => {
                let p = other
                    .strip_prefix("biased(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|p| p.trim().parse::<f64>().ok())
                    .ok_or_else(|| format!("unknown policy `{s}`; expected oracle, random or biased(p)"))?;
                if (0.0..=1.0).contains(&p) {
                    Ok(AnswerPolicy::Biased(p))
                } else {
                    Err(format!("biased policy probability {p} is outside [0, 1]"))
                }
            }
        }
    }
}

impl Serialize for AnswerPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnswerPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BotProfile {
    pub policy: AnswerPolicy,
    /// Chance of pressing the explain button on each item that has one.
    pub reveal_probability: f64,
}

/// The rotation used by [`simulate`]: bot `i` gets `MIXED_PROFILES[i % 5]`.
pub const MIXED_PROFILES: [BotProfile; 5] = [
    BotProfile {
        policy: AnswerPolicy::Oracle,
        reveal_probability: 1.0,
    },
    BotProfile {
        policy: AnswerPolicy::Biased(0.75),
        reveal_probability: 0.5,
    },
    // never looks at an explanation
    BotProfile {
        policy: AnswerPolicy::Oracle,
        reveal_probability: 0.0,
    },
    BotProfile {
        policy: AnswerPolicy::Random,
        reveal_probability: 0.3,
    },
    BotProfile {
        policy: AnswerPolicy::Biased(0.6),
        reveal_probability: 0.8,
    },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Event(ClientEvent),
    Submit(Submission),
}

/// Turns views into actions, like a participant's client would.
#[derive(Debug)]
pub struct Bot<'c> {
    config: &'c StudyConfig,
    pub profile: BotProfile,
    rng: ChaCha8Rng,
}

impl<'c> Bot<'c> {
    pub fn new(config: &'c StudyConfig, profile: BotProfile, rng: ChaCha8Rng) -> Self {
        Bot { config, profile, rng }
    }

    fn hit(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p.clamp(0.0, 1.0))
    }

    fn reveals(&mut self, phase: Phase, items: impl IntoIterator<Item = (usize, bool)>) -> Vec<Action> {
        let p = self.profile.reveal_probability;
        items
            .into_iter()
            .filter(|(_, has)| *has)
            .filter(|_| self.hit(p))
            .map(|(item_index, _)| Action::Event(ClientEvent::ExplainRevealed { item_index, phase }))
            .collect()
    }

    /// Events to send, then the submission for the stage. Empty once the
    /// session is over.
    pub fn actions(&mut self, v: &StateView) -> Result<Vec<Action>> {
        let config = self.config;
        let mut out = Vec::new();
        let submission = match &v.payload {
            StagePayload::Demographics { .. } => Submission::Demographics {
                age: Some(self.rng.gen_range(18..=70)),
                gender: Some(["female", "male", "diverse"].choose(&mut self.rng).unwrap().to_string()),
                ai_experience: Some(self.rng.gen_range(0..=i64::from(LIKERT_MAX))),
            },
            StagePayload::Intro { .. } => Submission::Intro {},
            StagePayload::Examples { items } => {
                out = self.reveals(Phase::Examples, items.iter().map(|i| (i.item_index, !i.explanations.is_empty())));
                Submission::Examples {}
            }
            StagePayload::Quiz { questions } => {
                let answers = if self.profile.policy == AnswerPolicy::Random {
                    questions.iter().map(|q| self.rng.gen_range(0..q.options.len() as i64)).collect()
                } else {
                    config.quiz.questions.iter().map(|q| q.correct as i64).collect()
                };
                Submission::Quiz { answers: Some(answers) }
            }
            StagePayload::Training { items } => {
                out = self.reveals(Phase::Training, items.iter().map(|i| (i.item_index, !i.explanations.is_empty())));
                Submission::Training {}
            }
            StagePayload::Prediction {
                item_index,
                instance,
                explanations,
                choices,
                ..
            } => {
                out = self.reveals(Phase::Prediction, [(*item_index, !explanations.is_empty())]);
                let truth = config.model.predict(instance)?.to_string();
                let right = match self.profile.policy {
                    AnswerPolicy::Oracle => true,
                    AnswerPolicy::Biased(p) => self.hit(p),
                    AnswerPolicy::Random => {
                        let pick = choices.choose(&mut self.rng).unwrap().clone();
                        pick == truth
                    }
                };
                let predicted = if right {
                    truth
                } else {
                    choices.iter().find(|c| **c != truth).unwrap().clone()
                };
                Submission::Prediction {
                    item: Some(*item_index as i64),
                    predicted: Some(predicted),
                    confidence: Some(self.rng.gen_range(0..=i64::from(CONFIDENCE_MAX))),
                    justification: Some("synthetic bot answer".into()),
                }
            }
            StagePayload::Understanding { features, .. } => {
                let mut ratings = std::collections::BTreeMap::new();
                for f in features {
                    let relevant = config.understanding[&f.feature];
                    let correct = if relevant { 4 } else { 0 };
                    let r = match self.profile.policy {
                        AnswerPolicy::Oracle => correct,
                        AnswerPolicy::Biased(p) => {
                            if self.hit(p) {
                                correct
                            } else {
                                2
                            }
                        }
                        AnswerPolicy::Random => self.rng.gen_range(0..=i64::from(LIKERT_MAX)),
                    };
                    ratings.insert(f.feature.clone(), r);
                }
                Submission::Understanding { ratings: Some(ratings) }
            }
            StagePayload::Satisfaction { items, scale } => Submission::Satisfaction {
                ratings: Some(
                    items
                        .iter()
                        .map(|_| self.rng.gen_range(i64::from(scale.min)..=i64::from(scale.max)))
                        .collect(),
                ),
            },
            StagePayload::Feedback {} => Submission::Feedback { text: None },
            StagePayload::Done { .. } | StagePayload::Excluded { .. } => return Ok(Vec::new()),
        };
        out.push(Action::Submit(submission));
        Ok(out)
    }
}

/// Runs one bot against an in-process session until it is done or excluded.
pub fn run_bot(session: &mut StudySession, bot: &mut Bot<'_>, clock: &dyn Clock) -> Result<Vec<LogEntry>> {
    let mut entries = Vec::new();
    loop {
        let actions = bot.actions(&view(session, bot.config)?)?;
        if actions.is_empty() {
            return Ok(entries);
        }
        for a in actions {
            entries.push(match a {
                Action::Event(e) => session.record_event(bot.config, e, clock.now())?,
                Action::Submit(s) => session.advance(bot.config, s, clock.now())?,
            });
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedSession {
    pub session: StudySession,
    pub profile: BotProfile,
}

/// Runs `bots` sessions one after another with the mixed profile rotation.
/// Session `i` is the study's `i`-th session; its bot draws from stream `i`
/// of `seed`.
pub fn simulate(config: &StudyConfig, bots: usize, seed: u64, clock: &dyn Clock) -> Result<Vec<SimulatedSession>> {
    (0..bots)
        .map(|i| {
            let profile = MIXED_PROFILES[i % MIXED_PROFILES.len()];
            let (mut session, _) = StudySession::create(config, i as u64, clock.now());
            let mut bot = Bot::new(config, profile, session_rng(seed, i as u64));
            run_bot(&mut session, &mut bot, clock)?;
            Ok(SimulatedSession { session, profile })
        })
        .collect()
}
