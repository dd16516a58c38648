//! What a participant's client may see of a session.
//!
//! Views never carry the condition name, and until the session is done
//! they carry no decision for a prediction item and no margin.

use alterfactual_core::render::render_descriptor;
use alterfactual_core::{Domain, Instance};
use serde::{Deserialize, Serialize};

use crate::config::{Cents, StimulusItem, StudyConfig, CONFIDENCE_MAX, LIKERT_MAX};
use crate::error::Result;
use crate::scoring::score_predictions;
use crate::session::{Stage, StudySession};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorRow {
    pub feature: String,
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShownExplanation {
    /// `alterfactual` or `counterfactual`: the panel heading.
    pub kind: String,
    pub text: String,
}

/// An example or training item, shown with the AI's decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShownItem {
    pub item_index: usize,
    pub descriptor: Vec<DescriptorRow>,
    pub decision: String,
    pub explanations: Vec<ShownExplanation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub feature: String,
    pub name: String,
    /// Human-readable range, e.g. `1 to 500` or `light, medium, dark`.
    pub range: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub min: u8,
    pub max: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    /// `integer`, `text` or `likert`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizPrompt {
    pub question: String,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentSummary {
    pub accuracy: u32,
    pub items: u32,
    pub base: Cents,
    pub bonus: Cents,
    pub total: Cents,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StagePayload {
    Demographics {
        fields: Vec<FieldSpec>,
    },
    Intro {
        features: Vec<FeatureInfo>,
        example: Vec<DescriptorRow>,
        /// Explanation panels this participant will see.
        explanation_kinds: Vec<String>,
    },
    Examples {
        items: Vec<ShownItem>,
    },
    Quiz {
        questions: Vec<QuizPrompt>,
    },
    Training {
        items: Vec<ShownItem>,
    },
    Prediction {
        item_index: usize,
        position: usize,
        instance: Instance,
        descriptor: Vec<DescriptorRow>,
        explanations: Vec<ShownExplanation>,
        choices: Vec<String>,
        confidence: Scale,
    },
    Understanding {
        features: Vec<FeatureInfo>,
        scale: Scale,
    },
    Satisfaction {
        items: Vec<String>,
        scale: Scale,
    },
    Feedback {},
    Done {
        payment: PaymentSummary,
    },
    Excluded {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    /// 1-based position of the stage in this participant's sequence.
    pub stage_number: usize,
    pub stage_count: usize,
    pub items_answered: usize,
    pub items_total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub stage: Stage,
    /// Sequence number of the next event; echo it to make a submission idempotent.
    pub seq: u64,
    pub progress: Progress,
    pub payload: StagePayload,
}

fn descriptor(config: &StudyConfig, x: &Instance) -> Result<Vec<DescriptorRow>> {
    let rows = render_descriptor(&config.schema, x, &config.templates)?;
    Ok(config
        .schema
        .features()
        .iter()
        .zip(rows)
        .map(|(f, (name, value))| DescriptorRow {
            feature: f.name.clone(),
            name,
            value,
        })
        .collect())
}

fn features(config: &StudyConfig) -> Vec<FeatureInfo> {
    config
        .schema
        .features()
        .iter()
        .map(|f| {
            let fmt = config.templates.formatters.get(&f.name);
            let name = fmt.and_then(|t| t.display_name.clone()).unwrap_or_else(|| f.display_name.clone());
            let show = |v: i64| fmt.map(|t| t.format(&v.into())).unwrap_or_else(|| v.to_string());
            let range = match &f.domain {
                Domain::Numeric { min, max, .. } => format!("{} to {}", show(*min), show(*max)),
                Domain::Categorical { values } => values.join(", "),
            };
            FeatureInfo {
                feature: f.name.clone(),
                name,
                range,
            }
        })
        .collect()
}

fn shown(config: &StudyConfig, session: &StudySession, items: &[StimulusItem]) -> Result<Vec<ShownItem>> {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            Ok(ShownItem {
                item_index: i,
                descriptor: descriptor(config, &item.instance)?,
                decision: item.label.to_string(),
                explanations: item
                    .stimuli(session.condition)
                    .into_iter()
                    .map(|(kind, s)| ShownExplanation {
                        kind: kind.into(),
                        text: s.text.clone(),
                    })
                    .collect(),
            })
        })
        .collect()
}

fn likert() -> Scale {
    Scale { min: 0, max: LIKERT_MAX }
}

pub fn view(session: &StudySession, config: &StudyConfig) -> Result<StateView> {
    let payload = match session.stage {
        Stage::Demographics => {
            let field = |name: &str, kind: &str, min, max| FieldSpec {
                name: name.into(),
                kind: kind.into(),
                min,
                max,
            };
            StagePayload::Demographics {
                fields: vec![
                    field("age", "integer", Some(18), Some(120)),
                    field("gender", "text", None, None),
                    field("ai_experience", "likert", Some(0), Some(i64::from(LIKERT_MAX))),
                ],
            }
        }
        Stage::Intro => StagePayload::Intro {
            features: features(config),
            example: descriptor(config, &config.examples[0].instance)?,
            explanation_kinds: config.examples[0]
                .stimuli(session.condition)
                .into_iter()
                .map(|(k, _)| k.to_string())
                .collect(),
        },
        Stage::Examples => StagePayload::Examples {
            items: shown(config, session, &config.examples)?,
        },
        Stage::Quiz => StagePayload::Quiz {
            questions: config
                .quiz
                .questions
                .iter()
                .map(|q| QuizPrompt {
                    question: q.question.clone(),
                    options: q.options.clone(),
                })
                .collect(),
        },
        Stage::Training => StagePayload::Training {
            items: shown(config, session, &config.training)?,
        },
        Stage::Prediction => {
            let index = session.current_item().expect("prediction stage");
            let item = &config.prediction[index];
            StagePayload::Prediction {
                item_index: index,
                position: session.predictions.len(),
                instance: item.instance.clone(),
                descriptor: descriptor(config, &item.instance)?,
                explanations: item
                    .stimuli(session.condition)
                    .into_iter()
                    .map(|(kind, s)| ShownExplanation {
                        kind: kind.into(),
                        text: s.blind_text.clone(),
                    })
                    .collect(),
                choices: config.model.labels().iter().map(ToString::to_string).collect(),
                confidence: Scale {
                    min: 0,
                    max: CONFIDENCE_MAX,
                },
            }
        }
        Stage::Understanding => StagePayload::Understanding {
            features: features(config),
            scale: likert(),
        },
        Stage::Satisfaction => StagePayload::Satisfaction {
            items: config.satisfaction_items.clone(),
            scale: likert(),
        },
        Stage::Feedback => StagePayload::Feedback {},
        Stage::Done => {
            let score = score_predictions(session, config)?;
            StagePayload::Done {
                payment: PaymentSummary {
                    accuracy: score.accuracy,
                    items: config.prediction.len() as u32,
                    base: config.payment.base,
                    bonus: score.bonus,
                    total: score.total,
                },
            }
        }
        Stage::Excluded => StagePayload::Excluded {
            reason: "The quiz was not passed.".into(),
        },
    };
    let sequence = Stage::sequence(session.condition);
    let stage_number = sequence.iter().position(|s| *s == session.stage).map_or(sequence.len(), |i| i + 1);
    Ok(StateView {
        session_id: session.id.clone(),
        stage: session.stage,
        seq: session.next_seq(),
        progress: Progress {
            stage_number,
            stage_count: sequence.len(),
            items_answered: session.predictions.len(),
            items_total: config.prediction.len(),
        },
        payload,
    })
}
