//! Study configuration: conditions, stimuli, questionnaires and payment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use alterfactual_core::render::TemplateSet;
use alterfactual_core::{Explanation, ExplanationKind, FeatureSchema, Instance, Label, RuleModel};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, StudyError};

pub const PREDICTION_ITEMS: usize = 8;
pub const TRAINING_ITEMS: usize = 4;
pub const SATISFACTION_ITEMS: usize = 7;
pub const CONFIDENCE_MAX: u8 = 6;
pub const LIKERT_MAX: u8 = 4;

/// Between-subject condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Alterfactual,
    Counterfactual,
    Combination,
    NoExplanation,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Alterfactual,
        Condition::Counterfactual,
        Condition::Combination,
        Condition::NoExplanation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Alterfactual => "alterfactual",
            Condition::Counterfactual => "counterfactual",
            Condition::Combination => "combination",
            Condition::NoExplanation => "no_explanation",
        }
    }

    pub fn shows_alterfactual(self) -> bool {
        matches!(self, Condition::Alterfactual | Condition::Combination)
    }

    pub fn shows_counterfactual(self) -> bool {
        matches!(self, Condition::Counterfactual | Condition::Combination)
    }

    pub fn shows_explanations(self) -> bool {
        self != Condition::NoExplanation
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown condition `{s}`"))
    }
}

/// A non-negative amount of money in cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cents(pub u32);

impl Cents {
    pub fn times(self, n: u32) -> Cents {
        Cents(self.0 * n)
    }
}

impl std::ops::Add for Cents {
    type Output = Cents;
    fn add(self, o: Cents) -> Cents {
        Cents(self.0 + o.0)
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Cents {
    type Err = String;

    /// Accepts `5`, `5.5` and `5.50`; more than two decimals is an error.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("invalid amount `{s}`");
        let (whole, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
        if whole.is_empty() || frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: u32 = whole.parse().map_err(|_| bad())?;
        let frac: u32 = if frac.is_empty() { 0 } else { format!("{frac:0<2}").parse().map_err(|_| bad())? };
        whole.checked_mul(100).and_then(|w| w.checked_add(frac)).map(Cents).ok_or_else(bad)
    }
}

impl Serialize for Cents {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cents {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(t) => t,
            Raw::Number(n) => n.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payment {
    pub base: Cents,
    pub per_correct: Cents,
}

impl Default for Payment {
    fn default() -> Self {
        Payment {
            base: Cents(500),
            per_correct: Cents(50),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionWeights {
    pub alterfactual: f64,
    pub counterfactual: f64,
    pub combination: f64,
    pub no_explanation: f64,
}

impl Default for ConditionWeights {
    fn default() -> Self {
        ConditionWeights {
            alterfactual: 1.0,
            counterfactual: 1.0,
            combination: 1.0,
            no_explanation: 1.0,
        }
    }
}

impl ConditionWeights {
    /// Weights in [`Condition::ALL`] order.
    pub fn as_array(&self) -> [f64; 4] {
        [self.alterfactual, self.counterfactual, self.combination, self.no_explanation]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizQuestion {
    pub question: String,
    pub options: Vec<String>,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quiz {
    pub questions: Vec<QuizQuestion>,
    /// Correct answers needed to pass; all questions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_threshold: Option<usize>,
}

impl Quiz {
    pub fn threshold(&self) -> usize {
        self.pass_threshold.unwrap_or(self.questions.len())
    }
}

/// A precomputed explanation with its participant-facing texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub explanation: Explanation,
    /// Text naming the decision, for stages where decisions are shown.
    pub text: String,
    /// Text that does not reveal the decision, for the prediction task.
    pub blind_text: String,
}

/// A document descriptor with its label and explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusItem {
    pub instance: Instance,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alterfactual: Option<Stimulus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterfactual: Option<Stimulus>,
}

impl StimulusItem {
    /// The explanations a participant in `condition` sees, alterfactual first.
    pub fn stimuli(&self, condition: Condition) -> Vec<(&'static str, &Stimulus)> {
        let mut out = Vec::new();
        if condition.shows_alterfactual() {
            out.extend(self.alterfactual.as_ref().map(|s| ("alterfactual", s)));
        }
        if condition.shows_counterfactual() {
            out.extend(self.counterfactual.as_ref().map(|s| ("counterfactual", s)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawConfig {
    schema: serde_json::Value,
    model: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    templates: Option<TemplateSet>,
    #[serde(default)]
    condition_weights: ConditionWeights,
    quiz: Quiz,
    examples: Vec<StimulusItem>,
    training: Vec<StimulusItem>,
    prediction: Vec<StimulusItem>,
    understanding: BTreeMap<String, bool>,
    satisfaction_items: Vec<String>,
    #[serde(default)]
    payment: Payment,
    seed: u64,
}

/// Everything a study run needs. Serialized as one JSON document with the
/// schema and model in their own JSON formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct StudyConfig {
    pub schema: Arc<FeatureSchema>,
    pub model: RuleModel,
    /// Formatting of descriptors shown to participants.
    pub templates: TemplateSet,
    pub condition_weights: ConditionWeights,
    pub quiz: Quiz,
    /// Shown during the examples stage.
    pub examples: Vec<StimulusItem>,
    pub training: Vec<StimulusItem>,
    pub prediction: Vec<StimulusItem>,
    /// Ground truth: is the feature relevant to the model's decisions?
    pub understanding: BTreeMap<String, bool>,
    pub satisfaction_items: Vec<String>,
    pub payment: Payment,
    pub seed: u64,
}

impl TryFrom<RawConfig> for StudyConfig {
    type Error = StudyError;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let schema = Arc::new(FeatureSchema::from_json(raw.schema)?);
        let model = RuleModel::from_json(raw.model, schema.clone())?;
        let templates = raw.templates.unwrap_or_else(|| TemplateSet::for_schema(&schema));
        let config = StudyConfig {
            schema,
            model,
            templates,
            condition_weights: raw.condition_weights,
            quiz: raw.quiz,
            examples: raw.examples,
            training: raw.training,
            prediction: raw.prediction,
            understanding: raw.understanding,
            satisfaction_items: raw.satisfaction_items,
            payment: raw.payment,
            seed: raw.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<StudyConfig> for RawConfig {
    fn from(c: StudyConfig) -> Self {
        RawConfig {
            schema: c.schema.to_json(),
            model: c.model.to_json(),
            templates: Some(c.templates),
            condition_weights: c.condition_weights,
            quiz: c.quiz,
            examples: c.examples,
            training: c.training,
            prediction: c.prediction,
            understanding: c.understanding,
            satisfaction_items: c.satisfaction_items,
            payment: c.payment,
            seed: c.seed,
        }
    }
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| StudyError::Config(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("study config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(StudyError::Config(m));
        let weights = self.condition_weights.as_array();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
            return fail("condition weights must be non-negative with a positive sum".into());
        }
        if self.prediction.len() != PREDICTION_ITEMS {
            return fail(format!("expected {PREDICTION_ITEMS} prediction items, got {}", self.prediction.len()));
        }
        if self.training.len() != TRAINING_ITEMS {
            return fail(format!("expected {TRAINING_ITEMS} training items, got {}", self.training.len()));
        }
        if self.examples.is_empty() {
            return fail("at least one example item is required".into());
        }
        if self.satisfaction_items.len() != SATISFACTION_ITEMS {
            return fail(format!(
                "expected {SATISFACTION_ITEMS} satisfaction items, got {}",
                self.satisfaction_items.len()
            ));
        }
        let mut per_label: BTreeMap<&str, usize> = BTreeMap::new();
        for item in &self.prediction {
            *per_label.entry(item.label.as_str()).or_default() += 1;
        }
        if per_label.len() != 2 || per_label.values().any(|&n| n != PREDICTION_ITEMS / 2) {
            return fail(format!("prediction items must split 4/4 over two labels, got {per_label:?}"));
        }
        let all = self.examples.iter().chain(&self.training).chain(&self.prediction);
        for item in all {
            let predicted = self.model.predict(&item.instance)?;
            if predicted != item.label {
                return fail(format!("item {} is labelled {} but the model decides {predicted}", item.instance, item.label));
            }
            let kinds = [
                (&item.alterfactual, "alterfactual"),
                (&item.counterfactual, "counterfactual"),
            ];
            for (stimulus, name) in kinds {
                let Some(s) = stimulus else {
                    return fail(format!("item {} has no {name} explanation", item.instance));
                };
                let ok = match name {
                    "alterfactual" => s.explanation.kind.is_alterfactual(),
                    _ => s.explanation.kind == ExplanationKind::Counterfactual,
                };
                if !ok || s.explanation.original != item.instance {
                    return fail(format!("item {} has a mismatched {name} explanation", item.instance));
                }
            }
        }
        let names: BTreeSet<&str> = self.schema.features().iter().map(|f| f.name.as_str()).collect();
        let truth: BTreeSet<&str> = self.understanding.keys().map(String::as_str).collect();
        if names != truth {
            return fail("understanding ground truth must name every feature exactly once".into());
        }
        if self.quiz.questions.is_empty() {
            return fail("the quiz needs at least one question".into());
        }
        for q in &self.quiz.questions {
            if q.options.len() < 2 || q.correct >= q.options.len() {
                return fail(format!("quiz question `{}` needs two options and a valid answer", q.question));
            }
        }
        if self.quiz.threshold() > self.quiz.questions.len() {
            return fail("quiz pass threshold exceeds the number of questions".into());
        }
        Ok(())
    }

    pub fn prediction_labels(&self) -> Vec<Label> {
        self.model.labels().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cents_parse_and_print() {
        assert_eq!("5.00".parse::<Cents>().unwrap(), Cents(500));
        assert_eq!("0.5".parse::<Cents>().unwrap(), Cents(50));
        assert_eq!("7".parse::<Cents>().unwrap(), Cents(700));
        assert!("1.234".parse::<Cents>().is_err());
        assert!("-1".parse::<Cents>().is_err());
        assert!(".5".parse::<Cents>().is_err());
        assert_eq!(Cents(250).to_string(), "2.50");
        assert_eq!(Cents(5).to_string(), "0.05");
        let p: Payment = serde_json::from_str(r#"{"base": 5.0, "per_correct": "0.50"}"#).unwrap();
        assert_eq!(p, Payment::default());
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"base":"5.00","per_correct":"0.50"}"#);
    }

    #[test]
    fn condition_names() {
        for c in Condition::ALL {
            assert_eq!(c.as_str().parse::<Condition>().unwrap(), c);
            assert_eq!(serde_json::to_value(c).unwrap(), c.as_str());
        }
        assert!(Condition::Combination.shows_alterfactual() && Condition::Combination.shows_counterfactual());
        assert!(!Condition::NoExplanation.shows_explanations());
    }
}
