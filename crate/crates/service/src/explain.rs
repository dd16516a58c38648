//! Stateless explanation requests, shared by the HTTP route and the CLI.

use std::collections::BTreeMap;
use std::sync::Arc;

use alterfactual_core::fixtures::{builtin_cactus_model, builtin_document_model};
use alterfactual_core::{
    AlterfactualMode, Error as EngineError, Explainer, Explanation, FeatureSchema, GridOptions, Instance, Label,
    RuleModel, SearchBudget,
};
use serde::{Deserialize, Serialize};

/// A model given by name (`document`, `cactus`) or inline as
/// `{"schema": ..., "model": ...}`. A study config file also has this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Builtin(String),
    Inline { schema: serde_json::Value, model: serde_json::Value },
}

impl Default for ModelSource {
    fn default() -> Self {
        ModelSource::Builtin("document".into())
    }
}

impl ModelSource {
    pub fn load(&self) -> Result<RuleModel, EngineError> {
        match self {
            ModelSource::Builtin(name) => match name.as_str() {
                "document" => Ok(builtin_document_model().1),
                "cactus" => Ok(builtin_cactus_model().1),
                other => Err(EngineError::InvalidModel(format!(
                    "unknown built-in model `{other}`; expected document or cactus"
                ))),
            },
            ModelSource::Inline { schema, model } => {
                let schema = Arc::new(FeatureSchema::from_json(schema.clone())?);
                RuleModel::from_json(model.clone(), schema)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Factual,
    Counterfactual,
    Semifactual,
    Alterfactual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRequest {
    #[serde(default)]
    pub model: ModelSource,
    pub instance: Instance,
    pub kind: RequestKind,
    /// Alterfactuals only; irrelevance mode when absent.
    #[serde(default)]
    pub mode: Option<AlterfactualMode>,
    /// Strict alterfactuals only.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Counterfactuals only: the decision to reach.
    #[serde(default)]
    pub target: Option<String>,
    /// Switches to seeded heuristic search.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub restarts: Option<u32>,
    #[serde(default)]
    pub max_steps: Option<u32>,
    /// Grid stride per numeric feature.
    #[serde(default)]
    pub stride: BTreeMap<String, u64>,
    /// Candidates for factual explanations.
    #[serde(default)]
    pub dataset: Option<Vec<Instance>>,
}

impl ExplainRequest {
    pub fn new(instance: Instance, kind: RequestKind) -> Self {
        ExplainRequest {
            model: ModelSource::default(),
            instance,
            kind,
            mode: None,
            epsilon: None,
            target: None,
            seed: None,
            restarts: None,
            max_steps: None,
            stride: BTreeMap::new(),
            dataset: None,
        }
    }

    fn budget(&self) -> Option<SearchBudget> {
        let d = SearchBudget::default();
        self.seed.map(|seed| {
            SearchBudget::new(seed, self.restarts.unwrap_or(d.restarts), self.max_steps.unwrap_or(d.max_steps))
        })
    }

    pub fn grid_options(&self) -> GridOptions {
        GridOptions {
            stride: self.stride.clone(),
        }
    }

    pub fn run(&self) -> Result<Explanation, EngineError> {
        let model = self.model.load()?;
        let explainer = Explainer::new(&model, &self.grid_options())?;
        let budget = self.budget();
        match self.kind {
            RequestKind::Factual => {
                let dataset = self.dataset.as_deref().unwrap_or_default();
                if dataset.is_empty() {
                    return Err(EngineError::Malformed {
                        what: "dataset",
                        reason: "factual explanations need a non-empty dataset".into(),
                    });
                }
                explainer.factual(&self.instance, dataset)
            }
            RequestKind::Counterfactual => {
                let target = self.target.as_deref().map(Label::new);
                explainer.counterfactual(&self.instance, target.as_ref(), budget.as_ref())
            }
            RequestKind::Semifactual => explainer.semifactual(&self.instance, budget.as_ref()),
            RequestKind::Alterfactual => explainer.alterfactual(
                &self.instance,
                self.mode.unwrap_or_default(),
                self.epsilon,
                budget.as_ref(),
            ),
        }
    }
}

/// Whether an engine error means "nothing to explain" rather than bad input.
pub fn is_not_found(e: &EngineError) -> bool {
    matches!(e, EngineError::NoExplanation(_) | EngineError::NoBoundary(_) | EngineError::SearchExhausted)
}
