//! Explanation engine for rule-based classifiers over mixed feature spaces.
//!
//! * [`featurespace`]: schemas, instances, the normalized distance, grids.
//! * [`model`]: first-match rule models and the JSON rule format.
//! * [`explain`]: margins, feature relevance and the factual, counterfactual,
//!   semifactual and alterfactual generators.
//! * [`render`]: participant-facing text.
//! * [`fixtures`]: the forged-documents and cactus models.

pub mod error;
pub mod explain;
pub mod featurespace;
pub mod fixtures;
pub mod model;
pub mod render;

pub use error::{Error, Result, Violation, Violations};
pub use explain::{
    AlterfactualMode, ChangedFeature, Explainer, Explanation, ExplanationKind, Margin, Measure, RelevanceReport,
    SearchBudget, Strategy,
};
pub use featurespace::{
    feature_delta, Domain, FeatureKind, FeatureSchema, FeatureSpec, Fraction, Grid, GridOptions, Instance, Point,
    Value,
};
pub use model::{Condition, Label, Operator, Rule, RuleModel};
