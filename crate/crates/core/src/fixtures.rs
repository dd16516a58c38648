//! Built-in models: the forged-documents classifier used in the study and a
//! two-feature cactus toy model.

use std::sync::Arc;

use crate::featurespace::{FeatureSchema, FeatureSpec, Instance, Value};
use crate::model::{Condition, Label, Operator, Rule, RuleModel};

pub const FORGED: &str = "forged";
pub const AUTHENTIC: &str = "authentic";

pub fn document_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        FeatureSpec::nominal("parchment_color", "Parchment Color", &["light", "medium", "dark"]),
        FeatureSpec::numeric("word_count", "Word Count", 1, 500, 1),
        // 200 BC .. 200 AD; year 0 is kept as a plain integer
        FeatureSpec::numeric("year", "Year of Creation", -200, 200, 1),
    ])
    .expect("document schema is valid")
}

/// Forged if the word count is at most 50, or between 51 and 150 on light or
/// medium parchment; authentic otherwise. The year is never consulted.
pub fn builtin_document_model() -> (Arc<FeatureSchema>, RuleModel) {
    let schema = Arc::new(document_schema());
    let rules = vec![
        Rule {
            when: vec![Condition::new("word_count", Operator::AtMost { value: Value::Int(50) })],
            label: Label::new(FORGED),
        },
        Rule {
            when: vec![
                Condition::new(
                    "word_count",
                    Operator::InRange {
                        min: Value::Int(51),
                        max: Value::Int(150),
                    },
                ),
                Condition::new(
                    "parchment_color",
                    Operator::InSet {
                        values: vec!["light".into(), "medium".into()],
                    },
                ),
            ],
            label: Label::new(FORGED),
        },
    ];
    let model = RuleModel::new(
        Arc::clone(&schema),
        vec![Label::new(FORGED), Label::new(AUTHENTIC)],
        rules,
        Label::new(AUTHENTIC),
    )
    .expect("document model is valid");
    (schema, model)
}

/// Temperature decides survival, weather never does.
pub fn builtin_cactus_model() -> (Arc<FeatureSchema>, RuleModel) {
    let schema = Arc::new(
        FeatureSchema::new(vec![
            FeatureSpec::numeric("temperature", "Temperature", -10, 50, 1),
            FeatureSpec::nominal("weather", "Weather", &["sunny", "cloudy", "rainy"]),
        ])
        .expect("cactus schema is valid"),
    );
    let model = RuleModel::new(
        Arc::clone(&schema),
        vec![Label::new("survives"), Label::new("dies")],
        vec![Rule {
            when: vec![Condition::new("temperature", Operator::AtLeast { value: Value::Int(5) })],
            label: Label::new("survives"),
        }],
        Label::new("dies"),
    )
    .expect("cactus model is valid");
    (schema, model)
}

pub fn document_instance(color: &str, word_count: i64, year: i64) -> Instance {
    Instance::new([
        ("parchment_color", Value::from(color)),
        ("word_count", Value::from(word_count)),
        ("year", Value::from(year)),
    ])
}
