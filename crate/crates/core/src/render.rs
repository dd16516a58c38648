//! Participant-facing text for instances and explanations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{Explanation, ExplanationKind};
use crate::featurespace::{FeatureSchema, Instance, Value};

/// BC/AD style rendering of signed years.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Era {
    pub negative: String,
    pub positive: String,
    /// Text shown for the value 0.
    pub zero: String,
}

impl Default for Era {
    fn default() -> Self {
        Era {
            negative: "BC".into(),
            positive: "AD".into(),
            zero: "1 BC/AD boundary".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Formatter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub prefix: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub suffix: String,
    /// Replacement text per raw value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub era: Option<Era>,
}

impl Formatter {
    pub fn format(&self, value: &Value) -> String {
        let raw = value.to_string();
        if let Some(text) = self.labels.get(&raw) {
            return text.clone();
        }
        let body = match (&self.era, value) {
            (Some(era), Value::Int(0)) => era.zero.clone(),
            (Some(era), Value::Int(v)) if *v < 0 => format!("{} {}", v.unsigned_abs(), era.negative),
            (Some(era), Value::Int(v)) => format!("{v} {}", era.positive),
            _ => raw,
        };
        format!("{}{}{}", self.prefix, body, self.suffix)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    /// Placeholders: `{changes}`, `{values}`, `{original_label}`,
    /// `{altered_label}`, `{label}`.
    pub templates: BTreeMap<ExplanationKind, String>,
    pub formatters: BTreeMap<String, Formatter>,
}

impl TemplateSet {
    pub fn default_templates() -> BTreeMap<ExplanationKind, String> {
        let alter = "No matter whether {changes}, the AI would still have decided {label}.";
        BTreeMap::from([
            (ExplanationKind::Factual, "A similar document, with {values}, was also decided {label}.".into()),
            (ExplanationKind::Counterfactual, "If {changes}, the AI would have decided {altered_label}.".into()),
            (ExplanationKind::Semifactual, "Even if {changes}, the AI would still have decided {label}.".into()),
            (ExplanationKind::AlterfactualStrict, alter.into()),
            (ExplanationKind::AlterfactualIrrelevance, alter.into()),
        ])
    }

    /// Default templates with a plain formatter per feature.
    pub fn for_schema(schema: &FeatureSchema) -> Self {
        TemplateSet {
            templates: Self::default_templates(),
            formatters: schema
                .features()
                .iter()
                .map(|f| {
                    (
                        f.name.clone(),
                        Formatter {
                            display_name: Some(f.display_name.clone()),
                            ..Formatter::default()
                        },
                    )
                })
                .collect(),
        }
    }

    /// Defaults for the forged-documents schema: years in BC/AD.
    pub fn document(schema: &FeatureSchema) -> Self {
        let mut set = Self::for_schema(schema);
        if let Some(year) = set.formatters.get_mut("year") {
            year.era = Some(Era::default());
        }
        set
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "template set",
            reason: e.to_string(),
        })
    }

    fn formatter(&self, feature: &str) -> Result<&Formatter> {
        self.formatters
            .get(feature)
            .ok_or_else(|| Error::Render(format!("no formatter for feature `{feature}`")))
    }

    fn display_name<'a>(&'a self, feature: &'a str) -> Result<&'a str> {
        Ok(self.formatter(feature)?.display_name.as_deref().unwrap_or(feature))
    }
}

/// One row per feature in schema order.
pub fn render_descriptor(schema: &FeatureSchema, x: &Instance, templates: &TemplateSet) -> Result<Vec<(String, String)>> {
    schema.encode_or_err(x)?;
    schema
        .features()
        .iter()
        .map(|f| {
            let fmt = templates.formatter(&f.name)?;
            let name = fmt.display_name.clone().unwrap_or_else(|| f.display_name.clone());
            Ok((name, fmt.format(&x.values[&f.name])))
        })
        .collect()
}

fn join_clauses(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

pub fn render_explanation(e: &Explanation, templates: &TemplateSet) -> Result<String> {
    let template = templates
        .templates
        .get(&e.kind)
        .ok_or_else(|| Error::Render(format!("no template for {:?} explanations", e.kind)))?;
    if e.changed_features.is_empty() {
        return Err(Error::Render("explanation changes no feature".into()));
    }
    let mut changes = Vec::with_capacity(e.changed_features.len());
    let mut values = Vec::with_capacity(e.changed_features.len());
    for c in &e.changed_features {
        let name = templates.display_name(&c.feature)?;
        let value = templates.formatter(&c.feature)?.format(&c.to);
        changes.push(format!("the {name} had been {value}"));
        values.push(format!("{name} {value}"));
    }
    Ok(template
        .replace("{changes}", &join_clauses(&changes))
        .replace("{values}", &join_clauses(&values))
        .replace("{original_label}", e.original_label.as_str())
        .replace("{altered_label}", e.altered_label.as_str())
        .replace("{label}", e.altered_label.as_str()))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;
    use crate::explain::{counterfactual, AlterfactualMode, Explainer};
    use crate::fixtures::{builtin_document_model, document_instance as doc, document_schema};
    use crate::GridOptions;

    #[test]
    fn descriptor_rows() {
        let s = document_schema();
        let t = TemplateSet::document(&s);
        let rows = render_descriptor(&s, &doc("dark", 40, 100), &t).unwrap();
        assert_eq!(
            rows,
            vec![
                ("Parchment Color".to_string(), "dark".to_string()),
                ("Word Count".to_string(), "40".to_string()),
                ("Year of Creation".to_string(), "100 AD".to_string()),
            ]
        );
        let rows = render_descriptor(&s, &doc("light", 1, -200), &t).unwrap();
        assert_eq!(rows[2].1, "200 BC");
        let rows = render_descriptor(&s, &doc("light", 1, 0), &t).unwrap();
        assert_eq!(rows[2].1, "1 BC/AD boundary");

        let mut missing = t.clone();
        missing.formatters.remove("word_count");
        assert!(render_descriptor(&s, &doc("light", 1, 0), &missing).is_err());
    }

    #[test]
    fn explanation_texts() {
        let (schema, m) = builtin_document_model();
        let t = TemplateSet::document(&schema);
        let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
        let cf = ex.counterfactual(&doc("dark", 40, 100), None, None).unwrap();
        assert_eq!(
            render_explanation(&cf, &t).unwrap(),
            "If the Word Count had been 51, the AI would have decided authentic."
        );
        let af = ex
            .alterfactual(&doc("dark", 40, 100), AlterfactualMode::Irrelevance, None, None)
            .unwrap();
        assert_eq!(
            render_explanation(&af, &t).unwrap(),
            "No matter whether the Parchment Color had been light and the Year of Creation had been 200 BC, \
             the AI would still have decided forged."
        );
        let sf = ex.semifactual(&doc("dark", 40, 100), None).unwrap();
        assert_eq!(
            render_explanation(&sf, &t).unwrap(),
            "Even if the Word Count had been 50, the AI would still have decided forged."
        );
        let f = ex.factual(&doc("dark", 40, 100), &[doc("dark", 45, -3)]).unwrap();
        assert_eq!(
            render_explanation(&f, &t).unwrap(),
            "A similar document, with Word Count 45 and Year of Creation 3 BC, was also decided forged."
        );
    }

    #[test]
    fn three_clauses_use_commas() {
        assert_eq!(join_clauses(&["a".into(), "b".into(), "c".into()]), "a, b and c");
    }

    #[test]
    fn rejects_empty_and_unknown_kinds() {
        let (schema, m) = builtin_document_model();
        let mut e = counterfactual(&m, &doc("dark", 40, 100), None, &GridOptions::default(), None).unwrap();
        let mut t = TemplateSet::document(&schema);
        t.templates.remove(&ExplanationKind::Counterfactual);
        assert!(render_explanation(&e, &t).is_err());
        e.changed_features.clear();
        assert!(render_explanation(&e, &TemplateSet::document(&schema)).is_err());
    }

    #[test]
    fn template_set_json_roundtrip() {
        let t = TemplateSet::document(&document_schema());
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains("\"alterfactual_irrelevance\""));
        assert_eq!(TemplateSet::parse(&text).unwrap(), t);
        let custom = TemplateSet::parse(
            r#"{"templates":{"counterfactual":"Why not {altered_label}? Because {changes}."},
                "formatters":{"word_count":{"display_name":"words","suffix":" words","labels":{"1":"a single word"}}}}"#,
        )
        .unwrap();
        assert_eq!(custom.formatters["word_count"].format(&Value::Int(1)), "a single word");
        assert_eq!(custom.formatters["word_count"].format(&Value::Int(7)), "7 words");
    }

    proptest! {
        // distinct changed-feature sets give distinct texts, and every
        // mentioned feature is one changed feature
        #[test]
        fn texts_identify_their_changes(wc in 1i64..=500, year in -200i64..=200, color in 0usize..3) {
            let (schema, m) = builtin_document_model();
            let t = TemplateSet::document(&schema);
            let colors = ["light", "medium", "dark"];
            let base = doc("dark", 40, 100);
            let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
            let mut seen = HashMap::new();
            for mask in 1u8..8 {
                let altered = doc(
                    if mask & 1 != 0 { colors[color] } else { "dark" },
                    if mask & 2 != 0 { wc } else { 40 },
                    if mask & 4 != 0 { year } else { 100 },
                );
                let Ok(mut e) = ex.factual(&base, &[altered.clone()]) else { continue };
                e.kind = ExplanationKind::Semifactual;
                let text = render_explanation(&e, &t).unwrap();
                let mentioned = schema.features().iter().filter(|f| text.contains(&f.display_name)).count();
                prop_assert_eq!(mentioned, e.changed_features.len());
                let key: Vec<_> = e.changed_features.iter().map(|c| (c.feature.clone(), c.to.clone())).collect();
                let prev = seen.entry(text.clone()).or_insert_with(|| key.clone());
                prop_assert_eq!(&*prev, &key, "{}", text);
            }
        }
    }
}
