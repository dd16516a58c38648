//! First-match rule classifiers.
//!
//! A [`RuleModel`] is an ordered list of conjunctive rules plus a default
//! label. Conditions are compiled against the schema once, so prediction on
//! encoded points is a handful of integer comparisons.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurespace::{FeatureSchema, Instance, Point, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub String);

impl Label {
    pub fn new(name: &str) -> Self {
        Label(name.to_owned())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Operator {
    #[serde(rename = "le", alias = "<=")]
    AtMost { value: Value },
    #[serde(rename = "ge", alias = ">=")]
    AtLeast { value: Value },
    #[serde(rename = "eq", alias = "=", alias = "==")]
    Equals { value: Value },
    #[serde(rename = "in", alias = "in_set")]
    InSet { values: Vec<Value> },
    #[serde(rename = "range", alias = "in_range")]
    InRange { min: Value, max: Value },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    #[serde(flatten)]
    pub op: Operator,
}

impl Condition {
    pub fn new(feature: &str, op: Operator) -> Self {
        Condition {
            feature: feature.to_owned(),
            op,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    #[serde(default)]
    pub when: Vec<Condition>,
    pub label: Label,
}

/// Condition compiled to encoded coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Test {
    Range { lo: i64, hi: i64 },
    Member(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CompiledRule {
    tests: Vec<(usize, Test)>,
    label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleModel {
    schema: Arc<FeatureSchema>,
    labels: Vec<Label>,
    rules: Vec<Rule>,
    default_label: Label,
    compiled: Vec<CompiledRule>,
    default_index: usize,
}

impl RuleModel {
    pub fn new(schema: Arc<FeatureSchema>, labels: Vec<Label>, rules: Vec<Rule>, default_label: Label) -> Result<Self> {
        let fail = |m: String| Error::InvalidModel(m);
        if labels.len() < 2 {
            return Err(fail("a model needs at least two labels".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.0.is_empty() {
                return Err(fail("labels must not be empty".into()));
            }
            if !seen.insert(l) {
                return Err(fail(format!("duplicate label `{l}`")));
            }
        }
        let label_index = |l: &Label| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| fail(format!("unknown label `{l}`")))
        };
        let default_index = label_index(&default_label)?;
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in &rules {
            let tests = rule
                .when
                .iter()
                .map(|c| compile_condition(&schema, c))
                .collect::<Result<_>>()?;
            compiled.push(CompiledRule {
                tests,
                label: label_index(&rule.label)?,
            });
        }
        Ok(RuleModel {
            schema,
            labels,
            rules,
            default_label,
            compiled,
            default_index,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn shared_schema(&self) -> Arc<FeatureSchema> {
        Arc::clone(&self.schema)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn default_label(&self) -> &Label {
        &self.default_label
    }

    pub fn label(&self, index: usize) -> &Label {
        &self.labels[index]
    }

    pub fn label_index(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Label index of the first rule matching `point`, else the default.
    #[inline]
    pub fn predict_point(&self, point: &[i64]) -> usize {
        'rules: for rule in &self.compiled {
            for (i, test) in &rule.tests {
                let c = point[*i];
                let hit = match test {
                    Test::Range { lo, hi } => *lo <= c && c <= *hi,
                    Test::Member(set) => set.binary_search(&c).is_ok(),
                };
                if !hit {
                    continue 'rules;
                }
            }
            return rule.label;
        }
        self.default_index
    }

    pub fn predict(&self, x: &Instance) -> Result<Label> {
        let p = self.schema.encode_or_err(x)?;
        Ok(self.labels[self.predict_point(&p)].clone())
    }

    /// Indices of features read by at least one rule.
    pub fn referenced_features(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.compiled.iter().flat_map(|r| r.tests.iter().map(|t| t.0)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn predict_encoded(&self, p: &Point) -> &Label {
        &self.labels[self.predict_point(p)]
    }
}

fn compile_condition(schema: &FeatureSchema, c: &Condition) -> Result<(usize, Test)> {
    let idx = schema
        .index_of(&c.feature)
        .ok_or_else(|| Error::InvalidModel(format!("unknown feature `{}`", c.feature)))?;
    let spec = &schema.features()[idx];
    let enc = |v: &Value| {
        spec.encode(v)
            .map_err(|r| Error::InvalidModel(format!("condition on `{}`: {r}", c.feature)))
    };
    let ordered = |op: &str| {
        if spec.kind.is_ordered() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "operator `{op}` needs an ordered feature, `{}` is nominal",
                c.feature
            )))
        }
    };
    let test = match &c.op {
        Operator::AtMost { value } => {
            ordered("le")?;
            Test::Range {
                lo: i64::MIN,
                hi: enc(value)?,
            }
        }
        Operator::AtLeast { value } => {
            ordered("ge")?;
            Test::Range {
                lo: enc(value)?,
                hi: i64::MAX,
            }
        }
        Operator::InRange { min, max } => {
            ordered("range")?;
            let (lo, hi) = (enc(min)?, enc(max)?);
            if lo > hi {
                return Err(Error::InvalidModel(format!("empty range on `{}`", c.feature)));
            }
            Test::Range { lo, hi }
        }
        Operator::Equals { value } => Test::Member(vec![enc(value)?]),
        Operator::InSet { values } => {
            if values.is_empty() {
                return Err(Error::InvalidModel(format!("empty value set on `{}`", c.feature)));
            }
            let mut set = values.iter().map(enc).collect::<Result<Vec<_>>>()?;
            set.sort_unstable();
            set.dedup();
            Test::Member(set)
        }
    };
    Ok((idx, test))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    labels: Vec<Label>,
    default: Option<Label>,
    #[serde(default)]
    rules: Vec<Rule>,
}

impl RuleModel {
    /// Parses `{"labels":[...],"default":"...","rules":[{"when":[...],"label":"..."}]}`.
    pub fn parse(text: &str, schema: Arc<FeatureSchema>) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "rule model",
            reason: e.to_string(),
        })?;
        Self::from_raw(raw, schema)
    }

    pub fn from_json(value: serde_json::Value, schema: Arc<FeatureSchema>) -> Result<Self> {
        let raw: RawModel = serde_json::from_value(value).map_err(|e| Error::Malformed {
            what: "rule model",
            reason: e.to_string(),
        })?;
        Self::from_raw(raw, schema)
    }

    fn from_raw(raw: RawModel, schema: Arc<FeatureSchema>) -> Result<Self> {
        let default = raw
            .default
            .ok_or_else(|| Error::InvalidModel("missing default label".into()))?;
        Self::new(schema, raw.labels, raw.rules, default)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RawModel {
            labels: self.labels.clone(),
            default: Some(self.default_label.clone()),
            rules: self.rules.clone(),
        })
        .expect("model serializes")
    }
}
