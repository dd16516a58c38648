//! Mixed categorical/numeric input spaces.
//!
//! A [`FeatureSchema`] fixes the order and domain of every feature. Instances
//! are exchanged as name/value maps ([`Instance`]) and encoded into dense
//! [`Point`]s for the search code: numeric features keep their raw integer
//! value, categorical features store the index of their label. Because both
//! encodings grow with the declared order, the derived `Ord` on `Point` is the
//! lexicographic tie-break order used everywhere in this crate.
//!
//! Distances are the mean of per-feature normalized deltas. They are carried
//! as exact [`Fraction`]s over a schema-wide denominator so that ties resolve
//! without rounding.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::Deref;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, Violations};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    #[serde(alias = "numeric-integer", alias = "numeric_integer", alias = "integer")]
    Numeric,
    #[serde(alias = "categorical-nominal", alias = "categorical_nominal")]
    Nominal,
    #[serde(alias = "categorical-ordinal", alias = "categorical_ordinal")]
    Ordinal,
}

impl FeatureKind {
    pub fn is_categorical(self) -> bool {
        !matches!(self, FeatureKind::Numeric)
    }

    /// Whether values of this kind carry an order (`<=`, `>=`, ranges).
    pub fn is_ordered(self) -> bool {
        !matches!(self, FeatureKind::Nominal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Numeric { min: i64, max: i64, step: i64 },
    Categorical { values: Vec<String> },
}

/// A feature value: an integer for numeric features, a label otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Label(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            Value::Int(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Label(v.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub domain: Domain,
    pub display_name: String,
}

impl FeatureSpec {
    pub fn numeric(name: &str, display_name: &str, min: i64, max: i64, step: i64) -> Self {
        FeatureSpec {
            name: name.to_owned(),
            kind: FeatureKind::Numeric,
            domain: Domain::Numeric { min, max, step },
            display_name: display_name.to_owned(),
        }
    }

    pub fn nominal(name: &str, display_name: &str, values: &[&str]) -> Self {
        Self::categorical(name, display_name, FeatureKind::Nominal, values)
    }

    pub fn ordinal(name: &str, display_name: &str, values: &[&str]) -> Self {
        Self::categorical(name, display_name, FeatureKind::Ordinal, values)
    }

    fn categorical(name: &str, display_name: &str, kind: FeatureKind, values: &[&str]) -> Self {
        FeatureSpec {
            name: name.to_owned(),
            kind,
            domain: Domain::Categorical {
                values: values.iter().map(|v| (*v).to_owned()).collect(),
            },
            display_name: display_name.to_owned(),
        }
    }

    fn check(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidFeature {
            feature: self.name.clone(),
            reason,
        };
        if self.name.is_empty() {
            return Err(fail("name must not be empty".into()));
        }
        match (&self.domain, self.kind) {
            (Domain::Numeric { min, max, step }, FeatureKind::Numeric) => {
                if min >= max {
                    return Err(fail(format!("lower bound {min} must be below upper bound {max}")));
                }
                if *step < 1 {
                    return Err(fail(format!("step {step} must be at least 1")));
                }
                if (max - min) % step != 0 {
                    return Err(fail(format!("range {min}..{max} is not divisible by step {step}")));
                }
            }
            (Domain::Categorical { values }, kind) if kind.is_categorical() => {
                if values.is_empty() {
                    return Err(fail("categorical value list is empty".into()));
                }
                let mut seen = HashSet::new();
                for v in values {
                    if !seen.insert(v.as_str()) {
                        return Err(fail(format!("duplicate value `{v}`")));
                    }
                }
            }
            _ => return Err(fail("domain does not match feature kind".into())),
        }
        Ok(())
    }

    /// Encoded coordinate of `value`, or why it is outside the domain.
    pub fn encode(&self, value: &Value) -> std::result::Result<i64, String> {
        match (&self.domain, value) {
            (Domain::Numeric { min, max, step }, Value::Int(v)) => {
                if v < min || v > max {
                    Err(format!("value {v} outside range [{min}, {max}]"))
                } else if (v - min) % step != 0 {
                    Err(format!("value {v} is not on step {step} from {min}"))
                } else {
                    Ok(*v)
                }
            }
            (Domain::Categorical { values }, Value::Label(s)) => values
                .iter()
                .position(|v| v == s)
                .map(|i| i as i64)
                .ok_or_else(|| format!("unknown label `{s}`")),
            (Domain::Numeric { .. }, Value::Label(s)) => Err(format!("expected an integer, got `{s}`")),
            (Domain::Categorical { .. }, Value::Int(v)) => Err(format!("expected a label, got {v}")),
        }
    }

    pub fn decode(&self, coord: i64) -> Value {
        match &self.domain {
            Domain::Numeric { .. } => Value::Int(coord),
            Domain::Categorical { values } => Value::Label(values[coord as usize].clone()),
        }
    }

    /// Denominator of the per-feature normalized delta.
    fn span(&self) -> u128 {
        match (&self.domain, self.kind) {
            (Domain::Numeric { min, max, .. }, _) => (max - min) as u128,
            (Domain::Categorical { values }, FeatureKind::Ordinal) => (values.len() as u128 - 1).max(1),
            _ => 1,
        }
    }

    /// Unnormalized delta between two encoded coordinates.
    fn raw_delta(&self, a: i64, b: i64) -> u128 {
        match self.kind {
            FeatureKind::Nominal => u128::from(a != b),
            _ => a.abs_diff(b) as u128,
        }
    }

    /// Every encoded coordinate of the domain, ascending.
    pub fn coords(&self) -> Vec<i64> {
        self.coords_with_stride(1)
    }

    fn coords_with_stride(&self, stride: u64) -> Vec<i64> {
        match &self.domain {
            Domain::Numeric { min, max, step } => {
                let stride = step * stride as i64;
                (0..)
                    .map(|k| min + k * stride)
                    .take_while(|v| v <= max)
                    .collect()
            }
            Domain::Categorical { values } => (0..values.len() as i64).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        match &self.domain {
            Domain::Numeric { min, max, step } => ((max - min) / step + 1) as usize,
            Domain::Categorical { values } => values.len(),
        }
    }
}

/// Normalized difference between two values of one feature, in `[0, 1]`.
pub fn feature_delta(spec: &FeatureSpec, v1: &Value, v2: &Value) -> Result<f64> {
    let enc = |v: &Value| {
        spec.encode(v).map_err(|reason| Error::InvalidFeature {
            feature: spec.name.clone(),
            reason,
        })
    };
    let (a, b) = (enc(v1)?, enc(v2)?);
    Ok(spec.raw_delta(a, b) as f64 / spec.span() as f64)
}

/// A non-negative rational. Distances and margins are reported with one.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u128,
    pub den: u128,
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };

    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0, "zero denominator");
        Fraction { num, den }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn reduced(&self) -> Fraction {
        let g = gcd(self.num, self.den).max(1);
        Fraction {
            num: self.num / g,
            den: self.den / g,
        }
    }

    /// `|self - other|`.
    pub fn abs_diff(&self, other: &Fraction) -> Fraction {
        if self.den == other.den {
            return Fraction::new(self.num.abs_diff(other.num), self.den);
        }
        let (a, b) = (self.num * other.den, other.num * self.den);
        Fraction::new(a.abs_diff(b), self.den * other.den)
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.den == other.den {
            self.num.cmp(&other.num)
        } else {
            (self.num * other.den).cmp(&(other.num * self.den))
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        write!(f, "{}/{}", r.num, r.den)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Dense encoding of an instance in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(pub Vec<i64>);

impl Deref for Point {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

/// An input as a name → value map.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance {
    pub values: IndexMap<String, Value>,
}

impl Instance {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<Value>,
    {
        Instance {
            values: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    pub fn get(&self, feature: &str) -> Option<&Value> {
        self.values.get(feature)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.values.values().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
    /// lcm of all spans; per-feature deltas are scaled by `unit / span`.
    unit: u128,
    weights: Vec<u128>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Malformed {
                what: "schema",
                reason: "no features".into(),
            });
        }
        let mut names = HashSet::new();
        for f in &features {
            f.check()?;
            if !names.insert(f.name.as_str()) {
                return Err(Error::InvalidFeature {
                    feature: f.name.clone(),
                    reason: "duplicate feature name".into(),
                });
            }
        }
        let mut unit: u128 = 1;
        for f in &features {
            let span = f.span();
            unit = (unit / gcd(unit, span))
                .checked_mul(span)
                // keeps cross-multiplied comparisons inside u128
                .filter(|u| u * (features.len() as u128) <= 1 << 60)
                .ok_or_else(|| Error::InvalidFeature {
                    feature: f.name.clone(),
                    reason: "domain spans too large for exact distance arithmetic".into(),
                })?;
        }
        let weights = features.iter().map(|f| unit / f.span()).collect();
        Ok(FeatureSchema {
            features,
            unit,
            weights,
        })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Checks `inst` against the schema, listing every violation.
    pub fn validate_instance(&self, inst: &Instance) -> std::result::Result<(), Violations> {
        self.encode(inst).map(|_| ())
    }

    pub fn encode(&self, inst: &Instance) -> std::result::Result<Point, Violations> {
        let mut violations = Vec::new();
        let mut coords = Vec::with_capacity(self.len());
        for f in &self.features {
            match inst.values.get(&f.name) {
                None => violations.push(Violation::Missing {
                    feature: f.name.clone(),
                }),
                Some(v) => match f.encode(v) {
                    Ok(c) => coords.push(c),
                    Err(reason) => violations.push(Violation::OutOfDomain {
                        feature: f.name.clone(),
                        reason,
                    }),
                },
            }
        }
        for name in inst.values.keys() {
            if self.index_of(name).is_none() {
                violations.push(Violation::UnknownFeature {
                    feature: name.clone(),
                });
            }
        }
        if violations.is_empty() {
            Ok(Point(coords))
        } else {
            Err(Violations(violations))
        }
    }

    pub fn encode_or_err(&self, inst: &Instance) -> Result<Point> {
        self.encode(inst).map_err(Error::InvalidInstance)
    }

    pub fn decode(&self, point: &Point) -> Instance {
        Instance {
            values: self
                .features
                .iter()
                .zip(point.iter())
                .map(|(f, &c)| (f.name.clone(), f.decode(c)))
                .collect(),
        }
    }

    /// Denominator shared by every distance on this schema.
    pub fn distance_denominator(&self) -> u128 {
        self.unit * self.len() as u128
    }

    /// Scaled delta of feature `i`; divide by [`Self::distance_denominator`].
    pub fn scaled_delta(&self, i: usize, a: i64, b: i64) -> u128 {
        self.features[i].raw_delta(a, b) * self.weights[i]
    }

    pub fn point_distance(&self, x: &[i64], y: &[i64]) -> Fraction {
        let num = (0..self.len()).map(|i| self.scaled_delta(i, x[i], y[i])).sum();
        Fraction::new(num, self.distance_denominator())
    }

    /// Mean normalized per-feature delta between two instances.
    pub fn distance(&self, x: &Instance, y: &Instance) -> Result<Fraction> {
        let px = self.encode_or_err(x)?;
        let py = self.encode_or_err(y)?;
        Ok(self.point_distance(&px, &py))
    }

    /// Lazily yields every instance of the (possibly strided) grid in
    /// lexicographic order.
    pub fn enumerate_grid(&self, opts: &GridOptions) -> Result<impl Iterator<Item = Instance> + '_> {
        let grid = Grid::new(self, opts)?;
        Ok(grid.into_points().map(move |p| self.decode(&p)))
    }
}

/// Per-feature stride multipliers applied to the numeric step.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GridOptions {
    #[serde(default)]
    pub stride: BTreeMap<String, u64>,
}

impl GridOptions {
    pub fn with_stride(mut self, feature: &str, stride: u64) -> Self {
        self.stride.insert(feature.to_owned(), stride);
        self
    }
}

/// The finite set of points searched by the explanation generators.
#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<Vec<i64>>,
    /// `radix[i]` = number of grid points per unit step of axis `i`.
    radix: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(schema: &FeatureSchema, opts: &GridOptions) -> Result<Self> {
        for (name, &stride) in &opts.stride {
            let f = schema
                .feature(name)
                .ok_or_else(|| Error::InvalidGrid(format!("unknown feature `{name}`")))?;
            if stride == 0 {
                return Err(Error::InvalidGrid(format!("stride of `{name}` must be at least 1")));
            }
            if f.kind.is_categorical() && stride != 1 {
                return Err(Error::InvalidGrid(format!("categorical feature `{name}` cannot be strided")));
            }
        }
        let axes = schema
            .features()
            .iter()
            .map(|f| f.coords_with_stride(opts.stride.get(&f.name).copied().unwrap_or(1)))
            .collect();
        Ok(Self::from_axes(axes))
    }

    pub fn from_axes(axes: Vec<Vec<i64>>) -> Self {
        let mut radix = vec![1; axes.len()];
        for i in (0..axes.len().saturating_sub(1)).rev() {
            radix[i] = radix[i + 1] * axes[i + 1].len();
        }
        let len = axes.iter().map(Vec::len).product();
        Grid { axes, radix, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axes(&self) -> &[Vec<i64>] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &[i64] {
        &self.axes[i]
    }

    /// The point at position `index` in lexicographic order.
    pub fn point_at(&self, index: usize) -> Point {
        let mut out = Vec::with_capacity(self.axes.len());
        self.write_point(index, &mut out);
        Point(out)
    }

    pub fn write_point(&self, mut index: usize, out: &mut Vec<i64>) {
        out.clear();
        for (axis, &r) in self.axes.iter().zip(&self.radix) {
            out.push(axis[index / r]);
            index %= r;
        }
    }

    /// Position of `point` in lexicographic order, if it lies on the grid.
    pub fn index_of(&self, point: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for ((axis, &r), &c) in self.axes.iter().zip(&self.radix).zip(point) {
            idx += axis.binary_search(&c).ok()? * r;
        }
        Some(idx)
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.index_of(point).is_some()
    }

    pub fn into_points(self) -> impl Iterator<Item = Point> {
        (0..self.len).map(move |i| self.point_at(i))
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len).map(|i| self.point_at(i))
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct RawSchema {
    features: Vec<RawFeature>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    name: String,
    kind: FeatureKind,
    #[serde(default)]
    display_name: Option<String>,
    #[serde(default)]
    min: Option<i64>,
    #[serde(default)]
    max: Option<i64>,
    #[serde(default)]
    step: Option<i64>,
    #[serde(default)]
    values: Option<Vec<String>>,
}

impl FeatureSchema {
    /// Parses the JSON schema format:
    /// `{"features":[{"name","kind","display_name","min","max","step" | "values"}]}`.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSchema = serde_json::from_str(text).map_err(|e| Error::Malformed {
            what: "schema",
            reason: e.to_string(),
        })?;
        Self::from_value(raw)
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let raw: RawSchema = serde_json::from_value(value).map_err(|e| Error::Malformed {
            what: "schema",
            reason: e.to_string(),
        })?;
        Self::from_value(raw)
    }

    fn from_value(raw: RawSchema) -> Result<Self> {
        let mut features = Vec::with_capacity(raw.features.len());
        for f in raw.features {
            let fail = |reason: &str| Error::InvalidFeature {
                feature: f.name.clone(),
                reason: reason.to_owned(),
            };
            let domain = match f.kind {
                FeatureKind::Numeric => {
                    if f.values.is_some() {
                        return Err(fail("numeric feature must not list values"));
                    }
                    Domain::Numeric {
                        min: f.min.ok_or_else(|| fail("missing `min`"))?,
                        max: f.max.ok_or_else(|| fail("missing `max`"))?,
                        step: f.step.unwrap_or(1),
                    }
                }
                _ => {
                    if f.min.is_some() || f.max.is_some() || f.step.is_some() {
                        return Err(fail("categorical feature must not declare min/max/step"));
                    }
                    Domain::Categorical {
                        values: f.values.ok_or_else(|| fail("missing `values`"))?,
                    }
                }
            };
            features.push(FeatureSpec {
                display_name: f.display_name.unwrap_or_else(|| f.name.clone()),
                name: f.name,
                kind: f.kind,
                domain,
            });
        }
        Self::new(features)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let raw = RawSchema {
            features: self
                .features
                .iter()
                .map(|f| {
                    let (min, max, step, values) = match &f.domain {
                        Domain::Numeric { min, max, step } => (Some(*min), Some(*max), Some(*step), None),
                        Domain::Categorical { values } => (None, None, None, Some(values.clone())),
                    };
                    RawFeature {
                        name: f.name.clone(),
                        kind: f.kind,
                        display_name: Some(f.display_name.clone()),
                        min,
                        max,
                        step,
                        values,
                    }
                })
                .collect(),
        };
        serde_json::to_value(raw).expect("schema serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::document_schema;

    fn doc(color: &str, wc: i64, year: i64) -> Instance {
        Instance::new([
            ("parchment_color", Value::from(color)),
            ("word_count", Value::from(wc)),
            ("year", Value::from(year)),
        ])
    }

    const DOC_SCHEMA: &str = r#"{"features":[
        {"name":"parchment_color","kind":"nominal","display_name":"Parchment Color","values":["light","medium","dark"]},
        {"name":"word_count","kind":"numeric","display_name":"Word Count","min":1,"max":500,"step":1},
        {"name":"year","kind":"numeric","display_name":"Year of Creation","min":-200,"max":200,"step":1}
    ]}"#;

    #[test]
    fn parses_document_schema() {
        let s = FeatureSchema::parse(DOC_SCHEMA).unwrap();
        assert_eq!(s, document_schema());
        assert_eq!(s.features()[1].domain, Domain::Numeric { min: 1, max: 500, step: 1 });
        assert_eq!(FeatureSchema::from_json(s.to_json()).unwrap(), s);
    }

    #[test]
    fn rejects_degenerate_bounds() {
        let err = FeatureSchema::parse(r#"{"features":[{"name":"a","kind":"numeric","min":0,"max":0}]}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidFeature { ref feature, .. } if feature == "a"), "{err}");
    }

    #[test]
    fn rejects_duplicate_names() {
        let err = FeatureSchema::parse(
            r#"{"features":[{"name":"a","kind":"numeric","min":0,"max":3},{"name":"a","kind":"nominal","values":["x"]}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn rejects_bad_steps_and_values() {
        assert!(FeatureSchema::new(vec![FeatureSpec::numeric("a", "A", 0, 10, 3)]).is_err());
        assert!(FeatureSchema::new(vec![FeatureSpec::nominal("c", "C", &["x", "x"])]).is_err());
        assert!(FeatureSchema::new(vec![FeatureSpec::nominal("c", "C", &[])]).is_err());
        assert!(FeatureSchema::parse("{").is_err());
    }

    #[test]
    fn validates_instances() {
        let s = document_schema();
        assert!(s.validate_instance(&doc("dark", 40, 100)).is_ok());

        let v = s.validate_instance(&doc("dark", 501, 100)).unwrap_err();
        assert_eq!(v.0.len(), 1);
        assert!(matches!(&v.0[0], Violation::OutOfDomain { feature, .. } if feature == "word_count"));

        let v = s.validate_instance(&doc("blue", 40, 100)).unwrap_err();
        assert!(matches!(&v.0[0], Violation::OutOfDomain { feature, .. } if feature == "parchment_color"));

        let mut inst = doc("dark", 40, 100);
        inst.values.shift_remove("year");
        inst.values.insert("weight".into(), Value::Int(3));
        let v = s.validate_instance(&inst).unwrap_err();
        assert_eq!(v.0.len(), 2);
    }

    #[test]
    fn feature_deltas() {
        let s = document_schema();
        let wc = s.feature("word_count").unwrap();
        let d = feature_delta(wc, &Value::Int(40), &Value::Int(51)).unwrap();
        assert!((d - 11.0 / 499.0).abs() < 1e-15);
        assert!((d - 0.022044).abs() < 1e-6);
        let color = s.feature("parchment_color").unwrap();
        assert_eq!(feature_delta(color, &"dark".into(), &"dark".into()).unwrap(), 0.0);
        assert_eq!(feature_delta(color, &"dark".into(), &"light".into()).unwrap(), 1.0);
        let year = s.feature("year").unwrap();
        assert_eq!(feature_delta(year, &Value::Int(100), &Value::Int(-200)).unwrap(), 0.75);
        assert!(feature_delta(year, &Value::Int(300), &Value::Int(0)).is_err());
    }

    #[test]
    fn ordinal_delta_grows_with_rank_gap() {
        let f = FeatureSpec::ordinal("size", "Size", &["s", "m", "l", "xl"]);
        let d = |a: &str, b: &str| feature_delta(&f, &a.into(), &b.into()).unwrap();
        assert_eq!(d("s", "s"), 0.0);
        assert!(d("s", "m") < d("s", "l"));
        assert!(d("s", "l") < d("s", "xl"));
        assert_eq!(d("xl", "s"), 1.0);
    }

    #[test]
    fn document_distances() {
        let s = document_schema();
        let d = s.distance(&doc("dark", 40, 100), &doc("dark", 51, 100)).unwrap();
        assert_eq!(d, Fraction::new(11, 1497));
        assert!((d.value() - 0.007348).abs() < 1e-6);
        let d = s.distance(&doc("dark", 40, 100), &doc("light", 40, -200)).unwrap();
        assert_eq!(d.reduced().num, 7);
        assert_eq!(d.reduced().den, 12);
        assert!(s.distance(&doc("dark", 40, 100), &doc("dark", 40, 100)).unwrap().is_zero());
    }

    #[test]
    fn grid_counts() {
        let s = document_schema();
        let g = Grid::new(&s, &GridOptions::default()).unwrap();
        assert_eq!(g.len(), 3 * 500 * 401);

        let opts = GridOptions::default().with_stride("word_count", 100).with_stride("year", 200);
        let all: Vec<_> = s.enumerate_grid(&opts).unwrap().collect();
        assert_eq!(all.len(), 45);
        assert_eq!(all[0], doc("light", 1, -200));
        assert_eq!(all[1], doc("light", 1, 0));
        assert_eq!(all[44], doc("dark", 401, 200));
        let g = Grid::new(&s, &opts).unwrap();
        assert_eq!(g.axis(1), &[1, 101, 201, 301, 401]);
        assert_eq!(g.axis(2), &[-200, 0, 200]);
    }

    #[test]
    fn grid_of_one_nominal_feature() {
        let s = FeatureSchema::new(vec![FeatureSpec::nominal("c", "C", &["a", "b"])]).unwrap();
        let all: Vec<_> = s.enumerate_grid(&GridOptions::default()).unwrap().collect();
        assert_eq!(all, vec![Instance::new([("c", "a")]), Instance::new([("c", "b")])]);
    }

    #[test]
    fn grid_rejects_bad_options() {
        let s = document_schema();
        assert!(Grid::new(&s, &GridOptions::default().with_stride("word_count", 0)).is_err());
        assert!(Grid::new(&s, &GridOptions::default().with_stride("nope", 2)).is_err());
        assert!(Grid::new(&s, &GridOptions::default().with_stride("parchment_color", 2)).is_err());
    }

    #[test]
    fn grid_index_roundtrip() {
        let s = document_schema();
        let g = Grid::new(&s, &GridOptions::default().with_stride("word_count", 7)).unwrap();
        for i in (0..g.len()).step_by(997) {
            assert_eq!(g.index_of(&g.point_at(i)), Some(i));
        }
        assert_eq!(g.index_of(&[0, 2, 0]), None);
    }
}
