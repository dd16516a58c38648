//! Explanation generators.
//!
//! All generators search a finite [`Grid`] of the feature space. The decision
//! boundary is discretized: the margin of `x` is its distance to the nearest
//! grid point of a different class.
//!
//! Features that are globally irrelevant on the grid can never influence a
//! prediction, so the nearest differently-classified point always keeps them
//! as close to `x` as the grid allows. [`Explainer`] exploits this by
//! searching a projected grid over the remaining features only; for the
//! document model that is 1,500 points instead of 601,500.

mod relevance;
mod search;

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use relevance::{FeatureRelevance, GlobalRelevance, RelevanceReport};
pub use search::{heuristic_search, ClassConstraint, Constraints, Objective, SearchBudget};

use crate::error::{Error, Result};
use crate::featurespace::{Fraction, Grid, GridOptions, Instance, Point, Value};
use crate::model::{Label, RuleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationKind {
    Factual,
    Counterfactual,
    Semifactual,
    AlterfactualStrict,
    AlterfactualIrrelevance,
}

impl ExplanationKind {
    pub fn is_alterfactual(self) -> bool {
        matches!(self, Self::AlterfactualStrict | Self::AlterfactualIrrelevance)
    }

    fn noun(self) -> &'static str {
        match self {
            Self::Factual => "factual",
            Self::Counterfactual => "counterfactual",
            Self::Semifactual => "semifactual",
            Self::AlterfactualStrict | Self::AlterfactualIrrelevance => "alterfactual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlterfactualMode {
    /// Only features that are locally irrelevant at the input may change.
    #[default]
    Irrelevance,
    /// Any change is allowed as long as the margin stays within epsilon.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exhaustive,
    Heuristic,
}

/// A fraction reported both as a decimal and exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub value: f64,
    pub num: u128,
    pub den: u128,
}

impl From<Fraction> for Measure {
    fn from(f: Fraction) -> Self {
        let r = f.reduced();
        Measure {
            value: f.value(),
            num: r.num,
            den: r.den,
        }
    }
}

impl Measure {
    pub fn fraction(&self) -> Fraction {
        Fraction::new(self.num, self.den)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub value: Fraction,
    pub witness: Instance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedFeature {
    pub feature: String,
    pub from: Value,
    pub to: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub kind: ExplanationKind,
    pub original: Instance,
    pub altered: Instance,
    pub original_label: Label,
    pub altered_label: Label,
    pub distance: Measure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_margin: Option<Measure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altered_margin: Option<Measure>,
    pub changed_features: Vec<ChangedFeature>,
    pub strategy: Strategy,
}

/// Grid points that share a class only through relevant features.
struct Projection {
    /// Features that are not globally irrelevant, in schema order.
    relevant: Vec<usize>,
    irrelevant: Vec<usize>,
    grid: Grid,
    classes: Vec<usize>,
    /// Scaled margin numerator per projected point; `None` if single-class.
    margins: OnceLock<Option<Vec<u128>>>,
}

/// Reusable explanation engine for one model and grid.
pub struct Explainer<'m> {
    model: &'m RuleModel,
    grid: Grid,
    global: OnceLock<GlobalRelevance>,
    projection: OnceLock<Projection>,
}

impl<'m> Explainer<'m> {
    pub fn new(model: &'m RuleModel, opts: &GridOptions) -> Result<Self> {
        Ok(Explainer {
            model,
            grid: Grid::new(model.schema(), opts)?,
            global: OnceLock::new(),
            projection: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &RuleModel {
        self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn n(&self) -> usize {
        self.model.schema().len()
    }

    fn den(&self) -> u128 {
        self.model.schema().distance_denominator()
    }

    fn frac(&self, num: u128) -> Fraction {
        Fraction::new(num, self.den())
    }

    fn delta(&self, i: usize, a: i64, b: i64) -> u128 {
        self.model.schema().scaled_delta(i, a, b)
    }

    fn dist(&self, a: &[i64], b: &[i64]) -> u128 {
        (0..self.n()).map(|i| self.delta(i, a[i], b[i])).sum()
    }

    pub fn encode(&self, x: &Instance) -> Result<Point> {
        self.model.schema().encode_or_err(x)
    }

    pub fn global_relevance_data(&self) -> &GlobalRelevance {
        self.global
            .get_or_init(|| GlobalRelevance::compute(self.model, &self.grid))
    }

    pub fn global_relevance(&self) -> RelevanceReport {
        self.global_relevance_data().report(self.model)
    }

    pub fn local_relevance(&self, x: &Instance) -> Result<RelevanceReport> {
        Ok(relevance::local_report(self.model, &self.encode(x)?))
    }

    fn projection(&self) -> &Projection {
        self.projection.get_or_init(|| {
            let global = self.global_relevance_data();
            let (relevant, irrelevant): (Vec<usize>, Vec<usize>) =
                (0..self.n()).partition(|&i| !global.globally_irrelevant(i));
            let grid = Grid::from_axes(relevant.iter().map(|&i| self.grid.axis(i).to_vec()).collect());
            let filler: Vec<i64> = (0..self.n()).map(|i| self.grid.axis(i)[0]).collect();
            let classes = (0..grid.len())
                .into_par_iter()
                .map_init(
                    || (Vec::new(), filler.clone()),
                    |(q, full), idx| {
                        grid.write_point(idx, q);
                        for (k, &i) in relevant.iter().enumerate() {
                            full[i] = q[k];
                        }
                        self.model.predict_point(full)
                    },
                )
                .collect();
            Projection {
                relevant,
                irrelevant,
                grid,
                classes,
                margins: OnceLock::new(),
            }
        })
    }

    fn rel_dist(&self, proj: &Projection, x: &[i64], q: &[i64]) -> u128 {
        proj.relevant
            .iter()
            .enumerate()
            .map(|(k, &i)| self.delta(i, x[i], q[k]))
            .sum()
    }

    fn rel_changes(&self, proj: &Projection, x: &[i64], q: &[i64]) -> usize {
        proj.relevant.iter().enumerate().filter(|&(k, &i)| x[i] != q[k]).count()
    }

    /// Nearest (or farthest) grid value of each irrelevant feature relative
    /// to `x`, ties towards the lower value. Returns the filled point and the
    /// summed scaled delta.
    fn fill_irrelevant(&self, proj: &Projection, x: &[i64], farthest: bool) -> (Vec<i64>, u128) {
        let mut fill = x.to_vec();
        let mut sum = 0;
        for &i in &proj.irrelevant {
            let axis = self.grid.axis(i);
            let mut best = (axis[0], self.delta(i, x[i], axis[0]));
            for &v in &axis[1..] {
                let d = self.delta(i, x[i], v);
                if (farthest && d > best.1) || (!farthest && d < best.1) {
                    best = (v, d);
                }
            }
            fill[i] = best.0;
            sum += best.1;
        }
        (fill, sum)
    }

    fn expand(&self, proj: &Projection, q_idx: usize, fill: &[i64]) -> Point {
        let q = proj.grid.point_at(q_idx);
        let mut p = fill.to_vec();
        for (k, &i) in proj.relevant.iter().enumerate() {
            p[i] = q[k];
        }
        Point(p)
    }

    /// Index of the projected point minimizing `key` among those passing
    /// `keep`. Ties resolve to the lowest index, i.e. lexicographically.
    fn scan_min<K, F>(&self, proj: &Projection, f: F) -> Option<(K, usize)>
    where
        K: Ord + Send,
        F: Fn(&[i64], usize) -> Option<K> + Sync,
    {
        (0..proj.grid.len())
            .into_par_iter()
            .map_init(Vec::new, |q, idx| {
                proj.grid.write_point(idx, q);
                f(q, proj.classes[idx]).map(|k| (k, idx))
            })
            .flatten()
            .min()
    }

    /// Margin numerator of every projected grid point, O(P²) once.
    fn margin_table(&self) -> Option<&[u128]> {
        let proj = self.projection();
        proj.margins
            .get_or_init(|| {
                let points: Vec<Point> = proj.grid.points().collect();
                let table: Vec<Option<u128>> = points
                    .par_iter()
                    .enumerate()
                    .map(|(a, p)| {
                        points
                            .iter()
                            .enumerate()
                            .filter(|&(b, _)| proj.classes[b] != proj.classes[a])
                            .map(|(_, q)| {
                                proj.relevant
                                    .iter()
                                    .enumerate()
                                    .map(|(k, &i)| self.delta(i, p[k], q[k]))
                                    .sum::<u128>()
                            })
                            .min()
                    })
                    .collect();
                table.into_iter().collect()
            })
            .as_deref()
    }

    /// Margin numerator of an arbitrary point, using the table on the grid.
    pub(crate) fn margin_num(&self, p: &[i64]) -> Option<u128> {
        if self.grid.contains(p) {
            let proj = self.projection();
            let q: Vec<i64> = proj.relevant.iter().map(|&i| p[i]).collect();
            let idx = proj.grid.index_of(&q).expect("projection of a grid point");
            return self.margin_table().map(|t| t[idx]);
        }
        self.margin_scan(p).map(|(num, _)| num)
    }

    fn margin_scan(&self, x: &[i64]) -> Option<(u128, Point)> {
        let proj = self.projection();
        let class = self.model.predict_point(x);
        let (fill, fixed) = self.fill_irrelevant(proj, x, false);
        let ((d, _), idx) = self.scan_min(proj, |q, c| (c != class).then(|| (self.rel_dist(proj, x, q), ())))?;
        Some((d + fixed, self.expand(proj, idx, &fill)))
    }

    /// Distance to the nearest differently-classified grid point.
    pub fn margin(&self, x: &Instance) -> Result<Margin> {
        let p = self.encode(x)?;
        self.margin_point(&p)
    }

    fn margin_point(&self, p: &Point) -> Result<Margin> {
        let (num, witness) = self
            .margin_scan(p)
            .ok_or_else(|| Error::NoBoundary(self.model.predict_encoded(p).to_string()))?;
        Ok(Margin {
            value: self.frac(num),
            witness: self.model.schema().decode(&witness),
        })
    }

    fn explanation(&self, kind: ExplanationKind, x: &Point, a: &Point, strategy: Strategy) -> Explanation {
        let schema = self.model.schema();
        let changed_features = schema
            .features()
            .iter()
            .enumerate()
            .filter(|&(i, _)| x[i] != a[i])
            .map(|(i, f)| ChangedFeature {
                feature: f.name.clone(),
                from: f.decode(x[i]),
                to: f.decode(a[i]),
            })
            .collect();
        let margins = kind != ExplanationKind::Factual;
        let margin = |p: &Point| {
            margins
                .then(|| self.margin_num(p))
                .flatten()
                .map(|m| Measure::from(self.frac(m)))
        };
        Explanation {
            kind,
            original: schema.decode(x),
            altered: schema.decode(a),
            original_label: self.model.predict_encoded(x).clone(),
            altered_label: self.model.predict_encoded(a).clone(),
            distance: self.frac(self.dist(x, a)).into(),
            original_margin: margin(x),
            altered_margin: margin(a),
            changed_features,
            strategy,
        }
    }

    /// Closest grid point of another class (or of `target`).
    pub fn counterfactual(
        &self,
        x: &Instance,
        target: Option<&Label>,
        budget: Option<&SearchBudget>,
    ) -> Result<Explanation> {
        let p = self.encode(x)?;
        let class = self.model.predict_point(&p);
        let target = match target {
            Some(l) => {
                let t = self
                    .model
                    .label_index(l)
                    .ok_or_else(|| Error::InvalidModel(format!("unknown label `{l}`")))?;
                if t == class {
                    return Err(Error::NoExplanation("counterfactual"));
                }
                ClassConstraint::Target(l.clone())
            }
            None => ClassConstraint::Different,
        };
        let kind = ExplanationKind::Counterfactual;
        if let Some(budget) = budget {
            let c = Constraints {
                class: target,
                ..Constraints::default()
            };
            let a = search::search_points(self, &p, Objective::MinimizeDistance, &c, budget)?;
            return Ok(self.explanation(kind, &p, &a, Strategy::Heuristic));
        }
        let proj = self.projection();
        let (fill, _) = self.fill_irrelevant(proj, &p, false);
        let wanted = |c: usize| match &target {
            ClassConstraint::Target(l) => self.model.label(c) == l,
            _ => c != class,
        };
        let (_, idx) = self
            .scan_min(proj, |q, c| {
                wanted(c).then(|| (self.rel_dist(proj, &p, q), self.rel_changes(proj, &p, q)))
            })
            .ok_or(Error::NoExplanation(kind.noun()))?;
        Ok(self.explanation(kind, &p, &self.expand(proj, idx, &fill), Strategy::Exhaustive))
    }

    /// Same-class grid point (other than `x`) closest to the boundary.
    pub fn semifactual(&self, x: &Instance, budget: Option<&SearchBudget>) -> Result<Explanation> {
        let p = self.encode(x)?;
        let kind = ExplanationKind::Semifactual;
        if let Some(budget) = budget {
            let c = Constraints {
                class: ClassConstraint::Same,
                exclude_original: true,
                ..Constraints::default()
            };
            let a = search::search_points(self, &p, Objective::MinimizeMargin, &c, budget)?;
            return Ok(self.explanation(kind, &p, &a, Strategy::Heuristic));
        }
        let class = self.model.predict_point(&p);
        let proj = self.projection();
        let table = self
            .margin_table()
            .ok_or_else(|| Error::NoBoundary(self.model.label(class).to_string()))?;
        let (fill, fixed) = self.fill_irrelevant(proj, &p, false);
        let x_rel: Vec<i64> = proj.relevant.iter().map(|&i| p[i]).collect();
        // the projection of x itself only yields x when its irrelevant
        // coordinates already sit on the grid
        let x_idx = proj.grid.index_of(&x_rel).filter(|_| fixed == 0);

        let best = self.scan_min(proj, |q, c| {
            if c != class {
                return None;
            }
            let idx = proj.grid.index_of(q).expect("q on projected grid");
            let m = table[idx];
            if Some(idx) == x_idx {
                // nearest distinct point: bump a single irrelevant feature
                let (alt, d) = self.nearest_other(proj, &p)?;
                return Some((m, d, alt));
            }
            let mut full = fill.clone();
            for (k, &i) in proj.relevant.iter().enumerate() {
                full[i] = q[k];
            }
            Some((m, self.rel_dist(proj, &p, q) + fixed, Point(full)))
        });
        let ((_, _, a), _) = best.ok_or(Error::NoExplanation(kind.noun()))?;
        Ok(self.explanation(kind, &p, &a, Strategy::Exhaustive))
    }

    /// Closest grid point differing from on-grid `x` only in one irrelevant
    /// feature.
    fn nearest_other(&self, proj: &Projection, x: &[i64]) -> Option<(Point, u128)> {
        let mut best: Option<(u128, Point)> = None;
        for &i in &proj.irrelevant {
            for &v in self.grid.axis(i) {
                if v == x[i] {
                    continue;
                }
                let mut cand = x.to_vec();
                cand[i] = v;
                let cand = (self.delta(i, x[i], v), Point(cand));
                if best.as_ref().is_none_or(|b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
        best.map(|(d, p)| (p, d))
    }

    /// Maximal-distance same-class point in the requested mode.
    ///
    /// `epsilon` only applies to strict mode; `None` selects one grid step of
    /// the cheapest feature.
    pub fn alterfactual(
        &self,
        x: &Instance,
        mode: AlterfactualMode,
        epsilon: Option<f64>,
        budget: Option<&SearchBudget>,
    ) -> Result<Explanation> {
        let p = self.encode(x)?;
        match mode {
            AlterfactualMode::Irrelevance => self.alterfactual_irrelevance(&p, budget.is_some()),
            AlterfactualMode::Strict => {
                let eps = epsilon.unwrap_or_else(|| self.default_epsilon());
                if !(eps >= 0.0) {
                    return Err(Error::Malformed {
                        what: "epsilon",
                        reason: format!("{eps} is negative"),
                    });
                }
                self.alterfactual_strict(&p, eps, budget)
            }
        }
    }

    /// One grid step of the cheapest feature, as a distance.
    pub fn default_epsilon(&self) -> f64 {
        let schema = self.model.schema();
        (0..self.n())
            .filter_map(|i| {
                let axis = self.grid.axis(i);
                (axis.len() > 1)
                    .then(|| axis.windows(2).map(|w| schema.scaled_delta(i, w[0], w[1])).min())
                    .flatten()
            })
            .min()
            .map_or(0.0, |num| self.frac(num).value())
    }

    fn alterfactual_irrelevance(&self, p: &Point, heuristic: bool) -> Result<Explanation> {
        let kind = ExplanationKind::AlterfactualIrrelevance;
        let class = self.model.predict_point(p);
        let free: Vec<usize> = relevance::local_flags(self.model, p)
            .into_iter()
            .enumerate()
            .filter_map(|(i, irrelevant)| irrelevant.then_some(i))
            .collect();
        let mut a = p.0.clone();
        for &i in &free {
            let mut best = (p[i], 0);
            for &v in self.grid.axis(i) {
                let d = self.delta(i, p[i], v);
                if d > best.1 {
                    best = (v, d);
                }
            }
            a[i] = best.0;
        }
        let strategy = if heuristic { Strategy::Heuristic } else { Strategy::Exhaustive };
        let a = if self.model.predict_point(&a) == class {
            a
        } else if heuristic {
            // revert the cheapest change until the decision is restored
            let mut changed: Vec<usize> = free.iter().copied().filter(|&i| a[i] != p[i]).collect();
            while self.model.predict_point(&a) != class {
                let (pos, _) = changed
                    .iter()
                    .enumerate()
                    .min_by_key(|&(_, &i)| self.delta(i, p[i], a[i]))
                    .expect("reverting every change restores x");
                let i = changed.remove(pos);
                a[i] = p[i];
            }
            a
        } else {
            self.irrelevance_brute_force(p, &free, class)
        };
        if a == p.0 {
            return Err(Error::NoExplanation(kind.noun()));
        }
        Ok(self.explanation(kind, p, &Point(a), strategy))
    }

    /// Exact maximum over every combination of the free features' values.
    fn irrelevance_brute_force(&self, p: &Point, free: &[usize], class: usize) -> Vec<i64> {
        let axes: Vec<Vec<i64>> = free
            .iter()
            .map(|&i| {
                let mut axis = self.grid.axis(i).to_vec();
                if let Err(pos) = axis.binary_search(&p[i]) {
                    axis.insert(pos, p[i]);
                }
                axis
            })
            .collect();
        let sub = Grid::from_axes(axes);
        let (_, best) = (0..sub.len())
            .into_par_iter()
            .map_init(
                || (Vec::new(), p.0.clone()),
                |(vals, cand), idx| {
                    sub.write_point(idx, vals);
                    for (k, &i) in free.iter().enumerate() {
                        cand[i] = vals[k];
                    }
                    (self.model.predict_point(cand) == class)
                        .then(|| (std::cmp::Reverse(self.dist(p, cand)), cand.clone()))
                },
            )
            .flatten()
            .min()
            .expect("x itself always qualifies");
        best
    }

    fn alterfactual_strict(&self, p: &Point, eps: f64, budget: Option<&SearchBudget>) -> Result<Explanation> {
        let kind = ExplanationKind::AlterfactualStrict;
        if let Some(budget) = budget {
            let c = Constraints {
                class: ClassConstraint::Same,
                margin_within: Some(eps),
                exclude_original: true,
                ..Constraints::default()
            };
            let a = search::search_points(self, p, Objective::MaximizeDistance, &c, budget)?;
            return Ok(self.explanation(kind, p, &a, Strategy::Heuristic));
        }
        let class = self.model.predict_point(p);
        let m_x = self.margin_point(p)?.value;
        let table = self.margin_table().expect("margin of x exists");
        let proj = self.projection();
        let (fill, far) = self.fill_irrelevant(proj, p, true);
        let within = |m: u128| self.frac(m).abs_diff(&m_x).value() <= eps;
        let ((std::cmp::Reverse(d), _), idx) = self
            .scan_min(proj, |q, c| {
                if c != class {
                    return None;
                }
                let idx = proj.grid.index_of(q).expect("q on projected grid");
                within(table[idx]).then(|| (std::cmp::Reverse(self.rel_dist(proj, p, q) + far), ()))
            })
            .ok_or(Error::NoExplanation(kind.noun()))?;
        if d == 0 {
            return Err(Error::NoExplanation(kind.noun()));
        }
        Ok(self.explanation(kind, p, &self.expand(proj, idx, &fill), Strategy::Exhaustive))
    }

    /// Nearest same-class member of `dataset` other than `x`.
    pub fn factual(&self, x: &Instance, dataset: &[Instance]) -> Result<Explanation> {
        if dataset.is_empty() {
            return Err(Error::Malformed {
                what: "dataset",
                reason: "no instances".into(),
            });
        }
        let p = self.encode(x)?;
        let class = self.model.predict_point(&p);
        let mut best: Option<(u128, Point)> = None;
        for inst in dataset {
            let f = self.encode(inst)?;
            if f == p || self.model.predict_point(&f) != class {
                continue;
            }
            let cand = (self.dist(&p, &f), f);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        let (_, f) = best.ok_or(Error::NoExplanation("factual"))?;
        Ok(self.explanation(ExplanationKind::Factual, &p, &f, Strategy::Exhaustive))
    }
}

pub fn margin(model: &RuleModel, x: &Instance, opts: &GridOptions) -> Result<Margin> {
    Explainer::new(model, opts)?.margin(x)
}

pub fn local_relevance(model: &RuleModel, x: &Instance) -> Result<RelevanceReport> {
    let p = model.schema().encode_or_err(x)?;
    Ok(relevance::local_report(model, &p))
}

pub fn global_relevance(model: &RuleModel, opts: &GridOptions) -> Result<RelevanceReport> {
    Ok(Explainer::new(model, opts)?.global_relevance())
}

pub fn counterfactual(
    model: &RuleModel,
    x: &Instance,
    target: Option<&Label>,
    opts: &GridOptions,
    budget: Option<&SearchBudget>,
) -> Result<Explanation> {
    Explainer::new(model, opts)?.counterfactual(x, target, budget)
}

pub fn semifactual(
    model: &RuleModel,
    x: &Instance,
    opts: &GridOptions,
    budget: Option<&SearchBudget>,
) -> Result<Explanation> {
    Explainer::new(model, opts)?.semifactual(x, budget)
}

pub fn alterfactual(
    model: &RuleModel,
    x: &Instance,
    mode: AlterfactualMode,
    epsilon: Option<f64>,
    opts: &GridOptions,
    budget: Option<&SearchBudget>,
) -> Result<Explanation> {
    Explainer::new(model, opts)?.alterfactual(x, mode, epsilon, budget)
}

pub fn factual(model: &RuleModel, x: &Instance, dataset: &[Instance], opts: &GridOptions) -> Result<Explanation> {
    Explainer::new(model, opts)?.factual(x, dataset)
}

#[cfg(test)]
mod tests;
