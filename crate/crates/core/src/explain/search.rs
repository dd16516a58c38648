//! Random-restart hill climbing over single-feature grid moves.
//!
//! Used when a grid is too large to scan. Points are ranked by a key that
//! puts constraint violations first, then the objective, then the same
//! tie-breaks as the exhaustive generators, so a climb that reaches the
//! exhaustive optimum also reports the same point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Explainer;
use crate::error::{Error, Result};
use crate::featurespace::{GridOptions, Instance, Point};
use crate::model::{Label, RuleModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub seed: u64,
    /// Climbs to run; the first always starts from the input itself.
    pub restarts: u32,
    /// Improving moves per climb. Zero only evaluates the start points.
    pub max_steps: u32,
}

impl SearchBudget {
    pub fn new(seed: u64, restarts: u32, max_steps: u32) -> Self {
        SearchBudget {
            seed,
            restarts,
            max_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidBudget("restarts must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget::new(42, 8, 1_000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaximizeDistance,
    MinimizeDistance,
    MinimizeMargin,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassConstraint {
    #[default]
    Same,
    Different,
    Target(Label),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(default)]
    pub class: ClassConstraint,
    /// Features that must keep the input's value.
    #[serde(default)]
    pub frozen: Vec<String>,
    /// Maximum allowed |margin(a) - margin(x)|.
    #[serde(default)]
    pub margin_within: Option<f64>,
    #[serde(default)]
    pub exclude_original: bool,
}

type Key = (u8, u128, i128, u128, Point);

struct Climber<'e, 'm> {
    ex: &'e Explainer<'m>,
    x: &'e Point,
    class: usize,
    target: Option<usize>,
    want_different: bool,
    frozen: Vec<bool>,
    margin: Option<(u128, f64)>,
    exclude_original: bool,
    objective: Objective,
}

impl Climber<'_, '_> {
    fn key(&self, p: &Point) -> Key {
        let c = self.ex.model.predict_point(p);
        let class_ok = match (self.target, self.want_different) {
            (Some(t), _) => c == t,
            (None, true) => c != self.class,
            (None, false) => c == self.class,
        };
        let mut bad = u8::from(!class_ok || (self.exclude_original && p == self.x));
        let needs_margin = self.margin.is_some() || self.objective == Objective::MinimizeMargin;
        let m = if needs_margin { self.ex.margin_num(p) } else { None };
        let mut excess = 0;
        if let Some((m_x, eps)) = self.margin {
            match m {
                Some(m) => {
                    let diff = m.abs_diff(m_x);
                    if diff as f64 / self.ex.den() as f64 > eps {
                        excess = diff;
                    }
                }
                None => bad = 1,
            }
        }
        let d = self.ex.dist(self.x, p);
        let (k1, k2) = match self.objective {
            Objective::MinimizeDistance => (d as i128, p.iter().zip(self.x.iter()).filter(|(a, b)| a != b).count() as u128),
            Objective::MaximizeDistance => (-(d as i128), 0),
            Objective::MinimizeMargin => match m {
                Some(m) => (m as i128, d),
                None => {
                    bad = 1;
                    (i128::MAX, d)
                }
            },
        };
        (bad, excess, k1, k2, p.clone())
    }

    fn climb(&self, start: Point, max_steps: u32) -> Key {
        let grid = self.ex.grid();
        let mut best = self.key(&start);
        for _ in 0..max_steps {
            let cur = best.4.clone();
            let mut step: Option<Key> = None;
            for (i, axis) in grid.axes().iter().enumerate() {
                if self.frozen[i] {
                    continue;
                }
                for &v in axis {
                    if v == cur[i] {
                        continue;
                    }
                    let mut cand = cur.clone();
                    cand.0[i] = v;
                    let k = self.key(&cand);
                    if step.as_ref().is_none_or(|s| k < *s) {
                        step = Some(k);
                    }
                }
            }
            match step {
                Some(k) if k < best => best = k,
                _ => break,
            }
        }
        best
    }
}

/// Nearest grid value per feature; frozen features keep `x`'s value.
fn snap(ex: &Explainer<'_>, x: &Point, frozen: &[bool]) -> Point {
    let schema = ex.model.schema();
    Point(
        ex.grid()
            .axes()
            .iter()
            .enumerate()
            .map(|(i, axis)| {
                if frozen[i] {
                    return x[i];
                }
                *axis
                    .iter()
                    .min_by_key(|&&v| (schema.scaled_delta(i, x[i], v), v))
                    .expect("non-empty axis")
            })
            .collect(),
    )
}

pub(crate) fn search_points(
    ex: &Explainer<'_>,
    x: &Point,
    objective: Objective,
    constraints: &Constraints,
    budget: &SearchBudget,
) -> Result<Point> {
    budget.validate()?;
    let schema = ex.model.schema();
    let mut frozen = vec![false; schema.len()];
    for name in &constraints.frozen {
        let i = schema
            .index_of(name)
            .ok_or_else(|| Error::InvalidModel(format!("unknown feature `{name}`")))?;
        frozen[i] = true;
    }
    let class = ex.model.predict_point(x);
    let (target, want_different) = match &constraints.class {
        ClassConstraint::Same => (None, false),
        ClassConstraint::Different => (None, true),
        ClassConstraint::Target(l) => (
            Some(
                ex.model
                    .label_index(l)
                    .ok_or_else(|| Error::InvalidModel(format!("unknown label `{l}`")))?,
            ),
            true,
        ),
    };
    let margin = match constraints.margin_within {
        Some(eps) => {
            let m_x = ex
                .margin_num(x)
                .ok_or_else(|| Error::NoBoundary(ex.model.label(class).to_string()))?;
            Some((m_x, eps))
        }
        None => None,
    };
    let climber = Climber {
        ex,
        x,
        class,
        target,
        want_different,
        frozen,
        margin,
        exclude_original: constraints.exclude_original,
        objective,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut best: Option<Key> = None;
    for r in 0..budget.restarts {
        let start = if r == 0 {
            snap(ex, x, &climber.frozen)
        } else {
            Point(
                ex.grid()
                    .axes()
                    .iter()
                    .enumerate()
                    .map(|(i, axis)| {
                        if climber.frozen[i] {
                            x[i]
                        } else {
                            axis[rng.gen_range(0..axis.len())]
                        }
                    })
                    .collect(),
            )
        };
        let k = climber.climb(start, budget.max_steps);
        if best.as_ref().is_none_or(|b| k < *b) {
            best = Some(k);
        }
    }
    match best {
        Some((0, 0, _, _, p)) => Ok(p),
        _ => Err(Error::SearchExhausted),
    }
}

/// Heuristic optimisation of `objective` around `x` under `constraints`.
pub fn heuristic_search(
    model: &RuleModel,
    x: &Instance,
    objective: Objective,
    constraints: &Constraints,
    budget: &SearchBudget,
    opts: &GridOptions,
) -> Result<Instance> {
    let ex = Explainer::new(model, opts)?;
    let p = ex.encode(x)?;
    let a = search_points(&ex, &p, objective, constraints, budget)?;
    Ok(model.schema().decode(&a))
}
