//! Local and global feature (ir)relevance.
//!
//! Feature `i` is locally irrelevant at `x` when sweeping `x[i]` over its whole
//! domain never changes the prediction. That property only depends on the
//! other coordinates of `x`, so the global scan walks every "fiber" (grid
//! line along feature `i`) once instead of re-scanning each grid point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::featurespace::{Grid, Instance, Point, Value};
use crate::model::RuleModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRelevance {
    pub feature: String,
    pub irrelevant: bool,
    /// Values the feature may take without changing the decision; listed
    /// only for irrelevant features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible_values: Option<Vec<Value>>,
    /// Grid instances at which the feature is locally relevant (global reports).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_instances: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_instances: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    /// The instance analysed; absent for global reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<Instance>,
    pub features: Vec<FeatureRelevance>,
}

impl RelevanceReport {
    pub fn feature(&self, name: &str) -> Option<&FeatureRelevance> {
        self.features.iter().find(|f| f.feature == name)
    }

    pub fn is_irrelevant(&self, name: &str) -> bool {
        self.feature(name).is_some_and(|f| f.irrelevant)
    }
}

/// Per-feature irrelevance flags at one point, scanning full domains.
pub(crate) fn local_flags(model: &RuleModel, x: &[i64]) -> Vec<bool> {
    let schema = model.schema();
    let class = model.predict_point(x);
    let mut probe = x.to_vec();
    (0..schema.len())
        .map(|i| {
            let irrelevant = schema.features()[i].coords().into_iter().all(|v| {
                probe[i] = v;
                model.predict_point(&probe) == class
            });
            probe[i] = x[i];
            irrelevant
        })
        .collect()
}

pub(crate) fn local_report(model: &RuleModel, x: &Point) -> RelevanceReport {
    let schema = model.schema();
    let flags = local_flags(model, x);
    RelevanceReport {
        instance: Some(schema.decode(x)),
        features: schema
            .features()
            .iter()
            .zip(flags)
            .map(|(f, irrelevant)| FeatureRelevance {
                feature: f.name.clone(),
                irrelevant,
                admissible_values: irrelevant.then(|| f.coords().into_iter().map(|c| f.decode(c)).collect()),
                relevant_instances: None,
                grid_instances: None,
            })
            .collect(),
    }
}

/// Exhaustive relevance over a grid.
#[derive(Debug, Clone)]
pub struct GlobalRelevance {
    /// For each feature, the grid with that feature's axis removed.
    fibers: Vec<Grid>,
    /// `relevant[i][f]`: feature `i` is locally relevant along fiber `f`.
    relevant: Vec<Vec<bool>>,
    axis_len: Vec<usize>,
}

impl GlobalRelevance {
    pub(crate) fn compute(model: &RuleModel, grid: &Grid) -> Self {
        let schema = model.schema();
        let n = schema.len();
        let mut fibers = Vec::with_capacity(n);
        let mut relevant = Vec::with_capacity(n);
        for i in 0..n {
            let axes: Vec<Vec<i64>> = (0..n).filter(|&j| j != i).map(|j| grid.axis(j).to_vec()).collect();
            let fiber_grid = Grid::from_axes(axes);
            let domain = schema.features()[i].coords();
            let flags = (0..fiber_grid.len())
                .into_par_iter()
                .map_init(
                    || (Vec::with_capacity(n - 1), vec![0; n]),
                    |(rest, probe), f| {
                        fiber_grid.write_point(f, rest);
                        probe[..i].copy_from_slice(&rest[..i]);
                        probe[i + 1..].copy_from_slice(&rest[i..]);
                        probe[i] = domain[0];
                        let first = model.predict_point(probe);
                        domain[1..].iter().any(|&v| {
                            probe[i] = v;
                            model.predict_point(probe) != first
                        })
                    },
                )
                .collect();
            fibers.push(fiber_grid);
            relevant.push(flags);
        }
        GlobalRelevance {
            fibers,
            relevant,
            axis_len: grid.axes().iter().map(Vec::len).collect(),
        }
    }

    pub fn globally_irrelevant(&self, feature: usize) -> bool {
        !self.relevant[feature].iter().any(|&r| r)
    }

    /// Number of grid points at which `feature` is locally relevant.
    pub fn relevant_count(&self, feature: usize) -> u64 {
        self.relevant[feature].iter().filter(|&&r| r).count() as u64 * self.axis_len[feature] as u64
    }

    /// Local relevance of `feature` at a grid point; `None` if off the grid.
    pub fn is_locally_relevant(&self, feature: usize, point: &[i64]) -> Option<bool> {
        let rest: Vec<i64> = point
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != feature)
            .map(|(_, &c)| c)
            .collect();
        self.fibers[feature].index_of(&rest).map(|f| self.relevant[feature][f])
    }

    pub(crate) fn report(&self, model: &RuleModel) -> RelevanceReport {
        let grid_size: u64 = self.axis_len.iter().map(|&l| l as u64).product();
        RelevanceReport {
            instance: None,
            features: model
                .schema()
                .features()
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let irrelevant = self.globally_irrelevant(i);
                    FeatureRelevance {
                        feature: f.name.clone(),
                        irrelevant,
                        admissible_values: irrelevant.then(|| f.coords().into_iter().map(|c| f.decode(c)).collect()),
                        relevant_instances: Some(self.relevant_count(i)),
                        grid_instances: Some(grid_size),
                    }
                })
                .collect(),
        }
    }
}
