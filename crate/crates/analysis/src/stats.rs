//! Descriptives and the tests used per metric.

use std::fmt;

use alterfactual_study::Condition;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};
use crate::special::{f_upper_tail, t_quantile, t_two_sided_p};

/// One metric's values for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub condition: Condition,
    pub values: Vec<f64>,
}

impl GroupSample {
    pub fn new(condition: Condition, values: impl IntoIterator<Item = f64>) -> Self {
        GroupSample {
            condition,
            values: values.into_iter().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    /// Sum of squared deviations from the mean.
    fn ss(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum()
    }

    fn require(&self, need: usize) -> Result<()> {
        if self.n() < need {
            Err(StatsError::TooFew { need, got: self.n() })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
    pub ci95: (f64, f64),
}

pub fn descriptives(g: &GroupSample) -> Result<Descriptives> {
    g.require(2)?;
    let n = g.n() as f64;
    let mean = g.mean();
    let sd = (g.ss() / (n - 1.0)).sqrt();
    let half = t_quantile(0.975, n - 1.0)? * sd / n.sqrt();
    Ok(Descriptives {
        n: g.n(),
        mean,
        sd,
        ci95: (mean - half, mean + half),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectLabel {
    Small,
    Medium,
    Large,
}

impl EffectLabel {
    /// Below 0.5 small, 0.5 to 0.8 inclusive medium, above 0.8 large.
    pub fn of(d: f64) -> EffectLabel {
        let d = d.abs();
        if d < 0.5 {
            EffectLabel::Small
        } else if d <= 0.8 {
            EffectLabel::Medium
        } else {
            EffectLabel::Large
        }
    }
}

impl fmt::Display for EffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectLabel::Small => "small",
            EffectLabel::Medium => "medium",
            EffectLabel::Large => "large",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub d: f64,
    pub label: EffectLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Df {
    One(f64),
    Two(f64, f64),
}

impl fmt::Display for Df {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Df::One(d) => write!(f, "{d}"),
            Df::Two(a, b) => write!(f, "{a}, {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// F or t.
    pub statistic: f64,
    pub df: Df,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<Effect>,
    /// Set when the within-group variance is zero; p is then 0 if the means
    /// differ and 1 if they do not.
    pub degenerate: bool,
}

fn pooled_variance(g1: &GroupSample, g2: &GroupSample) -> f64 {
    (g1.ss() + g2.ss()) / (g1.n() + g2.n() - 2) as f64
}

pub fn one_way_anova(groups: &[GroupSample]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for g in groups {
        g.require(2)?;
    }
    let k = groups.len() as f64;
    let total: usize = groups.iter().map(GroupSample::n).sum();
    let grand = groups.iter().flat_map(|g| &g.values).sum::<f64>() / total as f64;
    let ssb: f64 = groups.iter().map(|g| g.n() as f64 * (g.mean() - grand).powi(2)).sum();
    let ssw: f64 = groups.iter().map(GroupSample::ss).sum();
    let (d1, d2) = (k - 1.0, total as f64 - k);
    let df = Df::Two(d1, d2);
    if ssw == 0.0 {
        let (statistic, p) = if ssb == 0.0 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Ok(TestResult {
            statistic,
            df,
            p,
            effect: None,
            degenerate: true,
        });
    }
    let f = (ssb / d1) / (ssw / d2);
    Ok(TestResult {
        statistic: f,
        df,
        p: f_upper_tail(f, d1, d2)?,
        effect: None,
        degenerate: false,
    })
}

/// Two-sided independent-samples t-test with pooled variance.
pub fn t_test(g1: &GroupSample, g2: &GroupSample) -> Result<TestResult> {
    g1.require(2)?;
    g2.require(2)?;
    let df = (g1.n() + g2.n() - 2) as f64;
    let diff = g1.mean() - g2.mean();
    let sp2 = pooled_variance(g1, g2);
    if sp2 == 0.0 {
        let (statistic, p) = if diff == 0.0 { (0.0, 1.0) } else { (diff.signum() * f64::INFINITY, 0.0) };
        return Ok(TestResult {
            statistic,
            df: Df::One(df),
            p,
            effect: None,
            degenerate: true,
        });
    }
    let t = diff / (sp2 * (1.0 / g1.n() as f64 + 1.0 / g2.n() as f64)).sqrt();
    Ok(TestResult {
        statistic: t,
        df: Df::One(df),
        p: t_two_sided_p(t, df)?,
        effect: Some(cohens_d(g1, g2)?),
        degenerate: false,
    })
}

/// |mean1 − mean2| over the pooled standard deviation.
pub fn cohens_d(g1: &GroupSample, g2: &GroupSample) -> Result<Effect> {
    g1.require(2)?;
    g2.require(2)?;
    let sp = pooled_variance(g1, g2).sqrt();
    if sp == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let d = (g1.mean() - g2.mean()).abs() / sp;
    Ok(Effect {
        d,
        label: EffectLabel::of(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(values: &[f64]) -> GroupSample {
        GroupSample::new(Condition::Alterfactual, values.iter().copied())
    }

    #[test]
    fn descriptive_examples() {
        let d = descriptives(&g(&[2.0, 2.0, 2.0])).unwrap();
        assert_eq!((d.mean, d.sd, d.ci95), (2.0, 0.0, (2.0, 2.0)));
        let d = descriptives(&g(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!((d.mean, d.sd), (2.0, 1.0));
        // t(0.975, 2) = 4.302652729911275
        let half = 4.302_652_729_911_275 / 3f64.sqrt();
        assert!((d.ci95.0 - (2.0 - half)).abs() < 1e-9 && (d.ci95.1 - (2.0 + half)).abs() < 1e-9);
        assert!(matches!(descriptives(&g(&[5.0])), Err(StatsError::TooFew { need: 2, got: 1 })));
    }

    #[test]
    fn anova_examples() {
        let r = one_way_anova(&[g(&[1.0, 2.0, 3.0]), g(&[2.0, 3.0, 4.0]), g(&[3.0, 4.0, 5.0])]).unwrap();
        assert!((r.statistic - 3.0).abs() < 1e-12);
        assert_eq!(r.df, Df::Two(2.0, 6.0));
        assert!((r.p - 0.125).abs() < 1e-12);
        let r = one_way_anova(&[g(&[1.0, 2.0, 3.0]), g(&[1.0, 2.0, 3.0])]).unwrap();
        assert_eq!((r.statistic, r.p), (0.0, 1.0));
        assert!(matches!(one_way_anova(&[g(&[1.0, 2.0])]), Err(StatsError::TooFewGroups(1))));
        let r = one_way_anova(&[g(&[1.0, 1.0]), g(&[2.0, 2.0])]).unwrap();
        assert!(r.degenerate && r.p == 0.0);
    }

    #[test]
    fn t_test_examples() {
        let r = t_test(&g(&[1.0, 2.0, 3.0]), &g(&[3.0, 4.0, 5.0])).unwrap();
        assert!((r.statistic + 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, Df::One(4.0));
        assert!((r.p - 0.0705).abs() < 1e-3);
        let e = r.effect.unwrap();
        assert!((e.d - 2.0).abs() < 1e-12 && e.label == EffectLabel::Large);
        let r = t_test(&g(&[1.0, 2.0, 3.0]), &g(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!((r.statistic, r.p), (0.0, 1.0));
        assert_eq!(r.effect.unwrap().label, EffectLabel::Small);
        let r = t_test(&g(&[0.0, 0.0]), &g(&[1.0, 1.0])).unwrap();
        assert!(r.degenerate && r.p == 0.0);
        assert_eq!(cohens_d(&g(&[0.0, 0.0]), &g(&[1.0, 1.0])), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn effect_labels() {
        assert_eq!(EffectLabel::of(0.499), EffectLabel::Small);
        assert_eq!(EffectLabel::of(0.5), EffectLabel::Medium);
        assert_eq!(EffectLabel::of(0.8), EffectLabel::Medium);
        assert_eq!(EffectLabel::of(0.801), EffectLabel::Large);
        assert_eq!(EffectLabel::of(-0.9), EffectLabel::Large);
    }
}
