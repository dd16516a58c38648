//! Statistics over study exports: descriptives with 95% confidence
//! intervals, one-way ANOVA, pooled two-sample t-tests and Cohen's d.

pub mod error;
pub mod report;
pub mod special;
pub mod stats;

pub use error::{Result, StatsError};
pub use report::{condition_report, ConditionReport, GroupSummary, MetricReport, PairwiseTest, METRICS};
pub use special::{f_upper_tail, ln_gamma, reg_inc_beta, t_cdf, t_quantile, t_two_sided_p};
pub use stats::{cohens_d, descriptives, one_way_anova, t_test, Descriptives, Df, Effect, EffectLabel, GroupSample, TestResult};
