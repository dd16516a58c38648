//! Per-condition report over exported session records.

use std::fmt::Write as _;

use alterfactual_study::{Condition, SessionRecord};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};
use crate::stats::{descriptives, one_way_anova, t_test, Df, GroupSample, TestResult};

/// Reported metrics, in report order.
pub const METRICS: [&str; 6] = [
    "accuracy",
    "understanding_score",
    "und_word_count",
    "und_parchment_color",
    "und_year",
    "satisfaction_mean",
];

fn metric_value(r: &SessionRecord, metric: &str) -> Option<f64> {
    let flag = |f: &str| r.understanding.get(f).map(|c| f64::from(u8::from(*c)));
    match metric {
        "accuracy" => r.accuracy.map(f64::from),
        "understanding_score" => r.understanding_score.map(f64::from),
        "und_word_count" => flag("word_count"),
        "und_parchment_color" => flag("parchment_color"),
        "und_year" => flag("year"),
        "satisfaction_mean" => r.satisfaction_mean,
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub condition: Condition,
    pub n: usize,
    pub mean: f64,
    /// Absent for groups of one.
    pub sd: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: Condition,
    pub b: Condition,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub groups: Vec<GroupSummary>,
    /// Over groups with at least two values, if there are two such groups.
    pub anova: Option<TestResult>,
    pub pairwise: Vec<PairwiseTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Records analysed (quiz passed).
    pub sessions: usize,
    /// Records left out because the quiz was failed.
    pub excluded: usize,
    pub metrics: Vec<MetricReport>,
}

fn metric_report(records: &[&SessionRecord], metric: &str) -> Result<MetricReport> {
    let mut samples = Vec::new();
    for c in Condition::ALL {
        // the satisfaction scale is only answered alongside explanations
        if metric == "satisfaction_mean" && c == Condition::NoExplanation {
            continue;
        }
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.effective_condition == c)
            .filter_map(|r| metric_value(r, metric))
            .collect();
        if !values.is_empty() {
            samples.push(GroupSample::new(c, values));
        }
    }
    let groups = samples
        .iter()
        .map(|g| {
            let d = descriptives(g).ok();
            GroupSummary {
                condition: g.condition,
                n: g.n(),
                mean: g.mean(),
                sd: d.map(|d| d.sd),
                ci95: d.map(|d| d.ci95),
            }
        })
        .collect();
    let testable: Vec<GroupSample> = samples.into_iter().filter(|g| g.n() >= 2).collect();
    let anova = if testable.len() >= 2 { Some(one_way_anova(&testable)?) } else { None };
    let mut pairwise = Vec::new();
    for (i, a) in testable.iter().enumerate() {
        for b in &testable[i + 1..] {
            pairwise.push(PairwiseTest {
                a: a.condition,
                b: b.condition,
                result: t_test(a, b)?,
            });
        }
    }
    Ok(MetricReport {
        metric: metric.into(),
        groups,
        anova,
        pairwise,
    })
}

/// Descriptives per effective condition, an omnibus ANOVA and all pairwise
/// t-tests for every metric. Sessions that failed the quiz are left out.
pub fn condition_report(records: &[SessionRecord]) -> Result<ConditionReport> {
    let included: Vec<&SessionRecord> = records.iter().filter(|r| !r.excluded()).collect();
    let mut present: Vec<Condition> = included.iter().map(|r| r.effective_condition).collect();
    present.sort();
    present.dedup();
    if present.len() < 2 {
        return Err(StatsError::TooFewGroups(present.len()));
    }
    let metrics = METRICS.iter().map(|m| metric_report(&included, m)).collect::<Result<_>>()?;
    Ok(ConditionReport {
        sessions: included.len(),
        excluded: records.len() - included.len(),
        metrics,
    })
}

fn num(v: f64) -> String {
    v.to_string()
}

fn df_cells(df: Df) -> [String; 2] {
    match df {
        Df::One(d) => [num(d), String::new()],
        Df::Two(a, b) => [num(a), num(b)],
    }
}

fn test_cells(t: &TestResult) -> Vec<String> {
    let [d1, d2] = df_cells(t.df);
    vec![
        num(t.statistic),
        d1,
        d2,
        num(t.p),
        t.effect.map(|e| num(e.d)).unwrap_or_default(),
        t.effect.map(|e| e.label.to_string()).unwrap_or_default(),
        u8::from(t.degenerate).to_string(),
    ]
}

pub const REPORT_COLUMNS: [&str; 16] = [
    "metric",
    "row",
    "condition",
    "other",
    "n",
    "mean",
    "sd",
    "ci_low",
    "ci_high",
    "statistic",
    "df1",
    "df2",
    "p",
    "d",
    "effect",
    "degenerate",
];

impl ConditionReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut write = |row: Vec<String>| w.write_record(&row).expect("writing to memory");
        write(REPORT_COLUMNS.iter().map(|s| s.to_string()).collect());
        let blank = |n: usize| vec![String::new(); n];
        for m in &self.metrics {
            for g in &m.groups {
                let mut row = vec![m.metric.clone(), "group".into(), g.condition.to_string(), String::new()];
                row.push(g.n.to_string());
                row.push(num(g.mean));
                row.push(g.sd.map(num).unwrap_or_default());
                row.push(g.ci95.map(|c| num(c.0)).unwrap_or_default());
                row.push(g.ci95.map(|c| num(c.1)).unwrap_or_default());
                row.extend(blank(7));
                write(row);
            }
            if let Some(a) = &m.anova {
                let mut row = vec![m.metric.clone(), "anova".into()];
                row.extend(blank(7));
                row.extend(test_cells(a));
                write(row);
            }
            for p in &m.pairwise {
                let mut row = vec![m.metric.clone(), "t_test".into(), p.a.to_string(), p.b.to_string()];
                row.extend(blank(5));
                row.extend(test_cells(&p.result));
                write(row);
            }
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sessions analysed: {} (excluded: {})", self.sessions, self.excluded);
        for m in &self.metrics {
            let _ = writeln!(out, "\n{}", m.metric);
            let _ = writeln!(out, "  {:<16} {:>4} {:>8} {:>8}   95% CI", "condition", "n", "mean", "sd");
            for g in &m.groups {
                let sd = g.sd.map(|s| format!("{s:.3}")).unwrap_or_else(|| "-".into());
                let ci = g.ci95.map(|(l, h)| format!("[{l:.3}, {h:.3}]")).unwrap_or_else(|| "-".into());
                let _ = writeln!(out, "  {:<16} {:>4} {:>8.3} {:>8}   {}", g.condition.as_str(), g.n, g.mean, sd, ci);
            }
            if let Some(a) = &m.anova {
                let _ = writeln!(out, "  ANOVA: F({}) = {:.2}, p = {:.3}{}", a.df, a.statistic, a.p, flag(a));
            }
            for p in &m.pairwise {
                let r = &p.result;
                let effect = r.effect.map(|e| format!(", d = {:.2} ({})", e.d, e.label)).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "  {} vs {}: t({}) = {:.2}, p = {:.3}{}{}",
                    p.a,
                    p.b,
                    r.df,
                    r.statistic,
                    r.p,
                    effect,
                    flag(r)
                );
            }
        }
        out
    }
}

fn flag(t: &TestResult) -> &'static str {
    if t.degenerate {
        " [zero within-group variance]"
    } else {
        ""
    }
}
