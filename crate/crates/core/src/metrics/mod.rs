//! Scoring predicted slices, aggregating runs, and the rank-sum test.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::flow::Pdg;
use crate::lang::Ast;
use crate::prompt::Strategy;
use crate::slice::SliceMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task_id: String,
    pub exact_match: bool,
    pub acc_d: f64,
    pub parse_failed: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("ground-truth slice is empty")]
    EmptyTruth,
    #[error("runs cover different task sets")]
    RunMismatch,
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("sample is empty")]
    EmptySample,
    #[error("all values are identical; U = {u}, p = 1")]
    DegenerateSamples { u: f64 },
}

/// How Accuracy-D counts dependencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccDGranularity {
    #[default]
    Lines,
    Edges,
}

impl std::str::FromStr for AccDGranularity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lines" => Ok(Self::Lines),
            "edges" => Ok(Self::Edges),
            other => Err(format!("expected lines or edges, got {other:?}")),
        }
    }
}

pub fn exact_match(pred: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> bool {
    pred == truth
}

/// Line-level recall |pred ∩ truth| / |truth|.
pub fn dependence_accuracy(pred: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> Result<f64, MetricsError> {
    if truth.is_empty() {
        return Err(MetricsError::EmptyTruth);
    }
    Ok(pred.intersection(truth).count() as f64 / truth.len() as f64)
}

/// Edge-level variant: among dependence edges whose endpoints both lie on
/// truth lines, the fraction whose endpoints both lie on predicted lines.
/// Falls back to line recall when the truth slice has no internal edge.
pub fn dependence_accuracy_edges(
    ast: &Ast,
    pdg: &Pdg,
    pred: &BTreeSet<usize>,
    truth: &BTreeSet<usize>,
) -> Result<f64, MetricsError> {
    if truth.is_empty() {
        return Err(MetricsError::EmptyTruth);
    }
    let pairs: BTreeSet<(usize, usize)> = pdg
        .edges
        .iter()
        .map(|e| (ast.stmt(e.from).line, ast.stmt(e.to).line))
        .filter(|(a, b)| a != b && truth.contains(a) && truth.contains(b))
        .collect();
    if pairs.is_empty() {
        return dependence_accuracy(pred, truth);
    }
    let hit = pairs.iter().filter(|(a, b)| pred.contains(a) && pred.contains(b)).count();
    Ok(hit as f64 / pairs.len() as f64)
}

/// Scores one answer. `None` means the response could not be parsed.
pub fn score_task(task_id: &str, pred: Option<&BTreeSet<usize>>, truth: &BTreeSet<usize>) -> Result<TaskScore, MetricsError> {
    match pred {
        Some(p) => Ok(TaskScore {
            task_id: task_id.to_string(),
            exact_match: exact_match(p, truth),
            acc_d: dependence_accuracy(p, truth)?,
            parse_failed: false,
        }),
        None => {
            if truth.is_empty() {
                return Err(MetricsError::EmptyTruth);
            }
            Ok(TaskScore { task_id: task_id.to_string(), exact_match: false, acc_d: 0.0, parse_failed: true })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Percent.
    pub acc_d: f64,
    /// Percent.
    pub acc_em: f64,
    pub tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentAggregate {
    pub model: String,
    pub mode: SliceMode,
    pub strategy: Strategy,
    pub runs: usize,
    /// Percent, two decimals.
    pub acc_d: f64,
    /// Percent, two decimals.
    pub acc_em: f64,
    pub per_run: Vec<RunSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    #[default]
    PerTask,
    /// Average tasks of the same program first.
    PerProgram,
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn run_summary(run: &[TaskScore], grouping: Grouping, program_of: &dyn Fn(&str) -> String) -> RunSummary {
    let acc_d = match grouping {
        Grouping::PerTask => mean(run.iter().map(|s| s.acc_d)),
        Grouping::PerProgram => {
            let mut by: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for s in run {
                by.entry(program_of(&s.task_id)).or_default().push(s.acc_d);
            }
            mean(by.into_values().map(mean))
        }
    };
    let em = mean(run.iter().map(|s| if s.exact_match { 1.0 } else { 0.0 }));
    RunSummary { acc_d: acc_d * 100.0, acc_em: em * 100.0, tasks: run.len() }
}

/// Per-run means first, then the mean over runs.
pub fn aggregate(
    model: &str,
    mode: SliceMode,
    strategy: Strategy,
    runs: &[Vec<TaskScore>],
) -> Result<ExperimentAggregate, MetricsError> {
    aggregate_grouped(model, mode, strategy, runs, Grouping::PerTask, &|id| id.to_string())
}

pub fn aggregate_grouped(
    model: &str,
    mode: SliceMode,
    strategy: Strategy,
    runs: &[Vec<TaskScore>],
    grouping: Grouping,
    program_of: &dyn Fn(&str) -> String,
) -> Result<ExperimentAggregate, MetricsError> {
    let first = runs.first().ok_or(MetricsError::NoRuns)?;
    let ids = |r: &[TaskScore]| r.iter().map(|s| s.task_id.clone()).collect::<BTreeSet<_>>();
    let expected = ids(first);
    if runs.iter().any(|r| ids(r) != expected || r.len() != first.len()) {
        return Err(MetricsError::RunMismatch);
    }
    let per_run: Vec<RunSummary> = runs.iter().map(|r| run_summary(r, grouping, program_of)).collect();
    Ok(ExperimentAggregate {
        model: model.to_string(),
        mode,
        strategy,
        runs: runs.len(),
        acc_d: round2(mean(per_run.iter().map(|r| r.acc_d))),
        acc_em: round2(mean(per_run.iter().map(|r| r.acc_em))),
        per_run,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    /// U of the first sample: pairs where it is larger, ties counting one half.
    pub u_statistic: f64,
    pub p_value: f64,
    pub method: String,
}

/// Average 1-based ranks, ties sharing their mean rank.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in &idx[i..=j] {
            ranks[*k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Mann-Whitney U with normal approximation, tie correction and
/// continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<StatTestResult, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&all);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let tie_term: f64 = ties.iter().map(|t| (*t as f64).powi(3) - *t as f64).sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Err(MetricsError::DegenerateSamples { u });
    }
    let mu = n1 * n2 / 2.0;
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.sf(z)).min(1.0);
    Ok(StatTestResult { u_statistic: u, p_value: p, method: "normal-approximation-with-tie-correction".to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn basic_scores() {
        assert!(exact_match(&set(&[3, 1, 2]), &set(&[1, 2, 3])));
        assert!(!exact_match(&set(&[1, 2]), &set(&[1, 2, 3])));
        assert_eq!(dependence_accuracy(&set(&[1, 2]), &set(&[1, 2, 3, 4])), Ok(0.5));
        assert_eq!(dependence_accuracy(&set(&[1, 2, 3, 9]), &set(&[1, 2, 3])), Ok(1.0));
        assert_eq!(dependence_accuracy(&set(&[1]), &set(&[])), Err(MetricsError::EmptyTruth));
        let s = score_task("t", None, &set(&[1])).unwrap();
        assert!(s.parse_failed && !s.exact_match && s.acc_d == 0.0);
    }

    #[test]
    fn aggregate_means() {
        let run = |d: f64| vec![TaskScore { task_id: "a".into(), exact_match: false, acc_d: d, parse_failed: false }];
        let agg = aggregate("m", SliceMode::Static, Strategy::ZeroShot, &[run(0.5), run(0.6), run(0.7)]).unwrap();
        assert_eq!(agg.acc_d, 60.0);
        assert_eq!(agg.runs, 3);
        let mut other = run(0.5);
        other[0].task_id = "b".into();
        assert_eq!(
            aggregate("m", SliceMode::Static, Strategy::ZeroShot, &[run(0.5), other]),
            Err(MetricsError::RunMismatch)
        );
        assert_eq!(aggregate("m", SliceMode::Static, Strategy::ZeroShot, &[]), Err(MetricsError::NoRuns));
    }

    #[test]
    fn separation_and_degenerate() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u_statistic, 0.0);
        assert_eq!(mann_whitney_u(&[2.0, 2.0], &[2.0]), Err(MetricsError::DegenerateSamples { u: 1.0 }));
        assert_eq!(mann_whitney_u(&[], &[1.0]), Err(MetricsError::EmptySample));
    }
}
