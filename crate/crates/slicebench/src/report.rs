//! Aggregates persisted records into model × strategy tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use slicebench_core::flow::pdg_from_source;
use slicebench_core::metrics::{aggregate_grouped, dependence_accuracy_edges, AccDGranularity, ExperimentAggregate, Grouping, MetricsError, TaskScore};
use slicebench_core::prompt::Strategy;
use slicebench_core::slice::SliceMode;

use crate::records::ExperimentRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub acc_d: f64,
    pub acc_em: f64,
}

/// One row per model and prompt strategy, one cell per slicing mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: String,
    pub strategy: Strategy,
    #[serde(rename = "static", skip_serializing_if = "Option::is_none")]
    pub static_cell: Option<Cell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamic: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub acc_d: AccDGranularity,
    pub grouping: Grouping,
    pub records: usize,
    pub call_failures: usize,
    pub parse_failures: usize,
    pub experiments: Vec<ExperimentAggregate>,
    pub table: Vec<TableRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{model}/{mode}/{strategy}: {source}")]
    Metrics { model: String, mode: SliceMode, strategy: Strategy, source: MetricsError },
    #[error("edge-level scoring needs the source of program {0}")]
    MissingProgram(String),
    #[error("program {id}: {message}")]
    Program { id: String, message: String },
}

/// Recomputes Accuracy-D over dependence edges; needs program sources.
fn rescore_edges(records: &[ExperimentRecord], sources: &BTreeMap<String, String>) -> Result<Vec<TaskScore>, ReportError> {
    let mut graphs = BTreeMap::new();
    records
        .iter()
        .map(|r| {
            let mut s = r.score.clone();
            let Some(pred) = r.predicted() else { return Ok(s) };
            if !graphs.contains_key(&r.program_id) {
                let src = sources.get(&r.program_id).ok_or_else(|| ReportError::MissingProgram(r.program_id.clone()))?;
                let g = pdg_from_source(src, &r.program_id).map_err(|e| ReportError::Program { id: r.program_id.clone(), message: e.to_string() })?;
                graphs.insert(r.program_id.clone(), g);
            }
            let (ast, pdg) = &graphs[&r.program_id];
            s.acc_d = dependence_accuracy_edges(ast, pdg, pred, &r.truth).map_err(|source| ReportError::Metrics {
                model: r.key.model.clone(),
                mode: r.key.mode,
                strategy: r.key.strategy,
                source,
            })?;
            Ok(s)
        })
        .collect()
}

/// Deterministic: records are grouped and ordered by key, so re-scoring the
/// same file gives identical numbers.
pub fn score_records(
    records: &[ExperimentRecord],
    granularity: AccDGranularity,
    grouping: Grouping,
    sources: Option<&BTreeMap<String, String>>,
) -> Result<Report, ReportError> {
    let scores: Vec<TaskScore> = match granularity {
        AccDGranularity::Lines => records.iter().map(|r| r.score.clone()).collect(),
        AccDGranularity::Edges => rescore_edges(records, sources.ok_or_else(|| ReportError::MissingProgram("*".into()))?)?,
    };
    let program_of: BTreeMap<&str, &str> = records.iter().map(|r| (r.key.task_id.as_str(), r.program_id.as_str())).collect();
    type Group = BTreeMap<u32, BTreeMap<String, TaskScore>>;
    let mut groups: BTreeMap<(String, SliceMode, Strategy), Group> = BTreeMap::new();
    for (r, s) in records.iter().zip(scores) {
        groups
            .entry((r.key.model.clone(), r.key.mode, r.key.strategy))
            .or_default()
            .entry(r.key.run)
            .or_default()
            .insert(r.key.task_id.clone(), s);
    }
    let mut experiments = Vec::new();
    for ((model, mode, strategy), runs) in groups {
        let runs: Vec<Vec<TaskScore>> = runs.into_values().map(|m| m.into_values().collect()).collect();
        let lookup = |id: &str| program_of.get(id).map_or(id.to_string(), |p| p.to_string());
        let agg = aggregate_grouped(&model, mode, strategy, &runs, grouping, &lookup)
            .map_err(|source| ReportError::Metrics { model: model.clone(), mode, strategy, source })?;
        experiments.push(agg);
    }
    let mut rows: BTreeMap<(String, Strategy), TableRow> = BTreeMap::new();
    for e in &experiments {
        let row = rows.entry((e.model.clone(), e.strategy)).or_insert_with(|| TableRow {
            model: e.model.clone(),
            strategy: e.strategy,
            static_cell: None,
            dynamic: None,
        });
        let cell = Some(Cell { acc_d: e.acc_d, acc_em: e.acc_em });
        match e.mode {
            SliceMode::Static => row.static_cell = cell,
            SliceMode::Dynamic => row.dynamic = cell,
        }
    }
    Ok(Report {
        acc_d: granularity,
        grouping,
        records: records.len(),
        call_failures: records.iter().filter(|r| r.error.is_some()).count(),
        parse_failures: records.iter().filter(|r| r.response.as_ref().is_some_and(|x| x.failure().is_some())).count(),
        experiments,
        table: rows.into_values().collect(),
    })
}
