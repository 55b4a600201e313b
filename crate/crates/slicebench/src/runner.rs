//! Runs the model × mode × strategy × task × run matrix against the gateway.

use std::collections::{BTreeMap, BTreeSet};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use slicebench_core::metrics::{score_task, TaskScore};
use slicebench_core::prompt::{build_prompt, LlmResponse, ModelConfig, PromptSpec, Strategy};

use crate::dataset::SliceTask;
use crate::gateway::{CallContext, CallMeta, Gateway, GatewayError};
use crate::records::{load_jsonl, Appender, CallFailure, ExperimentRecord, RecordKey, StoreError};
use crate::truth::{sha256_hex, GroundTruth};
use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Stop after this many new records, as if the process were killed.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub planned: usize,
    pub already_present: usize,
    pub executed: usize,
    pub call_failures: usize,
    /// Tasks left out because their oracle slice could not be computed.
    pub tasks_without_truth: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigFileError),
}

pub fn prompt_for(task: &SliceTask, strategy: Strategy) -> Result<String, slicebench_core::prompt::TemplateError> {
    build_prompt(&PromptSpec::standard(strategy, task.program.clone(), task.criterion.clone()))
}

/// Builds the stored record for one answered (or failed) call.
#[allow(clippy::too_many_arguments)]
pub fn make_record(
    key: RecordKey,
    experiment: &str,
    task: &SliceTask,
    prompt: &str,
    truth: &BTreeSet<usize>,
    outcome: Result<(String, CallMeta), (String, String)>,
) -> ExperimentRecord {
    let (response, error, meta) = match outcome {
        Ok((text, meta)) => (Some(LlmResponse::interpret(text, &task.program, &task.criterion)), None, meta),
        Err((kind, message)) => (None, Some(CallFailure { kind, message }), CallMeta::default()),
    };
    let pred = response.as_ref().and_then(|r| r.slice()).map(|s| &s.lines);
    let score = score_task(&key.task_id, pred, truth).unwrap_or(TaskScore {
        task_id: key.task_id.clone(),
        exact_match: false,
        acc_d: 0.0,
        parse_failed: true,
    });
    ExperimentRecord {
        experiment: experiment.to_string(),
        program_id: task.program_id.clone(),
        criterion: task.criterion.clone(),
        prompt_hash: sha256_hex(prompt),
        response,
        error,
        truth: truth.clone(),
        score,
        latency_ms: meta.latency_ms,
        prompt_tokens: meta.prompt_tokens,
        completion_tokens: meta.completion_tokens,
        retry_count: meta.retry_count,
        key,
    }
}

fn failure(e: &GatewayError) -> (String, String) {
    (e.kind().to_string(), e.to_string())
}

struct Job<'a> {
    key: RecordKey,
    task: &'a SliceTask,
    model: &'a ModelConfig,
    prompt: Result<String, String>,
    truth: &'a BTreeSet<usize>,
}

/// Executes every missing record of the matrix and appends it to the output
/// file. Records already in the file are skipped by key, so an interrupted
/// run picks up where it stopped.
pub async fn run_experiment(
    config: &ExperimentConfig,
    tasks: &[SliceTask],
    truth: &GroundTruth,
    gateway: &Gateway,
    opts: RunOptions,
) -> Result<RunReport, RunError> {
    config.validate()?;
    let existing: Vec<ExperimentRecord> = load_jsonl(&config.output, true)?;
    let done: BTreeSet<RecordKey> = existing.into_iter().map(|r| r.key).collect();
    let mut report = RunReport::default();
    report.tasks_without_truth = tasks.iter().filter(|t| !truth.slices.contains_key(&t.task_id)).map(|t| t.task_id.clone()).collect();

    let mut prompts: BTreeMap<(String, Strategy), Result<String, String>> = BTreeMap::new();
    let mut jobs = Vec::new();
    for model in &config.models {
        for mode in &config.modes {
            for strategy in &config.strategies {
                for task in tasks.iter().filter(|t| t.mode == *mode) {
                    let Some(t) = truth.slices.get(&task.task_id) else { continue };
                    for run in 0..config.runs {
                        report.planned += 1;
                        let key = RecordKey {
                            model: model.name.clone(),
                            mode: *mode,
                            strategy: *strategy,
                            task_id: task.task_id.clone(),
                            run,
                        };
                        if done.contains(&key) {
                            report.already_present += 1;
                            continue;
                        }
                        let prompt = prompts
                            .entry((task.task_id.clone(), *strategy))
                            .or_insert_with(|| prompt_for(task, *strategy).map_err(|e| e.to_string()))
                            .clone();
                        jobs.push(Job { key, task, model, prompt, truth: t });
                    }
                }
            }
        }
    }

    let experiment = config.experiment.as_str();
    let limit = opts.stop_after.unwrap_or(usize::MAX);
    let mut appender = Appender::open(&config.output)?;
    let mut results = stream::iter(jobs)
        .map(|job| async move {
            let outcome = match &job.prompt {
                Ok(p) => gateway
                    .complete(p, job.model, CallContext { experiment, task_id: &job.key.task_id })
                    .await
                    .map(|c| (c.text, c.meta))
                    .map_err(|e| failure(&e)),
                Err(e) => Err(("template".to_string(), e.clone())),
            };
            let prompt = job.prompt.as_deref().unwrap_or("");
            make_record(job.key, experiment, job.task, prompt, job.truth, outcome)
        })
        .buffer_unordered(config.concurrency.max(1));
    while report.executed < limit {
        let Some(record) = results.next().await else { break };
        if record.error.is_some() {
            report.call_failures += 1;
        }
        appender.append(&record)?;
        report.executed += 1;
    }
    Ok(report)
}
