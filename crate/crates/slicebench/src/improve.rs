//! Re-runs baseline tasks with the crafted prompt or with reviewer feedback.

use std::collections::BTreeMap;

use futures::StreamExt;
use serde::{Deserialize, Serialize};
use slicebench_core::improve::{
    craft_enhanced_prompt, improvement_row, iterative_reprompt, CraftedExample, Feedback, ImproveError, ImproveStrategy,
    ImprovementRow, IterationRecord,
};
use slicebench_core::metrics::{aggregate, TaskScore};
use slicebench_core::prompt::{LlmResponse, ModelConfig, PromptSpec, Strategy};
use slicebench_core::slice::SliceMode;
use slicebench_core::taxonomy::LabelStore;

use crate::dataset::SliceTask;
use crate::gateway::{CallContext, Gateway};
use crate::records::{ExperimentRecord, RecordKey};
use crate::runner::{make_record, prompt_for};

pub const CRAFTED_EXPERIMENT: &str = "crafted";

/// Fixture directory for the k-th feedback iteration.
pub fn iterative_experiment(iteration: u32) -> String {
    if iteration <= 1 {
        "iterative".to_string()
    } else {
        format!("iterative-{iteration}")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ImproveOptions {
    pub strategy: ImproveStrategy,
    /// Feedback rounds per failed task; one by default.
    pub max_iterations: u32,
    pub concurrency: usize,
}

impl ImproveOptions {
    pub fn new(strategy: ImproveStrategy) -> Self {
        ImproveOptions { strategy, max_iterations: 1, concurrency: crate::gateway::DEFAULT_CONCURRENCY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupImprovement {
    pub mode: SliceMode,
    pub prompt_strategy: Strategy,
    #[serde(flatten)]
    pub row: ImprovementRow,
    pub rerun_tasks: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImproveOutcome {
    pub rows: Vec<GroupImprovement>,
    /// Crafted-prompt answers, one per baseline record re-run.
    pub records: Vec<ExperimentRecord>,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessImproveError {
    #[error(transparent)]
    Improve(#[from] ImproveError),
    #[error("task {0} is not in the dataset")]
    UnknownTask(String),
    #[error("no model configuration for {0}")]
    UnknownModel(String),
    #[error(transparent)]
    Metrics(#[from] slicebench_core::metrics::MetricsError),
}

type GroupKey = (String, SliceMode, Strategy);

fn group(records: &[ExperimentRecord]) -> BTreeMap<GroupKey, Vec<&ExperimentRecord>> {
    let mut g: BTreeMap<GroupKey, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        g.entry((r.key.model.clone(), r.key.mode, r.key.strategy)).or_default().push(r);
    }
    g
}

/// Per-run score vectors ordered by run index, then task.
fn runs_of(scores: impl IntoIterator<Item = (u32, TaskScore)>) -> Vec<Vec<TaskScore>> {
    let mut by: BTreeMap<u32, BTreeMap<String, TaskScore>> = BTreeMap::new();
    for (run, s) in scores {
        by.entry(run).or_default().insert(s.task_id.clone(), s);
    }
    by.into_values().map(|m| m.into_values().collect()).collect()
}

/// The baseline answer as the model gave it, or an empty answer when the
/// call failed.
fn prior_response(r: &ExperimentRecord, task: &SliceTask) -> LlmResponse {
    r.response.clone().unwrap_or_else(|| LlmResponse::interpret("", &task.program, &task.criterion))
}

pub struct ImproveInputs<'a> {
    pub baseline: &'a [ExperimentRecord],
    pub tasks: &'a BTreeMap<String, SliceTask>,
    pub models: &'a [ModelConfig],
    pub labels: &'a LabelStore,
    pub gateway: &'a Gateway,
}

pub async fn run_improvement(inputs: ImproveInputs<'_>, opts: ImproveOptions) -> Result<ImproveOutcome, HarnessImproveError> {
    if inputs.baseline.is_empty() {
        return Err(ImproveError::BaselineMissing("the baseline file has no records".into()).into());
    }
    match opts.strategy {
        ImproveStrategy::Crafted => crafted(inputs, opts).await,
        ImproveStrategy::Iterative => iterative(inputs, opts).await,
    }
}

fn model<'a>(models: &'a [ModelConfig], name: &str) -> Result<&'a ModelConfig, HarnessImproveError> {
    models.iter().find(|m| m.name == name).ok_or_else(|| HarnessImproveError::UnknownModel(name.to_string()))
}

fn task<'a>(tasks: &'a BTreeMap<String, SliceTask>, id: &str) -> Result<&'a SliceTask, HarnessImproveError> {
    tasks.get(id).ok_or_else(|| HarnessImproveError::UnknownTask(id.to_string()))
}

async fn crafted(inputs: ImproveInputs<'_>, opts: ImproveOptions) -> Result<ImproveOutcome, HarnessImproveError> {
    let example = CraftedExample::default_static();
    let groups = group(inputs.baseline);
    let targets: Vec<_> = groups.iter().filter(|((_, mode, strat), _)| *mode == SliceMode::Static && *strat == Strategy::OneShotCot).collect();
    if targets.is_empty() {
        return Err(ImproveError::BaselineMissing("static one_shot_cot records".into()).into());
    }
    let mut out = ImproveOutcome::default();
    for ((model_name, mode, strat), recs) in targets {
        let cfg = model(inputs.models, model_name)?;
        let mut jobs = Vec::new();
        for r in recs {
            let t = task(inputs.tasks, &r.key.task_id)?;
            let spec = PromptSpec::standard(Strategy::OneShotCot, t.program.clone(), t.criterion.clone());
            jobs.push((*r, t, craft_enhanced_prompt(&spec, &example)?));
        }
        let gateway = inputs.gateway;
        let improved: Vec<ExperimentRecord> = futures::stream::iter(jobs)
            .map(|(r, t, prompt)| async move {
                let ctx = CallContext { experiment: CRAFTED_EXPERIMENT, task_id: &r.key.task_id };
                let outcome = gateway.complete(&prompt, cfg, ctx).await.map(|c| (c.text, c.meta)).map_err(|e| (e.kind().to_string(), e.to_string()));
                make_record(r.key.clone(), CRAFTED_EXPERIMENT, t, &prompt, &r.truth, outcome)
            })
            .buffered(opts.concurrency.max(1))
            .collect()
            .await;
        let vanilla = aggregate(model_name, *mode, *strat, &runs_of(recs.iter().map(|r| (r.key.run, r.score.clone()))))?;
        let better = aggregate(model_name, *mode, *strat, &runs_of(improved.iter().map(|r| (r.key.run, r.score.clone()))))?;
        out.rows.push(GroupImprovement {
            mode: *mode,
            prompt_strategy: *strat,
            row: improvement_row(ImproveStrategy::Crafted, &vanilla, &better),
            rerun_tasks: improved.len(),
        });
        out.records.extend(improved);
    }
    Ok(out)
}

/// Feedback rounds for one failed record; returns the final score and the
/// iteration log.
#[allow(clippy::too_many_arguments)]
pub async fn reprompt_rounds(
    gateway: &Gateway,
    cfg: &ModelConfig,
    task: &SliceTask,
    key: &RecordKey,
    truth: &std::collections::BTreeSet<usize>,
    mut prior: LlmResponse,
    feedback: &Feedback,
    first_iteration: u32,
    rounds: u32,
) -> Result<(TaskScore, Vec<IterationRecord>), HarnessImproveError> {
    let original = prompt_for(task, key.strategy).map_err(ImproveError::from)?;
    let mut log = Vec::new();
    let mut score = None;
    for k in first_iteration..first_iteration + rounds {
        let prompt = iterative_reprompt(&original, &prior, Some(feedback), &key.task_id, k)?;
        let exp = iterative_experiment(k);
        let outcome = gateway
            .complete(&prompt, cfg, CallContext { experiment: &exp, task_id: &key.task_id })
            .await
            .map(|c| (c.text, c.meta))
            .map_err(|e| (e.kind().to_string(), e.to_string()));
        let rec = make_record(key.clone(), &exp, task, &prompt, truth, outcome);
        let response = rec.response.clone().unwrap_or_else(|| LlmResponse::interpret("", &task.program, &task.criterion));
        log.push(IterationRecord {
            task_id: key.task_id.clone(),
            iteration: k,
            prior_response: prior.clone(),
            feedback: feedback.clone(),
            prompt,
            response: response.clone(),
            score: rec.score.clone(),
        });
        let done = rec.score.exact_match;
        score = Some(rec.score);
        prior = response;
        if done {
            break;
        }
    }
    Ok((score.expect("at least one round"), log))
}

async fn iterative(inputs: ImproveInputs<'_>, opts: ImproveOptions) -> Result<ImproveOutcome, HarnessImproveError> {
    let mut out = ImproveOutcome::default();
    let rounds = opts.max_iterations.max(1);
    for ((model_name, mode, strat), recs) in group(inputs.baseline) {
        let cfg = model(inputs.models, &model_name)?;
        let mut scores = Vec::new();
        let mut rerun = 0;
        for r in &recs {
            let label = (r.score.acc_d < 1.0).then(|| inputs.labels.effective_label(&r.key.task_id)).flatten();
            let Some(label) = label else {
                scores.push((r.key.run, r.score.clone()));
                continue;
            };
            let t = task(inputs.tasks, &r.key.task_id)?;
            let fb = Feedback { root_cause: label.root_cause, locations: label.locations };
            let (s, log) = reprompt_rounds(inputs.gateway, cfg, t, &r.key, &r.truth, prior_response(r, t), &fb, 1, rounds).await?;
            rerun += 1;
            scores.push((r.key.run, s));
            out.iterations.extend(log);
        }
        let vanilla = aggregate(&model_name, mode, strat, &runs_of(recs.iter().map(|r| (r.key.run, r.score.clone()))))?;
        let better = aggregate(&model_name, mode, strat, &runs_of(scores))?;
        out.rows.push(GroupImprovement {
            mode,
            prompt_strategy: strat,
            row: improvement_row(ImproveStrategy::Iterative, &vanilla, &better),
            rerun_tasks: rerun,
        });
    }
    Ok(out)
}
