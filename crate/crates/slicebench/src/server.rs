//! HTTP API behind the triage UI.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use slicebench_core::improve::{reference_improvements, Feedback, IterationRecord, ReferenceImprovement};
use slicebench_core::metrics::{AccDGranularity, Grouping, TaskScore};
use slicebench_core::prompt::{ModelConfig, Strategy};
use slicebench_core::slice::{SliceMode, SlicingCriterion};
use slicebench_core::taxonomy::{
    distribution_of, flow_csv, flow_map_of, select_failures, Distribution, EffectiveLabel, FailureLabel, FaultLocation,
    FlowTriple, LabelRecord, LabelStore, Resolution, RootCause, TaxonomyError,
};
use tokio::sync::Mutex;

use crate::dataset::{ingest_dataset, SliceTask};
use crate::gateway::Gateway;
use crate::improve::reprompt_rounds;
use crate::records::{load_jsonl, load_records, Appender, ExperimentRecord};
use crate::report::{score_records, Report};

/// Which baseline records the triage queue shows: one model, one prompt
/// strategy, one run, both slicing modes.
#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub model: Option<String>,
    pub strategy: Option<Strategy>,
    pub run: u32,
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub dataset: PathBuf,
    pub results: PathBuf,
    pub labels: PathBuf,
    pub iterations: PathBuf,
    pub models: Vec<ModelConfig>,
    pub selection: Selection,
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetDirError),
    #[error(transparent)]
    Store(#[from] crate::records::StoreError),
    #[error(transparent)]
    Labels(#[from] TaxonomyError),
    #[error("{0}")]
    Selection(String),
}

struct Labels {
    store: LabelStore,
    file: Appender,
}

struct Iterations {
    records: Vec<IterationRecord>,
    file: Appender,
}

struct Inner {
    tasks: BTreeMap<String, SliceTask>,
    baseline: BTreeMap<String, ExperimentRecord>,
    scores: BTreeMap<String, TaskScore>,
    all_records: Vec<ExperimentRecord>,
    model: ModelConfig,
    strategy: Strategy,
    gateway: Gateway,
    labels: Mutex<Labels>,
    iterations: Mutex<Iterations>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn load(opts: &ServeOptions, gateway: Gateway) -> Result<Self, ServeError> {
        let tasks = ingest_dataset(&opts.dataset)?.by_id();
        let all_records = load_records(&opts.results)?;
        let model_name = match &opts.selection.model {
            Some(m) => m.clone(),
            None => all_records.iter().map(|r| r.key.model.clone()).min().ok_or_else(|| ServeError::Selection("results file is empty".into()))?,
        };
        let strategies: BTreeSet<Strategy> = all_records.iter().filter(|r| r.key.model == model_name).map(|r| r.key.strategy).collect();
        let strategy = match opts.selection.strategy {
            Some(s) => s,
            None if strategies.contains(&Strategy::OneShotCot) => Strategy::OneShotCot,
            None => *strategies.iter().next().ok_or_else(|| ServeError::Selection(format!("no records for model {model_name}")))?,
        };
        let baseline: BTreeMap<String, ExperimentRecord> = all_records
            .iter()
            .filter(|r| r.key.model == model_name && r.key.strategy == strategy && r.key.run == opts.selection.run)
            .map(|r| (r.key.task_id.clone(), r.clone()))
            .collect();
        let scores = baseline.iter().map(|(k, r)| (k.clone(), r.score.clone())).collect();
        let model = opts.models.iter().find(|m| m.name == model_name).cloned().unwrap_or_else(|| ModelConfig::for_model(&model_name));
        let text = std::fs::read_to_string(&opts.labels).unwrap_or_default();
        let store = LabelStore::from_jsonl(&text)?;
        let iterations: Vec<IterationRecord> = load_jsonl(&opts.iterations, true)?;
        Ok(AppState(Arc::new(Inner {
            tasks,
            baseline,
            scores,
            all_records,
            model,
            strategy,
            gateway,
            labels: Mutex::new(Labels { store, file: Appender::open(&opts.labels)? }),
            iterations: Mutex::new(Iterations { records: iterations, file: Appender::open(&opts.iterations)? }),
        })))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl std::fmt::Display) -> Self {
        ApiError { status, body: json!({ "error": message.to_string() }) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<TaxonomyError> for ApiError {
    fn from(e: TaxonomyError) -> Self {
        let status = match e {
            TaxonomyError::UnknownTask(_) => StatusCode::NOT_FOUND,
            TaxonomyError::UnresolvedDisagreement(_) => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e)
    }
}

impl From<crate::records::StoreError> for ApiError {
    fn from(e: crate::records::StoreError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diff {
    pub both: BTreeSet<usize>,
    /// In the ground truth only.
    pub missing: BTreeSet<usize>,
    /// In the prediction only.
    pub extra: BTreeSet<usize>,
}

pub fn diff(truth: &BTreeSet<usize>, pred: &BTreeSet<usize>) -> Diff {
    Diff {
        both: truth.intersection(pred).copied().collect(),
        missing: truth.difference(pred).copied().collect(),
        extra: pred.difference(truth).copied().collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSummary {
    pub id: String,
    pub program_id: String,
    pub mode: SliceMode,
    pub criterion: SlicingCriterion,
    pub score: TaskScore,
    /// Score of the newest iteration, or the baseline score.
    pub current_score: TaskScore,
    pub iterations: usize,
    pub label: Option<EffectiveLabel>,
    pub disagreement: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskDetail {
    #[serde(flatten)]
    pub summary: TaskSummary,
    pub source: String,
    pub ground_truth: BTreeSet<usize>,
    /// Newest prediction (latest iteration, else the baseline answer).
    pub prediction: Option<BTreeSet<usize>>,
    pub baseline_prediction: Option<BTreeSet<usize>>,
    pub raw_response: Option<String>,
    pub parse_failure: Option<String>,
    pub diff: Diff,
}

fn summary(rec: &ExperimentRecord, labels: &LabelStore, iters: &[IterationRecord]) -> TaskSummary {
    let own: Vec<&IterationRecord> = iters.iter().filter(|i| i.task_id == rec.key.task_id).collect();
    TaskSummary {
        id: rec.key.task_id.clone(),
        program_id: rec.program_id.clone(),
        mode: rec.key.mode,
        criterion: rec.criterion.clone(),
        score: rec.score.clone(),
        current_score: own.iter().max_by_key(|i| i.iteration).map_or_else(|| rec.score.clone(), |i| i.score.clone()),
        iterations: own.len(),
        label: labels.effective_label(&rec.key.task_id),
        disagreement: labels.disagreements().contains(&rec.key.task_id),
    }
}

#[derive(Debug, Deserialize)]
struct TaskQuery {
    #[serde(default)]
    failed: Option<bool>,
}

async fn list_tasks(State(s): State<AppState>, Query(q): Query<TaskQuery>) -> Json<Vec<TaskSummary>> {
    let labels = s.0.labels.lock().await;
    let iters = s.0.iterations.lock().await;
    let ids: Vec<String> = if q.failed.unwrap_or(false) {
        let scores: Vec<TaskScore> = s.0.baseline.values().map(|r| r.score.clone()).collect();
        select_failures(&scores)
    } else {
        s.0.baseline.keys().cloned().collect()
    };
    Json(ids.iter().map(|id| summary(&s.0.baseline[id], &labels.store, &iters.records)).collect())
}

fn record<'a>(s: &'a AppState, id: &str) -> Result<&'a ExperimentRecord, ApiError> {
    s.0.baseline.get(id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown task {id}")))
}

async fn get_task(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<TaskDetail>, ApiError> {
    let rec = record(&s, &id)?;
    let labels = s.0.labels.lock().await;
    let iters = s.0.iterations.lock().await;
    let latest = iters.records.iter().filter(|i| i.task_id == id).max_by_key(|i| i.iteration);
    let (prediction, raw, failure) = match latest {
        Some(it) => (it.response.slice().map(|x| x.lines.clone()), Some(it.response.raw.clone()), it.response.failure().map(|f| f.to_string())),
        None => (
            rec.predicted().cloned(),
            rec.response.as_ref().map(|r| r.raw.clone()),
            rec.response.as_ref().and_then(|r| r.failure()).map(|f| f.to_string()).or_else(|| rec.error.as_ref().map(|e| e.message.clone())),
        ),
    };
    let source = s.0.tasks.get(&id).map(|t| t.program.text.clone()).unwrap_or_default();
    Ok(Json(TaskDetail {
        summary: summary(rec, &labels.store, &iters.records),
        source,
        ground_truth: rec.truth.clone(),
        diff: diff(&rec.truth, prediction.as_ref().unwrap_or(&BTreeSet::new())),
        prediction,
        baseline_prediction: rec.predicted().cloned(),
        raw_response: raw,
        parse_failure: failure,
    }))
}

#[derive(Debug, Deserialize)]
pub struct LabelBody {
    pub root_cause: RootCause,
    pub locations: BTreeSet<FaultLocation>,
    #[serde(default = "default_reviewer")]
    pub reviewer: String,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub timestamp: Option<String>,
}

fn default_reviewer() -> String {
    "reviewer".to_string()
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Stores the label durably. A label that leaves reviewers disagreeing is
/// still kept, but the answer is 409 until a resolution is posted.
async fn post_label(State(s): State<AppState>, Path(id): Path<String>, Json(b): Json<LabelBody>) -> Result<Response, ApiError> {
    let mut labels = s.0.labels.lock().await;
    let label = FailureLabel {
        task_id: id.clone(),
        root_cause: b.root_cause,
        locations: b.locations,
        reviewer: b.reviewer,
        timestamp: b.timestamp.unwrap_or_else(now),
        notes: b.notes,
    };
    let mut trial = labels.store.clone();
    let rec: LabelRecord = trial.record_label(label, &s.0.scores)?.clone();
    labels.file.append(&rec)?;
    labels.store = trial;
    if labels.store.disagreements().contains(&id) {
        let views: Vec<&FailureLabel> = labels.store.latest().get(id.as_str()).map(|m| m.values().map(|(_, l)| *l).collect()).unwrap_or_default();
        let body = json!({ "error": "reviewers disagree; post a resolution", "stored": rec, "labels": views });
        return Ok((StatusCode::CONFLICT, Json(body)).into_response());
    }
    Ok((StatusCode::CREATED, Json(rec)).into_response())
}

#[derive(Debug, Deserialize)]
pub struct ResolutionBody {
    pub root_cause: RootCause,
    pub locations: BTreeSet<FaultLocation>,
    #[serde(default = "default_reviewer")]
    pub resolver: String,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub timestamp: Option<String>,
}

async fn post_resolution(State(s): State<AppState>, Path(id): Path<String>, Json(b): Json<ResolutionBody>) -> Result<Response, ApiError> {
    let mut labels = s.0.labels.lock().await;
    let res = Resolution {
        task_id: id,
        root_cause: b.root_cause,
        locations: b.locations,
        resolver: b.resolver,
        timestamp: b.timestamp.unwrap_or_else(now),
        notes: b.notes,
    };
    let mut trial = labels.store.clone();
    let rec = trial.record_resolution(res)?.clone();
    labels.file.append(&rec)?;
    labels.store = trial;
    Ok((StatusCode::CREATED, Json(rec)).into_response())
}

/// One more feedback round on the task, using its agreed label.
async fn post_reprompt(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let rec = record(&s, &id)?.clone();
    let task = s.0.tasks.get(&id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("task {id} is not in the dataset")))?;
    let label = {
        let labels = s.0.labels.lock().await;
        if labels.store.disagreements().contains(&id) {
            return Err(ApiError::new(StatusCode::CONFLICT, "reviewers disagree on this task; resolve first"));
        }
        labels.store.effective_label(&id)
    };
    let label = label.ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("no failure label recorded for task {id}")))?;
    let (prior, next) = {
        let iters = s.0.iterations.lock().await;
        let latest = iters.records.iter().filter(|i| i.task_id == id).max_by_key(|i| i.iteration);
        let prior = match latest {
            Some(i) => i.response.clone(),
            None => rec.response.clone().unwrap_or_else(|| slicebench_core::prompt::LlmResponse::interpret("", &task.program, &task.criterion)),
        };
        (prior, latest.map_or(1, |i| i.iteration + 1))
    };
    let fb = Feedback { root_cause: label.root_cause, locations: label.locations };
    let (_, log) = reprompt_rounds(&s.0.gateway, &s.0.model, task, &rec.key, &rec.truth, prior, &fb, next, 1)
        .await
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e))?;
    let it = log.into_iter().next().expect("one round");
    let mut iters = s.0.iterations.lock().await;
    iters.file.append(&it)?;
    iters.records.push(it.clone());
    Ok((StatusCode::CREATED, Json(it)).into_response())
}

async fn get_iterations(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<Vec<IterationRecord>>, ApiError> {
    record(&s, &id)?;
    let iters = s.0.iterations.lock().await;
    let mut out: Vec<IterationRecord> = iters.records.iter().filter(|i| i.task_id == id).cloned().collect();
    out.sort_by_key(|i| i.iteration);
    Ok(Json(out))
}

#[derive(Debug, Clone, Serialize)]
pub struct TriageCounts {
    pub tasks: usize,
    pub failed: usize,
    pub labeled: usize,
    pub pending: usize,
    pub fixed_by_reprompt: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiReport {
    pub model: String,
    pub strategy: Strategy,
    pub report: Report,
    pub triage: TriageCounts,
    pub distribution: Distribution,
    pub flow_map: Vec<FlowTriple>,
    pub flow_csv: String,
    pub disagreements: Vec<String>,
    pub reference_improvements: Vec<ReferenceImprovement>,
}

async fn get_report(State(s): State<AppState>) -> Result<Json<ApiReport>, ApiError> {
    let report = score_records(&s.0.all_records, AccDGranularity::Lines, Grouping::PerTask, None)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?;
    let labels = s.0.labels.lock().await;
    let iters = s.0.iterations.lock().await;
    let (agreed, open) = labels.store.classify();
    let failed: BTreeSet<String> = s.0.baseline.values().filter(|r| r.score.acc_d < 1.0).map(|r| r.key.task_id.clone()).collect();
    let fixed: BTreeSet<&str> = iters.records.iter().filter(|i| i.score.exact_match).map(|i| i.task_id.as_str()).collect();
    let labeled: BTreeSet<&str> = agreed.iter().map(|l| l.task_id.as_str()).collect();
    let triage = TriageCounts {
        tasks: s.0.baseline.len(),
        failed: failed.len(),
        labeled: labeled.len(),
        pending: failed.iter().filter(|t| !labeled.contains(t.as_str()) && !fixed.contains(t.as_str())).count(),
        fixed_by_reprompt: fixed.len(),
    };
    let flow = flow_map_of(&agreed);
    Ok(Json(ApiReport {
        model: s.0.model.name.clone(),
        strategy: s.0.strategy,
        report,
        triage,
        distribution: distribution_of(&agreed),
        flow_csv: flow_csv(&flow),
        flow_map: flow,
        disagreements: open,
        reference_improvements: reference_improvements(),
    }))
}

async fn index() -> &'static str {
    "slicebench triage API\n\nGET  /api/tasks[?failed=true]\nGET  /api/tasks/{id}\nPOST /api/tasks/{id}/label\nPOST /api/tasks/{id}/resolution\nPOST /api/tasks/{id}/reprompt\nGET  /api/tasks/{id}/iterations\nGET  /api/report\n"
}

pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/tasks", get(list_tasks))
        .route("/api/tasks/{id}", get(get_task))
        .route("/api/tasks/{id}/label", post(post_label))
        .route("/api/tasks/{id}/resolution", post(post_resolution))
        .route("/api/tasks/{id}/reprompt", post(post_reprompt))
        .route("/api/tasks/{id}/iterations", get(get_iterations))
        .route("/api/report", get(get_report))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.route("/", get(index)),
    }
}

pub async fn serve(listener: tokio::net::TcpListener, state: AppState, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(state, ui_dir)).await
}
