//! Dataset ingestion: `programs/<id>.java` plus `criteria/<id>.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slicebench_core::lang::{parse_program, statements_on, Ast, SourceProgram, StmtKind};
use slicebench_core::slice::{resolve_criterion, SliceMode, SlicingCriterion};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceTask {
    pub task_id: String,
    pub program_id: String,
    pub program: SourceProgram,
    pub criterion: SlicingCriterion,
    pub mode: SliceMode,
}

pub fn task_id(program_id: &str, mode: SliceMode) -> String {
    format!("{program_id}.{mode}")
}

/// The criterion sidecar. Either half may be absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionFile {
    #[serde(rename = "static", default, skip_serializing_if = "Option::is_none")]
    pub static_criterion: Option<StaticCriterion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic: Option<DynamicCriterion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticCriterion {
    pub variable: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicCriterion {
    pub line: usize,
}

/// Per-program problems. None of them stops ingestion of other programs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestError {
    #[error("{id}: no criterion file")]
    MissingCriterion { id: String },
    #[error("{id}: {detail}")]
    CriterionMismatch { id: String, detail: String },
    #[error("{id}: criterion file is not valid: {message}")]
    BadCriterionFile { id: String, message: String },
    #[error("{id}: outside the supported subset: {message}")]
    Unsupported { id: String, message: String },
    #[error("{id}: {message}")]
    Io { id: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub programs: usize,
    pub static_tasks: usize,
    pub dynamic_tasks: usize,
    /// Programs left out entirely.
    pub skipped: Vec<IngestError>,
    /// Criteria rejected while the rest of the program was kept.
    pub errors: Vec<IngestError>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub tasks: Vec<SliceTask>,
    pub manifest: Manifest,
}

impl Ingested {
    pub fn by_id(&self) -> BTreeMap<String, SliceTask> {
        self.tasks.iter().map(|t| (t.task_id.clone(), t.clone())).collect()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot read dataset directory {path}: {source}")]
pub struct DatasetDirError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Line of the last `return` in `main`.
pub fn main_return_line(ast: &Ast) -> Option<usize> {
    let main = ast.main_method()?;
    ast.stmts
        .iter()
        .filter(|s| matches!(s.kind, StmtKind::Return(Some(_))) && s.method() == Some(main.id))
        .map(|s| s.line)
        .max()
}

fn check_dynamic_line(ast: &Ast, line: usize) -> Result<(), String> {
    let main = ast.main_method().ok_or("program has no main method")?;
    let ok = statements_on(ast, line)
        .into_iter()
        .any(|s| matches!(ast.stmt(s).kind, StmtKind::Return(Some(_))) && ast.stmt(s).method() == Some(main.id));
    if ok {
        Ok(())
    } else {
        Err(format!("dynamic criterion line {line} is not a return statement in main"))
    }
}

fn ingest_one(dir: &Path, id: &str, manifest: &mut Manifest) -> Vec<SliceTask> {
    let read = |p: PathBuf| std::fs::read_to_string(&p).map_err(|e| (p, e));
    let text = match read(dir.join("programs").join(format!("{id}.java"))) {
        Ok(t) => t,
        Err((p, e)) => {
            manifest.skipped.push(IngestError::Io { id: id.into(), message: format!("{}: {e}", p.display()) });
            return vec![];
        }
    };
    let ast = match parse_program(&text, id) {
        Ok(a) => a,
        Err(e) => {
            manifest.skipped.push(IngestError::Unsupported { id: id.into(), message: e.to_string() });
            return vec![];
        }
    };
    let crit_path = dir.join("criteria").join(format!("{id}.json"));
    let crit: CriterionFile = match std::fs::read_to_string(&crit_path) {
        Err(_) => {
            manifest.skipped.push(IngestError::MissingCriterion { id: id.into() });
            return vec![];
        }
        Ok(s) => match serde_json::from_str(&s) {
            Ok(c) => c,
            Err(e) => {
                manifest.skipped.push(IngestError::BadCriterionFile { id: id.into(), message: e.to_string() });
                return vec![];
            }
        },
    };
    let program = SourceProgram::new(id, text);
    let mut tasks = Vec::new();
    if let Some(sc) = &crit.static_criterion {
        match resolve_criterion(&ast, &sc.variable, sc.line) {
            Ok(_) => tasks.push(SliceTask {
                task_id: task_id(id, SliceMode::Static),
                program_id: id.into(),
                program: program.clone(),
                criterion: SlicingCriterion::new_static(&sc.variable, sc.line),
                mode: SliceMode::Static,
            }),
            Err(e) => manifest.errors.push(IngestError::CriterionMismatch { id: id.into(), detail: e.to_string() }),
        }
    }
    let dyn_line = match &crit.dynamic {
        Some(d) => match check_dynamic_line(&ast, d.line) {
            Ok(()) => Some(d.line),
            Err(detail) => {
                manifest.errors.push(IngestError::CriterionMismatch { id: id.into(), detail });
                None
            }
        },
        None => main_return_line(&ast),
    };
    if let Some(line) = dyn_line {
        tasks.push(SliceTask {
            task_id: task_id(id, SliceMode::Dynamic),
            program_id: id.into(),
            program,
            criterion: SlicingCriterion::new_dynamic(line),
            mode: SliceMode::Dynamic,
        });
    }
    tasks
}

/// Reads every program in `dir/programs`. Only an unreadable directory is an
/// error; per-program problems land in the manifest.
pub fn ingest_dataset(dir: &Path) -> Result<Ingested, DatasetDirError> {
    let programs_dir = dir.join("programs");
    let entries = std::fs::read_dir(&programs_dir).map_err(|source| DatasetDirError { path: programs_dir.clone(), source })?;
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "java"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    ids.sort();
    let mut manifest = Manifest { dataset: dir.display().to_string(), programs: ids.len(), ..Default::default() };
    let mut tasks = Vec::new();
    for id in &ids {
        tasks.extend(ingest_one(dir, id, &mut manifest));
    }
    manifest.static_tasks = tasks.iter().filter(|t| t.mode == SliceMode::Static).count();
    manifest.dynamic_tasks = tasks.len() - manifest.static_tasks;
    Ok(Ingested { tasks, manifest })
}
