use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use slicebench::config::ExperimentConfig;
use slicebench::dataset::ingest_dataset;
use slicebench::gateway::{Gateway, GatewayOptions};
use slicebench::improve::{run_improvement, ImproveInputs, ImproveOptions};
use slicebench::records::{load_records, Appender};
use slicebench::report::score_records;
use slicebench::runner::{run_experiment, RunOptions};
use slicebench::server::{serve, AppState, Selection, ServeOptions};
use slicebench::truth::{gen_ground_truth, TruthCache};
use slicebench_core::dynamic::{dynamic_backward_slice, execute};
use slicebench_core::flow::build_pdg;
use slicebench_core::improve::ImproveStrategy;
use slicebench_core::lang::parse_program;
use slicebench_core::metrics::{AccDGranularity, Grouping};
use slicebench_core::prompt::Strategy;
use slicebench_core::slice::{render_output, static_backward_slice, SlicingCriterion, StructuralLines};
use slicebench_core::taxonomy::LabelStore;

#[derive(Parser)]
#[command(name = "slicebench", version, about = "Program slicing workbench for a Java subset")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupingArg {
    PerTask,
    PerProgram,
}

impl From<GroupingArg> for Grouping {
    fn from(g: GroupingArg) -> Self {
        match g {
            GroupingArg::PerTask => Grouping::PerTask,
            GroupingArg::PerProgram => Grouping::PerProgram,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a dataset directory and print its manifest.
    Ingest {
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute oracle slices for every task of a dataset.
    GroundTruth {
        dataset: PathBuf,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value = "include")]
        structural_lines: StructuralLines,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment matrix; resumes an interrupted output file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Stop after this many new records.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Aggregate a results file into accuracy tables.
    Score {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "lines")]
        acc_d: AccDGranularity,
        #[arg(long, value_enum, default_value = "per-task")]
        grouping: GroupingArg,
        /// Program sources, needed for edge-level Accuracy-D.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Re-run baseline tasks with the crafted prompt or reviewer feedback.
    Improve {
        #[arg(long)]
        strategy: ImproveStrategy,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        max_iterations: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the triage HTTP API (and the UI bundle if given).
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long, default_value = "labels.jsonl")]
        labels: PathBuf,
        #[arg(long, default_value = "iterations.jsonl")]
        iterations: PathBuf,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, default_value_t = 0)]
        run: u32,
    },
    /// Static backward slice of one file.
    SliceStatic {
        file: PathBuf,
        #[arg(long)]
        var: String,
        #[arg(long)]
        line: usize,
        #[arg(long, default_value = "include")]
        structural_lines: StructuralLines,
        /// Print the dependence graph in DOT instead of the slice.
        #[arg(long)]
        dump_pdg: bool,
    },
    /// Dynamic backward slice of one file, executed from `main`.
    SliceDynamic {
        file: PathBuf,
        #[arg(long)]
        line: usize,
        #[arg(long, default_value = "include")]
        structural_lines: StructuralLines,
        /// Print the execution trace as JSONL instead of the slice.
        #[arg(long)]
        dump_trace: bool,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn gateway_for(cfg: &ExperimentConfig) -> Gateway {
    Gateway::new(GatewayOptions { fixtures: cfg.fixtures.clone(), concurrency: cfg.concurrency, ..Default::default() })
}

fn program_id(file: &Path) -> String {
    file.file_stem().map_or_else(|| "program".into(), |s| s.to_string_lossy().into_owned())
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().cmd {
        Cmd::Ingest { dataset, out } => {
            let ing = ingest_dataset(&dataset)?;
            write_or_print(out.as_deref(), &to_json(&ing.manifest))?;
        }
        Cmd::GroundTruth { dataset, cache, structural_lines, out } => {
            let ing = ingest_dataset(&dataset)?;
            let mut c = match &cache {
                Some(p) => TruthCache::open(p)?,
                None => TruthCache::in_memory(),
            };
            let (truth, stats) = gen_ground_truth(&ing.tasks, &mut c, structural_lines);
            c.save()?;
            eprintln!("computed {} cached {} failed {}", stats.computed, stats.cache_hits, stats.failed);
            write_or_print(out.as_deref(), &to_json(&truth))?;
        }
        Cmd::Run { config, stop_after } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ing = ingest_dataset(&cfg.dataset)?;
            let mut cache = match &cfg.truth_cache {
                Some(p) => TruthCache::open(p)?,
                None => TruthCache::in_memory(),
            };
            let (truth, _) = gen_ground_truth(&ing.tasks, &mut cache, cfg.structural_lines);
            cache.save()?;
            let report = run_experiment(&cfg, &ing.tasks, &truth, &gateway_for(&cfg), RunOptions { stop_after }).await?;
            println!("{}", to_json(&report));
        }
        Cmd::Score { input, out, acc_d, grouping, dataset } => {
            let records = load_records(&input)?;
            let sources: Option<BTreeMap<String, String>> = match &dataset {
                Some(d) => Some(ingest_dataset(d)?.tasks.into_iter().map(|t| (t.program_id, t.program.text)).collect()),
                None => None,
            };
            if acc_d == AccDGranularity::Edges && sources.is_none() {
                bail!("--acc-d edges needs --dataset");
            }
            let report = score_records(&records, acc_d, grouping.into(), sources.as_ref())?;
            write_or_print(out.as_deref(), &to_json(&report))?;
        }
        Cmd::Improve { strategy, baseline, config, labels, max_iterations, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let tasks = ingest_dataset(&cfg.dataset)?.by_id();
            let records = load_records(&baseline)?;
            let store = match &labels {
                Some(p) => LabelStore::from_jsonl(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
                None => LabelStore::default(),
            };
            let gateway = gateway_for(&cfg);
            let inputs = ImproveInputs { baseline: &records, tasks: &tasks, models: &cfg.models, labels: &store, gateway: &gateway };
            let opts = ImproveOptions { strategy, max_iterations, concurrency: cfg.concurrency };
            let outcome = run_improvement(inputs, opts).await?;
            if let Some(p) = &out {
                // Answers and iteration logs go next to the summary.
                let mut a = Appender::open(&p.with_extension("records.jsonl"))?;
                for r in &outcome.records {
                    a.append(r)?;
                }
                let mut a = Appender::open(&p.with_extension("iterations.jsonl"))?;
                for r in &outcome.iterations {
                    a.append(r)?;
                }
            }
            write_or_print(out.as_deref(), &to_json(&outcome.rows))?;
        }
        Cmd::Serve { config, port, results, labels, iterations, ui_dir, model, strategy, run } => {
            let cfg = ExperimentConfig::load(&config)?;
            let gateway = gateway_for(&cfg);
            let opts = ServeOptions {
                dataset: cfg.dataset.clone(),
                results: results.unwrap_or_else(|| cfg.output.clone()),
                labels,
                iterations,
                models: cfg.models.clone(),
                selection: Selection { model, strategy, run },
                ui_dir: ui_dir.clone(),
            };
            let state = AppState::load(&opts, gateway)?;
            let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
            eprintln!("listening on http://{}", listener.local_addr()?);
            serve(listener, state, ui_dir).await?;
        }
        Cmd::SliceStatic { file, var, line, structural_lines, dump_pdg } => {
            let src = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let ast = parse_program(&src, &program_id(&file))?;
            let pdg = build_pdg(&ast)?;
            if dump_pdg {
                print!("{}", pdg.to_dot(&ast));
            } else {
                let slice = static_backward_slice(&ast, &pdg, &SlicingCriterion::new_static(var, line), structural_lines)?;
                println!("{}", render_output(&slice.lines));
            }
        }
        Cmd::SliceDynamic { file, line, structural_lines, dump_trace } => {
            let src = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let ast = parse_program(&src, &program_id(&file))?;
            let pdg = build_pdg(&ast)?;
            let trace = execute(&ast, &pdg)?;
            if dump_trace {
                print!("{}", trace.to_jsonl());
            } else {
                let slice = dynamic_backward_slice(&ast, &trace, line, structural_lines)?;
                println!("{}", render_output(&slice.lines));
            }
        }
    }
    Ok(())
}
