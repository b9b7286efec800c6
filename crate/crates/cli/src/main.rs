//! `tsre`: sample ensemble members, canonicalize them, solve for ground
//! states, run ensemble sweeps, and turn record streams into plot-ready
//! tables.
//!
//! Exit codes: 0 success, 2 config error, 3 degeneracy warning,
//! 4 unsupported topology, 5 solver failure.

mod analyses;
mod manifest;
mod presets;

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use tsre_core::ensemble::TsreSample;
use tsre_core::graph::GraphConfig;
use tsre_core::harness::{self, io as record_io, EnsembleRecord, SweepConfig};
use tsre_core::{gauge, TsreError};

const EXIT_CONFIG: i32 = 2;
const EXIT_DEGENERACY: i32 = 3;
const EXIT_TOPOLOGY: i32 = 4;
const EXIT_SOLVER: i32 = 5;

/// Error carrying the process exit code it should map to.
#[derive(Debug)]
pub struct CodedError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CodedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CodedError {}

impl CodedError {
    pub fn config(message: String) -> Self {
        Self {
            code: EXIT_CONFIG,
            message,
        }
    }

    pub fn from_core(e: TsreError) -> Self {
        let code = match &e {
            TsreError::UnsupportedTopology(_) | TsreError::BoundaryMismatch(_) => EXIT_TOPOLOGY,
            TsreError::Convergence { .. } | TsreError::ExcitedStateFailure { .. } => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tsre",
    about = "Two-spin random ensemble laboratory",
    version
)]
struct Cli {
    /// Worker pool size (default: TSRE_WORKERS env var, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, default_value = "tsre-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Draw ensemble members for a graph config and write them as JSON.
    Sample {
        /// Graph config JSON file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of realizations to draw.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Gauge-fix a sample file to its canonical form.
    Canonicalize {
        /// Sample JSON file (as written by `sample`).
        #[arg(long)]
        sample: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Compute the two lowest eigenpairs of one sample.
    Solve {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 800)]
        max_iter: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run an ensemble sweep from a config file or a named preset.
    Sweep {
        /// Sweep config JSON file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Named preset (fig1-desk, fig2-desk, fig3-desk, fig4-desk,
        /// fig56-desk).
        #[arg(long)]
        preset: Option<String>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Resume an interrupted run from its manifest.
        #[arg(long, default_value_t = false)]
        resume: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Analyze a record stream into tables and fit documents.
    Analyze {
        /// Records file: JSONL (full diagnostics) or CSV.
        #[arg(long)]
        records: PathBuf,
        /// Analysis spec JSON file.
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
}

fn main() {
    let cli = Cli::parse();
    let workers = cli.workers.or_else(|| {
        std::env::var("TSRE_WORKERS")
            .ok()
            .and_then(|w| w.parse().ok())
    });
    if let Some(w) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
        {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            err.downcast_ref::<CodedError>()
                .map(|c| c.code)
                .unwrap_or(EXIT_CONFIG)
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Sample {
            config,
            seed,
            count,
            out,
        } => cmd_sample(&config, seed, count, &out.out),
        Command::Canonicalize { sample, out } => cmd_canonicalize(&sample, &out.out),
        Command::Solve {
            sample,
            tol,
            max_iter,
            out,
        } => cmd_solve(&sample, tol, max_iter, &out.out),
        Command::Sweep {
            config,
            preset,
            seed,
            resume,
            out,
        } => cmd_sweep(config.as_deref(), preset.as_deref(), seed, resume, &out.out),
        Command::Analyze { records, spec, out } => cmd_analyze(&records, &spec, &out.out),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CodedError::config(format!("reading {what} {path:?}: {e}")))?;
    let value = serde_json::from_str(&text)
        .map_err(|e| CodedError::config(format!("parsing {what} {path:?}: {e}")))?;
    Ok(value)
}

fn cmd_sample(config: &Path, seed: u64, count: u64, out: &Path) -> anyhow::Result<i32> {
    let cfg: GraphConfig = read_json(config, "graph config")?;
    let graph = cfg.build().map_err(CodedError::from_core)?;
    std::fs::create_dir_all(out)?;
    for r in 0..count {
        let s = tsre_core::ensemble::sample(&graph, seed, r);
        let doc = s.to_document(&cfg);
        let path = out.join(format!("sample-r{r:04}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&doc)?)
            .with_context(|| format!("writing {path:?}"))?;
        println!("{}", path.display());
    }
    Ok(0)
}

fn cmd_canonicalize(sample_path: &Path, out: &Path) -> anyhow::Result<i32> {
    let doc: tsre_core::ensemble::SampleDocument = read_json(sample_path, "sample")?;
    let sample = TsreSample::from_document(&doc).map_err(CodedError::from_core)?;
    let form = gauge::canonicalize(&sample).map_err(CodedError::from_core)?;
    std::fs::create_dir_all(out)?;
    let path = out.join(format!(
        "canonical-{}.json",
        sample_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sample".into())
    ));
    std::fs::write(&path, serde_json::to_string_pretty(&form.to_json(&doc.graph))?)?;
    println!("{}", path.display());
    println!(
        "max asymmetry {:.3e}, min singular separation {:.3e}",
        form.max_asymmetry, form.min_singular_separation
    );
    if form.degenerate {
        eprintln!("warning: degenerate singular values; canonical form is not unique");
        return Ok(EXIT_DEGENERACY);
    }
    Ok(0)
}

fn cmd_solve(sample_path: &Path, tol: f64, max_iter: usize, out: &Path) -> anyhow::Result<i32> {
    let doc: tsre_core::ensemble::SampleDocument = read_json(sample_path, "sample")?;
    let sample = TsreSample::from_document(&doc).map_err(CodedError::from_core)?;
    let h = tsre_core::hamiltonian::HamiltonianOperator::new(&sample, Default::default());
    let opts = tsre_core::eigensolver::SolverOptions {
        tol,
        max_iter,
        start_key: (sample.seed, sample.realization_index),
        ..Default::default()
    };
    let sol = tsre_core::eigensolver::lowest_two(&h, &opts).map_err(CodedError::from_core)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("solution.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&serde_json::json!({
            "e0": sol.e0,
            "e1": sol.e1,
            "gap": sol.gap,
            "iterations": sol.iterations,
            "residual_norms": [sol.residual_norms.0, sol.residual_norms.1],
            "degenerate_flag": sol.degenerate_flag,
            "range_estimate": sol.range_estimate,
        }))?,
    )?;
    println!("{}", path.display());
    Ok(0)
}

fn cmd_sweep(
    config: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
    resume: bool,
    out: &Path,
) -> anyhow::Result<i32> {
    let mut cfg: SweepConfig = match (config, preset) {
        (Some(path), None) => read_json(path, "sweep config")?,
        (None, Some(name)) => presets::preset(name, seed.unwrap_or(0)).ok_or_else(|| {
            CodedError::config(format!(
                "unknown preset '{name}' (available: {})",
                presets::PRESET_NAMES.join(", ")
            ))
        })?,
        _ => {
            return Err(CodedError::config(
                "sweep needs exactly one of --config or --preset".into(),
            )
            .into())
        }
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let warnings = cfg.validate().map_err(CodedError::from_core)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    std::fs::create_dir_all(out.join("parts"))?;
    let mut man = if resume && manifest::RunManifest::path(out).exists() {
        let loaded = manifest::RunManifest::load(out)?;
        let expect = serde_json::to_string(&loaded.config)?;
        let got = serde_json::to_string(&cfg)?;
        if expect != got {
            return Err(CodedError::config(
                "manifest config does not match the requested sweep; refusing to resume".into(),
            )
            .into());
        }
        loaded
    } else {
        manifest::RunManifest::new(&cfg, out, warnings.clone())
    };
    man.save(out)?;

    let mut all_records: Vec<EnsembleRecord> = Vec::new();
    for gi in 0..man.groups.len() {
        let (n, lambda, status, part_file) = {
            let g = &man.groups[gi];
            (g.n, g.lambda, g.status, g.part_file.clone())
        };
        let part_path = out.join(&part_file);
        if resume && status == manifest::GroupStatus::Done && part_path.exists() {
            let file = std::fs::File::open(&part_path)?;
            all_records.extend(record_io::read_jsonl(file).map_err(CodedError::from_core)?);
            continue;
        }
        let cell = SweepConfig {
            n_list: vec![n],
            lambda_list: vec![lambda],
            ..cfg.clone()
        };
        let outcome = harness::run_sweep(&cell).map_err(CodedError::from_core)?;
        let file = std::fs::File::create(&part_path)?;
        record_io::write_jsonl(&outcome.records, file).map_err(CodedError::from_core)?;
        {
            let g = &mut man.groups[gi];
            g.status = manifest::GroupStatus::Done;
            g.n_records = outcome.records.len();
            g.n_failures = outcome.n_failures;
        }
        man.save(out)?;
        eprintln!(
            "group N={n} lambda={lambda}: {} records, {} failures",
            outcome.records.len(),
            outcome.n_failures
        );
        all_records.extend(outcome.records);
    }

    all_records.sort_by(|a, b| {
        (a.n, a.lambda.to_bits(), a.realization).cmp(&(b.n, b.lambda.to_bits(), b.realization))
    });
    let csv = std::fs::File::create(out.join("records.csv"))?;
    record_io::write_csv(&all_records, csv).map_err(CodedError::from_core)?;
    let jsonl = std::fs::File::create(out.join("records.jsonl"))?;
    record_io::write_jsonl(&all_records, jsonl).map_err(CodedError::from_core)?;

    man.finished_at = Some(chrono::Utc::now().to_rfc3339());
    man.save(out)?;

    let failures = all_records.iter().filter(|r| !r.is_success()).count();
    println!(
        "{} records ({} failures) -> {}",
        all_records.len(),
        failures,
        out.display()
    );
    if failures > 0 {
        eprintln!("warning: {failures} failed realizations are flagged in the records");
    }
    Ok(0)
}

fn cmd_analyze(records_path: &Path, spec_path: &Path, out: &Path) -> anyhow::Result<i32> {
    let spec: analyses::AnalysisSpec = read_json(spec_path, "analysis spec")?;
    let file = std::fs::File::open(records_path)
        .map_err(|e| CodedError::config(format!("opening records {records_path:?}: {e}")))?;
    let records = match records_path.extension().and_then(|e| e.to_str()) {
        Some("csv") => record_io::read_csv(file).map_err(CodedError::from_core)?,
        _ => record_io::read_jsonl(file).map_err(CodedError::from_core)?,
    };
    if records.is_empty() {
        return Err(CodedError::config("record stream is empty".into()).into());
    }
    let outputs = analyses::run_analysis(&spec, &records, out)?;
    for path in outputs {
        println!("{path}");
    }
    Ok(0)
}
