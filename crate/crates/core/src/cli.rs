//! The `cospace` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or
//! validation error. Failures print one line to stderr:
//! `error: <kind>: <reason>`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::eval::{
    compute_metrics, cross_validate, fit_model, run_experiment, ConfusionMatrix, CvGrid, ExperimentConfig, Method,
    MethodParams, PipelineOptions,
};
use crate::io::{
    load_dataset, load_model, read_json, read_labels, save_model, write_json, write_labels, write_matrix,
    DatasetManifest, MatrixFormat,
};
use crate::synth::{generate, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cospace", version, about = "Cross-modality shared-subspace learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a method on a dataset and write the model and a run log.
    Fit(FitArgs),
    /// Classify one modality of a dataset with a fitted model.
    Eval(EvalArgs),
    /// Grid search by stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Repeated split / fit / test experiment with mean and spread.
    Experiment(ExperimentArgs),
    /// Generate a synthetic paired-modality dataset.
    Synth(SynthArgs),
    /// Recompute metrics from predicted and true label files.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
}

impl HyperArgs {
    fn resolve(&self) -> Result<(Method, MethodParams), Error> {
        let method: Method = self.method.parse()?;
        let d = MethodParams::default();
        let params = MethodParams {
            dim: self.dim.unwrap_or(d.dim),
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            k: self.k.unwrap_or(d.k),
            sigma: self.sigma.unwrap_or(d.sigma),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            zeta: self.zeta.unwrap_or(d.zeta),
            admm: d.admm,
        };
        Ok((method, params))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Run log; defaults to `<out>.log.json`.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub modality: u8,
    /// Report file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional single-column file of predicted labels in sample order.
    #[arg(long = "labels-out")]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// JSON grid; missing keys take the default grid.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Best-parameter report.
    #[arg(long)]
    pub out: PathBuf,
    /// Fold table (CSV); defaults to `<out>.folds.csv`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 10)]
    pub replications: usize,
    /// Training samples per class in each replication.
    #[arg(long = "per-class", default_value_t = 200)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub modality: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "latent-dim", default_value_t = 5)]
    pub latent_dim: usize,
    #[arg(long, default_value_t = 12)]
    pub d1: usize,
    #[arg(long, default_value_t = 9)]
    pub d2: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Samples generated per class.
    #[arg(long = "per-class", default_value_t = 300)]
    pub per_class: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise2: f64,
    /// `binary` (CMX1) or `text` (CSV).
    #[arg(long, default_value = "binary")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Number of classes; defaults to one more than the largest label seen.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn line(&self) -> String {
        format!("error: {}: {}", self.kind, self.message.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidParameter { .. } => (EXIT_USAGE, "invalid-parameter"),
            Error::DimensionMismatch { .. } => (EXIT_USAGE, "dimension-mismatch"),
            Error::SampleCountMismatch { .. } => (EXIT_USAGE, "sample-count-mismatch"),
            Error::LabelOutOfRange { .. } => (EXIT_USAGE, "label-out-of-range"),
            Error::EmptyClass { .. } => (EXIT_USAGE, "empty-class"),
            Error::NonFinite { .. } => (EXIT_USAGE, "non-finite-input"),
            Error::Format(_) => (EXIT_USAGE, "format"),
            Error::NotSymmetric(_) => (EXIT_RUNTIME, "not-symmetric"),
            Error::NonFiniteTerm(_) => (EXIT_RUNTIME, "non-finite"),
            Error::Singular(_) => (EXIT_RUNTIME, "singular"),
            Error::Degenerate(_) => (EXIT_RUNTIME, "degenerate"),
            Error::Io(_) => (EXIT_RUNTIME, "io"),
        };
        CliError {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Serialize)]
struct FitRunLog<'a> {
    method: Method,
    params: &'a MethodParams,
    dataset: &'a DatasetManifest,
    /// Objective value after each iteration, starting with the initial point.
    history: Vec<f64>,
    converged: Option<bool>,
    iterations_used: Option<usize>,
    orthogonality_error: Option<f64>,
    fit_log: Option<&'a crate::solver::FitLog>,
    training_oa_modality2: f64,
}

fn cmd_fit(args: &FitArgs) -> CliResult<String> {
    let (method, params) = args.hyper.resolve()?;
    let (manifest, data) = load_dataset(&args.manifest)?;
    let model = fit_model(&data, method, &params, &PipelineOptions::default())?;
    save_model(&args.out, &model)?;

    let (train_report, _) = model.evaluate(2, &data.x2, data.labels.labels())?;
    let cs = model.projection.cospace();
    let log = FitRunLog {
        method,
        params: &params,
        dataset: &manifest,
        history: cs.map(|m| m.history.clone()).unwrap_or_default(),
        converged: cs.map(|m| m.converged),
        iterations_used: cs.map(|m| m.iterations_used),
        orthogonality_error: cs.map(|m| m.orthogonality_error()),
        fit_log: model.fit_log.as_ref(),
        training_oa_modality2: train_report.oa,
    };
    let log_path = args.log.clone().unwrap_or_else(|| suffixed(&args.out, ".log.json"));
    write_json(&log_path, &log)?;
    let mut msg = format!("fitted {method} -> {}", args.out.display());
    if let Some(m) = cs {
        msg += &format!(
            " (iterations {}, converged {}, final objective {:.6e})",
            m.iterations_used,
            m.converged,
            m.history.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(msg)
}

fn cmd_eval(args: &EvalArgs) -> CliResult<String> {
    if args.modality != 1 && args.modality != 2 {
        return Err(Error::param("modality", format!("must be 1 or 2, got {}", args.modality)).into());
    }
    let model = load_model(&args.model)?;
    let (_, data) = load_dataset(&args.manifest)?;
    let x = data.modality(args.modality)?;
    let (report, pred) = model.evaluate(args.modality, x, data.labels.labels())?;
    write_json(&args.out, &report)?;
    if let Some(p) = &args.labels_out {
        write_labels(p, &pred)?;
    }
    Ok(format!(
        "modality {}: OA {:.4} AA {:.4} kappa {:.4}",
        args.modality, report.oa, report.aa, report.kappa
    ))
}

#[derive(Debug, Serialize)]
struct CvReport<'a> {
    method: Method,
    seed: u64,
    grid: &'a CvGrid,
    best: MethodParams,
    best_mean_oa: f64,
    points_evaluated: usize,
    points_skipped: usize,
}

fn load_grid(path: Option<&Path>) -> CliResult<CvGrid> {
    let Some(path) = path else {
        return Ok(CvGrid::default());
    };
    let value: serde_json::Value = read_json(path)?;
    let mut merged = serde_json::to_value(CvGrid::default()).map_err(Error::from)?;
    let serde_json::Value::Object(overrides) = value else {
        return Err(Error::Format(format!("{}: grid must be a JSON object", path.display())).into());
    };
    let known = merged.as_object().map(|o| o.keys().cloned().collect::<Vec<_>>()).unwrap_or_default();
    for (k, v) in overrides {
        if !known.contains(&k) {
            return Err(Error::Format(format!("{}: unknown grid key {k:?}", path.display())).into());
        }
        merged[&k] = v;
    }
    serde_json::from_value(merged)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())).into())
}

fn cmd_cv(args: &CvArgs) -> CliResult<String> {
    let (method, base) = args.hyper.resolve()?;
    let grid = load_grid(args.grid.as_deref())?;
    let (_, data) = load_dataset(&args.manifest)?;
    let out = cross_validate(&data, method, &grid, &base, &PipelineOptions::default(), args.seed)?;
    let skipped = out.table.iter().filter(|r| r.mean_oa.is_none()).count();
    write_json(
        &args.out,
        &CvReport {
            method,
            seed: args.seed,
            grid: &grid,
            best: out.best,
            best_mean_oa: out.best_mean_oa,
            points_evaluated: out.table.len() - skipped,
            points_skipped: skipped,
        },
    )?;

    let mut csv = String::from("dim,alpha,beta,k,sigma,mean_oa");
    for f in 0..out.folds.len() {
        csv += &format!(",fold{f}");
    }
    csv.push('\n');
    for row in &out.table {
        let p = &row.params;
        csv += &format!("{},{:?},{:?},{},{:?},", p.dim, p.alpha, p.beta, p.k, p.sigma);
        if let Some(m) = row.mean_oa {
            csv += &format!("{m:?}");
        }
        for s in &row.fold_scores {
            csv += &format!(",{s:?}");
        }
        csv.push('\n');
    }
    let table = args.table.clone().unwrap_or_else(|| suffixed(&args.out, ".folds.csv"));
    fs::write(&table, csv).map_err(|e| Error::Io(format!("{}: {e}", table.display())))?;
    Ok(format!(
        "best {method}: dim {} alpha {} beta {} k {} sigma {} (mean OA {:.4})",
        out.best.dim, out.best.alpha, out.best.beta, out.best.k, out.best.sigma, out.best_mean_oa
    ))
}

fn cmd_experiment(args: &ExperimentArgs) -> CliResult<String> {
    let (method, params) = args.hyper.resolve()?;
    if args.modality != 1 && args.modality != 2 {
        return Err(Error::param("modality", format!("must be 1 or 2, got {}", args.modality)).into());
    }
    if args.replications == 0 {
        return Err(Error::param("replications", "must be at least 1").into());
    }
    let (_, data) = load_dataset(&args.manifest)?;
    let config = ExperimentConfig {
        replications: args.replications,
        per_class: args.per_class,
        seed: args.seed,
        test_modality: args.modality,
    };
    let out = run_experiment(&data, method, &params, &PipelineOptions::default(), &config)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&args.out, &out)?;
    let spread = out.aggregate.replication.as_ref();
    Ok(format!(
        "{method}: OA {:.4} ± {:.4} over {} replications",
        out.aggregate.oa,
        spread.map_or(0.0, |r| r.oa.std),
        args.replications
    ))
}

fn cmd_synth(args: &SynthArgs) -> CliResult<String> {
    let format: MatrixFormat = args.format.parse()?;
    let spec = SynthSpec {
        latent_dim: args.latent_dim,
        d1: args.d1,
        d2: args.d2,
        num_classes: args.classes,
        per_class: args.per_class,
        separation: args.separation,
        noise1: args.noise1,
        noise2: args.noise2,
        seed: args.seed,
    };
    let ds = generate(&spec)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io(format!("{}: {e}", args.out.display())))?;
    let ext = format.extension();
    let x1 = PathBuf::from(format!("x1.{ext}"));
    let x2 = PathBuf::from(format!("x2.{ext}"));
    let labels = PathBuf::from("labels.txt");
    write_matrix(&args.out.join(&x1), ds.x1.data(), format)?;
    write_matrix(&args.out.join(&x2), ds.x2.data(), format)?;
    write_matrix(&args.out.join(format!("latent.{ext}")), &ds.latent, format)?;
    write_labels(&args.out.join(&labels), ds.labels.labels())?;
    let manifest = DatasetManifest {
        name: Some(format!("synth-seed{}", args.seed)),
        notes: Some(serde_json::to_string(&spec).map_err(Error::from)?),
        x1,
        x2,
        labels,
        d1: spec.d1,
        d2: spec.d2,
        n: spec.num_classes * spec.per_class,
        num_classes: spec.num_classes,
    };
    let path = args.out.join("manifest.json");
    manifest.write(&path)?;
    Ok(format!("wrote {}", path.display()))
}

fn cmd_metrics(args: &MetricsArgs) -> CliResult<String> {
    let pred = read_labels(&args.predictions)?;
    let truth = read_labels(&args.truth)?;
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction count vs truth count",
            expected: truth.len(),
            got: pred.len(),
        }
        .into());
    }
    let c = match args.classes {
        Some(c) => c,
        None => pred.iter().chain(&truth).max().map_or(0, |m| m + 1),
    };
    let cm = ConfusionMatrix::from_predictions(&truth, &pred, c)?;
    let report = compute_metrics(&cm)?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    } else {
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    }
    Ok(format!("OA {:.4} AA {:.4} kappa {:.4}", report.oa, report.aa, report.kappa))
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs a parsed command; returns the status line for stdout.
pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return EXIT_USAGE;
        }
    };
    match execute(&cli) {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.code
        }
    }
}

