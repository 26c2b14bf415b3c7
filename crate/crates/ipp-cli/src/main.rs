//! Command-line harness: simulation, fitting, penalty selection, replication
//! studies and test-environment evaluation, with file-based inputs and
//! outputs. Every output embeds its resolved configuration and seed, and
//! reruns with the same configuration are byte-identical.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ipp::envdata::{
    load_csv, make_default_spec, save_csv, simulate_training, InterventionSpec, ScmSpec,
};
use ipp::estimator::{fit, FitConfig, FitPath};
use ipp::evaluate::{
    intervention_risk_table, replication_summary, risk_table_to_csv, ReplicationSummary,
};
use ipp::lambda_select::select_lambda;
use ipp::model::ModelParams;
use ipp::rng::derive_seed;
use ipp::scoring::ScoreKind;

const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_SEED: u64 = 17;
const DEFAULT_SAMPLE_SIZES: &str = "100,150,200,250,500,1000";

#[derive(Parser)]
#[command(
    name = "ipp",
    version,
    about = "Invariant probabilistic prediction: simulate, fit, replicate, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate training environments and write train.csv + spec.json.
    Simulate(SimulateArgs),
    /// Fit the penalty path on a CSV dataset and select the penalty.
    Fit(FitArgs),
    /// Run full simulate+fit replications and summarize estimation errors.
    Replicate(ReplicateArgs),
    /// Score a fitted path on fresh test environments under interventions.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Seed (falls back to $IPP_SEED, then 17).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all logical processors).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// JSON config file; explicit flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Covariate dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Observations per environment.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input CSV with header env,y,x1,...,xd.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Scoring rule: logs|crps|scrps|qs|pseudos|hyvs.
    #[arg(long)]
    score: Option<String>,
    /// Exponent for pseudos.
    #[arg(long)]
    pseudo_alpha: Option<f64>,
    /// Penalty grid: "start:step:end" or a comma list.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Test level for the penalty choice.
    #[arg(long)]
    alpha: Option<f64>,
    /// Parameter box "lo,hi".
    #[arg(long = "box", allow_hyphen_values = true)]
    box_bounds: Option<String>,
}

#[derive(Args)]
struct ReplicateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    d: Option<usize>,
    /// Comma list of per-environment sample sizes.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    score: Option<String>,
    #[arg(long)]
    pseudo_alpha: Option<f64>,
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "box", allow_hyphen_values = true)]
    box_bounds: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory holding fitpath.json and spec.json (from fit + simulate).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma list from {pooled,low-variance,high-variance,correlation,mean-shift}.
    #[arg(long)]
    interventions: Option<String>,
    /// Test observations per environment.
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    score: Option<String>,
    #[arg(long)]
    pseudo_alpha: Option<f64>,
}

/// Failures that should exit with the usage code rather than the runtime
/// code: bad flag values, malformed config, missing input files.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<ipp::Error> for CliError {
    fn from(e: ipp::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Replicate(args) => cmd_replicate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

// ---------------------------------------------------------------------------
// configuration plumbing

/// The optional JSON config file; flag values take precedence over it.
struct FileConfig(Value);

impl FileConfig {
    fn load(path: &Option<PathBuf>) -> CliResult<Self> {
        match path {
            None => Ok(FileConfig(Value::Null)),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| usage(format!("config {} is not valid JSON: {e}", p.display())))?;
                Ok(FileConfig(v))
            }
        }
    }

    fn u64(&self, key: &str) -> Option<u64> {
        self.0.get(key).and_then(Value::as_u64)
    }

    fn usize(&self, key: &str) -> Option<usize> {
        self.0.get(key).and_then(Value::as_u64).map(|v| v as usize)
    }

    fn f64(&self, key: &str) -> Option<f64> {
        self.0.get(key).and_then(Value::as_f64)
    }

    fn string(&self, key: &str) -> Option<String> {
        self.0.get(key).and_then(Value::as_str).map(str::to_string)
    }
}

fn resolve_seed(flag: Option<u64>, cfg: &FileConfig) -> u64 {
    flag.or_else(|| cfg.u64("seed"))
        .or_else(|| std::env::var("IPP_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(DEFAULT_SEED)
}

fn init_threads(flag: Option<usize>, cfg: &FileConfig) -> usize {
    let threads = flag
        .or_else(|| cfg.usize("threads"))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    // A second initialization in-process (e.g. from tests) is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    threads
}

fn parse_score(name: Option<String>, alpha: Option<f64>, cfg: &FileConfig) -> CliResult<ScoreKind> {
    let name = name.or_else(|| cfg.string("score")).unwrap_or_else(|| "logs".into());
    let alpha = alpha.or_else(|| cfg.f64("pseudo_alpha")).unwrap_or(2.0);
    let kind = match name.to_lowercase().as_str() {
        "logs" => ScoreKind::LogS,
        "crps" => ScoreKind::Crps,
        "scrps" => ScoreKind::Scrps,
        "qs" => ScoreKind::Qs,
        "pseudos" => ScoreKind::PseudoS { alpha },
        "hyvs" => ScoreKind::HyvS,
        other => return Err(usage(format!("unknown score '{other}'"))),
    };
    kind.validate().map_err(|e| usage(e.to_string()))?;
    Ok(kind)
}

fn parse_lambda_grid(text: Option<String>, cfg: &FileConfig) -> CliResult<Vec<f64>> {
    let text = match text.or_else(|| cfg.string("lambda_grid")) {
        None => return Ok(ipp::estimator::default_lambda_grid()),
        Some(t) => t,
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid: Vec<f64> = if parts.len() == 3 {
        let start: f64 = parts[0].parse().map_err(|_| usage("bad lambda grid start"))?;
        let step: f64 = parts[1].parse().map_err(|_| usage("bad lambda grid step"))?;
        let end: f64 = parts[2].parse().map_err(|_| usage("bad lambda grid end"))?;
        if step <= 0.0 || end < start {
            return Err(usage("lambda grid must satisfy step > 0 and end >= start"));
        }
        let count = ((end - start) / step).round() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| usage(format!("bad lambda grid '{text}'")))?
    };
    if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("lambda grid must be strictly increasing and start at >= 0"));
    }
    Ok(grid)
}

fn parse_box(text: Option<String>, cfg: &FileConfig) -> CliResult<(f64, f64)> {
    let text = match text.or_else(|| cfg.string("box")) {
        None => return Ok(ipp::estimator::DEFAULT_BOX),
        Some(t) => t,
    };
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(usage(format!("box must be 'lo,hi', got '{text}'")));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| usage("bad box lower bound"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| usage("bad box upper bound"))?;
    if lo > hi {
        return Err(usage(format!("box lower bound {lo} exceeds upper bound {hi}")));
    }
    Ok((lo, hi))
}

fn parse_alpha(flag: Option<f64>, cfg: &FileConfig) -> CliResult<f64> {
    let alpha = flag.or_else(|| cfg.f64("alpha")).unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(alpha)
}

fn grid_text(grid: &[f64]) -> String {
    grid.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn ensure_output_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(e.into()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn metadata_lines(config: &Value) -> Vec<String> {
    vec![
        format!("version={VERSION}"),
        format!("config={}", serde_json::to_string(config).unwrap()),
    ]
}

fn require_input(path: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let path = path.clone().ok_or_else(|| usage(format!("--input ({what}) is required")))?;
    if !path.exists() {
        return Err(usage(format!("input {} does not exist", path.display())));
    }
    Ok(path)
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let cfg = FileConfig::load(&args.common.config)?;
    let d = args.d.or_else(|| cfg.usize("d")).unwrap_or(5);
    let n = args.n.or_else(|| cfg.usize("n")).unwrap_or(1000);
    if d == 0 {
        return Err(usage("--d must be at least 1"));
    }
    if n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    let seed = resolve_seed(args.common.seed, &cfg);
    ensure_output_dir(&args.common.output_dir)?;

    let resolved = json!({"command": "simulate", "d": d, "n": n, "seed": seed});
    let spec = make_default_spec(d, seed)?;
    let data = simulate_training(&spec, n)?;

    save_csv(
        args.common.output_dir.join("train.csv"),
        &data,
        &metadata_lines(&resolved),
    )?;
    println!("wrote {}", args.common.output_dir.join("train.csv").display());

    let spec_doc = json!({
        "metadata": {"version": VERSION, "seed": seed, "config": resolved},
        "spec": spec.to_json(),
    });
    write_json(&args.common.output_dir.join("spec.json"), &spec_doc)?;
    println!(
        "simulated {} environments x {} observations (d = {})",
        data.n_env(),
        n,
        d
    );
    Ok(())
}

fn build_fit_config(
    kind: ScoreKind,
    n_env: usize,
    grid: Vec<f64>,
    box_bounds: (f64, f64),
    seed: u64,
) -> FitConfig {
    let mut fit_cfg = FitConfig::new(kind, n_env);
    fit_cfg.lambda_grid = grid;
    fit_cfg.box_bounds = box_bounds;
    fit_cfg.seed = seed;
    fit_cfg
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let cfg = FileConfig::load(&args.common.config)?;
    let input = require_input(
        &args.input.clone().or_else(|| cfg.string("input").map(PathBuf::from)),
        "training CSV",
    )?;
    let kind = parse_score(args.score, args.pseudo_alpha, &cfg)?;
    let grid = parse_lambda_grid(args.lambda_grid, &cfg)?;
    let box_bounds = parse_box(args.box_bounds, &cfg)?;
    let alpha = parse_alpha(args.alpha, &cfg)?;
    let seed = resolve_seed(args.common.seed, &cfg);
    let threads = init_threads(args.common.threads, &cfg);
    ensure_output_dir(&args.common.output_dir)?;

    let resolved = json!({
        "command": "fit",
        "input": input.display().to_string(),
        "score": kind.to_string(),
        "lambda_grid": grid_text(&grid),
        "alpha": alpha,
        "box": [box_bounds.0, box_bounds.1],
        "seed": seed,
        "threads": threads,
    });

    let data = load_csv(&input)?;
    let fit_cfg = build_fit_config(kind, data.n_env(), grid, box_bounds, seed);
    let path = fit(&data, &fit_cfg)?;
    let choice = select_lambda(&path, &data, kind, alpha)?;

    let metadata = json!({"version": VERSION, "seed": seed, "config": resolved});
    write_json(
        &args.common.output_dir.join("fitpath.json"),
        &json!({"metadata": metadata, "path": path.to_json()}),
    )?;
    write_json(
        &args.common.output_dir.join("lambda_choice.json"),
        &json!({"metadata": metadata, "choice": choice}),
    )?;

    let mut table = String::new();
    for line in metadata_lines(&resolved) {
        table.push_str(&format!("# {line}\n"));
    }
    table.push_str("lambda,p_value\n");
    for (lambda, p) in &choice.p_values {
        table.push_str(&format!("{lambda},{p}\n"));
    }
    write_text(&args.common.output_dir.join("lambda_pvalues.csv"), &table)?;

    println!(
        "selected lambda = {}{} (alpha = {alpha})",
        choice.lambda_hat,
        if choice.fallback_used { " [fallback: all rejected]" } else { "" }
    );
    // Usually the p-value grows with the penalty; note departures, they are
    // informative about optimizer trouble or weak identification.
    for w in choice.p_values.windows(2) {
        if w[1].1 < w[0].1 {
            println!(
                "note: p-value decreased from {:.4} to {:.4} between lambda = {} and {}",
                w[0].1, w[1].1, w[0].0, w[1].0
            );
        }
    }
    Ok(())
}

fn parse_sample_sizes(text: Option<String>, cfg: &FileConfig) -> CliResult<Vec<usize>> {
    let text = text
        .or_else(|| cfg.string("n"))
        .unwrap_or_else(|| DEFAULT_SAMPLE_SIZES.into());
    let sizes: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad sample size list '{text}'")))?;
    if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
        return Err(usage("sample sizes must all be at least 2"));
    }
    Ok(sizes)
}

fn cmd_replicate(args: ReplicateArgs) -> CliResult<()> {
    use rayon::prelude::*;

    let cfg = FileConfig::load(&args.common.config)?;
    let d = args.d.or_else(|| cfg.usize("d")).unwrap_or(5);
    if d == 0 {
        return Err(usage("--d must be at least 1"));
    }
    let sizes = parse_sample_sizes(args.n, &cfg)?;
    let replications = args.replications.or_else(|| cfg.usize("replications")).unwrap_or(50);
    if replications < 2 {
        return Err(usage("--replications must be at least 2"));
    }
    let kind = parse_score(args.score, args.pseudo_alpha, &cfg)?;
    let grid = parse_lambda_grid(args.lambda_grid, &cfg)?;
    let box_bounds = parse_box(args.box_bounds, &cfg)?;
    let alpha = parse_alpha(args.alpha, &cfg)?;
    let seed = resolve_seed(args.common.seed, &cfg);
    let threads = init_threads(args.common.threads, &cfg);
    ensure_output_dir(&args.common.output_dir)?;

    let resolved = json!({
        "command": "replicate",
        "d": d,
        "n": sizes,
        "replications": replications,
        "score": kind.to_string(),
        "lambda_grid": grid_text(&grid),
        "alpha": alpha,
        "box": [box_bounds.0, box_bounds.1],
        "seed": seed,
        "threads": threads,
    });

    // One fixed generating model; replications redraw the noise.
    let spec = make_default_spec(d, seed)?;
    let truth = ModelParams::from_coefficients(spec.beta.clone(), spec.gamma.clone())
        .map_err(CliError::from)?;

    let mut out = String::new();
    for line in metadata_lines(&resolved) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("n,lambda,metric,value\n");

    for &n in &sizes {
        let results: Vec<(FitPath, f64)> = (0..replications as u64)
            .into_par_iter()
            .map(|r| {
                let data = simulate_training(
                    &spec.with_seed(derive_seed(seed, &[0xE0, n as u64, r])),
                    n,
                )
                .expect("simulation from a validated model");
                let fit_cfg = build_fit_config(
                    kind,
                    data.n_env(),
                    grid.clone(),
                    box_bounds,
                    derive_seed(seed, &[0xE1, n as u64, r]),
                );
                let path = fit(&data, &fit_cfg).expect("fit");
                let choice = select_lambda(&path, &data, kind, alpha).expect("selection");
                (path, choice.lambda_hat)
            })
            .collect();

        let per_lambda: Vec<(f64, Vec<ModelParams>)> = grid
            .iter()
            .enumerate()
            .map(|(i, &lambda)| {
                (
                    lambda,
                    results.iter().map(|(p, _)| p.entries[i].theta_hat.clone()).collect(),
                )
            })
            .collect();
        let selected: Vec<f64> = results.iter().map(|(_, l)| *l).collect();
        let summary: ReplicationSummary = replication_summary(&per_lambda, &truth, &selected)?;

        for ((lambda, bv), (_, count)) in
            summary.rows.iter().zip(&summary.lambda_selection_counts)
        {
            let mut push = |metric: &str, value: f64| {
                out.push_str(&format!("{n},{lambda},{metric},{value}\n"));
            };
            push("mse_beta", bv.mse_beta);
            push("sq_bias_beta", bv.sq_bias_beta);
            push("variance_beta", bv.variance_beta);
            push("mse_gamma", bv.mse_gamma);
            push("sq_bias_gamma", bv.sq_bias_gamma);
            push("variance_gamma", bv.variance_gamma);
            push("selection_count", *count as f64);
        }
        println!("replicated n = {n}: {replications} fits done");
    }

    write_text(&args.common.output_dir.join("replication_summary.csv"), &out)?;
    Ok(())
}

fn load_spec_doc(dir: &Path) -> CliResult<ScmSpec> {
    let path = dir.join("spec.json");
    if !path.exists() {
        return Err(usage(format!("input {} does not exist", path.display())));
    }
    let text = std::fs::read_to_string(&path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Runtime(e.into()))?;
    let spec_value = v.get("spec").cloned().unwrap_or(v);
    Ok(ScmSpec::from_json(&spec_value)?)
}

fn load_fitpath_doc(dir: &Path) -> CliResult<FitPath> {
    let path = dir.join("fitpath.json");
    if !path.exists() {
        return Err(usage(format!("input {} does not exist", path.display())));
    }
    let text = std::fs::read_to_string(&path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Runtime(e.into()))?;
    let path_value = v.get("path").cloned().unwrap_or(v);
    Ok(FitPath::from_json(&path_value)?)
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    let cfg = FileConfig::load(&args.common.config)?;
    let input = require_input(
        &args.input.clone().or_else(|| cfg.string("input").map(PathBuf::from)),
        "directory with fitpath.json and spec.json",
    )?;
    let kind = parse_score(args.score, args.pseudo_alpha, &cfg)?;
    let n_test = args.n_test.or_else(|| cfg.usize("n_test")).unwrap_or(10_000);
    if n_test < 2 {
        return Err(usage("--n-test must be at least 2"));
    }
    let seed = resolve_seed(args.common.seed, &cfg);
    init_threads(args.common.threads, &cfg);
    let names = args
        .interventions
        .or_else(|| cfg.string("interventions"))
        .unwrap_or_else(|| "pooled,low-variance,high-variance,correlation,mean-shift".into());
    ensure_output_dir(&args.common.output_dir)?;

    let known = ["pooled", "low-variance", "high-variance", "correlation", "mean-shift"];
    let requested: Vec<&str> = names.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if let Some(bad) = requested.iter().find(|n| !known.contains(*n)) {
        return Err(usage(format!("unknown intervention '{bad}'")));
    }

    let spec = load_spec_doc(&input)?;
    let path = load_fitpath_doc(&input)?;

    let mut interventions = Vec::new();
    for name in requested {
        match name {
            // the pooled column is always produced by the table
            "pooled" => {}
            "low-variance" => {
                interventions.push(InterventionSpec::VarianceScale { c: 1.0 / 3.0 })
            }
            "high-variance" => interventions.push(InterventionSpec::VarianceScale { c: 1.5 }),
            "correlation" => interventions.push(InterventionSpec::CorrelationPerturb {
                width: 0.75,
                seed: derive_seed(seed, &[0xE2]),
            }),
            "mean-shift" => interventions.push(InterventionSpec::MeanShiftOrthogonal {
                range: 5.0,
                gamma_ref: spec.gamma.clone(),
                seed: derive_seed(seed, &[0xE3]),
            }),
            _ => unreachable!(),
        }
    }

    let resolved = json!({
        "command": "evaluate",
        "input": input.display().to_string(),
        "score": kind.to_string(),
        "interventions": names,
        "n_test": n_test,
        "seed": seed,
    });

    let rows = intervention_risk_table(&path, &spec.with_seed(seed), &interventions, n_test, kind)?;
    let mut out = String::new();
    for line in metadata_lines(&resolved) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(&risk_table_to_csv(&rows));
    write_text(&args.common.output_dir.join("risk_table.csv"), &out)?;
    println!(
        "evaluated {} path points on {} test environments (n_test = {n_test})",
        path.entries.len(),
        interventions.len() + 1
    );
    Ok(())
}
