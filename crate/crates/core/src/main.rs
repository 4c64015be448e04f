//! Command-line entry point: simulate | fit | sweep | compare-xy.
//!
//! Every run resolves its configuration (config file values overridden by
//! flags), writes the resolved form as `manifest.json` beside its outputs,
//! and is reproducible from that manifest:
//! `catebench sweep --config out/manifest.json` regenerates the records CSV
//! byte-for-byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use catebench::data::ExperimentData;
use catebench::dgp::{DgpKind, DgpSpec, MnistSource, PixelFeatures};
use catebench::error::{Error, Result};
use catebench::harness::{
    compare_xy, fit_method_model, run_sweep, summarize, write_errors_csv, write_gnuplot_script,
    write_records_csv, write_summary_text, write_timings_csv, write_xy_csv, CompareXyPlan,
    MethodSpec, SweepPlan,
};

#[derive(Parser)]
#[command(
    name = "catebench",
    version,
    about = "CATE estimation workbench: neural meta-learners, transfer strategies, \
             simulated benchmarks, and a reproducible sweep harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Materialize a data-generating process to columnar CSV files
    Simulate(SimulateArgs),
    /// Fit one learner on one experiment; dump the model and tau predictions
    Fit(FitArgs),
    /// Run a (methods x train-sizes x seeds) sweep and emit records CSV
    Sweep(SweepArgs),
    /// Compare the X- and Y-learners on six simulated datasets
    CompareXy(CompareXyArgs),
}

fn default_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

fn write_manifest<T: Serialize>(config: &T, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut text = serde_json::to_string_pretty(config)
        .map_err(|e| Error::config(format!("manifest: {e}")))?;
    text.push('\n');
    std::fs::write(out_dir.join("manifest.json"), text)?;
    Ok(())
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad number '{p}'")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Args)]
struct SimulateArgs {
    /// JSON config (a previous manifest works); flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// semi-synth-v1 | semi-synth-v2 | sim-lm | sim-rf | sim-rft | mnist
    #[arg(long)]
    dgp: Option<String>,
    /// Units per experiment
    #[arg(long)]
    n: Option<usize>,
    /// Number of experiments in the collection
    #[arg(long)]
    experiments: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// IDX image file for the mnist DGP (synthetic images if omitted)
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    /// IDX label file for the mnist DGP
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
    /// Keep all 784 pixels instead of 7x7 pooling (mnist DGP)
    #[arg(long)]
    mnist_full: bool,
    /// Force a zero treatment effect (mnist DGP)
    #[arg(long)]
    zero_effect: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    #[serde(default = "default_version")]
    version: String,
    dgp: DgpSpec,
    out: PathBuf,
}

fn resolve_simulate(args: SimulateArgs) -> Result<SimulateConfig> {
    let mut cfg: SimulateConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => SimulateConfig {
            version: default_version(),
            dgp: DgpSpec::new(DgpKind::SimLm, 1000, 1, 0),
            out: PathBuf::from("catebench-out/simulate"),
        },
    };
    if let Some(kind) = &args.dgp {
        cfg.dgp.kind = DgpKind::parse(kind)?;
    }
    if let Some(n) = args.n {
        cfg.dgp.n_units = n;
    }
    if let Some(e) = args.experiments {
        cfg.dgp.n_experiments = e;
    }
    if let Some(s) = args.seed {
        cfg.dgp.seed = s;
    }
    if let (Some(images), Some(labels)) = (&args.mnist_images, &args.mnist_labels) {
        cfg.dgp.mnist.source = MnistSource::Idx {
            images: images.clone(),
            labels: labels.clone(),
        };
    } else if args.mnist_images.is_some() || args.mnist_labels.is_some() {
        return Err(Error::config(
            "--mnist-images and --mnist-labels must be given together",
        ));
    }
    if args.mnist_full {
        cfg.dgp.mnist.features = PixelFeatures::Full;
    }
    if args.zero_effect {
        cfg.dgp.mnist.zero_effect = true;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    cfg.version = default_version();
    Ok(cfg)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = resolve_simulate(args)?;
    cfg.dgp.validate()?;
    write_manifest(&cfg, &cfg.out)?;
    for i in 0..cfg.dgp.n_experiments {
        let e = cfg.dgp.generate_experiment(i)?;
        e.write_csv(&cfg.out.join(format!("experiment_{i}.csv")), false)?;
        e.write_csv(&cfg.out.join(format!("experiment_{i}_truth.csv")), true)?;
    }
    println!(
        "simulate: wrote {} experiment(s) of the {} process to {}",
        cfg.dgp.n_experiments,
        cfg.dgp.id(),
        cfg.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Columnar CSV produced by `simulate` (truth columns optional)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Learner id: t-nn | s-nn | y-nn | x-nn | t-lm | s-rf | t-rf
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optimizer step budget override
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    #[serde(default = "default_version")]
    version: String,
    data: PathBuf,
    method: String,
    seed: u64,
    #[serde(default)]
    steps: Option<usize>,
    out: PathBuf,
}

fn resolve_fit(args: FitArgs) -> Result<FitConfig> {
    let mut cfg: FitConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => FitConfig {
            version: default_version(),
            data: args
                .data
                .clone()
                .ok_or_else(|| Error::config("fit needs --data <csv> (or --config)"))?,
            method: "t-nn".into(),
            seed: 0,
            steps: None,
            out: PathBuf::from("catebench-out/fit"),
        },
    };
    if let Some(d) = args.data {
        cfg.data = d;
    }
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.steps.is_some() {
        cfg.steps = args.steps;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    cfg.version = default_version();
    Ok(cfg)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let cfg = resolve_fit(args)?;
    let mut method = MethodSpec::parse(&cfg.method)?;
    if method.transfer.is_some() {
        return Err(Error::config(
            "fit runs single-experiment learners; use sweep for transfer strategies",
        ));
    }
    if cfg.steps.is_some() {
        method.max_steps = cfg.steps;
    }
    let data = ExperimentData::read_csv(&cfg.data)?;
    let model = fit_method_model(&method, &data, cfg.seed)?;
    let tau = model.predict_tau(&data.x)?;

    write_manifest(&cfg, &cfg.out)?;
    std::fs::write(
        cfg.out.join("model.json"),
        catebench::learners::model_to_json(&model)?,
    )?;
    let mut dump = String::from("tau\n");
    for t in &tau {
        dump.push_str(&format!("{t}\n"));
    }
    std::fs::write(cfg.out.join("tau.csv"), dump)?;

    if let Some(truth) = &data.truth {
        let mse = catebench::harness::cate_mse(&tau, &truth.tau)?;
        println!(
            "fit: {} on {} units; in-sample CATE MSE {:.6} ({:.4}%)",
            method.id(),
            data.n_units(),
            mse,
            100.0 * mse
        );
    } else {
        println!("fit: {} on {} units", method.id(), data.n_units());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Args)]
struct SweepArgs {
    /// JSON config holding the full plan (a previous manifest works)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dgp: Option<String>,
    /// Method ids, e.g. "t-nn,s-rf,mlrw" or "y-nn/frozen" (repeatable)
    #[arg(long)]
    method: Vec<String>,
    /// Apply this transfer strategy to every --method without one
    #[arg(long)]
    transfer: Option<String>,
    /// Comma-separated training sizes, e.g. "100,500,2000"
    #[arg(long)]
    train_sizes: Option<String>,
    /// Seeds (repetitions) per cell
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    /// Experiments per collection (transfer methods; target included)
    #[arg(long)]
    experiments: Option<usize>,
    /// Units per source experiment
    #[arg(long)]
    source_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    #[serde(default = "default_version")]
    version: String,
    plan: SweepPlan,
    out: PathBuf,
}

fn default_sweep_plan() -> SweepPlan {
    SweepPlan {
        dgp: DgpSpec::new(DgpKind::SimLm, 2, 1, 0),
        methods: vec![],
        train_sizes: vec![100, 200, 500, 1000, 2000, 5000],
        n_seeds: 10,
        test_size: 2000,
        n_experiments: 2,
        source_size: 5000,
        seed: 0,
        jobs: None,
    }
}

fn resolve_sweep(args: SweepArgs) -> Result<SweepConfig> {
    let mut cfg: SweepConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => SweepConfig {
            version: default_version(),
            plan: default_sweep_plan(),
            out: PathBuf::from("catebench-out/sweep"),
        },
    };
    if let Some(kind) = &args.dgp {
        cfg.plan.dgp.kind = DgpKind::parse(kind)?;
    }
    if !args.method.is_empty() {
        let mut methods = Vec::new();
        for entry in args.method.iter().flat_map(|m| m.split(',')) {
            let mut m = MethodSpec::parse(entry.trim())?;
            if m.transfer.is_none() {
                if let Some(t) = &args.transfer {
                    if t != "baseline" {
                        m = MethodSpec::parse(&format!("{}/{}", entry.trim(), t))?;
                    }
                }
            }
            methods.push(m);
        }
        cfg.plan.methods = methods;
    }
    if cfg.plan.methods.is_empty() {
        cfg.plan.methods = vec![
            MethodSpec::parse("t-nn")?,
            MethodSpec::parse("s-nn")?,
            MethodSpec::parse("y-nn")?,
            MethodSpec::parse("s-rf")?,
            MethodSpec::parse("t-rf")?,
        ];
    }
    if let Some(sizes) = &args.train_sizes {
        cfg.plan.train_sizes = parse_usize_list(sizes)?;
    }
    if let Some(s) = args.seeds {
        cfg.plan.n_seeds = s;
    }
    if let Some(t) = args.test_size {
        cfg.plan.test_size = t;
    }
    if let Some(e) = args.experiments {
        cfg.plan.n_experiments = e;
    }
    if let Some(s) = args.source_size {
        cfg.plan.source_size = s;
    }
    if let Some(s) = args.seed {
        cfg.plan.seed = s;
    }
    if args.jobs.is_some() {
        cfg.plan.jobs = args.jobs;
    }
    if let (Some(images), Some(labels)) = (&args.mnist_images, &args.mnist_labels) {
        cfg.plan.dgp.mnist.source = MnistSource::Idx {
            images: images.clone(),
            labels: labels.clone(),
        };
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    // Per-cell sizes supersede n_units; keep the generator config valid.
    cfg.plan.dgp.n_units = cfg.plan.dgp.n_units.max(2);
    cfg.plan.dgp.n_experiments = cfg.plan.n_experiments;
    cfg.version = default_version();
    Ok(cfg)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = resolve_sweep(args)?;
    cfg.plan.validate()?;
    write_manifest(&cfg, &cfg.out)?;
    let records = run_sweep(&cfg.plan)?;
    write_records_csv(&records, &cfg.out.join("records.csv"))?;
    write_timings_csv(&records, &cfg.out.join("timings.csv"))?;
    write_errors_csv(&records, &cfg.out.join("errors.csv"))?;
    let summary = summarize(&records);
    write_summary_text(&summary, &cfg.out.join("summary.txt"))?;
    write_gnuplot_script(&summary, "records.csv", &cfg.out.join("learning_curves.gp"))?;
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "sweep: {} records ({} failed) -> {}",
        records.len(),
        failures,
        cfg.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// compare-xy

#[derive(Args)]
struct CompareXyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train_sizes: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optimizer step budget per network
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareXyConfig {
    #[serde(default = "default_version")]
    version: String,
    plan: CompareXyPlan,
    out: PathBuf,
}

fn resolve_compare_xy(args: CompareXyArgs) -> Result<CompareXyConfig> {
    let mut cfg: CompareXyConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => CompareXyConfig {
            version: default_version(),
            plan: CompareXyPlan {
                train_sizes: vec![500, 1000, 2000],
                n_seeds: 5,
                test_size: 1000,
                seed: 0,
                max_steps: None,
                jobs: None,
            },
            out: PathBuf::from("catebench-out/compare-xy"),
        },
    };
    if let Some(sizes) = &args.train_sizes {
        cfg.plan.train_sizes = parse_usize_list(sizes)?;
    }
    if let Some(s) = args.seeds {
        cfg.plan.n_seeds = s;
    }
    if let Some(t) = args.test_size {
        cfg.plan.test_size = t;
    }
    if let Some(s) = args.seed {
        cfg.plan.seed = s;
    }
    if args.steps.is_some() {
        cfg.plan.max_steps = args.steps;
    }
    if args.jobs.is_some() {
        cfg.plan.jobs = args.jobs;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    cfg.version = default_version();
    Ok(cfg)
}

fn cmd_compare_xy(args: CompareXyArgs) -> Result<()> {
    let cfg = resolve_compare_xy(args)?;
    write_manifest(&cfg, &cfg.out)?;
    let records = compare_xy(&cfg.plan)?;
    write_xy_csv(&records, &cfg.out.join("compare_xy.csv"))?;

    // Directional summary: per sim, median MSE per learner over all
    // (size, seed) cells. Reported, never asserted.
    let mut lines = String::from("sim,x_nn_median_mse,y_nn_median_mse,lower\n");
    let mut y_wins = 0usize;
    for sim in 0..catebench::harness::COMPARE_XY_SIMS {
        let med = |m: &str| -> f64 {
            let mut v: Vec<f64> = records
                .iter()
                .filter(|r| r.sim == sim && r.method == m && !r.mse.is_nan())
                .map(|r| r.mse)
                .collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if v.is_empty() {
                f64::NAN
            } else if v.len() % 2 == 1 {
                v[v.len() / 2]
            } else {
                0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
            }
        };
        let (x, y) = (med("x-nn"), med("y-nn"));
        let lower = if y <= x { "y-nn" } else { "x-nn" };
        if y <= x {
            y_wins += 1;
        }
        lines.push_str(&format!("{sim},{x},{y},{lower}\n"));
    }
    std::fs::write(cfg.out.join("compare_xy_summary.csv"), &lines)?;
    println!(
        "compare-xy: y-nn had the lower median MSE on {}/{} sims -> {}",
        y_wins,
        catebench::harness::COMPARE_XY_SIMS,
        cfg.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::CompareXy(args) => cmd_compare_xy(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
