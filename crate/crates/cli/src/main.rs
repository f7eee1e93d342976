//! `advsemi` command-line driver.
//!
//! Exit codes: 0 success, 1 other failures, 2 bad config or arguments,
//! 3 training diverged.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use advsemi::data::{load_dataset, save_dataset};
use advsemi::eval::{evaluate_with, EvalOptions};
use advsemi::experiment::{
    generation_spec_from, run_sweep, run_train, sweep_csv, ExperimentConfig, KeyValues, SweepAxis, GEN_KEYS,
};
use advsemi::{Error, GenerationSpec, MlpParams, Result};

#[derive(Parser)]
#[command(name = "advsemi", version, about = "Adversarial semi-supervised multi-label training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV (plus a `.meta` sidecar).
    GenData {
        /// File with `data.n`, `data.d`, `data.noise_sigma`, `labels.unary`, `labels.pairs`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `data.n`.
        #[arg(long)]
        n: Option<usize>,
        /// Generation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train one model and write checkpoints, history, report and run.meta.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a classifier checkpoint on a dataset CSV.
    Eval {
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = advsemi::eval::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = advsemi::eval::DEFAULT_MIN_SUPPORT)]
        min_support: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train over a grid of (value, seed) cells and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `alpha` or `missing_rate`.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) if !p.exists() => Err(Error::Config {
            key: "config".into(),
            msg: format!("{} does not exist", p.display()),
        }),
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn gen_data(config: Option<PathBuf>, out: PathBuf, n: Option<usize>, seed: u64) -> Result<()> {
    let mut spec = match config {
        Some(p) => {
            let kv = KeyValues::load(&p)?;
            if let Some(bad) = kv.keys().find(|k| !GEN_KEYS.contains(k)) {
                return Err(Error::Config { key: bad.to_string(), msg: "not a generation key".into() });
            }
            generation_spec_from(&kv)?
        }
        None => GenerationSpec::default(),
    };
    if let Some(n) = n {
        spec.n = n;
        spec.validate().map_err(|e| Error::Config { key: "data.n".into(), msg: e.to_string() })?;
    }
    let ds = spec.generate(seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_dataset(&ds, &out)?;
    println!("wrote {} rows ({} features, {} labels) to {}", ds.len(), ds.feature_dim(), ds.num_labels(), out.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}

fn train_cmd(config: Option<PathBuf>, out: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(config.as_ref())?;
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let run = run_train(&cfg)?;
    let r = &run.report;
    println!(
        "{} seed={} avg_f1={} avg_auc={} avg_acc={:.4} marginal_diff={:.4} conditional_diff={}",
        cfg.label(),
        cfg.seed,
        fmt_opt(r.avg_f1),
        fmt_opt(r.avg_auc),
        r.avg_accuracy,
        r.marginal_abs_diff_mean,
        fmt_opt(r.conditional_abs_diff_mean)
    );
    println!("artifacts in {}", cfg.out_dir.display());
    Ok(())
}

fn eval_cmd(checkpoint: PathBuf, data: PathBuf, threshold: f64, min_support: usize, out: Option<PathBuf>) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config { key: "threshold".into(), msg: format!("{threshold} not in (0, 1)") });
    }
    let params = MlpParams::load(&checkpoint)?;
    let ds = load_dataset(&data)?;
    let report = evaluate_with(&params, &ds, &EvalOptions { threshold, min_support })?;
    match out {
        Some(p) => report.save(p)?,
        None => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json()?);
        }
    }
    Ok(())
}

fn sweep_cmd(config: Option<PathBuf>, axis: String, values: Vec<f64>, seeds: Vec<u64>, out: PathBuf) -> Result<()> {
    let axis = SweepAxis::from_name(&axis)?;
    let mut base = load_config(config.as_ref())?;
    base.out_dir = out.clone();
    let rows = run_sweep(&base, axis, &values, &seeds, true)?;
    std::fs::create_dir_all(&out)?;
    let path = out.join("sweep.csv");
    std::fs::write(&path, sweep_csv(axis, &rows))?;
    println!("{} cells written to {}", rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData { config, out, n, seed } => gen_data(config, out, n, seed),
        Command::Train { config, out, seed } => train_cmd(config, out, seed),
        Command::Eval { checkpoint, data, threshold, min_support, out } => {
            eval_cmd(checkpoint, data, threshold, min_support, out)
        }
        Command::Sweep { config, axis, values, seeds, out } => sweep_cmd(config, axis, values, seeds, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } | Error::Parse { .. } => 2,
                Error::Diverged { .. } => 3,
                _ => 1,
            })
        }
    }
}
