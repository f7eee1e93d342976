//! Experiment configuration files and the end-to-end drivers behind the CLI.
//!
//! Config files are plain `key = value` lines. Keys are dotted
//! (`train.alpha`); a `[section]` line prefixes the keys that follow it.
//! `#` starts a comment. Unknown keys are rejected.
//!
//! ```text
//! seed = 7
//! out_dir = runs/demo
//!
//! [data]
//! n = 2000
//! missing_rate = 0.5
//!
//! [train]
//! alpha = 0.01
//! steps = 2000
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{apply_missing, load_dataset, Dataset, GenerationSpec, LabelDistributionSpec, PairPotential};
use crate::error::{Error, Result};
use crate::eval::{evaluate_with, EvalOptions, MetricsReport};
use crate::optim::AdamHyper;
use crate::seed::derive_seed;
use crate::trainer::{train, TrainConfig, TrainOutcome};

pub const BASELINE_LABEL: &str = "O-wlc baseline";
pub const ADVERSARIAL_LABEL: &str = "adversarial";
pub const SWEEP_HEADER: &str = "axis,value,seed,avg_f1,avg_auc,avg_acc,marginal_diff_mean,conditional_diff_mean";

/// Raw `key -> value` pairs of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(path, i + 1, "empty key"));
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::parse(path, i + 1, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// `i:j:strength` items separated by commas; `none` for no pairs.
fn parse_pairs(key: &str, v: &str) -> Result<Vec<PairPotential>> {
    if v.trim() == "none" {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::config(key, format!("`{item}` is not i:j:strength")));
            }
            Ok(PairPotential {
                i: parse_value(key, parts[0])?,
                j: parse_value(key, parts[1])?,
                strength: parse_value(key, parts[2])?,
            })
        })
        .collect()
}

/// Keys that describe a synthetic dataset.
pub const GEN_KEYS: &[&str] = &["data.n", "data.d", "data.noise_sigma", "labels.unary", "labels.pairs"];

/// Generation spec from the `data.*` and `labels.*` keys; unspecified parts
/// keep their defaults. Setting `labels.unary` drops the default pairs unless
/// `labels.pairs` is also given.
pub fn generation_spec_from(kv: &KeyValues) -> Result<GenerationSpec> {
    let mut spec = GenerationSpec::default();
    if let Some(v) = kv.get("data.n") {
        spec.n = parse_value("data.n", v)?;
    }
    if let Some(v) = kv.get("data.d") {
        spec.d = parse_value("data.d", v)?;
    }
    if let Some(v) = kv.get("data.noise_sigma") {
        spec.noise_sigma = parse_value("data.noise_sigma", v)?;
    }
    if let Some(v) = kv.get("labels.unary") {
        let unary: Vec<f64> = parse_list("labels.unary", v)?;
        spec.labels = LabelDistributionSpec {
            num_labels: unary.len(),
            unary_logits: unary,
            pair_potentials: Vec::new(),
        };
    }
    if let Some(v) = kv.get("labels.pairs") {
        spec.labels.pair_potentials = parse_pairs("labels.pairs", v)?;
    }
    spec.validate().map_err(|e| match e {
        Error::Config { key, msg } => match key.as_str() {
            "n" | "d" | "noise_sigma" => Error::config(format!("data.{key}"), msg),
            "labels" => Error::config("labels.unary", msg),
            _ => Error::config(format!("labels.{key}"), msg),
        },
        other => Error::config("labels.unary", other.to_string()),
    })?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Generate(GenerationSpec),
}

/// Everything one training run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub train: TrainConfig,
    pub data: DataSource,
    pub missing_rate: f64,
    pub eval_split: f64,
    pub eval: EvalOptions,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train: TrainConfig::default(),
            data: DataSource::Generate(GenerationSpec::default()),
            missing_rate: 0.5,
            eval_split: 0.25,
            eval: EvalOptions::default(),
            out_dir: PathBuf::from("runs/default"),
        }
    }
}

const TRAIN_KEYS: &[&str] = &[
    "seed",
    "out_dir",
    "data.path",
    "data.missing_rate",
    "data.eval_split",
    "train.steps",
    "train.d_steps",
    "train.r_steps",
    "train.m1",
    "train.m2",
    "train.alpha",
    "train.eval_every",
    "train.real_label_smoothing",
    "model.classifier_hidden",
    "model.discriminator_hidden",
    "adam_r.lr",
    "adam_r.beta1",
    "adam_r.beta2",
    "adam_r.eps",
    "adam_d.lr",
    "adam_d.beta1",
    "adam_d.beta2",
    "adam_d.eps",
    "eval.threshold",
    "eval.min_support",
];

fn apply_adam(kv: &KeyValues, prefix: &str, h: &mut AdamHyper) -> Result<()> {
    for (name, slot) in [
        ("lr", &mut h.lr),
        ("beta1", &mut h.beta1),
        ("beta2", &mut h.beta2),
        ("eps", &mut h.eps),
    ] {
        let key = format!("{prefix}.{name}");
        if let Some(v) = kv.get(&key) {
            *slot = parse_value(&key, v)?;
        }
    }
    h.validate().map_err(|e| Error::config(prefix, e.to_string()))
}

impl ExperimentConfig {
    /// Builds a config from parsed key/values. Relative paths resolve against
    /// `base_dir`.
    pub fn from_key_values(kv: &KeyValues, base_dir: &Path) -> Result<Self> {
        if let Some(bad) = kv.keys().find(|k| !TRAIN_KEYS.contains(k) && !GEN_KEYS.contains(k)) {
            return Err(Error::config(bad, "unknown key"));
        }
        let mut cfg = ExperimentConfig::default();
        if let Some(v) = kv.get("seed") {
            cfg.seed = parse_value("seed", v)?;
        }
        if let Some(v) = kv.get("out_dir") {
            cfg.out_dir = base_dir.join(v);
        }
        match kv.get("data.path") {
            Some(p) => {
                if let Some(k) = GEN_KEYS.iter().find(|k| kv.get(k).is_some()) {
                    return Err(Error::config(*k, "cannot be combined with data.path"));
                }
                cfg.data = DataSource::File(base_dir.join(p));
            }
            None => cfg.data = DataSource::Generate(generation_spec_from(kv)?),
        }
        if let Some(v) = kv.get("data.missing_rate") {
            cfg.missing_rate = parse_value("data.missing_rate", v)?;
        }
        if let Some(v) = kv.get("data.eval_split") {
            cfg.eval_split = parse_value("data.eval_split", v)?;
        }

        let t = &mut cfg.train;
        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(v) = kv.get($key) {
                    $field = parse_value($key, v)?;
                }
            };
        }
        set!("train.steps", t.steps);
        set!("train.d_steps", t.d_steps);
        set!("train.r_steps", t.r_steps);
        set!("train.m1", t.m1);
        set!("train.m2", t.m2);
        set!("train.alpha", t.alpha);
        set!("train.eval_every", t.eval_every);
        set!("train.real_label_smoothing", t.real_label_smoothing);
        set!("model.discriminator_hidden", t.discriminator_hidden);
        if let Some(v) = kv.get("model.classifier_hidden") {
            t.classifier_hidden = parse_list("model.classifier_hidden", v)?;
        }
        apply_adam(kv, "adam_r", &mut t.adam_r)?;
        apply_adam(kv, "adam_d", &mut t.adam_d)?;
        set!("eval.threshold", cfg.eval.threshold);
        set!("eval.min_support", cfg.eval.min_support);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let kv = KeyValues::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_key_values(&kv, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::config("data.missing_rate", format!("{} not in [0, 1)", self.missing_rate)));
        }
        if !(self.eval_split > 0.0 && self.eval_split < 1.0) {
            return Err(Error::config("data.eval_split", format!("{} not in (0, 1)", self.eval_split)));
        }
        if !(self.eval.threshold > 0.0 && self.eval.threshold < 1.0) {
            return Err(Error::config("eval.threshold", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        if self.train.is_baseline() {
            BASELINE_LABEL
        } else {
            ADVERSARIAL_LABEL
        }
    }
}

/// Training rows (with the missing-label mask applied) and held-out rows.
///
/// The split and mask depend only on the seed and the data settings, so runs
/// that differ only in training hyperparameters see identical data.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let full = match &cfg.data {
        DataSource::File(p) => {
            if !p.exists() {
                return Err(Error::config("data.path", format!("{} does not exist", p.display())));
            }
            load_dataset(p)?
        }
        DataSource::Generate(spec) => spec.generate(derive_seed(cfg.seed, "data.generate"))?,
    };
    let (train_rows, held_out) = full.split(cfg.eval_split, derive_seed(cfg.seed, "data.split"))?;
    let train_rows = if train_rows.is_fully_labeled() {
        apply_missing(&train_rows, cfg.missing_rate, derive_seed(cfg.seed, "data.mask"))?
    } else if cfg.missing_rate == 0.0 {
        train_rows
    } else {
        return Err(Error::config(
            "data.missing_rate",
            "dataset already has unlabeled rows; set missing_rate = 0",
        ));
    };
    Ok((train_rows, held_out))
}

pub struct RunResult {
    pub outcome: TrainOutcome,
    pub report: MetricsReport,
    pub train_rows: usize,
    pub labeled_rows: usize,
    pub held_out_rows: usize,
}

/// Prepares data, trains, and evaluates on the held-out rows. Writes nothing.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let (train_ds, held_out) = prepare_data(cfg)?;
    let train_cfg = TrainConfig { seed: cfg.seed, ..cfg.train.clone() };
    let outcome = train(&train_cfg, &train_ds.training_view(), Some(&held_out))?;
    let report = evaluate_with(&outcome.classifier, &held_out, &cfg.eval)?;
    Ok(RunResult {
        outcome,
        report,
        train_rows: train_ds.len(),
        labeled_rows: train_ds.labeled_rows().len(),
        held_out_rows: held_out.len(),
    })
}

fn run_meta(cfg: &ExperimentConfig, run: &RunResult) -> String {
    let mut s = String::new();
    writeln!(s, "label={}", cfg.label()).unwrap();
    writeln!(s, "seed={}", cfg.seed).unwrap();
    writeln!(s, "alpha={:?}", cfg.train.alpha).unwrap();
    writeln!(s, "missing_rate={:?}", cfg.missing_rate).unwrap();
    writeln!(s, "eval_split={:?}", cfg.eval_split).unwrap();
    writeln!(s, "steps={}", cfg.train.steps).unwrap();
    writeln!(s, "train_rows={}", run.train_rows).unwrap();
    writeln!(s, "labeled_rows={}", run.labeled_rows).unwrap();
    writeln!(s, "held_out_rows={}", run.held_out_rows).unwrap();
    s
}

pub const CLASSIFIER_FILE: &str = "classifier.ckpt";
pub const DISCRIMINATOR_FILE: &str = "discriminator.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORT_FILE: &str = "report.json";
pub const META_FILE: &str = "run.meta";

/// Writes checkpoints, history, report and run metadata under `dir`.
pub fn write_run(cfg: &ExperimentConfig, run: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    run.outcome.classifier.save(dir.join(CLASSIFIER_FILE))?;
    run.outcome.discriminator.save(dir.join(DISCRIMINATOR_FILE))?;
    fs::write(dir.join(HISTORY_FILE), run.outcome.history.to_csv())?;
    run.report.save(dir.join(REPORT_FILE))?;
    fs::write(dir.join(META_FILE), run_meta(cfg, run))?;
    Ok(())
}

/// [`execute`] followed by [`write_run`] into `cfg.out_dir`.
pub fn run_train(cfg: &ExperimentConfig) -> Result<RunResult> {
    let run = execute(cfg)?;
    write_run(cfg, &run, &cfg.out_dir)?;
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    MissingRate,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::MissingRate => "missing_rate",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "missing_rate" => Ok(SweepAxis::MissingRate),
            other => Err(Error::config("axis", format!("`{other}` is not alpha or missing_rate"))),
        }
    }

    fn apply(self, cfg: &mut ExperimentConfig, value: f64) {
        match self {
            SweepAxis::Alpha => cfg.train.alpha = value,
            SweepAxis::MissingRate => cfg.missing_rate = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Configs for every (value, seed) cell, values outermost.
pub fn sweep_cells(base: &ExperimentConfig, axis: SweepAxis, values: &[f64], seeds: &[u64]) -> Result<Vec<ExperimentConfig>> {
    if values.is_empty() {
        return Err(Error::config("values", "empty list"));
    }
    if seeds.is_empty() {
        return Err(Error::config("seeds", "empty list"));
    }
    let mut cells = Vec::with_capacity(values.len() * seeds.len());
    for &v in values {
        for &s in seeds {
            let mut cfg = base.clone();
            axis.apply(&mut cfg, v);
            cfg.seed = s;
            cfg.out_dir = base.out_dir.join(format!("{}={v:?}", axis.name())).join(format!("seed={s}"));
            cfg.validate()?;
            cells.push(cfg);
        }
    }
    Ok(cells)
}

/// Runs every cell in parallel. Each cell writes its artifacts into its own
/// subdirectory of `base.out_dir` when `write_cells` is set.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
    write_cells: bool,
) -> Result<Vec<SweepRow>> {
    let cells = sweep_cells(base, axis, values, seeds)?;
    cells
        .par_iter()
        .map(|cfg| {
            let run = execute(cfg)?;
            if write_cells {
                write_run(cfg, &run, &cfg.out_dir)?;
            }
            let value = match axis {
                SweepAxis::Alpha => cfg.train.alpha,
                SweepAxis::MissingRate => cfg.missing_rate,
            };
            Ok(SweepRow { value, seed: cfg.seed, report: run.report })
        })
        .collect()
}

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{:?},{},{},{},{:?},{:?},{}",
            axis.name(),
            r.value,
            r.seed,
            opt(r.report.avg_f1),
            opt(r.report.avg_auc),
            r.report.avg_accuracy,
            r.report.marginal_abs_diff_mean,
            opt(r.report.conditional_abs_diff_mean)
        )
        .unwrap();
    }
    s
}
