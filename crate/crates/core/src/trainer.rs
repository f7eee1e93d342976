//! Alternating adversarial semi-supervised training.
//!
//! Each of the `steps` outer iterations runs `d_steps` discriminator updates
//! followed by `r_steps` classifier updates:
//!
//! * discriminator: `m = m1 + m2` feature rows drawn from all rows and `m`
//!   label vectors drawn independently from the labeled rows; one Adam step on
//!   `-(1/m) Σ [log D(y_real) + log(1 - D(R(x)))]` with the classifier frozen;
//! * classifier: `m1` labeled and `m2` unlabeled rows; one Adam step on
//!   `-(α/m) Σ log D(R(x)) + ((1-α)/m1) Σ BCE(R(x_lab), y_lab)` with the
//!   discriminator frozen and the gradient flowing through it.
//!
//! All batches are drawn with replacement. Initialization, discriminator
//! batches and classifier batches each use their own RNG stream derived from
//! the master seed.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, TrainingView};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::losses::{bce_loss, d_loss_with_target, r_adv_loss};
use crate::matrix::Matrix;
use crate::models::{check_label_domain, init_params, ClassifierSpec, DiscriminatorSpec, MlpParams};
use crate::optim::{adam_step, AdamHyper, AdamState};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Outer iterations (K).
    pub steps: usize,
    /// Discriminator updates per outer iteration (H_D).
    pub d_steps: usize,
    /// Classifier updates per outer iteration (H_R).
    pub r_steps: usize,
    /// Labeled rows per classifier batch.
    pub m1: usize,
    /// Unlabeled rows per classifier batch.
    pub m2: usize,
    /// Weight of the adversarial term; 0 disables it.
    pub alpha: f64,
    pub adam_r: AdamHyper,
    pub adam_d: AdamHyper,
    pub seed: u64,
    /// Steps between history snapshots.
    pub eval_every: usize,
    pub classifier_hidden: Vec<usize>,
    pub discriminator_hidden: usize,
    /// One-sided smoothing of the discriminator's real target (`1 - s`).
    /// Off (0) by default.
    pub real_label_smoothing: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            d_steps: 1,
            r_steps: 1,
            m1: 32,
            m2: 32,
            alpha: 0.01,
            adam_r: AdamHyper::default(),
            adam_d: AdamHyper::default(),
            seed: 0,
            eval_every: 100,
            classifier_hidden: vec![64, 64],
            discriminator_hidden: 32,
            real_label_smoothing: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("train.steps", self.steps),
            ("train.d_steps", self.d_steps),
            ("train.r_steps", self.r_steps),
            ("train.m1", self.m1),
            ("train.eval_every", self.eval_every),
            ("model.discriminator_hidden", self.discriminator_hidden),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be >= 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("train.alpha", format!("{} not in [0, 1]", self.alpha)));
        }
        if self.classifier_hidden.contains(&0) {
            return Err(Error::config("model.classifier_hidden", "widths must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.real_label_smoothing) {
            return Err(Error::config("train.real_label_smoothing", "must lie in [0, 1)"));
        }
        for (key, h) in [("adam_r", &self.adam_r), ("adam_d", &self.adam_d)] {
            h.validate().map_err(|e| Error::config(key, e.to_string()))?;
        }
        Ok(())
    }

    pub fn classifier_spec(&self, input_dim: usize, num_labels: usize) -> ClassifierSpec {
        ClassifierSpec {
            input_dim,
            hidden_dims: self.classifier_hidden.clone(),
            num_labels,
        }
    }

    pub fn discriminator_spec(&self, num_labels: usize) -> DiscriminatorSpec {
        DiscriminatorSpec {
            input_dim: num_labels,
            hidden_dim: self.discriminator_hidden,
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.alpha == 0.0
    }
}

/// Independent RNG streams for one run.
pub struct RngStreams {
    pub d_batches: ChaCha8Rng,
    pub r_batches: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            d_batches: ChaCha8Rng::seed_from_u64(derive_seed(seed, "train.d_batches")),
            r_batches: ChaCha8Rng::seed_from_u64(derive_seed(seed, "train.r_batches")),
        }
    }
}

/// Initial classifier and discriminator for `config`.
pub fn init_models(config: &TrainConfig, input_dim: usize, num_labels: usize) -> Result<(MlpParams, MlpParams)> {
    let r = init_params(&config.classifier_spec(input_dim, num_labels), derive_seed(config.seed, "train.init_r"))?;
    let d = init_params(&config.discriminator_spec(num_labels), derive_seed(config.seed, "train.init_d"))?;
    Ok((r, d))
}

/// Discriminator batch: `m` feature rows from all rows, and `m` label vectors
/// drawn independently from the labeled rows. The two draws are not paired.
pub fn sample_d_batch(view: &TrainingView, m: usize, rng: &mut impl Rng) -> Result<(Matrix, Matrix)> {
    if view.labels.rows() == 0 {
        return Err(Error::Protocol("no labeled rows to draw real labels from".into()));
    }
    let n = view.len();
    let image_idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
    let label_idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..view.labels.rows())).collect();
    Ok((view.features.select_rows(&image_idx), view.labels.select_rows(&label_idx)))
}

/// Classifier batch: `m1` labeled rows with their labels and `m2` unlabeled
/// rows. When there are no unlabeled rows the unlabeled part is empty.
pub struct ClassifierBatch {
    pub labeled_x: Matrix,
    pub labeled_y: Matrix,
    pub unlabeled_x: Matrix,
}

pub fn sample_r_batch(view: &TrainingView, m1: usize, m2: usize, rng: &mut impl Rng) -> Result<ClassifierBatch> {
    let n_lab = view.labeled_rows.len();
    if n_lab == 0 {
        return Err(Error::Protocol("classifier batch needs labeled rows".into()));
    }
    let picks: Vec<usize> = (0..m1).map(|_| rng.random_range(0..n_lab)).collect();
    let rows: Vec<usize> = picks.iter().map(|&k| view.labeled_rows[k]).collect();
    let unl = &view.unlabeled_rows;
    let unl_rows: Vec<usize> = if unl.is_empty() {
        Vec::new()
    } else {
        (0..m2).map(|_| unl[rng.random_range(0..unl.len())]).collect()
    };
    Ok(ClassifierBatch {
        labeled_x: view.features.select_rows(&rows),
        labeled_y: view.labels.select_rows(&picks),
        unlabeled_x: view.features.select_rows(&unl_rows),
    })
}

fn adam_update(params: &mut MlpParams, grads: &[f64], state: &mut AdamState, hyper: &AdamHyper) -> Result<()> {
    let mut flat = params.to_flat();
    adam_step(&mut flat, grads, state, hyper)?;
    params.set_flat(&flat)
}

/// Non-finite values surface as [`Error::Diverged`] with step 0; [`train`]
/// fills in the actual step.
fn ensure_finite(what: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Diverged { step: 0, loss: what, value: v })
    }
}

fn first_non_finite(m: &Matrix) -> Option<f64> {
    m.data().iter().copied().find(|v| !v.is_finite())
}

/// Gradient of the discriminator loss with respect to its parameters, given
/// real label vectors and fake (predicted) label vectors.
pub fn discriminator_loss_and_grad(
    d: &MlpParams,
    real: &Matrix,
    fake: &Matrix,
    real_target: f64,
) -> Result<(f64, Vec<f64>)> {
    check_label_domain(real)?;
    check_label_domain(fake)?;
    let (real_scores, real_trace) = d.forward_traced(real)?;
    let (fake_scores, fake_trace) = d.forward_traced(fake)?;
    let (loss, g_real, g_fake) = d_loss_with_target(real_scores.data(), fake_scores.data(), real_target)?;
    let (grad_r, _) = d.backward(&real_trace, &Matrix::column(&g_real))?;
    let (grad_f, _) = d.backward(&fake_trace, &Matrix::column(&g_fake))?;
    let grad = grad_r.iter().zip(&grad_f).map(|(a, b)| a + b).collect();
    Ok((loss, grad))
}

/// One Adam descent step of the discriminator on fixed real/fake inputs.
/// Returns the loss before the update.
pub fn discriminator_update(
    d: &mut MlpParams,
    real: &Matrix,
    fake: &Matrix,
    state: &mut AdamState,
    hyper: &AdamHyper,
    real_target: f64,
) -> Result<f64> {
    let (loss, grad) = discriminator_loss_and_grad(d, real, fake, real_target)?;
    ensure_finite("d_loss", loss)?;
    adam_update(d, &grad, state, hyper)?;
    Ok(loss)
}

/// Discriminator step: fakes are the frozen classifier's predictions on
/// `images`. `r` is only read.
pub fn train_discriminator_step(
    r: &MlpParams,
    d: &mut MlpParams,
    images: &Matrix,
    real_labels: &Matrix,
    state: &mut AdamState,
    hyper: &AdamHyper,
    real_label_smoothing: f64,
) -> Result<f64> {
    let fake = r.forward(images)?;
    if let Some(v) = first_non_finite(&fake) {
        ensure_finite("classifier output", v)?;
    }
    discriminator_update(d, real_labels, &fake, state, hyper, 1.0 - real_label_smoothing)
}

/// Supervised and adversarial parts of the classifier objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierLosses {
    /// Mean BCE over the labeled rows.
    pub supervised: f64,
    /// `-(1/m) Σ log D(R(x))` over all batch rows.
    pub adversarial: f64,
    /// `(1-α)·supervised + α·adversarial`.
    pub total: f64,
}

/// Classifier objective and its gradient with respect to the classifier's
/// flat parameters, through the frozen discriminator.
pub fn classifier_loss_and_grad(
    r: &MlpParams,
    d: &MlpParams,
    batch: &ClassifierBatch,
    alpha: f64,
) -> Result<(ClassifierLosses, Vec<f64>)> {
    let m1 = batch.labeled_x.rows();
    let x = batch.labeled_x.vstack(&batch.unlabeled_x)?;
    let (probs, trace) = r.forward_traced(&x)?;
    if let Some(v) = first_non_finite(&probs) {
        ensure_finite("classifier output", v)?;
    }
    let (sup, g_sup) = bce_loss(&probs.slice_rows(0, m1), &batch.labeled_y)?;
    let (scores, d_trace) = d.forward_traced(&probs)?;
    let (adv, g_scores) = r_adv_loss(scores.data())?;
    let (_, g_adv) = d.backward(&d_trace, &Matrix::column(&g_scores))?;
    let l = probs.cols();
    let mut grad_probs = g_adv.scale(alpha);
    for row in 0..m1 {
        for k in 0..l {
            grad_probs[(row, k)] += (1.0 - alpha) * g_sup[(row, k)];
        }
    }
    let (grad, _) = r.backward(&trace, &grad_probs)?;
    let losses = ClassifierLosses {
        supervised: sup,
        adversarial: adv,
        total: (1.0 - alpha) * sup + alpha * adv,
    };
    Ok((losses, grad))
}

/// One Adam descent step of the classifier. `d` is only read.
pub fn train_classifier_step(
    r: &mut MlpParams,
    d: &MlpParams,
    batch: &ClassifierBatch,
    alpha: f64,
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<ClassifierLosses> {
    let (losses, grad) = classifier_loss_and_grad(r, d, batch, alpha)?;
    ensure_finite("r_sup_loss", losses.supervised)?;
    ensure_finite("r_adv_loss", losses.adversarial)?;
    adam_update(r, &grad, state, hyper)?;
    Ok(losses)
}

/// One history snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub step: usize,
    pub d_loss: f64,
    pub r_sup_loss: f64,
    pub r_adv_loss: f64,
    pub avg_f1: Option<f64>,
    pub avg_auc: Option<f64>,
    pub avg_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<TrainRecord>,
}

pub const HISTORY_HEADER: &str = "step,d_loss,r_sup_loss,r_adv_loss,avg_f1,avg_auc,avg_acc";

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut s = String::from(HISTORY_HEADER);
        s.push('\n');
        for r in &self.records {
            writeln!(
                s,
                "{},{:?},{:?},{:?},{},{},{}",
                r.step,
                r.d_loss,
                r.r_sup_loss,
                r.r_adv_loss,
                opt(r.avg_f1),
                opt(r.avg_auc),
                opt(r.avg_acc)
            )
            .unwrap();
        }
        s
    }

    pub fn last(&self) -> Option<&TrainRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub classifier: MlpParams,
    pub discriminator: MlpParams,
    pub history: TrainHistory,
}

/// Runs the full alternating procedure on `view`. When `held_out` is given,
/// snapshots include its metrics.
pub fn train(config: &TrainConfig, view: &TrainingView, held_out: Option<&Dataset>) -> Result<TrainOutcome> {
    train_observed(config, view, held_out, |_, _, _| {})
}

/// [`train`] with a callback after every outer step, receiving the 1-based
/// step index and both networks.
pub fn train_observed(
    config: &TrainConfig,
    view: &TrainingView,
    held_out: Option<&Dataset>,
    mut observe: impl FnMut(usize, &MlpParams, &MlpParams),
) -> Result<TrainOutcome> {
    config.validate()?;
    if view.labels.rows() == 0 {
        return Err(Error::Protocol("training needs at least one labeled row".into()));
    }
    let (d_in, l) = (view.feature_dim(), view.num_labels());
    let (mut r, mut d) = init_models(config, d_in, l)?;
    let mut rng = RngStreams::new(config.seed);
    let mut r_state = AdamState::new(r.num_params());
    let mut d_state = AdamState::new(d.num_params());
    let m = config.m1 + if view.unlabeled_rows.is_empty() { 0 } else { config.m2 };
    let mut history = TrainHistory::default();
    let diverged = |step: usize, e: Error| match e {
        Error::Diverged { loss, value, .. } => Error::Diverged { step, loss, value },
        // A discriminator score outside (0, 1) can only come from NaN weights.
        Error::Domain(_) => Error::Diverged { step, loss: "discriminator score", value: f64::NAN },
        other => other,
    };

    for step in 1..=config.steps {
        let mut last_d = f64::NAN;
        for _ in 0..config.d_steps {
            let (images, real) = sample_d_batch(view, m, &mut rng.d_batches)?;
            last_d = train_discriminator_step(
                &r,
                &mut d,
                &images,
                &real,
                &mut d_state,
                &config.adam_d,
                config.real_label_smoothing,
            )
            .map_err(|e| diverged(step, e))?;
        }
        let mut last_r = None;
        for _ in 0..config.r_steps {
            let batch = sample_r_batch(view, config.m1, config.m2, &mut rng.r_batches)?;
            last_r = Some(
                train_classifier_step(&mut r, &d, &batch, config.alpha, &mut r_state, &config.adam_r)
                    .map_err(|e| diverged(step, e))?,
            );
        }
        if !r.is_finite() {
            return Err(Error::Diverged { step, loss: "classifier parameters", value: f64::NAN });
        }
        if !d.is_finite() {
            return Err(Error::Diverged { step, loss: "discriminator parameters", value: f64::NAN });
        }
        observe(step, &r, &d);

        if step % config.eval_every == 0 || step == config.steps {
            let losses = last_r.expect("r_steps >= 1");
            let metrics = held_out.map(|ds| evaluate(&r, ds, crate::eval::DEFAULT_THRESHOLD)).transpose()?;
            history.records.push(TrainRecord {
                step,
                d_loss: last_d,
                r_sup_loss: losses.supervised,
                r_adv_loss: losses.adversarial,
                avg_f1: metrics.as_ref().and_then(|m| m.avg_f1),
                avg_auc: metrics.as_ref().and_then(|m| m.avg_auc),
                avg_acc: metrics.as_ref().map(|m| m.avg_accuracy),
            });
        }
    }
    Ok(TrainOutcome {
        classifier: r,
        discriminator: d,
        history,
    })
}
