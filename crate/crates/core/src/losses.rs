//! Supervised, discriminator and adversarial losses with exact gradients.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Multi-label binary cross-entropy, summed over labels and averaged over
/// the batch rows. Returns the loss and its gradient with respect to `pred`.
pub fn bce_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::dim("bce_loss", pred.shape(), target.shape()));
    }
    if pred.rows() == 0 {
        return Err(Error::Domain("bce_loss on an empty batch".into()));
    }
    if let Some(p) = pred.data().iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("prediction {p} outside [0, 1]")));
    }
    if let Some(y) = target.data().iter().find(|y| !(0.0..=1.0).contains(*y)) {
        return Err(Error::Domain(format!("target {y} outside [0, 1]")));
    }
    let inv_m = 1.0 / pred.rows() as f64;
    let mut loss = 0.0;
    let grad = pred.zip_map(target, |p, y| {
        let p = clamp_prob(p);
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        -inv_m * (y / p - (1.0 - y) / (1.0 - p))
    })?;
    Ok((loss * inv_m, grad))
}

fn check_scores(name: &str, scores: &[f64]) -> Result<()> {
    match scores.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
        Some(s) => Err(Error::Domain(format!("{name} score {s} not strictly inside (0, 1)"))),
        None => Ok(()),
    }
}

/// Discriminator loss `-(1/m) Σ [log D(real) + log(1 - D(fake))]`.
///
/// Returns `(loss, d loss / d real_i, d loss / d fake_i)`.
pub fn d_loss(d_real: &[f64], d_fake: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    d_loss_with_target(d_real, d_fake, 1.0)
}

/// [`d_loss`] with the real samples' target set to `real_target` instead of
/// 1 (one-sided label smoothing). `real_target = 1` is exactly [`d_loss`].
pub fn d_loss_with_target(
    d_real: &[f64],
    d_fake: &[f64],
    real_target: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if d_real.len() != d_fake.len() {
        return Err(Error::dim("d_loss", (d_real.len(), 1), (d_fake.len(), 1)));
    }
    if d_real.is_empty() {
        return Err(Error::Domain("d_loss on an empty batch".into()));
    }
    if !(0.0..=1.0).contains(&real_target) {
        return Err(Error::Domain(format!("real target {real_target} outside [0, 1]")));
    }
    check_scores("real", d_real)?;
    check_scores("fake", d_fake)?;
    let inv_m = 1.0 / d_real.len() as f64;
    let t = real_target;
    let mut loss = 0.0;
    let grad_real = d_real
        .iter()
        .map(|&r| {
            let r = clamp_prob(r);
            loss -= t * r.ln() + (1.0 - t) * (1.0 - r).ln();
            -inv_m * (t / r - (1.0 - t) / (1.0 - r))
        })
        .collect();
    let grad_fake = d_fake
        .iter()
        .map(|&f| {
            let f = clamp_prob(f);
            loss -= (1.0 - f).ln();
            inv_m / (1.0 - f)
        })
        .collect();
    Ok((loss * inv_m, grad_real, grad_fake))
}

/// Non-saturating classifier adversarial loss `-(1/m) Σ log D(R(x))`.
pub fn r_adv_loss(d_fake: &[f64]) -> Result<(f64, Vec<f64>)> {
    if d_fake.is_empty() {
        return Err(Error::Domain("r_adv_loss on an empty batch".into()));
    }
    check_scores("fake", d_fake)?;
    let inv_m = 1.0 / d_fake.len() as f64;
    let mut loss = 0.0;
    let grad = d_fake
        .iter()
        .map(|&f| {
            let f = clamp_prob(f);
            loss -= f.ln();
            -inv_m / f
        })
        .collect();
    Ok((loss * inv_m, grad))
}
