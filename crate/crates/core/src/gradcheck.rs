//! Central finite-difference gradient checking.

use crate::error::{Error, Result};

/// Compares the analytic gradient returned by `loss_fn` at `params` against
/// central differences with the given `step`, perturbing one coordinate of a
/// flattened parameter copy at a time.
///
/// Returns the maximum over coordinates of
/// `|analytic - numeric| / max(1, |numeric|)`.
pub fn grad_check<F>(mut loss_fn: F, params: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(step > 0.0) {
        return Err(Error::Domain(format!("finite-difference step {step} must be > 0")));
    }
    let (loss, analytic) = loss_fn(params)?;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss at base point = {loss}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::dim("grad_check", (analytic.len(), 1), (params.len(), 1)));
    }
    let mut probe = params.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..params.len() {
        probe[i] = params[i] + step;
        let (plus, _) = loss_fn(&probe)?;
        probe[i] = params[i] - step;
        let (minus, _) = loss_fn(&probe)?;
        probe[i] = params[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!("loss while perturbing coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * step);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
