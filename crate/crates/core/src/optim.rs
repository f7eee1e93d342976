//! Adam with bias correction over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Domain(format!("adam lr {} must be >= 0", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Domain(format!("adam {name} {b} outside [0, 1)")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Domain(format!("adam eps {} must be > 0", self.eps)));
        }
        Ok(())
    }
}

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::dim("adam_step", (n, 1), (grads.len(), state.m.len())));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - hyper.beta1.powi(t);
    let bc2 = 1.0 - hyper.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
        *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![0.3, -1.2, 4.0];
        let before = p.clone();
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, &AdamHyper::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_regardless_of_scale() {
        let h = AdamHyper::default();
        let g = [1e-3, -5.0, 200.0, -0.02];
        let mut p = vec![0.0; 4];
        let mut s = AdamState::new(4);
        adam_step(&mut p, &g, &mut s, &h).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            assert!((pi.abs() - h.lr).abs() < 1e-7, "{pi}");
            assert_eq!(pi.signum(), -gi.signum());
        }
    }

    #[test]
    fn two_step_hand_trace() {
        // lr 0.1, beta1 0.5, beta2 0.75
        // t=1, g=2: m=1, v=1, m̂=1/0.5=2, v̂=1/0.25=4, p = 1 - 0.1*2/2 = 0.9
        // t=2, g=1: m=1, v=1, m̂=1/0.75, v̂=1/0.4375, p = 0.9 - 0.1*(4/3)*sqrt(0.4375)
        let h = AdamHyper {
            lr: 0.1,
            beta1: 0.5,
            beta2: 0.75,
            eps: 1e-300,
        };
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[2.0], &mut s, &h).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-12);
        adam_step(&mut p, &[1.0], &mut s, &h).unwrap();
        let want = 0.9 - 0.1 * (4.0 / 3.0) * 0.4375f64.sqrt();
        assert!((p[0] - want).abs() < 1e-12, "{} vs {want}", p[0]);
        assert_eq!(s.m, vec![1.0]);
        assert_eq!(s.v, vec![1.0]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut s = AdamState::new(2);
        assert!(adam_step(&mut [0.0, 0.0], &[1.0], &mut s, &AdamHyper::default()).is_err());
    }

    proptest! {
        #[test]
        fn zero_lr_is_identity(
            p in prop::collection::vec(-10.0f64..10.0, 1..8),
            g in prop::collection::vec(-10.0f64..10.0, 8),
        ) {
            let h = AdamHyper { lr: 0.0, ..AdamHyper::default() };
            let mut q = p.clone();
            let mut s = AdamState::new(p.len());
            for _ in 0..3 {
                adam_step(&mut q, &g[..p.len()], &mut s, &h).unwrap();
            }
            prop_assert_eq!(q, p);
            prop_assert!(s.v.iter().all(|&v| v >= 0.0));
        }
    }
}
