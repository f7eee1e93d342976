//! Independent reference implementations used as test oracles.
#![allow(dead_code, clippy::needless_range_loop)]

use advsemi::models::MlpParams;
use advsemi::Matrix;

/// Plain scalar-loop network: `w[k][i][j]` maps unit `i` of layer `k` to unit `j`.
#[derive(Clone, Debug)]
pub struct RefNet {
    pub w: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
}

fn ref_sigmoid(z: f64) -> f64 {
    let z = z.clamp(-30.0, 30.0);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl RefNet {
    pub fn from_params(p: &MlpParams) -> Self {
        let w = p
            .weights
            .iter()
            .map(|m| (0..m.rows()).map(|i| m.row(i).to_vec()).collect())
            .collect();
        Self { w, b: p.biases.clone() }
    }

    /// Largest absolute difference against a library network.
    pub fn max_diff(&self, p: &MlpParams) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, m) in p.weights.iter().enumerate() {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    worst = worst.max((m[(i, j)] - self.w[k][i][j]).abs());
                }
            }
            for (a, b) in p.biases[k].iter().zip(&self.b[k]) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    /// Activations of every layer for one input row (index 0 is the input).
    fn forward_row(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut acts = vec![x.to_vec()];
        let mut zs = Vec::new();
        let last = self.w.len() - 1;
        for k in 0..self.w.len() {
            let a = &acts[k];
            let out = self.b[k].len();
            let mut z = vec![0.0; out];
            for j in 0..out {
                let mut s = 0.0;
                for i in 0..a.len() {
                    s += a[i] * self.w[k][i][j];
                }
                z[j] = s + self.b[k][j];
            }
            let act: Vec<f64> = if k == last {
                z.iter().map(|&v| ref_sigmoid(v)).collect()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            zs.push(z);
            acts.push(act);
        }
        (acts, zs)
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward_row(x).0.pop().unwrap()
    }

    /// Gradient of mean-over-rows, sum-over-labels BCE, same layout as `w`/`b`.
    pub fn bce_grad(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        let mut gw: Vec<Vec<Vec<f64>>> = self.w.iter().map(|l| l.iter().map(|r| vec![0.0; r.len()]).collect()).collect();
        let mut gb: Vec<Vec<f64>> = self.b.iter().map(|r| vec![0.0; r.len()]).collect();
        let m = xs.len() as f64;
        for (x, y) in xs.iter().zip(ys) {
            let (acts, zs) = self.forward_row(x);
            let last = self.w.len() - 1;
            let mut delta: Vec<f64> = acts[last + 1].iter().zip(y).map(|(p, t)| (p - t) / m).collect();
            for k in (0..=last).rev() {
                for i in 0..acts[k].len() {
                    for j in 0..delta.len() {
                        gw[k][i][j] += acts[k][i] * delta[j];
                    }
                }
                for j in 0..delta.len() {
                    gb[k][j] += delta[j];
                }
                if k > 0 {
                    delta = (0..acts[k].len())
                        .map(|i| {
                            if zs[k - 1][i] > 0.0 {
                                (0..delta.len()).map(|j| self.w[k][i][j] * delta[j]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        (gw, gb)
    }
}

/// Scalar Adam over a list of parameter slots.
pub struct RefAdam {
    pub lr: f64,
    pub b1: f64,
    pub b2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl RefAdam {
    pub fn new(n: usize, lr: f64, b1: f64, b2: f64, eps: f64) -> Self {
        Self { lr, b1, b2, eps, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [&mut f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.b1.powi(self.t);
        let c2 = 1.0 - self.b2.powi(self.t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g;
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g;
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            **p -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Flattens gradients in the same slot order as [`ref_slots`].
pub fn flatten_grads(gw: &[Vec<Vec<f64>>], gb: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..gw.len() {
        for row in &gw[k] {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&gb[k]);
    }
    out
}

pub fn ref_slots(net: &mut RefNet) -> Vec<&mut f64> {
    let mut out = Vec::new();
    for (wl, bl) in net.w.iter_mut().zip(net.b.iter_mut()) {
        for row in wl.iter_mut() {
            out.extend(row.iter_mut());
        }
        out.extend(bl.iter_mut());
    }
    out
}

/// Every bias set to `v`, keeping finite-difference probes off ReLU kinks.
pub fn set_biases(p: &mut MlpParams, v: f64) {
    for b in p.biases.iter_mut() {
        b.iter_mut().for_each(|x| *x = v);
    }
}

pub fn col(m: &Matrix, j: usize) -> Vec<f64> {
    (0..m.rows()).map(|i| m[(i, j)]).collect()
}

// ---- metric oracles ----

pub fn f1_brute(pred: &[f64], truth: &[f64]) -> Option<f64> {
    let (mut tp, mut fp, mut fnn) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        match (*p == 1.0, *t == 1.0) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fnn += 1.0,
            _ => {}
        }
    }
    if tp + fp + fnn == 0.0 {
        return None;
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fnn > 0.0 { tp / (tp + fnn) } else { 0.0 };
    if precision + recall == 0.0 {
        Some(0.0)
    } else {
        Some(2.0 * precision * recall / (precision + recall))
    }
}

pub fn auc_brute(scores: &[f64], truth: &[f64]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(truth).filter(|(_, t)| **t == 1.0).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(truth).filter(|(_, t)| **t == 0.0).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

pub fn accuracy_brute(pred: &[f64], truth: &[f64]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / pred.len() as f64
}

pub fn marginals_brute(m: &Matrix) -> Vec<f64> {
    (0..m.cols())
        .map(|j| {
            let mut c = 0;
            for i in 0..m.rows() {
                if m[(i, j)] == 1.0 {
                    c += 1;
                }
            }
            c as f64 / m.rows() as f64
        })
        .collect()
}

/// `(i, j, |pred cond - truth cond|)` for retained pairs, and their mean.
pub fn conditional_brute(pred: &Matrix, truth: &Matrix, min_support: usize) -> (Vec<(usize, usize, f64)>, Option<f64>) {
    let l = truth.cols();
    let mut out = Vec::new();
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            let mut support = 0;
            let mut both = 0;
            let mut pred_j = 0;
            let mut pred_both = 0;
            for r in 0..truth.rows() {
                if truth[(r, j)] == 1.0 {
                    support += 1;
                    if truth[(r, i)] == 1.0 {
                        both += 1;
                    }
                }
                if pred[(r, j)] == 1.0 {
                    pred_j += 1;
                    if pred[(r, i)] == 1.0 {
                        pred_both += 1;
                    }
                }
            }
            // A conditional on a never-seen event is undefined.
            if support < min_support || support == 0 {
                continue;
            }
            let t = both as f64 / support as f64;
            let p = if pred_j == 0 { 0.0 } else { pred_both as f64 / pred_j as f64 };
            out.push((i, j, (p - t).abs()));
        }
    }
    let mean = if out.is_empty() {
        None
    } else {
        Some(out.iter().map(|x| x.2).sum::<f64>() / out.len() as f64)
    };
    (out, mean)
}

/// Plain supervised training with the same initialization and labeled-batch
/// draws as the adversarial trainer, but scalar loops throughout and no
/// discriminator. `each` sees the network after every outer step.
pub fn reference_supervised(
    cfg: &advsemi::TrainConfig,
    view: &advsemi::TrainingView,
    mut each: impl FnMut(usize, &RefNet),
) -> RefNet {
    use advsemi::models::init_params;
    use advsemi::seed::derive_seed;
    use rand::{Rng, SeedableRng};

    let spec = cfg.classifier_spec(view.feature_dim(), view.num_labels());
    let init = init_params(&spec, derive_seed(cfg.seed, "train.init_r")).unwrap();
    let mut net = RefNet::from_params(&init);
    let h = &cfg.adam_r;
    let mut adam = RefAdam::new(init.num_params(), h.lr, h.beta1, h.beta2, h.eps);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "train.r_batches"));
    let n_lab = view.labeled_rows.len();
    for step in 1..=cfg.steps {
        for _ in 0..cfg.r_steps {
            let picks: Vec<usize> = (0..cfg.m1).map(|_| rng.random_range(0..n_lab)).collect();
            let xs: Vec<Vec<f64>> = picks.iter().map(|&k| view.features.row(view.labeled_rows[k]).to_vec()).collect();
            let ys: Vec<Vec<f64>> = picks.iter().map(|&k| view.labels.row(k).to_vec()).collect();
            let (gw, gb) = net.bce_grad(&xs, &ys);
            let g = flatten_grads(&gw, &gb);
            adam.step(&mut ref_slots(&mut net), &g);
        }
        each(step, &net);
    }
    net
}
