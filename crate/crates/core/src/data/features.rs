use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::matrix::Matrix;
use crate::seed::derive_seed;

/// Synthetic features for a label matrix:
/// `x = y·W + tanh(y·V) + ε` with `W`, `V` fixed `l×d` standard normal
/// matrices and `ε ~ N(0, noise_sigma²)`, all drawn from `seed`.
pub fn synth_features(labels: &Matrix, d: usize, noise_sigma: f64, seed: u64) -> Matrix {
    let l = labels.cols();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let draw = |label: &str, rows: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, label));
        let data = (0..rows * d).map(|_| std.sample(&mut rng)).collect();
        Matrix::new(rows, d, data).expect("sized")
    };
    let w = draw("features.linear", l);
    let v = draw("features.tanh", l);
    let eps = draw("features.noise", labels.rows());
    let linear = labels.matmul(&w).expect("labels are n×l");
    let bent = labels.matmul(&v).expect("labels are n×l").map(f64::tanh);
    linear
        .add(&bent)
        .and_then(|x| x.add(&eps.scale(noise_sigma.max(0.0))))
        .expect("same shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{enumerate_distribution, sample_labels, LabelDistributionSpec};

    #[test]
    fn noiseless_identical_labels_give_identical_rows() {
        let y = Matrix::from_rows(&[[1.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]).unwrap();
        let x = synth_features(&y, 5, 0.0, 4);
        assert_eq!(x.row(0), x.row(1));
        assert_ne!(x.row(0), x.row(2));
    }

    #[test]
    fn zero_labels_noiseless_give_zero_features() {
        let x = synth_features(&Matrix::zeros(4, 3), 6, 0.0, 1);
        assert!(x.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let y = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(synth_features(&y, 4, 0.3, 9), synth_features(&y, 4, 0.3, 9));
        assert_ne!(synth_features(&y, 4, 0.3, 9), synth_features(&y, 4, 0.3, 10));
    }

    /// Logistic regression probe by plain gradient descent: label 0 must be
    /// linearly recoverable from the features at noise 0.1.
    #[test]
    fn linear_probe_recovers_a_label() {
        let table = enumerate_distribution(&LabelDistributionSpec::default()).unwrap();
        let y = sample_labels(&table, 2000, 5);
        let x = synth_features(&y, 16, 0.1, 6);
        let (train, test) = (0..1500, 1500..2000);
        let mut w = vec![0.0; 16];
        let mut b = 0.0;
        for _ in 0..500 {
            let mut gw = vec![0.0; 16];
            let mut gb = 0.0;
            for r in train.clone() {
                let z: f64 = x.row(r).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
                let err = 1.0 / (1.0 + (-z).exp()) - y[(r, 0)];
                for (g, xi) in gw.iter_mut().zip(x.row(r)) {
                    *g += err * xi;
                }
                gb += err;
            }
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= 0.5 * g / 1500.0;
            }
            b -= 0.5 * gb / 1500.0;
        }
        let correct = test
            .clone()
            .filter(|&r| {
                let z: f64 = x.row(r).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
                (z >= 0.0) == (y[(r, 0)] == 1.0)
            })
            .count();
        let acc = correct as f64 / test.len() as f64;
        assert!(acc > 0.9, "probe accuracy {acc}");
    }
}
