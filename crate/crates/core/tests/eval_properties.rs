mod common;

use proptest::prelude::*;

use advsemi::eval::{
    accuracy, auc, binarize, conditional_diff, evaluate_with, f1_score, marginal_diff, EvalOptions, MetricsReport,
};
use advsemi::models::{init_params, ClassifierSpec};
use advsemi::{Dataset, Matrix};

use common::*;

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(lo..hi, rows * cols).prop_map(move |d| Matrix::new(rows, cols, d).unwrap())
}

fn bits(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(prop::bool::ANY, rows * cols)
        .prop_map(move |d| Matrix::new(rows, cols, d.into_iter().map(|b| f64::from(u8::from(b))).collect()).unwrap())
}

fn probs_and_truth() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..25, 1usize..5).prop_flat_map(|(n, l)| (matrix(n, l, 0.0, 1.0), bits(n, l)))
}

proptest! {
    #[test]
    fn auc_ignores_monotone_transforms((probs, truth) in probs_and_truth()) {
        for j in 0..probs.cols() {
            let s = col(&probs, j);
            let t = col(&truth, j);
            let warped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() + v * v * v).collect();
            prop_assert_eq!(auc(&s, &t), auc(&warped, &t));
        }
    }

    #[test]
    fn metrics_ignore_row_order((probs, truth) in probs_and_truth(), shift in 0usize..25) {
        let n = probs.rows();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        if perm.iter().collect::<std::collections::BTreeSet<_>>().len() != n {
            return Ok(());
        }
        let pred = binarize(&probs, 0.5).unwrap();
        let (pp, tp) = (pred.select_rows(&perm), truth.select_rows(&perm));
        for j in 0..pred.cols() {
            let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(x), Some(y)) => (x - y).abs() < 1e-12,
                (a, b) => a == b,
            };
            prop_assert!(close(f1_score(&col(&pred, j), &col(&truth, j)), f1_score(&col(&pp, j), &col(&tp, j))));
            prop_assert!((accuracy(&col(&pred, j), &col(&truth, j)) - accuracy(&col(&pp, j), &col(&tp, j))).abs() < 1e-12);
        }
        prop_assert_eq!(marginal_diff(&pred, &truth).unwrap(), marginal_diff(&pp, &tp).unwrap());
        let a = conditional_diff(&pred, &truth, 2).unwrap();
        let b = conditional_diff(&pp, &tp, 2).unwrap();
        prop_assert_eq!(a.pairs.len(), b.pairs.len());
        for (x, y) in a.pairs.iter().zip(&b.pairs) {
            prop_assert!((x.abs_diff - y.abs_diff).abs() < 1e-12);
        }
    }

    #[test]
    fn averages_are_means_of_defined_labels((probs, truth) in probs_and_truth()) {
        let r = MetricsReport::from_probs(&probs, &truth, &EvalOptions::default()).unwrap();
        let mean_def = |v: &[Option<f64>]| {
            let d: Vec<f64> = v.iter().flatten().copied().collect();
            (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
        };
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => (x - y).abs() < 1e-12,
            (a, b) => a == b,
        };
        prop_assert!(close(r.avg_f1, mean_def(&r.per_label_f1)));
        prop_assert!(close(r.avg_auc, mean_def(&r.per_label_auc)));
        let acc_mean = r.per_label_accuracy.iter().sum::<f64>() / r.per_label_accuracy.len() as f64;
        prop_assert!((r.avg_accuracy - acc_mean).abs() < 1e-12);
        let rates = r.per_label_f1.iter().chain(&r.per_label_auc).flatten()
            .chain(&r.per_label_accuracy).chain(&r.marginal_pred).chain(&r.marginal_truth).chain(&r.marginal_abs_diff);
        for v in rates {
            prop_assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn raising_threshold_never_adds_ones(probs in matrix(6, 3, 0.0, 1.0), t1 in 0.01f64..0.99, dt in 0.0f64..0.5) {
        let t2 = (t1 + dt).min(0.999);
        let lo = binarize(&probs, t1).unwrap();
        let hi = binarize(&probs, t2).unwrap();
        for (a, b) in lo.data().iter().zip(hi.data()) {
            prop_assert!(b <= a);
        }
    }

    #[test]
    fn threshold_never_changes_auc((probs, truth) in probs_and_truth(), t in 0.05f64..0.95) {
        let a = MetricsReport::from_probs(&probs, &truth, &EvalOptions::default()).unwrap();
        let b = MetricsReport::from_probs(&probs, &truth, &EvalOptions { threshold: t, ..EvalOptions::default() }).unwrap();
        prop_assert_eq!(a.per_label_auc, b.per_label_auc);
    }
}

#[test]
fn evaluate_matches_scalar_pipeline() {
    for seed in 0..10u64 {
        let spec = ClassifierSpec { input_dim: 5, hidden_dims: vec![7, 6], num_labels: 3 };
        let mut params = init_params(&spec, seed).unwrap();
        for b in params.biases.iter_mut() {
            b.iter_mut().enumerate().for_each(|(k, v)| *v = 0.1 * k as f64 - 0.1);
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            for k in 0..5 {
                x.push(((i * 31 + k * 17 + seed as usize * 7) % 23) as f64 / 5.0 - 2.0);
            }
            for k in 0..3 {
                y.push(f64::from(u8::from((i * 13 + k * 5 + seed as usize).is_multiple_of(3))));
            }
        }
        let ds = Dataset::new(Matrix::new(40, 5, x).unwrap(), Matrix::new(40, 3, y).unwrap()).unwrap();
        let opts = EvalOptions { threshold: 0.5, min_support: 3 };
        let report = evaluate_with(&params, &ds, &opts).unwrap();

        let net = RefNet::from_params(&params);
        let probs: Vec<Vec<f64>> = (0..40).map(|i| net.predict(ds.features.row(i))).collect();
        let pred = Matrix::from_rows(
            &probs.iter().map(|r| r.iter().map(|p| f64::from(u8::from(*p >= 0.5))).collect::<Vec<_>>()).collect::<Vec<_>>(),
        )
        .unwrap();
        for j in 0..3 {
            let s: Vec<f64> = probs.iter().map(|r| r[j]).collect();
            let (p, t) = (col(&pred, j), col(&ds.labels, j));
            let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(x), Some(y)) => (x - y).abs() < 1e-12,
                (a, b) => a == b,
            };
            assert!(close(report.per_label_f1[j], f1_brute(&p, &t)));
            assert!(close(report.per_label_auc[j], auc_brute(&s, &t)));
            assert!((report.per_label_accuracy[j] - accuracy_brute(&p, &t)).abs() < 1e-12);
        }
        assert_eq!(report.marginal_pred, marginals_brute(&pred));
        let (_, mean) = conditional_brute(&pred, &ds.labels, 3);
        match (report.conditional_abs_diff_mean, mean) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
            (a, b) => assert_eq!(a, b),
        }
    }
}

proptest! {
    #[test]
    fn report_json_round_trips_exactly((probs, truth) in probs_and_truth()) {
        let r = MetricsReport::from_probs(&probs, &truth, &EvalOptions { threshold: 0.5, min_support: 1 }).unwrap();
        let back = MetricsReport::from_json(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }
}
