use proptest::prelude::*;

use advsemi::data::{apply_missing, enumerate_distribution, load_dataset, save_dataset, PairPotential};
use advsemi::models::{init_params, ClassifierSpec, MlpParams};
use advsemi::{Dataset, LabelDistributionSpec, Matrix};

fn spec() -> impl Strategy<Value = LabelDistributionSpec> {
    (1usize..7).prop_flat_map(|l| {
        let pairs = prop::collection::vec((0..l, 0..l, -4.0f64..4.0), 0..4).prop_map(|v| {
            v.into_iter()
                .filter(|(i, j, _)| i < j)
                .map(|(i, j, strength)| PairPotential { i, j, strength })
                .collect::<Vec<_>>()
        });
        (prop::collection::vec(-3.0f64..3.0, l), pairs).prop_map(move |(unary, pairs)| LabelDistributionSpec {
            num_labels: l,
            unary_logits: unary,
            pair_potentials: pairs,
        })
    })
}

/// Potential of a pattern straight from the definition.
fn potential(s: &LabelDistributionSpec, pattern: usize) -> f64 {
    let on = |k: usize| pattern >> k & 1 == 1;
    let mut e = 0.0;
    for (k, u) in s.unary_logits.iter().enumerate() {
        if on(k) {
            e += u;
        }
    }
    for p in &s.pair_potentials {
        if on(p.i) && on(p.j) {
            e += p.strength;
        }
    }
    e
}

proptest! {
    #[test]
    fn enumeration_matches_definition(s in spec()) {
        let table = enumerate_distribution(&s).unwrap();
        let weights: Vec<f64> = (0..1usize << s.num_labels).map(|p| potential(&s, p).exp()).collect();
        let z: f64 = weights.iter().sum();
        prop_assert!((table.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (p, w) in table.probs().iter().zip(&weights) {
            prop_assert!((p - w / z).abs() <= 1e-12);
        }
    }

    #[test]
    fn masking_count_and_values(n in 1usize..200, rate in 0.0f64..0.99, seed in 0u64..1000) {
        let ds = Dataset::new(Matrix::filled(n, 2, 0.5), Matrix::zeros(n, 3)).unwrap();
        let m = apply_missing(&ds, rate, seed).unwrap();
        prop_assert_eq!(m.unlabeled_rows().len(), (rate * n as f64).floor() as usize);
        prop_assert_eq!(&m.features, &ds.features);
        prop_assert_eq!(&m.labels, &ds.labels);
    }

    #[test]
    fn csv_round_trip_is_exact(
        feats in prop::collection::vec(prop_oneof![-1e6f64..1e6, Just(-0.0), Just(1e-300), Just(f64::MAX)], 12),
        labels in prop::collection::vec(prop::bool::ANY, 8),
        mask in prop::collection::vec(prop::bool::ANY, 4),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = Dataset::with_mask(
            Matrix::new(4, 3, feats).unwrap(),
            Matrix::new(4, 2, labels.into_iter().map(|b| f64::from(u8::from(b))).collect()).unwrap(),
            mask,
        ).unwrap();
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        let bits = |m: &Matrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.features), bits(&ds.features));
        prop_assert_eq!(back.labeled_mask, ds.labeled_mask);
    }

    #[test]
    fn checkpoint_round_trip_is_exact(seed in 0u64..10_000, scale in prop_oneof![Just(1.0), Just(1e-200), Just(1e200)]) {
        let mut p = init_params(&ClassifierSpec { input_dim: 3, hidden_dims: vec![4], num_labels: 2 }, seed).unwrap();
        let flat: Vec<f64> = p.to_flat().iter().map(|v| v * scale).collect();
        p.set_flat(&flat).unwrap();
        let back = MlpParams::from_checkpoint_str(&p.to_checkpoint_string(), std::path::Path::new("mem")).unwrap();
        let bits = |q: &MlpParams| q.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&p));
    }
}
