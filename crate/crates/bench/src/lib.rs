//! Deterministic inputs shared by the benchmarks.

use advsemi::data::apply_missing;
use advsemi::{Dataset, GenerationSpec, Matrix};

/// `rows x cols` matrix with a fixed, non-trivial fill.
pub fn filled(rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|k| ((k * 37 % 101) as f64 - 50.0) / 25.0).collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// Default synthetic data of `n` rows with half the labels hidden.
pub fn masked_dataset(n: usize) -> Dataset {
    let ds = GenerationSpec { n, ..GenerationSpec::default() }.generate(1).unwrap();
    apply_missing(&ds, 0.5, 2).unwrap()
}
