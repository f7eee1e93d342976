//! Exact discrete distributions over binary label vectors.
//!
//! A label pattern `y ∈ {0,1}^l` has unnormalized log-weight
//! `Σ_i unary_i·y_i + Σ_(i,j) strength·y_i·y_j`. Positive pair strengths
//! encode co-occurrence, negative ones mutual exclusion. With `l ≤ 16` the
//! whole table is enumerated, so probabilities, marginals and conditionals
//! are exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAX_LABELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPotential {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistributionSpec {
    pub num_labels: usize,
    pub unary_logits: Vec<f64>,
    pub pair_potentials: Vec<PairPotential>,
}

impl Default for LabelDistributionSpec {
    /// Eight labels with one strong co-occurrence pair `(0, 1)`, one
    /// exclusion pair `(4, 5)` and uneven marginals between 0.15 and 0.6.
    fn default() -> Self {
        Self {
            num_labels: 8,
            unary_logits: vec![-0.9, -1.1, -0.4, 0.3, -0.2, -0.3, -1.6, 0.2],
            pair_potentials: vec![
                PairPotential { i: 0, j: 1, strength: 2.0 },
                PairPotential { i: 4, j: 5, strength: -3.0 },
            ],
        }
    }
}

impl LabelDistributionSpec {
    /// Independent labels with the given logits.
    pub fn independent(unary_logits: Vec<f64>) -> Self {
        Self {
            num_labels: unary_logits.len(),
            unary_logits,
            pair_potentials: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_labels == 0 {
            return Err(Error::config("labels", "need at least one label"));
        }
        if self.num_labels > MAX_LABELS {
            return Err(Error::Capacity(format!(
                "{} labels exceeds the exact-enumeration limit of {MAX_LABELS}",
                self.num_labels
            )));
        }
        if self.unary_logits.len() != self.num_labels {
            return Err(Error::config(
                "unary",
                format!("expected {} logits, got {}", self.num_labels, self.unary_logits.len()),
            ));
        }
        if let Some(u) = self.unary_logits.iter().find(|u| !u.is_finite()) {
            return Err(Error::config("unary", format!("non-finite logit {u}")));
        }
        for p in &self.pair_potentials {
            if !(p.i < p.j && p.j < self.num_labels) {
                return Err(Error::config(
                    "pair",
                    format!("pair ({}, {}) must satisfy i < j < {}", p.i, p.j, self.num_labels),
                ));
            }
            if !p.strength.is_finite() {
                return Err(Error::config("pair", format!("non-finite strength {}", p.strength)));
            }
        }
        Ok(())
    }

    /// Unnormalized log-weight of a bit pattern (bit `k` is label `k`).
    pub fn log_potential(&self, pattern: usize) -> f64 {
        let bit = |k: usize| pattern >> k & 1 == 1;
        let unary: f64 = (0..self.num_labels)
            .filter(|&k| bit(k))
            .map(|k| self.unary_logits[k])
            .sum();
        let pairs: f64 = self
            .pair_potentials
            .iter()
            .filter(|p| bit(p.i) && bit(p.j))
            .map(|p| p.strength)
            .sum();
        unary + pairs
    }

    /// Short stable fingerprint of the spec, used as dataset provenance.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("labels={}\n", self.num_labels));
        for u in &self.unary_logits {
            h.update(format!("unary={:?}\n", u));
        }
        for p in &self.pair_potentials {
            h.update(format!("pair={},{},{:?}\n", p.i, p.j, p.strength));
        }
        let out = h.finalize();
        out[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Probabilities of all `2^l` label patterns, indexed by bit pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    num_labels: usize,
    probs: Vec<f64>,
}

impl ProbTable {
    pub fn new(num_labels: usize, probs: Vec<f64>) -> Result<Self> {
        if num_labels > MAX_LABELS {
            return Err(Error::Capacity(format!("{num_labels} labels")));
        }
        if probs.len() != 1 << num_labels {
            return Err(Error::dim("ProbTable::new", (probs.len(), 1), (1 << num_labels, 1)));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(Self { num_labels, probs })
    }

    pub fn point_mass(num_labels: usize, pattern: usize) -> Result<Self> {
        let mut probs = vec![0.0; 1 << num_labels];
        *probs
            .get_mut(pattern)
            .ok_or_else(|| Error::Domain(format!("pattern {pattern} out of range")))? = 1.0;
        Self::new(num_labels, probs)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(y_k = 1)` for each label.
    pub fn marginals(&self) -> Vec<f64> {
        (0..self.num_labels)
            .map(|k| {
                self.probs
                    .iter()
                    .enumerate()
                    .filter(|(pat, _)| pat >> k & 1 == 1)
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect()
    }

    /// `P(y_i = 1, y_j = 1)`.
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(pat, _)| pat >> i & 1 == 1 && pat >> j & 1 == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// `P(y_i = 1 | y_j = 1)`, or `None` when `P(y_j = 1) = 0`.
    pub fn conditional(&self, i: usize, j: usize) -> Option<f64> {
        let pj = self.marginals()[j];
        (pj > 0.0).then(|| self.joint(i, j) / pj)
    }

    /// Label vector of a pattern.
    pub fn pattern_row(&self, pattern: usize) -> Vec<f64> {
        (0..self.num_labels)
            .map(|k| f64::from((pattern >> k & 1) as u8))
            .collect()
    }
}

/// Exact table for `spec`, normalized by the full partition sum.
pub fn enumerate_distribution(spec: &LabelDistributionSpec) -> Result<ProbTable> {
    spec.validate()?;
    let n = 1usize << spec.num_labels;
    let logw: Vec<f64> = (0..n).map(|pat| spec.log_potential(pat)).collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logw.iter().map(|lw| (lw - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs = weights.into_iter().map(|w| w / z).collect();
    ProbTable::new(spec.num_labels, probs)
}

/// `n` i.i.d. label vectors drawn by inverse CDF over the patterns.
pub fn sample_labels(table: &ProbTable, n: usize, seed: u64) -> Matrix {
    let mut cdf = Vec::with_capacity(table.probs.len());
    let mut acc = 0.0;
    for p in &table.probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Matrix::zeros(n, table.num_labels);
    for r in 0..n {
        let u = rng.random::<f64>() * total;
        // First pattern whose cumulative mass exceeds u; zero-mass patterns
        // share their predecessor's cdf value and are never selected.
        let pat = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        for k in 0..table.num_labels {
            out[(r, k)] = f64::from((pat >> k & 1) as u8);
        }
    }
    out
}
