//! Semi-supervised multi-label classification with an adversarial
//! label-structure prior.
//!
//! A classifier `R` maps features to per-label probabilities. A discriminator
//! `D` learns to tell `R`'s predicted label vectors from real label vectors of
//! the labeled set, and `R` is trained on a weighted mix of supervised
//! cross-entropy and the non-saturating adversarial loss against `D`. Unlabeled
//! rows contribute through the adversarial term only.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gradcheck;
pub mod layer;
pub mod losses;
pub mod matrix;
pub mod models;
pub mod optim;
pub mod seed;
pub mod trainer;

pub use data::{Dataset, GenerationSpec, LabelDistributionSpec, ProbTable, TrainingView};
pub use error::{Error, Result};
pub use eval::{evaluate, MetricsReport};
pub use matrix::Matrix;
pub use models::{ClassifierSpec, DiscriminatorSpec, MlpParams};
pub use optim::{AdamHyper, AdamState};
pub use trainer::{train, TrainConfig, TrainHistory, TrainOutcome};
