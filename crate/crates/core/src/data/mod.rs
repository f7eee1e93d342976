//! Synthetic structured-label data: an exact label distribution, feature
//! synthesis, missing-label masking and the dataset file format.

mod dataset;
mod distribution;
mod features;
mod io;

pub use dataset::{apply_missing, Dataset, GenerationSpec, TrainingView};
pub use distribution::{
    enumerate_distribution, sample_labels, LabelDistributionSpec, PairPotential, ProbTable,
    MAX_LABELS,
};
pub use features::synth_features;
pub use io::{load_dataset, save_dataset, sidecar_path, DatasetMeta};
