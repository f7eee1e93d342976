use std::path::PathBuf;

use advsemi::experiment::ExperimentConfig;

fn shipped(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(path).unwrap()
}

#[test]
fn example_config_spells_out_the_defaults() {
    let cfg = shipped("example.cfg");
    let defaults = ExperimentConfig::default();
    assert_eq!(ExperimentConfig { out_dir: defaults.out_dir.clone(), ..cfg }, defaults);
}

#[test]
fn alpha_benefit_config_is_defaults_with_small_classifier() {
    let cfg = shipped("alpha_benefit.cfg");
    let mut want = ExperimentConfig::default();
    want.train.classifier_hidden = vec![8];
    want.train.eval_every = want.train.steps;
    assert_eq!(ExperimentConfig { out_dir: want.out_dir.clone(), ..cfg }, want);
}
