//! Experiment harness: configuration, synthetic data, image-patch ingestion,
//! the joint design/learning driver and Monte-Carlo sweeps with CSV output.

pub mod config;
pub mod dct;
pub mod joint;
pub mod patches;
pub mod sapiro;
pub mod sweep;
pub mod synth;

pub use config::{derive_seed, DesignMethod, ExperimentConfig, Learner, ReconMethod};
pub use dct::overcomplete_dct;
pub use joint::{design_for_method, joint_optimize, JointResult};
pub use patches::extract_patches;
pub use sweep::{run_sweep, run_trial, TrialOutcome};
pub use synth::gen_synthetic;
