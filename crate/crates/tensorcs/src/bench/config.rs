//! Experiment configuration and deterministic seed derivation.

use crate::design::DesignConfig;
use crate::dict::LearnConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMethod {
    #[default]
    Gaussian,
    Approach1,
    Approach2,
    SeparableSapiroStub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    #[default]
    None,
    Tksvd,
    Ctksvd,
    Cksvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconMethod {
    #[default]
    KronOmp,
    Omp,
    Fista,
}

fn default_one() -> usize {
    1
}
fn default_k() -> usize {
    4
}
fn default_t() -> usize {
    500
}
fn default_lambda() -> f64 {
    1e-3
}
fn default_fista_iters() -> usize {
    500
}
fn default_joint_iters() -> usize {
    20
}

/// One experiment point: sizes, method selection, and sub-configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Signal mode sizes N_i.
    pub n: Vec<usize>,
    /// Dictionary column counts per mode.
    pub n_hat: Vec<usize>,
    /// Measurement counts per mode.
    pub m: Vec<usize>,
    #[serde(default = "default_k")]
    pub sparsity_k: usize,
    #[serde(default = "default_one")]
    pub trials: usize,
    #[serde(default)]
    pub noise_var: f64,
    #[serde(default = "default_t")]
    pub training_count: usize,
    #[serde(default)]
    pub design: DesignMethod,
    #[serde(default)]
    pub learner: Learner,
    #[serde(default)]
    pub recon: ReconMethod,
    #[serde(default = "default_lambda")]
    pub fista_lambda: f64,
    #[serde(default = "default_fista_iters")]
    pub fista_iters: usize,
    /// Cap on outer iterations of the joint design/learning driver.
    #[serde(default = "default_joint_iters")]
    pub joint_iters: usize,
    #[serde(default)]
    pub design_cfg: DesignConfig,
    #[serde(default)]
    pub learn_cfg: LearnConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let order = self.n.len();
        if order == 0 || self.n_hat.len() != order || self.m.len() != order {
            return Err(Error::invalid(
                "n, n_hat and m must be non-empty lists of equal length",
            ));
        }
        for i in 0..order {
            if self.n[i] == 0 || self.m[i] == 0 {
                return Err(Error::invalid("mode sizes must be positive"));
            }
            if !(self.m[i] <= self.n[i] && self.n[i] <= self.n_hat[i]) {
                return Err(Error::invalid(format!(
                    "mode {i}: need M <= N <= N_hat, got {} <= {} <= {}",
                    self.m[i], self.n[i], self.n_hat[i]
                )));
            }
        }
        let big_n: usize = self.n_hat.iter().product();
        if self.sparsity_k == 0 || self.sparsity_k > big_n {
            return Err(Error::invalid("sparsity_k must be in 1..=prod(n_hat)"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.training_count == 0 {
            return Err(Error::invalid("training_count must be >= 1"));
        }
        if self.noise_var < 0.0 {
            return Err(Error::invalid("noise_var must be >= 0"));
        }
        self.design_cfg.validate()?;
        self.learn_cfg.validate()?;
        Ok(())
    }
}

/// Stateless per-trial seed derivation (splitmix64 over master ^ counter).
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
