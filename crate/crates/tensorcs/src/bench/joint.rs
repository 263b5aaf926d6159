//! Joint driver alternating sensing design and coupled dictionary learning.

use super::config::{derive_seed, DesignMethod, ExperimentConfig, Learner};
use super::dct::overcomplete_dct;
use super::sapiro::design_sapiro_stub;
use super::synth::{gaussian_sensing, measure};
use crate::design::{design_gradient, design_separable, DesignConfig};
use crate::dict::{LearnRun, TrainingSet};
use crate::error::{Error, Result};
use crate::metrics::mse;
use crate::recon::{kron_omp, KronOperator};
use crate::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of training slices used for the stopping-proxy reconstruction.
const PROXY_SLICE_CAP: usize = 64;

#[derive(Debug, Clone)]
pub struct JointResult {
    pub phis: Vec<Matrix>,
    pub psis: Vec<Matrix>,
    /// Proxy PSNR after each outer iteration (length 1 when learner = none).
    pub psnr_trace: Vec<f64>,
    /// Number of calls into a design optimizer (0 for the Gaussian baseline).
    pub design_calls: usize,
    /// Dictionary-learning iterations executed.
    pub iterations: usize,
}

/// Produces sensing factors for the selected method. Returns the factors and
/// whether an optimizer was invoked (false only for the Gaussian baseline,
/// which passes `phis0` through untouched).
pub fn design_for_method(
    method: DesignMethod,
    psis: &[Matrix],
    ms: &[usize],
    phis0: &[Matrix],
    dcfg: &DesignConfig,
    seed: u64,
) -> Result<(Vec<Matrix>, bool)> {
    match method {
        DesignMethod::Gaussian => Ok((phis0.to_vec(), false)),
        DesignMethod::Approach1 => Ok((design_separable(psis, ms)?.phis, true)),
        DesignMethod::Approach2 => Ok((design_gradient(psis, phis0, dcfg)?.phis, true)),
        DesignMethod::SeparableSapiroStub => {
            Ok((design_sapiro_stub(psis, ms, 50, seed)?.phis, true))
        }
    }
}

/// Mean reconstruction PSNR (peak 1.0) over a capped prefix of the training
/// slices, sensed noiselessly with the current factors.
fn proxy_psnr(
    train: &TrainingSet,
    phis: &[Matrix],
    psis: &[Matrix],
    k: usize,
) -> Result<f64> {
    let ds: Vec<Matrix> = phis.iter().zip(psis).map(|(p, d)| p * d).collect();
    let op = KronOperator::new(ds)?;
    let t = train.n_slices().min(PROXY_SLICE_CAP);
    let mut acc = 0.0;
    let mut used = 0usize;
    for idx in 0..t {
        let x = train.signals().slice_last(idx);
        let y = measure(&x, phis)?;
        let Ok(s) = kron_omp(&op, &y, k, 1e-9) else {
            continue;
        };
        let mut xhat = s.densify();
        for (i, psi) in psis.iter().enumerate() {
            xhat = xhat.mode_product(psi, i)?;
        }
        acc += mse(&x, &xhat)?;
        used += 1;
    }
    if used == 0 {
        return Err(Error::NumericalFailure(
            "proxy reconstruction failed on every slice".into(),
        ));
    }
    let m = (acc / used as f64).max(1e-300);
    Ok(10.0 * (1.0 / m).log10())
}

/// Alternates sensing design and one coupled dictionary-learning iteration
/// until the proxy PSNR changes by less than 0.01 dB or the iteration cap is
/// reached. Dictionaries start from overcomplete DCT factors; sensing factors
/// start Gaussian.
pub fn joint_optimize(train: &TrainingSet, cfg: &ExperimentConfig) -> Result<JointResult> {
    cfg.validate()?;
    if train.n_modes() != cfg.n.len() {
        return Err(Error::invalid("joint_optimize: training order mismatch"));
    }
    for (i, &ni) in cfg.n.iter().enumerate() {
        if train.signals().shape()[i] != ni {
            return Err(Error::invalid("joint_optimize: training mode size mismatch"));
        }
    }
    let coupled = match cfg.learner {
        Learner::None | Learner::Ctksvd => true,
        Learner::Tksvd => false,
        Learner::Cksvd => {
            return Err(Error::invalid(
                "joint_optimize: the vectorized baseline learner is not separable; use ctksvd or tksvd",
            ))
        }
    };

    let mut psis: Vec<Matrix> = cfg
        .n
        .iter()
        .zip(&cfg.n_hat)
        .map(|(&n, &nh)| overcomplete_dct(n, nh))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let init_phis = gaussian_sensing(&cfg.n, &cfg.m, &mut rng);

    let mut phis = init_phis.clone();
    let mut design_calls = 0usize;
    let mut trace = Vec::new();

    if cfg.learner == Learner::None {
        let (new_phis, called) =
            design_for_method(cfg.design, &psis, &cfg.m, &init_phis, &cfg.design_cfg, cfg.seed)?;
        phis = new_phis;
        design_calls += called as usize;
        trace.push(proxy_psnr(train, &phis, &psis, cfg.sparsity_k)?);
        return Ok(JointResult {
            phis,
            psis,
            psnr_trace: trace,
            design_calls,
            iterations: 0,
        });
    }

    let mut lcfg = cfg.learn_cfg.clone();
    lcfg.coupled = coupled;
    lcfg.outer_iters = 1;

    let mut iterations = 0usize;
    for _ in 0..cfg.joint_iters {
        let (new_phis, called) =
            design_for_method(cfg.design, &psis, &cfg.m, &phis, &cfg.design_cfg, cfg.seed)?;
        phis = new_phis;
        design_calls += called as usize;

        let mut run = LearnRun::new(train, &phis, &psis, &lcfg)?;
        run.step()?;
        psis = run.psis().to_vec();
        iterations += 1;

        let p = proxy_psnr(train, &phis, &psis, cfg.sparsity_k)?;
        let done = trace
            .last()
            .is_some_and(|prev: &f64| (p - prev).abs() < 0.01);
        trace.push(p);
        if done {
            break;
        }
    }

    Ok(JointResult {
        phis,
        psis,
        psnr_trace: trace,
        design_calls,
        iterations,
    })
}
