//! Synthetic data generation for the experiment harness.

use super::config::ExperimentConfig;
use crate::dict::TrainingSet;
use crate::error::Result;
use crate::recon::SparseTensor;
use crate::tensor::Tensor;
use crate::Matrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random Gaussian dictionaries with unit-norm columns, one per mode.
pub fn gaussian_dictionaries(n: &[usize], n_hat: &[usize], rng: &mut ChaCha8Rng) -> Vec<Matrix> {
    n.iter()
        .zip(n_hat)
        .map(|(&ni, &nhi)| {
            let mut d = Matrix::from_fn(ni, nhi, |_, _| rng.sample::<f64, _>(StandardNormal));
            for mut c in d.column_iter_mut() {
                let nrm = c.norm();
                if nrm > 0.0 {
                    c /= nrm;
                }
            }
            d
        })
        .collect()
}

/// Random Gaussian sensing matrices, each rescaled so that the Frobenius
/// norm of the M x N factor equals sqrt(N).
pub fn gaussian_sensing(n: &[usize], m: &[usize], rng: &mut ChaCha8Rng) -> Vec<Matrix> {
    n.iter()
        .zip(m)
        .map(|(&ni, &mi)| {
            let mut p = Matrix::from_fn(mi, ni, |_, _| rng.sample::<f64, _>(StandardNormal));
            let f = p.norm();
            if f > 0.0 {
                p *= (ni as f64).sqrt() / f;
            }
            p
        })
        .collect()
}

/// K-sparse coefficient tensor: uniformly random support, unit-variance
/// Gaussian values.
pub fn sparse_coeffs(n_hat: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Result<SparseTensor> {
    let total: usize = n_hat.iter().product();
    if k > total {
        return Err(crate::error::Error::invalid(
            "sparse_coeffs: K exceeds the number of coefficient positions",
        ));
    }
    let mut idx: Vec<usize> = (0..total).collect();
    idx.shuffle(rng);
    let entries: Vec<(usize, f64)> = idx[..k]
        .iter()
        .map(|&p| (p, rng.sample::<f64, _>(StandardNormal)))
        .collect();
    SparseTensor::new(n_hat.to_vec(), entries)
}

/// Adds i.i.d. zero-mean Gaussian noise of the given variance in place.
pub fn add_noise(t: &mut Tensor, var: f64, rng: &mut ChaCha8Rng) {
    if var == 0.0 {
        return;
    }
    let sd = var.sqrt();
    for v in t.data_mut() {
        *v += sd * rng.sample::<f64, _>(StandardNormal);
    }
}

/// Applies each sensing factor along its mode.
pub fn measure(x: &Tensor, phis: &[Matrix]) -> Result<Tensor> {
    let mut y = x.clone();
    for (i, phi) in phis.iter().enumerate() {
        y = y.mode_product(phi, i)?;
    }
    Ok(y)
}

/// One test instance drawn from the synthetic model.
#[derive(Debug, Clone)]
pub struct TestInstance {
    pub coeffs: SparseTensor,
    pub signal: Tensor,
    pub measurement: Tensor,
}

/// Synthetic model plus its training and test draws.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub psis: Vec<Matrix>,
    pub phis: Vec<Matrix>,
    pub train: TrainingSet,
    pub test: Vec<TestInstance>,
}

fn draw_signal(psis: &[Matrix], n_hat: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Result<(SparseTensor, Tensor)> {
    let s = sparse_coeffs(n_hat, k, rng)?;
    let mut x = s.densify();
    for (i, psi) in psis.iter().enumerate() {
        x = x.mode_product(psi, i)?;
    }
    Ok((s, x))
}

/// Draws the full synthetic experiment: ground-truth dictionaries and sensing
/// matrices, `training_count` training signals stacked along the last mode,
/// and `trials` test instances with noisy measurements.
pub fn gen_synthetic(cfg: &ExperimentConfig, seed: u64) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psis = gaussian_dictionaries(&cfg.n, &cfg.n_hat, &mut rng);
    let phis = gaussian_sensing(&cfg.n, &cfg.m, &mut rng);

    let mut slices = Vec::with_capacity(cfg.training_count);
    for _ in 0..cfg.training_count {
        let (_, x) = draw_signal(&psis, &cfg.n_hat, cfg.sparsity_k, &mut rng)?;
        slices.push(x);
    }
    let train = TrainingSet::new(Tensor::stack_last(&slices)?)?;

    let mut test = Vec::with_capacity(cfg.trials);
    for _ in 0..cfg.trials {
        let (coeffs, signal) = draw_signal(&psis, &cfg.n_hat, cfg.sparsity_k, &mut rng)?;
        let mut measurement = measure(&signal, &phis)?;
        add_noise(&mut measurement, cfg.noise_var, &mut rng);
        test.push(TestInstance {
            coeffs,
            signal,
            measurement,
        });
    }
    Ok(SyntheticData {
        psis,
        phis,
        train,
        test,
    })
}
