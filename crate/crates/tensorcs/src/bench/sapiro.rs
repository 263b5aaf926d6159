//! Separable Gram-shrinkage sensing design baseline.
//!
//! Per mode, iteratively pushes the equivalent Gram A^T A toward the identity
//! by gradient descent with a backtracking line search, then applies the
//! standard energy normalization. Intended as a comparison baseline only.

use crate::design::DesignResult;
use crate::error::{Error, Result};
use crate::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gram_objective(phi: &Matrix, psi: &Matrix) -> f64 {
    let a = phi * psi;
    let g = a.transpose() * &a;
    let mut obj = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let t = if i == j { 1.0 } else { 0.0 };
            let d = g[(i, j)] - t;
            obj += d * d;
        }
    }
    obj
}

/// Per-mode Gram-shrinkage design (the `separable-sapiro-stub` method).
pub fn design_sapiro_stub(
    psis: &[Matrix],
    ms: &[usize],
    iters: usize,
    seed: u64,
) -> Result<DesignResult> {
    if psis.len() != ms.len() || psis.is_empty() {
        return Err(Error::invalid("design_sapiro_stub: factor count mismatch"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phis = Vec::with_capacity(psis.len());
    let mut trace = vec![0.0; iters + 1];
    for (psi, &m) in psis.iter().zip(ms) {
        let n = psi.nrows();
        if m == 0 || m > n {
            return Err(Error::invalid("design_sapiro_stub: need 0 < M <= N"));
        }
        let mut phi = Matrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut obj = gram_objective(&phi, psi);
        trace[0] += obj;
        for it in 0..iters {
            // d/dPhi ||I - Psi^T Phi^T Phi Psi||_F^2 = -4 A (I - A^T A) Psi^T
            let a = &phi * psi;
            let mut res = -(a.transpose() * &a);
            for i in 0..res.nrows() {
                res[(i, i)] += 1.0;
            }
            let grad = &a * &res * psi.transpose() * -4.0;
            let mut step = 1e-2;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &phi - &grad * step;
                let cobj = gram_objective(&cand, psi);
                if cobj < obj {
                    phi = cand;
                    obj = cobj;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            trace[it + 1] += obj;
            if !accepted {
                // stationary for this mode; keep the trace flat
                for t in trace.iter_mut().skip(it + 2) {
                    *t += obj;
                }
                break;
            }
        }
        let f = phi.norm();
        if f > 0.0 {
            phi *= (n as f64).sqrt() / f;
        }
        phis.push(phi);
    }
    Ok(DesignResult {
        phis,
        objective_trace: trace,
        iterations_used: iters,
    })
}
