//! Overcomplete DCT dictionary initialization.

use crate::error::{Error, Result};
use crate::Matrix;
use std::f64::consts::PI;

/// Overcomplete 1-D DCT dictionary (N x N_hat, unit-norm columns).
///
/// Column j samples cos(pi * j * t / N_hat) at t = 0..N; non-DC atoms are
/// mean-removed before normalization so the DC component lives in column 0
/// only. Two of these per mode initialize the 2-D separable case.
pub fn overcomplete_dct(n: usize, n_hat: usize) -> Result<Matrix> {
    if n == 0 || n_hat < n {
        return Err(Error::invalid("overcomplete_dct: need 0 < N <= N_hat"));
    }
    let mut d = Matrix::zeros(n, n_hat);
    for j in 0..n_hat {
        let mut col: Vec<f64> = (0..n)
            .map(|t| (PI * j as f64 * t as f64 / n_hat as f64).cos())
            .collect();
        if j > 0 {
            let mean = col.iter().sum::<f64>() / n as f64;
            for v in &mut col {
                *v -= mean;
            }
        }
        let nrm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (t, v) in col.iter().enumerate() {
            d[(t, j)] = v / nrm;
        }
    }
    Ok(d)
}
