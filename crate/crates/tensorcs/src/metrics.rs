//! Frame-quality measures used as design criteria and test oracles.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::Matrix;

/// Summary of how close an equivalent sensing matrix A = Phi*Psi is to an
/// ideal frame.
#[derive(Debug, Clone)]
pub struct FrameReport {
    /// max |a_i^T a_j| over distinct normalized columns, in [0,1].
    pub mutual_coherence: f64,
    /// ||I - A^T A||_F^2
    pub gram_identity_deviation: f64,
    /// ||Phi||_F^2
    pub sensing_energy: f64,
    /// ||A A^T - I||_F^2
    pub parseval_deviation: f64,
}

impl FrameReport {
    pub fn compute(phi: &Matrix, psi: &Matrix) -> Result<FrameReport> {
        if phi.ncols() != psi.nrows() {
            return Err(Error::invalid("FrameReport: Phi/Psi dimension mismatch"));
        }
        let a = phi * psi;
        let n_hat = a.ncols();
        let m = a.nrows();
        let gram = a.transpose() * &a;
        let frame = &a * a.transpose();
        Ok(FrameReport {
            mutual_coherence: mutual_coherence(&a)?,
            gram_identity_deviation: (Matrix::identity(n_hat, n_hat) - gram).norm_squared(),
            sensing_energy: phi.norm_squared(),
            parseval_deviation: (frame - Matrix::identity(m, m)).norm_squared(),
        })
    }
}

/// Mutual coherence with columns normalized to unit 2-norm (the default).
pub fn mutual_coherence(a: &Matrix) -> Result<f64> {
    mutual_coherence_with(a, true)
}

/// Mutual coherence; `normalize = false` uses raw inner products.
pub fn mutual_coherence_with(a: &Matrix, normalize: bool) -> Result<f64> {
    if a.ncols() < 2 {
        return Err(Error::invalid("mutual_coherence needs at least 2 columns"));
    }
    let mut cols = a.clone();
    if normalize {
        for mut c in cols.column_iter_mut() {
            let n = c.norm();
            if n == 0.0 {
                return Err(Error::invalid("mutual_coherence: zero column"));
            }
            c /= n;
        }
    }
    let gram = cols.transpose() * &cols;
    let mut max = 0.0f64;
    for i in 0..gram.nrows() {
        for j in (i + 1)..gram.ncols() {
            max = max.max(gram[(i, j)].abs());
        }
    }
    Ok(max)
}

/// Exact restricted isometry constant of order `k` by enumerating every
/// k-column submatrix. Errors when the number of subsets exceeds `cap`.
pub fn ric_bruteforce(a: &Matrix, k: usize, cap: Option<u64>) -> Result<f64> {
    let n = a.ncols();
    if k == 0 || k > n {
        return Err(Error::invalid("ric_bruteforce: k out of range"));
    }
    let cap = cap.unwrap_or(200_000);
    let count = binomial(n as u64, k as u64);
    if count > cap {
        return Err(Error::ResourceLimit(format!(
            "ric_bruteforce: C({n},{k}) = {count} exceeds cap {cap}"
        )));
    }
    let mut delta = 0.0f64;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let b = a.select_columns(subset.iter());
        let gram = b.transpose() * &b;
        let eig = gram.symmetric_eigenvalues();
        let lmax = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        delta = delta.max((lmax - 1.0).max(1.0 - lmin));
        // next k-combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(delta);
            }
            i -= 1;
            if subset[i] != i + n - k {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Approach-I design objective `||I - kron_i(Psi_i^T Phi_i^T Phi_i Psi_i)||_F^2`,
/// computed factor-wise: the Gram of a Kronecker product is the Kronecker
/// product of the Grams, and both trace and the squared Frobenius norm
/// factor over Kronecker products.
pub fn frame_objective(psis: &[Matrix], phis: &[Matrix]) -> Result<f64> {
    if psis.len() != phis.len() || psis.is_empty() {
        return Err(Error::invalid("frame_objective: factor count mismatch"));
    }
    let mut big_n: f64 = 1.0;
    let mut trace_prod: f64 = 1.0;
    let mut norm_prod: f64 = 1.0;
    for (psi, phi) in psis.iter().zip(phis) {
        if phi.ncols() != psi.nrows() {
            return Err(Error::invalid("frame_objective: Phi/Psi dimension mismatch"));
        }
        let a = phi * psi;
        let gram = a.transpose() * &a;
        big_n *= psi.ncols() as f64;
        trace_prod *= gram.trace();
        norm_prod *= gram.norm_squared();
    }
    Ok(big_n - 2.0 * trace_prod + norm_prod)
}

/// Mean squared error per element.
pub fn mse(x_true: &Tensor, x_hat: &Tensor) -> Result<f64> {
    if x_true.shape() != x_hat.shape() {
        return Err(Error::invalid("mse: shape mismatch"));
    }
    let diff = x_true.sub(x_hat)?;
    Ok(diff.frob_norm().powi(2) / x_true.len() as f64)
}

/// Peak signal-to-noise ratio over the given peak value, in dB.
pub fn psnr(x_true: &Tensor, x_hat: &Tensor, peak: f64) -> Result<f64> {
    let e = mse(x_true, x_hat)?;
    Ok(10.0 * (peak * peak / e).log10())
}

/// Average representation error `sqrt(||Z - S x_1 D_1 ... x_n D_n||_F^2 / len(Z))`
/// for a coefficient stack `s` (last mode indexes training slices; the last
/// mode is not multiplied).
pub fn are(z: &Tensor, s: &Tensor, ds: &[Matrix]) -> Result<f64> {
    if ds.len() + 1 != s.order() || s.order() != z.order() {
        return Err(Error::invalid("are: factor count / order mismatch"));
    }
    let mut approx = s.clone();
    for (mode, d) in ds.iter().enumerate() {
        approx = approx.mode_product(d, mode)?;
    }
    if approx.shape() != z.shape() {
        return Err(Error::invalid("are: shape mismatch after mode products"));
    }
    let diff = z.sub(&approx)?;
    Ok((diff.frob_norm().powi(2) / z.len() as f64).sqrt())
}
