//! SVD and rank-1 HOSVD kernels plus small least-squares helpers.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::Matrix;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

/// Full SVD `m = U diag(lambda) V^T`, singular values non-increasing.
///
/// Sign convention: the first entry of each left singular vector whose
/// magnitude exceeds 1e-12 is made non-negative (the sign is absorbed into
/// the matching right singular vector), so factorizations are reproducible.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: DVector<f64>,
    pub v: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        &self.u * Matrix::from_diagonal(&self.singular_values) * self.v.transpose()
    }
}

pub fn svd(m: &Matrix) -> Result<SvdResult> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("svd: non-finite entries"));
    }
    let decomp = nalgebra::linalg::SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("svd did not converge".into()))?;
    let mut u = decomp.u.unwrap();
    let v_t = decomp.v_t.unwrap();
    let mut v = v_t.transpose();
    let s = decomp.singular_values;

    // sort non-increasing
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let singular_values = DVector::from_fn(s.len(), |i, _| s[order[i]]);
    let mut u_sorted = Matrix::zeros(u.nrows(), u.ncols());
    let mut v_sorted = Matrix::zeros(v.nrows(), v.ncols());
    for (new, &old) in order.iter().enumerate() {
        u_sorted.set_column(new, &u.column(old));
        v_sorted.set_column(new, &v.column(old));
    }
    u = u_sorted;
    v = v_sorted;

    // sign convention
    for k in 0..u.ncols() {
        let col = u.column(k);
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                u.column_mut(k).neg_mut();
                if k < v.ncols() {
                    v.column_mut(k).neg_mut();
                }
            }
        }
    }
    Ok(SvdResult {
        u,
        singular_values,
        v,
    })
}

/// Leading rank-1 term of a higher-order SVD for order-2 and order-3 tensors.
#[derive(Debug, Clone)]
pub struct Hosvd1Result {
    /// Per-mode leading singular vectors, unit 2-norm.
    pub vectors: Vec<DVector<f64>>,
    /// Leading core value, non-negative.
    pub lambda: f64,
    /// Set when the input was (numerically) zero and the vectors are arbitrary.
    pub degenerate: bool,
}

pub fn hosvd_rank1(t: &Tensor) -> Result<Hosvd1Result> {
    if t.order() < 2 || t.order() > 3 {
        return Err(Error::invalid(format!(
            "hosvd_rank1 supports order 2 or 3, got {}",
            t.order()
        )));
    }
    Ok(rank1_als(t, None)?)
}

/// Alternating power iteration for the best rank-1 term of a tensor of any
/// order >= 2. Initialized from the leading left singular vector of each
/// unfolding unless explicit start vectors are given.
pub(crate) fn rank1_als(t: &Tensor, init: Option<Vec<DVector<f64>>>) -> Result<Hosvd1Result> {
    let order = t.order();
    let norm = t.frob_norm();
    if norm == 0.0 {
        let vectors = t
            .shape()
            .iter()
            .map(|&n| {
                let mut v = DVector::zeros(n);
                v[0] = 1.0;
                v
            })
            .collect();
        return Ok(Hosvd1Result {
            vectors,
            lambda: 0.0,
            degenerate: true,
        });
    }

    let mut vectors: Vec<DVector<f64>> = match init {
        Some(v) => v,
        None => {
            let mut vs = Vec::with_capacity(order);
            for mode in 0..order {
                let unf = t.unfold(mode)?;
                let dec = svd(&unf)?;
                vs.push(dec.u.column(0).into_owned());
            }
            vs
        }
    };

    let mut lambda = 0.0f64;
    for _ in 0..100 {
        let mut max_rel_change = 0.0f64;
        for mode in 0..order {
            // contract against all other modes
            let mut contracted = t.clone();
            // contract from highest mode down so earlier mode indices stay valid
            for other in (0..order).rev() {
                if other == mode {
                    continue;
                }
                let row = Matrix::from_fn(1, vectors[other].len(), |_, j| vectors[other][j]);
                contracted = contracted.mode_product(&row, other)?;
            }
            // contracted now has size 1 in every mode but `mode`
            let fiber = DVector::from_column_slice(contracted.data());
            let new_lambda = fiber.norm();
            if new_lambda == 0.0 {
                // stuck in a null direction; keep the old vector
                continue;
            }
            let new_vec = fiber / new_lambda;
            let rel = (new_lambda - lambda).abs() / new_lambda.max(1e-300);
            max_rel_change = max_rel_change.max(rel);
            vectors[mode] = new_vec;
            lambda = new_lambda;
        }
        if max_rel_change < 1e-10 {
            break;
        }
    }

    // Fix signs of all but the last vector, then recompute the last fiber so
    // lambda stays non-negative.
    for v in vectors.iter_mut().take(order - 1) {
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
    }
    let last = order - 1;
    let mut contracted = t.clone();
    for other in (0..last).rev() {
        let row = Matrix::from_fn(1, vectors[other].len(), |_, j| vectors[other][j]);
        contracted = contracted.mode_product(&row, other)?;
    }
    let fiber = DVector::from_column_slice(contracted.data());
    lambda = fiber.norm();
    if lambda > 0.0 {
        vectors[last] = fiber / lambda;
    }

    Ok(Hosvd1Result {
        vectors,
        lambda,
        degenerate: false,
    })
}

/// Least-squares solve `min ||y - B x||_2` via QR, with a tiny ridge fallback
/// for rank-deficient systems.
pub fn lstsq(b: &Matrix, y: &DVector<f64>) -> DVector<f64> {
    let k = b.ncols();
    if k == 0 {
        return DVector::zeros(0);
    }
    if b.nrows() >= k {
        let qr = b.clone().qr();
        let r = qr.r();
        let qty = qr.q().transpose() * y;
        let mut rhs = DVector::zeros(k);
        for i in 0..k {
            rhs[i] = qty[i];
        }
        let min_diag = (0..k).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if min_diag > 1e-12 {
            if let Some(x) = r.solve_upper_triangular(&rhs) {
                return x;
            }
        }
    }
    // ridge fallback
    let gram = b.transpose() * b + Matrix::identity(k, k) * 1e-12;
    let bty = b.transpose() * y;
    gram.cholesky()
        .map(|c| c.solve(&bty))
        .unwrap_or_else(|| DVector::zeros(k))
}

/// Random orthonormal square matrix via QR of a Gaussian draw, with the
/// diagonal of R made positive for determinism.
pub fn random_orthonormal<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    q
}
