//! Sparse recovery through Kronecker-structured sensing operators: plain OMP,
//! Kronecker-OMP working only on the per-mode factors, and a FISTA-based
//! basis-pursuit-denoising solver.

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::tensor::{kron, strides_of, Tensor};
use crate::Matrix;
use nalgebra::DVector;

/// Sparse tensor: explicit support over a dense shape.
///
/// Support entries are canonical linear indices (mode-0 fastest), kept sorted
/// and unique, with `values` aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    shape: Vec<usize>,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseTensor {
    pub fn new(shape: Vec<usize>, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || len == 0 {
            return Err(Error::invalid("sparse tensor shape must be non-empty"));
        }
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid("duplicate support index"));
            }
        }
        if entries.last().map(|&(i, _)| i >= len).unwrap_or(false) {
            return Err(Error::invalid("support index out of range"));
        }
        let (support, values) = entries.into_iter().unzip();
        Ok(SparseTensor {
            shape,
            support,
            values,
        })
    }

    pub fn empty(shape: Vec<usize>) -> Self {
        SparseTensor {
            shape,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    /// Sorted canonical linear indices of the nonzeros.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Overwrite the value of the k-th support entry (support is unchanged).
    pub fn set_value(&mut self, k: usize, value: f64) {
        self.values[k] = value;
    }

    /// Multi-index of the k-th support entry.
    pub fn multi_index(&self, k: usize) -> Vec<usize> {
        let strides = strides_of(&self.shape);
        let lin = self.support[k];
        self.shape
            .iter()
            .zip(&strides)
            .map(|(&d, &s)| (lin / s) % d)
            .collect()
    }

    pub fn densify(&self) -> Tensor {
        let mut t = Tensor::zeros(self.shape.clone());
        for (&i, &v) in self.support.iter().zip(&self.values) {
            t.data_mut()[i] = v;
        }
        t
    }

    /// Exact sparsification: keeps every nonzero entry.
    pub fn sparsify(t: &Tensor) -> Self {
        let entries = t
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        SparseTensor::new(t.shape().to_vec(), entries).expect("dense tensor entries are valid")
    }
}

/// Kronecker-structured operator `A_n ⊗ ... ⊗ A_1`, stored as its factors.
#[derive(Debug, Clone)]
pub struct KronOperator {
    factors: Vec<Matrix>,
}

impl KronOperator {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("KronOperator needs at least one factor"));
        }
        Ok(KronOperator { factors })
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    /// Domain shape (N_1, ..., N_n) = factor column counts.
    pub fn domain_shape(&self) -> Vec<usize> {
        self.factors.iter().map(|a| a.ncols()).collect()
    }

    /// Range shape (M_1, ..., M_n) = factor row counts.
    pub fn range_shape(&self) -> Vec<usize> {
        self.factors.iter().map(|a| a.nrows()).collect()
    }

    /// Apply the operator: S ×_1 A_1 ... ×_n A_n.
    pub fn apply(&self, s: &Tensor) -> Result<Tensor> {
        if s.shape() != self.domain_shape().as_slice() {
            return Err(Error::invalid("apply: tensor shape mismatch"));
        }
        let mut t = s.clone();
        for (mode, a) in self.factors.iter().enumerate() {
            t = t.mode_product(a, mode)?;
        }
        Ok(t)
    }

    /// Apply the adjoint: Y ×_1 A_1ᵀ ... ×_n A_nᵀ.
    pub fn adjoint(&self, y: &Tensor) -> Result<Tensor> {
        if y.shape() != self.range_shape().as_slice() {
            return Err(Error::invalid("adjoint: tensor shape mismatch"));
        }
        let mut t = y.clone();
        for (mode, a) in self.factors.iter().enumerate() {
            t = t.mode_product(&a.transpose(), mode)?;
        }
        Ok(t)
    }

    /// Materialize the full matrix A_n ⊗ ... ⊗ A_1; for oracles and tests.
    pub fn explicit_matrix(&self) -> Matrix {
        let mut m = self.factors[0].clone();
        for a in &self.factors[1..] {
            m = kron(a, &m);
        }
        m
    }

    /// Materialize one column of the full matrix (right-associated products of
    /// factor columns, bit-identical to the explicit matrix column).
    pub fn column(&self, linear: usize) -> DVector<f64> {
        let domain = self.domain_shape();
        let strides = strides_of(&domain);
        let mut col = self.factors[0]
            .column((linear / strides[0]) % domain[0])
            .into_owned();
        for (mode, a) in self.factors.iter().enumerate().skip(1) {
            let factor_col = a.column((linear / strides[mode]) % domain[mode]);
            let mut next = DVector::zeros(factor_col.len() * col.len());
            for (block, &f) in factor_col.iter().enumerate() {
                for (i, &c) in col.iter().enumerate() {
                    next[block * col.len() + i] = f * c;
                }
            }
            col = next;
        }
        col
    }

    /// Squared spectral norm ‖A‖₂² estimated by power iteration on AᵀA.
    pub fn spectral_norm_sq(&self, iters: usize) -> Result<f64> {
        let shape = self.domain_shape();
        let n: usize = shape.iter().product();
        let mut v = Tensor::new(shape.clone(), vec![1.0 / (n as f64).sqrt(); n])?;
        let mut lambda = 0.0;
        for _ in 0..iters.max(1) {
            let w = self.adjoint(&self.apply(&v)?)?;
            lambda = w.frob_norm();
            if lambda == 0.0 {
                return Ok(0.0);
            }
            v = w.scale(1.0 / lambda);
        }
        Ok(lambda)
    }
}

fn finish_sparse(shape: Vec<usize>, support: &[usize], coefs: &DVector<f64>) -> SparseTensor {
    let entries: Vec<(usize, f64)> = support
        .iter()
        .zip(coefs.iter())
        .map(|(&i, &v)| (i, v))
        .collect();
    SparseTensor::new(shape, entries).expect("omp support indices are unique and in range")
}

/// Orthogonal Matching Pursuit against an explicit matrix.
///
/// Greedy max-|correlation| selection (ties broken by lowest column index),
/// least-squares refit on the support each step; stops at `k` atoms or when
/// the residual 2-norm drops to `tol`.
pub fn omp(a: &Matrix, y: &DVector<f64>, k: usize, tol: f64) -> Result<SparseTensor> {
    if y.len() != a.nrows() {
        return Err(Error::invalid("omp: measurement length mismatch"));
    }
    if k > a.ncols() {
        return Err(Error::invalid("omp: k exceeds column count"));
    }
    let shape = vec![a.ncols()];
    let mut support: Vec<usize> = Vec::new();
    let mut coefs = DVector::zeros(0);
    let mut residual = y.clone();
    while support.len() < k && residual.norm() > tol {
        let corr = a.transpose() * &residual;
        let mut best = usize::MAX;
        let mut best_val = -1.0f64;
        for (i, &c) in corr.iter().enumerate() {
            if !support.contains(&i) && c.abs() > best_val {
                best_val = c.abs();
                best = i;
            }
        }
        if best == usize::MAX || best_val == 0.0 {
            break;
        }
        support.push(best);
        let sub = a.select_columns(support.iter());
        coefs = lstsq(&sub, y);
        residual = y - sub * &coefs;
    }
    Ok(finish_sparse(shape, &support, &coefs))
}

/// OMP through the Kronecker factor structure: algorithmically identical to
/// `omp` on the explicit matrix (same tie-breaking, same least-squares path),
/// but correlations are formed by mode products and only selected columns are
/// ever materialized, so auxiliary storage scales with Σ MᵢN̂ᵢ.
pub fn kron_omp(op: &KronOperator, y: &Tensor, k: usize, tol: f64) -> Result<SparseTensor> {
    let shape = op.domain_shape();
    let n: usize = shape.iter().product();
    if y.shape() != op.range_shape().as_slice() {
        return Err(Error::invalid("kron_omp: measurement shape mismatch"));
    }
    if k > n {
        return Err(Error::invalid("kron_omp: k exceeds coefficient count"));
    }
    let y_vec = y.to_vector();
    let range_shape = op.range_shape();
    let mut support: Vec<usize> = Vec::new();
    let mut selected: Vec<DVector<f64>> = Vec::new();
    let mut coefs = DVector::zeros(0);
    let mut residual = y_vec.clone();
    while support.len() < k && residual.norm() > tol {
        let r_tensor = Tensor::new(range_shape.clone(), residual.as_slice().to_vec())?;
        let corr = op.adjoint(&r_tensor)?;
        let mut best = usize::MAX;
        let mut best_val = -1.0f64;
        for (i, &c) in corr.data().iter().enumerate() {
            if !support.contains(&i) && c.abs() > best_val {
                best_val = c.abs();
                best = i;
            }
        }
        if best == usize::MAX || best_val == 0.0 {
            break;
        }
        support.push(best);
        selected.push(op.column(best));
        let mut sub = Matrix::zeros(y_vec.len(), selected.len());
        for (j, col) in selected.iter().enumerate() {
            sub.set_column(j, col);
        }
        coefs = lstsq(&sub, &y_vec);
        residual = &y_vec - sub * &coefs;
    }
    Ok(finish_sparse(shape, &support, &coefs))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Basis pursuit denoising ½‖y − Ās‖² + λ‖s‖₁ by FISTA with restart on
/// objective increase. Entries with |s| ≤ 1e-8 are dropped from the output.
pub fn fista_bpdn(
    op: &KronOperator,
    y: &Tensor,
    lambda: f64,
    iters: usize,
) -> Result<SparseTensor> {
    if lambda <= 0.0 {
        return Err(Error::invalid("fista_bpdn: lambda must be > 0"));
    }
    if y.shape() != op.range_shape().as_slice() {
        return Err(Error::invalid("fista_bpdn: measurement shape mismatch"));
    }
    let shape = op.domain_shape();
    let lip = op.spectral_norm_sq(100)?.max(1e-12);
    let step = 1.0 / lip;

    let objective = |x: &Tensor| -> Result<f64> {
        let r = op.apply(x)?.sub(y)?;
        Ok(0.5 * r.frob_norm().powi(2) + lambda * x.data().iter().map(|v| v.abs()).sum::<f64>())
    };

    let mut x = Tensor::zeros(shape.clone());
    let mut z = x.clone(); // momentum point
    let mut t = 1.0f64;
    let mut f_prev = objective(&x)?;
    for _ in 0..iters {
        let grad = op.adjoint(&op.apply(&z)?.sub(y)?)?;
        let mut x_next = z.sub(&grad.scale(step))?;
        for v in x_next.data_mut() {
            *v = soft_threshold(*v, lambda * step);
        }
        let f_next = objective(&x_next)?;
        if !f_next.is_finite() {
            return Err(Error::NumericalFailure(
                "fista_bpdn: non-finite objective".into(),
            ));
        }
        if f_next > f_prev {
            // restart momentum from the last accepted iterate
            t = 1.0;
            z = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        z = x_next.add(&x_next.sub(&x)?.scale(beta))?;
        x = x_next;
        t = t_next;
        f_prev = f_next;
    }
    let entries: Vec<(usize, f64)> = x
        .data()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-8)
        .map(|(i, &v)| (i, v))
        .collect();
    SparseTensor::new(shape, entries)
}

/// Least-squares debias: refit the values of `s` on its detected support.
pub fn debias_ls(op: &KronOperator, y: &Tensor, s: &SparseTensor) -> Result<SparseTensor> {
    if s.shape() != op.domain_shape().as_slice() {
        return Err(Error::invalid("debias_ls: shape mismatch"));
    }
    if s.nnz() == 0 {
        return Ok(s.clone());
    }
    let y_vec = y.to_vector();
    let mut sub = Matrix::zeros(y_vec.len(), s.nnz());
    for (j, &idx) in s.support().iter().enumerate() {
        sub.set_column(j, &op.column(idx));
    }
    let coefs = lstsq(&sub, &y_vec);
    Ok(finish_sparse(s.shape().to_vec(), s.support(), &coefs))
}
