//! Dense tensor storage and mode-wise algebra.
//!
//! Data is kept in a canonical linear order with the mode-0 index varying
//! fastest (a column-major generalization). Under this order the vectorized
//! multilinear model matches the Kronecker form `A_n ⊗ ... ⊗ A_1` verbatim:
//! `vec(S ×_1 A_1 ... ×_n A_n) = (A_n ⊗ ... ⊗ A_1) vec(S)`.
//!
//! Modes are 0-based throughout the crate.

use crate::error::{Error, Result};
use crate::Matrix;
use nalgebra::DVector;

/// Dense n-dimensional real tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::invalid("tensor shape entries must be positive"));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::invalid(format!(
                "data length {} does not match shape product {}",
                data.len(),
                len
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Canonical strides: stride of mode 0 is 1, mode k is N_0*...*N_{k-1}.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let l = self.linear_index(idx);
        self.data[l] = value;
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::invalid("tensor shape mismatch in add"));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::invalid("tensor shape mismatch in sub"));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Canonical vectorization (mode-0 index fastest).
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn from_vector(shape: Vec<usize>, v: &DVector<f64>) -> Result<Self> {
        Tensor::new(shape, v.as_slice().to_vec())
    }

    /// Order-2 tensor from a matrix; shares the column-major layout.
    pub fn from_matrix(m: &Matrix) -> Self {
        Tensor {
            shape: vec![m.nrows(), m.ncols()],
            data: m.as_slice().to_vec(),
        }
    }

    /// View an order-2 tensor as a matrix.
    pub fn to_matrix(&self) -> Result<Matrix> {
        if self.order() != 2 {
            return Err(Error::invalid(format!(
                "to_matrix requires order 2, got {}",
                self.order()
            )));
        }
        Ok(Matrix::from_column_slice(
            self.shape[0],
            self.shape[1],
            &self.data,
        ))
    }

    /// Mode-`mode` unfolding: N_mode rows, columns are the mode fibers ordered
    /// by the canonical linear order of the remaining indices.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        if mode >= self.order() {
            return Err(Error::invalid(format!(
                "unfold mode {} out of range for order {}",
                mode,
                self.order()
            )));
        }
        let n_mode = self.shape[mode];
        let cols = self.len() / n_mode;
        let strides = self.strides();
        let mut m = Matrix::zeros(n_mode, cols);
        for c in 0..cols {
            let mut rem = c;
            let mut base = 0usize;
            for (k, &dim) in self.shape.iter().enumerate() {
                if k == mode {
                    continue;
                }
                base += (rem % dim) * strides[k];
                rem /= dim;
            }
            for r in 0..n_mode {
                m[(r, c)] = self.data[base + r * strides[mode]];
            }
        }
        Ok(m)
    }

    /// Inverse of `unfold`: fold a matrix back along `mode` into `shape`.
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<Tensor> {
        if mode >= shape.len() {
            return Err(Error::invalid("fold mode out of range"));
        }
        let n_mode = shape[mode];
        let len: usize = shape.iter().product();
        if m.nrows() != n_mode || m.ncols() != len / n_mode {
            return Err(Error::invalid(format!(
                "fold: matrix {}x{} incompatible with shape {:?} at mode {}",
                m.nrows(),
                m.ncols(),
                shape,
                mode
            )));
        }
        let strides = strides_of(shape);
        let mut data = vec![0.0; len];
        for c in 0..m.ncols() {
            let mut rem = c;
            let mut base = 0usize;
            for (k, &dim) in shape.iter().enumerate() {
                if k == mode {
                    continue;
                }
                base += (rem % dim) * strides[k];
                rem /= dim;
            }
            for r in 0..n_mode {
                data[base + r * strides[mode]] = m[(r, c)];
            }
        }
        Tensor::new(shape.to_vec(), data)
    }

    /// Mode-`mode` tensor-by-matrix product: replaces N_mode with rows(m).
    pub fn mode_product(&self, m: &Matrix, mode: usize) -> Result<Tensor> {
        if mode >= self.order() {
            return Err(Error::invalid("mode_product mode out of range"));
        }
        if m.ncols() != self.shape[mode] {
            return Err(Error::invalid(format!(
                "mode_product: matrix has {} cols, mode {} has size {}",
                m.ncols(),
                mode,
                self.shape[mode]
            )));
        }
        let unfolded = self.unfold(mode)?;
        let product = m * unfolded;
        let mut new_shape = self.shape.clone();
        new_shape[mode] = m.nrows();
        Tensor::fold(&product, mode, &new_shape)
    }

    /// Extract the order-(n-1) sub-tensor at index `idx` of the last mode.
    pub fn slice_last(&self, idx: usize) -> Tensor {
        let n = *self.shape.last().unwrap();
        debug_assert!(idx < n);
        let slice_len = self.len() / n;
        let shape = self.shape[..self.order() - 1].to_vec();
        Tensor {
            shape,
            data: self.data[idx * slice_len..(idx + 1) * slice_len].to_vec(),
        }
    }

    /// Stack order-(n-1) tensors of identical shape along a new last mode.
    pub fn stack_last(slices: &[Tensor]) -> Result<Tensor> {
        if slices.is_empty() {
            return Err(Error::invalid("stack_last needs at least one slice"));
        }
        let base = slices[0].shape.clone();
        let mut data = Vec::with_capacity(slices[0].len() * slices.len());
        for s in slices {
            if s.shape != base {
                return Err(Error::invalid("stack_last: inconsistent slice shapes"));
            }
            data.extend_from_slice(&s.data);
        }
        let mut shape = base;
        shape.push(slices.len());
        Tensor::new(shape, data)
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = Vec::with_capacity(shape.len());
    let mut acc = 1usize;
    for &d in shape {
        strides.push(acc);
        acc *= d;
    }
    strides
}

/// Standard Kronecker product a ⊗ b.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}
