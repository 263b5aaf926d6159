//! Coupled dictionary learning: cTKSVD on separable (per-mode) dictionaries,
//! its uncoupled TKSVD variant, and the vectorized cKSVD baseline.
//!
//! The coupled formulation stacks the training signals and their per-mode
//! measurements into one block tensor Z sensed by the coupled matrices
//! D_i = [γI; Φ_i] Ψ_i, so learning Ψ_i trades representation quality against
//! recoverability from compressed measurements.

use crate::error::{Error, Result};
use crate::linalg::{self, lstsq};
use crate::recon::{kron_omp, omp, KronOperator, SparseTensor};
use crate::tensor::Tensor;
use crate::Matrix;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Training signals stacked along the last mode: shape N_1 x ... x N_n x T.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    signals: Tensor,
}

impl TrainingSet {
    pub fn new(signals: Tensor) -> Result<Self> {
        if signals.order() < 2 {
            return Err(Error::invalid(
                "training set needs at least one signal mode plus the slice mode",
            ));
        }
        Ok(TrainingSet { signals })
    }

    pub fn signals(&self) -> &Tensor {
        &self.signals
    }

    /// Number of signal modes (excludes the trailing slice mode).
    pub fn n_modes(&self) -> usize {
        self.signals.order() - 1
    }

    pub fn n_slices(&self) -> usize {
        *self.signals.shape().last().unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    /// Coupling weight γ > 0.
    pub gamma: f64,
    /// Per-slice sparsity budget K.
    pub sparsity_k: usize,
    pub outer_iters: usize,
    pub seed: u64,
    /// cTKSVD when true; plain TKSVD (no measurement coupling) when false.
    pub coupled: bool,
    /// Variance of the i.i.d. Gaussian noise added to each measurement stack.
    pub noise_var: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            gamma: 1.0 / 64.0,
            sparsity_k: 4,
            outer_iters: 10,
            seed: 0,
            coupled: true,
            noise_var: 0.0,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 {
            return Err(Error::invalid("gamma must be > 0"));
        }
        if self.sparsity_k == 0 {
            return Err(Error::invalid("sparsity_k must be >= 1"));
        }
        if self.noise_var < 0.0 {
            return Err(Error::invalid("noise_var must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    /// Learned dictionaries, unit-norm columns.
    pub psis: Vec<Matrix>,
    /// Representation error recorded before each atom sweep.
    pub are_trace: Vec<f64>,
    /// Final sparse codes, one per training slice.
    pub codes: Vec<SparseTensor>,
    /// Slices skipped by the sparse coder, totalled over all iterations.
    pub skipped_slices: usize,
}

/// The coupling stack [γI; Φ] ((N+M) x N).
pub fn coupling_stack(phi: &Matrix, gamma: f64) -> Matrix {
    let n = phi.ncols();
    let m = phi.nrows();
    let mut s = Matrix::zeros(n + m, n);
    for i in 0..n {
        s[(i, i)] = gamma;
    }
    s.view_mut((n, 0), (m, n)).copy_from(phi);
    s
}

/// Pseudo-inverse of the coupling stack: (γ²I + ΦᵀΦ)⁻¹ [γI Φᵀ] (N x (N+M)).
pub fn coupling_pinv(phi: &Matrix, gamma: f64) -> Result<Matrix> {
    let n = phi.ncols();
    let gram = phi.transpose() * phi + Matrix::identity(n, n) * (gamma * gamma);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("coupling Gram not positive definite".into()))?;
    let rhs = coupling_stack(phi, gamma).transpose();
    Ok(chol.solve(&rhs))
}

/// Assemble the coupled block tensor Z and the coupling stacks, without noise.
///
/// The block indexed by a subset of measured modes holds
/// γ^(n−|subset|) · (X ×_{i∈subset} Φ_i); for n=2 this is exactly
/// Z = [γ²X γY₂; γY₁ Y].
pub fn build_coupled_tensor(
    train: &TrainingSet,
    phis: &[Matrix],
    gamma: f64,
) -> Result<(Tensor, Vec<Matrix>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    build_coupled_tensor_noisy(train, phis, gamma, 0.0, &mut rng)
}

/// As `build_coupled_tensor`, adding independent zero-mean Gaussian noise of
/// the given variance to every measurement block (each block gets its own
/// noise realization, matching independently acquired measurement stacks).
pub fn build_coupled_tensor_noisy<R: Rng>(
    train: &TrainingSet,
    phis: &[Matrix],
    gamma: f64,
    noise_var: f64,
    rng: &mut R,
) -> Result<(Tensor, Vec<Matrix>)> {
    let n = train.n_modes();
    if phis.len() != n {
        return Err(Error::invalid("build_coupled_tensor: factor count mismatch"));
    }
    let x = train.signals();
    for (i, phi) in phis.iter().enumerate() {
        if phi.ncols() != x.shape()[i] {
            return Err(Error::invalid(format!(
                "build_coupled_tensor: Phi_{i} has {} cols, mode size is {}",
                phi.ncols(),
                x.shape()[i]
            )));
        }
    }
    if gamma <= 0.0 {
        return Err(Error::invalid("gamma must be > 0"));
    }
    let t_count = train.n_slices();
    let mut z_shape: Vec<usize> = (0..n)
        .map(|i| x.shape()[i] + phis[i].nrows())
        .collect();
    z_shape.push(t_count);
    let mut z = Tensor::zeros(z_shape.clone());
    let z_strides = z.strides();
    let noise = if noise_var > 0.0 {
        Some(Normal::new(0.0, noise_var.sqrt()).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };

    for mask in 0..(1usize << n) {
        if (0..n).any(|i| mask & (1 << i) != 0 && phis[i].nrows() == 0) {
            continue; // empty measurement block
        }
        let mut block = x.clone();
        for i in 0..n {
            if mask & (1 << i) != 0 {
                block = block.mode_product(&phis[i], i)?;
            }
        }
        if mask != 0 {
            if let Some(dist) = &noise {
                for v in block.data_mut() {
                    *v += rng.sample(dist);
                }
            }
        }
        let weight = gamma.powi((n - mask.count_ones() as usize) as i32);
        let offsets: Vec<usize> = (0..n)
            .map(|i| if mask & (1 << i) != 0 { x.shape()[i] } else { 0 })
            .chain(std::iter::once(0))
            .collect();
        let b_shape = block.shape().to_vec();
        let b_strides = block.strides();
        for (lin, &v) in block.data().iter().enumerate() {
            let mut z_lin = 0usize;
            for (k, (&dim, &stride)) in b_shape.iter().zip(&b_strides).enumerate() {
                let idx = (lin / stride) % dim;
                z_lin += (idx + offsets[k]) * z_strides[k];
            }
            z.data_mut()[z_lin] = weight * v;
        }
    }
    let stacks = phis.iter().map(|phi| coupling_stack(phi, gamma)).collect();
    Ok((z, stacks))
}

/// Right-associated Kronecker of columns: index of the first column varies
/// fastest, matching the canonical vectorization.
fn kron_column(cols: &[DVector<f64>]) -> DVector<f64> {
    let mut out = cols[0].clone();
    for c in &cols[1..] {
        let mut next = DVector::zeros(out.len() * c.len());
        for (block, &f) in c.iter().enumerate() {
            for (i, &v) in out.iter().enumerate() {
                next[block * out.len() + i] = f * v;
            }
        }
        out = next;
    }
    out
}

/// Cheap start vectors for the rank-1 refinement: a few power iterations on
/// the per-mode unfolding Grams for small modes, uniform vectors otherwise.
fn cheap_rank1_init(t: &Tensor) -> Vec<DVector<f64>> {
    t.shape()
        .iter()
        .enumerate()
        .map(|(mode, &d)| {
            let uniform = DVector::from_element(d, 1.0 / (d as f64).sqrt());
            if d > 64 {
                return uniform;
            }
            let Ok(unf) = t.unfold(mode) else {
                return uniform;
            };
            let g = &unf * unf.transpose();
            let mut v = uniform.clone();
            for _ in 0..5 {
                let w = &g * &v;
                let norm = w.norm();
                if norm < 1e-300 {
                    return uniform;
                }
                v = w / norm;
            }
            v
        })
        .collect()
}

/// One cTKSVD/TKSVD learning run: holds the coupled tensor, current
/// dictionaries, codes, and per-slice residuals; `step` performs one outer
/// iteration (sparse coding pass, then a full atom sweep over every mode).
pub struct LearnRun {
    cfg: LearnConfig,
    stacks: Vec<Matrix>,
    pinvs: Vec<Matrix>,
    psis: Vec<Matrix>,
    ds: Vec<Matrix>,
    z: Tensor,
    codes: Vec<SparseTensor>,
    err: Vec<Tensor>,
    are_trace: Vec<f64>,
    skipped: usize,
}

impl LearnRun {
    pub fn new(
        train: &TrainingSet,
        phis: &[Matrix],
        psis0: &[Matrix],
        cfg: &LearnConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = train.n_modes();
        if psis0.len() != n {
            return Err(Error::invalid("learn: dictionary count mismatch"));
        }
        // uncoupled TKSVD = cTKSVD with empty measurement stacks and γ=1
        let (eff_phis, eff_gamma): (Vec<Matrix>, f64) = if cfg.coupled {
            if phis.len() != n {
                return Err(Error::invalid("learn: sensing factor count mismatch"));
            }
            (phis.to_vec(), cfg.gamma)
        } else {
            (
                (0..n).map(|i| Matrix::zeros(0, train.signals().shape()[i])).collect(),
                1.0,
            )
        };
        let big_n: usize = psis0.iter().map(|p| p.ncols()).product();
        if cfg.sparsity_k > big_n {
            return Err(Error::invalid("sparsity_k exceeds coefficient count"));
        }
        let mut psis = Vec::with_capacity(n);
        for (i, psi) in psis0.iter().enumerate() {
            if psi.nrows() != train.signals().shape()[i] {
                return Err(Error::invalid(format!("Psi_{i} row count mismatch")));
            }
            psis.push(normalize_columns(psi)?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (z, stacks) =
            build_coupled_tensor_noisy(train, &eff_phis, eff_gamma, cfg.noise_var, &mut rng)?;
        let pinvs: Vec<Matrix> = eff_phis
            .iter()
            .map(|phi| coupling_pinv(phi, eff_gamma))
            .collect::<Result<_>>()?;
        let ds: Vec<Matrix> = stacks.iter().zip(&psis).map(|(s, p)| s * p).collect();
        let mut eff_cfg = cfg.clone();
        eff_cfg.gamma = eff_gamma;
        Ok(LearnRun {
            cfg: eff_cfg,
            stacks,
            pinvs,
            psis,
            ds,
            z,
            codes: Vec::new(),
            err: Vec::new(),
            are_trace: Vec::new(),
            skipped: 0,
        })
    }

    pub fn psis(&self) -> &[Matrix] {
        &self.psis
    }

    pub fn ds(&self) -> &[Matrix] {
        &self.ds
    }

    pub fn codes(&self) -> &[SparseTensor] {
        &self.codes
    }

    pub fn coupled_tensor(&self) -> &Tensor {
        &self.z
    }

    pub fn are_trace(&self) -> &[f64] {
        &self.are_trace
    }

    /// Sum of squared per-slice residuals with the current codes.
    pub fn residual_sq(&self) -> f64 {
        self.err.iter().map(|e| e.frob_norm().powi(2)).sum()
    }

    /// One outer iteration; returns the representation error recorded after
    /// coding (before the atom sweep).
    pub fn step(&mut self) -> Result<f64> {
        let are = self.code_pass()?;
        for mode in 0..self.psis.len() {
            self.sweep_mode(mode)?;
        }
        Ok(are)
    }

    /// Sparse-code every training slice against the current coupled
    /// dictionaries and refresh the per-slice residuals. Returns the ARE.
    ///
    /// Atom selection runs against column-normalized coupled dictionaries so
    /// the varying norms of [γψ; Φψ] columns do not bias the greedy picks;
    /// the stored coefficients are rescaled back to the raw D_i columns.
    pub fn code_pass(&mut self) -> Result<f64> {
        let mut normalized = Vec::with_capacity(self.ds.len());
        let mut col_norms: Vec<Vec<f64>> = Vec::with_capacity(self.ds.len());
        for d in &self.ds {
            let mut dn = d.clone();
            let mut norms = Vec::with_capacity(d.ncols());
            for mut c in dn.column_iter_mut() {
                let n = c.norm();
                let n = if n < 1e-300 { 1.0 } else { n };
                c /= n;
                norms.push(n);
            }
            normalized.push(dn);
            col_norms.push(norms);
        }
        let op_coding = KronOperator::new(normalized)?;
        let op = KronOperator::new(self.ds.clone())?;
        let t_count = *self.z.shape().last().unwrap();
        let k = self.cfg.sparsity_k;
        let results: Vec<Option<SparseTensor>> = (0..t_count)
            .into_par_iter()
            .map(|t| {
                let slice = self.z.slice_last(t);
                let tol = 1e-10 * slice.frob_norm();
                kron_omp(&op_coding, &slice, k, tol).ok()
            })
            .collect();
        let domain = op.domain_shape();
        self.codes = Vec::with_capacity(t_count);
        for r in results {
            match r {
                Some(mut code) => {
                    for j in 0..code.nnz() {
                        let mi = code.multi_index(j);
                        let scale: f64 = mi
                            .iter()
                            .zip(&col_norms)
                            .map(|(&q, norms)| norms[q])
                            .product();
                        code.set_value(j, code.values()[j] / scale);
                    }
                    self.codes.push(code);
                }
                None => {
                    self.skipped += 1;
                    self.codes.push(SparseTensor::empty(domain.clone()));
                }
            }
        }
        self.err = (0..t_count)
            .map(|t| {
                let slice = self.z.slice_last(t);
                slice.sub(&op.apply(&self.codes[t].densify())?)
            })
            .collect::<Result<_>>()?;
        let are = (self.residual_sq() / self.z.len() as f64).sqrt();
        self.are_trace.push(are);
        Ok(are)
    }

    pub fn sweep_mode(&mut self, mode: usize) -> Result<()> {
        for p in 0..self.psis[mode].ncols() {
            self.update_atom(mode, p)?;
        }
        Ok(())
    }

    /// Update one dictionary atom from the rank-1 term of its restricted
    /// residual, then refit the touched coefficients by least squares on
    /// their existing supports. Keeps the old atom when it gives the smaller
    /// restricted residual, so the total residual never increases.
    pub fn update_atom(&mut self, mode: usize, p: usize) -> Result<()> {
        if self.codes.is_empty() {
            return Err(Error::invalid("update_atom before any coding pass"));
        }
        let n_modes = self.psis.len();
        let coupled_shape: Vec<usize> = self.ds.iter().map(|d| d.nrows()).collect();
        let mut used: Vec<(usize, Vec<usize>)> = Vec::new();
        for (t, code) in self.codes.iter().enumerate() {
            let ks: Vec<usize> = (0..code.nnz())
                .filter(|&k| code.multi_index(k)[mode] == p)
                .collect();
            if !ks.is_empty() {
                used.push((t, ks));
            }
        }
        if used.is_empty() {
            return self.replace_atom(mode, p);
        }

        let d_old = self.ds[mode].column(p).into_owned();
        let psi_old = self.psis[mode].column(p).into_owned();
        let other_rows: usize = coupled_shape
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != mode)
            .map(|(_, &d)| d)
            .product();

        // per used slice: mode-unfolded restricted residual U and the matrix
        // B of other-mode coupled columns on the slice's support of atom p
        let mut bs: Vec<Matrix> = Vec::with_capacity(used.len());
        let mut us: Vec<Matrix> = Vec::with_capacity(used.len());
        for (t, ks) in &used {
            let code = &self.codes[*t];
            let mut b = Matrix::zeros(other_rows, ks.len());
            let mut vals = DVector::zeros(ks.len());
            for (col, &k) in ks.iter().enumerate() {
                let mi = code.multi_index(k);
                let cols: Vec<DVector<f64>> = (0..n_modes)
                    .filter(|&j| j != mode)
                    .map(|j| self.ds[j].column(mi[j]).into_owned())
                    .collect();
                b.set_column(col, &kron_column(&cols));
                vals[col] = code.values()[k];
            }
            let contrib = &b * vals;
            let u = self.err[*t].unfold(mode)? + &d_old * contrib.transpose();
            bs.push(b);
            us.push(u);
        }

        // rank-1 term of the stacked restricted residual
        let r_slices: Vec<Tensor> = us
            .iter()
            .map(|u| Tensor::fold(u, mode, &coupled_shape))
            .collect::<Result<_>>()?;
        let stacked = Tensor::stack_last(&r_slices)?;
        let init = cheap_rank1_init(&stacked);
        let r1 = linalg::rank1_als(&stacked, Some(init))?;
        let raw = &self.pinvs[mode] * &r1.vectors[mode];

        let eval = |d: &DVector<f64>| -> (f64, Vec<DVector<f64>>) {
            let dn2 = d.norm_squared();
            let mut total = 0.0;
            let mut coefs = Vec::with_capacity(bs.len());
            for (b, u) in bs.iter().zip(&us) {
                let ut_d = u.transpose() * d;
                let target = &ut_d / dn2;
                let c = lstsq(b, &target);
                let contrib = b * &c;
                total += u.norm_squared() - 2.0 * ut_d.dot(&contrib)
                    + dn2 * contrib.norm_squared();
                coefs.push(c);
            }
            (total, coefs)
        };

        let (old_res, old_coefs) = eval(&d_old);
        let (psi_win, d_win, coefs_win) = if raw.norm() > 1e-12 {
            let psi_new = &raw / raw.norm();
            let d_new = &self.stacks[mode] * &psi_new;
            let (new_res, new_coefs) = eval(&d_new);
            if new_res < old_res {
                (psi_new, d_new, new_coefs)
            } else {
                (psi_old, d_old, old_coefs)
            }
        } else {
            (psi_old, d_old, old_coefs)
        };

        self.psis[mode].set_column(p, &psi_win);
        self.ds[mode].set_column(p, &d_win);
        for (i, (t, ks)) in used.iter().enumerate() {
            for (col, &k) in ks.iter().enumerate() {
                self.codes[*t].set_value(k, coefs_win[i][col]);
            }
            let contrib = &bs[i] * &coefs_win[i];
            let new_u = &us[i] - &d_win * contrib.transpose();
            self.err[*t] = Tensor::fold(&new_u, mode, &coupled_shape)?;
        }
        Ok(())
    }

    /// Unused atom: re-seed from the rank-1 direction of the slice with the
    /// largest current residual (standard KSVD replacement convention).
    fn replace_atom(&mut self, mode: usize, p: usize) -> Result<()> {
        let Some((t_star, worst)) = self
            .err
            .iter()
            .map(|e| e.frob_norm())
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        else {
            return Ok(());
        };
        if worst < 1e-12 {
            return Ok(());
        }
        let init = cheap_rank1_init(&self.err[t_star]);
        let r1 = linalg::rank1_als(&self.err[t_star], Some(init))?;
        let raw = &self.pinvs[mode] * &r1.vectors[mode];
        let norm = raw.norm();
        if norm < 1e-12 {
            return Ok(());
        }
        let psi = raw / norm;
        self.ds[mode].set_column(p, &(&self.stacks[mode] * &psi));
        self.psis[mode].set_column(p, &psi);
        Ok(())
    }

    pub fn into_result(self) -> LearnResult {
        LearnResult {
            psis: self.psis,
            are_trace: self.are_trace,
            codes: self.codes,
            skipped_slices: self.skipped,
        }
    }
}

/// Full cTKSVD (coupled) or TKSVD (uncoupled) run of `cfg.outer_iters`
/// iterations.
pub fn learn(
    train: &TrainingSet,
    phis: &[Matrix],
    psis0: &[Matrix],
    cfg: &LearnConfig,
) -> Result<LearnResult> {
    if cfg.outer_iters == 0 {
        return Err(Error::invalid("outer_iters must be >= 1"));
    }
    let mut run = LearnRun::new(train, phis, psis0, cfg)?;
    for _ in 0..cfg.outer_iters {
        run.step()?;
    }
    Ok(run.into_result())
}

fn normalize_columns(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n < 1e-300 {
            return Err(Error::invalid("dictionary has a zero column"));
        }
        c /= n;
    }
    Ok(out)
}

/// Stack per-slice sparse codes into a dense coefficient tensor with the
/// slice index as the last mode.
pub fn codes_to_tensor(codes: &[SparseTensor]) -> Result<Tensor> {
    let dense: Vec<Tensor> = codes.iter().map(|c| c.densify()).collect();
    Tensor::stack_last(&dense)
}

/// Vectorized cKSVD baseline on a training matrix X (N x T).
///
/// coupled=false with γ=1 degenerates to plain KSVD.
pub fn learn_cksvd(
    x: &Matrix,
    phi: &Matrix,
    psi0: &Matrix,
    cfg: &LearnConfig,
) -> Result<LearnResult> {
    cfg.validate()?;
    if cfg.outer_iters == 0 {
        return Err(Error::invalid("outer_iters must be >= 1"));
    }
    let n = x.nrows();
    let t_count = x.ncols();
    if psi0.nrows() != n {
        return Err(Error::invalid("cksvd: Psi row count mismatch"));
    }
    let (eff_phi, gamma) = if cfg.coupled {
        if phi.ncols() != n {
            return Err(Error::invalid("cksvd: Phi column count mismatch"));
        }
        (phi.clone(), cfg.gamma)
    } else {
        (Matrix::zeros(0, n), 1.0)
    };
    let n_hat = psi0.ncols();
    if cfg.sparsity_k > n_hat {
        return Err(Error::invalid("sparsity_k exceeds atom count"));
    }
    let m = eff_phi.nrows();
    let mut psi = normalize_columns(psi0)?;
    let stack = coupling_stack(&eff_phi, gamma);
    let pinv = coupling_pinv(&eff_phi, gamma)?;

    // Z = [γX; ΦX + E]
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = Matrix::zeros(n + m, t_count);
    z.view_mut((0, 0), (n, t_count)).copy_from(&(x * gamma));
    if m > 0 {
        let mut y = &eff_phi * x;
        if cfg.noise_var > 0.0 {
            let dist =
                Normal::new(0.0, cfg.noise_var.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
            for v in y.iter_mut() {
                *v += rng.sample(dist);
            }
        }
        z.view_mut((n, 0), (m, t_count)).copy_from(&y);
    }

    let mut d = &stack * &psi;
    let mut s = Matrix::zeros(n_hat, t_count);
    let mut are_trace = Vec::with_capacity(cfg.outer_iters);
    let mut skipped = 0usize;
    for _ in 0..cfg.outer_iters {
        // sparse coding pass, selection on column-normalized D
        let mut d_coding = d.clone();
        let mut col_norms = vec![1.0f64; n_hat];
        for (j, mut c) in d_coding.column_iter_mut().enumerate() {
            let norm = c.norm();
            if norm >= 1e-300 {
                c /= norm;
                col_norms[j] = norm;
            }
        }
        let cols: Vec<Option<SparseTensor>> = (0..t_count)
            .into_par_iter()
            .map(|t| {
                let y_t = z.column(t).into_owned();
                let tol = 1e-10 * y_t.norm();
                omp(&d_coding, &y_t, cfg.sparsity_k, tol).ok()
            })
            .collect();
        s.fill(0.0);
        for (t, code) in cols.iter().enumerate() {
            match code {
                Some(c) => {
                    for (&i, &v) in c.support().iter().zip(c.values()) {
                        s[(i, t)] = v / col_norms[i];
                    }
                }
                None => skipped += 1,
            }
        }
        let mut resid = &z - &d * &s;
        are_trace.push((resid.norm_squared() / (z.len() as f64)).sqrt());

        // atom sweep
        for p in 0..n_hat {
            let omega: Vec<usize> = (0..t_count).filter(|&t| s[(p, t)] != 0.0).collect();
            if omega.is_empty() {
                // re-seed from the worst-represented column
                let t_star = (0..t_count)
                    .max_by(|&a, &b| {
                        resid.column(a)
                            .norm()
                            .partial_cmp(&resid.column(b).norm())
                            .unwrap()
                    })
                    .unwrap();
                let u = resid.column(t_star).into_owned();
                let raw = &pinv * u;
                let norm = raw.norm();
                if norm > 1e-12 {
                    let psi_new = raw / norm;
                    d.set_column(p, &(&stack * &psi_new));
                    psi.set_column(p, &psi_new);
                }
                continue;
            }
            let d_p = d.column(p).into_owned();
            let mut e = Matrix::zeros(n + m, omega.len());
            for (j, &t) in omega.iter().enumerate() {
                e.set_column(j, &(resid.column(t) + &d_p * s[(p, t)]));
            }
            let dec = linalg::svd(&e)?;
            let raw = &pinv * dec.u.column(0);
            let norm = raw.norm();
            if norm < 1e-12 {
                continue;
            }
            let psi_new = raw / norm;
            let d_new = &stack * &psi_new;
            let row_new = (e.transpose() * &d_new) / d_new.norm_squared();
            for (j, &t) in omega.iter().enumerate() {
                // resid tracks Z - D S incrementally
                let updated = resid.column(t) + &d_p * s[(p, t)] - &d_new * row_new[j];
                resid.set_column(t, &updated);
                s[(p, t)] = row_new[j];
            }
            d.set_column(p, &d_new);
            psi.set_column(p, &psi_new);
        }
    }

    let codes: Vec<SparseTensor> = (0..t_count)
        .map(|t| {
            let entries: Vec<(usize, f64)> = (0..n_hat)
                .filter(|&i| s[(i, t)] != 0.0)
                .map(|i| (i, s[(i, t)]))
                .collect();
            SparseTensor::new(vec![n_hat], entries)
        })
        .collect::<Result<_>>()?;
    Ok(LearnResult {
        psis: vec![psi],
        are_trace,
        codes,
        skipped_slices: skipped,
    })
}
