//! Spectral norms of symmetric matrices: a dense eigendecomposition, a
//! matrix-free Lanczos estimate, and trace powers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Symmetric linear map on `R^dim`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `out = A v`; `out` has length `dim()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralMethod {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub norm_estimate: f64,
    /// `||A v - lambda v||` of the reported extreme Ritz pair.
    pub residual_bound: f64,
    pub method: SpectralMethod,
    pub iterations: usize,
}

/// Absolute asymmetry tolerated by [`spectral_norm_dense`].
pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    for j in 0..m.ncols() {
        for i in 0..j {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > SYMMETRY_TOL || diff.is_nan() {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    Ok(())
}

/// Index sets of the connected components of the nonzero pattern. The
/// matrix is block diagonal over them, so its spectrum is the union of the
/// blocks' spectra.
pub fn diagonal_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        let mut block = Vec::new();
        while let Some(i) = stack.pop() {
            block.push(i);
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && m[(i, j)] != 0.0 {
                    *s = true;
                    stack.push(j);
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    blocks
}

fn block_of(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn non_finite() -> Error {
    Error::NoConvergence {
        estimate: f64::NAN,
        residual: f64::NAN,
        iterations: 0,
    }
}

/// `max |lambda|` from full symmetric eigendecompositions of the diagonal
/// blocks. The QR sweep is unreliable on matrices that decouple exactly, so
/// decoupled blocks are solved separately.
pub fn spectral_norm_dense(m: &DMatrix<f64>) -> Result<SpectralResult> {
    check_symmetric(m)?;
    let mut best = (0.0f64, 0.0f64);
    for idx in diagonal_blocks(m) {
        let b = block_of(m, &idx);
        let eig = SymmetricEigen::new(b.clone());
        if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(non_finite());
        }
        let (at, lambda) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("blocks are nonempty");
        if lambda.abs() >= best.0 {
            let v = eig.eigenvectors.column(at);
            let residual = (&b * v - v * lambda).norm();
            best = (lambda.abs(), residual);
        }
    }
    Ok(SpectralResult {
        norm_estimate: best.0,
        residual_bound: best.1,
        method: SpectralMethod::Dense,
        iterations: 1,
    })
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let mut ev = Vec::with_capacity(m.nrows());
    for idx in diagonal_blocks(m) {
        let vals = block_of(m, &idx).symmetric_eigenvalues();
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(non_finite());
        }
        ev.extend(vals.iter().copied());
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `tr(M^{2l}) = sum_i lambda_i^{2l}`.
pub fn trace_power(m: &DMatrix<f64>, ell: usize) -> Result<f64> {
    if ell == 0 {
        return Err(Error::InvalidArgument("ell must be at least 1".into()));
    }
    Ok(eigenvalues(m)?.iter().map(|l| l.powi(2 * ell as i32)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions {
    pub tol: f64,
    /// Defaults to `10 * dim` when `None`.
    pub max_iter: Option<usize>,
    pub seed: u64,
    /// Recompute Ritz values every this many Lanczos steps.
    pub check_every: usize,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        IterativeOptions {
            tol: 1e-8,
            max_iter: None,
            seed: 0,
            check_every: 8,
        }
    }
}

/// Largest `|lambda|` of a symmetric operator by Lanczos with full
/// reorthogonalization.
///
/// Both ends of the spectrum come out of the same Krylov space, so one run
/// covers `A` and `-A`. The reported residual is `beta_j |y_last|` for the
/// extreme Ritz pair; convergence means `residual <= tol * norm`. The Krylov
/// dimension never exceeds `dim`; reaching it (or an invariant subspace) makes
/// the Ritz values exact.
pub fn spectral_norm_iterative<O: LinearOperator + ?Sized>(
    op: &O,
    opts: &IterativeOptions,
) -> Result<SpectralResult> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let dim = op.dim();
    let max_iter = opts.max_iter.unwrap_or(10 * dim.max(1));
    let steps = max_iter.min(dim);
    if dim == 0 || steps == 0 {
        return Ok(SpectralResult {
            norm_estimate: 0.0,
            residual_bound: 0.0,
            method: SpectralMethod::Iterative,
            iterations: 0,
        });
    }

    let mut rng = stream_rng(opts.seed, 7);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = vec![0.0; dim];
    let mut best = (0.0f64, f64::INFINITY);
    let check_every = opts.check_every.max(1);

    for j in 0..steps {
        op.apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&w, b);
                axpy(-proj, b, &mut w);
            }
        }
        let b_next = dot(&w, &w).sqrt();
        let scale = alpha.iter().chain(beta.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
        let breakdown = b_next <= 1e-13 * scale.max(f64::MIN_POSITIVE) || b_next == 0.0;
        let last = j + 1 == steps;

        if breakdown || last || (j + 1) % check_every == 0 {
            let (theta, resid) = extreme_ritz(&alpha, &beta, if breakdown { 0.0 } else { b_next });
            best = (theta, resid);
            let converged = resid <= opts.tol * theta || (theta == 0.0 && resid == 0.0);
            if breakdown || converged {
                return Ok(SpectralResult {
                    norm_estimate: theta,
                    residual_bound: resid,
                    method: SpectralMethod::Iterative,
                    iterations: j + 1,
                });
            }
            if last {
                break;
            }
        }
        beta.push(b_next);
        let next: Vec<f64> = w.iter().map(|x| x / b_next).collect();
        basis.push(next);
    }

    Err(Error::NoConvergence {
        estimate: best.0,
        residual: best.1,
        iterations: alpha.len(),
    })
}

/// Extreme `|theta|` of the tridiagonal `T_j` and its Ritz residual.
fn extreme_ritz(alpha: &[f64], beta: &[f64], b_next: f64) -> (f64, f64) {
    let j = alpha.len();
    let mut t = DMatrix::zeros(j, j);
    for i in 0..j {
        t[(i, i)] = alpha[i];
        if i + 1 < j {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, theta) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("nonempty");
    let y_last = eig.eigenvectors[(j - 1, idx)];
    (theta.abs(), (b_next * y_last).abs())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Power iteration on `A^2` with Hotelling deflation; returns the `count`
/// largest `|lambda|`. Slow, used only to cross-check the dense solver.
pub fn power_iteration_abs(m: &DMatrix<f64>, count: usize, iters: usize, seed: u64) -> Vec<f64> {
    let n = m.nrows();
    let mut rng = stream_rng(seed, 11);
    let mut a = m.clone();
    let mut out = Vec::new();
    for _ in 0..count.min(n) {
        let sq = &a * &a;
        let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        v /= v.norm();
        let mut mu = 0.0;
        for _ in 0..iters {
            let w = &sq * &v;
            let nw = w.norm();
            if nw == 0.0 {
                mu = 0.0;
                break;
            }
            mu = v.dot(&w);
            v = w / nw;
        }
        let lambda = v.dot(&(&a * &v));
        out.push(mu.max(0.0).sqrt());
        a -= &v * v.transpose() * lambda;
    }
    out
}
