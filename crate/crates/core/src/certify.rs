//! The refutation pipeline: `S^Phi -> R^{Phi,d} -> (rescale | trim) -> norm
//! -> hsat`.
//!
//! For the rescaled matrix, every assignment satisfies
//! `|f(x)|^d <= ||R~|| * sum_I mult(I)!`, and `sat(x) = 1/2 + f(x)/(2m)`, so
//! `hsat = 1/2 + (||R~|| * hist_sum(n, kd/2))^{1/d} / (2m)` bounds
//! `|sat(x) - 1/2| + 1/2` for every `x`. The plain variant replaces
//! `hist_sum` with `n^{kd/2} = ||x^{(x)q}||^2`. The trimmed variant uses the
//! same formula but the trimmed matrix no longer represents `f^d`, so its
//! output is a heuristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::instance::Instance;
use crate::polynomial::symmetric_flattening;
use crate::repmatrix::{
    default_trim_threshold, hist_sum_root, TypeSymMatrix, TypeSymOperator, DEFAULT_DENSE_CAP,
    DEFAULT_NNZ_BUDGET,
};
use crate::spectral::{spectral_norm_dense, spectral_norm_iterative, IterativeOptions};

/// Multiplicative inflation applied to exact (dense) norms.
pub const DENSE_SLACK: f64 = 1e-9;

pub const TRIMMED_CAVEAT: &str = "trimmed matrix is not a matrix representation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rescaled,
    Trimmed,
    Plain,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rescaled" => Ok(Method::Rescaled),
            "trimmed" => Ok(Method::Trimmed),
            "plain" => Ok(Method::Plain),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// How the spectral norm is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Exact eigendecomposition of the small type-quotient matrix.
    Quotient,
    /// Exact eigendecomposition of the materialized `n^q x n^q` matrix.
    Dense,
    /// Matrix-free Lanczos on the `n^q`-dimensional operator.
    Iterative,
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quotient" => Ok(Solver::Quotient),
            "dense" => Ok(Solver::Dense),
            "iterative" => Ok(Solver::Iterative),
            other => Err(Error::InvalidArgument(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub method: Method,
    /// Trimming threshold; `None` uses `ceil(10 ln n)`.
    pub tau: Option<usize>,
    pub solver: Solver,
    pub iterative: IterativeOptions,
    pub dense_cap: usize,
    pub nnz_budget: u128,
    pub exec: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            method: Method::Rescaled,
            tau: None,
            solver: Solver::Quotient,
            iterative: IterativeOptions::default(),
            dense_cap: DEFAULT_DENSE_CAP,
            nnz_budget: DEFAULT_NNZ_BUDGET,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub kind: Solver,
    pub residual_bound: f64,
    pub iterations: usize,
    /// False for iterative estimates, which approach the norm from below.
    pub authoritative: bool,
}

/// Output of the pipeline. Field order is the JSON field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub m: usize,
    pub method: Method,
    pub spectral_norm: f64,
    pub norm_root: f64,
    pub hist_sum_root: f64,
    pub slack: f64,
    pub hsat: f64,
    pub solver: SolverInfo,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Certificate {
    /// `hsat - 1/2`, the certified bound on `|sat(x) - 1/2|`.
    pub fn excess(&self) -> f64 {
        self.hsat - 0.5
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Build `R^{Phi,d}` for an instance.
pub fn representation(inst: &Instance, d: usize, nnz_budget: u128) -> Result<TypeSymMatrix> {
    let s = symmetric_flattening(inst)?;
    TypeSymMatrix::from_symmetric_power(&s, inst.k(), d, nnz_budget)
}

/// The matrix whose norm a method certifies with.
pub fn method_matrix(r: &TypeSymMatrix, method: Method, tau: Option<usize>) -> Result<TypeSymMatrix> {
    match method {
        Method::Rescaled => r.rescale(),
        Method::Trimmed => r.trim(tau.unwrap_or_else(|| default_trim_threshold(r.n()))),
        Method::Plain => Ok(r.clone()),
    }
}

/// Spectral norm of a type-symmetric matrix with the chosen solver.
pub fn spectral_norm(r: &TypeSymMatrix, opts: &CertifyOptions) -> Result<(f64, SolverInfo)> {
    let (res, authoritative) = match opts.solver {
        Solver::Quotient => (spectral_norm_dense(&r.quotient_matrix())?, true),
        Solver::Dense => (spectral_norm_dense(&r.materialize_dense(opts.dense_cap)?)?, true),
        Solver::Iterative => {
            let op = TypeSymOperator::new(r, opts.exec)?;
            (spectral_norm_iterative(&op, &opts.iterative)?, false)
        }
    };
    let info = SolverInfo {
        kind: opts.solver,
        residual_bound: res.residual_bound,
        iterations: res.iterations,
        authoritative,
    };
    Ok((res.norm_estimate, info))
}

/// Run the full pipeline on an instance.
pub fn certify(inst: &Instance, d: usize, opts: &CertifyOptions) -> Result<Certificate> {
    if inst.m() == 0 {
        return Err(Error::EmptyInstance);
    }
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    let r = representation(inst, d, opts.nnz_budget)?;
    let tau = match opts.method {
        Method::Trimmed => Some(opts.tau.unwrap_or_else(|| default_trim_threshold(inst.n()))),
        _ => None,
    };
    let target = method_matrix(&r, opts.method, tau)?;
    let (norm, solver) = spectral_norm(&target, opts)?;
    Ok(assemble(inst, d, opts.method, tau, norm, solver))
}

fn assemble(
    inst: &Instance,
    d: usize,
    method: Method,
    tau: Option<usize>,
    norm: f64,
    solver: SolverInfo,
) -> Certificate {
    let (n, k) = (inst.n(), inst.k());
    let q = k * d / 2;
    let slack = if solver.authoritative || norm == 0.0 {
        DENSE_SLACK
    } else {
        solver.residual_bound / norm + DENSE_SLACK
    };
    let norm_root = norm.powf(1.0 / d as f64);
    let hist_root = match method {
        Method::Rescaled => hist_sum_root(n, q, d),
        // (n^q)^{1/d} = n^{k/2}
        Method::Trimmed | Method::Plain => (n as f64).powf(k as f64 / 2.0),
    };
    let m = inst.m();
    let hsat = 0.5 + norm_root * hist_root * (1.0 + slack) / (2.0 * m as f64);

    let mut warnings = Vec::new();
    if d > n {
        warnings.push(format!(
            "d={d} exceeds n={n}; the (k/2+1)^q n^q simplification of the histogram sum does not apply"
        ));
    }
    if !solver.authoritative {
        warnings.push("iterative norm estimate; certificate is not authoritative".into());
    }
    Certificate {
        version: 1,
        n,
        k,
        d,
        m,
        method,
        spectral_norm: norm,
        norm_root,
        hist_sum_root: hist_root,
        slack,
        hsat,
        solver,
        seed: inst.seed(),
        tau,
        caveat: (method == Method::Trimmed).then(|| TRIMMED_CAVEAT.to_string()),
        warnings,
    }
}

/// Reporting-only theoretical bound on `hsat - 1/2` for the rescaled method:
/// `c ln(n) / sqrt(d^{k/2-1} n^{k/2} p) * e^{3k/4} (k/2+1)^{k/2} / (k/2)^{k/4}`.
///
/// `c` is an unspecified absolute constant; callers pass 1 to study trends.
pub fn theory_bound(n: usize, k: usize, d: usize, p: f64, c: f64) -> Result<f64> {
    crate::instance::check_arity(k)?;
    let h = k as f64 / 2.0;
    let scale = p * (d as f64).powf(h - 1.0) * (n as f64).powf(h);
    if scale.is_nan() || scale <= 1.0 {
        return Err(Error::NotApplicable(format!(
            "p d^(k/2-1) n^(k/2) = {scale} is not above 1"
        )));
    }
    let kf = k as f64;
    let constant = (3.0 * kf / 4.0).exp() * (h + 1.0).powf(h) / h.powf(kf / 4.0);
    Ok(c * (n as f64).ln() / scale.sqrt() * constant)
}
