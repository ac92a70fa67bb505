//! Density sweeps: many seeded certifications over a ladder of `p` values,
//! written as CSV with a trailing summary block.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::certify::{certify, CertifyOptions};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::instance::{check_arity, generate_random};
use crate::oracle::brute_force_max_sat;
use crate::seed::derive_seed;

/// Largest `n` for which sweep rows include the exact maximum.
pub const SWEEP_BRUTE_FORCE_MAX_N: usize = 14;

pub const CSV_HEADER: &str = "n,k,d,p,seed,m,norm_root,hsat,max_sat,runtime_ms,error";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// Per-tuple probability.
    P(f64),
    /// Constraints per `n^{k-1}`: `p = alpha / n^{k-1}`.
    Alpha(f64),
}

impl Density {
    pub fn probability(self, n: usize, k: usize) -> f64 {
        match self {
            Density::P(p) => p,
            Density::Alpha(a) => a / (n as f64).powi(k as i32 - 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub densities: Vec<Density>,
    pub trials_per_p: usize,
    pub certify: CertifyOptions,
    pub base_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Record wall-clock time per row. Off by default so output is
    /// byte-reproducible.
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(n: usize, k: usize, d: usize, densities: Vec<Density>, trials_per_p: usize, base_seed: u64) -> Self {
        SweepConfig {
            n,
            k,
            d,
            densities,
            trials_per_p,
            certify: CertifyOptions::default(),
            base_seed,
            jobs: None,
            timing: false,
        }
    }

    /// Resolved probabilities, validated to lie in `(0, 1]`.
    pub fn p_values(&self) -> Result<Vec<f64>> {
        check_arity(self.k)?;
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidArgument("n and d must be positive".into()));
        }
        if self.trials_per_p == 0 {
            return Err(Error::InvalidArgument("trials per p must be at least 1".into()));
        }
        if self.densities.is_empty() {
            return Err(Error::InvalidArgument("no density values given".into()));
        }
        self.densities
            .iter()
            .map(|d| {
                let p = d.probability(self.n, self.k);
                if p > 0.0 && p <= 1.0 {
                    Ok(p)
                } else {
                    Err(Error::InvalidProbability(p))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub p: f64,
    pub p_index: usize,
    pub seed: u64,
    pub m: Option<usize>,
    pub norm_root: Option<f64>,
    pub hsat: Option<f64>,
    pub max_sat: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn excess(&self) -> Option<f64> {
        self.hsat.map(|h| h - 0.5)
    }

    fn csv_line(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let error = self
            .error
            .as_deref()
            .map(|e| e.replace([',', '\n'], ";"))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.d,
            self.p,
            self.seed,
            opt(&self.m),
            opt(&self.norm_root),
            opt(&self.hsat),
            opt(&self.max_sat),
            self.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
            error
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PSummary {
    pub p: f64,
    pub ok_rows: usize,
    pub median_norm_root: Option<f64>,
    pub median_excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub per_p: Vec<PSummary>,
    /// Least-squares slope of `log median norm_root` against `log p`.
    pub slope_norm_root: Option<f64>,
    /// Least-squares slope of `log median (hsat - 1/2)` against `log p`.
    pub slope_excess: Option<f64>,
    /// Rows where the exact maximum exceeds the certificate.
    pub soundness_violations: usize,
    pub failed_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

impl SweepOutput {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        let s = &self.summary;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
        out.push_str("# summary\n");
        for ps in &s.per_p {
            let _ = writeln!(
                out,
                "# p={} ok={} median_norm_root={} median_excess={}",
                ps.p,
                ps.ok_rows,
                opt(ps.median_norm_root),
                opt(ps.median_excess)
            );
        }
        let _ = writeln!(out, "# slope_norm_root={}", opt(s.slope_norm_root));
        let _ = writeln!(out, "# slope_excess={}", opt(s.slope_excess));
        let _ = writeln!(out, "# soundness_violations={}", s.soundness_violations);
        let _ = writeln!(out, "# failed_rows={}", s.failed_rows);
        out
    }
}

fn run_row(cfg: &SweepConfig, p_index: usize, p: f64, trial: usize) -> SweepRow {
    let seed = derive_seed(cfg.base_seed, &[p_index as u64, trial as u64]);
    let start = Instant::now();
    let mut row = SweepRow {
        n: cfg.n,
        k: cfg.k,
        d: cfg.d,
        p,
        p_index,
        seed,
        m: None,
        norm_root: None,
        hsat: None,
        max_sat: None,
        runtime_ms: None,
        error: None,
    };
    let result = generate_random(cfg.n, cfg.k, p, seed).and_then(|inst| {
        row.m = Some(inst.m());
        let cert = certify(&inst, cfg.d, &cfg.certify)?;
        let max_sat = if cfg.n <= SWEEP_BRUTE_FORCE_MAX_N {
            Some(brute_force_max_sat(&inst)?.0.as_f64())
        } else {
            None
        };
        Ok((cert, max_sat))
    });
    match result {
        Ok((cert, max_sat)) => {
            row.norm_root = Some(cert.norm_root);
            row.hsat = Some(cert.hsat);
            row.max_sat = max_sat;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if cfg.timing {
        row.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    row
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    let ps = cfg.p_values()?;
    let jobs: Vec<(usize, f64, usize)> = ps
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| (0..cfg.trials_per_p).map(move |t| (i, p, t)))
        .collect();
    let exec = cfg.certify.exec;
    // Rows are built inside the pool so per-row work (brute force, apply)
    // does not oversubscribe.
    let inner = CertifyOptions {
        exec: Execution::Sequential,
        ..cfg.certify.clone()
    };
    let row_cfg = SweepConfig {
        certify: inner,
        ..cfg.clone()
    };
    let compute = || exec.map_slice(&jobs, |&(i, p, t)| run_row(&row_cfg, i, p, t));
    let rows = with_jobs(cfg.jobs, compute)?;
    let summary = summarize(&ps, &rows);
    Ok(SweepOutput { rows, summary })
}

#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T: Send>(_jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

pub fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    })
}

/// Least-squares slope of `log y` against `log x` over positive finite
/// pairs; `None` with fewer than two distinct usable `x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

fn summarize(ps: &[f64], rows: &[SweepRow]) -> SweepSummary {
    let per_p: Vec<PSummary> = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.p_index == i && r.error.is_none()).collect();
            let mut roots: Vec<f64> = ok.iter().filter_map(|r| r.norm_root).collect();
            let mut excess: Vec<f64> = ok.iter().filter_map(|r| r.excess()).collect();
            PSummary {
                p,
                ok_rows: ok.len(),
                median_norm_root: median(&mut roots),
                median_excess: median(&mut excess),
            }
        })
        .collect();
    let pairs = |f: fn(&PSummary) -> Option<f64>| -> Vec<(f64, f64)> {
        per_p.iter().filter_map(|s| f(s).map(|y| (s.p, y))).collect()
    };
    SweepSummary {
        slope_norm_root: log_log_slope(&pairs(|s| s.median_norm_root)),
        slope_excess: log_log_slope(&pairs(|s| s.median_excess)),
        soundness_violations: rows
            .iter()
            .filter(|r| matches!((r.max_sat, r.hsat), (Some(a), Some(h)) if a > h))
            .count(),
        failed_rows: rows.iter().filter(|r| r.error.is_some()).count(),
        per_p,
    }
}
