use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use xorcert::certify::{certify, CertifyOptions, Method, Solver, TRIMMED_CAVEAT};
use xorcert::oracle::{run_suite, verify_representation, verify_structural, SuiteConfig, DEFAULT_ENUM_BUDGET};
use xorcert::repmatrix::{DEFAULT_DENSE_CAP, DEFAULT_NNZ_BUDGET};
use xorcert::spectral::IterativeOptions;
use xorcert::sweep::{run_sweep, Density, SweepConfig};
use xorcert::{generate_random, load_instance, save_instance, Error, Execution};

/// Spectral refutation certificates for random even-arity k-XOR.
#[derive(Parser)]
#[command(name = "xorcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random instance.
    Gen(GenArgs),
    /// Certify an upper bound on the satisfiable fraction of an instance.
    Certify(CertifyArgs),
    /// Certify many random instances over a ladder of densities (CSV).
    Sweep(SweepArgs),
    /// Check representation identities and norm inequalities on an instance.
    Verify(VerifyArgs),
    /// Run the exhaustive combinatorial checks.
    Claims(ClaimsArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    k: usize,
    /// Per-tuple probability.
    #[arg(short, conflicts_with = "alpha", required_unless_present = "alpha")]
    p: Option<f64>,
    /// Density `p * n^(k-1)`.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if omitted).
    #[arg(short)]
    o: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value = "rescaled")]
    method: Method,
    /// Trimming threshold (default ceil(10 ln n)).
    #[arg(long)]
    tau: Option<usize>,
    /// quotient | dense | iterative
    #[arg(long, default_value = "quotient")]
    solver: Solver,
    /// Relative tolerance for the iterative solver.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
    dense_cap: usize,
    #[arg(long, default_value_t = DEFAULT_NNZ_BUDGET)]
    nnz_budget: u128,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> CertifyOptions {
        CertifyOptions {
            method: self.method,
            tau: self.tau,
            solver: self.solver,
            iterative: IterativeOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                seed,
                ..IterativeOptions::default()
            },
            dense_cap: self.dense_cap,
            nnz_budget: self.nnz_budget,
            exec: exec(self.sequential),
        }
    }
}

#[derive(Args)]
struct CertifyArgs {
    /// Instance file.
    #[arg(long, short = 'i')]
    instance: PathBuf,
    #[arg(long, short = 'd', default_value_t = 1)]
    d: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Seed for the iterative solver's start vector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Certificate JSON path (stdout if omitted).
    #[arg(short)]
    o: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    k: usize,
    #[arg(short, default_value_t = 1)]
    d: usize,
    /// Comma-separated probabilities.
    #[arg(short, value_delimiter = ',', conflicts_with = "alpha", required_unless_present = "alpha")]
    p: Vec<f64>,
    /// Comma-separated densities `p * n^(k-1)`.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Record per-row wall-clock time (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV path (stdout if omitted).
    #[arg(short)]
    o: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, short = 'i')]
    instance: PathBuf,
    #[arg(long, short = 'd', default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest side for the full-vector representation check.
    #[arg(long, default_value_t = 1 << 16)]
    dense_cap: usize,
    /// Largest side solved by dense eigendecomposition in the norm checks.
    #[arg(long, default_value_t = 1296)]
    eig_cap: usize,
    #[arg(short)]
    o: Option<PathBuf>,
}

#[derive(Args)]
struct ClaimsArgs {
    /// Cap on enumerated scenarios per check.
    #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
    budget: u128,
    /// Monte Carlo trials for the trace-moment check.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest set size for the even-partition counts.
    #[arg(long, default_value_t = 10)]
    max_set: usize,
    #[arg(long)]
    sequential: bool,
    #[arg(short)]
    o: Option<PathBuf>,
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_instance(path: &Path) -> Result<xorcert::Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let p = match (a.p, a.alpha) {
        (Some(p), _) => p,
        (None, Some(alpha)) => Density::Alpha(alpha).probability(a.n, a.k),
        (None, None) => bail!("one of -p or --alpha is required"),
    };
    let inst = generate_random(a.n, a.k, p, a.seed)?;
    emit(a.o.as_deref(), &save_instance(&inst))
}

fn cmd_certify(a: CertifyArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let cert = certify(&inst, a.d, &a.solver.options(a.seed))?;
    for w in &cert.warnings {
        eprintln!("warning: {w}");
    }
    if cert.caveat.is_some() {
        eprintln!("caveat: {TRIMMED_CAVEAT}");
    }
    let json = cert.to_json() + "\n";
    match &a.o {
        Some(path) => {
            emit(Some(path), &json)?;
            println!("hsat={}", cert.hsat);
        }
        None => print!("{json}"),
    }
    Ok(())
}

/// Returns whether every row failed.
fn cmd_sweep(a: SweepArgs) -> Result<bool> {
    let densities = if a.alpha.is_empty() {
        a.p.iter().map(|&p| Density::P(p)).collect()
    } else {
        a.alpha.iter().map(|&x| Density::Alpha(x)).collect()
    };
    let cfg = SweepConfig {
        certify: a.solver.options(a.seed),
        jobs: a.jobs,
        timing: a.timing,
        ..SweepConfig::new(a.n, a.k, a.d, densities, a.trials, a.seed)
    };
    let out = run_sweep(&cfg)?;
    emit(a.o.as_deref(), &out.to_csv())?;
    if out.summary.soundness_violations > 0 {
        eprintln!("warning: {} rows exceed their certificate", out.summary.soundness_violations);
    }
    Ok(out.all_failed())
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let inst = read_instance(&a.instance)?;
    let rep = verify_representation(&inst, a.d, a.trials, a.seed, a.dense_cap)?;
    let structural = verify_structural(&inst, a.d, a.eig_cap)?;
    let pass = rep.pass && structural.pass;
    let json = serde_json::json!({
        "representation": rep,
        "structural": structural,
        "pass": pass,
    });
    emit(a.o.as_deref(), &(serde_json::to_string_pretty(&json)? + "\n"))?;
    Ok(pass)
}

fn cmd_claims(a: ClaimsArgs) -> Result<bool> {
    let cfg = SuiteConfig {
        budget: a.budget,
        theorem13_trials: a.trials,
        seed: a.seed,
        max_partition_set: a.max_set,
        exec: exec(a.sequential),
    };
    let report = run_suite(&cfg)?;
    emit(a.o.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(report.pass)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::EmptyInstance) => 3,
        Some(e) if e.is_budget() => 4,
        Some(
            Error::UnsupportedArity(_)
            | Error::InvalidProbability(_)
            | Error::InvalidArgument(_)
            | Error::NotApplicable(_)
            | Error::DuplicateConstraint { .. }
            | Error::IndexOutOfRange { .. }
            | Error::BadSign(_)
            | Error::Parse { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Certify(a) => cmd_certify(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|all_failed| !all_failed),
        Command::Verify(a) => cmd_verify(a),
        Command::Claims(a) => cmd_claims(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
