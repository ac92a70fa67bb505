//! Spectral certificates bounding the satisfiable fraction of random
//! even-arity k-XOR instances.
//!
//! The pipeline runs instance -> symmetric flattening -> Kronecker power ->
//! type-symmetric representation -> (rescaled | trimmed | plain) -> spectral
//! norm -> certified bound. [`oracle`] holds the exhaustive checkers used to
//! test it, and [`sweep`] drives density experiments.

pub mod certify;
pub mod error;
pub mod exec;
pub mod instance;
pub mod oracle;
pub mod polynomial;
pub mod repmatrix;
pub mod seed;
pub mod spectral;
pub mod sweep;
pub mod tuple;

pub use certify::{certify, theory_bound, Certificate, CertifyOptions, Method, Solver};
pub use error::{Error, Result};
pub use exec::Execution;
pub use instance::{
    generate_random, load_instance, save_instance, Assignment, Constraint, Instance, SatFraction, Sign,
};
pub use polynomial::{eval_polynomial, symmetric_flattening, SparseMatrix, SparseSymMatrix};
pub use repmatrix::{hist_sum, TypeSymMatrix, TypeSymOperator};
pub use spectral::{spectral_norm_dense, spectral_norm_iterative, trace_power, LinearOperator, SpectralResult};
