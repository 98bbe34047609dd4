//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by grid construction, data factories, the integrator,
/// the measure partitioner, and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Config file could not be parsed or failed validation.
    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },

    /// The peak-plus-background moment system has no positive solution at
    /// the requested peak scale.
    #[error(
        "infeasible background coefficients: kappa1 = {kappa1:.6e}, kappa2 = {kappa2:.6e}; \
         the peak at rho = {rho:.6e} already carries too much mass relative to its energy \
         (both coefficients must be positive; rho must stay below about {rho_bound:.3e} \
         for these targets)"
    )]
    InfeasibleKappa { kappa1: f64, kappa2: f64, rho: f64, rho_bound: f64 },

    /// Log-log fit window contains too few usable nodes.
    #[error("insufficient fit window: need at least {needed} nodes with positive values in [{lo:.3e}, {hi:.3e}], found {found}")]
    InsufficientWindow { needed: usize, found: usize, lo: f64, hi: f64 },

    /// The measure partitioner requires all mass strictly inside (0, R].
    #[error("measure has an atom at zero (mass {mass:.6e}); the dyadic family does not cover the origin")]
    AtomAtZero { mass: f64 },

    /// The measure partitioner requires positive total mass.
    #[error("measure has zero total mass")]
    ZeroMeasure,

    /// A partition certificate failed re-measurement.
    #[error("partition certificate failed: {clause}")]
    Certificate { clause: String },

    /// A time step drove a node below the positivity tolerance.
    #[error("positivity violated at t = {t:.6e}: f[{node}] = {value:.6e} (tolerance {tol:.3e})")]
    PositivityViolation { t: f64, node: usize, value: f64, tol: f64 },

    /// An input file (snapshot or atom list) did not match its schema.
    #[error("data format error in {path}: {msg}")]
    DataFormat { path: String, msg: String },

    /// Plot emission was asked to render an empty data set.
    #[error("cannot plot empty data: {0}")]
    EmptyData(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
