//! Discrete-energy laboratory for the isotropic bosonic Nordheim kinetic
//! equation.
//!
//! The crate evolves isotropic occupation numbers f(t, ε) on a uniform energy
//! grid under the four-wave collision operator, with two interchangeable
//! bookkeepings (a weak form that conserves mass and energy exactly at the
//! discrete level, and a nodal collocation form), explicit and exponential
//! time stepping, a family of concentrated initial data whose evolution is
//! expected to leave the bounded regime in finite time, and the diagnostics
//! used to certify what happened: conserved sums, entropy, monotonicity
//! pairings, a power-law exponent fit, and a dyadic partition of the mass
//! measure into concentrated or separated pieces.

pub mod collision;
pub mod config;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod initdata;
pub mod integrator;
pub mod io;
pub mod kernel;
pub mod measure;

pub use collision::{
    collide_collocation, collide_conservative, gain_loss_split, GainLossSplit, RateVector,
};
pub use config::{parse_config, InitialData, SimConfig};
pub use error::{Error, Result};
pub use functionals::{
    concentration_functional, entropy, g_phi, g_phi_permutation_average, q_phi_pairing, Shape,
    TestFunction,
};
pub use grid::{
    conserved_energy, conserved_mass, cumulative_sqrt_mass, make_grid, mass_below, moment,
    moment_with, Distribution, EnergyGrid, MomentConvention, MomentKind, MOMENT_PREFACTOR,
};
pub use initdata::{
    check_condition, make_blowup_data, make_bose_einstein, BlowupData, ConditionParams,
    ConditionReport,
};
pub use integrator::{
    fit_exponent, fit_exponent_points, run, step_exponential, step_rk4, ExponentFit,
    MomentReport, OperatorKind, RunOutcome, RunParams, RunStatus, Scheme, SimState,
};
pub use io::{
    build_initial, plot_dyadic, plot_loglog, plot_moments, read_atoms, read_snapshot,
    series_header, write_json, write_series, write_snapshot, RunSummary,
};
pub use kernel::{
    loss_rate_closed, loss_rate_direct, omega, phi, q_cubic, q_quadratic, w_kernel,
    LossRateDecomposition, COLLOCATION_COEFF, WEAK_CUBIC_COEFF, WEAK_QUAD_COEFF,
};
pub use measure::{
    concentration_report, dyadic_intervals, partition_measure, ConcentrationReport,
    DiscreteMeasure, DyadicFamily, IntervalFlag, LevelReport, PartitionCase, PartitionResult,
};
