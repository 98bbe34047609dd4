//! Initial-data factories and the blow-up-condition checker.
//!
//! The blow-up family is a narrow peak at the origin plus two rescaled bulk
//! bumps:
//!
//!   f₀(ε) = ρ^{−(β+1/2)}·ζ(ε/ρ) + κ₁·f̄₁(ε) + κ₂·f̄₂(ε)
//!
//! with ζ = (3/2)·χ_[0,1], f̄_k(ε) = μ_k^{3/2}·φ(μ_k ε), φ = (3m/4)·χ_[0,1]
//! (plain-convention amplitudes), μ₁ = 6M/(5E) and μ₂ = 2M/(5E). The peak
//! carries plain mass ρ^{1−β} and plain energy (3/5)·ρ^{2−β}: as ρ → 0 it
//! concentrates unbounded density at the origin while its moments vanish, and
//! the mixing coefficients κ₁, κ₂ absorb the remaining mass and energy.
//!
//! κ₁ and κ₂ are obtained by solving the 2×2 moment system against the
//! **discrete** trapezoid moments of the three sampled pieces, so the output
//! hits the requested (M, E) to rounding on any grid where the system is
//! solvable — the analytic solution is the h → 0 limit of this one. Both
//! coefficients must come out positive; otherwise the requested peak width is
//! outside the admissible range and the factory reports the approximate
//! feasibility bound on ρ.

use crate::error::{Error, Result};
use crate::grid::{cumulative_sqrt_mass, Distribution, EnergyGrid, MomentConvention};
use std::sync::Arc;

/// Parameters and solved coefficients of one blow-up datum.
#[derive(Debug, Clone)]
pub struct BlowupData {
    /// Target mass in the chosen convention.
    pub m: f64,
    /// Target energy in the chosen convention.
    pub e: f64,
    /// Peak width ρ ∈ (0, 1).
    pub rho: f64,
    /// Peak exponent β ∈ (0, 1).
    pub beta: f64,
    /// Solved mixing coefficient of the narrow bump f̄₁ (positive).
    pub kappa1: f64,
    /// Solved mixing coefficient of the wide bump f̄₂ (positive).
    pub kappa2: f64,
    /// Rescale factor of f̄₁: 6M/(5E).
    pub mu1: f64,
    /// Rescale factor of f̄₂: 2M/(5E).
    pub mu2: f64,
    /// Convention in which (m, e) are measured.
    pub convention: MomentConvention,
    dist: Distribution,
}

impl BlowupData {
    /// The constructed distribution.
    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }

    /// Consume and return just the distribution.
    pub fn into_distribution(self) -> Distribution {
        self.dist
    }
}

/// Plain trapezoid moment of raw nodal values against ε^w.
fn plain_trapezoid(grid: &EnergyGrid, vals: &[f64], w: f64) -> f64 {
    let n = grid.len();
    let mut acc = 0.0;
    for i in 0..n {
        let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += weight * vals[i] * grid.node(i).powf(w);
    }
    acc * grid.h()
}

/// Build the blow-up family datum on the given grid. (m, e) are the moment
/// targets in `convention`; the output satisfies
/// moment_with(·, Mass/Energy, convention) = (m, e) to rounding.
pub fn make_blowup_data(
    grid: Arc<EnergyGrid>,
    m: f64,
    e: f64,
    rho: f64,
    beta: f64,
    convention: MomentConvention,
) -> Result<BlowupData> {
    for (name, v) in [("M", m), ("E", e)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    for (name, v) in [("rho", rho), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    // Plain-convention targets; the family's pieces are normalized without
    // the phase-space prefactor.
    let tm = m / convention.prefactor();
    let te = e / convention.prefactor();
    let mu1 = 1.2 * tm / te;
    let mu2 = 0.4 * tm / te;
    if grid.eps_max() < 1.0 / mu2 {
        return Err(Error::InvalidArgument(format!(
            "grid must contain the support of the wide bump: eps_max = {} < 1/mu2 = {}",
            grid.eps_max(),
            1.0 / mu2
        )));
    }
    let peak_height = 1.5 * rho.powf(-(beta + 0.5));
    let amp = 0.75 * tm;
    let b1_height = amp * mu1.powf(1.5);
    let b2_height = amp * mu2.powf(1.5);
    let n = grid.len();
    let mut peak = vec![0.0; n];
    let mut b1 = vec![0.0; n];
    let mut b2 = vec![0.0; n];
    for i in 0..n {
        let eps = grid.node(i);
        if eps <= rho {
            peak[i] = peak_height;
        }
        if mu1 * eps <= 1.0 {
            b1[i] = b1_height;
        }
        if mu2 * eps <= 1.0 {
            b2[i] = b2_height;
        }
    }
    // Discrete piece moments; the 2×2 system targets the trapezoid
    // quadrature exactly.
    let mz = plain_trapezoid(&grid, &peak, 0.5);
    let ez = plain_trapezoid(&grid, &peak, 1.5);
    let mb1 = plain_trapezoid(&grid, &b1, 0.5);
    let eb1 = plain_trapezoid(&grid, &b1, 1.5);
    let mb2 = plain_trapezoid(&grid, &b2, 0.5);
    let eb2 = plain_trapezoid(&grid, &b2, 1.5);
    let det = mb1 * eb2 - mb2 * eb1;
    // Analytically det = tm·te/4 > 0; a vanishing determinant means the grid
    // cannot resolve the two bumps as distinct pieces.
    if det.abs() <= 1e-12 * (mb1 * eb2).abs().max((mb2 * eb1).abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(format!(
            "grid too coarse to separate the bulk pieces (moment determinant {det:.3e}); \
             refine the grid or enlarge eps_max"
        )));
    }
    let rm = tm - mz;
    let re = te - ez;
    let kappa1 = (rm * eb2 - mb2 * re) / det;
    let kappa2 = (mb1 * re - rm * eb1) / det;
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        // Approximate feasibility bound from the analytic system:
        // κ₁ = 1 − 3ρ^{1−β}/tm + (6/5)ρ^{2−β}/te > 0 needs roughly
        // ρ^{1−β} < tm/3.
        let rho_bound = (tm / 3.0).powf(1.0 / (1.0 - beta)).min(1.0);
        return Err(Error::InfeasibleKappa { kappa1, kappa2, rho, rho_bound });
    }
    let f: Vec<f64> = (0..n)
        .map(|i| peak[i] + kappa1 * b1[i] + kappa2 * b2[i])
        .collect();
    let dist = Distribution::new(grid, f)?;
    Ok(BlowupData { m, e, rho, beta, kappa1, kappa2, mu1, mu2, convention, dist })
}

/// Bose–Einstein equilibrium occupation f_i = 1/(e^{βε_i + α} − 1). α > 0
/// keeps the origin node bounded (the borderline α = 0 equilibrium diverges
/// at ε = 0, and condensate atoms are not representable on the f-grid).
pub fn make_bose_einstein(grid: Arc<EnergyGrid>, beta: f64, alpha: f64) -> Result<Distribution> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be positive and finite, got {beta}"
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive and finite (boundedness at the origin), got {alpha}"
        )));
    }
    Distribution::from_fn(grid, |eps| 1.0 / (beta * eps + alpha).exp_m1())
}

/// Parameters of the lower-density blow-up condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionParams {
    /// Density constant ν in m(R) ≥ ν·R^{3/2}.
    pub nu: f64,
    /// Mass constant K* in m(ρ) ≥ K*·ρ^{θ*}.
    pub k_star: f64,
    /// Mass exponent θ*.
    pub theta_star: f64,
    /// Upper end of the scanned radii.
    pub rho0: f64,
}

/// Outcome of the condition scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// True when some scanned radius satisfies both inequalities.
    pub satisfied: bool,
    /// The smallest radius that works, if any.
    pub witness_rho: Option<f64>,
}

/// Scan the grid-representable radii ρ ∈ (0, ρ₀] and test, with
/// m(R) = ∫₀^R f√ε dε in the plain convention,
///   (i)  m(R) ≥ ν·R^{3/2} for every node radius 0 < R ≤ ρ, and
///   (ii) m(ρ) ≥ K*·ρ^{θ*}.
/// Returns the first (smallest) witness radius.
pub fn check_condition(d: &Distribution, p: &ConditionParams) -> Result<ConditionReport> {
    for (name, v) in [
        ("nu", p.nu),
        ("k_star", p.k_star),
        ("theta_star", p.theta_star),
        ("rho0", p.rho0),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let grid = d.grid();
    let cum = cumulative_sqrt_mass(d);
    let mut density_holds_so_far = true;
    for j in 1..grid.len() {
        let r = grid.node(j);
        if r > p.rho0 {
            break;
        }
        density_holds_so_far = density_holds_so_far && cum[j] >= p.nu * r.powf(1.5);
        if density_holds_so_far && cum[j] >= p.k_star * r.powf(p.theta_star) {
            return Ok(ConditionReport { satisfied: true, witness_rho: Some(r) });
        }
    }
    Ok(ConditionReport { satisfied: false, witness_rho: None })
}
