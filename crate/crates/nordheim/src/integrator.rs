//! Time stepping: classical RK4, the exponential (mild-form) step, and the
//! adaptive driver with blow-up detection.
//!
//! The driver controls the step through the loss coefficient: dt is capped by
//! cfl_c / max_i a(ε_i), where a is the multiplicative loss rate, so the
//! explicit steps stay inside their stability region while the collision
//! rates stiffen. A run ends in one of four ways: the horizon t_end is
//! reached; the occupation supremum crosses the blow-up cap f_cap; the stable
//! step falls below dt_min while the supremum is still growing (treated as
//! blow-up) or while it is not (step underflow); or the RK4 combination
//! leaves the positivity tolerance.

use rayon::prelude::*;

use crate::collision::{collocation_rates_on, gain_loss_all, weak_rates_on, RateVector};
use crate::error::{Error, Result};
use crate::functionals::entropy;
use crate::grid::{conserved_energy, conserved_mass, mass_below, Distribution, EnergyGrid};
use crate::kernel::loss_rate_direct_on;

/// Relative positivity tolerance for RK4: values in
/// [−RK4_POSITIVITY_TOL·sup f, 0) are clipped to zero, anything lower aborts.
const RK4_POSITIVITY_TOL: f64 = 1e-13;

/// Steps between refreshes of the cached loss-coefficient bound.
const LOSS_REFRESH_STRIDE: u64 = 8;

/// Relative supremum growth that forces an early loss-bound refresh.
const LOSS_REFRESH_GROWTH: f64 = 1.1;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Classical fourth-order Runge–Kutta on the chosen operator.
    Rk4,
    /// Exponential step on the mild form f ← f·e^{−a·dt} + (gain/a)(1−e^{−a·dt}),
    /// unconditionally positivity-preserving.
    Exponential,
}

/// Which bookkeeping of the collision operator drives RK4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Weak-form deposits, conserving plain node sums exactly.
    Conservative,
    /// Strong-form nodal rates (identical up to rounding, but with a live
    /// origin node).
    Collocation,
}

/// Instantaneous state of a simulation.
#[derive(Debug, Clone)]
pub struct SimState {
    t: f64,
    step: u64,
    dist: Distribution,
}

impl SimState {
    /// State at t = 0.
    pub fn initial(dist: Distribution) -> Self {
        SimState { t: 0.0, step: 0, dist }
    }

    /// Current time.
    pub fn time(&self) -> f64 {
        self.t
    }

    /// Number of accepted steps so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Current distribution.
    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }
}

fn rate_of(grid: &std::sync::Arc<EnergyGrid>, f: &[f64], op: OperatorKind, cubic_only: bool) -> RateVector {
    match op {
        OperatorKind::Conservative => weak_rates_on(grid, f, cubic_only),
        OperatorKind::Collocation => collocation_rates_on(grid, f),
    }
}

fn add_scaled(base: &[f64], dir: &[f64], scale: f64) -> Vec<f64> {
    base.iter().zip(dir).map(|(&b, &d)| b + scale * d).collect()
}

/// One classical RK4 step of size dt. Stage values may transiently leave
/// [0, ∞); the final combination is clipped to zero within
/// RK4_POSITIVITY_TOL·sup f and rejected below that.
pub fn step_rk4(state: &SimState, dt: f64, op: OperatorKind, cubic_only: bool) -> Result<SimState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    let grid = state.dist.grid().clone();
    let f0 = state.dist.values();
    let k1 = rate_of(&grid, f0, op, cubic_only);
    let y = add_scaled(f0, k1.df_dt(), 0.5 * dt);
    let k2 = rate_of(&grid, &y, op, cubic_only);
    let y = add_scaled(f0, k2.df_dt(), 0.5 * dt);
    let k3 = rate_of(&grid, &y, op, cubic_only);
    let y = add_scaled(f0, k3.df_dt(), dt);
    let k4 = rate_of(&grid, &y, op, cubic_only);
    let sixth = dt / 6.0;
    let mut f_new: Vec<f64> = (0..f0.len())
        .map(|i| {
            f0[i]
                + sixth
                    * (k1.df_dt()[i] + 2.0 * k2.df_dt()[i] + 2.0 * k3.df_dt()[i] + k4.df_dt()[i])
        })
        .collect();
    let t_new = state.t + dt;
    let tol = RK4_POSITIVITY_TOL * state.dist.sup();
    for (i, v) in f_new.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite occupation {v} at node {i} after a step to t = {t_new}; \
                 the step size is too large for the current rates"
            )));
        }
        if *v < -tol {
            return Err(Error::PositivityViolation { t: t_new, node: i, value: *v, tol });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(SimState {
        t: t_new,
        step: state.step + 1,
        dist: Distribution::from_valid(grid, f_new),
    })
}

fn exponential_update(f: &[f64], gain: &[f64], loss: &[f64], dt: f64) -> Vec<f64> {
    f.iter()
        .enumerate()
        .map(|(i, &fi)| {
            let x = loss[i] * dt;
            let decay = (-x).exp();
            let source = if x < 1e-8 {
                // 1 − e^{−x} = x + O(x²): the quotient form loses all digits.
                gain[i] * dt
            } else {
                gain[i] / loss[i] * (1.0 - decay)
            };
            fi * decay + source
        })
        .collect()
}

/// One exponential step of size dt on the mild form. Both the decayed value
/// and the source term are nonnegative, so no clipping is needed.
pub fn step_exponential(state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    let grid = state.dist.grid().clone();
    let (gain, loss) = gain_loss_all(&grid, state.dist.values());
    let f_new = exponential_update(state.dist.values(), &gain, &loss, dt);
    Ok(SimState {
        t: state.t + dt,
        step: state.step + 1,
        dist: Distribution::from_valid(grid, f_new),
    })
}

/// Everything the driver needs besides the initial data.
#[derive(Debug, Clone)]
pub struct RunParams {
    /// Stepping scheme.
    pub scheme: Scheme,
    /// Operator bookkeeping used by RK4 (the exponential scheme is built on
    /// the gain/loss split and ignores this choice).
    pub operator: OperatorKind,
    /// Drop the quadratic channel, keeping only the cubic exchange.
    pub cubic_only: bool,
    /// Step-size ceiling.
    pub dt0: f64,
    /// Floor below which the stable step counts as underflow/blow-up.
    pub dt_min: f64,
    /// Stability fraction: dt ≤ cfl_c / max a.
    pub cfl_c: f64,
    /// Blow-up cap on sup f; None derives 10⁶ × the initial supremum.
    pub f_cap: Option<f64>,
    /// Time horizon.
    pub t_end: f64,
    /// Record a report every this many accepted steps.
    pub report_stride: u64,
    /// Radii for partial-mass columns in the report series.
    pub mass_below_radii: Vec<f64>,
    /// Energy window for the running power-law fit, if any.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            scheme: Scheme::Rk4,
            operator: OperatorKind::Conservative,
            cubic_only: false,
            dt0: 1e-3,
            dt_min: 1e-10,
            cfl_c: 0.5,
            f_cap: None,
            t_end: 1.0,
            report_stride: 1,
            mass_below_radii: Vec::new(),
            fit_window: None,
        }
    }
}

/// Terminal condition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Reached t_end.
    Completed,
    /// sup f crossed f_cap, or the stable step underflowed while sup f was
    /// still growing.
    BlowupDetected,
    /// The stable step fell below dt_min without growth of sup f.
    StepUnderflow,
    /// RK4 produced a value below the positivity tolerance.
    PositivityViolation,
}

impl RunStatus {
    /// Stable machine-readable name.
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowupDetected => "blowup_detected",
            RunStatus::StepUnderflow => "step_underflow",
            RunStatus::PositivityViolation => "positivity_violation",
        }
    }

    /// Process exit code reported by the command-line driver.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::BlowupDetected => 10,
            RunStatus::StepUnderflow => 11,
            RunStatus::PositivityViolation => 12,
        }
    }
}

/// One row of the observable series.
#[derive(Debug, Clone)]
pub struct MomentReport {
    /// Simulation time.
    pub t: f64,
    /// Conserved mass (plain node sum).
    pub mass: f64,
    /// Conserved energy (plain node sum).
    pub energy: f64,
    /// Bose entropy.
    pub entropy: f64,
    /// Supremum of the occupation.
    pub f_sup: f64,
    /// Partial masses below the configured radii, in order.
    pub mass_below: Vec<f64>,
    /// Fitted power-law exponent over the configured window, when the fit
    /// has enough populated nodes.
    pub exponent: Option<f64>,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Why the run stopped.
    pub status: RunStatus,
    /// Detection time for blow-up outcomes.
    pub t_detect: Option<f64>,
    /// Observable series at the report stride (always includes t = 0 and the
    /// final state).
    pub series: Vec<MomentReport>,
    /// State at the end of the run (the last accepted step).
    pub final_state: SimState,
    /// Accepted steps.
    pub steps: u64,
    /// Supremum of the initial data.
    pub sup_initial: f64,
    /// The cap actually used for detection.
    pub f_cap_used: f64,
    /// Human-readable detail for abnormal terminations.
    pub note: Option<String>,
}

fn make_report(state: &SimState, p: &RunParams) -> MomentReport {
    let d = state.distribution();
    MomentReport {
        t: state.t,
        mass: conserved_mass(d),
        energy: conserved_energy(d),
        entropy: entropy(d),
        f_sup: d.sup(),
        mass_below: p.mass_below_radii.iter().map(|&r| mass_below(d, r)).collect(),
        exponent: p
            .fit_window
            .and_then(|(lo, hi)| fit_exponent(d, lo, hi).ok().map(|e| e.exponent)),
    }
}

fn max_loss_coefficient(grid: &EnergyGrid, f: &[f64]) -> f64 {
    (0..grid.len())
        .into_par_iter()
        .map(|i1| loss_rate_direct_on(grid, f, i1))
        .reduce(|| 0.0, f64::max)
}

fn validate_params(p: &RunParams) -> Result<()> {
    let positive = [("dt0", p.dt0), ("dt_min", p.dt_min), ("cfl_c", p.cfl_c)];
    for (name, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if p.dt_min > p.dt0 {
        return Err(Error::InvalidArgument(format!(
            "dt_min = {} exceeds dt0 = {}",
            p.dt_min, p.dt0
        )));
    }
    if !(p.t_end.is_finite() && p.t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be nonnegative and finite, got {}",
            p.t_end
        )));
    }
    if let Some(cap) = p.f_cap {
        if !(cap > 0.0) {
            return Err(Error::InvalidArgument(format!("f_cap must be positive, got {cap}")));
        }
    }
    if p.report_stride == 0 {
        return Err(Error::InvalidArgument("report_stride must be at least 1".into()));
    }
    if let Some((lo, hi)) = p.fit_window {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "fit window must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// Drive the simulation from the given initial data until one of the
/// terminal conditions holds. Errors are reserved for invalid parameters or
/// non-finite arithmetic; physical terminations (including positivity
/// failures) are reported through the outcome status.
pub fn run(d0: Distribution, p: &RunParams) -> Result<RunOutcome> {
    validate_params(p)?;
    let grid = d0.grid().clone();
    let sup0 = d0.sup();
    let f_cap = p.f_cap.unwrap_or(if sup0 > 0.0 { 1e6 * sup0 } else { f64::INFINITY });
    let mut state = SimState::initial(d0);
    let mut series = vec![make_report(&state, p)];
    let mut last_report_step = 0u64;
    let mut t_detect = None;
    let mut note = None;
    let mut prev_sup = sup0;
    let mut growing = false;
    // Cached bound on the loss coefficient for step control.
    let mut a_max = 0.0;
    let mut a_fresh_at: Option<(u64, f64)> = None; // (step, sup at refresh)

    let status = loop {
        let remaining = p.t_end - state.t;
        if remaining <= 0.0 {
            break RunStatus::Completed;
        }
        let sup_now = state.dist.sup();
        let (gain_loss, a_bound) = match p.scheme {
            Scheme::Exponential => {
                // The step needs the full split anyway; keep it for reuse.
                let gl = gain_loss_all(&grid, state.dist.values());
                let bound = gl.1.iter().cloned().fold(0.0, f64::max);
                (Some(gl), bound)
            }
            Scheme::Rk4 => {
                let stale = match a_fresh_at {
                    None => true,
                    Some((step, sup_then)) => {
                        state.step - step >= LOSS_REFRESH_STRIDE
                            || sup_now > LOSS_REFRESH_GROWTH * sup_then
                    }
                };
                if stale {
                    a_max = max_loss_coefficient(&grid, state.dist.values());
                    a_fresh_at = Some((state.step, sup_now));
                }
                (None, a_max)
            }
        };
        let dt_stab = if a_bound > 0.0 {
            p.dt0.min(p.cfl_c / a_bound)
        } else {
            p.dt0
        };
        if dt_stab < p.dt_min {
            break if growing {
                t_detect = Some(state.t);
                note = Some(format!(
                    "stable step {dt_stab:.3e} fell below dt_min while sup f was growing"
                ));
                RunStatus::BlowupDetected
            } else {
                RunStatus::StepUnderflow
            };
        }
        let hits_end = dt_stab >= remaining;
        let dt = if hits_end { remaining } else { dt_stab };
        let stepped = match (p.scheme, gain_loss) {
            (Scheme::Exponential, Some((gain, loss))) => {
                let f_new = exponential_update(state.dist.values(), &gain, &loss, dt);
                Ok(SimState {
                    t: state.t + dt,
                    step: state.step + 1,
                    dist: Distribution::from_valid(grid.clone(), f_new),
                })
            }
            _ => step_rk4(&state, dt, p.operator, p.cubic_only),
        };
        match stepped {
            Ok(mut next) => {
                if hits_end {
                    next.t = p.t_end;
                }
                state = next;
            }
            Err(Error::PositivityViolation { t, node, value, tol }) => {
                note = Some(format!(
                    "f[{node}] = {value:.6e} fell below −{tol:.3e} at t = {t:.6e}"
                ));
                break RunStatus::PositivityViolation;
            }
            Err(e) => return Err(e),
        }
        let sup_new = state.dist.sup();
        growing = sup_new > prev_sup;
        prev_sup = sup_new;
        if sup_new >= f_cap {
            t_detect = Some(state.t);
            series.push(make_report(&state, p));
            last_report_step = state.step;
            break RunStatus::BlowupDetected;
        }
        if state.step % p.report_stride == 0 {
            series.push(make_report(&state, p));
            last_report_step = state.step;
        }
    };
    if state.step != last_report_step || series.is_empty() {
        series.push(make_report(&state, p));
    }
    let steps = state.step;
    Ok(RunOutcome {
        status,
        t_detect,
        series,
        final_state: state,
        steps,
        sup_initial: sup0,
        f_cap_used: f_cap,
        note,
    })
}

/// Least-squares power-law fit over an energy window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    /// p in f ≈ c·ε^{−p} (negated log-log slope).
    pub exponent: f64,
    /// Coefficient of determination of the log-log line.
    pub r_squared: f64,
    /// Number of nodes that entered the fit.
    pub nodes_used: usize,
}

/// Fit ln f against ln ε on the nodes with ε ∈ [lo, hi] and f > 0.
pub fn fit_exponent(d: &Distribution, lo: f64, hi: f64) -> Result<ExponentFit> {
    let pairs: Vec<(f64, f64)> = d
        .grid()
        .nodes()
        .iter()
        .zip(d.values())
        .map(|(&e, &f)| (e, f))
        .collect();
    fit_exponent_points(&pairs, lo, hi)
}

/// Fit ln f against ln ε on raw (ε, f) samples restricted to ε ∈ [lo, hi]
/// and f > 0. At least four samples must survive the restriction.
pub fn fit_exponent_points(points: &[(f64, f64)], lo: f64, hi: f64) -> Result<ExponentFit> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "fit window must satisfy 0 < lo < hi (finite), got [{lo}, {hi}]"
        )));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(e, f)| e >= lo && e <= hi && f > 0.0)
        .map(|&(e, f)| (e.ln(), f.ln()))
        .collect();
    let m = logs.len();
    if m < 4 {
        return Err(Error::InsufficientWindow { needed: 4, found: m, lo, hi });
    }
    let inv = 1.0 / m as f64;
    let xbar = logs.iter().map(|&(x, _)| x).sum::<f64>() * inv;
    let ybar = logs.iter().map(|&(_, y)| y).sum::<f64>() * inv;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in &logs {
        let dx = x - xbar;
        let dy = y - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(ExponentFit { exponent: -slope, r_squared, nodes_used: m })
}
