//! Conservative (weak-form) and collocation forms of the collision operator.
//!
//! Both operators run over the admissible index set
//! {(i₁, i₂, i₃, i₄): i₁ + i₂ = i₃ + i₄, all on the grid}, which encodes the
//! energy constraint exactly in integer arithmetic.
//!
//! The conservative form books each triple's transfer symmetrically in the
//! density g: with X = [C₃f₁f₂f₃ + C₂f₁f₂]·Φ the pair (i₁, i₂) deposits X
//! into nodes i₃ and i₄ and removes X from i₁ and i₂, so the plain node sums
//! Σ dg_j·h (mass) and Σ ε_j·dg_j·h (energy) cancel per triple. The weak
//! coefficients are C₃ = 32π³ and C₂ = 16π³; pairing the deposits of a
//! quadruple with the reversed pair reproduces the collocation integrand
//! (8π²/√2)·W·(q₃ + q₂) node by node, so away from floating-point rounding
//! the two forms are the same operator expressed in different bookkeeping.
//!
//! Chunked evaluation: the pair loop is split into fixed-size blocks of i₁
//! whose partial accumulators are merged in block order. The result is
//! bitwise reproducible for any thread count, because each block's sums and
//! the merge order never depend on scheduling.

use std::sync::Arc;

use rayon::prelude::*;

use crate::grid::{Distribution, EnergyGrid, MOMENT_PREFACTOR};
use crate::kernel::{diagonal_window, COLLOCATION_COEFF, WEAK_CUBIC_COEFF, WEAK_QUAD_COEFF};

/// Fixed i₁-block size for the deterministic parallel merge.
const BLOCK: usize = 32;

/// Per-node collision rates in both densities, plus the absolute deposit
/// scale used to normalize residual checks.
#[derive(Debug, Clone)]
pub struct RateVector {
    grid: Arc<EnergyGrid>,
    dg_dt: Vec<f64>,
    df_dt: Vec<f64>,
    abs_mass_scale: f64,
}

impl RateVector {
    /// Rate of change of the energy density g at each node.
    pub fn dg_dt(&self) -> &[f64] {
        &self.dg_dt
    }

    /// Rate of change of the occupation f at each node. The origin node
    /// carries no phase-space weight in g-form, so the conservative operator
    /// reports df/dt = 0 there; the collocation operator evaluates its
    /// continuity-limit rate instead.
    pub fn df_dt(&self) -> &[f64] {
        &self.df_dt
    }

    /// Grid the rates refer to.
    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    /// Plain-sum mass rate h·Σ dg_j (identically zero for the conservative
    /// operator up to rounding).
    pub fn mass_rate(&self) -> f64 {
        self.grid.h() * self.dg_dt.iter().sum::<f64>()
    }

    /// Plain-sum energy rate h·Σ ε_j·dg_j.
    pub fn energy_rate(&self) -> f64 {
        let nodes = self.grid.nodes();
        self.grid.h()
            * self
                .dg_dt
                .iter()
                .zip(nodes)
                .map(|(&r, &e)| r * e)
                .sum::<f64>()
    }

    /// Σ |dg_j|·h, the magnitude of the reported rates.
    pub fn abs_rate(&self) -> f64 {
        self.grid.h() * self.dg_dt.iter().map(|r| r.abs()).sum::<f64>()
    }

    /// Energy-weighted magnitude Σ ε_j·|dg_j|·h.
    pub fn abs_energy_rate(&self) -> f64 {
        let nodes = self.grid.nodes();
        self.grid.h()
            * self
                .dg_dt
                .iter()
                .zip(nodes)
                .map(|(&r, &e)| r.abs() * e)
                .sum::<f64>()
    }

    /// Total absolute deposit mass rate h·Σ_j (sum of |individual deposits|
    /// into j): the throughput scale against which residuals are measured.
    pub fn abs_mass_scale(&self) -> f64 {
        self.abs_mass_scale
    }
}

/// One block of the conservative pair sweep; deposits land in `acc` (units
/// of dg/h²) and the returned value accumulates Σ|deposit|.
fn weak_block(grid: &EnergyGrid, f: &[f64], cubic_only: bool, i1_lo: usize, i1_hi: usize, acc: &mut [f64]) -> f64 {
    let n = grid.len();
    let max = n - 1;
    let sq = grid.sqrt_nodes();
    let c2base = if cubic_only { 0.0 } else { WEAK_QUAD_COEFF };
    let mut abs = 0.0;
    for i1 in i1_lo..i1_hi {
        let f1 = f[i1];
        if f1 == 0.0 {
            continue;
        }
        for i2 in i1..n {
            let p = f1 * f[i2];
            if p == 0.0 {
                continue;
            }
            let pair_weight = if i1 == i2 { 1.0 } else { 2.0 };
            let pc3 = pair_weight * WEAK_CUBIC_COEFF * p;
            let pc2 = pair_weight * c2base * p;
            let s = i1 + i2;
            let (lo, hi) = diagonal_window(s, max);
            let mut tot = 0.0;
            let mut tot_abs = 0.0;
            // i₁ ≤ i₂ and √ε is monotone, so Φ = √ε at the smallest index.
            for i3 in lo..=hi {
                let i4 = s - i3;
                let kernel = sq[i1.min(i3).min(i4)];
                let x = (pc3 * f[i3] + pc2) * kernel;
                acc[i3] += x;
                acc[i4] += x;
                tot += x;
                tot_abs += x.abs();
            }
            acc[i1] -= tot;
            acc[i2] -= tot;
            abs += 2.0 * tot_abs + 2.0 * tot.abs();
        }
    }
    abs
}

/// Conservative collision rates on raw values (used by integrator stages,
/// which may carry transient sub-zero values from Runge–Kutta arithmetic).
pub(crate) fn weak_rates_on(grid: &Arc<EnergyGrid>, f: &[f64], cubic_only: bool) -> RateVector {
    let n = grid.len();
    let h = grid.h();
    let blocks: Vec<(usize, usize)> = (0..n)
        .step_by(BLOCK)
        .map(|lo| (lo, (lo + BLOCK).min(n)))
        .collect();
    let partials: Vec<(Vec<f64>, f64)> = blocks
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = vec![0.0; n];
            let abs = weak_block(grid, f, cubic_only, lo, hi, &mut acc);
            (acc, abs)
        })
        .collect();
    let mut acc = vec![0.0; n];
    let mut abs = 0.0;
    for (partial, partial_abs) in partials {
        for (a, p) in acc.iter_mut().zip(&partial) {
            *a += p;
        }
        abs += partial_abs;
    }
    let h2 = h * h;
    let dg_dt: Vec<f64> = acc.iter().map(|&a| h2 * a).collect();
    let sq = grid.sqrt_nodes();
    let mut df_dt = vec![0.0; n];
    for j in 1..n {
        df_dt[j] = dg_dt[j] / (MOMENT_PREFACTOR * sq[j]);
    }
    RateVector {
        grid: grid.clone(),
        dg_dt,
        df_dt,
        abs_mass_scale: h * h2 * abs,
    }
}

/// Conservative collision operator. `cubic_only` drops the quadratic
/// (spontaneous) channel, leaving the pure cubic exchange.
pub fn collide_conservative(d: &Distribution, cubic_only: bool) -> RateVector {
    debug_assert!((2.0 * WEAK_QUAD_COEFF - WEAK_CUBIC_COEFF).abs() < 1e-12 * WEAK_CUBIC_COEFF);
    weak_rates_on(d.grid(), d.values(), cubic_only)
}

/// Collocation rates on raw values.
pub(crate) fn collocation_rates_on(grid: &Arc<EnergyGrid>, f: &[f64]) -> RateVector {
    let n = grid.len();
    let max = n - 1;
    let h = grid.h();
    let sq = grid.sqrt_nodes();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let f1 = f[i1];
            let mut acc = 0.0;
            let mut abs = 0.0;
            if i1 == 0 {
                for i2 in 1..n {
                    let f2 = f[i2];
                    for i3 in 1..i2 {
                        let (f3, f4) = (f[i3], f[i2 - i3]);
                        let gain = f3 * f4 * (1.0 + f1 + f2);
                        let loss = f1 * f2 * (1.0 + f3 + f4);
                        acc += gain - loss;
                        abs += gain.abs() + loss.abs();
                    }
                }
            } else {
                let inv_sq1 = 1.0 / sq[i1];
                for i2 in 0..n {
                    let f2 = f[i2];
                    let s = i1 + i2;
                    let (lo, hi) = diagonal_window(s, max);
                    let m12 = i1.min(i2);
                    for i3 in lo..=hi {
                        let i4 = s - i3;
                        let w = sq[m12.min(i3).min(i4)] * inv_sq1;
                        let (f3, f4) = (f[i3], f[i4]);
                        let gain = f3 * f4 * (1.0 + f1 + f2) * w;
                        let loss = f1 * f2 * (1.0 + f3 + f4) * w;
                        acc += gain - loss;
                        abs += gain.abs() + loss.abs();
                    }
                }
            }
            let scale = COLLOCATION_COEFF * h * h;
            (scale * acc, scale * abs)
        })
        .collect();
    let mut df_dt = vec![0.0; n];
    let mut dg_dt = vec![0.0; n];
    let mut abs_mass = 0.0;
    for (j, (rate, abs)) in rows.into_iter().enumerate() {
        df_dt[j] = rate;
        dg_dt[j] = MOMENT_PREFACTOR * sq[j] * rate;
        abs_mass += MOMENT_PREFACTOR * sq[j] * abs;
    }
    RateVector {
        grid: grid.clone(),
        dg_dt,
        df_dt,
        abs_mass_scale: h * abs_mass,
    }
}

/// Collocation (strong-form) collision operator:
/// df₁/dt = (8π²/√2)·h²·Σ W·(q₃ + q₂) over admissible (i₃, i₄).
pub fn collide_collocation(d: &Distribution) -> RateVector {
    collocation_rates_on(d.grid(), d.values())
}

/// Gain/loss split of the collocation rate at one node:
/// rate = gain − loss_coeff·f₁ with both parts nonnegative for f ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLossSplit {
    /// (8π²/√2)·h²·Σ f₃f₄(1 + f₁ + f₂)·W.
    pub gain: f64,
    /// Loss rate a(ε₁) = (8π²/√2)·h²·Σ f₂(1 + f₃ + f₄)·W.
    pub loss_coeff: f64,
}

/// Split the rate at node i₁ into gain and multiplicative loss.
pub fn gain_loss_split(d: &Distribution, i1: usize) -> GainLossSplit {
    let (gain, loss) = gain_loss_at(d.grid(), d.values(), i1);
    GainLossSplit { gain, loss_coeff: loss }
}

pub(crate) fn gain_loss_at(grid: &EnergyGrid, f: &[f64], i1: usize) -> (f64, f64) {
    let n = grid.len();
    assert!(i1 < n, "node index {i1} out of range for {n} nodes");
    let max = n - 1;
    let h = grid.h();
    let sq = grid.sqrt_nodes();
    let f1 = f[i1];
    let mut gain = 0.0;
    let mut loss = 0.0;
    if i1 == 0 {
        for i2 in 1..n {
            let f2 = f[i2];
            let mut g_acc = 0.0;
            let mut l_acc = 0.0;
            for i3 in 1..i2 {
                let (f3, f4) = (f[i3], f[i2 - i3]);
                g_acc += f3 * f4;
                l_acc += 1.0 + f3 + f4;
            }
            gain += (1.0 + f1 + f2) * g_acc;
            loss += f2 * l_acc;
        }
    } else {
        let inv_sq1 = 1.0 / sq[i1];
        for i2 in 0..n {
            let f2 = f[i2];
            let s = i1 + i2;
            let (lo, hi) = diagonal_window(s, max);
            let m12 = i1.min(i2);
            let mut g_acc = 0.0;
            let mut l_acc = 0.0;
            for i3 in lo..=hi {
                let i4 = s - i3;
                let w = sq[m12.min(i3).min(i4)] * inv_sq1;
                let (f3, f4) = (f[i3], f[i4]);
                g_acc += f3 * f4 * w;
                l_acc += (1.0 + f3 + f4) * w;
            }
            gain += (1.0 + f1 + f2) * g_acc;
            loss += f2 * l_acc;
        }
    }
    let scale = COLLOCATION_COEFF * h * h;
    (scale * gain, scale * loss)
}

/// Gain and loss vectors for every node (one admissible sweep per node), the
/// workhorse of the exponential integrator.
pub(crate) fn gain_loss_all(grid: &EnergyGrid, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i1| gain_loss_at(grid, f, i1))
        .collect();
    let mut gain = Vec::with_capacity(n);
    let mut loss = Vec::with_capacity(n);
    for (g, l) in pairs {
        gain.push(g);
        loss.push(l);
    }
    (gain, loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, moment, Distribution, MomentKind};
    use crate::kernel::loss_rate_direct;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_distribution(n: usize, eps_max: f64, seed: u64, sup: f64) -> Distribution {
        let grid = make_grid(eps_max, n).unwrap().into_shared();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * sup).collect();
        Distribution::new(grid, f).unwrap()
    }

    /// Naive ordered-sum oracle: loops all (i₁, i₂, i₃) with no pair folding.
    fn naive_weak_rates(d: &Distribution, cubic_only: bool) -> Vec<f64> {
        let grid = d.grid();
        let n = grid.len();
        let max = n - 1;
        let sq = grid.sqrt_nodes();
        let f = d.values();
        let c2 = if cubic_only { 0.0 } else { WEAK_QUAD_COEFF };
        let mut acc = vec![0.0; n];
        for i1 in 0..n {
            for i2 in 0..n {
                let s = i1 + i2;
                let (lo, hi) = diagonal_window(s, max);
                for i3 in lo..=hi {
                    let i4 = s - i3;
                    let kernel = sq[i1.min(i2).min(i3).min(i4)];
                    let x = (WEAK_CUBIC_COEFF * f[i1] * f[i2] * f[i3] + c2 * f[i1] * f[i2]) * kernel;
                    acc[i3] += x;
                    acc[i4] += x;
                    acc[i1] -= 2.0 * x;
                }
            }
        }
        let h2 = grid.h() * grid.h();
        acc.iter().map(|&a| h2 * a).collect()
    }

    #[test]
    fn folded_sweep_matches_naive_ordered_sum() {
        for seed in [1, 2, 3] {
            let d = random_distribution(12, 1.0, seed, 2.0);
            let rates = collide_conservative(&d, false);
            let naive = naive_weak_rates(&d, false);
            let scale: f64 = naive.iter().map(|x| x.abs()).fold(1e-300, f64::max);
            for j in 0..12 {
                assert!(
                    (rates.dg_dt()[j] - naive[j]).abs() <= 1e-12 * scale,
                    "node {j}: folded {} vs naive {}",
                    rates.dg_dt()[j],
                    naive[j]
                );
            }
            let cubic = collide_conservative(&d, true);
            let naive_cubic = naive_weak_rates(&d, true);
            for j in 0..12 {
                assert!((cubic.dg_dt()[j] - naive_cubic[j]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn conservative_rates_sum_to_zero() {
        let d = random_distribution(48, 2.0, 5, 1.0);
        let rates = collide_conservative(&d, false);
        let mass_scale = rates.abs_rate().max(1e-300);
        let energy_scale = rates.abs_energy_rate().max(1e-300);
        assert!(rates.mass_rate().abs() <= 1e-12 * mass_scale);
        assert!(rates.energy_rate().abs() <= 1e-12 * energy_scale);
    }

    #[test]
    fn vacuum_nodes_only_gain() {
        let n = 32;
        let grid = make_grid(1.0, n).unwrap().into_shared();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.0 } else { rng.random() }).collect();
        let d = Distribution::new(grid, f).unwrap();
        let cons = collide_conservative(&d, false);
        let coll = collide_collocation(&d);
        for j in 0..n {
            if d.f(j) == 0.0 {
                assert!(cons.df_dt()[j] >= 0.0, "conservative df[{j}] = {}", cons.df_dt()[j]);
                assert!(coll.df_dt()[j] >= 0.0, "collocation df[{j}] = {}", coll.df_dt()[j]);
            }
        }
    }

    #[test]
    fn dirac_at_one_node_is_stationary_for_the_cubic_channel() {
        let n = 33;
        let grid = make_grid(1.0, n).unwrap().into_shared();
        let mut f = vec![0.0; n];
        f[17] = 3.0;
        let d = Distribution::new(grid, f).unwrap();
        let rates = collide_conservative(&d, true);
        for j in 0..n {
            assert_eq!(rates.dg_dt()[j], 0.0, "node {j} moved");
            assert_eq!(rates.df_dt()[j], 0.0);
        }
    }

    #[test]
    fn collocation_agrees_with_conservative_in_g_form() {
        // The two bookkeepings regroup the same admissible quadruple terms,
        // so away from rounding they are the same operator.
        let d = random_distribution(24, 1.0, 21, 1.5);
        let cons = collide_conservative(&d, false);
        let coll = collide_collocation(&d);
        let scale: f64 = cons
            .dg_dt()
            .iter()
            .map(|x| x.abs())
            .fold(1e-300, f64::max);
        for j in 1..24 {
            assert!(
                (cons.dg_dt()[j] - coll.dg_dt()[j]).abs() <= 1e-12 * scale,
                "node {j}: conservative {} vs collocation {}",
                cons.dg_dt()[j],
                coll.dg_dt()[j]
            );
        }
        assert_eq!(cons.dg_dt()[0], 0.0);
        assert_eq!(coll.dg_dt()[0], 0.0);
    }

    #[test]
    fn gain_minus_loss_reproduces_the_collocation_rate() {
        let d = random_distribution(32, 1.5, 13, 1.0);
        let coll = collide_collocation(&d);
        for i1 in 0..32 {
            let split = gain_loss_split(&d, i1);
            assert!(split.gain >= 0.0);
            assert!(split.loss_coeff >= 0.0);
            let rate = split.gain - split.loss_coeff * d.f(i1);
            let scale = split.gain.abs() + (split.loss_coeff * d.f(i1)).abs();
            assert!(
                (rate - coll.df_dt()[i1]).abs() <= 1e-12 * scale.max(1e-300),
                "i1 = {i1}: split rate {rate} vs collocation {}",
                coll.df_dt()[i1]
            );
            assert_relative_eq!(
                split.loss_coeff,
                loss_rate_direct(&d, i1),
                max_relative = 1e-13,
                epsilon = 1e-300
            );
        }
    }

    #[test]
    fn moments_move_slower_than_the_deposit_scale() {
        // Sanity on the throughput normalization: actual rates are bounded
        // by the absolute deposit scale.
        let d = random_distribution(40, 1.0, 2, 0.8);
        let rates = collide_conservative(&d, false);
        assert!(rates.abs_rate() <= rates.abs_mass_scale() * (1.0 + 1e-12));
        let m = moment(&d, MomentKind::Mass);
        assert!(m > 0.0);
    }
}
