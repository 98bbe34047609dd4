//! Collision kernels and loss-rate representations.
//!
//! All rates live on energy quadruples (ε₁, ε₂, ε₃, ε₄) with
//! ε₁ + ε₂ = ε₃ + ε₄. The symmetric kernel is
//! Φ = min{√ε₁, √ε₂, √ε₃, √ε₄}; the loss-form kernel is W = Φ/√ε₁,
//! set to zero when ε₃ + ε₄ ≤ ε₁ and extended by continuity at ε₁ = 0
//! (W = 1 there when min(ε₃, ε₄) > 0, else 0, since ε₁ is then the unique
//! minimizer).
//!
//! The loss rate a(ε₁) = (8π²/√2)∬ f₂(1 + f₃ + f₄)·W dε₃dε₄ admits a
//! decomposition into a leading √ε₁-moment term plus two nonnegative
//! remainders: the quadratic remainder S₁ comes from the kernel weight
//! ε₁·ω(ε₂/ε₁) left over after extracting √(ε₁ε₂) from the diagonal
//! ξ-integral, and S₂ carries the cubic f₂(f₃ + f₄) part. On the grid both
//! routes are evaluated as regroupings of the same admissible triple sum, so
//! they agree to rounding; S₁ converges to the ω-weighted integral as h → 0.

use crate::grid::{Distribution, EnergyGrid};

/// 8π²/√2, the coefficient of the collision integral in f-form.
pub const COLLOCATION_COEFF: f64 =
    8.0 * std::f64::consts::PI * std::f64::consts::PI / std::f64::consts::SQRT_2;

/// 32π³, the weak-form coefficient of the cubic channel (g-form bookkeeping).
pub const WEAK_CUBIC_COEFF: f64 =
    32.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

/// 16π³, the weak-form coefficient of the quadratic channel.
pub const WEAK_QUAD_COEFF: f64 =
    16.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

/// Symmetric collision kernel Φ = min{√ε₁, √ε₂, √ε₃, √ε₄}.
pub fn phi(e1: f64, e2: f64, e3: f64, e4: f64) -> f64 {
    debug_assert!(e1 >= 0.0 && e2 >= 0.0 && e3 >= 0.0 && e4 >= 0.0);
    e1.min(e2).min(e3).min(e4).sqrt()
}

/// Loss-form kernel W(ε₁; ε₃, ε₄) = Φ/√ε₁ with ε₂ = ε₃ + ε₄ − ε₁.
///
/// Returns 0 when ε₃ + ε₄ ≤ ε₁ (the conjugate energy is not positive) and
/// takes the continuity value at ε₁ = 0: W = 1 when min(ε₃, ε₄) > 0, else 0.
pub fn w_kernel(e1: f64, e3: f64, e4: f64) -> f64 {
    debug_assert!(e1 >= 0.0 && e3 >= 0.0 && e4 >= 0.0);
    if e3 + e4 <= e1 {
        return 0.0;
    }
    if e1 == 0.0 {
        return if e3.min(e4) > 0.0 { 1.0 } else { 0.0 };
    }
    let e2 = e3 + e4 - e1;
    phi(e1, e2, e3, e4) / e1.sqrt()
}

/// Cubic collision factor q₃ = f₃f₄(f₁ + f₂) − f₁f₂(f₃ + f₄).
pub fn q_cubic(f1: f64, f2: f64, f3: f64, f4: f64) -> f64 {
    f3 * f4 * (f1 + f2) - f1 * f2 * (f3 + f4)
}

/// Quadratic collision factor q₂ = f₃f₄ − f₁f₂.
pub fn q_quadratic(f1: f64, f2: f64, f3: f64, f4: f64) -> f64 {
    f3 * f4 - f1 * f2
}

/// Diagonal kernel weight ω(x) = x^{3/2}/3 for x ≤ 1 and x − √x + 1/3 for
/// x ≥ 1; continuous at x = 1 with ω(1) = 1/3.
pub fn omega(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 1.0 {
        x.powf(1.5) / 3.0
    } else {
        x - x.sqrt() + 1.0 / 3.0
    }
}

/// Admissible i₃ window for a fixed pair sum s on a grid with top index max:
/// i₃ ∈ [max(0, s − max), min(s, max)], paired with i₄ = s − i₃.
#[inline]
pub(crate) fn diagonal_window(s: usize, max: usize) -> (usize, usize) {
    (s.saturating_sub(max), s.min(max))
}

/// Direct quadrature of the loss rate
/// a(ε₁) = (8π²/√2)·h²·Σ f₂(1 + f₃ + f₄)·W over admissible (i₃, i₄).
pub fn loss_rate_direct(d: &Distribution, i1: usize) -> f64 {
    loss_rate_direct_on(d.grid(), d.values(), i1)
}

pub(crate) fn loss_rate_direct_on(grid: &EnergyGrid, f: &[f64], i1: usize) -> f64 {
    let n = grid.len();
    assert!(i1 < n, "node index {i1} out of range for {n} nodes");
    let sq = grid.sqrt_nodes();
    let h = grid.h();
    let max = n - 1;
    let mut acc = 0.0;
    if i1 == 0 {
        // Continuity convention: W = 1 on interior diagonal nodes, 0 when
        // ε₃ or ε₄ vanishes.
        for i2 in 1..n {
            let f2 = f[i2];
            if f2 == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for i3 in 1..i2 {
                inner += 1.0 + f[i3] + f[i2 - i3];
            }
            acc += f2 * inner;
        }
    } else {
        let inv_sq1 = 1.0 / sq[i1];
        for i2 in 0..n {
            let f2 = f[i2];
            if f2 == 0.0 {
                continue;
            }
            let s = i1 + i2;
            let (lo, hi) = diagonal_window(s, max);
            let m12 = i1.min(i2);
            let mut inner = 0.0;
            for i3 in lo..=hi {
                let i4 = s - i3;
                let w = sq[m12.min(i3).min(i4)] * inv_sq1;
                inner += (1.0 + f[i3] + f[i4]) * w;
            }
            acc += f2 * inner;
        }
    }
    COLLOCATION_COEFF * h * h * acc
}

/// Loss rate split into the leading moment term and two nonnegative
/// remainders; `total()` reproduces [`loss_rate_direct`] to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRateDecomposition {
    /// (8π²/√2)·√ε₁·∫f√ε dε (plain Riemann core over the grid).
    pub leading: f64,
    /// Quadratic remainder: the diagonal kernel mass beyond √(ε₁ε₂), the
    /// discrete counterpart of (8π²ε₁/√2)∫f₂·ω(ε₂/ε₁)dε₂.
    pub s1: f64,
    /// Cubic remainder (8π²/√2)∬f₂(f₃ + f₄)W.
    pub s2: f64,
}

impl LossRateDecomposition {
    /// leading + s1 + s2.
    pub fn total(&self) -> f64 {
        self.leading + self.s1 + self.s2
    }
}

/// Evaluate the loss rate through its decomposition. The three pieces
/// regroup exactly the admissible triple sum of the direct quadrature:
/// per conjugate node i₂ the diagonal kernel sum h·ΣW is split into
/// √(ε₁ε₂) (collected into `leading`) plus its excess (collected into `s1`),
/// and the f₂(f₃+f₄)W part is accumulated into `s2`.
///
/// For nonnegative f with support away from the grid edge (so that no
/// admissible diagonal is clipped at ε_max) both s1 and s2 are nonnegative;
/// edge-supported data can push individual s1 terms negative because the
/// clipped diagonal carries less kernel mass than √(ε₁ε₂).
pub fn loss_rate_closed(d: &Distribution, i1: usize) -> LossRateDecomposition {
    let grid = d.grid();
    let f = d.values();
    let n = grid.len();
    assert!(i1 < n, "node index {i1} out of range for {n} nodes");
    let sq = grid.sqrt_nodes();
    let h = grid.h();
    let max = n - 1;
    let sq1 = sq[i1];
    let mut lead_core = 0.0;
    let mut s1_acc = 0.0;
    let mut s2_acc = 0.0;
    for i2 in 0..n {
        let f2 = f[i2];
        if f2 == 0.0 {
            continue;
        }
        let s = i1 + i2;
        let mut wsum = 0.0;
        let mut gsum = 0.0;
        if i1 == 0 {
            for i3 in 1..i2 {
                wsum += 1.0;
                gsum += f[i3] + f[i2 - i3];
            }
        } else {
            let (lo, hi) = diagonal_window(s, max);
            let inv_sq1 = 1.0 / sq1;
            let m12 = i1.min(i2);
            for i3 in lo..=hi {
                let i4 = s - i3;
                let w = sq[m12.min(i3).min(i4)] * inv_sq1;
                wsum += w;
                gsum += (f[i3] + f[i4]) * w;
            }
        }
        lead_core += f2 * sq[i2];
        s1_acc += f2 * (h * wsum - sq1 * sq[i2]);
        s2_acc += f2 * gsum;
    }
    LossRateDecomposition {
        leading: COLLOCATION_COEFF * sq1 * h * lead_core,
        s1: COLLOCATION_COEFF * h * s1_acc,
        s2: COLLOCATION_COEFF * h * h * s2_acc,
    }
}
