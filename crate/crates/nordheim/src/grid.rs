//! Uniform energy grid and nonnegative occupation numbers on it.
//!
//! The lattice is ε_i = i·h with h = eps_max/(n−1). Every node value is
//! computed as the product i·h (never by accumulation), so the collision
//! geometry can rely on index arithmetic: the pair relation
//! i₁ + i₂ = i₃ + i₄ encodes exact conservation of ε₁ + ε₂ = ε₃ + ε₄ and no
//! operator ever tests floating-point energy sums.
//!
//! An occupation `f` on the grid induces the energy density
//! g(ε) = 4π√(2ε)·f(ε); scalar observables are integrals of g against powers
//! of ε, evaluated with the trapezoid rule.

use std::sync::Arc;

use crate::error::{Error, Result};

/// 4π√2, the isotropic phase-space weight relating f to g = 4π√(2ε)f.
pub const MOMENT_PREFACTOR: f64 = 4.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI;

/// Uniform grid on [0, eps_max] with n nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    n: usize,
    eps_max: f64,
    h: f64,
    nodes: Vec<f64>,
    sqrt_nodes: Vec<f64>,
}

impl EnergyGrid {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the grid holds no interior nodes (never, post-validation).
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Upper edge of the grid.
    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    /// Node spacing h = eps_max/(n−1).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Node energy ε_i = i·h.
    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// All node energies.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Precomputed √ε_i (monotone, so min-of-roots reduces to index min).
    pub fn sqrt_nodes(&self) -> &[f64] {
        &self.sqrt_nodes
    }

    /// Largest node index with ε_i ≤ r (None when r < 0).
    pub fn last_node_at_or_below(&self, r: f64) -> Option<usize> {
        if r < 0.0 {
            return None;
        }
        if r >= self.eps_max {
            return Some(self.n - 1);
        }
        // Guard against rounding at exact node values: start from the float
        // quotient and correct by comparison with the actual node values.
        let mut j = ((r / self.h) as usize).min(self.n - 1);
        while j + 1 < self.n && self.nodes[j + 1] <= r {
            j += 1;
        }
        while j > 0 && self.nodes[j] > r {
            j -= 1;
        }
        if self.nodes[j] > r {
            None
        } else {
            Some(j)
        }
    }

    /// Wrap in an `Arc` for sharing between distributions.
    pub fn into_shared(self) -> Arc<EnergyGrid> {
        Arc::new(self)
    }
}

/// Build the uniform grid on [0, eps_max] with n ≥ 2 nodes.
pub fn make_grid(eps_max: f64, n: usize) -> Result<EnergyGrid> {
    if !(eps_max.is_finite() && eps_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_max must be positive and finite, got {eps_max}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {n}")));
    }
    let h = eps_max / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let sqrt_nodes: Vec<f64> = nodes.iter().map(|&e| e.sqrt()).collect();
    Ok(EnergyGrid { n, eps_max, h, nodes, sqrt_nodes })
}

/// Nonnegative occupation numbers f_i on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    grid: Arc<EnergyGrid>,
    f: Vec<f64>,
}

impl Distribution {
    /// Validate and wrap nodal values: finite, nonnegative, one per node.
    pub fn new(grid: Arc<EnergyGrid>, f: Vec<f64>) -> Result<Self> {
        if f.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "distribution has {} values for a grid of {} nodes",
                f.len(),
                grid.len()
            )));
        }
        for (i, &v) in f.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("f[{i}] = {v} is not finite")));
            }
            if v < 0.0 {
                return Err(Error::InvalidArgument(format!("f[{i}] = {v} is negative")));
            }
        }
        Ok(Distribution { grid, f })
    }

    /// Sample a function of energy at the nodes.
    pub fn from_fn(grid: Arc<EnergyGrid>, func: impl Fn(f64) -> f64) -> Result<Self> {
        let f: Vec<f64> = grid.nodes().iter().map(|&e| func(e)).collect();
        Distribution::new(grid, f)
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_valid(grid: Arc<EnergyGrid>, f: Vec<f64>) -> Self {
        debug_assert_eq!(f.len(), grid.len());
        Distribution { grid, f }
    }

    /// The grid this distribution lives on.
    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    /// Nodal occupation values.
    pub fn values(&self) -> &[f64] {
        &self.f
    }

    /// Occupation at node i.
    pub fn f(&self, i: usize) -> f64 {
        self.f[i]
    }

    /// Energy density g_i = 4π√(2ε_i)·f_i (zero at the origin node).
    pub fn g(&self, i: usize) -> f64 {
        MOMENT_PREFACTOR * self.grid.sqrt_nodes()[i] * self.f[i]
    }

    /// Full energy-density vector.
    pub fn g_vec(&self) -> Vec<f64> {
        (0..self.f.len()).map(|i| self.g(i)).collect()
    }

    /// Supremum of the occupation values.
    pub fn sup(&self) -> f64 {
        self.f.iter().cloned().fold(0.0, f64::max)
    }
}

/// Which moment of the density to take: ∫g·ε^w with w = 0 (mass) or 1 (energy)
/// in g-form, i.e. weight ε^{1/2} or ε^{3/2} against f.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// Total particle number, weight ε^{1/2}.
    Mass,
    /// Total kinetic energy, weight ε^{3/2}.
    Energy,
}

impl MomentKind {
    /// Exponent applied to ε under the integral against f.
    pub fn exponent(self) -> f64 {
        match self {
            MomentKind::Mass => 0.5,
            MomentKind::Energy => 1.5,
        }
    }
}

/// Whether integrals carry the physical 4π√2 phase-space prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentConvention {
    /// ∫ f ε^w dε multiplied by 4π√2 (the g-density convention).
    #[default]
    Physical,
    /// Bare ∫ f ε^w dε.
    Plain,
}

impl MomentConvention {
    /// Multiplicative prefactor of the convention.
    pub fn prefactor(self) -> f64 {
        match self {
            MomentConvention::Physical => MOMENT_PREFACTOR,
            MomentConvention::Plain => 1.0,
        }
    }
}

/// Trapezoid sum of f_i·ε_i^w·h with the convention's prefactor.
pub fn moment_with(d: &Distribution, kind: MomentKind, conv: MomentConvention) -> f64 {
    let grid = d.grid();
    let w = kind.exponent();
    let n = grid.len();
    let mut acc = 0.0;
    for i in 0..n {
        let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += weight * d.f(i) * grid.node(i).powf(w);
    }
    conv.prefactor() * grid.h() * acc
}

/// Physical-convention moment (mass for w = 1/2, energy for w = 3/2).
pub fn moment(d: &Distribution, kind: MomentKind) -> f64 {
    moment_with(d, kind, MomentConvention::Physical)
}

/// Prefix trapezoid m(ε_j) = ∫₀^{ε_j} f√ε dε (plain convention) for all j.
pub fn cumulative_sqrt_mass(d: &Distribution) -> Vec<f64> {
    let grid = d.grid();
    let h = grid.h();
    let n = grid.len();
    let mut cum = vec![0.0; n];
    let mut prev = d.f(0) * grid.sqrt_nodes()[0];
    for j in 1..n {
        let cur = d.f(j) * grid.sqrt_nodes()[j];
        cum[j] = cum[j - 1] + 0.5 * h * (prev + cur);
        prev = cur;
    }
    cum
}

/// Plain node sum 4π√2·h·Σ f_i·√ε_i. This is the exact discrete invariant
/// of the conservative collision operator: the deposit pattern cancels in
/// unweighted node sums, so this quantity is constant along semi-discrete
/// trajectories to rounding. (The trapezoid `moment` differs from it by the
/// half-weights at the two edge nodes and therefore drifts by O(h) times the
/// edge-node change; use this sum when asserting conservation.)
pub fn conserved_mass(d: &Distribution) -> f64 {
    let grid = d.grid();
    let sq = grid.sqrt_nodes();
    let mut acc = 0.0;
    for (i, &f) in d.values().iter().enumerate() {
        acc += f * sq[i];
    }
    MOMENT_PREFACTOR * grid.h() * acc
}

/// Plain node sum 4π√2·h·Σ f_i·ε_i^{3/2}, the conserved energy companion of
/// [`conserved_mass`].
pub fn conserved_energy(d: &Distribution) -> f64 {
    let grid = d.grid();
    let sq = grid.sqrt_nodes();
    let nodes = grid.nodes();
    let mut acc = 0.0;
    for (i, &f) in d.values().iter().enumerate() {
        acc += f * nodes[i] * sq[i];
    }
    MOMENT_PREFACTOR * grid.h() * acc
}

/// Mass of the density g below radius r: trapezoid over nodes with ε ≤ r
/// (physical convention). Radii between nodes truncate to the last node.
pub fn mass_below(d: &Distribution, r: f64) -> f64 {
    match d.grid().last_node_at_or_below(r) {
        None | Some(0) => 0.0,
        Some(j) => {
            let grid = d.grid();
            let h = grid.h();
            let mut acc = 0.0;
            for i in 0..=j {
                let weight = if i == 0 || i == j { 0.5 } else { 1.0 };
                acc += weight * d.f(i) * grid.sqrt_nodes()[i];
            }
            MOMENT_PREFACTOR * h * acc
        }
    }
}
