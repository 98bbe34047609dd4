//! Entropy, monotonicity pairings, and the concentration functional.
//!
//! The Bose entropy of an occupation f is
//! S = 4π√2·Σ_i [(1+f_i)log(1+f_i) − f_i log f_i]·√ε_i·h (plain node sum,
//! with 0·log 0 = 0). Under the conservative operator the semi-discrete
//! entropy production regroups into per-quadruple terms of the form
//! (A − B)·log(A/B) ≥ 0, so S is non-decreasing along exact trajectories.
//!
//! G_φ is the kernel-weighted pairing that measures how a test function φ
//! responds to one collision among three energies: the average over the six
//! orderings of (ε₁, ε₂, ε₃) of Φ·[φ(z') + φ(x'+y'−z') − φ(x') − φ(y')].
//! Sorting the energies ε₋ ≤ ε₀ ≤ ε₊ collapses the average to a two-term
//! closed form; it is nonnegative for convex φ, nonpositive for concave φ,
//! and vanishes for affine φ and on the diagonal.

use crate::grid::{Distribution, MOMENT_PREFACTOR};

/// Declared curvature of a test function, used by sign checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Nonnegative second difference: G_φ ≥ 0.
    Convex,
    /// Nonpositive second difference: G_φ ≤ 0.
    Concave,
    /// Linear-plus-constant: G_φ = 0.
    Affine,
    /// No declared sign.
    General,
}

/// An evaluable scalar function of energy tagged with its declared shape.
pub struct TestFunction {
    shape: Shape,
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TestFunction {
    /// Wrap an arbitrary function with a declared shape.
    pub fn new(shape: Shape, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction { shape, eval: Box::new(eval) }
    }

    /// Declared shape tag.
    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Evaluate at an energy.
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// ε², convex.
    pub fn square() -> Self {
        TestFunction::new(Shape::Convex, |x| x * x)
    }

    /// e^ε, convex.
    pub fn exponential() -> Self {
        TestFunction::new(Shape::Convex, f64::exp)
    }

    /// √ε on ε ≥ 0, concave.
    pub fn sqrt() -> Self {
        TestFunction::new(Shape::Concave, |x| x.max(0.0).sqrt())
    }

    /// −ε², concave.
    pub fn neg_square() -> Self {
        TestFunction::new(Shape::Concave, |x| -(x * x))
    }

    /// ε, affine.
    pub fn identity() -> Self {
        TestFunction::new(Shape::Affine, |x| x)
    }

    /// 1, affine.
    pub fn one() -> Self {
        TestFunction::new(Shape::Affine, |_| 1.0)
    }
}

/// Bose entropy S = 4π√2·Σ [(1+f)log(1+f) − f log f]·√ε·h.
pub fn entropy(d: &Distribution) -> f64 {
    let grid = d.grid();
    let sq = grid.sqrt_nodes();
    let mut acc = 0.0;
    for (i, &f) in d.values().iter().enumerate() {
        if f > 0.0 {
            acc += ((1.0 + f) * f.ln_1p() - f * f.ln()) * sq[i];
        }
    }
    MOMENT_PREFACTOR * grid.h() * acc
}

/// Closed form of the monotonicity pairing on a sorted triple:
/// 3·G_φ = √ε₋·[φ(ε₊+ε₋−ε₀) + φ(ε₊+ε₀−ε₋) − 2φ(ε₊)]
///        + √((ε₀+ε₋−ε₊)₊)·[φ(ε₊) + φ(ε₀+ε₋−ε₊) − φ(ε₀) − φ(ε₋)].
pub fn g_phi(e1: f64, e2: f64, e3: f64, phi: &TestFunction) -> f64 {
    debug_assert!(e1 >= 0.0 && e2 >= 0.0 && e3 >= 0.0);
    let mut lo = e1.min(e2).min(e3);
    let hi = e1.max(e2).max(e3);
    let mut mid = e1 + e2 + e3 - lo - hi;
    // Guard rounding in the middle extraction for near-equal inputs.
    if mid < lo {
        std::mem::swap(&mut lo, &mut mid);
    }
    let first = phi.eval(hi + lo - mid) + phi.eval(hi + mid - lo) - 2.0 * phi.eval(hi);
    let mut total = lo.sqrt() * first;
    let r = mid + lo - hi;
    if r > 0.0 {
        total += r.sqrt() * (phi.eval(hi) + phi.eval(r) - phi.eval(mid) - phi.eval(lo));
    }
    total / 3.0
}

/// Defining form of the pairing: the average over the six orderings
/// (x, y, z) of (ε₁, ε₂, ε₃) of
/// min{√x, √y, √z, √((x+y−z)₊)}·[φ(z) + φ(x+y−z) − φ(x) − φ(y)].
/// Terms whose fourth energy is not positive carry zero kernel and are
/// skipped without evaluating φ outside [0, ∞).
pub fn g_phi_permutation_average(e1: f64, e2: f64, e3: f64, phi: &TestFunction) -> f64 {
    let perms = [
        (e1, e2, e3),
        (e1, e3, e2),
        (e2, e1, e3),
        (e2, e3, e1),
        (e3, e1, e2),
        (e3, e2, e1),
    ];
    let mut total = 0.0;
    for (x, y, z) in perms {
        let fourth = x + y - z;
        if fourth <= 0.0 && !(fourth == 0.0) {
            continue;
        }
        let kernel = x.min(y).min(z).min(fourth.max(0.0)).sqrt();
        if kernel == 0.0 {
            continue;
        }
        total += kernel * (phi.eval(z) + phi.eval(fourth) - phi.eval(x) - phi.eval(y));
    }
    total / 6.0
}

/// Single-permutation pairing φ(ε₃) + φ(ε₁+ε₂−ε₃) − 2φ(ε₁), evaluated
/// literally (callers supply admissible triples with ε₁+ε₂ ≥ ε₃).
pub fn q_phi_pairing(e1: f64, e2: f64, e3: f64, phi: &TestFunction) -> f64 {
    phi.eval(e3) + phi.eval(e1 + e2 - e3) - 2.0 * phi.eval(e1)
}

/// Concentration functional on the ball [0, R/2]³ of the density g:
/// (1/R)·ΣΣΣ m_i m_j m_k · (ε₀/ε₊)^{3/2}·((ε₀ − ε₋)/ε₀)² with node masses
/// m = g·h and (ε₋, ε₀, ε₊) the sorted triple (median-weighted); triples
/// with ε₀ = 0 contribute zero. Cost is cubic in the number of nodes
/// below R/2.
pub fn concentration_functional(d: &Distribution, r: f64) -> f64 {
    assert!(r > 0.0 && r.is_finite(), "radius must be positive");
    let grid = d.grid();
    let m_hi = match grid.last_node_at_or_below(r / 2.0) {
        None => return 0.0,
        Some(j) => j,
    };
    let h = grid.h();
    let masses: Vec<f64> = (0..=m_hi).map(|i| d.g(i) * h).collect();
    let nodes = grid.nodes();
    let mut total = 0.0;
    for i in 0..=m_hi {
        if masses[i] == 0.0 {
            continue;
        }
        for j in 0..=m_hi {
            if masses[j] == 0.0 {
                continue;
            }
            let mij = masses[i] * masses[j];
            for k in 0..=m_hi {
                if masses[k] == 0.0 {
                    continue;
                }
                let (a, b, c) = (nodes[i], nodes[j], nodes[k]);
                let lo = a.min(b).min(c);
                let hi = a.max(b).max(c);
                let mid = a + b + c - lo - hi;
                if mid <= 0.0 {
                    continue;
                }
                let ratio = (mid - lo) / mid;
                let weight = (mid / hi).powf(1.5) * ratio * ratio;
                total += mij * masses[k] * weight;
            }
        }
    }
    total / r
}
