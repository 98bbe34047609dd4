//! Dyadic interval machinery, the greedy measure-partition alternative, and
//! the per-scale concentration diagnostics.
//!
//! The partition result is a *certificate*: every returned case carries the
//! data needed to re-check, by direct re-measurement, that the advertised
//! inequalities hold. A measure over (0, R] either concentrates a (1−δ)
//! fraction of its mass in one extended dyadic interval, or it splits into
//! two sets — a finite union of picked intervals U₁ and the complement of
//! U₁'s extended neighborhood U₂ — that are separated by at least one
//! interval and each carry at least η = min(1/3 − δ/2, δ/6) of the mass.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::grid::Distribution;

/// The geometric interval family I_k = R·b^{−k}·(1/b, 1], k = 0, 1, 2, ….
///
/// The intervals are pairwise disjoint, contiguous, and cover (0, R]; the
/// extended interval I_k^E = I_{k−1} ∪ I_k ∪ I_{k+1} (with I_{−1} = ∅) is a
/// single half-open interval, and each point of (0, R] lies in at most three
/// extended intervals. `k_max` bounds only the materialized listing; the
/// family itself extends to every k ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicFamily {
    b: f64,
    scale: f64,
    k_max: usize,
}

/// Build the family with base b > 1 anchored at top scale R > 0.
/// The classical statement uses R ∈ (0, 1]; any positive scale works here
/// because the family is equivariant under rescaling.
pub fn dyadic_intervals(b: f64, scale: f64, k_max: usize) -> Result<DyadicFamily> {
    DyadicFamily::new(b, scale, k_max)
}

impl DyadicFamily {
    /// See [`dyadic_intervals`].
    pub fn new(b: f64, scale: f64, k_max: usize) -> Result<Self> {
        if !(b.is_finite() && b > 1.0) {
            return Err(Error::InvalidArgument(format!("dyadic base must exceed 1, got {b}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dyadic scale must be positive and finite, got {scale}"
            )));
        }
        Ok(DyadicFamily { b, scale, k_max })
    }

    /// Geometric base.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Top scale R; the family covers (0, R].
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Depth of the materialized listing.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Bounds (lo, hi] of I_k = (R·b^{−k−1}, R·b^{−k}]. Shared by every
    /// membership test so that boundary points classify consistently.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        let lo = self.scale * self.b.powi(-(k as i32) - 1);
        let hi = self.scale * self.b.powi(-(k as i32));
        (lo, hi)
    }

    /// Bounds (lo, hi] of the extended interval I_k^E. Adjacent intervals
    /// are exactly contiguous, so the union is one half-open interval; for
    /// k = 0 the upper neighbor I_{−1} is empty and the top stays at R.
    pub fn extended(&self, k: usize) -> (f64, f64) {
        let lo = self.interval(k + 1).0;
        let hi = if k == 0 { self.scale } else { self.interval(k - 1).1 };
        (lo, hi)
    }

    /// Whether ε lies in I_k.
    pub fn contains(&self, k: usize, eps: f64) -> bool {
        let (lo, hi) = self.interval(k);
        lo < eps && eps <= hi
    }

    /// Index of the interval containing ε, or None when ε is outside (0, R].
    pub fn index_of(&self, eps: f64) -> Option<usize> {
        if !(eps.is_finite() && eps > 0.0 && eps <= self.scale) {
            return None;
        }
        // Logarithmic estimate, then a short walk to absorb rounding; the
        // walk uses the same interval bounds as `contains`.
        let mut k = ((self.scale / eps).ln() / self.b.ln()).floor().max(0.0) as usize;
        for _ in 0..128 {
            let (lo, hi) = self.interval(k);
            if eps > hi {
                if k == 0 {
                    return None;
                }
                k -= 1;
            } else if eps <= lo {
                k += 1;
            } else {
                return Some(k);
            }
        }
        None
    }

    /// The materialized bounds of I_0 … I_{k_max}.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        (0..=self.k_max).map(|k| self.interval(k)).collect()
    }

    /// Group a measure's positive mass by interval index. Errors if positive
    /// mass sits at the origin (outside every interval) or beyond the scale.
    pub fn interval_masses(&self, m: &DiscreteMeasure) -> Result<BTreeMap<usize, f64>> {
        let at_zero = m.mass_at_zero();
        if at_zero > 0.0 {
            return Err(Error::AtomAtZero { mass: at_zero });
        }
        let mut masses = BTreeMap::new();
        for &(loc, mass) in m.atoms() {
            if mass == 0.0 {
                continue;
            }
            let k = self.index_of(loc).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "atom at {loc} lies outside the family's range (0, {}]",
                    self.scale()
                ))
            })?;
            *masses.entry(k).or_insert(0.0) += mass;
        }
        Ok(masses)
    }
}

/// A nonnegative finite atomic measure on [0, ∞).
///
/// An atom at the origin is representable (the partition hypothesis is
/// checked, not assumed), but negative locations and non-finite entries are
/// rejected at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    /// Validate and wrap a list of (location, mass) atoms.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(loc, mass) in &atoms {
            if !(loc.is_finite() && loc >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "atom location must be finite and nonnegative, got {loc}"
                )));
            }
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "atom mass must be finite and nonnegative, got {mass} at location {loc}"
                )));
            }
        }
        Ok(DiscreteMeasure { atoms })
    }

    /// Node masses g_i·h of a distribution's energy density. The origin node
    /// carries no atom because g(0) = 0, so the result always satisfies the
    /// no-atom-at-zero hypothesis.
    pub fn from_distribution(d: &Distribution) -> Self {
        let h = d.grid().h();
        let atoms = (0..d.grid().len())
            .filter_map(|i| {
                let mass = d.g(i) * h;
                (mass > 0.0).then(|| (d.grid().node(i), mass))
            })
            .collect();
        DiscreteMeasure { atoms }
    }

    /// The underlying atoms.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Total mass.
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|&(_, m)| m).sum()
    }

    /// Mass sitting exactly at the origin.
    pub fn mass_at_zero(&self) -> f64 {
        self.atoms.iter().filter(|&&(loc, _)| loc == 0.0).map(|&(_, m)| m).sum()
    }

    /// Largest location carrying positive mass.
    pub fn max_location(&self) -> Option<f64> {
        self.atoms
            .iter()
            .filter(|&&(_, m)| m > 0.0)
            .map(|&(loc, _)| loc)
            .fold(None, |acc, loc| Some(acc.map_or(loc, |a: f64| a.max(loc))))
    }

    /// The pushforward under ε ↦ λ·ε (masses unchanged).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive and finite, got {lambda}"
            )));
        }
        DiscreteMeasure::new(self.atoms.iter().map(|&(loc, m)| (lambda * loc, m)).collect())
    }
}

/// One of the two partition cases, with the data its certificate needs.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionCase {
    /// One extended interval holds at least (1−δ) of the total mass.
    Concentrated {
        /// Index of the central interval.
        k: usize,
        /// Mass of I_k^E.
        extended_mass: f64,
    },
    /// Two sets, separated by at least one interval, each hold ≥ η·total.
    Separated {
        /// Picked interval indices forming U₁, in selection order (their
        /// masses are non-increasing).
        u1: Vec<usize>,
        /// Mass-carrying interval indices of the complement U₂; the
        /// complement itself is every interval not adjacent to U₁.
        u2: Vec<usize>,
        /// Guaranteed mass fraction min(1/3 − δ/2, δ/6).
        eta: f64,
        /// Mass of U₁.
        u1_mass: f64,
        /// Mass of U₂.
        u2_mass: f64,
    },
}

/// Outcome of the greedy partition, re-checkable against the measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    /// The interval family the indices refer to.
    pub family: DyadicFamily,
    /// Mass-deficit parameter δ ∈ (0, 2/3).
    pub delta: f64,
    /// Total mass of the partitioned measure.
    pub total: f64,
    /// Which alternative holds, with its certificate.
    pub case: PartitionCase,
}

/// Greedily partition a measure over the dyadic family with base b anchored
/// at the measure's own top scale.
///
/// Rounds pick the heaviest still-active interval (ties break toward the
/// smallest index, nearest the scale), then deactivate its two neighbors.
/// The rounds stop as soon as the union of the picks' extended intervals
/// holds at least (1−δ) of the mass: one round means that single extended
/// interval concentrates the measure, and M ≥ 2 rounds split it into
/// U₁ = the first M−1 picks and U₂ = everything at least one interval away
/// from U₁.
pub fn partition_measure(m: &DiscreteMeasure, b: f64, delta: f64) -> Result<PartitionResult> {
    if !(delta > 0.0 && delta < 2.0 / 3.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 2/3), got {delta}")));
    }
    let at_zero = m.mass_at_zero();
    if at_zero > 0.0 {
        return Err(Error::AtomAtZero { mass: at_zero });
    }
    let Some(scale) = m.max_location() else {
        return Err(Error::ZeroMeasure);
    };
    // Depth recorded for the listing only; grouping computes indices directly.
    let family = DyadicFamily::new(b, scale, 0)?;
    let masses = family.interval_masses(m)?;
    let k_deep = masses.keys().next_back().copied().unwrap_or(0);
    let family = DyadicFamily::new(b, scale, k_deep)?;
    let total: f64 = masses.values().sum();
    let threshold = (1.0 - delta) * total;

    let mut active = masses.clone();
    let mut covered = BTreeSet::new();
    let mut covered_mass = 0.0;
    let mut picks: Vec<usize> = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (&k, &mass) in &active {
            if best.map_or(true, |(_, bm)| mass > bm) {
                best = Some((k, mass));
            }
        }
        let Some((k, _)) = best else {
            // Everything is covered; total ≥ threshold ends the rounds.
            break;
        };
        picks.push(k);
        for j in [k.checked_sub(1), Some(k), Some(k + 1)].into_iter().flatten() {
            if covered.insert(j) {
                covered_mass += masses.get(&j).copied().unwrap_or(0.0);
            }
            active.remove(&j);
        }
        if covered_mass >= threshold {
            break;
        }
    }

    let case = if picks.len() <= 1 {
        let k = picks[0];
        let extended_mass = neighborhood_mass(&masses, k);
        PartitionCase::Concentrated { k, extended_mass }
    } else {
        let u1: Vec<usize> = picks[..picks.len() - 1].to_vec();
        let u1_ext: BTreeSet<usize> = u1
            .iter()
            .flat_map(|&k| [k.checked_sub(1), Some(k), Some(k + 1)])
            .flatten()
            .collect();
        let u2: Vec<usize> =
            masses.keys().copied().filter(|k| !u1_ext.contains(k)).collect();
        let u1_mass = u1.iter().map(|k| masses[k]).sum();
        let u2_mass = u2.iter().map(|k| masses[k]).sum();
        let eta = (1.0 / 3.0 - delta / 2.0).min(delta / 6.0);
        PartitionCase::Separated { u1, u2, eta, u1_mass, u2_mass }
    };
    Ok(PartitionResult { family, delta, total, case })
}

/// Mass of I_{k−1} ∪ I_k ∪ I_{k+1} under the grouped masses.
fn neighborhood_mass(masses: &BTreeMap<usize, f64>, k: usize) -> f64 {
    [k.checked_sub(1), Some(k), Some(k + 1)]
        .into_iter()
        .flatten()
        .map(|j| masses.get(&j).copied().unwrap_or(0.0))
        .sum()
}

/// Relative slack for re-measured inequality checks: the quantities are
/// re-accumulated in a different order, so marginal cases may move by ulps.
const CERT_SLACK: f64 = 1e-9;

impl PartitionResult {
    /// Re-measure the certificate against the (same) measure and confirm
    /// every advertised inequality. Errors name the violated clause.
    pub fn verify(&self, m: &DiscreteMeasure) -> Result<()> {
        let masses = self.family.interval_masses(m)?;
        let total: f64 = masses.values().sum();
        if (total - self.total).abs() > 1e-12 * total.max(self.total) {
            return Err(Error::Certificate {
                clause: format!("total mass mismatch: re-measured {total}, stored {}", self.total),
            });
        }
        match &self.case {
            PartitionCase::Concentrated { k, extended_mass } => {
                let ext = neighborhood_mass(&masses, *k);
                if (ext - extended_mass).abs() > 1e-12 * ext.max(*extended_mass) {
                    return Err(Error::Certificate {
                        clause: format!(
                            "extended-interval mass mismatch at k = {k}: re-measured {ext}, \
                             stored {extended_mass}"
                        ),
                    });
                }
                let bound = (1.0 - self.delta) * total;
                if ext < bound * (1.0 - CERT_SLACK) {
                    return Err(Error::Certificate {
                        clause: format!(
                            "concentration bound: mass(I_{k}^E) = {ext} < (1 - delta)*total = {bound}"
                        ),
                    });
                }
                Ok(())
            }
            PartitionCase::Separated { u1, u2, eta, u1_mass, u2_mass } => {
                self.verify_separated(&masses, total, u1, u2, *eta, *u1_mass, *u2_mass)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn verify_separated(
        &self,
        masses: &BTreeMap<usize, f64>,
        total: f64,
        u1: &[usize],
        u2: &[usize],
        eta: f64,
        u1_mass: f64,
        u2_mass: f64,
    ) -> Result<()> {
        let fail = |clause: String| Err(Error::Certificate { clause });
        let eta_expected = (1.0 / 3.0 - self.delta / 2.0).min(self.delta / 6.0);
        if eta != eta_expected {
            return fail(format!("eta = {eta} differs from min(1/3 - delta/2, delta/6)"));
        }
        // U₁ is a finite, duplicate-free union of picked intervals whose
        // re-measured masses are non-increasing in pick order.
        if u1.is_empty() {
            return fail("U1 is empty".into());
        }
        let a: Vec<f64> = u1.iter().map(|k| masses.get(k).copied().unwrap_or(0.0)).collect();
        if a.windows(2).any(|w| w[0] < w[1]) {
            return fail(format!("pick masses are not non-increasing: {a:?}"));
        }
        // Separation chain: every pick keeps distance ≥ 2 from every other,
        // so each later interval misses the earlier picks' extensions.
        for (i, &ki) in u1.iter().enumerate() {
            for &kj in &u1[i + 1..] {
                if ki.abs_diff(kj) < 2 {
                    return fail(format!("picked intervals {ki} and {kj} are adjacent"));
                }
            }
        }
        // U₂ avoids U₁'s extended neighborhood entirely.
        for &k2 in u2 {
            for &k1 in u1 {
                if k2.abs_diff(k1) < 2 {
                    return fail(format!("U2 interval {k2} touches the extension of {k1}"));
                }
            }
        }
        // U₂ lists exactly the mass-carrying intervals of the complement.
        let u1_ext: BTreeSet<usize> = u1
            .iter()
            .flat_map(|&k| [k.checked_sub(1), Some(k), Some(k + 1)])
            .flatten()
            .collect();
        let u2_expected: Vec<usize> =
            masses.keys().copied().filter(|k| !u1_ext.contains(k)).collect();
        if u2 != u2_expected.as_slice() {
            return fail(format!("U2 = {u2:?} differs from the complement {u2_expected:?}"));
        }
        let m1: f64 = a.iter().sum();
        let m2: f64 = u2.iter().map(|k| masses.get(k).copied().unwrap_or(0.0)).sum();
        for (name, re, stored) in [("U1", m1, u1_mass), ("U2", m2, u2_mass)] {
            if (re - stored).abs() > 1e-12 * re.max(stored).max(f64::MIN_POSITIVE) {
                return fail(format!("{name} mass mismatch: re-measured {re}, stored {stored}"));
            }
        }
        // The mass split itself.
        let floor = eta * total * (1.0 - CERT_SLACK);
        if m1 < floor || m2 < floor {
            return fail(format!(
                "mass split: min(U1, U2) = {} < eta*total = {}",
                m1.min(m2),
                eta * total
            ));
        }
        // Quadratic domination by the heaviest pick.
        let lhs: f64 = a.iter().map(|x| x * x).sum();
        let rhs = a[0] * a[0] + a[0] * a[1..].iter().sum::<f64>();
        if lhs > rhs * (1.0 + 1e-12) {
            return fail(format!("quadratic domination: sum of squares {lhs} exceeds {rhs}"));
        }
        // The heaviest pick alone must not already concentrate the measure.
        let cap = (1.0 - self.delta) * total;
        if a[0] >= cap * (1.0 + CERT_SLACK) {
            return fail(format!("first pick mass {} is not below (1 - delta)*total = {cap}", a[0]));
        }
        Ok(())
    }
}

/// Per-scale flags of one level ℓ of the concentration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    /// Level index ℓ.
    pub ell: usize,
    /// Radius R_ℓ = 2^{−ℓ}.
    pub radius: f64,
    /// Mass of g on [0, R_ℓ].
    pub mass: f64,
    /// Level base b_ℓ = 1 + R_ℓ^{θ₂}.
    pub b: f64,
    /// Whether mass ≥ R_ℓ^{θ₁} (the snapshot is concentrated at scale ℓ).
    pub concentrated: bool,
    /// Extended-interval flags for the mass-carrying indices.
    pub intervals: Vec<IntervalFlag>,
}

/// Extended-interval mass of I_n^E(b_ℓ, R_ℓ) tested against (R_{ℓ+1})^{θ₁}.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFlag {
    /// Interval index n ≥ 1.
    pub n: usize,
    /// Mass of the extended interval.
    pub extended_mass: f64,
    /// Whether the mass reaches (R_{ℓ+1})^{θ₁}.
    pub flagged: bool,
}

/// Snapshot concentration report across the dyadic scales R_ℓ = 2^{−ℓ}.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    /// Snapshot time, recorded verbatim.
    pub t_ref: f64,
    /// Mass exponent θ₁.
    pub theta1: f64,
    /// Base exponent θ₂.
    pub theta2: f64,
    /// One entry per level ℓ = 0 … ell_max.
    pub levels: Vec<LevelReport>,
}

/// Evaluate the per-scale concentration flags of a snapshot: at each level
/// ℓ the cumulative mass of g on [0, 2^{−ℓ}] is tested against (2^{−ℓ})^{θ₁},
/// and the extended intervals of the level's own dyadic family (base
/// 1 + 2^{−ℓθ₂}) are tested against (2^{−ℓ−1})^{θ₁}. Only mass-carrying
/// interval indices are listed; all other extended intervals have mass
/// below any positive threshold.
pub fn concentration_report(
    d: &Distribution,
    theta1: f64,
    theta2: f64,
    ell_max: usize,
    t_ref: f64,
) -> Result<ConcentrationReport> {
    for (name, v) in [("theta1", theta1), ("theta2", theta2)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be nonnegative and finite, got {v}"
            )));
        }
    }
    if !t_ref.is_finite() {
        return Err(Error::InvalidArgument(format!("t_ref must be finite, got {t_ref}")));
    }
    let h = d.grid().h();
    let mut levels = Vec::with_capacity(ell_max + 1);
    for ell in 0..=ell_max {
        let radius = 2f64.powi(-(ell as i32));
        let mass: f64 = (0..d.grid().len())
            .filter(|&i| d.grid().node(i) <= radius)
            .map(|i| d.g(i) * h)
            .sum();
        let b = 1.0 + radius.powf(theta2);
        let concentrated = mass >= radius.powf(theta1);
        let family = DyadicFamily::new(b, radius, 0)?;
        // Group the snapshot's node masses inside [0, R_ℓ] by interval.
        let mut masses: BTreeMap<usize, f64> = BTreeMap::new();
        for i in 0..d.grid().len() {
            let eps = d.grid().node(i);
            let node_mass = d.g(i) * h;
            if node_mass <= 0.0 || eps > radius {
                continue;
            }
            if let Some(k) = family.index_of(eps) {
                *masses.entry(k).or_insert(0.0) += node_mass;
            }
        }
        let threshold = (radius / 2.0).powf(theta1);
        // Candidate indices: neighbors of mass-carrying intervals, n ≥ 1.
        let candidates: BTreeSet<usize> = masses
            .keys()
            .flat_map(|&k| [k.checked_sub(1), Some(k), Some(k + 1)])
            .flatten()
            .filter(|&n| n >= 1)
            .collect();
        let intervals = candidates
            .into_iter()
            .map(|n| {
                let extended_mass = neighborhood_mass(&masses, n);
                IntervalFlag { n, extended_mass, flagged: extended_mass >= threshold }
            })
            .collect();
        levels.push(LevelReport { ell, radius, mass, b, concentrated, intervals });
    }
    Ok(ConcentrationReport { t_ref, theta1, theta2, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, MOMENT_PREFACTOR};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn intervals_match_the_halving_pattern_for_base_two() {
        let fam = dyadic_intervals(2.0, 1.0, 4).unwrap();
        assert_eq!(fam.interval(0), (0.5, 1.0));
        assert_eq!(fam.interval(1), (0.25, 0.5));
        assert_eq!(fam.extended(1), (0.125, 1.0));
        assert_eq!(fam.extended(0), (0.25, 1.0));
        assert_eq!(fam.intervals().len(), 5);
    }

    #[test]
    fn intervals_are_disjoint_contiguous_and_cover_the_range() {
        let fam = dyadic_intervals(1.7, 0.9, 30).unwrap();
        for k in 0..30 {
            let (lo, hi) = fam.interval(k);
            let (lo_next, _) = fam.interval(k + 1);
            assert!(lo < hi);
            assert_eq!(lo, fam.interval(k + 1).1, "contiguity at k = {k}");
            assert!(lo_next < lo);
        }
        // Telescoping cover: the union of I_0..I_k is (R·b^{-k-1}, R].
        assert_eq!(fam.interval(7).0, 0.9 * 1.7f64.powi(-8));
    }

    #[test]
    fn each_point_meets_at_most_three_extended_intervals() {
        let fam = dyadic_intervals(1.5, 1.0, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let eps: f64 = rng.random_range(1e-8..=1.0);
            let hits = (0..60)
                .filter(|&k| {
                    let (lo, hi) = fam.extended(k);
                    lo < eps && eps <= hi
                })
                .count();
            let j = fam.index_of(eps).unwrap();
            let expected = if j == 0 { 2 } else { 3 };
            assert_eq!(hits, expected.min(60), "eps = {eps} in I_{j}");
        }
    }

    #[test]
    fn index_of_handles_exact_boundaries() {
        let fam = dyadic_intervals(3.0, 1.0, 50).unwrap();
        for k in 0..40usize {
            let (lo, hi) = fam.interval(k);
            // The closed top belongs to k, the open bottom to k + 1.
            assert_eq!(fam.index_of(hi), Some(k));
            assert_eq!(fam.index_of(lo), Some(k + 1));
        }
        assert_eq!(fam.index_of(0.0), None);
        assert_eq!(fam.index_of(1.0 + 1e-12), None);
        assert_eq!(fam.index_of(f64::NAN), None);
    }

    #[test]
    fn partition_of_a_single_atom_is_concentrated_for_any_delta() {
        let m = DiscreteMeasure::new(vec![(0.37, 2.5)]).unwrap();
        for delta in [0.01, 0.3, 0.65] {
            let p = partition_measure(&m, 2.0, delta).unwrap();
            match &p.case {
                PartitionCase::Concentrated { extended_mass, .. } => {
                    assert_eq!(*extended_mass, 2.5);
                }
                other => panic!("expected concentrated, got {other:?}"),
            }
            p.verify(&m).unwrap();
        }
    }

    #[test]
    fn two_distant_atoms_split_or_concentrate_with_the_threshold() {
        // Equal halves at 0.9 and 0.05 live in I_0 and I_4 of the base-2
        // family anchored at 0.9.
        let m = DiscreteMeasure::new(vec![(0.9, 0.5), (0.05, 0.5)]).unwrap();
        let p = partition_measure(&m, 2.0, 0.4).unwrap();
        match &p.case {
            PartitionCase::Separated { u1, u2, eta, u1_mass, u2_mass } => {
                assert_eq!(u1.as_slice(), &[0]);
                assert_eq!(u2.as_slice(), &[4]);
                assert_eq!(*u1_mass, 0.5);
                assert_eq!(*u2_mass, 0.5);
                assert!((eta - 1.0 / 15.0).abs() < 1e-15);
            }
            other => panic!("expected separated, got {other:?}"),
        }
        p.verify(&m).unwrap();
        // Raising delta to 0.5 lets the first pick concentrate: a1 = 0.5 ≥ 1 − δ.
        let p = partition_measure(&m, 2.0, 0.5).unwrap();
        match &p.case {
            PartitionCase::Concentrated { k, extended_mass } => {
                assert_eq!(*k, 0);
                assert_eq!(*extended_mass, 0.5);
            }
            other => panic!("expected concentrated, got {other:?}"),
        }
        p.verify(&m).unwrap();
    }

    #[test]
    fn greedy_picks_in_non_increasing_mass_order() {
        // Three well-separated atoms force three rounds at a small delta.
        let m =
            DiscreteMeasure::new(vec![(0.9, 0.5), (0.05, 0.3), (0.003, 0.2)]).unwrap();
        let p = partition_measure(&m, 2.0, 0.1).unwrap();
        match &p.case {
            PartitionCase::Separated { u1, u2, u1_mass, u2_mass, .. } => {
                assert_eq!(u1.as_slice(), &[0, 4]);
                assert_eq!(u2.as_slice(), &[8]);
                assert!((u1_mass - 0.8).abs() < 1e-15);
                assert!((u2_mass - 0.2).abs() < 1e-15);
            }
            other => panic!("expected separated, got {other:?}"),
        }
        p.verify(&m).unwrap();
    }

    #[test]
    fn partition_rejects_degenerate_inputs() {
        let m = DiscreteMeasure::new(vec![(0.5, 1.0)]).unwrap();
        assert!(matches!(partition_measure(&m, 1.0, 0.3), Err(Error::InvalidArgument(_))));
        assert!(matches!(partition_measure(&m, 2.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(partition_measure(&m, 2.0, 0.7), Err(Error::InvalidArgument(_))));
        let zero = DiscreteMeasure::new(vec![(0.5, 0.0)]).unwrap();
        assert!(matches!(partition_measure(&zero, 2.0, 0.3), Err(Error::ZeroMeasure)));
        let empty = DiscreteMeasure::new(vec![]).unwrap();
        assert!(matches!(partition_measure(&empty, 2.0, 0.3), Err(Error::ZeroMeasure)));
        let dirac = DiscreteMeasure::new(vec![(0.0, 0.4), (0.5, 1.0)]).unwrap();
        match partition_measure(&dirac, 2.0, 0.3) {
            Err(Error::AtomAtZero { mass }) => assert_eq!(mass, 0.4),
            other => panic!("expected AtomAtZero, got {other:?}"),
        }
        assert!(DiscreteMeasure::new(vec![(-0.1, 1.0)]).is_err());
        assert!(DiscreteMeasure::new(vec![(0.1, -1.0)]).is_err());
    }

    #[test]
    fn measure_from_distribution_has_no_atom_at_zero() {
        let grid = make_grid(1.0, 33).unwrap().into_shared();
        let d = Distribution::from_fn(grid, |_| 1.0).unwrap();
        let m = DiscreteMeasure::from_distribution(&d);
        assert_eq!(m.mass_at_zero(), 0.0);
        // Node masses integrate g except for the trapezoid edge halves.
        let plain_sum: f64 = m.total();
        let h = 1.0 / 32.0;
        let expected: f64 =
            (1..33).map(|i| MOMENT_PREFACTOR * ((i as f64) * h).sqrt() * h).sum();
        assert!((plain_sum - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn concentration_report_flags_nothing_on_vacuum() {
        let grid = make_grid(1.0, 17).unwrap().into_shared();
        let d = Distribution::from_fn(grid, |_| 0.0).unwrap();
        let report = concentration_report(&d, 0.5, 1.0, 6, 0.0).unwrap();
        assert_eq!(report.levels.len(), 7);
        for level in &report.levels {
            assert!(!level.concentrated);
            assert!(level.intervals.iter().all(|fl| !fl.flagged));
        }
    }

    #[test]
    fn concentration_report_sees_a_single_deep_node() {
        // One node at ε = 2^{-4} carrying unit mass g·h = 1: every radius
        // down to 2^{-4} sees the full mass, deeper radii see nothing.
        let grid = make_grid(1.0, 33).unwrap().into_shared();
        let ell = 3usize;
        let target = 2f64.powi(-(ell as i32) - 1);
        let h = grid.h();
        let d = Distribution::from_fn(grid, |eps| {
            if (eps - target).abs() < 1e-12 {
                1.0 / (MOMENT_PREFACTOR * target.sqrt() * h)
            } else {
                0.0
            }
        })
        .unwrap();
        let report = concentration_report(&d, 0.5, 1.0, 8, 0.25).unwrap();
        for level in &report.levels {
            let expected = level.radius >= target;
            assert_eq!(
                level.concentrated, expected,
                "level {} radius {}",
                level.ell, level.radius
            );
        }
        // With θ₁ = 0 the test degenerates to mass ≥ 1; the single unit atom
        // sits exactly at the threshold.
        let degenerate = concentration_report(&d, 0.0, 1.0, 8, 0.25).unwrap();
        for level in &degenerate.levels {
            let expected = level.radius >= target && level.mass >= 1.0;
            assert_eq!(level.concentrated, expected);
        }
    }

    #[test]
    fn concentration_report_rejects_bad_exponents() {
        let grid = make_grid(1.0, 9).unwrap().into_shared();
        let d = Distribution::from_fn(grid, |_| 1.0).unwrap();
        assert!(concentration_report(&d, -0.5, 1.0, 3, 0.0).is_err());
        assert!(concentration_report(&d, 0.5, f64::NAN, 3, 0.0).is_err());
        assert!(concentration_report(&d, 0.5, 1.0, 3, f64::INFINITY).is_err());
    }

    /// Random measures for the certificate property.
    fn arb_measure() -> impl Strategy<Value = DiscreteMeasure> {
        prop::collection::vec((1e-6f64..=1.0, 0.0f64..10.0), 1..50)
            .prop_map(|atoms| DiscreteMeasure::new(atoms).unwrap())
    }

    proptest! {
        #[test]
        fn every_partition_certificate_verifies(
            m in arb_measure(),
            b in 1.1f64..4.0,
            delta in 0.05f64..0.6,
        ) {
            match partition_measure(&m, b, delta) {
                Ok(p) => p.verify(&m).unwrap(),
                Err(Error::ZeroMeasure) => {}
                Err(other) => panic!("unexpected error: {other}"),
            }
        }

        #[test]
        fn partition_is_equivariant_under_dyadic_rescaling(
            m in arb_measure(),
            b in 1.1f64..4.0,
            delta in 0.05f64..0.6,
            shift in -2i32..3,
        ) {
            // Powers of two preserve every location ratio exactly, so the
            // rescaled measure must partition to identical indices.
            let lambda = 2f64.powi(shift);
            let scaled = m.scaled(lambda).unwrap();
            let p = partition_measure(&m, b, delta);
            let q = partition_measure(&scaled, b, delta);
            match (p, q) {
                (Ok(p), Ok(q)) => {
                    prop_assert_eq!(p.case, q.case);
                }
                (Err(Error::ZeroMeasure), Err(Error::ZeroMeasure)) => {}
                (p, q) => panic!("outcomes diverged: {p:?} vs {q:?}"),
            }
        }
    }
}
