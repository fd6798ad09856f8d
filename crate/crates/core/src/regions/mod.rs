//! Rate regions given by rank functions over subsets of sources.
//!
//! Both regions handled here are contra-polymatroids
//! `{R : Σ_{i∈B} R_i >= g(B) for all B}` with `g` supermodular, monotone and
//! `g(∅) = 0`. Linear objectives with non-negative weights are minimized
//! over such a region by the greedy chain vertex, see [`greedy_min_linear`].

mod ceo;
mod gaussian;
mod subset;
mod tighten;

use alloc::vec;
use alloc::vec::Vec;

pub use ceo::{ceo_kkt_residuals, ceo_min_linear, ceo_rank, CeoModel, CeoOutcome, CeoRank, CeoSolution, KktResiduals};
pub use gaussian::{sw_conditional_entropy, GaussianSourceModel, SwRank};
pub use subset::SourceSet;
pub use tighten::tighten_sum_rate;

use crate::error::{Error, Result};

/// Default ground-set limit for checks that enumerate every subset.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Per-source rates in nats.
pub type RateVector = Vec<f64>;

/// A set function `g(B)` over subsets of `{0, .., ground_size()-1}`.
pub trait RankFunction {
    fn ground_size(&self) -> usize;

    /// Value on `set`; implementations return 0 for the empty set.
    fn rank(&self, set: SourceSet) -> f64;
}

impl<R: RankFunction + ?Sized> RankFunction for &R {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn rank(&self, set: SourceSet) -> f64 {
        (**self).rank(set)
    }
}

/// Rank function backed by a table indexed by subset bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedRank {
    n: usize,
    values: Vec<f64>,
}

impl TabulatedRank {
    /// `values[mask]` is the rank of the subset encoded by `mask`;
    /// `values[0]` is forced to 0.
    pub fn new(n: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: values.len() });
        }
        values[0] = 0.0;
        Ok(Self { n, values })
    }

    /// Tabulates any rank function.
    pub fn from_rank<R: RankFunction>(g: &R) -> Self {
        let n = g.ground_size();
        let values = SourceSet::all_subsets(n).map(|s| g.rank(s)).collect();
        Self { n, values }
    }
}

impl RankFunction for TabulatedRank {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn rank(&self, set: SourceSet) -> f64 {
        self.values[set.bits() as usize]
    }
}

/// Order of indices by non-increasing weight, ties broken by index.
pub(crate) fn descending_order(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap_or(core::cmp::Ordering::Equal));
    order
}

/// Greedy chain vertex for a fixed order: `R_{π(i)} = g(π(1..i)) - g(π(1..i-1))`.
pub fn chain_vertex<R: RankFunction>(g: &R, order: &[usize]) -> RateVector {
    let mut rates = vec![0.0; g.ground_size()];
    let mut prefix = SourceSet::empty();
    let mut prev = 0.0;
    for &i in order {
        prefix = prefix.with(i);
        let value = g.rank(prefix);
        rates[i] = value - prev;
        prev = value;
    }
    rates
}

/// Minimizes `λᵀR` over the contra-polymatroid of `g` by greedy allocation.
pub fn greedy_min_linear<R: RankFunction>(g: &R, weights: &[f64]) -> Result<RateVector> {
    let n = g.ground_size();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidParameter(alloc::format!("weight {w} is negative")));
    }
    Ok(chain_vertex(g, &descending_order(weights)))
}

/// Outcome of [`region_membership`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Subset with the largest `g(B) - R(B)`.
    pub worst: SourceSet,
    /// `g(worst) - R(worst)`; non-positive for members.
    pub worst_violation: f64,
}

/// Exhaustively checks `R(B) >= g(B) - tol` for every nonempty `B`.
pub fn region_membership<R: RankFunction>(g: &R, rates: &[f64], tol: f64) -> Result<Membership> {
    region_membership_limited(g, rates, tol, EXHAUSTIVE_LIMIT)
}

pub fn region_membership_limited<R: RankFunction>(
    g: &R,
    rates: &[f64],
    tol: f64,
    limit: usize,
) -> Result<Membership> {
    let n = g.ground_size();
    if n > limit {
        return Err(Error::TooManySources { size: n, limit });
    }
    if rates.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rates.len() });
    }
    let mut worst = SourceSet::empty();
    let mut worst_violation = f64::NEG_INFINITY;
    for set in SourceSet::nonempty_subsets(n) {
        let v = g.rank(set) - set.sum(rates);
        if v > worst_violation {
            worst_violation = v;
            worst = set;
        }
    }
    Ok(Membership { member: worst_violation <= tol, worst, worst_violation })
}

/// Largest violation of supermodularity `g(A)+g(B) <= g(A∪B)+g(A∩B)` over
/// all pairs, together with a violating pair.
pub fn supermodularity_violation<R: RankFunction>(g: &R) -> (f64, SourceSet, SourceSet) {
    let n = g.ground_size();
    let mut worst = (f64::NEG_INFINITY, SourceSet::empty(), SourceSet::empty());
    for a in SourceSet::all_subsets(n) {
        for b in SourceSet::all_subsets(n) {
            if b.bits() < a.bits() {
                continue;
            }
            let v = g.rank(a) + g.rank(b) - g.rank(a.union(b)) - g.rank(a.intersection(b));
            if v > worst.0 {
                worst = (v, a, b);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_source() -> TabulatedRank {
        TabulatedRank::new(2, vec![0.0, 0.5, 0.5, 1.5]).unwrap()
    }

    #[test]
    fn greedy_follows_weight_order() {
        let g = two_source();
        assert_eq!(greedy_min_linear(&g, &[2.0, 1.0]).unwrap(), vec![0.5, 1.0]);
        assert_eq!(greedy_min_linear(&g, &[1.0, 2.0]).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn greedy_ties_use_index_order() {
        let g = two_source();
        let r = greedy_min_linear(&g, &[1.0, 1.0]).unwrap();
        assert_eq!(r, vec![0.5, 1.0]);
        assert_eq!(r.iter().sum::<f64>(), 1.5);
    }

    #[test]
    fn greedy_rejects_negative_weights() {
        assert!(matches!(greedy_min_linear(&two_source(), &[1.0, -0.1]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn zero_rates_report_argmax_subset() {
        let g = two_source();
        let m = region_membership(&g, &[0.0, 0.0], 1e-9).unwrap();
        assert!(!m.member);
        assert_eq!(m.worst, SourceSet::full(2));
        assert_eq!(m.worst_violation, 1.5);
    }

    #[test]
    fn greedy_output_is_member_with_tight_prefixes() {
        let g = two_source();
        let r = greedy_min_linear(&g, &[3.0, 1.0]).unwrap();
        let m = region_membership(&g, &r, 1e-12).unwrap();
        assert!(m.member);
        assert!((SourceSet::from_indices(&[0]).sum(&r) - 0.5).abs() < 1e-15);
        assert!((SourceSet::full(2).sum(&r) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn membership_respects_limit() {
        let g = TabulatedRank::new(3, vec![0.0; 8]).unwrap();
        assert!(matches!(
            region_membership_limited(&g, &[0.0; 3], 0.0, 2),
            Err(Error::TooManySources { size: 3, limit: 2 })
        ));
    }
}
