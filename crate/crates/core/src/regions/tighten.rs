//! Reduction of an in-region rate vector to one with a tight sum rate.

use alloc::vec::Vec;

use super::{region_membership, RankFunction, RateVector, SourceSet};
use crate::error::{Error, Result};

/// Returns `R' ⪯ R` in the region with `Σ R'_i = g(full set)`.
///
/// While the full set is loose, the lowest index whose every containing
/// constraint is loose is lowered by the smallest of those slacks. Each
/// step makes a constraint containing that index tight, and tight sets stay
/// tight, so at most one step per source is needed.
pub fn tighten_sum_rate<G: RankFunction>(g: &G, rates: &[f64]) -> Result<RateVector> {
    let n = g.ground_size();
    let scale = rates.iter().fold(1.0f64, |m, r| m.max(r.abs()));
    let tol = 1e-12 * scale * n.max(1) as f64;
    let membership = region_membership(g, rates, tol)?;
    if !membership.member {
        return Err(Error::NotInRegion);
    }
    let mut out: Vec<f64> = rates.to_vec();
    let full = SourceSet::full(n);
    for _ in 0..=n {
        let slack_full = full.sum(&out) - g.rank(full);
        if slack_full <= tol {
            break;
        }
        let mut reduced = false;
        for i in 0..n {
            let mut min_slack = f64::INFINITY;
            for set in SourceSet::nonempty_subsets(n).filter(|s| s.contains(i)) {
                min_slack = min_slack.min(set.sum(&out) - g.rank(set));
            }
            if min_slack > tol {
                out[i] -= min_slack;
                reduced = true;
                break;
            }
        }
        if !reduced {
            return Err(Error::Numerical("no loose index while the sum rate is loose".into()));
        }
    }
    Ok(out)
}
