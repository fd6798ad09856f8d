//! Quadratic Gaussian CEO rate region and its linear-minimization oracle.
//!
//! For an auxiliary vector `r ⪰ 0` the region `R_D(r)` is the
//! contra-polymatroid of
//!
//! ```text
//! f(A) = Σ_{k∈A} r_k + ½ ln( Q(all) / Q(A^c) ),   Q(B) = 1/σ_X² + Σ_{k∈B} (1 - e^{-2 r_k}) / σ_k²
//! ```
//!
//! and the full region is the union of `R_D(r)` over `Q(all) >= 1/D`.
//! Minimizing `wᵀR` over the union reduces, for the greedy order of `w`, to
//! a smooth problem in `r` whose stationarity conditions can be solved
//! recursively for a given multiplier `ν` of the (tight) distortion
//! constraint. The distortion residual is monotone in `ν`, so `ν` is found
//! by bisection.

use alloc::vec;
use alloc::vec::Vec;

use super::{chain_vertex, descending_order, RankFunction, RateVector, SourceSet};
use crate::error::{Error, Result};
use crate::math;

const DENOM_FLOOR: f64 = 1e-12;
const DISTORTION_TOL: f64 = 1e-10;

/// Remote Gaussian source observed through independent Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct CeoModel {
    sigma_x2: f64,
    noise: Vec<f64>,
    distortion: f64,
}

impl CeoModel {
    pub fn new(sigma_x2: f64, noise: Vec<f64>, distortion: f64) -> Result<Self> {
        if !(sigma_x2 > 0.0 && sigma_x2.is_finite()) {
            return Err(Error::InvalidParameter("source variance must be positive".into()));
        }
        if noise.is_empty() || noise.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("noise variances must be positive".into()));
        }
        if !(distortion > 0.0 && distortion.is_finite()) {
            return Err(Error::InvalidParameter("distortion target must be positive".into()));
        }
        Ok(Self { sigma_x2, noise, distortion })
    }

    pub fn sigma_x2(&self) -> f64 {
        self.sigma_x2
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn num_sensors(&self) -> usize {
        self.noise.len()
    }

    /// Same model with a different distortion target.
    pub fn with_distortion(&self, distortion: f64) -> Result<Self> {
        Self::new(self.sigma_x2, self.noise.clone(), distortion)
    }

    /// `(1 - e^{-2 r_i}) / σ_i²`.
    pub fn gain(&self, i: usize, r: f64) -> f64 {
        -libm::expm1(-2.0 * r) / self.noise[i]
    }

    /// `1/σ_X² + Σ_{k∈set} gain_k(r_k)`.
    pub fn precision(&self, r: &[f64], set: SourceSet) -> f64 {
        1.0 / self.sigma_x2 + set.iter().map(|k| self.gain(k, r[k])).sum::<f64>()
    }

    /// `Q(all) - 1/D`; non-negative iff `r ∈ F(D)`.
    pub fn distortion_residual(&self, r: &[f64]) -> f64 {
        self.precision(r, SourceSet::full(self.num_sensors())) - 1.0 / self.distortion
    }

    /// Whether the target is reachable with finite rates.
    pub fn is_achievable(&self) -> bool {
        self.zero_rate_feasible()
            || 1.0 / self.sigma_x2 + self.noise.iter().map(|s| 1.0 / s).sum::<f64>() > 1.0 / self.distortion
    }

    /// `D >= σ_X²`: the prior alone meets the target.
    pub fn zero_rate_feasible(&self) -> bool {
        self.distortion >= self.sigma_x2
    }
}

/// Rank `f(A)` of `R_D(r)`; `f(∅) = 0`.
pub fn ceo_rank(m: &CeoModel, r: &[f64], set: SourceSet) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let n = m.num_sensors();
    let total = m.precision(r, SourceSet::full(n));
    let rest = m.precision(r, set.complement(n));
    set.sum(r) + 0.5 * math::ln(total / rest)
}

/// [`ceo_rank`] for a fixed auxiliary vector as a [`RankFunction`].
#[derive(Debug, Clone, Copy)]
pub struct CeoRank<'a> {
    pub model: &'a CeoModel,
    pub r: &'a [f64],
}

impl RankFunction for CeoRank<'_> {
    fn ground_size(&self) -> usize {
        self.model.num_sensors()
    }
    fn rank(&self, set: SourceSet) -> f64 {
        ceo_rank(self.model, self.r, set)
    }
}

/// Minimizer of `wᵀR` over the CEO region.
#[derive(Debug, Clone, PartialEq)]
pub struct CeoSolution {
    /// Auxiliary vector `r*` on the boundary of `F(D)`.
    pub r: Vec<f64>,
    /// Greedy vertex of `R_D(r*)` for the order of `w`.
    pub rates: RateVector,
    pub objective: f64,
    /// Multiplier of the distortion constraint.
    pub nu: f64,
    /// Source indices by non-increasing weight.
    pub order: Vec<usize>,
    /// Weights actually used by the recursion (zeros lifted to a tiny floor).
    pub weights: Vec<f64>,
    /// Set when a recursion denominator had to be clamped.
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CeoOutcome {
    Optimal(CeoSolution),
    /// Some weight is negative, so the objective is unbounded below.
    Unbounded,
}

impl CeoOutcome {
    pub fn optimal(self) -> Option<CeoSolution> {
        match self {
            CeoOutcome::Optimal(s) => Some(s),
            CeoOutcome::Unbounded => None,
        }
    }
}

struct Recursion {
    /// `r` indexed by source (not by position).
    r: Vec<f64>,
    residual: f64,
    clamped: bool,
}

/// Solves the stationarity recursion for multiplier `nu`.
fn recurse(m: &CeoModel, w: &[f64], order: &[usize], nu: f64) -> Recursion {
    let n = order.len();
    let mut r = vec![0.0; m.num_sensors()];
    let mut q = 1.0 / m.distortion;
    let mut s = 0.0;
    let mut clamped = false;
    for pos in 0..n {
        let k = order[pos];
        let wk = w[k];
        let num = 2.0 * nu + s;
        let den = wk * m.noise[k];
        let rk = if num > den { 0.5 * math::ln(num / den) } else { 0.0 };
        r[k] = rk;
        q -= m.gain(k, rk);
        if pos + 1 < n {
            let next = w[order[pos + 1]];
            let denom = if q < DENOM_FLOOR {
                clamped = true;
                DENOM_FLOOR
            } else {
                q
            };
            s += (wk - next) / denom;
        }
    }
    let residual = m.distortion_residual(&r);
    Recursion { r, residual, clamped }
}

/// Minimizes `wᵀR` over the CEO region `R(D)`.
///
/// Returns [`CeoOutcome::Unbounded`] if any weight is negative, and
/// [`Error::UnachievableDistortion`] if `F(D)` is empty.
pub fn ceo_min_linear(m: &CeoModel, w: &[f64]) -> Result<CeoOutcome> {
    let n = m.num_sensors();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    if w.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("weight is NaN".into()));
    }
    if w.iter().any(|&v| v < 0.0) {
        return Ok(CeoOutcome::Unbounded);
    }
    let order = descending_order(w);
    if m.zero_rate_feasible() {
        return Ok(CeoOutcome::Optimal(CeoSolution {
            r: vec![0.0; n],
            rates: vec![0.0; n],
            objective: 0.0,
            nu: 0.0,
            order,
            weights: w.to_vec(),
            ill_conditioned: false,
        }));
    }
    if !m.is_achievable() {
        return Err(Error::UnachievableDistortion);
    }
    let top = w.iter().cloned().fold(1.0f64, f64::max);
    let floor = 1e-12 * top;
    let weights: Vec<f64> = w.iter().map(|&v| v.max(floor)).collect();

    // With every r at zero all denominators equal 1/D; below this ν the
    // recursion returns r = 0 and the residual is 1/σ_X² - 1/D < 0.
    let mut lo = {
        let mut s = 0.0;
        let mut lowest = f64::INFINITY;
        for pos in 0..n {
            let k = order[pos];
            lowest = lowest.min(0.5 * (weights[k] * m.noise[k] - s));
            if pos + 1 < n {
                s += (weights[k] - weights[order[pos + 1]]) * m.distortion;
            }
        }
        lowest.min(0.0) - 1.0
    };
    let mut hi = lo.abs().max(1.0);
    let mut at_hi = recurse(m, &weights, &order, hi);
    let mut expansions = 0;
    while at_hi.residual < 0.0 {
        hi *= 2.0;
        at_hi = recurse(m, &weights, &order, hi);
        expansions += 1;
        if expansions > 2000 || !hi.is_finite() {
            return Err(Error::Numerical("could not bracket the distortion multiplier".into()));
        }
    }
    let mut best = bisect(m, &weights, &order, &mut lo, &mut hi);
    if best.residual.abs() > DISTORTION_TOL {
        best = grid_fallback(m, &weights, &order, lo, hi).unwrap_or(best);
    }
    let (nu, rec) = best.into_parts();
    let rates = chain_vertex(&CeoRank { model: m, r: &rec.r }, &order);
    let objective = rates.iter().zip(w).map(|(a, b)| a * b).sum();
    Ok(CeoOutcome::Optimal(CeoSolution {
        r: rec.r,
        rates,
        objective,
        nu,
        order,
        weights,
        ill_conditioned: rec.clamped,
    }))
}

struct Candidate {
    nu: f64,
    rec: Recursion,
    residual: f64,
}

impl Candidate {
    fn new(nu: f64, rec: Recursion) -> Self {
        Candidate { nu, residual: rec.residual, rec }
    }

    fn into_parts(self) -> (f64, Recursion) {
        (self.nu, self.rec)
    }
}

fn bisect(m: &CeoModel, w: &[f64], order: &[usize], lo: &mut f64, hi: &mut f64) -> Candidate {
    let mut best = Candidate::new(*hi, recurse(m, w, order, *hi));
    for _ in 0..400 {
        let mid = 0.5 * (*lo + *hi);
        if mid <= *lo || mid >= *hi {
            break;
        }
        let rec = recurse(m, w, order, mid);
        let res = rec.residual;
        if res.abs() < best.residual.abs() {
            best = Candidate::new(mid, rec);
        }
        if res.abs() <= 1e-3 * DISTORTION_TOL {
            break;
        }
        if res < 0.0 {
            *lo = mid;
        } else {
            *hi = mid;
        }
    }
    let at_lo = recurse(m, w, order, *lo);
    if at_lo.residual.abs() < best.residual.abs() {
        best = Candidate::new(*lo, at_lo);
    }
    best
}

/// Log-spaced scan for a sign change, used when bisection stalls on a
/// numerically non-monotone residual.
fn grid_fallback(m: &CeoModel, w: &[f64], order: &[usize], lo: f64, hi: f64) -> Option<Candidate> {
    let shift = if lo <= 0.0 { 1.0 - lo } else { 0.0 };
    let (a, b) = (math::ln(lo + shift), math::ln(hi + shift));
    let points = 10_000;
    let mut prev_nu = lo;
    let mut prev_res = recurse(m, w, order, lo).residual;
    for i in 1..=points {
        let nu = math::exp(a + (b - a) * i as f64 / points as f64) - shift;
        let res = recurse(m, w, order, nu).residual;
        if prev_res <= 0.0 && res >= 0.0 {
            let (mut l, mut h) = (prev_nu, nu);
            return Some(bisect(m, w, order, &mut l, &mut h));
        }
        prev_nu = nu;
        prev_res = res;
    }
    None
}

/// Residuals of the optimality conditions at a returned solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// Largest stationarity violation over the sources (for `r_k = 0` only
    /// a negative partial derivative counts).
    pub stationarity: f64,
    /// `|Q(all) - 1/D|`.
    pub distortion: f64,
}

/// Evaluates the stationarity conditions with the true tail precisions
/// `Q(P_i^c)`, independently of the recursion's tight-constraint shortcut.
pub fn ceo_kkt_residuals(m: &CeoModel, sol: &CeoSolution) -> KktResiduals {
    let n = m.num_sensors();
    let w = &sol.weights;
    let order = &sol.order;
    let mut stationarity = 0.0f64;
    let mut s = 0.0;
    let mut prefix = SourceSet::empty();
    for pos in 0..n {
        let k = order[pos];
        let rk = sol.r[k];
        let dgain = 2.0 * math::exp(-2.0 * rk) / m.noise[k];
        let grad = w[k] - dgain * (sol.nu + 0.5 * s);
        let viol = if rk > 0.0 { grad.abs() } else { (-grad).max(0.0) };
        stationarity = stationarity.max(viol);
        prefix = prefix.with(k);
        if pos + 1 < n {
            let tail = m.precision(&sol.r, prefix.complement(n));
            s += (w[k] - w[order[pos + 1]]) / tail;
        }
    }
    let distortion = if m.zero_rate_feasible() { 0.0 } else { m.distortion_residual(&sol.r).abs() };
    KktResiduals { stationarity, distortion }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::{region_membership, supermodularity_violation};

    #[test]
    fn zero_aux_vector_gives_zero_rank() {
        let m = CeoModel::new(1.0, vec![0.5, 2.0, 1.0], 0.3).unwrap();
        let r = [0.0; 3];
        for set in SourceSet::all_subsets(3) {
            assert_eq!(ceo_rank(&m, &r, set), 0.0);
        }
    }

    #[test]
    fn full_set_rank_closed_form() {
        let m = CeoModel::new(2.0, vec![0.5, 1.5], 0.3).unwrap();
        let r = [0.4, 1.1];
        let expected = 0.4 + 1.1
            + 0.5 * math::ln(1.0 + 2.0 * ((1.0 - math::exp(-0.8)) / 0.5 + (1.0 - math::exp(-2.2)) / 1.5));
        assert!((ceo_rank(&m, &r, SourceSet::full(2)) - expected).abs() < 1e-12);
    }

    #[test]
    fn two_sensor_rank_is_supermodular() {
        let m = CeoModel::new(1.0, vec![0.3, 0.8], 0.2).unwrap();
        let r = [0.7, 0.2];
        let (v, _, _) = supermodularity_violation(&CeoRank { model: &m, r: &r });
        assert!(v <= 1e-12);
    }

    #[test]
    fn single_sensor_closed_form() {
        let m = CeoModel::new(1.0, vec![1.0], 0.6).unwrap();
        let sol = ceo_min_linear(&m, &[1.0]).unwrap().optimal().unwrap();
        let r1 = 0.5 * math::ln(3.0);
        assert!((sol.r[0] - r1).abs() < 1e-9);
        let rate = r1 + 0.5 * math::ln(1.0 / 0.6);
        assert!((sol.rates[0] - rate).abs() < 1e-9);
        assert!((sol.objective - 0.8047).abs() < 1e-4);
    }

    #[test]
    fn negative_weight_is_unbounded() {
        let m = CeoModel::new(1.0, vec![1.0, 1.0, 1.0], 0.3).unwrap();
        assert_eq!(ceo_min_linear(&m, &[1.0, -1e-9, 2.0]).unwrap(), CeoOutcome::Unbounded);
    }

    #[test]
    fn unachievable_target_errors() {
        let m = CeoModel::new(1.0, vec![1.0], 0.4).unwrap();
        assert_eq!(ceo_min_linear(&m, &[1.0]).unwrap_err(), Error::UnachievableDistortion);
    }

    #[test]
    fn loose_target_needs_no_rate() {
        let m = CeoModel::new(1.0, vec![1.0, 2.0], 1.5).unwrap();
        let sol = ceo_min_linear(&m, &[1.0, 1.0]).unwrap().optimal().unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.rates, vec![0.0, 0.0]);
    }

    #[test]
    fn returned_vertex_is_in_region_and_kkt_holds() {
        let m = CeoModel::new(0.01, vec![0.005; 4], 0.003).unwrap();
        let w = [0.7, 2.0, 1.1, 0.3];
        let sol = ceo_min_linear(&m, &w).unwrap().optimal().unwrap();
        let res = ceo_kkt_residuals(&m, &sol);
        assert!(res.stationarity <= 1e-8, "{res:?}");
        assert!(res.distortion <= 1e-10, "{res:?}");
        let mem = region_membership(&CeoRank { model: &m, r: &sol.r }, &sol.rates, 1e-12).unwrap();
        assert!(mem.member);
    }
}
