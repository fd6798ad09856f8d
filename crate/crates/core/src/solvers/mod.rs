//! Dual-decomposition drivers for the three problems.
//!
//! * [`solve_sw`]: projected subgradient on the multicast dual with
//!   Sherali–Choi averaging of the primal iterates.
//! * [`solve_ceo`]: projected subgradient on the single-sink dual with
//!   ergodic averaging.
//! * [`solve_lifetime`]: proximal bundle method on the lifetime dual with
//!   aggregate primal recovery.
//!
//! Each driver finishes with a restoration step: the averaged rates are
//! kept and the flows are re-solved as a plain LP at those rates, which
//! removes the residual infeasibility that averaging leaves behind.

mod bundle;
mod ceo;
mod lifetime;
mod sw;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::netmodel::FlowAssignment;

pub use crate::lpcore::EnergyParams;
pub use bundle::{solve_proximal_qp, BundleLog, ProximalStep};
pub use ceo::{solve_ceo, CeoDual, CeoPrimal, CeoRouting};
pub use lifetime::{solve_lifetime, LifetimeDual, LifetimePrimal, LifetimeSolution};
pub use sw::{solve_sw, SwDual, SwSolution};

/// Step-size rule `θ_k` for iteration `k ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `a / (b + c k)`.
    Harmonic { a: f64, b: f64, c: f64 },
    /// `a k^{-α}`.
    Power { a: f64, alpha: f64 },
}

impl StepSchedule {
    pub fn step(&self, k: usize) -> f64 {
        let k = k.max(1) as f64;
        match *self {
            StepSchedule::Harmonic { a, b, c } => a / (b + c * k),
            StepSchedule::Power { a, alpha } => a * libm::pow(k, -alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Harmonic { a, b, c } => a > 0.0 && b >= 0.0 && c >= 0.0 && b + c > 0.0 && a.is_finite(),
            StepSchedule::Power { a, alpha } => a > 0.0 && a.is_finite() && alpha > 0.0 && alpha < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("bad step schedule {self:?}")))
        }
    }
}

/// Proximal bundle settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleParams {
    /// Serious-step fraction of the predicted ascent, in `(0, 1)`.
    pub m: f64,
    /// Stop once the predicted ascent falls below `delta_bar · (1 + |f(x̂)|)`.
    pub delta_bar: f64,
    /// Initial proximity weight.
    pub mu: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Consecutive null steps after which `μ` doubles.
    pub null_limit: usize,
    /// Consecutive serious steps after which `μ` halves.
    pub serious_limit: usize,
    /// Linearizations kept before the oldest are aggregated.
    pub max_size: usize,
}

impl Default for BundleParams {
    fn default() -> Self {
        Self {
            m: 0.1,
            delta_bar: 1e-7,
            mu: 1.0,
            mu_min: 1e-6,
            mu_max: 1e6,
            null_limit: 5,
            serious_limit: 3,
            max_size: 100,
        }
    }
}

impl BundleParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.m > 0.0
            && self.m < 1.0
            && self.delta_bar > 0.0
            && self.mu_min > 0.0
            && self.mu_min <= self.mu
            && self.mu <= self.mu_max
            && self.mu_max.is_finite()
            && self.null_limit > 0
            && self.serious_limit > 0
            && self.max_size >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("bad bundle parameters {self:?}")))
        }
    }
}

/// Settings shared by the three drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub step: StepSchedule,
    pub max_iters: usize,
    /// Iterates ignored before averaging starts.
    pub burn_in: usize,
    /// Relative spread of the averaged cost over `window` iterations below
    /// which the average counts as settled.
    pub tol: f64,
    pub window: usize,
    /// Largest constraint residual accepted at convergence.
    pub feas_tol: f64,
    /// Lower bound on every dual variable.
    pub dual_floor: f64,
    pub initial_dual: f64,
    pub bundle: BundleParams,
}

impl SolverConfig {
    /// `θ_k = 8 k^{-0.8}`, burn-in 50.
    pub fn sw() -> Self {
        Self {
            step: StepSchedule::Power { a: 8.0, alpha: 0.8 },
            max_iters: 2000,
            burn_in: 50,
            tol: 1e-4,
            window: 50,
            feas_tol: 1e-5,
            dual_floor: crate::lpcore::DEFAULT_DUAL_FLOOR,
            initial_dual: 1.0,
            bundle: BundleParams::default(),
        }
    }

    /// `α_k = 10 / (1 + k)`, burn-in 100.
    pub fn ceo() -> Self {
        Self { step: StepSchedule::Harmonic { a: 10.0, b: 1.0, c: 1.0 }, max_iters: 200_000, burn_in: 100, ..Self::sw() }
    }

    pub fn lifetime() -> Self {
        Self { max_iters: 500, ..Self::sw() }
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        self.bundle.validate()?;
        let ok = self.max_iters > 0
            && self.tol > 0.0
            && self.window > 0
            && self.feas_tol > 0.0
            && self.dual_floor >= 0.0
            && self.dual_floor.is_finite()
            && self.initial_dual >= self.dual_floor
            && self.initial_dual.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("bad solver configuration {self:?}")))
        }
    }
}

/// One row of a [`ConvergenceTrace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub dual_value: f64,
    pub primal_cost: f64,
    /// `NaN` until averaging starts.
    pub avg_primal_cost: f64,
    /// Largest residual of the averaged point (`NaN` before averaging).
    pub max_infeasibility: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn best_dual(&self) -> f64 {
        self.rows.iter().map(|r| r.dual_value).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// How a driver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCap,
}

/// A primal point that can be averaged.
pub trait PrimalPoint: Clone {
    /// `self ← a·self + b·other`.
    fn combine(&mut self, a: f64, other: &Self, b: f64);
}

fn combine_slice(dst: &mut [f64], a: f64, src: &[f64], b: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = a * *d + b * s;
    }
}

impl PrimalPoint for Vec<f64> {
    fn combine(&mut self, a: f64, other: &Self, b: f64) {
        combine_slice(self, a, other, b);
    }
}

impl PrimalPoint for FlowAssignment {
    fn combine(&mut self, a: f64, other: &Self, b: f64) {
        combine_slice(&mut self.z, a, &other.z, b);
        for (x, y) in self.x.iter_mut().zip(&other.x) {
            combine_slice(x, a, y, b);
        }
        for (r, s) in self.rates.iter_mut().zip(&other.rates) {
            combine_slice(r, a, s, b);
        }
    }
}

/// Uniform running mean of the iterates pushed so far.
#[derive(Debug, Clone)]
pub(crate) struct RunningMean<P> {
    mean: Option<P>,
    count: usize,
}

impl<P: PrimalPoint> RunningMean<P> {
    pub(crate) fn new() -> Self {
        Self { mean: None, count: 0 }
    }

    pub(crate) fn push(&mut self, p: &P) {
        self.count += 1;
        match &mut self.mean {
            None => self.mean = Some(p.clone()),
            Some(m) => {
                let w = 1.0 / self.count as f64;
                m.combine(1.0 - w, p, w);
            }
        }
    }

    pub(crate) fn mean(&self) -> Option<&P> {
        self.mean.as_ref()
    }
}

/// `Σ_j μ_j · iterate_j` for non-negative weights summing to one.
pub fn sherali_choi_average<P: PrimalPoint>(history: &[P], weights: &[f64]) -> Result<P> {
    if history.is_empty() {
        return Err(Error::InvalidParameter("no iterates to average".into()));
    }
    if weights.len() != history.len() {
        return Err(Error::DimensionMismatch { expected: history.len(), got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("averaging weights must be non-negative and sum to one".into()));
    }
    let mut out = history[0].clone();
    out.combine(weights[0], &history[0], 0.0);
    for (p, &w) in history.iter().zip(weights).skip(1) {
        out.combine(1.0, p, w);
    }
    Ok(out)
}

/// The three conditions on `γ_{jk} = μ_j^k / θ_j` under uniform weights
/// `μ_j^k = 1/k` that make the averaged primal iterates converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleConditions {
    /// `γ_{jk}` non-decreasing in `j`.
    pub nondecreasing: bool,
    /// `max_j (γ_{jk} - γ_{j-1,k}) → 0`.
    pub increments_vanish: bool,
    /// `γ_{1k} → 0`.
    pub first_vanishes: bool,
}

impl ScheduleConditions {
    pub fn hold(&self) -> bool {
        self.nondecreasing && self.increments_vanish && self.first_vanishes
    }
}

/// Decides the averaging conditions from the schedule's closed form.
///
/// With uniform weights `γ_{jk} = 1/(k θ_j)`. It is non-decreasing in `j`
/// exactly when `θ` is non-increasing, its largest increment is
/// `(1/k) max_j (1/θ_j - 1/θ_{j-1})`, which vanishes when `1/θ` has bounded
/// increments, and `γ_{1k} = 1/(k θ_1)` vanishes whenever `θ_1 > 0`.
pub fn sherali_choi_conditions(s: &StepSchedule) -> ScheduleConditions {
    match *s {
        StepSchedule::Harmonic { a, b, c } => ScheduleConditions {
            nondecreasing: c >= 0.0,
            // 1/θ_j = (b + c j)/a has constant increments c/a.
            increments_vanish: a > 0.0 && c.is_finite(),
            first_vanishes: a > 0.0 && b + c > 0.0,
        },
        StepSchedule::Power { a, alpha } => ScheduleConditions {
            nondecreasing: alpha >= 0.0,
            // 1/θ_j = j^α/a has increments bounded by α/a for α ≤ 1.
            increments_vanish: a > 0.0 && alpha <= 1.0,
            first_vanishes: a > 0.0,
        },
    }
}

/// `γ_{jk}` for `j = 1..=k` under uniform weights.
pub fn sherali_choi_gamma(s: &StepSchedule, k: usize) -> Vec<f64> {
    (1..=k).map(|j| 1.0 / (k as f64 * s.step(j))).collect()
}

/// Value, subgradient and minimizer of a Lagrangian dual at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint<P> {
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub primal: P,
    /// Objective of the original problem at `primal`.
    pub primal_cost: f64,
}

/// A concave dual function with a primal minimizer behind every value.
pub trait DualOracle {
    type Primal: PrimalPoint;

    fn dim(&self) -> usize;

    fn evaluate(&mut self, lambda: &[f64]) -> Result<DualPoint<Self::Primal>>;

    /// Largest constraint violation of a primal point.
    fn infeasibility(&self, p: &Self::Primal) -> f64;
}

/// `g(λ)` and a subgradient.
pub fn dual_value<D: DualOracle>(oracle: &mut D, lambda: &[f64]) -> Result<(f64, Vec<f64>)> {
    if lambda.len() != oracle.dim() {
        return Err(Error::DimensionMismatch { expected: oracle.dim(), got: lambda.len() });
    }
    let p = oracle.evaluate(lambda)?;
    Ok((p.value, p.subgradient))
}

/// Tracks the averaged cost over a sliding window.
#[derive(Debug, Clone)]
pub(crate) struct Settling {
    window: usize,
    tol: f64,
    recent: alloc::collections::VecDeque<f64>,
}

impl Settling {
    pub(crate) fn new(window: usize, tol: f64) -> Self {
        Self { window, tol, recent: alloc::collections::VecDeque::with_capacity(window + 1) }
    }

    pub(crate) fn push(&mut self, v: f64) {
        self.recent.push_back(v);
        if self.recent.len() > self.window {
            self.recent.pop_front();
        }
    }

    /// Spread of the window relative to its latest value is within `tol`.
    pub(crate) fn settled(&self) -> bool {
        if self.recent.len() < self.window {
            return false;
        }
        let lo = self.recent.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let last = *self.recent.back().expect("nonempty window");
        hi - lo <= self.tol * last.abs()
    }
}

/// Projected subgradient step `λ ← max(floor, λ + θ s)`.
pub(crate) fn ascend(lambda: &mut [f64], s: &[f64], theta: f64, floor: f64) {
    for (l, g) in lambda.iter_mut().zip(s) {
        *l += theta * g;
    }
    crate::lpcore::project_onto_floor(lambda, floor);
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_iterate_average_is_identity() {
        let p = vec![1.5, -2.0];
        assert_eq!(sherali_choi_average(core::slice::from_ref(&p), &[1.0]).unwrap(), p);
    }

    #[test]
    fn uniform_average_of_two() {
        let avg = sherali_choi_average(&[vec![0.0, 2.0], vec![2.0, 0.0]], &[0.5, 0.5]).unwrap();
        assert_eq!(avg, vec![1.0, 1.0]);
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(sherali_choi_average(&[vec![0.0]], &[0.5]).is_err());
        assert!(sherali_choi_average(&[vec![0.0], vec![1.0]], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn built_in_schedules_satisfy_conditions() {
        for s in [SolverConfig::sw().step, SolverConfig::ceo().step] {
            assert!(sherali_choi_conditions(&s).hold(), "{s:?}");
            let g = sherali_choi_gamma(&s, 4000);
            assert!(g.windows(2).all(|w| w[1] >= w[0]));
            let inc = g.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            assert!(inc < 1e-3 && g[0] < 1e-3, "{inc} {}", g[0]);
        }
    }

    #[test]
    fn growing_steps_break_monotonicity() {
        let s = StepSchedule::Harmonic { a: 1.0, b: 10.0, c: -1.0 };
        assert!(s.validate().is_err());
        assert!(!sherali_choi_conditions(&s).nondecreasing);
    }

    #[test]
    fn schedule_values() {
        let p = StepSchedule::Power { a: 8.0, alpha: 0.8 };
        assert!((p.step(1) - 8.0).abs() < 1e-15);
        assert!((p.step(32) - 8.0 / 16.0).abs() < 1e-12);
        let h = StepSchedule::Harmonic { a: 10.0, b: 1.0, c: 1.0 };
        assert!((h.step(4) - 2.0).abs() < 1e-15);
        assert!(StepSchedule::Power { a: 1.0, alpha: 1.0 }.validate().is_err());
    }

    #[test]
    fn config_defaults_validate() {
        SolverConfig::sw().validate().unwrap();
        SolverConfig::ceo().validate().unwrap();
        SolverConfig::lifetime().validate().unwrap();
        let mut bad = SolverConfig::sw();
        bad.bundle.m = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn settling_window() {
        let mut s = Settling::new(3, 1e-3);
        s.push(10.0);
        s.push(10.001);
        assert!(!s.settled());
        s.push(10.002);
        assert!(s.settled());
        s.push(11.0);
        assert!(!s.settled());
    }
}
