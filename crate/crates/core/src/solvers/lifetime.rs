use alloc::vec;
use alloc::vec::Vec;

use super::bundle::{maximize, BundleLog};
use super::ceo::{distortion_shortfall, lift_into_region, region_shortfall, routing_infeasibility, single_terminal};
use super::ceo::FixedRateRouter;
use super::{combine_slice, ConvergenceTrace, DualOracle, DualPoint, PrimalPoint, SolveStatus, SolverConfig, TraceRow};
use crate::error::{Error, Result};
use crate::lpcore::{EnergyParams, LifetimeFlowSubproblem};
use crate::netmodel::Network;
use crate::regions::{ceo_min_linear, CeoModel, CeoOutcome, RateVector};

/// Reciprocal lifetime, flows, rates and auxiliary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimePrimal {
    pub gamma: f64,
    pub x: Vec<f64>,
    pub rates: RateVector,
    pub r: Vec<f64>,
}

impl PrimalPoint for LifetimePrimal {
    fn combine(&mut self, a: f64, other: &Self, b: f64) {
        self.gamma = a * self.gamma + b * other.gamma;
        combine_slice(&mut self.x, a, &other.x, b);
        combine_slice(&mut self.rates, a, &other.rates, b);
        combine_slice(&mut self.r, a, &other.r, b);
    }
}

/// Largest of the routing residuals, the distortion shortfall and the
/// energy residuals `load_v + P_sense R_v - E_v Γ`.
fn lifetime_infeasibility(net: &Network, m: &CeoModel, e: &EnergyParams, p: &LifetimePrimal) -> f64 {
    let mut worst = routing_infeasibility(net, &p.x, &p.rates).max(distortion_shortfall(m, &p.r));
    let mut sense = vec![0.0; net.num_nodes()];
    for (i, &s) in net.sources().iter().enumerate() {
        sense[s] = e.p_sense[i] * p.rates[i];
    }
    for v in 0..net.num_nodes() {
        worst = worst.max(e.radio_load(net, &p.x, v) + sense[v] - e.energy[v] * p.gamma);
    }
    worst.max(-p.gamma)
}

/// Lifetime dual with `λ = (λ1_1, .., λ1_{N_S}, λ1_T, λ2_1, .., λ2_{N_S})`:
/// the balance multipliers of the sources and the terminal, then the
/// energy multipliers of the sources. The flow half is the one-dimensional
/// search of [`LifetimeFlowSubproblem`]; the rate half is the CEO oracle
/// with weights `λ1_i + λ1_T + P_sense,i λ2_i`.
pub struct LifetimeDual {
    net: Network,
    model: CeoModel,
    energy: EnergyParams,
    flows: LifetimeFlowSubproblem,
}

impl LifetimeDual {
    pub fn new(net: &Network, model: &CeoModel, energy: &EnergyParams) -> Result<Self> {
        single_terminal(net)?;
        if model.num_sensors() != net.sources().len() {
            return Err(Error::DimensionMismatch { expected: net.sources().len(), got: model.num_sensors() });
        }
        if !model.is_achievable() {
            return Err(Error::UnachievableDistortion);
        }
        Ok(Self {
            net: net.clone(),
            model: model.clone(),
            energy: energy.clone(),
            flows: LifetimeFlowSubproblem::new(net, energy)?,
        })
    }
}

impl DualOracle for LifetimeDual {
    type Primal = LifetimePrimal;

    fn dim(&self) -> usize {
        2 * self.net.sources().len() + 1
    }

    fn evaluate(&mut self, lambda: &[f64]) -> Result<DualPoint<LifetimePrimal>> {
        let ns = self.net.sources().len();
        if lambda.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: lambda.len() });
        }
        let (l1, lt, l2) = (&lambda[..ns], lambda[ns], &lambda[ns + 1..]);
        let flow = self.flows.solve(l1, lt, l2)?;
        let w: Vec<f64> = (0..ns).map(|i| l1[i] + lt + self.energy.p_sense[i] * l2[i]).collect();
        let sol = match ceo_min_linear(&self.model, &w)? {
            CeoOutcome::Optimal(s) => s,
            CeoOutcome::Unbounded => return Err(Error::Unbounded),
        };
        let div = self.net.divergence(&flow.x);
        let t = self.net.terminals()[0];
        let sources = self.net.sources();
        let mut subgradient: Vec<f64> = sources.iter().zip(&sol.rates).map(|(&s, r)| r - div[s]).collect();
        subgradient.push(sol.rates.iter().sum::<f64>() + div[t]);
        for (i, &s) in sources.iter().enumerate() {
            let load = self.energy.radio_load(&self.net, &flow.x, s) + self.energy.p_sense[i] * sol.rates[i];
            subgradient.push(load - self.energy.energy[s] * flow.gamma);
        }
        Ok(DualPoint {
            value: flow.value + sol.objective,
            subgradient,
            primal_cost: flow.gamma * flow.gamma,
            primal: LifetimePrimal { gamma: flow.gamma, x: flow.x, rates: sol.rates, r: sol.r },
        })
    }

    fn infeasibility(&self, p: &LifetimePrimal) -> f64 {
        lifetime_infeasibility(&self.net, &self.model, &self.energy, p)
    }
}

/// Output of [`solve_lifetime`].
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeSolution {
    /// Restored reciprocal lifetime.
    pub gamma: f64,
    /// `1/Γ`; infinite when nothing has to be sent.
    pub lifetime: f64,
    pub primal: LifetimePrimal,
    pub infeasibility: f64,
    /// Multiplier-weighted aggregate of the bundle's subproblem solutions.
    pub aggregate: LifetimePrimal,
    pub aggregate_infeasibility: f64,
    /// Best dual value, a lower bound on the optimal `Γ²`.
    pub dual_bound: f64,
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub trace: ConvergenceTrace,
    pub bundle: BundleLog,
}

/// Proximal bundle method on the lifetime dual.
///
/// Batteries are normalized by the largest one before the run and `Γ` is
/// scaled back afterwards, so the iterates do not depend on the energy
/// unit. Trace values are reported in the original units: the dual and
/// primal columns are `Γ²`, the step column is `1/μ`.
pub fn solve_lifetime(net: &Network, m: &CeoModel, energy: &EnergyParams, cfg: &SolverConfig) -> Result<LifetimeSolution> {
    cfg.validate()?;
    energy.validate(net)?;
    let scale = energy.energy.iter().cloned().fold(0.0, f64::max);
    let normalized = energy.scale_energy(1.0 / scale);
    let mut dual = LifetimeDual::new(net, m, &normalized)?;
    let d = dual.dim();
    let lower = vec![cfg.dual_floor; d];
    let start = vec![cfg.initial_dual; d];
    let s2 = scale * scale;
    let mut trace = ConvergenceTrace::default();
    let run = maximize(&mut dual, &start, &lower, &cfg.bundle, cfg.max_iters, |it| {
        let g = &it.aggregate.gamma;
        trace.push(TraceRow {
            iter: it.iter,
            dual_value: it.candidate_value / s2,
            primal_cost: it.candidate_cost / s2,
            avg_primal_cost: g * g / s2,
            max_infeasibility: lifetime_infeasibility(net, m, &normalized, it.aggregate),
            step: 1.0 / it.mu,
        });
        log::debug!("lifetime iter {}: center {:.6e} delta {:.3e} mu {:.3e}", it.iter, it.center_value / s2, it.delta, it.mu);
    })?;

    let mut aggregate = run.aggregate.clone();
    let aggregate_infeasibility = lifetime_infeasibility(net, m, &normalized, &aggregate);
    aggregate.gamma /= scale;
    let rates = lift_into_region(m, &aggregate.r, &aggregate.rates)?;
    let mut router = FixedRateRouter::new(net, Some(&normalized))?;
    let (primal, infeasibility) = match router.route(&rates)? {
        Some((x, gamma_n)) => {
            let p = LifetimePrimal { gamma: gamma_n, x, rates, r: aggregate.r.clone() };
            let v = lifetime_infeasibility(net, m, &normalized, &p)
                .max(region_shortfall(m, &p.r, &p.rates).unwrap_or(f64::INFINITY));
            (LifetimePrimal { gamma: gamma_n / scale, ..p }, v)
        }
        None => (aggregate.clone(), aggregate_infeasibility),
    };
    let gamma = primal.gamma;
    Ok(LifetimeSolution {
        gamma,
        lifetime: 1.0 / gamma,
        primal,
        infeasibility,
        aggregate,
        aggregate_infeasibility,
        dual_bound: run.center_value / s2,
        duals: run.center.iter().map(|l| l / s2).collect(),
        iterations: run.iterations,
        status: if run.converged { SolveStatus::Converged } else { SolveStatus::IterationCap },
        trace,
        bundle: run.log,
    })
}
