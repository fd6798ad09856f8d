use alloc::vec;
use alloc::vec::Vec;

use super::{ascend, combine_slice, ConvergenceTrace, DualOracle, DualPoint, PrimalPoint, RunningMean, Settling};
use super::{SolveStatus, SolverConfig, TraceRow};
use crate::error::{Error, Result};
use crate::lpcore::{solve_lp, CeoFlowSubproblem, EnergyParams, LinearProgram, LpOutcome, RowKind, Simplex};
use crate::netmodel::Network;
use crate::regions::{ceo_min_linear, region_membership, CeoModel, CeoOutcome, CeoRank, RankFunction, RateVector};
use crate::regions::{SourceSet, EXHAUSTIVE_LIMIT};

const RESTORE_EVERY: usize = 10;

/// Flows, rates and auxiliary vector of the single-sink problems.
#[derive(Debug, Clone, PartialEq)]
pub struct CeoPrimal {
    pub x: Vec<f64>,
    pub rates: RateVector,
    pub r: Vec<f64>,
}

impl PrimalPoint for CeoPrimal {
    fn combine(&mut self, a: f64, other: &Self, b: f64) {
        combine_slice(&mut self.x, a, &other.x, b);
        combine_slice(&mut self.rates, a, &other.rates, b);
        combine_slice(&mut self.r, a, &other.r, b);
    }
}

pub(crate) fn single_terminal(net: &Network) -> Result<usize> {
    match net.terminals() {
        [t] => Ok(*t),
        ts => Err(Error::InvalidNetwork(alloc::format!("expected one terminal, found {}", ts.len()))),
    }
}

/// Largest residual of the routing constraints: capacities, relay
/// balance, `out_i - in_i ≥ R_i` at sources and `in_T - out_T ≥ Σ R`.
pub(crate) fn routing_infeasibility(net: &Network, x: &[f64], rates: &[f64]) -> f64 {
    let t = net.terminals()[0];
    let div = net.divergence(x);
    let mut worst = 0.0f64;
    for (e, &f) in net.edges().iter().zip(x) {
        worst = worst.max(f - e.capacity).max(-f);
    }
    let mut is_relay = vec![true; net.num_nodes()];
    for (i, &s) in net.sources().iter().enumerate() {
        is_relay[s] = false;
        worst = worst.max(rates[i] - div[s]).max(-rates[i]);
    }
    is_relay[t] = false;
    worst = worst.max(rates.iter().sum::<f64>() + div[t]);
    for v in (0..net.num_nodes()).filter(|&v| is_relay[v]) {
        worst = worst.max(div[v].abs());
    }
    worst
}

/// Shortfall of `r` against the distortion target, relative to `1/D`.
pub(crate) fn distortion_shortfall(m: &CeoModel, r: &[f64]) -> f64 {
    (-m.distortion_residual(r) * m.distortion()).max(0.0)
}

/// Largest `f(B; r) - R(B)` with `f` the rank of `R_D(r)`, or 0 when the
/// source count is beyond exhaustive checking.
pub(crate) fn region_shortfall(m: &CeoModel, r: &[f64], rates: &[f64]) -> Result<f64> {
    if m.num_sensors() > EXHAUSTIVE_LIMIT {
        return Ok(0.0);
    }
    Ok(region_membership(&CeoRank { model: m, r }, rates, 0.0)?.worst_violation.max(0.0))
}

/// Smallest-sum `R̂ ≥ rates` inside `R_D(r)`. Averaged greedy vertices are
/// already inside up to rounding (the rank is convex in `r`), so the LP only
/// runs when the exhaustive check finds a violation.
pub(crate) fn lift_into_region(m: &CeoModel, r: &[f64], rates: &[f64]) -> Result<RateVector> {
    let n = m.num_sensors();
    let rates: Vec<f64> = rates.iter().map(|v| v.max(0.0)).collect();
    if n > EXHAUSTIVE_LIMIT || region_shortfall(m, r, &rates)? <= 0.0 {
        return Ok(rates);
    }
    let rank = CeoRank { model: m, r };
    let mut lp = LinearProgram::new();
    for &v in &rates {
        lp.add_var(1.0, v, f64::INFINITY);
    }
    for b in SourceSet::nonempty_subsets(n) {
        lp.add_row(b.iter().map(|i| (i, 1.0)).collect(), RowKind::Ge, rank.rank(b));
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => Ok(s.x),
        _ => Err(Error::Numerical("rate lift failed".into())),
    }
}

/// Routing LP with the rates fixed: minimum flow cost, or minimum `Γ` when
/// energy figures are given. Variables are the edge flows, then `Γ`.
pub(crate) struct FixedRateRouter {
    net: Network,
    energy: Option<EnergyParams>,
    simplex: Simplex,
    source_rows: Vec<usize>,
    terminal_row: usize,
    /// Energy row of each source, when present.
    sense_rows: Vec<usize>,
}

impl FixedRateRouter {
    pub(crate) fn new(net: &Network, energy: Option<&EnergyParams>) -> Result<Self> {
        let t = single_terminal(net)?;
        let ns = net.sources().len();
        let mut lp = LinearProgram::new();
        for e in net.edges() {
            lp.add_var(if energy.is_some() { 0.0 } else { e.cost }, 0.0, e.capacity);
        }
        let gamma = energy.map(|_| lp.add_var(1.0, 0.0, f64::INFINITY));
        let mut source_pos = vec![None; net.num_nodes()];
        for (i, &s) in net.sources().iter().enumerate() {
            source_pos[s] = Some(i);
        }
        let mut source_rows = vec![0; ns];
        let mut terminal_row = 0;
        for v in 0..net.num_nodes() {
            let mut coeffs: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, 1.0)).collect();
            coeffs.extend(net.in_edges(v).iter().map(|&e| (e, -1.0)));
            if let Some(i) = source_pos[v] {
                source_rows[i] = lp.add_row(coeffs, RowKind::Ge, 0.0);
            } else if v == t {
                terminal_row = lp.add_row(coeffs, RowKind::Le, 0.0);
            } else {
                lp.add_row(coeffs, RowKind::Eq, 0.0);
            }
        }
        let mut sense_rows = Vec::new();
        if let (Some(en), Some(gv)) = (energy, gamma) {
            sense_rows = vec![0; ns];
            for v in 0..net.num_nodes() {
                let mut coeffs: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, en.p_tx[e])).collect();
                coeffs.extend(net.in_edges(v).iter().map(|&e| (e, en.p_rx[e])));
                coeffs.push((gv, -en.energy[v]));
                let row = lp.add_row(coeffs, RowKind::Le, 0.0);
                if let Some(i) = source_pos[v] {
                    sense_rows[i] = row;
                }
            }
        }
        Ok(Self { net: net.clone(), energy: energy.cloned(), simplex: Simplex::new(&lp)?, source_rows, terminal_row, sense_rows })
    }

    /// Optimal flows and objective, or `None` if the rates cannot be routed.
    pub(crate) fn route(&mut self, rates: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
        for (i, &row) in self.source_rows.iter().enumerate() {
            self.simplex.set_row(row, RowKind::Ge, rates[i]);
        }
        self.simplex.set_row(self.terminal_row, RowKind::Le, -rates.iter().sum::<f64>());
        if let Some(en) = &self.energy {
            for (i, &row) in self.sense_rows.iter().enumerate() {
                self.simplex.set_row(row, RowKind::Le, -en.p_sense[i] * rates[i]);
            }
        }
        Ok(match self.simplex.solve()? {
            LpOutcome::Optimal(s) => {
                let ne = self.net.num_edges();
                Some((s.x[..ne].to_vec(), s.objective))
            }
            _ => None,
        })
    }
}

/// Single-sink dual with `λ = (λ_1, .., λ_{N_S}, λ_T)`:
/// `g(λ) = min_x [fᵀx - Σ_i λ_i (out_i - in_i) + λ_T (out_T - in_T)] +
/// min_{R ∈ R(D)} Σ_i (λ_i + λ_T) R_i`.
pub struct CeoDual {
    net: Network,
    model: CeoModel,
    flows: CeoFlowSubproblem,
}

impl CeoDual {
    pub fn new(net: &Network, model: &CeoModel) -> Result<Self> {
        single_terminal(net)?;
        if model.num_sensors() != net.sources().len() {
            return Err(Error::DimensionMismatch { expected: net.sources().len(), got: model.num_sensors() });
        }
        if !model.is_achievable() {
            return Err(Error::UnachievableDistortion);
        }
        Ok(Self { net: net.clone(), model: model.clone(), flows: CeoFlowSubproblem::new(net)? })
    }
}

pub(crate) fn edge_cost(net: &Network, x: &[f64]) -> f64 {
    net.edges().iter().zip(x).map(|(e, x)| e.cost * x).sum()
}

impl DualOracle for CeoDual {
    type Primal = CeoPrimal;

    fn dim(&self) -> usize {
        self.net.sources().len() + 1
    }

    fn evaluate(&mut self, lambda: &[f64]) -> Result<DualPoint<CeoPrimal>> {
        let ns = self.net.sources().len();
        if lambda.len() != ns + 1 {
            return Err(Error::DimensionMismatch { expected: ns + 1, got: lambda.len() });
        }
        let (ls, lt) = (&lambda[..ns], lambda[ns]);
        let flow = self.flows.solve(ls, lt)?;
        let w: Vec<f64> = ls.iter().map(|l| l + lt).collect();
        let sol = match ceo_min_linear(&self.model, &w)? {
            CeoOutcome::Optimal(s) => s,
            CeoOutcome::Unbounded => return Err(Error::Unbounded),
        };
        let div = self.net.divergence(&flow.x);
        let t = self.net.terminals()[0];
        let mut subgradient: Vec<f64> =
            self.net.sources().iter().zip(&sol.rates).map(|(&s, r)| r - div[s]).collect();
        subgradient.push(sol.rates.iter().sum::<f64>() + div[t]);
        let primal_cost = edge_cost(&self.net, &flow.x);
        Ok(DualPoint {
            value: flow.value + sol.objective,
            subgradient,
            primal: CeoPrimal { x: flow.x, rates: sol.rates, r: sol.r },
            primal_cost,
        })
    }

    fn infeasibility(&self, p: &CeoPrimal) -> f64 {
        routing_infeasibility(&self.net, &p.x, &p.rates).max(distortion_shortfall(&self.model, &p.r))
    }
}

/// Output of [`solve_ceo`].
#[derive(Debug, Clone, PartialEq)]
pub struct CeoRouting {
    /// Restored point, or the averaged one if restoration failed.
    pub primal: CeoPrimal,
    pub cost: f64,
    pub infeasibility: f64,
    pub averaged: CeoPrimal,
    pub averaged_cost: f64,
    pub averaged_infeasibility: f64,
    pub dual_bound: f64,
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub trace: ConvergenceTrace,
}

/// Restores an averaged point: lifts the rates into `R_D(r̄)` and routes
/// them at minimum cost.
fn restore_ceo(
    net: &Network,
    m: &CeoModel,
    router: &mut FixedRateRouter,
    avg: &CeoPrimal,
) -> Result<Option<(CeoPrimal, f64)>> {
    let rates = lift_into_region(m, &avg.r, &avg.rates)?;
    Ok(router.route(&rates)?.map(|(x, _)| {
        let p = CeoPrimal { x, rates, r: avg.r.clone() };
        let v = routing_infeasibility(net, &p.x, &p.rates)
            .max(distortion_shortfall(m, &p.r))
            .max(region_shortfall(m, &p.r, &p.rates).unwrap_or(f64::INFINITY));
        (p, v)
    }))
}

/// Projected subgradient on the single-sink dual with ergodic averaging.
pub fn solve_ceo(net: &Network, m: &CeoModel, cfg: &SolverConfig) -> Result<CeoRouting> {
    cfg.validate()?;
    let mut dual = CeoDual::new(net, m)?;
    let mut router = FixedRateRouter::new(net, None)?;
    let mut lambda = vec![cfg.initial_dual; dual.dim()];
    let mut mean = RunningMean::new();
    let mut settling = Settling::new(cfg.window, cfg.tol);
    let mut trace = ConvergenceTrace::default();
    let mut restored = None;
    let mut last_restore = 0;
    let mut status = SolveStatus::IterationCap;
    let mut iterations = 0;

    for k in 1..=cfg.max_iters {
        iterations = k;
        let pt = dual.evaluate(&lambda)?;
        let theta = cfg.step.step(k);
        let (mut avg_cost, mut infeas) = (f64::NAN, f64::NAN);
        if k > cfg.burn_in {
            mean.push(&pt.primal);
            let avg = mean.mean().expect("pushed");
            avg_cost = edge_cost(net, &avg.x);
            infeas = dual.infeasibility(avg);
            settling.push(avg_cost);
        }
        trace.push(TraceRow {
            iter: k,
            dual_value: pt.value,
            primal_cost: pt.primal_cost,
            avg_primal_cost: avg_cost,
            max_infeasibility: infeas,
            step: theta,
        });
        log::debug!("ceo iter {k}: dual {:.6} avg {avg_cost:.6} infeas {infeas:.3e}", pt.value);
        if settling.settled() && k - last_restore >= RESTORE_EVERY {
            last_restore = k;
            let avg = mean.mean().expect("settled implies averaging");
            if let Some((p, v)) = restore_ceo(net, m, &mut router, avg)? {
                restored = Some((p, v));
                if v <= cfg.feas_tol {
                    status = SolveStatus::Converged;
                    break;
                }
            }
        }
        ascend(&mut lambda, &pt.subgradient, theta, cfg.dual_floor);
    }

    let averaged = match mean.mean() {
        Some(a) => a.clone(),
        None => dual.evaluate(&lambda)?.primal,
    };
    if status == SolveStatus::IterationCap {
        restored = restore_ceo(net, m, &mut router, &averaged)?;
    }
    let averaged_cost = edge_cost(net, &averaged.x);
    let averaged_infeasibility = dual.infeasibility(&averaged);
    let (primal, infeasibility) = restored.unwrap_or_else(|| (averaged.clone(), averaged_infeasibility));
    let cost = edge_cost(net, &primal.x);
    Ok(CeoRouting {
        primal,
        cost,
        infeasibility,
        averaged,
        averaged_cost,
        averaged_infeasibility,
        dual_bound: trace.best_dual(),
        duals: lambda,
        iterations,
        status,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::Edge;

    #[test]
    fn single_sensor_closed_form() {
        let net = Network::from_edges(2, vec![Edge::new(0, 1, 10.0, 1.0)], vec![0], vec![1]).unwrap();
        let m = CeoModel::new(1.0, vec![1.0], 0.6).unwrap();
        let s = solve_ceo(&net, &m, &SolverConfig::ceo()).unwrap();
        let expected = 0.5 * libm::log(3.0) + 0.5 * libm::log(1.0 / 0.6);
        assert!((s.cost - expected).abs() < 1e-6, "{} vs {expected}", s.cost);
        assert!(s.infeasibility < 1e-5);
    }

    #[test]
    fn loose_target_costs_nothing() {
        let net = Network::from_edges(2, vec![Edge::new(0, 1, 10.0, 1.0)], vec![0], vec![1]).unwrap();
        let m = CeoModel::new(1.0, vec![1.0], 1.5).unwrap();
        let s = solve_ceo(&net, &m, &SolverConfig::ceo()).unwrap();
        assert!(s.cost.abs() < 1e-12);
    }
}
