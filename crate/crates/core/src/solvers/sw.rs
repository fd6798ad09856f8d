use alloc::vec;
use alloc::vec::Vec;

use super::{
    ascend, sherali_choi_conditions, ConvergenceTrace, DualOracle, DualPoint, RunningMean, Settling, SolveStatus,
    SolverConfig, TraceRow,
};
use crate::error::{Error, Result};
use crate::lpcore::{sw_flow_program, LpOutcome, Simplex, SwFlowSubproblem};
use crate::netmodel::{validate_flow, AugmentedNetwork, FlowAssignment};
use crate::regions::{greedy_min_linear, RankFunction};

/// Restoration is retried at most this often once the average settles.
const RESTORE_EVERY: usize = 10;

/// Multicast dual: `g(λ) = min_{z,x} [fᵀz - Σ_k λ_kᵀ x_{s*}^{(k)}] +
/// Σ_k min_{R ∈ R_SW} λ_kᵀ R`, with `λ` terminal-major.
pub struct SwDual<G> {
    flows: SwFlowSubproblem,
    region: G,
}

impl<G: RankFunction> SwDual<G> {
    pub fn new(g: &AugmentedNetwork, region: G) -> Result<Self> {
        if region.ground_size() != g.num_sources() {
            return Err(Error::DimensionMismatch { expected: g.num_sources(), got: region.ground_size() });
        }
        Ok(Self { flows: SwFlowSubproblem::new(g)?, region })
    }

    pub fn network(&self) -> &AugmentedNetwork {
        self.flows.network()
    }
}

/// Edge costs dotted with the physical flow.
fn flow_cost(g: &AugmentedNetwork, z: &[f64]) -> f64 {
    g.edges().iter().zip(z).map(|(e, z)| e.cost * z).sum()
}

impl<G: RankFunction> DualOracle for SwDual<G> {
    type Primal = FlowAssignment;

    fn dim(&self) -> usize {
        let g = self.flows.network();
        g.num_sources() * g.terminals().len()
    }

    fn evaluate(&mut self, lambda: &[f64]) -> Result<DualPoint<FlowAssignment>> {
        if lambda.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: lambda.len() });
        }
        let flow = self.flows.solve(lambda)?;
        let ns = self.region.ground_size();
        let mut value = flow.value;
        let mut subgradient = Vec::with_capacity(lambda.len());
        let mut rates = Vec::with_capacity(flow.x.len());
        for (k, inj) in flow.injection.iter().enumerate() {
            let lk = &lambda[k * ns..(k + 1) * ns];
            let r = greedy_min_linear(&self.region, lk)?;
            value += lk.iter().zip(&r).map(|(l, r)| l * r).sum::<f64>();
            subgradient.extend(r.iter().zip(inj).map(|(r, x)| r - x));
            rates.push(r);
        }
        let primal_cost = flow_cost(self.flows.network(), &flow.z);
        Ok(DualPoint { value, subgradient, primal: FlowAssignment { z: flow.z, x: flow.x, rates }, primal_cost })
    }

    fn infeasibility(&self, p: &FlowAssignment) -> f64 {
        validate_flow(p, self.flows.network(), 0.0).max_violation()
    }
}

/// Flow LP with the rates fixed as lower bounds on the virtual edges.
struct Restorer {
    simplex: Simplex,
    /// Variable of the virtual edge of source `i` for terminal `k`, at `k * N_S + i`.
    rate_vars: Vec<usize>,
    caps: Vec<f64>,
    m: usize,
}

impl Restorer {
    fn new(g: &AugmentedNetwork) -> Result<Self> {
        let ns = g.num_sources();
        let nt = g.terminals().len();
        let m = g.num_edges();
        let lp = sw_flow_program(g, &vec![0.0; ns * nt])?;
        let mut rate_vars = vec![0; ns * nt];
        let mut caps = vec![0.0; ns];
        for (idx, e) in g.edges().iter().enumerate() {
            if let Some(i) = g.virtual_source(idx) {
                caps[i] = e.capacity;
                for k in 0..nt {
                    rate_vars[k * ns + i] = (k + 1) * m + idx;
                }
            }
        }
        Ok(Self { simplex: Simplex::new(&lp)?, rate_vars, caps, m })
    }

    fn restore(&mut self, rates: &[Vec<f64>]) -> Result<Option<FlowAssignment>> {
        let ns = self.caps.len();
        let mut fixed = Vec::with_capacity(rates.len());
        for (k, rk) in rates.iter().enumerate() {
            let r: Vec<f64> = rk.iter().zip(&self.caps).map(|(r, c)| r.clamp(0.0, *c)).collect();
            for i in 0..ns {
                self.simplex.set_var_bounds(self.rate_vars[k * ns + i], r[i], self.caps[i]);
            }
            fixed.push(r);
        }
        let sol = match self.simplex.solve()? {
            LpOutcome::Optimal(s) => s,
            _ => return Ok(None),
        };
        let m = self.m;
        let z = sol.x[..m].to_vec();
        let x = (0..rates.len()).map(|k| sol.x[(k + 1) * m..(k + 2) * m].to_vec()).collect();
        Ok(Some(FlowAssignment { z, x, rates: fixed }))
    }
}

/// Output of [`solve_sw`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwSolution {
    /// Restored assignment, or the averaged one if restoration failed.
    pub flow: FlowAssignment,
    pub cost: f64,
    pub infeasibility: f64,
    /// Sherali–Choi average before restoration.
    pub averaged: FlowAssignment,
    pub averaged_cost: f64,
    pub averaged_infeasibility: f64,
    /// Best dual value seen; a lower bound on the optimum.
    pub dual_bound: f64,
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub trace: ConvergenceTrace,
}

/// Projected subgradient on the multicast dual.
///
/// Each iteration solves the flow subproblem and one greedy allocation per
/// terminal, then steps along `R^{(k)} - x_{s*}^{(k)}`. Iterates after the
/// burn-in are averaged uniformly. Once the averaged cost settles, the
/// averaged rates are routed exactly by a restoration LP, and the run stops
/// when that point is feasible within `cfg.feas_tol`.
pub fn solve_sw<G: RankFunction>(g: &AugmentedNetwork, region: G, cfg: &SolverConfig) -> Result<SwSolution> {
    cfg.validate()?;
    if !sherali_choi_conditions(&cfg.step).hold() {
        return Err(Error::InvalidParameter("step schedule violates the averaging conditions".into()));
    }
    let mut dual = SwDual::new(g, region)?;
    let mut restorer = Restorer::new(g)?;
    let mut lambda = vec![cfg.initial_dual; dual.dim()];
    let mut mean = RunningMean::new();
    let mut settling = Settling::new(cfg.window, cfg.tol);
    let mut trace = ConvergenceTrace::default();
    let mut restored: Option<(FlowAssignment, f64)> = None;
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
            avg_cost = flow_cost(g, &avg.z);
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
        log::debug!("sw iter {k}: dual {:.6} avg {avg_cost:.6} infeas {infeas:.3e}", pt.value);
        if settling.settled() && k - last_restore >= RESTORE_EVERY {
            last_restore = k;
            let avg = mean.mean().expect("settled implies averaging");
            if let Some(fa) = restorer.restore(&avg.rates)? {
                let v = dual.infeasibility(&fa);
                let ok = v <= cfg.feas_tol;
                restored = Some((fa, v));
                if ok {
                    status = SolveStatus::Converged;
                    break;
                }
            }
        }
        ascend(&mut lambda, &pt.subgradient, theta, cfg.dual_floor);
    }

    let averaged = match mean.mean() {
        Some(a) => a.clone(),
        // Burn-in never ended: fall back to the last minimizer.
        None => dual.evaluate(&lambda)?.primal,
    };
    if status == SolveStatus::IterationCap {
        restored = restorer.restore(&averaged.rates)?.map(|fa| {
            let v = dual.infeasibility(&fa);
            (fa, v)
        });
    }
    let averaged_cost = flow_cost(g, &averaged.z);
    let averaged_infeasibility = dual.infeasibility(&averaged);
    let (flow, infeasibility) = restored.unwrap_or_else(|| (averaged.clone(), averaged_infeasibility));
    let cost = flow_cost(g, &flow.z);
    Ok(SwSolution {
        flow,
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
