//! The flow halves of the dual decompositions for the multicast and the
//! single-sink problems. Both keep one [`Simplex`] alive so that successive
//! dual points only change the objective and re-solve from the last basis.

use alloc::vec;
use alloc::vec::Vec;

use super::program::{LinearProgram, RowKind};
use super::simplex::{LpOutcome, Simplex};
use crate::error::{Error, Result};
use crate::netmodel::{AugmentedNetwork, Network};

/// Projects `values` onto `{v >= floor}` in place.
pub fn project_onto_floor(values: &mut [f64], floor: f64) {
    for v in values {
        if !(*v >= floor) {
            *v = floor;
        }
    }
}

/// Minimizer of the multicast flow subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SwFlowSolution {
    /// Physical flow per edge of the augmented graph.
    pub z: Vec<f64>,
    /// Virtual flow per terminal per edge.
    pub x: Vec<Vec<f64>>,
    /// `x` summed over the virtual edges into each source, per terminal.
    pub injection: Vec<Vec<f64>>,
    /// `fᵀz - Σ_k λ_kᵀ x_{s*}^{(k)}`.
    pub value: f64,
}

/// `min fᵀz - Σ_k λ_kᵀ x_{s*}^{(k)}` subject to `0 ≤ x^{(k)} ≤ z ≤ C*` and,
/// for each terminal, a flow of the joint entropy from `s*` to it.
///
/// `lambda` is terminal-major: entry `k * N_S + i` prices source `i` for
/// terminal `k`. Edge `e` of `z` is variable `e`; edge `e` of terminal `k`
/// is variable `(k + 1) * |E*| + e`.
pub fn sw_flow_program(g: &AugmentedNetwork, lambda: &[f64]) -> Result<LinearProgram> {
    let ns = g.num_sources();
    let nt = g.terminals().len();
    if lambda.len() != ns * nt {
        return Err(Error::DimensionMismatch { expected: ns * nt, got: lambda.len() });
    }
    let m = g.num_edges();
    let mut lp = LinearProgram::new();
    for e in g.edges() {
        lp.add_var(e.cost, 0.0, e.capacity);
    }
    for k in 0..nt {
        for (idx, e) in g.edges().iter().enumerate() {
            let price = g.virtual_source(idx).map_or(0.0, |i| lambda[k * ns + i]);
            lp.add_var(-price, 0.0, e.capacity);
        }
    }
    for k in 0..nt {
        for e in 0..m {
            lp.add_row(vec![((k + 1) * m + e, 1.0), (e, -1.0)], RowKind::Le, 0.0);
        }
    }
    let graph = g.graph();
    for (k, &t) in g.terminals().iter().enumerate() {
        for v in 0..graph.num_nodes() {
            let mut coeffs = Vec::new();
            for &e in graph.out_edges(v) {
                coeffs.push(((k + 1) * m + e, 1.0));
            }
            for &e in graph.in_edges(v) {
                coeffs.push(((k + 1) * m + e, -1.0));
            }
            lp.add_row(coeffs, RowKind::Eq, g.divergence_target(v, t));
        }
    }
    Ok(lp)
}

/// Reusable multicast flow subproblem.
#[derive(Debug, Clone)]
pub struct SwFlowSubproblem {
    g: AugmentedNetwork,
    simplex: Simplex,
    base_cost: Vec<f64>,
}

impl SwFlowSubproblem {
    pub fn new(g: &AugmentedNetwork) -> Result<Self> {
        let zeros = vec![0.0; g.num_sources() * g.terminals().len()];
        let lp = sw_flow_program(g, &zeros)?;
        let base_cost = lp.objective.clone();
        Ok(Self { g: g.clone(), simplex: Simplex::new(&lp)?, base_cost })
    }

    pub fn network(&self) -> &AugmentedNetwork {
        &self.g
    }

    pub fn solve(&mut self, lambda: &[f64]) -> Result<SwFlowSolution> {
        let g = &self.g;
        let ns = g.num_sources();
        let nt = g.terminals().len();
        if lambda.len() != ns * nt {
            return Err(Error::DimensionMismatch { expected: ns * nt, got: lambda.len() });
        }
        let m = g.num_edges();
        let mut cost = self.base_cost.clone();
        for k in 0..nt {
            for idx in 0..m {
                if let Some(i) = g.virtual_source(idx) {
                    cost[(k + 1) * m + idx] = -lambda[k * ns + i];
                }
            }
        }
        self.simplex.set_objective(&cost);
        let sol = match self.simplex.solve()? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => return Err(Error::Infeasible),
            LpOutcome::Unbounded => return Err(Error::Numerical("bounded flow program reported unbounded".into())),
        };
        let z = sol.x[..m].to_vec();
        let x: Vec<Vec<f64>> = (0..nt).map(|k| sol.x[(k + 1) * m..(k + 2) * m].to_vec()).collect();
        let injection = x.iter().map(|xk| g.source_injection(xk)).collect();
        Ok(SwFlowSolution { z, x, injection, value: sol.objective })
    }
}

/// One-shot multicast flow subproblem.
pub fn sw_flow_subproblem(g: &AugmentedNetwork, lambda: &[f64]) -> Result<SwFlowSolution> {
    SwFlowSubproblem::new(g)?.solve(lambda)
}

/// Minimizer of the single-sink flow subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct CeoFlowSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

fn single_terminal(net: &Network) -> Result<usize> {
    match net.terminals() {
        [t] => Ok(*t),
        ts => Err(Error::InvalidNetwork(alloc::format!("expected one terminal, found {}", ts.len()))),
    }
}

/// Per-edge coefficient of the dualized source and terminal balances:
/// `-Σ_i λ_i (out_i - in_i) + λ_T (out_T - in_T)`.
pub(crate) fn balance_prices(net: &Network, lambda_sources: &[f64], lambda_terminal: f64) -> Vec<f64> {
    let t = net.terminals()[0];
    let mut node_price = vec![0.0; net.num_nodes()];
    for (i, &s) in net.sources().iter().enumerate() {
        node_price[s] = -lambda_sources[i];
    }
    node_price[t] = lambda_terminal;
    net.edges().iter().map(|e| node_price[e.tail] - node_price[e.head]).collect()
}

/// Variables are per-edge flows; rows are the zero-divergence constraints
/// of the relays (nodes that are neither sources nor the terminal), in
/// increasing node order.
pub(crate) fn relay_flow_program(net: &Network, edge_cost: &[f64]) -> LinearProgram {
    let t = net.terminals()[0];
    let mut is_relay = vec![true; net.num_nodes()];
    for &s in net.sources() {
        is_relay[s] = false;
    }
    is_relay[t] = false;
    let mut lp = LinearProgram::new();
    for (e, c) in net.edges().iter().zip(edge_cost) {
        lp.add_var(*c, 0.0, e.capacity);
    }
    for v in (0..net.num_nodes()).filter(|&v| is_relay[v]) {
        let mut coeffs: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, 1.0)).collect();
        coeffs.extend(net.in_edges(v).iter().map(|&e| (e, -1.0)));
        lp.add_row(coeffs, RowKind::Eq, 0.0);
    }
    lp
}

/// `min fᵀx - Σ_{i∈S} λ_i (out_i - in_i) + λ_T (out_T - in_T)` over
/// `0 ≤ x ≤ C` with zero divergence at the relays.
pub fn ceo_flow_program(net: &Network, lambda_sources: &[f64], lambda_terminal: f64) -> Result<LinearProgram> {
    single_terminal(net)?;
    let ns = net.sources().len();
    if lambda_sources.len() != ns {
        return Err(Error::DimensionMismatch { expected: ns, got: lambda_sources.len() });
    }
    let prices = balance_prices(net, lambda_sources, lambda_terminal);
    let cost: Vec<f64> = net.edges().iter().zip(&prices).map(|(e, p)| e.cost + p).collect();
    Ok(relay_flow_program(net, &cost))
}

/// Reusable single-sink flow subproblem.
#[derive(Debug, Clone)]
pub struct CeoFlowSubproblem {
    net: Network,
    simplex: Simplex,
}

impl CeoFlowSubproblem {
    pub fn new(net: &Network) -> Result<Self> {
        let lp = ceo_flow_program(net, &vec![0.0; net.sources().len()], 0.0)?;
        Ok(Self { net: net.clone(), simplex: Simplex::new(&lp)? })
    }

    pub fn solve(&mut self, lambda_sources: &[f64], lambda_terminal: f64) -> Result<CeoFlowSolution> {
        let ns = self.net.sources().len();
        if lambda_sources.len() != ns {
            return Err(Error::DimensionMismatch { expected: ns, got: lambda_sources.len() });
        }
        let prices = balance_prices(&self.net, lambda_sources, lambda_terminal);
        let cost: Vec<f64> = self.net.edges().iter().zip(&prices).map(|(e, p)| e.cost + p).collect();
        self.simplex.set_objective(&cost);
        match self.simplex.solve()? {
            LpOutcome::Optimal(s) => Ok(CeoFlowSolution { x: s.x, value: s.objective }),
            _ => Err(Error::Numerical("single-sink flow program failed".into())),
        }
    }
}

pub fn ceo_flow_subproblem(net: &Network, lambda_sources: &[f64], lambda_terminal: f64) -> Result<CeoFlowSolution> {
    CeoFlowSubproblem::new(net)?.solve(lambda_sources, lambda_terminal)
}
