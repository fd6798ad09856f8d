//! Flow half of the lifetime decomposition: a one-dimensional convex search
//! over the reciprocal lifetime `Γ`, with a warm-started LP in the flows at
//! each trial `Γ`.

use alloc::vec;
use alloc::vec::Vec;

use super::flows::{balance_prices, relay_flow_program};
use super::program::RowKind;
use super::simplex::{LpOutcome, Simplex};
use crate::error::{Error, Result};
use crate::netmodel::Network;

const GOLDEN_TOL: f64 = 1e-8;

/// Battery levels and unit power figures.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    /// Initial energy per node.
    pub energy: Vec<f64>,
    /// Transmit power per unit rate, per edge (charged to the tail).
    pub p_tx: Vec<f64>,
    /// Receive power per unit rate, per edge (charged to the head).
    pub p_rx: Vec<f64>,
    /// Sensing power per unit rate, per source.
    pub p_sense: Vec<f64>,
}

impl EnergyParams {
    /// Same figures everywhere.
    pub fn uniform(net: &Network, energy: f64, p_tx: f64, p_rx: f64, p_sense: f64) -> Result<Self> {
        let e = Self {
            energy: vec![energy; net.num_nodes()],
            p_tx: vec![p_tx; net.num_edges()],
            p_rx: vec![p_rx; net.num_edges()],
            p_sense: vec![p_sense; net.sources().len()],
        };
        e.validate(net)?;
        Ok(e)
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        let dims = [
            (self.energy.len(), net.num_nodes()),
            (self.p_tx.len(), net.num_edges()),
            (self.p_rx.len(), net.num_edges()),
            (self.p_sense.len(), net.sources().len()),
        ];
        for (got, expected) in dims {
            if got != expected {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        let all = self.energy.iter().chain(&self.p_tx).chain(&self.p_rx).chain(&self.p_sense);
        if all.clone().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("energy figures must be positive".into()));
        }
        Ok(())
    }

    /// Every battery multiplied by `factor`.
    pub fn scale_energy(&self, factor: f64) -> Self {
        Self { energy: self.energy.iter().map(|e| e * factor).collect(), ..self.clone() }
    }

    /// Energy spent per unit time at node `v` by flow `x`, sensing excluded.
    pub fn radio_load(&self, net: &Network, x: &[f64], v: usize) -> f64 {
        let tx: f64 = net.out_edges(v).iter().map(|&e| self.p_tx[e] * x[e]).sum();
        let rx: f64 = net.in_edges(v).iter().map(|&e| self.p_rx[e] * x[e]).sum();
        tx + rx
    }

    /// `Γ` above which no flow within capacity can exhaust any battery.
    pub fn load_bound(&self, net: &Network) -> f64 {
        let max_p = self.p_tx.iter().chain(&self.p_rx).cloned().fold(0.0, f64::max);
        let min_e = self.energy.iter().cloned().fold(f64::INFINITY, f64::min);
        let caps: f64 = net.edges().iter().map(|e| e.capacity).sum();
        caps * max_p / min_e + 1.0
    }
}

/// Minimizer of the lifetime flow subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeFlowSolution {
    pub gamma: f64,
    pub x: Vec<f64>,
    /// `Γ² - Γ Σ λ2_i E_i` plus the optimal flow cost at that `Γ`.
    pub value: f64,
}

/// Reusable lifetime flow subproblem.
///
/// For fixed `Γ` the flows solve an LP with the relay balances and the
/// energy constraints of every non-source node. Its value is convex and
/// piecewise linear in `Γ`, so the outer objective is convex and is
/// minimized by golden-section search, followed by a stationary-point
/// polish on the final linear piece.
#[derive(Debug, Clone)]
pub struct LifetimeFlowSubproblem {
    net: Network,
    energy: EnergyParams,
    simplex: Simplex,
    /// (row index, node) of each energy row.
    energy_rows: Vec<(usize, usize)>,
}

impl LifetimeFlowSubproblem {
    pub fn new(net: &Network, energy: &EnergyParams) -> Result<Self> {
        if net.terminals().len() != 1 {
            return Err(Error::InvalidNetwork(alloc::format!(
                "expected one terminal, found {}",
                net.terminals().len()
            )));
        }
        energy.validate(net)?;
        let mut lp = relay_flow_program(net, &vec![0.0; net.num_edges()]);
        let mut is_source = vec![false; net.num_nodes()];
        for &s in net.sources() {
            is_source[s] = true;
        }
        let mut energy_rows = Vec::new();
        for v in (0..net.num_nodes()).filter(|&v| !is_source[v]) {
            let mut coeffs: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, energy.p_tx[e])).collect();
            coeffs.extend(net.in_edges(v).iter().map(|&e| (e, energy.p_rx[e])));
            let row = lp.add_row(coeffs, RowKind::Le, 0.0);
            energy_rows.push((row, v));
        }
        Ok(Self { net: net.clone(), energy: energy.clone(), simplex: Simplex::new(&lp)?, energy_rows })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn energy(&self) -> &EnergyParams {
        &self.energy
    }

    /// Per-edge flow cost for the given multipliers.
    pub fn edge_costs(&self, lambda1_sources: &[f64], lambda1_terminal: f64, lambda2: &[f64]) -> Vec<f64> {
        let mut cost = balance_prices(&self.net, lambda1_sources, lambda1_terminal);
        for (i, &s) in self.net.sources().iter().enumerate() {
            for &e in self.net.out_edges(s) {
                cost[e] += lambda2[i] * self.energy.p_tx[e];
            }
            for &e in self.net.in_edges(s) {
                cost[e] += lambda2[i] * self.energy.p_rx[e];
            }
        }
        cost
    }

    /// Optimal flow value at fixed `Γ`, the flows, and the derivative of
    /// that value with respect to `Γ` on the current linear piece.
    pub fn inner(&mut self, gamma: f64) -> Result<(f64, Vec<f64>, f64)> {
        for &(row, v) in &self.energy_rows {
            self.simplex.set_row(row, RowKind::Le, self.energy.energy[v] * gamma);
        }
        match self.simplex.solve()? {
            LpOutcome::Optimal(s) => {
                let slope = self.energy_rows.iter().map(|&(row, v)| s.duals[row] * self.energy.energy[v]).sum();
                Ok((s.objective, s.x, slope))
            }
            LpOutcome::Infeasible => Err(Error::Numerical("lifetime flow program infeasible".into())),
            LpOutcome::Unbounded => Err(Error::Numerical("lifetime flow program unbounded".into())),
        }
    }

    pub fn solve(&mut self, lambda1_sources: &[f64], lambda1_terminal: f64, lambda2: &[f64]) -> Result<LifetimeFlowSolution> {
        let ns = self.net.sources().len();
        for len in [lambda1_sources.len(), lambda2.len()] {
            if len != ns {
                return Err(Error::DimensionMismatch { expected: ns, got: len });
            }
        }
        let cost = self.edge_costs(lambda1_sources, lambda1_terminal, lambda2);
        self.simplex.set_objective(&cost);
        let c: f64 = self.net.sources().iter().zip(lambda2).map(|(&s, l)| l * self.energy.energy[s]).sum();
        let hi = self.energy.load_bound(&self.net).max(0.5 * c);
        if !hi.is_finite() {
            return Err(Error::Numerical("reciprocal lifetime bracket is not finite".into()));
        }

        let mut best: Option<LifetimeFlowSolution> = None;
        let mut best_slope = 0.0;
        let eval = |this: &mut Self, gamma: f64, best: &mut Option<LifetimeFlowSolution>, best_slope: &mut f64| -> Result<f64> {
            let (inner, x, slope) = this.inner(gamma)?;
            let value = gamma * gamma - c * gamma + inner;
            if best.as_ref().is_none_or(|b| value < b.value) {
                *best = Some(LifetimeFlowSolution { gamma, x, value });
                *best_slope = slope;
            }
            Ok(value)
        };

        let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
        let (mut a, mut b) = (0.0, hi);
        eval(self, 0.0, &mut best, &mut best_slope)?;
        eval(self, hi, &mut best, &mut best_slope)?;
        let mut p = b - ratio * (b - a);
        let mut q = a + ratio * (b - a);
        let mut fp = eval(self, p, &mut best, &mut best_slope)?;
        let mut fq = eval(self, q, &mut best, &mut best_slope)?;
        while b - a > GOLDEN_TOL {
            if fp <= fq {
                b = q;
                q = p;
                fq = fp;
                p = b - ratio * (b - a);
                fp = eval(self, p, &mut best, &mut best_slope)?;
            } else {
                a = p;
                p = q;
                fp = fq;
                q = a + ratio * (b - a);
                fq = eval(self, q, &mut best, &mut best_slope)?;
            }
        }
        // On the linear piece of the best point the objective is a parabola
        // in Γ; try its vertex.
        let vertex = (0.5 * (c - best_slope)).clamp(0.0, hi);
        eval(self, vertex, &mut best, &mut best_slope)?;
        Ok(best.expect("at least one evaluation"))
    }
}

pub fn lifetime_flow_subproblem(
    net: &Network,
    energy: &EnergyParams,
    lambda1_sources: &[f64],
    lambda1_terminal: f64,
    lambda2: &[f64],
) -> Result<LifetimeFlowSolution> {
    LifetimeFlowSubproblem::new(net, energy)?.solve(lambda1_sources, lambda1_terminal, lambda2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::Edge;

    #[test]
    fn zero_prices_give_zero() {
        let net = Network::from_edges(2, vec![Edge::new(0, 1, 10.0, 1.0)], vec![0], vec![1]).unwrap();
        let e = EnergyParams::uniform(&net, 200.0, 1.0, 0.5, 0.001).unwrap();
        let s = lifetime_flow_subproblem(&net, &e, &[0.0], 0.0, &[0.0]).unwrap();
        assert_eq!(s.gamma, 0.0);
        assert_eq!(s.value, 0.0);
        assert_eq!(s.x, vec![0.0]);
    }

    #[test]
    fn relay_energy_kink() {
        // source 0 -> relay 1 -> terminal 2; each unit through the relay
        // costs it 1.5 energy units.
        let net = Network::from_edges(3, vec![Edge::new(0, 1, 10.0, 0.0), Edge::new(1, 2, 10.0, 0.0)], vec![0], vec![2])
            .unwrap();
        let e = EnergyParams::uniform(&net, 200.0, 1.0, 0.5, 0.001).unwrap();
        let mut sub = LifetimeFlowSubproblem::new(&net, &e).unwrap();
        sub.simplex.set_objective(&sub.edge_costs(&[3.0], 0.0, &[0.0]));
        let kink = 1.5 * 10.0 / 200.0;
        let (below, x, slope) = sub.inner(0.5 * kink).unwrap();
        assert!((x[0] - 5.0).abs() < 1e-9 && (below + 15.0).abs() < 1e-9);
        assert!((slope + 3.0 * 200.0 / 1.5).abs() < 1e-6, "{slope}");
        let (above, _, flat) = sub.inner(2.0 * kink).unwrap();
        assert!((above + 30.0).abs() < 1e-9 && flat.abs() < 1e-9);
    }
}
