mod common;

use common::*;
use dscnet_core::lpcore::{
    solve_lp, CeoFlowSubproblem, EnergyParams, LifetimeFlowSubproblem, LinearProgram, RowKind, SwFlowSubproblem,
};
use dscnet_core::netmodel::build_augmented;
use dscnet_core::scenario::{gaussian_model, generate_geometric_network, model_entropies, GeometricConfig};
use dscnet_core::{AugmentedNetwork, Network};
use rand::Rng;

/// Multicast flow program with the physical flow last and per-terminal
/// blocks first.
fn sw_reference(g: &AugmentedNetwork, lambda: &[f64]) -> f64 {
    let m = g.num_edges();
    let ns = g.num_sources();
    let nt = g.terminals().len();
    let mut lp = LinearProgram::new();
    for k in 0..nt {
        for (e, edge) in g.edges().iter().enumerate() {
            let c = g.virtual_source(e).map_or(0.0, |i| -lambda[k * ns + i]);
            lp.add_var(c, 0.0, edge.capacity);
        }
    }
    let z0 = lp.num_vars();
    for edge in g.edges() {
        lp.add_var(edge.cost, 0.0, edge.capacity);
    }
    let net = g.graph();
    for (k, &t) in g.terminals().iter().enumerate() {
        for e in 0..m {
            lp.add_row(vec![(z0 + e, 1.0), (k * m + e, -1.0)], RowKind::Ge, 0.0);
        }
        for v in 0..net.num_nodes() {
            let rhs = if v == g.super_source() { g.joint_entropy() } else if v == t { -g.joint_entropy() } else { 0.0 };
            let mut c: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (k * m + e, 1.0)).collect();
            c.extend(net.in_edges(v).iter().map(|&e| (k * m + e, -1.0)));
            lp.add_row(c, RowKind::Eq, rhs);
        }
    }
    solve_lp(&lp).unwrap().optimal().unwrap().objective
}

fn reference_multicast() -> AugmentedNetwork {
    let net = generate_geometric_network(&GeometricConfig::multicast(7)).unwrap();
    let model = gaussian_model(&net, 1.0, 1.0, 1.0, 0.01).unwrap();
    build_augmented(&net, &model_entropies(&model).unwrap()).unwrap()
}

#[test]
fn sw_flow_value_matches_reference_program() {
    let mut r = rng(21);
    for seed in 0..4 {
        let (_, _, g) = small_multicast(seed, 12, 3, 2, 30.0);
        let mut sub = SwFlowSubproblem::new(&g).unwrap();
        for _ in 0..5 {
            let lambda: Vec<f64> = (0..6).map(|_| r.gen_range(0.0..8.0)).collect();
            let a = sub.solve(&lambda).unwrap().value;
            let b = sw_reference(&g, &lambda);
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn sw_flow_value_on_reference_instance() {
    let g = reference_multicast();
    let mut r = rng(22);
    let lambda: Vec<f64> = (0..30).map(|_| r.gen_range(0.0..10.0)).collect();
    let a = SwFlowSubproblem::new(&g).unwrap().solve(&lambda).unwrap().value;
    let b = sw_reference(&g, &lambda);
    assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
}

#[test]
fn sw_flow_value_is_concave_in_prices() {
    let (_, _, g) = small_multicast(5, 12, 3, 2, 30.0);
    let mut sub = SwFlowSubproblem::new(&g).unwrap();
    let mut r = rng(23);
    for _ in 0..20 {
        let a: Vec<f64> = (0..6).map(|_| r.gen_range(0.0..8.0)).collect();
        let b: Vec<f64> = (0..6).map(|_| r.gen_range(0.0..8.0)).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let (va, vb, vm) = (sub.solve(&a).unwrap().value, sub.solve(&b).unwrap().value, sub.solve(&mid).unwrap().value);
        assert!(vm >= 0.5 * (va + vb) - 1e-7);
    }
}

/// Single-sink flow program written from node prices.
fn ceo_reference(net: &Network, ls: &[f64], lt: f64) -> f64 {
    let t = net.terminals()[0];
    let mut lp = LinearProgram::new();
    for e in net.edges() {
        let mut c = e.cost;
        if let Some(i) = net.source_index(e.tail) {
            c -= ls[i];
        }
        if let Some(i) = net.source_index(e.head) {
            c += ls[i];
        }
        if e.tail == t {
            c += lt;
        }
        if e.head == t {
            c -= lt;
        }
        lp.add_var(c, 0.0, e.capacity);
    }
    for v in 0..net.num_nodes() {
        if v == t || net.source_index(v).is_some() {
            continue;
        }
        let mut c: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, 1.0)).collect();
        c.extend(net.in_edges(v).iter().map(|&e| (e, -1.0)));
        lp.add_row(c, RowKind::Eq, 0.0);
    }
    solve_lp(&lp).unwrap().optimal().unwrap().objective
}

#[test]
fn ceo_flow_value_matches_reference_program() {
    let net = generate_geometric_network(&GeometricConfig::single_sink(7)).unwrap();
    let mut sub = CeoFlowSubproblem::new(&net).unwrap();
    let mut r = rng(24);
    for _ in 0..10 {
        let ls: Vec<f64> = (0..10).map(|_| r.gen_range(0.0..5.0)).collect();
        let lt = r.gen_range(0.0..5.0);
        let a = sub.solve(&ls, lt).unwrap();
        let b = ceo_reference(&net, &ls, lt);
        assert!((a.value - b).abs() < 1e-7 * (1.0 + b.abs()), "{} vs {b}", a.value);
    }
}

/// Flow part of the lifetime subproblem at fixed `Γ`, assembled directly.
fn lifetime_inner(net: &Network, e: &EnergyParams, cost: &[f64], gamma: f64) -> f64 {
    let t = net.terminals()[0];
    let mut lp = LinearProgram::new();
    for (edge, c) in net.edges().iter().zip(cost) {
        lp.add_var(*c, 0.0, edge.capacity);
    }
    for v in 0..net.num_nodes() {
        if net.source_index(v).is_some() {
            continue;
        }
        let mut load: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&k| (k, e.p_tx[k])).collect();
        load.extend(net.in_edges(v).iter().map(|&k| (k, e.p_rx[k])));
        lp.add_row(load, RowKind::Le, e.energy[v] * gamma);
        if v != t {
            let mut c: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&k| (k, 1.0)).collect();
            c.extend(net.in_edges(v).iter().map(|&k| (k, -1.0)));
            lp.add_row(c, RowKind::Eq, 0.0);
        }
    }
    solve_lp(&lp).unwrap().optimal().unwrap().objective
}

struct LifetimeCase {
    net: Network,
    energy: EnergyParams,
    l1: Vec<f64>,
    lt: f64,
    l2: Vec<f64>,
}

impl LifetimeCase {
    fn new(seed: u64) -> Self {
        let net = small_network(seed, 10, 3, 1, 4.0);
        let energy = EnergyParams::uniform(&net, 20.0, 1.0, 0.5, 0.001).unwrap();
        let mut r = rng(seed + 1000);
        let l1 = (0..3).map(|_| r.gen_range(0.0..4.0)).collect();
        let l2 = (0..3).map(|_| r.gen_range(0.0..0.05)).collect();
        Self { net, energy, l1, lt: r.gen_range(0.0..4.0), l2 }
    }

    fn phi(&self, cost: &[f64], gamma: f64) -> f64 {
        let c: f64 = self.net.sources().iter().zip(&self.l2).map(|(&s, l)| l * self.energy.energy[s]).sum();
        gamma * gamma - c * gamma + lifetime_inner(&self.net, &self.energy, cost, gamma)
    }
}

fn scan(case: &LifetimeCase, cost: &[f64], lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, lo);
    let mut g = lo;
    while g <= hi + 1e-15 {
        let v = case.phi(cost, g);
        if v < best.0 {
            best = (v, g);
        }
        g += step;
    }
    best
}

#[test]
fn lifetime_value_matches_gamma_scan() {
    for seed in 0..3 {
        let case = LifetimeCase::new(seed);
        let mut sub = LifetimeFlowSubproblem::new(&case.net, &case.energy).unwrap();
        let sol = sub.solve(&case.l1, case.lt, &case.l2).unwrap();
        let cost = sub.edge_costs(&case.l1, case.lt, &case.l2);
        // Coarse pass, then a 1e-4 grid around the coarse minimizer, then a
        // fine grid around that.
        let (_, g0) = scan(&case, &cost, 0.0, 2.0, 1e-2);
        let (_, g1) = scan(&case, &cost, (g0 - 1e-2).max(0.0), g0 + 1e-2, 1e-4);
        let (best, _) = scan(&case, &cost, (g1 - 1e-4).max(0.0), g1 + 1e-4, 1e-7);
        assert!((sol.value - best).abs() <= 1e-6, "seed {seed}: {} vs {best}", sol.value);
        assert!(sol.value <= best + 1e-9);
        assert!(sol.gamma > 1e-3 && sol.gamma < 2.0, "seed {seed}: gamma {}", sol.gamma);
        assert!((case.phi(&cost, sol.gamma) - sol.value).abs() <= 1e-9);
    }
}

#[test]
fn lifetime_outer_objective_is_convex() {
    let case = LifetimeCase::new(7);
    let sub = LifetimeFlowSubproblem::new(&case.net, &case.energy).unwrap();
    let cost = sub.edge_costs(&case.l1, case.lt, &case.l2);
    let mut r = rng(25);
    for _ in 0..30 {
        let (a, b) = (r.gen_range(0.0..1.0), r.gen_range(0.0..1.0));
        let mid = case.phi(&cost, 0.5 * (a + b));
        assert!(mid <= 0.5 * (case.phi(&cost, a) + case.phi(&cost, b)) + 1e-9);
    }
}
