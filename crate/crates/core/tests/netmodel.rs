mod common;

use common::*;
use dscnet_core::lpcore::{solve_lp, LinearProgram, RowKind};
use dscnet_core::netmodel::{check_feasibility, cut_capacity, induced_subgraph, max_flow, max_flow_detail, min_cut_subset, validate_flow};
use dscnet_core::oracle::full_sw_lp;
use dscnet_core::regions::SwRank;
use dscnet_core::scenario::{gaussian_model, generate_geometric_network, GeometricConfig};
use dscnet_core::{Edge, Network, SourceSet};
use proptest::prelude::*;
use rand::Rng;

/// Random DAG: edges only go from lower to higher index.
fn random_dag(seed: u64, n: usize, p: f64) -> Network {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen::<f64>() < p {
                edges.push(Edge::new(i, j, r.gen_range(0.0..10.0), 1.0));
            }
        }
    }
    Network::from_edges(n, edges, vec![0], vec![n - 1]).unwrap()
}

fn lp_max_flow(net: &Network, s: usize, t: usize) -> f64 {
    let mut lp = LinearProgram::new();
    for e in net.edges() {
        let gain = if e.tail == s { -1.0 } else if e.head == s { 1.0 } else { 0.0 };
        lp.add_var(gain, 0.0, e.capacity);
    }
    for v in (0..net.num_nodes()).filter(|&v| v != s && v != t) {
        let mut c: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, 1.0)).collect();
        c.extend(net.in_edges(v).iter().map(|&e| (e, -1.0)));
        lp.add_row(c, RowKind::Eq, 0.0);
    }
    -solve_lp(&lp).unwrap().optimal().unwrap().objective
}

#[test]
fn max_flow_agrees_with_lp_on_random_dags() {
    for seed in 0..20 {
        let net = random_dag(seed, 20, 0.25);
        let a = max_flow(&net, 0, 19).unwrap();
        let b = lp_max_flow(&net, 0, 19);
        assert!((a - b).abs() < 1e-7, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn residual_cut_certifies_max_flow() {
    for seed in 0..20 {
        let net = random_dag(100 + seed, 20, 0.3);
        let mf = max_flow_detail(&net, 0, 19).unwrap();
        assert!(mf.source_side[0] && !mf.source_side[19]);
        assert!((cut_capacity(&net, &mf.source_side) - mf.value).abs() < 1e-9);
    }
}

/// Minimum over node sets containing `subset` and not `t` of the outgoing capacity.
fn enumerate_cuts(net: &Network, subset: SourceSet, t: usize) -> f64 {
    let n = net.num_nodes();
    let mut best = f64::INFINITY;
    for mask in 0u32..1 << n {
        let side: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
        if side[t] || subset.iter().any(|i| !side[net.sources()[i]]) {
            continue;
        }
        best = best.min(cut_capacity(net, &side));
    }
    best
}

#[test]
fn subset_min_cut_matches_enumeration() {
    let mut checked = 0;
    for seed in 0..40 {
        let mut r = rng(seed);
        let n = 7;
        let mut edges = Vec::new();
        while edges.len() < 10 {
            let i = r.gen_range(0..n - 1);
            let j = r.gen_range(i + 1..n);
            edges.push(Edge::new(i, j, r.gen_range(0.5..5.0), 1.0));
        }
        let net = Network::from_edges(n, edges, vec![0, 1, 2], vec![6]).unwrap();
        for b in SourceSet::nonempty_subsets(3) {
            let a = min_cut_subset(&net, b, 6).unwrap();
            let e = enumerate_cuts(&net, b, 6);
            assert!((a - e).abs() < 1e-9, "seed {seed} {b:?}: {a} vs {e}");
            checked += 1;
        }
    }
    assert_eq!(checked, 40 * 7);
}

proptest! {
    #[test]
    fn max_flow_is_monotone_in_capacity(seed in 0u64..1000, k in 0usize..60, extra in 0.0f64..5.0) {
        let net = random_dag(seed, 12, 0.35);
        prop_assume!(net.num_edges() > 0);
        let k = k % net.num_edges();
        let mut caps: Vec<f64> = net.edges().iter().map(|e| e.capacity).collect();
        let before = max_flow(&net, 0, 11).unwrap();
        caps[k] += extra;
        let after = max_flow(&net.with_capacities(&caps).unwrap(), 0, 11).unwrap();
        prop_assert!(after >= before - 1e-9);
        prop_assert!(after <= before + extra + 1e-9);
    }
}

#[test]
fn feasibility_tracks_capacity() {
    let (net, rank, _) = small_multicast(3, 10, 3, 2, 40.0);
    assert!(check_feasibility(&net, &rank).unwrap().feasible);
    let starved = net.scale_capacities(1e-3).unwrap();
    let report = check_feasibility(&starved, &rank).unwrap();
    assert!(!report.feasible);
    let w = report.witness().unwrap();
    assert!(w.worst_gap > 0.0 && !w.worst_subset.is_empty());
}

#[test]
fn reference_instance_is_feasible() {
    let net = generate_geometric_network(&GeometricConfig::multicast(7)).unwrap();
    let rank = SwRank::new(gaussian_model(&net, 1.0, 1.0, 1.0, 0.01).unwrap()).unwrap();
    let report = check_feasibility(&net, &rank).unwrap();
    assert!(report.feasible);
    assert_eq!(report.terminals.len(), 3);
}

#[test]
fn oracle_flow_respects_subset_cuts_of_its_own_support() {
    for seed in 0..5 {
        let (_, rank, g) = small_multicast(seed, 10, 3, 2, 40.0);
        let sol = full_sw_lp(&g, &rank).unwrap();
        assert!(validate_flow(&sol.flow, &g, 1e-7).passes);
        for (k, &t) in g.terminals().iter().enumerate() {
            let sub = induced_subgraph(&g, &sol.flow.x[k], 1e-12).unwrap();
            let z_sub = induced_subgraph(&g, &sol.flow.z, 1e-12).unwrap();
            for b in SourceSet::nonempty_subsets(3) {
                // Cuts between the real sources and t, of the virtual
                // flow's support, dominate the rank of the subset.
                let need = b.sum(&sol.flow.rates[k]);
                let cut_x = min_cut_subset(&sub.base(), b, t).unwrap();
                let cut_z = min_cut_subset(&z_sub.base(), b, t).unwrap();
                assert!(cut_x >= need - 1e-6, "seed {seed} t {t} {b:?}: {cut_x} < {need}");
                assert!(cut_z >= cut_x - 1e-6);
                assert!(need >= dscnet_core::RankFunction::rank(&rank, b) - 1e-6);
            }
        }
    }
}
