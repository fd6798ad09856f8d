mod common;

use common::*;
use dscnet_core::lpcore::solve_lp;
use dscnet_core::oracle::{ceo_grid_reference, exhaustive_greedy_check, region_program};
use dscnet_core::regions::{
    ceo_kkt_residuals, ceo_min_linear, ceo_rank, greedy_min_linear, region_membership, supermodularity_violation,
    tighten_sum_rate, CeoOutcome, SwRank, TabulatedRank,
};
use dscnet_core::scenario::{gaussian_model, generate_geometric_network, GeometricConfig};
use dscnet_core::{GaussianSourceModel, RankFunction, SourceSet};
use proptest::prelude::*;
use rand::Rng;

fn objective(w: &[f64], r: &[f64]) -> f64 {
    w.iter().zip(r).map(|(a, b)| a * b).sum()
}

#[test]
fn greedy_matches_full_lp_for_five_sources() {
    let mut r = rng(11);
    for _ in 0..30 {
        let rank = SwRank::new(random_gaussian(&mut r, 5)).unwrap();
        let w = random_weights(&mut r, 5);
        let greedy = objective(&w, &greedy_min_linear(&rank, &w).unwrap());
        let lp = solve_lp(&region_program(&rank, &w)).unwrap().optimal().unwrap().objective;
        assert!((greedy - lp).abs() <= 1e-9 * (1.0 + lp.abs()), "{greedy} vs {lp}");
        assert!(greedy <= exhaustive_greedy_check(&rank, &w).unwrap() + 1e-9);
    }
}

#[test]
fn relabeling_sources_permutes_the_greedy_vertex() {
    let mut r = rng(12);
    for _ in 0..10 {
        let n = 4;
        let m = random_gaussian(&mut r, n);
        let w = random_weights(&mut r, n);
        let perm = [2usize, 0, 3, 1];
        let cov = m.covariance();
        let mut pcov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                pcov[i * n + j] = cov[perm[i] * n + perm[j]];
            }
        }
        let pm = GaussianSourceModel::new(n, pcov, m.delta()).unwrap();
        let pw: Vec<f64> = perm.iter().map(|&p| w[p]).collect();
        let a = greedy_min_linear(&SwRank::new(m).unwrap(), &w).unwrap();
        let b = greedy_min_linear(&SwRank::new(pm).unwrap(), &pw).unwrap();
        for i in 0..n {
            assert!((b[i] - a[perm[i]]).abs() < 1e-9);
        }
    }
}

#[test]
fn default_model_conditional_entropies_are_non_negative() {
    let net = generate_geometric_network(&GeometricConfig::multicast(7)).unwrap();
    let rank = SwRank::new(gaussian_model(&net, 1.0, 1.0, 1.0, 0.01).unwrap()).unwrap();
    let mut count = 0;
    for b in SourceSet::nonempty_subsets(10) {
        assert!(rank.rank(b) >= 0.0, "{b:?}");
        count += 1;
    }
    assert_eq!(count, 1023);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_rank_is_supermodular(seed in 0u64..10_000, n in 2usize..6) {
        let rank = SwRank::new(random_gaussian(&mut rng(seed), n)).unwrap();
        prop_assert!(supermodularity_violation(&rank).0 <= 1e-10);
    }

    #[test]
    fn tightening_lowers_to_the_full_rank(seed in 0u64..10_000, n in 1usize..6) {
        let mut r = rng(seed);
        let rank = SwRank::new(random_gaussian(&mut r, n)).unwrap();
        let w = random_weights(&mut r, n);
        let rates: Vec<f64> = greedy_min_linear(&rank, &w).unwrap().iter().map(|v| v + r.gen_range(0.0..2.0)).collect();
        let out = tighten_sum_rate(&rank, &rates).unwrap();
        for (a, b) in out.iter().zip(&rates) {
            prop_assert!(a <= b);
        }
        prop_assert!(region_membership(&rank, &out, 1e-9).unwrap().member);
        let full = SourceSet::full(n);
        prop_assert!((full.sum(&out) - rank.rank(full)).abs() <= 1e-9);
    }

    #[test]
    fn greedy_vertex_has_tight_prefix_chain(seed in 0u64..10_000, n in 1usize..7) {
        let mut r = rng(seed);
        let rank = TabulatedRank::from_rank(&SwRank::new(random_gaussian(&mut r, n)).unwrap());
        let w = random_weights(&mut r, n);
        let rates = greedy_min_linear(&rank, &w).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
        let mut prefix = SourceSet::empty();
        for &i in &order {
            prefix = prefix.with(i);
            prop_assert!((prefix.sum(&rates) - rank.rank(prefix)).abs() < 1e-9);
        }
    }
}

#[test]
fn ceo_objective_is_homogeneous_in_the_weights() {
    let mut r = rng(13);
    for _ in 0..20 {
        let n = r.gen_range(1..5);
        let m = random_ceo(&mut r, n);
        let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..3.0)).collect();
        let alpha = r.gen_range(0.1..10.0);
        let wa: Vec<f64> = w.iter().map(|v| v * alpha).collect();
        let a = ceo_min_linear(&m, &w).unwrap().optimal().unwrap();
        let b = ceo_min_linear(&m, &wa).unwrap().optimal().unwrap();
        assert!((b.objective - alpha * a.objective).abs() < 1e-8 * (1.0 + b.objective));
        for (x, y) in a.r.iter().zip(&b.r) {
            assert!((x - y).abs() < 1e-7);
        }
    }
}

#[test]
fn ceo_matches_grid_reference_for_three_sensors() {
    let mut r = rng(14);
    for _ in 0..15 {
        let m = random_ceo(&mut r, 3);
        let w: Vec<f64> = (0..3).map(|_| r.gen_range(0.1..3.0)).collect();
        let sol = ceo_min_linear(&m, &w).unwrap().optimal().unwrap();
        let (grid, _) = ceo_grid_reference(&m, &w).unwrap();
        assert!((sol.objective - grid).abs() <= 1e-3, "{} vs {grid}", sol.objective);
        let kkt = ceo_kkt_residuals(&m, &sol);
        assert!(kkt.stationarity <= 1e-8 && kkt.distortion <= 1e-10, "{kkt:?}");
        // The vertex lies in the region of its own auxiliary vector.
        for b in SourceSet::nonempty_subsets(3) {
            assert!(b.sum(&sol.rates) >= ceo_rank(&m, &sol.r, b) - 1e-9);
        }
    }
}

#[test]
fn ceo_negative_weight_is_unbounded() {
    let m = random_ceo(&mut rng(15), 3);
    assert!(matches!(ceo_min_linear(&m, &[1.0, -0.1, 2.0]).unwrap(), CeoOutcome::Unbounded));
}
