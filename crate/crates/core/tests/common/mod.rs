#![allow(dead_code)]

use dscnet_core::netmodel::build_augmented;
use dscnet_core::scenario::{gaussian_model, model_entropies, GeometricConfig, RoleAssignment};
use dscnet_core::regions::SwRank;
use dscnet_core::{AugmentedNetwork, CeoModel, Edge, GaussianSourceModel, Network};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exponential-kernel covariance over random points, with a random decay,
/// exponent and quantization step.
pub fn random_gaussian(rng: &mut ChaCha8Rng, n: usize) -> GaussianSourceModel {
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let c = rng.gen_range(0.3..3.0);
    let beta = rng.gen_range(0.5..2.0);
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
            cov[i * n + j] = (-c * d.powf(beta)).exp() + if i == j { 0.01 } else { 0.0 };
        }
    }
    GaussianSourceModel::new(n, cov, rng.gen_range(0.01..0.2)).unwrap()
}

pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..5.0)).collect()
}

/// Random CEO model whose distortion target is strictly between the
/// all-sensors limit and the prior variance.
pub fn random_ceo(rng: &mut ChaCha8Rng, n: usize) -> CeoModel {
    let sx = rng.gen_range(0.5..2.0);
    let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    let floor = 1.0 / (1.0 / sx + noise.iter().map(|s| 1.0 / s).sum::<f64>());
    let d = floor + rng.gen_range(0.1..0.9) * (sx - floor);
    CeoModel::new(sx, noise, d).unwrap()
}

/// Small geometric network with random edge costs in `[1, 3)`.
pub fn small_network(seed: u64, nodes: usize, sources: usize, terminals: usize, capacity: f64) -> Network {
    let cfg = GeometricConfig {
        nodes,
        sources,
        terminals,
        seed,
        near_radius: 0.45,
        far_radius: 0.7,
        near_capacity: capacity,
        far_capacity: capacity / 2.0,
        cost: 1.0,
        roles: RoleAssignment::Extremes,
    };
    let net = dscnet_core::scenario::generate_geometric_network(&cfg).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let edges: Vec<Edge> = net.edges().iter().map(|e| Edge { cost: r.gen_range(1.0..3.0), ..*e }).collect();
    Network::new(net.nodes().to_vec(), edges, net.sources().to_vec(), net.terminals().to_vec()).unwrap()
}

/// Multicast instance on a small network with the geometric correlation
/// model of its sources.
pub fn small_multicast(seed: u64, nodes: usize, sources: usize, terminals: usize, capacity: f64) -> (Network, SwRank, AugmentedNetwork) {
    let net = small_network(seed, nodes, sources, terminals, capacity);
    let model = gaussian_model(&net, 1.0, 1.0, 1.0, 0.05).unwrap();
    let g = build_augmented(&net, &model_entropies(&model).unwrap()).unwrap();
    (net, SwRank::new(model).unwrap(), g)
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}
