//! Seeded random geometric networks and the distance-based Gaussian
//! correlation model.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::netmodel::{check_feasibility, min_cut_subset, Edge, Network, Node, SourceEntropies};
use crate::regions::{ceo_min_linear, CeoModel, GaussianSourceModel, SourceSet, SwRank};

/// How sources and terminals are picked among the generated nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleAssignment {
    /// Leftmost nodes are sources, rightmost are terminals.
    Extremes,
    /// Uniformly random distinct nodes.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricConfig {
    pub nodes: usize,
    pub sources: usize,
    pub terminals: usize,
    pub seed: u64,
    /// Pairs closer than this get the high capacity.
    pub near_radius: f64,
    /// Pairs closer than this (but not near) get the low capacity.
    pub far_radius: f64,
    pub near_capacity: f64,
    pub far_capacity: f64,
    pub cost: f64,
    pub roles: RoleAssignment,
}

impl GeometricConfig {
    /// 50 nodes, 10 sources, 3 terminals, capacities 40/20.
    pub fn multicast(seed: u64) -> Self {
        Self {
            nodes: 50,
            sources: 10,
            terminals: 3,
            seed,
            near_radius: 0.3 / core::f64::consts::SQRT_2,
            far_radius: 0.3,
            near_capacity: 40.0,
            far_capacity: 20.0,
            cost: 1.0,
            roles: RoleAssignment::Extremes,
        }
    }

    /// 50 nodes, 10 sources, 1 terminal, capacities 22/11.
    pub fn single_sink(seed: u64) -> Self {
        Self { terminals: 1, near_capacity: 22.0, far_capacity: 11.0, ..Self::multicast(seed) }
    }
}

/// Nodes uniform on the unit square; an edge joins every pair within
/// `far_radius`, pointing toward larger x (ties by node index).
pub fn generate_geometric_network(cfg: &GeometricConfig) -> Result<Network> {
    if cfg.sources + cfg.terminals > cfg.nodes {
        return Err(Error::InvalidParameter("more sources and terminals than nodes".into()));
    }
    if !(cfg.near_radius >= 0.0 && cfg.far_radius >= cfg.near_radius) {
        return Err(Error::InvalidParameter("radii must satisfy 0 <= near <= far".into()));
    }
    if !(cfg.near_capacity >= 0.0 && cfg.far_capacity >= 0.0 && cfg.cost >= 0.0) {
        return Err(Error::InvalidParameter("capacities and cost must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<[f64; 2]> = (0..cfg.nodes).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let (sources, terminals) = assign_roles(&points, cfg, &mut rng);
    let nodes = points.iter().map(|&p| Node { position: Some(p) }).collect();
    Network::new(nodes, geometric_edges(&points, cfg), sources, terminals)
}

fn geometric_edges(points: &[[f64; 2]], cfg: &GeometricConfig) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = distance(points[i], points[j]);
            if d > cfg.far_radius {
                continue;
            }
            let cap = if d <= cfg.near_radius { cfg.near_capacity } else { cfg.far_capacity };
            let (tail, head) = if points[j][0] < points[i][0] { (j, i) } else { (i, j) };
            edges.push(Edge::new(tail, head, cap, cfg.cost));
        }
    }
    edges
}

fn assign_roles(points: &[[f64; 2]], cfg: &GeometricConfig, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    match cfg.roles {
        RoleAssignment::Extremes => {
            order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
            let sources = order[..cfg.sources].to_vec();
            let terminals = order[order.len() - cfg.terminals..].to_vec();
            (sources, terminals)
        }
        RoleAssignment::Random => {
            order.shuffle(rng);
            let sources = order[..cfg.sources].to_vec();
            let terminals = order[cfg.sources..cfg.sources + cfg.terminals].to_vec();
            (sources, terminals)
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    math::sqrt(dx * dx + dy * dy)
}

/// `C(i,i) = σ²`, `C(i,j) = σ² exp(-c d_ij^β)` over the sources of `net`.
///
/// A singular result gets `1e-9` added to the diagonal once; if it is still
/// not positive definite the configuration is rejected.
pub fn gaussian_covariance(net: &Network, sigma2: f64, c: f64, beta: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0 && c > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter("sigma2, c and beta must be positive".into()));
    }
    let pos: Vec<[f64; 2]> = net
        .sources()
        .iter()
        .map(|&s| net.nodes()[s].position.ok_or_else(|| Error::InvalidParameter("source has no coordinates".into())))
        .collect::<Result<_>>()?;
    let n = pos.len();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cov[i * n + j] = if i == j {
                sigma2
            } else {
                sigma2 * math::exp(-c * math::powf(distance(pos[i], pos[j]), beta))
            };
        }
    }
    if GaussianSourceModel::new(n, cov.clone(), 1.0).is_ok() {
        return Ok(cov);
    }
    for i in 0..n {
        cov[i * n + i] += 1e-9;
    }
    GaussianSourceModel::new(n, cov.clone(), 1.0).map(|_| cov)
}

/// Distance-correlated Gaussian model over the sources of `net`.
pub fn gaussian_model(net: &Network, sigma2: f64, c: f64, beta: f64, delta: f64) -> Result<GaussianSourceModel> {
    let cov = gaussian_covariance(net, sigma2, c, beta)?;
    GaussianSourceModel::new(net.sources().len(), cov, delta)
}

/// Joint and marginal entropies of the quantized sources.
pub fn model_entropies(m: &GaussianSourceModel) -> Result<SourceEntropies> {
    let marginals = (0..m.num_sources()).map(|i| m.marginal_entropy(i)).collect();
    Ok(SourceEntropies { joint: m.joint_entropy(), marginals })
}

/// Correlation model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationParams {
    pub sigma2: f64,
    pub c: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Default for CorrelationParams {
    fn default() -> Self {
        Self { sigma2: 1.0, c: 1.0, beta: 1.0, delta: 0.01 }
    }
}

/// Tries `seed, seed + 1, ...` (at most `tries` seeds) until the generated
/// network can serve every terminal under the correlation model. Returns
/// the network and the seed that worked.
pub fn generate_feasible_multicast(
    cfg: &GeometricConfig,
    params: &CorrelationParams,
    tries: usize,
) -> Result<(Network, u64)> {
    for k in 0..tries as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let net = generate_geometric_network(&GeometricConfig { seed, ..cfg.clone() })?;
        let model = gaussian_model(&net, params.sigma2, params.c, params.beta, params.delta)?;
        let rank = SwRank::new(model)?;
        if check_feasibility(&net, &rank)?.feasible {
            return Ok((net, seed));
        }
    }
    Err(Error::Infeasible)
}

/// Sufficient routability test for the single-sink problem: the minimum
/// sum-rate vertex of the CEO region (equal weights) fits under every
/// source-subset cut to the terminal.
pub fn single_sink_routable(net: &Network, model: &CeoModel) -> Result<bool> {
    let t = match net.terminals() {
        [t] => *t,
        _ => return Err(Error::InvalidNetwork("expected one terminal".into())),
    };
    let ns = net.sources().len();
    let sol = ceo_min_linear(model, &vec![1.0; ns])?.optimal().ok_or(Error::Unbounded)?;
    for b in SourceSet::nonempty_subsets(ns) {
        if b.sum(&sol.rates) > min_cut_subset(net, b, t)? + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Seed search as in [`generate_feasible_multicast`] for the single-sink
/// problems.
pub fn generate_feasible_single_sink(cfg: &GeometricConfig, model: &CeoModel, tries: usize) -> Result<(Network, u64)> {
    for k in 0..tries as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let net = generate_geometric_network(&GeometricConfig { seed, ..cfg.clone() })?;
        if single_sink_routable(&net, model)? {
            return Ok((net, seed));
        }
    }
    Err(Error::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_network() {
        let a = generate_geometric_network(&GeometricConfig::multicast(3)).unwrap();
        let b = generate_geometric_network(&GeometricConfig::multicast(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edges_point_right_with_tiered_capacity() {
        let net = generate_geometric_network(&GeometricConfig::multicast(1)).unwrap();
        for e in net.edges() {
            let (a, b) = (net.nodes()[e.tail].position.unwrap(), net.nodes()[e.head].position.unwrap());
            assert!(a[0] <= b[0]);
            let d = distance(a, b);
            assert!(d <= 0.3);
            assert_eq!(e.capacity, if d <= 0.3 / core::f64::consts::SQRT_2 { 40.0 } else { 20.0 });
        }
    }

    #[test]
    fn roles_are_extreme_by_x() {
        let net = generate_geometric_network(&GeometricConfig::multicast(2)).unwrap();
        let x = |v: usize| net.nodes()[v].position.unwrap()[0];
        let max_source = net.sources().iter().map(|&s| x(s)).fold(f64::MIN, f64::max);
        let min_terminal = net.terminals().iter().map(|&t| x(t)).fold(f64::MAX, f64::min);
        for v in 0..net.num_nodes() {
            if !net.sources().contains(&v) {
                assert!(x(v) >= max_source);
            }
            if !net.terminals().contains(&v) {
                assert!(x(v) <= min_terminal);
            }
        }
    }

    #[test]
    fn too_many_roles_is_an_error() {
        let cfg = GeometricConfig { nodes: 5, sources: 3, terminals: 3, ..GeometricConfig::multicast(0) };
        assert!(generate_geometric_network(&cfg).is_err());
    }

    #[test]
    fn coincident_sources_take_the_jitter_path() {
        let nodes = vec![Node { position: Some([0.2, 0.2]) }; 2];
        let net = Network::new(nodes, vec![], vec![0, 1], vec![]).unwrap();
        let cov = gaussian_covariance(&net, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(cov[1], 1.0);
        assert!(cov[0] > 1.0);
    }

    #[test]
    fn strong_decay_is_nearly_diagonal() {
        let nodes = vec![Node { position: Some([0.0, 0.0]) }, Node { position: Some([0.5, 0.0]) }];
        let net = Network::new(nodes, vec![], vec![0, 1], vec![]).unwrap();
        let cov = gaussian_covariance(&net, 1.0, 1e4, 1.0).unwrap();
        assert!(cov[1] < 1e-300);
    }

    #[test]
    fn single_source_entropy() {
        let m = GaussianSourceModel::new(1, vec![1.0], 0.01).unwrap();
        let h = model_entropies(&m).unwrap();
        assert!((h.joint - 6.0241).abs() < 1e-4);
        assert_eq!(h.marginals, vec![h.joint]);
    }
}
