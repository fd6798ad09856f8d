//! Capacitated acyclic networks, the augmented graph with a virtual super
//! source, max-flow/min-cut queries and the routability certificate.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lpcore::{LinearProgram, RowKind};
use crate::regions::{RankFunction, RateVector, SourceSet, EXHAUSTIVE_LIMIT};

/// Comparison tolerance used by the max-flow routine.
pub const FLOW_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    /// Planar position in the unit square, if known.
    pub position: Option<[f64; 2]>,
}

/// Directed edge between node indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
    pub cost: f64,
}

impl Edge {
    pub fn new(tail: usize, head: usize, capacity: f64, cost: f64) -> Self {
        Self { tail, head, capacity, cost }
    }
}

/// Directed acyclic capacitated graph with designated sources and terminals.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    sources: Vec<usize>,
    terminals: Vec<usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Network {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, sources: Vec<usize>, terminals: Vec<usize>) -> Result<Self> {
        let n = nodes.len();
        for e in &edges {
            for v in [e.tail, e.head] {
                if v >= n {
                    return Err(Error::UnknownNode(v));
                }
            }
            if !(e.capacity >= 0.0 && e.capacity.is_finite()) {
                return Err(Error::InvalidNetwork(format!("edge {}->{} has capacity {}", e.tail, e.head, e.capacity)));
            }
            if !(e.cost >= 0.0 && e.cost.is_finite()) {
                return Err(Error::InvalidNetwork(format!("edge {}->{} has cost {}", e.tail, e.head, e.cost)));
            }
        }
        let mut role = vec![0u8; n];
        for &s in &sources {
            if s >= n {
                return Err(Error::UnknownNode(s));
            }
            if role[s] != 0 {
                return Err(Error::InvalidNetwork(format!("node {s} listed twice as a source")));
            }
            role[s] = 1;
        }
        for &t in &terminals {
            if t >= n {
                return Err(Error::UnknownNode(t));
            }
            match role[t] {
                1 => return Err(Error::InvalidNetwork(format!("node {t} is both source and terminal"))),
                2 => return Err(Error::InvalidNetwork(format!("node {t} listed twice as a terminal"))),
                _ => role[t] = 2,
            }
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            out_edges[e.tail].push(k);
            in_edges[e.head].push(k);
        }
        let topo = topological_order(n, &edges, &in_edges, &out_edges).ok_or(Error::CyclicGraph)?;
        Ok(Self { nodes, edges, sources, terminals, out_edges, in_edges, topo })
    }

    /// Network on `n` nodes without coordinates.
    pub fn from_edges(n: usize, edges: Vec<Edge>, sources: Vec<usize>, terminals: Vec<usize>) -> Result<Self> {
        Self::new(vec![Node { position: None }; n], edges, sources, terminals)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Position of `v` in the source list.
    pub fn source_index(&self, v: usize) -> Option<usize> {
        self.sources.iter().position(|&s| s == v)
    }

    /// Same topology with the given per-edge capacities.
    pub fn with_capacities(&self, capacities: &[f64]) -> Result<Self> {
        if capacities.len() != self.edges.len() {
            return Err(Error::DimensionMismatch { expected: self.edges.len(), got: capacities.len() });
        }
        let edges = self.edges.iter().zip(capacities).map(|(e, &c)| Edge { capacity: c, ..*e }).collect();
        Self::new(self.nodes.clone(), edges, self.sources.clone(), self.terminals.clone())
    }

    /// Same network with every capacity multiplied by `factor`.
    pub fn scale_capacities(&self, factor: f64) -> Result<Self> {
        let caps: Vec<f64> = self.edges.iter().map(|e| e.capacity * factor).collect();
        self.with_capacities(&caps)
    }

    /// Same network with new role lists.
    pub fn with_roles(&self, sources: Vec<usize>, terminals: Vec<usize>) -> Result<Self> {
        Self::new(self.nodes.clone(), self.edges.clone(), sources, terminals)
    }

    /// `Σ outflow - Σ inflow` at every node for per-edge flow `x`.
    pub fn divergence(&self, x: &[f64]) -> Vec<f64> {
        let mut div = vec![0.0; self.num_nodes()];
        for (e, &f) in self.edges.iter().zip(x) {
            div[e.tail] += f;
            div[e.head] -= f;
        }
        div
    }

    fn total_capacity(&self) -> f64 {
        self.edges.iter().map(|e| e.capacity).sum()
    }
}

fn topological_order(n: usize, edges: &[Edge], in_edges: &[Vec<usize>], out_edges: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut indeg: Vec<usize> = in_edges.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &k in &out_edges[v] {
            let h = edges[k].head;
            indeg[h] -= 1;
            if indeg[h] == 0 {
                queue.push_back(h);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Joint and per-source marginal entropies in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEntropies {
    pub joint: f64,
    pub marginals: Vec<f64>,
}

/// Network plus a super source `s*` feeding every source through a virtual
/// edge of capacity `H(X_i)` and cost 0.
///
/// The super source is node `base.num_nodes()`. In a freshly built graph
/// edge `k < |E|` is original edge `k` and edge `|E| + i` is the virtual
/// edge into source `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedNetwork {
    graph: Network,
    base_nodes: usize,
    /// For each edge, the source position it feeds if it is virtual.
    virtual_of: Vec<Option<usize>>,
    entropies: SourceEntropies,
}

pub fn build_augmented(net: &Network, entropies: &SourceEntropies) -> Result<AugmentedNetwork> {
    let ns = net.sources().len();
    if ns == 0 {
        return Err(Error::InvalidNetwork("network has no sources".into()));
    }
    if entropies.marginals.len() != ns {
        return Err(Error::DimensionMismatch { expected: ns, got: entropies.marginals.len() });
    }
    if entropies.marginals.iter().chain([&entropies.joint]).any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParameter("entropies must be positive".into()));
    }
    let n = net.num_nodes();
    let mut nodes = net.nodes().to_vec();
    nodes.push(Node { position: None });
    let mut edges = net.edges().to_vec();
    let mut virtual_of = vec![None; edges.len()];
    for (i, &s) in net.sources().iter().enumerate() {
        edges.push(Edge::new(n, s, entropies.marginals[i], 0.0));
        virtual_of.push(Some(i));
    }
    let graph = Network::new(nodes, edges, net.sources().to_vec(), net.terminals().to_vec())?;
    Ok(AugmentedNetwork { graph, base_nodes: n, virtual_of, entropies: entropies.clone() })
}

impl AugmentedNetwork {
    /// The augmented graph itself (super source included).
    pub fn graph(&self) -> &Network {
        &self.graph
    }

    pub fn super_source(&self) -> usize {
        self.base_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn edges(&self) -> &[Edge] {
        self.graph.edges()
    }

    pub fn sources(&self) -> &[usize] {
        self.graph.sources()
    }

    pub fn terminals(&self) -> &[usize] {
        self.graph.terminals()
    }

    pub fn num_sources(&self) -> usize {
        self.graph.sources().len()
    }

    pub fn entropies(&self) -> &SourceEntropies {
        &self.entropies
    }

    pub fn joint_entropy(&self) -> f64 {
        self.entropies.joint
    }

    /// Source position fed by edge `k`, if `k` is virtual.
    pub fn virtual_source(&self, k: usize) -> Option<usize> {
        self.virtual_of[k]
    }

    pub fn is_virtual(&self, k: usize) -> bool {
        self.virtual_of[k].is_some()
    }

    /// Original (non-virtual) part of the graph.
    pub fn base(&self) -> Network {
        let mut keep = Vec::new();
        for (k, e) in self.edges().iter().enumerate() {
            if !self.is_virtual(k) {
                keep.push(*e);
            }
        }
        let nodes = self.graph.nodes()[..self.base_nodes].to_vec();
        Network::new(nodes, keep, self.sources().to_vec(), self.terminals().to_vec())
            .expect("subgraph of a valid network is valid")
    }

    /// Required divergence at node `v` for terminal `t`.
    pub fn divergence_target(&self, v: usize, t: usize) -> f64 {
        if v == self.super_source() {
            self.entropies.joint
        } else if v == t {
            -self.entropies.joint
        } else {
            0.0
        }
    }

    /// Sum of `x` over the virtual edges into each source.
    pub fn source_injection(&self, x: &[f64]) -> Vec<f64> {
        let mut inj = vec![0.0; self.num_sources()];
        for (k, v) in self.virtual_of.iter().enumerate() {
            if let Some(i) = v {
                inj[*i] += x[k];
            }
        }
        inj
    }
}

/// Per-terminal virtual flows and rates plus the physical flow, all indexed
/// by edge of the augmented graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    pub z: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub rates: Vec<RateVector>,
}

/// Result of a max-flow computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    /// Flow on each edge of the queried network.
    pub flow: Vec<f64>,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

struct Dinic {
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Self { head: Vec::new(), cap: Vec::new(), adj: vec![Vec::new(); n], level: vec![-1; n], next: vec![0; n] }
    }

    fn add_arc(&mut self, u: usize, v: usize, c: f64) -> usize {
        let id = self.head.len();
        self.head.push(v);
        self.cap.push(c);
        self.adj[u].push(id);
        self.head.push(u);
        self.cap.push(0.0);
        self.adj[v].push(id + 1);
        id
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.head[a];
                if self.cap[a] > FLOW_EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let a = self.adj[u][self.next[u]];
            let v = self.head[a];
            if self.cap[a] > FLOW_EPS && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[a]));
                if got > FLOW_EPS {
                    self.cap[a] -= got;
                    self.cap[a ^ 1] += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    fn run(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|p| *p = 0);
            loop {
                let got = self.dfs(s, t, f64::INFINITY);
                if got <= FLOW_EPS {
                    break;
                }
                total += got;
            }
        }
        total
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let v = self.head[a];
                if self.cap[a] > FLOW_EPS && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

fn check_node(net: &Network, v: usize) -> Result<()> {
    if v >= net.num_nodes() {
        Err(Error::UnknownNode(v))
    } else {
        Ok(())
    }
}

/// Max flow with per-edge flows and the source side of a minimum cut.
pub fn max_flow_detail(net: &Network, src: usize, sink: usize) -> Result<MaxFlow> {
    check_node(net, src)?;
    check_node(net, sink)?;
    if src == sink {
        return Err(Error::InvalidParameter("source and sink coincide".into()));
    }
    flow_with_extra(net, &[], src, sink)
}

/// Runs Dinic on `net` plus extra arcs (which may mention one node beyond
/// the network, used as a temporary super node).
fn flow_with_extra(net: &Network, extra: &[(usize, usize, f64)], src: usize, sink: usize) -> Result<MaxFlow> {
    let n = net.num_nodes() + usize::from(!extra.is_empty());
    let mut d = Dinic::new(n);
    let ids: Vec<usize> = net.edges().iter().map(|e| d.add_arc(e.tail, e.head, e.capacity)).collect();
    for &(u, v, c) in extra {
        d.add_arc(u, v, c);
    }
    let value = d.run(src, sink);
    let flow = ids.iter().zip(net.edges()).map(|(&a, e)| (e.capacity - d.cap[a]).max(0.0)).collect();
    let mut source_side = d.reachable(src);
    source_side.truncate(net.num_nodes());
    Ok(MaxFlow { value, flow, source_side })
}

pub fn max_flow(net: &Network, src: usize, sink: usize) -> Result<f64> {
    Ok(max_flow_detail(net, src, sink)?.value)
}

/// Total capacity of edges leaving the node set `side`.
pub fn cut_capacity(net: &Network, side: &[bool]) -> f64 {
    net.edges().iter().filter(|e| side[e.tail] && !side[e.head]).map(|e| e.capacity).sum()
}

/// Minimum cut separating the sources in `subset` (positions into
/// `net.sources()`) from node `t`.
pub fn min_cut_subset(net: &Network, subset: SourceSet, t: usize) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_node(net, t)?;
    let ns = net.sources().len();
    if let Some(i) = subset.iter().find(|&i| i >= ns) {
        return Err(Error::InvalidParameter(format!("source position {i} out of range")));
    }
    let hub = net.num_nodes();
    let big = net.total_capacity() + 1.0;
    let extra: Vec<(usize, usize, f64)> = subset.iter().map(|i| (hub, net.sources()[i], big)).collect();
    if subset.iter().any(|i| net.sources()[i] == t) {
        return Ok(big);
    }
    Ok(flow_with_extra(net, &extra, hub, t)?.value)
}

/// Routability of one terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalFeasibility {
    pub terminal: usize,
    /// A rate vector in both the region and the cut-capacity region, if
    /// one exists.
    pub rates: Option<RateVector>,
    /// Subset maximizing `g(B) - min-cut(B, terminal)`.
    pub worst_subset: SourceSet,
    pub worst_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub terminals: Vec<TerminalFeasibility>,
}

impl FeasibilityReport {
    /// First terminal that cannot be served, with its violated cut.
    pub fn witness(&self) -> Option<&TerminalFeasibility> {
        self.terminals.iter().find(|t| t.rates.is_none())
    }
}

/// Decides for every terminal whether the rate region meets its
/// cut-capacity region, by an LP over both families of subset constraints.
pub fn check_feasibility<G: RankFunction>(net: &Network, region: &G) -> Result<FeasibilityReport> {
    check_feasibility_limited(net, region, EXHAUSTIVE_LIMIT)
}

pub fn check_feasibility_limited<G: RankFunction>(net: &Network, region: &G, limit: usize) -> Result<FeasibilityReport> {
    let ns = net.sources().len();
    if region.ground_size() != ns {
        return Err(Error::DimensionMismatch { expected: ns, got: region.ground_size() });
    }
    if ns > limit {
        return Err(Error::TooManySources { size: ns, limit });
    }
    if ns == 0 {
        return Err(Error::InvalidNetwork("network has no sources".into()));
    }
    let subsets: Vec<SourceSet> = SourceSet::nonempty_subsets(ns).collect();
    let ranks: Vec<f64> = subsets.iter().map(|&b| region.rank(b)).collect();
    let mut terminals = Vec::new();
    for &t in net.terminals() {
        let mut lp = LinearProgram::new();
        for _ in 0..ns {
            lp.add_var(0.0, 0.0, f64::INFINITY);
        }
        let mut worst = (f64::NEG_INFINITY, SourceSet::empty());
        for (&b, &g) in subsets.iter().zip(&ranks) {
            let cut = min_cut_subset(net, b, t)?;
            let coeffs: Vec<(usize, f64)> = b.iter().map(|i| (i, 1.0)).collect();
            lp.add_row(coeffs.clone(), RowKind::Ge, g);
            lp.add_row(coeffs, RowKind::Le, cut);
            if g - cut > worst.0 {
                worst = (g - cut, b);
            }
        }
        let rates = crate::lpcore::solve_lp(&lp)?.optimal().map(|s| s.x);
        terminals.push(TerminalFeasibility { terminal: t, rates, worst_subset: worst.1, worst_gap: worst.0 });
    }
    let feasible = terminals.iter().all(|t| t.rates.is_some());
    Ok(FeasibilityReport { feasible, terminals })
}

/// Largest residual of each constraint family of a flow assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub capacity: f64,
    pub coupling: f64,
    pub balance: f64,
    pub rate_coupling: f64,
    /// (terminal position, node) with the largest balance residual.
    pub worst_balance: Option<(usize, usize)>,
    /// (terminal position, source position) with the largest `R_i - x_{s* i}`.
    pub worst_rate: Option<(usize, usize)>,
    pub passes: bool,
}

impl FlowReport {
    pub fn max_violation(&self) -> f64 {
        self.capacity.max(self.coupling).max(self.balance).max(self.rate_coupling)
    }
}

/// Checks `0 ≤ x ≤ z ≤ C*`, flow balance and `x_{s* i} ≥ R_i`.
pub fn validate_flow(fa: &FlowAssignment, g: &AugmentedNetwork, tol: f64) -> FlowReport {
    let m = g.num_edges();
    let nt = g.terminals().len();
    let mut capacity = 0.0f64;
    let mut coupling = 0.0f64;
    let mut balance = 0.0f64;
    let mut rate_coupling = 0.0f64;
    let mut worst_balance = None;
    let mut worst_rate = None;
    let dims_ok = fa.z.len() == m
        && fa.x.len() == nt
        && fa.rates.len() == nt
        && fa.x.iter().all(|x| x.len() == m)
        && fa.rates.iter().all(|r| r.len() == g.num_sources());
    if !dims_ok {
        return FlowReport {
            capacity: f64::INFINITY,
            coupling: f64::INFINITY,
            balance: f64::INFINITY,
            rate_coupling: f64::INFINITY,
            worst_balance: None,
            worst_rate: None,
            passes: false,
        };
    }
    for (e, &z) in g.edges().iter().zip(&fa.z) {
        capacity = capacity.max(z - e.capacity).max(-z);
    }
    for (k, &t) in g.terminals().iter().enumerate() {
        let x = &fa.x[k];
        for (xe, ze) in x.iter().zip(&fa.z) {
            coupling = coupling.max(xe - ze).max(-xe);
        }
        let div = g.graph().divergence(x);
        for (v, d) in div.iter().enumerate() {
            let r = (d - g.divergence_target(v, t)).abs();
            if r > balance {
                balance = r;
                worst_balance = Some((k, v));
            }
        }
        let inj = g.source_injection(x);
        for (i, (&r, &xi)) in fa.rates[k].iter().zip(&inj).enumerate() {
            if r - xi > rate_coupling {
                rate_coupling = r - xi;
                worst_rate = Some((k, i));
            }
        }
    }
    let passes = capacity <= tol && coupling <= tol && balance <= tol && rate_coupling <= tol;
    FlowReport { capacity, coupling, balance, rate_coupling, worst_balance, worst_rate, passes }
}

/// Keeps the edges with `z > tol`, with capacity `z`.
pub fn induced_subgraph(g: &AugmentedNetwork, z: &[f64], tol: f64) -> Result<AugmentedNetwork> {
    if z.len() != g.num_edges() {
        return Err(Error::DimensionMismatch { expected: g.num_edges(), got: z.len() });
    }
    if let Some(v) = z.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative flow {v}")));
    }
    let mut edges = Vec::new();
    let mut virtual_of = Vec::new();
    for (k, (e, &zk)) in g.edges().iter().zip(z).enumerate() {
        if zk > tol {
            edges.push(Edge { capacity: zk, ..*e });
            virtual_of.push(g.virtual_of[k]);
        }
    }
    let graph = Network::new(g.graph.nodes().to_vec(), edges, g.sources().to_vec(), g.terminals().to_vec())?;
    Ok(AugmentedNetwork { graph, base_nodes: g.base_nodes, virtual_of, entropies: g.entropies.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> Network {
        // 0 -> 1 -> 3, 0 -> 2 -> 3
        Network::from_edges(
            4,
            vec![Edge::new(0, 1, 3.0, 1.0), Edge::new(1, 3, 3.0, 1.0), Edge::new(0, 2, 4.0, 1.0), Edge::new(2, 3, 4.0, 1.0)],
            vec![0],
            vec![3],
        )
        .unwrap()
    }

    #[test]
    fn cycle_is_rejected() {
        let r = Network::from_edges(2, vec![Edge::new(0, 1, 1.0, 1.0), Edge::new(1, 0, 1.0, 1.0)], vec![0], vec![1]);
        assert_eq!(r.unwrap_err(), Error::CyclicGraph);
    }

    #[test]
    fn overlapping_roles_are_rejected() {
        let r = Network::from_edges(2, vec![Edge::new(0, 1, 1.0, 1.0)], vec![0], vec![0]);
        assert!(matches!(r, Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn single_edge_and_parallel_paths() {
        let one = Network::from_edges(2, vec![Edge::new(0, 1, 5.0, 1.0)], vec![0], vec![1]).unwrap();
        assert!((max_flow(&one, 0, 1).unwrap() - 5.0).abs() < 1e-12);
        assert!((max_flow(&diamond(), 0, 3).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn cut_from_residual_matches_value() {
        let mf = max_flow_detail(&diamond(), 0, 3).unwrap();
        assert!((cut_capacity(&diamond(), &mf.source_side) - mf.value).abs() < 1e-12);
    }

    #[test]
    fn unknown_node_errors() {
        assert_eq!(max_flow(&diamond(), 0, 9).unwrap_err(), Error::UnknownNode(9));
    }

    #[test]
    fn augmented_edge_layout() {
        let net = Network::from_edges(2, vec![Edge::new(0, 1, 1.0, 1.0)], vec![0], vec![1]).unwrap();
        let ent = SourceEntropies { joint: 2.0, marginals: vec![2.0] };
        let g = build_augmented(&net, &ent).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.edges()[1], Edge::new(2, 0, 2.0, 0.0));
        assert_eq!(g.virtual_source(1), Some(0));
        assert_eq!(g.super_source(), 2);
        assert_eq!(g.base(), net);
    }

    #[test]
    fn augmented_needs_sources() {
        let net = Network::from_edges(2, vec![Edge::new(0, 1, 1.0, 1.0)], vec![], vec![1]).unwrap();
        let ent = SourceEntropies { joint: 1.0, marginals: vec![] };
        assert!(build_augmented(&net, &ent).is_err());
    }

    #[test]
    fn bottleneck_and_disconnected_cuts() {
        let net = Network::from_edges(
            4,
            vec![Edge::new(0, 2, 10.0, 1.0), Edge::new(1, 2, 10.0, 1.0), Edge::new(2, 3, 4.0, 1.0)],
            vec![0, 1],
            vec![3],
        )
        .unwrap();
        assert!((min_cut_subset(&net, SourceSet::full(2), 3).unwrap() - 4.0).abs() < 1e-12);
        let split = Network::from_edges(3, vec![Edge::new(0, 2, 1.0, 1.0)], vec![0, 1], vec![2]).unwrap();
        assert_eq!(min_cut_subset(&split, SourceSet::from_indices(&[1]), 2).unwrap(), 0.0);
        assert_eq!(min_cut_subset(&split, SourceSet::empty(), 2).unwrap_err(), Error::EmptySubset);
    }

    #[test]
    fn zero_flow_fails_balance() {
        let net = Network::from_edges(2, vec![Edge::new(0, 1, 3.0, 1.0)], vec![0], vec![1]).unwrap();
        let g = build_augmented(&net, &SourceEntropies { joint: 2.0, marginals: vec![2.0] }).unwrap();
        let fa = FlowAssignment { z: vec![0.0; 2], x: vec![vec![0.0; 2]], rates: vec![vec![0.0]] };
        let rep = validate_flow(&fa, &g, 1e-9);
        assert!(!rep.passes);
        assert_eq!(rep.balance, 2.0);
        assert_eq!(rep.worst_balance, Some((0, 1)));
    }

    #[test]
    fn single_path_flow_passes() {
        let net = Network::from_edges(2, vec![Edge::new(0, 1, 3.0, 1.0)], vec![0], vec![1]).unwrap();
        let g = build_augmented(&net, &SourceEntropies { joint: 2.0, marginals: vec![2.0] }).unwrap();
        let fa = FlowAssignment { z: vec![2.0; 2], x: vec![vec![2.0; 2]], rates: vec![vec![2.0]] };
        let rep = validate_flow(&fa, &g, 0.0);
        assert!(rep.passes, "{rep:?}");
        assert_eq!(rep.max_violation(), 0.0);
    }

    #[test]
    fn induced_subgraph_extremes() {
        let net = diamond();
        let g = build_augmented(&net, &SourceEntropies { joint: 5.0, marginals: vec![5.0] }).unwrap();
        let caps: Vec<f64> = g.edges().iter().map(|e| e.capacity).collect();
        assert_eq!(induced_subgraph(&g, &caps, 0.0).unwrap(), g);
        assert_eq!(induced_subgraph(&g, &vec![0.0; caps.len()], 0.0).unwrap().num_edges(), 0);
        assert!(induced_subgraph(&g, &vec![-1.0; caps.len()], 0.0).is_err());
    }
}
