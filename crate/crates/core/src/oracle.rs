//! Brute-force references for small instances: the explicit
//! exponential-constraint programs and exhaustive enumerations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lpcore::{solve_lp, sw_flow_program, LinearProgram, LpOutcome, RowKind};
use crate::netmodel::{AugmentedNetwork, FlowAssignment, Network};
use crate::regions::{ceo_rank, CeoModel, CeoRank, RankFunction, RateVector, SourceSet};
use crate::lpcore::EnergyParams;

/// Largest source count accepted by the explicit multicast program.
pub const SW_ORACLE_LIMIT: usize = 10;
/// Largest source count accepted by the CEO and lifetime references.
pub const CEO_ORACLE_LIMIT: usize = 4;
/// Largest source count accepted by [`exhaustive_greedy_check`].
pub const PERMUTATION_LIMIT: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct SwOracleSolution {
    pub cost: f64,
    pub flow: FlowAssignment,
}

/// Multicast program with every region constraint written out.
pub fn full_sw_program<G: RankFunction>(g: &AugmentedNetwork, region: &G) -> Result<LinearProgram> {
    let ns = g.num_sources();
    let nt = g.terminals().len();
    if region.ground_size() != ns {
        return Err(Error::DimensionMismatch { expected: ns, got: region.ground_size() });
    }
    if ns > SW_ORACLE_LIMIT {
        return Err(Error::TooManySources { size: ns, limit: SW_ORACLE_LIMIT });
    }
    let m = g.num_edges();
    let mut lp = sw_flow_program(g, &vec![0.0; ns * nt])?;
    let rate0 = lp.num_vars();
    for _ in 0..nt * ns {
        lp.add_var(0.0, 0.0, f64::INFINITY);
    }
    for k in 0..nt {
        for i in 0..ns {
            let mut coeffs = vec![(rate0 + k * ns + i, -1.0)];
            for e in 0..m {
                if g.virtual_source(e) == Some(i) {
                    coeffs.push(((k + 1) * m + e, 1.0));
                }
            }
            lp.add_row(coeffs, RowKind::Ge, 0.0);
        }
        for b in SourceSet::nonempty_subsets(ns) {
            let coeffs = b.iter().map(|i| (rate0 + k * ns + i, 1.0)).collect();
            lp.add_row(coeffs, RowKind::Ge, region.rank(b));
        }
    }
    Ok(lp)
}

/// Authoritative multicast optimum from the explicit program.
pub fn full_sw_lp<G: RankFunction>(g: &AugmentedNetwork, region: &G) -> Result<SwOracleSolution> {
    let lp = full_sw_program(g, region)?;
    let sol = match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Err(Error::Infeasible),
        LpOutcome::Unbounded => return Err(Error::Numerical("multicast program unbounded".into())),
    };
    let m = g.num_edges();
    let ns = g.num_sources();
    let nt = g.terminals().len();
    let rate0 = m * (nt + 1);
    let flow = FlowAssignment {
        z: sol.x[..m].to_vec(),
        x: (0..nt).map(|k| sol.x[(k + 1) * m..(k + 2) * m].to_vec()).collect(),
        rates: (0..nt).map(|k| sol.x[rate0 + k * ns..rate0 + (k + 1) * ns].to_vec()).collect(),
    };
    Ok(SwOracleSolution { cost: sol.objective, flow })
}

/// Minimum of `λᵀR` over every chain vertex and over the explicit LP.
pub fn exhaustive_greedy_check<G: RankFunction>(g: &G, weights: &[f64]) -> Result<f64> {
    let n = g.ground_size();
    if n > PERMUTATION_LIMIT {
        return Err(Error::TooManySources { size: n, limit: PERMUTATION_LIMIT });
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut visit = |p: &[usize]| {
        let mut prefix = SourceSet::empty();
        let mut prev = 0.0;
        let mut value = 0.0;
        for &i in p {
            prefix = prefix.with(i);
            let r = g.rank(prefix);
            value += weights[i] * (r - prev);
            prev = r;
        }
        best = best.min(value);
    };
    visit(&perm);
    // Heap's algorithm.
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let lp = region_program(g, weights);
    if let LpOutcome::Optimal(s) = solve_lp(&lp)? {
        best = best.min(s.objective);
    }
    Ok(best)
}

/// `min λᵀR` subject to every subset constraint of `g`.
pub fn region_program<G: RankFunction>(g: &G, weights: &[f64]) -> LinearProgram {
    let n = g.ground_size();
    let mut lp = LinearProgram::new();
    for &w in weights {
        lp.add_var(w, 0.0, f64::INFINITY);
    }
    for b in SourceSet::nonempty_subsets(n) {
        lp.add_row(b.iter().map(|i| (i, 1.0)).collect(), RowKind::Ge, g.rank(b));
    }
    lp
}

/// Single-sink program for a fixed auxiliary vector: flows plus rates with
/// all subset constraints of `R_D(r)`. Variables are the edge flows followed
/// by one rate per source. `energy` adds the lifetime variable `Γ` (last)
/// and the energy rows, and replaces the objective by `Γ`.
fn single_sink_program(net: &Network, m: &CeoModel, r: &[f64], energy: Option<&EnergyParams>) -> LinearProgram {
    let t = net.terminals()[0];
    let ns = net.sources().len();
    let ne = net.num_edges();
    let mut lp = LinearProgram::new();
    for e in net.edges() {
        lp.add_var(if energy.is_some() { 0.0 } else { e.cost }, 0.0, e.capacity);
    }
    for _ in 0..ns {
        lp.add_var(0.0, 0.0, f64::INFINITY);
    }
    let gamma = energy.map(|_| lp.add_var(1.0, 0.0, f64::INFINITY));
    let node_coeffs = |v: usize| -> Vec<(usize, f64)> {
        let mut c: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, 1.0)).collect();
        c.extend(net.in_edges(v).iter().map(|&e| (e, -1.0)));
        c
    };
    let mut source_pos = vec![None; net.num_nodes()];
    for (i, &s) in net.sources().iter().enumerate() {
        source_pos[s] = Some(i);
    }
    for v in 0..net.num_nodes() {
        let mut coeffs = node_coeffs(v);
        if let Some(i) = source_pos[v] {
            coeffs.push((ne + i, -1.0));
            lp.add_row(coeffs, RowKind::Ge, 0.0);
        } else if v == t {
            coeffs.extend((0..ns).map(|i| (ne + i, 1.0)));
            lp.add_row(coeffs, RowKind::Le, 0.0);
        } else {
            lp.add_row(coeffs, RowKind::Eq, 0.0);
        }
    }
    if let (Some(en), Some(gv)) = (energy, gamma) {
        for v in 0..net.num_nodes() {
            let mut coeffs: Vec<(usize, f64)> = net.out_edges(v).iter().map(|&e| (e, en.p_tx[e])).collect();
            coeffs.extend(net.in_edges(v).iter().map(|&e| (e, en.p_rx[e])));
            if let Some(i) = source_pos[v] {
                coeffs.push((ne + i, en.p_sense[i]));
            }
            coeffs.push((gv, -en.energy[v]));
            lp.add_row(coeffs, RowKind::Le, 0.0);
        }
    }
    let rank = CeoRank { model: m, r };
    for b in SourceSet::nonempty_subsets(ns) {
        lp.add_row(b.iter().map(|i| (ne + i, 1.0)).collect(), RowKind::Ge, rank.rank(b));
    }
    lp
}

/// Reference optimum of a single-sink problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CeoReference {
    /// Minimum cost (or minimum `Γ` for the lifetime problem).
    pub value: f64,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub rates: RateVector,
    /// Spacing of the coarse grid over the auxiliary vector.
    pub resolution: f64,
}

const GRID_POINTS: usize = 40;
const GRID_MIN: f64 = 1e-3;
const GRID_MAX: f64 = 5.0;

fn grid_axis() -> Vec<f64> {
    let mut axis = vec![0.0];
    let ratio = libm::log(GRID_MAX / GRID_MIN) / (GRID_POINTS - 2) as f64;
    for k in 0..GRID_POINTS - 1 {
        axis.push(GRID_MIN * libm::exp(ratio * k as f64));
    }
    axis
}

/// Completes `head` (every coordinate except `solved`) to a point of
/// `F(D)` by solving the distortion constraint for coordinate `solved`.
/// If `head` alone already meets the target the solved coordinate is 0.
fn complete_to_boundary(m: &CeoModel, head: &[f64], solved: usize) -> Option<Vec<f64>> {
    let n = m.num_sensors();
    let mut r = head.to_vec();
    r.insert(solved, 0.0);
    let need = 1.0 / m.distortion() - m.precision(&r, SourceSet::full(n));
    if need <= 0.0 {
        return Some(r);
    }
    let frac = need * m.noise()[solved];
    if frac >= 1.0 {
        return None;
    }
    r[solved] = -0.5 * libm::log1p(-frac);
    Some(r)
}

/// Minimizes `eval` over `F(D)` by a coarse log grid on all but one
/// coordinate (the last one is fixed by the distortion constraint), for each
/// choice of the solved coordinate, followed by Nelder-Mead refinement of
/// the best grid point.
fn boundary_search<F>(m: &CeoModel, mut eval: F) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<Option<f64>>,
{
    let n = m.num_sensors();
    let free = n - 1;
    let axis = grid_axis();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for solved in 0..n {
        let mut objective = |head: &[f64]| -> Result<(f64, Option<Vec<f64>>)> {
            if head.iter().any(|&v| v < 0.0) {
                return Ok((f64::INFINITY, None));
            }
            match complete_to_boundary(m, head, solved) {
                Some(r) => Ok((eval(&r)?.unwrap_or(f64::INFINITY), Some(r))),
                None => Ok((f64::INFINITY, None)),
            }
        };
        let mut local: Option<(f64, Vec<f64>)> = None;
        let total = GRID_POINTS.pow(free as u32);
        let mut idx = vec![0usize; free];
        for _ in 0..total {
            let head: Vec<f64> = idx.iter().map(|&k| axis[k]).collect();
            let (v, _) = objective(&head)?;
            if v.is_finite() && local.as_ref().is_none_or(|b| v < b.0) {
                local = Some((v, head));
            }
            for d in 0..free {
                idx[d] += 1;
                if idx[d] < GRID_POINTS {
                    break;
                }
                idx[d] = 0;
            }
        }
        let Some((start_value, start)) = local else { continue };
        let mut simplex: Vec<Vec<f64>> = vec![start.clone()];
        for d in 0..free {
            let mut p = start.clone();
            p[d] += 0.05f64.max(0.1 * start[d]);
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| objective(p).map(|o| o.0)).collect::<Result<_>>()?;
        values[0] = start_value;
        for _ in 0..400 * free {
            let mut order: Vec<usize> = (0..=free).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let (lo, hi, second) = (order[0], order[free], order[free - 1]);
            let spread = simplex
                .iter()
                .map(|p| p.iter().zip(&simplex[lo]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread < 1e-10 {
                break;
            }
            let centroid: Vec<f64> =
                (0..free).map(|d| order[..free].iter().map(|&k| simplex[k][d]).sum::<f64>() / free as f64).collect();
            let along =
                |t: f64| -> Vec<f64> { (0..free).map(|d| centroid[d] + t * (simplex[hi][d] - centroid[d])).collect() };
            let refl = along(-1.0);
            let fr = objective(&refl)?.0;
            if fr < values[lo] {
                let exp = along(-2.0);
                let fe = objective(&exp)?.0;
                if fe < fr {
                    simplex[hi] = exp;
                    values[hi] = fe;
                } else {
                    simplex[hi] = refl;
                    values[hi] = fr;
                }
            } else if fr < values[second] {
                simplex[hi] = refl;
                values[hi] = fr;
            } else {
                let con = along(0.5);
                let fc = objective(&con)?.0;
                if fc < values[hi] {
                    simplex[hi] = con;
                    values[hi] = fc;
                } else {
                    let base = simplex[lo].clone();
                    for k in 0..=free {
                        if k != lo {
                            simplex[k] = simplex[k].iter().zip(&base).map(|(a, b)| b + 0.5 * (a - b)).collect();
                            values[k] = objective(&simplex[k])?.0;
                        }
                    }
                }
            }
        }
        let k = (0..=free).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        if let (v, Some(r)) = objective(&simplex[k])? {
            if best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, r));
            }
        }
    }
    best.ok_or(Error::Infeasible)
}

fn ceo_reference_impl(net: &Network, m: &CeoModel, energy: Option<&EnergyParams>) -> Result<CeoReference> {
    let ns = net.sources().len();
    if net.terminals().len() != 1 {
        return Err(Error::InvalidNetwork("expected one terminal".into()));
    }
    if m.num_sensors() != ns {
        return Err(Error::DimensionMismatch { expected: ns, got: m.num_sensors() });
    }
    if ns > CEO_ORACLE_LIMIT {
        return Err(Error::TooManySources { size: ns, limit: CEO_ORACLE_LIMIT });
    }
    if !m.is_achievable() {
        return Err(Error::UnachievableDistortion);
    }
    let resolution = libm::log(GRID_MAX / GRID_MIN) / (GRID_POINTS - 2) as f64;
    let solve_at = |r: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
        let lp = single_sink_program(net, m, r, energy);
        Ok(solve_lp(&lp)?.optimal().map(|s| (s.objective, s.x)))
    };
    let r = if m.zero_rate_feasible() {
        vec![0.0; ns]
    } else {
        boundary_search(m, |r| Ok(solve_at(r)?.map(|s| s.0)))?.1
    };
    let (value, x) = solve_at(&r)?.ok_or(Error::Infeasible)?;
    let ne = net.num_edges();
    Ok(CeoReference {
        value,
        r: r.clone(),
        x: x[..ne].to_vec(),
        rates: x[ne..ne + ns].to_vec(),
        resolution,
    })
}

/// Direct reference for the single-sink CEO routing problem.
pub fn full_ceo_reference(net: &Network, m: &CeoModel) -> Result<CeoReference> {
    ceo_reference_impl(net, m, None)
}

/// Direct reference for the lifetime problem: `value` is the minimum `Γ`.
pub fn full_lifetime_reference(net: &Network, m: &CeoModel, energy: &EnergyParams) -> Result<CeoReference> {
    energy.validate(net)?;
    ceo_reference_impl(net, m, Some(energy))
}

/// Minimum of `wᵀR` over the CEO region by direct search over the boundary
/// of `F(D)`, evaluating the greedy vertex at each auxiliary vector.
pub fn ceo_grid_reference(m: &CeoModel, w: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = m.num_sensors();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    if n > CEO_ORACLE_LIMIT {
        return Err(Error::TooManySources { size: n, limit: CEO_ORACLE_LIMIT });
    }
    if m.zero_rate_feasible() {
        return Ok((0.0, vec![0.0; n]));
    }
    let value_at = |r: &[f64]| -> f64 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
        let mut prefix = SourceSet::empty();
        let mut prev = 0.0;
        let mut total = 0.0;
        for &i in &order {
            prefix = prefix.with(i);
            let f = ceo_rank(m, r, prefix);
            total += w[i] * (f - prev);
            prev = f;
        }
        total
    };
    boundary_search(m, |r| Ok(Some(value_at(r))))
}
