//! Proximal bundle method for maximizing a concave dual function over a
//! box `y ≥ lb`.
//!
//! The model is `f̂(y) = min_j a_j + s_jᵀ y` over the stored
//! linearizations. The proximal subproblem
//! `max_{y ≥ lb} f̂(y) - μ/2 ‖y - x̂‖²` is solved through its dual
//!
//! ```text
//! min  Σ_j ν_j l_j + ηᵀ(x̂ - lb) + ‖Sν + η‖² / (2μ)
//! s.t. ν in the unit simplex, η ≥ 0,
//! ```
//!
//! with `l_j = a_j + s_jᵀ x̂`, after which `y = x̂ + (Sν + η)/μ`.

use alloc::vec;
use alloc::vec::Vec;

use super::{BundleParams, DualOracle, PrimalPoint};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;

/// Solution of one proximal subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximalStep {
    pub y: Vec<f64>,
    /// Simplex weights of the linearizations.
    pub nu: Vec<f64>,
    /// Multipliers of `y ≥ lb`.
    pub eta: Vec<f64>,
    /// `f̂(y)`.
    pub model_value: f64,
}

/// Dense quadratic program `min ½uᵀHu + qᵀu` over `u ≥ 0` with
/// `Σ_{i<k} u_i = 1`, by a primal active-set method.
fn simplex_box_qp(h: &[f64], q: &[f64], k: usize, start: usize) -> Result<Vec<f64>> {
    let n = q.len();
    let diag = (0..n).map(|i| h[i * n + i].abs()).fold(0.0, f64::max);
    let qscale = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ridge = 1e-12 * (1.0 + diag);
    let tol = 1e-11 * (1.0 + diag + qscale);
    let mut u = vec![0.0; n];
    u[start] = 1.0;
    let mut free = vec![false; n];
    free[start] = true;

    for _ in 0..(50 * n + 200) {
        let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        let f = idx.len();
        // [H_FF + εI, -a_F; a_Fᵀ, 0] [u_F; π] = [-q_F; 1]
        let dim = f + 1;
        let mut m = vec![0.0; dim * dim];
        let mut rhs = vec![0.0; dim];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                m[r * dim + c] = h[i * n + j];
            }
            m[r * dim + r] += ridge;
            if i < k {
                m[r * dim + f] = -1.0;
                m[f * dim + r] = 1.0;
            }
            rhs[r] = -q[i];
        }
        rhs[f] = 1.0;
        let sol = solve_dense(m, rhs, dim).ok_or_else(|| Error::Numerical("bundle QP system is singular".into()))?;
        let pi = sol[f];
        let step: Vec<f64> = idx.iter().enumerate().map(|(r, &i)| sol[r] - u[i]).collect();
        let size = step.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if size <= 1e-13 {
            // Stationary on the face; check the multipliers of the zero bounds.
            let mut worst = (-tol, None);
            for i in (0..n).filter(|&i| !free[i]) {
                let g: f64 = (0..n).map(|j| h[i * n + j] * u[j]).sum::<f64>() + q[i];
                let rho = g - if i < k { pi } else { 0.0 };
                if rho < worst.0 {
                    worst = (rho, Some(i));
                }
            }
            match worst.1 {
                None => return Ok(u),
                Some(i) => free[i] = true,
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut block = None;
        for (r, &i) in idx.iter().enumerate() {
            if step[r] < 0.0 {
                let t = -u[i] / step[r];
                if t < alpha {
                    alpha = t;
                    block = Some(i);
                }
            }
        }
        for (r, &i) in idx.iter().enumerate() {
            u[i] = (u[i] + alpha * step[r]).max(0.0);
        }
        if let Some(i) = block {
            u[i] = 0.0;
            free[i] = false;
        }
    }
    Err(Error::Numerical("bundle QP did not terminate".into()))
}

/// `argmax_{y ≥ lower} min_j (offsets_j + slopes_jᵀ y) - μ/2 ‖y - center‖²`.
pub fn solve_proximal_qp(
    offsets: &[f64],
    slopes: &[Vec<f64>],
    center: &[f64],
    lower: &[f64],
    mu: f64,
) -> Result<ProximalStep> {
    let nb = offsets.len();
    let d = center.len();
    if nb == 0 || slopes.len() != nb || lower.len() != d || slopes.iter().any(|s| s.len() != d) {
        return Err(Error::InvalidParameter("inconsistent bundle".into()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter("proximity weight must be positive".into()));
    }
    let n = nb + d;
    let mut h = vec![0.0; n * n];
    for i in 0..nb {
        for j in i..nb {
            let v: f64 = slopes[i].iter().zip(&slopes[j]).map(|(a, b)| a * b).sum::<f64>() / mu;
            h[i * n + j] = v;
            h[j * n + i] = v;
        }
        for c in 0..d {
            let v = slopes[i][c] / mu;
            h[i * n + nb + c] = v;
            h[(nb + c) * n + i] = v;
        }
    }
    for c in 0..d {
        h[(nb + c) * n + nb + c] = 1.0 / mu;
    }
    let lin: Vec<f64> = offsets.iter().zip(slopes).map(|(a, s)| a + dot(s, center)).collect();
    let mut q = lin.clone();
    q.extend(center.iter().zip(lower).map(|(x, l)| (x - l).max(0.0)));
    let start = (0..nb).min_by(|&a, &b| lin[a].total_cmp(&lin[b])).expect("nonempty bundle");
    let u = simplex_box_qp(&h, &q, nb, start)?;
    let nu = u[..nb].to_vec();
    let eta = u[nb..].to_vec();
    let mut y = center.to_vec();
    for (j, s) in slopes.iter().enumerate() {
        if nu[j] != 0.0 {
            for c in 0..d {
                y[c] += nu[j] * s[c] / mu;
            }
        }
    }
    for c in 0..d {
        y[c] = (y[c] + eta[c] / mu).max(lower[c]);
    }
    let model_value = model_at(offsets, slopes, &y);
    Ok(ProximalStep { y, nu, eta, model_value })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn model_at(offsets: &[f64], slopes: &[Vec<f64>], y: &[f64]) -> f64 {
    offsets.iter().zip(slopes).map(|(a, s)| a + dot(s, y)).fold(f64::INFINITY, f64::min)
}

/// Per-iteration record of a bundle run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BundleLog {
    /// Predicted ascent `δ_k`.
    pub deltas: Vec<f64>,
    /// `f(x̂)` after each iteration.
    pub center_values: Vec<f64>,
    pub serious: Vec<bool>,
    pub mu: Vec<f64>,
}

impl BundleLog {
    /// Whether `f(x̂)` never decreased and every `δ_k` is non-negative.
    pub fn invariants_hold(&self) -> bool {
        self.deltas.iter().all(|d| *d >= 0.0) && self.center_values.windows(2).all(|w| w[1] >= w[0])
    }
}

struct Cut<P> {
    offset: f64,
    slope: Vec<f64>,
    primal: P,
}

/// What the driver sees after each bundle iteration.
pub(crate) struct BundleIterate<'a, P> {
    pub iter: usize,
    pub candidate_value: f64,
    pub candidate_cost: f64,
    pub center_value: f64,
    pub delta: f64,
    pub mu: f64,
    pub aggregate: &'a P,
}

pub(crate) struct BundleRun<P> {
    pub center: Vec<f64>,
    pub center_value: f64,
    pub aggregate: P,
    pub converged: bool,
    pub iterations: usize,
    pub log: BundleLog,
}

fn cut_from<P>(y: &[f64], value: f64, slope: Vec<f64>, primal: P) -> Cut<P> {
    Cut { offset: value - dot(&slope, y), slope, primal }
}

/// Replaces the oldest half of the bundle by its multiplier-weighted
/// aggregate (dropped outright if none of it is active).
fn compress<P: PrimalPoint>(cuts: &mut Vec<Cut<P>>, nu: &[f64]) {
    let half = cuts.len() / 2;
    let w: f64 = nu.iter().take(half).sum();
    let old: Vec<Cut<P>> = cuts.drain(..half).collect();
    if w <= 0.0 {
        return;
    }
    let mut agg: Option<Cut<P>> = None;
    for (c, &n) in old.iter().zip(nu).filter(|(_, n)| **n > 0.0) {
        let share = n / w;
        match &mut agg {
            None => {
                let mut primal = c.primal.clone();
                primal.combine(share, &c.primal, 0.0);
                agg = Some(Cut { offset: c.offset * share, slope: c.slope.iter().map(|s| s * share).collect(), primal });
            }
            Some(a) => {
                a.offset += c.offset * share;
                for (x, s) in a.slope.iter_mut().zip(&c.slope) {
                    *x += s * share;
                }
                a.primal.combine(1.0, &c.primal, share);
            }
        }
    }
    cuts.insert(0, agg.expect("positive weight implies an active cut"));
}

pub(crate) fn maximize<D, F>(
    oracle: &mut D,
    start: &[f64],
    lower: &[f64],
    params: &BundleParams,
    max_iters: usize,
    mut observe: F,
) -> Result<BundleRun<D::Primal>>
where
    D: DualOracle,
    F: FnMut(&BundleIterate<'_, D::Primal>),
{
    let mut center: Vec<f64> = start.iter().zip(lower).map(|(s, l)| s.max(*l)).collect();
    let first = oracle.evaluate(&center)?;
    let mut center_value = first.value;
    let mut aggregate = first.primal.clone();
    let mut cuts = vec![cut_from(&center, first.value, first.subgradient, first.primal)];
    let mut mu = params.mu;
    let (mut nulls, mut serious_run) = (0, 0);
    let mut log = BundleLog::default();
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=max_iters {
        iterations = k;
        let offsets: Vec<f64> = cuts.iter().map(|c| c.offset).collect();
        let slopes: Vec<Vec<f64>> = cuts.iter().map(|c| c.slope.clone()).collect();
        let step = solve_proximal_qp(&offsets, &slopes, &center, lower, mu)?;
        let mut delta = step.model_value - center_value;
        let mut y = step.y.clone();
        if delta < 0.0 {
            // Only rounding can put the model below f(x̂) at the optimum;
            // fall back to the center, where the model is an upper bound.
            delta = (model_at(&offsets, &slopes, &center) - center_value).max(0.0);
            y = center.clone();
        }
        aggregate = {
            let mut agg = cuts[0].primal.clone();
            agg.combine(step.nu[0], &cuts[0].primal, 0.0);
            for (c, &n) in cuts.iter().zip(&step.nu).skip(1) {
                if n > 0.0 {
                    agg.combine(1.0, &c.primal, n);
                }
            }
            agg
        };
        log.deltas.push(delta);
        log.mu.push(mu);
        if delta < params.delta_bar * (1.0 + center_value.abs()) {
            log.center_values.push(center_value);
            log.serious.push(false);
            observe(&BundleIterate {
                iter: k,
                candidate_value: center_value,
                candidate_cost: f64::NAN,
                center_value,
                delta,
                mu,
                aggregate: &aggregate,
            });
            converged = true;
            break;
        }
        let pt = oracle.evaluate(&y)?;
        let serious = pt.value - center_value >= params.m * delta;
        let candidate_value = pt.value;
        let candidate_cost = pt.primal_cost;
        if cuts.len() >= params.max_size {
            compress(&mut cuts, &step.nu);
        }
        cuts.push(cut_from(&y, pt.value, pt.subgradient, pt.primal));
        if serious {
            center = y;
            center_value = pt.value;
            nulls = 0;
            serious_run += 1;
            if serious_run >= params.serious_limit {
                mu = (mu * 0.5).max(params.mu_min);
                serious_run = 0;
            }
        } else {
            serious_run = 0;
            nulls += 1;
            if nulls >= params.null_limit {
                mu = (mu * 2.0).min(params.mu_max);
                nulls = 0;
            }
        }
        log.center_values.push(center_value);
        log.serious.push(serious);
        observe(&BundleIterate { iter: k, candidate_value, candidate_cost, center_value, delta, mu, aggregate: &aggregate });
    }
    Ok(BundleRun { center, center_value, aggregate, converged, iterations, log })
}
