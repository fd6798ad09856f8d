//! Bounded-variable revised primal simplex.
//!
//! Every row `i` gets a logical variable `r_i = a_i x` whose bounds encode
//! the row sense, so the working system is `A x - r = 0` with all
//! variables boxed. The basis inverse is kept in product form (an eta
//! file) on top of a periodic reinversion. Phase 1 minimizes the sum of
//! bound infeasibilities of the basic variables starting from whatever
//! basis is current, which is what makes warm starts after objective or
//! bound changes cheap. Dantzig pricing is used until a run of degenerate
//! pivots is detected, then Bland's rule takes over until progress resumes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::program::{LinearProgram, RowKind};
use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const REINVERT_EVERY: usize = 96;
const DEGENERATE_RUN: usize = 40;

/// Result of an LP solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// Primal and dual information at an optimal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y` with `c - Aᵀy` the reduced costs.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub row_activity: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone)]
struct Eta {
    pivot_row: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

/// A simplex instance that can be re-solved after changing the objective
/// or bounds, reusing the last basis.
#[derive(Debug, Clone)]
pub struct Simplex {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    head: Vec<usize>,
    etas: Vec<Eta>,
    since_reinvert: usize,
    dirty: bool,
    total_iterations: usize,
}

fn row_bounds(kind: RowKind, rhs: f64) -> (f64, f64) {
    match kind {
        RowKind::Le => (f64::NEG_INFINITY, rhs),
        RowKind::Ge => (rhs, f64::INFINITY),
        RowKind::Eq => (rhs, rhs),
    }
}

fn tol_at(bound: f64) -> f64 {
    FEAS_TOL * bound.abs().max(1.0)
}

impl Simplex {
    pub fn new(p: &LinearProgram) -> Result<Self> {
        if !p.is_well_formed() {
            return Err(Error::Numerical("malformed linear program".into()));
        }
        let n = p.num_vars();
        let m = p.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in p.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
        }
        let mut cost = p.objective.clone();
        cost.resize(n + m, 0.0);
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        for row in &p.rows {
            let (l, u) = row_bounds(row.kind, row.rhs);
            lo.push(l);
            hi.push(u);
        }
        let mut s = Simplex {
            m,
            n,
            cols,
            cost,
            lo,
            hi,
            x: vec![0.0; n + m],
            status: vec![Status::Lower; n + m],
            head: (n..n + m).collect(),
            etas: Vec::new(),
            since_reinvert: 0,
            dirty: true,
            total_iterations: 0,
        };
        for j in 0..n {
            s.place_nonbasic(j);
        }
        for i in 0..m {
            s.status[n + i] = Status::Basic;
        }
        Ok(s)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    /// Replaces the structural objective coefficients.
    pub fn set_objective(&mut self, c: &[f64]) {
        self.cost[..self.n].copy_from_slice(&c[..self.n]);
    }

    pub fn set_cost(&mut self, j: usize, c: f64) {
        self.cost[j] = c;
    }

    /// Changes the bounds of structural variable `j`.
    pub fn set_var_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lo[j] = lower;
        self.hi[j] = upper;
        if self.status[j] != Status::Basic {
            self.place_nonbasic(j);
        }
        self.dirty = true;
    }

    /// Changes the sense and right-hand side of row `i`.
    pub fn set_row(&mut self, i: usize, kind: RowKind, rhs: f64) {
        let (l, u) = row_bounds(kind, rhs);
        let j = self.n + i;
        self.lo[j] = l;
        self.hi[j] = u;
        if self.status[j] != Status::Basic {
            self.place_nonbasic(j);
        }
        self.dirty = true;
    }

    fn place_nonbasic(&mut self, j: usize) {
        let (l, u) = (self.lo[j], self.hi[j]);
        let keep_upper = self.status[j] == Status::Upper && u.is_finite();
        if keep_upper {
            self.x[j] = u;
        } else if l.is_finite() {
            self.status[j] = Status::Lower;
            self.x[j] = l;
        } else if u.is_finite() {
            self.status[j] = Status::Upper;
            self.x[j] = u;
        } else {
            self.status[j] = Status::Free;
            self.x[j] = 0.0;
        }
    }

    fn column_into(&self, j: usize, w: &mut [f64]) {
        w.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                w[i] = a;
            }
        } else {
            w[j - self.n] = -1.0;
        }
    }

    fn ftran(&self, w: &mut [f64]) {
        for eta in &self.etas {
            let wp = w[eta.pivot_row];
            if wp != 0.0 {
                let t = wp / eta.pivot;
                w[eta.pivot_row] = t;
                for &(i, v) in &eta.others {
                    w[i] -= v * t;
                }
            }
        }
    }

    fn btran(&self, y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = y[eta.pivot_row];
            for &(i, v) in &eta.others {
                s -= v * y[i];
            }
            y[eta.pivot_row] = s / eta.pivot;
        }
    }

    fn push_eta(&mut self, w: &[f64], r: usize) {
        let others = w
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != r && v.abs() > DROP_TOL)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta { pivot_row: r, pivot: w[r], others });
    }

    /// Rebuilds the eta file from scratch for the current basic set and
    /// recomputes the basic values. Structurally singular columns are
    /// swapped out for logicals.
    fn reinvert(&mut self) {
        self.etas.clear();
        let m = self.m;
        let basics: Vec<usize> = self.head.clone();
        let mut new_head = vec![usize::MAX; m];
        for &j in &basics {
            if j >= self.n {
                let r = j - self.n;
                new_head[r] = j;
                self.etas.push(Eta { pivot_row: r, pivot: -1.0, others: Vec::new() });
            }
        }
        let mut w = vec![0.0; m];
        for &j in &basics {
            if j < self.n {
                self.column_into(j, &mut w);
                self.ftran(&mut w);
                let mut best = 0.0;
                let mut r = usize::MAX;
                for i in 0..m {
                    if new_head[i] == usize::MAX && w[i].abs() > best {
                        best = w[i].abs();
                        r = i;
                    }
                }
                if r == usize::MAX || best < 1e-10 {
                    self.status[j] = Status::Lower;
                    self.place_nonbasic(j);
                    continue;
                }
                new_head[r] = j;
                self.push_eta(&w, r);
            }
        }
        for r in 0..m {
            if new_head[r] == usize::MAX {
                let j = self.n + r;
                new_head[r] = j;
                self.status[j] = Status::Basic;
                self.etas.push(Eta { pivot_row: r, pivot: -1.0, others: Vec::new() });
            }
        }
        self.head = new_head;
        self.since_reinvert = 0;
        self.recompute_basics();
        self.dirty = false;
    }

    fn recompute_basics(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.status[j] == Status::Basic || self.x[j] == 0.0 {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * self.x[j];
                }
            } else {
                rhs[j - self.n] += self.x[j];
            }
        }
        self.ftran(&mut rhs);
        for r in 0..self.m {
            self.x[self.head[r]] = rhs[r];
        }
    }

    /// Step length at which basic variable in row `r` reaches a bound when
    /// the entering variable moves in direction `dir`, and whether that
    /// bound is the upper one. Infeasible basics stop at the bound they
    /// are approaching.
    fn row_step(&self, r: usize, a: f64, dir: f64) -> Option<(f64, bool)> {
        if a.abs() <= PIVOT_TOL {
            return None;
        }
        let j = self.head[r];
        let rate = -dir * a;
        let v = self.x[j];
        let (l, u) = (self.lo[j], self.hi[j]);
        let below = v < l - tol_at(l);
        let above = v > u + tol_at(u);
        if rate < 0.0 {
            if above {
                Some(((v - u) / -rate, true))
            } else if below || !l.is_finite() {
                None
            } else {
                Some((((v - l) / -rate).max(0.0), false))
            }
        } else if below {
            Some(((l - v) / rate, false))
        } else if above || !u.is_finite() {
            None
        } else {
            Some((((u - v) / rate).max(0.0), true))
        }
    }

    /// Runs the simplex method from the current basis.
    pub fn solve(&mut self) -> Result<LpOutcome> {
        let m = self.m;
        let total = self.n + self.m;
        if self.dirty || self.etas.is_empty() {
            self.reinvert();
        }
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut d = vec![0.0; total];
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let max_iter = 50 * (total + m) + 20_000;
        let mut iter = 0usize;
        let mut verified = false;
        loop {
            if iter > max_iter {
                return Err(Error::Numerical(format!("simplex iteration limit ({max_iter}) reached")));
            }
            iter += 1;
            // Phase and basic costs.
            let mut phase_one = false;
            for r in 0..m {
                let j = self.head[r];
                let v = self.x[j];
                y[r] = if v < self.lo[j] - tol_at(self.lo[j]) {
                    phase_one = true;
                    -1.0
                } else if v > self.hi[j] + tol_at(self.hi[j]) {
                    phase_one = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !phase_one {
                for r in 0..m {
                    y[r] = self.cost[self.head[r]];
                }
            }
            self.btran(&mut y);

            // Pricing.
            let mut enter = usize::MAX;
            let mut enter_dir = 0.0;
            let mut best = 0.0;
            for j in 0..total {
                let st = self.status[j];
                if st == Status::Basic {
                    d[j] = 0.0;
                    continue;
                }
                let base = if phase_one { 0.0 } else { self.cost[j] };
                let dj = if j < self.n {
                    base - self.cols[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>()
                } else {
                    base + y[j - self.n]
                };
                d[j] = dj;
                if self.lo[j] == self.hi[j] {
                    continue;
                }
                let dir = match st {
                    Status::Lower if dj < -DUAL_TOL => 1.0,
                    Status::Upper if dj > DUAL_TOL => -1.0,
                    Status::Free if dj.abs() > DUAL_TOL => -dj.signum(),
                    _ => continue,
                };
                if bland {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = j;
                    enter_dir = dir;
                }
            }

            if enter == usize::MAX {
                if phase_one {
                    if !verified {
                        self.reinvert();
                        verified = true;
                        continue;
                    }
                    self.total_iterations += iter;
                    return Ok(LpOutcome::Infeasible);
                }
                if !verified {
                    // Re-factor once to confirm the optimum is not an
                    // artefact of accumulated eta error.
                    self.reinvert();
                    verified = true;
                    continue;
                }
                self.total_iterations += iter;
                return Ok(LpOutcome::Optimal(self.extract(&y, &d, iter)));
            }
            verified = false;

            // Ratio test.
            let q = enter;
            self.column_into(q, &mut alpha);
            self.ftran(&mut alpha);
            let flip_dist = if self.lo[q].is_finite() && self.hi[q].is_finite() {
                self.hi[q] - self.lo[q]
            } else {
                f64::INFINITY
            };
            // Pass 1: smallest step at which some basic variable hits a bound.
            let mut row_min = f64::INFINITY;
            for r in 0..m {
                if let Some((t, _)) = self.row_step(r, alpha[r], enter_dir) {
                    row_min = row_min.min(t);
                }
            }
            // Pass 2: among near-ties pick the most stable pivot (or the
            // lowest variable index under Bland's rule).
            let mut leave_row = usize::MAX;
            let mut leave_to_upper = false;
            if row_min < flip_dist {
                let cutoff = row_min + 1e-12 * row_min.abs().max(1.0);
                let mut best_size = 0.0;
                for r in 0..m {
                    if let Some((t, to_upper)) = self.row_step(r, alpha[r], enter_dir) {
                        if t > cutoff {
                            continue;
                        }
                        let pick = if leave_row == usize::MAX {
                            true
                        } else if bland {
                            self.head[r] < self.head[leave_row]
                        } else {
                            alpha[r].abs() > best_size
                        };
                        if pick {
                            leave_row = r;
                            leave_to_upper = to_upper;
                            best_size = alpha[r].abs();
                        }
                    }
                }
            }
            let t_min = if leave_row == usize::MAX { flip_dist } else { row_min.max(0.0) };
            if !t_min.is_finite() {
                if phase_one {
                    return Err(Error::Numerical("unbounded phase-one direction".into()));
                }
                self.total_iterations += iter;
                return Ok(LpOutcome::Unbounded);
            }
            if t_min <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            // Update primal values.
            self.x[q] += enter_dir * t_min;
            if t_min != 0.0 {
                for r in 0..m {
                    if alpha[r] != 0.0 {
                        let j = self.head[r];
                        self.x[j] -= enter_dir * alpha[r] * t_min;
                    }
                }
            }
            if leave_row == usize::MAX {
                if enter_dir > 0.0 {
                    self.status[q] = Status::Upper;
                    self.x[q] = self.hi[q];
                } else {
                    self.status[q] = Status::Lower;
                    self.x[q] = self.lo[q];
                }
                continue;
            }
            let r = leave_row;
            let leaving = self.head[r];
            if leave_to_upper {
                self.status[leaving] = Status::Upper;
                self.x[leaving] = self.hi[leaving];
            } else {
                self.status[leaving] = Status::Lower;
                self.x[leaving] = self.lo[leaving];
            }
            self.status[q] = Status::Basic;
            self.head[r] = q;
            self.push_eta(&alpha, r);
            self.since_reinvert += 1;
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert();
            }
        }
    }

    fn extract(&self, y: &[f64], d: &[f64], iter: usize) -> LpSolution {
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = x.iter().zip(&self.cost[..self.n]).map(|(v, c)| v * c).sum();
        let row_activity = self.x[self.n..].to_vec();
        LpSolution {
            x,
            objective,
            duals: y.to_vec(),
            reduced_costs: d[..self.n].to_vec(),
            row_activity,
            iterations: iter,
        }
    }

    /// Total simplex iterations spent over the lifetime of this instance.
    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }
}

/// Solves `p` from a cold start.
pub fn solve_lp(p: &LinearProgram) -> Result<LpOutcome> {
    Simplex::new(p)?.solve()
}
