use alloc::vec::Vec;
use core::fmt;

/// Sense of a linear constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

/// One sparse constraint row `coeffs · x (<=|>=|=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// A minimization LP with bounded variables:
/// `min cᵀx  s.t.  rows,  lower <= x <= upper`.
///
/// Bounds may be infinite. Coefficients must be finite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Appends a row and returns its index. Zero coefficients are dropped and
    /// repeated variable indices are summed.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) -> usize {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, a) in coeffs {
            if let Some(slot) = merged.iter_mut().find(|(k, _)| *k == j) {
                slot.1 += a;
            } else {
                merged.push((j, a));
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Constraint { coeffs: merged, kind, rhs });
        self.rows.len() - 1
    }

    /// Checks dimensions and finiteness of the coefficients.
    pub fn is_well_formed(&self) -> bool {
        let n = self.num_vars();
        self.lower.len() == n
            && self.upper.len() == n
            && self.objective.iter().all(|c| c.is_finite())
            && self.lower.iter().zip(&self.upper).all(|(l, u)| !l.is_nan() && !u.is_nan() && *l != f64::INFINITY && *u != f64::NEG_INFINITY)
            && self.rows.iter().all(|r| {
                r.rhs.is_finite() && r.coeffs.iter().all(|&(j, a)| j < n && a.is_finite())
            })
    }

    /// Value of the objective at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let act: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.kind {
                RowKind::Le => act - row.rhs,
                RowKind::Ge => row.rhs - act,
                RowKind::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// Plain-text tableau dump, one row per line.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {} rows {}", self.num_vars(), self.num_rows())?;
        write!(f, "min")?;
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                write!(f, " {:+}*x{}", c, j)?;
            }
        }
        writeln!(f)?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(f, "r{}:", i)?;
            for &(j, a) in &row.coeffs {
                write!(f, " {:+}*x{}", a, j)?;
            }
            let op = match row.kind {
                RowKind::Le => "<=",
                RowKind::Ge => ">=",
                RowKind::Eq => "=",
            };
            writeln!(f, " {} {}", op, row.rhs)?;
        }
        for j in 0..self.num_vars() {
            writeln!(f, "{} <= x{} <= {}", self.lower[j], j, self.upper[j])?;
        }
        Ok(())
    }
}
