use alloc::vec::Vec;

use super::{RankFunction, SourceSet};
use crate::error::{Error, Result};
use crate::linalg::principal_log_det;
use crate::math::{self, TWO_PI_E};

/// Cholesky pivots at or below this are treated as loss of definiteness.
pub(crate) const PD_TOL: f64 = 1e-12;

/// Ground-set size up to which [`SwRank`] tabulates every subset eagerly.
const TABULATE_UP_TO: usize = 16;

/// Jointly Gaussian sources quantized with a common step.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSourceModel {
    n: usize,
    covariance: Vec<f64>,
    delta: f64,
    log_det: f64,
}

impl GaussianSourceModel {
    /// `covariance` is row-major `n x n`; it must be symmetric positive
    /// definite.
    pub fn new(n: usize, covariance: Vec<f64>, delta: f64) -> Result<Self> {
        if covariance.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: covariance.len() });
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter("quantization step must be positive".into()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (covariance[i * n + j], covariance[j * n + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidParameter("covariance is not symmetric".into()));
                }
            }
        }
        let all: Vec<usize> = (0..n).collect();
        let log_det = principal_log_det(&covariance, n, &all, PD_TOL).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { n, covariance, delta, log_det })
    }

    pub fn num_sources(&self) -> usize {
        self.n
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `H(X_B | X_{B^c})` in nats.
    pub fn conditional_entropy(&self, set: SourceSet) -> Result<f64> {
        let size = set.len();
        if size == 0 {
            return Ok(0.0);
        }
        let rest: Vec<usize> = set.complement(self.n).iter().collect();
        let rest_log_det = principal_log_det(&self.covariance, self.n, &rest, PD_TOL).ok_or(Error::NotPositiveDefinite)?;
        let k = size as f64;
        Ok(0.5 * (k * math::ln(TWO_PI_E) + self.log_det - rest_log_det) - k * math::ln(self.delta))
    }

    /// Joint entropy `H(X_1, .., X_n)`.
    pub fn joint_entropy(&self) -> f64 {
        let k = self.n as f64;
        0.5 * (k * math::ln(TWO_PI_E) + self.log_det) - k * math::ln(self.delta)
    }

    /// Marginal entropy `H(X_i)`.
    pub fn marginal_entropy(&self, i: usize) -> f64 {
        0.5 * math::ln(TWO_PI_E * self.covariance[i * self.n + i]) - math::ln(self.delta)
    }
}

/// Conditional entropy `H(X_B | X_{B^c})` of the quantized Gaussian model.
pub fn sw_conditional_entropy(m: &GaussianSourceModel, set: SourceSet) -> Result<f64> {
    m.conditional_entropy(set)
}

/// The Slepian-Wolf rank function `B ↦ H(X_B | X_{B^c})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwRank {
    model: GaussianSourceModel,
    table: Option<Vec<f64>>,
}

impl SwRank {
    /// Builds the rank function; small ground sets are tabulated up front,
    /// which also checks every principal submatrix.
    pub fn new(model: GaussianSourceModel) -> Result<Self> {
        let table = if model.n <= TABULATE_UP_TO {
            let t = SourceSet::all_subsets(model.n)
                .map(|s| model.conditional_entropy(s))
                .collect::<Result<Vec<f64>>>()?;
            Some(t)
        } else {
            None
        };
        Ok(Self { model, table })
    }

    pub fn model(&self) -> &GaussianSourceModel {
        &self.model
    }
}

impl RankFunction for SwRank {
    fn ground_size(&self) -> usize {
        self.model.n
    }

    fn rank(&self, set: SourceSet) -> f64 {
        match &self.table {
            Some(t) => t[set.bits() as usize],
            // Principal submatrices of a PD matrix are PD.
            None => self.model.conditional_entropy(set).unwrap_or(f64::NAN),
        }
    }
}
