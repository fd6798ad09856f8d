//! On-disk formats: instances (network plus source model), solutions and
//! convergence traces.

use std::fs;
use std::io::Write;
use std::path::Path;

use dscnet_core::lpcore::EnergyParams;
use dscnet_core::netmodel::build_augmented;
use dscnet_core::regions::SwRank;
use dscnet_core::scenario::{gaussian_model, model_entropies};
use dscnet_core::solvers::{ConvergenceTrace, SolveStatus, TraceRow};
use dscnet_core::{AugmentedNetwork, CeoModel, Edge, GaussianSourceModel, Network, Node};
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
    pub cost: f64,
}

/// Source model block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ModelSpec {
    /// Covariance `σ² exp(-c d^β)` over the source coordinates.
    #[serde(rename = "gaussian-sw")]
    GaussianSw { sigma2: f64, c: f64, beta: f64, delta: f64 },
    /// Explicit source covariance, row by row.
    #[serde(rename = "gaussian-covariance")]
    GaussianCovariance { covariance: Vec<Vec<f64>>, delta: f64 },
    #[serde(rename = "ceo")]
    Ceo {
        sigma_x2: f64,
        sigma_i2: Vec<f64>,
        #[serde(rename = "D")]
        distortion: f64,
    },
}

impl ModelSpec {
    pub fn default_sw() -> Self {
        ModelSpec::GaussianSw { sigma2: 1.0, c: 1.0, beta: 1.0, delta: 0.01 }
    }

    pub fn default_ceo(n: usize) -> Self {
        ModelSpec::Ceo { sigma_x2: 0.01, sigma_i2: vec![0.005; n], distortion: 0.003 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub sources: Vec<usize>,
    pub terminals: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
}

impl Instance {
    pub fn from_network(net: &Network, model: Option<ModelSpec>) -> Self {
        let nodes = net
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, n)| NodeSpec { id, x: n.position.map(|p| p[0]), y: n.position.map(|p| p[1]) })
            .collect();
        let edges = net
            .edges()
            .iter()
            .map(|e| EdgeSpec { tail: e.tail, head: e.head, capacity: e.capacity, cost: e.cost })
            .collect();
        Self { nodes, edges, sources: net.sources().to_vec(), terminals: net.terminals().to_vec(), model }
    }

    pub fn network(&self) -> Result<Network, Error> {
        let mut nodes = vec![Node { position: None }; self.nodes.len()];
        for (k, n) in self.nodes.iter().enumerate() {
            if n.id != k {
                return Err(Error::Input(format!("node ids must be 0..n in order, found {} at position {k}", n.id)));
            }
            nodes[k].position = match (n.x, n.y) {
                (Some(x), Some(y)) => Some([x, y]),
                (None, None) => None,
                _ => return Err(Error::Input(format!("node {k} has only one coordinate"))),
            };
        }
        let edges = self.edges.iter().map(|e| Edge::new(e.tail, e.head, e.capacity, e.cost)).collect();
        Ok(Network::new(nodes, edges, self.sources.clone(), self.terminals.clone())?)
    }

    fn model(&self) -> Result<&ModelSpec, Error> {
        self.model.as_ref().ok_or_else(|| Error::Input("instance has no model block".into()))
    }

    /// Gaussian model for the multicast problem.
    pub fn gaussian(&self, net: &Network) -> Result<GaussianSourceModel, Error> {
        match self.model()? {
            ModelSpec::GaussianSw { sigma2, c, beta, delta } => Ok(gaussian_model(net, *sigma2, *c, *beta, *delta)?),
            ModelSpec::GaussianCovariance { covariance, delta } => {
                let n = covariance.len();
                if covariance.iter().any(|row| row.len() != n) {
                    return Err(Error::Input("covariance must be square".into()));
                }
                Ok(GaussianSourceModel::new(n, covariance.concat(), *delta)?)
            }
            ModelSpec::Ceo { .. } => Err(Error::Input("multicast needs a gaussian model, found ceo".into())),
        }
    }

    /// Augmented graph and rank function of the multicast problem.
    pub fn multicast(&self) -> Result<(AugmentedNetwork, SwRank), Error> {
        let net = self.network()?;
        let model = self.gaussian(&net)?;
        let g = build_augmented(&net, &model_entropies(&model)?)?;
        Ok((g, SwRank::new(model)?))
    }

    pub fn ceo(&self) -> Result<CeoModel, Error> {
        match self.model()? {
            ModelSpec::Ceo { sigma_x2, sigma_i2, distortion } => Ok(CeoModel::new(*sigma_x2, sigma_i2.clone(), *distortion)?),
            _ => Err(Error::Input("single-sink problems need a ceo model".into())),
        }
    }
}

/// Uniform battery and power figures of the lifetime problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    pub energy: f64,
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_sense: f64,
}

impl EnergySpec {
    pub fn params(&self, net: &Network) -> Result<EnergyParams, Error> {
        Ok(EnergyParams::uniform(net, self.energy, self.p_tx, self.p_rx, self.p_sense)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Sw,
    Ceo,
    Lifetime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    IterationCap,
}

impl From<SolveStatus> for Status {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Converged => Status::Converged,
            SolveStatus::IterationCap => Status::IterationCap,
        }
    }
}

/// Solver output. For the multicast problem `z`, `x` and `rates` are over
/// the augmented graph: the instance edges in order, then one virtual edge
/// per source. For the single-sink problems `x` and `rates` hold one entry
/// and `z` equals `x[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub problem: Problem,
    pub status: Status,
    pub iterations: usize,
    pub cost: f64,
    pub dual_bound: f64,
    pub infeasibility: f64,
    pub z: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub rates: Vec<Vec<f64>>,
    /// Auxiliary vector of the CEO region.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySpec>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Writes pretty JSON to `path`, or to stdout when `path` is `None`.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Error::Io(p.display().to_string(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| Error::Io("stdout".into(), e))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TraceRecord {
    iter: usize,
    dual_value: f64,
    primal_cost: f64,
    /// Empty during the burn-in, when there is no average yet.
    avg_primal_cost: Option<f64>,
    max_infeasibility: Option<f64>,
    step: f64,
}

fn cell(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

pub fn write_trace(trace: &ConvergenceTrace, path: &Path) -> Result<(), Error> {
    let csv_err = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in &trace.rows {
        let rec = TraceRecord {
            iter: r.iter,
            dual_value: r.dual_value,
            primal_cost: r.primal_cost,
            avg_primal_cost: cell(r.avg_primal_cost),
            max_infeasibility: cell(r.max_infeasibility),
            step: r.step,
        };
        w.serialize(rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io(path.display().to_string(), e))
}

pub fn read_trace(path: &Path) -> Result<ConvergenceTrace, Error> {
    let csv_err = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut trace = ConvergenceTrace::default();
    for rec in r.deserialize() {
        let t: TraceRecord = rec.map_err(csv_err)?;
        trace.push(TraceRow {
            iter: t.iter,
            dual_value: t.dual_value,
            primal_cost: t.primal_cost,
            avg_primal_cost: t.avg_primal_cost.unwrap_or(f64::NAN),
            max_infeasibility: t.max_infeasibility.unwrap_or(f64::NAN),
            step: t.step,
        });
    }
    Ok(trace)
}
