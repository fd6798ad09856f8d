//! Certification of a solution file against its instance.

use dscnet_core::netmodel::{induced_subgraph, min_cut_subset, validate_flow};
use dscnet_core::oracle::{full_ceo_reference, full_lifetime_reference, full_sw_lp, CEO_ORACLE_LIMIT, SW_ORACLE_LIMIT};
use dscnet_core::regions::{region_membership, CeoRank, EXHAUSTIVE_LIMIT};
use dscnet_core::{CeoModel, FlowAssignment, Network, RankFunction, SourceSet};
use serde::Serialize;

use crate::format::{Instance, Problem, Solution};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passes: bool,
    /// Largest residual found (positive values are violations).
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleGap {
    pub optimum: f64,
    pub value: f64,
    /// `(value - optimum) / |optimum|`.
    pub gap: f64,
    /// Grid spacing of the single-sink references.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub problem: Problem,
    pub passes: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleGap>,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub feasibility: f64,
    /// Largest relative oracle gap accepted.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { feasibility: 1e-6, gap: 1e-2 }
    }
}

fn subset_name(b: SourceSet) -> String {
    format!("{:?}", b.iter().collect::<Vec<_>>())
}

fn skipped(name: &'static str, why: String) -> Check {
    Check { name, passes: true, worst: 0.0, detail: format!("skipped: {why}") }
}

fn gap_check(oracle: &OracleGap, tol: f64) -> Check {
    Check {
        name: "oracle_gap",
        passes: oracle.gap <= tol && oracle.gap >= -tol,
        worst: oracle.gap,
        detail: format!("value {:.6} vs optimum {:.6}", oracle.value, oracle.optimum),
    }
}

fn finish(problem: Problem, checks: Vec<Check>, oracle: Option<OracleGap>) -> Report {
    let passes = checks.iter().all(|c| c.passes);
    Report { problem, passes, checks, oracle }
}

pub fn verify(inst: &Instance, sol: &Solution, tol: Tolerances) -> Result<Report, Error> {
    match sol.problem {
        Problem::Sw => verify_multicast(inst, sol, tol),
        Problem::Ceo | Problem::Lifetime => verify_single_sink(inst, sol, tol),
    }
}

fn verify_multicast(inst: &Instance, sol: &Solution, tol: Tolerances) -> Result<Report, Error> {
    let (g, rank) = inst.multicast()?;
    let ns = g.num_sources();
    let fa = FlowAssignment { z: sol.z.clone(), x: sol.x.clone(), rates: sol.rates.clone() };
    let mut checks = Vec::new();

    let fr = validate_flow(&fa, &g, tol.feasibility);
    let mut detail = format!(
        "capacity {:.2e}, coupling {:.2e}, balance {:.2e}, rate coupling {:.2e}",
        fr.capacity, fr.coupling, fr.balance, fr.rate_coupling
    );
    if let Some((k, v)) = fr.worst_balance.filter(|_| fr.balance > tol.feasibility) {
        detail += &format!("; worst balance at node {v} for terminal {}", g.terminals()[k]);
    }
    if let Some((k, i)) = fr.worst_rate.filter(|_| fr.rate_coupling > tol.feasibility) {
        detail += &format!("; rate of source {} exceeds its injection for terminal {}", g.sources()[i], g.terminals()[k]);
    }
    checks.push(Check { name: "flow", passes: fr.passes, worst: fr.max_violation(), detail });
    if !fr.passes && fr.max_violation().is_infinite() {
        return Ok(finish(Problem::Sw, checks, None));
    }

    if ns <= EXHAUSTIVE_LIMIT {
        let mut worst = (f64::NEG_INFINITY, 0, SourceSet::empty());
        for (k, rates) in sol.rates.iter().enumerate() {
            let m = region_membership(&rank, rates, tol.feasibility)?;
            if m.worst_violation > worst.0 {
                worst = (m.worst_violation, k, m.worst);
            }
        }
        checks.push(Check {
            name: "region",
            passes: worst.0 <= tol.feasibility,
            worst: worst.0,
            detail: format!("worst subset {} for terminal {}", subset_name(worst.2), g.terminals()[worst.1]),
        });
        // Every subset must fit under its cut in the subgraph the solution uses.
        let support: Vec<f64> = sol.z.iter().map(|v| v.max(0.0)).collect();
        let sub = induced_subgraph(&g, &support, 1e-12)?.base();
        let mut worst = (f64::NEG_INFINITY, 0, SourceSet::empty());
        for &t in g.terminals() {
            for b in SourceSet::nonempty_subsets(ns) {
                let v = rank.rank(b) - min_cut_subset(&sub, b, t)?;
                if v > worst.0 {
                    worst = (v, t, b);
                }
            }
        }
        checks.push(Check {
            name: "cut_certificate",
            passes: worst.0 <= tol.feasibility,
            worst: worst.0,
            detail: format!("tightest subset {} to terminal {}", subset_name(worst.2), worst.1),
        });
    } else {
        let why = format!("{ns} sources exceed the exhaustive limit {EXHAUSTIVE_LIMIT}");
        checks.push(skipped("region", why.clone()));
        checks.push(skipped("cut_certificate", why));
    }

    let cost: f64 = g.edges().iter().zip(&sol.z).map(|(e, z)| e.cost * z).sum();
    checks.push(Check {
        name: "reported_cost",
        passes: (cost - sol.cost).abs() <= 1e-6 * (1.0 + cost.abs()),
        worst: (cost - sol.cost).abs(),
        detail: format!("recomputed {cost:.6}, reported {:.6}", sol.cost),
    });

    let oracle = if ns <= SW_ORACLE_LIMIT {
        let opt = full_sw_lp(&g, &rank)?.cost;
        let o = OracleGap { optimum: opt, value: cost, gap: (cost - opt) / opt.abs().max(1e-12), resolution: None };
        checks.push(gap_check(&o, tol.gap));
        Some(o)
    } else {
        checks.push(skipped("oracle_gap", format!("{ns} sources exceed the oracle limit {SW_ORACLE_LIMIT}")));
        None
    };
    Ok(finish(Problem::Sw, checks, oracle))
}

/// Largest routing residual: bounds, relay balance, source outflow equal
/// to the rate, terminal inflow equal to the sum rate.
fn routing_check(net: &Network, x: &[f64], rates: &[f64], tol: f64) -> Check {
    let mut worst = (0.0f64, String::from("none"));
    let mut note = |v: f64, what: String| {
        if v > worst.0 {
            worst = (v, what);
        }
    };
    for (k, (e, &xe)) in net.edges().iter().zip(x).enumerate() {
        note(-xe, format!("edge {k} negative"));
        note(xe - e.capacity, format!("edge {k} over capacity"));
    }
    let div = net.divergence(x);
    let t = net.terminals()[0];
    for (v, d) in div.iter().enumerate() {
        let target = match net.source_index(v) {
            Some(i) => rates[i],
            None if v == t => -rates.iter().sum::<f64>(),
            None => 0.0,
        };
        note((d - target).abs(), format!("balance at node {v}"));
    }
    Check { name: "flow", passes: worst.0 <= tol, worst: worst.0, detail: format!("worst: {}", worst.1) }
}

fn region_check(m: &CeoModel, r: &[f64], rates: &[f64], tol: f64) -> Result<Vec<Check>, Error> {
    let n = m.num_sensors();
    let shortfall = -m.distortion_residual(r);
    let mut out = vec![Check {
        name: "distortion",
        passes: shortfall <= tol * (1.0 / m.distortion()),
        worst: shortfall,
        detail: format!("precision shortfall {shortfall:.2e} against 1/D = {:.4}", 1.0 / m.distortion()),
    }];
    if n <= EXHAUSTIVE_LIMIT {
        let mem = region_membership(&CeoRank { model: m, r }, rates, tol)?;
        out.push(Check {
            name: "region",
            passes: mem.member,
            worst: mem.worst_violation,
            detail: format!("worst subset {}", subset_name(mem.worst)),
        });
    } else {
        out.push(skipped("region", format!("{n} sources exceed the exhaustive limit {EXHAUSTIVE_LIMIT}")));
    }
    Ok(out)
}

fn verify_single_sink(inst: &Instance, sol: &Solution, tol: Tolerances) -> Result<Report, Error> {
    let net = inst.network()?;
    let m = inst.ceo()?;
    if net.terminals().len() != 1 {
        return Err(Error::Input("single-sink problems need exactly one terminal".into()));
    }
    let ns = net.sources().len();
    let (x, rates) = match (sol.x.as_slice(), sol.rates.as_slice()) {
        ([x], [r]) if x.len() == net.num_edges() && r.len() == ns => (x, r),
        _ => return Err(Error::Input("solution dimensions do not match the instance".into())),
    };
    let r = sol.r.as_ref().ok_or_else(|| Error::Input("solution has no auxiliary vector r".into()))?;
    if r.len() != ns {
        return Err(Error::Input("auxiliary vector length does not match the sources".into()));
    }
    let mut checks = vec![routing_check(&net, x, rates, tol.feasibility)];
    checks.extend(region_check(&m, r, rates, tol.feasibility)?);

    let oracle = if sol.problem == Problem::Lifetime {
        let spec = sol.energy.ok_or_else(|| Error::Input("lifetime solution has no energy block".into()))?;
        let e = spec.params(&net)?;
        let gamma = sol.gamma.ok_or_else(|| Error::Input("lifetime solution has no gamma".into()))?;
        let mut worst = (f64::NEG_INFINITY, 0);
        for v in 0..net.num_nodes() {
            let sense = net.source_index(v).map_or(0.0, |i| e.p_sense[i] * rates[i]);
            let excess = e.radio_load(&net, x, v) + sense - e.energy[v] * gamma;
            if excess > worst.0 {
                worst = (excess, v);
            }
        }
        checks.push(Check {
            name: "energy",
            passes: worst.0 <= tol.feasibility,
            worst: worst.0,
            detail: format!("tightest battery at node {}", worst.1),
        });
        if ns <= CEO_ORACLE_LIMIT {
            let reference = full_lifetime_reference(&net, &m, &e)?;
            Some(OracleGap {
                optimum: reference.value,
                value: gamma,
                gap: (gamma - reference.value) / reference.value.abs().max(1e-12),
                resolution: Some(reference.resolution),
            })
        } else {
            None
        }
    } else {
        let cost: f64 = net.edges().iter().zip(x).map(|(e, v)| e.cost * v).sum();
        checks.push(Check {
            name: "reported_cost",
            passes: (cost - sol.cost).abs() <= 1e-6 * (1.0 + cost.abs()),
            worst: (cost - sol.cost).abs(),
            detail: format!("recomputed {cost:.6}, reported {:.6}", sol.cost),
        });
        if ns <= CEO_ORACLE_LIMIT {
            let reference = full_ceo_reference(&net, &m)?;
            Some(OracleGap {
                optimum: reference.value,
                value: cost,
                gap: (cost - reference.value) / reference.value.abs().max(1e-12),
                resolution: Some(reference.resolution),
            })
        } else {
            None
        }
    };
    match &oracle {
        Some(o) => checks.push(gap_check(o, tol.gap)),
        None => checks.push(skipped("oracle_gap", format!("{ns} sources exceed the oracle limit {CEO_ORACLE_LIMIT}"))),
    }
    Ok(finish(sol.problem, checks, oracle))
}
