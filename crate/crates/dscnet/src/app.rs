//! Command-line interface. Every default is the experimental setup of the
//! multicast, CEO and lifetime studies, so bare commands reproduce them.

use std::f64::consts::LN_2;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dscnet_core::netmodel::{check_feasibility, min_cut_subset};
use dscnet_core::regions::{ceo_min_linear, EXHAUSTIVE_LIMIT};
use dscnet_core::scenario::{
    generate_feasible_multicast, generate_feasible_single_sink, generate_geometric_network, single_sink_routable,
    CorrelationParams, GeometricConfig, RoleAssignment,
};
use dscnet_core::solvers::{solve_ceo, solve_lifetime, solve_sw, BundleParams, ConvergenceTrace, SolverConfig, StepSchedule};
use dscnet_core::{CeoModel, Network, SourceSet};

use crate::format::{read_json, write_json, write_trace, EnergySpec, Instance, ModelSpec, Problem, Solution, Status};
use crate::verify::{verify, Tolerances};
use crate::Error;

/// Seeds tried by `generate --ensure-feasible`.
pub const FEASIBLE_TRIES: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "dscnet", version, about = "Minimum-cost rate and flow allocation for distributed source coding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random geometric instance with a source model.
    Generate(GenerateArgs),
    /// Run one of the dual solvers on an instance.
    Solve(SolveArgs),
    /// Check a solution against its instance and the brute-force references.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Multicast instance with the Gaussian correlation model.
    Sw,
    /// Single-sink instance with the CEO model.
    Ceo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Roles {
    /// Leftmost nodes are sources, rightmost are terminals.
    Extremes,
    Random,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub nodes: usize,
    #[arg(long, default_value_t = 10)]
    pub sources: usize,
    /// Defaults to 3 for `sw` and 1 for `ceo`.
    #[arg(long)]
    pub terminals: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModelKind::Sw)]
    pub model: ModelKind,
    #[arg(long, value_enum, default_value_t = Roles::Extremes)]
    pub roles: Roles,
    /// Capacity of the short edges; defaults to 40 for `sw` and 22 for `ceo`.
    #[arg(long)]
    pub near_capacity: Option<f64>,
    /// Capacity of the long edges; defaults to 20 for `sw` and 11 for `ceo`.
    #[arg(long)]
    pub far_capacity: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma_x2: f64,
    #[arg(long, default_value_t = 0.005)]
    pub sigma_i2: f64,
    #[arg(long, default_value_t = 0.003)]
    pub distortion: f64,
    /// Resample (up to 100 consecutive seeds) until the instance is servable.
    #[arg(long)]
    pub ensure_feasible: bool,
    /// Instance file; stdout if omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Sw,
    Ceo,
    Lifetime,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(value_enum)]
    pub problem: ProblemArg,
    #[arg(long, short)]
    pub instance: PathBuf,
    /// Solution file; stdout if omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Step numerator: `a/k^alpha` for `sw`, `a/(b + c k)` for `ceo`.
    #[arg(long, alias = "step")]
    pub step_a: Option<f64>,
    #[arg(long)]
    pub step_b: Option<f64>,
    #[arg(long)]
    pub step_c: Option<f64>,
    #[arg(long)]
    pub step_alpha: Option<f64>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Relative settling tolerance of the averaged cost.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub feas_tol: Option<f64>,
    #[arg(long)]
    pub dual_floor: Option<f64>,
    /// Serious-step fraction of the bundle method.
    #[arg(long)]
    pub bundle_m: Option<f64>,
    /// Relative stopping threshold on the bundle's predicted ascent.
    #[arg(long)]
    pub bundle_delta: Option<f64>,
    #[arg(long, default_value_t = 200.0)]
    pub energy: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_tx: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_rx: f64,
    #[arg(long, default_value_t = 0.001)]
    pub p_sense: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, short)]
    pub instance: PathBuf,
    #[arg(long, short)]
    pub solution: PathBuf,
    /// Report file; stdout if omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Largest relative gap to the reference optimum.
    #[arg(long, default_value_t = 1e-2)]
    pub gap_tol: f64,
}

/// Parses the process arguments, runs the command and returns the exit
/// code: 0 converged, 1 infeasible, 2 usage, 3 iteration cap.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DSCNET_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32, Error> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn generate(a: &GenerateArgs) -> Result<i32, Error> {
    let ceo = a.model == ModelKind::Ceo;
    let base = if ceo { GeometricConfig::single_sink(a.seed) } else { GeometricConfig::multicast(a.seed) };
    let cfg = GeometricConfig {
        nodes: a.nodes,
        sources: a.sources,
        terminals: a.terminals.unwrap_or(base.terminals),
        near_capacity: a.near_capacity.unwrap_or(base.near_capacity),
        far_capacity: a.far_capacity.unwrap_or(base.far_capacity),
        roles: match a.roles {
            Roles::Extremes => RoleAssignment::Extremes,
            Roles::Random => RoleAssignment::Random,
        },
        ..base
    };
    let (net, model) = if ceo {
        if cfg.terminals != 1 {
            return Err(Error::Input("the ceo model needs exactly one terminal".into()));
        }
        let spec = ModelSpec::Ceo { sigma_x2: a.sigma_x2, sigma_i2: vec![a.sigma_i2; a.sources], distortion: a.distortion };
        let m = CeoModel::new(a.sigma_x2, vec![a.sigma_i2; a.sources], a.distortion)?;
        let net = if a.ensure_feasible {
            let (net, seed) = generate_feasible_single_sink(&cfg, &m, FEASIBLE_TRIES).map_err(|e| no_feasible_seed(e, a.seed))?;
            log::info!("seed {seed} gives a routable instance");
            net
        } else {
            let net = generate_geometric_network(&cfg)?;
            if !single_sink_routable(&net, &m)? {
                log::warn!("the minimum sum-rate vertex does not fit the cuts of seed {}; the instance may be infeasible", a.seed);
            }
            net
        };
        (net, spec)
    } else {
        let params = CorrelationParams { sigma2: a.sigma2, c: a.c, beta: a.beta, delta: a.delta };
        let spec = ModelSpec::GaussianSw { sigma2: a.sigma2, c: a.c, beta: a.beta, delta: a.delta };
        let net = if a.ensure_feasible {
            let (net, seed) = generate_feasible_multicast(&cfg, &params, FEASIBLE_TRIES).map_err(|e| no_feasible_seed(e, a.seed))?;
            log::info!("seed {seed} gives a feasible instance");
            net
        } else {
            let net = generate_geometric_network(&cfg)?;
            let inst = Instance::from_network(&net, Some(spec.clone()));
            if net.sources().len() <= EXHAUSTIVE_LIMIT {
                let (_, rank) = inst.multicast()?;
                if let Some(w) = check_feasibility(&net, &rank)?.witness() {
                    log::warn!(
                        "infeasible instance: terminal {} cannot receive subset {:?} (short by {:.4} nats)",
                        w.terminal,
                        w.worst_subset.iter().collect::<Vec<_>>(),
                        w.worst_gap
                    );
                }
            }
            net
        };
        (net, spec)
    };
    write_json(&Instance::from_network(&net, Some(model)), a.output.as_deref())?;
    Ok(0)
}

fn no_feasible_seed(e: dscnet_core::Error, seed: u64) -> Error {
    match e {
        dscnet_core::Error::Infeasible => Error::Infeasible(format!(
            "no servable instance among seeds {seed}..{}",
            seed + FEASIBLE_TRIES as u64 - 1
        )),
        other => Error::Core(other),
    }
}

fn config(a: &SolveArgs) -> SolverConfig {
    let mut cfg = match a.problem {
        ProblemArg::Sw => SolverConfig::sw(),
        ProblemArg::Ceo => SolverConfig::ceo(),
        ProblemArg::Lifetime => SolverConfig::lifetime(),
    };
    cfg.step = match cfg.step {
        StepSchedule::Power { a: sa, alpha } => {
            if a.step_b.is_some() || a.step_c.is_some() {
                StepSchedule::Harmonic { a: a.step_a.unwrap_or(sa), b: a.step_b.unwrap_or(1.0), c: a.step_c.unwrap_or(1.0) }
            } else {
                StepSchedule::Power { a: a.step_a.unwrap_or(sa), alpha: a.step_alpha.unwrap_or(alpha) }
            }
        }
        StepSchedule::Harmonic { a: sa, b, c } => match a.step_alpha {
            Some(alpha) => StepSchedule::Power { a: a.step_a.unwrap_or(sa), alpha },
            None => StepSchedule::Harmonic { a: a.step_a.unwrap_or(sa), b: a.step_b.unwrap_or(b), c: a.step_c.unwrap_or(c) },
        },
    };
    cfg.burn_in = a.burnin.unwrap_or(cfg.burn_in);
    cfg.max_iters = a.max_iters.unwrap_or(cfg.max_iters);
    cfg.tol = a.tol.unwrap_or(cfg.tol);
    cfg.feas_tol = a.feas_tol.unwrap_or(cfg.feas_tol);
    cfg.dual_floor = a.dual_floor.unwrap_or(cfg.dual_floor);
    cfg.initial_dual = cfg.initial_dual.max(cfg.dual_floor);
    cfg.bundle = BundleParams {
        m: a.bundle_m.unwrap_or(cfg.bundle.m),
        delta_bar: a.bundle_delta.unwrap_or(cfg.bundle.delta_bar),
        ..cfg.bundle
    };
    cfg
}

/// Subset whose equal-weight minimum sum rate exceeds its cut the most.
fn single_sink_witness(net: &Network, m: &CeoModel) -> Result<String, Error> {
    let ns = net.sources().len();
    let t = net.terminals()[0];
    let sol = ceo_min_linear(m, &vec![1.0; ns])?.optimal().ok_or(dscnet_core::Error::Unbounded)?;
    let mut worst = (f64::NEG_INFINITY, SourceSet::empty());
    for b in SourceSet::nonempty_subsets(ns.min(EXHAUSTIVE_LIMIT)) {
        let gap = b.sum(&sol.rates) - min_cut_subset(net, b, t)?;
        if gap > worst.0 {
            worst = (gap, b);
        }
    }
    Ok(format!(
        "sources {:?} need {:.4} nats more than their cut to terminal {t}",
        worst.1.iter().map(|i| net.sources()[i]).collect::<Vec<_>>(),
        worst.0
    ))
}

fn summary(to_stdout: bool, line: String) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn finish(a: &SolveArgs, sol: Solution, trace: &ConvergenceTrace) -> Result<i32, Error> {
    if let Some(p) = &a.trace {
        write_trace(trace, p)?;
    }
    let sum_rate: f64 = sol.rates.first().map_or(0.0, |r| r.iter().sum());
    let loud = a.output.is_some();
    summary(
        loud,
        format!(
            "{:?} after {} iterations: cost {:.6}, dual bound {:.6}, infeasibility {:.2e}, sum rate {:.4} nats ({:.4} bits)",
            sol.status,
            sol.iterations,
            sol.cost,
            sol.dual_bound,
            sol.infeasibility,
            sum_rate,
            sum_rate / LN_2
        ),
    );
    if let (Some(g), Some(l)) = (sol.gamma, sol.lifetime) {
        summary(loud, format!("gamma {g:.6e}, lifetime {l:.6}"));
    }
    write_json(&sol, a.output.as_deref())?;
    Ok(match sol.status {
        Status::Converged => 0,
        Status::IterationCap => 3,
    })
}

fn solve(a: &SolveArgs) -> Result<i32, Error> {
    let inst: Instance = read_json(&a.instance)?;
    let cfg = config(a);
    cfg.validate()?;
    match a.problem {
        ProblemArg::Sw => {
            let net = inst.network()?;
            let (g, rank) = inst.multicast()?;
            if net.sources().len() <= EXHAUSTIVE_LIMIT {
                if let Some(w) = check_feasibility(&net, &rank)?.witness() {
                    return Err(Error::Infeasible(format!(
                        "terminal {} cannot receive sources {:?}: rank exceeds the min cut by {:.4} nats",
                        w.terminal,
                        w.worst_subset.iter().map(|i| net.sources()[i]).collect::<Vec<_>>(),
                        w.worst_gap
                    )));
                }
            }
            let s = solve_sw(&g, &rank, &cfg)?;
            let sol = Solution {
                problem: Problem::Sw,
                status: s.status.into(),
                iterations: s.iterations,
                cost: s.cost,
                dual_bound: s.dual_bound,
                infeasibility: s.infeasibility,
                z: s.flow.z,
                x: s.flow.x,
                rates: s.flow.rates,
                r: None,
                gamma: None,
                lifetime: None,
                energy: None,
            };
            finish(a, sol, &s.trace)
        }
        ProblemArg::Ceo | ProblemArg::Lifetime => {
            let net = inst.network()?;
            let m = inst.ceo()?;
            if !m.is_achievable() {
                return Err(Error::Infeasible("the distortion target is below what all sensors together reach".into()));
            }
            let routable = single_sink_routable(&net, &m)?;
            if !routable {
                log::warn!("routability is not certified up front: {}", single_sink_witness(&net, &m)?);
            }
            let (sol, trace) = if a.problem == ProblemArg::Ceo {
                let s = solve_ceo(&net, &m, &cfg)?;
                let sol = Solution {
                    problem: Problem::Ceo,
                    status: s.status.into(),
                    iterations: s.iterations,
                    cost: s.cost,
                    dual_bound: s.dual_bound,
                    infeasibility: s.infeasibility,
                    z: s.primal.x.clone(),
                    x: vec![s.primal.x],
                    rates: vec![s.primal.rates],
                    r: Some(s.primal.r),
                    gamma: None,
                    lifetime: None,
                    energy: None,
                };
                (sol, s.trace)
            } else {
                let spec = EnergySpec { energy: a.energy, p_tx: a.p_tx, p_rx: a.p_rx, p_sense: a.p_sense };
                let s = solve_lifetime(&net, &m, &spec.params(&net)?, &cfg)?;
                let sol = Solution {
                    problem: Problem::Lifetime,
                    status: s.status.into(),
                    iterations: s.iterations,
                    cost: s.gamma * s.gamma,
                    dual_bound: s.dual_bound,
                    infeasibility: s.infeasibility,
                    z: s.primal.x.clone(),
                    x: vec![s.primal.x],
                    rates: vec![s.primal.rates],
                    r: Some(s.primal.r),
                    gamma: Some(s.gamma),
                    lifetime: Some(s.lifetime),
                    energy: Some(spec),
                };
                (sol, s.trace)
            };
            if sol.infeasibility > cfg.feas_tol && !routable {
                return Err(Error::Infeasible(single_sink_witness(&net, &m)?));
            }
            finish(a, sol, &trace)
        }
    }
}

fn verify_cmd(a: &VerifyArgs) -> Result<i32, Error> {
    let inst: Instance = read_json(&a.instance)?;
    let sol: Solution = read_json(&a.solution)?;
    let report = verify(&inst, &sol, Tolerances { feasibility: a.tol, gap: a.gap_tol })?;
    for c in report.checks.iter().filter(|c| !c.passes) {
        log::warn!("{} failed: {}", c.name, c.detail);
    }
    write_json(&report, a.output.as_deref())?;
    Ok(0)
}

