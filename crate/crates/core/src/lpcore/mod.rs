//! Linear programming: a bounded-variable revised simplex and the flow
//! subproblems of the three dual decompositions built on it.

mod flows;
mod lifetime;
mod program;
mod simplex;

pub use flows::{
    ceo_flow_program, ceo_flow_subproblem, project_onto_floor, sw_flow_program, sw_flow_subproblem, CeoFlowSolution,
    CeoFlowSubproblem, SwFlowSolution, SwFlowSubproblem,
};
pub use lifetime::{lifetime_flow_subproblem, EnergyParams, LifetimeFlowSolution, LifetimeFlowSubproblem};
pub use program::{Constraint, LinearProgram, RowKind};
pub use simplex::{solve_lp, LpOutcome, LpSolution, Simplex};

/// Default lower bound on dual variables.
pub const DEFAULT_DUAL_FLOOR: f64 = 1e-10;
