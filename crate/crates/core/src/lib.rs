//! Minimum-cost joint rate and flow allocation for distributed source coding
//! over capacitated directed acyclic networks.
//!
//! Three problems are covered, all solved by Lagrangian dual decomposition:
//!
//! * lossless Slepian-Wolf multicast with network coding ([`solvers::solve_sw`]),
//! * routing for the quadratic Gaussian CEO problem to a single sink
//!   ([`solvers::solve_ceo`]),
//! * network lifetime maximization under a distortion constraint
//!   ([`solvers::solve_lifetime`]).
//!
//! The rate regions involved have exponentially many constraints. The dual
//! decomposition separates a polynomial-size flow LP ([`lpcore`]) from a rate
//! subproblem that is solved in closed form by greedy allocation over a
//! contra-polymatroid ([`regions`]). The [`oracle`] module keeps the explicit
//! exponential formulations around as references for small instances.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod linalg;
mod math;

pub mod lpcore;
pub mod netmodel;
pub mod oracle;
pub mod regions;
pub mod scenario;
pub mod solvers;

pub use error::{Error, Result};
pub use netmodel::{AugmentedNetwork, Edge, FlowAssignment, Network, Node, SourceEntropies};
pub use regions::{CeoModel, GaussianSourceModel, RankFunction, RateVector, SourceSet};
