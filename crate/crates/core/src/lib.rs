//! Poissonian ensembles of Markov loops on the complete graph.
//!
//! The random walk on `K_n` with a self-loop at every vertex, killed at each
//! step with probability `ε/(ε+1)`, induces a loop measure `μ`. A Poisson
//! point process with intensity `Leb × μ` (the *loop soup*) defines an
//! increasing family of random graphs whose connected components coalesce
//! with multiple mergers: one loop of length `k` can join up to `k` clusters.
//!
//! The crate is organised as follows:
//!
//! * [`loop_measure`]: the measure `μ`, its closed-form masses and exact soup samplers.
//! * [`graph_process`]: the multi-merge union-find driven by a soup, plus the
//!   semigroup and transition-rate formulas of the partition-valued process.
//! * [`exploration`]: the component exploration walk and its dominating
//!   Galton-Watson coupling.
//! * [`gw_analytics`]: compound-Poisson-geometric offspring laws, total
//!   progeny, extinction, duality and large-deviation rates.
//! * [`coagulation`]: the multi-collision coagulation equations, their
//!   explicit solution and an RK4 solver for the truncated system.
//! * [`experiments`]: reproducible Monte Carlo experiments with CSV/JSON output.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coagulation;
pub mod error;
pub mod experiments;
pub mod exploration;
pub mod graph_process;
pub mod gw_analytics;
pub mod loop_measure;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use loop_measure::{Loop, LoopSoup, ModelParams};
