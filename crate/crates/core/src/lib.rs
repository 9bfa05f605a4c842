//! Simulator and analytics for a focus-mediated tie formation process.
//!
//! A population of N vertices occupies M transient foci. Non-adjacent
//! vertices sharing a focus form ties at a constant hazard, existing ties
//! dissolve at a constant hazard, and vertices migrate between foci at a
//! constant hazard. The crate provides:
//!
//! - [`graph_state`]: the joint graph/focus state with O(1)-amortized
//!   bookkeeping for all rate calculations;
//! - [`ctmc_sim`]: exact event-driven simulation of the process;
//! - [`analytic`]: the closed-form equilibrium theory (fast- and
//!   slow-migration mean degrees, co-residence moments, the sparse
//!   reference-model decomposition, saturation bounds, spatial variants);
//! - [`static_samplers`]: Bernoulli, sparse-reference, and degree-capped
//!   Metropolis samplers;
//! - [`graph_stats`]: per-graph observables and dependence diagnostics;
//! - [`experiments`]: factorial replication studies with figure-ready
//!   output;
//! - [`cli`]: the `contactnet` command-line entry point.

pub mod analytic;
pub mod cli;
pub mod ctmc_sim;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod graph_state;
pub mod graph_stats;
pub mod rng;
pub mod static_samplers;

pub use analytic::{PopulationParams, RateParams, SpatialParams};
pub use ctmc_sim::{SimConfig, Trajectory};
pub use error::{Error, Result};
pub use experiments::ExperimentDesign;
pub use graph::SimpleGraph;
pub use graph_state::DynamicState;
pub use graph_stats::GraphSummary;
