//! Simulation and analysis of swarming-based asynchronous stochastic gradient
//! descent.
//!
//! `N` threads each run a single-sample SGD iteration perturbed by a linear
//! attraction toward their neighbours in an undirected interaction graph.
//! Gradient samples take an exponentially distributed amount of time to
//! produce, so the threads update asynchronously. The crate simulates that
//! scheme on a virtual clock next to a synchronized batch baseline (one step
//! per `N` samples, waiting for the slowest one), and evaluates the closed-form
//! error bounds that govern both.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`topology`] | thread graphs, Laplacian, algebraic connectivity |
//! | [`objective`] | objectives, exact gradients, stochastic oracles |
//! | [`engine`] | event-driven swarm and centralized simulators |
//! | [`metrics`] | trajectory statistics and runtime inequality checks |
//! | [`theory`] | step-size conditions, error bounds, speedup ratio |
//!
//! ```
//! use swarmsgd::engine::{run_swarm, Horizon, RunConfig};
//! use swarmsgd::objective::ObjectiveSpec;
//! use swarmsgd::positions::Positions;
//! use swarmsgd::topology::complete_graph;
//!
//! # fn main() -> swarmsgd::Result<()> {
//! let spec = ObjectiveSpec::ridge(0.1, vec![0.2, 0.8])?;
//! let graph = complete_graph(10)?;
//! let cfg = RunConfig { n_threads: 10, horizon: Horizon::MaxUpdates(20_000), ..RunConfig::default() };
//! let trace = run_swarm(&cfg, &graph, &spec, Positions::zeros(10, 2))?;
//! assert!(trace.to_csv().starts_with("k,t,U"));
//! # Ok(())
//! # }
//! ```

pub mod engine;
pub mod error;
pub mod metrics;
pub mod objective;
pub mod positions;
pub mod rng;
pub mod theory;
pub mod topology;

pub use engine::{RunConfig, Scheme, Trace, TraceRecord, TraceSummary};
pub use error::{Error, Result};
pub use objective::{GradientSample, ObjectiveSpec, Regularity};
pub use positions::Positions;
pub use topology::Graph;
