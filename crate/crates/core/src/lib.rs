//! Greedy geographic routing with reactive void deflection.
//!
//! Nodes forward packets greedily towards the destination position. A node
//! that has no unblocked neighbor closer to the destination marks itself
//! blocked, sends the packet back to its previous hop together with the
//! angular sectors it cannot serve, and floods that knowledge a few hops
//! around. The optimized variant additionally extrapolates a forbidden sector
//! from connected sets of blocked nodes so packets steer around voids before
//! reaching them.
//!
//! Modules, bottom-up:
//! - [`geometry`]: points, normalized angles, sector algebra.
//! - [`topology`]: unit disk graphs and proxi-graphs, k-hop and BFS queries,
//!   text serialization.
//! - [`routing`]: node state and the greedy / deflection / optimized policies.
//! - [`simulator`]: ideal-MAC packet engine and per-run metrics.
//! - [`experiment`]: evaluation matrix, confidence intervals, CSV output.

pub mod experiment;
pub mod geometry;
pub mod routing;
pub mod simulator;
pub mod topology;

pub use geometry::{Angle, Point, Sector};
pub use routing::{NodeState, Policy, RoutingConfig, RoutingDecision};
pub use simulator::{run_simulation, FlowOutcome, SimulationRun};
pub use topology::{NodeId, RngSeed, Topology};
