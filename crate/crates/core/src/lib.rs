//! MANET virtual-backbone simulator.
//!
//! Builds connected dominating sets (CDS) over unit-disk graphs with an
//! energy/velocity-aware multipoint-relay construction plus four baseline
//! algorithms, and runs route discovery and CBR traffic over the backbone
//! to measure CDS size, backbone lifetime, route-request overhead and
//! packet delivery ratio.
//!
//! Modules:
//! - [`netgraph`]: unit-disk graphs, neighbor tables, set predicates, an
//!   exact minimum-CDS search for small instances.
//! - [`backbone`]: MPR selection, marking, priority pruning rules, and the
//!   baseline CDS algorithms.
//! - [`mobility`]: random-waypoint motion.
//! - [`energy`]: per-node energy ledger (tx/rx/idle power).
//! - [`sim`]: the per-run simulation loop (hello protocol, backbone
//!   recomputation, route discovery, CBR traffic).
//! - [`scenario`]: config parsing, the scenario matrix runner, CSV output
//!   and aggregation.

pub mod backbone;
pub mod energy;
pub mod fixtures;
pub mod mobility;
pub mod netgraph;
pub mod scenario;
pub mod sim;

pub use backbone::{Algorithm, BackboneResult};
pub use netgraph::{NodeId, UdgSnapshot};
pub use scenario::ScenarioConfig;
pub use sim::{MetricsRecord, RouteMode};
