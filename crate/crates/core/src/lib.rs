//! Event-driven simulation and analysis toolkit for (generalized) activated
//! random walks on finite stand-ins for infinite transitive graphs.
//!
//! The crate is organized around six pieces:
//!
//! - [`graph`]: finite topologies (cycles, tori, tree balls, complete
//!   graphs) with periodic or absorbing boundaries and an explicit
//!   translation group on the periodic ones;
//! - [`paths`]: lazily sampled putative paths in inner time;
//! - [`engine`]: the exact continuous-time event loop — rate-modulated
//!   traversal of putative paths, sleep at rate λ when alone, wake on
//!   arrival;
//! - [`lab`]: Monte Carlo sweeps, fixation diagnostics and critical-density
//!   estimation over the engine;
//! - [`ctmc`]: an exact absorption-time solver for tiny systems, used as an
//!   independent oracle against the engine;
//! - [`gadget`]: candidate/mark statistics and mass-transport balance
//!   checks on vertex-transitive graphs.

pub mod ctmc;
pub mod engine;
pub mod gadget;
pub mod graph;
pub mod lab;
pub mod paths;
pub mod seed;
pub mod stats;

pub use engine::{
    init_system, EngineError, EventEffect, EventKind, ExecutedEvent, InitialLaw, InteractionRule,
    LocalView, Mode, ParticleId, ParticleRecord, RunReport, SiteView, StopReason, StopRule,
    SystemState,
};
pub use graph::{build_topology, Boundary, FiniteGraph, GraphError, Topology, TopologyDescriptor, VertexId};
pub use paths::{check_invariance, InvarianceReport, PathDistribution, PathError, PathStep, PutativePath};
pub use seed::SeedStream;
