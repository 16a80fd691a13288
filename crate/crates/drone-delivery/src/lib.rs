//! Collaborative delivery of a single package on an undirected edge-weighted
//! graph by mobile agents whose movement is restricted to per-agent subgraphs.
//!
//! Each agent has an initial node, a speed, an energy consumption rate and a
//! node/edge range it may not leave. A schedule is a chain of trips, each
//! consisting of an empty approach and a carrying leg; the toolkit evaluates
//! schedules under two objectives (delivery time and total energy), solves the
//! multi-copy relaxation exactly, compacts multi-copy schedules into
//! single-copy ones with certified ratio bounds, solves trees and isometric
//! instances exactly, and generates hardness-gadget and random instances.
//!
//! Entry points:
//! - [`Instance::parse`] / [`Instance::to_json`] for the JSON interchange format,
//! - [`schedule::evaluate`] and [`schedule::check_feasible`] for schedules,
//! - [`ddt::solve_ddt_multi`] / [`ddt::compact_ddt`] for delivery time,
//! - [`ddc::solve_ddc_multi`] / [`ddc::compact_ddc`] for energy,
//! - [`isometric`] for the tree and isometric-range exact solvers,
//! - [`oracle`] for guarded brute-force ground truth,
//! - [`generators`] for gadget and random instances.

pub mod ddc;
pub mod ddt;
pub mod envelope;
pub mod generators;
pub mod instance;
pub mod isometric;
pub mod metric;
pub mod oracle;
pub mod schedule;

mod compact;

pub use instance::{Agent, AgentId, EdgeId, Handover, Instance, NodeId, Point};
pub use schedule::{Evaluation, FeasibilityReport, Schedule, Trip};

/// Which quantity a solver or oracle minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Time,
    Energy,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::Time => write!(f, "time"),
            Objective::Energy => write!(f, "energy"),
        }
    }
}

/// How many copies of each agent a schedule may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyMode {
    /// Arbitrarily many copies of each agent, every copy starting at the
    /// agent's initial position.
    Multi,
    /// Each agent exists once and appears in at most one trip.
    Single,
}

impl std::fmt::Display for CopyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CopyMode::Multi => write!(f, "multi"),
            CopyMode::Single => write!(f, "single"),
        }
    }
}
