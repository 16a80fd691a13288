//! Shared schedule-rewriting step: repeatedly merge the first multiply-used
//! agent's trips into one trip from its first pickup to its last dropoff
//! along a shortest in-range route, deleting the trips in between.

use thiserror::Error;

use crate::instance::Instance;
use crate::schedule::{EvalError, Schedule, Trip};

#[derive(Debug, Error)]
pub enum CompactError {
    #[error("agent {0} has no in-range route between its merged pickup and dropoff")]
    NoRoute(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Rewrite until every agent appears in at most one trip. Returns the new
/// schedule and the number of merge steps performed.
pub(crate) fn merge_repeated_agents(inst: &Instance, sched: &Schedule) -> Result<(Schedule, usize), CompactError> {
    let mut trips = sched.trips.clone();
    let mut merges = 0;
    loop {
        let mut found: Option<(usize, usize)> = None;
        'scan: for i in 0..trips.len() {
            for j in (i + 1..trips.len()).rev() {
                if trips[j].agent == trips[i].agent {
                    found = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((i, j)) = found else { break };
        let agent = trips[i].agent;
        let pickup = trips[i].pickup();
        let dropoff = trips[j].dropoff();
        let route = inst
            .agent_point_route(agent, pickup, dropoff)
            .ok_or_else(|| CompactError::NoRoute(inst.agent(agent).name.clone()))?;
        let merged = Trip {
            agent,
            start_time: trips[i].start_time,
            empty_path: trips[i].empty_path.clone(),
            carry_path: route,
        };
        trips.splice(i..=j, [merged]);
        merges += 1;
    }
    Ok((Schedule { trips }, merges))
}
