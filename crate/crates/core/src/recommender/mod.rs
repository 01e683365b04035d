//! Constraint-based allocation of driver/vehicle pairs to rescue points and
//! shelters.
//!
//! A plan sends each selected resource on one trip: from its position to a
//! rescue point, then on to a shelter. Plans are ranked lexicographically by
//! priority-weighted uncovered demand, then total travel time, then number of
//! vehicles; remaining ties go to the smallest sorted list of
//! `(resource, rescue_point, shelter)` id triples.

mod assignment;
mod enumerate;
mod exact;
mod explain;
mod feasibility;
mod greedy;
mod instance;
mod loading;
mod model;
mod plan;

pub use enumerate::{enumerate_all, enumerate_with, Enumeration, ORACLE_MAX_RESCUE_POINTS, ORACLE_MAX_RESOURCES, ORACLE_MAX_SHELTERS};
pub use explain::{explain, AssignmentRationale, Binding, Explanation, ShortageCause, ShortageRecord};
pub use feasibility::{check_feasible, ConstraintKind, Feasibility, ViolationRecord};
pub use instance::{
    compute_travel_times, geometry_fingerprint, instance_from_snapshot, instance_with_travel_times,
    DemandSpec, ProblemInstance, ResourceSpec, ShelterSpec, TravelTimes,
};
pub use loading::{board, load_rule, Load, LoadCandidate};
pub use plan::{Assignment, Objective, PlanStatus, RankKey, RecommendationPlan, SolverKind, Uncovered};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::EntityId;

/// Default instance size (number of resources) up to which `solve` is exact.
pub const DEFAULT_EXACT_BOUND: usize = 12;

/// Which constraints of the allocation problem are enforced.
///
/// Vehicle capacity and single use (one trip per resource) are always
/// enforced and have no switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintSet {
    /// Wheelchair users only board wheelchair slots. When off, every
    /// passenger seat counts as a wheelchair slot.
    pub enforce_wheelchair: bool,
    pub enforce_shelter_capacity: bool,
    pub enforce_terrain: bool,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet {
            enforce_wheelchair: true,
            enforce_shelter_capacity: true,
            enforce_terrain: true,
        }
    }
}

impl ConstraintSet {
    pub const fn enforce_capacity(&self) -> bool {
        true
    }

    pub const fn single_use(&self) -> bool {
        true
    }
}

/// How the time component of the objective aggregates trip times.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeObjective {
    /// Sum of both legs over all trips.
    #[default]
    Sum,
    /// Longest single trip.
    Makespan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub exact_bound: usize,
    pub time_objective: TimeObjective,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            exact_bound: DEFAULT_EXACT_BOUND,
            time_objective: TimeObjective::Sum,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecommendError {
    #[error("no travel time from {origin} to {destination}")]
    MatrixIncomplete {
        origin: EntityId,
        destination: EntityId,
    },
    #[error("place {0} cannot be placed on the road network: {1}")]
    Unsnappable(EntityId, String),
    #[error("unknown {kind} {id}")]
    UnknownEntity { kind: &'static str, id: EntityId },
    #[error("duplicate {kind} {id} in instance")]
    DuplicateEntity { kind: &'static str, id: EntityId },
    #[error(
        "instance too large for exhaustive enumeration: {resources} resources, {rescue_points} rescue points, {shelters} shelters"
    )]
    InstanceTooLarge {
        resources: usize,
        rescue_points: usize,
        shelters: usize,
    },
}

/// Solves with the default configuration.
pub fn solve(instance: &ProblemInstance) -> Result<RecommendationPlan, RecommendError> {
    solve_with(instance, &SolverConfig::default())
}

/// Exact branch and bound when the instance has at most
/// `config.exact_bound` resources, otherwise a greedy plan flagged as
/// heuristic together with a lower bound on the optimal travel time.
pub fn solve_with(
    instance: &ProblemInstance,
    config: &SolverConfig,
) -> Result<RecommendationPlan, RecommendError> {
    let model = model::Model::build(instance)?;
    if model.n_resources() <= config.exact_bound {
        Ok(exact::solve(&model, config.time_objective))
    } else {
        Ok(greedy::solve(&model, config.time_objective))
    }
}
