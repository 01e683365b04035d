use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TimeObjective;
use crate::knowledge::EntityId;

/// One trip: resource to rescue point, then on to a shelter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub resource: EntityId,
    pub rescue_point: EntityId,
    pub shelter: EntityId,
    pub evacuees_loaded: u32,
    pub wheelchair_loaded: u32,
    /// Seconds from the resource's position to the rescue point.
    pub t_to_rp: u64,
    /// Seconds from the rescue point to the shelter.
    pub t_rp_to_shelter: u64,
}

impl Assignment {
    pub fn trip_time(&self) -> u64 {
        self.t_to_rp + self.t_rp_to_shelter
    }

    pub fn triple(&self) -> (EntityId, EntityId, EntityId) {
        (
            self.resource.clone(),
            self.rescue_point.clone(),
            self.shelter.clone(),
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    /// Sum over rescue points of priority times evacuees left behind.
    pub uncovered_weight: u64,
    /// Sum over trips of both legs, in seconds.
    pub total_time: u64,
    pub vehicles_used: u32,
}

/// Lexicographic ranking key: lower is better.
pub type RankKey = (u64, u64, u32);

impl Objective {
    pub fn key(&self, mode: TimeObjective, makespan: u64) -> RankKey {
        let time = match mode {
            TimeObjective::Sum => self.total_time,
            TimeObjective::Makespan => makespan,
        };
        (self.uncovered_weight, time, self.vehicles_used)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Uncovered {
    pub evacuees_left: u32,
    pub wheelchair_left: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    FullCoverage,
    PartialCoverage,
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationPlan {
    /// Sorted by `(resource, rescue_point, shelter)`.
    pub assignments: Vec<Assignment>,
    pub objective: Objective,
    /// Rescue points with evacuees left behind.
    pub uncovered: BTreeMap<EntityId, Uncovered>,
    pub status: PlanStatus,
    pub solver: SolverKind,
    pub time_objective: TimeObjective,
    /// Lower bound on the optimal time objective; heuristic plans only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound_s: Option<u64>,
}

impl RecommendationPlan {
    pub fn empty(time_objective: TimeObjective) -> Self {
        RecommendationPlan {
            assignments: Vec::new(),
            objective: Objective::default(),
            uncovered: BTreeMap::new(),
            status: PlanStatus::Empty,
            solver: SolverKind::Exact,
            time_objective,
            lower_bound_s: None,
        }
    }

    pub fn makespan(&self) -> u64 {
        self.assignments
            .iter()
            .map(Assignment::trip_time)
            .max()
            .unwrap_or(0)
    }

    pub fn rank_key(&self) -> RankKey {
        self.objective.key(self.time_objective, self.makespan())
    }

    /// Sorted id triples, the final tie-breaker between equal objectives.
    pub fn triples(&self) -> Vec<(EntityId, EntityId, EntityId)> {
        let mut t: Vec<_> = self.assignments.iter().map(Assignment::triple).collect();
        t.sort();
        t
    }

    pub fn has_uncovered_demand(&self) -> bool {
        !self.uncovered.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub(crate) fn classify(assignments: &[Assignment], uncovered: &BTreeMap<EntityId, Uncovered>) -> PlanStatus {
        if assignments.is_empty() {
            PlanStatus::Empty
        } else if uncovered.is_empty() {
            PlanStatus::FullCoverage
        } else {
            PlanStatus::PartialCoverage
        }
    }
}
