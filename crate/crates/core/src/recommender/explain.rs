use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::plan::RecommendationPlan;
use super::ProblemInstance;
use crate::knowledge::EntityId;

/// What stopped an assignment from carrying more.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// Every passenger seat is taken.
    VehicleCapacity,
    /// Every wheelchair slot is taken.
    WheelchairSlots,
    /// Nobody was left to board at the rescue point.
    RemainingDemand,
    /// The destination shelter is full after this plan.
    ShelterCapacity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRationale {
    pub resource: EntityId,
    pub rescue_point: EntityId,
    pub shelter: EntityId,
    pub t_to_rp: u64,
    pub t_rp_to_shelter: u64,
    pub evacuees_loaded: u32,
    pub wheelchair_loaded: u32,
    pub ambulant_loaded: u32,
    pub capacity: u32,
    pub bindings: Vec<Binding>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShortageCause {
    /// No resource can reach the rescue point with a usable vehicle.
    NoEligibleResource,
    /// The fleet has fewer seats than there are evacuees.
    FleetCapacity { total_fleet_capacity: u64, total_demand: u64 },
    /// Only wheelchair users are left and no slot is free for them.
    WheelchairSlots { total_slots: u64, wheelchair_demand: u64 },
    /// Shelters cannot take every evacuee.
    ShelterCapacity { total_shelter_capacity: u64, total_demand: u64 },
    /// Seats exist but went to more urgent or better placed demand.
    FleetAllocation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortageRecord {
    pub rescue_point: EntityId,
    pub evacuees_left: u32,
    pub wheelchair_left: u32,
    pub priority: u8,
    pub cause: ShortageCause,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub assignments: Vec<AssignmentRationale>,
    pub shortages: Vec<ShortageRecord>,
}

/// Per-assignment rationale and the binding shortage behind each uncovered
/// rescue point. Entities the instance does not know are skipped.
pub fn explain(instance: &ProblemInstance, plan: &RecommendationPlan) -> Explanation {
    let c = &instance.constraints;
    let resources: BTreeMap<_, _> = instance.resources.iter().map(|r| (&r.id, r)).collect();
    let shelters: BTreeMap<_, _> = instance.shelters.iter().map(|s| (&s.id, s)).collect();
    let mut intake: BTreeMap<&EntityId, u32> = BTreeMap::new();
    for a in &plan.assignments {
        *intake.entry(&a.shelter).or_default() += a.evacuees_loaded;
    }

    let mut assignments = Vec::new();
    for a in &plan.assignments {
        let Some(r) = resources.get(&a.resource) else {
            continue;
        };
        let capacity = r.capacity();
        let mut bindings = Vec::new();
        if a.evacuees_loaded >= capacity {
            bindings.push(Binding::VehicleCapacity);
        } else {
            bindings.push(Binding::RemainingDemand);
        }
        let slots = r.vehicle.wheelchair_slots;
        if c.enforce_wheelchair && slots > 0 && a.wheelchair_loaded >= slots {
            bindings.push(Binding::WheelchairSlots);
        }
        if c.enforce_shelter_capacity {
            if let Some(s) = shelters.get(&a.shelter) {
                if intake.get(&a.shelter).copied().unwrap_or(0) >= s.capacity {
                    bindings.push(Binding::ShelterCapacity);
                }
            }
        }
        bindings.sort();
        assignments.push(AssignmentRationale {
            resource: a.resource.clone(),
            rescue_point: a.rescue_point.clone(),
            shelter: a.shelter.clone(),
            t_to_rp: a.t_to_rp,
            t_rp_to_shelter: a.t_rp_to_shelter,
            evacuees_loaded: a.evacuees_loaded,
            wheelchair_loaded: a.wheelchair_loaded,
            ambulant_loaded: a.evacuees_loaded - a.wheelchair_loaded.min(a.evacuees_loaded),
            capacity,
            bindings,
        });
    }

    let total_demand = instance.total_demand();
    let fleet = instance.fleet_capacity();
    let total_slots: u64 = instance
        .resources
        .iter()
        .map(|r| u64::from(r.vehicle.wheelchair_slots.min(r.capacity())))
        .sum();
    let wheelchair_demand: u64 = instance
        .rescue_points
        .iter()
        .map(|p| u64::from(p.wheelchair_evacuees.min(p.evacuees)))
        .sum();
    let shelter_total: u64 = instance.shelters.iter().map(|s| u64::from(s.capacity)).sum();

    let mut shortages = Vec::new();
    for p in &instance.rescue_points {
        let Some(u) = plan.uncovered.get(&p.id) else {
            continue;
        };
        let eligible = instance.resources.iter().any(|r| {
            let reachable = instance
                .times_to_rp
                .get(&r.id, &p.id)
                .is_some_and(|t| t.is_finite());
            let terrain = !c.enforce_terrain || p.allowed_terrains.contains(&r.vehicle.terrain);
            reachable && terrain && r.capacity() > 0
        });
        let has_exit = instance
            .shelters
            .iter()
            .any(|s| instance.times_rp_to_shelter.get(&p.id, &s.id).is_some_and(|t| t.is_finite()));
        let cause = if !eligible || !has_exit {
            ShortageCause::NoEligibleResource
        } else if c.enforce_wheelchair && u.wheelchair_left == u.evacuees_left {
            ShortageCause::WheelchairSlots {
                total_slots,
                wheelchair_demand,
            }
        } else if fleet < total_demand {
            ShortageCause::FleetCapacity {
                total_fleet_capacity: fleet,
                total_demand,
            }
        } else if c.enforce_shelter_capacity && shelter_total < total_demand {
            ShortageCause::ShelterCapacity {
                total_shelter_capacity: shelter_total,
                total_demand,
            }
        } else {
            ShortageCause::FleetAllocation
        };
        shortages.push(ShortageRecord {
            rescue_point: p.id.clone(),
            evacuees_left: u.evacuees_left,
            wheelchair_left: u.wheelchair_left,
            priority: p.priority,
            cause,
        });
    }
    shortages.sort_by(|a, b| a.rescue_point.cmp(&b.rescue_point));
    Explanation { assignments, shortages }
}
