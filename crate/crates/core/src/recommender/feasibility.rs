use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::instance::{DemandSpec, ResourceSpec, ShelterSpec};
use super::plan::RecommendationPlan;
use super::{ProblemInstance, RecommendError};
use crate::knowledge::EntityId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    CapacityExceeded,
    WheelchairSlotsExceeded,
    WheelchairExceedsLoad,
    SingleUse,
    DemandExceeded,
    WheelchairDemandExceeded,
    ShelterCapacityExceeded,
    TerrainMismatch,
    Unreachable,
    EmptyLoad,
    TimeMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub constraint: ConstraintKind,
    pub entities: Vec<EntityId>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violations: Vec<ViolationRecord>,
}

/// Checks every constraint of the instance's constraint set against `plan`.
///
/// Loads are not required to follow the loading rule; any split that fits
/// the vehicles, the demand and the shelters is feasible.
pub fn check_feasible(
    instance: &ProblemInstance,
    plan: &RecommendationPlan,
) -> Result<Feasibility, RecommendError> {
    Checker::new(instance).check(plan)
}

/// Id lookups built once per instance, reused across many plans.
pub(super) struct Checker<'a> {
    instance: &'a ProblemInstance,
    resources: HashMap<&'a EntityId, &'a ResourceSpec>,
    rescue_points: HashMap<&'a EntityId, &'a DemandSpec>,
    shelters: HashMap<&'a EntityId, &'a ShelterSpec>,
}

impl<'a> Checker<'a> {
    pub fn new(instance: &'a ProblemInstance) -> Self {
        Checker {
            instance,
            resources: instance.resources.iter().map(|r| (&r.id, r)).collect(),
            rescue_points: instance.rescue_points.iter().map(|p| (&p.id, p)).collect(),
            shelters: instance.shelters.iter().map(|s| (&s.id, s)).collect(),
        }
    }

    pub fn check(&self, plan: &RecommendationPlan) -> Result<Feasibility, RecommendError> {
        let c = &self.instance.constraints;
        let mut out = Vec::new();
        let mut push = |constraint, entities: &[&EntityId], detail: String| {
            out.push(ViolationRecord {
                constraint,
                entities: entities.iter().map(|e| (*e).clone()).collect(),
                detail,
            })
        };

        let mut trips_per_resource: BTreeMap<&EntityId, u32> = BTreeMap::new();
        let mut per_rp: BTreeMap<&EntityId, (u32, u32)> = BTreeMap::new();
        let mut per_shelter: BTreeMap<&EntityId, u32> = BTreeMap::new();

        for a in &plan.assignments {
            let r = *self.resources.get(&a.resource).ok_or_else(|| RecommendError::UnknownEntity {
                kind: "resource",
                id: a.resource.clone(),
            })?;
            let p = *self.rescue_points.get(&a.rescue_point).ok_or_else(|| RecommendError::UnknownEntity {
                kind: "rescue point",
                id: a.rescue_point.clone(),
            })?;
            if !self.shelters.contains_key(&a.shelter) {
                return Err(RecommendError::UnknownEntity {
                    kind: "shelter",
                    id: a.shelter.clone(),
                });
            }
            let ids = [&a.resource, &a.rescue_point, &a.shelter];

            *trips_per_resource.entry(&a.resource).or_default() += 1;
            let e = per_rp.entry(&a.rescue_point).or_default();
            e.0 += a.evacuees_loaded;
            e.1 += a.wheelchair_loaded;
            *per_shelter.entry(&a.shelter).or_default() += a.evacuees_loaded;

            if a.evacuees_loaded == 0 {
                push(ConstraintKind::EmptyLoad, &ids, "assignment carries nobody".into());
            }
            if a.evacuees_loaded > r.capacity() {
                push(
                    ConstraintKind::CapacityExceeded,
                    &[&a.resource],
                    format!("{} loaded, capacity {}", a.evacuees_loaded, r.capacity()),
                );
            }
            if a.wheelchair_loaded > a.evacuees_loaded {
                push(
                    ConstraintKind::WheelchairExceedsLoad,
                    &[&a.resource],
                    format!("{} wheelchair users among {} loaded", a.wheelchair_loaded, a.evacuees_loaded),
                );
            }
            if c.enforce_wheelchair && a.wheelchair_loaded > r.vehicle.wheelchair_slots {
                push(
                    ConstraintKind::WheelchairSlotsExceeded,
                    &[&a.resource],
                    format!("{} wheelchair users, {} slots", a.wheelchair_loaded, r.vehicle.wheelchair_slots),
                );
            }
            if c.enforce_terrain && !p.allowed_terrains.contains(&r.vehicle.terrain) {
                push(
                    ConstraintKind::TerrainMismatch,
                    &[&a.resource, &a.rescue_point],
                    format!("{:?} vehicle not allowed here", r.vehicle.terrain),
                );
            }

            let leg1 = self.instance.times_to_rp.get(&a.resource, &a.rescue_point).and_then(|t| t.seconds());
            let leg2 = self
                .instance
                .times_rp_to_shelter
                .get(&a.rescue_point, &a.shelter)
                .and_then(|t| t.seconds());
            match (leg1, leg2) {
                (Some(t1), Some(t2)) => {
                    if (t1, t2) != (a.t_to_rp, a.t_rp_to_shelter) {
                        push(
                            ConstraintKind::TimeMismatch,
                            &ids,
                            format!("legs {}s/{}s, expected {t1}s/{t2}s", a.t_to_rp, a.t_rp_to_shelter),
                        );
                    }
                }
                _ => push(ConstraintKind::Unreachable, &ids, "a leg has no finite travel time".into()),
            }
        }

        for (r, n) in &trips_per_resource {
            if *n > 1 {
                push(ConstraintKind::SingleUse, &[r], format!("{n} trips"));
            }
        }
        for (id, (total, wheel)) in &per_rp {
            let p = self.rescue_points[id];
            let ambulant_demand = p.evacuees - p.wheelchair_evacuees.min(p.evacuees);
            if *total > p.evacuees || total.saturating_sub(*wheel) > ambulant_demand {
                push(
                    ConstraintKind::DemandExceeded,
                    &[id],
                    format!("{total} loaded ({wheel} wheelchair), {} waiting", p.evacuees),
                );
            }
            if *wheel > p.wheelchair_evacuees {
                push(
                    ConstraintKind::WheelchairDemandExceeded,
                    &[id],
                    format!("{wheel} wheelchair users loaded, {} waiting", p.wheelchair_evacuees),
                );
            }
        }
        if c.enforce_shelter_capacity {
            for (id, intake) in &per_shelter {
                let s = self.shelters[id];
                if *intake > s.capacity {
                    push(
                        ConstraintKind::ShelterCapacityExceeded,
                        &[id],
                        format!("{intake} incoming, capacity {}", s.capacity),
                    );
                }
            }
        }

        Ok(Feasibility {
            feasible: out.is_empty(),
            violations: out,
        })
    }
}
