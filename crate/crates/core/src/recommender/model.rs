//! Index-based view of a [`ProblemInstance`] shared by the exact and greedy
//! solvers. Entities are sorted by id, so comparing index triples orders
//! plans exactly like comparing id triples.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::loading::Load;
use super::plan::{Assignment, Objective, RecommendationPlan, SolverKind, Uncovered};
use super::{ProblemInstance, RecommendError, TimeObjective};
use crate::knowledge::EntityId;
use crate::roads::TravelTimeMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(super) struct Trip {
    pub r: usize,
    pub p: usize,
    pub s: usize,
    pub load: LoadKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(super) struct LoadKey {
    pub wheelchair: u32,
    pub ambulant: u32,
}

impl From<Load> for LoadKey {
    fn from(l: Load) -> Self {
        LoadKey {
            wheelchair: l.wheelchair,
            ambulant: l.ambulant,
        }
    }
}

pub(super) struct Model<'a> {
    pub resource_ids: Vec<&'a EntityId>,
    pub rp_ids: Vec<&'a EntityId>,
    pub shelter_ids: Vec<&'a EntityId>,
    pub capacity: Vec<u32>,
    /// Slots usable by wheelchair users; all seats when not enforced.
    pub slots: Vec<u32>,
    pub demand: Vec<u32>,
    pub wheelchair_demand: Vec<u32>,
    pub priority: Vec<u64>,
    /// `None` when shelter capacity is not enforced.
    pub shelter_capacity: Vec<Option<u32>>,
    /// `[r][p]`, `None` when the pair is inadmissible (unreachable, wrong
    /// terrain or no passenger seat).
    pub to_rp: Vec<Vec<Option<u64>>>,
    /// `[p][s]`, `None` when unreachable.
    pub to_shelter: Vec<Vec<Option<u64>>>,
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a EntityId>, kind: &'static str) -> Result<(), RecommendError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(RecommendError::DuplicateEntity { kind, id: id.clone() });
        }
    }
    Ok(())
}

fn lookup(
    m: &TravelTimeMatrix,
    origins: &[&EntityId],
    destinations: &[&EntityId],
) -> Result<Vec<Vec<Option<u64>>>, RecommendError> {
    let row: HashMap<&EntityId, usize> = m.origins.iter().enumerate().map(|(i, o)| (o, i)).collect();
    let col: HashMap<&EntityId, usize> = m.destinations.iter().enumerate().map(|(j, d)| (d, j)).collect();
    origins
        .iter()
        .map(|o| {
            destinations
                .iter()
                .map(|d| {
                    let cell = row
                        .get(o)
                        .zip(col.get(d))
                        .and_then(|(&i, &j)| m.seconds.get(i).and_then(|r| r.get(j)));
                    cell.map(|t| t.seconds()).ok_or_else(|| RecommendError::MatrixIncomplete {
                        origin: (*o).clone(),
                        destination: (*d).clone(),
                    })
                })
                .collect()
        })
        .collect()
}

impl<'a> Model<'a> {
    pub fn build(inst: &'a ProblemInstance) -> Result<Self, RecommendError> {
        check_unique(inst.resources.iter().map(|r| &r.id), "resource")?;
        check_unique(inst.rescue_points.iter().map(|r| &r.id), "rescue point")?;
        check_unique(inst.shelters.iter().map(|r| &r.id), "shelter")?;

        let mut resources: Vec<_> = inst.resources.iter().collect();
        resources.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rps: Vec<_> = inst.rescue_points.iter().collect();
        rps.sort_by(|a, b| a.id.cmp(&b.id));
        let mut shelters: Vec<_> = inst.shelters.iter().collect();
        shelters.sort_by(|a, b| a.id.cmp(&b.id));

        let resource_ids: Vec<_> = resources.iter().map(|r| &r.id).collect();
        let rp_ids: Vec<_> = rps.iter().map(|r| &r.id).collect();
        let shelter_ids: Vec<_> = shelters.iter().map(|r| &r.id).collect();

        let c = &inst.constraints;
        let mut to_rp = lookup(&inst.times_to_rp, &resource_ids, &rp_ids)?;
        for (r, row) in resources.iter().zip(&mut to_rp) {
            for (p, cell) in rps.iter().zip(row.iter_mut()) {
                let terrain_ok = !c.enforce_terrain || p.allowed_terrains.contains(&r.vehicle.terrain);
                if !terrain_ok || r.capacity() == 0 {
                    *cell = None;
                }
            }
        }
        let to_shelter = lookup(&inst.times_rp_to_shelter, &rp_ids, &shelter_ids)?;

        Ok(Model {
            capacity: resources.iter().map(|r| r.capacity()).collect(),
            slots: resources
                .iter()
                .map(|r| {
                    if c.enforce_wheelchair {
                        r.vehicle.wheelchair_slots.min(r.capacity())
                    } else {
                        r.capacity()
                    }
                })
                .collect(),
            demand: rps.iter().map(|p| p.evacuees).collect(),
            wheelchair_demand: rps.iter().map(|p| p.wheelchair_evacuees.min(p.evacuees)).collect(),
            priority: rps.iter().map(|p| u64::from(p.priority)).collect(),
            shelter_capacity: shelters
                .iter()
                .map(|s| c.enforce_shelter_capacity.then_some(s.capacity))
                .collect(),
            resource_ids,
            rp_ids,
            shelter_ids,
            to_rp,
            to_shelter,
        })
    }

    pub fn n_resources(&self) -> usize {
        self.resource_ids.len()
    }

    pub fn n_rps(&self) -> usize {
        self.rp_ids.len()
    }

    pub fn n_shelters(&self) -> usize {
        self.shelter_ids.len()
    }

    /// Admissible resources for `p`, in boarding order (arrival time, then id).
    pub fn boarding_order(&self, p: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.n_resources()).filter(|&r| self.to_rp[r][p].is_some()).collect();
        v.sort_by_key(|&r| (self.to_rp[r][p], r));
        v
    }

    /// Reachable shelters from `p`, nearest first (ties by id).
    pub fn shelter_order(&self, p: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.n_shelters()).filter(|&s| self.to_shelter[p][s].is_some()).collect();
        v.sort_by_key(|&s| (self.to_shelter[p][s], s));
        v
    }

    pub fn trip_time(&self, r: usize, p: usize, s: usize) -> u64 {
        self.to_rp[r][p].expect("admissible") + self.to_shelter[p][s].expect("reachable")
    }

    pub fn assemble(
        &self,
        trips: &[Trip],
        solver: SolverKind,
        time_objective: TimeObjective,
        lower_bound_s: Option<u64>,
    ) -> RecommendationPlan {
        let mut loaded = vec![(0u32, 0u32); self.n_rps()];
        let mut assignments: Vec<Assignment> = trips
            .iter()
            .map(|t| {
                loaded[t.p].0 += t.load.wheelchair + t.load.ambulant;
                loaded[t.p].1 += t.load.wheelchair;
                Assignment {
                    resource: self.resource_ids[t.r].clone(),
                    rescue_point: self.rp_ids[t.p].clone(),
                    shelter: self.shelter_ids[t.s].clone(),
                    evacuees_loaded: t.load.wheelchair + t.load.ambulant,
                    wheelchair_loaded: t.load.wheelchair,
                    t_to_rp: self.to_rp[t.r][t.p].expect("admissible"),
                    t_rp_to_shelter: self.to_shelter[t.p][t.s].expect("reachable"),
                }
            })
            .collect();
        assignments.sort_by(|a, b| {
            (&a.resource, &a.rescue_point, &a.shelter).cmp(&(&b.resource, &b.rescue_point, &b.shelter))
        });

        let mut uncovered = BTreeMap::new();
        let mut uncovered_weight = 0;
        for p in 0..self.n_rps() {
            let left = self.demand[p] - loaded[p].0;
            if left > 0 {
                uncovered_weight += self.priority[p] * u64::from(left);
                uncovered.insert(
                    self.rp_ids[p].clone(),
                    Uncovered {
                        evacuees_left: left,
                        wheelchair_left: self.wheelchair_demand[p] - loaded[p].1,
                    },
                );
            }
        }
        let objective = Objective {
            uncovered_weight,
            total_time: assignments.iter().map(Assignment::trip_time).sum(),
            vehicles_used: assignments.len() as u32,
        };
        let status = RecommendationPlan::classify(&assignments, &uncovered);
        RecommendationPlan {
            assignments,
            objective,
            uncovered,
            status,
            solver,
            time_objective,
            lower_bound_s,
        }
    }
}
