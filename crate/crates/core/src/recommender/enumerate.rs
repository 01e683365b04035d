//! Exhaustive enumeration, the ground truth the solver is tested against.
//!
//! Deliberately shares nothing with the solvers beyond the loading rule and
//! the feasibility check: every resource independently takes one of
//! "unassigned" or a (rescue point, shelter) pair, loads follow the loading
//! rule, and infeasible candidates are dropped.

use std::collections::BTreeMap;

use super::feasibility::Checker;
use super::loading::{load_rule, LoadCandidate};
use super::plan::{Assignment, Objective, RankKey, RecommendationPlan, SolverKind, Uncovered};
use super::{ProblemInstance, RecommendError, TimeObjective};

pub const ORACLE_MAX_RESOURCES: usize = 6;
pub const ORACLE_MAX_RESCUE_POINTS: usize = 4;
pub const ORACLE_MAX_SHELTERS: usize = 3;

#[derive(Clone, Debug)]
pub struct Enumeration {
    /// Candidates generated before feasibility filtering.
    pub candidates_examined: u64,
    pub plans: Vec<(RecommendationPlan, Objective)>,
}

impl Enumeration {
    /// Lexicographic minimum over all feasible plans.
    pub fn optimum(&self, mode: TimeObjective) -> Option<RankKey> {
        self.plans.iter().map(|(p, _)| key_of(p, mode)).min()
    }

    /// Every plan attaining [`Enumeration::optimum`].
    pub fn optimal_plans(&self, mode: TimeObjective) -> Vec<&RecommendationPlan> {
        let Some(best) = self.optimum(mode) else {
            return Vec::new();
        };
        self.plans
            .iter()
            .map(|(p, _)| p)
            .filter(|p| key_of(p, mode) == best)
            .collect()
    }
}

fn key_of(plan: &RecommendationPlan, mode: TimeObjective) -> RankKey {
    plan.objective.key(mode, plan.makespan())
}

/// Collects every feasible plan. See [`enumerate_with`] for large batches.
pub fn enumerate_all(instance: &ProblemInstance) -> Result<Enumeration, RecommendError> {
    let mut plans = Vec::new();
    let candidates_examined = enumerate_with(instance, |p| {
        let o = p.objective;
        plans.push((p.clone(), o));
    })?;
    Ok(Enumeration {
        candidates_examined,
        plans,
    })
}

/// Calls `visit` on every feasible plan without keeping them, and returns
/// the number of candidates examined.
pub fn enumerate_with(
    instance: &ProblemInstance,
    mut visit: impl FnMut(&RecommendationPlan),
) -> Result<u64, RecommendError> {
    let (nr, np, ns) = (
        instance.resources.len(),
        instance.rescue_points.len(),
        instance.shelters.len(),
    );
    if nr > ORACLE_MAX_RESOURCES || np > ORACLE_MAX_RESCUE_POINTS || ns > ORACLE_MAX_SHELTERS {
        return Err(RecommendError::InstanceTooLarge {
            resources: nr,
            rescue_points: np,
            shelters: ns,
        });
    }
    let checker = Checker::new(instance);

    // legs[r][p] and exits[p][s]; None when unreachable.
    let mut legs = vec![vec![None; np]; nr];
    for (r, res) in instance.resources.iter().enumerate() {
        for (p, rp) in instance.rescue_points.iter().enumerate() {
            let t = instance.times_to_rp.get(&res.id, &rp.id).ok_or_else(|| {
                RecommendError::MatrixIncomplete {
                    origin: res.id.clone(),
                    destination: rp.id.clone(),
                }
            })?;
            legs[r][p] = t.seconds();
        }
    }
    let mut exits = vec![vec![None; ns]; np];
    for (p, rp) in instance.rescue_points.iter().enumerate() {
        for (s, sh) in instance.shelters.iter().enumerate() {
            let t = instance.times_rp_to_shelter.get(&rp.id, &sh.id).ok_or_else(|| {
                RecommendError::MatrixIncomplete {
                    origin: rp.id.clone(),
                    destination: sh.id.clone(),
                }
            })?;
            exits[p][s] = t.seconds();
        }
    }

    // A candidate with one inadmissible assignment (unreachable leg, wrong
    // terrain, no passenger seat) is infeasible whatever the others do, so
    // whole classes of candidates are rejected at once.
    let options: Vec<Vec<(usize, usize)>> = (0..nr)
        .map(|r| {
            let res = &instance.resources[r];
            let mut v = Vec::new();
            for p in 0..np {
                let rp = &instance.rescue_points[p];
                let terrain_ok = !instance.constraints.enforce_terrain
                    || rp.allowed_terrains.contains(&res.vehicle.terrain);
                if legs[r][p].is_none() || !terrain_ok || res.capacity() == 0 {
                    continue;
                }
                for s in 0..ns {
                    if exits[p][s].is_some() {
                        v.push((p, s));
                    }
                }
            }
            v
        })
        .collect();

    let base = (np * ns + 1) as u64;
    let examined = base.pow(nr as u32);
    let mut search = Walk {
        instance,
        checker: &checker,
        options: &options,
        legs: &legs,
        exits: &exits,
        choice: vec![None; nr],
        visit: &mut visit,
    };
    search.walk(0)?;
    Ok(examined)
}

struct Walk<'a, F> {
    instance: &'a ProblemInstance,
    checker: &'a Checker<'a>,
    options: &'a [Vec<(usize, usize)>],
    legs: &'a [Vec<Option<u64>>],
    exits: &'a [Vec<Option<u64>>],
    choice: Vec<Option<(usize, usize)>>,
    visit: &'a mut F,
}

impl<F: FnMut(&RecommendationPlan)> Walk<'_, F> {
    fn walk(&mut self, r: usize) -> Result<(), RecommendError> {
        if r == self.choice.len() {
            if let Some(plan) = candidate(self.instance, &self.choice, self.legs, self.exits) {
                if self.checker.check(&plan)?.feasible {
                    (self.visit)(&plan);
                }
            }
            return Ok(());
        }
        self.choice[r] = None;
        self.walk(r + 1)?;
        for i in 0..self.options[r].len() {
            self.choice[r] = Some(self.options[r][i]);
            self.walk(r + 1)?;
        }
        self.choice[r] = None;
        Ok(())
    }
}

/// Builds the plan for one choice vector. Returns `None` early for
/// candidates that carry an empty load or overfill a shelter; both are
/// constraint violations the feasibility check would report anyway.
fn candidate(
    instance: &ProblemInstance,
    choice: &[Option<(usize, usize)>],
    legs: &[Vec<Option<u64>>],
    exits: &[Vec<Option<u64>>],
) -> Option<RecommendationPlan> {
    let np = instance.rescue_points.len();
    let mut at_rp: Vec<Vec<(usize, usize)>> = vec![Vec::new(); np];
    for (r, c) in choice.iter().enumerate() {
        if let Some((p, s)) = *c {
            at_rp[p].push((r, s));
        }
    }

    let mut all_loads = Vec::with_capacity(np);
    let mut intake = vec![0u32; instance.shelters.len()];
    for (p, members) in at_rp.iter().enumerate() {
        let rp = &instance.rescue_points[p];
        let cands: Vec<LoadCandidate> = members
            .iter()
            .map(|&(r, _)| {
                let res = &instance.resources[r];
                LoadCandidate {
                    id: res.id.clone(),
                    t_to_rp: legs[r][p].unwrap(),
                    capacity: res.capacity(),
                    wheelchair_slots: res.vehicle.wheelchair_slots,
                }
            })
            .collect();
        let loads = load_rule(
            &cands,
            rp.evacuees,
            rp.wheelchair_evacuees,
            instance.constraints.enforce_wheelchair,
        );
        for (&(_, s), load) in members.iter().zip(&loads) {
            if load.total() == 0 {
                return None;
            }
            intake[s] += load.total();
        }
        all_loads.push(loads);
    }
    if instance.constraints.enforce_shelter_capacity
        && intake.iter().zip(&instance.shelters).any(|(n, s)| *n > s.capacity)
    {
        return None;
    }

    let mut assignments = Vec::new();
    let mut uncovered = BTreeMap::new();
    let mut uncovered_weight = 0u64;
    for (p, members) in at_rp.iter().enumerate() {
        let rp = &instance.rescue_points[p];
        let loads = &all_loads[p];
        let mut carried = 0;
        let mut carried_wheel = 0;
        for (&(r, s), load) in members.iter().zip(loads) {
            carried += load.total();
            carried_wheel += load.wheelchair;
            assignments.push(Assignment {
                resource: instance.resources[r].id.clone(),
                rescue_point: rp.id.clone(),
                shelter: instance.shelters[s].id.clone(),
                evacuees_loaded: load.total(),
                wheelchair_loaded: load.wheelchair,
                t_to_rp: legs[r][p].unwrap(),
                t_rp_to_shelter: exits[p][s].unwrap(),
            });
        }
        let left = rp.evacuees.saturating_sub(carried);
        if left > 0 {
            uncovered_weight += u64::from(rp.priority) * u64::from(left);
            uncovered.insert(
                rp.id.clone(),
                Uncovered {
                    evacuees_left: left,
                    wheelchair_left: rp.wheelchair_evacuees.min(rp.evacuees).saturating_sub(carried_wheel),
                },
            );
        }
    }
    assignments.sort_by(|a, b| a.triple().cmp(&b.triple()));

    let objective = Objective {
        uncovered_weight,
        total_time: assignments.iter().map(|a| a.t_to_rp + a.t_rp_to_shelter).sum(),
        vehicles_used: assignments.len() as u32,
    };
    let status = RecommendationPlan::classify(&assignments, &uncovered);
    Some(RecommendationPlan {
        assignments,
        objective,
        uncovered,
        status,
        solver: SolverKind::Exact,
        time_objective: TimeObjective::Sum,
        lower_bound_s: None,
    })
}
