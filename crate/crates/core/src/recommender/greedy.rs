//! Greedy fallback for instances above the exact bound.

use super::loading::board;
use super::model::{Model, Trip};
use super::plan::{RecommendationPlan, SolverKind};
use super::TimeObjective;

/// Rescue points by priority (highest first), then id. Each takes unused
/// admissible resources in boarding order until its demand is met, sending
/// every load to the nearest shelter that still has room for it.
pub(super) fn construct(m: &Model<'_>) -> Vec<Trip> {
    let mut order: Vec<usize> = (0..m.n_rps()).collect();
    order.sort_by_key(|&p| (std::cmp::Reverse(m.priority[p]), p));
    let mut used = vec![false; m.n_resources()];
    let mut residual = m.shelter_capacity.clone();
    let mut trips = Vec::new();

    for p in order {
        let mut wheel = m.wheelchair_demand[p];
        let mut amb = m.demand[p] - wheel;
        let shelters = m.shelter_order(p);
        for r in m.boarding_order(p) {
            if wheel + amb == 0 {
                break;
            }
            if used[r] {
                continue;
            }
            let load = board(m.capacity[r], m.slots[r], wheel, amb);
            let total = load.total();
            if total == 0 {
                continue;
            }
            let Some(&s) = shelters.iter().find(|&&s| residual[s].map_or(true, |c| c >= total)) else {
                continue;
            };
            if let Some(c) = residual[s].as_mut() {
                *c -= total;
            }
            used[r] = true;
            wheel -= load.wheelchair;
            amb -= load.ambulant;
            trips.push(Trip {
                r,
                p,
                s,
                load: load.into(),
            });
        }
    }
    trips
}

/// Lower bound on the time objective of any plan that is at least as good
/// as one leaving `uncovered_weight` behind.
///
/// Such a plan leaves at most `uncovered_weight / priority` evacuees at each
/// rescue point, so it must carry the rest with distinct vehicles. The fewest
/// trips able to do so is found by taking the largest capacities first, and
/// each trip costs at least one of the cheapest trips into that point.
pub(super) fn time_lower_bound(m: &Model<'_>, uncovered_weight: u64, mode: TimeObjective) -> u64 {
    let mut total = 0;
    let mut longest = 0;
    for p in 0..m.n_rps() {
        let allowed_left = uncovered_weight / m.priority[p].max(1);
        let need = u64::from(m.demand[p]).saturating_sub(allowed_left);
        if need == 0 {
            continue;
        }
        let Some(leg2) = m.shelter_order(p).first().map(|&s| m.to_shelter[p][s].expect("reachable")) else {
            continue;
        };
        let admissible = m.boarding_order(p);
        let mut caps: Vec<u64> = admissible.iter().map(|&r| u64::from(m.capacity[r])).collect();
        caps.sort_unstable_by(|a, b| b.cmp(a));
        let mut k = 0;
        let mut carried = 0;
        while carried < need && k < caps.len() {
            carried += caps[k];
            k += 1;
        }
        let mut costs: Vec<u64> = admissible
            .iter()
            .map(|&r| m.to_rp[r][p].expect("admissible") + leg2)
            .collect();
        costs.sort_unstable();
        total += costs[..k].iter().sum::<u64>();
        if k > 0 {
            longest = longest.max(costs[k - 1]);
        }
    }
    match mode {
        TimeObjective::Sum => total,
        TimeObjective::Makespan => longest,
    }
}

pub(super) fn solve(m: &Model<'_>, mode: TimeObjective) -> RecommendationPlan {
    let trips = construct(m);
    let plan = m.assemble(&trips, SolverKind::Heuristic, mode, None);
    let lb = time_lower_bound(m, plan.objective.uncovered_weight, mode);
    RecommendationPlan {
        lower_bound_s: Some(lb),
        ..plan
    }
}
