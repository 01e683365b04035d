//! Exact lexicographic branch and bound.
//!
//! Rescue points are decided one at a time. For the current rescue point the
//! admissible resources are walked in boarding order (arrival time, then id)
//! and each is either sent there, with a choice of shelter, or skipped.
//! Since a vehicle's load only depends on the vehicles boarding before it,
//! every load is final the moment it is chosen: zero loads and shelter
//! overflows are cut immediately, and a rescue point is closed as soon as its
//! demand is met.

use super::assignment::{min_cost_assignment, FORBIDDEN};
use super::greedy;
use super::loading::board;
use super::model::{Model, Trip};
use super::plan::{RankKey, RecommendationPlan, SolverKind};
use super::TimeObjective;

type Triple = (usize, usize, usize);

/// An open rescue point as seen by the bound.
struct Open {
    p: usize,
    weight: u64,
    wheel: u64,
    amb: u64,
    seats: u64,
    slots: u64,
    resources: Vec<usize>,
}

fn m_enforces_slots(m: &Model<'_>) -> bool {
    m.slots.iter().zip(&m.capacity).any(|(s, c)| s < c)
}

/// Fewest distinct resources out of `resources` whose seats reach `need`
/// and whose slots reach `need_wheel`; `None` if all of them fall short.
fn min_trips(resources: &[usize], need: u64, need_wheel: u64, m: &Model<'_>) -> Option<usize> {
    let fewest = |mut v: Vec<u64>, target: u64| -> Option<usize> {
        v.sort_unstable_by(|a, b| b.cmp(a));
        let mut sum = 0;
        for (i, x) in v.iter().enumerate() {
            if sum >= target {
                return Some(i);
            }
            sum += x;
        }
        (sum >= target).then_some(v.len())
    };
    let by_seats = fewest(resources.iter().map(|&r| u64::from(m.capacity[r])).collect(), need)?;
    let by_slots = fewest(
        resources.iter().map(|&r| u64::from(m.slots[r].min(m.capacity[r]))).collect(),
        need_wheel,
    )?;
    Some(by_seats.max(by_slots))
}

struct Best {
    key: RankKey,
    triples: Vec<Triple>,
    trips: Vec<Trip>,
}

struct Search<'m, 'a> {
    m: &'m Model<'a>,
    mode: TimeObjective,
    rp_order: Vec<usize>,
    boarding: Vec<Vec<usize>>,
    shelters: Vec<Vec<usize>>,
    used: Vec<bool>,
    residual: Vec<Option<u32>>,
    trips: Vec<Trip>,
    closed_uncovered: u64,
    time_sum: u64,
    best: Option<Best>,
}

fn sorted_triples(trips: &[Trip]) -> Vec<Triple> {
    let mut t: Vec<Triple> = trips.iter().map(|t| (t.r, t.p, t.s)).collect();
    t.sort_unstable();
    t
}

impl<'m, 'a> Search<'m, 'a> {
    fn new(m: &'m Model<'a>, mode: TimeObjective) -> Self {
        let mut rp_order: Vec<usize> = (0..m.n_rps()).collect();
        rp_order.sort_by_key(|&p| (std::cmp::Reverse(m.priority[p]), std::cmp::Reverse(m.demand[p]), p));
        Search {
            m,
            mode,
            boarding: (0..m.n_rps()).map(|p| m.boarding_order(p)).collect(),
            shelters: (0..m.n_rps()).map(|p| m.shelter_order(p)).collect(),
            rp_order,
            used: vec![false; m.n_resources()],
            residual: m.shelter_capacity.clone(),
            trips: Vec::new(),
            closed_uncovered: 0,
            time_sum: 0,
            best: None,
        }
    }

    fn time_of(&self, trips: &[Trip]) -> u64 {
        let times = trips.iter().map(|t| self.m.trip_time(t.r, t.p, t.s));
        match self.mode {
            TimeObjective::Sum => times.sum(),
            TimeObjective::Makespan => times.max().unwrap_or(0),
        }
    }

    fn current_time(&self) -> u64 {
        match self.mode {
            TimeObjective::Sum => self.time_sum,
            TimeObjective::Makespan => self.time_of(&self.trips),
        }
    }

    fn offer(&mut self, key: RankKey, trips: &[Trip]) {
        let better = match &self.best {
            None => true,
            Some(b) if key != b.key => key < b.key,
            Some(b) => sorted_triples(trips) < b.triples,
        };
        if better {
            self.best = Some(Best {
                key,
                triples: sorted_triples(trips),
                trips: trips.to_vec(),
            });
        }
    }

    fn initial_rp(&self, pos: usize) -> (u32, u32) {
        match self.rp_order.get(pos) {
            Some(&p) => {
                let w = self.m.wheelchair_demand[p];
                (w, self.m.demand[p] - w)
            }
            None => (0, 0),
        }
    }

    /// Unused resources still able to serve `p`: those from position `from`
    /// onwards in its boarding order. Empty when no shelter has room left.
    fn open_resources(&self, p: usize, from: usize) -> Vec<usize> {
        if !self.shelters[p].iter().any(|&s| self.residual[s].map_or(true, |c| c > 0)) {
            return Vec::new();
        }
        self.boarding[p][from..].iter().copied().filter(|&r| !self.used[r]).collect()
    }

    /// Most evacuees that could still reach a shelter after resource `r`
    /// boards at the rescue point in position `pos`, leaving `left` there.
    fn future_intake(&self, pos: usize, left: u32, r: usize) -> u32 {
        let waiting: u32 = left + self.rp_order[pos + 1..].iter().map(|&q| self.m.demand[q]).sum::<u32>();
        let seats: u32 = (0..self.m.n_resources())
            .filter(|&x| x != r && !self.used[x])
            .map(|x| self.m.capacity[x])
            .sum();
        waiting.min(seats)
    }

    /// Cheapest shelter leg from `p` to a shelter with room left.
    fn cheapest_exit(&self, p: usize) -> Option<u64> {
        self.shelters[p]
            .iter()
            .filter(|&&s| self.residual[s].map_or(true, |c| c > 0))
            .map(|&s| self.m.to_shelter[p][s].expect("reachable"))
            .min()
    }

    /// Lexicographic lower bound on every completion of the current node
    /// that could tie or beat an incumbent leaving `best_uncovered` behind.
    ///
    /// Uncovered weight: ambulant evacuees need a seat, wheelchair users a
    /// seat and a slot. Each open rescue point can use at most the seats and
    /// slots of the resources still able to reach it, all points together at
    /// most the free seats, slots and shelter room. Filling urgent points
    /// first, ambulant before wheelchair, is optimal for that relaxation.
    ///
    /// Time and vehicles: a completion no worse than the incumbent leaves at
    /// most `slack / priority` evacuees at any point, so it carries the rest,
    /// which takes a minimum number of distinct trips into that point. The
    /// cheapest way to staff all those trips with distinct resources bounds
    /// the added time.
    fn lower_bound(&self, pos: usize, k: usize, wheel_left: u32, amb_left: u32, best_uncovered: u64) -> RankKey {
        let m = self.m;
        let hopeless = (best_uncovered + 1, 0, 0);
        let mut open: Vec<Open> = Vec::new();
        let mut add = |p: usize, wheel: u32, amb: u32, from: usize| {
            if wheel + amb == 0 {
                return;
            }
            let resources = self.open_resources(p, from);
            let seats = resources.iter().map(|&r| u64::from(m.capacity[r])).sum();
            let slots = resources.iter().map(|&r| u64::from(m.slots[r].min(m.capacity[r]))).sum();
            open.push(Open {
                p,
                weight: m.priority[p],
                wheel: u64::from(wheel),
                amb: u64::from(amb),
                seats,
                slots,
                resources,
            });
        };
        add(self.rp_order[pos], wheel_left, amb_left, k);
        for &q in &self.rp_order[pos + 1..] {
            let w = m.wheelchair_demand[q];
            add(q, w, m.demand[q] - w, 0);
        }

        let free = (0..m.n_resources()).filter(|&r| !self.used[r]);
        let mut seat_budget: u64 = free.clone().map(|r| u64::from(m.capacity[r])).sum();
        let mut slot_budget: u64 = free.map(|r| u64::from(m.slots[r].min(m.capacity[r]))).sum();
        if self.residual.iter().all(Option::is_some) {
            seat_budget = seat_budget.min(self.residual.iter().map(|c| u64::from(c.unwrap())).sum());
        }

        open.sort_by(|a, b| b.weight.cmp(&a.weight));
        let mut uncovered = self.closed_uncovered;
        let mut seats_left = seat_budget;
        for o in &open {
            let amb = o.amb.min(o.seats).min(seats_left);
            seats_left -= amb;
            let wheel = o.wheel.min(o.slots).min(o.seats - amb).min(seats_left).min(slot_budget);
            seats_left -= wheel;
            slot_budget -= wheel;
            uncovered += o.weight * (o.wheel + o.amb - amb - wheel);
        }
        if uncovered > best_uncovered {
            return (uncovered, 0, 0);
        }

        let slack = best_uncovered - self.closed_uncovered;
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let mut longest = 0;
        let mut must_carry = 0;
        for o in &open {
            let allowed_left = slack / o.weight;
            let need = (o.wheel + o.amb).saturating_sub(allowed_left);
            if need == 0 {
                continue;
            }
            must_carry += need;
            let need_wheel = if m_enforces_slots(m) { o.wheel.saturating_sub(allowed_left) } else { 0 };
            let Some(trips) = min_trips(&o.resources, need, need_wheel, m) else {
                return hopeless;
            };
            let exit = self.cheapest_exit(o.p).expect("open resources imply an exit");
            let mut costs: Vec<u64> = o.resources.iter().map(|&r| m.to_rp[r][o.p].expect("admissible") + exit).collect();
            costs.sort_unstable();
            longest = longest.max(costs[trips - 1]);
            let mut row = vec![FORBIDDEN; m.n_resources()];
            for &r in &o.resources {
                row[r] = m.to_rp[r][o.p].expect("admissible") + exit;
            }
            rows.extend(std::iter::repeat(row).take(trips));
        }
        if must_carry > seat_budget {
            return hopeless;
        }
        let Some(extra) = min_cost_assignment(&rows, m.n_resources()) else {
            return hopeless;
        };
        let time = match self.mode {
            TimeObjective::Sum => self.time_sum + extra,
            TimeObjective::Makespan => self.current_time().max(longest),
        };
        (uncovered, time, self.trips.len() as u32 + rows.len() as u32)
    }

    fn dfs(&mut self, pos: usize, k: usize, wheel_left: u32, amb_left: u32) {
        let m = self.m;
        if pos == self.rp_order.len() {
            let key = (
                self.closed_uncovered,
                self.current_time(),
                self.trips.len() as u32,
            );
            let trips = std::mem::take(&mut self.trips);
            self.offer(key, &trips);
            self.trips = trips;
            return;
        }
        let p = self.rp_order[pos];
        if k == self.boarding[p].len() || wheel_left + amb_left == 0 {
            let penalty = m.priority[p] * u64::from(wheel_left + amb_left);
            self.closed_uncovered += penalty;
            let (w, a) = self.initial_rp(pos + 1);
            self.dfs(pos + 1, 0, w, a);
            self.closed_uncovered -= penalty;
            return;
        }
        if let Some(best) = &self.best {
            if self.lower_bound(pos, k, wheel_left, amb_left, best.key.0) > best.key {
                return;
            }
        }

        let r = self.boarding[p][k];
        if !self.used[r] {
            let load = board(m.capacity[r], m.slots[r], wheel_left, amb_left);
            let total = load.total();
            if total > 0 {
                let mut shelters = self.shelters[p].clone();
                shelters.retain(|&s| self.residual[s].map_or(true, |c| c >= total));
                // When the nearest shelter can absorb this load and everyone
                // who could still arrive, a farther shelter only helps as a
                // makespan tie-break, and only if its id sorts first.
                if let Some(&nearest) = shelters.first() {
                    let later = self.future_intake(pos, wheel_left + amb_left - total, r);
                    if self.residual[nearest].map_or(true, |c| c - total >= later) {
                        match self.mode {
                            TimeObjective::Sum => shelters.truncate(1),
                            TimeObjective::Makespan => shelters.retain(|&s| s <= nearest),
                        }
                    }
                }
                for s in shelters {
                    let t = m.trip_time(r, p, s);
                    self.used[r] = true;
                    if let Some(c) = self.residual[s].as_mut() {
                        *c -= total;
                    }
                    self.time_sum += t;
                    self.trips.push(Trip { r, p, s, load: load.into() });

                    self.dfs(pos, k + 1, wheel_left - load.wheelchair, amb_left - load.ambulant);

                    self.trips.pop();
                    self.time_sum -= t;
                    if let Some(c) = self.residual[s].as_mut() {
                        *c += total;
                    }
                    self.used[r] = false;
                }
            }
        }
        self.dfs(pos, k + 1, wheel_left, amb_left);
    }
}

pub(super) fn solve(m: &Model<'_>, mode: TimeObjective) -> RecommendationPlan {
    let mut search = Search::new(m, mode);
    let seed = greedy::construct(m);
    let seed_plan = m.assemble(&seed, SolverKind::Exact, mode, None);
    search.offer(seed_plan.rank_key(), &seed);

    let (w, a) = search.initial_rp(0);
    search.dfs(0, 0, w, a);
    let best = search.best.expect("the greedy seed is always a candidate");
    m.assemble(&best.trips, SolverKind::Exact, mode, None)
}
