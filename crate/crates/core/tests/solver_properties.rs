//! Invariance and monotonicity properties, and hand-built instances.

mod common;

use common::{demand, instance, random_instance, resource, shelter};
use evacrec_core::generator;
use evacrec_core::knowledge::EntityId;
use evacrec_core::recommender::{
    check_feasible, enumerate_all, explain, instance_from_snapshot, solve, solve_with, ConstraintKind,
    ConstraintSet, PlanStatus, ProblemInstance, RecommendationPlan, ShortageCause, SolverConfig,
    SolverKind, TimeObjective,
};
use evacrec_core::roads::{TravelTime, TravelTimeMatrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn shuffle_matrix(m: &TravelTimeMatrix, rng: &mut ChaCha8Rng) -> TravelTimeMatrix {
    let mut rows: Vec<usize> = (0..m.origins.len()).collect();
    let mut cols: Vec<usize> = (0..m.destinations.len()).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    TravelTimeMatrix {
        origins: rows.iter().map(|&i| m.origins[i].clone()).collect(),
        destinations: cols.iter().map(|&j| m.destinations[j].clone()).collect(),
        seconds: rows
            .iter()
            .map(|&i| cols.iter().map(|&j| m.seconds[i][j]).collect())
            .collect(),
    }
}

fn shuffled(inst: &ProblemInstance, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = inst.clone();
    out.resources.shuffle(&mut rng);
    out.rescue_points.shuffle(&mut rng);
    out.shelters.shuffle(&mut rng);
    out.times_to_rp = shuffle_matrix(&inst.times_to_rp, &mut rng);
    out.times_rp_to_shelter = shuffle_matrix(&inst.times_rp_to_shelter, &mut rng);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shuffling_inputs_gives_byte_identical_plans(seed in any::<u64>(), shuffle in any::<u64>()) {
        let inst = random_instance(seed);
        let a = solve(&inst).unwrap().to_json();
        let b = solve(&shuffled(&inst, shuffle)).unwrap().to_json();
        prop_assert_eq!(a, b);
        prop_assert_eq!(inst.fingerprint(), shuffled(&inst, shuffle).fingerprint());
    }

    #[test]
    fn scaling_all_times_keeps_the_chosen_triples(seed in any::<u64>(), k in 2u64..7) {
        let inst = random_instance(seed);
        let mut scaled = inst.clone();
        scaled.times_to_rp = inst.times_to_rp.scaled(k);
        scaled.times_rp_to_shelter = inst.times_rp_to_shelter.scaled(k);
        let a = solve(&inst).unwrap();
        let b = solve(&scaled).unwrap();
        prop_assert_eq!(a.triples(), b.triples());
        prop_assert_eq!(a.objective.total_time * k, b.objective.total_time);
    }

    #[test]
    fn adding_a_resource_never_worsens_the_objective(seed in any::<u64>(), t in 0u64..2000) {
        let inst = random_instance(seed);
        let before = solve(&inst).unwrap();
        let mut bigger = inst.clone();
        let mut extra = inst.resources[0].clone();
        extra.id = EntityId::new("zz-extra");
        bigger.resources.push(extra);
        bigger.times_to_rp.origins.push(EntityId::new("zz-extra"));
        bigger.times_to_rp.seconds.push(vec![TravelTime::Finite(t); inst.rescue_points.len()]);
        let after = solve(&bigger).unwrap();
        prop_assert!(after.rank_key() <= before.rank_key());
    }

    #[test]
    fn solved_plans_respect_every_constraint(seed in any::<u64>(), wheel in any::<bool>(), cap in any::<bool>(), terrain in any::<bool>()) {
        let mut inst = random_instance(seed);
        inst.constraints = ConstraintSet {
            enforce_wheelchair: wheel,
            enforce_shelter_capacity: cap,
            enforce_terrain: terrain,
        };
        let plan = solve(&inst).unwrap();
        let f = check_feasible(&inst, &plan).unwrap();
        prop_assert!(f.feasible, "{:?}", f.violations);
        let e = enumerate_all(&inst).unwrap();
        prop_assert_eq!(Some(plan.rank_key()), e.optimum(TimeObjective::Sum));
    }

    #[test]
    fn objective_fields_are_consistent(seed in any::<u64>()) {
        let inst = random_instance(seed);
        let plan = solve(&inst).unwrap();
        let total: u64 = plan.assignments.iter().map(|a| a.t_to_rp + a.t_rp_to_shelter).sum();
        prop_assert_eq!(plan.objective.total_time, total);
        prop_assert_eq!(plan.objective.vehicles_used as usize, plan.assignments.len());
        let weight: u64 = inst
            .rescue_points
            .iter()
            .map(|p| u64::from(p.priority) * u64::from(plan.uncovered.get(&p.id).map_or(0, |u| u.evacuees_left)))
            .sum();
        prop_assert_eq!(plan.objective.uncovered_weight, weight);
    }
}

#[test]
fn no_rescue_points_gives_an_empty_plan() {
    let inst = instance(vec![resource("r1", 5)], vec![], vec![shelter("s1", 10)], &[], &[]);
    let plan = solve(&inst).unwrap();
    assert_eq!(plan.status, PlanStatus::Empty);
    assert_eq!(plan.rank_key(), (0, 0, 0));
    assert!(explain(&inst, &plan).assignments.is_empty());
    assert!(explain(&inst, &plan).shortages.is_empty());
}

#[test]
fn no_resources_with_demand_is_an_empty_plan_not_an_error() {
    let inst = instance(vec![], vec![demand("p1", 3, 2)], vec![shelter("s1", 10)], &[], &[("p1", "s1", 60)]);
    let plan = solve(&inst).unwrap();
    assert_eq!(plan.status, PlanStatus::Empty);
    assert_eq!(plan.objective.uncovered_weight, 6);
    assert!(plan.has_uncovered_demand());
}

#[test]
fn single_minibus_trip_takes_500_seconds() {
    let inst = instance(
        vec![resource("mb", 9)],
        vec![demand("p1", 8, 3)],
        vec![shelter("s1", 50)],
        &[("mb", "p1", 300)],
        &[("p1", "s1", 200)],
    );
    let plan = solve(&inst).unwrap();
    assert_eq!(plan.status, PlanStatus::FullCoverage);
    assert_eq!(plan.assignments.len(), 1);
    assert_eq!(plan.assignments[0].evacuees_loaded, 8);
    assert_eq!(plan.objective.total_time, 500);

    let e = enumerate_all(&inst).unwrap();
    assert_eq!(e.candidates_examined, 2);
    assert_eq!(e.plans.len(), 2);
    assert_eq!(e.optimal_plans(TimeObjective::Sum), vec![&plan]);
}

#[test]
fn two_resources_one_point_one_shelter_is_four_candidates() {
    let inst = instance(
        vec![resource("a", 5), resource("b", 5)],
        vec![demand("p1", 6, 1)],
        vec![shelter("s1", 50)],
        &[("a", "p1", 10), ("b", "p1", 20)],
        &[("p1", "s1", 5)],
    );
    let e = enumerate_all(&inst).unwrap();
    assert_eq!(e.candidates_examined, 4);
    assert_eq!(e.plans.len(), 4);
}

/// Demand 4 at one point. A car with 4 passenger seats needs 150 s; two
/// 2-seat vehicles need 75 s each, also 150 s in total.
fn tie_instance() -> ProblemInstance {
    instance(
        vec![resource("big", 5), resource("small-a", 3), resource("small-b", 3)],
        vec![demand("p1", 4, 3)],
        vec![shelter("s1", 10)],
        &[("big", "p1", 100), ("small-a", "p1", 25), ("small-b", "p1", 25)],
        &[("p1", "s1", 50)],
    )
}

#[test]
fn equal_time_plans_prefer_fewer_vehicles() {
    let inst = tie_instance();
    let e = enumerate_all(&inst).unwrap();
    let best = e.optimum(TimeObjective::Sum).unwrap();
    let equal_time: Vec<&RecommendationPlan> = e
        .plans
        .iter()
        .map(|(p, _)| p)
        .filter(|p| (p.objective.uncovered_weight, p.objective.total_time) == (best.0, best.1))
        .collect();
    let counts: Vec<u32> = equal_time.iter().map(|p| p.objective.vehicles_used).collect();
    assert!(counts.contains(&1) && counts.contains(&2), "{counts:?}");

    let plan = solve(&inst).unwrap();
    assert_eq!(plan.objective.total_time, 150);
    assert_eq!(plan.objective.vehicles_used, 1);
    assert_eq!(plan.assignments[0].resource.as_str(), "big");
}

#[test]
fn short_fleet_covers_the_urgent_point_first() {
    // Demand 10 against 7 seats.
    let inst = instance(
        vec![resource("car", 5), resource("small", 4)],
        vec![demand("hi", 5, 5), demand("lo", 5, 1)],
        vec![shelter("s1", 20)],
        &[("car", "hi", 400), ("car", "lo", 10), ("small", "hi", 400), ("small", "lo", 10)],
        &[("hi", "s1", 100), ("lo", "s1", 100)],
    );
    let plan = solve(&inst).unwrap();
    assert_eq!(plan.status, PlanStatus::PartialCoverage);
    assert!(!plan.uncovered.contains_key(&EntityId::new("hi")));
    assert_eq!(plan.objective.uncovered_weight, 5);
    assert_eq!(Some(plan.rank_key()), enumerate_all(&inst).unwrap().optimum(TimeObjective::Sum));

    let ex = explain(&inst, &plan);
    assert_eq!(ex.shortages.len(), 1);
    assert_eq!(
        ex.shortages[0].cause,
        ShortageCause::FleetCapacity {
            total_fleet_capacity: 7,
            total_demand: 10
        }
    );
}

#[test]
fn full_coverage_explains_without_shortages() {
    let inst = tie_instance();
    let plan = solve(&inst).unwrap();
    let ex = explain(&inst, &plan);
    assert!(ex.shortages.is_empty());
    assert_eq!(ex.assignments.len(), 1);
    assert_eq!(ex.assignments[0].t_to_rp + ex.assignments[0].t_rp_to_shelter, 150);
}

#[test]
fn unreachable_points_are_explained_as_having_no_eligible_resource() {
    let inst = instance(
        vec![resource("car", 5)],
        vec![demand("island", 3, 4)],
        vec![shelter("s1", 20)],
        &[],
        &[("island", "s1", 100)],
    );
    let plan = solve(&inst).unwrap();
    assert_eq!(plan.status, PlanStatus::Empty);
    assert_eq!(explain(&inst, &plan).shortages[0].cause, ShortageCause::NoEligibleResource);
}

#[test]
fn feasibility_checks_capacity_and_single_use() {
    let inst = instance(
        vec![resource("mb", 9)],
        vec![demand("p1", 9, 3), demand("p2", 4, 3)],
        vec![shelter("s1", 50)],
        &[("mb", "p1", 300), ("mb", "p2", 300)],
        &[("p1", "s1", 200), ("p2", "s1", 200)],
    );
    let mut plan = solve(&inst).unwrap();
    plan.assignments.truncate(1);
    plan.assignments[0].rescue_point = EntityId::new("p1");
    plan.assignments[0].t_to_rp = 300;
    plan.assignments[0].t_rp_to_shelter = 200;
    plan.assignments[0].evacuees_loaded = 8;
    assert!(check_feasible(&inst, &plan).unwrap().feasible);

    plan.assignments[0].evacuees_loaded = 9;
    let f = check_feasible(&inst, &plan).unwrap();
    assert!(!f.feasible);
    assert_eq!(f.violations[0].constraint, ConstraintKind::CapacityExceeded);

    plan.assignments[0].evacuees_loaded = 4;
    let mut second = plan.assignments[0].clone();
    second.rescue_point = EntityId::new("p2");
    plan.assignments.push(second);
    let kinds: Vec<_> = check_feasible(&inst, &plan).unwrap().violations.iter().map(|v| v.constraint).collect();
    assert_eq!(kinds, vec![ConstraintKind::SingleUse]);

    plan.assignments[1].resource = EntityId::new("ghost");
    assert!(check_feasible(&inst, &plan).is_err());
}

#[test]
fn oversized_instances_are_refused_by_the_oracle() {
    let mut rng = generator::rng(5);
    let s = generator::random_scenario_sized(&mut rng, 7, 2, 2);
    let inst = instance_from_snapshot(&s.snapshot, &s.graph, ConstraintSet::default()).unwrap();
    assert!(enumerate_all(&inst).is_err());
}

#[test]
fn exact_search_stays_fast_at_the_default_bound() {
    let mut worst = std::time::Duration::ZERO;
    for seed in 0..20 {
        let mut rng = generator::rng(seed);
        let s = generator::random_scenario_sized(&mut rng, 12, 6, 3);
        let inst = instance_from_snapshot(&s.snapshot, &s.graph, ConstraintSet::default()).unwrap();
        let t = Instant::now();
        let exact = solve(&inst).unwrap();
        worst = worst.max(t.elapsed());
        assert_eq!(exact.solver, SolverKind::Exact);
        let greedy = solve_with(&inst, &SolverConfig { exact_bound: 0, ..Default::default() }).unwrap();
        assert!(exact.rank_key() <= greedy.rank_key());
        assert!(greedy.lower_bound_s.unwrap() <= exact.objective.total_time);
        assert!(check_feasible(&inst, &exact).unwrap().feasible);
    }
    eprintln!("slowest exact solve: {worst:?}");
    assert!(worst < std::time::Duration::from_secs(30), "slowest exact solve took {worst:?}");
}
