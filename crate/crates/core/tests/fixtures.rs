//! The shipped fixtures load, validate and solve to their documented optimum.

use std::path::PathBuf;

use evacrec_core::knowledge::KnowledgeSnapshot;
use evacrec_core::recommender::{check_feasible, enumerate_all, solve, PlanStatus, TimeObjective};
use evacrec_core::roads::RoadGraph;
use evacrec_core::scenario::Scenario;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn compiegne_fixture_loads_with_expected_counts() {
    let s = Scenario::load(fixture("compiegne-flood.json")).unwrap();
    let k = s.snapshot();
    assert_eq!(k.mobile_resources.len(), 4);
    assert_eq!(k.rescue_points.len(), 2);
    assert_eq!(k.shelters.len(), 2);
    assert!(k.validate().is_empty());
    assert_eq!(s.graph.node_count(), 36);
}

#[test]
fn compiegne_optimum_covers_everyone_with_three_trips() {
    let s = Scenario::load(fixture("compiegne-flood.json")).unwrap();
    let inst = s.instance(None).unwrap();
    let plan = solve(&inst).unwrap();
    assert_eq!(plan.status, PlanStatus::FullCoverage);
    let used: Vec<&str> = plan.assignments.iter().map(|a| a.resource.as_str()).collect();
    assert_eq!(used, ["mr-alice-minibus-1", "mr-bruno-car-b", "mr-david-boat-d"]);
    assert_eq!(plan.assignments[0].wheelchair_loaded, 1);
    assert!(check_feasible(&inst, &plan).unwrap().feasible);
    let all = enumerate_all(&inst).unwrap();
    assert_eq!(Some(plan.rank_key()), all.optimum(TimeObjective::Sum));
}

#[test]
fn snapshot_file_round_trips() {
    let s = Scenario::load(fixture("compiegne-flood.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kb.json");
    s.snapshot().save(&path).unwrap();
    assert_eq!(&KnowledgeSnapshot::load(&path).unwrap(), s.snapshot());
}

#[test]
fn grid_fixture_has_400_nodes_and_1520_edges() {
    let g = RoadGraph::load(fixture("grid-20.json")).unwrap();
    assert_eq!(g.node_count(), 400);
    assert_eq!(g.edge_count(), 1520);
}
