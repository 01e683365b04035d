//! Shortest travel times against a Bellman-Ford oracle on random graphs.

use evacrec_core::generator::{self, grid_graph_file, random_graph_file};
use evacrec_core::knowledge::{Coordinate, EntityId, Location, Place, PlaceKind};
use evacrec_core::roads::{haversine_m, GraphFile, RoadGraph, TravelTime, DEFAULT_SPEED_KMH};
use proptest::prelude::*;
use rand::Rng;

/// All-pairs times by edge relaxation over the raw file. Node order is the
/// file's (sorted) key order.
fn bellman_ford(file: &GraphFile) -> Vec<Vec<Option<u64>>> {
    let ids: Vec<&String> = file.nodes.keys().collect();
    let pos = |id: &str| ids.iter().position(|x| *x == id).unwrap();
    let edges: Vec<(usize, usize, u64)> = file
        .edges
        .iter()
        .map(|e| {
            let speed = e.speed_kmh.unwrap_or(DEFAULT_SPEED_KMH);
            (pos(&e.from), pos(&e.to), (e.length_m / (speed / 3.6)).round() as u64)
        })
        .collect();
    let n = ids.len();
    (0..n)
        .map(|s| {
            let mut d = vec![None; n];
            d[s] = Some(0u64);
            for _ in 0..n {
                let mut changed = false;
                for &(a, b, w) in &edges {
                    if let Some(da) = d[a] {
                        if d[b].map_or(true, |db| da + w < db) {
                            d[b] = Some(da + w);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            d
        })
        .collect()
}

fn as_option(t: TravelTime) -> Option<u64> {
    t.seconds()
}

fn node_places(graph_file: &GraphFile, prefix: &str) -> Vec<Place> {
    graph_file
        .nodes
        .keys()
        .map(|n| Place {
            id: EntityId::new(format!("{prefix}-{n}")),
            kind: PlaceKind::RescuePoint,
            location: Location::Node(n.clone()),
        })
        .collect()
}

fn check_graph(seed: u64) {
    let file = random_graph_file(&mut generator::rng(seed));
    let graph = RoadGraph::from_file(&file).unwrap();
    let oracle = bellman_ford(&file);
    let ids: Vec<&String> = file.nodes.keys().collect();

    for (i, from) in ids.iter().enumerate() {
        let row = graph.single_source(graph.node(from).unwrap());
        for (j, to) in ids.iter().enumerate() {
            let got = as_option(row[graph.node(to).unwrap().0]);
            assert_eq!(got, oracle[i][j], "seed {seed}: {from} -> {to}");
        }
        assert_eq!(graph.shortest_time(from, from).unwrap(), TravelTime::Finite(0));
    }

    let n = ids.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if let (Some(ij), Some(jk)) = (oracle[i][j], oracle[j][k]) {
                    let ik = oracle[i][k].expect("a path through j exists");
                    assert!(ik <= ij + jk, "seed {seed}: triangle {i} {j} {k}");
                }
            }
        }
    }

    let origins = node_places(&file, "o");
    let dests = node_places(&file, "d");
    let m = graph.build_matrix(&origins, &dests).unwrap();
    for (a, o) in origins.iter().enumerate() {
        for (b, d) in dests.iter().enumerate() {
            let (Location::Node(x), Location::Node(y)) = (&o.location, &d.location) else {
                unreachable!()
            };
            assert_eq!(m.seconds[a][b], graph.shortest_time(x, y).unwrap());
            assert_eq!(m.get(&o.id, &d.id), Some(m.seconds[a][b]));
        }
    }
}

#[test]
fn fifty_random_graphs_match_bellman_ford() {
    for seed in 0..50 {
        check_graph(seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_graphs_match_bellman_ford(seed in any::<u64>()) {
        check_graph(seed);
    }

    /// An extra road never makes any trip slower.
    #[test]
    fn adding_an_edge_never_increases_times(seed in any::<u64>()) {
        let mut rng = generator::rng(seed);
        let file = random_graph_file(&mut rng);
        let graph = RoadGraph::from_file(&file).unwrap();
        let ids: Vec<String> = file.nodes.keys().cloned().collect();
        let a = &ids[rng.gen_range(0..ids.len())];
        let b = &ids[rng.gen_range(0..ids.len())];
        prop_assume!(a != b);
        let faster = graph.with_edge(a, b, rng.gen_range(10.0..2000.0), 50.0).unwrap();
        for x in &ids {
            let before = graph.single_source(graph.node(x).unwrap());
            let after = faster.single_source(faster.node(x).unwrap());
            for (p, q) in before.iter().zip(&after) {
                match (p.seconds(), q.seconds()) {
                    (Some(p), Some(q)) => prop_assert!(q <= p),
                    (Some(_), None) => prop_assert!(false, "edge made a node unreachable"),
                    _ => {}
                }
            }
        }
    }

    /// Snapping a coordinate lands on a node no farther than any other.
    #[test]
    fn snapping_matches_a_linear_scan(seed in any::<u64>(), dlat in -0.01f64..0.02, dlon in -0.01f64..0.02) {
        let file = random_graph_file(&mut generator::rng(seed));
        let graph = RoadGraph::from_file(&file).unwrap();
        let at = Coordinate::new(49.40 + dlat, 2.80 + dlon);
        let got = graph.node_id(graph.snap(&Location::Coordinate(at)).unwrap()).to_owned();
        let best = file
            .nodes
            .iter()
            .map(|(id, c)| (haversine_m(at, *c), id.clone()))
            .min_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)))
            .unwrap();
        prop_assert_eq!(got, best.1);
    }
}

#[test]
fn twenty_by_twenty_grid_has_expected_size() {
    let g = RoadGraph::from_file(&grid_graph_file(20, 200.0, Some(36.0))).unwrap();
    assert_eq!(g.node_count(), 400);
    assert_eq!(g.edge_count(), 1520);
    // 200 m at 36 km/h is 20 s per block; corner to corner is 38 blocks.
    let first = g.node_id(evacrec_core::roads::NodeIdx(0)).to_owned();
    let last = g.node_id(evacrec_core::roads::NodeIdx(399)).to_owned();
    assert_eq!(g.shortest_time(&first, &last).unwrap(), TravelTime::Finite(760));
}
