//! Seeded synthetic graphs and scenarios for property batches and fixtures.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::knowledge::{
    Coordinate, Crisis, CrisisKind, EntityId, KnowledgeSnapshot, MobileResource, Person, Position,
    RescuePoint, Role, Shelter, Terrain, Vehicle, VehicleCategory,
};
use crate::roads::{EdgeRecord, GraphFile, RoadGraph};

/// Pinned parameters of the random scenario batch.
pub const GRID_SIDE: usize = 6;
pub const RESOURCES: (usize, usize) = (1, 6);
pub const RESCUE_POINTS: (usize, usize) = (1, 4);
pub const SHELTERS: (usize, usize) = (1, 3);
pub const DEMAND: (u32, u32) = (1, 10);
pub const PRIORITY: (u8, u8) = (1, 5);

const ORIGIN: (f64, f64) = (49.40, 2.80);
/// Roughly 200 m between neighbouring grid nodes.
const STEP_DEG: f64 = 0.0018;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn node_id(row: usize, col: usize) -> String {
    format!("n{row:02}_{col:02}")
}

fn grid_nodes(rows: usize, cols: usize) -> BTreeMap<String, Coordinate> {
    let mut nodes = BTreeMap::new();
    for r in 0..rows {
        for c in 0..cols {
            let coord = Coordinate::new(ORIGIN.0 + r as f64 * STEP_DEG, ORIGIN.1 + c as f64 * STEP_DEG);
            nodes.insert(node_id(r, c), coord);
        }
    }
    nodes
}

fn neighbours(rows: usize, cols: usize) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                pairs.push((node_id(r, c), node_id(r, c + 1)));
            }
            if r + 1 < rows {
                pairs.push((node_id(r, c), node_id(r + 1, c)));
            }
        }
    }
    pairs
}

/// Full `n`×`n` grid, every road two-way: `2·2·n·(n−1)` directed edges.
pub fn grid_graph_file(n: usize, length_m: f64, speed_kmh: Option<f64>) -> GraphFile {
    let mut file = GraphFile {
        nodes: grid_nodes(n, n),
        edges: Vec::new(),
    };
    for (a, b) in neighbours(n, n) {
        file.add_two_way(&a, &b, length_m, speed_kmh);
    }
    file
}

/// Random grid-shaped graph of at most 50 nodes. Each direction of each road
/// exists with probability 0.8 and gets its own length and speed, so graphs
/// are asymmetric and may be disconnected.
pub fn random_graph_file(rng: &mut impl Rng) -> GraphFile {
    let rows = rng.gen_range(1..=7);
    let cols = rng.gen_range(2..=7);
    let mut file = GraphFile {
        nodes: grid_nodes(rows, cols),
        edges: Vec::new(),
    };
    for (a, b) in neighbours(rows, cols) {
        for (from, to) in [(&a, &b), (&b, &a)] {
            if rng.gen_bool(0.8) {
                file.edges.push(EdgeRecord {
                    from: from.clone(),
                    to: to.clone(),
                    length_m: rng.gen_range(50.0..600.0),
                    speed_kmh: Some(*[10.0, 20.0, 30.0, 50.0, 70.0].choose(rng).unwrap()),
                });
            }
        }
    }
    // A few diagonal shortcuts so shortest paths are not always Manhattan.
    let ids: Vec<String> = file.nodes.keys().cloned().collect();
    for _ in 0..rng.gen_range(0..=3) {
        let from = ids.choose(rng).unwrap().clone();
        let to = ids.choose(rng).unwrap().clone();
        if from != to {
            file.edges.push(EdgeRecord {
                from,
                to,
                length_m: rng.gen_range(100.0..1500.0),
                speed_kmh: None,
            });
        }
    }
    file
}

/// A random scenario and the road graph it lives on.
#[derive(Clone, Debug)]
pub struct RandomScenario {
    pub snapshot: KnowledgeSnapshot,
    pub graph: RoadGraph,
}

struct Model {
    category: VehicleCategory,
    seats: u32,
    wheelchair_slots: u32,
    license: &'static str,
    terrain: Terrain,
}

const FLEET: [Model; 3] = [
    Model {
        category: VehicleCategory::Car,
        seats: 5,
        wheelchair_slots: 0,
        license: "B",
        terrain: Terrain::Land,
    },
    Model {
        category: VehicleCategory::Minibus,
        seats: 9,
        wheelchair_slots: 1,
        license: "D",
        terrain: Terrain::Land,
    },
    Model {
        category: VehicleCategory::Boat,
        seats: 6,
        wheelchair_slots: 0,
        license: "boat",
        terrain: Terrain::Water,
    },
];

/// Random flood scenario on a 6×6 grid within oracle scale.
///
/// Roads are two-way with random speeds, a few of them closed, so some legs
/// may be unreachable. Every entity sits on a node.
pub fn random_scenario<R: Rng>(rng: &mut R) -> RandomScenario {
    let resources = rng.gen_range(RESOURCES.0..=RESOURCES.1);
    let rescue_points = rng.gen_range(RESCUE_POINTS.0..=RESCUE_POINTS.1);
    let shelters = rng.gen_range(SHELTERS.0..=SHELTERS.1);
    random_scenario_sized(rng, resources, rescue_points, shelters)
}

/// Same distribution as [`random_scenario`] with fixed entity counts.
pub fn random_scenario_sized<R: Rng>(
    rng: &mut R,
    resources: usize,
    rescue_points: usize,
    shelters: usize,
) -> RandomScenario {
    let mut file = GraphFile {
        nodes: grid_nodes(GRID_SIDE, GRID_SIDE),
        edges: Vec::new(),
    };
    for (a, b) in neighbours(GRID_SIDE, GRID_SIDE) {
        if rng.gen_bool(0.9) {
            let speed = *[20.0, 30.0, 50.0].choose(rng).unwrap();
            file.add_two_way(&a, &b, rng.gen_range(150.0..250.0), Some(speed));
        }
    }
    let graph = RoadGraph::from_file(&file).expect("generated graph is valid");
    let nodes: Vec<String> = file.nodes.keys().cloned().collect();
    let at = |rng: &mut R| Position::Node {
        node: nodes.choose(rng).unwrap().clone(),
    };

    let mut snapshot = KnowledgeSnapshot::empty(Crisis {
        id: EntityId::new("crisis"),
        kind: CrisisKind::Flood,
        compatible_terrains: BTreeMap::new(),
    });

    for i in 0..resources {
        let model = &FLEET[rng.gen_range(0..FLEET.len())];
        let driver = EntityId::new(format!("d{i}"));
        let vehicle = EntityId::new(format!("v{i}"));
        snapshot.persons.push(Person {
            id: driver.clone(),
            name: format!("Driver {i}"),
            role: Role::HumanResource,
            mobility: Default::default(),
            licenses: BTreeSet::from([model.license.to_owned()]),
        });
        snapshot.vehicles.push(Vehicle {
            id: vehicle.clone(),
            category: model.category.clone(),
            seats: model.seats,
            wheelchair_slots: model.wheelchair_slots,
            required_license: model.license.to_owned(),
            terrain: model.terrain,
        });
        snapshot.mobile_resources.push(MobileResource {
            id: MobileResource::pairing_id(&driver, &vehicle),
            driver,
            vehicle,
            position: at(rng),
            available: true,
            committed: false,
            updated_at_ms: None,
        });
    }

    for i in 0..rescue_points {
        let id = EntityId::new(format!("rp{i}"));
        let evacuees = rng.gen_range(DEMAND.0..=DEMAND.1);
        let wheelchair_evacuees = rng.gen_range(0..=evacuees.min(2));
        match rng.gen_range(0..4) {
            0 => {
                snapshot.crisis.compatible_terrains.insert(id.clone(), BTreeSet::from([Terrain::Water]));
            }
            1 => {
                snapshot.crisis.compatible_terrains.insert(id.clone(), BTreeSet::from([Terrain::Land]));
            }
            _ => {}
        }
        snapshot.rescue_points.push(RescuePoint {
            id,
            position: at(rng),
            evacuees,
            wheelchair_evacuees,
            priority: rng.gen_range(PRIORITY.0..=PRIORITY.1),
        });
    }

    for i in 0..shelters {
        snapshot.shelters.push(Shelter {
            id: EntityId::new(format!("s{i}")),
            position: at(rng),
            capacity: rng.gen_range(3..=20),
        });
    }

    RandomScenario { snapshot, graph }
}
