//! Directed road graph with integer-second edge weights, nearest-node
//! snapping, Dijkstra shortest times and travel-time matrices.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::knowledge::{Coordinate, EntityId, Location, Place};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const DEFAULT_SPEED_KMH: f64 = 30.0;

/// Travel time in whole seconds, or the unreachable sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TravelTime {
    Finite(u64),
    Unreachable,
}

impl TravelTime {
    pub fn seconds(self) -> Option<u64> {
        match self {
            TravelTime::Finite(s) => Some(s),
            TravelTime::Unreachable => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, TravelTime::Finite(_))
    }
}

impl fmt::Display for TravelTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TravelTime::Finite(s) => write!(f, "{s} s"),
            TravelTime::Unreachable => f.write_str("unreachable"),
        }
    }
}

// Serialized as a number, or `null` when unreachable.
impl Serialize for TravelTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.seconds().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TravelTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Option::<u64>::deserialize(deserializer)?
            .map_or(TravelTime::Unreachable, TravelTime::Finite))
    }
}

/// Seconds to traverse `length_m` at `speed_kmh`, rounded half up.
pub fn edge_seconds(length_m: f64, speed_kmh: f64) -> u64 {
    (length_m * 3.6 / speed_kmh + 0.5).floor() as u64
}

/// Great-circle distance in meters.
pub fn haversine_m(a: Coordinate, b: Coordinate) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    pub length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_kmh: Option<f64>,
}

/// On-disk graph layout. Bidirectional roads are two directed edges.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: BTreeMap<String, Coordinate>,
    pub edges: Vec<EdgeRecord>,
}

impl GraphFile {
    pub fn add_two_way(&mut self, a: &str, b: &str, length_m: f64, speed_kmh: Option<f64>) {
        for (from, to) in [(a, b), (b, a)] {
            self.edges.push(EdgeRecord {
                from: from.to_owned(),
                to: to.to_owned(),
                length_m,
                speed_kmh,
            });
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed graph file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid graph: {}", .0.join("; "))]
    GraphViolation(Vec<String>),
    #[error("road graph has no nodes")]
    EmptyGraph,
    #[error("unknown node {0}")]
    UnknownNode(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub usize);

#[derive(Clone, Debug)]
pub struct Edge {
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub length_m: f64,
    pub speed_kmh: f64,
    pub seconds: u64,
}

/// Validated, immutable road graph. Node indices follow ascending node id.
#[derive(Clone, Debug)]
pub struct RoadGraph {
    ids: Vec<String>,
    coords: Vec<Coordinate>,
    index: HashMap<String, NodeIdx>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(NodeIdx, u64)>>,
    fingerprint: String,
}

impl RoadGraph {
    pub fn from_file(file: &GraphFile) -> Result<Self, GraphError> {
        let mut problems = Vec::new();
        let ids: Vec<String> = file.nodes.keys().cloned().collect();
        let coords: Vec<Coordinate> = file.nodes.values().copied().collect();
        for (id, c) in ids.iter().zip(&coords) {
            if !c.is_valid() {
                problems.push(format!("node {id}: coordinate out of range"));
            }
        }
        let index: HashMap<String, NodeIdx> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), NodeIdx(i)))
            .collect();
        let mut edges = Vec::with_capacity(file.edges.len());
        for (k, e) in file.edges.iter().enumerate() {
            let speed = e.speed_kmh.unwrap_or(DEFAULT_SPEED_KMH);
            let from = index.get(&e.from);
            let to = index.get(&e.to);
            if from.is_none() {
                problems.push(format!("edge {k}: unknown endpoint {}", e.from));
            }
            if to.is_none() {
                problems.push(format!("edge {k}: unknown endpoint {}", e.to));
            }
            if !(e.length_m.is_finite() && e.length_m > 0.0) {
                problems.push(format!("edge {k}: length_m must be positive"));
            }
            if !(speed.is_finite() && speed > 0.0) {
                problems.push(format!("edge {k}: speed_kmh must be positive"));
            }
            if let (Some(&from), Some(&to)) = (from, to) {
                edges.push(Edge {
                    from,
                    to,
                    length_m: e.length_m,
                    speed_kmh: speed,
                    seconds: edge_seconds(e.length_m, speed),
                });
            }
        }
        if !problems.is_empty() {
            return Err(GraphError::GraphViolation(problems));
        }
        let mut adjacency = vec![Vec::new(); ids.len()];
        for e in &edges {
            adjacency[e.from.0].push((e.to, e.seconds));
        }
        let canonical = serde_json::to_vec(file).expect("graph file serializes");
        Ok(RoadGraph {
            ids,
            coords,
            index,
            edges,
            adjacency,
            fingerprint: hex::encode(Sha256::digest(&canonical)),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let text = fs::read_to_string(path)?;
        let file: GraphFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            nodes: self
                .ids
                .iter()
                .cloned()
                .zip(self.coords.iter().copied())
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    from: self.ids[e.from.0].clone(),
                    to: self.ids[e.to.0].clone(),
                    length_m: e.length_m,
                    speed_kmh: Some(e.speed_kmh),
                })
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_id(&self, idx: NodeIdx) -> &str {
        &self.ids[idx.0]
    }

    pub fn node_coord(&self, idx: NodeIdx) -> Coordinate {
        self.coords[idx.0]
    }

    pub fn node(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    /// SHA-256 of the canonical graph file.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Nearest node by haversine distance; ties go to the smallest node id.
    pub fn nearest_node(&self, at: Coordinate) -> Result<NodeIdx, GraphError> {
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in self.coords.iter().enumerate() {
            let d = haversine_m(at, *c);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| NodeIdx(i)).ok_or(GraphError::EmptyGraph)
    }

    pub fn snap(&self, location: &Location) -> Result<NodeIdx, GraphError> {
        if self.ids.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        match location {
            Location::Coordinate(c) => self.nearest_node(*c),
            Location::Node(id) => self.node(id).ok_or_else(|| GraphError::UnknownNode(id.clone())),
        }
    }

    /// Dijkstra from one source to every node.
    pub fn single_source(&self, source: NodeIdx) -> Vec<TravelTime> {
        let mut dist: Vec<Option<u64>> = vec![None; self.ids.len()];
        let mut heap = BinaryHeap::new();
        dist[source.0] = Some(0);
        heap.push(Reverse((0u64, source.0)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u].is_some_and(|best| d > best) {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let next = d + w;
                if dist[v.0].map_or(true, |cur| next < cur) {
                    dist[v.0] = Some(next);
                    heap.push(Reverse((next, v.0)));
                }
            }
        }
        dist.into_iter()
            .map(|d| d.map_or(TravelTime::Unreachable, TravelTime::Finite))
            .collect()
    }

    pub fn shortest_time(&self, from: &str, to: &str) -> Result<TravelTime, GraphError> {
        let from = self
            .node(from)
            .ok_or_else(|| GraphError::UnknownNode(from.to_owned()))?;
        let to = self
            .node(to)
            .ok_or_else(|| GraphError::UnknownNode(to.to_owned()))?;
        if from == to {
            return Ok(TravelTime::Finite(0));
        }
        Ok(self.single_source(from)[to.0])
    }

    /// Origin-by-destination travel times, one Dijkstra run per distinct
    /// origin node.
    pub fn build_matrix(
        &self,
        origins: &[Place],
        destinations: &[Place],
    ) -> Result<TravelTimeMatrix, GraphError> {
        if origins.is_empty() || destinations.is_empty() {
            return Ok(TravelTimeMatrix {
                origins: origins.iter().map(|p| p.id.clone()).collect(),
                destinations: destinations.iter().map(|p| p.id.clone()).collect(),
                seconds: vec![Vec::new(); origins.len()],
            });
        }
        let origin_nodes = origins
            .iter()
            .map(|p| self.snap(&p.location))
            .collect::<Result<Vec<_>, _>>()?;
        let dest_nodes = destinations
            .iter()
            .map(|p| self.snap(&p.location))
            .collect::<Result<Vec<_>, _>>()?;
        let mut runs: BTreeMap<NodeIdx, Vec<TravelTime>> = BTreeMap::new();
        for &node in &origin_nodes {
            runs.entry(node).or_insert_with(|| self.single_source(node));
        }
        let seconds = origin_nodes
            .iter()
            .map(|o| {
                let row = &runs[o];
                dest_nodes.iter().map(|d| row[d.0]).collect()
            })
            .collect();
        Ok(TravelTimeMatrix {
            origins: origins.iter().map(|p| p.id.clone()).collect(),
            destinations: destinations.iter().map(|p| p.id.clone()).collect(),
            seconds,
        })
    }

    /// Copy of the graph with one extra directed edge.
    pub fn with_edge(&self, from: &str, to: &str, length_m: f64, speed_kmh: f64) -> Result<Self, GraphError> {
        let mut file = self.to_file();
        file.edges.push(EdgeRecord {
            from: from.to_owned(),
            to: to.to_owned(),
            length_m,
            speed_kmh: Some(speed_kmh),
        });
        Self::from_file(&file)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelTimeMatrix {
    pub origins: Vec<EntityId>,
    pub destinations: Vec<EntityId>,
    /// `seconds[i][j]`: origin i to destination j.
    pub seconds: Vec<Vec<TravelTime>>,
}

impl TravelTimeMatrix {
    pub fn get(&self, origin: &EntityId, destination: &EntityId) -> Option<TravelTime> {
        let i = self.origins.iter().position(|o| o == origin)?;
        let j = self.destinations.iter().position(|d| d == destination)?;
        self.seconds.get(i)?.get(j).copied()
    }

    pub fn is_well_formed(&self) -> bool {
        self.seconds.len() == self.origins.len()
            && self
                .seconds
                .iter()
                .all(|row| row.len() == self.destinations.len())
    }

    /// Same matrix with every finite entry multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let mut out = self.clone();
        for cell in out.seconds.iter_mut().flatten() {
            if let TravelTime::Finite(s) = cell {
                *s *= factor;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::PlaceKind;

    fn coord(lat: f64, lon: f64) -> Coordinate {
        Coordinate::new(lat, lon)
    }

    fn line_graph() -> RoadGraph {
        // a→b→c→d→e with 10, 20, 30, 40 s (at 36 km/h = 10 m/s).
        let mut file = GraphFile::default();
        for (i, id) in ["a", "b", "c", "d", "e"].iter().enumerate() {
            file.nodes.insert(id.to_string(), coord(49.0, 2.0 + i as f64 * 0.01));
        }
        for (from, to, len) in [("a", "b", 100.0), ("b", "c", 200.0), ("c", "d", 300.0), ("d", "e", 400.0)] {
            file.edges.push(EdgeRecord {
                from: from.into(),
                to: to.into(),
                length_m: len,
                speed_kmh: Some(36.0),
            });
        }
        RoadGraph::from_file(&file).unwrap()
    }

    #[test]
    fn thousand_meters_at_36_kmh_is_100_seconds() {
        assert_eq!(edge_seconds(1000.0, 36.0), 100);
        let mut file = GraphFile::default();
        file.nodes.insert("n1".into(), coord(49.0, 2.0));
        file.nodes.insert("n2".into(), coord(49.0, 2.01));
        file.edges.push(EdgeRecord {
            from: "n1".into(),
            to: "n2".into(),
            length_m: 1000.0,
            speed_kmh: Some(36.0),
        });
        let g = RoadGraph::from_file(&file).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].seconds, 100);
    }

    #[test]
    fn edge_times_round_half_up() {
        // 5 m at 36 km/h = 0.5 s
        assert_eq!(edge_seconds(5.0, 36.0), 1);
        assert_eq!(edge_seconds(4.0, 36.0), 0);
        assert_eq!(edge_seconds(14.0, 36.0), 1);
        assert_eq!(edge_seconds(15.0, 36.0), 2);
    }

    #[test]
    fn missing_speed_defaults_to_30_kmh() {
        let mut file = GraphFile::default();
        file.nodes.insert("n1".into(), coord(49.0, 2.0));
        file.nodes.insert("n2".into(), coord(49.0, 2.01));
        file.add_two_way("n1", "n2", 250.0, None);
        let g = RoadGraph::from_file(&file).unwrap();
        assert_eq!(g.edges()[0].seconds, 30);
    }

    #[test]
    fn dangling_and_degenerate_edges_are_rejected() {
        let mut file = GraphFile::default();
        file.nodes.insert("n1".into(), coord(49.0, 2.0));
        file.edges.push(EdgeRecord {
            from: "n1".into(),
            to: "ghost".into(),
            length_m: 10.0,
            speed_kmh: None,
        });
        file.edges.push(EdgeRecord {
            from: "n1".into(),
            to: "n1".into(),
            length_m: 0.0,
            speed_kmh: Some(-1.0),
        });
        match RoadGraph::from_file(&file) {
            Err(GraphError::GraphViolation(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn line_path_sums_edge_times() {
        let g = line_graph();
        assert_eq!(g.shortest_time("a", "e").unwrap(), TravelTime::Finite(100));
        assert_eq!(g.shortest_time("c", "c").unwrap(), TravelTime::Finite(0));
        assert_eq!(g.shortest_time("e", "a").unwrap(), TravelTime::Unreachable);
        assert!(matches!(
            g.shortest_time("a", "zz"),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn snapping_prefers_exact_node_then_smallest_id() {
        let mut file = GraphFile::default();
        file.nodes.insert("n2".into(), coord(49.0, 2.02));
        file.nodes.insert("n1".into(), coord(49.0, 2.00));
        file.nodes.insert("n3".into(), coord(49.5, 2.5));
        let g = RoadGraph::from_file(&file).unwrap();
        let at_n3 = g.snap(&Location::Coordinate(coord(49.5, 2.5))).unwrap();
        assert_eq!(g.node_id(at_n3), "n3");
        let between = g.snap(&Location::Coordinate(coord(49.0, 2.01))).unwrap();
        assert_eq!(g.node_id(between), "n1");
        let by_ref = g.snap(&Location::Node("n2".into())).unwrap();
        assert_eq!(g.node_id(by_ref), "n2");
    }

    #[test]
    fn empty_graph_cannot_snap() {
        let g = RoadGraph::from_file(&GraphFile::default()).unwrap();
        assert!(matches!(
            g.snap(&Location::Coordinate(coord(0.0, 0.0))),
            Err(GraphError::EmptyGraph)
        ));
    }

    #[test]
    fn haversine_one_degree_of_latitude() {
        let d = haversine_m(coord(0.0, 0.0), coord(1.0, 0.0));
        let expected = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        assert!((d - expected).abs() < 1e-6);
    }

    fn place(id: &str, node: &str) -> Place {
        Place {
            id: id.into(),
            kind: PlaceKind::RescuePoint,
            location: Location::Node(node.into()),
        }
    }

    #[test]
    fn matrix_diagonal_is_zero_and_disconnected_rows_unreachable() {
        let mut g = line_graph().to_file();
        g.nodes.insert("island".into(), coord(10.0, 10.0));
        let g = RoadGraph::from_file(&g).unwrap();
        let places = vec![place("p1", "a"), place("p2", "c"), place("p3", "e")];
        let m = g.build_matrix(&places, &places).unwrap();
        for i in 0..3 {
            assert_eq!(m.seconds[i][i], TravelTime::Finite(0));
        }
        assert_eq!(m.get(&"p1".into(), &"p3".into()), Some(TravelTime::Finite(100)));

        let m = g
            .build_matrix(&[place("x", "island")], &places)
            .unwrap();
        assert!(m.seconds[0].iter().all(|t| *t == TravelTime::Unreachable));
    }

    #[test]
    fn empty_place_lists_give_empty_matrix() {
        let g = line_graph();
        let m = g.build_matrix(&[], &[]).unwrap();
        assert!(m.origins.is_empty() && m.seconds.is_empty());
        assert!(m.is_well_formed());
    }

    #[test]
    fn unreachable_serializes_as_null() {
        let row = vec![TravelTime::Finite(5), TravelTime::Unreachable];
        let text = serde_json::to_string(&row).unwrap();
        assert_eq!(text, "[5,null]");
        let back: Vec<TravelTime> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, row);
    }
}
