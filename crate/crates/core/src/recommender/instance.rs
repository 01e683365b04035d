use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ConstraintSet, RecommendError};
use crate::knowledge::{EntityId, KnowledgeSnapshot, Location, Place, PlaceKind, Terrain, Vehicle};
use crate::roads::{GraphError, RoadGraph, TravelTime, TravelTimeMatrix};

/// An available, uncommitted driver/vehicle pair as seen by the solver.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub id: EntityId,
    pub driver: EntityId,
    pub vehicle: Vehicle,
}

impl ResourceSpec {
    pub fn capacity(&self) -> u32 {
        self.vehicle.effective_capacity()
    }
}

/// A rescue point's need together with the terrains allowed to reach it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandSpec {
    pub id: EntityId,
    pub evacuees: u32,
    pub wheelchair_evacuees: u32,
    pub priority: u8,
    pub allowed_terrains: BTreeSet<Terrain>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShelterSpec {
    pub id: EntityId,
    pub capacity: u32,
}

/// The frozen input of one recommendation round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub resources: Vec<ResourceSpec>,
    pub rescue_points: Vec<DemandSpec>,
    pub shelters: Vec<ShelterSpec>,
    pub constraints: ConstraintSet,
    /// Resource position to rescue point.
    pub times_to_rp: TravelTimeMatrix,
    /// Rescue point to shelter.
    pub times_rp_to_shelter: TravelTimeMatrix,
}

#[derive(Serialize)]
struct Canonical<'a> {
    resources: Vec<&'a ResourceSpec>,
    rescue_points: Vec<&'a DemandSpec>,
    shelters: Vec<&'a ShelterSpec>,
    constraints: &'a ConstraintSet,
    times_to_rp: Vec<Vec<Option<TravelTime>>>,
    times_rp_to_shelter: Vec<Vec<Option<TravelTime>>>,
}

impl ProblemInstance {
    /// SHA-256 over a canonical, order-independent encoding.
    pub fn fingerprint(&self) -> String {
        let mut resources: Vec<_> = self.resources.iter().collect();
        resources.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rescue_points: Vec<_> = self.rescue_points.iter().collect();
        rescue_points.sort_by(|a, b| a.id.cmp(&b.id));
        let mut shelters: Vec<_> = self.shelters.iter().collect();
        shelters.sort_by(|a, b| a.id.cmp(&b.id));
        let times_to_rp = resources
            .iter()
            .map(|r| {
                rescue_points
                    .iter()
                    .map(|p| self.times_to_rp.get(&r.id, &p.id))
                    .collect()
            })
            .collect();
        let times_rp_to_shelter = rescue_points
            .iter()
            .map(|p| {
                shelters
                    .iter()
                    .map(|s| self.times_rp_to_shelter.get(&p.id, &s.id))
                    .collect()
            })
            .collect();
        let canonical = Canonical {
            resources,
            rescue_points,
            shelters,
            constraints: &self.constraints,
            times_to_rp,
            times_rp_to_shelter,
        };
        let bytes = serde_json::to_vec(&canonical).expect("instance serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn total_demand(&self) -> u64 {
        self.rescue_points.iter().map(|p| u64::from(p.evacuees)).sum()
    }

    pub fn fleet_capacity(&self) -> u64 {
        self.resources.iter().map(|r| u64::from(r.capacity())).sum()
    }
}

/// Travel times covering every mobile resource of a snapshot, whether
/// available or not, plus rescue point to shelter legs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelTimes {
    /// Digest of the graph and every place position the matrices depend on.
    pub fingerprint: String,
    pub to_rescue_points: TravelTimeMatrix,
    pub to_shelters: TravelTimeMatrix,
}

fn place(
    snapshot: &KnowledgeSnapshot,
    id: &EntityId,
    kind: PlaceKind,
    position: &crate::knowledge::Position,
) -> Result<Place, RecommendError> {
    let location = snapshot.resolve(position).ok_or_else(|| {
        RecommendError::Unsnappable(id.clone(), "position references an unknown place".into())
    })?;
    Ok(Place {
        id: id.clone(),
        kind,
        location,
    })
}

fn sorted_places(snapshot: &KnowledgeSnapshot) -> Result<[Vec<Place>; 3], RecommendError> {
    let mut resources = snapshot
        .mobile_resources
        .iter()
        .map(|m| place(snapshot, &m.id, PlaceKind::Resource, &m.position))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rescue_points = snapshot
        .rescue_points
        .iter()
        .map(|r| place(snapshot, &r.id, PlaceKind::RescuePoint, &r.position))
        .collect::<Result<Vec<_>, _>>()?;
    let mut shelters = snapshot
        .shelters
        .iter()
        .map(|s| place(snapshot, &s.id, PlaceKind::Shelter, &s.position))
        .collect::<Result<Vec<_>, _>>()?;
    for list in [&mut resources, &mut rescue_points, &mut shelters] {
        list.sort_by(|a, b| a.id.cmp(&b.id));
    }
    Ok([resources, rescue_points, shelters])
}

/// Digest of everything the travel-time matrices depend on. Any moved
/// place, added entity or changed road changes it.
pub fn geometry_fingerprint(
    snapshot: &KnowledgeSnapshot,
    graph: &RoadGraph,
) -> Result<String, RecommendError> {
    let [resources, rescue_points, shelters] = sorted_places(snapshot)?;
    let mut hasher = Sha256::new();
    hasher.update(graph.fingerprint().as_bytes());
    for (tag, list) in [("R", &resources), ("P", &rescue_points), ("S", &shelters)] {
        for p in list {
            let loc = match &p.location {
                Location::Coordinate(c) => format!("{:?},{:?}", c.lat, c.lon),
                Location::Node(n) => format!("node:{n}"),
            };
            hasher.update(format!("{tag}|{}|{loc}\n", p.id).as_bytes());
        }
    }
    Ok(hex::encode(hasher.finalize()))
}

fn snap_error(places: &[Place], graph: &RoadGraph, err: GraphError) -> RecommendError {
    let culprit = places
        .iter()
        .find(|p| graph.snap(&p.location).is_err())
        .map(|p| p.id.clone())
        .unwrap_or_else(|| EntityId::new("?"));
    RecommendError::Unsnappable(culprit, err.to_string())
}

/// Precomputes all travel times a snapshot can need.
pub fn compute_travel_times(
    snapshot: &KnowledgeSnapshot,
    graph: &RoadGraph,
) -> Result<TravelTimes, RecommendError> {
    let [resources, rescue_points, shelters] = sorted_places(snapshot)?;
    let to_rescue_points = graph
        .build_matrix(&resources, &rescue_points)
        .map_err(|e| snap_error(&[&resources[..], &rescue_points[..]].concat(), graph, e))?;
    let to_shelters = graph
        .build_matrix(&rescue_points, &shelters)
        .map_err(|e| snap_error(&[&rescue_points[..], &shelters[..]].concat(), graph, e))?;
    Ok(TravelTimes {
        fingerprint: geometry_fingerprint(snapshot, graph)?,
        to_rescue_points,
        to_shelters,
    })
}

/// Builds the solver input from a snapshot and precomputed times. Only
/// available, uncommitted resources are included.
pub fn instance_with_travel_times(
    snapshot: &KnowledgeSnapshot,
    times: &TravelTimes,
    constraints: ConstraintSet,
) -> Result<ProblemInstance, RecommendError> {
    let vehicles: BTreeMap<_, _> = snapshot.vehicles.iter().map(|v| (&v.id, v)).collect();
    let mut resources = Vec::new();
    for m in snapshot.mobile_resources.iter().filter(|m| m.is_selectable()) {
        let vehicle = vehicles
            .get(&m.vehicle)
            .ok_or_else(|| RecommendError::UnknownEntity {
                kind: "vehicle",
                id: m.vehicle.clone(),
            })?;
        resources.push(ResourceSpec {
            id: m.id.clone(),
            driver: m.driver.clone(),
            vehicle: (*vehicle).clone(),
        });
    }
    resources.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rescue_points: Vec<DemandSpec> = snapshot
        .rescue_points
        .iter()
        .map(|r| DemandSpec {
            id: r.id.clone(),
            evacuees: r.evacuees,
            wheelchair_evacuees: r.wheelchair_evacuees,
            priority: r.priority,
            allowed_terrains: snapshot.crisis.allowed_terrains(&r.id),
        })
        .collect();
    rescue_points.sort_by(|a, b| a.id.cmp(&b.id));
    let mut shelters: Vec<ShelterSpec> = snapshot
        .shelters
        .iter()
        .map(|s| ShelterSpec {
            id: s.id.clone(),
            capacity: s.capacity,
        })
        .collect();
    shelters.sort_by(|a, b| a.id.cmp(&b.id));

    let times_to_rp = select(
        &times.to_rescue_points,
        resources.iter().map(|r| &r.id),
        rescue_points.iter().map(|p| &p.id),
    )?;
    let times_rp_to_shelter = select(
        &times.to_shelters,
        rescue_points.iter().map(|p| &p.id),
        shelters.iter().map(|s| &s.id),
    )?;
    Ok(ProblemInstance {
        resources,
        rescue_points,
        shelters,
        constraints,
        times_to_rp,
        times_rp_to_shelter,
    })
}

fn select<'a>(
    matrix: &TravelTimeMatrix,
    origins: impl Iterator<Item = &'a EntityId>,
    destinations: impl Iterator<Item = &'a EntityId> + Clone,
) -> Result<TravelTimeMatrix, RecommendError> {
    let origins: Vec<EntityId> = origins.cloned().collect();
    let destinations: Vec<EntityId> = destinations.cloned().collect();
    let mut seconds = Vec::with_capacity(origins.len());
    for o in &origins {
        let mut row = Vec::with_capacity(destinations.len());
        for d in &destinations {
            row.push(matrix.get(o, d).ok_or_else(|| RecommendError::MatrixIncomplete {
                origin: o.clone(),
                destination: d.clone(),
            })?);
        }
        seconds.push(row);
    }
    Ok(TravelTimeMatrix {
        origins,
        destinations,
        seconds,
    })
}

/// Snapshot plus road graph to solver input, computing travel times on the fly.
pub fn instance_from_snapshot(
    snapshot: &KnowledgeSnapshot,
    graph: &RoadGraph,
    constraints: ConstraintSet,
) -> Result<ProblemInstance, RecommendError> {
    let times = compute_travel_times(snapshot, graph)?;
    instance_with_travel_times(snapshot, &times, constraints)
}
