#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use evacrec_core::generator;
use evacrec_core::knowledge::{EntityId, Terrain, Vehicle, VehicleCategory};
use evacrec_core::recommender::{
    instance_from_snapshot, ConstraintSet, DemandSpec, ProblemInstance, ResourceSpec, ShelterSpec,
};
use evacrec_core::roads::{TravelTime, TravelTimeMatrix};

pub fn random_instance(seed: u64) -> ProblemInstance {
    let mut rng = generator::rng(seed);
    let s = generator::random_scenario(&mut rng);
    instance_from_snapshot(&s.snapshot, &s.graph, ConstraintSet::default()).expect("instance builds")
}

pub fn vehicle(id: &str, seats: u32, slots: u32, terrain: Terrain) -> Vehicle {
    Vehicle {
        id: EntityId::new(id),
        category: match seats {
            9 => VehicleCategory::Minibus,
            _ if terrain == Terrain::Water => VehicleCategory::Boat,
            _ => VehicleCategory::Car,
        },
        seats,
        wheelchair_slots: slots,
        required_license: "B".into(),
        terrain,
    }
}

pub fn resource(id: &str, seats: u32) -> ResourceSpec {
    ResourceSpec {
        id: EntityId::new(id),
        driver: EntityId::new(format!("d-{id}")),
        vehicle: vehicle(&format!("v-{id}"), seats, 0, Terrain::Land),
    }
}

pub fn demand(id: &str, evacuees: u32, priority: u8) -> DemandSpec {
    DemandSpec {
        id: EntityId::new(id),
        evacuees,
        wheelchair_evacuees: 0,
        priority,
        allowed_terrains: Terrain::ALL.into_iter().collect::<BTreeSet<_>>(),
    }
}

pub fn shelter(id: &str, capacity: u32) -> ShelterSpec {
    ShelterSpec {
        id: EntityId::new(id),
        capacity,
    }
}

/// Matrix from a sparse map of finite entries; missing pairs are unreachable.
pub fn matrix(origins: &[&str], destinations: &[&str], finite: &[(&str, &str, u64)]) -> TravelTimeMatrix {
    let map: BTreeMap<(&str, &str), u64> = finite.iter().map(|&(o, d, t)| ((o, d), t)).collect();
    TravelTimeMatrix {
        origins: origins.iter().map(|o| EntityId::new(*o)).collect(),
        destinations: destinations.iter().map(|d| EntityId::new(*d)).collect(),
        seconds: origins
            .iter()
            .map(|o| {
                destinations
                    .iter()
                    .map(|d| map.get(&(*o, *d)).map_or(TravelTime::Unreachable, |&t| TravelTime::Finite(t)))
                    .collect()
            })
            .collect(),
    }
}

pub fn instance(
    resources: Vec<ResourceSpec>,
    rescue_points: Vec<DemandSpec>,
    shelters: Vec<ShelterSpec>,
    to_rp: &[(&str, &str, u64)],
    to_shelter: &[(&str, &str, u64)],
) -> ProblemInstance {
    let r: Vec<&str> = resources.iter().map(|r| r.id.as_str()).collect();
    let p: Vec<&str> = rescue_points.iter().map(|p| p.id.as_str()).collect();
    let s: Vec<&str> = shelters.iter().map(|s| s.id.as_str()).collect();
    let times_to_rp = matrix(&r, &p, to_rp);
    let times_rp_to_shelter = matrix(&p, &s, to_shelter);
    ProblemInstance {
        resources,
        rescue_points,
        shelters,
        constraints: ConstraintSet::default(),
        times_to_rp,
        times_rp_to_shelter,
    }
}
