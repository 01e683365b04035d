//! Typed store for crisis entities: persons, vehicles, driver/vehicle pairings,
//! rescue points, shelters and the crisis description.
//!
//! The store is a fixed schema rather than a triple store. Every mutation is
//! validated against the entity invariants and against referential closure,
//! so a [`KnowledgeBase`] can always be exported as a valid
//! [`KnowledgeSnapshot`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest snapshot format version this build understands.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_owned())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Person,
    Vehicle,
    MobileResource,
    RescuePoint,
    Shelter,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityKind::Person => "person",
            EntityKind::Vehicle => "vehicle",
            EntityKind::MobileResource => "mobile_resource",
            EntityKind::RescuePoint => "rescue_point",
            EntityKind::Shelter => "shelter",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Affected,
    HumanResource,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mobility {
    #[default]
    Ambulant,
    Wheelchair,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub id: EntityId,
    #[serde(default)]
    pub name: String,
    pub role: Role,
    #[serde(default)]
    pub mobility: Mobility,
    /// License-category tags, matched exactly against `Vehicle::required_license`.
    #[serde(default)]
    pub licenses: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleCategory {
    Car,
    Minibus,
    Boat,
    Other(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    Land,
    Water,
    Air,
}

impl Terrain {
    pub const ALL: [Terrain; 3] = [Terrain::Land, Terrain::Water, Terrain::Air];
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: EntityId,
    pub category: VehicleCategory,
    /// Total seats, driver included.
    pub seats: u32,
    #[serde(default)]
    pub wheelchair_slots: u32,
    pub required_license: String,
    pub terrain: Terrain,
}

impl Vehicle {
    /// Passenger seats left once the driver is on board.
    pub fn effective_capacity(&self) -> u32 {
        self.seats.saturating_sub(1)
    }
}

/// A `[lat, lon]` pair in decimal degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Coordinate {
    pub lat: f64,
    pub lon: f64,
}

impl Coordinate {
    pub fn new(lat: f64, lon: f64) -> Self {
        Coordinate { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

impl From<[f64; 2]> for Coordinate {
    fn from([lat, lon]: [f64; 2]) -> Self {
        Coordinate { lat, lon }
    }
}

impl From<Coordinate> for [f64; 2] {
    fn from(c: Coordinate) -> Self {
        [c.lat, c.lon]
    }
}

/// Where an entity sits: a coordinate, a road-network node, or another place.
///
/// Rescue points and shelters must use a coordinate or a node; mobile
/// resources may also be parked at a shelter or rescue point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Position {
    Coordinate(Coordinate),
    Node { node: String },
    Shelter { shelter: EntityId },
    RescuePoint { rescue_point: EntityId },
}

/// A position with place references resolved away.
#[derive(Clone, Debug, PartialEq)]
pub enum Location {
    Coordinate(Coordinate),
    Node(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceKind {
    RescuePoint,
    Shelter,
    Depot,
    /// Current position of a mobile resource.
    Resource,
}

/// A named location handed to the road network for snapping.
#[derive(Clone, Debug, PartialEq)]
pub struct Place {
    pub id: EntityId,
    pub kind: PlaceKind,
    pub location: Location,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescuePoint {
    pub id: EntityId,
    pub position: Position,
    pub evacuees: u32,
    #[serde(default)]
    pub wheelchair_evacuees: u32,
    /// 1..=5, 5 being the most urgent.
    pub priority: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shelter {
    pub id: EntityId,
    pub position: Position,
    /// Remaining intake capacity in persons.
    pub capacity: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobileResource {
    pub id: EntityId,
    pub driver: EntityId,
    pub vehicle: EntityId,
    pub position: Position,
    pub available: bool,
    #[serde(default)]
    pub committed: bool,
    /// Unix milliseconds of the last availability report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub updated_at_ms: Option<u64>,
}

impl MobileResource {
    /// Identifier given to the pairing of `driver` with `vehicle`.
    pub fn pairing_id(driver: &EntityId, vehicle: &EntityId) -> EntityId {
        EntityId(format!("mr-{driver}-{vehicle}"))
    }

    pub fn is_selectable(&self) -> bool {
        self.available && !self.committed
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrisisKind {
    Flood,
    Fire,
    Other(String),
}

impl CrisisKind {
    pub fn default_terrains(&self) -> BTreeSet<Terrain> {
        match self {
            CrisisKind::Flood => [Terrain::Water, Terrain::Land].into_iter().collect(),
            CrisisKind::Fire => [Terrain::Land].into_iter().collect(),
            CrisisKind::Other(_) => Terrain::ALL.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crisis {
    pub id: EntityId,
    pub kind: CrisisKind,
    /// Per-rescue-point terrain requirement overriding the crisis default.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub compatible_terrains: BTreeMap<EntityId, BTreeSet<Terrain>>,
}

impl Crisis {
    pub fn allowed_terrains(&self, rescue_point: &EntityId) -> BTreeSet<Terrain> {
        self.compatible_terrains
            .get(rescue_point)
            .cloned()
            .unwrap_or_else(|| self.kind.default_terrains())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSnapshot {
    pub schema_version: u32,
    pub crisis: Crisis,
    #[serde(default)]
    pub persons: Vec<Person>,
    #[serde(default)]
    pub vehicles: Vec<Vehicle>,
    #[serde(default)]
    pub mobile_resources: Vec<MobileResource>,
    #[serde(default)]
    pub rescue_points: Vec<RescuePoint>,
    #[serde(default)]
    pub shelters: Vec<Shelter>,
}

impl KnowledgeSnapshot {
    pub fn empty(crisis: Crisis) -> Self {
        KnowledgeSnapshot {
            schema_version: SCHEMA_VERSION,
            crisis,
            persons: Vec::new(),
            vehicles: Vec::new(),
            mobile_resources: Vec::new(),
            rescue_points: Vec::new(),
            shelters: Vec::new(),
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_snapshot(self)
    }

    /// Resolves a position to a coordinate or node, following place references.
    pub fn resolve(&self, position: &Position) -> Option<Location> {
        match position {
            Position::Coordinate(c) => Some(Location::Coordinate(*c)),
            Position::Node { node } => Some(Location::Node(node.clone())),
            Position::Shelter { shelter } => self
                .shelters
                .iter()
                .find(|s| &s.id == shelter)
                .and_then(|s| direct_location(&s.position)),
            Position::RescuePoint { rescue_point } => self
                .rescue_points
                .iter()
                .find(|r| &r.id == rescue_point)
                .and_then(|r| direct_location(&r.position)),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), KnowledgeError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(KnowledgeError::SchemaViolation(violations));
        }
        let mut text = serde_json::to_string_pretty(self).map_err(KnowledgeError::Parse)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KnowledgeError> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, KnowledgeError> {
        let snapshot: KnowledgeSnapshot =
            serde_json::from_str(text).map_err(KnowledgeError::Parse)?;
        let violations = snapshot.validate();
        if violations.is_empty() {
            Ok(snapshot)
        } else {
            Err(KnowledgeError::SchemaViolation(violations))
        }
    }
}

fn direct_location(position: &Position) -> Option<Location> {
    match position {
        Position::Coordinate(c) => Some(Location::Coordinate(*c)),
        Position::Node { node } => Some(Location::Node(node.clone())),
        _ => None,
    }
}

/// One broken invariant, addressed by a JSON-path-like location.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("schema violation: {}", join(.0))]
    SchemaViolation(Vec<Violation>),
    #[error("{kind} {id} already exists with different fields")]
    DuplicateId { kind: EntityKind, id: EntityId },
    #[error("unknown {kind} {id}")]
    UnknownEntity { kind: EntityKind, id: EntityId },
    #[error("driver {driver} lacks license {license} required by vehicle {vehicle}")]
    LicenseMismatch {
        driver: EntityId,
        vehicle: EntityId,
        license: String,
    },
    #[error("{kind} {id} is already part of an active pairing")]
    AlreadyPaired { kind: EntityKind, id: EntityId },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Parse(serde_json::Error),
}

impl KnowledgeError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        KnowledgeError::SchemaViolation(vec![Violation::new(path, message)])
    }
}

fn check_person(p: &Person, path: &str, out: &mut Vec<Violation>) {
    if p.id.is_empty() {
        out.push(Violation::new(path, "id must be non-empty"));
    }
}

fn check_vehicle(v: &Vehicle, path: &str, out: &mut Vec<Violation>) {
    if v.id.is_empty() {
        out.push(Violation::new(path, "id must be non-empty"));
    }
    if v.seats < 1 {
        out.push(Violation::new(path, "seats must be at least 1"));
    } else if v.wheelchair_slots > v.seats - 1 {
        out.push(Violation::new(
            path,
            format!(
                "wheelchair_slots {} exceeds passenger seats {}",
                v.wheelchair_slots,
                v.seats - 1
            ),
        ));
    }
    if v.required_license.is_empty() {
        out.push(Violation::new(path, "required_license must be non-empty"));
    }
}

fn check_place_position(position: &Position, path: &str, out: &mut Vec<Violation>) {
    match position {
        Position::Coordinate(c) if !c.is_valid() => {
            out.push(Violation::new(path, "coordinate out of range"))
        }
        Position::Coordinate(_) | Position::Node { .. } => {}
        _ => out.push(Violation::new(
            path,
            "place position must be a coordinate or a node",
        )),
    }
}

fn check_rescue_point(rp: &RescuePoint, path: &str, out: &mut Vec<Violation>) {
    if rp.id.is_empty() {
        out.push(Violation::new(path, "id must be non-empty"));
    }
    if rp.wheelchair_evacuees > rp.evacuees {
        out.push(Violation::new(
            path,
            format!(
                "wheelchair_evacuees {} exceeds evacuees {}",
                rp.wheelchair_evacuees, rp.evacuees
            ),
        ));
    }
    if !(1..=5).contains(&rp.priority) {
        out.push(Violation::new(
            path,
            format!("priority {} outside 1..=5", rp.priority),
        ));
    }
    check_place_position(&rp.position, &format!("{path}.position"), out);
}

fn check_shelter(s: &Shelter, path: &str, out: &mut Vec<Violation>) {
    if s.id.is_empty() {
        out.push(Violation::new(path, "id must be non-empty"));
    }
    check_place_position(&s.position, &format!("{path}.position"), out);
}

fn check_unique<'a>(
    ids: impl Iterator<Item = &'a EntityId>,
    section: &str,
    out: &mut Vec<Violation>,
) {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::new(
                format!("{section}[{id}]"),
                "duplicate id",
            ));
        }
    }
}

/// Checks every entity invariant and referential closure, collecting all
/// violations rather than stopping at the first.
pub fn validate_snapshot(s: &KnowledgeSnapshot) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.schema_version != SCHEMA_VERSION {
        out.push(Violation::new(
            "schema_version",
            format!(
                "unsupported version {} (expected {SCHEMA_VERSION})",
                s.schema_version
            ),
        ));
    }
    if s.crisis.id.is_empty() {
        out.push(Violation::new("crisis.id", "id must be non-empty"));
    }

    check_unique(s.persons.iter().map(|p| &p.id), "persons", &mut out);
    check_unique(s.vehicles.iter().map(|v| &v.id), "vehicles", &mut out);
    check_unique(
        s.mobile_resources.iter().map(|m| &m.id),
        "mobile_resources",
        &mut out,
    );
    check_unique(
        s.rescue_points.iter().map(|r| &r.id),
        "rescue_points",
        &mut out,
    );
    check_unique(s.shelters.iter().map(|r| &r.id), "shelters", &mut out);

    for p in &s.persons {
        check_person(p, &format!("persons[{}]", p.id), &mut out);
    }
    for v in &s.vehicles {
        check_vehicle(v, &format!("vehicles[{}]", v.id), &mut out);
    }
    for rp in &s.rescue_points {
        check_rescue_point(rp, &format!("rescue_points[{}]", rp.id), &mut out);
    }
    for sh in &s.shelters {
        check_shelter(sh, &format!("shelters[{}]", sh.id), &mut out);
    }

    let persons: BTreeMap<_, _> = s.persons.iter().map(|p| (&p.id, p)).collect();
    let vehicles: BTreeMap<_, _> = s.vehicles.iter().map(|v| (&v.id, v)).collect();
    let rescue_points: BTreeSet<_> = s.rescue_points.iter().map(|r| &r.id).collect();
    let shelters: BTreeSet<_> = s.shelters.iter().map(|r| &r.id).collect();

    let mut drivers_seen = BTreeSet::new();
    let mut vehicles_seen = BTreeSet::new();
    for m in &s.mobile_resources {
        let path = format!("mobile_resources[{}]", m.id);
        if m.id.is_empty() {
            out.push(Violation::new(&path, "id must be non-empty"));
        }
        let driver = persons.get(&m.driver);
        match driver {
            None => out.push(Violation::new(
                format!("{path}.driver"),
                format!("unknown person {}", m.driver),
            )),
            Some(p) if p.role != Role::HumanResource => out.push(Violation::new(
                format!("{path}.driver"),
                format!("person {} is not a human resource", m.driver),
            )),
            Some(_) => {}
        }
        let vehicle = vehicles.get(&m.vehicle);
        if vehicle.is_none() {
            out.push(Violation::new(
                format!("{path}.vehicle"),
                format!("unknown vehicle {}", m.vehicle),
            ));
        }
        if let (Some(p), Some(v)) = (driver, vehicle) {
            if !p.licenses.contains(&v.required_license) {
                out.push(Violation::new(
                    &path,
                    format!(
                        "driver {} lacks license {} for vehicle {}",
                        p.id, v.required_license, v.id
                    ),
                ));
            }
        }
        if !drivers_seen.insert(&m.driver) {
            out.push(Violation::new(
                format!("{path}.driver"),
                format!("driver {} paired more than once", m.driver),
            ));
        }
        if !vehicles_seen.insert(&m.vehicle) {
            out.push(Violation::new(
                format!("{path}.vehicle"),
                format!("vehicle {} paired more than once", m.vehicle),
            ));
        }
        match &m.position {
            Position::Coordinate(c) if !c.is_valid() => out.push(Violation::new(
                format!("{path}.position"),
                "coordinate out of range",
            )),
            Position::Shelter { shelter } if !shelters.contains(shelter) => {
                out.push(Violation::new(
                    format!("{path}.position"),
                    format!("unknown shelter {shelter}"),
                ))
            }
            Position::RescuePoint { rescue_point } if !rescue_points.contains(rescue_point) => out
                .push(Violation::new(
                    format!("{path}.position"),
                    format!("unknown rescue point {rescue_point}"),
                )),
            _ => {}
        }
    }

    for (rp, terrains) in &s.crisis.compatible_terrains {
        let path = format!("crisis.compatible_terrains[{rp}]");
        if !rescue_points.contains(rp) {
            out.push(Violation::new(&path, format!("unknown rescue point {rp}")));
        }
        if terrains.is_empty() {
            out.push(Violation::new(&path, "terrain set must be non-empty"));
        }
    }
    out
}

/// An entity accepted by [`KnowledgeBase::upsert_entity`].
#[derive(Clone, Debug, PartialEq)]
pub enum Entity {
    Person(Person),
    Vehicle(Vehicle),
    RescuePoint(RescuePoint),
    Shelter(Shelter),
}

impl Entity {
    pub fn kind(&self) -> EntityKind {
        match self {
            Entity::Person(_) => EntityKind::Person,
            Entity::Vehicle(_) => EntityKind::Vehicle,
            Entity::RescuePoint(_) => EntityKind::RescuePoint,
            Entity::Shelter(_) => EntityKind::Shelter,
        }
    }

    pub fn id(&self) -> &EntityId {
        match self {
            Entity::Person(p) => &p.id,
            Entity::Vehicle(v) => &v.id,
            Entity::RescuePoint(r) => &r.id,
            Entity::Shelter(s) => &s.id,
        }
    }

    /// Builds an entity of `kind` from a loose field map.
    pub fn from_fields(
        kind: EntityKind,
        fields: serde_json::Map<String, serde_json::Value>,
    ) -> Result<Self, KnowledgeError> {
        let value = serde_json::Value::Object(fields);
        let bad = |e: serde_json::Error| KnowledgeError::single(kind.to_string(), e.to_string());
        Ok(match kind {
            EntityKind::Person => Entity::Person(serde_json::from_value(value).map_err(bad)?),
            EntityKind::Vehicle => Entity::Vehicle(serde_json::from_value(value).map_err(bad)?),
            EntityKind::RescuePoint => {
                Entity::RescuePoint(serde_json::from_value(value).map_err(bad)?)
            }
            EntityKind::Shelter => Entity::Shelter(serde_json::from_value(value).map_err(bad)?),
            EntityKind::MobileResource => {
                return Err(KnowledgeError::single(
                    "mobile_resource",
                    "mobile resources are created by pairing a driver with a vehicle",
                ))
            }
        })
    }
}

/// The mutable knowledge store.
///
/// Mutations are validated before they are applied, so a failed call leaves
/// the store untouched. `revision` increases on every successful mutation and
/// `geometry_revision` only when something that affects travel times changes.
#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    crisis: Crisis,
    persons: BTreeMap<EntityId, Person>,
    vehicles: BTreeMap<EntityId, Vehicle>,
    resources: BTreeMap<EntityId, MobileResource>,
    rescue_points: BTreeMap<EntityId, RescuePoint>,
    shelters: BTreeMap<EntityId, Shelter>,
    revision: u64,
    geometry_revision: u64,
}

impl KnowledgeBase {
    pub fn new(crisis: Crisis) -> Self {
        KnowledgeBase {
            crisis,
            persons: BTreeMap::new(),
            vehicles: BTreeMap::new(),
            resources: BTreeMap::new(),
            rescue_points: BTreeMap::new(),
            shelters: BTreeMap::new(),
            revision: 0,
            geometry_revision: 0,
        }
    }

    pub fn from_snapshot(snapshot: KnowledgeSnapshot) -> Result<Self, KnowledgeError> {
        let violations = snapshot.validate();
        if !violations.is_empty() {
            return Err(KnowledgeError::SchemaViolation(violations));
        }
        let key = |id: &EntityId| id.clone();
        Ok(KnowledgeBase {
            crisis: snapshot.crisis,
            persons: snapshot.persons.into_iter().map(|p| (key(&p.id), p)).collect(),
            vehicles: snapshot.vehicles.into_iter().map(|v| (key(&v.id), v)).collect(),
            resources: snapshot
                .mobile_resources
                .into_iter()
                .map(|m| (key(&m.id), m))
                .collect(),
            rescue_points: snapshot
                .rescue_points
                .into_iter()
                .map(|r| (key(&r.id), r))
                .collect(),
            shelters: snapshot.shelters.into_iter().map(|s| (key(&s.id), s)).collect(),
            revision: 0,
            geometry_revision: 0,
        })
    }

    /// Frozen copy with every collection sorted by id.
    pub fn snapshot(&self) -> KnowledgeSnapshot {
        KnowledgeSnapshot {
            schema_version: SCHEMA_VERSION,
            crisis: self.crisis.clone(),
            persons: self.persons.values().cloned().collect(),
            vehicles: self.vehicles.values().cloned().collect(),
            mobile_resources: self.resources.values().cloned().collect(),
            rescue_points: self.rescue_points.values().cloned().collect(),
            shelters: self.shelters.values().cloned().collect(),
        }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn geometry_revision(&self) -> u64 {
        self.geometry_revision
    }

    pub fn crisis(&self) -> &Crisis {
        &self.crisis
    }

    pub fn person(&self, id: &EntityId) -> Option<&Person> {
        self.persons.get(id)
    }

    pub fn vehicle(&self, id: &EntityId) -> Option<&Vehicle> {
        self.vehicles.get(id)
    }

    pub fn resource(&self, id: &EntityId) -> Option<&MobileResource> {
        self.resources.get(id)
    }

    pub fn rescue_point(&self, id: &EntityId) -> Option<&RescuePoint> {
        self.rescue_points.get(id)
    }

    pub fn shelter(&self, id: &EntityId) -> Option<&Shelter> {
        self.shelters.get(id)
    }

    pub fn resources(&self) -> impl Iterator<Item = &MobileResource> {
        self.resources.values()
    }

    /// Active pairing of this exact driver and vehicle, if any.
    pub fn pairing(&self, driver: &EntityId, vehicle: &EntityId) -> Option<&MobileResource> {
        self.resources
            .values()
            .find(|m| &m.driver == driver && &m.vehicle == vehicle)
    }

    fn touch(&mut self, geometry: bool) {
        self.revision += 1;
        if geometry {
            self.geometry_revision += 1;
        }
    }

    /// Inserts an entity. Re-inserting identical fields is a no-op;
    /// different fields under an existing id are rejected.
    pub fn upsert_entity(&mut self, entity: Entity) -> Result<EntityId, KnowledgeError> {
        let mut violations = Vec::new();
        let path = format!("{}[{}]", entity.kind(), entity.id());
        match &entity {
            Entity::Person(p) => check_person(p, &path, &mut violations),
            Entity::Vehicle(v) => check_vehicle(v, &path, &mut violations),
            Entity::RescuePoint(r) => check_rescue_point(r, &path, &mut violations),
            Entity::Shelter(s) => check_shelter(s, &path, &mut violations),
        }
        if !violations.is_empty() {
            return Err(KnowledgeError::SchemaViolation(violations));
        }
        let id = entity.id().clone();
        let kind = entity.kind();
        let duplicate = || KnowledgeError::DuplicateId {
            kind,
            id: id.clone(),
        };
        match entity {
            Entity::Person(p) => match self.persons.get(&id) {
                Some(existing) if *existing == p => return Ok(id),
                Some(_) => return Err(duplicate()),
                None => {
                    self.persons.insert(id.clone(), p);
                    self.touch(false);
                }
            },
            Entity::Vehicle(v) => match self.vehicles.get(&id) {
                Some(existing) if *existing == v => return Ok(id),
                Some(_) => return Err(duplicate()),
                None => {
                    self.vehicles.insert(id.clone(), v);
                    self.touch(false);
                }
            },
            Entity::RescuePoint(r) => match self.rescue_points.get(&id) {
                Some(existing) if *existing == r => return Ok(id),
                Some(_) => return Err(duplicate()),
                None => {
                    self.rescue_points.insert(id.clone(), r);
                    self.touch(true);
                }
            },
            Entity::Shelter(s) => match self.shelters.get(&id) {
                Some(existing) if *existing == s => return Ok(id),
                Some(_) => return Err(duplicate()),
                None => {
                    self.shelters.insert(id.clone(), s);
                    self.touch(true);
                }
            },
        }
        Ok(id)
    }

    pub fn upsert_fields(
        &mut self,
        kind: EntityKind,
        fields: serde_json::Map<String, serde_json::Value>,
    ) -> Result<EntityId, KnowledgeError> {
        self.upsert_entity(Entity::from_fields(kind, fields)?)
    }

    /// Creates or replaces a rescue point (decision-maker edit).
    pub fn put_rescue_point(&mut self, rp: RescuePoint) -> Result<&RescuePoint, KnowledgeError> {
        let mut violations = Vec::new();
        check_rescue_point(&rp, &format!("rescue_points[{}]", rp.id), &mut violations);
        if !violations.is_empty() {
            return Err(KnowledgeError::SchemaViolation(violations));
        }
        let id = rp.id.clone();
        if self.rescue_points.get(&id) != Some(&rp) {
            let moved = self
                .rescue_points
                .get(&id)
                .map_or(true, |old| old.position != rp.position);
            self.rescue_points.insert(id.clone(), rp);
            self.touch(moved);
        }
        Ok(&self.rescue_points[&id])
    }

    /// Creates or replaces a shelter.
    pub fn put_shelter(&mut self, shelter: Shelter) -> Result<&Shelter, KnowledgeError> {
        let mut violations = Vec::new();
        check_shelter(&shelter, &format!("shelters[{}]", shelter.id), &mut violations);
        if !violations.is_empty() {
            return Err(KnowledgeError::SchemaViolation(violations));
        }
        let id = shelter.id.clone();
        if self.shelters.get(&id) != Some(&shelter) {
            let moved = self
                .shelters
                .get(&id)
                .map_or(true, |old| old.position != shelter.position);
            self.shelters.insert(id.clone(), shelter);
            self.touch(moved);
        }
        Ok(&self.shelters[&id])
    }

    fn check_position_refs(&self, position: &Position) -> Result<(), KnowledgeError> {
        match position {
            Position::Coordinate(c) if !c.is_valid() => {
                Err(KnowledgeError::single("position", "coordinate out of range"))
            }
            Position::Shelter { shelter } if !self.shelters.contains_key(shelter) => {
                Err(KnowledgeError::UnknownEntity {
                    kind: EntityKind::Shelter,
                    id: shelter.clone(),
                })
            }
            Position::RescuePoint { rescue_point }
                if !self.rescue_points.contains_key(rescue_point) =>
            {
                Err(KnowledgeError::UnknownEntity {
                    kind: EntityKind::RescuePoint,
                    id: rescue_point.clone(),
                })
            }
            _ => Ok(()),
        }
    }

    /// Pairs a human-resource driver with a vehicle into an available,
    /// uncommitted mobile resource.
    pub fn pair_mobile_resource(
        &mut self,
        driver: &EntityId,
        vehicle: &EntityId,
        position: Position,
    ) -> Result<MobileResource, KnowledgeError> {
        let person = self
            .persons
            .get(driver)
            .ok_or_else(|| KnowledgeError::UnknownEntity {
                kind: EntityKind::Person,
                id: driver.clone(),
            })?;
        let car = self
            .vehicles
            .get(vehicle)
            .ok_or_else(|| KnowledgeError::UnknownEntity {
                kind: EntityKind::Vehicle,
                id: vehicle.clone(),
            })?;
        if person.role != Role::HumanResource {
            return Err(KnowledgeError::single(
                format!("persons[{driver}]"),
                "only human resources can drive",
            ));
        }
        if self.resources.values().any(|m| &m.driver == driver) {
            return Err(KnowledgeError::AlreadyPaired {
                kind: EntityKind::Person,
                id: driver.clone(),
            });
        }
        if self.resources.values().any(|m| &m.vehicle == vehicle) {
            return Err(KnowledgeError::AlreadyPaired {
                kind: EntityKind::Vehicle,
                id: vehicle.clone(),
            });
        }
        if !person.licenses.contains(&car.required_license) {
            return Err(KnowledgeError::LicenseMismatch {
                driver: driver.clone(),
                vehicle: vehicle.clone(),
                license: car.required_license.clone(),
            });
        }
        self.check_position_refs(&position)?;
        let resource = MobileResource {
            id: MobileResource::pairing_id(driver, vehicle),
            driver: driver.clone(),
            vehicle: vehicle.clone(),
            position,
            available: true,
            committed: false,
            updated_at_ms: Some(now_ms()),
        };
        self.resources.insert(resource.id.clone(), resource.clone());
        self.touch(true);
        Ok(resource)
    }

    /// Records an availability report, optionally with a new position.
    pub fn set_availability(
        &mut self,
        resource: &EntityId,
        available: bool,
        position: Option<Position>,
    ) -> Result<MobileResource, KnowledgeError> {
        if !self.resources.contains_key(resource) {
            return Err(KnowledgeError::UnknownEntity {
                kind: EntityKind::MobileResource,
                id: resource.clone(),
            });
        }
        if let Some(p) = &position {
            self.check_position_refs(p)?;
        }
        let entry = self.resources.get_mut(resource).expect("checked above");
        entry.available = available;
        entry.updated_at_ms = Some(now_ms());
        let mut moved = false;
        if let Some(p) = position {
            moved = entry.position != p;
            entry.position = p;
        }
        let out = entry.clone();
        self.touch(moved);
        Ok(out)
    }

    /// Available, uncommitted resources sorted by id.
    pub fn available_resources(&self) -> Vec<MobileResource> {
        self.resources
            .values()
            .filter(|m| m.is_selectable())
            .cloned()
            .collect()
    }

    /// Marks resources committed and decrements shelter and rescue-point
    /// counts. Every check runs before any mutation.
    pub fn commit_plan(
        &mut self,
        resources: &[EntityId],
        shelter_intake: &BTreeMap<EntityId, u32>,
        evacuated: &BTreeMap<EntityId, (u32, u32)>,
    ) -> Result<(), KnowledgeError> {
        for id in resources {
            match self.resources.get(id) {
                None => {
                    return Err(KnowledgeError::UnknownEntity {
                        kind: EntityKind::MobileResource,
                        id: id.clone(),
                    })
                }
                Some(m) if !m.is_selectable() => {
                    return Err(KnowledgeError::single(
                        format!("mobile_resources[{id}]"),
                        "resource is no longer selectable",
                    ))
                }
                Some(_) => {}
            }
        }
        for (id, intake) in shelter_intake {
            let s = self
                .shelters
                .get(id)
                .ok_or_else(|| KnowledgeError::UnknownEntity {
                    kind: EntityKind::Shelter,
                    id: id.clone(),
                })?;
            if s.capacity < *intake {
                return Err(KnowledgeError::single(
                    format!("shelters[{id}]"),
                    format!("intake {intake} exceeds remaining capacity {}", s.capacity),
                ));
            }
        }
        for (id, (total, wheelchair)) in evacuated {
            let rp = self
                .rescue_points
                .get(id)
                .ok_or_else(|| KnowledgeError::UnknownEntity {
                    kind: EntityKind::RescuePoint,
                    id: id.clone(),
                })?;
            if rp.evacuees < *total || rp.wheelchair_evacuees < *wheelchair {
                return Err(KnowledgeError::single(
                    format!("rescue_points[{id}]"),
                    "evacuated count exceeds recorded demand",
                ));
            }
        }

        for id in resources {
            self.resources.get_mut(id).expect("checked").committed = true;
        }
        for (id, intake) in shelter_intake {
            self.shelters.get_mut(id).expect("checked").capacity -= intake;
        }
        for (id, (total, wheelchair)) in evacuated {
            let rp = self.rescue_points.get_mut(id).expect("checked");
            rp.evacuees -= total;
            rp.wheelchair_evacuees -= wheelchair;
        }
        self.touch(false);
        Ok(())
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
