use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::http::StatusCode;
use evacrec_core::knowledge::{
    EntityId, EntityKind, KnowledgeBase, KnowledgeError, KnowledgeSnapshot, MobileResource, Position, RescuePoint, Shelter,
};
use evacrec_core::recommender::{
    compute_travel_times, explain, instance_with_travel_times, solve_with, Explanation, ProblemInstance,
    RecommendationPlan, TravelTimes,
};
use evacrec_core::roads::RoadGraph;
use evacrec_core::scenario::SolverSettings;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanState {
    Proposed,
    Accepted,
    Superseded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub id: String,
    /// Recommendation round the plan was computed in; accepting a plan
    /// closes its round.
    pub round: u64,
    pub instance_fingerprint: String,
    pub state: PlanState,
    pub created_at_ms: u64,
    pub plan: RecommendationPlan,
    pub explanation: Explanation,
}

/// Everything `GET /api/state` returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub round: u64,
    pub revision: u64,
    pub knowledge: KnowledgeSnapshot,
    /// Sorted by id.
    pub plans: Vec<PlanRecord>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct AvailabilityReport {
    pub driver_id: EntityId,
    pub vehicle_id: EntityId,
    pub available: bool,
    #[serde(default)]
    pub position: Option<Position>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct RescuePointUpdate {
    #[serde(default)]
    pub id: Option<EntityId>,
    pub evacuees: u32,
    #[serde(default)]
    pub wheelchair_evacuees: u32,
    pub priority: u8,
    /// Required when creating a rescue point, kept when omitted on update.
    #[serde(default)]
    pub position: Option<Position>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ShelterUpdate {
    #[serde(default)]
    pub id: Option<EntityId>,
    pub capacity: u32,
    #[serde(default)]
    pub position: Option<Position>,
}

#[derive(Default)]
struct Plans {
    next_id: u64,
    round: u64,
    records: BTreeMap<String, PlanRecord>,
}

struct Inner {
    kb: RwLock<KnowledgeBase>,
    graph: RoadGraph,
    settings: SolverSettings,
    /// Travel times keyed by the knowledge base's geometry revision.
    matrix: Mutex<Option<(u64, TravelTimes)>>,
    solving: AtomicBool,
    plans: Mutex<Plans>,
}

/// Shared server state. Cloning is cheap.
///
/// Lock order is knowledge base, then plans, then matrix cache.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

/// Exclusive right to run the solver, released on drop.
pub struct SolverPermit {
    inner: Arc<Inner>,
}

impl Drop for SolverPermit {
    fn drop(&mut self) {
        self.inner.solving.store(false, Ordering::Release);
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn stale(message: impl Into<String>, details: serde_json::Value) -> ApiError {
    ApiError::new(StatusCode::CONFLICT, "StalePlan", message, details)
}

impl AppState {
    pub fn new(kb: KnowledgeBase, graph: RoadGraph, settings: SolverSettings) -> Self {
        AppState {
            inner: Arc::new(Inner {
                kb: RwLock::new(kb),
                graph,
                settings,
                matrix: Mutex::new(None),
                solving: AtomicBool::new(false),
                plans: Mutex::new(Plans::default()),
            }),
        }
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.inner.settings
    }

    /// Claims the solver, or `None` while another computation holds it.
    pub fn try_hold_solver(&self) -> Option<SolverPermit> {
        self.inner
            .solving
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .ok()
            .map(|_| SolverPermit {
                inner: Arc::clone(&self.inner),
            })
    }

    fn kb_read(&self) -> std::sync::RwLockReadGuard<'_, KnowledgeBase> {
        self.inner.kb.read().unwrap_or_else(|e| e.into_inner())
    }

    fn kb_write(&self) -> std::sync::RwLockWriteGuard<'_, KnowledgeBase> {
        self.inner.kb.write().unwrap_or_else(|e| e.into_inner())
    }

    fn plans(&self) -> std::sync::MutexGuard<'_, Plans> {
        self.inner.plans.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn report_availability(&self, report: AvailabilityReport) -> Result<MobileResource, ApiError> {
        let mut kb = self.kb_write();
        let id = match kb.pairing(&report.driver_id, &report.vehicle_id) {
            Some(m) => m.id.clone(),
            None => {
                if kb.person(&report.driver_id).is_none() {
                    return Err(unknown(EntityKind::Person, &report.driver_id));
                }
                if kb.vehicle(&report.vehicle_id).is_none() {
                    return Err(unknown(EntityKind::Vehicle, &report.vehicle_id));
                }
                let position = report.position.clone().ok_or_else(|| {
                    ApiError::new(
                        StatusCode::BAD_REQUEST,
                        "SchemaViolation",
                        "a position is required to pair a new driver and vehicle",
                        json!({ "field": "position" }),
                    )
                })?;
                // Pairing and the availability flag land together or not at all.
                let mut draft = kb.clone();
                let m = draft.pair_mobile_resource(&report.driver_id, &report.vehicle_id, position)?;
                draft.set_availability(&m.id, report.available, None)?;
                *kb = draft;
                return Ok(kb.resource(&m.id).expect("just paired").clone());
            }
        };
        Ok(kb.set_availability(&id, report.available, report.position)?)
    }

    pub fn put_rescue_point(&self, id: &str, update: RescuePointUpdate) -> Result<RescuePoint, ApiError> {
        check_path_id(id, update.id.as_ref())?;
        let mut kb = self.kb_write();
        let id = EntityId::new(id);
        let position = match (update.position, kb.rescue_point(&id)) {
            (Some(p), _) => p,
            (None, Some(existing)) => existing.position.clone(),
            (None, None) => return Err(missing_position()),
        };
        let rp = RescuePoint {
            id,
            position,
            evacuees: update.evacuees,
            wheelchair_evacuees: update.wheelchair_evacuees,
            priority: update.priority,
        };
        Ok(kb.put_rescue_point(rp)?.clone())
    }

    pub fn put_shelter(&self, id: &str, update: ShelterUpdate) -> Result<Shelter, ApiError> {
        check_path_id(id, update.id.as_ref())?;
        let mut kb = self.kb_write();
        let id = EntityId::new(id);
        let position = match (update.position, kb.shelter(&id)) {
            (Some(p), _) => p,
            (None, Some(existing)) => existing.position.clone(),
            (None, None) => return Err(missing_position()),
        };
        let shelter = Shelter {
            id,
            position,
            capacity: update.capacity,
        };
        Ok(kb.put_shelter(shelter)?.clone())
    }

    /// Travel times for `snapshot`, reused while no place has moved.
    fn travel_times(&self, snapshot: &KnowledgeSnapshot, geometry_revision: u64) -> Result<TravelTimes, ApiError> {
        let mut cache = self.inner.matrix.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((rev, times)) = cache.as_ref() {
            if *rev == geometry_revision {
                return Ok(times.clone());
            }
        }
        let times = compute_travel_times(snapshot, &self.inner.graph)?;
        *cache = Some((geometry_revision, times.clone()));
        Ok(times)
    }

    fn instance(&self, snapshot: &KnowledgeSnapshot, geometry_revision: u64) -> Result<ProblemInstance, ApiError> {
        let times = self.travel_times(snapshot, geometry_revision)?;
        Ok(instance_with_travel_times(
            snapshot,
            &times,
            self.inner.settings.constraints,
        )?)
    }

    /// Solves a frozen copy of the knowledge base and stores the result as
    /// a proposed plan. Fails fast with `SolverBusy` if a run is in flight.
    pub fn recommend(&self) -> Result<PlanRecord, ApiError> {
        let permit = self.try_hold_solver().ok_or_else(ApiError::busy)?;
        self.recommend_with(permit)
    }

    /// [`AppState::recommend`] with a permit the caller already holds.
    pub fn recommend_with(&self, _permit: SolverPermit) -> Result<PlanRecord, ApiError> {
        let (snapshot, geometry_revision, round) = {
            let kb = self.kb_read();
            let round = self.plans().round;
            (kb.snapshot(), kb.geometry_revision(), round)
        };
        let instance = self.instance(&snapshot, geometry_revision)?;
        let plan = solve_with(&instance, &self.inner.settings.config())?;
        let explanation = explain(&instance, &plan);
        tracing::info!(
            status = ?plan.status,
            vehicles = plan.objective.vehicles_used,
            total_time_s = plan.objective.total_time,
            "recommendation computed"
        );

        let mut plans = self.plans();
        plans.next_id += 1;
        let id = format!("plan-{:06}", plans.next_id);
        let state = if round == plans.round {
            PlanState::Proposed
        } else {
            PlanState::Superseded
        };
        let record = PlanRecord {
            id: id.clone(),
            round,
            instance_fingerprint: instance.fingerprint(),
            state,
            created_at_ms: now_ms(),
            plan,
            explanation,
        };
        plans.records.insert(id, record.clone());
        Ok(record)
    }

    pub fn plan(&self, id: &str) -> Result<PlanRecord, ApiError> {
        self.plans()
            .records
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::plan_not_found(id))
    }

    /// Commits a proposed plan: its resources become committed, shelters
    /// lose the intake, rescue points lose the evacuated people, the round
    /// closes and every other proposal of the round is superseded. Nothing
    /// changes unless all of it does.
    pub fn accept(&self, id: &str) -> Result<PlanRecord, ApiError> {
        let mut kb = self.kb_write();
        let mut plans = self.plans();
        let record = plans
            .records
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::plan_not_found(id))?;
        if record.state != PlanState::Proposed {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "PlanNotProposed",
                format!("plan {id} is {:?}", record.state).to_lowercase(),
                json!({ "id": id, "state": record.state }),
            ));
        }

        let withdrawn: Vec<&EntityId> = record
            .plan
            .assignments
            .iter()
            .map(|a| &a.resource)
            .filter(|r| kb.resource(r).map_or(true, |m| !m.is_selectable()))
            .collect();
        if !withdrawn.is_empty() {
            return Err(stale(
                format!("{} assigned resource(s) are no longer available", withdrawn.len()),
                json!({ "resources": withdrawn }),
            ));
        }
        let current = self.instance(&kb.snapshot(), kb.geometry_revision())?.fingerprint();
        if current != record.instance_fingerprint {
            return Err(stale(
                "the situation changed since this plan was computed",
                json!({ "expected": record.instance_fingerprint, "found": current }),
            ));
        }

        let resources: Vec<EntityId> = record.plan.assignments.iter().map(|a| a.resource.clone()).collect();
        let mut intake: BTreeMap<EntityId, u32> = BTreeMap::new();
        let mut evacuated: BTreeMap<EntityId, (u32, u32)> = BTreeMap::new();
        for a in &record.plan.assignments {
            *intake.entry(a.shelter.clone()).or_default() += a.evacuees_loaded;
            let e = evacuated.entry(a.rescue_point.clone()).or_default();
            e.0 += a.evacuees_loaded;
            e.1 += a.wheelchair_loaded;
        }
        kb.commit_plan(&resources, &intake, &evacuated)
            .map_err(|e| stale(e.to_string(), json!({})))?;

        for r in plans.records.values_mut() {
            if r.state == PlanState::Proposed {
                r.state = if r.id == id {
                    PlanState::Accepted
                } else {
                    PlanState::Superseded
                };
            }
        }
        plans.round += 1;
        Ok(plans.records[id].clone())
    }

    /// Consistent view of the knowledge base and every plan.
    pub fn view(&self) -> StateView {
        let kb = self.kb_read();
        let plans = self.plans();
        StateView {
            round: plans.round,
            revision: kb.revision(),
            knowledge: kb.snapshot(),
            plans: plans.records.values().cloned().collect(),
        }
    }
}

fn check_path_id(path_id: &str, body_id: Option<&EntityId>) -> Result<(), ApiError> {
    match body_id {
        Some(b) if b.as_str() != path_id => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "SchemaViolation",
            format!("body id {b} does not match path id {path_id}"),
            json!({ "field": "id" }),
        )),
        _ if path_id.is_empty() => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "SchemaViolation",
            "id must be non-empty",
            json!({ "field": "id" }),
        )),
        _ => Ok(()),
    }
}

fn unknown(kind: EntityKind, id: &EntityId) -> ApiError {
    KnowledgeError::UnknownEntity { kind, id: id.clone() }.into()
}

fn missing_position() -> ApiError {
    ApiError::new(
        StatusCode::BAD_REQUEST,
        "SchemaViolation",
        "a position is required when creating a place",
        json!({ "field": "position" }),
    )
}
