use axum::extract::{FromRequest, Path, State};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use evacrec_core::knowledge::{MobileResource, RescuePoint, Shelter};

use crate::error::ApiError;
use crate::state::{AppState, AvailabilityReport, PlanRecord, RescuePointUpdate, ShelterUpdate, StateView};

/// JSON body whose rejections use the service error format.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
struct Body<T>(T);

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/availability", post(availability))
        .route("/api/rescue-points/{id}", put(rescue_point))
        .route("/api/shelters/{id}", put(shelter))
        .route("/api/recommendations", post(recommendations))
        .route("/api/plans/{id}", get(plan))
        .route("/api/plans/{id}/accept", post(accept))
        .route("/api/state", get(view))
        .fallback(|| async { ApiError::route_not_found() })
        .with_state(state)
}

async fn availability(State(s): State<AppState>, Body(report): Body<AvailabilityReport>) -> ApiResult<MobileResource> {
    s.report_availability(report).map(Json)
}

async fn rescue_point(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Body(update): Body<RescuePointUpdate>,
) -> ApiResult<RescuePoint> {
    s.put_rescue_point(&id, update).map(Json)
}

async fn shelter(State(s): State<AppState>, Path(id): Path<String>, Body(update): Body<ShelterUpdate>) -> ApiResult<Shelter> {
    s.put_shelter(&id, update).map(Json)
}

async fn recommendations(State(s): State<AppState>) -> ApiResult<PlanRecord> {
    // Claim the solver before leaving the request task so a second request
    // is turned away at once.
    let permit = s.try_hold_solver().ok_or_else(ApiError::busy)?;
    tokio::task::spawn_blocking(move || s.recommend_with(permit))
        .await
        .map_err(|e| ApiError::internal(format!("solver task failed: {e}")))?
        .map(Json)
}

async fn plan(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<PlanRecord> {
    s.plan(&id).map(Json)
}

async fn accept(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<PlanRecord> {
    tokio::task::spawn_blocking(move || s.accept(&id))
        .await
        .map_err(|e| ApiError::internal(format!("accept task failed: {e}")))?
        .map(Json)
}

async fn view(State(s): State<AppState>) -> Json<StateView> {
    Json(s.view())
}
