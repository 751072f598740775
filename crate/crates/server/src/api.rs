//! HTTP JSON API for the rater. Every route requires the session token,
//! given as `Authorization: Bearer <token>` or a `token` query parameter
//! (the latter so plain `<img>` tags can load slices).

use std::collections::BTreeMap;
use std::sync::Arc;

use alqa::ImageVolume;
use axum::extract::{Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::render::render_slice;
use crate::session::{NextItem, SessionStore, SubmitError, INSTRUCTIONS};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub volumes: Arc<BTreeMap<String, ImageVolume>>,
    pub token: Arc<str>,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn token_of<'a>(headers: &'a HeaderMap, query: Option<&'a str>) -> Option<&'a str> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .or_else(|| query?.split('&').find_map(|kv| kv.strip_prefix("token=")))
}

async fn require_token(State(app): State<AppState>, req: Request, next: Next) -> Response {
    match token_of(req.headers(), req.uri().query()) {
        Some(t) if t == &*app.token => next.run(req).await,
        _ => error(StatusCode::UNAUTHORIZED, "missing or wrong token"),
    }
}

async fn query(State(app): State<AppState>) -> Response {
    match app.store.next_item() {
        NextItem::Item(item) => Json(json!({ "status": "item", "item": item })).into_response(),
        NextItem::Waiting(reason) => Json(json!({ "status": "waiting", "reason": reason })).into_response(),
        NextItem::NoRun(hint) => (
            StatusCode::CONFLICT,
            Json(json!({ "error": "no active labeling run", "hint": hint })),
        )
            .into_response(),
    }
}

#[derive(Deserialize)]
struct LabelRequest {
    dataset_id: String,
    class: i64,
}

async fn label(State(app): State<AppState>, Json(req): Json<LabelRequest>) -> Response {
    let store = app.store.clone();
    let result = tokio::task::spawn_blocking(move || store.submit(&req.dataset_id, req.class)).await;
    match result {
        Ok(Ok(ack)) => Json(ack).into_response(),
        Ok(Err(SubmitError::InvalidClass(c))) => error(StatusCode::UNPROCESSABLE_ENTITY, format!("class {c} is not in 1..=5")),
        Ok(Err(SubmitError::NotInQuery(id))) => error(StatusCode::CONFLICT, format!("{id} is not in the open query set")),
        Ok(Err(SubmitError::Storage(e))) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn history(State(app): State<AppState>) -> Response {
    Json(app.store.history()).into_response()
}

async fn instructions() -> Response {
    Json(json!({ "text": INSTRUCTIONS })).into_response()
}

async fn status(State(app): State<AppState>) -> Response {
    Json(app.store.status()).into_response()
}

async fn image(State(app): State<AppState>, Path((id, slice)): Path<(String, String)>) -> Response {
    let (Some(volume), Ok(slice)) = (app.volumes.get(&id), slice.parse::<usize>()) else {
        return error(StatusCode::NOT_FOUND, format!("no slice {slice} of {id}"));
    };
    match render_slice(volume, slice) {
        Ok(Some(png)) => ([(header::CONTENT_TYPE, "image/png")], png).into_response(),
        Ok(None) => error(StatusCode::NOT_FOUND, format!("{id} has {} slices", volume.depth())),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/api/query", get(query))
        .route("/api/label", post(label))
        .route("/api/history", get(history))
        .route("/api/instructions", get(instructions))
        .route("/api/status", get(status))
        .route("/api/image/{id}/{slice}", get(image))
        .layer(middleware::from_fn_with_state(app.clone(), require_token))
        .with_state(app)
}
