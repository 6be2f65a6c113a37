//! HTTP front end.
//!
//! - `POST /runs` with a [`RunConfig`] body starts a run: `{"run_id": ...}`
//! - `GET /runs` lists run records, `GET /runs/{id}` returns one
//! - `GET /runs/{id}/snapshot` returns the live tracking state
//! - `GET /runs/{id}/events?same_sector_only=true` streams the event log as
//!   newline-delimited JSON, following live runs until they end. An unknown
//!   run yields a single `error` event.

use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::StreamExt;
use serde::Deserialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::events::Event;
use crate::service::{Trackd, TrackdError};

pub fn router(trackd: Arc<Trackd>) -> Router {
    Router::new()
        .route("/runs", post(submit).get(list))
        .route("/runs/{id}", get(record))
        .route("/runs/{id}/snapshot", get(snapshot))
        .route("/runs/{id}/events", get(events))
        .with_state(trackd)
}

pub async fn serve(trackd: Arc<Trackd>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(trackd)).await
}

struct ApiError(TrackdError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            TrackdError::UnknownRun(_) => StatusCode::NOT_FOUND,
            TrackdError::NotTracking { .. } => StatusCode::CONFLICT,
            TrackdError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

impl From<TrackdError> for ApiError {
    fn from(e: TrackdError) -> Self {
        ApiError(e)
    }
}

async fn submit(State(trackd): State<Arc<Trackd>>, Json(config): Json<RunConfig>) -> Result<Response, ApiError> {
    // Opening a CSV feed reads the whole file; keep it off the runtime threads.
    let id = tokio::task::spawn_blocking(move || trackd.start_run(config))
        .await
        .map_err(|e| TrackdError::Config(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(json!({ "run_id": id }))).into_response())
}

async fn list(State(trackd): State<Arc<Trackd>>) -> Result<Response, ApiError> {
    Ok(Json(trackd.list()?).into_response())
}

async fn record(State(trackd): State<Arc<Trackd>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(trackd.record(&id)?).into_response())
}

async fn snapshot(State(trackd): State<Arc<Trackd>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(trackd.snapshot(&id)?).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct StreamQuery {
    #[serde(default)]
    same_sector_only: bool,
}

async fn events(
    State(trackd): State<Arc<Trackd>>,
    Path(id): Path<String>,
    Query(query): Query<StreamQuery>,
) -> Response {
    let ndjson = [(header::CONTENT_TYPE, "application/x-ndjson")];
    match trackd.handle(&id) {
        Ok(handle) => {
            let lines = handle
                .stream(query.same_sector_only)
                .map(|line| Ok::<_, std::convert::Infallible>(format!("{line}\n")));
            (ndjson, Body::from_stream(lines)).into_response()
        }
        Err(e) => {
            let line = Event::Error { message: e.to_string() }.to_line() + "\n";
            (ndjson, line).into_response()
        }
    }
}
