//! JSON-over-HTTP front end.
//!
//! | Route              | Success                                   |
//! |--------------------|-------------------------------------------|
//! | `POST /v1/samples` | 201 `{sequence_id}`                       |
//! | `POST /v1/predict` | 200 `{class, scores, model_version}`      |
//! | `GET /v1/model`    | 200 model metadata                        |
//! | `POST /v1/retrain` | 202 `{version}`                           |
//!
//! Malformed bodies get 400 `{errors: [{field, message}]}`; prediction and
//! model metadata answer 503 until a model has been trained.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use accu_core::{BiomarkerVector, LabeledSample, OcdClass, Provenance};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Map, Value};

use crate::error::{FieldError, ServiceError};
use crate::service::AccuService;

/// When threshold-triggered retraining runs relative to the ingest
/// response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrainMode {
    /// Respond at once and retrain on a blocking worker.
    Background,
    /// Finish retraining before responding; makes replays deterministic.
    Inline,
}

#[derive(Clone)]
struct AppState {
    service: Arc<AccuService>,
    mode: RetrainMode,
    retraining: Arc<AtomicBool>,
}

pub fn router(service: Arc<AccuService>, mode: RetrainMode) -> Router {
    let state = AppState { service, mode, retraining: Arc::new(AtomicBool::new(false)) };
    Router::new()
        .route("/v1/samples", post(post_sample))
        .route("/v1/predict", post(post_predict))
        .route("/v1/model", get(get_model))
        .route("/v1/retrain", post(post_retrain))
        .with_state(state)
}

const FEATURE_FIELDS: [&str; 5] = ["sd", "gp", "cat", "mal", "sc"];
const PROVENANCE_FIELDS: [&str; 3] = ["hospital_id", "lab_id", "timestamp"];

fn parse_object(body: &[u8]) -> Result<Map<String, Value>, Vec<FieldError>> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(vec![FieldError::new("body", "expected a JSON object")]),
        Err(e) => Err(vec![FieldError::new("body", format!("invalid JSON: {e}"))]),
    }
}

fn parse_features(map: &Map<String, Value>, errors: &mut Vec<FieldError>) -> Option<BiomarkerVector> {
    let mut values = [0.0; 5];
    for (slot, name) in values.iter_mut().zip(FEATURE_FIELDS) {
        match map.get(name) {
            None => errors.push(FieldError::new(name, "missing")),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => *slot = x,
                _ => errors.push(FieldError::new(name, "must be a finite number")),
            },
        }
    }
    errors.is_empty().then(|| BiomarkerVector::from_array(values).expect("checked finite"))
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str], errors: &mut Vec<FieldError>) {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            errors.push(FieldError::new(key.as_str(), "unknown field"));
        }
    }
}

fn parse_sample(body: &[u8]) -> Result<LabeledSample, Vec<FieldError>> {
    let map = parse_object(body)?;
    let mut errors = Vec::new();
    let features = parse_features(&map, &mut errors);
    let label = match map.get("label") {
        None => {
            errors.push(FieldError::new("label", "missing"));
            None
        }
        Some(Value::String(s)) => match s.parse::<OcdClass>() {
            Ok(c) => Some(c),
            Err(_) => {
                errors.push(FieldError::new("label", format!("unknown class {s:?}; expected HI, GAI or OAI")));
                None
            }
        },
        Some(_) => {
            errors.push(FieldError::new("label", "must be a string"));
            None
        }
    };
    let mut provenance = Provenance::default();
    for name in PROVENANCE_FIELDS {
        let value = match map.get(name) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
            Some(_) => {
                errors.push(FieldError::new(name, "must be a non-empty string"));
                None
            }
        };
        match name {
            "hospital_id" => provenance.hospital_id = value,
            "lab_id" => provenance.lab_id = value,
            _ => provenance.timestamp = value,
        }
    }
    let mut allowed: Vec<&str> = FEATURE_FIELDS.to_vec();
    allowed.push("label");
    allowed.extend(PROVENANCE_FIELDS);
    reject_unknown(&map, &allowed, &mut errors);
    match (features, label) {
        (Some(f), Some(l)) if errors.is_empty() => Ok(LabeledSample::new(f, l).with_provenance(provenance)),
        _ => Err(errors),
    }
}

fn parse_probe(body: &[u8]) -> Result<BiomarkerVector, Vec<FieldError>> {
    let map = parse_object(body)?;
    let mut errors = Vec::new();
    let features = parse_features(&map, &mut errors);
    reject_unknown(&map, &FEATURE_FIELDS, &mut errors);
    match features {
        Some(f) if errors.is_empty() => Ok(f),
        _ => Err(errors),
    }
}

fn field_errors(errors: Vec<FieldError>) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "errors": errors }))).into_response()
}

fn error_response(e: ServiceError) -> Response {
    let message = e.to_string();
    match e {
        ServiceError::Validation(errors) => field_errors(errors),
        ServiceError::Core(accu_core::Error::InvalidInput(m)) => field_errors(vec![FieldError::new("body", m)]),
        ServiceError::NotReady => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "error": message }))).into_response(),
        ServiceError::StoreWrite(_) => (
            StatusCode::SERVICE_UNAVAILABLE,
            [(header::RETRY_AFTER, "1")],
            Json(json!({ "error": message, "retryable": true })),
        )
            .into_response(),
        ServiceError::InsufficientData(_) => (StatusCode::CONFLICT, Json(json!({ "error": message }))).into_response(),
        _ => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({ "error": message }))).into_response(),
    }
}

async fn post_sample(State(state): State<AppState>, body: Bytes) -> Response {
    let sample = match parse_sample(&body) {
        Ok(s) => s,
        Err(errors) => return field_errors(errors),
    };
    let service = Arc::clone(&state.service);
    let id = match tokio::task::spawn_blocking(move || service.ingest(sample)).await {
        Ok(Ok(id)) => id,
        Ok(Err(e)) => return error_response(e),
        Err(e) => return error_response(ServiceError::Record(e.to_string())),
    };
    if state.service.retrain_due() {
        match state.mode {
            RetrainMode::Inline => {
                let service = Arc::clone(&state.service);
                if let Ok(Err(e)) = tokio::task::spawn_blocking(move || service.maybe_retrain()).await {
                    log::warn!("retrain after sample {id}: {e}");
                }
            }
            RetrainMode::Background => spawn_background_retrain(&state),
        }
    }
    (StatusCode::CREATED, Json(json!({ "sequence_id": id }))).into_response()
}

/// Starts a retraining worker unless one is already running. The worker
/// keeps going while the threshold stays met, so samples that arrive
/// during a run are picked up afterwards.
fn spawn_background_retrain(state: &AppState) {
    if state.retraining.swap(true, Ordering::AcqRel) {
        return;
    }
    let service = Arc::clone(&state.service);
    let flag = Arc::clone(&state.retraining);
    tokio::task::spawn_blocking(move || {
        loop {
            match service.maybe_retrain() {
                Ok(Some(_)) => continue,
                Ok(None) => break,
                Err(e) => {
                    log::warn!("background retrain: {e}");
                    break;
                }
            }
        }
        flag.store(false, Ordering::Release);
    });
}

async fn post_predict(State(state): State<AppState>, body: Bytes) -> Response {
    let x = match parse_probe(&body) {
        Ok(x) => x,
        Err(errors) => return field_errors(errors),
    };
    match state.service.predict(&x) {
        Ok(p) => Json(json!({
            "class": p.class,
            "scores": { "HI": p.scores[0], "GAI": p.scores[1], "OAI": p.scores[2] },
            "model_version": p.model_version,
        }))
        .into_response(),
        Err(e) => error_response(e),
    }
}

async fn get_model(State(state): State<AppState>) -> Response {
    match state.service.model_info() {
        Ok(info) => Json(info).into_response(),
        Err(e) => error_response(e),
    }
}

async fn post_retrain(State(state): State<AppState>) -> Response {
    let service = Arc::clone(&state.service);
    match tokio::task::spawn_blocking(move || service.retrain_now()).await {
        Ok(Ok(record)) => (StatusCode::ACCEPTED, Json(json!({ "version": record.version }))).into_response(),
        Ok(Err(e)) => error_response(e),
        Err(e) => error_response(ServiceError::Record(e.to_string())),
    }
}
