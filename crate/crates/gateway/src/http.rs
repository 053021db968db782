//! JSON-over-HTTP API backing the gallery and progressive-decode view.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use picdna_core::channel::{ErrorRates, SamplingMode};
use picdna_core::codec::{bmp, Image};
use picdna_core::costs::CostReport;
use picdna_core::reconstruct::{DecodeParams, LayerCost, LayerTrace};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};

use crate::error::GatewayError;
use crate::session::Session;

type Shared = Arc<Session>;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ImageEntry {
    pub image_id: usize,
    /// `None` when the thumbnail layer could not be rebuilt.
    pub thumbnail_url: Option<String>,
    /// Registry index of the image primer pair the thumbnail reads carried.
    pub primer_pair_id: usize,
    pub primers: PrimerStrings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PrimerStrings {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DecodeRequest {
    pub target_level: usize,
    pub coverage: Option<f64>,
    pub rates: Option<ErrorRates>,
    pub seed: Option<u64>,
    pub mode: Option<SamplingMode>,
    pub tau: Option<usize>,
}

impl DecodeRequest {
    /// Request fields over the session defaults.
    pub fn params(&self, defaults: &DecodeParams) -> DecodeParams {
        DecodeParams {
            coverage: self.coverage.unwrap_or(defaults.coverage),
            rates: self.rates.unwrap_or(defaults.rates),
            seed: self.seed.unwrap_or(defaults.seed),
            mode: self.mode.unwrap_or(defaults.mode),
            tau: self.tau.unwrap_or(defaults.tau),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Gains {
    pub gpd: f64,
    pub gra: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DecodeResponse {
    pub image_id: usize,
    pub level: usize,
    pub width: usize,
    pub height: usize,
    pub image_url: String,
    /// Against the noise-free full decode; `null` when identical.
    pub psnr: Option<f64>,
    pub layer_costs: Vec<LayerCost>,
    pub cumulative_nucleotides: u64,
    pub cumulative_read_cost: f64,
    /// Gains of the requested level.
    pub gains: Gains,
    pub cost_report: CostReport,
    pub trace: Vec<LayerTrace>,
}

fn image_url(id: usize, level: usize) -> String {
    format!("/api/images/{id}/image.bmp?level={level}")
}

fn bmp_response(img: &Image) -> Response {
    ([(CONTENT_TYPE, "image/bmp")], bmp::encode(img)).into_response()
}

/// Runs blocking work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, GatewayError>
where
    F: FnOnce() -> Result<T, GatewayError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| GatewayError::Internal(e.to_string()))?
}

async fn list_images(State(s): State<Shared>) -> Result<Json<Vec<ImageEntry>>, GatewayError> {
    let entries = blocking(move || {
        let thumbs = s.thumbnails()?;
        Ok(thumbs
            .iter()
            .filter(|t| s.pool().manifest_entry(t.image_id, 0).is_some())
            .map(|t| {
                let (pair_id, error) = match &t.result {
                    Ok((_, pair)) => (s.pool().registry.image_id_of(pair).unwrap_or(t.image_id), None),
                    Err(f) => (t.image_id, Some(f.to_string())),
                };
                let pair = s.pool().registry.image_pairs[pair_id];
                ImageEntry {
                    image_id: t.image_id,
                    thumbnail_url: error
                        .is_none()
                        .then(|| format!("/api/images/{}/thumbnail.bmp", t.image_id)),
                    primer_pair_id: pair_id,
                    primers: PrimerStrings {
                        left: pair.left.to_string(),
                        right: pair.right.to_string(),
                    },
                    error,
                }
            })
            .collect())
    })
    .await?;
    Ok(Json(entries))
}

async fn thumbnail(State(s): State<Shared>, Path(raw): Path<String>) -> Result<Response, GatewayError> {
    blocking(move || {
        let id = s.image_id(&raw)?;
        let thumbs = s.thumbnails()?;
        let t = thumbs
            .iter()
            .find(|t| t.image_id == id)
            .ok_or_else(|| GatewayError::UnknownImage(raw.clone()))?;
        match &t.result {
            Ok((img, _)) => Ok(bmp_response(img)),
            Err(failure) => Err(GatewayError::LayerFailed {
                layer: 0,
                failure: failure.clone(),
                trace: Vec::new(),
            }),
        }
    })
    .await
}

async fn decode(State(s): State<Shared>, Path(raw): Path<String>, body: Bytes) -> Result<Json<DecodeResponse>, GatewayError> {
    let req: DecodeRequest =
        serde_json::from_slice(&body).map_err(|e| GatewayError::InvalidParameters(format!("request body: {e}")))?;
    let out = blocking(move || {
        let id = s.image_id(&raw)?;
        let params = req.params(s.params());
        let d = s.decode(id, req.target_level, &params)?;
        let level = d.step.level;
        Ok(DecodeResponse {
            image_id: id,
            level,
            width: d.step.width,
            height: d.step.height,
            image_url: image_url(id, level),
            psnr: d.psnr,
            gains: Gains {
                gpd: d.step.cost_report.gpd[level],
                gra: d.step.cost_report.gra[level],
            },
            layer_costs: d.step.layer_costs,
            cumulative_nucleotides: d.step.cumulative_nucleotides,
            cumulative_read_cost: d.step.cumulative_read_cost,
            cost_report: d.step.cost_report,
            trace: d.step.trace,
        })
    })
    .await?;
    Ok(Json(out))
}

async fn image(
    State(s): State<Shared>,
    Path(raw): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, GatewayError> {
    blocking(move || {
        let id = s.image_id(&raw)?;
        let level = match q.get("level") {
            Some(l) => l
                .parse()
                .map_err(|_| GatewayError::InvalidParameters(format!("level {l:?}")))?,
            None => s.decoded_level(id).ok_or(GatewayError::NotDecoded { image: id, level: 0 })?,
        };
        Ok(bmp_response(&s.cached_image(id, level)?))
    })
    .await
}

async fn cost_report(
    State(s): State<Shared>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<CostReport>, GatewayError> {
    let report = blocking(move || {
        let id = match q.get("image") {
            Some(raw) => s.image_id(raw)?,
            None => *s
                .pool()
                .image_ids()
                .first()
                .ok_or_else(|| GatewayError::UnknownImage("pool is empty".into()))?,
        };
        s.cost_report(id)
    })
    .await?;
    Ok(Json(report))
}

async fn not_found(uri: axum::http::Uri) -> GatewayError {
    GatewayError::NotFound(uri.path().to_string())
}

pub fn router(session: Shared) -> Router {
    Router::new()
        .route("/api/images", get(list_images))
        .route("/api/images/{id}/thumbnail.bmp", get(thumbnail))
        .route("/api/images/{id}/decode", post(decode))
        .route("/api/images/{id}/image.bmp", get(image))
        .route("/api/cost-report", get(cost_report))
        .fallback(not_found)
        .layer(CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any))
        .with_state(session)
}

/// Serves the API on `listener` until the process ends.
pub async fn serve(listener: TcpListener, session: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(session)).await
}
