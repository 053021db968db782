use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use picdna_core::channel::ChannelError;
use picdna_core::codec::CodecError;
use picdna_core::costs::CostError;
use picdna_core::pool::PoolError;
use picdna_core::reconstruct::{DecodeError, LayerFailure, LayerTrace};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("no route for {0}")]
    NotFound(String),
    #[error("level {level} of image {image} has not been decoded yet")]
    NotDecoded { image: usize, level: usize },
    #[error("layer {layer} failed: {failure}")]
    LayerFailed {
        layer: usize,
        failure: LayerFailure,
        trace: Vec<LayerTrace>,
    },
    #[error("thumbnails missing for images {0:?}")]
    ThumbnailsIncomplete(Vec<usize>),
    #[error("table check failed: {0}")]
    TableMismatch(String),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("internal error: {0}")]
    Internal(String),
}

/// Wire form of an error, shared by the HTTP API and the CLI's stderr line.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<LayerTrace>>,
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::InvalidParameters(_) => "invalid_parameters",
            Self::UnknownImage(_) => "unknown_image",
            Self::NotFound(_) => "not_found",
            Self::NotDecoded { .. } => "not_decoded",
            Self::LayerFailed { .. } => "layer_failed",
            Self::ThumbnailsIncomplete(_) => "thumbnails_incomplete",
            Self::TableMismatch(_) => "table_mismatch",
            Self::Pool(_) => "pool",
            Self::Channel(_) => "channel",
            Self::Codec(_) => "codec",
            Self::Cost(_) => "cost",
            Self::Io { .. } => "io",
            Self::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            Self::Usage(_) | Self::InvalidParameters(_) | Self::Channel(_) => StatusCode::BAD_REQUEST,
            Self::UnknownImage(_) | Self::NotFound(_) | Self::NotDecoded { .. } => StatusCode::NOT_FOUND,
            Self::LayerFailed { .. } | Self::ThumbnailsIncomplete(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    /// Process exit status: 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let (layer, trace) = match self {
            Self::LayerFailed { layer, trace, .. } => (Some(*layer), Some(trace.clone())),
            _ => (None, None),
        };
        ErrorBody {
            code: self.code(),
            message: self.to_string(),
            layer,
            trace,
        }
    }

    /// Single-line JSON rendering.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.body()).expect("error body serializes")
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<DecodeError> for GatewayError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Layer { layer, failure, trace, .. } => Self::LayerFailed { layer, failure, trace },
            DecodeError::UnknownPair => Self::UnknownImage("primer pair not in registry".into()),
            DecodeError::Level { .. } => Self::InvalidParameters(e.to_string()),
            DecodeError::Channel(c) => Self::Channel(c),
            DecodeError::Codec(c) => Self::Codec(c),
            DecodeError::Cost(c) => Self::Cost(c),
        }
    }
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}
