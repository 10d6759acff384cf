//! Read-only HTTP access to a corpus index, plus stateless tokenization of
//! uploaded slip images.
//!
//! | route                        | response                          |
//! |------------------------------|-----------------------------------|
//! | `GET /stats`                 | corpus statistics                 |
//! | `GET /characters?…`          | page of matching instances        |
//! | `GET /characters/{id}`       | one instance record               |
//! | `GET /characters/{id}/image` | the crop as PNG                   |
//! | `POST /tokenize`             | tokens for an uploaded slip image |

use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chutok::detection::SegmenterParams;
use chutok::raster::{decode_gray, encode_png, load_gray};
use chutok::recognition::{CharRecognizer, SubCharRecognizer};
use chutok::tokenizer::{recognize_slip, serialize_tokens, TokenizerConfig};
use chutok::vocab::Vocabulary;
use serde::Deserialize;
use serde_json::json;

use crate::args::ServeArgs;
use crate::commands::image_root;
use crate::query::{CharacterIndex, QueryFilter};

pub struct TokenizerService {
    pub vocab: Vocabulary,
    pub char_rec: CharRecognizer,
    pub subchar_rec: SubCharRecognizer,
    pub segmenter: SegmenterParams,
    pub threshold: f64,
}

pub struct AppState {
    pub index: CharacterIndex,
    pub tokenizer: Option<TokenizerService>,
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn not_found(what: impl Into<String>) -> Self {
        Self(StatusCode::NOT_FOUND, what.into())
    }

    fn bad_request(what: impl Into<String>) -> Self {
        Self(StatusCode::BAD_REQUEST, what.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/stats", get(stats))
        .route("/characters", get(characters))
        .route("/characters/{id}", get(character))
        .route("/characters/{id}/image", get(character_image))
        .route("/tokenize", post(tokenize))
        .with_state(state)
}

async fn stats(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    Json(state.index.stats().clone())
}

async fn characters(
    State(state): State<Arc<AppState>>,
    filter: Result<Query<QueryFilter>, QueryRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Query(filter) = filter.map_err(|e| ApiError::bad_request(e.body_text()))?;
    filter.validate().map_err(ApiError::bad_request)?;
    Ok(Json(state.index.query(&filter)))
}

async fn character(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let inst = state.index.get(&id).ok_or_else(|| ApiError::not_found(format!("no character {id}")))?;
    Ok(Json(inst.clone()))
}

async fn character_image(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let inst = state.index.get(&id).ok_or_else(|| ApiError::not_found(format!("no character {id}")))?;
    let path = state.index.image_path(inst);
    let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, String> {
        let img = load_gray(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        encode_png(&img).map_err(|e| e.to_string())
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| ApiError::not_found(format!("image unavailable: {e}")))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenizeParams {
    threshold: Option<f64>,
    #[serde(default)]
    char_only: bool,
}

async fn tokenize(
    State(state): State<Arc<AppState>>,
    params: Result<Query<TokenizeParams>, QueryRejection>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    if state.tokenizer.is_none() {
        return Err(ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            "server started without tokenizer models".into(),
        ));
    }
    let value = tokio::task::spawn_blocking(move || -> Result<serde_json::Value, ApiError> {
        let service = state.tokenizer.as_ref().expect("checked above");
        let cfg = TokenizerConfig {
            confidence_threshold: params.threshold.unwrap_or(service.threshold),
            char_only: params.char_only,
            ..TokenizerConfig::default()
        };
        cfg.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        let image = decode_gray(&body).map_err(|e| ApiError::bad_request(format!("cannot decode image: {e}")))?;
        let recognition = recognize_slip(&image, &service.segmenter, &service.char_rec, &service.subchar_rec)
            .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        let tokens = recognition.tokens("upload", &cfg).tokens;
        let text = serialize_tokens(&tokens, &service.vocab).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        Ok(json!({
            "threshold": cfg.confidence_threshold,
            "text": text,
            "tokens": tokens,
            "boxes": recognition.boxes,
        }))
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(value))
}

pub(crate) fn serve_command(a: &ServeArgs) -> Result<i32> {
    let corpus = chutok::corpus::load_manifest(&a.manifest).with_context(|| format!("reading manifest {}", a.manifest.display()))?;
    let index = CharacterIndex::new(&corpus, image_root(&a.manifest, &a.data));
    let tokenizer = match (&a.vocab, &a.char_model, &a.subchar_model) {
        (Some(v), Some(c), Some(s)) => Some(TokenizerService {
            vocab: Vocabulary::load(v)?,
            char_rec: CharRecognizer::load(c)?,
            subchar_rec: SubCharRecognizer::load(s)?,
            segmenter: a.segmenter.resolve().map_err(anyhow::Error::msg)?,
            threshold: a.threshold,
        }),
        _ => None,
    };
    let state = Arc::new(AppState { index, tokenizer });
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.addr).await.with_context(|| format!("binding {}", a.addr))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state)).await?;
        Ok(0)
    })
}
