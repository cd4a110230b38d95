//! HTTP API: `POST /api/v1/predict`, `GET /api/v1/health`, `GET /api/v1/model`.

use std::sync::{Arc, OnceLock};

use axum::extract::multipart::MultipartRejection;
use axum::extract::{DefaultBodyLimit, Multipart, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::config::{read_spectral_config, ServiceConfig};
use crate::predict::Predictor;
use crate::{Error, Result};

/// Shared, read-only serving state. The predictor is filled in once, after
/// the weights finish loading.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    predictor: Arc<OnceLock<Arc<Predictor>>>,
}

impl AppState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn loaded(predictor: Predictor) -> Self {
        let state = Self::empty();
        state.install(predictor);
        state
    }

    /// Installs the predictor; later calls are ignored.
    pub fn install(&self, predictor: Predictor) {
        let _ = self.predictor.set(Arc::new(predictor));
    }

    pub fn predictor(&self) -> Option<Arc<Predictor>> {
        self.predictor.get().cloned()
    }
}

struct ApiError(StatusCode, String);

impl ApiError {
    fn new(status: u16, message: impl Into<String>) -> Self {
        ApiError(
            StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            message.into(),
        )
    }

    fn not_loaded() -> Self {
        ApiError(StatusCode::SERVICE_UNAVAILABLE, "model not loaded".into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

pub fn router(state: AppState, max_upload_bytes: usize, cors_allow_origin: Option<&str>) -> Router {
    let mut app = Router::new()
        .route("/api/v1/predict", post(handle_predict))
        .route("/api/v1/health", get(handle_health))
        .route("/api/v1/model", get(handle_model_info))
        .layer(DefaultBodyLimit::max(max_upload_bytes))
        .with_state(state);
    if let Some(origin) = cors_allow_origin {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            match HeaderValue::from_str(origin) {
                Ok(v) => AllowOrigin::exact(v),
                Err(_) => {
                    tracing::warn!(origin, "ignoring unparseable CORS origin");
                    return app;
                }
            }
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        );
    }
    app
}

async fn handle_health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "model_loaded": state.predictor().is_some() }))
}

async fn handle_model_info(State(state): State<AppState>) -> Response {
    match state.predictor() {
        Some(p) => Json(p.info()).into_response(),
        None => ApiError::not_loaded().into_response(),
    }
}

async fn handle_predict(
    State(state): State<AppState>,
    multipart: std::result::Result<Multipart, MultipartRejection>,
) -> Response {
    match predict_upload(state, multipart).await {
        Ok(r) => r,
        Err(e) => e.into_response(),
    }
}

async fn predict_upload(
    state: AppState,
    multipart: std::result::Result<Multipart, MultipartRejection>,
) -> std::result::Result<Response, ApiError> {
    let predictor = state.predictor().ok_or_else(ApiError::not_loaded)?;
    let mut multipart = multipart.map_err(|e| ApiError(e.status(), e.body_text()))?;

    let mut audio: Option<Vec<u8>> = None;
    let mut embeddings: Vec<Vec<u8>> = Vec::new();
    loop {
        let field = match multipart.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) => return Err(ApiError(e.status(), e.body_text())),
        };
        let name = field.name().unwrap_or_default().to_owned();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError(e.status(), e.body_text()))?;
        match name.as_str() {
            "audio" if audio.is_some() => return Err(ApiError::new(400, "more than one `audio` part")),
            "audio" => audio = Some(bytes.to_vec()),
            "embedding" => embeddings.push(bytes.to_vec()),
            _ => {}
        }
    }
    let audio = audio.ok_or_else(|| ApiError::new(400, "missing `audio` part"))?;

    let result = tokio::task::spawn_blocking(move || predictor.predict(&audio, &embeddings))
        .await
        .map_err(|e| ApiError::new(500, e.to_string()))?;
    match result {
        Ok(p) => Ok(Json(p).into_response()),
        Err(e) => Err(ApiError::new(e.http_status(), e.to_string())),
    }
}

/// Binds, starts loading the model in the background and serves until
/// Ctrl-C. A failed model load stops the server with that error.
pub async fn serve(cfg: ServiceConfig) -> Result<()> {
    std::fs::File::open(&cfg.model_path).map_err(|e| Error::io(&cfg.model_path, e))?;
    let spectral = read_spectral_config(cfg.spectral_config.as_deref())?;
    let state = AppState::empty();
    let app = router(
        state.clone(),
        cfg.max_upload_bytes,
        cfg.cors_allow_origin.as_deref(),
    );
    let listener = TcpListener::bind(cfg.listen).await.map_err(|err| Error::Bind {
        addr: cfg.listen.to_string(),
        err,
    })?;
    tracing::info!(addr = %cfg.listen, "listening");

    let model_path = cfg.model_path.clone();
    let loader = tokio::task::spawn_blocking(move || Predictor::load(&model_path, &spectral));
    let server = axum::serve(listener, app).with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    });
    let server = std::future::IntoFuture::into_future(server);
    tokio::pin!(server);

    tokio::select! {
        res = &mut server => return res.map_err(|err| Error::Bind { addr: cfg.listen.to_string(), err }),
        loaded = loader => {
            let predictor = loaded.map_err(|e| Error::Incompatible(e.to_string()))??;
            tracing::info!(version = predictor.version(), "model loaded");
            state.install(predictor);
        }
    }
    server.await.map_err(|err| Error::Bind {
        addr: cfg.listen.to_string(),
        err,
    })
}
