#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use comfeat::embedding::store_frames;
use comfeat::wav::encode_wav_pcm16;
use comfeat::weights::save_weights;
use comfeat_core::feature::FeatureSource;
use comfeat_core::nn::{BranchSpec, FusionModel, ModelConfig};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub const BOUNDARY: &str = "comfeat-test-boundary";

/// A multipart/form-data body; each part is `(field name, bytes)`.
pub fn multipart(parts: &[(&str, &[u8])]) -> Vec<u8> {
    let mut body = Vec::new();
    for (i, (name, bytes)) in parts.iter().enumerate() {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        body.extend_from_slice(
            format!(
                "Content-Disposition: form-data; name=\"{name}\"; filename=\"part{i}\"\r\n\
                 Content-Type: application/octet-stream\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    body
}

pub fn silent_wav(secs: f64) -> Vec<u8> {
    encode_wav_pcm16(&[vec![0.0; (16_000.0 * secs) as usize]], 16_000)
}

/// A RIFF/WAVE file with an arbitrary format tag and bit depth.
pub fn raw_wav(format_tag: u16, bits: u16, data: &[u8]) -> Vec<u8> {
    let rate: u32 = 16_000;
    let block = bits / 8;
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&format_tag.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&rate.to_le_bytes());
    b.extend_from_slice(&(rate * u32::from(block)).to_le_bytes());
    b.extend_from_slice(&block.to_le_bytes());
    b.extend_from_slice(&bits.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&(data.len() as u32).to_le_bytes());
    b.extend_from_slice(data);
    b
}

pub fn zero_cfem(source: FeatureSource) -> Vec<u8> {
    let dim = source.contract_dim().expect("neural source");
    store_frames(&[vec![0.0; dim]], source).unwrap()
}

pub fn trill_mfcc_config(seed: u64) -> ModelConfig {
    ModelConfig::new(vec![
        BranchSpec::new(FeatureSource::Trillsson, 1024),
        BranchSpec::new(FeatureSource::Mfcc, 20),
    ])
    .with_seed(seed)
}

pub fn zero_model_weights() -> Vec<u8> {
    save_weights(&FusionModel::zeros(trill_mfcc_config(0)).unwrap())
}

pub async fn send(
    app: &Router,
    req: Request<Body>,
) -> (StatusCode, serde_json::Value, Vec<(String, String)>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp
        .headers()
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_str().unwrap_or_default().to_string()))
        .collect();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let json = serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null);
    (status, json, headers)
}

pub fn predict_request(body: Vec<u8>) -> Request<Body> {
    Request::post("/api/v1/predict")
        .header(
            "content-type",
            format!("multipart/form-data; boundary={BOUNDARY}"),
        )
        .body(Body::from(body))
        .unwrap()
}

pub fn get_request(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

pub async fn post_predict(app: &Router, parts: &[(&str, &[u8])]) -> (StatusCode, serde_json::Value) {
    let (s, j, _) = send(app, predict_request(multipart(parts))).await;
    (s, j)
}
