//! The CFWT weight file.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic      4 bytes  "CFWT"
//! version    u16      1
//! json_len   u32      byte length of the config document
//! config     UTF-8    model config as JSON with sorted keys, no whitespace
//! n_tensors  u32
//! repeated n_tensors times:
//!   len      u32      element count
//!   values   len × f64
//! ```
//!
//! Tensors follow the canonical order of [`Parameters`]: per branch conv
//! weights then biases, per hidden layer weights then biases, then head
//! weights and bias. Saving is byte-reproducible for a given model.

use comfeat_core::nn::{FusionModel, ModelConfig, Parameters};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"CFWT";
pub const VERSION: u16 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum WeightsError {
    #[error("not a CFWT file (bad magic)")]
    BadMagic,
    #[error("unsupported CFWT version {0}")]
    BadVersion(u16),
    #[error("CFWT file truncated at byte {0}")]
    Truncated(usize),
    #[error("CFWT tensors do not match the embedded config: {0}")]
    ConfigMismatch(String),
}

/// Canonical JSON for a model config: object keys sorted, compact.
pub fn canonical_config_json(config: &ModelConfig) -> String {
    // serde_json::Value objects are BTreeMaps, so re-serializing sorts keys
    serde_json::to_value(config)
        .and_then(|v| serde_json::to_string(&v))
        .expect("model config always serializes")
}

pub fn save_weights(model: &FusionModel) -> Vec<u8> {
    let json = canonical_config_json(model.config());
    let tensors = model.params().tensors();
    let n_values: usize = tensors.iter().map(|t| t.len()).sum();
    let mut out = Vec::with_capacity(14 + json.len() + 4 * tensors.len() + 8 * n_values);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(json.as_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.len() as u32).to_le_bytes());
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WeightsError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(WeightsError::Truncated(self.bytes.len()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, WeightsError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn load_weights(bytes: &[u8]) -> Result<FusionModel, WeightsError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(WeightsError::BadMagic);
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(WeightsError::BadVersion(version));
    }
    let json_len = r.u32()? as usize;
    let json = r.take(json_len)?;
    let config: ModelConfig = serde_json::from_slice(json)
        .map_err(|e| WeightsError::ConfigMismatch(format!("config JSON: {e}")))?;
    config
        .validate()
        .map_err(|e| WeightsError::ConfigMismatch(e.to_string()))?;

    let mut params = Parameters::zeros(&config);
    let n_tensors = r.u32()? as usize;
    let expected_shapes = params.shapes();
    if n_tensors != expected_shapes.len() {
        return Err(WeightsError::ConfigMismatch(format!(
            "file has {n_tensors} tensors, config implies {}",
            expected_shapes.len()
        )));
    }
    for (i, tensor) in params.tensors_mut().into_iter().enumerate() {
        let len = r.u32()? as usize;
        if len != tensor.len() {
            return Err(WeightsError::ConfigMismatch(format!(
                "tensor {i} has {len} values, config implies {}",
                tensor.len()
            )));
        }
        let raw = r.take(8 * len)?;
        for (slot, chunk) in tensor.iter_mut().zip(raw.chunks_exact(8)) {
            *slot = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if r.at != bytes.len() {
        return Err(WeightsError::ConfigMismatch(format!(
            "{} bytes after the last tensor",
            bytes.len() - r.at
        )));
    }
    FusionModel::from_parts(config, params).map_err(|e| WeightsError::ConfigMismatch(e.to_string()))
}

/// SHA-256 of a weight file, lowercase hex.
pub fn weights_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Short version tag derived from the file digest.
pub fn model_version(digest: &str) -> String {
    format!("cfwt{VERSION}-{}", &digest[..12.min(digest.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use comfeat_core::feature::FeatureSource;
    use comfeat_core::nn::BranchSpec;

    fn model() -> FusionModel {
        FusionModel::init(ModelConfig {
            branches: vec![
                BranchSpec::new(FeatureSource::Other, 8),
                BranchSpec::new(FeatureSource::Mfcc, 5),
            ],
            conv_filters: 3,
            kernel_size: 3,
            fcn_dims: vec![4, 2],
            dropout_p: 0.2,
            seed: 17,
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = save_weights(&m);
        let back = load_weights(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_weights(&back), bytes);
    }

    #[test]
    fn json_is_sorted_and_compact() {
        let json = canonical_config_json(model().config());
        assert!(
            json.starts_with(r#"{"branches":[{"input_dim":8,"source":"other"}"#),
            "{json}"
        );
        assert!(
            json.contains(r#""conv_filters":3,"dropout_p":0.2,"fcn_dims":[4,2],"kernel_size":3,"seed":17}"#)
        );
    }

    #[test]
    fn error_paths() {
        let bytes = save_weights(&model());
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert_eq!(load_weights(&bad), Err(WeightsError::BadMagic));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(load_weights(&bad), Err(WeightsError::BadVersion(9)));

        // cut in the middle of the last tensor
        assert!(matches!(
            load_weights(&bytes[..bytes.len() - 3]),
            Err(WeightsError::Truncated(_))
        ));
        assert!(matches!(
            load_weights(&bytes[..2]),
            Err(WeightsError::Truncated(_))
        ));

        let mut long = bytes.clone();
        long.extend_from_slice(&[0; 8]);
        assert!(matches!(
            load_weights(&long),
            Err(WeightsError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn config_mismatch() {
        let m = model();
        let json = canonical_config_json(m.config());
        // a config claiming wider hidden layers than the stored tensors
        let wider = json.replace(r#""fcn_dims":[4,2]"#, r#""fcn_dims":[5,2]"#);
        let mut bytes = save_weights(&m);
        let tail = bytes.split_off(10 + json.len());
        bytes.truncate(6);
        bytes.extend_from_slice(&(wider.len() as u32).to_le_bytes());
        bytes.extend_from_slice(wider.as_bytes());
        bytes.extend_from_slice(&tail);
        assert!(matches!(
            load_weights(&bytes),
            Err(WeightsError::ConfigMismatch(_))
        ));

        let mut garbage = save_weights(&m);
        garbage[10] = b'!';
        assert!(matches!(
            load_weights(&garbage),
            Err(WeightsError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn digest_is_stable() {
        let bytes = save_weights(&model());
        assert_eq!(weights_digest(&bytes), weights_digest(&bytes.clone()));
        assert_eq!(weights_digest(&bytes).len(), 64);
        assert!(model_version(&weights_digest(&bytes)).starts_with("cfwt1-"));
    }
}
