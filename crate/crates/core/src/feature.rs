//! Feature sources and the fixed-dimension vectors that flow into the model.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// TRILLsson embedding width.
pub const TRILLSSON_DIM: usize = 1024;
/// x-vector embedding width.
pub const XVECTOR_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Mfcc,
    Lfcc,
    Trillsson,
    Xvector,
    /// Untyped vectors, used for cached spectral frames and tests.
    Other,
}

impl FeatureSource {
    pub const ALL: [FeatureSource; 5] = [
        FeatureSource::Mfcc,
        FeatureSource::Lfcc,
        FeatureSource::Trillsson,
        FeatureSource::Xvector,
        FeatureSource::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSource::Mfcc => "mfcc",
            FeatureSource::Lfcc => "lfcc",
            FeatureSource::Trillsson => "trillsson",
            FeatureSource::Xvector => "xvector",
            FeatureSource::Other => "other",
        }
    }

    /// Fixed width for pretrained-model embeddings; `None` for sources whose
    /// width depends on configuration.
    pub fn contract_dim(self) -> Option<usize> {
        match self {
            FeatureSource::Trillsson => Some(TRILLSSON_DIM),
            FeatureSource::Xvector => Some(XVECTOR_DIM),
            _ => None,
        }
    }

    pub fn is_spectral(self) -> bool {
        matches!(self, FeatureSource::Mfcc | FeatureSource::Lfcc)
    }

    pub fn is_neural(self) -> bool {
        matches!(self, FeatureSource::Trillsson | FeatureSource::Xvector)
    }

    pub fn accepts_dim(self, dim: usize) -> bool {
        dim > 0 && self.contract_dim().is_none_or(|d| d == dim)
    }
}

impl fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown feature source")]
pub struct UnknownSource;

impl FromStr for FeatureSource {
    type Err = UnknownSource;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureSource::ALL
            .into_iter()
            .find(|src| src.name().eq_ignore_ascii_case(s.trim()))
            .ok_or(UnknownSource)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("{source_tag} vector of dimension {dim} violates the source contract")]
    DimensionMismatch { source_tag: FeatureSource, dim: usize },
    #[error("feature vector contains a non-finite value")]
    NonFinite,
}

/// A pooled, fixed-dimension feature vector tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    source: FeatureSource,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(source: FeatureSource, values: Vec<f64>) -> Result<Self, FeatureError> {
        if !source.accepts_dim(values.len()) {
            return Err(FeatureError::DimensionMismatch {
                source_tag: source,
                dim: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        Ok(Self { source, values })
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn contract_dims() {
        assert!(FeatureVector::new(FeatureSource::Trillsson, vec![0.0; 1024]).is_ok());
        assert!(FeatureVector::new(FeatureSource::Xvector, vec![0.0; 512]).is_ok());
        assert_eq!(
            FeatureVector::new(FeatureSource::Trillsson, vec![0.0; 512]),
            Err(FeatureError::DimensionMismatch {
                source_tag: FeatureSource::Trillsson,
                dim: 512
            })
        );
        assert!(FeatureVector::new(FeatureSource::Mfcc, vec![0.0; 20]).is_ok());
        assert!(FeatureVector::new(FeatureSource::Other, vec![]).is_err());
    }

    #[test]
    fn rejects_nan() {
        assert_eq!(
            FeatureVector::new(FeatureSource::Other, vec![1.0, f64::NAN]),
            Err(FeatureError::NonFinite)
        );
    }

    #[test]
    fn parse_names() {
        for src in FeatureSource::ALL {
            assert_eq!(src.name().parse::<FeatureSource>(), Ok(src));
        }
        assert_eq!("MFCC".parse::<FeatureSource>(), Ok(FeatureSource::Mfcc));
        assert!("wav2vec".parse::<FeatureSource>().is_err());
    }
}
