//! The CFEM embedding file: precomputed per-utterance feature frames.
//!
//! Layout, little-endian throughout:
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 4    | magic `CFEM`                                 |
//! | 4      | 2    | version, always 1                            |
//! | 6      | 2    | source: 1 trillsson, 2 xvector, 255 other    |
//! | 8      | 4    | `n_frames` (at least 1)                      |
//! | 12     | 4    | `dim`                                        |
//! | 16     | ...  | `n_frames × dim` f32 values, row-major       |

use comfeat_core::feature::{FeatureSource, FeatureVector};
use comfeat_core::spectral::FeatureMatrix;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"CFEM";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("not a CFEM file (bad magic)")]
    BadMagic,
    #[error("unsupported CFEM version {0}")]
    BadVersion(u16),
    #[error("unknown CFEM source code {0}")]
    UnknownSource(u16),
    #[error("{found} embedding of width {dim} does not satisfy the expected {expected} contract")]
    DimensionMismatch {
        expected: FeatureSource,
        found: FeatureSource,
        dim: usize,
    },
    #[error("CFEM file truncated: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("CFEM file has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("CFEM file holds no frames")]
    Empty,
    #[error("CFEM payload contains a non-finite value")]
    NonFinite,
}

/// Wire code of a source, if the format can carry it.
pub fn source_code(source: FeatureSource) -> Option<u16> {
    match source {
        FeatureSource::Trillsson => Some(1),
        FeatureSource::Xvector => Some(2),
        FeatureSource::Other => Some(255),
        FeatureSource::Mfcc | FeatureSource::Lfcc => None,
    }
}

fn source_from_code(code: u16) -> Result<FeatureSource, EmbeddingError> {
    match code {
        1 => Ok(FeatureSource::Trillsson),
        2 => Ok(FeatureSource::Xvector),
        255 => Ok(FeatureSource::Other),
        other => Err(EmbeddingError::UnknownSource(other)),
    }
}

/// Decoded file contents before pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub source: FeatureSource,
    pub n_frames: usize,
    pub dim: usize,
    /// f32 payload widened to f64, row-major.
    pub values: Vec<f64>,
}

impl EmbeddingFile {
    pub fn parse(bytes: &[u8]) -> Result<Self, EmbeddingError> {
        if bytes.len() < 4 {
            return Err(EmbeddingError::Truncated {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        if &bytes[0..4] != MAGIC {
            return Err(EmbeddingError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(EmbeddingError::Truncated {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(EmbeddingError::BadVersion(version));
        }
        let source = source_from_code(u16::from_le_bytes([bytes[6], bytes[7]]))?;
        let n_frames = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let dim = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        if !source.accepts_dim(dim) {
            return Err(EmbeddingError::DimensionMismatch {
                expected: source,
                found: source,
                dim,
            });
        }
        if n_frames == 0 {
            return Err(EmbeddingError::Empty);
        }
        let expected = n_frames
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or(EmbeddingError::Truncated {
                expected: usize::MAX,
                actual: bytes.len(),
            })?;
        if bytes.len() < expected {
            return Err(EmbeddingError::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(EmbeddingError::TrailingBytes(bytes.len() - expected));
        }
        let values: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Self {
            source,
            n_frames,
            dim,
            values,
        })
    }

    /// Column means over frames, accumulated in f64 in frame order.
    pub fn pooled(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for row in self.values.chunks_exact(self.dim) {
            for (acc, v) in sums.iter_mut().zip(row) {
                *acc += v;
            }
        }
        if self.n_frames > 1 {
            let n = self.n_frames as f64;
            for v in &mut sums {
                *v /= n;
            }
        }
        sums
    }
}

/// Parses a CFEM file and mean-pools it over time.
pub fn load_embedding(bytes: &[u8], expected: FeatureSource) -> Result<FeatureVector, EmbeddingError> {
    let file = EmbeddingFile::parse(bytes)?;
    if file.source != expected {
        return Err(EmbeddingError::DimensionMismatch {
            expected,
            found: file.source,
            dim: file.dim,
        });
    }
    FeatureVector::new(file.source, file.pooled()).map_err(|_| EmbeddingError::NonFinite)
}

/// Serializes `rows` (each of the same width) as a CFEM file. Values are
/// narrowed to f32.
pub fn store_frames<R: AsRef<[f64]>>(rows: &[R], source: FeatureSource) -> Result<Vec<u8>, EmbeddingError> {
    let dim = rows.first().map_or(0, |r| r.as_ref().len());
    let mismatch = EmbeddingError::DimensionMismatch {
        expected: source,
        found: source,
        dim,
    };
    let code = source_code(source).ok_or(mismatch)?;
    if rows.is_empty() {
        return Err(EmbeddingError::Empty);
    }
    if !source.accepts_dim(dim) || rows.iter().any(|r| r.as_ref().len() != dim) {
        return Err(EmbeddingError::DimensionMismatch {
            expected: source,
            found: source,
            dim,
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * rows.len() * dim);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&code.to_le_bytes());
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for row in rows {
        for v in row.as_ref() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Single-frame file holding `v` under its own source tag.
pub fn store_embedding(v: &FeatureVector) -> Result<Vec<u8>, EmbeddingError> {
    store_frames(&[v.values()], v.source())
}

/// Frame-level matrix as an `other` file, e.g. cached cepstra.
pub fn store_matrix(m: &FeatureMatrix) -> Result<Vec<u8>, EmbeddingError> {
    let rows: Vec<&[f64]> = m.rows().collect();
    store_frames(&rows, FeatureSource::Other)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_xvector() {
        let bytes = store_frames(&[vec![0.0; 512]], FeatureSource::Xvector).unwrap();
        assert_eq!(bytes.len(), 16 + 512 * 4);
        let v = load_embedding(&bytes, FeatureSource::Xvector).unwrap();
        assert_eq!(v.source(), FeatureSource::Xvector);
        assert_eq!(v.values(), &[0.0; 512][..]);
    }

    #[test]
    fn multi_frame_mean() {
        let bytes = store_frames(&[[1.0, 2.0, 3.0], [3.0, 4.0, 5.0]], FeatureSource::Other).unwrap();
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
        let v = load_embedding(&bytes, FeatureSource::Other).unwrap();
        assert_eq!(v.values(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn header_layout() {
        let bytes = store_frames(&[vec![0.5; 1024]], FeatureSource::Trillsson).unwrap();
        assert_eq!(&bytes[0..4], b"CFEM");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..8], &[1, 0]);
        let other = store_frames(&[[0.5]], FeatureSource::Other).unwrap();
        assert_eq!(&other[6..8], &[255, 0]);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = store_frames(&[[1.0]], FeatureSource::Other).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert_eq!(
            load_embedding(&bytes, FeatureSource::Other),
            Err(EmbeddingError::BadMagic)
        );
    }

    #[test]
    fn bad_version() {
        let mut bytes = store_frames(&[[1.0]], FeatureSource::Other).unwrap();
        bytes[4] = 2;
        assert_eq!(
            load_embedding(&bytes, FeatureSource::Other),
            Err(EmbeddingError::BadVersion(2))
        );
    }

    #[test]
    fn trillsson_contract() {
        let mut bytes = store_frames(&[vec![0.0; 512]], FeatureSource::Xvector).unwrap();
        bytes[6] = 1; // relabel as trillsson
        assert!(matches!(
            load_embedding(&bytes, FeatureSource::Trillsson),
            Err(EmbeddingError::DimensionMismatch { dim: 512, .. })
        ));
        assert!(matches!(
            store_frames(&[vec![0.0; 7]], FeatureSource::Xvector),
            Err(EmbeddingError::DimensionMismatch { dim: 7, .. })
        ));
    }

    #[test]
    fn expected_source_must_match() {
        let bytes = store_frames(&[vec![0.0; 512]], FeatureSource::Xvector).unwrap();
        assert!(matches!(
            load_embedding(&bytes, FeatureSource::Trillsson),
            Err(EmbeddingError::DimensionMismatch {
                expected: FeatureSource::Trillsson,
                found: FeatureSource::Xvector,
                ..
            })
        ));
    }

    #[test]
    fn truncation_and_trailing() {
        let bytes = store_frames(&[[1.0, 2.0], [3.0, 4.0]], FeatureSource::Other).unwrap();
        for cut in [2, 10, bytes.len() - 1] {
            assert!(matches!(
                load_embedding(&bytes[..cut], FeatureSource::Other),
                Err(EmbeddingError::Truncated { .. })
            ));
        }
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(
            load_embedding(&long, FeatureSource::Other),
            Err(EmbeddingError::TrailingBytes(1))
        );
    }

    #[test]
    fn unknown_source_and_empty() {
        let mut bytes = store_frames(&[[1.0]], FeatureSource::Other).unwrap();
        bytes[6] = 3;
        assert_eq!(
            load_embedding(&bytes, FeatureSource::Other),
            Err(EmbeddingError::UnknownSource(3))
        );
        let mut bytes = store_frames(&[[1.0]], FeatureSource::Other).unwrap();
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
        bytes.truncate(16);
        assert_eq!(
            load_embedding(&bytes, FeatureSource::Other),
            Err(EmbeddingError::Empty)
        );
        let none: [[f64; 1]; 0] = [];
        assert_eq!(
            store_frames(&none, FeatureSource::Other),
            Err(EmbeddingError::Empty)
        );
    }

    #[test]
    fn spectral_sources_have_no_wire_code() {
        assert!(store_frames(&[[0.0; 20]], FeatureSource::Mfcc).is_err());
    }

    #[test]
    fn nan_payload() {
        let bytes = store_frames(&[[f64::NAN]], FeatureSource::Other).unwrap();
        assert_eq!(
            load_embedding(&bytes, FeatureSource::Other),
            Err(EmbeddingError::NonFinite)
        );
    }
}
