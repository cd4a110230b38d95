//! Labeled dataset index in CSV form.
//!
//! The header must be exactly `id,audio_path,trillsson_path,xvector_path,score`.
//! Empty cells mark sources an utterance does not provide. Scores are PHQ-8
//! totals in `[0, 24]`.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use comfeat_core::feature::FeatureSource;
use comfeat_core::metrics::MAX_SCORE;
use thiserror::Error;

pub const HEADER: [&str; 5] = ["id", "audio_path", "trillsson_path", "xvector_path", "score"];

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("manifest header must be `{}`", HEADER.join(","))]
    BadHeader,
    #[error("duplicate utterance id `{0}`")]
    DuplicateId(String),
    #[error("line {line}: score {score} outside [0, 24]")]
    ScoreOutOfRange { line: u64, score: f64 },
    #[error("line {line}: {reason}")]
    BadRow { line: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub audio_path: Option<PathBuf>,
    pub embedding_paths: BTreeMap<FeatureSource, PathBuf>,
    pub score: f64,
}

impl ManifestEntry {
    /// Joins relative paths onto `base`.
    pub fn resolve_against(mut self, base: &Path) -> Self {
        let join = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        self.audio_path = self.audio_path.map(join);
        self.embedding_paths = self
            .embedding_paths
            .into_iter()
            .map(|(k, p)| (k, join(p)))
            .collect();
        self
    }
}

fn optional_path(cell: &str) -> Option<PathBuf> {
    let cell = cell.trim();
    (!cell.is_empty()).then(|| PathBuf::from(cell))
}

/// Parses and validates a manifest. Paths are kept as written.
pub fn load_manifest(bytes: &[u8]) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers().map_err(|_| ManifestError::BadHeader)?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(ManifestError::BadHeader);
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ManifestError::BadRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(ManifestError::BadRow {
                line,
                reason: "empty id".into(),
            });
        }
        let score: f64 = record[4].parse().map_err(|_| ManifestError::BadRow {
            line,
            reason: format!("score `{}` is not a number", &record[4]),
        })?;
        if !(0.0..=MAX_SCORE).contains(&score) {
            return Err(ManifestError::ScoreOutOfRange { line, score });
        }
        if !seen.insert(id.clone()) {
            return Err(ManifestError::DuplicateId(id));
        }
        let mut embedding_paths = BTreeMap::new();
        if let Some(p) = optional_path(&record[2]) {
            embedding_paths.insert(FeatureSource::Trillsson, p);
        }
        if let Some(p) = optional_path(&record[3]) {
            embedding_paths.insert(FeatureSource::Xvector, p);
        }
        entries.push(ManifestEntry {
            id,
            audio_path: optional_path(&record[1]),
            embedding_paths,
            score,
        });
    }
    Ok(entries)
}

/// Reads a manifest file and resolves its relative paths against the
/// manifest's own directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, crate::Error> {
    let bytes = std::fs::read(path).map_err(|e| crate::Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(load_manifest(&bytes)?
        .into_iter()
        .map(|e| e.resolve_against(base))
        .collect())
}

/// Renders entries back to CSV text with the canonical header.
pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    let show = |p: Option<&PathBuf>| p.map(|p| p.display().to_string()).unwrap_or_default();
    for e in entries {
        w.write_record([
            e.id.clone(),
            show(e.audio_path.as_ref()),
            show(e.embedding_paths.get(&FeatureSource::Trillsson)),
            show(e.embedding_paths.get(&FeatureSource::Xvector)),
            e.score.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to vec")).expect("csv output is utf-8")
}
