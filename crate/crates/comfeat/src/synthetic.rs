//! Seeded synthetic corpora standing in for access-restricted recordings.
//!
//! Every utterance draws its content from a generator seeded by a hash of
//! the corpus seed and its id, so an utterance is the same no matter how
//! large the corpus around it is.

use std::fs;
use std::path::{Path, PathBuf};

use comfeat_core::feature::{FeatureSource, FeatureVector};
use comfeat_core::metrics::MAX_SCORE;
use comfeat_core::train::Sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding::store_frames;
use crate::manifest::{write_manifest, ManifestEntry};
use crate::wav::encode_wav_pcm16;
use crate::{Error, Result};

const TRILLSSON_DIM: usize = 1024;
/// Width of the stand-in spectral vector, matching the default cepstra.
pub const SPECTRAL_DIM: usize = 20;
/// Noise scale of the stand-in spectral vector around its latent level.
pub const SPECTRAL_NOISE: f64 = 0.25;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn utterance_rng(seed: u64, id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(format!("{seed}:{id}").as_bytes()))
}

pub fn utterance_id(i: usize) -> String {
    format!("utt{i:04}")
}

fn noisy(rng: &mut ChaCha8Rng, level: f64, noise: f64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| level + noise * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn clamp_score(s: f64) -> f64 {
    s.clamp(0.0, MAX_SCORE)
}

/// One generated utterance with its inputs in the corpus's branch order.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUtterance {
    pub id: String,
    pub inputs: Vec<FeatureVector>,
    pub score: f64,
}

impl SyntheticUtterance {
    pub fn sample(&self) -> Sample {
        Sample {
            inputs: self.inputs.clone(),
            target: self.score,
        }
    }
}

pub fn samples(corpus: &[SyntheticUtterance]) -> Vec<Sample> {
    corpus.iter().map(SyntheticUtterance::sample).collect()
}

/// TRILLsson-shaped embeddings `s + N(0, 1)` per element with a latent
/// level `s ~ U(0, 1)`, scored as `clamp(24 · mean(embedding), 0, 24)`.
pub fn mean_embedding_corpus(n: usize, seed: u64) -> Vec<SyntheticUtterance> {
    (0..n)
        .map(|i| {
            let id = utterance_id(i);
            let mut rng = utterance_rng(seed, &id);
            let level: f64 = rng.gen();
            let emb = noisy(&mut rng, level, 1.0, TRILLSSON_DIM);
            let mean = emb.iter().sum::<f64>() / emb.len() as f64;
            SyntheticUtterance {
                score: clamp_score(MAX_SCORE * mean),
                inputs: vec![FeatureVector::new(FeatureSource::Trillsson, emb).expect("finite")],
                id,
            }
        })
        .collect()
}

/// Two independent latent levels `a, b ~ U(0, 1)`: a TRILLsson-shaped
/// vector around `a` and an MFCC-tagged 20-dim vector around `b`. The score
/// `12a + 12b` needs both, so either branch alone misses half the signal.
/// Inputs are ordered `[trillsson, mfcc]`.
pub fn two_source_corpus(n: usize, seed: u64) -> Vec<SyntheticUtterance> {
    (0..n)
        .map(|i| {
            let id = utterance_id(i);
            let mut rng = utterance_rng(seed, &id);
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let neural = noisy(&mut rng, a, 1.0, TRILLSSON_DIM);
            let spectral = noisy(&mut rng, b, SPECTRAL_NOISE, SPECTRAL_DIM);
            SyntheticUtterance {
                score: 12.0 * a + 12.0 * b,
                inputs: vec![
                    FeatureVector::new(FeatureSource::Trillsson, neural).expect("finite"),
                    FeatureVector::new(FeatureSource::Mfcc, spectral).expect("finite"),
                ],
                id,
            }
        })
        .collect()
}

/// Keeps only the inputs of `source` from each utterance.
pub fn project(corpus: &[SyntheticUtterance], source: FeatureSource) -> Vec<SyntheticUtterance> {
    corpus
        .iter()
        .map(|u| SyntheticUtterance {
            id: u.id.clone(),
            inputs: u
                .inputs
                .iter()
                .filter(|v| v.source() == source)
                .cloned()
                .collect(),
            score: u.score,
        })
        .collect()
}

/// Writes an on-disk corpus under `dir`: per utterance a 16 kHz mono WAV
/// (a tone whose loudness follows one latent level) and a TRILLsson CFEM
/// (around the other level), plus `manifest.csv` with relative paths.
/// Scores are `12a + 12b`. Returns the manifest path.
pub fn write_file_corpus(dir: &Path, n: usize, seed: u64, audio_secs: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rate = 16_000u32;
    let len = (audio_secs * f64::from(rate)).round() as usize;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let id = utterance_id(i);
        let mut rng = utterance_rng(seed, &id);
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        let freq = rng.gen_range(150.0..400.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let amp = 0.02 * (3.0 * b).exp();
        let samples: Vec<f64> = (0..len)
            .map(|t| {
                let x = t as f64 / f64::from(rate);
                let noise: f64 = rng.sample(StandardNormal);
                amp * (std::f64::consts::TAU * freq * x + phase).sin() + 0.002 * noise
            })
            .collect();
        let wav_name = format!("{id}.wav");
        let cfem_name = format!("{id}.cfem");
        let wav_path = dir.join(&wav_name);
        fs::write(&wav_path, encode_wav_pcm16(&[samples], rate)).map_err(|e| Error::io(&wav_path, e))?;
        let emb = noisy(&mut rng, a, 1.0, TRILLSSON_DIM);
        let cfem_path = dir.join(&cfem_name);
        fs::write(&cfem_path, store_frames(&[emb], FeatureSource::Trillsson)?)
            .map_err(|e| Error::io(&cfem_path, e))?;
        entries.push(ManifestEntry {
            id,
            audio_path: Some(PathBuf::from(wav_name)),
            embedding_paths: [(FeatureSource::Trillsson, PathBuf::from(cfem_name))].into(),
            score: clamp_score(12.0 * a + 12.0 * b),
        });
    }
    let manifest = dir.join("manifest.csv");
    fs::write(&manifest, write_manifest(&entries)).map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}
