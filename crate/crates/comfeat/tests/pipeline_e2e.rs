use comfeat::manifest::read_manifest;
use comfeat::pipeline::{evaluate, train_from_manifest, TrainConfig};
use comfeat::synthetic::write_file_corpus;
use comfeat::weights::save_weights;
use comfeat_core::feature::FeatureSource;
use comfeat_core::spectral::SpectralConfig;

fn small_config(feature_set: Vec<FeatureSource>) -> TrainConfig {
    TrainConfig {
        feature_set,
        epochs: 5,
        batch_size: 8,
        seed: 17,
        split_ratios: (0.6, 0.2),
        fcn_dims: vec![32],
        ..Default::default()
    }
}

#[test]
fn training_from_files_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let entries = read_manifest(&write_file_corpus(dir.path(), 30, 8, 0.5).unwrap()).unwrap();
    let cfg = small_config(vec![FeatureSource::Trillsson, FeatureSource::Mfcc]);
    let spectral = SpectralConfig::default();
    let a = train_from_manifest(&entries, &cfg, &spectral).unwrap();
    let b = train_from_manifest(&entries, &cfg, &spectral).unwrap();
    assert_eq!(save_weights(&a.model), save_weights(&b.model));
    assert_eq!(a.log_jsonl(), b.log_jsonl());
    assert_eq!((a.train_ids.len(), a.dev_ids.len(), a.test_ids.len()), (18, 6, 6));
    assert_eq!(a.log.len(), 5);
    assert!(a
        .log
        .iter()
        .all(|e| e.dev_rmse.is_some() && e.train_mse.is_finite()));
}

#[test]
fn evaluation_is_a_mean() {
    let dir = tempfile::tempdir().unwrap();
    let entries = read_manifest(&write_file_corpus(dir.path(), 12, 4, 0.3).unwrap()).unwrap();
    let spectral = SpectralConfig::default();
    let out = train_from_manifest(&entries, &small_config(vec![FeatureSource::Lfcc]), &spectral).unwrap();
    let once = evaluate(&out.model, &entries, &spectral).unwrap();
    let doubled: Vec<_> = entries.iter().chain(&entries).cloned().collect();
    let twice = evaluate(&out.model, &doubled, &spectral).unwrap();
    assert!((once.mae - twice.mae).abs() < 1e-12);
    assert!((once.rmse - twice.rmse).abs() < 1e-12);
    assert_eq!((once.n, twice.n), (12, 24));
    assert!(once.mae <= once.rmse);
    assert_eq!(once.feature_set, vec![FeatureSource::Lfcc]);
}

#[test]
fn split_sizes_follow_the_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let entries = read_manifest(&write_file_corpus(dir.path(), 10, 4, 0.1).unwrap()).unwrap();
    let cfg = TrainConfig {
        epochs: 0,
        split_ratios: (0.6, 0.2),
        ..Default::default()
    };
    let out = train_from_manifest(&entries, &cfg, &SpectralConfig::default()).unwrap();
    assert_eq!(
        (out.train_ids.len(), out.dev_ids.len(), out.test_ids.len()),
        (6, 2, 2)
    );
    let mut all: Vec<_> = [out.train_ids, out.dev_ids, out.test_ids].concat();
    all.sort();
    let mut ids: Vec<_> = entries.iter().map(|e| e.id.clone()).collect();
    ids.sort();
    assert_eq!(all, ids);
}
