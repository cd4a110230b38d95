mod support;

use comfeat_core::nn::{loss_and_gradients, FusionModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{numeric_gradient, random_batch, random_config, relative_error};

const H: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for case in 0..25 {
        let cfg = random_config(&mut rng);
        let model = FusionModel::init(cfg.clone()).unwrap();
        let batch = random_batch(&cfg, &mut rng, 1 + case % 4);
        let refs: Vec<(&[Vec<f64>], f64)> = batch.iter().map(|(x, t)| (x.as_slice(), *t)).collect();
        let (_, grads) = loss_and_gradients(&model, &refs, None::<&mut ChaCha8Rng>).unwrap();
        for (i, analytic) in grads.to_flat().into_iter().enumerate() {
            match numeric_gradient(&model, &batch, i, H) {
                Some(numeric) => {
                    let err = relative_error(analytic, numeric);
                    assert!(
                        err < TOLERANCE,
                        "case {case} coord {i}: analytic {analytic} numeric {numeric} rel {err}"
                    );
                    worst = worst.max(err);
                    checked += 1;
                }
                None => skipped += 1,
            }
        }
    }
    eprintln!("{checked} coordinates checked, {skipped} skipped, worst relative error {worst:e}");
    assert!(checked > 1000);
    assert!(
        skipped * 100 <= checked,
        "{skipped} kink crossings vs {checked} checked"
    );
}

#[test]
fn gradients_with_fixed_dropout_masks() {
    // Cloning the rng replays the same dropout masks, which makes the
    // realized loss a deterministic function of the parameters.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let mut cfg = random_config(&mut rng);
        cfg.dropout_p = 0.3;
        cfg.fcn_dims = vec![6, 5];
        let model = FusionModel::init(cfg.clone()).unwrap();
        let batch = random_batch(&cfg, &mut rng, 3);
        let refs: Vec<(&[Vec<f64>], f64)> = batch.iter().map(|(x, t)| (x.as_slice(), *t)).collect();
        let mask_rng = ChaCha8Rng::seed_from_u64(5);
        let (_, grads) = loss_and_gradients(&model, &refs, Some(&mut mask_rng.clone())).unwrap();
        for (i, analytic) in grads.to_flat().into_iter().enumerate() {
            let loss_at = |delta: f64| {
                let mut m = model.clone();
                let theta = m.params().get_flat(i).unwrap();
                m.params_mut().set_flat(i, theta + delta);
                loss_and_gradients(&m, &refs, Some(&mut mask_rng.clone()))
                    .unwrap()
                    .0
            };
            let numeric = (loss_at(H) - loss_at(-H)) / (2.0 * H);
            // kink crossings are rare; tolerate them only where the
            // difference quotient is obviously discontinuous
            let err = relative_error(analytic, numeric);
            if err >= TOLERANCE {
                let half = (loss_at(H / 2.0) - loss_at(-H / 2.0)) / H;
                assert!(
                    (half - numeric).abs() > 1e-3 * numeric.abs().max(1e-6),
                    "coord {i}: analytic {analytic} numeric {numeric}"
                );
            }
        }
    }
}
