//! Model-level checks against independent oracles.

mod common;

use common::*;
use proptest::prelude::*;
use snowpipe::eval::{pearson, run_regime, Regime, RegimeOptions, SplitSpec};
use snowpipe::features::{assemble_features, ChannelLayout};
use snowpipe::gridstack::valid_mask;
use snowpipe::model::{MlpParams, TrainConfig};
use snowpipe::synth::{generate_scene, SynthConfig};

fn worst_relative_error(p: &MlpParams, x: &[f64], y: &[f64], alpha: f64) -> f64 {
    let (loss, g) = p.backward(x, y, alpha).unwrap();
    assert!((loss - oracle_loss(p, x, y, alpha)).abs() <= 1e-12 * loss.max(1.0));
    let numeric = finite_difference_gradient(p, x, y, alpha);
    g.iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3))
        .fold(0.0, f64::max)
}

#[test]
fn gradient_matches_finite_differences_across_shapes() {
    let cases: [(&[usize], usize, f64); 4] = [
        (&[3, 4, 1], 5, 0.0),
        (&[2, 1], 3, 0.5),
        (&[21, 8, 4, 1], 6, 0.01),
        (&[5, 6, 6, 6, 1], 1, 2.0),
    ];
    for (i, (sizes, n, alpha)) in cases.iter().enumerate() {
        let p = random_net(sizes, 70 + i as u64);
        let (x, y) = random_batch(*n, sizes[0], 80 + i as u64);
        let err = worst_relative_error(&p, &x, &y, *alpha);
        assert!(err < 1e-6, "sizes {sizes:?}: {err:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Along a short segment that crosses no ReLU kink the network is
    // affine, so the midpoint value is the mean of the end values.
    #[test]
    fn piecewise_linear_between_kinks(seed in 0u64..10_000, t in 1e-5f64..1e-3) {
        let p = random_net(&[6, 7, 5, 1], seed);
        let (x, _) = random_batch(1, 6, seed + 1);
        let (d, _) = random_batch(1, 6, seed + 2);
        let point = |s: f64| -> Vec<f64> { x.iter().zip(&d).map(|(a, b)| a + s * b).collect() };
        let pattern = |v: &[f64]| -> Vec<bool> {
            let acts = p.forward_cached(v).unwrap();
            acts[1..acts.len() - 1].iter().flatten().map(|a| *a > 0.0).collect()
        };
        let (a, m, b) = (point(0.0), point(t), point(2.0 * t));
        prop_assume!(pattern(&a) == pattern(&b) && pattern(&a) == pattern(&m));
        let fa = p.forward_one(&a).unwrap();
        let fm = p.forward_one(&m).unwrap();
        let fb = p.forward_one(&b).unwrap();
        prop_assert!((2.0 * fm - fa - fb).abs() <= 1e-12 * (1.0 + fa.abs()));
    }
}

#[test]
fn noise_free_depth_is_identifiable_from_phase() {
    let cfg = SynthConfig::new(21, 48, 48).without_noise();
    let stack = generate_scene(&cfg).unwrap();
    let mask = valid_mask(&stack);
    assert_eq!(mask.len(), 48 * 48);
    let m = assemble_features(&stack, &mask).unwrap();
    let k = cfg.observables.phase_per_meter;
    // depth = sum of increments = 12 * mean_phase * cos(incidence) / k
    let inverted: Vec<f64> = (0..m.rows())
        .map(|i| 12.0 * m.row(i)[0] * m.row(i)[16].to_radians().cos() / k)
        .collect();
    let r = pearson(&inverted, m.targets()).unwrap();
    assert!(r > 0.999_999, "r = {r}");
    let worst = inverted
        .iter()
        .zip(m.targets())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "worst inversion error {worst}");
}

#[test]
fn trained_model_reaches_noise_floor() {
    let cfg = SynthConfig::new(5, 80, 80);
    let stack = generate_scene(&cfg).unwrap();
    let outcome = run_regime(
        &stack,
        &Regime::Split(SplitSpec::Holdout {
            fraction: 0.2,
            seed: 5,
        }),
        &TrainConfig::default(),
        &RegimeOptions {
            layout: ChannelLayout::WithLos,
            ..RegimeOptions::default()
        },
    )
    .unwrap();
    let floor = cfg.noise_floor_m();
    let train_ratio = outcome.train.rmse / floor;
    assert!(train_ratio <= 1.2, "training RMSE / floor = {train_ratio}");
    let ratio = outcome.test.rmse / floor;
    assert!(ratio < 1.5, "test RMSE / floor = {ratio}");
    assert!(
        outcome.test.pearson_r > 0.9,
        "r = {}",
        outcome.test.pearson_r
    );
    assert_eq!(outcome.model.layout, ChannelLayout::WithLos);
}
