//! Metrics, train/test splits and the evaluation regimes.

mod histogram;
mod metrics;

pub use histogram::{bin_index, residual_histogram, Histogram2D, DEFAULT_BINS, DEFAULT_RANGE};
pub use metrics::{mean_bias, pearson, r2, rmse, write_report_csv, EvalReport, REPORT_HEADER};

use crate::error::{Error, Result};
use crate::features::{assemble_for_pixels, ChannelLayout, FeatureMatrix};
use crate::gridstack::{valid_mask, PixelMask, SceneStack};
use crate::model::{predict, train, MlpModel, TrainConfig, TrainReport};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Col,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    /// Random pixel holdout; `fraction` of the valid pixels are tested.
    Holdout { fraction: f64, seed: u64 },
    /// Pixels whose row (or column) index is below
    /// `round(boundary_fraction * extent)` train, the rest test.
    SpatialHalf { axis: Axis, boundary_fraction: f64 },
}

impl SplitSpec {
    pub fn description(&self) -> String {
        match self {
            SplitSpec::Holdout { fraction, seed } => {
                format!(
                    "random pixel holdout, {:.0}% test, seed {seed}",
                    fraction * 100.0
                )
            }
            SplitSpec::SpatialHalf {
                axis,
                boundary_fraction,
            } => format!(
                "{} below {boundary_fraction} train, rest test",
                match axis {
                    Axis::Row => "rows",
                    Axis::Col => "columns",
                }
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        let f = match self {
            SplitSpec::Holdout { fraction, .. } => *fraction,
            SplitSpec::SpatialHalf {
                boundary_fraction, ..
            } => *boundary_fraction,
        };
        if f > 0.0 && f < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "split fraction {f} outside (0, 1)"
            )))
        }
    }
}

/// Splits the valid pixels of a `width x height` scene. Both halves come
/// back sorted ascending. Holdout shuffles with `substream(seed, HOLDOUT)`
/// and tests on the last `round(fraction * N)` shuffled pixels.
pub fn split_pixels(
    mask: &PixelMask,
    width: u32,
    height: u32,
    spec: &SplitSpec,
) -> Result<(PixelMask, PixelMask)> {
    spec.validate()?;
    let n_pixels = width as usize * height as usize;
    let (train, test) = match spec {
        SplitSpec::Holdout { fraction, seed } => {
            let mut order = mask.indices().to_vec();
            rng::shuffle(&mut rng::substream(*seed, rng::HOLDOUT), &mut order);
            let n_test = (order.len() as f64 * fraction).round() as usize;
            let test = order.split_off(order.len() - n_test);
            (
                PixelMask::from_unsorted(order, n_pixels)?,
                PixelMask::from_unsorted(test, n_pixels)?,
            )
        }
        SplitSpec::SpatialHalf {
            axis,
            boundary_fraction,
        } => {
            let w = width as usize;
            let (coord, extent): (Box<dyn Fn(usize) -> usize>, u32) = match axis {
                Axis::Row => (Box::new(move |p| p / w), height),
                Axis::Col => (Box::new(move |p| p % w), width),
            };
            let boundary = (extent as f64 * boundary_fraction).round() as usize;
            (
                mask.filter(|p| coord(p) < boundary),
                mask.filter(|p| coord(p) >= boundary),
            )
        }
    };
    check_partition(mask, &train, &test)?;
    Ok((train, test))
}

/// Train and test must be disjoint and together cover `mask`.
pub fn check_partition(mask: &PixelMask, train: &PixelMask, test: &PixelMask) -> Result<()> {
    let overlap = test
        .indices()
        .iter()
        .filter(|p| train.indices().binary_search(p).is_ok())
        .count();
    if overlap > 0 {
        return Err(Error::DisjointnessViolation(overlap));
    }
    if train.len() + test.len() != mask.len()
        || train
            .indices()
            .iter()
            .chain(test.indices())
            .any(|p| mask.indices().binary_search(p).is_err())
    {
        return Err(Error::InvalidValues(
            "train/test split does not cover the valid mask".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Regime<'a> {
    /// Train and test on disjoint pixels of one scene.
    Split(SplitSpec),
    /// Train on every valid pixel of the training scene, test on every
    /// valid pixel of another.
    Transfer { test: &'a SceneStack, label: String },
}

impl Regime<'_> {
    pub fn label(&self) -> String {
        match self {
            Regime::Split(SplitSpec::Holdout { .. }) => "in_distribution".into(),
            Regime::Split(SplitSpec::SpatialHalf { .. }) => "spatial_half".into(),
            Regime::Transfer { label, .. } => label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeOptions {
    pub debias: bool,
    pub layout: ChannelLayout,
    /// Bins and range of an optional test-set histogram.
    pub histogram: Option<(usize, (f64, f64))>,
}

impl Default for RegimeOptions {
    fn default() -> Self {
        Self {
            debias: false,
            layout: ChannelLayout::Standard,
            histogram: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegimeOutcome {
    pub model: MlpModel,
    pub train_log: TrainReport,
    /// Metrics on the training pixels (in-sample).
    pub train: EvalReport,
    pub test: EvalReport,
    pub test_pixels: Vec<usize>,
    pub test_predictions: Vec<f64>,
    /// Test truth in the space the metrics were computed in (centred when
    /// debiasing).
    pub test_truth: Vec<f64>,
    pub histogram: Option<Histogram2D>,
}

fn centred(values: &[f64]) -> (Vec<f64>, f64) {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| v - m).collect(), m)
}

/// Trains on one pixel set and scores on another.
///
/// With `debias`, the training targets and the test truth are each centred
/// on their own mean before training and scoring; predictions are not
/// shifted back.
pub fn run_regime(
    train_stack: &SceneStack,
    regime: &Regime<'_>,
    config: &TrainConfig,
    options: &RegimeOptions,
) -> Result<RegimeOutcome> {
    let label = regime.label();
    let train_mask = valid_mask(train_stack);
    let (train_pixels, test_stack, test_pixels) = match regime {
        Regime::Split(spec) => {
            let (tr, te) =
                split_pixels(&train_mask, train_stack.width(), train_stack.height(), spec)?;
            (tr, train_stack, te)
        }
        Regime::Transfer { test, .. } => (train_mask, *test, valid_mask(test)),
    };
    let train_m = assemble_for_pixels(train_stack, train_pixels.indices(), options.layout)?;
    let test_m = assemble_for_pixels(test_stack, test_pixels.indices(), options.layout)?;
    score(label, train_m, test_m, config, options)
}

fn score(
    label: String,
    train_m: FeatureMatrix,
    test_m: FeatureMatrix,
    config: &TrainConfig,
    options: &RegimeOptions,
) -> Result<RegimeOutcome> {
    let raw_train_mean = train_m.targets().iter().sum::<f64>() / train_m.rows().max(1) as f64;
    let (train_m, test_truth) = if options.debias {
        let (train_t, _) = centred(train_m.targets());
        let (test_t, _) = centred(test_m.targets());
        (train_m.with_targets(train_t)?, test_t)
    } else {
        (train_m, test_m.targets().to_vec())
    };
    let (mut model, train_log) = train(config, &train_m)?;
    model.debias = options.debias;
    model.train_target_mean = raw_train_mean;

    let train_pred = predict(&model, &train_m)?;
    let test_pred = predict(&model, &test_m)?;
    let train_report = EvalReport::compute(
        format!("{label}_train"),
        &train_pred,
        train_m.targets(),
        options.debias,
    )?;
    let test_report = EvalReport::compute(
        format!("{label}_test"),
        &test_pred,
        &test_truth,
        options.debias,
    )?;
    let histogram = match options.histogram {
        Some((bins, range)) => Some(residual_histogram(&test_pred, &test_truth, bins, range)?),
        None => None,
    };
    Ok(RegimeOutcome {
        model,
        train_log,
        train: train_report,
        test: test_report,
        test_pixels: test_m.pixel_indices().to_vec(),
        test_predictions: test_pred,
        test_truth,
        histogram,
    })
}

/// Predictions of an already-trained model on every valid pixel of `stack`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub pixels: Vec<usize>,
    pub predictions: Vec<f64>,
    pub truth: Vec<f64>,
    pub histogram: Option<Histogram2D>,
}

/// Scores `model` on all valid pixels of `stack`.
///
/// With `debias` the truth is centred on its own mean. Predictions of a
/// model trained on centred targets are used as they are; predictions of a
/// model trained on raw targets are centred by that model's training-target
/// mean, putting both in the same centred space.
pub fn evaluate_model(
    model: &MlpModel,
    stack: &SceneStack,
    label: &str,
    debias: bool,
    histogram: Option<(usize, (f64, f64))>,
) -> Result<Evaluation> {
    let mask = valid_mask(stack);
    let m = assemble_for_pixels(stack, mask.indices(), model.layout)?;
    let mut predictions = predict(model, &m)?;
    let truth = if debias {
        if !model.debias {
            for p in &mut predictions {
                *p -= model.train_target_mean;
            }
        }
        centred(m.targets()).0
    } else {
        m.targets().to_vec()
    };
    let report = EvalReport::compute(label, &predictions, &truth, debias)?;
    let histogram = match histogram {
        Some((bins, range)) => Some(residual_histogram(&predictions, &truth, bins, range)?),
        None => None,
    };
    Ok(Evaluation {
        report,
        pixels: m.pixel_indices().to_vec(),
        predictions,
        truth,
        histogram,
    })
}
