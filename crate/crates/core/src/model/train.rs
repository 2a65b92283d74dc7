use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{apply_normalizer, fit_normalizer, FeatureMatrix};
use crate::model::adam::{adam_step, AdamHyper, AdamState};
use crate::model::mlp::{mse, MlpParams};
use crate::model::{layer_sizes, MlpModel};
use crate::rng;

/// Epochs without a `tol` improvement in validation loss before the
/// learning rate is divided by `lr_decay_factor`.
pub const LR_STALL_EPOCHS: usize = 2;

pub const MIN_TRAIN_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub alpha: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub tol: f64,
    pub lr_decay_factor: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            alpha: 0.01,
            max_epochs: 500,
            patience: 15,
            val_fraction: 0.10,
            batch_size: 200,
            seed: 42,
            tol: 1e-4,
            lr_decay_factor: 5.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("alpha", self.alpha),
            ("tol", self.tol),
            ("lr_decay_factor", self.lr_decay_factor),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "val_fraction must lie in (0, 1), got {}",
                self.val_fraction
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if self.max_epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "max_epochs, patience and batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn adam(&self) -> AdamHyper {
        AdamHyper {
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean penalised minibatch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Unpenalised MSE on the validation rows per epoch.
    pub val_loss: Vec<f64>,
    pub stop_reason: StopReason,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub final_learning_rate: f64,
    /// 1-based epochs after which the learning rate was divided.
    pub lr_decay_epochs: Vec<usize>,
    pub n_train: usize,
    pub n_val: usize,
}

struct Rows {
    x: Vec<f64>,
    y: Vec<f64>,
}

fn gather(m: &FeatureMatrix, order: &[usize], c: usize) -> Rows {
    let mut x = Vec::with_capacity(order.len() * c);
    let mut y = Vec::with_capacity(order.len());
    for &r in order {
        x.extend_from_slice(m.row(r));
        y.push(m.targets()[r]);
    }
    Rows { x, y }
}

/// Fits the regressor.
///
/// Rows are shuffled with `substream(seed, TRAIN_SPLIT)` and the last
/// `round(val_fraction * N)` of them held out for validation. The
/// normalizer is fitted on the remaining rows. Each epoch visits the
/// training rows in a fresh order drawn from the same stream, in batches of
/// `batch_size` with the final short batch kept. The parameters of the
/// epoch with the lowest validation loss are returned, whichever way the
/// loop ends.
pub fn train(config: &TrainConfig, features: &FeatureMatrix) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    let n = features.rows();
    if n < MIN_TRAIN_ROWS {
        return Err(Error::TooFewRows {
            needed: MIN_TRAIN_ROWS,
            got: n,
        });
    }
    let c = features.channels();
    let mut stream = rng::substream(config.seed, rng::TRAIN_SPLIT);
    let mut order: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut stream, &mut order);
    let n_val = ((n as f64 * config.val_fraction).round() as usize).clamp(1, n - 2);
    let (train_rows, val_rows) = order.split_at(n - n_val);

    let train_m = features.select(train_rows);
    let val_m = features.select(val_rows);
    let normalizer = fit_normalizer(&train_m)?;
    let train_m = apply_normalizer(&normalizer, &train_m)?;
    let val_m = apply_normalizer(&normalizer, &val_m)?;
    let val = gather(&val_m, &(0..val_m.rows()).collect::<Vec<_>>(), c);
    let n_train = train_m.rows();

    let mut params = MlpParams::glorot(&layer_sizes(c), config.seed);
    let mut adam = AdamState::new(&params);
    let hyper = config.adam();
    let mut lr = config.learning_rate;

    let mut report = TrainReport {
        epochs_run: 0,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        stop_reason: StopReason::MaxEpochs,
        best_epoch: 0,
        final_learning_rate: lr,
        lr_decay_epochs: Vec::new(),
        n_train,
        n_val,
    };
    let mut best_val = f64::INFINITY;
    let mut best_params = params.clone();
    let mut since_improvement = 0;
    let mut since_lr_change = 0;
    let mut epoch_order: Vec<usize> = (0..n_train).collect();

    for epoch in 1..=config.max_epochs {
        rng::shuffle(&mut stream, &mut epoch_order);
        let mut loss_sum = 0.0;
        for batch in epoch_order.chunks(config.batch_size) {
            let rows = gather(&train_m, batch, c);
            let (loss, grads) = params.backward(&rows.x, &rows.y, config.alpha)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    detail: format!("training batch loss {loss} at learning rate {lr}"),
                });
            }
            loss_sum += loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut adam, lr, hyper)?;
        }
        let val_pred = params.forward(&val.x)?;
        let val_loss = mse(&val_pred, &val.y);
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                detail: format!("validation loss {val_loss} at learning rate {lr}"),
            });
        }
        report.train_loss.push(loss_sum / n_train as f64);
        report.val_loss.push(val_loss);
        report.epochs_run = epoch;

        let significant = val_loss < best_val - config.tol;
        if val_loss < best_val {
            best_val = val_loss;
            best_params.clone_from(&params);
            report.best_epoch = epoch;
        }
        if significant {
            since_improvement = 0;
            since_lr_change = 0;
        } else {
            since_improvement += 1;
            since_lr_change += 1;
            if since_improvement >= config.patience {
                report.stop_reason = StopReason::EarlyStop;
                break;
            }
            if since_lr_change >= LR_STALL_EPOCHS {
                lr /= config.lr_decay_factor;
                since_lr_change = 0;
                report.lr_decay_epochs.push(epoch);
            }
        }
    }
    report.final_learning_rate = lr;

    let train_target_mean = features.targets().iter().sum::<f64>() / n as f64;
    let model = MlpModel {
        layout: features.layout(),
        params: best_params,
        normalizer,
        config: config.clone(),
        seed: config.seed,
        report: report.clone(),
        debias: false,
        train_target_mean,
    };
    Ok((model, report))
}
