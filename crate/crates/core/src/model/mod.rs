//! The snow-depth regressor: a 21-128-64-32-1 ReLU network trained with
//! Adam, plus everything needed to persist and apply it.

mod adam;
mod io;
mod mlp;
mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use io::{load_model, model_to_json, save_model, FORMAT_VERSION};
pub use mlp::{glorot_bound, mse, Dense, MlpParams};
pub use train::{train, StopReason, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::features::{ChannelLayout, FeatureMatrix, Normalizer};

pub const HIDDEN_WIDTHS: [usize; 3] = [128, 64, 32];

pub fn layer_sizes(input_dim: usize) -> [usize; 5] {
    [
        input_dim,
        HIDDEN_WIDTHS[0],
        HIDDEN_WIDTHS[1],
        HIDDEN_WIDTHS[2],
        1,
    ]
}

/// Glorot-initialised parameters for the standard 21-channel input.
pub fn init_params(seed: u64) -> MlpParams {
    MlpParams::glorot(&layer_sizes(ChannelLayout::Standard.n_channels()), seed)
}

/// A trained regressor: parameters, the input normalizer it was trained
/// with, and an echo of how it was trained.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layout: ChannelLayout,
    pub params: MlpParams,
    pub normalizer: Normalizer,
    pub config: TrainConfig,
    pub seed: u64,
    pub report: TrainReport,
    /// Targets were mean-centred before training.
    pub debias: bool,
    /// Mean of the training targets as seen by the user, before any
    /// centring.
    pub train_target_mean: f64,
}

impl MlpModel {
    /// Depth for each row of a raw (unnormalised) row-major batch.
    pub fn predict_rows(&self, rows: &[f64]) -> Result<Vec<f64>> {
        let c = self.layout.n_channels();
        if self.normalizer.channels() != c || self.params.input_dim() != c {
            return Err(Error::ShapeMismatch(format!(
                "model layout has {c} channels but normalizer/params expect {}/{}",
                self.normalizer.channels(),
                self.params.input_dim()
            )));
        }
        if !rows.len().is_multiple_of(c) {
            return Err(Error::ShapeMismatch(format!(
                "{} values is not a whole number of {c}-channel rows",
                rows.len()
            )));
        }
        let mut scaled = vec![0.0; rows.len()];
        for (src, dst) in rows.chunks_exact(c).zip(scaled.chunks_exact_mut(c)) {
            self.normalizer.apply_row(src, dst);
        }
        if scaled.is_empty() {
            return Ok(Vec::new());
        }
        self.params.forward(&scaled)
    }
}

pub fn predict(model: &MlpModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    if features.layout() != model.layout {
        return Err(Error::ShapeMismatch(format!(
            "model expects {:?} channels, features are {:?}",
            model.layout,
            features.layout()
        )));
    }
    model.predict_rows(features.data())
}
