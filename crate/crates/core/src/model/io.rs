//! `model.json` reading and writing.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! identical f64, so a save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ChannelLayout, Normalizer};
use crate::model::mlp::{Dense, MlpParams};
use crate::model::train::{TrainConfig, TrainReport};
use crate::model::{layer_sizes, MlpModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    rows: usize,
    cols: usize,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    channel_layout: Vec<String>,
    normalizer: Normalizer,
    layers: Vec<LayerFile>,
    config: TrainConfig,
    seed: u64,
    debias: bool,
    train_target_mean: f64,
    train_report: TrainReport,
}

pub fn model_to_json(model: &MlpModel) -> Result<String> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        channel_layout: model.layout.names().iter().map(|s| s.to_string()).collect(),
        normalizer: model.normalizer.clone(),
        layers: model
            .params
            .layers
            .iter()
            .map(|l| LayerFile {
                rows: l.rows,
                cols: l.cols,
                w: l.w.chunks(l.cols.max(1)).map(<[f64]>::to_vec).collect(),
                b: l.b.clone(),
            })
            .collect(),
        config: model.config.clone(),
        seed: model.seed,
        debias: model.debias,
        train_target_mean: model.train_target_mean,
        train_report: model.report.clone(),
    };
    let mut text =
        serde_json::to_string_pretty(&file).map_err(|e| Error::SchemaError(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    let text = model_to_json(model)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

pub(crate) fn model_from_json(text: &str) -> Result<MlpModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::SchemaError(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let layout = ChannelLayout::from_names(&file.channel_layout).ok_or_else(|| {
        Error::SchemaError(format!("unknown channel layout {:?}", file.channel_layout))
    })?;
    let c = layout.n_channels();
    if file.normalizer.mean.len() != c || file.normalizer.std.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "normalizer must have {c} entries"
        )));
    }
    if file.normalizer.std.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return Err(Error::SchemaError("normalizer std must be positive".into()));
    }
    let sizes = layer_sizes(c);
    if file.layers.len() != sizes.len() - 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected {} layers, found {}",
            sizes.len() - 1,
            file.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (l, lf) in file.layers.into_iter().enumerate() {
        let (rows, cols) = (sizes[l + 1], sizes[l]);
        let shape_ok = lf.rows == rows
            && lf.cols == cols
            && lf.w.len() == rows
            && lf.w.iter().all(|r| r.len() == cols)
            && lf.b.len() == rows;
        if !shape_ok {
            return Err(Error::ShapeMismatch(format!(
                "layer {} must be {rows}x{cols} with {rows} biases",
                l + 1
            )));
        }
        layers.push(Dense {
            rows,
            cols,
            w: lf.w.into_iter().flatten().collect(),
            b: lf.b,
        });
    }
    let params = MlpParams { layers };
    if !params.is_finite() {
        return Err(Error::SchemaError("non-finite parameter".into()));
    }
    file.config.validate()?;
    Ok(MlpModel {
        layout,
        params,
        normalizer: file.normalizer,
        config: file.config,
        seed: file.seed,
        report: file.train_report,
        debias: file.debias,
        train_target_mean: file.train_target_mean,
    })
}
