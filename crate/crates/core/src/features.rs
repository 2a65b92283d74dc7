//! Per-pixel feature assembly and channel normalization.
//!
//! The channel order is part of the model file format. Changing it, or the
//! statistics behind any channel, requires a new `format_version`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridstack::{valid_mask, PixelMask, SceneStack, N_ACQUISITIONS};

pub const N_CHANNELS: usize = 21;

pub const CHANNEL_NAMES: [&str; N_CHANNELS] = [
    "phase_mean",
    "amplitude_t0",
    "amplitude_t1",
    "amplitude_t2",
    "amplitude_t3",
    "amplitude_t4",
    "amplitude_t5",
    "amplitude_t6",
    "amplitude_t7",
    "amplitude_t8",
    "amplitude_t9",
    "amplitude_t10",
    "amplitude_t11",
    "amplitude_mean",
    "coherence_mean",
    "coherence_std",
    "incidence",
    "slope",
    "aspect",
    "elevation",
    "veg_height",
];

pub const LOS_CHANNEL_NAME: &str = "los_proxy";

/// Which channels a matrix carries: the standard 21, or the standard 21
/// followed by the cumulative LOS proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLayout {
    Standard,
    WithLos,
}

impl ChannelLayout {
    pub fn n_channels(self) -> usize {
        match self {
            ChannelLayout::Standard => N_CHANNELS,
            ChannelLayout::WithLos => N_CHANNELS + 1,
        }
    }

    pub fn names(self) -> Vec<&'static str> {
        let mut names = CHANNEL_NAMES.to_vec();
        if self == ChannelLayout::WithLos {
            names.push(LOS_CHANNEL_NAME);
        }
        names
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Option<Self> {
        [ChannelLayout::Standard, ChannelLayout::WithLos]
            .into_iter()
            .find(|layout| {
                let expected = layout.names();
                expected.len() == names.len()
                    && expected.iter().zip(names).all(|(a, b)| *a == b.as_ref())
            })
    }
}

/// N rows of features, one per masked pixel, with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    layout: ChannelLayout,
    data: Vec<f64>,
    pixel_indices: Vec<usize>,
    targets: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(
        layout: ChannelLayout,
        data: Vec<f64>,
        pixel_indices: Vec<usize>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        let c = layout.n_channels();
        let n = targets.len();
        if data.len() != n * c || pixel_indices.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} values / {} indices for {n} rows of {c} channels",
                data.len(),
                pixel_indices.len()
            )));
        }
        if data.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidValues(
                "feature matrix holds non-finite values".into(),
            ));
        }
        Ok(Self {
            layout,
            data,
            pixel_indices,
            targets,
        })
    }

    pub fn layout(&self) -> ChannelLayout {
        self.layout
    }

    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    pub fn channels(&self) -> usize {
        self.layout.n_channels()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.channels();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.row(i)[c]).collect()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn pixel_indices(&self) -> &[usize] {
        &self.pixel_indices
    }

    /// Rows in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let c = self.channels();
        let mut data = Vec::with_capacity(rows.len() * c);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            layout: self.layout,
            data,
            pixel_indices: rows.iter().map(|&r| self.pixel_indices[r]).collect(),
            targets: rows.iter().map(|&r| self.targets[r]).collect(),
        }
    }

    pub fn with_targets(mut self, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != self.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} targets for {} rows",
                targets.len(),
                self.rows()
            )));
        }
        self.targets = targets;
        Ok(self)
    }

    /// CSV with one column per channel plus `target`. Values use the
    /// shortest representation that parses back to the same f64.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = self.layout.names().join(",");
        header.push_str(",target\n");
        out.write_all(header.as_bytes())?;
        let mut line = String::new();
        for i in 0..self.rows() {
            line.clear();
            for v in self.row(i) {
                line.push_str(&format!("{v:?},"));
            }
            line.push_str(&format!("{:?}\n", self.targets[i]));
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

fn check_mask(stack: &SceneStack, mask: &PixelMask) -> Result<()> {
    let valid = valid_mask(stack);
    for &i in mask.indices() {
        if valid.indices().binary_search(&i).is_err() {
            return Err(Error::MaskNotValid(i));
        }
    }
    Ok(())
}

fn mean_and_population_std(values: &[f64; N_ACQUISITIONS]) -> (f64, f64) {
    let n = N_ACQUISITIONS as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn pixel_features(stack: &SceneStack, p: usize, out: &mut Vec<f64>) {
    let acqs = stack.acquisitions();
    let mut phase = [0.0; N_ACQUISITIONS];
    let mut amp = [0.0; N_ACQUISITIONS];
    let mut coh = [0.0; N_ACQUISITIONS];
    for (k, a) in acqs.iter().enumerate() {
        phase[k] = a.phase.values()[p] as f64;
        amp[k] = a.amplitude.values()[p] as f64;
        coh[k] = a.coherence.values()[p] as f64;
    }
    let (phase_mean, _) = mean_and_population_std(&phase);
    let (amp_mean, _) = mean_and_population_std(&amp);
    let (coh_mean, coh_std) = mean_and_population_std(&coh);
    out.push(phase_mean);
    out.extend_from_slice(&amp);
    out.push(amp_mean);
    out.push(coh_mean);
    out.push(coh_std);
    for g in stack.ancillary().grids() {
        out.push(g.values()[p] as f64);
    }
}

/// One 21-channel row per masked pixel, in mask order.
pub fn assemble_features(stack: &SceneStack, mask: &PixelMask) -> Result<FeatureMatrix> {
    assemble_with_layout(stack, mask, ChannelLayout::Standard)
}

pub fn assemble_with_layout(
    stack: &SceneStack,
    mask: &PixelMask,
    layout: ChannelLayout,
) -> Result<FeatureMatrix> {
    check_mask(stack, mask)?;
    Ok(assemble_unchecked(stack, mask.indices(), layout))
}

/// Assembles rows for `pixels` in the given order. Every pixel must be valid.
pub(crate) fn assemble_unchecked(
    stack: &SceneStack,
    pixels: &[usize],
    layout: ChannelLayout,
) -> FeatureMatrix {
    let c = layout.n_channels();
    let mut data = Vec::with_capacity(pixels.len() * c);
    let mut targets = Vec::with_capacity(pixels.len());
    for &p in pixels {
        pixel_features(stack, p, &mut data);
        if layout == ChannelLayout::WithLos {
            data.push(los_at(stack, p));
        }
        targets.push(stack.target().values()[p] as f64);
    }
    FeatureMatrix {
        layout,
        data,
        pixel_indices: pixels.to_vec(),
        targets,
    }
}

/// Assembles rows for an arbitrary pixel order (each pixel must be valid).
pub fn assemble_for_pixels(
    stack: &SceneStack,
    pixels: &[usize],
    layout: ChannelLayout,
) -> Result<FeatureMatrix> {
    let valid = valid_mask(stack);
    if let Some(&bad) = pixels
        .iter()
        .find(|p| valid.indices().binary_search(p).is_err())
    {
        return Err(Error::MaskNotValid(bad));
    }
    Ok(assemble_unchecked(stack, pixels, layout))
}

fn los_at(stack: &SceneStack, p: usize) -> f64 {
    stack
        .acquisitions()
        .iter()
        .map(|a| a.phase.values()[p] as f64)
        .sum()
}

/// Sum of the 12 unwrapped phases at each masked pixel.
pub fn cumulative_los_proxy(stack: &SceneStack, mask: &PixelMask) -> Result<Vec<f64>> {
    check_mask(stack, mask)?;
    Ok(mask.indices().iter().map(|&p| los_at(stack, p)).collect())
}

/// Per-channel mean and population standard deviation of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(train: &FeatureMatrix) -> Result<Self> {
        fit_normalizer(train)
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (c, (o, v)) in out.iter_mut().zip(row).enumerate() {
            *o = (v - self.mean[c]) / self.std[c];
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }
}

/// A channel whose spread is below this (relative to max(1, |mean|)) is
/// treated as constant and its std floored to 1.
const DEGENERATE_STD: f64 = 1e-12;

pub fn fit_normalizer(train: &FeatureMatrix) -> Result<Normalizer> {
    let n = train.rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let c = train.channels();
    let mut mean = vec![0.0; c];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(train.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; c];
    for i in 0..n {
        for ((s, v), m) in var.iter_mut().zip(train.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .iter()
        .zip(&mean)
        .map(|(s, m)| {
            let sd = (s / n as f64).sqrt();
            if sd <= DEGENERATE_STD * m.abs().max(1.0) {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(Normalizer { mean, std })
}

pub fn apply_normalizer(norm: &Normalizer, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if norm.channels() != m.channels() {
        return Err(Error::ShapeMismatch(format!(
            "normalizer has {} channels, matrix has {}",
            norm.channels(),
            m.channels()
        )));
    }
    let c = m.channels();
    let mut data = vec![0.0; m.data.len()];
    for (src, dst) in m.data.chunks_exact(c).zip(data.chunks_exact_mut(c)) {
        norm.apply_row(src, dst);
    }
    Ok(FeatureMatrix {
        layout: m.layout,
        data,
        pixel_indices: m.pixel_indices.clone(),
        targets: m.targets.clone(),
    })
}
