//! Fully connected ReLU network with a linear output, its loss and the exact
//! backward pass.

use crate::error::{Error, Result};
use crate::rng::{self, Generator};

/// One affine layer mapping `cols` inputs to `rows` outputs. `w` is
/// row-major `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            w: vec![0.0; rows * cols],
            b: vec![0.0; rows],
        }
    }

    fn glorot(rows: usize, cols: usize, rng: &mut Generator) -> Self {
        let bound = glorot_bound(cols, rows);
        let w = (0..rows * cols)
            .map(|_| (2.0 * rng::uniform(rng) - 1.0) * bound)
            .collect();
        Self {
            rows,
            cols,
            w,
            b: vec![0.0; rows],
        }
    }

    /// `out[i, j] = b[j] + sum_k w[j, k] * input[i, k]` for each row `i`.
    fn affine(&self, input: &[f64], n: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(n * self.rows);
        for x in input.chunks_exact(self.cols).take(n) {
            for (wr, bj) in self.w.chunks_exact(self.cols).zip(&self.b) {
                let mut s = *bj;
                for (wk, xk) in wr.iter().zip(x) {
                    s += wk * xk;
                }
                out.push(s);
            }
        }
    }
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Network parameters, layer `l` mapping `sizes[l]` to `sizes[l + 1]`.
/// Hidden layers use ReLU; the last layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

impl MlpParams {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|s| Dense::zeros(s[1], s[0])).collect(),
        }
    }

    /// Glorot-uniform weights from `rng::seeded(seed)`, layer by layer in
    /// row-major order; zero biases.
    pub fn glorot(sizes: &[usize], seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        Self {
            layers: sizes
                .windows(2)
                .map(|s| Dense::glorot(s[1], s[0], &mut rng))
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.rows));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.cols)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.rows, l.cols))
                .collect(),
        }
    }

    /// Every parameter, layer by layer, weights before biases.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.rows == b.rows && a.cols == b.cols)
    }

    fn check_batch(&self, x: &[f64]) -> Result<usize> {
        let d = self.input_dim();
        if d == 0 || !x.len().is_multiple_of(d) {
            return Err(Error::ShapeMismatch(format!(
                "input of {} values is not a whole number of {d}-wide rows",
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValues(format!("non-finite input {v}")));
        }
        Ok(x.len() / d)
    }

    /// Activations of every layer for a row-major batch: element 0 is the
    /// input, the last element is the `n x 1` output.
    pub fn forward_cached(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.check_batch(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.affine(&acts[l], n, &mut out);
            if l != last {
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(out);
        }
        Ok(acts)
    }

    /// Row-major batch in, one output per row. Each row is evaluated with
    /// the same operation order as a single-row call.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut acts = self.forward_cached(x)?;
        let out = acts.pop().unwrap_or_default();
        if self.layers.last().map_or(1, |l| l.rows) == 1 {
            Ok(out)
        } else {
            Err(Error::ShapeMismatch("network output is not scalar".into()))
        }
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self.forward(x)?[0])
    }

    fn weight_norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.w.iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    fn check_targets(&self, x: &[f64], y: &[f64]) -> Result<usize> {
        let n = self.check_batch(x)?;
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        if y.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} input rows but {} targets",
                y.len()
            )));
        }
        Ok(n)
    }

    /// `(1/N) sum (yhat - y)^2 + alpha/(2N) sum_l ||W_l||_F^2`. Biases are
    /// not penalised.
    pub fn loss(&self, x: &[f64], y: &[f64], alpha: f64) -> Result<f64> {
        let n = self.check_targets(x, y)?;
        let pred = self.forward(x)?;
        Ok(penalised_loss(&pred, y, self.weight_norm_sq(), alpha, n))
    }

    /// Loss and its exact gradient. The ReLU derivative at 0 is taken as 0.
    pub fn backward(&self, x: &[f64], y: &[f64], alpha: f64) -> Result<(f64, MlpParams)> {
        let n = self.check_targets(x, y)?;
        let acts = self.forward_cached(x)?;
        let pred = &acts[self.layers.len()];
        let loss = penalised_loss(pred, y, self.weight_norm_sq(), alpha, n);

        let nf = n as f64;
        let mut delta: Vec<f64> = pred
            .iter()
            .zip(y)
            .map(|(p, t)| 2.0 * (p - t) / nf)
            .collect();
        let mut grads = self.zeros_like();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &acts[l];
            let g = &mut grads.layers[l];
            for (d_row, x_row) in delta
                .chunks_exact(layer.rows)
                .zip(input.chunks_exact(layer.cols))
            {
                for ((gw_row, gb), d) in g.w.chunks_exact_mut(layer.cols).zip(&mut g.b).zip(d_row) {
                    *gb += d;
                    if *d != 0.0 {
                        for (gw, xk) in gw_row.iter_mut().zip(x_row) {
                            *gw += d * xk;
                        }
                    }
                }
            }
            let decay = alpha / nf;
            for (gw, w) in g.w.iter_mut().zip(&layer.w) {
                *gw += decay * w;
            }
            if l > 0 {
                let mut prev = vec![0.0; n * layer.cols];
                for ((p_row, d_row), h_row) in prev
                    .chunks_exact_mut(layer.cols)
                    .zip(delta.chunks_exact(layer.rows))
                    .zip(input.chunks_exact(layer.cols))
                {
                    for (w_row, d) in layer.w.chunks_exact(layer.cols).zip(d_row) {
                        if *d != 0.0 {
                            for (p, w) in p_row.iter_mut().zip(w_row) {
                                *p += d * w;
                            }
                        }
                    }
                    for (p, h) in p_row.iter_mut().zip(h_row) {
                        if *h <= 0.0 {
                            *p = 0.0;
                        }
                    }
                }
                delta = prev;
            }
        }
        Ok((loss, grads))
    }
}

fn penalised_loss(pred: &[f64], y: &[f64], weight_norm_sq: f64, alpha: f64, n: usize) -> f64 {
    let nf = n as f64;
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    sse / nf + alpha / (2.0 * nf) * weight_norm_sq
}

pub fn mse(pred: &[f64], y: &[f64]) -> f64 {
    penalised_loss(pred, y, 0.0, 0.0, y.len())
}
