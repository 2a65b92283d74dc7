//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code, clippy::needless_range_loop)]

use snowpipe::gridstack::SceneStack;
use snowpipe::model::MlpParams;
use snowpipe::rng;

pub const FD_STEP: f64 = 1e-6;

/// Straight-loop loss: MSE plus alpha/(2N) times the squared weights.
pub fn oracle_loss(p: &MlpParams, x: &[f64], y: &[f64], alpha: f64) -> f64 {
    let d = p.layers[0].cols;
    let n = y.len();
    let mut sse = 0.0;
    for i in 0..n {
        let mut h: Vec<f64> = x[i * d..(i + 1) * d].to_vec();
        for (l, layer) in p.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.rows];
            for j in 0..layer.rows {
                let mut s = layer.b[j];
                for k in 0..layer.cols {
                    s += layer.w[j * layer.cols + k] * h[k];
                }
                next[j] = if l + 1 < p.layers.len() && s < 0.0 {
                    0.0
                } else {
                    s
                };
            }
            h = next;
        }
        sse += (h[0] - y[i]).powi(2);
    }
    let mut wsq = 0.0;
    for layer in &p.layers {
        for w in &layer.w {
            wsq += w * w;
        }
    }
    sse / n as f64 + alpha * wsq / (2.0 * n as f64)
}

/// Central differences of [`oracle_loss`] for every parameter, in
/// `MlpParams::iter` order.
pub fn finite_difference_gradient(p: &MlpParams, x: &[f64], y: &[f64], alpha: f64) -> Vec<f64> {
    let mut probe = p.clone();
    let n = p.n_params();
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let orig = *probe.iter().nth(i).unwrap();
        *probe.iter_mut().nth(i).unwrap() = orig + FD_STEP;
        let plus = oracle_loss(&probe, x, y, alpha);
        *probe.iter_mut().nth(i).unwrap() = orig - FD_STEP;
        let minus = oracle_loss(&probe, x, y, alpha);
        *probe.iter_mut().nth(i).unwrap() = orig;
        grad.push((plus - minus) / (2.0 * FD_STEP));
    }
    grad
}

pub fn random_net(sizes: &[usize], seed: u64) -> MlpParams {
    let mut p = MlpParams::glorot(sizes, seed);
    let mut g = rng::seeded(seed ^ 0xABCD);
    for b in p.layers.iter_mut().flat_map(|l| l.b.iter_mut()) {
        *b = rng::uniform(&mut g) * 0.4 - 0.2;
    }
    p
}

pub fn random_batch(n: usize, d: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut g = rng::seeded(seed);
    let x = (0..n * d)
        .map(|_| rng::uniform(&mut g) * 4.0 - 2.0)
        .collect();
    let y = (0..n).map(|_| rng::uniform(&mut g) * 2.0 - 1.0).collect();
    (x, y)
}

/// Textbook computational Pearson formula.
pub fn textbook_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        sa += a[i];
        sb += b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
        sab += a[i] * b[i];
    }
    (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt())
}

pub fn textbook_rmse(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    (s / a.len() as f64).sqrt()
}

pub fn textbook_r2(pred: &[f64], truth: &[f64]) -> f64 {
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let mut res = 0.0;
    let mut tot = 0.0;
    for i in 0..truth.len() {
        res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
        tot += (truth[i] - mean) * (truth[i] - mean);
    }
    1.0 - res / tot
}

/// The 21 channels of one pixel, recomputed with explicit loops.
pub fn oracle_pixel_features(stack: &SceneStack, p: usize) -> Vec<f64> {
    let acq = stack.acquisitions();
    let mut row = Vec::with_capacity(21);
    let mut phase_sum = 0.0;
    for k in 0..12 {
        phase_sum += acq[k].phase.values()[p] as f64;
    }
    row.push(phase_sum / 12.0);
    let mut amp_sum = 0.0;
    for k in 0..12 {
        let a = acq[k].amplitude.values()[p] as f64;
        row.push(a);
        amp_sum += a;
    }
    row.push(amp_sum / 12.0);
    let mut coh_sum = 0.0;
    for k in 0..12 {
        coh_sum += acq[k].coherence.values()[p] as f64;
    }
    let coh_mean = coh_sum / 12.0;
    let mut coh_var = 0.0;
    for k in 0..12 {
        let d = acq[k].coherence.values()[p] as f64 - coh_mean;
        coh_var += d * d;
    }
    row.push(coh_mean);
    row.push((coh_var / 12.0).sqrt());
    let anc = stack.ancillary();
    row.push(anc.incidence.values()[p] as f64);
    row.push(anc.slope.values()[p] as f64);
    row.push(anc.aspect.values()[p] as f64);
    row.push(anc.elevation.values()[p] as f64);
    row.push(anc.veg_height.values()[p] as f64);
    row
}

use snowpipe::gridstack::{Acquisition, Ancillary, Grid};

/// A small stack with simple closed-form values at every grid, including
/// one nodata target and one negative phase.
pub fn handcrafted_stack(w: u32, h: u32) -> SceneStack {
    let f = |id: usize| {
        move |r: usize, c: usize| -> f32 { (id as f32) * 0.25 + r as f32 * 1.5 - c as f32 * 0.125 }
    };
    let acquisitions = (0..12)
        .map(|k| Acquisition {
            index: k,
            date_label: format!("2021-01-{:02}", 1 + 6 * k),
            phase: Grid::from_fn(w, h, f(k)),
            coherence: Grid::from_fn(w, h, |r, c| ((k + r + 2 * c) % 9) as f32 / 8.0),
            amplitude: Grid::from_fn(w, h, |r, c| 0.05 * (1 + k + r * c) as f32),
        })
        .collect();
    let ancillary = Ancillary {
        incidence: Grid::from_fn(w, h, |r, c| 35.0 + r as f32 + 0.5 * c as f32),
        slope: Grid::from_fn(w, h, |r, c| (r * 3 + c) as f32),
        aspect: Grid::from_fn(w, h, |r, c| (r * 90 + c * 45) as f32 % 360.0),
        elevation: Grid::from_fn(w, h, |r, c| 2400.0 + 10.0 * r as f32 - 3.0 * c as f32),
        veg_height: Grid::from_fn(w, h, |r, c| ((r + c) % 4) as f32 * 2.5),
    };
    let target = Grid::from_fn(w, h, |r, c| {
        if r == 1 && c == 2 {
            f32::NAN
        } else {
            0.1 * (r + c) as f32 + 0.3
        }
    });
    SceneStack::new(acquisitions, ancillary, target, 30.0).unwrap()
}

pub fn golden_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(name)
}
