//! Deterministic synthetic scenes with known snow depth.
//!
//! The generator is a test oracle, not a scattering model. It builds a
//! fractal terrain, a snow field driven by elevation, aspect and correlated
//! noise, and InSAR-like observables in which phase is an invertible
//! function of the depth increments between acquisitions.
//!
//! Random substreams (see [`crate::rng::substream`]):
//!
//! | grid family                     | seed           | stream id |
//! |---------------------------------|----------------|-----------|
//! | elevation                       | `terrain_seed` | 10        |
//! | vegetation height               | `terrain_seed` | 11        |
//! | snow noise field                | `seed`         | 20        |
//! | accumulation schedule/increments| `seed`         | 21        |
//! | phase noise                     | `seed`         | 22        |
//! | coherence noise                 | `seed`         | 23        |
//! | amplitude speckle               | `seed`         | 24        |
//! | lidar gaps                      | `seed`         | 25        |

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridstack::{Acquisition, Ancillary, Grid, SceneStack, N_ACQUISITIONS};
use crate::rng::{self, Generator};

const STREAM_ELEVATION: u64 = 10;
const STREAM_VEG: u64 = 11;
const STREAM_SNOW_NOISE: u64 = 20;
const STREAM_INCREMENTS: u64 = 21;
const STREAM_PHASE_NOISE: u64 = 22;
const STREAM_COHERENCE_NOISE: u64 = 23;
const STREAM_SPECKLE: u64 = 24;
const STREAM_GAPS: u64 = 25;

pub const MIN_SIZE: u32 = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerrainParams {
    pub base_elevation_m: f64,
    /// Elevation range after rescaling the fractal surface.
    pub relief_m: f64,
    /// Per-level amplitude decay of the midpoint displacement, in (0, 1).
    pub roughness: f64,
    pub incidence_base_deg: f64,
    /// Degrees of incidence change per degree of slope facing the sensor.
    pub incidence_slope_coeff: f64,
    /// Compass azimuth the sensor looks towards.
    pub look_azimuth_deg: f64,
    pub veg_max_height_m: f64,
    pub veg_correlation_length_px: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        Self {
            base_elevation_m: 2200.0,
            relief_m: 600.0,
            roughness: 0.55,
            incidence_base_deg: 39.0,
            incidence_slope_coeff: 0.1,
            look_azimuth_deg: 90.0,
            veg_max_height_m: 15.0,
            veg_correlation_length_px: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnowParams {
    pub base_depth_m: f64,
    /// Metres of depth per metre of elevation above the scene minimum.
    pub elevation_lapse: f64,
    pub aspect_amplitude_m: f64,
    pub noise_sigma_m: f64,
    pub correlation_length_px: f64,
}

impl Default for SnowParams {
    fn default() -> Self {
        Self {
            base_depth_m: 0.5,
            elevation_lapse: 0.0025,
            aspect_amplitude_m: 0.15,
            noise_sigma_m: 0.1,
            correlation_length_px: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservableParams {
    pub phase_per_meter: f64,
    pub phase_noise_sigma: f64,
    pub coherence_base: f64,
    /// Coherence lost per metre of vegetation.
    pub coherence_veg_coeff: f64,
    /// Coherence lost per metre of snow accumulated between acquisitions.
    pub coherence_snow_coeff: f64,
    pub coherence_noise_sigma: f64,
    /// Gamma speckle looks; 0 disables speckle.
    pub speckle_looks: f64,
    /// Spread (log-normal sigma) of per-pixel accumulation timing.
    pub increment_jitter: f64,
}

impl Default for ObservableParams {
    fn default() -> Self {
        Self {
            phase_per_meter: 4.0,
            phase_noise_sigma: 0.1,
            coherence_base: 0.85,
            coherence_veg_coeff: 0.02,
            coherence_snow_coeff: 0.5,
            coherence_noise_sigma: 0.05,
            speckle_looks: 5.0,
            increment_jitter: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// Season seed: snow noise, accumulation and observation noise.
    pub seed: u64,
    pub terrain_seed: u64,
    pub width: u32,
    pub height: u32,
    pub pixel_spacing_m: f64,
    pub n_acquisitions: usize,
    /// Fraction of pixels without lidar coverage (NaN target).
    pub nodata_fraction: f64,
    pub terrain: TerrainParams,
    pub snow: SnowParams,
    pub observables: ObservableParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            terrain_seed: 7,
            width: 128,
            height: 128,
            pixel_spacing_m: 80.0,
            n_acquisitions: N_ACQUISITIONS,
            nodata_fraction: 0.01,
            terrain: TerrainParams::default(),
            snow: SnowParams::default(),
            observables: ObservableParams::default(),
        }
    }
}

impl SynthConfig {
    /// Square scene with both seeds set to `seed`.
    pub fn new(seed: u64, width: u32, height: u32) -> Self {
        Self {
            seed,
            terrain_seed: seed,
            width,
            height,
            ..Self::default()
        }
    }

    /// Same terrain, another season.
    pub fn with_season(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Different terrain and a doubled snow-depth range.
    pub fn strong_shift(&self, terrain_seed: u64, seed: u64) -> Self {
        let mut cfg = Self {
            seed,
            terrain_seed,
            ..self.clone()
        };
        cfg.snow.base_depth_m *= 2.0;
        cfg.snow.elevation_lapse *= 2.0;
        cfg.snow.aspect_amplitude_m *= 2.0;
        cfg.snow.noise_sigma_m *= 2.0;
        cfg
    }

    pub fn without_noise(&self) -> Self {
        let mut cfg = self.clone();
        cfg.snow.noise_sigma_m = 0.0;
        cfg.observables.phase_noise_sigma = 0.0;
        cfg.observables.coherence_noise_sigma = 0.0;
        cfg.observables.speckle_looks = 0.0;
        cfg.nodata_fraction = 0.0;
        cfg
    }

    /// Standard deviation of the depth error left by the phase-only
    /// estimator `cos(theta) / k * sum_k phase_k` at the base incidence,
    /// where `k` is `phase_per_meter`. Other channels can only lower it.
    pub fn noise_floor_m(&self) -> f64 {
        let o = &self.observables;
        let cos_inc = self.terrain.incidence_base_deg.to_radians().cos();
        (N_ACQUISITIONS as f64).sqrt() * o.phase_noise_sigma * cos_inc / o.phase_per_meter
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_SIZE || self.height < MIN_SIZE {
            return Err(Error::TooSmall {
                width: self.width,
                height: self.height,
            });
        }
        if self.n_acquisitions != N_ACQUISITIONS {
            return Err(Error::BadAcquisitionCount(self.n_acquisitions));
        }
        let t = &self.terrain;
        let s = &self.snow;
        let o = &self.observables;
        let non_negative = [
            ("relief_m", t.relief_m),
            ("incidence_slope_coeff", t.incidence_slope_coeff),
            ("veg_max_height_m", t.veg_max_height_m),
            ("veg_correlation_length_px", t.veg_correlation_length_px),
            ("base_depth_m", s.base_depth_m),
            ("noise_sigma_m", s.noise_sigma_m),
            ("correlation_length_px", s.correlation_length_px),
            ("phase_noise_sigma", o.phase_noise_sigma),
            ("coherence_veg_coeff", o.coherence_veg_coeff),
            ("coherence_snow_coeff", o.coherence_snow_coeff),
            ("coherence_noise_sigma", o.coherence_noise_sigma),
            ("speckle_looks", o.speckle_looks),
            ("increment_jitter", o.increment_jitter),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if !(self.pixel_spacing_m.is_finite() && self.pixel_spacing_m > 0.0) {
            return Err(Error::InvalidConfig(
                "pixel_spacing_m must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&o.coherence_base) {
            return Err(Error::InvalidConfig(
                "coherence_base must lie in [0, 1]".into(),
            ));
        }
        if !(t.roughness > 0.0 && t.roughness < 1.0) {
            return Err(Error::InvalidConfig("roughness must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.nodata_fraction) {
            return Err(Error::InvalidConfig(
                "nodata_fraction must lie in [0, 1)".into(),
            ));
        }
        if !(0.0..90.0).contains(&t.incidence_base_deg) {
            return Err(Error::InvalidConfig(
                "incidence_base_deg must lie in [0, 90)".into(),
            ));
        }
        if !(o.phase_per_meter.is_finite() && s.elevation_lapse.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Ancillary grids of a synthetic scene, in f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub width: usize,
    pub height: usize,
    pub elevation: Vec<f64>,
    pub slope: Vec<f64>,
    pub aspect: Vec<f64>,
    pub incidence: Vec<f64>,
    pub veg_height: Vec<f64>,
}

fn normal(rng: &mut Generator) -> f64 {
    rng.sample(StandardNormal)
}

/// Diamond-square midpoint displacement on a `2^k + 1` lattice, cropped to
/// `width x height` and rescaled to `[base, base + relief]`.
pub fn midpoint_displacement(
    width: usize,
    height: usize,
    relief: f64,
    base: f64,
    roughness: f64,
    rng: &mut Generator,
) -> Vec<f64> {
    let mut size = 2;
    while size + 1 < width.max(height) {
        size *= 2;
    }
    let n = size + 1;
    let mut z = vec![0.0; n * n];
    let mut amp = 1.0;
    for &(r, c) in &[(0, 0), (0, size), (size, 0), (size, size)] {
        z[r * n + c] = (2.0 * rng::uniform(rng) - 1.0) * amp;
    }
    let mut step = size;
    while step > 1 {
        let half = step / 2;
        amp *= roughness;
        // Diamond: centres of squares.
        for r in (half..n).step_by(step) {
            for c in (half..n).step_by(step) {
                let avg = (z[(r - half) * n + c - half]
                    + z[(r - half) * n + c + half]
                    + z[(r + half) * n + c - half]
                    + z[(r + half) * n + c + half])
                    / 4.0;
                z[r * n + c] = avg + (2.0 * rng::uniform(rng) - 1.0) * amp;
            }
        }
        // Square: edge midpoints, averaging the neighbours that exist.
        for r in (0..n).step_by(half) {
            let start = if (r / half) % 2 == 0 { half } else { 0 };
            for c in (start..n).step_by(step) {
                let mut sum = 0.0;
                let mut count = 0.0;
                if r >= half {
                    sum += z[(r - half) * n + c];
                    count += 1.0;
                }
                if r + half < n {
                    sum += z[(r + half) * n + c];
                    count += 1.0;
                }
                if c >= half {
                    sum += z[r * n + c - half];
                    count += 1.0;
                }
                if c + half < n {
                    sum += z[r * n + c + half];
                    count += 1.0;
                }
                z[r * n + c] = sum / count + (2.0 * rng::uniform(rng) - 1.0) * amp;
            }
        }
        step = half;
    }
    let cropped: Vec<f64> = (0..height)
        .flat_map(|r| z[r * n..r * n + width].to_vec())
        .collect();
    let lo = cropped.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cropped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    cropped
        .iter()
        .map(|v| base + relief * (v - lo) / span)
        .collect()
}

/// Slope and aspect (degrees) by Horn's 3x3 method. With neighbours
///
/// ```text
/// a b c
/// d e f
/// g h i
/// ```
///
/// `dz/dx = ((c + 2f + i) - (a + 2d + g)) / (8 dx)` (x east) and
/// `dz/dy = ((g + 2h + i) - (a + 2b + c)) / (8 dx)` (y along rows, i.e.
/// south). Slope is `atan(hypot(dz/dx, dz/dy))`. Aspect is the compass
/// azimuth of the downslope direction, `atan2(-dz/dx, dz/dy)` mapped to
/// [0, 360), and 0 on flat ground. Edge pixels reuse the nearest row or
/// column.
pub fn horn_slope_aspect(
    elevation: &[f64],
    width: usize,
    height: usize,
    spacing: f64,
) -> (Vec<f64>, Vec<f64>) {
    let at = |r: isize, c: isize| {
        let r = r.clamp(0, height as isize - 1) as usize;
        let c = c.clamp(0, width as isize - 1) as usize;
        elevation[r * width + c]
    };
    let mut slope = Vec::with_capacity(width * height);
    let mut aspect = Vec::with_capacity(width * height);
    for r in 0..height as isize {
        for c in 0..width as isize {
            let (a, b, cc) = (at(r - 1, c - 1), at(r - 1, c), at(r - 1, c + 1));
            let (d, f) = (at(r, c - 1), at(r, c + 1));
            let (g, h, i) = (at(r + 1, c - 1), at(r + 1, c), at(r + 1, c + 1));
            let dzdx = ((cc + 2.0 * f + i) - (a + 2.0 * d + g)) / (8.0 * spacing);
            let dzdy = ((g + 2.0 * h + i) - (a + 2.0 * b + cc)) / (8.0 * spacing);
            slope.push(dzdx.hypot(dzdy).atan().to_degrees());
            if dzdx == 0.0 && dzdy == 0.0 {
                aspect.push(0.0);
            } else {
                let az = (-dzdx).atan2(dzdy).to_degrees();
                let az = if az < 0.0 { az + 360.0 } else { az };
                aspect.push(if az >= 360.0 { 0.0 } else { az });
            }
        }
    }
    (slope, aspect)
}

/// Separable Gaussian blur (sigma in pixels, edge-clamped). Sigma 0 returns
/// the input.
pub fn gaussian_smooth(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / norm).collect();
    let mut tmp = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut s = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                let cc = (c as isize + j as isize - radius).clamp(0, width as isize - 1) as usize;
                s += k * values[r * width + cc];
            }
            tmp[r * width + c] = s;
        }
    }
    let mut out = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut s = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                let rr = (r as isize + j as isize - radius).clamp(0, height as isize - 1) as usize;
                s += k * tmp[rr * width + c];
            }
            out[r * width + c] = s;
        }
    }
    out
}

/// Smoothed white noise rescaled to zero mean and unit population variance.
fn correlated_field(n_w: usize, n_h: usize, length: f64, rng: &mut Generator) -> Vec<f64> {
    let white: Vec<f64> = (0..n_w * n_h).map(|_| normal(rng)).collect();
    let field = gaussian_smooth(&white, n_w, n_h, length);
    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let sd = (field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    field.iter().map(|v| (v - mean) / sd).collect()
}

pub fn generate_terrain(cfg: &SynthConfig) -> Result<Terrain> {
    cfg.validate()?;
    let (w, h) = (cfg.width as usize, cfg.height as usize);
    let t = &cfg.terrain;
    let mut rng = rng::substream(cfg.terrain_seed, STREAM_ELEVATION);
    let elevation =
        midpoint_displacement(w, h, t.relief_m, t.base_elevation_m, t.roughness, &mut rng);
    terrain_from_elevation(cfg, elevation)
}

/// Derives slope, aspect, incidence and vegetation for a given elevation
/// surface (row-major, `width x height`).
pub fn terrain_from_elevation(cfg: &SynthConfig, elevation: Vec<f64>) -> Result<Terrain> {
    cfg.validate()?;
    let (w, h) = (cfg.width as usize, cfg.height as usize);
    if elevation.len() != w * h {
        return Err(Error::DimensionMismatch(format!(
            "elevation has {} values, scene is {w}x{h}",
            elevation.len()
        )));
    }
    let t = &cfg.terrain;
    let (slope, aspect) = horn_slope_aspect(&elevation, w, h, cfg.pixel_spacing_m);
    let incidence = slope
        .iter()
        .zip(&aspect)
        .map(|(s, a)| {
            let facing = (a - t.look_azimuth_deg).to_radians().cos();
            t.incidence_base_deg + t.incidence_slope_coeff * s * facing
        })
        .collect();
    let mut rng = rng::substream(cfg.terrain_seed, STREAM_VEG);
    let cover = correlated_field(w, h, t.veg_correlation_length_px, &mut rng);
    let veg_height = cover
        .iter()
        .map(|z| t.veg_max_height_m * ((z - 0.5) / 1.5).clamp(0.0, 1.0))
        .collect();
    Ok(Terrain {
        width: w,
        height: h,
        elevation,
        slope,
        aspect,
        incidence,
        veg_height,
    })
}

/// `max(0, base + lapse * (elev - min elev) + amplitude * cos(aspect) + noise)`.
pub fn generate_snow(cfg: &SynthConfig, terrain: &Terrain) -> Result<Vec<f64>> {
    cfg.validate()?;
    let s = &cfg.snow;
    let n = terrain.elevation.len();
    let noise = if s.noise_sigma_m > 0.0 {
        let mut rng = rng::substream(cfg.seed, STREAM_SNOW_NOISE);
        correlated_field(
            terrain.width,
            terrain.height,
            s.correlation_length_px,
            &mut rng,
        )
        .into_iter()
        .map(|z| z * s.noise_sigma_m)
        .collect()
    } else {
        vec![0.0; n]
    };
    let min_elev = terrain
        .elevation
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok((0..n)
        .map(|p| {
            let d = s.base_depth_m
                + s.elevation_lapse * (terrain.elevation[p] - min_elev)
                + s.aspect_amplitude_m * terrain.aspect[p].to_radians().cos()
                + noise[p];
            d.max(0.0)
        })
        .collect())
}

fn to_grid(w: usize, h: usize, values: impl IntoIterator<Item = f64>) -> Grid {
    Grid::new(
        w as u32,
        h as u32,
        values.into_iter().map(|v| v as f32).collect(),
    )
    .expect("synthetic grid has scene shape")
}

/// Splits each pixel's depth into 12 accumulation increments and renders
/// phase, coherence and amplitude for every acquisition.
///
/// Increment `k` at a pixel is proportional to a scene-wide schedule weight
/// times a log-normal per-pixel jitter, normalised so the increments sum to
/// the depth. Then
///
/// * `phase_k = phase_per_meter * dd_k / cos(incidence) + N(0, phase_noise_sigma)`
/// * `coherence_k = clamp(base - veg_coeff * veg - snow_coeff * |dd_k| + N(0, coherence_noise_sigma), 0, 1)`
/// * `amplitude_k = (0.25 cos^2(incidence) + 0.01 veg) * Gamma(looks, 1 / looks)`
#[allow(clippy::needless_range_loop)]
pub fn simulate_observables(
    cfg: &SynthConfig,
    terrain: &Terrain,
    snow: &[f64],
) -> Result<SceneStack> {
    cfg.validate()?;
    let (w, h) = (terrain.width, terrain.height);
    let n = w * h;
    if snow.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "snow grid has {} values, scene has {n}",
            snow.len()
        )));
    }
    let o = &cfg.observables;

    let mut inc_rng = rng::substream(cfg.seed, STREAM_INCREMENTS);
    let schedule: Vec<f64> = (0..N_ACQUISITIONS)
        .map(|_| 0.5 + rng::uniform(&mut inc_rng))
        .collect();
    let mut increments = vec![[0.0; N_ACQUISITIONS]; n];
    for (p, inc) in increments.iter_mut().enumerate() {
        let mut weights = [0.0; N_ACQUISITIONS];
        for (wk, sk) in weights.iter_mut().zip(&schedule) {
            let jitter = if o.increment_jitter > 0.0 {
                (o.increment_jitter * normal(&mut inc_rng)).exp()
            } else {
                1.0
            };
            *wk = sk * jitter;
        }
        let total: f64 = weights.iter().sum();
        for (d, wk) in inc.iter_mut().zip(&weights) {
            *d = snow[p] * wk / total;
        }
    }

    let cos_inc: Vec<f64> = terrain
        .incidence
        .iter()
        .map(|i| i.to_radians().cos())
        .collect();
    let mut phase_rng = rng::substream(cfg.seed, STREAM_PHASE_NOISE);
    let mut coh_rng = rng::substream(cfg.seed, STREAM_COHERENCE_NOISE);
    let mut speckle_rng = rng::substream(cfg.seed, STREAM_SPECKLE);
    let speckle = if o.speckle_looks > 0.0 {
        Some(
            Gamma::new(o.speckle_looks, 1.0 / o.speckle_looks)
                .map_err(|e| Error::InvalidConfig(format!("speckle_looks: {e}")))?,
        )
    } else {
        None
    };

    let mut acquisitions = Vec::with_capacity(N_ACQUISITIONS);
    for k in 0..N_ACQUISITIONS {
        let phase = (0..n).map(|p| {
            let noise = if o.phase_noise_sigma > 0.0 {
                o.phase_noise_sigma * normal(&mut phase_rng)
            } else {
                0.0
            };
            o.phase_per_meter * increments[p][k] / cos_inc[p] + noise
        });
        let phase = to_grid(w, h, phase.collect::<Vec<_>>());
        let coherence = (0..n).map(|p| {
            let noise = if o.coherence_noise_sigma > 0.0 {
                o.coherence_noise_sigma * normal(&mut coh_rng)
            } else {
                0.0
            };
            (o.coherence_base
                - o.coherence_veg_coeff * terrain.veg_height[p]
                - o.coherence_snow_coeff * increments[p][k].abs()
                + noise)
                .clamp(0.0, 1.0)
        });
        let coherence = to_grid(w, h, coherence.collect::<Vec<_>>());
        let amplitude = (0..n).map(|p| {
            let mean = 0.25 * cos_inc[p] * cos_inc[p] + 0.01 * terrain.veg_height[p];
            match &speckle {
                Some(g) => mean * g.sample(&mut speckle_rng),
                None => mean,
            }
        });
        let amplitude = to_grid(w, h, amplitude.collect::<Vec<_>>());
        acquisitions.push(Acquisition {
            index: k,
            date_label: format!("season{}-acq{:02}", cfg.seed, k),
            phase,
            coherence,
            amplitude,
        });
    }

    let mut gap_rng = rng::substream(cfg.seed, STREAM_GAPS);
    let target = snow.iter().map(|d| {
        if cfg.nodata_fraction > 0.0 && rng::uniform(&mut gap_rng) < cfg.nodata_fraction {
            f64::NAN
        } else {
            *d
        }
    });
    let target = to_grid(w, h, target.collect::<Vec<_>>());

    let ancillary = Ancillary {
        incidence: to_grid(w, h, terrain.incidence.iter().copied()),
        slope: to_grid(w, h, terrain.slope.iter().copied()),
        aspect: to_grid(w, h, terrain.aspect.iter().copied()),
        elevation: to_grid(w, h, terrain.elevation.iter().copied()),
        veg_height: to_grid(w, h, terrain.veg_height.iter().copied()),
    };
    SceneStack::new(acquisitions, ancillary, target, cfg.pixel_spacing_m)
}

/// Terrain, snow and observables in one call.
pub fn generate_scene(cfg: &SynthConfig) -> Result<SceneStack> {
    let terrain = generate_terrain(cfg)?;
    let snow = generate_snow(cfg, &terrain)?;
    simulate_observables(cfg, &terrain, &snow)
}
