//! Co-registered raster stacks: grids, acquisitions, the JSON manifest and
//! the raw `.f32` grid format.
//!
//! A grid file is raw little-endian float32, row-major, top-left origin.
//! Dimensions are carried by the manifest only. Nodata is NaN.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_ACQUISITIONS: usize = 12;

/// Number of grids checked by [`valid_mask`]: 12 x 3 observables, 5
/// ancillary grids and the target.
pub const N_GRIDS: usize = N_ACQUISITIONS * 3 + 5 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl Grid {
    pub fn new(width: u32, height: u32, values: Vec<f32>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "grid {width}x{height} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self {
            width,
            height,
            values: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for row in 0..height as usize {
            for col in 0..width as usize {
                values.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width as usize + col]
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub index: usize,
    pub date_label: String,
    /// Unwrapped interferometric phase, radians.
    pub phase: Grid,
    pub coherence: Grid,
    pub amplitude: Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ancillary {
    /// Degrees.
    pub incidence: Grid,
    /// Degrees.
    pub slope: Grid,
    /// Degrees clockwise from north, in [0, 360).
    pub aspect: Grid,
    /// Metres.
    pub elevation: Grid,
    /// Metres.
    pub veg_height: Grid,
}

impl Ancillary {
    pub fn grids(&self) -> [&Grid; 5] {
        [
            &self.incidence,
            &self.slope,
            &self.aspect,
            &self.elevation,
            &self.veg_height,
        ]
    }
}

/// Twelve co-registered acquisitions plus terrain descriptors and the lidar
/// snow-depth target. Construct through [`SceneStack::new`], which checks
/// every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneStack {
    acquisitions: Vec<Acquisition>,
    ancillary: Ancillary,
    target: Grid,
    pixel_spacing_m: f64,
}

impl SceneStack {
    pub fn new(
        acquisitions: Vec<Acquisition>,
        ancillary: Ancillary,
        target: Grid,
        pixel_spacing_m: f64,
    ) -> Result<Self> {
        if acquisitions.len() != N_ACQUISITIONS {
            return Err(Error::BadAcquisitionCount(acquisitions.len()));
        }
        if !(pixel_spacing_m.is_finite() && pixel_spacing_m > 0.0) {
            return Err(Error::SchemaError(format!(
                "pixel_spacing_m must be positive, got {pixel_spacing_m}"
            )));
        }
        let check = |name: &str, g: &Grid| -> Result<()> {
            if g.same_shape(&target) {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, target is {}x{}",
                    g.width, g.height, target.width, target.height
                )))
            }
        };
        for (k, acq) in acquisitions.iter().enumerate() {
            check(&format!("acquisition {k} phase"), &acq.phase)?;
            check(&format!("acquisition {k} coherence"), &acq.coherence)?;
            check(&format!("acquisition {k} amplitude"), &acq.amplitude)?;
            if let Some(bad) = acq
                .coherence
                .values
                .iter()
                .find(|v| !v.is_nan() && !(0.0..=1.0).contains(*v))
            {
                return Err(Error::InvalidValues(format!(
                    "acquisition {k} coherence value {bad} outside [0, 1]"
                )));
            }
        }
        for (name, g) in ["incidence", "slope", "aspect", "elevation", "veg_height"]
            .iter()
            .zip(ancillary.grids())
        {
            check(name, g)?;
        }
        if let Some(bad) = target.values.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidValues(format!("negative target depth {bad}")));
        }
        Ok(Self {
            acquisitions,
            ancillary,
            target,
            pixel_spacing_m,
        })
    }

    pub fn width(&self) -> u32 {
        self.target.width
    }

    pub fn height(&self) -> u32 {
        self.target.height
    }

    pub fn n_pixels(&self) -> usize {
        self.target.len()
    }

    pub fn acquisitions(&self) -> &[Acquisition] {
        &self.acquisitions
    }

    pub fn ancillary(&self) -> &Ancillary {
        &self.ancillary
    }

    pub fn target(&self) -> &Grid {
        &self.target
    }

    pub fn pixel_spacing_m(&self) -> f64 {
        self.pixel_spacing_m
    }

    /// All 41 grids, acquisitions first.
    pub fn all_grids(&self) -> impl Iterator<Item = &Grid> {
        self.acquisitions
            .iter()
            .flat_map(|a| [&a.phase, &a.coherence, &a.amplitude])
            .chain(self.ancillary.grids())
            .chain(std::iter::once(&self.target))
    }

    /// Returns a copy with `offset` added to every non-NaN target value.
    pub fn with_target_offset(&self, offset: f32) -> Result<Self> {
        let mut target = self.target.clone();
        for v in target.values_mut() {
            *v += offset;
        }
        Self::new(
            self.acquisitions.clone(),
            self.ancillary.clone(),
            target,
            self.pixel_spacing_m,
        )
    }

    pub fn with_target(&self, target: Grid) -> Result<Self> {
        Self::new(
            self.acquisitions.clone(),
            self.ancillary.clone(),
            target,
            self.pixel_spacing_m,
        )
    }

    pub fn into_parts(self) -> (Vec<Acquisition>, Ancillary, Grid, f64) {
        (
            self.acquisitions,
            self.ancillary,
            self.target,
            self.pixel_spacing_m,
        )
    }
}

/// Sorted flat row-major indices of valid pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    indices: Vec<usize>,
}

impl PixelMask {
    /// Fails unless `indices` is strictly increasing and below `n_pixels`.
    pub fn new(indices: Vec<usize>, n_pixels: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidValues(
                "mask indices must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= n_pixels {
                return Err(Error::InvalidValues(format!(
                    "mask index {last} out of range for {n_pixels} pixels"
                )));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Keeps the indices for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        Self {
            indices: self.indices.iter().copied().filter(|&i| keep(i)).collect(),
        }
    }

    /// Builds a mask from an arbitrary index set (sorted and deduplicated).
    pub fn from_unsorted(mut indices: Vec<usize>, n_pixels: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, n_pixels)
    }
}

/// A pixel is valid when all 41 grids are non-NaN there.
pub fn valid_mask(stack: &SceneStack) -> PixelMask {
    let mut valid = vec![true; stack.n_pixels()];
    for grid in stack.all_grids() {
        for (flag, v) in valid.iter_mut().zip(&grid.values) {
            if v.is_nan() {
                *flag = false;
            }
        }
    }
    PixelMask {
        indices: valid
            .iter()
            .enumerate()
            .filter_map(|(i, &ok)| ok.then_some(i))
            .collect(),
    }
}

pub fn save_grid(grid: &Grid, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(grid.values.len() * 4);
    for v in &grid.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_grid(path: &Path, width: u32, height: u32) -> Result<Grid> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = 4 * width as u64 * height as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::LengthMismatch {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Grid::new(width, height, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionEntry {
    pub date: String,
    pub phase: PathBuf,
    pub coherence: PathBuf,
    pub amplitude: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AncillaryEntry {
    pub incidence: PathBuf,
    pub slope: PathBuf,
    pub aspect: PathBuf,
    pub elevation: PathBuf,
    pub veg_height: PathBuf,
}

/// `stack.json`. Grid paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub width: u32,
    pub height: u32,
    pub pixel_spacing_m: f64,
    pub acquisitions: Vec<AcquisitionEntry>,
    pub ancillary: AncillaryEntry,
    pub target: PathBuf,
}

pub fn load_stack(manifest_path: &Path) -> Result<SceneStack> {
    if !manifest_path.exists() {
        return Err(Error::MissingFile(manifest_path.to_path_buf()));
    }
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::SchemaError(e.to_string()))?;
    if manifest.acquisitions.len() != N_ACQUISITIONS {
        return Err(Error::BadAcquisitionCount(manifest.acquisitions.len()));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let (w, h) = (manifest.width, manifest.height);
    let read = |rel: &Path| -> Result<Grid> {
        let path = base.join(rel);
        load_grid(&path, w, h).map_err(|e| match e {
            Error::LengthMismatch {
                path,
                expected,
                actual,
            } => Error::DimensionMismatch(format!(
                "{} holds {actual} bytes but the manifest's {w}x{h} needs {expected}",
                path.display()
            )),
            other => other,
        })
    };
    let mut acquisitions = Vec::with_capacity(N_ACQUISITIONS);
    for (index, entry) in manifest.acquisitions.iter().enumerate() {
        acquisitions.push(Acquisition {
            index,
            date_label: entry.date.clone(),
            phase: read(&entry.phase)?,
            coherence: read(&entry.coherence)?,
            amplitude: read(&entry.amplitude)?,
        });
    }
    let anc = &manifest.ancillary;
    let ancillary = Ancillary {
        incidence: read(&anc.incidence)?,
        slope: read(&anc.slope)?,
        aspect: read(&anc.aspect)?,
        elevation: read(&anc.elevation)?,
        veg_height: read(&anc.veg_height)?,
    };
    let target = read(&manifest.target)?;
    SceneStack::new(acquisitions, ancillary, target, manifest.pixel_spacing_m)
}

/// Writes `stack.json` plus one `.f32` file per grid into `dir` and returns
/// the manifest path.
pub fn save_stack(stack: &SceneStack, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, grid: &Grid| -> Result<PathBuf> {
        let rel = PathBuf::from(name);
        save_grid(grid, &dir.join(&rel))?;
        Ok(rel)
    };
    let mut acquisitions = Vec::with_capacity(N_ACQUISITIONS);
    for acq in &stack.acquisitions {
        let k = acq.index;
        acquisitions.push(AcquisitionEntry {
            date: acq.date_label.clone(),
            phase: write(format!("phase_{k:02}.f32"), &acq.phase)?,
            coherence: write(format!("coherence_{k:02}.f32"), &acq.coherence)?,
            amplitude: write(format!("amplitude_{k:02}.f32"), &acq.amplitude)?,
        });
    }
    let anc = &stack.ancillary;
    let manifest = Manifest {
        width: stack.width(),
        height: stack.height(),
        pixel_spacing_m: stack.pixel_spacing_m,
        acquisitions,
        ancillary: AncillaryEntry {
            incidence: write("incidence.f32".into(), &anc.incidence)?,
            slope: write("slope.f32".into(), &anc.slope)?,
            aspect: write("aspect.f32".into(), &anc.aspect)?,
            elevation: write("elevation.f32".into(), &anc.elevation)?,
            veg_height: write("veg_height.f32".into(), &anc.veg_height)?,
        },
        target: write("target.f32".into(), &stack.target)?,
    };
    let path = dir.join("stack.json");
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::SchemaError(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
