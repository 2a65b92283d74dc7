//! Two-dimensional (truth, prediction) histograms and their CSV/PGM dumps.

use std::io::Write;

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 60;
pub const DEFAULT_RANGE: (f64, f64) = (0.0, 2.5);

/// Counts of (truth, prediction) pairs on a uniform grid. `x` is truth,
/// `y` is prediction. `counts` is indexed `[ix * nbins_y + iy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    pub nbins_x: usize,
    pub nbins_y: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub counts: Vec<u64>,
    /// Pairs with either coordinate outside its range, or NaN.
    pub n_out_of_range: u64,
}

/// Bin of `v` in `[lo, hi]` split into `nbins`; the upper edge belongs to
/// the last bin.
pub fn bin_index(v: f64, lo: f64, hi: f64, nbins: usize) -> Option<usize> {
    if !(v >= lo && v <= hi) {
        return None;
    }
    let i = ((v - lo) / (hi - lo) * nbins as f64).floor() as usize;
    Some(i.min(nbins - 1))
}

fn check_range(nbins: usize, (lo, hi): (f64, f64)) -> Result<()> {
    if nbins == 0 {
        return Err(Error::BadRange("need at least one bin".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::BadRange(format!("range {lo}:{hi}")));
    }
    Ok(())
}

impl Histogram2D {
    pub fn new(
        nbins_x: usize,
        nbins_y: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Result<Self> {
        check_range(nbins_x, x_range)?;
        check_range(nbins_y, y_range)?;
        Ok(Self {
            nbins_x,
            nbins_y,
            x_range,
            y_range,
            counts: vec![0; nbins_x * nbins_y],
            n_out_of_range: 0,
        })
    }

    pub fn add(&mut self, truth: f64, pred: f64) {
        let ix = bin_index(truth, self.x_range.0, self.x_range.1, self.nbins_x);
        let iy = bin_index(pred, self.y_range.0, self.y_range.1, self.nbins_y);
        match (ix, iy) {
            (Some(ix), Some(iy)) => self.counts[ix * self.nbins_y + iy] += 1,
            _ => self.n_out_of_range += 1,
        }
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[ix * self.nbins_y + iy]
    }

    pub fn total_in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts per truth bin.
    pub fn marginal_x(&self) -> Vec<u64> {
        self.counts
            .chunks_exact(self.nbins_y)
            .map(|c| c.iter().sum())
            .collect()
    }

    /// Counts per prediction bin.
    pub fn marginal_y(&self) -> Vec<u64> {
        (0..self.nbins_y)
            .map(|iy| (0..self.nbins_x).map(|ix| self.count(ix, iy)).sum())
            .collect()
    }

    /// Comment header, column header, then one row per bin.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# nbins_x={} nbins_y={} x_min={} x_max={} y_min={} y_max={} n_out_of_range={} x=truth y=prediction",
            self.nbins_x,
            self.nbins_y,
            self.x_range.0,
            self.x_range.1,
            self.y_range.0,
            self.y_range.1,
            self.n_out_of_range
        )?;
        writeln!(out, "bin_x_index,bin_y_index,count")?;
        for ix in 0..self.nbins_x {
            for iy in 0..self.nbins_y {
                writeln!(out, "{ix},{iy},{}", self.count(ix, iy))?;
            }
        }
        Ok(())
    }

    /// Binary PGM (P5), one pixel per bin, truth along columns and
    /// prediction increasing upwards. Grey level is
    /// `round(255 * count / max_count)`.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.nbins_x, self.nbins_y)?;
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut pixels = Vec::with_capacity(self.counts.len());
        for iy in (0..self.nbins_y).rev() {
            for ix in 0..self.nbins_x {
                let c = self.count(ix, iy);
                let level = if max == 0 {
                    0
                } else {
                    (255.0 * c as f64 / max as f64).round() as u8
                };
                pixels.push(level);
            }
        }
        out.write_all(&pixels)
    }
}

/// Square histogram with the same bins and range on both axes.
pub fn residual_histogram(
    pred: &[f64],
    truth: &[f64],
    nbins: usize,
    range: (f64, f64),
) -> Result<Histogram2D> {
    if pred.len() != truth.len() {
        return Err(Error::SeriesLength(pred.len(), truth.len()));
    }
    let mut h = Histogram2D::new(nbins, nbins, range, range)?;
    for (p, t) in pred.iter().zip(truth) {
        h.add(*t, *p);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn identical_pairs_on_diagonal() {
        let v: Vec<f64> = (0..500).map(|i| i as f64 * 2.5 / 499.0).collect();
        let h = residual_histogram(&v, &v, 60, (0.0, 2.5)).unwrap();
        assert_eq!(h.total_in_range(), 500);
        assert_eq!(h.n_out_of_range, 0);
        for ix in 0..60 {
            for iy in 0..60 {
                if ix != iy {
                    assert_eq!(h.count(ix, iy), 0);
                }
            }
        }
    }

    #[test]
    fn single_centre_pair() {
        let h = residual_histogram(&[0.5], &[0.5], 3, (0.0, 1.0)).unwrap();
        assert_eq!(h.count(1, 1), 1);
        assert_eq!(h.total_in_range(), 1);
    }

    #[test]
    fn out_of_range_counted() {
        let h = residual_histogram(
            &[0.5, 3.0, f64::NAN, 1.0],
            &[0.5, 0.5, 0.5, -0.1],
            4,
            (0.0, 2.5),
        )
        .unwrap();
        assert_eq!(h.total_in_range(), 1);
        assert_eq!(h.n_out_of_range, 3);
    }

    #[test]
    fn bad_ranges() {
        assert!(matches!(
            residual_histogram(&[], &[], 0, (0.0, 1.0)),
            Err(Error::BadRange(_))
        ));
        assert!(matches!(
            residual_histogram(&[], &[], 3, (1.0, 1.0)),
            Err(Error::BadRange(_))
        ));
        assert!(matches!(
            residual_histogram(&[], &[], 3, (0.0, f64::INFINITY)),
            Err(Error::BadRange(_))
        ));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn matches_brute_force_binning_and_marginals() {
        let mut g = rng::seeded(17);
        let n = 5000;
        let truth: Vec<f64> = (0..n).map(|_| rng::uniform(&mut g) * 3.0 - 0.25).collect();
        let pred: Vec<f64> = (0..n).map(|_| rng::uniform(&mut g) * 3.0 - 0.25).collect();
        let (nb, lo, hi) = (7usize, 0.0, 2.5);
        let h = residual_histogram(&pred, &truth, nb, (lo, hi)).unwrap();

        let width = (hi - lo) / nb as f64;
        let mut brute = vec![vec![0u64; nb]; nb];
        let mut outside = 0;
        let mut hist_x = vec![0u64; nb];
        let mut hist_y = vec![0u64; nb];
        for i in 0..n {
            let mut found = false;
            for ix in 0..nb {
                let (xl, xh) = (lo + ix as f64 * width, lo + (ix + 1) as f64 * width);
                let in_x = truth[i] >= xl && (truth[i] < xh || (ix == nb - 1 && truth[i] <= hi));
                for iy in 0..nb {
                    let (yl, yh) = (lo + iy as f64 * width, lo + (iy + 1) as f64 * width);
                    let in_y = pred[i] >= yl && (pred[i] < yh || (iy == nb - 1 && pred[i] <= hi));
                    if in_x && in_y {
                        brute[ix][iy] += 1;
                        hist_x[ix] += 1;
                        hist_y[iy] += 1;
                        found = true;
                    }
                }
            }
            if !found {
                outside += 1;
            }
        }
        for ix in 0..nb {
            for iy in 0..nb {
                assert_eq!(h.count(ix, iy), brute[ix][iy], "bin {ix},{iy}");
            }
        }
        assert_eq!(h.n_out_of_range, outside);
        assert_eq!(h.total_in_range() + h.n_out_of_range, n as u64);
        assert_eq!(h.marginal_x(), hist_x);
        assert_eq!(h.marginal_y(), hist_y);
    }

    #[test]
    fn csv_and_pgm_layout() {
        let h = residual_histogram(&[0.1, 0.1, 0.9], &[0.1, 0.1, 0.1], 2, (0.0, 1.0)).unwrap();
        let mut csv = Vec::new();
        h.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# nbins_x=2 nbins_y=2"));
        assert_eq!(lines[1], "bin_x_index,bin_y_index,count");
        assert_eq!(&lines[2..], ["0,0,2", "0,1,1", "1,0,0", "1,1,0"]);

        let mut pgm = Vec::new();
        h.write_pgm(&mut pgm).unwrap();
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        // Top row is the highest prediction bin.
        assert_eq!(&pgm[header.len()..], &[128, 0, 255, 0]);
    }
}
