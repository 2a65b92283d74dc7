use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(a: &[f64], b: &[f64], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SeriesLength(a.len(), b.len()));
    }
    if a.len() < min {
        return Err(Error::TooFewRows {
            needed: min,
            got: a.len(),
        });
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b, 2)?;
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 {
        return Err(Error::ZeroVariance("first series"));
    }
    if sbb == 0.0 {
        return Err(Error::ZeroVariance("second series"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b, 1)?;
    let sse: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sse / a.len() as f64).sqrt())
}

/// Coefficient of determination of `pred` against `truth`.
pub fn r2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth, 2)?;
    let mt = mean(truth);
    let ss_tot: f64 = truth.iter().map(|t| (t - mt) * (t - mt)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance("truth"));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// `mean(pred - truth)`.
pub fn mean_bias(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth, 1)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| p - t).sum::<f64>() / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub regime_label: String,
    pub n: usize,
    pub pearson_r: f64,
    pub rmse: f64,
    pub r2: f64,
    pub mean_bias: f64,
    pub debias: bool,
}

impl EvalReport {
    pub fn compute(
        label: impl Into<String>,
        pred: &[f64],
        truth: &[f64],
        debias: bool,
    ) -> Result<Self> {
        Ok(Self {
            regime_label: label.into(),
            n: pred.len(),
            pearson_r: pearson(pred, truth)?,
            rmse: rmse(pred, truth)?,
            r2: r2(pred, truth)?,
            mean_bias: mean_bias(pred, truth)?,
            debias,
        })
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{}: n={} r={:.4} rmse={:.4} m r2={:.4} bias={:+.4} m{}",
            self.regime_label,
            self.n,
            self.pearson_r,
            self.rmse,
            self.r2,
            self.mean_bias,
            if self.debias { " (debiased)" } else { "" }
        )
    }
}

pub const REPORT_HEADER: &str = "regime_label,n,pearson,rmse,r2,mean_bias,debias_flag";

/// `report.csv`: one row per regime.
pub fn write_report_csv<W: Write>(reports: &[EvalReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.regime_label, r.n, r.pearson_r, r.rmse, r.r2, r.mean_bias, r.debias
        )?;
    }
    Ok(())
}
