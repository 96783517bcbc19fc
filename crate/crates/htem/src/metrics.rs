//! Evaluation statistics: RMSE over all p+1 coefficients, relative RMSE,
//! TPR/TNR, empirical interval coverage, and MeAD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All per-replicate evaluation numbers gathered by the experiment runner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub replicate: usize,
    pub rmse_all: f64,
    pub rmse_signal: f64,
    pub rmse_noise: f64,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub coverage: f64,
    pub median_width: f64,
    pub mead: f64,
}

impl ReplicateMetrics {
    pub const CSV_HEADER: &'static [&'static str] = &[
        "replicate",
        "rmse_all",
        "rmse_signal",
        "rmse_noise",
        "tpr",
        "tnr",
        "coverage",
        "median_width",
        "mead",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.replicate.to_string(),
            self.rmse_all.to_string(),
            self.rmse_signal.to_string(),
            self.rmse_noise.to_string(),
            opt(self.tpr),
            opt(self.tnr),
            self.coverage.to_string(),
            self.median_width.to_string(),
            self.mead.to_string(),
        ]
    }
}

/// Append rows to a CSV file with the fixed header.
pub fn write_metrics_csv(path: &std::path::Path, rows: &[ReplicateMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ReplicateMetrics::CSV_HEADER)?;
    for r in rows {
        w.write_record(r.csv_row())?;
    }
    w.flush().map_err(Error::Io)?;
    Ok(())
}

/// √(mean squared coefficient error) over all entries (intercept included
/// when the caller passes p+1-length vectors).
pub fn rmse(beta_true: &[f64], beta_hat: &[f64]) -> Result<f64> {
    if beta_true.len() != beta_hat.len() || beta_true.is_empty() {
        return Err(Error::Dimension(format!(
            "rmse lengths {} vs {}",
            beta_true.len(),
            beta_hat.len()
        )));
    }
    let ss: f64 = beta_true
        .iter()
        .zip(beta_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / beta_true.len() as f64).sqrt())
}

/// RMSE restricted to an index subset.
pub fn rmse_subset(beta_true: &[f64], beta_hat: &[f64], idx: &[usize]) -> Result<f64> {
    if beta_true.len() != beta_hat.len() {
        return Err(Error::Dimension("rmse_subset length mismatch".into()));
    }
    if idx.is_empty() {
        return Err(Error::Empty("rmse index subset"));
    }
    let ss: f64 = idx
        .iter()
        .map(|&j| (beta_true[j] - beta_hat[j]).powi(2))
        .sum();
    Ok((ss / idx.len() as f64).sqrt())
}

/// Divide each method's RMSE by the smallest; the best method maps to 1.
pub fn relative_rmse(rmses: &[f64]) -> Result<Vec<f64>> {
    if rmses.is_empty() {
        return Err(Error::Empty("rmse vector"));
    }
    let min = rmses.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        return Ok(rmses.iter().map(|&r| if r == 0.0 { 1.0 } else { f64::INFINITY }).collect());
    }
    Ok(rmses.iter().map(|r| r / min).collect())
}

/// True-positive and true-negative rates of a selected model against the
/// truth; a rate with an empty reference class is `None`.
pub fn tpr_tnr(gamma_hat: &[bool], gamma_true: &[bool]) -> Result<(Option<f64>, Option<f64>)> {
    if gamma_hat.len() != gamma_true.len() {
        return Err(Error::Dimension(format!(
            "tpr_tnr lengths {} vs {}",
            gamma_hat.len(),
            gamma_true.len()
        )));
    }
    let (mut tp, mut sig, mut tn, mut noise) = (0usize, 0usize, 0usize, 0usize);
    for (&h, &t) in gamma_hat.iter().zip(gamma_true) {
        if t {
            sig += 1;
            tp += h as usize;
        } else {
            noise += 1;
            tn += !h as usize;
        }
    }
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok((rate(tp, sig), rate(tn, noise)))
}

/// Fraction of observations inside their interval (inclusive endpoints)
/// and the median interval width.
pub fn coverage_and_width(intervals: &[(f64, f64)], y_test: &[f64]) -> Result<(f64, f64)> {
    if intervals.len() != y_test.len() || intervals.is_empty() {
        return Err(Error::Dimension(format!(
            "coverage lengths {} vs {}",
            intervals.len(),
            y_test.len()
        )));
    }
    let covered = intervals
        .iter()
        .zip(y_test)
        .filter(|((lo, hi), y)| lo <= y && *y <= hi)
        .count();
    let mut widths: Vec<f64> = intervals.iter().map(|(lo, hi)| hi - lo).collect();
    widths.sort_by(f64::total_cmp);
    let n = widths.len();
    let median = if n % 2 == 1 {
        widths[n / 2]
    } else {
        0.5 * (widths[n / 2 - 1] + widths[n / 2])
    };
    Ok((covered as f64 / y_test.len() as f64, median))
}

/// Median absolute deviation between predictions and actual values.
pub fn mead(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::Dimension(format!(
            "mead lengths {} vs {}",
            pred.len(),
            actual.len()
        )));
    }
    let mut devs: Vec<f64> = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).collect();
    devs.sort_by(f64::total_cmp);
    let n = devs.len();
    Ok(if n % 2 == 1 {
        devs[n / 2]
    } else {
        0.5 * (devs[n / 2 - 1] + devs[n / 2])
    })
}
