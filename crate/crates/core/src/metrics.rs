//! RMSE, prediction-interval coverage (PICP), and normalized average
//! width (PINAW).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::shape(format!(
            "rmse needs equal non-empty vectors, got {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mse = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / y_true.len() as f64;
    Ok(mse.sqrt())
}

/// Fraction of targets inside the closed interval `[lo, hi]`.
pub fn picp(y_true: &[f64], lo: &[f64], hi: &[f64]) -> Result<f64> {
    validate_bounds(y_true, lo, hi)?;
    let inside = y_true
        .iter()
        .zip(lo.iter().zip(hi))
        .filter(|(y, (l, h))| **l <= **y && **y <= **h)
        .count();
    Ok(inside as f64 / y_true.len() as f64)
}

/// Mean interval width normalized by the target range.
pub fn pinaw(y_true: &[f64], lo: &[f64], hi: &[f64]) -> Result<f64> {
    validate_bounds(y_true, lo, hi)?;
    let max = y_true.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = y_true.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > min) {
        return Err(Error::data("pinaw needs a non-degenerate target range".to_string()));
    }
    let mean_width = lo.iter().zip(hi).map(|(l, h)| h - l).sum::<f64>() / y_true.len() as f64;
    Ok(mean_width / (max - min))
}

fn validate_bounds(y_true: &[f64], lo: &[f64], hi: &[f64]) -> Result<()> {
    if y_true.is_empty() || y_true.len() != lo.len() || y_true.len() != hi.len() {
        return Err(Error::shape("interval metrics need equal non-empty vectors".to_string()));
    }
    for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
        if l > h {
            return Err(Error::invalid_parameter(format!(
                "interval {i} has lower {l} above upper {h}"
            )));
        }
    }
    Ok(())
}

/// Summary statistics over per-seed metric values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

pub fn aggregate(values: &[f64]) -> Result<MetricAggregate> {
    if values.is_empty() {
        return Err(Error::shape("cannot aggregate zero values".to_string()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(MetricAggregate {
        mean,
        std,
        median: quantile(&sorted, 0.5),
        q25: quantile(&sorted, 0.25),
        q75: quantile(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let idx = pos.floor() as usize;
    let frac = pos - idx as f64;
    if idx + 1 == n {
        sorted[idx]
    } else {
        sorted[idx] + frac * (sorted[idx + 1] - sorted[idx])
    }
}
