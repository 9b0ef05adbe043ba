//! Pearson correlation and MAPE.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Labels with magnitude below this (ps) are excluded from MAPE.
pub const MAPE_EPSILON: f64 = 1.0;

/// Sample Pearson correlation.
pub fn pearson_r(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    let n = y.len() as f64;
    if y.len() < 2 {
        return Err(Error::DegenerateVariance("y (fewer than two samples)"));
    }
    let my = y.iter().sum::<f64>() / n;
    let mh = yhat.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mh);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateVariance("y"));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateVariance("yhat"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    pub percent: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

pub fn mape(y: &[f64], yhat: &[f64], epsilon: f64) -> Result<Mape> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    let (mut sum, mut used) = (0.0, 0usize);
    for (a, b) in y.iter().zip(yhat) {
        if a.abs() >= epsilon {
            sum += (a - b).abs() / a.abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AllExcluded);
    }
    Ok(Mape {
        percent: 100.0 * sum / used as f64,
        n_used: used,
        n_excluded: y.len() - used,
    })
}

/// Metrics for one target (WNS or TNS). A metric that is undefined on
/// this sample carries its error code instead of a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub r: Option<f64>,
    pub r_error: Option<String>,
    pub mape: Option<f64>,
    pub mape_error: Option<String>,
    pub n_used: usize,
    pub n_excluded: usize,
}

impl TargetResult {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Self {
        let r = pearson_r(y, yhat);
        let m = mape(y, yhat, MAPE_EPSILON);
        let (n_used, n_excluded) = match &m {
            Ok(m) => (m.n_used, m.n_excluded),
            Err(_) => (0, y.len()),
        };
        TargetResult {
            r: r.as_ref().ok().copied(),
            r_error: r.err().map(|e| e.code().to_string()),
            mape: m.as_ref().ok().map(|m| m.percent),
            mape_error: m.err().map(|e| e.code().to_string()),
            n_used,
            n_excluded,
        }
    }
}
