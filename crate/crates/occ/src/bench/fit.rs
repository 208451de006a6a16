use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BenchError, BenchRecord, Method, Result};

/// Minimum number of distinct sizes per fitted method.
pub const MIN_FIT_SIZES: usize = 3;
/// Minimum ratio between the largest and smallest fitted size.
pub const MIN_FIT_SPAN: f64 = 8.0;

/// `time ≈ c · n^alpha`, fitted in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub method: Method,
    pub alpha: f64,
    /// Intercept of the log-log line, `ln c`.
    pub log_coefficient: f64,
    pub r_squared: f64,
    pub sizes: Vec<usize>,
}

/// Least-squares slope, intercept and R² of `ln t` against `ln n`.
pub fn fit_power_law(ns: &[usize], times_ms: &[f64]) -> Result<(f64, f64, f64)> {
    let insufficient = |m: &str| Err(BenchError::InsufficientData(m.into()));
    if ns.len() != times_ms.len() {
        return insufficient("sizes and times differ in length");
    }
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < MIN_FIT_SIZES {
        return insufficient("need at least three distinct sizes");
    }
    if (distinct[distinct.len() - 1] as f64) < MIN_FIT_SPAN * distinct[0] as f64 {
        return insufficient("sizes must span at least a factor of 8");
    }
    if times_ms.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return insufficient("times must be positive");
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = times_ms.iter().map(|t| t.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, intercept, r2))
}

/// One fit per method over its non-skipped records.
pub fn fit_scaling_exponents(records: &[BenchRecord]) -> Result<Vec<ScalingFit>> {
    let mut by_method: BTreeMap<Method, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        if let (false, Some(t)) = (r.skipped, r.wall_time_ms) {
            let e = by_method.entry(r.method).or_default();
            e.0.push(r.n_points);
            e.1.push(t);
        }
    }
    if by_method.is_empty() {
        return Err(BenchError::InsufficientData("no timed records".into()));
    }
    by_method
        .into_iter()
        .map(|(method, (ns, ts))| {
            let (alpha, log_coefficient, r_squared) = fit_power_law(&ns, &ts)
                .map_err(|e| BenchError::InsufficientData(format!("{}: {e}", method.as_str())))?;
            Ok(ScalingFit {
                method,
                alpha,
                log_coefficient,
                r_squared,
                sizes: ns,
            })
        })
        .collect()
}
