use serde::Serialize;

use crate::error::{Error, Result};

/// Hoeffding radius `R sqrt(ln(2 / (1 - confidence)) / (2n))` for `n`
/// samples bounded in `[0, R]`.
pub fn hoeffding_radius(range: f64, n: u64, confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in ]0,1[, got {confidence}"
        )));
    }
    if !(range > 0.0) {
        return Err(Error::InvalidArgument(format!("range must be positive, got {range}")));
    }
    if n == 0 {
        return Err(Error::InsufficientData("no samples".into()));
    }
    Ok(range * ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt())
}

/// Two-sided Hoeffding interval around the sample mean.
pub fn hoeffding_ci(samples: &[f64], range: f64, confidence: f64) -> Result<(f64, f64)> {
    let r = hoeffding_radius(range, samples.len() as u64, confidence)?;
    let m = mean(samples);
    Ok((m - r, m + r))
}

/// Sequential mean, so the result is fixed by sample order.
pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Empirical statistic against a theoretical upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub experiment: String,
    /// Degree of the statistic (number of intervals or the `n` in `N >= n`).
    pub degree: usize,
    pub samples: u64,
    pub empirical_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Range cap used by the Hoeffding interval.
    pub range: f64,
    /// Normal-approximation half width, for display only.
    pub clt_half_width: f64,
}

impl BoundReport {
    /// Builds the report; passes when `ci_low <= bound`.
    pub fn from_samples(
        experiment: impl Into<String>,
        degree: usize,
        values: &[f64],
        range: f64,
        bound: f64,
        confidence: f64,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("no samples".into()));
        }
        let n = values.len() as u64;
        let m = mean(values);
        let r = hoeffding_radius(range, n, confidence)?;
        let var = if n > 1 {
            values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let z = statrs::function::erf::erfc_inv(1.0 - confidence) * std::f64::consts::SQRT_2;
        let ratio = if bound > 0.0 {
            m / bound
        } else if m == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Ok(Self {
            experiment: experiment.into(),
            degree,
            samples: n,
            empirical_mean: m,
            ci_low: m - r,
            ci_high: m + r,
            bound,
            ratio,
            pass: m - r <= bound,
            range,
            clt_half_width: z * (var / n as f64).sqrt(),
        })
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}
