//! Long-run law of the urn and goodness-of-fit checks against it.
//!
//! The high-risk probability converges almost surely to a limit distributed
//! `Beta(B0 / k, R0 / k)`. Simulated endpoints are compared with that law by
//! a one-sample Kolmogorov–Smirnov test at fixed asymptotic critical values.

use serde::{Deserialize, Serialize};
use statrs::function::{beta::checked_beta_reg, gamma::ln_gamma};

use crate::error::{Error, Result};
use crate::urn::UrnParameters;

/// Minimum sample for the asymptotic KS thresholds.
pub const MIN_FIT_SAMPLE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!(
                "beta parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(BetaParams { alpha, beta })
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        beta_pdf(self, x)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        beta_cdf(self, x)
    }

    /// Mass outside the open interval `(lo, hi)`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.cdf(lo)? + 1.0 - self.cdf(hi)?)
    }
}

/// `Beta(B0 / k, R0 / k)`.
pub fn limit_distribution(params: &UrnParameters) -> BetaParams {
    BetaParams {
        alpha: params.blue_initial() / params.increment(),
        beta: params.red_initial() / params.increment(),
    }
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Density on the open interval; unbounded at the edges when a or b < 1.
pub fn beta_pdf(params: &BetaParams, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("beta density needs 0 < x < 1, got {x}")));
    }
    let BetaParams { alpha: a, beta: b } = *params;
    let log = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta_fn(a, b);
    Ok(log.exp())
}

/// Regularized incomplete beta `I_x(a, b)` on `[0, 1]`.
pub fn beta_cdf(params: &BetaParams, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta CDF needs 0 <= x <= 1, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    checked_beta_reg(params.alpha, params.beta, x)
        .map(|v| v.clamp(0.0, 1.0))
        .map_err(|e| Error::Domain(e.to_string()))
}

/// `(a / (a + b), ab / ((a + b)^2 (a + b + 1)))`.
pub fn beta_moments(params: &BetaParams) -> (f64, f64) {
    let BetaParams { alpha: a, beta: b } = *params;
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}

/// Two-sided one-sample KS statistic of sorted `samples` against `cdf`.
pub fn ks_statistic<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Domain("KS samples must be sorted ascending".into()));
    }
    let n = samples.len() as f64;
    let d = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i as f64 + 1.0) / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0_f64, f64::max);
    Ok(d.clamp(0.0, 1.0))
}

/// Asymptotic coefficient `c(α)` of the KS critical value `c(α)/√n`.
pub fn ks_coefficient(significance: f64) -> Result<f64> {
    if significance == 0.05 {
        Ok(1.36)
    } else if significance == 0.01 {
        Ok(1.63)
    } else {
        Err(Error::UnsupportedSignificance(significance))
    }
}

/// Two-sample KS statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Two-sample KS critical value `c(α) sqrt((n + m) / (n m))`.
pub fn ks_two_sample_threshold(n: usize, m: usize, significance: f64) -> Result<f64> {
    let c = ks_coefficient(significance)?;
    let (n, m) = (n as f64, m as f64);
    Ok(c * ((n + m) / (n * m)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFitResult {
    pub statistic: f64,
    pub sample_size: usize,
    pub threshold: f64,
    pub significance: f64,
    pub law: BetaParams,
    pub passed: bool,
}

/// KS test of trajectory endpoints against the urn's limit law.
pub fn fit_limit_law(
    endpoints: &[f64],
    params: &UrnParameters,
    significance: f64,
) -> Result<GoodnessOfFitResult> {
    let c = ks_coefficient(significance)?;
    if endpoints.len() < MIN_FIT_SAMPLE {
        return Err(Error::SampleTooSmall {
            got: endpoints.len(),
            min: MIN_FIT_SAMPLE,
        });
    }
    if let Some(bad) = endpoints.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("endpoint {bad} outside [0, 1]")));
    }
    let law = limit_distribution(params);
    let mut sorted = endpoints.to_vec();
    sorted.sort_by(f64::total_cmp);
    let statistic = ks_statistic(&sorted, |x| beta_cdf(&law, x).unwrap_or(f64::NAN))?;
    let threshold = c / (sorted.len() as f64).sqrt();
    Ok(GoodnessOfFitResult {
        statistic,
        sample_size: sorted.len(),
        threshold,
        significance,
        law,
        passed: statistic < threshold,
    })
}
