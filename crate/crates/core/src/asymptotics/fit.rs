//! Least-squares fits of power laws `c N^{e}` and logarithmic laws `(log N / N)^κ`.

use serde::Serialize;

pub const MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("a fit needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample N values must be strictly increasing")]
    NotIncreasing,
    #[error("log law needs N >= 2")]
    LogLawDomain,
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("degenerate design: all abscissae coincide")]
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFit {
    /// Slope of the regression.
    pub exponent: f64,
    /// Intercept of the regression.
    pub log_constant: f64,
    /// Largest absolute deviation of the data from the fitted line.
    pub residual: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLawFit {
    pub fit: AsymptoticFit,
    pub kappa: f64,
    /// `slope − κ`.
    pub slope_error: f64,
}

fn check(samples: &[(u64, f64)]) -> Result<(), FitError> {
    if samples.len() < MIN_SAMPLES {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(FitError::NotIncreasing);
    }
    if let Some(i) = samples.iter().position(|s| !s.1.is_finite()) {
        return Err(FitError::NonFinite(i));
    }
    Ok(())
}

/// Ordinary least squares `y = slope·x + intercept`; returns
/// `(slope, intercept, max |residual|)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64), FitError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).abs()).fold(0.0, f64::max);
    Ok((slope, intercept, residual))
}

fn build(samples: &[(u64, f64)], x: Vec<f64>) -> Result<AsymptoticFit, FitError> {
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (exponent, log_constant, residual) = linear_fit(&x, &y)?;
    Ok(AsymptoticFit {
        exponent,
        log_constant,
        residual,
        n_min: samples[0].0,
        n_max: samples[samples.len() - 1].0,
        samples: samples.len(),
    })
}

/// Regresses `log value` on `log N`.
pub fn fit_power_law(samples: &[(u64, f64)]) -> Result<AsymptoticFit, FitError> {
    check(samples)?;
    build(samples, samples.iter().map(|s| (s.0 as f64).ln()).collect())
}

/// Regresses `log value` on `log(log N / N)` and compares the slope with κ.
pub fn fit_log_law(samples: &[(u64, f64)], kappa: f64) -> Result<LogLawFit, FitError> {
    check(samples)?;
    if samples[0].0 < 2 {
        return Err(FitError::LogLawDomain);
    }
    let x = samples.iter().map(|s| ((s.0 as f64).ln() / s.0 as f64).ln()).collect();
    let fit = build(samples, x)?;
    Ok(LogLawFit { slope_error: fit.exponent - kappa, fit, kappa })
}
