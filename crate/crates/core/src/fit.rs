//! Log-log least squares fits for scaling exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exponent estimated from a log-log regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope divided by the caller's divisor.
    pub exponent: f64,
    /// Intercept of the regression in natural-log space.
    pub intercept: f64,
    /// OLS slope standard error divided by `|divisor|`.
    pub stderr: f64,
    pub r_squared: f64,
    /// Smallest and largest abscissa entering the fit.
    pub range_used: (f64, f64),
    pub n_points: usize,
    /// Raw slope before division.
    pub slope: f64,
    pub divisor: f64,
}

impl ScalingFit {
    /// Value of the fitted power law `exp(intercept) * x^slope`.
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Simple linear regression `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub(crate) fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_stderr = if x.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}

/// OLS of `ln(ordinate)` on `ln(abscissa)`; the exponent is `slope / divisor`.
///
/// Non-positive ordinates are refused: dropping or taking absolute values is
/// a policy that belongs to the caller.
pub fn fit_loglog(points: &[(f64, f64)], divisor: f64) -> Result<ScalingFit> {
    if divisor == 0.0 || !divisor.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "divisor must be finite and non-zero, got {divisor}"
        )));
    }
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 points for a log-log fit, got {}",
            points.len()
        )));
    }
    for &(a, v) in points {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!(
                "abscissa must be positive and finite, got {a}"
            )));
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveOrdinate {
                abscissa: a,
                value: v,
            });
        }
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::InvalidInput(
            "abscissae must not all coincide".into(),
        ));
    }
    let fit = ols(&lx, &ly);
    Ok(ScalingFit {
        exponent: fit.slope / divisor,
        intercept: fit.intercept,
        stderr: fit.slope_stderr / divisor.abs(),
        r_squared: fit.r_squared,
        range_used: (lo, hi),
        n_points: points.len(),
        slope: fit.slope,
        divisor,
    })
}
