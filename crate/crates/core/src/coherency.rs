//! Power-law coherency exponent `H_rho = H_xy - (H_x + H_y) / 2`.
//!
//! Three estimates are produced side by side:
//!
//! * frequency domain: smoothed `K^2(w) ~ w^{-4 H_rho}` near the origin;
//! * time domain: `rho_DCCA(s)^2 ~ s^{4 H_rho}` at large scales;
//! * difference of the DFA and DCCA exponents.
//!
//! Squared coherency is bounded by one, so the population exponent cannot be
//! positive. A positive estimate beyond the tolerance is reported as an
//! estimation artifact, never as a regime of its own.

use serde::{Deserialize, Serialize};

use crate::detrended::{
    detrended_moments, hurst_from_curve, hxy_from_curve, DccaFit, DetrendConfig,
};
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, ScalingFit};
use crate::series::TimeSeries;
use crate::spectral::{self, SmoothedCoherency};

/// Default half-width of the "standard" band around `(H_x + H_y) / 2`.
pub const DEFAULT_TOLERANCE: f64 = 0.05;

/// Minimum number of points surviving zero-removal in an `H_rho` fit.
pub const MIN_HRHO_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `H_xy = (H_x + H_y) / 2`: coherency tends to a constant.
    Standard,
    /// `H_xy < (H_x + H_y) / 2`: correlated at high frequencies, uncorrelated
    /// at low ones.
    AntiCointegration,
    /// `H_xy > (H_x + H_y) / 2`: unattainable for the population, flags a
    /// biased estimate.
    InfeasibleFlag,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Standard => "standard",
            Regime::AntiCointegration => "anti-cointegration",
            Regime::InfeasibleFlag => "infeasible-flag",
        })
    }
}

pub fn classify(hx: f64, hy: f64, hxy: f64, tol: f64) -> Regime {
    let gap = hxy - 0.5 * (hx + hy);
    if gap > tol {
        Regime::InfeasibleFlag
    } else if gap < -tol {
        Regime::AntiCointegration
    } else {
        Regime::Standard
    }
}

/// An `H_rho` fit with the number of zero points removed beforehand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HRhoFit {
    pub fit: ScalingFit,
    pub dropped: usize,
}

fn hrho_fit(points: Vec<(f64, f64)>, divisor: f64, what: &str) -> Result<HRhoFit> {
    let total = points.len();
    let kept: Vec<(f64, f64)> = points.into_iter().filter(|&(_, v)| v > 0.0).collect();
    let dropped = total - kept.len();
    if kept.len() < MIN_HRHO_POINTS {
        return Err(Error::EstimationFailed(format!(
            "{} positive {what} values left after dropping {dropped} zeros, need {MIN_HRHO_POINTS}",
            kept.len()
        )));
    }
    Ok(HRhoFit {
        fit: fit_loglog(&kept, divisor)?,
        dropped,
    })
}

/// Fits `K^2(w) ~ w^{-4 H_rho}` to given frequencies and squared coherencies.
pub fn h_rho_from_coherency(frequencies: &[f64], squared: &[f64]) -> Result<HRhoFit> {
    let points = frequencies
        .iter()
        .copied()
        .zip(squared.iter().copied())
        .collect();
    hrho_fit(points, -4.0, "squared coherency")
}

/// Fits `rho(s)^2 ~ s^{4 H_rho}` to scale-specific correlations.
pub fn h_rho_from_rho(rho: &[(usize, f64)]) -> Result<HRhoFit> {
    let points = rho.iter().map(|&(s, r)| (s as f64, r * r)).collect();
    hrho_fit(points, 4.0, "squared rho_DCCA")
}

/// Frequency-domain `H_rho` from the `n_freqs` lowest smoothed coherencies.
pub fn h_rho_frequency(
    x: &TimeSeries,
    y: &TimeSeries,
    n_freqs: usize,
    bandwidth: usize,
) -> Result<HRhoFit> {
    let k = spectral::coherency(x, y, bandwidth)?;
    h_rho_from_smoothed(&k, n_freqs)
}

fn h_rho_from_smoothed(k: &SmoothedCoherency, n_freqs: usize) -> Result<HRhoFit> {
    if n_freqs > k.frequencies.len() {
        return Err(Error::InvalidInput(format!(
            "n_freqs {n_freqs} exceeds the {} available frequencies",
            k.frequencies.len()
        )));
    }
    h_rho_from_coherency(&k.frequencies[..n_freqs], &k.squared[..n_freqs])
}

/// Time-domain `H_rho` from `rho_DCCA(s)`.
pub fn h_rho_time(x: &TimeSeries, y: &TimeSeries, cfg: &DetrendConfig) -> Result<HRhoFit> {
    h_rho_from_rho(&detrended_moments(x, y, cfg)?.rho()?)
}

/// Settings shared by every channel of a [`CoherencyReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencySettings {
    pub detrend: DetrendConfig,
    pub n_freqs: usize,
    pub bandwidth: usize,
    pub tolerance: f64,
}

impl CoherencySettings {
    pub fn default_for(length: usize) -> Result<Self> {
        Ok(Self {
            detrend: DetrendConfig::default_for(length)?,
            n_freqs: spectral::default_nfreqs(length),
            bandwidth: spectral::DEFAULT_BANDWIDTH,
            tolerance: DEFAULT_TOLERANCE,
        })
    }
}

/// Outcome of one estimation channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Channel<T> {
    Estimated { value: T },
    Failed { reason: String },
}

impl<T> Channel<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(value) => Channel::Estimated { value },
            Err(e) => Channel::Failed {
                reason: e.to_string(),
            },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Channel::Estimated { value } => Some(value),
            Channel::Failed { .. } => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Channel::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencyReport {
    pub hx: Channel<ScalingFit>,
    pub hy: Channel<ScalingFit>,
    pub hxy: Channel<DccaFit>,
    pub h_rho_freq: Channel<HRhoFit>,
    pub h_rho_time: Channel<HRhoFit>,
    /// `H_xy - (H_x + H_y) / 2` from the DFA and DCCA fits.
    pub h_rho_diff: Option<f64>,
    pub regime: Option<Regime>,
    /// `rho_DCCA` at the largest scale; no cointegration claim is made from it.
    pub rho_at_max_scale: Option<f64>,
    pub rho: Vec<(usize, f64)>,
    pub settings: CoherencySettings,
}

impl CoherencyReport {
    pub fn failed_channels(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.hx.is_failed() {
            out.push("hx");
        }
        if self.hy.is_failed() {
            out.push("hy");
        }
        if self.hxy.is_failed() {
            out.push("hxy");
        }
        if self.h_rho_freq.is_failed() {
            out.push("h_rho_freq");
        }
        if self.h_rho_time.is_failed() {
            out.push("h_rho_time");
        }
        out
    }
}

/// Runs every channel; a failing channel is recorded, not propagated. Only
/// invalid input (mismatched lengths, bad settings, constant series) is an
/// error.
pub fn coherency_report(
    x: &TimeSeries,
    y: &TimeSeries,
    settings: &CoherencySettings,
) -> Result<CoherencyReport> {
    let moments = detrended_moments(x, y, &settings.detrend)?;
    let hx = Channel::from_result(hurst_from_curve(&moments.dfa_x()));
    let hy = Channel::from_result(hurst_from_curve(&moments.dfa_y()));
    let hxy = Channel::from_result(hxy_from_curve(&moments.dcca()));
    let rho = moments.rho()?;
    let h_rho_time = Channel::from_result(h_rho_from_rho(&rho));
    let h_rho_freq =
        Channel::from_result(h_rho_frequency(x, y, settings.n_freqs, settings.bandwidth));

    let (h_rho_diff, regime) = match (hx.value(), hy.value(), hxy.value()) {
        (Some(a), Some(b), Some(c)) => (
            Some(c.fit.exponent - 0.5 * (a.exponent + b.exponent)),
            Some(classify(
                a.exponent,
                b.exponent,
                c.fit.exponent,
                settings.tolerance,
            )),
        ),
        _ => (None, None),
    };
    Ok(CoherencyReport {
        hx,
        hy,
        hxy,
        h_rho_freq,
        h_rho_time,
        h_rho_diff,
        regime,
        rho_at_max_scale: rho.last().map(|r| r.1),
        rho,
        settings: settings.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arfima::{generate_arfima, InnovationDist};

    #[test]
    fn classification_examples() {
        assert_eq!(classify(0.9, 0.9, 0.9, 0.05), Regime::Standard);
        assert_eq!(classify(0.9, 0.9, 0.6, 0.05), Regime::AntiCointegration);
        assert_eq!(classify(0.9, 0.9, 1.0, 0.05), Regime::InfeasibleFlag);
        assert_eq!(classify(0.9, 0.7, 0.84, 0.05), Regime::Standard);
        assert_eq!(
            classify(0.7, 0.9, 0.74, 0.05),
            classify(0.9, 0.7, 0.74, 0.05)
        );
    }

    #[test]
    fn exact_synthetic_coherency() {
        let w = spectral::fourier_frequencies(4096);
        let k2: Vec<f64> = w.iter().map(|&v| v.powf(1.2)).collect();
        let f = h_rho_from_coherency(&w[..64], &k2[..64]).unwrap();
        assert!((f.fit.exponent + 0.3).abs() < 1e-12);
        assert_eq!(f.dropped, 0);
    }

    #[test]
    fn flat_rho_gives_zero() {
        let rho: Vec<(usize, f64)> = [12, 20, 35, 60, 100, 170]
            .iter()
            .map(|&s| (s, 0.7))
            .collect();
        let f = h_rho_from_rho(&rho).unwrap();
        assert!(f.fit.exponent.abs() < 1e-14);
    }

    #[test]
    fn zeros_are_dropped_then_counted() {
        let rho: Vec<(usize, f64)> = vec![
            (12, 0.5),
            (20, 0.0),
            (35, 0.4),
            (60, 0.3),
            (100, 0.0),
            (170, 0.2),
            (300, 0.1),
        ];
        let f = h_rho_from_rho(&rho).unwrap();
        assert_eq!(f.dropped, 2);
        assert_eq!(f.fit.n_points, 5);
        let few: Vec<(usize, f64)> = vec![
            (12, 0.5),
            (20, 0.0),
            (35, 0.4),
            (60, 0.3),
            (100, 0.0),
            (170, 0.2),
        ];
        assert!(matches!(
            h_rho_from_rho(&few),
            Err(Error::EstimationFailed(_))
        ));
    }

    #[test]
    fn self_pair_report() {
        let x = generate_arfima(0.3, 4096, 17, InnovationDist::Gaussian).unwrap();
        let settings = CoherencySettings::default_for(4096).unwrap();
        let r = coherency_report(&x, &x, &settings).unwrap();
        assert_eq!(r.regime, Some(Regime::Standard));
        assert_eq!(r.h_rho_diff, Some(0.0));
        assert!(r.rho.iter().all(|&(_, v)| v == 1.0));
        assert_eq!(r.rho_at_max_scale, Some(1.0));
        assert!(r.h_rho_time.value().unwrap().fit.exponent.abs() < 1e-12);
        assert!(r.h_rho_freq.value().unwrap().fit.exponent.abs() < 1e-12);
        assert!(r.failed_channels().is_empty());
    }
}
