//! Periodogram, cross-periodogram, Daniell-smoothed squared coherency and
//! log-periodogram regressions for `H` and `H_xy`.
//!
//! Ordinates are `I(w_j) = |sum_t x_t exp(-i w_j t)|^2 / (2 pi T)` at the
//! Fourier frequencies `w_j = 2 pi j / T`, `j = 1..=floor(T/2)`, computed on
//! the de-meaned series.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, ScalingFit};
use crate::series::TimeSeries;

/// Shortest series accepted by the spectral routines.
pub const MIN_SPECTRAL_LENGTH: usize = 16;

/// Default Daniell window width.
pub const DEFAULT_BANDWIDTH: usize = 11;

/// `floor(sqrt(T))` lowest frequencies.
pub fn default_nfreqs(length: usize) -> usize {
    (length as f64).sqrt().floor() as usize
}

/// Fourier frequencies `2 pi j / T` for `j = 1..=floor(T/2)`.
pub fn fourier_frequencies(length: usize) -> Vec<f64> {
    (1..=length / 2)
        .map(|j| 2.0 * PI * j as f64 / length as f64)
        .collect()
}

/// Auto-periodogram ordinates at the non-zero Fourier frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub frequencies: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub length: usize,
}

impl Periodogram {
    /// Population variance recovered through Parseval's identity. The
    /// Nyquist ordinate of an even-length series is counted once, all others
    /// twice (for their negative-frequency mirror).
    pub fn parseval_variance(&self) -> f64 {
        let n = self.length;
        let mut total = 0.0;
        for (j, &v) in self.ordinates.iter().enumerate() {
            let nyquist = n.is_multiple_of(2) && j + 1 == n / 2;
            total += if nyquist { v } else { 2.0 * v };
        }
        2.0 * PI * total / n as f64
    }

    pub fn mean_ordinate(&self) -> f64 {
        self.ordinates.iter().sum::<f64>() / self.ordinates.len() as f64
    }
}

/// Complex cross-periodogram `d_x(w) conj(d_y(w)) / (2 pi T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPeriodogram {
    pub frequencies: Vec<f64>,
    pub ordinates: Vec<Complex64>,
    pub length: usize,
}

impl CrossPeriodogram {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.ordinates.iter().map(|c| c.norm()).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.ordinates.iter().map(|c| c.arg()).collect()
    }
}

/// Daniell-smoothed spectra and the squared coherency derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedCoherency {
    pub frequencies: Vec<f64>,
    /// `K^2(w) = |f_xy|^2 / (f_x f_y)` in `[0, 1]`.
    pub squared: Vec<f64>,
    /// Smoothed `|f_xy(w)|`.
    pub cross_magnitude: Vec<f64>,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub bandwidth: usize,
}

fn check_length(x: &TimeSeries) -> Result<()> {
    if x.len() < MIN_SPECTRAL_LENGTH {
        return Err(Error::SeriesTooShort {
            required: MIN_SPECTRAL_LENGTH,
            actual: x.len(),
        });
    }
    Ok(())
}

/// DFT of the de-meaned series at `j = 1..=floor(T/2)`.
fn half_spectrum(x: &TimeSeries) -> Vec<Complex64> {
    let n = x.len();
    let m = x.mean();
    let mut buf: Vec<Complex64> = x
        .values()
        .iter()
        .map(|&v| Complex64::new(v - m, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[1..=n / 2].to_vec()
}

pub fn periodogram(x: &TimeSeries) -> Result<Periodogram> {
    check_length(x)?;
    let n = x.len();
    let norm = 2.0 * PI * n as f64;
    Ok(Periodogram {
        frequencies: fourier_frequencies(n),
        ordinates: half_spectrum(x)
            .iter()
            .map(|c| c.norm_sqr() / norm)
            .collect(),
        length: n,
    })
}

pub fn cross_periodogram(x: &TimeSeries, y: &TimeSeries) -> Result<CrossPeriodogram> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    check_length(x)?;
    let n = x.len();
    let norm = 2.0 * PI * n as f64;
    let dx = half_spectrum(x);
    let dy = half_spectrum(y);
    Ok(CrossPeriodogram {
        frequencies: fourier_frequencies(n),
        ordinates: dx
            .iter()
            .zip(&dy)
            .map(|(a, b)| a * b.conj() / norm)
            .collect(),
        length: n,
    })
}

/// Flat moving average over `width` neighbours; windows are truncated at the
/// ends of the frequency grid.
fn daniell<T>(values: &[T], width: usize) -> Vec<T>
where
    T: Copy + std::iter::Sum<T> + std::ops::Div<f64, Output = T>,
{
    let h = width / 2;
    let n = values.len();
    (0..n)
        .map(|j| {
            let lo = j.saturating_sub(h);
            let hi = (j + h).min(n - 1);
            values[lo..=hi].iter().copied().sum::<T>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn smoothed(x: &TimeSeries, y: &TimeSeries, bandwidth: usize) -> Result<SmoothedCoherency> {
    let cross = cross_periodogram(x, y)?;
    let n = x.len();
    let norm = 2.0 * PI * n as f64;
    let px: Vec<f64> = half_spectrum(x)
        .iter()
        .map(|c| c.norm_sqr() / norm)
        .collect();
    let py: Vec<f64> = half_spectrum(y)
        .iter()
        .map(|c| c.norm_sqr() / norm)
        .collect();
    if px.iter().all(|&v| v == 0.0) || py.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateInput("zero-variance series".into()));
    }
    let fxy = daniell(&cross.ordinates, bandwidth);
    let fx = daniell(&px, bandwidth);
    let fy = daniell(&py, bandwidth);
    let squared = fxy
        .iter()
        .zip(fx.iter().zip(&fy))
        .map(|(c, (a, b))| {
            let den = a * b;
            if den > 0.0 {
                ((c.re * c.re + c.im * c.im) / den).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(SmoothedCoherency {
        frequencies: cross.frequencies,
        squared,
        cross_magnitude: fxy.iter().map(|c| c.norm()).collect(),
        fx,
        fy,
        bandwidth,
    })
}

/// Squared coherency from Daniell-smoothed spectra. Unsmoothed coherency
/// is identically one, so `bandwidth` must be odd and at least 3.
pub fn coherency(x: &TimeSeries, y: &TimeSeries, bandwidth: usize) -> Result<SmoothedCoherency> {
    check_bandwidth(bandwidth)?;
    smoothed(x, y, bandwidth)
}

fn check_bandwidth(bandwidth: usize) -> Result<()> {
    if bandwidth < 3 || bandwidth.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be an odd integer >= 3, got {bandwidth}"
        )));
    }
    Ok(())
}

/// `n_freqs` must lie in `[8, T/4]`.
pub fn check_nfreqs(n_freqs: usize, length: usize) -> Result<()> {
    if n_freqs < 8 || n_freqs > length / 4 {
        return Err(Error::InvalidInput(format!(
            "n_freqs must lie in [8, T/4 = {}], got {n_freqs}",
            length / 4
        )));
    }
    Ok(())
}

/// Regression of `ln I(w)` on `ln w` read as `f(w) ~ w^{1 - 2H}`: the
/// returned exponent is `(1 - slope) / 2`. Zero ordinates are skipped.
pub fn memory_fit(frequencies: &[f64], ordinates: &[f64]) -> Result<ScalingFit> {
    let points: Vec<(f64, f64)> = frequencies
        .iter()
        .zip(ordinates)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&w, &v)| (w, v))
        .collect();
    if points.len() < 3 {
        return Err(Error::EstimationFailed(format!(
            "only {} positive spectral ordinates",
            points.len()
        )));
    }
    let mut fit = fit_loglog(&points, -2.0)?;
    fit.exponent += 0.5;
    Ok(fit)
}

/// Log-periodogram estimate of `H` over the `n_freqs` lowest frequencies.
pub fn estimate_h_logperiodogram(x: &TimeSeries, n_freqs: usize) -> Result<ScalingFit> {
    check_length(x)?;
    check_nfreqs(n_freqs, x.len())?;
    let p = periodogram(x)?;
    memory_fit(&p.frequencies[..n_freqs], &p.ordinates[..n_freqs])
}

/// Log-cross-periodogram estimate of `H_xy` from the smoothed `|f_xy|`.
pub fn estimate_hxy_logcross(
    x: &TimeSeries,
    y: &TimeSeries,
    n_freqs: usize,
    bandwidth: usize,
) -> Result<ScalingFit> {
    check_bandwidth(bandwidth)?;
    check_length(x)?;
    check_nfreqs(n_freqs, x.len())?;
    let c = smoothed(x, y, bandwidth)?;
    memory_fit(&c.frequencies[..n_freqs], &c.cross_magnitude[..n_freqs])
}
