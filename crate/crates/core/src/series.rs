//! Time series containers, profiles, sample cross-correlation and the
//! aggregated partial-sum (co)variance scaling used as a coarse oracle for
//! the detrended estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered sequence of finite real observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    label: Option<String>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("time series must not be empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Self {
            values,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Sample variance with divisor `T - 1` (zero for a single observation).
    pub fn variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Elementwise `scale * x + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        TimeSeries::new(self.values.iter().map(|v| scale * v + shift).collect())
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TimeSeries::new(values)
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Cumulative sum of the de-meaned source series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    values: Vec<f64>,
    source_length: usize,
    degenerate: bool,
}

impl Profile {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    /// True when the source series was constant. The profile is then
    /// identically zero and every variance-normalised statistic is undefined.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Builds the profile `X_t = sum_{i<=t} (x_i - mean(x))`.
pub fn profile(x: &TimeSeries) -> Result<Profile> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "profile needs at least 2 observations, got {n}"
        )));
    }
    let m = x.mean();
    let mut acc = 0.0;
    let values: Vec<f64> = x
        .values()
        .iter()
        .map(|v| {
            acc += v - m;
            acc
        })
        .collect();
    let degenerate = x.values().iter().all(|&v| v == x.values()[0]);
    Ok(Profile {
        values,
        source_length: n,
        degenerate,
    })
}

/// Sample cross-correlation `corr(x_t, y_{t+k})` for `k` in `-max_lag..=max_lag`.
///
/// The biased (divide by `T`) autocovariance convention is used so every
/// coefficient stays within `[-1, 1]`; lag 0 is the Pearson correlation.
pub fn sample_ccf(x: &TimeSeries, y: &TimeSeries, max_lag: usize) -> Result<Vec<(i64, f64)>> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            n,
            y.len()
        )));
    }
    if 2 * max_lag >= n {
        return Err(Error::InvalidInput(format!(
            "max_lag {max_lag} must be below T/2 = {}",
            n / 2
        )));
    }
    let (mx, my) = (x.mean(), y.mean());
    let xc: Vec<f64> = x.values().iter().map(|v| v - mx).collect();
    let yc: Vec<f64> = y.values().iter().map(|v| v - my).collect();
    let sxx: f64 = xc.iter().map(|v| v * v).sum();
    let syy: f64 = yc.iter().map(|v| v * v).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput(
            "cross-correlation of a zero-variance series".into(),
        ));
    }
    let norm = (sxx * syy).sqrt();
    let lag = max_lag as i64;
    Ok((-lag..=lag)
        .map(|k| {
            let s: f64 = if k >= 0 {
                let k = k as usize;
                xc[..n - k].iter().zip(&yc[k..]).map(|(a, b)| a * b).sum()
            } else {
                let k = (-k) as usize;
                xc[k..].iter().zip(&yc[..n - k]).map(|(a, b)| a * b).sum()
            };
            (k, (s / norm).clamp(-1.0, 1.0))
        })
        .collect())
}

/// What a [`FluctuationCurve`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Dfa,
    Dcca,
    PartialSumVariance,
    PartialSumCovariance,
}

/// Scale-indexed (co)variance statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationCurve {
    pub scales: Vec<usize>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
}

impl FluctuationCurve {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.scales
            .iter()
            .zip(&self.values)
            .map(|(&s, &v)| (s as f64, v))
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }
}

/// Sample variance (or covariance, when `y` is given) of the sums over
/// non-overlapping windows of each span in `window_grid`.
///
/// The statistic scales like `t^{2H}` (resp. `t^{2H_xy}`). The tail remainder
/// that does not fill a whole window is discarded.
pub fn partial_sum_scaling(
    x: &TimeSeries,
    y: Option<&TimeSeries>,
    window_grid: &[usize],
) -> Result<FluctuationCurve> {
    if window_grid.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 windows, got {}",
            window_grid.len()
        )));
    }
    let n = x.len();
    if let Some(y) = y {
        if y.len() != n {
            return Err(Error::InvalidInput(format!(
                "length mismatch: {} vs {}",
                n,
                y.len()
            )));
        }
    }
    if window_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "window grid must be strictly ascending".into(),
        ));
    }
    if window_grid[0] < 4 {
        return Err(Error::InvalidInput(format!(
            "smallest window {} is below 4",
            window_grid[0]
        )));
    }
    let largest = *window_grid.last().unwrap();
    if largest > n / 4 {
        return Err(Error::InvalidInput(format!(
            "largest window {largest} exceeds T/4 = {}",
            n / 4
        )));
    }

    let block_sums =
        |v: &[f64], t: usize| -> Vec<f64> { v.chunks_exact(t).map(|c| c.iter().sum()).collect() };
    let values = window_grid
        .iter()
        .map(|&t| {
            let sx = block_sums(x.values(), t);
            let sy = match y {
                Some(y) => block_sums(y.values(), t),
                None => sx.clone(),
            };
            sample_covariance(&sx, &sy)
        })
        .collect();
    Ok(FluctuationCurve {
        scales: window_grid.to_vec(),
        values,
        kind: if y.is_some() {
            CurveKind::PartialSumCovariance
        } else {
            CurveKind::PartialSumVariance
        },
    })
}

fn sample_covariance(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - ma) * (v - mb))
        .sum::<f64>()
        / (a.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(TimeSeries::new(vec![]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn profile_examples() {
        let p = profile(&ts(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(p.values(), &[0.0, 0.0, 0.0]);
        assert!(p.is_degenerate());

        let p = profile(&ts(&[1.0, -1.0, 1.0, -1.0])).unwrap();
        assert_eq!(p.values(), &[1.0, 0.0, 1.0, 0.0]);

        let p = profile(&ts(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(p.values(), &[-2.0, -2.0, 0.0]);
        assert!(!p.is_degenerate());
        assert_eq!(p.source_length(), 3);
    }

    #[test]
    fn profile_needs_two_points() {
        assert!(matches!(profile(&ts(&[3.0])), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ccf_self_and_sign_flip() {
        let x = ts(&[0.3, -1.2, 2.2, 0.1, 0.9, -0.4, 1.7, -2.0]);
        let neg = x.affine(-1.0, 0.0).unwrap();
        assert_eq!(sample_ccf(&x, &x, 0).unwrap(), vec![(0, 1.0)]);
        let r = sample_ccf(&x, &neg, 0).unwrap()[0].1;
        assert!((r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ccf_errors() {
        let x = ts(&[1.0, 2.0, 3.0, 4.0]);
        let y = ts(&[1.0, 2.0, 3.0]);
        assert!(matches!(sample_ccf(&x, &y, 0), Err(Error::InvalidInput(_))));
        let c = ts(&[2.0; 4]);
        assert!(matches!(
            sample_ccf(&x, &c, 1),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(sample_ccf(&x, &x, 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn partial_sum_validation() {
        let x = ts(&(0..64).map(|i| (i as f64).sin()).collect::<Vec<_>>());
        assert!(partial_sum_scaling(&x, None, &[4, 8]).is_err());
        assert!(partial_sum_scaling(&x, None, &[2, 4, 8]).is_err());
        assert!(partial_sum_scaling(&x, None, &[4, 8, 32]).is_err());
        assert!(partial_sum_scaling(&x, None, &[8, 4, 16]).is_err());
        assert!(partial_sum_scaling(&x, None, &[4, 8, 16]).is_ok());
    }

    #[test]
    fn partial_sum_hand_computed() {
        let x = ts(&(1..=64).map(|i| i as f64).collect::<Vec<_>>());
        let c = partial_sum_scaling(&x, None, &[4, 8, 16]).unwrap();
        // sums over windows of 16: 136, 392, 648, 904 -> var = 256^2 * 5/3
        assert!((c.values[2] - 65536.0 * 5.0 / 3.0).abs() < 1e-9);
        assert_eq!(c.kind, CurveKind::PartialSumVariance);
        let b = partial_sum_scaling(&x, Some(&x), &[4, 8, 16]).unwrap();
        assert_eq!(b.values, c.values);
        assert_eq!(b.kind, CurveKind::PartialSumCovariance);
    }
}
