//! Detrended fluctuation analysis (DFA), detrended cross-correlation
//! analysis (DCCA) and the DCCA-based scale-specific correlation and
//! regression coefficients.
//!
//! Both profiles are split into `floor(T/s)` non-overlapping boxes taken
//! from the start and another `floor(T/s)` taken from the end. In every box a
//! polynomial of order `m` is removed by least squares and the box statistic
//! is the mean product of the residuals (divisor `s`). `F^2(s)` is the mean
//! over all `2 floor(T/s)` boxes, accumulated in box order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, ScalingFit};
use crate::series::{profile, CurveKind, FluctuationCurve, TimeSeries};

/// Number of scales in the default grid.
pub const DEFAULT_SCALE_COUNT: usize = 20;

/// Detrending order and scale grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetrendConfig {
    pub order: usize,
    pub scales: Vec<usize>,
}

impl DetrendConfig {
    pub fn new(order: usize, scales: Vec<usize>) -> Self {
        Self { order, scales }
    }

    /// DFA1 with about twenty log-spaced scales between the smallest
    /// admissible scale and `T/5`.
    pub fn default_for(length: usize) -> Result<Self> {
        Self::with_order(length, 1)
    }

    pub fn with_order(length: usize, order: usize) -> Result<Self> {
        let lo = min_scale(order);
        let hi = length / 5;
        if hi < lo {
            return Err(Error::SeriesTooShort {
                required: 5 * lo,
                actual: length,
            });
        }
        let cfg = Self::new(order, log_spaced_scales(lo, hi, DEFAULT_SCALE_COUNT));
        cfg.validate(length)?;
        Ok(cfg)
    }

    pub fn min_scale(&self) -> usize {
        self.scales.first().copied().unwrap_or(0)
    }

    pub fn max_scale(&self) -> usize {
        self.scales.last().copied().unwrap_or(0)
    }

    pub fn validate(&self, length: usize) -> Result<()> {
        if self.scales.len() < 5 {
            return Err(Error::InvalidParameter(format!(
                "need at least 5 scales, got {}",
                self.scales.len()
            )));
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "scales must be sorted and unique".into(),
            ));
        }
        let floor = min_scale(self.order);
        if self.min_scale() < floor {
            return Err(Error::InvalidParameter(format!(
                "smallest scale {} is below max(10, 4(m+2)) = {floor}",
                self.min_scale()
            )));
        }
        if length < 4 * self.min_scale() {
            return Err(Error::SeriesTooShort {
                required: 4 * self.min_scale(),
                actual: length,
            });
        }
        if self.max_scale() > length / 5 {
            return Err(Error::InvalidParameter(format!(
                "largest scale {} exceeds T/5 = {}",
                self.max_scale(),
                length / 5
            )));
        }
        Ok(())
    }
}

/// Smallest admissible scale for detrending order `order`.
pub fn min_scale(order: usize) -> usize {
    10.max(4 * (order + 2))
}

/// Up to `count` unique integers log-spaced over `[lo, hi]`, both ends included.
pub fn log_spaced_scales(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .map(|s| s.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

/// Orthonormal basis of polynomials of degree `<= order` sampled on
/// `s` points of the abscissa `1..=s` rescaled to `[-1, 1]`.
struct PolyBasis {
    columns: Vec<Vec<f64>>,
}

impl PolyBasis {
    fn new(s: usize, order: usize) -> Self {
        let u: Vec<f64> = (0..s)
            .map(|i| -1.0 + 2.0 * i as f64 / (s - 1) as f64)
            .collect();
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut v: Vec<f64> = u.iter().map(|&t| t.powi(k as i32)).collect();
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for q in &columns {
                    let c = dot(q, &v);
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            columns.push(v);
        }
        Self { columns }
    }

    fn residuals(&self, segment: &[f64], out: &mut [f64]) {
        out.copy_from_slice(segment);
        for q in &self.columns {
            let c = dot(q, segment);
            out.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Detrended second moments of one scale: `(F2_X, F2_Y, F2_XY)`.
fn scale_moments(px: &[f64], py: &[f64], s: usize, order: usize) -> (f64, f64, f64) {
    let n = px.len();
    let boxes = n / s;
    let basis = PolyBasis::new(s, order);
    let starts = (0..boxes)
        .map(|k| k * s)
        .chain((0..boxes).map(|k| n - (k + 1) * s));
    let mut rx = vec![0.0; s];
    let mut ry = vec![0.0; s];
    let (mut fxx, mut fyy, mut fxy) = (0.0, 0.0, 0.0);
    for start in starts {
        basis.residuals(&px[start..start + s], &mut rx);
        basis.residuals(&py[start..start + s], &mut ry);
        fxx += dot(&rx, &rx) / s as f64;
        fyy += dot(&ry, &ry) / s as f64;
        fxy += dot(&rx, &ry) / s as f64;
    }
    let m = (2 * boxes) as f64;
    (fxx / m, fyy / m, fxy / m)
}

/// Per-scale `F2_X`, `F2_Y` and `F2_XY` for a pair of series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetrendedMoments {
    pub scales: Vec<usize>,
    pub fxx: Vec<f64>,
    pub fyy: Vec<f64>,
    pub fxy: Vec<f64>,
}

impl DetrendedMoments {
    pub fn dfa_x(&self) -> FluctuationCurve {
        curve(&self.scales, &self.fxx, CurveKind::Dfa)
    }

    pub fn dfa_y(&self) -> FluctuationCurve {
        curve(&self.scales, &self.fyy, CurveKind::Dfa)
    }

    pub fn dcca(&self) -> FluctuationCurve {
        curve(&self.scales, &self.fxy, CurveKind::Dcca)
    }

    /// `rho_DCCA(s) = F2_XY / sqrt(F2_X F2_Y)`, clamped to `[-1, 1]`.
    pub fn rho(&self) -> Result<Vec<(usize, f64)>> {
        self.scales
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let denom = (self.fxx[i] * self.fyy[i]).sqrt();
                if !(denom > 0.0) {
                    return Err(Error::DegenerateInput(format!(
                        "zero detrended variance at scale {s}"
                    )));
                }
                Ok((s, (self.fxy[i] / denom).clamp(-1.0, 1.0)))
            })
            .collect()
    }

    /// `beta_DCCA(s) = F2_XY / F2_X` with `x` as regressor.
    pub fn beta(&self) -> Result<Vec<(usize, f64)>> {
        self.scales
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                if !(self.fxx[i] > 0.0) {
                    return Err(Error::DegenerateInput(format!(
                        "zero detrended variance of the regressor at scale {s}"
                    )));
                }
                Ok((s, self.fxy[i] / self.fxx[i]))
            })
            .collect()
    }
}

fn curve(scales: &[usize], values: &[f64], kind: CurveKind) -> FluctuationCurve {
    FluctuationCurve {
        scales: scales.to_vec(),
        values: values.to_vec(),
        kind,
    }
}

fn profiles(x: &TimeSeries, y: &TimeSeries, cfg: &DetrendConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    cfg.validate(x.len())?;
    let (px, py) = (profile(x)?, profile(y)?);
    if px.is_degenerate() || py.is_degenerate() {
        return Err(Error::DegenerateInput("zero-variance series".into()));
    }
    Ok((px.values().to_vec(), py.values().to_vec()))
}

/// Computes all three detrended moments in one pass over the boxes.
pub fn detrended_moments(
    x: &TimeSeries,
    y: &TimeSeries,
    cfg: &DetrendConfig,
) -> Result<DetrendedMoments> {
    let (px, py) = profiles(x, y, cfg)?;
    let per_scale: Vec<(f64, f64, f64)> = cfg
        .scales
        .par_iter()
        .map(|&s| scale_moments(&px, &py, s, cfg.order))
        .collect();
    Ok(DetrendedMoments {
        scales: cfg.scales.clone(),
        fxx: per_scale.iter().map(|m| m.0).collect(),
        fyy: per_scale.iter().map(|m| m.1).collect(),
        fxy: per_scale.iter().map(|m| m.2).collect(),
    })
}

/// DFA fluctuation function `F^2(s)`.
pub fn dfa_fluctuation(x: &TimeSeries, cfg: &DetrendConfig) -> Result<FluctuationCurve> {
    Ok(detrended_moments(x, x, cfg)?.dfa_x())
}

/// DCCA fluctuation function `F^2_XY(s)`; may be negative.
pub fn dcca_fluctuation(
    x: &TimeSeries,
    y: &TimeSeries,
    cfg: &DetrendConfig,
) -> Result<FluctuationCurve> {
    Ok(detrended_moments(x, y, cfg)?.dcca())
}

/// Hurst exponent from `F^2(s) ~ s^{2H}`.
pub fn estimate_hurst_dfa(x: &TimeSeries, cfg: &DetrendConfig) -> Result<ScalingFit> {
    hurst_from_curve(&dfa_fluctuation(x, cfg)?)
}

pub fn hurst_from_curve(curve: &FluctuationCurve) -> Result<ScalingFit> {
    let points: Vec<(f64, f64)> = curve.points().collect();
    fit_loglog(&points, 2.0).map_err(|e| match e {
        Error::NonPositiveOrdinate { abscissa, value } => Error::EstimationFailed(format!(
            "fluctuation function is {value} at scale {abscissa}"
        )),
        other => other,
    })
}

/// Bivariate Hurst exponent fit on `|F^2_XY(s)|` with sign diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccaFit {
    pub fit: ScalingFit,
    /// Scales whose `F^2_XY` sign differs from the majority sign.
    pub sign_flips: usize,
    /// Scales with negative `F^2_XY`.
    pub negative_count: usize,
    /// Scales dropped because `F^2_XY` was exactly zero.
    pub dropped: usize,
}

pub fn estimate_hxy_dcca(x: &TimeSeries, y: &TimeSeries, cfg: &DetrendConfig) -> Result<DccaFit> {
    hxy_from_curve(&dcca_fluctuation(x, y, cfg)?)
}

/// Fits `|F^2_XY(s)| ~ s^{2 H_xy}`; negative values enter by absolute value.
pub fn hxy_from_curve(curve: &FluctuationCurve) -> Result<DccaFit> {
    let negative_count = curve.values.iter().filter(|&&v| v < 0.0).count();
    let positive_count = curve.values.iter().filter(|&&v| v > 0.0).count();
    let sign_flips = negative_count.min(positive_count);
    let points: Vec<(f64, f64)> = curve
        .points()
        .filter(|&(_, v)| v != 0.0)
        .map(|(s, v)| (s, v.abs()))
        .collect();
    let dropped = curve.len() - points.len();
    if points.len() < 3 {
        return Err(Error::EstimationFailed(format!(
            "only {} non-zero F2_XY values",
            points.len()
        )));
    }
    let fit = fit_loglog(&points, 2.0)?;
    Ok(DccaFit {
        fit,
        sign_flips,
        negative_count,
        dropped,
    })
}

/// Scale-specific DCCA correlation coefficient.
pub fn rho_dcca(x: &TimeSeries, y: &TimeSeries, cfg: &DetrendConfig) -> Result<Vec<(usize, f64)>> {
    detrended_moments(x, y, cfg)?.rho()
}

/// Scale-specific DCCA regression coefficient of `y` on `x`.
pub fn beta_dcca(x: &TimeSeries, y: &TimeSeries, cfg: &DetrendConfig) -> Result<Vec<(usize, f64)>> {
    detrended_moments(x, y, cfg)?.beta()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, seed: u64) -> TimeSeries {
        crate::arfima::generate_arfima(0.0, n, seed, crate::arfima::InnovationDist::Gaussian)
            .unwrap()
    }

    /// Least-squares residuals by explicit normal equations on the raw
    /// abscissa `1..=s`, independent of the orthonormal basis.
    fn naive_residuals(seg: &[f64], order: usize) -> Vec<f64> {
        let s = seg.len();
        let p = order + 1;
        let t: Vec<f64> = (1..=s).map(|i| i as f64 / s as f64).collect();
        let mut ata = vec![vec![0.0; p]; p];
        let mut aty = vec![0.0; p];
        for (i, &ti) in t.iter().enumerate() {
            for a in 0..p {
                aty[a] += ti.powi(a as i32) * seg[i];
                for b in 0..p {
                    ata[a][b] += ti.powi((a + b) as i32);
                }
            }
        }
        // Gaussian elimination
        for c in 0..p {
            let piv = ata[c][c];
            for r in c + 1..p {
                let f = ata[r][c] / piv;
                for k in c..p {
                    ata[r][k] -= f * ata[c][k];
                }
                aty[r] -= f * aty[c];
            }
        }
        let mut coef = vec![0.0; p];
        for c in (0..p).rev() {
            let mut v = aty[c];
            for k in c + 1..p {
                v -= ata[c][k] * coef[k];
            }
            coef[c] = v / ata[c][c];
        }
        t.iter()
            .zip(seg)
            .map(|(&ti, &y)| y - (0..p).map(|a| coef[a] * ti.powi(a as i32)).sum::<f64>())
            .collect()
    }

    #[test]
    fn basis_residuals_match_normal_equations() {
        let x = noise(200, 4);
        let prof = profile(&x).unwrap();
        for order in 0..=3 {
            let s = 37;
            let basis = PolyBasis::new(s, order);
            let mut r = vec![0.0; s];
            basis.residuals(&prof.values()[50..50 + s], &mut r);
            let naive = naive_residuals(&prof.values()[50..50 + s], order);
            for (a, b) in r.iter().zip(&naive) {
                assert!((a - b).abs() < 1e-8, "order {order}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn dfa_by_hand_matches() {
        // brute force: explicit box loop with naive residuals
        let x = noise(300, 8);
        let cfg = DetrendConfig::new(1, vec![12, 17, 23, 31, 47, 60]);
        let curve = dfa_fluctuation(&x, &cfg).unwrap();
        let p = profile(&x).unwrap();
        let p = p.values();
        for (i, &s) in cfg.scales.iter().enumerate() {
            let nb = p.len() / s;
            let mut acc = 0.0;
            for k in 0..nb {
                for start in [k * s, p.len() - (k + 1) * s] {
                    let r = naive_residuals(&p[start..start + s], 1);
                    acc += r.iter().map(|v| v * v).sum::<f64>() / s as f64;
                }
            }
            let expected = acc / (2 * nb) as f64;
            assert!((curve.values[i] - expected).abs() < 1e-9 * expected);
        }
    }

    #[test]
    fn linear_profile_detrended_away() {
        let basis = PolyBasis::new(25, 1);
        let seg: Vec<f64> = (0..25).map(|t| 3.0 - 0.7 * t as f64).collect();
        let mut r = vec![0.0; 25];
        basis.residuals(&seg, &mut r);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_trend_input_vanishes_under_dfa2() {
        // the profile of a linear trend is quadratic
        let x = TimeSeries::new((0..400).map(|t| 0.3 * t as f64 + 2.0).collect()).unwrap();
        let cfg = DetrendConfig::new(2, vec![16, 20, 30, 45, 60, 80]);
        let f = dfa_fluctuation(&x, &cfg).unwrap();
        assert!(f.values.iter().all(|&v| v.abs() < 1e-18));
        let dfa1 = dfa_fluctuation(&x, &DetrendConfig::new(1, cfg.scales.clone())).unwrap();
        assert!(dfa1.values.iter().all(|&v| v > 1e-6));
    }

    #[test]
    fn self_pair_and_sign_flip_exact() {
        let x = noise(1024, 2);
        let cfg = DetrendConfig::default_for(1024).unwrap();
        let dfa = dfa_fluctuation(&x, &cfg).unwrap();
        let dcca = dcca_fluctuation(&x, &x, &cfg).unwrap();
        assert_eq!(dfa.values, dcca.values);
        let neg = x.affine(-1.0, 0.0).unwrap();
        let anti = dcca_fluctuation(&x, &neg, &cfg).unwrap();
        assert!(anti.values.iter().zip(&dfa.values).all(|(a, b)| *a == -*b));
        assert!(rho_dcca(&x, &x, &cfg)
            .unwrap()
            .iter()
            .all(|&(_, r)| r == 1.0));
        assert!(rho_dcca(&x, &neg, &cfg)
            .unwrap()
            .iter()
            .all(|&(_, r)| r == -1.0));
        assert!(beta_dcca(&x, &x, &cfg)
            .unwrap()
            .iter()
            .all(|&(_, b)| b == 1.0));
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            DetrendConfig::new(1, vec![12, 14, 16, 18, 20]).validate(40),
            Err(Error::SeriesTooShort { .. })
        ));
        assert!(DetrendConfig::new(1, vec![10, 14, 16, 18, 20])
            .validate(1000)
            .is_err());
        assert!(DetrendConfig::new(1, vec![12, 14, 16, 18])
            .validate(1000)
            .is_err());
        assert!(DetrendConfig::new(1, vec![12, 14, 14, 16, 18])
            .validate(1000)
            .is_err());
        assert!(DetrendConfig::new(1, vec![12, 14, 16, 18, 300])
            .validate(1000)
            .is_err());
        assert!(DetrendConfig::new(1, vec![12, 14, 16, 18, 200])
            .validate(1000)
            .is_ok());
        assert!(DetrendConfig::new(3, vec![12, 14, 16, 18, 200])
            .validate(1000)
            .is_err());
    }

    #[test]
    fn default_grid_shape() {
        let cfg = DetrendConfig::default_for(1 << 14).unwrap();
        assert_eq!(cfg.scales.len(), 20);
        assert_eq!(cfg.min_scale(), 12);
        assert_eq!(cfg.max_scale(), (1 << 14) / 5);
        let small = DetrendConfig::default_for(256).unwrap();
        assert!(small.scales.len() >= 5);
        assert!(DetrendConfig::default_for(50).is_err());
    }

    #[test]
    fn degenerate_and_mismatch() {
        let cfg = DetrendConfig::default_for(256).unwrap();
        let c = TimeSeries::new(vec![1.0; 256]).unwrap();
        assert!(matches!(
            dfa_fluctuation(&c, &cfg),
            Err(Error::DegenerateInput(_))
        ));
        let x = noise(256, 1);
        let y = noise(300, 1);
        assert!(matches!(
            dcca_fluctuation(&x, &y, &cfg),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn hxy_abs_policy() {
        let scales = vec![12, 20, 40, 80, 160];
        let values: Vec<f64> = scales
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let v = (s as f64).powf(1.8);
                if i == 2 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let curve = FluctuationCurve {
            scales,
            values,
            kind: CurveKind::Dcca,
        };
        let f = hxy_from_curve(&curve).unwrap();
        assert!((f.fit.exponent - 0.9).abs() < 1e-12);
        assert_eq!(f.sign_flips, 1);
        assert_eq!(f.negative_count, 1);

        let zero = FluctuationCurve {
            scales: vec![12, 20, 40, 80, 160],
            values: vec![0.0, 0.0, 0.0, 1.0, 2.0],
            kind: CurveKind::Dcca,
        };
        assert!(matches!(
            hxy_from_curve(&zero),
            Err(Error::EstimationFailed(_))
        ));
    }
}
