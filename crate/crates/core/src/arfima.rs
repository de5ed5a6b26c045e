//! ARFIMA(0,d,0) and mixed-correlated ARFIMA (MC-ARFIMA) simulation.
//!
//! Each output series is a weighted sum of two fractionally integrated
//! components:
//!
//! ```text
//! x_t = alpha * sum_n a_n(d1) e1_{t-n} + beta  * sum_n a_n(d2) e2_{t-n}
//! y_t = gamma * sum_n a_n(d3) e3_{t-n} + delta * sum_n a_n(d4) e4_{t-n}
//! ```
//!
//! with `a_n(d) = Gamma(n+d) / (Gamma(n+1) Gamma(d))` and innovations that are
//! serially independent but contemporaneously correlated with covariance
//! `sigma`. The MA(inf) filter is truncated and applied by FFT convolution.

use std::sync::Arc;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::series::TimeSeries;

/// Shortest series [`generate_mc_arfima`] will produce.
pub const MIN_LENGTH: usize = 64;

/// Coefficients `a_0..a_{N-1}` of the fractional integration filter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub d: f64,
    pub weights: Vec<f64>,
}

/// Builds `n_terms` MA(inf) weights by `a_n = a_{n-1} (n - 1 + d) / n`.
pub fn arfima_weights(d: f64, n_terms: usize) -> Result<WeightTable> {
    check_memory(d, "d")?;
    if n_terms == 0 {
        return Err(Error::InvalidParameter("n_terms must be positive".into()));
    }
    let mut weights = Vec::with_capacity(n_terms);
    weights.push(1.0);
    for n in 1..n_terms {
        let prev = weights[n - 1];
        weights.push(prev * ((n - 1) as f64 + d) / n as f64);
    }
    Ok(WeightTable { d, weights })
}

fn check_memory(d: f64, name: &str) -> Result<()> {
    if !d.is_finite() || d.abs() >= 0.5 {
        return Err(Error::InvalidParameter(format!(
            "{name} = {d} outside (-0.5, 0.5)"
        )));
    }
    Ok(())
}

/// Marginal law of the standardised innovations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnovationDist {
    Gaussian,
    /// Student t rescaled to unit variance; `dof` must exceed 2.
    StudentT {
        dof: f64,
    },
}

impl InnovationDist {
    fn validate(&self) -> Result<()> {
        match *self {
            InnovationDist::Gaussian => Ok(()),
            InnovationDist::StudentT { dof } if dof.is_finite() && dof > 2.0 => Ok(()),
            InnovationDist::StudentT { dof } => Err(Error::InvalidParameter(format!(
                "Student t degrees of freedom must exceed 2, got {dof}"
            ))),
        }
    }
}

impl std::fmt::Display for InnovationDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InnovationDist::Gaussian => write!(f, "gaussian"),
            InnovationDist::StudentT { dof } => write!(f, "student-t({dof})"),
        }
    }
}

/// 4x4 innovation covariance, indexed 0..4 for streams 1..4.
pub type Sigma = [[f64; 4]; 4];

pub fn identity_sigma() -> Sigma {
    let mut s = [[0.0; 4]; 4];
    for (i, row) in s.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    s
}

/// Full parameterisation of the bivariate generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McArfimaSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Memory parameters `d1..d4`.
    pub d: [f64; 4],
    pub sigma: Sigma,
    pub innovation_dist: InnovationDist,
    /// MA(inf) cutoff; `None` means `length + burn_in`.
    pub truncation: Option<usize>,
    /// Discarded warm-up samples; `None` means `length`.
    pub burn_in: Option<usize>,
}

impl Default for McArfimaSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            gamma: 1.0,
            delta: 0.0,
            d: [0.0; 4],
            sigma: identity_sigma(),
            innovation_dist: InnovationDist::Gaussian,
            truncation: None,
            burn_in: None,
        }
    }
}

impl McArfimaSpec {
    /// Pair of single-component ARFIMA processes (`beta = delta = 0`) whose
    /// innovations 1 and 3 have covariance `cov13`.
    pub fn correlated_pair(d_x: f64, d_y: f64, cov13: f64) -> Self {
        let mut spec = Self {
            d: [d_x, 0.0, d_y, 0.0],
            ..Self::default()
        };
        spec.set_cov(0, 2, cov13);
        spec
    }

    /// Sets `sigma[i][j]` and `sigma[j][i]` (0-based stream indices).
    pub fn set_cov(&mut self, i: usize, j: usize, value: f64) {
        self.sigma[i][j] = value;
        self.sigma[j][i] = value;
    }

    pub fn weights(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.weights().iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{} must be finite",
                    ["alpha", "beta", "gamma", "delta"][i]
                )));
            }
        }
        for (i, &d) in self.d.iter().enumerate() {
            check_memory(d, &format!("d{}", i + 1))?;
        }
        self.innovation_dist.validate()?;
        if self.truncation == Some(0) {
            return Err(Error::InvalidParameter(
                "truncation must be positive".into(),
            ));
        }
        covariance_factor(&self.sigma).map(|_| ())
    }

    pub fn resolved_burn_in(&self, length: usize) -> usize {
        self.burn_in.unwrap_or(length)
    }

    pub fn resolved_truncation(&self, length: usize) -> usize {
        self.truncation
            .unwrap_or(length + self.resolved_burn_in(length))
    }

    /// Copy with every default materialised for `length`.
    pub fn resolved(&self, length: usize) -> Self {
        Self {
            truncation: Some(self.resolved_truncation(length)),
            burn_in: Some(self.resolved_burn_in(length)),
            ..self.clone()
        }
    }

    /// Spec with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        const PERM: [usize; 4] = [2, 3, 0, 1];
        let mut sigma = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                sigma[i][j] = self.sigma[PERM[i]][PERM[j]];
            }
        }
        Self {
            alpha: self.gamma,
            beta: self.delta,
            gamma: self.alpha,
            delta: self.beta,
            d: [self.d[2], self.d[3], self.d[0], self.d[1]],
            sigma,
            ..self.clone()
        }
    }

    /// Asymptotic Hurst exponent of `x`: `0.5 + max d` over components with
    /// non-zero weight.
    pub fn target_hx(&self) -> f64 {
        0.5 + dominant_memory(&[(self.alpha, self.d[0]), (self.beta, self.d[1])])
    }

    pub fn target_hy(&self) -> f64 {
        0.5 + dominant_memory(&[(self.gamma, self.d[2]), (self.delta, self.d[3])])
    }

    /// Bivariate Hurst exponent implied by the dominant term of the
    /// cross-correlation expansion: `0.5 + max (d_i + d_j) / 2` over cross
    /// pairs `i in {1,2}`, `j in {3,4}` with non-zero weights and
    /// `sigma_ij != 0`. `None` when no such pair exists.
    pub fn target_hxy(&self) -> Option<f64> {
        let w = self.weights();
        let mut best: Option<f64> = None;
        for i in 0..2 {
            for j in 2..4 {
                if w[i] != 0.0 && w[j] != 0.0 && self.sigma[i][j] != 0.0 {
                    let v = 0.5 * (self.d[i] + self.d[j]);
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        best.map(|v| 0.5 + v)
    }

    /// `H_xy - (H_x + H_y) / 2` from the targets above.
    pub fn target_h_rho(&self) -> Option<f64> {
        self.target_hxy()
            .map(|hxy| hxy - 0.5 * (self.target_hx() + self.target_hy()))
    }
}

fn dominant_memory(components: &[(f64, f64)]) -> f64 {
    components
        .iter()
        .filter(|(w, _)| *w != 0.0)
        .map(|&(_, d)| d)
        .reduce(f64::max)
        .unwrap_or(0.0)
}

/// Symmetric square root `B` of `sigma` (`B B^T = sigma`), clipping tiny
/// negative eigenvalues to zero.
pub fn covariance_factor(sigma: &Sigma) -> Result<Matrix4<f64>> {
    for i in 0..4 {
        for j in 0..4 {
            let (a, b) = (sigma[i][j], sigma[j][i]);
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "sigma[{}][{}] is not finite",
                    i + 1,
                    j + 1
                )));
            }
            if (a - b).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "sigma is not symmetric: sigma_{}{} = {a} but sigma_{}{} = {b}",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1
                )));
            }
        }
        if !(sigma[i][i] > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "innovation variance sigma_{0}{0} must be positive",
                i + 1
            )));
        }
    }
    let m = Matrix4::from_fn(|i, j| 0.5 * (sigma[i][j] + sigma[j][i]));
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.min();
    if min < -1e-10 {
        return Err(Error::InvalidParameter(format!(
            "sigma is not positive semi-definite (smallest eigenvalue {min:.3e})"
        )));
    }
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = eig.eigenvectors;
    Ok(v * Matrix4::from_diagonal(&root) * v.transpose())
}

fn draw_standardised<R: Rng>(rng: &mut R, dist: InnovationDist, n: usize) -> Vec<f64> {
    match dist {
        InnovationDist::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        InnovationDist::StudentT { dof } => {
            let t = StudentT::new(dof).expect("dof validated");
            let scale = (dof / (dof - 2.0)).sqrt();
            (0..n).map(|_| t.sample(rng) / scale).collect()
        }
    }
}

/// Four aligned innovation streams with contemporaneous covariance `sigma`.
///
/// Stream `i` draws its unit-variance variates from `stream_seed(seed, i)`;
/// the vector `(z_1, .., z_4)` at each `t` is then shaped by the symmetric
/// square root of `sigma`.
pub fn correlated_innovations(
    sigma: &Sigma,
    dist: InnovationDist,
    length: usize,
    seed: u64,
) -> Result<[Vec<f64>; 4]> {
    if length == 0 {
        return Err(Error::InvalidInput(
            "innovation length must be positive".into(),
        ));
    }
    dist.validate()?;
    let factor = covariance_factor(sigma)?;
    let raw: Vec<Vec<f64>> = (0..4)
        .map(|i| draw_standardised(&mut seed::stream_rng(seed, i), dist, length))
        .collect();
    let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; length]);
    for t in 0..length {
        let z = Vector4::new(raw[0][t], raw[1][t], raw[2][t], raw[3][t]);
        let e = factor * z;
        for (stream, v) in out.iter_mut().zip(e.iter()) {
            stream[t] = *v;
        }
    }
    Ok(out)
}

/// Truncated causal filter `c_t = sum_{n < weights.len(), n <= t} a_n e_{t-n}`
/// evaluated for `t` in `start..e.len()` by FFT convolution.
pub(crate) struct CausalFilter {
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CausalFilter {
    pub(crate) fn new(signal_len: usize, taps: usize) -> Self {
        let fft_len = (signal_len + taps - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            fft_len,
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
        }
    }

    pub(crate) fn apply(&self, weights: &[f64], e: &[f64], start: usize) -> Vec<f64> {
        let n = self.fft_len;
        let mut a: Vec<Complex64> = weights
            .iter()
            .map(|&w| Complex64::new(w, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(n)
            .collect();
        let mut b: Vec<Complex64> = e
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(n)
            .collect();
        self.forward.process(&mut a);
        self.forward.process(&mut b);
        for (u, v) in a.iter_mut().zip(&b) {
            *u *= v;
        }
        self.inverse.process(&mut a);
        let scale = 1.0 / n as f64;
        a[start..e.len()].iter().map(|c| c.re * scale).collect()
    }
}

/// Two equal-length series produced by one generator call.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSeries {
    pub x: TimeSeries,
    pub y: TimeSeries,
    /// Spec with defaults materialised.
    pub spec_echo: McArfimaSpec,
    pub seed: u64,
    /// Set when the MA(inf) truncation is shorter than the output length.
    pub truncation_warning: bool,
}

/// Applies the MC-ARFIMA filters to explicit innovation streams of length
/// `burn_in + length`; the first `burn_in` outputs are discarded.
pub fn filter_mc_arfima(
    spec: &McArfimaSpec,
    innovations: &[Vec<f64>; 4],
    length: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let burn_in = spec.resolved_burn_in(length);
    let total = burn_in + length;
    if innovations.iter().any(|s| s.len() != total) {
        return Err(Error::InvalidInput(format!(
            "innovation streams must have length burn_in + length = {total}"
        )));
    }
    let taps = spec.resolved_truncation(length).min(total);
    let filter = CausalFilter::new(total, taps);
    let weights = spec.weights();
    let mut components: [Option<Vec<f64>>; 4] = Default::default();
    for i in 0..4 {
        if weights[i] != 0.0 {
            let table = arfima_weights(spec.d[i], taps)?;
            components[i] = Some(filter.apply(&table.weights, &innovations[i], burn_in));
        }
    }
    let combine = |i: usize, j: usize| -> Vec<f64> {
        (0..length)
            .map(|t| {
                let mut v = 0.0;
                if let Some(c) = &components[i] {
                    v += weights[i] * c[t];
                }
                if let Some(c) = &components[j] {
                    v += weights[j] * c[t];
                }
                v
            })
            .collect()
    };
    Ok((combine(0, 1), combine(2, 3)))
}

/// Simulates an MC-ARFIMA pair of `length` observations.
pub fn generate_mc_arfima(
    spec: &McArfimaSpec,
    length: usize,
    seed: u64,
) -> Result<BivariateSeries> {
    if length < MIN_LENGTH {
        return Err(Error::InvalidInput(format!(
            "length must be at least {MIN_LENGTH}, got {length}"
        )));
    }
    spec.validate()?;
    let total = spec.resolved_burn_in(length) + length;
    let innovations = correlated_innovations(&spec.sigma, spec.innovation_dist, total, seed)?;
    let (x, y) = filter_mc_arfima(spec, &innovations, length)?;
    Ok(BivariateSeries {
        x: TimeSeries::new(x)?.with_label("x"),
        y: TimeSeries::new(y)?.with_label("y"),
        spec_echo: spec.resolved(length),
        seed,
        truncation_warning: spec.resolved_truncation(length) < length,
    })
}

/// Simulates ARFIMA(0,d,0) with unit-variance innovations drawn from stream
/// 0 of `seed`; burn-in and truncation follow the MC-ARFIMA defaults.
pub fn generate_arfima(
    d: f64,
    length: usize,
    seed: u64,
    dist: InnovationDist,
) -> Result<TimeSeries> {
    if length < MIN_LENGTH {
        return Err(Error::InvalidInput(format!(
            "length must be at least {MIN_LENGTH}, got {length}"
        )));
    }
    check_memory(d, "d")?;
    dist.validate()?;
    let burn_in = length;
    let total = burn_in + length;
    let e = draw_standardised(&mut seed::stream_rng(seed, 0), dist, total);
    let table = arfima_weights(d, total)?;
    let out = CausalFilter::new(total, total).apply(&table.weights, &e, burn_in);
    Ok(TimeSeries::new(out)?.with_label(format!("arfima(d={d})")))
}
