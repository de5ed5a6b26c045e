//! Power-law auto- and cross-correlation toolkit.
//!
//! * [`arfima`]: ARFIMA(0,d,0) and MC-ARFIMA simulation with controllable
//!   separate and bivariate Hurst exponents.
//! * [`detrended`]: DFA, DCCA, and the scale-specific coefficients
//!   `rho_DCCA(s)` and `beta_DCCA(s)`.
//! * [`spectral`]: periodograms, smoothed squared coherency and
//!   log-periodogram exponent regressions.
//! * [`coherency`]: power-law coherency exponent `H_rho` and regime
//!   classification.
//! * [`montecarlo`]: seeded, parallel, reproducible bias experiments.

pub mod arfima;
pub mod coherency;
pub mod detrended;
pub mod error;
pub mod fit;
pub mod montecarlo;
pub mod seed;
pub mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use fit::{fit_loglog, ScalingFit};
pub use series::{
    partial_sum_scaling, profile, sample_ccf, CurveKind, FluctuationCurve, Profile, TimeSeries,
};
