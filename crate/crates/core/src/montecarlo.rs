//! Seeded Monte Carlo experiments on MC-ARFIMA data.
//!
//! Replication `r` simulates with `replication_seed(master_seed, r)`, so a
//! result is a pure function of its [`ExperimentConfig`]. Replications run in
//! parallel; aggregation walks them in index order, which keeps the output
//! bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arfima::{generate_mc_arfima, InnovationDist, McArfimaSpec};
use crate::coherency::{h_rho_frequency, h_rho_from_rho};
use crate::detrended::{detrended_moments, hurst_from_curve, hxy_from_curve, DetrendConfig};
use crate::error::{Error, Result};
use crate::seed::replication_seed;
use crate::spectral::{self, estimate_h_logperiodogram, estimate_hxy_logcross};

/// Share of failed replications above which an experiment is degraded.
pub const DEGRADED_FAILURE_SHARE: f64 = 0.2;

pub const MIN_EXPERIMENT_LENGTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Dfa,
    Dcca,
    Logperiodogram,
    Logcross,
    Rho,
    Beta,
    HRhoTime,
    HRhoFreq,
}

impl Estimator {
    pub const ALL: [Estimator; 8] = [
        Estimator::Dfa,
        Estimator::Dcca,
        Estimator::Logperiodogram,
        Estimator::Logcross,
        Estimator::Rho,
        Estimator::Beta,
        Estimator::HRhoTime,
        Estimator::HRhoFreq,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Dfa => "dfa",
            Estimator::Dcca => "dcca",
            Estimator::Logperiodogram => "logperiodogram",
            Estimator::Logcross => "logcross",
            Estimator::Rho => "rho",
            Estimator::Beta => "beta",
            Estimator::HRhoTime => "h_rho_time",
            Estimator::HRhoFreq => "h_rho_freq",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator '{s}'")))
    }
}

/// A scalar tracked across replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// DFA `H_x`.
    Hx,
    /// DFA `H_y`.
    Hy,
    /// DCCA `H_xy`.
    Hxy,
    /// `H_xy - (H_x + H_y) / 2` from DFA and DCCA.
    Gap,
    /// Number of DCCA scales with minority sign.
    HxySignFlips,
    HxFreq,
    HyFreq,
    HxyFreq,
    /// Mean of `rho_DCCA(s)` over the scale grid.
    RhoMean,
    /// Median of `beta_DCCA(s)` over the scale grid.
    BetaMedian,
    HRhoTime,
    HRhoFreq,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Hx => "hx",
            Metric::Hy => "hy",
            Metric::Hxy => "hxy",
            Metric::Gap => "gap",
            Metric::HxySignFlips => "hxy_sign_flips",
            Metric::HxFreq => "hx_freq",
            Metric::HyFreq => "hy_freq",
            Metric::HxyFreq => "hxy_freq",
            Metric::RhoMean => "rho_mean",
            Metric::BetaMedian => "beta_median",
            Metric::HRhoTime => "h_rho_time",
            Metric::HRhoFreq => "h_rho_freq",
        }
    }

    fn target(&self, spec: &McArfimaSpec) -> Option<f64> {
        match self {
            Metric::Hx | Metric::HxFreq => Some(spec.target_hx()),
            Metric::Hy | Metric::HyFreq => Some(spec.target_hy()),
            Metric::Hxy | Metric::HxyFreq => spec.target_hxy(),
            Metric::Gap | Metric::HRhoTime | Metric::HRhoFreq => spec.target_h_rho(),
            Metric::HxySignFlips | Metric::RhoMean | Metric::BetaMedian => None,
        }
    }
}

/// Estimator settings applied at every length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub order: usize,
    /// `None` uses `floor(sqrt(T))`.
    pub n_freqs: Option<usize>,
    pub bandwidth: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            order: 1,
            n_freqs: None,
            bandwidth: spectral::DEFAULT_BANDWIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub spec: McArfimaSpec,
    pub lengths: Vec<usize>,
    pub replications: usize,
    pub estimators: Vec<Estimator>,
    pub master_seed: u64,
    pub settings: AnalysisSettings,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidParameter(format!(
                "replications must be at least 2, got {}",
                self.replications
            )));
        }
        if self.lengths.is_empty() {
            return Err(Error::InvalidParameter("no lengths given".into()));
        }
        if let Some(&t) = self.lengths.iter().find(|&&t| t < MIN_EXPERIMENT_LENGTH) {
            return Err(Error::InvalidParameter(format!(
                "length {t} is below {MIN_EXPERIMENT_LENGTH}"
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("no estimators selected".into()));
        }
        self.spec.validate()?;
        for &t in &self.lengths {
            DetrendConfig::with_order(t, self.settings.order)?;
        }
        if self.settings.bandwidth < 3 || self.settings.bandwidth.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be an odd integer >= 3, got {}",
                self.settings.bandwidth
            )));
        }
        Ok(())
    }

    fn has(&self, e: Estimator) -> bool {
        self.estimators.contains(&e)
    }

    /// Metrics produced by the selected estimators, in a fixed order.
    pub fn metrics(&self) -> Vec<Metric> {
        let mut out = Vec::new();
        if self.has(Estimator::Dfa) {
            out.extend([Metric::Hx, Metric::Hy]);
        }
        if self.has(Estimator::Dcca) {
            out.extend([Metric::Hxy, Metric::HxySignFlips]);
        }
        if self.has(Estimator::Dfa) && self.has(Estimator::Dcca) {
            out.push(Metric::Gap);
        }
        if self.has(Estimator::Logperiodogram) {
            out.extend([Metric::HxFreq, Metric::HyFreq]);
        }
        if self.has(Estimator::Logcross) {
            out.push(Metric::HxyFreq);
        }
        if self.has(Estimator::Rho) {
            out.push(Metric::RhoMean);
        }
        if self.has(Estimator::Beta) {
            out.push(Metric::BetaMedian);
        }
        if self.has(Estimator::HRhoTime) {
            out.push(Metric::HRhoTime);
        }
        if self.has(Estimator::HRhoFreq) {
            out.push(Metric::HRhoFreq);
        }
        out
    }
}

/// Outcome of one metric in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub metric: Metric,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub length: usize,
    pub index: usize,
    pub seed: u64,
    pub observations: Vec<Observation>,
}

impl ReplicationRecord {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.observations
            .iter()
            .find(|o| o.metric == metric)
            .and_then(|o| o.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub length: usize,
    pub target: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    /// Standard error of the mean.
    pub std_error: Option<f64>,
    pub bias: Option<f64>,
    pub q05: Option<f64>,
    pub q50: Option<f64>,
    pub q95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub target_hx: f64,
    pub target_hy: f64,
    pub target_hxy: Option<f64>,
    pub target_h_rho: Option<f64>,
    pub summaries: Vec<MetricSummary>,
    pub replications_completed: usize,
    /// More than 20% of the replications failed for at least one metric.
    pub degraded: bool,
    pub records: Vec<ReplicationRecord>,
}

impl ExperimentResult {
    pub fn summary(&self, metric: Metric, length: usize) -> Option<&MetricSummary> {
        self.summaries
            .iter()
            .find(|s| s.metric == metric && s.length == length)
    }

    /// Mean of `metric` at `length`, if any replication succeeded.
    pub fn mean(&self, metric: Metric, length: usize) -> Option<f64> {
        self.summary(metric, length).and_then(|s| s.mean)
    }
}

fn observe(metric: Metric, r: Result<f64>) -> Observation {
    match r {
        Ok(v) if v.is_finite() => Observation {
            metric,
            value: Some(v),
            error: None,
        },
        Ok(v) => Observation {
            metric,
            value: None,
            error: Some(format!("non-finite estimate {v}")),
        },
        Err(e) => Observation {
            metric,
            value: None,
            error: Some(e.to_string()),
        },
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Runs every selected estimator on one simulated pair.
fn replicate(cfg: &ExperimentConfig, length: usize, index: usize) -> ReplicationRecord {
    let seed = replication_seed(cfg.master_seed, index as u64);
    let metrics = cfg.metrics();
    let pair = match generate_mc_arfima(&cfg.spec, length, seed) {
        Ok(p) => p,
        Err(e) => {
            return ReplicationRecord {
                length,
                index,
                seed,
                observations: metrics
                    .into_iter()
                    .map(|m| observe(m, Err(e.clone())))
                    .collect(),
            }
        }
    };
    let (x, y) = (&pair.x, &pair.y);
    let detrend = DetrendConfig::with_order(length, cfg.settings.order).expect("validated");
    let n_freqs = cfg
        .settings
        .n_freqs
        .unwrap_or_else(|| spectral::default_nfreqs(length));
    let bandwidth = cfg.settings.bandwidth;

    let needs_moments = [
        Estimator::Dfa,
        Estimator::Dcca,
        Estimator::Rho,
        Estimator::Beta,
        Estimator::HRhoTime,
    ]
    .iter()
    .any(|&e| cfg.has(e));
    let moments = if needs_moments {
        Some(detrended_moments(x, y, &detrend))
    } else {
        None
    };
    let with_moments =
        |f: &dyn Fn(&crate::detrended::DetrendedMoments) -> Result<f64>| -> Result<f64> {
            match moments.as_ref().expect("moments computed") {
                Ok(m) => f(m),
                Err(e) => Err(e.clone()),
            }
        };
    let hx = || with_moments(&|m| hurst_from_curve(&m.dfa_x()).map(|f| f.exponent));
    let hy = || with_moments(&|m| hurst_from_curve(&m.dfa_y()).map(|f| f.exponent));
    let hxy_fit = || {
        moments
            .as_ref()
            .expect("moments computed")
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|m| hxy_from_curve(&m.dcca()))
    };

    let observations = metrics
        .into_iter()
        .map(|metric| {
            let r = match metric {
                Metric::Hx => hx(),
                Metric::Hy => hy(),
                Metric::Hxy => hxy_fit().map(|f| f.fit.exponent),
                Metric::HxySignFlips => hxy_fit().map(|f| f.sign_flips as f64),
                Metric::Gap => hx().and_then(|a| {
                    let b = hy()?;
                    let c = hxy_fit()?.fit.exponent;
                    Ok(c - 0.5 * (a + b))
                }),
                Metric::HxFreq => estimate_h_logperiodogram(x, n_freqs).map(|f| f.exponent),
                Metric::HyFreq => estimate_h_logperiodogram(y, n_freqs).map(|f| f.exponent),
                Metric::HxyFreq => {
                    estimate_hxy_logcross(x, y, n_freqs, bandwidth).map(|f| f.exponent)
                }
                Metric::RhoMean => with_moments(&|m| {
                    let r = m.rho()?;
                    Ok(r.iter().map(|p| p.1).sum::<f64>() / r.len() as f64)
                }),
                Metric::BetaMedian => {
                    with_moments(&|m| Ok(median(m.beta()?.iter().map(|p| p.1).collect())))
                }
                Metric::HRhoTime => {
                    with_moments(&|m| h_rho_from_rho(&m.rho()?).map(|f| f.fit.exponent))
                }
                Metric::HRhoFreq => {
                    h_rho_frequency(x, y, n_freqs, bandwidth).map(|f| f.fit.exponent)
                }
            };
            observe(metric, r)
        })
        .collect();
    ReplicationRecord {
        length,
        index,
        seed,
        observations,
    }
}

fn summarise(
    metric: Metric,
    length: usize,
    target: Option<f64>,
    records: &[&ReplicationRecord],
) -> MetricSummary {
    let values: Vec<f64> = records.iter().filter_map(|r| r.get(metric)).collect();
    let completed = values.len();
    let failed = records.len() - completed;
    let mut s = MetricSummary {
        metric,
        length,
        target,
        completed,
        failed,
        mean: None,
        std_dev: None,
        std_error: None,
        bias: None,
        q05: None,
        q50: None,
        q95: None,
    };
    if completed == 0 {
        return s;
    }
    let mean = values.iter().sum::<f64>() / completed as f64;
    s.mean = Some(mean);
    s.bias = target.map(|t| mean - t);
    if completed > 1 {
        let var =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (completed - 1) as f64;
        s.std_dev = Some(var.sqrt());
        s.std_error = Some((var / completed as f64).sqrt());
    }
    let mut sorted = values;
    sorted.sort_by(f64::total_cmp);
    s.q05 = Some(quantile_sorted(&sorted, 0.05));
    s.q50 = Some(quantile_sorted(&sorted, 0.5));
    s.q95 = Some(quantile_sorted(&sorted, 0.95));
    s
}

/// Runs the experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .lengths
        .iter()
        .flat_map(|&t| (0..cfg.replications).map(move |r| (t, r)))
        .collect();
    let records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .map(|&(t, r)| replicate(cfg, t, r))
        .collect();

    let metrics = cfg.metrics();
    let mut summaries = Vec::new();
    for &t in &cfg.lengths {
        let at_length: Vec<&ReplicationRecord> = records.iter().filter(|r| r.length == t).collect();
        for &m in &metrics {
            summaries.push(summarise(m, t, m.target(&cfg.spec), &at_length));
        }
    }
    let limit = DEGRADED_FAILURE_SHARE * cfg.replications as f64;
    let degraded = summaries.iter().any(|s| s.failed as f64 > limit);
    let replications_completed = records
        .iter()
        .filter(|r| r.observations.iter().all(|o| o.value.is_some()))
        .count();
    Ok(ExperimentResult {
        config: cfg.clone(),
        target_hx: cfg.spec.target_hx(),
        target_hy: cfg.spec.target_hy(),
        target_hxy: cfg.spec.target_hxy(),
        target_h_rho: cfg.spec.target_h_rho(),
        summaries,
        replications_completed,
        degraded,
        records,
    })
}

/// Runs the experiment on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

/// One row of a feasibility sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub name: String,
    pub length: usize,
    /// Mean over replications of `H_xy - (H_x + H_y) / 2`.
    pub mean_gap: Option<f64>,
    pub std_error: Option<f64>,
    pub target_gap: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    pub degraded: bool,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilitySummary {
    pub tolerance: f64,
    pub rows: Vec<FeasibilityRow>,
    pub max_gap: Option<f64>,
    /// No configuration's mean gap exceeds `+tolerance`.
    pub all_within_bound: bool,
    pub results: Vec<ExperimentResult>,
}

/// Runs each configuration and tabulates the mean `H_xy` excess over the
/// separate-exponent average.
pub fn feasibility_sweep(
    configs: &[ExperimentConfig],
    tolerance: f64,
) -> Result<FeasibilitySummary> {
    for c in configs {
        if !(c.has(Estimator::Dfa) && c.has(Estimator::Dcca)) {
            return Err(Error::InvalidParameter(format!(
                "configuration '{}' must include the dfa and dcca estimators",
                c.name
            )));
        }
    }
    let results = configs
        .iter()
        .map(run_experiment)
        .collect::<Result<Vec<_>>>()?;
    feasibility_summary(results, tolerance)
}

/// Tabulates the gap of finished experiments; each must carry the gap metric.
pub fn feasibility_summary(
    results: Vec<ExperimentResult>,
    tolerance: f64,
) -> Result<FeasibilitySummary> {
    let mut rows = Vec::new();
    for res in &results {
        for &t in &res.config.lengths {
            let s = res.summary(Metric::Gap, t).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "experiment '{}' has no gap metric; select dfa and dcca",
                    res.config.name
                ))
            })?;
            rows.push(FeasibilityRow {
                name: res.config.name.clone(),
                length: t,
                mean_gap: s.mean,
                std_error: s.std_error,
                target_gap: s.target,
                completed: s.completed,
                failed: s.failed,
                degraded: res.degraded,
                within_bound: s.mean.is_some_and(|g| g <= tolerance),
            });
        }
    }
    let max_gap = rows.iter().filter_map(|r| r.mean_gap).reduce(f64::max);
    let all_within_bound = rows.iter().all(|r| r.within_bound);
    Ok(FeasibilitySummary {
        tolerance,
        rows,
        max_gap,
        all_within_bound,
        results,
    })
}

/// The five standard regimes of the feasibility sweep, all with unit
/// innovation variances:
///
/// * `standard`: `d_x = d_y = 0.4`, `sigma_13 = 0.5`;
/// * `anti-cointegration`: `d = (0.1, 0.4, 0.1, 0.4)`, unit weights,
///   only `sigma_13 = 0.9`;
/// * `independent`: `d_x = d_y = 0.4`, uncorrelated;
/// * `heavy-tail`: `standard` with Student-t(3) innovations;
/// * `short-memory`: `d_x = d_y = 0`, `sigma_13 = 0.5`.
pub fn feasibility_regimes() -> Vec<(&'static str, McArfimaSpec)> {
    let standard = McArfimaSpec::correlated_pair(0.4, 0.4, 0.5);
    let mut anti = McArfimaSpec {
        alpha: 1.0,
        beta: 1.0,
        gamma: 1.0,
        delta: 1.0,
        d: [0.1, 0.4, 0.1, 0.4],
        ..McArfimaSpec::default()
    };
    anti.set_cov(0, 2, 0.9);
    let heavy = McArfimaSpec {
        innovation_dist: InnovationDist::StudentT { dof: 3.0 },
        ..standard.clone()
    };
    vec![
        ("standard", standard),
        ("anti-cointegration", anti),
        ("independent", McArfimaSpec::correlated_pair(0.4, 0.4, 0.0)),
        ("heavy-tail", heavy),
        ("short-memory", McArfimaSpec::correlated_pair(0.0, 0.0, 0.5)),
    ]
}

/// [`feasibility_regimes`] as DFA + DCCA experiments sharing one seed.
pub fn feasibility_suite(
    length: usize,
    replications: usize,
    master_seed: u64,
) -> Vec<ExperimentConfig> {
    feasibility_regimes()
        .into_iter()
        .map(|(name, spec)| ExperimentConfig {
            name: name.to_string(),
            spec,
            lengths: vec![length],
            replications,
            estimators: vec![Estimator::Dfa, Estimator::Dcca],
            master_seed,
            settings: AnalysisSettings::default(),
        })
        .collect()
}
