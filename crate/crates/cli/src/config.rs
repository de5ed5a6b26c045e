//! Flat `key = value` config files with dotted keys.
//!
//! ```text
//! # bivariate generator
//! length = 4096
//! seed = 42
//! spec.d1 = 0.4
//! spec.d3 = 0.2
//! sigma.13 = 0.5
//! ```
//!
//! Monte Carlo files add `mc.*` defaults and `experiment.<name>.*` sections.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use plcc::arfima::{InnovationDist, McArfimaSpec};
use plcc::montecarlo::{feasibility_regimes, AnalysisSettings, Estimator, ExperimentConfig};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides every seed in a config.
pub const SEED_ENV: &str = "PLCC_SEED";

#[derive(Debug)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
    used: BTreeSet<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "line {line_no}: expected 'key = value', got '{line}'"
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(CliError::Usage(format!(
                    "line {line_no}: malformed key '{key}'"
                )));
            }
            if value.is_empty() {
                return Err(CliError::Usage(format!(
                    "line {line_no}: field '{key}' has no value"
                )));
            }
            if let Some((_, prev)) = entries.insert(key.clone(), (value, line_no)) {
                return Err(CliError::Usage(format!(
                    "line {line_no}: field '{key}' already set on line {prev}"
                )));
            }
        }
        Ok(Self {
            entries,
            used: BTreeSet::new(),
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        let hit = self.entries.get(key).cloned();
        if hit.is_some() {
            self.used.insert(key.to_string());
        }
        hit
    }

    pub fn get<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                CliError::Usage(format!(
                    "line {line}: field '{key}': cannot parse '{v}' as {}",
                    short_type_name::<T>()
                ))
            }),
        }
    }

    pub fn get_list<T: FromStr>(&mut self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|p| {
                    p.trim().parse().map_err(|_| {
                        CliError::Usage(format!(
                            "line {line}: field '{key}': cannot parse '{}' as {}",
                            p.trim(),
                            short_type_name::<T>()
                        ))
                    })
                })
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    /// Distinct `<name>` values of `experiment.<name>.*` keys, in sorted order.
    fn experiment_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .entries
            .keys()
            .filter_map(|k| k.strip_prefix("experiment."))
            .filter_map(|k| k.split_once('.').map(|(n, _)| n.to_string()))
            .collect();
        names.dedup();
        names
    }

    /// Fails on any key nobody asked for.
    pub fn finish(&self) -> CliResult<()> {
        for (key, (_, line)) in &self.entries {
            if !self.used.contains(key) {
                return Err(CliError::Usage(format!(
                    "line {line}: unknown field '{key}'"
                )));
            }
        }
        Ok(())
    }
}

fn short_type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full.rsplit("::").next().unwrap_or(full) {
        "Estimator" => "an estimator name",
        "bool" => "true/false",
        "f64" => "a number",
        other if other.starts_with('u') => "a non-negative integer",
        _ => "a value",
    }
}

fn seed_override() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            CliError::Usage(format!("{SEED_ENV}='{v}' is not a non-negative integer"))
        }),
        Err(_) => Ok(None),
    }
}

/// Reads a generator spec from `<prefix>spec.*` and `<prefix>sigma.ij` keys.
fn read_spec(cfg: &mut ConfigFile, prefix: &str) -> CliResult<McArfimaSpec> {
    let mut spec = McArfimaSpec::default();
    let k = |s: &str| format!("{prefix}{s}");
    for (name, slot) in [
        ("alpha", &mut spec.alpha),
        ("beta", &mut spec.beta),
        ("gamma", &mut spec.gamma),
        ("delta", &mut spec.delta),
    ] {
        if let Some(v) = cfg.get(&k(&format!("spec.{name}")))? {
            *slot = v;
        }
    }
    for i in 0..4 {
        if let Some(v) = cfg.get(&k(&format!("spec.d{}", i + 1)))? {
            spec.d[i] = v;
        }
    }
    for i in 0..4 {
        for j in i..4 {
            let key = k(&format!("sigma.{}{}", i + 1, j + 1));
            let mirror = k(&format!("sigma.{}{}", j + 1, i + 1));
            let a: Option<f64> = cfg.get(&key)?;
            let b: Option<f64> = if i == j { None } else { cfg.get(&mirror)? };
            match (a, b) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(format!(
                        "both '{key}' and '{mirror}' are set"
                    )));
                }
                (Some(v), None) | (None, Some(v)) => spec.set_cov(i, j, v),
                (None, None) => {}
            }
        }
    }
    let dist: Option<String> = cfg.get(&k("spec.innovation"))?;
    let dof: Option<f64> = cfg.get(&k("spec.dof"))?;
    spec.innovation_dist = match (dist.as_deref(), dof) {
        (None | Some("gaussian"), None) => InnovationDist::Gaussian,
        (None | Some("gaussian"), Some(_)) => {
            return Err(CliError::Usage(format!(
                "'{}' needs {} = student-t",
                k("spec.dof"),
                k("spec.innovation")
            )))
        }
        (Some("student-t"), Some(dof)) => InnovationDist::StudentT { dof },
        (Some("student-t"), None) => {
            return Err(CliError::Usage(format!(
                "student-t innovations need '{}'",
                k("spec.dof")
            )))
        }
        (Some(other), _) => {
            return Err(CliError::Usage(format!(
                "field '{}': unknown distribution '{other}' (gaussian, student-t)",
                k("spec.innovation")
            )))
        }
    };
    spec.truncation = cfg.get(&k("spec.truncation"))?;
    spec.burn_in = cfg.get(&k("spec.burn_in"))?;
    spec.validate().map_err(|e| {
        let scope = if prefix.is_empty() {
            String::new()
        } else {
            format!(" in '{}'", prefix.trim_end_matches('.'))
        };
        CliError::Usage(format!("invalid spec{scope}: {e}"))
    })?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub spec: McArfimaSpec,
    pub length: usize,
    pub seed: u64,
}

pub const DEFAULT_LENGTH: usize = 1024;

impl GenerateConfig {
    /// Seed precedence: `seed_flag`, then `PLCC_SEED`, then the file.
    pub fn load(
        path: &Path,
        seed_flag: Option<u64>,
        length_flag: Option<usize>,
    ) -> CliResult<Self> {
        let mut cfg = ConfigFile::read(path)?;
        let spec = read_spec(&mut cfg, "")?;
        let length = cfg.get("length")?.unwrap_or(DEFAULT_LENGTH);
        let seed = cfg.get("seed")?.unwrap_or(0);
        cfg.finish()?;
        let length = length_flag.unwrap_or(length);
        if length < plcc::arfima::MIN_LENGTH {
            return Err(CliError::Usage(format!(
                "length {length} is below the minimum {}",
                plcc::arfima::MIN_LENGTH
            )));
        }
        let seed = seed_flag.or(seed_override()?).unwrap_or(seed);
        Ok(Self {
            spec: spec.resolved(length),
            length,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub experiments: Vec<ExperimentConfig>,
    pub tolerance: f64,
}

const DEFAULT_MC_LENGTHS: [usize; 1] = [4096];
const DEFAULT_REPLICATIONS: usize = 100;

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl McConfig {
    pub fn load(path: &Path, seed_flag: Option<u64>, tol_flag: Option<f64>) -> CliResult<Self> {
        let mut cfg = ConfigFile::read(path)?;
        let lengths: Vec<usize> = cfg
            .get_list("mc.lengths")?
            .unwrap_or(DEFAULT_MC_LENGTHS.to_vec());
        let replications = cfg.get("mc.replications")?.unwrap_or(DEFAULT_REPLICATIONS);
        let estimators: Vec<Estimator> = cfg
            .get_list("mc.estimators")?
            .unwrap_or(vec![Estimator::Dfa, Estimator::Dcca]);
        let seed: u64 = cfg.get("mc.seed")?.unwrap_or(0);
        let mut settings = AnalysisSettings::default();
        if let Some(o) = cfg.get("mc.order")? {
            settings.order = o;
        }
        settings.n_freqs = cfg.get("mc.nfreqs")?;
        if let Some(b) = cfg.get("mc.bandwidth")? {
            settings.bandwidth = b;
        }
        let tolerance = cfg
            .get("mc.tolerance")?
            .unwrap_or(plcc::coherency::DEFAULT_TOLERANCE);
        let suite: Option<String> = cfg.get("mc.suite")?;
        let seed = seed_flag.or(seed_override()?).unwrap_or(seed);
        let seed_forced = seed_flag.is_some() || std::env::var(SEED_ENV).is_ok();

        let base = ExperimentConfig {
            name: String::new(),
            spec: McArfimaSpec::default(),
            lengths,
            replications,
            estimators,
            master_seed: seed,
            settings,
        };
        let mut experiments = Vec::new();
        match suite.as_deref() {
            None => {}
            Some("feasibility") => {
                for (name, spec) in feasibility_regimes() {
                    experiments.push(ExperimentConfig {
                        name: name.to_string(),
                        spec,
                        ..base.clone()
                    });
                }
            }
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "field 'mc.suite': unknown suite '{other}' (feasibility)"
                )))
            }
        }
        for name in cfg.experiment_names() {
            if !valid_name(&name) {
                return Err(CliError::Usage(format!(
                    "experiment name '{name}' may only contain letters, digits, '-' and '_'"
                )));
            }
            let prefix = format!("experiment.{name}.");
            let spec = read_spec(&mut cfg, &prefix)?;
            let mut e = ExperimentConfig {
                name: name.clone(),
                spec,
                ..base.clone()
            };
            if let Some(v) = cfg.get_list(&format!("{prefix}lengths"))? {
                e.lengths = v;
            }
            if let Some(v) = cfg.get(&format!("{prefix}replications"))? {
                e.replications = v;
            }
            if let Some(v) = cfg.get_list(&format!("{prefix}estimators"))? {
                e.estimators = v;
            }
            if let Some(v) = cfg.get(&format!("{prefix}seed"))? {
                if !seed_forced {
                    e.master_seed = v;
                }
            }
            experiments.push(e);
        }
        if experiments.is_empty() {
            let spec = read_spec(&mut cfg, "")?;
            experiments.push(ExperimentConfig {
                name: "default".into(),
                spec,
                ..base
            });
        }
        cfg.finish()?;

        let mut seen = BTreeSet::new();
        for e in &experiments {
            if !seen.insert(e.name.clone()) {
                return Err(CliError::Usage(format!(
                    "experiment '{}' defined twice",
                    e.name
                )));
            }
            e.validate()
                .map_err(|err| CliError::Usage(format!("experiment '{}': {err}", e.name)))?;
        }
        let tolerance = tol_flag.unwrap_or(tolerance);
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(CliError::Usage(format!(
                "tolerance must be non-negative, got {tolerance}"
            )));
        }
        Ok(Self {
            experiments,
            tolerance,
        })
    }
}
