//! Run manifests: everything needed to reproduce an output file.
//!
//! Timestamps, output paths and thread counts are left out on purpose so a
//! replay writes byte-identical files.

use std::path::{Path, PathBuf};

use plcc::arfima::McArfimaSpec;
use plcc::detrended::DetrendConfig;
use plcc::montecarlo::ExperimentConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::write_file;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "plcc";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub run: Run,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Run {
    Generate(GenerateParams),
    Analyze(AnalyzeParams),
    Mc(McParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateParams {
    pub length: usize,
    pub seed: u64,
    /// Spec with burn-in and truncation filled in.
    pub spec: McArfimaSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Dfa,
    Dcca,
    Rho,
    Beta,
    Coherency,
    Hrho,
    Report,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Dfa => "dfa",
            Analysis::Dcca => "dcca",
            Analysis::Rho => "rho",
            Analysis::Beta => "beta",
            Analysis::Coherency => "coherency",
            Analysis::Hrho => "hrho",
            Analysis::Report => "report",
        }
    }

    pub fn value_columns(&self) -> usize {
        if *self == Analysis::Dfa {
            1
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HRhoMethod {
    /// Smoothed squared coherency against frequency.
    Freq,
    /// Squared `rho_DCCA` against scale.
    Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeParams {
    pub analysis: Analysis,
    pub input: InputDigest,
    pub min_rows: usize,
    pub detrend: DetrendConfig,
    pub n_freqs: usize,
    pub bandwidth: usize,
    pub tolerance: f64,
    pub method: HRhoMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub tolerance: f64,
    pub experiments: Vec<ExperimentConfig>,
}

impl Manifest {
    pub fn new(run: Run) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            run,
        }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("{}: not a valid manifest: {e}", path.display()))
        })?;
        if m.tool != TOOL {
            return Err(CliError::Usage(format!(
                "{}: manifest written by '{}'",
                path.display(),
                m.tool
            )));
        }
        Ok(m)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes `contents` to `output` and the manifest next to it.
pub fn write_with_manifest(output: &Path, contents: &str, manifest: &Manifest) -> CliResult<()> {
    write_file(output, contents)?;
    write_file(&sidecar_path(output), &to_json(manifest))
}
