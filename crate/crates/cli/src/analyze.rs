//! `plcc analyze`: one estimator on a CSV file, written as a JSON document.

use std::path::Path;
use std::str::FromStr;

use plcc::coherency::{
    coherency_report, h_rho_from_coherency, h_rho_from_rho, CoherencySettings, HRhoFit,
};
use plcc::detrended::{
    detrended_moments, hurst_from_curve, hxy_from_curve, log_spaced_scales, DetrendConfig,
};
use plcc::spectral::{self, check_nfreqs};
use plcc::{ScalingFit, TimeSeries};
use serde_json::{json, Map, Value};

use crate::data::{parse_csv, Table};
use crate::error::{CliError, CliResult};
use crate::manifest::{
    sha256_hex, Analysis, AnalyzeParams, HRhoMethod, InputDigest, Manifest, Run,
};

pub const DEFAULT_MIN_ROWS: usize = 256;

/// `--scales min:max:count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleRange {
    pub min: usize,
    pub max: usize,
    pub count: usize,
}

impl FromStr for ScaleRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected min:max:count, got '{s}'"));
        };
        let num = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{p}' is not a positive integer"))
        };
        let r = ScaleRange {
            min: num(a)?,
            max: num(b)?,
            count: num(c)?,
        };
        if r.min >= r.max || r.count < 2 {
            return Err(format!("need min < max and count >= 2, got '{s}'"));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub scales: Option<ScaleRange>,
    pub order: usize,
    pub n_freqs: Option<usize>,
    pub bandwidth: usize,
    pub tolerance: f64,
    pub min_rows: usize,
    pub method: HRhoMethod,
}

pub fn load_table(path: &Path) -> CliResult<(Table, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let table = parse_csv(&bytes, &path.display().to_string())?;
    Ok((table, sha256_hex(&bytes)))
}

/// Materialises every default against the input file.
pub fn resolve(
    analysis: Analysis,
    input: &Path,
    opts: &AnalyzeOptions,
) -> CliResult<(AnalyzeParams, Table)> {
    let (table, sha256) = load_table(input)?;
    let rows = table.rows();
    let want = analysis.value_columns();
    if table.columns.len() != want {
        return Err(CliError::Usage(format!(
            "{} needs {want} value column{} after the time column, {} has {}",
            analysis.name(),
            if want == 1 { "" } else { "s" },
            input.display(),
            table.columns.len()
        )));
    }
    if rows < opts.min_rows {
        return Err(CliError::Usage(format!(
            "{} has {rows} rows, fewer than the minimum {} (see --min-rows)",
            input.display(),
            opts.min_rows
        )));
    }
    let detrend = match opts.scales {
        Some(r) => DetrendConfig::new(opts.order, log_spaced_scales(r.min, r.max, r.count)),
        None => DetrendConfig::with_order(rows, opts.order)?,
    };
    let n_freqs = opts
        .n_freqs
        .unwrap_or_else(|| spectral::default_nfreqs(rows));
    let params = AnalyzeParams {
        analysis,
        input: InputDigest {
            path: input.to_path_buf(),
            sha256,
            rows,
        },
        min_rows: opts.min_rows,
        detrend,
        n_freqs,
        bandwidth: opts.bandwidth,
        tolerance: opts.tolerance,
        method: opts.method,
    };
    validate(&params)?;
    Ok((params, table))
}

fn validate(p: &AnalyzeParams) -> CliResult<()> {
    let uses_time = matches!(
        p.analysis,
        Analysis::Dfa | Analysis::Dcca | Analysis::Rho | Analysis::Beta | Analysis::Report
    ) || (p.analysis == Analysis::Hrho && p.method == HRhoMethod::Time);
    let uses_freq = matches!(p.analysis, Analysis::Coherency | Analysis::Report)
        || (p.analysis == Analysis::Hrho && p.method == HRhoMethod::Freq);
    if uses_time {
        p.detrend.validate(p.input.rows)?;
    }
    if uses_freq {
        if p.bandwidth < 3 || p.bandwidth % 2 == 0 {
            return Err(CliError::Usage(format!(
                "--bandwidth must be an odd integer >= 3, got {}",
                p.bandwidth
            )));
        }
        if p.analysis != Analysis::Coherency {
            check_nfreqs(p.n_freqs, p.input.rows)?;
        }
    }
    if !(p.tolerance >= 0.0 && p.tolerance.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol must be non-negative, got {}",
            p.tolerance
        )));
    }
    Ok(())
}

fn fit_json(f: &ScalingFit) -> Value {
    json!({
        "slope": f.slope,
        "intercept": f.intercept,
        "divisor": f.divisor,
        "n_points": f.n_points,
        "range_used": [f.range_used.0, f.range_used.1],
    })
}

fn pairs<X: Into<f64> + Copy>(xs: &[X], ys: &[f64]) -> Vec<[f64; 2]> {
    xs.iter().zip(ys).map(|(&x, &y)| [x.into(), y]).collect()
}

/// Result document under construction.
struct Doc {
    estimate: Option<f64>,
    stderr: Option<f64>,
    r2: Option<f64>,
    scales: Vec<usize>,
    frequencies: Vec<f64>,
    values: Vec<f64>,
    diagnostics: Map<String, Value>,
    plot: Value,
    extra: Map<String, Value>,
}

impl Doc {
    fn new() -> Self {
        Self {
            estimate: None,
            stderr: None,
            r2: None,
            scales: Vec::new(),
            frequencies: Vec::new(),
            values: Vec::new(),
            diagnostics: Map::new(),
            plot: Value::Null,
            extra: Map::new(),
        }
    }

    fn set_fit(&mut self, f: &ScalingFit) {
        self.estimate = Some(f.exponent);
        self.stderr = Some(f.stderr);
        self.r2 = Some(f.r_squared);
        self.diagnostics.insert("fit".into(), fit_json(f));
    }

    fn plot(&mut self, x: &str, y: &str, points: Vec<[f64; 2]>, fit: Option<&ScalingFit>) {
        let line: Vec<[f64; 2]> = match fit {
            Some(f) => points.iter().map(|p| [p[0], f.predict(p[0])]).collect(),
            None => Vec::new(),
        };
        self.plot = json!({ "x": x, "y": y, "points": points, "fit": line });
    }

    fn note_failure(&mut self, channel: &str, e: &plcc::Error) {
        self.diagnostics
            .entry("errors")
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("object")
            .insert(channel.into(), Value::String(e.to_string()));
    }
}

fn hrho_plot(doc: &mut Doc, h: &HRhoFit, x_label: &str, y_label: &str, points: Vec<[f64; 2]>) {
    doc.set_fit(&h.fit);
    doc.diagnostics.insert("dropped".into(), json!(h.dropped));
    doc.plot(x_label, y_label, points, Some(&h.fit));
}

/// Runs the analysis. An estimation failure still yields a document; the
/// error is returned alongside for the exit code.
pub fn execute(p: &AnalyzeParams, table: &Table) -> CliResult<(Value, Option<CliError>)> {
    let x = table.series(0)?;
    let y: Option<TimeSeries> = if table.columns.len() > 1 {
        Some(table.series(1)?)
    } else {
        None
    };
    let y_ref = y.as_ref().unwrap_or(&x);
    let mut doc = Doc::new();
    let mut failure: Option<plcc::Error> = None;

    match p.analysis {
        Analysis::Dfa | Analysis::Dcca | Analysis::Rho | Analysis::Beta => {
            let m = detrended_moments(&x, y_ref, &p.detrend)?;
            doc.scales = m.scales.clone();
            match p.analysis {
                Analysis::Dfa => {
                    let curve = m.dfa_x();
                    doc.values = curve.values.clone();
                    match hurst_from_curve(&curve) {
                        Ok(f) => {
                            doc.set_fit(&f);
                            let scales: Vec<f64> = curve.scales.iter().map(|&s| s as f64).collect();
                            doc.plot("scale", "F2", pairs(&scales, &curve.values), Some(&f));
                        }
                        Err(e) => {
                            doc.note_failure("dfa", &e);
                            failure = Some(e);
                        }
                    }
                }
                Analysis::Dcca => {
                    let curve = m.dcca();
                    doc.values = curve.values.clone();
                    let scales: Vec<f64> = curve.scales.iter().map(|&s| s as f64).collect();
                    let abs: Vec<f64> = curve.values.iter().map(|v| v.abs()).collect();
                    match hxy_from_curve(&curve) {
                        Ok(f) => {
                            doc.set_fit(&f.fit);
                            doc.diagnostics
                                .insert("sign_flips".into(), json!(f.sign_flips));
                            doc.diagnostics
                                .insert("negative_count".into(), json!(f.negative_count));
                            doc.diagnostics.insert("dropped".into(), json!(f.dropped));
                            doc.plot("scale", "|F2_XY|", pairs(&scales, &abs), Some(&f.fit));
                        }
                        Err(e) => {
                            doc.note_failure("dcca", &e);
                            failure = Some(e);
                        }
                    }
                }
                Analysis::Rho => {
                    let r = m.rho()?;
                    doc.values = r.iter().map(|v| v.1).collect();
                    doc.diagnostics
                        .insert("rho_at_max_scale".into(), json!(r.last().map(|v| v.1)));
                    let scales: Vec<f64> = r.iter().map(|v| v.0 as f64).collect();
                    doc.plot(
                        "scale",
                        "rho_DCCA",
                        pairs(&scales, &doc.values.clone()),
                        None,
                    );
                }
                _ => {
                    let b = m.beta()?;
                    doc.values = b.iter().map(|v| v.1).collect();
                    let mut sorted = doc.values.clone();
                    sorted.sort_by(f64::total_cmp);
                    doc.estimate = Some(plcc::montecarlo::quantile_sorted(&sorted, 0.5));
                    doc.diagnostics
                        .insert("estimate_kind".into(), json!("median over scales"));
                    let scales: Vec<f64> = b.iter().map(|v| v.0 as f64).collect();
                    doc.plot(
                        "scale",
                        "beta_DCCA",
                        pairs(&scales, &doc.values.clone()),
                        None,
                    );
                }
            }
        }
        Analysis::Coherency => {
            let k = spectral::coherency(&x, y_ref, p.bandwidth)?;
            doc.frequencies = k.frequencies.clone();
            doc.values = k.squared.clone();
            doc.diagnostics
                .insert("bandwidth".into(), json!(k.bandwidth));
            doc.plot(
                "frequency",
                "squared coherency",
                pairs(&k.frequencies, &k.squared),
                None,
            );
        }
        Analysis::Hrho => match p.method {
            HRhoMethod::Freq => {
                let k = spectral::coherency(&x, y_ref, p.bandwidth)?;
                let n = p.n_freqs;
                doc.frequencies = k.frequencies[..n].to_vec();
                doc.values = k.squared[..n].to_vec();
                match h_rho_from_coherency(&doc.frequencies, &doc.values) {
                    Ok(h) => {
                        let points = pairs(&doc.frequencies, &doc.values)
                            .into_iter()
                            .filter(|p| p[1] > 0.0)
                            .collect();
                        hrho_plot(&mut doc, &h, "frequency", "squared coherency", points);
                    }
                    Err(e) => {
                        doc.note_failure("h_rho_freq", &e);
                        failure = Some(e);
                    }
                }
            }
            HRhoMethod::Time => {
                let r = detrended_moments(&x, y_ref, &p.detrend)?.rho()?;
                doc.scales = r.iter().map(|v| v.0).collect();
                doc.values = r.iter().map(|v| v.1 * v.1).collect();
                match h_rho_from_rho(&r) {
                    Ok(h) => {
                        let scales: Vec<f64> = doc.scales.iter().map(|&s| s as f64).collect();
                        let points = pairs(&scales, &doc.values)
                            .into_iter()
                            .filter(|p| p[1] > 0.0)
                            .collect();
                        hrho_plot(&mut doc, &h, "scale", "squared rho_DCCA", points);
                    }
                    Err(e) => {
                        doc.note_failure("h_rho_time", &e);
                        failure = Some(e);
                    }
                }
            }
        },
        Analysis::Report => {
            let settings = CoherencySettings {
                detrend: p.detrend.clone(),
                n_freqs: p.n_freqs,
                bandwidth: p.bandwidth,
                tolerance: p.tolerance,
            };
            let r = coherency_report(&x, y_ref, &settings)?;
            doc.estimate = r.h_rho_diff;
            doc.scales = r.rho.iter().map(|v| v.0).collect();
            doc.values = r.rho.iter().map(|v| v.1).collect();
            doc.diagnostics
                .insert("estimate_kind".into(), json!("H_xy - (H_x + H_y) / 2"));
            doc.diagnostics.insert("regime".into(), json!(r.regime));
            doc.diagnostics
                .insert("failed_channels".into(), json!(r.failed_channels()));
            let scales: Vec<f64> = doc.scales.iter().map(|&s| s as f64).collect();
            doc.plot(
                "scale",
                "rho_DCCA",
                pairs(&scales, &doc.values.clone()),
                None,
            );
            let failed = r.failed_channels();
            if !failed.is_empty() {
                failure = Some(plcc::Error::EstimationFailed(format!(
                    "channels failed: {}",
                    failed.join(", ")
                )));
            }
            doc.extra.insert(
                "report".into(),
                serde_json::to_value(&r).expect("serialisable"),
            );
        }
    }

    let manifest = Manifest::new(Run::Analyze(p.clone()));
    let mut out = Map::new();
    out.insert("analysis".into(), json!(p.analysis.name()));
    out.insert("rows".into(), json!(p.input.rows));
    out.insert("estimate".into(), json!(doc.estimate));
    out.insert("stderr".into(), json!(doc.stderr));
    out.insert("r2".into(), json!(doc.r2));
    out.insert("scales".into(), json!(doc.scales));
    out.insert("frequencies".into(), json!(doc.frequencies));
    out.insert("values".into(), json!(doc.values));
    out.insert("diagnostics".into(), Value::Object(doc.diagnostics));
    out.insert("plot".into(), doc.plot);
    out.insert(
        "manifest".into(),
        serde_json::to_value(&manifest).expect("serialisable"),
    );
    out.extend(doc.extra);
    Ok((Value::Object(out), failure.map(CliError::from)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_range_parsing() {
        assert_eq!(
            "12:400:15".parse::<ScaleRange>().unwrap(),
            ScaleRange {
                min: 12,
                max: 400,
                count: 15
            }
        );
        assert!("12:400".parse::<ScaleRange>().is_err());
        assert!("400:12:5".parse::<ScaleRange>().is_err());
        assert!("a:b:c".parse::<ScaleRange>().is_err());
    }
}
