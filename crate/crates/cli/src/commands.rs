use std::path::Path;

use plcc::arfima::generate_mc_arfima;
use plcc::montecarlo::{
    feasibility_summary, run_experiment, run_experiment_with_threads, ExperimentResult, Metric,
};
use serde_json::{json, Map, Value};

use crate::analyze::{self, AnalyzeOptions};
use crate::config::{GenerateConfig, McConfig};
use crate::data::{render_series, Table};
use crate::error::{CliError, CliResult};
use crate::manifest::{
    to_json, write_with_manifest, Analysis, AnalyzeParams, GenerateParams, Manifest, McParams, Run,
};

pub fn generate(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    length: Option<usize>,
) -> CliResult<()> {
    let cfg = GenerateConfig::load(config, seed, length)?;
    run_generate(
        &GenerateParams {
            length: cfg.length,
            seed: cfg.seed,
            spec: cfg.spec,
        },
        out,
    )
}

fn run_generate(p: &GenerateParams, out: &Path) -> CliResult<()> {
    let pair = generate_mc_arfima(&p.spec, p.length, p.seed)?;
    if pair.truncation_warning {
        eprintln!(
            "warning: truncation {} is shorter than the series length {}",
            p.spec.resolved_truncation(p.length),
            p.length
        );
    }
    let univariate = p.spec.gamma == 0.0 && p.spec.delta == 0.0;
    let y = (!univariate).then(|| pair.y.values());
    let csv = render_series(pair.x.values(), y);
    write_with_manifest(out, &csv, &Manifest::new(Run::Generate(p.clone())))
}

pub fn analyze(
    analysis: Analysis,
    input: &Path,
    out: &Path,
    opts: &AnalyzeOptions,
) -> CliResult<()> {
    let (params, table) = analyze::resolve(analysis, input, opts)?;
    finish_analyze(&params, &table, out)
}

fn finish_analyze(p: &AnalyzeParams, table: &Table, out: &Path) -> CliResult<()> {
    let (doc, failure) = analyze::execute(p, table)?;
    write_with_manifest(out, &to_json(&doc), &Manifest::new(Run::Analyze(p.clone())))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn replay_analyze(p: &AnalyzeParams, out: &Path) -> CliResult<()> {
    let (table, sha256) = analyze::load_table(&p.input.path)?;
    if sha256 != p.input.sha256 {
        return Err(CliError::Usage(format!(
            "{} changed since the manifest was written (sha256 {sha256}, expected {})",
            p.input.path.display(),
            p.input.sha256
        )));
    }
    finish_analyze(p, &table, out)
}

pub fn mc(
    config: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    tol: Option<f64>,
    threads: Option<usize>,
) -> CliResult<()> {
    let cfg = McConfig::load(config, seed, tol)?;
    run_mc(
        &McParams {
            tolerance: cfg.tolerance,
            experiments: cfg.experiments,
        },
        out_dir,
        threads,
    )
}

fn metric_row(r: &ExperimentResult, length: usize) -> Value {
    let mut row = Map::new();
    row.insert("name".into(), json!(r.config.name));
    row.insert("length".into(), json!(length));
    for s in r.summaries.iter().filter(|s| s.length == length) {
        row.insert(
            s.metric.name().into(),
            json!({
                "mean": s.mean,
                "std_dev": s.std_dev,
                "bias": s.bias,
                "target": s.target,
                "completed": s.completed,
                "failed": s.failed,
            }),
        );
    }
    row.insert("degraded".into(), json!(r.degraded));
    Value::Object(row)
}

fn run_mc(p: &McParams, out_dir: &Path, threads: Option<usize>) -> CliResult<()> {
    let manifest = Manifest::new(Run::Mc(p.clone()));
    let mut results = Vec::with_capacity(p.experiments.len());
    for e in &p.experiments {
        let r = match threads {
            Some(t) => run_experiment_with_threads(e, t)?,
            None => run_experiment(e)?,
        };
        if r.degraded {
            eprintln!(
                "warning: experiment '{}' is degraded (over 20% failed replications)",
                e.name
            );
        }
        let doc = json!({ "experiment": r, "manifest": manifest });
        write_with_manifest(
            &out_dir.join(format!("{}.json", e.name)),
            &to_json(&doc),
            &manifest,
        )?;
        results.push(r);
    }

    let rows: Vec<Value> = results
        .iter()
        .flat_map(|r| r.config.lengths.iter().map(move |&t| metric_row(r, t)))
        .collect();
    let has_gap = results
        .iter()
        .all(|r| r.summaries.iter().any(|s| s.metric == Metric::Gap));
    let feasibility = if has_gap {
        let s = feasibility_summary(results, p.tolerance)?;
        json!({
            "tolerance": s.tolerance,
            "max_gap": s.max_gap,
            "all_within_bound": s.all_within_bound,
            "rows": s.rows,
        })
    } else {
        Value::Null
    };
    let summary = json!({
        "experiments": rows,
        "feasibility": feasibility,
        "manifest": manifest,
    });
    write_with_manifest(&out_dir.join("summary.json"), &to_json(&summary), &manifest)
}

/// Re-runs whatever produced `manifest`, writing to `target` (a file for
/// generate and analyze, a directory for mc).
pub fn replay(manifest: &Path, target: &Path, threads: Option<usize>) -> CliResult<()> {
    let m = Manifest::read(manifest)?;
    match &m.run {
        Run::Generate(p) => run_generate(p, target),
        Run::Analyze(p) => replay_analyze(p, target),
        Run::Mc(p) => run_mc(p, target, threads),
    }
}
