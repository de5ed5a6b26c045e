//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Every Monte Carlo criterion uses master seed 1 and the library defaults
//! (DFA1, twenty log-spaced scales up to T/5, floor(sqrt(T)) frequencies,
//! Daniell bandwidth 11).

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use plcc::arfima::{generate_arfima, generate_mc_arfima, InnovationDist, McArfimaSpec};
use plcc::coherency::{classify, h_rho_from_coherency, h_rho_from_rho, Regime, DEFAULT_TOLERANCE};
use plcc::detrended::{beta_dcca, dcca_fluctuation, dfa_fluctuation, rho_dcca, DetrendConfig};
use plcc::montecarlo::{
    feasibility_regimes, feasibility_suite, feasibility_sweep, run_experiment, AnalysisSettings,
    Estimator, ExperimentConfig, ExperimentResult, Metric,
};
use plcc::spectral::{coherency, fourier_frequencies};
use plcc::{fit_loglog, TimeSeries};

const MASTER_SEED: u64 = 1;
const REPS: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn experiment(
    name: &str,
    spec: McArfimaSpec,
    length: usize,
    estimators: &[Estimator],
) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        spec,
        lengths: vec![length],
        replications: REPS,
        estimators: estimators.to_vec(),
        master_seed: MASTER_SEED,
        settings: AnalysisSettings::default(),
    }
}

fn mean(r: &ExperimentResult, m: Metric) -> f64 {
    r.mean(m, r.config.lengths[0]).unwrap_or(f64::NAN)
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn univariate_recovery() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [0.0, 0.2, 0.4] {
        let cfg = experiment(
            "univariate",
            McArfimaSpec::correlated_pair(d, d, 0.0),
            1 << 14,
            &[Estimator::Dfa, Estimator::Logperiodogram],
        );
        let r = run_experiment(&cfg).expect("valid config");
        let (dfa, lp) = (mean(&r, Metric::Hx), mean(&r, Metric::HxFreq));
        let ok = (dfa - (d + 0.5)).abs() <= 0.05 && (lp - (d + 0.5)).abs() <= 0.08;
        pass &= ok;
        parts.push(format!("d={d}: dfa {dfa:.4} logper {lp:.4}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    outcome(pass, format!("{} ({:.1?})", parts.join(", "), elapsed))
}

fn unrestricted_spec() -> McArfimaSpec {
    let mut spec = McArfimaSpec {
        alpha: 1.0,
        beta: 1.0,
        gamma: 1.0,
        delta: 1.0,
        d: [0.4, 0.1, 0.3, 0.2],
        ..McArfimaSpec::default()
    };
    for i in 0..4 {
        for j in (i + 1)..4 {
            spec.set_cov(i, j, 0.5);
        }
    }
    spec
}

fn average_regime() -> Outcome {
    let cfg = experiment(
        "unrestricted",
        unrestricted_spec(),
        1 << 14,
        &[Estimator::Dfa, Estimator::Dcca],
    );
    let r = run_experiment(&cfg).expect("valid config");
    let (hx, hy, hxy) = (
        mean(&r, Metric::Hx),
        mean(&r, Metric::Hy),
        mean(&r, Metric::Hxy),
    );
    let avg = 0.5 * (hx + hy);
    outcome(
        (hxy - avg).abs() <= 0.08,
        format!("hxy {hxy:.4} vs (hx+hy)/2 {avg:.4} (hx {hx:.4}, hy {hy:.4})"),
    )
}

fn anti_run() -> ExperimentResult {
    let spec = feasibility_regimes()
        .into_iter()
        .find(|r| r.0 == "anti-cointegration")
        .expect("regime")
        .1;
    let cfg = experiment(
        "anti-cointegration",
        spec,
        1 << 14,
        &[
            Estimator::Dfa,
            Estimator::Dcca,
            Estimator::HRhoTime,
            Estimator::HRhoFreq,
        ],
    );
    run_experiment(&cfg).expect("valid config")
}

fn anti_cointegration(r: &ExperimentResult) -> Outcome {
    let hxy = mean(r, Metric::Hxy);
    let channels = [
        ("freq", mean(r, Metric::HRhoFreq)),
        ("time", mean(r, Metric::HRhoTime)),
        ("diff", mean(r, Metric::Gap)),
    ];
    let anti = r
        .records
        .iter()
        .filter(|rec| {
            match (
                rec.get(Metric::Hx),
                rec.get(Metric::Hy),
                rec.get(Metric::Hxy),
            ) {
                (Some(a), Some(b), Some(c)) => {
                    classify(a, b, c, DEFAULT_TOLERANCE) == Regime::AntiCointegration
                }
                _ => false,
            }
        })
        .count();
    let hxy_ok = in_range(hxy, 0.50, 0.70);
    let channels_ok = channels.iter().all(|c| in_range(c.1, -0.45, -0.15));
    let regime_ok = anti >= 90;
    let ch: Vec<String> = channels
        .iter()
        .map(|c| format!("{} {:.4}", c.0, c.1))
        .collect();
    outcome(
        hxy_ok && channels_ok && regime_ok,
        format!(
            "hxy {hxy:.4} [{}], h_rho {} [{}], anti-cointegration {anti}/{REPS} [{}]",
            verdict(hxy_ok),
            ch.join(" "),
            verdict(channels_ok),
            verdict(regime_ok)
        ),
    )
}

fn feasibility_bound() -> Outcome {
    let start = Instant::now();
    let s = feasibility_sweep(
        &feasibility_suite(1 << 14, REPS, MASTER_SEED),
        DEFAULT_TOLERANCE,
    )
    .expect("valid suite");
    let elapsed = start.elapsed();
    let rows: Vec<String> = s
        .rows
        .iter()
        .map(|r| format!("{} {:+.4}", r.name, r.mean_gap.unwrap_or(f64::NAN)))
        .collect();
    outcome(
        s.all_within_bound && elapsed < Duration::from_secs(900),
        format!("gaps: {} ({:.1?})", rows.join(", "), elapsed),
    )
}

fn heavy_tails() -> Outcome {
    let gauss = McArfimaSpec::correlated_pair(0.4, 0.4, 0.5);
    let heavy = McArfimaSpec {
        innovation_dist: InnovationDist::StudentT { dof: 3.0 },
        ..gauss.clone()
    };
    let est = [Estimator::Dcca, Estimator::Logcross];
    let g = run_experiment(&experiment("gaussian", gauss, 1 << 13, &est)).expect("valid config");
    let t = run_experiment(&experiment("student-t", heavy, 1 << 13, &est)).expect("valid config");
    let dcca = mean(&t, Metric::Hxy) - mean(&g, Metric::Hxy);
    let freq = mean(&t, Metric::HxyFreq) - mean(&g, Metric::HxyFreq);
    let dcca_ok = dcca > 0.0;
    let freq_ok = freq.abs() < 0.08;
    outcome(
        dcca_ok && freq_ok,
        format!(
            "dcca shift {dcca:+.4} [{}], logcross shift {freq:+.4} [{}]",
            verdict(dcca_ok),
            verdict(freq_ok)
        ),
    )
}

/// Pairs with random memory and correlation, including anti-correlation.
fn random_pair(i: u64) -> (TimeSeries, TimeSeries) {
    let dx = -0.4 + 0.8 * ((i * 37) % 100) as f64 / 100.0;
    let dy = -0.4 + 0.8 * ((i * 61) % 100) as f64 / 100.0;
    let c = -0.95 + 1.9 * ((i * 17) % 100) as f64 / 99.0;
    let p =
        generate_mc_arfima(&McArfimaSpec::correlated_pair(dx, dy, c), 512, i).expect("valid spec");
    (p.x, p.y)
}

fn identities() -> Outcome {
    let mut failures = Vec::new();
    let cfg = DetrendConfig::default_for(4096).unwrap();
    for seed in 0..5 {
        let x = generate_arfima(0.1 * seed as f64, 4096, seed, InnovationDist::Gaussian).unwrap();
        if dcca_fluctuation(&x, &x, &cfg).unwrap().values
            != dfa_fluctuation(&x, &cfg).unwrap().values
        {
            failures.push(format!("dcca(x,x) != dfa(x) for seed {seed}"));
        }
        if rho_dcca(&x, &x, &cfg).unwrap().iter().any(|r| r.1 != 1.0) {
            failures.push(format!("rho(x,x) != 1 for seed {seed}"));
        }
        // power-of-two factors scale every intermediate exactly
        for c in [2.0, -0.5, 4.0] {
            let y = x.affine(c, 0.0).unwrap();
            if beta_dcca(&x, &y, &cfg).unwrap().iter().any(|b| b.1 != c) {
                failures.push(format!("beta(x, {c}x) != {c} for seed {seed}"));
            }
            let back = beta_dcca(&y, &x, &cfg).unwrap();
            if back.iter().any(|b| b.1 != 1.0 / c) {
                failures.push(format!("beta({c}x, x) != 1/{c} for seed {seed}"));
            }
        }
    }
    let small = DetrendConfig::default_for(512).unwrap();
    let mut rho_bad = 0;
    let mut k_bad = 0;
    for i in 0..1000 {
        let (x, y) = random_pair(i);
        rho_bad += rho_dcca(&x, &y, &small)
            .unwrap()
            .iter()
            .filter(|r| !(-1.0..=1.0).contains(&r.1))
            .count();
        k_bad += coherency(&x, &y, 11)
            .unwrap()
            .squared
            .iter()
            .filter(|k| !(0.0..=1.0).contains(*k))
            .count();
    }
    if rho_bad > 0 {
        failures.push(format!("{rho_bad} rho values outside [-1, 1]"));
    }
    if k_bad > 0 {
        failures.push(format!("{k_bad} squared coherencies outside [0, 1]"));
    }
    let mut worst: f64 = 0.0;
    for (k, divisor) in [
        (1.6, 2.0),
        (0.4, 2.0),
        (-0.6, -2.0),
        (1.2, -4.0),
        (-1.2, 4.0),
    ] {
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| 10.0 * 1.3f64.powi(i))
            .map(|s| (s, 0.7 * s.powf(k)))
            .collect();
        let f = fit_loglog(&pts, divisor).unwrap();
        worst = worst.max((f.exponent - k / divisor).abs());
    }
    if worst > 1e-9 {
        failures.push(format!("fit_loglog error {worst:e}"));
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("identities exact, 1000 random pairs in bounds, fit error {worst:.1e}")
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn domain_agreement(anti: &ExperimentResult) -> Outcome {
    let h = -0.3;
    let w = fourier_frequencies(4096);
    let k2: Vec<f64> = w[..64].iter().map(|&v| 0.8 * v.powf(-4.0 * h)).collect();
    let scales = DetrendConfig::default_for(4096).unwrap().scales;
    let rho: Vec<(usize, f64)> = scales
        .iter()
        .map(|&s| (s, (0.5 * (s as f64).powf(4.0 * h)).sqrt()))
        .collect();
    let hf = h_rho_from_coherency(&w[..64], &k2).unwrap().fit.exponent;
    let ht = h_rho_from_rho(&rho).unwrap().fit.exponent;
    let exact_ok = (hf - ht).abs() <= 1e-9 && (hf - h).abs() <= 1e-9;
    let means = [
        mean(anti, Metric::HRhoFreq),
        mean(anti, Metric::HRhoTime),
        mean(anti, Metric::Gap),
    ];
    let spread = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - means.iter().cloned().fold(f64::INFINITY, f64::min);
    let mc_ok = spread <= 0.15;
    outcome(
        exact_ok && mc_ok,
        format!(
            "synthetic |freq - time| {:.1e} [{}], MC channel spread {spread:.4} (freq {:.4} time {:.4} diff {:.4}) [{}]",
            (hf - ht).abs(),
            verdict(exact_ok),
            means[0],
            means[1],
            means[2],
            verdict(mc_ok)
        ),
    )
}

fn beta_recovery() -> Outcome {
    let n = 1 << 14;
    let cfg = DetrendConfig::default_for(n).unwrap();
    let third = cfg.scales.len() / 3;
    let mut medians = Vec::new();
    for seed in 0..10u64 {
        let x = generate_arfima(0.3, n, 2 * seed, InnovationDist::Gaussian).unwrap();
        let e = generate_arfima(0.0, n, 2 * seed + 1, InnovationDist::Gaussian).unwrap();
        let y: Vec<f64> = x
            .values()
            .iter()
            .zip(e.values())
            .map(|(a, b)| 2.0 * a + b)
            .collect();
        let b = beta_dcca(&x, &TimeSeries::new(y).unwrap(), &cfg).unwrap();
        let mut mid: Vec<f64> = b[third..b.len() - third].iter().map(|v| v.1).collect();
        mid.sort_by(f64::total_cmp);
        medians.push(plcc::montecarlo::quantile_sorted(&mid, 0.5));
    }
    let lo = medians.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        lo >= 1.8 && hi <= 2.2,
        format!("median mid-scale beta over 10 seeds in [{lo:.4}, {hi:.4}]"),
    )
}

fn plcc_cmd(args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plcc"));
    c.args(args).env_remove("PLCC_SEED");
    if let Some(t) = threads {
        c.args(["--threads", t]);
    }
    c.output().expect("plcc runs")
}

fn same_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for n in &names {
        let x = std::fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(n)).map_err(|e| format!("{}: {e}", n.to_string_lossy()))?;
        if x != y {
            return Err(format!("{} differs", n.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |s: &str| d.join(s).to_string_lossy().into_owned();
    let mut problems = Vec::new();
    let mut checked = 0;
    let mut check = |label: &str, a: &str, b: &str| {
        let same = std::fs::read(a)
            .ok()
            .is_some_and(|x| std::fs::read(b).ok() == Some(x));
        checked += 1;
        if !same {
            problems.push(label.to_string());
        }
    };

    std::fs::write(
        d.join("pair.conf"),
        "length = 2048\nseed = 42\nspec.d1 = 0.4\nspec.d3 = 0.2\nsigma.13 = 0.6\n",
    )
    .unwrap();
    let g = plcc_cmd(&["generate", &p("pair.conf"), &p("pair.csv")], None);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    plcc_cmd(
        &["replay", &p("pair.csv.manifest.json"), &p("pair2.csv")],
        None,
    );
    check("generate csv", &p("pair.csv"), &p("pair2.csv"));
    check(
        "generate manifest",
        &p("pair.csv.manifest.json"),
        &p("pair2.csv.manifest.json"),
    );

    for a in ["dfa", "dcca", "rho", "beta", "coherency", "hrho", "report"] {
        let input = if a == "dfa" {
            p("x.csv")
        } else {
            p("pair.csv")
        };
        if a == "dfa" {
            let text = std::fs::read_to_string(p("pair.csv")).unwrap();
            let x: String = text
                .lines()
                .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
                .collect();
            std::fs::write(&input, x).unwrap();
        }
        let out = p(&format!("{a}.json"));
        plcc_cmd(&["analyze", a, &input, &out], None);
        plcc_cmd(
            &[
                "replay",
                &format!("{out}.manifest.json"),
                &p(&format!("{a}2.json")),
            ],
            None,
        );
        check(a, &out, &p(&format!("{a}2.json")));
        check(
            &format!("{a} manifest"),
            &format!("{out}.manifest.json"),
            &p(&format!("{a}2.json.manifest.json")),
        );
    }

    std::fs::write(
        d.join("mc.conf"),
        "mc.suite = feasibility\nmc.lengths = 1024, 2048\nmc.replications = 8\nmc.seed = 3\n\
         mc.estimators = dfa, dcca, logperiodogram, logcross, rho, beta, h_rho_time, h_rho_freq\n",
    )
    .unwrap();
    let m = plcc_cmd(&["mc", &p("mc.conf"), &p("mc1")], Some("1"));
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    plcc_cmd(
        &["replay", &p("mc1/summary.json.manifest.json"), &p("mc4")],
        Some("4"),
    );
    plcc_cmd(
        &["replay", &p("mc1/summary.json.manifest.json"), &p("mcd")],
        None,
    );
    for other in ["mc4", "mcd"] {
        checked += 1;
        match same_files(&d.join("mc1"), &d.join(other)) {
            Ok(n) if n == 12 => {}
            Ok(n) => problems.push(format!("{other}: {n} files")),
            Err(e) => problems.push(format!("{other}: {e}")),
        }
    }
    let pass = problems.is_empty();
    outcome(
        pass,
        if pass {
            format!("{checked} replays byte-identical (mc at 1, 4 and default threads)")
        } else {
            format!("not reproduced: {}", problems.join(", "))
        },
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "out"
    }
}

fn main() {
    // `cargo test -- --list` and filters pass arguments; this target has
    // no individual tests to list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut all = true;
    let mut report = |id: u32, name: &str, o: Outcome| {
        all &= o.pass;
        println!(
            "criterion {id} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    report(1, "univariate recovery", univariate_recovery());
    report(2, "bivariate average regime", average_regime());
    let anti = anti_run();
    report(3, "anti-cointegration regime", anti_cointegration(&anti));
    report(4, "feasibility bound", feasibility_bound());
    report(5, "heavy-tail bias direction", heavy_tails());
    report(6, "identity and bound suite", identities());
    report(7, "domain agreement", domain_agreement(&anti));
    report(8, "beta recovery", beta_recovery());
    report(9, "reproducibility", reproducibility());
    if !all {
        std::process::exit(1);
    }
}
