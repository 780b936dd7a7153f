//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails. Sub-check lines follow each criterion.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use thermofrac_core::numeric::linspace;
use thermofrac_core::oracle::{compare_with_spectrum, exponent_range_violations, geometric_scales};
use thermofrac_core::shift::build_ladder;
use thermofrac_core::spectrum::{legendre_via_temperature, temperature};
use thermofrac_core::thermo::log_a_sequence;
use thermofrac_core::{
    box_counting, bowen_dimension, check_gibbs, check_rbsc, check_sandwich, conformal_measures, find_primitivity,
    geometric_potential, instances, legendre_value, level_histogram, pressure_curve, sample_limit_set, sample_orbit,
    ChainMethod, CurveDomain, PressureCurve, PressureOptions, Rcgdms, Sampler,
};

type Criterion = fn() -> Vec<Check>;

struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

fn within(name: &str, value: f64, expected: f64, tol: f64) -> Check {
    check(name, (value - expected).abs() <= tol, format!("{value} vs {expected} (tol {tol:e})"))
}

fn timed(name: &str, elapsed: Duration, limit: Duration) -> Check {
    check(name, elapsed < limit, format!("{:.3} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn full_curve(g: &Rcgdms, grid: &[f64]) -> PressureCurve {
    pressure_curve(g, &CurveDomain::Full, grid, &PressureOptions::default()).unwrap()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_thermofrac")).args(args).output().expect("spawn cli");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_1() -> Vec<Check> {
    let ln2 = 2f64.ln();
    let cases = [
        ("cantor", instances::cantor(), ln2 / 3f64.ln()),
        ("twoscale", instances::twoscale(), ((1.0 + 5f64.sqrt()) / 2.0).log2()),
        ("period2", instances::period2(), 2.0 / 3.0),
    ];
    let mut out = Vec::new();
    for (name, g, expected) in cases {
        let start = Instant::now();
        let s = bowen_dimension(&full_curve(&g, &linspace(-1.0, 3.0, 41))).unwrap();
        let elapsed = start.elapsed();
        out.push(within(&format!("{name} root"), s, expected, 1e-6));
        out.push(timed(&format!("{name} runtime"), elapsed, Duration::from_secs(1)));
    }
    out
}

fn criterion_2() -> Vec<Check> {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (code, _) = cli(&["example-paper", "--cutoff", "1024", "--out", dir.path().to_str().unwrap()]);
    let elapsed = start.elapsed();
    let text = std::fs::read_to_string(dir.path().join("example-paper.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let p = v["pressure_at_1"].as_f64().unwrap();
    let s_star = v["s_star"].as_f64().unwrap();
    let sums: BTreeMap<String, (Option<f64>, bool)> = v["m_ru"]
        .as_array()
        .unwrap()
        .iter()
        .map(|u| (u["s"].to_string(), (u["m_ru"].as_f64(), u["divergent"].as_bool().unwrap())))
        .collect();
    let bound = -(2f64.ln()) + 1e-6;
    let mut out = vec![
        check("exit status", code == 0, format!("{code}")),
        check("P(zeta) <= -log 2 + 1e-6", p <= bound, format!("{p}")),
        check("dimension below one", s_star < 1.0, format!("{s_star}")),
        within("M_RU(1)", sums["1.0"].0.unwrap_or(f64::NAN), 0.5, 1e-9),
    ];
    for s in ["0.25", "0.5", "0.75"] {
        out.push(check(format!("M_RU({s}) divergent"), sums[s].1, format!("{:?}", sums[s].0)));
    }
    out.push(timed("runtime", elapsed, Duration::from_secs(30)));
    out
}

fn criterion_3() -> Vec<Check> {
    let start = Instant::now();
    let cases = [
        ("cantor", instances::cantor()),
        ("twoscale", instances::twoscale()),
        ("golden-mean", instances::golden_mean(1.0 / 3.0, 1.0 / 3.0)),
        ("golden-mean-periodic", instances::golden_mean_periodic()),
        ("period2", instances::period2()),
    ];
    let mut out = Vec::new();
    for (name, g) in cases {
        let witness = find_primitivity(&g.symbolic, &[0, 1], 8).unwrap().unwrap();
        let orbit = sample_orbit(&g.driving, 0);
        let mut worst = f64::INFINITY;
        let mut failures = 0;
        for s in [0.0, 0.5, 1.0] {
            let pot = geometric_potential(&g).unwrap().scaled(s);
            for n in 1..=6 {
                for e in [0, 1] {
                    let r = check_sandwich(&g.symbolic, &g.driving, &[0, 1], pot.as_ref(), &orbit, 0, e, n, &witness)
                        .unwrap();
                    failures += usize::from(!r.holds);
                    worst = r.checks.iter().map(|c| c.margin).fold(worst, f64::min);
                }
            }
        }
        out.push(check(name, failures == 0, format!("{failures} failing chains, smallest margin {worst:e}")));
    }
    out.push(timed("runtime", start.elapsed(), Duration::from_secs(10)));
    out
}

fn criterion_4() -> Vec<Check> {
    let mut out = Vec::new();
    let cases = [
        ("twoscale", instances::twoscale(), 0.5),
        ("period2", instances::period2(), 0.5),
        ("random-twoscale", instances::random_twoscale(), 0.8),
    ];
    for (name, g, s) in cases {
        let pot = geometric_potential(&g).unwrap().scaled(s);
        let orbit = sample_orbit(&g.driving, 3);
        let chain = conformal_measures(&g.symbolic, &[0, 1], pot.clone(), &orbit, 0, 26, 8, 1, ChainMethod::Auto).unwrap();
        let witness = find_primitivity(&g.symbolic, &[0, 1], 8).unwrap().unwrap();
        let r = check_gibbs(&g.symbolic, &g.driving, pot.as_ref(), &chain, &witness, 8).unwrap();
        out.push(check(format!("{name} bracket"), r.holds(), format!("{} of {} cylinders outside", r.violations, r.cylinders)));
    }
    let g = instances::cantor();
    let s_star = 2f64.ln() / 3f64.ln();
    let pot = geometric_potential(&g).unwrap().scaled(s_star);
    let orbit = sample_orbit(&g.driving, 0);
    let chain = conformal_measures(&g.symbolic, &[0, 1], pot.clone(), &orbit, 0, 26, 8, 1, ChainMethod::PullBack).unwrap();
    let witness = find_primitivity(&g.symbolic, &[0, 1], 8).unwrap().unwrap();
    let r = check_gibbs(&g.symbolic, &g.driving, pot.as_ref(), &chain, &witness, 8).unwrap();
    let worst = r.min_log_ratio.abs().max(r.max_log_ratio.abs());
    out.push(check("cantor ratio at s*", r.holds() && worst <= 1e-10, format!("max |log ratio| = {worst:e}")));
    out
}

fn criterion_5() -> Vec<Check> {
    let mut out = Vec::new();
    let opts = PressureOptions::default();
    let tail = instances::pure_tail(256);
    let ladder = build_ladder(&tail.symbolic, &[], &[4, 16, 64, 256]).unwrap();
    let c = pressure_curve(&tail, &CurveDomain::Ladder(ladder), &linspace(0.1, 3.0, 30), &opts).unwrap();
    out.push(check("rung monotonicity", c.rung_violation() <= 1e-9, format!("largest decrease {:e}", c.rung_violation())));

    let grid = linspace(-1.0, 3.0, 41);
    for (name, g) in [
        ("cantor", instances::cantor()),
        ("twoscale", instances::twoscale()),
        ("period2", instances::period2()),
        ("golden-mean", instances::golden_mean(0.4, 0.3)),
    ] {
        let c = full_curve(&g, &grid);
        out.push(check(format!("{name} strictly decreasing"), c.strictly_decreasing(), ""));
        out.push(check(
            format!("{name} repair corrections"),
            c.max_correction <= 1e-9,
            format!("{:e}", c.max_correction),
        ));
    }

    for (name, g) in [("twoscale", instances::twoscale()), ("random-twoscale", instances::random_twoscale())] {
        let zeta = geometric_potential(&g).unwrap();
        let orbit = sample_orbit(&g.driving, 5);
        let mut worst: f64 = 0.0;
        for s in [0.0, 0.7, 1.5] {
            let pot = zeta.scaled(s);
            let seq = log_a_sequence(&g.symbolic, &[0, 1], pot.as_ref(), &orbit, 0, 30).unwrap();
            // P^n for a first-symbol potential is the sum of fiber log-sums
            let mut partial = 0.0;
            for (k, log_a) in seq.iter().enumerate() {
                let state = orbit.state(k as i64);
                partial += (pot.symbol_bounds(state, 0).1.exp() + pot.symbol_bounds(state, 1).1.exp()).ln();
                worst = worst.max(((partial - log_a) / (k + 1) as f64).abs());
            }
        }
        out.push(check(format!("{name} pointwise identity n <= 30"), worst <= 1e-9, format!("{worst:e}")));
    }
    out
}

fn criterion_6() -> Vec<Check> {
    let start = Instant::now();
    let g = instances::twoscale();
    let ln2 = 2f64.ln();
    let c = full_curve(&g, &linspace(-1.0, 3.0, 41));
    let mut out = vec![within("l(1.5 log 2)", legendre_value(&c, 1.5 * ln2).unwrap().0, 2.0 / 3.0, 1e-3)];

    let orbit = sample_orbit(&g.driving, 0);
    let hist = level_histogram(&g, &orbit, 0, &[0, 1], 20, 32).unwrap();
    let bins = compare_with_spectrum(&hist, &c, 100).unwrap();
    let worst = bins.iter().map(|b| b.gap).fold(0.0, f64::max);
    let failing = bins.iter().filter(|b| b.gap > 0.05).count();
    out.push(check(
        "histogram n = 20 within 0.05",
        failing == 0,
        format!("{failing} of {} bins exceed, worst gap {worst:.4}", bins.len()),
    ));

    let near = legendre_value(&c, ln2 + 0.01).unwrap().0;
    out.push(check("l(log 2 + 0.01) <= 0.02", near <= 0.02, format!("{near}")));
    out.push(timed("runtime", start.elapsed(), Duration::from_secs(60)));
    out
}

fn criterion_7() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, g) in [("twoscale", instances::twoscale()), ("golden-mean", instances::golden_mean(0.4, 0.3))] {
        let c = full_curve(&g, &linspace(-2.0, 4.0, 31));
        let s_star = bowen_dimension(&c).unwrap();
        out.push(within(&format!("{name} T(1)"), temperature(&c, 1.0).unwrap(), 0.0, 1e-8));
        out.push(within(&format!("{name} T(0)"), temperature(&c, 0.0).unwrap(), s_star, 1e-6));
        let (lo, hi) = c.validity();
        let mut worst: f64 = 0.0;
        for beta in linspace(lo, hi, 12)[1..11].iter().copied() {
            let direct = legendre_value(&c, beta).unwrap().0;
            let via_t = legendre_via_temperature(&c, beta).unwrap();
            worst = worst.max((direct - via_t).abs());
        }
        out.push(check(format!("{name} routes agree at 10 exponents"), worst <= 1e-6, format!("{worst:e}")));
    }
    out
}

fn criterion_8() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, g, range) in [
        ("cantor", instances::cantor(), Some((0.58, 0.68))),
        ("shrunk-cantor", instances::shrunk_cantor(), None),
    ] {
        let orbit = sample_orbit(&g.driving, 0);
        let sample = sample_limit_set(&g, &orbit, 0, &[0, 1], 10, Sampler::Exhaustive).unwrap();
        let smallest = 10.0 * sample.radius_bound;
        let est = box_counting(&sample, &geometric_scales(smallest, 0.25, 8)).unwrap();
        match range {
            Some((lo, hi)) => out.push(check(
                format!("{name} depth 10 in [{lo}, {hi}]"),
                (lo..=hi).contains(&est.dimension),
                format!("{}", est.dimension),
            )),
            None => {
                let rbsc = check_rbsc(&g, &[0, 1], &[0]).unwrap();
                let s_star = bowen_dimension(&full_curve(&g, &linspace(-1.0, 3.0, 41))).unwrap();
                out.push(check(format!("{name} separation margin positive"), rbsc.holds, format!("{}", rbsc.margin)));
                out.push(check(
                    format!("{name} estimate <= s* + 0.05"),
                    est.dimension <= s_star + 0.05,
                    format!("{} vs {}", est.dimension, s_star + 0.05),
                ));
            }
        }
    }
    out
}

fn criterion_9() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, g) in [
        ("cantor", instances::cantor()),
        ("twoscale", instances::twoscale()),
        ("period2", instances::period2()),
        ("golden-mean", instances::golden_mean(0.4, 0.3)),
    ] {
        let c = pressure_curve(&g, &CurveDomain::Finite(vec![0, 1]), &linspace(-1.0, 3.0, 41), &PressureOptions::default())
            .unwrap();
        let (lo, hi) = c.validity();
        let orbit = sample_orbit(&g.driving, 0);
        let v = exponent_range_violations(&g, &orbit, 0, &[0, 1], 20, lo, hi, 1e-9).unwrap();
        out.push(check(format!("{name} n = 20"), v == 0, format!("{v} violations in [{lo}, {hi}]")));
    }
    out
}

fn csv_bodies(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn criterion_10() -> Vec<Check> {
    let configs = repo_root().join("configs");
    let runs: [(&str, &str, &[&str]); 4] = [
        ("spectrum", "twoscale.json", &[]),
        ("pressure", "random-golden-mean.json", &[]),
        ("limitset", "random-golden-mean.json", &["--depth", "8"]),
        ("measures", "period2.json", &["--depth", "6"]),
    ];
    let mut out = Vec::new();
    for (command, config, extra) in runs {
        let config = configs.join(config);
        let mut bodies = Vec::new();
        for workers in ["1", "1", "4"] {
            let dir = tempfile::tempdir().unwrap();
            let mut args = vec![command, "--config", config.to_str().unwrap(), "--seed", "7", "--workers", workers];
            args.extend_from_slice(extra);
            args.extend_from_slice(&["--out", dir.path().to_str().unwrap()]);
            let (code, _) = cli(&args);
            assert_eq!(code, 0, "{command} failed");
            bodies.push(csv_bodies(dir.path()));
        }
        let same = !bodies[0].is_empty() && bodies.windows(2).all(|w| w[0] == w[1]);
        out.push(check(
            format!("{command} {}", config.file_name().unwrap().to_string_lossy()),
            same,
            format!("{} csv files, workers 1, 1, 4", bodies[0].len()),
        ));
    }
    out
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("1 Bowen dimension of exact instances", criterion_1),
        ("2 worked example", criterion_2),
        ("3 sandwich inequalities", criterion_3),
        ("4 Gibbs bounds", criterion_4),
        ("5 pressure properties", criterion_5),
        ("6 spectrum vs level-set oracle", criterion_6),
        ("7 temperature function", criterion_7),
        ("8 box counting", criterion_8),
        ("9 exponent range", criterion_9),
        ("10 determinism", criterion_10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let checks = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(c) => c,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                vec![check("completed", false, msg.unwrap_or_default())]
            }
        };
        let passed = checks.iter().all(|c| c.passed);
        failed += usize::from(!passed);
        println!("{} criterion {name}", if passed { "PASS" } else { "FAIL" });
        for c in &checks {
            println!("    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
