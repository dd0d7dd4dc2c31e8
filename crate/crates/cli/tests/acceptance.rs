//! Acceptance criteria at their stated tolerances and time limits; one line per criterion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hh_experiments::report::ExperimentReport;
use hh_experiments::{domination, identities, run, run_all, setup, Experiment, ExperimentConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn within(d: Duration, limit_s: f64) -> bool {
    d.as_secs_f64() < limit_s
}

fn failed(report: &ExperimentReport) -> Vec<String> {
    report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}={:e}", c.name, c.value))
        .chain(report.slopes.iter().filter(|s| !s.pass).map(|s| format!("{}={:.3}", s.name, s.slope)))
        .collect()
}

fn from_checks(report: &ExperimentReport, elapsed: Duration, limit_s: Option<f64>, extra: &str) -> Outcome {
    let bad = failed(report);
    let fast = limit_s.is_none_or(|l| within(elapsed, l));
    let mut detail = format!("{} checks, {} slopes, {:.1}s", report.checks.len(), report.slopes.len(), elapsed.as_secs_f64());
    if let Some(l) = limit_s {
        detail += &format!(" (limit {l}s)");
    }
    if !extra.is_empty() {
        detail += &format!("; {extra}");
    }
    if !bad.is_empty() {
        detail += &format!("; failing: {}", bad.join(", "));
    }
    Outcome { pass: bad.is_empty() && fast, detail }
}

fn identity_part(config: &ExperimentConfig, part: fn(&mut ExperimentReport, &ExperimentConfig) -> Result<(), hh_experiments::ExperimentError>, limit: Option<f64>) -> Outcome {
    let mut report = ExperimentReport::new("identities", config);
    let (r, t) = timed(|| part(&mut report, config));
    match r {
        Ok(()) => from_checks(&report.finish(), t, limit, ""),
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn experiment(config: &ExperimentConfig, e: Experiment, limit: Option<f64>, extra: impl Fn(&ExperimentReport) -> String) -> Outcome {
    let (r, t) = timed(|| run(e, config));
    match r {
        Ok(report) => from_checks(&report, t, limit, &extra(&report)),
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable output directory") {
            let p = entry.expect("directory entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).expect("inside dir").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let config = ExperimentConfig::quick();
    let (a, b) = (tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir"));
    let ((ra, rb), t) = timed(|| (run_all(&config, a.path()), run_all(&config, b.path())));
    if let Err(e) = ra.and(rb) {
        return Outcome { pass: false, detail: format!("error: {e}") };
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    if fa != fb {
        return Outcome { pass: false, detail: "different file sets".into() };
    }
    let differing: Vec<String> =
        fa.iter().filter(|f| fs::read(a.path().join(f)).ok() != fs::read(b.path().join(f)).ok()).map(|f| f.display().to_string()).collect();
    Outcome {
        pass: differing.is_empty() && !fa.is_empty(),
        detail: format!("{} files compared, {} differ, {:.1}s{}", fa.len(), differing.len(), t.as_secs_f64(), if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }),
    }
}

fn constant(report: &ExperimentReport, name: &str) -> f64 {
    report.find_constant(name).map_or(f64::NAN, |c| c.value)
}

fn main() -> ExitCode {
    let config = ExperimentConfig::default();
    let mut lines: Vec<(&str, Outcome)> = Vec::new();

    let harmonic = |r: &mut ExperimentReport, _: &ExperimentConfig| identities::harmonicity(r);
    lines.push(("1 sub-Laplacian of the fundamental kernel is zero", identity_part(&config, harmonic, Some(1.0))));
    let axioms = |r: &mut ExperimentReport, c: &ExperimentConfig| identities::group_axioms(r, c, identities::AXIOM_SAMPLES);
    lines.push(("2 group axioms on 10^4 samples", identity_part(&config, axioms, Some(1.0))));
    lines.push(("3 homogeneity of derivative kernels", identity_part(&config, identities::homogeneity, Some(5.0))));
    lines.push(("4 Haar scaling, left invariance, unit ball volume", identity_part(&config, identities::haar, None)));
    lines.push(("5 atom moments, norm and translation", experiment(&config, Experiment::Atom, None, |_| String::new())));
    lines.push((
        "6 weak identity",
        experiment(&config, Experiment::Weak, Some(300.0), |r| {
            r.constants.iter().map(|c| format!("{}={:.2e}", c.name, c.value)).collect::<Vec<_>>().join(" ")
        }),
    ));
    lines.push((
        "7 decay slopes",
        experiment(&config, Experiment::Decay, Some(600.0), |r| {
            r.slopes.iter().filter(|s| !s.name.starts_with("dilated")).map(|s| format!("{:.3}", s.slope)).collect::<Vec<_>>().join(" ")
        }),
    ));

    let pool = setup::thread_pool(&config).expect("thread pool");
    let (dom, t) = timed(|| pool.install(|| domination::run_timed(&config)));
    match dom {
        Ok((report, lg_time)) => {
            let rows = report.table("points").map_or(0, |t| t.rows.len());
            let slope = report.slopes.first().map_or(f64::NAN, |s| s.slope);
            let main_checks: Vec<_> = report.checks.iter().filter(|c| !c.name.starts_with("lg_")).cloned().collect();
            let lg_checks: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with("lg_")).cloned().collect();
            let main = ExperimentReport { checks: main_checks, ..report.clone() };
            let lg = ExperimentReport { checks: lg_checks, slopes: Vec::new(), ..report.clone() };
            let mut o8 = from_checks(&main, t, Some(900.0), &format!("{rows} points, C={:.3e}, far slope {slope:.3}", constant(&report, "C")));
            o8.pass &= rows >= 50;
            let lg_rows = report.table("lg_domination").map_or(0, |t| t.rows.len());
            let mut o9 = from_checks(&lg, lg_time, Some(300.0), &format!("{lg_rows} points, C={:.3e}", constant(&report, "C_lg")));
            o9.pass &= lg_rows >= 30;
            lines.push(("8 pointwise domination of N", o8));
            lines.push(("9 M_phi domination", o9));
        }
        Err(e) => {
            lines.push(("8 pointwise domination of N", Outcome { pass: false, detail: format!("error: {e}") }));
            lines.push(("9 M_phi domination", Outcome { pass: false, detail: "not run".into() }));
        }
    }
    lines.push((
        "10 truncated integrals below and above p*",
        experiment(&config, Experiment::Triviality, Some(600.0), |r| {
            r.constants.iter().filter(|c| c.name.starts_with("growth")).map(|c| format!("{}={:.3}", c.name, c.value)).collect::<Vec<_>>().join(" ")
        }),
    ));
    lines.push(("11 byte-identical reports from two runs", determinism()));

    let mut all = true;
    for (name, o) in &lines {
        all &= o.pass;
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
