//! Far-field decay of `b` and its first two layers of left-invariant derivatives.

use rayon::prelude::*;

use hh_core::atoms::Atom;
use hh_core::potential::{potential_derivative, PotentialField, COARSE_LIMIT};
use hh_core::{HPoint, MultiIndex};

use crate::config::ExperimentConfig;
use crate::fit::fit_decay_slope;
use crate::report::{Cell, ExperimentReport, SlopeRecord, Table};
use crate::setup;
use crate::ExperimentError;

/// Highest derivative degree whose decay is measured.
pub const MAX_DEGREE: u32 = 2;

struct Sample {
    ray: usize,
    rho: f64,
    z: HPoint,
    /// Root-sum-square of `X^I b` over `d(I) = d`, and its error estimate, per `d`.
    values: Vec<(f64, f64)>,
}

fn sample(pf: &PotentialField, config: &ExperimentConfig, ray: usize, rho: f64) -> Result<Sample, ExperimentError> {
    let spec = config.quad_spec();
    let center = pf.atom.center().clone();
    let z = setup::ray_point(config, &center, config.rays[ray], rho);
    let alt_rule = if pf.relative_distance(&z) < COARSE_LIMIT { &pf.atom.coarse } else { &pf.atom.fine };
    let mut values = Vec::new();
    for d in 0..=MAX_DEGREE {
        let (mut sq, mut alt_sq) = (0.0, 0.0);
        for index in MultiIndex::of_degree(config.n, d) {
            let v = potential_derivative(pf, &index, &z, &spec)?;
            let alt = pf.rule_sum(alt_rule, pf.kernel(&index)?, &z);
            sq += v * v;
            alt_sq += alt * alt;
        }
        values.push((sq.sqrt(), (sq.sqrt() - alt_sq.sqrt()).abs()));
    }
    Ok(Sample { ray, rho, z, values })
}

fn sweep(config: &ExperimentConfig, pf: &PotentialField) -> Result<Vec<Sample>, ExperimentError> {
    let delta = pf.atom.delta();
    let rhos = setup::geometric(config.decay.rho_min * delta, config.decay.rho_max * delta, config.decay.points_per_ray);
    let jobs: Vec<(usize, f64)> = (0..config.rays.len()).flat_map(|k| rhos.iter().map(move |r| (k, *r))).collect();
    jobs.par_iter().map(|(k, r)| sample(pf, config, *k, *r)).collect()
}

/// Slopes per `(ray, d)`.
fn slopes(config: &ExperimentConfig, samples: &[Sample], label: &str) -> Result<Vec<SlopeRecord>, ExperimentError> {
    let q = config.hom_dim();
    let mut out = Vec::new();
    for k in 0..config.rays.len() {
        for d in 0..=MAX_DEGREE as usize {
            let pts: Vec<(f64, f64)> = samples.iter().filter(|s| s.ray == k).map(|s| (s.rho, s.values[d].0)).collect();
            let fit = fit_decay_slope(&pts)?;
            out.push(SlopeRecord::new(&format!("{label}ray{k}_d{d}"), &fit, -(q + d as f64), config.decay.window));
        }
    }
    Ok(out)
}

fn table(config: &ExperimentConfig, name: &str, samples: &[Sample]) -> Table {
    let cols = setup::columns(config.n, &["ray"], &["rho", "d", "value", "error_estimate"]);
    let mut t = Table::new(name, &cols.iter().map(String::as_str).collect::<Vec<_>>());
    for s in samples {
        for (d, (v, e)) in s.values.iter().enumerate() {
            let mut row: Vec<Cell> = vec![s.ray.into()];
            row.extend(setup::coord_cells(&s.z));
            row.extend([s.rho.into(), d.into(), (*v).into(), (*e).into()]);
            t.push(row);
        }
    }
    t
}

/// `C_d = max ρ^{Q+d} |X^d b| · |B|^{1/p} δ^{−2−Q}` per ray; scale-free for atoms of any size.
fn constants(config: &ExperimentConfig, atom: &Atom, samples: &[Sample]) -> Vec<Vec<f64>> {
    let q = config.hom_dim();
    let delta = atom.delta();
    let vol = hh_core::GroupContext::new(config.n).expect("n ≥ 1").ball_volume(delta);
    (0..config.rays.len())
        .map(|k| {
            (0..=MAX_DEGREE as usize)
                .map(|d| {
                    samples
                        .iter()
                        .filter(|s| s.ray == k)
                        .map(|s| s.values[d].0 * s.rho.powf(q + d as f64) * vol.powf(1.0 / config.p) * delta.powf(-2.0 - q))
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("decay", config);
    let fs = setup::fundamental_solution(config)?;
    let center = config.center_point()?;
    let atom = setup::atom(config, config.delta, &center, None)?;
    let pf = setup::field(config, &fs, atom.clone());
    let samples = sweep(config, &pf)?;
    let main = slopes(config, &samples, "")?;
    let finite = samples.iter().all(|s| s.values.iter().all(|(v, e)| v.is_finite() && e.is_finite() && *v > 0.0));
    report.check("values_positive_finite", finite, "");
    let worst_err = samples.iter().flat_map(|s| s.values.iter().map(|(v, e)| e / v)).fold(0.0, f64::max);
    report.constant("max_relative_error_estimate", worst_err, 0.0, "alternative product rule against the one used");
    let cs = constants(config, &atom, &samples);
    for d in 0..=MAX_DEGREE as usize {
        let per_ray: Vec<f64> = cs.iter().map(|c| c[d]).collect();
        let (lo, hi) = per_ray.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
        report.constant(&format!("C_{d}"), hi, hi - lo, "max over rays of ρ^{Q+d}|X^d b| |B|^{1/p} δ^{−2−Q}; error is the spread");
        report.constant(&format!("C_{d}_ray_spread"), hi / lo, 0.0, "ratio of largest to smallest ray constant");
    }
    report.tables.push(table(config, "decay", &samples));

    if config.decay.dilation_factor > 0.0 {
        let delta2 = config.decay.dilation_factor * config.delta;
        let atom2 = setup::atom(config, delta2, &center, None)?;
        let pf2 = setup::field(config, &fs, atom2.clone());
        let samples2 = sweep(config, &pf2)?;
        let dilated = slopes(config, &samples2, "dilated_")?;
        for (a, b) in main.iter().zip(&dilated) {
            report.check_le(&format!("dilation_{}", a.name), (a.slope - b.slope).abs(), config.decay.dilation_window, "slope at δ against slope at the dilated δ");
        }
        let cs2 = constants(config, &atom2, &samples2);
        for d in 0..=MAX_DEGREE as usize {
            let ratio = cs2.iter().zip(&cs).map(|(b, a)| b[d] / a[d]).fold(0.0, f64::max);
            report.constant(&format!("C_{d}_dilation_ratio"), ratio, 0.0, "largest ray ratio of the constants at the two scales");
        }
        report.tables.push(table(config, "decay_dilated", &samples2));
        report.slopes.extend(dilated);
    }
    report.slopes.splice(0..0, main);
    Ok(report.finish())
}
