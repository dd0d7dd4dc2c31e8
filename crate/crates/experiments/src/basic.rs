//! The constant `c_n`, the default atom and its potential.

use std::f64::consts::PI;

use hh_core::atoms::{atom_moments, certificate, translate_atom, MOMENT_TOLERANCE};
use hh_core::kernel::monomial_basis;
use hh_core::potential::{compute_cn, potential_eval};
use hh_core::{HPoint, KoranyiBall, QuadSpec};

use crate::config::{point_from, ExperimentConfig};
use crate::report::{Cell, ExperimentReport, Table};
use crate::setup;
use crate::ExperimentError;

pub fn run_cn(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("cn", config);
    let spec = config.quad_spec();
    let n = config.n;
    let (c, quad) = compute_cn(n, &spec)?;
    let refined_spec = QuadSpec { outer_cutoff: 2.0 * spec.outer_cutoff, points_per_axis: spec.points_per_axis + 4, ..spec.clone() };
    let (refined, _) = compute_cn(n, &refined_spec)?;
    let error = c.error.max((refined.value - c.value).abs());
    let mut table = Table::new("cn", &["n", "value", "error_estimate", "refined_value", "closed_form", "evaluations"]);
    let closed = if n == 1 { 1.0 / (8.0 * PI) } else { f64::NAN };
    table.push(vec![n.into(), c.value.into(), error.into(), refined.value.into(), closed.into(), (quad.evaluations as f64).into()]);
    report.tables.push(table);
    report.constant(&format!("c_{n}"), c.value, error, "normalisation of the fundamental solution");
    report.check("cn_positive_finite", c.value.is_finite() && c.value > 0.0, "");
    report.check_le("cn_refinement_agreement", (refined.value / c.value - 1.0).abs(), 1e-6, "doubled cutoff, higher order");
    if n == 1 {
        report.check_le("c1_closed_form", (c.value / closed - 1.0).abs(), 1e-8, "against 1/(8π)");
    }
    Ok(report.finish())
}

pub fn run_atom(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("atom", config);
    let spec = config.quad_spec();
    let center = config.center_point()?;
    let atom = setup::atom(config, config.delta, &center, None)?;
    let n = config.n;

    let basis = monomial_basis(config.big_n, n);
    let moments = atom_moments(&atom, config.big_n, &spec)?;
    let scale = atom.delta() + center.gauge();
    let mut mt = Table::new("moments", &["index", "degree", "moment", "scaled"]);
    for (i, m) in basis.basis.iter().zip(&moments) {
        let scaled = m.abs() / (atom.l1_norm * scale.powi(i.degree() as i32));
        mt.push(vec![i.to_string().into(), (i.degree() as usize).into(), (*m).into(), scaled.into()]);
    }
    report.tables.push(mt);
    report.check_le("moment_certificate", atom.moment_certificate, MOMENT_TOLERANCE, "max |∫a w^I| / (‖a‖₁ (δ+ρ(c))^{d(I)}), d(I) ≤ N");

    let bound = atom.params.size_bound();
    let check_spec = spec.with_order(spec.points_per_axis + 4);
    let norm = atom.lp_norm(config.p0, &check_spec)?;
    let norm_err = (norm / bound - 1.0).abs();
    report.check_le("lp0_norm_equals_bound", norm_err, 1e-10, "‖a‖_{p₀} at a higher quadrature order against |B|^{1/p₀−1/p}");

    let outside = [1.0 + 1e-9, 1.5, 3.0];
    let mut zero_outside = true;
    for r in outside {
        for ray in &config.rays {
            let w = setup::ray_point(config, &center, *ray, r * atom.delta());
            zero_outside &= atom.eval(&w) == 0.0;
        }
    }
    report.check("support_in_ball", zero_outside, "a vanishes at sampled points outside B");

    let z0 = point_from(&config.translation, n)?;
    let moved = translate_atom(&atom, &z0, &spec)?;
    let moved_norm = moved.lp_norm(config.p0, &check_spec)?;
    let moved_cert = certificate(&moved, &spec)?;
    report.check_le("translated_moment_certificate", moved_cert, MOMENT_TOLERANCE, "same certificate after left translation");
    report.check_le("translated_lp0_norm", (moved_norm / norm - 1.0).abs(), 1e-10, "‖a(z₀⁻¹·)‖_{p₀} against ‖a‖_{p₀}");
    let probe = HPoint::new(&vec![0.2 * atom.delta(); 2 * n], 0.1 * atom.delta() * atom.delta());
    let moved_probe = z0.compose(&center.compose(&probe));
    report.check_le(
        "translated_values",
        (moved.eval(&moved_probe) - atom.eval(&center.compose(&probe))).abs(),
        1e-12 * atom.normalization.abs(),
        "a'(z₀·w) = a(w)",
    );

    let mut at = Table::new("atom", &["quantity", "value"]);
    let rows: [(&str, f64); 10] = [
        ("delta", atom.delta()),
        ("normalization", atom.normalization),
        ("l1_norm", atom.l1_norm),
        ("size_bound", bound),
        ("lp0_norm", norm),
        ("lp0_norm_relative_error", norm_err),
        ("gram_condition", atom.gram_condition),
        ("moment_certificate", atom.moment_certificate),
        ("translated_moment_certificate", moved_cert),
        ("translated_lp0_norm", moved_norm),
    ];
    for (k, v) in rows {
        at.push(vec![k.into(), v.into()]);
    }
    report.tables.push(at);
    let mut ct = Table::new("coefficients", &["index", "coefficient"]);
    for (i, c) in atom.basis.basis.iter().zip(&atom.poly_coeffs) {
        ct.push(vec![i.to_string().into(), (*c).into()]);
    }
    report.tables.push(ct);
    report.constant("lp0_norm", norm, (norm - bound).abs(), "");
    report.constant("l1_norm", atom.l1_norm, 0.0, "");
    Ok(report.finish())
}

/// Radii (units of `δ`) of the potential sweep along each ray.
const SWEEP: [f64; 14] = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 64.0];

pub fn run_potential(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("potential", config);
    let spec = config.quad_spec();
    let center = config.center_point()?;
    let fs = setup::fundamental_solution(config)?;
    let atom = setup::atom(config, config.delta, &center, None)?;
    let refined_spec = spec.with_order(spec.points_per_axis + 2);
    let refined = hh_core::potential::PotentialField::new(atom.clone(), fs.clone(), &refined_spec);
    let fast = setup::fast(config, setup::field(config, &fs, atom))?;
    let pf = &fast.field;
    let delta = config.delta;
    let mut points = Vec::new();
    for (k, ray) in config.rays.iter().enumerate() {
        for r in SWEEP {
            points.push((k, r, setup::ray_point(config, &center, *ray, r * delta)));
        }
    }
    use rayon::prelude::*;
    let rows: Vec<Result<(f64, f64, f64), ExperimentError>> = points
        .par_iter()
        .map(|(_, r, z)| {
            let v = potential_eval(pf, z, &spec)?;
            let err = if *r < hh_core::potential::NEAR_LIMIT {
                (potential_eval(&refined, z, &refined_spec)? - v).abs()
            } else {
                (pf.value_sum(&pf.atom.coarse, z) - pf.value_sum(&pf.atom.fine, z)).abs()
            };
            let tab = fast.value(z)?;
            Ok((v, err, tab))
        })
        .collect();
    let mut table = Table::new("potential", &setup::columns(config.n, &["ray"], &["rho", "value", "error_estimate", "table_value"]).iter().map(String::as_str).collect::<Vec<_>>());
    let mut scale = 0.0f64;
    let mut worst_err = 0.0f64;
    let mut worst_table = 0.0f64;
    let mut finite = true;
    let mut vals = Vec::new();
    for ((k, r, z), row) in points.iter().zip(rows) {
        let (v, err, tab) = row?;
        finite &= v.is_finite() && err.is_finite() && tab.is_finite();
        scale = scale.max(v.abs());
        vals.push((*r, v, err, tab));
        let mut cells: Vec<Cell> = vec![(*k).into()];
        cells.extend(setup::coord_cells(z));
        cells.extend([(r * delta).into(), v.into(), err.into(), tab.into()]);
        table.push(cells);
    }
    for (r, v, err, tab) in &vals {
        worst_err = worst_err.max(err / scale);
        // Inside 2δ relative to max |b|, beyond it to the local magnitude.
        let local = if *r < hh_core::potential::NEAR_LIMIT { scale } else { v.abs().max(scale * (1.0 + r).powi(-(2 * config.n as i32 + 2))) };
        worst_table = worst_table.max((tab - v).abs() / local);
    }
    report.tables.push(table);
    report.check("values_finite", finite, "");
    report.check_le("error_estimate", worst_err, 5e-3, "largest error estimate relative to max |b|");
    if fast.table.is_some() {
        report.check_le("table_agreement", worst_table, 5e-3, "interpolated against direct values; relative to max |b| inside 2δ, to |b| beyond");
    }
    let ball = KoranyiBall::new(center.clone(), delta)?;
    report.constant("max_abs_potential", scale, worst_err * scale, &format!("over the sweep, atom on B(c, {})", ball.radius));
    Ok(report.finish())
}
