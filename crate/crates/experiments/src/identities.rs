//! Exact and sampled identities: harmonicity of `ρ^{−2n}`, group axioms, homogeneity of
//! derivative kernels and the Haar measure.

use num_rational::Ratio;
use rand::Rng;

use hh_core::quadrature::{integrate_ball, integrate_box, unit_ball_volume};
use hh_core::{HPoint, KernelExpr, KoranyiBall, MultiIndex, Side};

use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Table};
use crate::setup;
use crate::ExperimentError;

/// Dimensions covered by the exact and sampled identities.
pub const DIMENSIONS: [usize; 3] = [1, 2, 3];
/// Random samples per group axiom and dimension.
pub const AXIOM_SAMPLES: usize = 10_000;
/// Random `(r, z)` pairs per kernel in the homogeneity check.
pub const HOMOGENEITY_SAMPLES: usize = 100;
/// Highest `d(I)` in the homogeneity check.
pub const HOMOGENEITY_DEGREE: u32 = 3;

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("identities", config);
    harmonicity(&mut report)?;
    group_axioms(&mut report, config, AXIOM_SAMPLES)?;
    homogeneity(&mut report, config)?;
    haar(&mut report, config)?;
    Ok(report.finish())
}

/// `ℒ ρ^{−2n}` canonicalises to zero.
pub fn harmonicity(report: &mut ExperimentReport) -> Result<(), ExperimentError> {
    let mut table = Table::new("harmonicity", &["n", "terms_before", "terms_after"]);
    for n in DIMENSIONS {
        let base = KernelExpr::rho_power(n, Ratio::from_integer(2 * n as i64));
        let lap = base.sublaplacian();
        table.push(vec![n.into(), base.len().into(), lap.len().into()]);
        report.check(&format!("sublaplacian_of_fundamental_kernel_n{n}"), lap.is_zero(), "exact rational canonical form");
    }
    report.tables.push(table);
    Ok(())
}

fn random_point(rng: &mut impl Rng, n: usize, scale: f64) -> HPoint {
    let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-scale..scale)).collect();
    HPoint::new(&x, rng.random_range(-scale..scale))
}

fn max_abs_diff(a: &HPoint, b: &HPoint) -> f64 {
    a.x.iter().zip(&b.x).map(|(u, v)| (u - v).abs()).fold((a.t - b.t).abs(), f64::max)
}

/// Associativity, inverses, identity, dilation homomorphism and gauge properties on random
/// samples with coordinates in `[−2, 2]` and dilations in `[1/4, 4]`.
pub fn group_axioms(report: &mut ExperimentReport, config: &ExperimentConfig, samples: usize) -> Result<(), ExperimentError> {
    const TOL: f64 = 1e-12;
    let mut table = Table::new("group_axioms", &["n", "axiom", "samples", "max_error"]);
    for n in DIMENSIONS {
        let mut rng = setup::rng(config, 100 + n as u64);
        let mut worst = [0.0f64; 7];
        let e = HPoint::identity(n);
        for _ in 0..samples {
            let (z, w, v) = (random_point(&mut rng, n, 2.0), random_point(&mut rng, n, 2.0), random_point(&mut rng, n, 2.0));
            let r = rng.random_range(0.25..4.0);
            let errs = [
                max_abs_diff(&z.compose(&w).compose(&v), &z.compose(&w.compose(&v))),
                max_abs_diff(&z.compose(&z.inverse()), &e).max(max_abs_diff(&z.inverse().compose(&z), &e)),
                max_abs_diff(&z.compose(&e), &z).max(max_abs_diff(&e.compose(&z), &z)),
                max_abs_diff(&z.compose(&w).scaled(r), &z.scaled(r).compose(&w.scaled(r))),
                (z.inverse().gauge() - z.gauge()).abs(),
                (z.scaled(r).gauge() - r * z.gauge()).abs(),
                (z.compose(&w).gauge() - z.gauge() - w.gauge()).max(0.0),
            ];
            for (m, e) in worst.iter_mut().zip(errs) {
                *m = m.max(e);
            }
        }
        let names = ["associativity", "inverse", "identity", "dilation_homomorphism", "gauge_symmetry", "gauge_homogeneity", "triangle_inequality"];
        for (name, err) in names.iter().zip(worst) {
            table.push(vec![n.into(), (*name).into(), samples.into(), err.into()]);
            report.check_le(&format!("{name}_n{n}"), err, TOL, "maximum absolute deviation");
        }
    }
    report.tables.push(table);
    Ok(())
}

/// `X^I(f∘δ_r) = r^{d(I)} (X^I f)∘δ_r` for `f = ρ^{−α}`, `α ∈ {1, 2n}`, `d(I) ≤ 3`: every term of
/// `X^I f` has degree `−α − d(I)`, and sampled values obey the scaling law. Errors are relative to
/// the sum of absolute values of the terms.
pub fn homogeneity(report: &mut ExperimentReport, config: &ExperimentConfig) -> Result<(), ExperimentError> {
    const TOL: f64 = 1e-10;
    let mut table = Table::new("homogeneity", &["n", "alpha", "index", "terms", "degree_ok", "max_relative_error"]);
    for n in [1usize, 2] {
        let mut rng = setup::rng(config, 200 + n as u64);
        for alpha in [1i64, 2 * n as i64] {
            let f = KernelExpr::rho_power(n, Ratio::from_integer(alpha));
            let mut bookkeeping = true;
            let mut worst = 0.0f64;
            for d in 0..=HOMOGENEITY_DEGREE {
                for index in MultiIndex::of_degree(n, d) {
                    let k = f.apply_multi(&index, Side::Left)?;
                    let expected = Ratio::from_integer(-alpha - d as i64);
                    let degree_ok = k.degrees().iter().all(|g| *g == expected);
                    bookkeeping &= degree_ok;
                    let compiled = k.compile();
                    let terms: Vec<_> = k.terms().map(|t| KernelExpr::term(n, t.coeff, t.alpha, t.k, t.beta).compile()).collect();
                    let mut err = 0.0f64;
                    for _ in 0..HOMOGENEITY_SAMPLES {
                        let z = random_point(&mut rng, n, 2.0);
                        if z.gauge() < 1e-2 {
                            continue;
                        }
                        let r: f64 = 10f64.powf(rng.random_range(-1.0..1.0));
                        // X^I(f∘δ_r)(z) = r^{−α} (X^I f)(z) since f∘δ_r = r^{−α} f.
                        let lhs = r.powi(-alpha as i32) * compiled.eval_point(&z);
                        let rhs = r.powi(d as i32) * compiled.eval_point(&z.scaled(r));
                        let scale = r.powi(-alpha as i32) * terms.iter().map(|t| t.eval_point(&z).abs()).sum::<f64>();
                        if scale > 0.0 {
                            err = err.max((lhs - rhs).abs() / scale);
                        }
                    }
                    worst = worst.max(err);
                    table.push(vec![
                        n.into(),
                        (alpha as usize).into(),
                        index.to_string().into(),
                        k.len().into(),
                        (if degree_ok { 1.0 } else { 0.0 }).into(),
                        err.into(),
                    ]);
                }
            }
            report.check(&format!("degree_bookkeeping_n{n}_alpha{alpha}"), bookkeeping, "every term has degree −α − d(I)");
            report.check_le(&format!("homogeneity_n{n}_alpha{alpha}"), worst, TOL, "relative to the absolute term sum");
        }
    }
    report.tables.push(table);
    Ok(())
}

/// Cartesian box containing `B(c, R)`.
fn bounding_box(c: &HPoint, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let cx = c.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ht = radius * radius + 2.0 * cx * radius;
    let lo = c.x.iter().map(|v| v - radius).chain(std::iter::once(c.t - ht)).collect();
    let hi = c.x.iter().map(|v| v + radius).chain(std::iter::once(c.t + ht)).collect();
    (lo, hi)
}

fn bump(ball: &KoranyiBall, w: &HPoint) -> f64 {
    let r4 = ball.relative(w).gauge4() / ball.radius.powi(4);
    if r4 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r4)).exp()
    }
}

/// Dilation scaling `∫ f∘δ_r = r^{−Q} ∫ f`, left invariance `∫ f(z₀·w) dw = ∫ f`, both with
/// Cartesian cubature, and `|B(e, 1)| = π²/2` for `n = 1`.
pub fn haar(report: &mut ExperimentReport, config: &ExperimentConfig) -> Result<(), ExperimentError> {
    const TOL: f64 = 1e-4;
    let n = 1;
    let spec = hh_core::QuadSpec { relative_tolerance: 1e-7, points_per_axis: 6, max_subdivisions: 20_000, ..hh_core::QuadSpec::default() };
    let ball = KoranyiBall::new(HPoint::new(&[0.3, -0.2], 0.1), 1.0)?;
    let q = 2 * n as i32 + 2;
    let integrate = |map: &dyn Fn(&[f64]) -> HPoint, support: &KoranyiBall| -> Result<f64, ExperimentError> {
        let (lo, hi) = bounding_box(&support.center, support.radius);
        Ok(integrate_box(&|v: &[f64]| bump(&ball, &map(v)), &lo, &hi, &spec)?.value)
    };
    let point = |v: &[f64]| HPoint::new(&v[..2 * n], v[2 * n]);
    let base = integrate(&point, &ball)?;
    let mut table = Table::new("haar", &["transform", "parameter", "integral", "normalised", "relative_error"]);
    table.push(vec!["identity".into(), 0.0.into(), base.into(), base.into(), 0.0.into()]);
    let mut worst_scale = 0.0f64;
    for r in [0.5, 2.0, 3.0] {
        let support = KoranyiBall::new(ball.center.scaled(1.0 / r), 1.0 / r)?;
        let v = integrate(&|x| point(x).scaled(r), &support)?;
        let normalised = v * f64::powi(r, q);
        let err = (normalised / base - 1.0).abs();
        worst_scale = worst_scale.max(err);
        table.push(vec!["dilation".into(), r.into(), v.into(), normalised.into(), err.into()]);
    }
    let mut rng = setup::rng(config, 300);
    let mut worst_left = 0.0f64;
    for k in 0..3 {
        let z0 = random_point(&mut rng, n, 1.5);
        let support = KoranyiBall::new(z0.inverse().compose(&ball.center), 1.0)?;
        let v = integrate(&|x| z0.compose(&point(x)), &support)?;
        let err = (v / base - 1.0).abs();
        worst_left = worst_left.max(err);
        table.push(vec!["left_translation".into(), (k as f64).into(), v.into(), v.into(), err.into()]);
    }
    report.check_le("haar_dilation_scaling", worst_scale, TOL, "r^Q ∫ f∘δ_r against ∫ f, r ∈ {1/2, 2, 3}");
    report.check_le("haar_left_invariance", worst_left, TOL, "three random left translations");
    let exact = std::f64::consts::PI.powi(2) / 2.0;
    let unit = KoranyiBall::centered(n, 1.0)?;
    let vol = integrate_ball(&|_| 1.0, &unit, &config.quad_spec())?;
    table.push(vec!["unit_ball_volume".into(), 1.0.into(), vol.value.into(), unit_ball_volume(n).into(), (vol.value / exact - 1.0).abs().into()]);
    report.check_le("unit_ball_volume", (vol.value - exact).abs(), 1e-6, "|B(e,1)| against π²/2");
    report.constant("unit_ball_volume", vol.value, vol.error_estimate, "n = 1");
    report.tables.push(table);
    Ok(())
}
