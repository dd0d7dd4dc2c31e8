//! End-to-end use of the public API: atom, potential, weak identity and maximal functions.

use std::sync::Arc;

use hh_core::atoms::{build_atom, certificate, default_target, translate_atom, AtomParams};
use hh_core::maximal::{big_n_potential, hardy_littlewood_indicator, MaximalParams, RadialGrid};
use hh_core::potential::{potential_derivative, potential_eval, weak_residual, FundamentalSolution, PotentialField};
use hh_core::table::FastPotential;
use hh_core::testfn::{TestFunction, TestProfile};
use hh_core::{HPoint, KoranyiBall, MultiIndex, QuadSpec};

fn spec() -> QuadSpec {
    QuadSpec { points_per_axis: 6, relative_tolerance: 1e-10, ..QuadSpec::default() }
}

fn field(center: HPoint, delta: f64) -> PotentialField {
    let s = spec();
    let params = AtomParams::new(0.9, 2.0, 1, KoranyiBall::new(center, delta).unwrap()).unwrap();
    let atom = build_atom(params, default_target(1, 1), &s).unwrap();
    PotentialField::new(atom, Arc::new(FundamentalSolution::new(1, &s).unwrap()), &s)
}

#[test]
fn weak_identity_holds_for_a_translated_atom() {
    let pf = field(HPoint::new(&[0.5, -0.5], 1.0), 1.0);
    let u = TestFunction::new(TestProfile::Gaussian, HPoint::new(&[0.5, -0.5], 1.0));
    let r = weak_residual(&pf, &u, &spec().with_order(4)).unwrap();
    assert!(r.relative() < 2e-2, "{r:?}");
}

#[test]
fn potential_is_left_translation_equivariant() {
    let z0 = HPoint::new(&[1.5, -0.5], 2.0);
    let a = field(HPoint::identity(1), 1.0);
    let b = field(z0.clone(), 1.0);
    let s = spec();
    for w in [HPoint::from_gauge_polar(0.5, 0.4, &[0.6, 0.8]), HPoint::from_gauge_polar(5.0, -0.7, &[0.0, 1.0])] {
        let (va, vb) = (potential_eval(&a, &w, &s).unwrap(), potential_eval(&b, &z0.compose(&w), &s).unwrap());
        assert!((va - vb).abs() <= 1e-9 * va.abs().max(1e-12), "{va} {vb}");
    }
    let i = MultiIndex::new(vec![1, 1, 0]).unwrap();
    let w = HPoint::from_gauge_polar(6.0, 0.9, &[0.8, -0.6]);
    let (da, db) = (potential_derivative(&a, &i, &w, &s).unwrap(), potential_derivative(&b, &i, &z0.compose(&w), &s).unwrap());
    assert!((da - db).abs() <= 1e-9 * da.abs());
}

#[test]
fn translated_atom_keeps_its_certificate() {
    let pf = field(HPoint::identity(1), 0.5);
    let moved = translate_atom(&pf.atom, &HPoint::new(&[2.0, 1.0], -3.0), &spec()).unwrap();
    assert!(certificate(&moved, &spec()).unwrap() < 1e-8);
}

#[test]
fn far_field_n_is_dominated_by_the_indicator_term() {
    let fp = FastPotential::new(field(HPoint::identity(1), 1.0), None).unwrap();
    let params = MaximalParams::new(1.2, 2.0, 4).unwrap();
    let grid = RadialGrid::new(1.0 / 64.0, 512.0, 24).unwrap();
    let z = HPoint::from_gauge_polar(40.0, 0.6, &[0.6, 0.8]);
    let n = big_n_potential(&fp, &params, &z, &grid).unwrap();
    let m = hardy_littlewood_indicator(fp.field.atom.ball(), &z, &grid, &params).value;
    // |B|^{−1/p} (Mχ_B)^{(2+Q/q)/Q} with |B| = π²/2 for δ = 1.
    let rhs = (std::f64::consts::PI.powi(2) / 2.0).powf(-1.0 / 0.9) * m.powf((2.0 + 4.0 / 1.2) / 4.0);
    assert!(n.opt.value > 0.0 && n.opt.value <= n.taylor.value);
    let ratio = n.opt.value / rhs;
    assert!(ratio > 1e-2 && ratio < 1e2, "{ratio}");
}
