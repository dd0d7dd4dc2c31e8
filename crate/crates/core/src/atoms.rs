//! Smooth atoms: compactly supported functions on a Koranyi ball with a prescribed `L^{p₀}`
//! size and vanishing moments up to a homogeneous degree `N`.
//!
//! An atom on `B(c, δ)` has the form `a(w) = s · ψ(ρ(v)) · P(v)` with `v = δ⁻¹·(c⁻¹·w)`,
//! `ψ(r) = exp(−1/(1 − r⁴))` for `r < 1`, and `P = Σ c_J v^J`. The coefficients solve the Gram
//! system `∫ψ P v^I = 0` for `d(I) ≤ N` and `∫ψ P v^T = 1` for the target index `T`; the scale `s`
//! makes `‖a‖_{p₀} = |B|^{1/p₀ − 1/p}` hold with equality.
//!
//! Besides the closed form, an atom carries two fixed product rules on its ball (gauge-polar,
//! Gauss–Legendre in the radius). The node values are projected so that the discrete moments of
//! degree `≤ N` vanish to rounding; potentials evaluated through these rules inherit the
//! cancellation exactly.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::AtomError;
use crate::gauss;
use crate::group::{GroupContext, HPoint, KoranyiBall};
use crate::kernel::{monomial_basis, MultiIndex, PolySpace};
use crate::polar::SphereRule;
use crate::quadrature::{integrate_ball, QuadSpec};

/// `N_p = ⌊Q(1/p − 1)⌋ + 1`.
pub fn np_of(p: f64, q: usize) -> Result<u32, AtomError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(AtomError::Params(format!("p = {p} outside (0, 1]")));
    }
    // Guard against 1/p − 1 landing a rounding error below an integer.
    let v = q as f64 * (1.0 / p - 1.0);
    Ok((v + 1e-12).floor() as u32 + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    pub p: f64,
    pub p0: f64,
    /// Highest homogeneous degree of vanishing moments.
    pub big_n: u32,
    pub ball: KoranyiBall,
}

impl AtomParams {
    pub fn new(p: f64, p0: f64, big_n: u32, ball: KoranyiBall) -> Result<Self, AtomError> {
        let params = Self::unchecked_order(p, p0, big_n, ball)?;
        let np = np_of(p, 2 * params.ball.n() + 2)?;
        if big_n < np {
            return Err(AtomError::Params(format!("N = {big_n} below N_p = {np}")));
        }
        Ok(params)
    }

    /// Like [`AtomParams::new`] but without the lower bound `N ≥ N_p`; used for negative controls.
    pub fn unchecked_order(p: f64, p0: f64, big_n: u32, ball: KoranyiBall) -> Result<Self, AtomError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(AtomError::Params(format!("p = {p} outside (0, 1]")));
        }
        if !(p0 > 1.0 && p0.is_finite()) {
            return Err(AtomError::Params(format!("p0 = {p0} must lie in (1, ∞)")));
        }
        Ok(Self { p, p0, big_n, ball })
    }

    pub fn n(&self) -> usize {
        self.ball.n()
    }

    pub fn delta(&self) -> f64 {
        self.ball.radius
    }

    /// `|B|^{1/p₀ − 1/p}`.
    pub fn size_bound(&self) -> f64 {
        let vol = GroupContext::new(self.n()).expect("n ≥ 1").ball_volume(self.delta());
        vol.powf(1.0 / self.p0 - 1.0 / self.p)
    }
}

/// The radial profile `ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpShape {
    /// `exp(−1/(1 − r⁴))`.
    ExpQuartic,
}

impl BumpShape {
    /// Profile value as a function of `r⁴ = ρ⁴`.
    #[inline]
    pub fn eval_r4(self, r4: f64) -> f64 {
        match self {
            BumpShape::ExpQuartic => {
                if r4 >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - r4)).exp()
                }
            }
        }
    }
}

/// Sizes of a gauge-polar product rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSize {
    pub radial: usize,
    pub psi: usize,
    pub angle: usize,
}

impl RuleSize {
    pub const fn new(radial: usize, psi: usize, angle: usize) -> Self {
        Self { radial, psi, angle }
    }
}

/// A product rule on the unit ball: nodes, weights (`Σ w = |B(e,1)|`).
pub fn unit_ball_rule(n: usize, size: RuleSize) -> (Vec<HPoint>, Vec<f64>) {
    let q = 2 * n as i32 + 2;
    let sphere = SphereRule::new(n, size.psi, size.angle);
    // The profile is flat at the sphere; pieces graded towards s = 1 keep Gauss–Legendre accurate.
    const BREAKS: [f64; 5] = [0.0, 0.5, 0.8, 0.95, 1.0];
    let per_piece = size.radial.div_ceil(4).max(1);
    let mut radial = Vec::new();
    for w in BREAKS.windows(2) {
        radial.extend(gauss::rule(per_piece).mapped(w[0], w[1]).map(|(s, w)| (s, w * s.powi(q - 1))));
    }
    let mut nodes = Vec::with_capacity(sphere.len() * radial.len());
    let mut weights = Vec::with_capacity(sphere.len() * radial.len());
    for (d, wd) in sphere.dirs.iter().zip(&sphere.weights) {
        for &(s, ws) in &radial {
            nodes.push(d.scaled(s));
            weights.push(wd * ws);
        }
    }
    (nodes, weights)
}

/// Discrete version of an atom: nodes relative to the atom centre (at scale `δ`), weights
/// (`Σ w = |B|`), and node values whose discrete moments of degree `≤ N` vanish.
#[derive(Clone, Debug)]
pub struct AtomRule {
    pub size: RuleSize,
    pub nodes: Vec<HPoint>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl AtomRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w a(v) v^I` for the relative nodes.
    pub fn moment(&self, index: &MultiIndex) -> f64 {
        self.nodes.iter().zip(&self.weights).zip(&self.values).map(|((v, w), a)| w * a * index.monomial(v)).sum()
    }

    fn scaled(&self, k: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * k).collect(), ..self.clone() }
    }
}

/// Default rule sizes for potential evaluation at gauge distance `2δ ≤ ρ < 8δ` (fine),
/// `8δ ≤ ρ < 32δ` (coarse) and `ρ ≥ 32δ` (far) from the atom centre.
pub const FINE_RULE: RuleSize = RuleSize::new(24, 20, 20);
pub const COARSE_RULE: RuleSize = RuleSize::new(12, 10, 10);
pub const FAR_RULE: RuleSize = RuleSize::new(12, 8, 8);

#[derive(Clone, Debug)]
pub struct Atom {
    pub params: AtomParams,
    pub target: MultiIndex,
    pub bump: BumpShape,
    /// `monomial_basis(N + 1, n)`.
    pub basis: PolySpace,
    /// Coefficients of `P` in unit coordinates, aligned with `basis`.
    pub poly_coeffs: Vec<f64>,
    /// The scale `s`.
    pub normalization: f64,
    /// `max_{d(I) ≤ N} |∫ a w^I| / (‖a‖₁ (δ + ρ(c))^{d(I)})`.
    pub moment_certificate: f64,
    pub gram_condition: f64,
    pub l1_norm: f64,
    pub fine: Arc<AtomRule>,
    pub coarse: Arc<AtomRule>,
    pub far: Arc<AtomRule>,
}

/// Serializable record of an atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub params: AtomParams,
    pub target: MultiIndex,
    pub bump: BumpShape,
    pub basis: Vec<MultiIndex>,
    pub poly_coeffs: Vec<f64>,
    pub normalization: f64,
    pub moment_certificate: f64,
    pub gram_condition: f64,
    pub l1_norm: f64,
    pub fine_rule: RuleSize,
    pub coarse_rule: RuleSize,
    pub far_rule: RuleSize,
}

/// Moment tolerance on the scaled certificate.
pub const MOMENT_TOLERANCE: f64 = 1e-8;

impl Atom {
    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn center(&self) -> &HPoint {
        &self.params.ball.center
    }

    pub fn delta(&self) -> f64 {
        self.params.delta()
    }

    pub fn ball(&self) -> &KoranyiBall {
        &self.params.ball
    }

    /// Unit coordinates `δ⁻¹·(c⁻¹·w)`.
    #[inline]
    pub fn unit_coords(&self, w: &HPoint) -> HPoint {
        self.center().inverse().compose(w).scaled(1.0 / self.delta())
    }

    /// `ψ · P` at unit coordinates, without the scale `s`.
    #[inline]
    pub fn shape_at_unit(&self, v: &HPoint) -> f64 {
        let b = self.bump.eval_r4(v.gauge4());
        if b == 0.0 {
            return 0.0;
        }
        b * self.basis.eval(&self.poly_coeffs, v)
    }

    /// `a(w)`.
    pub fn eval(&self, w: &HPoint) -> f64 {
        self.normalization * self.shape_at_unit(&self.unit_coords(w))
    }

    pub fn record(&self) -> AtomRecord {
        AtomRecord {
            params: self.params.clone(),
            target: self.target.clone(),
            bump: self.bump,
            basis: self.basis.basis.clone(),
            poly_coeffs: self.poly_coeffs.clone(),
            normalization: self.normalization,
            moment_certificate: self.moment_certificate,
            gram_condition: self.gram_condition,
            l1_norm: self.l1_norm,
            fine_rule: self.fine.size,
            coarse_rule: self.coarse.size,
            far_rule: self.far.size,
        }
    }

    /// `k · a`; `k = 0` gives the zero function on the same ball.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            normalization: self.normalization * k,
            l1_norm: self.l1_norm * k.abs(),
            fine: Arc::new(self.fine.scaled(k)),
            coarse: Arc::new(self.coarse.scaled(k)),
            far: Arc::new(self.far.scaled(k)),
            ..self.clone()
        }
    }

    /// `‖a‖_{p₀}` by quadrature.
    pub fn lp_norm(&self, p: f64, spec: &QuadSpec) -> Result<f64, AtomError> {
        let r = integrate_ball(&|w| self.eval(w).abs().powf(p), self.ball(), spec)?;
        Ok(r.value.powf(1.0 / p))
    }
}

fn ball_rule_values(
    n: usize,
    size: RuleSize,
    delta: f64,
    constraints: &[MultiIndex],
    shape: impl Fn(&HPoint) -> f64,
    bump: BumpShape,
) -> Result<AtomRule, AtomError> {
    let q = 2 * n as i32 + 2;
    let (unit_nodes, unit_weights) = unit_ball_rule(n, size);
    let mut values: Vec<f64> = unit_nodes.iter().map(&shape).collect();
    // Project the discrete function onto zero discrete moments.
    let k = constraints.len();
    if k > 0 {
        let mut h = DMatrix::<f64>::zeros(k, k);
        let mut m = DVector::<f64>::zeros(k);
        for ((v, w), a) in unit_nodes.iter().zip(&unit_weights).zip(&values) {
            let psi = bump.eval_r4(v.gauge4());
            let mono: Vec<f64> = constraints.iter().map(|i| i.monomial(v)).collect();
            for i in 0..k {
                m[i] += w * a * mono[i];
                for j in 0..k {
                    h[(i, j)] += w * psi * mono[i] * mono[j];
                }
            }
        }
        let chol = h.cholesky().ok_or(AtomError::SingularGram(f64::INFINITY))?;
        let lambda = chol.solve(&m);
        for (v, a) in unit_nodes.iter().zip(values.iter_mut()) {
            let psi = bump.eval_r4(v.gauge4());
            let corr: f64 = constraints.iter().zip(lambda.iter()).map(|(i, l)| l * i.monomial(v)).sum();
            *a -= psi * corr;
        }
    }
    let nodes = unit_nodes.iter().map(|v| v.scaled(delta)).collect();
    let weights = unit_weights.iter().map(|w| w * delta.powi(q)).collect();
    Ok(AtomRule { size, nodes, weights, values })
}

/// Builds an atom with the given target monomial of degree `N + 1`, using the default rule sizes.
pub fn build_atom(params: AtomParams, target: MultiIndex, spec: &QuadSpec) -> Result<Atom, AtomError> {
    build_atom_with_rules(params, target, spec, [FINE_RULE, COARSE_RULE, FAR_RULE])
}

/// Builds an atom with explicit `[fine, coarse, far]` rule sizes.
pub fn build_atom_with_rules(params: AtomParams, target: MultiIndex, spec: &QuadSpec, rules: [RuleSize; 3]) -> Result<Atom, AtomError> {
    let [fine, coarse, far] = rules;
    let n = params.n();
    if target.n() != n || target.entries().len() != 2 * n + 1 {
        return Err(AtomError::Target(format!("{target} has the wrong length for n = {n}")));
    }
    if target.degree() != params.big_n + 1 {
        return Err(AtomError::Target(format!("{target} (degree {})", target.degree())));
    }
    let bump = BumpShape::ExpQuartic;
    let basis = monomial_basis(params.big_n + 1, n);
    let constraints: Vec<MultiIndex> = basis.basis.iter().filter(|i| i.degree() <= params.big_n).cloned().collect();
    let mut span = constraints.clone();
    span.push(target.clone());
    let k = span.len();
    let unit = KoranyiBall::centered(n, 1.0)?;
    let build_spec = QuadSpec { relative_tolerance: spec.relative_tolerance.max(0.1 * MOMENT_TOLERANCE), ..spec.clone() };
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let (a, b) = (&span[i], &span[j]);
            let f = |v: &HPoint| bump.eval_r4(v.gauge4()) * a.monomial(v) * b.monomial(v);
            let g = integrate_ball(&f, &unit, &build_spec)?.value;
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = gram.clone().symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e.abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let chol = gram.cholesky().ok_or(AtomError::SingularGram(condition))?;
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let c = chol.solve(&rhs);
    let mut poly_coeffs = vec![0.0; basis.len()];
    for (idx, coeff) in span.iter().zip(c.iter()) {
        let pos = basis.basis.iter().position(|b| b == idx).expect("span ⊆ basis");
        poly_coeffs[pos] += coeff;
    }

    let delta = params.delta();
    let q = 2 * n as i32 + 2;
    let shape = |v: &HPoint| {
        let b = bump.eval_r4(v.gauge4());
        if b == 0.0 {
            0.0
        } else {
            b * basis.eval(&poly_coeffs, v)
        }
    };
    let unit_p0 = integrate_ball(&|v| shape(v).abs().powf(params.p0), &unit, &build_spec)?.value;
    // ‖a‖_{p₀} = s δ^{Q/p₀} ‖ψP‖_{p₀, unit}
    let normalization = params.size_bound() / (delta.powf(q as f64 / params.p0) * unit_p0.powf(1.0 / params.p0));
    // |ψP| has kinks on the zero set of P, so adaptive cubature only reaches a few digits.
    let l1_spec = QuadSpec { relative_tolerance: spec.relative_tolerance.max(1e-4), ..spec.clone() };
    let unit_l1 = integrate_ball(&|v| shape(v).abs(), &unit, &l1_spec)?.value;
    let l1_norm = normalization * delta.powi(q) * unit_l1;

    let fine_rule = ball_rule_values(n, fine, delta, &constraints, |v| normalization * shape(v), bump)?;
    let coarse_rule = ball_rule_values(n, coarse, delta, &constraints, |v| normalization * shape(v), bump)?;
    let far_rule = ball_rule_values(n, far, delta, &constraints, |v| normalization * shape(v), bump)?;
    let mut atom = Atom {
        params,
        target,
        bump,
        basis,
        poly_coeffs,
        normalization,
        moment_certificate: 0.0,
        gram_condition: condition,
        l1_norm,
        fine: Arc::new(fine_rule),
        coarse: Arc::new(coarse_rule),
        far: Arc::new(far_rule),
    };
    atom.moment_certificate = certificate(&atom, spec)?;
    Ok(atom)
}

/// Rebuilds an atom from its record; the quadrature rules are regenerated.
pub fn atom_from_record(rec: &AtomRecord, spec: &QuadSpec) -> Result<Atom, AtomError> {
    build_atom_with_rules(rec.params.clone(), rec.target.clone(), spec, [rec.fine_rule, rec.coarse_rule, rec.far_rule])
}

/// Scaled certificate of the moments of degree `≤ N`.
pub fn certificate(atom: &Atom, spec: &QuadSpec) -> Result<f64, AtomError> {
    if atom.l1_norm == 0.0 {
        return Ok(0.0);
    }
    let basis = monomial_basis(atom.params.big_n, atom.n());
    let moments = atom_moments(atom, atom.params.big_n, spec)?;
    let scale = atom.delta() + atom.center().gauge();
    Ok(basis
        .basis
        .iter()
        .zip(&moments)
        .map(|(i, m)| m.abs() / (atom.l1_norm * scale.powi(i.degree() as i32)))
        .fold(0.0, f64::max))
}

/// `a'(w) = a(z₀⁻¹·w)`: the same atom on `B(z₀·c, δ)`.
pub fn translate_atom(atom: &Atom, z0: &HPoint, spec: &QuadSpec) -> Result<Atom, AtomError> {
    let mut out = atom.clone();
    out.params.ball = KoranyiBall::new(z0.compose(atom.center()), atom.delta())?;
    out.moment_certificate = certificate(&out, spec)?;
    Ok(out)
}

/// The moments `∫ a(w) w^I dw` for `I` in `monomial_basis(k, n)`.
pub fn atom_moments(atom: &Atom, k: u32, spec: &QuadSpec) -> Result<Vec<f64>, AtomError> {
    let basis = monomial_basis(k, atom.n());
    basis
        .basis
        .iter()
        .map(|i| {
            if atom.normalization == 0.0 {
                return Ok(0.0);
            }
            let f = |w: &HPoint| atom.eval(w) * i.monomial(w);
            let scale = (atom.delta() + atom.center().gauge()).powi(i.degree() as i32);
            let floor = spec.relative_tolerance * atom.l1_norm * scale;
            let spec = QuadSpec { absolute_tolerance: spec.absolute_tolerance.max(floor), ..spec.clone() };
            Ok(integrate_ball(&f, atom.ball(), &spec)?.value)
        })
        .collect()
}

/// `a(z)`.
pub fn eval_atom(atom: &Atom, z: &HPoint) -> f64 {
    atom.eval(z)
}

/// The default atom target: the `t`-monomial when `N = 1`, otherwise the first basis element of
/// degree `N + 1`.
pub fn default_target(n: usize, big_n: u32) -> MultiIndex {
    if big_n == 1 {
        MultiIndex::unit(n, 2 * n)
    } else {
        MultiIndex::of_degree(n, big_n + 1).into_iter().next().expect("non-empty degree class")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadSpec {
        QuadSpec { relative_tolerance: 1e-10, ..QuadSpec::default() }
    }

    fn default_atom() -> Atom {
        let params = AtomParams::new(0.9, 2.0, 1, KoranyiBall::centered(1, 1.0).unwrap()).unwrap();
        build_atom(params, MultiIndex::unit(1, 2), &spec()).unwrap()
    }

    #[test]
    fn np_examples() {
        assert_eq!(np_of(1.0, 4).unwrap(), 1);
        assert_eq!(np_of(0.9, 4).unwrap(), 1);
        assert_eq!(np_of(0.5, 4).unwrap(), 5);
        assert!(np_of(0.0, 4).is_err());
        assert!(np_of(1.5, 4).is_err());
    }

    #[test]
    fn params_validation() {
        let b = KoranyiBall::centered(1, 1.0).unwrap();
        assert!(AtomParams::new(0.9, 2.0, 0, b.clone()).is_err());
        assert!(AtomParams::new(0.9, 1.0, 1, b.clone()).is_err());
        assert!(AtomParams::unchecked_order(0.9, 2.0, 0, b).is_ok());
    }

    #[test]
    fn default_atom_certificate_and_norm() {
        let a = default_atom();
        assert!(a.moment_certificate < MOMENT_TOLERANCE, "{}", a.moment_certificate);
        let norm = a.lp_norm(2.0, &QuadSpec { relative_tolerance: 1e-12, points_per_axis: 10, ..spec() }).unwrap();
        let want = (PI * PI / 2.0f64).powf(0.5 - 1.0 / 0.9);
        assert!((norm / want - 1.0).abs() < 1e-10, "{norm} {want}");
        // Hölder: ‖a‖₁ ≤ |B|^{1 − 1/p}
        assert!(a.l1_norm <= (PI * PI / 2.0f64).powf(1.0 - 1.0 / 0.9) * (1.0 + 1e-8));
    }

    #[test]
    fn default_atom_is_odd_in_t() {
        let a = default_atom();
        // P is a multiple of t, the Gram matrix being diagonal by symmetry.
        for (i, c) in a.basis.basis.iter().zip(&a.poly_coeffs) {
            if *i != MultiIndex::unit(1, 2) {
                assert!(c.abs() < 1e-12, "{i} {c}");
            }
        }
        let z = HPoint::new(&[0.2, -0.3], 0.25);
        let mut zr = z.clone();
        zr.t = -zr.t;
        assert!((a.eval(&z) + a.eval(&zr)).abs() < 1e-14);
    }

    #[test]
    fn eval_examples() {
        let a = default_atom();
        assert_eq!(a.eval(&HPoint::new(&[1.2, 0.0], 0.0)), 0.0);
        let near = HPoint::from_gauge_polar(1.0 - 1e-3, 0.3, &[0.6, 0.8]);
        assert!(a.eval(&near).abs() < 1e-8);
        let c0 = a.poly_coeffs[0];
        assert!((a.eval(&HPoint::identity(1)) - a.normalization * (-1.0f64).exp() * c0).abs() < 1e-15);
    }

    #[test]
    fn target_moment_bookkeeping() {
        let a = default_atom();
        let m = atom_moments(&a, 2, &spec()).unwrap();
        let basis = monomial_basis(2, 1);
        let pos = basis.basis.iter().position(|i| *i == MultiIndex::unit(1, 2)).unwrap();
        assert!((m[pos] - a.normalization).abs() < 1e-8 * a.normalization);
        let zero = a.scaled(0.0);
        assert!(atom_moments(&zero, 2, &spec()).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn discrete_moments_vanish() {
        let a = default_atom();
        for (rule, tol) in [(&a.fine, 1e-6), (&a.coarse, 1e-4), (&a.far, 1e-3)] {
            for i in monomial_basis(1, 1).basis {
                assert!(rule.moment(&i).abs() < 1e-14 * a.l1_norm);
            }
            let t = rule.moment(&MultiIndex::unit(1, 2));
            assert!((t - a.normalization).abs() < tol * a.normalization);
        }
    }

    #[test]
    fn refinement_stability() {
        let params = AtomParams::new(0.9, 2.0, 1, KoranyiBall::centered(1, 1.0).unwrap()).unwrap();
        let s = QuadSpec { relative_tolerance: 1e-9, ..spec() };
        let generic = MultiIndex::new(vec![1, 1, 0]).unwrap();
        let a = build_atom(params.clone(), generic.clone(), &s).unwrap();
        let b = build_atom(params, generic, &s.with_order(16)).unwrap();
        let scale = a.poly_coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.poly_coeffs.iter().zip(&b.poly_coeffs) {
            assert!((x - y).abs() < 1e-6 * scale);
        }
        assert!(a.moment_certificate < MOMENT_TOLERANCE);
        assert!(a.gram_condition.is_finite() && a.gram_condition >= 1.0);
    }

    #[test]
    fn translation() {
        let a = default_atom();
        let s = spec();
        let same = translate_atom(&a, &HPoint::identity(1), &s).unwrap();
        assert_eq!(same.center(), a.center());
        let z0 = HPoint::new(&[1.5, -0.7], 2.0);
        let b = translate_atom(&a, &z0, &s).unwrap();
        assert!(b.moment_certificate < 2.0 * MOMENT_TOLERANCE.max(a.moment_certificate));
        let w = HPoint::new(&[0.1, 0.2], -0.3);
        assert!((b.eval(&z0.compose(&w)) - a.eval(&w)).abs() < 1e-13);
        let nb = b.lp_norm(2.0, &s).unwrap();
        let na = a.lp_norm(2.0, &s).unwrap();
        assert!((nb / na - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bad_target() {
        let params = AtomParams::new(0.9, 2.0, 1, KoranyiBall::centered(1, 1.0).unwrap()).unwrap();
        assert!(matches!(build_atom(params, MultiIndex::unit(1, 0), &spec()), Err(AtomError::Target(_))));
    }

    #[test]
    fn record_round_trip() {
        let a = default_atom();
        let json = serde_json::to_string(&a.record()).unwrap();
        let rec: AtomRecord = serde_json::from_str(&json).unwrap();
        let b = atom_from_record(&rec, &spec()).unwrap();
        assert_eq!(a.poly_coeffs, b.poly_coeffs);
    }
}
