//! The fundamental solution `Φ = c_n ρ^{−2n}` of the sub-Laplacian, potentials `b = a ∗ Φ` of
//! atoms and their left-invariant derivatives.
//!
//! Away from the atom (`ρ(c⁻¹·z) ≥ 2δ`) the convolution is summed over the atom's product rule,
//! whose discrete moments vanish, with the symbolic derivative kernels `X^I Φ`. Near the atom the
//! integral is taken in gauge-polar coordinates centred at `z`, where the singularity becomes the
//! Jacobian power `s^{Q−1−2n−d(I)}` and the rays are clipped exactly to the atom's ball.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::atoms::{Atom, AtomRule};
use crate::error::PotentialError;
use crate::gauss;
use crate::group::HPoint;
use crate::kernel::{CompiledKernel, KernelExpr, MultiIndex, Side};
use crate::polar::{pieces, sphere_crossings, SphereRule};
use crate::quadrature::{integrate_fullspace_zonal, QuadResult, QuadSpec};
use crate::testfn::TestFunction;

/// A value with its error bar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `c_n = 1/(4n(n+2) ∫ |x|² (ρ⁴ + 1)^{−(n+4)/2})`, together with the quadrature record.
pub fn compute_cn(n: usize, spec: &QuadSpec) -> Result<(Estimate, QuadResult), PotentialError> {
    if n == 0 {
        return Err(PotentialError::Kernel(crate::error::KernelError::Group(crate::error::GroupError::ZeroDimension)));
    }
    let e = -(n as f64 + 4.0) / 2.0;
    let s = QuadSpec { tail_exponent: Some(2.0 * n as f64 + 6.0), ..spec.clone() };
    let r = integrate_fullspace_zonal(&|x, t| x * x * (x.powi(4) + t * t + 1.0).powf(e), n, &s)?;
    let k = 4.0 * (n * (n + 2)) as f64;
    let value = 1.0 / (k * r.value);
    Ok((Estimate { value, error: value * r.error_estimate / r.value }, r))
}

#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    pub n: usize,
    pub c_n: Estimate,
    pub kernel: KernelExpr,
}

impl FundamentalSolution {
    pub fn new(n: usize, spec: &QuadSpec) -> Result<Self, PotentialError> {
        let (c_n, _) = compute_cn(n, spec)?;
        Ok(Self { n, c_n, kernel: KernelExpr::rho_power(n, Ratio::from_integer(2 * n as i64)) })
    }

    /// `Φ(z)`.
    pub fn eval(&self, z: &HPoint) -> f64 {
        self.c_n.value * z.gauge4().powf(-(self.n as f64) / 2.0)
    }
}

/// Highest homogeneous degree of cached derivative kernels.
pub const MAX_CACHED_DEGREE: u32 = 3;

/// Distances (in units of `δ`) switching between near-field, fine-rule and coarse-rule evaluation.
pub const NEAR_LIMIT: f64 = 2.0;
pub const COARSE_LIMIT: f64 = 8.0;
pub const FAR_LIMIT: f64 = 32.0;

/// Near-field ray rule.
#[derive(Clone, Debug)]
struct NearRule {
    dirs: Vec<HPoint>,
    weights: Vec<f64>,
    /// `(X^I ρ^{−2n})(σ⁻¹)` per direction, for `d(I) ≤ 1`.
    kernel_on_dirs: BTreeMap<MultiIndex, Vec<f64>>,
    radial_order: usize,
}

#[derive(Clone, Debug)]
pub struct PotentialField {
    pub atom: Atom,
    pub fs: Arc<FundamentalSolution>,
    pub kernels: Arc<BTreeMap<MultiIndex, (KernelExpr, CompiledKernel)>>,
    /// Quadrature specification used by the [`LeftJet`] implementation.
    pub spec: QuadSpec,
    near: Arc<NearRule>,
}

/// Derivative kernels `X^I ρ^{−2n}` for all `d(I) ≤ 3`.
pub fn derivative_kernels(n: usize) -> BTreeMap<MultiIndex, (KernelExpr, CompiledKernel)> {
    let base = KernelExpr::rho_power(n, Ratio::from_integer(2 * n as i64));
    let mut out = BTreeMap::new();
    for d in 0..=MAX_CACHED_DEGREE {
        for i in MultiIndex::of_degree(n, d) {
            let e = base.apply_multi(&i, Side::Left).expect("index length matches n");
            let c = e.compile();
            out.insert(i, (e, c));
        }
    }
    out
}

impl PotentialField {
    pub fn new(atom: Atom, fs: Arc<FundamentalSolution>, spec: &QuadSpec) -> Self {
        let kernels = Arc::new(derivative_kernels(atom.n()));
        Self::with_kernels(atom, fs, kernels, spec)
    }

    /// Reuses kernels computed for another field on the same group.
    pub fn with_kernels(
        atom: Atom,
        fs: Arc<FundamentalSolution>,
        kernels: Arc<BTreeMap<MultiIndex, (KernelExpr, CompiledKernel)>>,
        spec: &QuadSpec,
    ) -> Self {
        let n = atom.n();
        let m = spec.points_per_axis.max(2);
        let sphere = SphereRule::new(n, 2 * m, 2 * m);
        let mut kernel_on_dirs = BTreeMap::new();
        for d in 0..=1 {
            for i in MultiIndex::of_degree(n, d) {
                let k = &kernels[&i].1;
                kernel_on_dirs.insert(i, sphere.dirs.iter().map(|s| k.eval_point(&s.inverse())).collect());
            }
        }
        let near = NearRule { dirs: sphere.dirs, weights: sphere.weights, kernel_on_dirs, radial_order: m };
        Self { atom, fs, kernels, spec: spec.clone(), near: Arc::new(near) }
    }

    pub fn n(&self) -> usize {
        self.atom.n()
    }

    pub fn c_n(&self) -> f64 {
        self.fs.c_n.value
    }

    pub fn kernel(&self, index: &MultiIndex) -> Result<&CompiledKernel, PotentialError> {
        self.kernels.get(index).map(|(_, c)| c).ok_or(PotentialError::Uncached(index.degree()))
    }

    /// `ρ(c⁻¹·z)/δ`.
    pub fn relative_distance(&self, z: &HPoint) -> f64 {
        self.atom.center().gauge_distance(z) / self.atom.delta()
    }

    /// `c_n Σ_k W_k a_k K(u_k⁻¹·c⁻¹·z)` over one of the atom's rules.
    pub fn rule_sum(&self, rule: &AtomRule, kernel: &CompiledKernel, z: &HPoint) -> f64 {
        let y = self.atom.center().inverse().compose(z);
        let n = y.n();
        let mut x = [0.0f64; 16];
        let mut acc = 0.0;
        for ((u, w), a) in rule.nodes.iter().zip(&rule.weights).zip(&rule.values) {
            let t = relative_node(u, &y, &mut x[..2 * n]);
            acc += w * a * kernel.eval(&x[..2 * n], t);
        }
        self.c_n() * acc
    }

    /// [`Self::rule_sum`] for the kernel `ρ^{−2n}` itself.
    pub fn value_sum(&self, rule: &AtomRule, z: &HPoint) -> f64 {
        let y = self.atom.center().inverse().compose(z);
        let n = y.n();
        let mut x = [0.0f64; 16];
        let mut acc = 0.0;
        for ((u, w), a) in rule.nodes.iter().zip(&rule.weights).zip(&rule.values) {
            let t = relative_node(u, &y, &mut x[..2 * n]);
            let r2: f64 = x[..2 * n].iter().map(|v| v * v).sum();
            acc += w * a * value_kernel_from_g4(n, r2 * r2 + t * t);
        }
        self.c_n() * acc
    }

    /// Near-field value of `c_n ∫ a(w) K_I(w⁻¹·z) dw` for `d(I) ≤ 1`.
    ///
    /// The kernel is split as `K_I χ + K_I (1 − χ)` with a smooth cutoff `χ(ρ(w⁻¹·z)/η)`,
    /// `η = δ`. The singular part is integrated in gauge-polar coordinates around `z`
    /// (`a(z·sσ) K_I(σ⁻¹) χ(s/η) s^{Q−1−2n−d(I)}`, smooth in `s` and `σ`); the remainder is smooth
    /// in `w` and summed over the atom's fine rule.
    fn near_field(&self, index: &MultiIndex, z: &HPoint) -> f64 {
        let n = self.n();
        let q = 2 * n as i32 + 2;
        let power = q - 1 - 2 * n as i32 - index.degree() as i32;
        let eta = self.atom.delta();
        let kvals = &self.near.kernel_on_dirs[index];
        let rule = gauss::rule(self.near.radial_order);
        let ball = self.atom.ball();
        let mut singular = 0.0;
        for ((sigma, wd), kv) in self.near.dirs.iter().zip(&self.near.weights).zip(kvals) {
            let crossings = sphere_crossings(z, sigma, &ball.center, ball.radius, 0.0, eta);
            let mut breaks: Vec<f64> = vec![0.5 * eta, 0.75 * eta];
            breaks.extend(crossings.iter().copied());
            let mut ray = 0.0;
            for (lo, hi) in pieces(breaks, 0.0, eta) {
                let mid = z.compose(&sigma.scaled(0.5 * (lo + hi)));
                if !ball.contains(&mid) {
                    continue;
                }
                let near = |x: f64| crossings.iter().any(|c| (c - x).abs() <= 1e-12 * eta);
                for (a, b) in graded(lo, hi, near(lo), near(hi)) {
                    for (s, ws) in rule.mapped(a, b) {
                        let v = self.atom.eval(&z.compose(&sigma.scaled(s)));
                        ray += ws * v * cutoff(s / eta) * s.powi(power);
                    }
                }
            }
            singular += wd * kv * ray;
        }
        let kernel = &self.kernels[index].1;
        let y = self.atom.center().inverse().compose(z);
        let rule = &self.atom.fine;
        let value_kernel = index.degree() == 0;
        let (lo4, hi4) = ((0.5 * eta).powi(4), eta.powi(4));
        let mut x = [0.0f64; 16];
        let mut regular = 0.0;
        for ((u, w), a) in rule.nodes.iter().zip(&rule.weights).zip(&rule.values) {
            let t = relative_node(u, &y, &mut x[..2 * n]);
            let r2: f64 = x[..2 * n].iter().map(|v| v * v).sum();
            let g4 = r2 * r2 + t * t;
            if g4 <= lo4 {
                continue;
            }
            let weight = if g4 >= hi4 { 1.0 } else { 1.0 - cutoff(g4.sqrt().sqrt() / eta) };
            let k = if value_kernel { value_kernel_from_g4(n, g4) } else { kernel.eval(&x[..2 * n], t) };
            regular += w * a * weight * k;
        }
        self.c_n() * (singular + regular)
    }
}

/// Writes the horizontal part of `u⁻¹·y` into `x` and returns its vertical part.
#[inline]
fn relative_node(u: &HPoint, y: &HPoint, x: &mut [f64]) -> f64 {
    let n = y.n();
    let mut sym = 0.0;
    for i in 0..n {
        sym += u.x[i + n] * y.x[i] - u.x[i] * y.x[i + n];
    }
    for i in 0..2 * n {
        x[i] = y.x[i] - u.x[i];
    }
    y.t - u.t - 2.0 * sym
}

/// `ρ^{−2n}` given `ρ⁴`.
#[inline]
fn value_kernel_from_g4(n: usize, g4: f64) -> f64 {
    match n {
        1 => 1.0 / g4.sqrt(),
        2 => 1.0 / g4,
        _ => g4.powf(-0.5 * n as f64),
    }
}

/// Sub-pieces of `[lo, hi]` refined geometrically towards the ends flagged as sphere crossings,
/// where the atom's profile is flat to all orders.
fn graded(lo: f64, hi: f64, at_lo: bool, at_hi: bool) -> SmallVec<[(f64, f64); 8]> {
    const FRACTIONS: [f64; 4] = [0.0, 0.15, 0.4, 1.0];
    let len = hi - lo;
    let mut cuts: SmallVec<[f64; 8]> = SmallVec::new();
    match (at_lo, at_hi) {
        (false, false) => cuts.extend([lo, hi]),
        (true, false) => cuts.extend(FRACTIONS.iter().map(|f| lo + f * len)),
        (false, true) => cuts.extend(FRACTIONS.iter().rev().map(|f| hi - f * len)),
        (true, true) => {
            cuts.extend(FRACTIONS.iter().map(|f| lo + 0.5 * f * len));
            cuts.extend(FRACTIONS.iter().rev().skip(1).map(|f| hi - 0.5 * f * len));
        }
    }
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Smooth cutoff: `1` on `[0, 1/2]`, `0` on `[1, ∞)`.
pub fn cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let v = 2.0 * r - 1.0;
    let a = (-1.0 / v).exp();
    let b = (-1.0 / (1.0 - v)).exp();
    b / (a + b)
}

/// `b(z) = (a ∗ Φ)(z)`.
pub fn potential_eval(pf: &PotentialField, z: &HPoint, _spec: &QuadSpec) -> Result<f64, PotentialError> {
    potential_derivative(pf, &MultiIndex::zero(pf.n()), z, _spec)
}

/// `(X^I b)(z) = c_n ∫ a(w) (X^I ρ^{−2n})(w⁻¹·z) dw` for `d(I) ≤ 3`; indices of degree `≥ 2`
/// require `ρ(c⁻¹·z) ≥ 2δ`.
pub fn potential_derivative(pf: &PotentialField, index: &MultiIndex, z: &HPoint, _spec: &QuadSpec) -> Result<f64, PotentialError> {
    if index.n() != pf.n() {
        return Err(PotentialError::Kernel(crate::error::KernelError::IndexLength {
            got: index.entries().len(),
            expected: 2 * pf.n() + 1,
        }));
    }
    if pf.atom.normalization == 0.0 {
        return Ok(0.0);
    }
    let kernel = pf.kernel(index)?;
    let rel = pf.relative_distance(z);
    if index.degree() == 0 && rel >= NEAR_LIMIT {
        let rule = if rel >= FAR_LIMIT {
            &pf.atom.far
        } else if rel >= COARSE_LIMIT {
            &pf.atom.coarse
        } else {
            &pf.atom.fine
        };
        return Ok(pf.value_sum(rule, z));
    }
    if rel >= FAR_LIMIT {
        Ok(pf.rule_sum(&pf.atom.far, kernel, z))
    } else if rel >= COARSE_LIMIT {
        Ok(pf.rule_sum(&pf.atom.coarse, kernel, z))
    } else if rel >= NEAR_LIMIT {
        Ok(pf.rule_sum(&pf.atom.fine, kernel, z))
    } else if index.degree() >= 2 {
        Err(PotentialError::NearField {
            degree: index.degree(),
            distance: rel * pf.atom.delta(),
            limit: NEAR_LIMIT * pf.atom.delta(),
        })
    } else {
        Ok(pf.near_field(index, z))
    }
}

/// Functions with a value and first-order left-invariant derivatives.
pub trait LeftJet {
    fn n(&self) -> usize;
    fn value(&self, z: &HPoint) -> Result<f64, PotentialError>;
    /// `X_i f(z)` for `0 ≤ i < 2n`.
    fn first(&self, i: usize, z: &HPoint) -> Result<f64, PotentialError>;
}

impl LeftJet for PotentialField {
    fn n(&self) -> usize {
        self.atom.n()
    }

    fn value(&self, z: &HPoint) -> Result<f64, PotentialError> {
        potential_eval(self, z, &self.spec)
    }

    fn first(&self, i: usize, z: &HPoint) -> Result<f64, PotentialError> {
        potential_derivative(self, &MultiIndex::unit(self.atom.n(), i), z, &self.spec)
    }
}

/// `f(x, t) = c₀ + Σ cᵢ xᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub linear: Vec<f64>,
}

impl LeftJet for Affine {
    fn n(&self) -> usize {
        self.linear.len() / 2
    }

    fn value(&self, z: &HPoint) -> Result<f64, PotentialError> {
        Ok(self.constant + self.linear.iter().zip(&z.x).map(|(c, x)| c * x).sum::<f64>())
    }

    fn first(&self, i: usize, _z: &HPoint) -> Result<f64, PotentialError> {
        Ok(self.linear[i])
    }
}

/// Coefficients `(f(z), X_1 f(z), …, X_{2n} f(z))` of the degree-one Taylor polynomial at `z`.
pub fn taylor_coefficients(f: &dyn LeftJet, z: &HPoint) -> Result<Vec<f64>, PotentialError> {
    let mut c = vec![f.value(z)?];
    for i in 0..2 * f.n() {
        c.push(f.first(i, z)?);
    }
    Ok(c)
}

/// `P(w) = c₀ + Σ cᵢ wᵢ` for coefficients in the layout of [`taylor_coefficients`].
#[inline]
pub fn affine_eval(coeffs: &[f64], w: &HPoint) -> f64 {
    coeffs[0] + coeffs[1..].iter().zip(&w.x).map(|(c, x)| c * x).sum::<f64>()
}

/// `R(z, w) = f(z·w) − Σ_{d(I) ≤ 1} (X^I f)(z) w^I`.
pub fn taylor_remainder(f: &dyn LeftJet, z: &HPoint, w: &HPoint) -> Result<f64, PotentialError> {
    let c = taylor_coefficients(f, z)?;
    Ok(f.value(&z.compose(w))? - affine_eval(&c, w))
}

/// The Taylor remainder of the potential.
pub fn remainder_eval(pf: &PotentialField, z: &HPoint, w: &HPoint, _spec: &QuadSpec) -> Result<f64, PotentialError> {
    taylor_remainder(pf, z, w)
}

/// Result of a weak-identity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    /// `∫ b ℒu`.
    pub lhs: f64,
    /// `∫ a u`.
    pub rhs: f64,
    pub residual: f64,
    /// `‖a‖₁ · sup|u|`.
    pub scale: f64,
    pub order: usize,
}

impl WeakResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }
}

/// `∫ b·ℒu − ∫ a·u`.
///
/// By Fubini, `∫ b ℒu = ∫ a(w) F(w) dw` with `F(w) = c_n ∫ ρ(v)^{−2n} (ℒu)(w·v) dv`; the outer
/// integral uses the atom's coarse rule and the inner one gauge-polar coordinates around `w`
/// (doubling shells out to where `u` is negligible), with `order = spec.points_per_axis` nodes per
/// shell and `2·order` nodes per angular axis.
pub fn weak_residual(pf: &PotentialField, u: &TestFunction, spec: &QuadSpec) -> Result<WeakResidual, PotentialError> {
    let n = pf.n();
    let q = 2 * n as i32 + 2;
    let m = spec.points_per_axis;
    let sphere = SphereRule::new(n, 2 * m, 2 * m);
    let rule = gauss::rule(m);
    let atom = &pf.atom;
    let outer = &atom.coarse;
    let center = atom.center();
    // ℒu is below e^{-60} outside B(c_u, 8) for the supported profiles.
    const REACH: f64 = 8.0;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for ((u_rel, wgt), a) in outer.nodes.iter().zip(&outer.weights).zip(&outer.values) {
        let w = center.compose(u_rel);
        rhs += wgt * a * u.value(&w);
        let reach = u.center.gauge_distance(&w) + REACH;
        let mut shells = vec![0.0, 0.5];
        while *shells.last().unwrap() < reach {
            let next = 2.0 * shells.last().unwrap();
            shells.push(next);
        }
        let mut f = 0.0;
        for (sigma, wd) in sphere.dirs.iter().zip(&sphere.weights) {
            let mut ray = 0.0;
            for sh in shells.windows(2) {
                for (s, ws) in rule.mapped(sh[0], sh[1]) {
                    ray += ws * s.powi(q - 1 - 2 * n as i32) * u.sublaplacian(&w.compose(&sigma.scaled(s)));
                }
            }
            f += wd * ray;
        }
        lhs += wgt * a * pf.c_n() * f;
    }
    Ok(WeakResidual { lhs, rhs, residual: lhs - rhs, scale: atom.l1_norm * u.sup_abs(), order: m })
}
