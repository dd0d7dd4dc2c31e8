//! Deterministic cubature on boxes, Koranyi balls and all of ℍⁿ.
//!
//! Box integrals use adaptive tensor Gauss–Legendre: each cell carries its value at order `m`
//! and, per axis, the difference to the rule that drops to a lower order along that axis. The cell
//! with the largest estimated error is bisected along its worst axis. Ball and whole-space
//! integrals are carried out in gauge-polar coordinates (see [`crate::polar`]), in which a ball
//! centred at the origin is a coordinate box.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::QuadError;
use crate::gauss;
use crate::group::{GroupContext, HPoint, KoranyiBall};
use crate::polar::{inside_intervals, psi_density, SphereRule};

/// Tolerances and rule sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    /// Maximum number of cells in an adaptive box integration.
    pub max_subdivisions: usize,
    /// Gauss–Legendre order per axis.
    pub points_per_axis: usize,
    /// Ratio between consecutive gauge shells around a singular point.
    pub shell_ratio: f64,
    /// Radius `ε_in` of the excluded core around a singular point.
    pub inner_cutoff: f64,
    /// Initial truncation radius for whole-space integrals.
    pub outer_cutoff: f64,
    /// Decay exponent `γ` with `|f| ≤ C ρ^{−γ}` outside the truncation radius.
    pub tail_exponent: Option<f64>,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-8,
            absolute_tolerance: 1e-15,
            max_subdivisions: 4000,
            points_per_axis: 8,
            shell_ratio: 2.0,
            inner_cutoff: 1e-3,
            outer_cutoff: 16.0,
            tail_exponent: None,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.relative_tolerance > 0.0) {
            return Err(QuadError::BadSpec("relative_tolerance must be positive".into()));
        }
        if !(self.shell_ratio > 1.0) {
            return Err(QuadError::BadSpec("shell_ratio must exceed 1".into()));
        }
        if !(self.inner_cutoff >= 0.0) {
            return Err(QuadError::BadSpec("inner_cutoff must be non-negative".into()));
        }
        if self.points_per_axis < 2 || self.points_per_axis > gauss::MAX_ORDER {
            return Err(QuadError::BadSpec(format!("points_per_axis must lie in 2..={}", gauss::MAX_ORDER)));
        }
        if !(self.outer_cutoff > 0.0) {
            return Err(QuadError::BadSpec("outer_cutoff must be positive".into()));
        }
        Ok(())
    }

    /// The same specification with the Gauss–Legendre order multiplied by `factor`.
    pub fn with_order(&self, points_per_axis: usize) -> Self {
        Self { points_per_axis, ..self.clone() }
    }
}

/// An integral with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

impl QuadResult {
    fn add(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

/// Pairwise summation for a fixed, order-independent rounding pattern.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    abs_value: f64,
    axis_err: Vec<f64>,
}

impl Cell {
    fn err(&self) -> f64 {
        self.axis_err.iter().sum()
    }
}

struct HeapEntry(f64, usize);

impl PartialEq for HeapEntry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then_with(|| o.1.cmp(&self.1))
    }
}

/// Tensor rule; returns `(∫f, ∫|f|)`.
fn tensor(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], orders: &[usize], evals: &mut u64) -> (f64, f64) {
    let d = lo.len();
    let rules: Vec<Vec<(f64, f64)>> =
        (0..d).map(|k| gauss::rule(orders[k]).mapped(lo[k], hi[k]).collect()).collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    let mut acc_abs = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (xk, wk) = rules[k][idx[k]];
            x[k] = xk;
            w *= wk;
        }
        let v = w * f(&x);
        acc += v;
        acc_abs += v.abs();
        *evals += 1;
        let mut k = 0;
        loop {
            if k == d {
                return (acc, acc_abs);
            }
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn eval_cell(f: &dyn Fn(&[f64]) -> f64, lo: Vec<f64>, hi: Vec<f64>, m: usize, evals: &mut u64) -> Cell {
    let d = lo.len();
    let coarse = (m / 2 + 1).max(1).min(m - 1);
    let (value, abs_value) = tensor(f, &lo, &hi, &vec![m; d], evals);
    let axis_err = (0..d)
        .map(|k| {
            let mut orders = vec![m; d];
            orders[k] = coarse;
            (value - tensor(f, &lo, &hi, &orders, evals).0).abs()
        })
        .collect();
    Cell { lo, hi, value, abs_value, axis_err }
}

/// `∫_{[lo, hi]} f` by adaptive tensor Gauss–Legendre.
pub fn integrate_box(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    spec.validate()?;
    assert_eq!(lo.len(), hi.len());
    let m = spec.points_per_axis;
    let mut evals = 0u64;
    let mut cells = vec![eval_cell(f, lo.to_vec(), hi.to_vec(), m, &mut evals)];
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry(cells[0].err(), 0));
    let mut live = vec![true];
    let total = |cells: &[Cell], live: &[bool]| -> (f64, f64, f64) {
        let pick = |g: &dyn Fn(&Cell) -> f64| -> f64 {
            let v: Vec<f64> = cells.iter().zip(live).filter(|(_, l)| **l).map(|(c, _)| g(c)).collect();
            pairwise_sum(&v)
        };
        (pick(&|c| c.value), pick(&|c| c.err()), pick(&|c| c.abs_value))
    };
    let (mut value, mut err, mut mass) = total(&cells, &live);
    if !value.is_finite() || !err.is_finite() {
        return Err(QuadError::NonFinite);
    }
    let mut n_live = 1;
    // Cancellation floor: an error below rounding noise in `∫|f|` cannot be resolved.
    let floor = |mass: f64| 1e3 * f64::EPSILON * mass;
    while err > spec.relative_tolerance * value.abs() && err > spec.absolute_tolerance && err > floor(mass) {
        if n_live >= spec.max_subdivisions {
            return Err(QuadError::Budget { value, error_estimate: err, evaluations: evals });
        }
        let HeapEntry(_, id) = heap.pop().expect("live cells");
        live[id] = false;
        let cell = &cells[id];
        let axis = (0..cell.lo.len())
            .max_by(|&a, &b| {
                let wa = cell.axis_err[a];
                let wb = cell.axis_err[b];
                wa.total_cmp(&wb).then(b.cmp(&a))
            })
            .unwrap();
        let mid = 0.5 * (cell.lo[axis] + cell.hi[axis]);
        let (lo0, mut hi0) = (cell.lo.clone(), cell.hi.clone());
        let (mut lo1, hi1) = (cell.lo.clone(), cell.hi.clone());
        hi0[axis] = mid;
        lo1[axis] = mid;
        for (l, h) in [(lo0, hi0), (lo1, hi1)] {
            let nid = cells.len();
            let c = eval_cell(f, l, h, m, &mut evals);
            heap.push(HeapEntry(c.err(), nid));
            cells.push(c);
            live.push(true);
        }
        n_live += 1;
        (value, err, mass) = total(&cells, &live);
        if !value.is_finite() || !err.is_finite() {
            return Err(QuadError::NonFinite);
        }
    }
    Ok(QuadResult { value, error_estimate: err, evaluations: evals })
}

/// Surface measure of the unit sphere `S^{d−1}` in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    // |S^{d−1}| = 2π^{d/2}/Γ(d/2), via the recursion |S^{d+1}| = 2π/d · |S^{d−1}|.
    let (mut area, mut k) = if d % 2 == 0 { (2.0 * PI, 2) } else { (2.0, 1) };
    while k < d {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}

/// `∫_{−π/2}^{π/2} 2 cos^{2n−1}ψ/√(1+cos²ψ) dψ`.
fn psi_integral(n: usize) -> f64 {
    // Smooth and periodic-like; a single high-order rule is exact to rounding.
    gauss::rule(96).integrate(-0.5 * PI, 0.5 * PI, |p| psi_density(n, p))
}

/// `|B(e, 1)| = |S^{2n−1}| · ∫ψ-density / Q`.
pub fn unit_ball_volume(n: usize) -> f64 {
    sphere_area(2 * n) * psi_integral(n) / (2 * n + 2) as f64
}

/// Map from a gauge-polar box `(s, ψ, θ₁, …, θ_{2n−2}, φ)` to a point and the Jacobian.
struct PolarChart {
    n: usize,
}

impl PolarChart {
    fn dims(&self) -> usize {
        2 * self.n + 1
    }

    fn angle_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![-0.5 * PI];
        let mut hi = vec![0.5 * PI];
        for _ in 0..2 * self.n - 2 {
            lo.push(0.0);
            hi.push(PI);
        }
        lo.push(0.0);
        hi.push(2.0 * PI);
        (lo, hi)
    }

    /// Unit direction and angular density for angles `(ψ, θ…, φ)`.
    fn direction(&self, ang: &[f64]) -> (HPoint, f64) {
        let psi = ang[0];
        let d = 2 * self.n;
        let phi = ang[ang.len() - 1];
        let mut omega = vec![phi.cos(), phi.sin()];
        let mut dens = psi_density(self.n, psi);
        for (j, &theta) in ang[1..ang.len() - 1].iter().enumerate().rev() {
            // lifting S^{k−1} → S^k with k = d − 1 − j
            let k = d - 1 - j;
            let (st, ct) = theta.sin_cos();
            dens *= st.powi(k as i32 - 1);
            let mut nv = Vec::with_capacity(omega.len() + 1);
            nv.push(ct);
            nv.extend(omega.iter().map(|c| st * c));
            omega = nv;
        }
        (HPoint::from_gauge_polar(1.0, psi, &omega), dens)
    }
}

/// `∫_{B} f` over a Koranyi ball, recentred at the origin and integrated in gauge-polar
/// coordinates, where the ball is the box `s < δ`.
pub fn integrate_ball(f: &dyn Fn(&HPoint) -> f64, ball: &KoranyiBall, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    integrate_shell(f, &ball.center, 0.0, ball.radius, spec)
}

/// `∫_{a < ρ(c⁻¹·w) < b} f(w) dw`.
pub fn integrate_shell(f: &dyn Fn(&HPoint) -> f64, center: &HPoint, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    let n = center.n();
    let q = (2 * n + 2) as i32;
    let chart = PolarChart { n };
    let (alo, ahi) = chart.angle_box();
    let mut lo = vec![a];
    let mut hi = vec![b];
    lo.extend(alo);
    hi.extend(ahi);
    debug_assert_eq!(lo.len(), chart.dims());
    let g = |c: &[f64]| {
        let s = c[0];
        let (sigma, dens) = chart.direction(&c[1..]);
        let w = center.compose(&sigma.scaled(s));
        f(&w) * dens * s.powi(q - 1)
    };
    integrate_box(&g, &lo, &hi, spec)
}

/// `∫_{B} f(w) ρ(w⁻¹·z)^{−β} dw` for `β < Q`.
///
/// The integral is taken in gauge-polar coordinates centred at `z`: the angular variables by
/// adaptive cubature, the radial variable on gauge shells of ratio `shell_ratio` clipped exactly
/// to the ball. The core `ρ(w⁻¹·z) < ε_in` is dropped and bounded by `C ε_in^{Q−β}`, which is
/// added to the error estimate.
pub fn integrate_singular(
    f: &dyn Fn(&HPoint) -> f64,
    beta: f64,
    ball: &KoranyiBall,
    z: &HPoint,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    spec.validate()?;
    let n = ball.n();
    let q = 2 * n + 2;
    if beta >= q as f64 {
        return Err(QuadError::NotIntegrable { beta, q });
    }
    let chart = PolarChart { n };
    let (alo, ahi) = chart.angle_box();
    let s_max = z.gauge_distance(&ball.center) + ball.radius;
    let eps = spec.inner_cutoff.min(s_max);
    let mut shells = vec![eps];
    while *shells.last().unwrap() < s_max {
        let next = shells.last().unwrap() * spec.shell_ratio;
        shells.push(next.min(s_max));
    }
    let m = spec.points_per_axis;
    let radial = |sigma: &HPoint| -> f64 {
        let mut acc = 0.0;
        for (a, b) in inside_intervals(z, sigma, &ball.center, ball.radius, eps, s_max) {
            for w in shells.windows(2) {
                let (lo, hi) = (w[0].max(a), w[1].min(b));
                if hi <= lo {
                    continue;
                }
                for (s, ws) in gauss::rule(m).mapped(lo, hi) {
                    let p = z.compose(&sigma.scaled(s));
                    acc += ws * f(&p) * s.powf(q as f64 - 1.0 - beta);
                }
            }
        }
        acc
    };
    let g = |ang: &[f64]| {
        let (sigma, dens) = chart.direction(ang);
        dens * radial(&sigma)
    };
    let mut res = integrate_box(&g, &alo, &ahi, spec)?;
    // Core bound: sup|f| near z times the measure of the excluded core.
    let core_sup = if eps > 0.0 {
        let rule = SphereRule::new(n, 4, 2);
        rule.dirs.iter().map(|d| f(&z.compose(&d.scaled(eps))).abs()).fold(f(z).abs(), f64::max)
    } else {
        0.0
    };
    let total_angle = unit_ball_volume(n) * q as f64;
    let core = core_sup * total_angle * eps.powf(q as f64 - beta) / (q as f64 - beta);
    res.error_estimate += core;
    Ok(res)
}

/// `∫_{ℍⁿ} f` for integrands with `|f| ≤ C ρ^{−γ}`, `γ > Q` (`spec.tail_exponent`).
///
/// Doubling gauge shells are integrated out to radius `R` (starting at `spec.outer_cutoff` and
/// doubled until the analytic tail bound `C R^{Q−γ} · Q|B(e,1)|/(γ−Q)` is below
/// `0.1 · relative_tolerance · |value|`); the tail bound is folded into the error estimate.
pub fn integrate_fullspace(f: &dyn Fn(&HPoint) -> f64, n: usize, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    let g = |c: &[f64]| -> f64 {
        let chart = PolarChart { n };
        let (sigma, dens) = chart.direction(&c[1..]);
        f(&sigma.scaled(c[0])) * dens
    };
    let chart = PolarChart { n };
    let (alo, ahi) = chart.angle_box();
    fullspace_impl(&g, &alo, &ahi, n, spec, |r| {
        let rule = SphereRule::new(n, 6, 3);
        rule.dirs.iter().map(|d| f(&d.scaled(r)).abs()).fold(0.0, f64::max)
    })
}

/// `∫_{ℍⁿ} g(|x|, t) dx dt` for integrands depending only on `|x|` and `t`; the sphere
/// `S^{2n−1}` is integrated analytically.
pub fn integrate_fullspace_zonal(g: &dyn Fn(f64, f64) -> f64, n: usize, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    let area = sphere_area(2 * n);
    let h = |c: &[f64]| -> f64 {
        let z = HPoint::from_gauge_polar(c[0], c[1], &unit_omega(n));
        area * psi_density(n, c[1]) * g(z.x_norm2().sqrt(), z.t)
    };
    fullspace_impl(&h, &[-0.5 * PI], &[0.5 * PI], n, spec, |r| {
        (0..33)
            .map(|k| {
                let psi = -0.5 * PI + PI * k as f64 / 32.0;
                let z = HPoint::from_gauge_polar(r, psi, &unit_omega(n));
                g(z.x_norm2().sqrt(), z.t).abs()
            })
            .fold(0.0, f64::max)
    })
}

fn unit_omega(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2 * n];
    v[0] = 1.0;
    v
}

fn fullspace_impl(
    g: &dyn Fn(&[f64]) -> f64,
    alo: &[f64],
    ahi: &[f64],
    n: usize,
    spec: &QuadSpec,
    sup_on_sphere: impl Fn(f64) -> f64,
) -> Result<QuadResult, QuadError> {
    spec.validate()?;
    let q = (2 * n + 2) as f64;
    let gamma = spec.tail_exponent.ok_or(QuadError::TailExponent { gamma: f64::NAN, q: 2 * n + 2 })?;
    if gamma <= q {
        return Err(QuadError::TailExponent { gamma, q: 2 * n + 2 });
    }
    let shell = |a: f64, b: f64| -> Result<QuadResult, QuadError> {
        let h = |c: &[f64]| c[0].powf(q - 1.0) * g(c);
        let mut lo = vec![a];
        let mut hi = vec![b];
        lo.extend_from_slice(alo);
        hi.extend_from_slice(ahi);
        integrate_box(&h, &lo, &hi, spec)
    };
    let angle_total = unit_ball_volume(n) * q;
    let tail = |r: f64| sup_on_sphere(r) * r.powf(gamma) * r.powf(q - gamma) * angle_total / (gamma - q);
    let r0 = spec.outer_cutoff;
    let mut res = shell(0.0, r0.min(1.0))?;
    let mut r = r0.min(1.0);
    while r < r0 {
        res = res.add(shell(r, (2.0 * r).min(r0))?);
        r = (2.0 * r).min(r0);
    }
    let mut bound = tail(r);
    let mut guard = 0;
    while bound > 0.1 * spec.relative_tolerance * res.value.abs() && guard < 40 {
        res = res.add(shell(r, 2.0 * r)?);
        r *= 2.0;
        bound = tail(r);
        guard += 1;
    }
    res.error_estimate += bound;
    Ok(res)
}

/// The shared context-free volume helper used by balls: `|B(z, r)|` in ℍⁿ.
pub fn ball_volume(ctx: &GroupContext, r: f64) -> f64 {
    ctx.ball_volume(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadSpec {
        QuadSpec { relative_tolerance: 1e-10, ..QuadSpec::default() }
    }

    #[test]
    fn box_examples() {
        let one = integrate_box(&|_| 1.0, &[0.0; 3], &[1.0; 3], &spec()).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        let odd = integrate_box(&|x| x[0], &[-1.0; 3], &[1.0; 3], &spec()).unwrap();
        assert!(odd.value.abs() < 1e-14);
        let v = integrate_box(&|x| x[0] * x[0] * x[2] * x[2], &[-1.0; 3], &[1.0; 3], &spec()).unwrap();
        let oracle = (2.0 / 3.0) * 2.0 * (2.0 / 3.0);
        assert!((v.value - oracle).abs() < 1e-12);
    }

    #[test]
    fn adaptive_box_handles_a_kink() {
        let v = integrate_box(&|x| (x[0] - 0.3).abs(), &[0.0], &[1.0], &QuadSpec { relative_tolerance: 1e-9, ..spec() }).unwrap();
        let want = 0.5 * (0.3f64 * 0.3 + 0.7 * 0.7);
        assert!((v.value - want).abs() < 1e-8, "{}", v.value);
        assert!(v.error_estimate >= 0.0);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tight = QuadSpec { relative_tolerance: 1e-15, absolute_tolerance: 0.0, max_subdivisions: 3, ..spec() };
        let r = integrate_box(&|x| (x[0] - 0.3).abs().sqrt(), &[0.0], &[1.0], &tight);
        assert!(matches!(r, Err(QuadError::Budget { .. })));
    }

    #[test]
    fn unit_ball_volume_n1() {
        // 4π∫₀¹ r√(1−r⁴) dr by the substitution r² = sin θ: 2π∫₀^{π/2} cos²θ dθ.
        let oracle = 2.0 * PI * gauss::rule(20).integrate(0.0, 0.5 * PI, |th| th.cos().powi(2));
        assert!((unit_ball_volume(1) - oracle).abs() < 1e-12);
        assert!((unit_ball_volume(1) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn ball_examples() {
        let ctx = GroupContext::new(1).unwrap();
        let b = KoranyiBall::centered(1, 1.0).unwrap();
        let v = integrate_ball(&|_| 1.0, &b, &spec()).unwrap();
        assert!((v.value - PI * PI / 2.0).abs() < 1e-6);
        let b2 = KoranyiBall::new(HPoint::new(&[2.0, -1.0], 0.5), 1.5).unwrap();
        let v2 = integrate_ball(&|_| 1.0, &b2, &spec()).unwrap();
        assert!((v2.value - ctx.ball_volume(1.5)).abs() < 1e-8 * v2.value);
        let odd = integrate_ball(&|w| w.x[0], &KoranyiBall::centered(1, 2.0).unwrap(), &spec()).unwrap();
        assert!(odd.value.abs() < 1e-10);
    }

    #[test]
    fn singular_examples() {
        let b = KoranyiBall::centered(1, 1.0).unwrap();
        let e = HPoint::identity(1);
        let s = QuadSpec { relative_tolerance: 1e-9, ..spec() };
        let v1 = integrate_singular(&|_| 1.0, 2.0, &b, &e, &s).unwrap();
        let v2 = integrate_singular(&|_| 1.0, 2.0, &b, &e, &QuadSpec { inner_cutoff: 0.5e-3, ..s.clone() }).unwrap();
        assert!((v1.value - v2.value).abs() < 1e-4 * v1.value);
        // Exact value: Q|B(e,1)| ∫₀¹ s^{Q−1−2} ds = 2π² · 1/2 (minus the tiny core).
        assert!((v1.value - PI * PI).abs() <= v1.error_estimate + 1e-8);
        let flat = integrate_singular(&|w| 1.0 + w.t, 0.0, &b, &HPoint::new(&[0.3, 0.1], 0.2), &s).unwrap();
        let plain = integrate_ball(&|w| 1.0 + w.t, &b, &s).unwrap();
        assert!((flat.value - plain.value).abs() < 1e-6);
        let big = KoranyiBall::centered(1, 2.0).unwrap();
        let v3 = integrate_singular(&|_| 1.0, 1.0, &big, &e, &s).unwrap();
        let v4 = integrate_singular(&|_| 1.0, 1.0, &b, &e, &s).unwrap();
        assert!((v3.value - 8.0 * v4.value).abs() < 1e-5 * v3.value);
        assert!(matches!(integrate_singular(&|_| 1.0, 4.0, &b, &e, &s), Err(QuadError::NotIntegrable { .. })));
    }

    #[test]
    fn fullspace_examples() {
        let s = QuadSpec { tail_exponent: Some(12.0), relative_tolerance: 1e-9, ..spec() };
        let f = |z: &HPoint| (1.0 + z.gauge4()).powi(-3);
        let a = integrate_fullspace(&f, 1, &s).unwrap();
        let b = integrate_fullspace(&f, 1, &QuadSpec { outer_cutoff: 32.0, ..s.clone() }).unwrap();
        assert!((a.value - b.value).abs() < 1e-4 * a.value);
        let odd = integrate_fullspace(&|z: &HPoint| z.x[0] * (1.0 + z.gauge4()).powi(-3), 1, &s).unwrap();
        assert!(odd.value.abs() < 1e-10);
        let zonal = integrate_fullspace_zonal(&|r, t| (1.0 + r.powi(4) + t * t).powi(-3), 1, &s).unwrap();
        assert!((zonal.value - a.value).abs() < 1e-7 * a.value);
        assert!(matches!(
            integrate_fullspace(&f, 1, &QuadSpec { tail_exponent: Some(4.0), ..s }),
            Err(QuadError::TailExponent { .. })
        ));
    }

    #[test]
    fn haar_scaling_and_left_invariance_in_cartesian_coordinates() {
        let bump = |z: &HPoint| {
            let r4 = z.gauge4();
            if r4 >= 1.0 { 0.0 } else { (-1.0 / (1.0 - r4)).exp() * (1.3 + z.x[0] - 0.4 * z.t) }
        };
        let s = QuadSpec { relative_tolerance: 1e-7, max_subdivisions: 20000, ..spec() };
        let cart = |g: &dyn Fn(&HPoint) -> f64, half: f64, c: &HPoint| {
            let h = |v: &[f64]| g(&HPoint::new(&[v[0], v[1]], v[2]));
            integrate_box(&h, &[c.x[0] - half, c.x[1] - half, c.t - half * half - 4.0 * half], &[c.x[0] + half, c.x[1] + half, c.t + half * half + 4.0 * half], &s)
                .unwrap()
                .value
        };
        let base = cart(&bump, 1.0, &HPoint::identity(1));
        let r = 0.6;
        let scaled = cart(&|z: &HPoint| bump(&z.scaled(r)), 1.0 / r, &HPoint::identity(1));
        assert!((scaled - base / r.powi(4)).abs() < 1e-4 * base.abs() / r.powi(4));
        let z0 = HPoint::new(&[0.7, -0.4], 0.9);
        let inv = z0.inverse();
        let shifted = cart(&|u: &HPoint| bump(&z0.compose(u)), 1.0, &inv);
        assert!((shifted - base).abs() < 1e-4 * base.abs(), "{shifted} {base}");
        let polar = integrate_ball(&bump, &KoranyiBall::centered(1, 1.0).unwrap(), &s).unwrap().value;
        assert!((polar - base).abs() < 1e-4 * base.abs());
    }
}
