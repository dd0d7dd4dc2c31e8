//! Gauge-polar coordinates and ray geometry.
//!
//! Every `z ≠ e` is written `z = s · σ` with `s = ρ(z)` and `σ` on the unit gauge sphere, and
//! `σ` is parametrised by `|x| = cos ψ · ω`, `t = sin ψ √(1 + cos² ψ)` with `ψ ∈ [−π/2, π/2]`
//! and `ω ∈ S^{2n−1}`. In these coordinates
//!
//! `dz = s^{Q−1} · 2 cos^{2n−1}ψ / √(1 + cos²ψ) ds dψ dω`,
//!
//! so gauge balls are coordinate boxes and all Jacobian factors are analytic.

use std::f64::consts::PI;

use smallvec::SmallVec;

use crate::gauss;
use crate::group::{symplectic, HPoint};

/// Angular density of the gauge-polar chart in the `ψ` variable.
pub fn psi_density(n: usize, psi: f64) -> f64 {
    let c = psi.cos().max(0.0);
    2.0 * c.powi(2 * n as i32 - 1) / (1.0 + c * c).sqrt()
}

/// A product rule on the unit gauge sphere.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub n: usize,
    pub dirs: Vec<HPoint>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Gauss–Legendre in `ψ` (`m_psi` nodes), Gauss–Legendre in the polar angles of
    /// `S^{2n−1}` (`m_angle` nodes each) and the periodic trapezoid rule with `2·m_angle` nodes
    /// in the azimuth.
    pub fn new(n: usize, m_psi: usize, m_angle: usize) -> Self {
        let omegas = hypersphere_rule(2 * n, m_angle);
        let psi_rule = gauss::rule(m_psi);
        let mut dirs = Vec::with_capacity(m_psi * omegas.len());
        let mut weights = Vec::with_capacity(m_psi * omegas.len());
        for (psi, wpsi) in psi_rule.mapped(-0.5 * PI, 0.5 * PI) {
            let dens = psi_density(n, psi);
            for (omega, wo) in &omegas {
                dirs.push(HPoint::from_gauge_polar(1.0, psi, omega));
                weights.push(wpsi * dens * wo);
            }
        }
        Self { n, dirs, weights }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Total measure `Q·|B(e,1)|` as integrated by this rule.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Product rule on `S^{d−1}` (`d ≥ 2`): Gauss–Legendre in each polar angle, trapezoid in the
/// azimuth with a half-step offset.
pub fn hypersphere_rule(d: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(d >= 2);
    let m_az = 2 * m;
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for k in 0..m_az {
        let phi = 2.0 * PI * (k as f64 + 0.5) / m_az as f64;
        out.push((vec![phi.cos(), phi.sin()], 2.0 * PI / m_az as f64));
    }
    // Lift S^{k−1} to S^k by one polar angle θ ∈ [0, π] with density sin^{k−1}θ.
    let rule = gauss::rule(m);
    for k in 2..d {
        let mut next = Vec::with_capacity(out.len() * m);
        for (theta, wt) in rule.mapped(0.0, PI) {
            let (st, ct) = theta.sin_cos();
            let dens = st.powi(k as i32 - 1);
            for (v, w) in &out {
                let mut nv = Vec::with_capacity(k + 1);
                nv.push(ct);
                nv.extend(v.iter().map(|c| st * c));
                next.push((nv, w * wt * dens));
            }
        }
        out = next;
    }
    out
}

/// Coefficients (ascending) of `s ↦ ρ(d · (s σ))⁴`, a quartic polynomial.
pub fn gauge4_along_ray(d: &HPoint, sigma: &HPoint) -> [f64; 5] {
    let a0: f64 = d.x.iter().map(|v| v * v).sum();
    let a1: f64 = 2.0 * d.x.iter().zip(&sigma.x).map(|(a, b)| a * b).sum::<f64>();
    let a2: f64 = sigma.x.iter().map(|v| v * v).sum();
    let b0 = d.t;
    let b1 = symplectic(&d.x, &sigma.x);
    let b2 = sigma.t;
    [
        a0 * a0 + b0 * b0,
        2.0 * (a0 * a1 + b0 * b1),
        a1 * a1 + 2.0 * a0 * a2 + b1 * b1 + 2.0 * b0 * b2,
        2.0 * (a1 * a2 + b1 * b2),
        a2 * a2 + b2 * b2,
    ]
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Real roots of the polynomial `c` (ascending coefficients) strictly inside `(lo, hi)`,
/// ascending. Isolation uses the critical points of the polynomial, refinement uses bisection.
pub fn real_roots(c: &[f64], lo: f64, hi: f64) -> SmallVec<[f64; 8]> {
    let mut out = SmallVec::new();
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return out;
    }
    let mut deg = c.len() - 1;
    while deg > 0 && c[deg].abs() <= 1e-14 * scale {
        deg -= 1;
    }
    let c = &c[..=deg];
    match deg {
        0 => {}
        1 => {
            let r = -c[0] / c[1];
            if r > lo && r < hi {
                out.push(r);
            }
        }
        _ => {
            let dc: SmallVec<[f64; 8]> = (1..=deg).map(|k| k as f64 * c[k]).collect();
            let crit = real_roots(&dc, lo, hi);
            let mut pts: SmallVec<[f64; 10]> = SmallVec::new();
            pts.push(lo);
            pts.extend(crit.iter().copied());
            pts.push(hi);
            for w in pts.windows(2) {
                let (mut a, mut b) = (w[0], w[1]);
                let mut fa = horner(c, a);
                let fb = horner(c, b);
                if fa == 0.0 {
                    if a > lo && out.last().map_or(true, |&l: &f64| l < a) {
                        out.push(a);
                    }
                    continue;
                }
                if fa * fb >= 0.0 {
                    continue;
                }
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let fm = horner(c, m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if (fm < 0.0) == (fa < 0.0) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                let r = 0.5 * (a + b);
                if r > lo && r < hi {
                    out.push(r);
                }
            }
        }
    }
    out
}

/// Parameters `s ∈ (lo, hi)` where the ray `s ↦ origin · (s σ)` crosses the gauge sphere
/// `∂B(center, radius)`.
pub fn sphere_crossings(
    origin: &HPoint,
    sigma: &HPoint,
    center: &HPoint,
    radius: f64,
    lo: f64,
    hi: f64,
) -> SmallVec<[f64; 8]> {
    let d = center.inverse().compose(origin);
    let mut c = gauge4_along_ray(&d, sigma);
    c[0] -= radius.powi(4);
    real_roots(&c, lo, hi)
}

/// Sorted, de-duplicated breakpoints in `[lo, hi]` turned into consecutive pieces.
pub fn pieces(mut breaks: Vec<f64>, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    breaks.retain(|b| *b > lo && *b < hi);
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = 1e-13 * hi.abs().max(1e-300);
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        if w[1] - w[0] > tol {
            out.push((w[0], w[1]));
        }
    }
    out
}

/// Sub-intervals of `[lo, hi]` on which `origin · (s σ)` lies inside `B(center, radius)`.
pub fn inside_intervals(
    origin: &HPoint,
    sigma: &HPoint,
    center: &HPoint,
    radius: f64,
    lo: f64,
    hi: f64,
) -> SmallVec<[(f64, f64); 4]> {
    let d = center.inverse().compose(origin);
    let mut c = gauge4_along_ray(&d, sigma);
    c[0] -= radius.powi(4);
    let roots = real_roots(&c, lo, hi);
    let mut out = SmallVec::new();
    let mut a = lo;
    for b in roots.iter().copied().chain(std::iter::once(hi)) {
        if b > a && horner(&c, 0.5 * (a + b)) < 0.0 {
            out.push((a, b));
        }
        a = b;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rule_total_is_q_times_unit_volume() {
        let r = SphereRule::new(1, 24, 16);
        let want = 4.0 * PI * PI / 2.0;
        assert!((r.total() - want).abs() < 1e-10 * want, "{}", r.total());
        for d in &r.dirs {
            assert!((d.gauge() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hypersphere_areas() {
        for (d, area) in [(2, 2.0 * PI), (4, 2.0 * PI * PI), (6, PI.powi(3))] {
            let s: f64 = hypersphere_rule(d, 12).iter().map(|(_, w)| w).sum();
            assert!((s - area).abs() < 1e-12 * area, "d={d}");
            for (v, _) in hypersphere_rule(d, 5) {
                let norm: f64 = v.iter().map(|c| c * c).sum();
                assert!((norm - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quartic_coefficients_match_direct_gauge() {
        let d = HPoint::new(&[0.3, -1.1], 0.7);
        let sigma = HPoint::from_gauge_polar(1.0, 0.4, &[0.6, -0.8]);
        let c = gauge4_along_ray(&d, &sigma);
        for &s in &[0.0, 0.5, 1.3, 4.0] {
            let direct = d.compose(&sigma.scaled(s)).gauge4();
            assert!((horner(&c, s) - direct).abs() < 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn roots_of_known_polynomials() {
        // (s-1)(s-2)(s-3)(s-4)
        let c = [24.0, -50.0, 35.0, -10.0, 1.0];
        let r = real_roots(&c, 0.0, 10.0);
        assert_eq!(r.len(), 4);
        for (k, v) in r.iter().enumerate() {
            assert!((v - (k as f64 + 1.0)).abs() < 1e-12);
        }
        let r = real_roots(&c, 1.5, 3.5);
        assert_eq!(r.len(), 2);
        assert!(real_roots(&[1.0, 0.0, 1.0], -5.0, 5.0).is_empty());
    }

    #[test]
    fn rays_from_ball_centre_exit_at_radius() {
        let c = HPoint::new(&[1.0, 2.0], -0.5);
        let rule = SphereRule::new(1, 6, 4);
        for sigma in &rule.dirs {
            let iv = inside_intervals(&c, sigma, &c, 1.5, 0.0, 10.0);
            assert_eq!(iv.len(), 1);
            assert!(iv[0].0 == 0.0 && (iv[0].1 - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn crossings_are_on_the_sphere() {
        let origin = HPoint::new(&[0.2, -0.4], 0.3);
        let center = HPoint::new(&[3.0, 1.0], 2.0);
        let rule = SphereRule::new(1, 8, 8);
        let mut hits = 0;
        for sigma in &rule.dirs {
            for s in sphere_crossings(&origin, sigma, &center, 1.0, 0.0, 50.0) {
                let p = origin.compose(&sigma.scaled(s));
                assert!((center.gauge_distance(&p) - 1.0).abs() < 1e-10);
                hits += 1;
            }
        }
        assert!(hits > 0);
    }
}
