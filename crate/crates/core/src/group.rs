//! The Heisenberg group ℍⁿ = ℝ^{2n} × ℝ: points, group law, dilations, Koranyi gauge and balls.

use std::fmt;
use std::ops::Neg;
use std::sync::OnceLock;

use num_traits::{Float, Num};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::GroupError;

/// Coordinate storage for the horizontal part `x`; inline up to n = 3.
pub type Coords<T> = SmallVec<[T; 6]>;

/// Ring operations needed by the group law. Implemented by `f32`, `f64` and exact rationals.
pub trait Scalar: Clone + fmt::Debug + PartialEq + Num + Neg<Output = Self> {}

impl<T> Scalar for T where T: Clone + fmt::Debug + PartialEq + Num + Neg<Output = T> {}

/// A point `(x, t)` of ℍⁿ with `x ∈ ℝ^{2n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Deserialize<'de>"
))]
pub struct HPoint<T: Scalar = f64> {
    pub x: Coords<T>,
    pub t: T,
}

impl<T: Scalar> HPoint<T> {
    pub fn from_parts(x: impl IntoIterator<Item = T>, t: T) -> Result<Self, GroupError> {
        let x: Coords<T> = x.into_iter().collect();
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(GroupError::BadHorizontalLength(x.len()));
        }
        Ok(Self { x, t })
    }

    /// Convenience constructor; panics on an odd or empty horizontal part.
    pub fn new(x: &[T], t: T) -> Self {
        Self::from_parts(x.iter().cloned(), t).expect("horizontal part must have even positive length")
    }

    pub fn identity(n: usize) -> Self {
        Self { x: (0..2 * n).map(|_| T::zero()).collect(), t: T::zero() }
    }

    /// The `n` of ℍⁿ this point lives in.
    pub fn n(&self) -> usize {
        self.x.len() / 2
    }

    pub fn is_identity(&self) -> bool {
        self.t.is_zero() && self.x.iter().all(|v| v.is_zero())
    }

    /// Group product; panics on a dimension mismatch (see [`mul`] for the checked form).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.x.len(), other.x.len(), "dimension mismatch in group product");
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a.clone() + b.clone()).collect();
        let t = self.t.clone() + other.t.clone() + symplectic(&self.x, &other.x);
        Self { x, t }
    }

    pub fn inverse(&self) -> Self {
        Self { x: self.x.iter().map(|v| -v.clone()).collect(), t: -self.t.clone() }
    }

    /// `r · (x, t) = (r x, r² t)` without the positivity check.
    pub fn scaled(&self, r: T) -> Self {
        Self {
            x: self.x.iter().map(|v| r.clone() * v.clone()).collect(),
            t: r.clone() * r * self.t.clone(),
        }
    }

    /// `ρ⁴ = |x|⁴ + t²`, a polynomial and therefore exact in exact arithmetic.
    pub fn gauge4(&self) -> T {
        let x2 = self.x.iter().fold(T::zero(), |acc, v| acc + v.clone() * v.clone());
        x2.clone() * x2 + self.t.clone() * self.t.clone()
    }

    pub fn x_norm2(&self) -> T {
        self.x.iter().fold(T::zero(), |acc, v| acc + v.clone() * v.clone())
    }
}

impl<T: Scalar + Float> HPoint<T> {
    /// Koranyi gauge `ρ(x, t) = (|x|⁴ + t²)^{1/4}`.
    pub fn gauge(&self) -> T {
        self.gauge4().sqrt().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    /// Gauge quasi-distance `ρ(self⁻¹ · other)`.
    pub fn gauge_distance(&self, other: &Self) -> T {
        self.inverse().compose(other).gauge()
    }
}

impl HPoint<f64> {
    /// Point at gauge-polar coordinates `(s, ψ, ω)`: `|x| = s cos ψ`, `t = s² sin ψ √(1 + cos² ψ)`.
    pub fn from_gauge_polar(s: f64, psi: f64, omega: &[f64]) -> Self {
        let (sp, cp) = psi.sin_cos();
        let x = omega.iter().map(|w| s * cp * w).collect();
        Self { x, t: s * s * sp * (1.0 + cp * cp).sqrt() }
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for HPoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "((")?;
        for (i, v) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "),{})", self.t)
    }
}

/// `xᵀ J y` with `J = 2[[0, −Iₙ], [Iₙ, 0]]`.
pub fn symplectic<T: Scalar>(x: &[T], y: &[T]) -> T {
    let n = x.len() / 2;
    let mut acc = T::zero();
    for i in 0..n {
        acc = acc + x[i + n].clone() * y[i].clone() - x[i].clone() * y[i + n].clone();
    }
    acc.clone() + acc
}

/// Checked group product `(x + y, t + s + xᵀ J y)`.
pub fn mul<T: Scalar>(z: &HPoint<T>, w: &HPoint<T>) -> Result<HPoint<T>, GroupError> {
    if z.x.len() != w.x.len() {
        return Err(GroupError::DimensionMismatch { left: z.n(), right: w.n() });
    }
    Ok(z.compose(w))
}

pub fn inv<T: Scalar>(z: &HPoint<T>) -> HPoint<T> {
    z.inverse()
}

/// Dilation `r · (x, t) = (r x, r² t)`; requires `r > 0`.
pub fn dilate<T: Scalar + PartialOrd>(r: T, z: &HPoint<T>) -> Result<HPoint<T>, GroupError> {
    if r <= T::zero() {
        return Err(GroupError::NonPositiveDilation(format!("{r:?}")));
    }
    Ok(z.scaled(r))
}

pub fn gauge<T: Scalar + Float>(z: &HPoint<T>) -> T {
    z.gauge()
}

/// Fixed data of ℍⁿ: dimensions, the matrix `J`, and the cached volume of the unit Koranyi ball.
#[derive(Debug)]
pub struct GroupContext {
    n: usize,
    j: Vec<Vec<i32>>,
    unit_ball_volume: OnceLock<f64>,
}

impl Clone for GroupContext {
    fn clone(&self) -> Self {
        let out = Self::new(self.n).expect("valid n");
        if let Some(v) = self.unit_ball_volume.get() {
            let _ = out.unit_ball_volume.set(*v);
        }
        out
    }
}

impl GroupContext {
    pub fn new(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::ZeroDimension);
        }
        let mut j = vec![vec![0; 2 * n]; 2 * n];
        for i in 0..n {
            j[i][i + n] = -2;
            j[i + n][i] = 2;
        }
        Ok(Self { n, j, unit_ball_volume: OnceLock::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn hom_dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn topological_dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn j_matrix(&self) -> &[Vec<i32>] {
        &self.j
    }

    pub fn identity(&self) -> HPoint<f64> {
        HPoint::identity(self.n)
    }

    /// `|B(e, 1)|`, computed on first use by gauge-polar quadrature.
    pub fn unit_ball_volume(&self) -> f64 {
        *self.unit_ball_volume.get_or_init(|| crate::quadrature::unit_ball_volume(self.n))
    }

    pub fn ball_volume(&self, radius: f64) -> f64 {
        self.unit_ball_volume() * radius.powi(self.hom_dim() as i32)
    }

    pub fn check_point<T: Scalar>(&self, z: &HPoint<T>) -> Result<(), GroupError> {
        if z.n() != self.n {
            return Err(GroupError::DimensionMismatch { left: self.n, right: z.n() });
        }
        Ok(())
    }
}

/// Koranyi ball `B(z₀, δ) = { w : ρ(z₀⁻¹ · w) < δ }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KoranyiBall {
    pub center: HPoint<f64>,
    pub radius: f64,
}

impl KoranyiBall {
    pub fn new(center: HPoint<f64>, radius: f64) -> Result<Self, GroupError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GroupError::BadRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(n: usize, radius: f64) -> Result<Self, GroupError> {
        Self::new(HPoint::identity(n), radius)
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }

    /// Ball-relative coordinates `u = z₀⁻¹ · w`.
    pub fn relative(&self, w: &HPoint<f64>) -> HPoint<f64> {
        self.center.inverse().compose(w)
    }

    pub fn contains(&self, w: &HPoint<f64>) -> bool {
        self.relative(w).gauge4() < self.radius.powi(4)
    }

    pub fn volume(&self, ctx: &GroupContext) -> f64 {
        ctx.ball_volume(self.radius)
    }

    /// The concentric ball `λB`.
    pub fn expanded(&self, lambda: f64) -> Self {
        Self { center: self.center.clone(), radius: self.radius * lambda }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn p(x: &[f64], t: f64) -> HPoint {
        HPoint::new(x, t)
    }

    #[test]
    fn product_example() {
        let z = p(&[1.0, 0.0], 0.0).compose(&p(&[0.0, 1.0], 0.0));
        assert_eq!(z, p(&[1.0, 1.0], -2.0));
    }

    #[test]
    fn product_matches_explicit_matrix() {
        let ctx = GroupContext::new(2).unwrap();
        let z = p(&[0.3, -1.2, 2.0, 0.7], 0.4);
        let w = p(&[-0.5, 0.25, 1.5, -2.0], -1.1);
        let j = ctx.j_matrix();
        let mut xjy = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                xjy += z.x[a] * j[a][b] as f64 * w.x[b];
            }
        }
        let prod = mul(&z, &w).unwrap();
        assert!((prod.t - (z.t + w.t + xjy)).abs() < 1e-15);
        for a in 0..4 {
            assert_eq!(prod.x[a], z.x[a] + w.x[a]);
        }
    }

    #[test]
    fn j_is_skew_with_small_entries() {
        for n in 1..=3 {
            let ctx = GroupContext::new(n).unwrap();
            let j = ctx.j_matrix();
            for a in 0..2 * n {
                for b in 0..2 * n {
                    assert_eq!(j[a][b], -j[b][a]);
                    assert!([-2, 0, 2].contains(&j[a][b]));
                }
            }
            assert_eq!(ctx.hom_dim(), 2 * n + 2);
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let z = p(&[1.0, 0.0], 0.0);
        let w = p(&[1.0, 0.0, 0.0, 0.0], 0.0);
        assert!(matches!(mul(&z, &w), Err(GroupError::DimensionMismatch { .. })));
        assert!(HPoint::from_parts(vec![1.0, 2.0, 3.0], 0.0).is_err());
        assert!(GroupContext::new(0).is_err());
    }

    #[test]
    fn inverse_and_dilation_examples() {
        assert_eq!(inv(&p(&[1.0, 2.0], 3.0)), p(&[-1.0, -2.0], -3.0));
        assert_eq!(inv(&HPoint::<f64>::identity(1)), HPoint::identity(1));
        assert_eq!(dilate(2.0, &p(&[1.0, 1.0], -2.0)).unwrap(), p(&[2.0, 2.0], -8.0));
        assert!(dilate(0.0, &p(&[1.0, 1.0], -2.0)).is_err());
        assert!(dilate(-1.0, &p(&[1.0, 1.0], -2.0)).is_err());
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(gauge(&p(&[3.0, 4.0], 0.0)), 5.0);
        assert_eq!(gauge(&p(&[0.0, 0.0], 4.0)), 2.0);
        assert_eq!(gauge(&HPoint::<f64>::identity(2)), 0.0);
    }

    #[test]
    fn gauge_polar_point_has_requested_gauge() {
        for &(s, psi) in &[(1.0, 0.3), (2.5, -1.2), (0.1, 1.5), (3.0, 0.0)] {
            let z = HPoint::from_gauge_polar(s, psi, &[0.6, 0.8]);
            assert!((z.gauge() - s).abs() < 1e-14 * s.max(1.0));
        }
    }

    #[test]
    fn exact_rational_group_laws() {
        let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        let z = HPoint::new(&[r(1, 3), r(-2, 5)], r(7, 2));
        let w = HPoint::new(&[r(-4, 7), r(1, 9)], r(-1, 4));
        let u = HPoint::new(&[r(5, 2), r(3, 11)], r(2, 13));
        assert_eq!(z.compose(&w).compose(&u), z.compose(&w.compose(&u)));
        assert_eq!(z.compose(&z.inverse()), HPoint::identity(1));
        assert_eq!(z.inverse().gauge4(), z.gauge4());
        let lam = r(3, 2);
        assert_eq!(z.compose(&w).scaled(lam.clone()), z.scaled(lam.clone()).compose(&w.scaled(lam)));
    }

    #[test]
    fn single_precision_points_work() {
        let z: HPoint<f32> = HPoint::new(&[3.0, 4.0], 0.0);
        assert_eq!(z.gauge(), 5.0f32);
        let w = z.compose(&z.inverse());
        assert!(w.is_identity());
    }

    #[test]
    fn ball_volume_scales_and_is_center_free() {
        let ctx = GroupContext::new(1).unwrap();
        let v1 = KoranyiBall::centered(1, 1.0).unwrap().volume(&ctx);
        let b2 = KoranyiBall::new(p(&[3.0, -1.0], 2.0), 2.0).unwrap();
        assert!((b2.volume(&ctx) - 16.0 * v1).abs() < 1e-12 * v1);
        assert!(KoranyiBall::centered(1, 0.0).is_err());
        assert!(b2.contains(&p(&[3.0, -1.0], 2.0)));
        assert!(!b2.contains(&p(&[30.0, -1.0], 2.0)));
    }

    fn point(n: usize) -> impl Strategy<Value = HPoint> {
        (proptest::collection::vec(-10.0..10.0f64, 2 * n), -10.0..10.0f64)
            .prop_map(|(x, t)| HPoint::from_parts(x, t).unwrap())
    }

    proptest! {
        #[test]
        fn associativity(z in point(1), w in point(1), u in point(1)) {
            let a = z.compose(&w).compose(&u);
            let b = z.compose(&w.compose(&u));
            prop_assert!((a.t - b.t).abs() < 1e-12 * (1.0 + a.t.abs()));
            for i in 0..2 { prop_assert!((a.x[i] - b.x[i]).abs() < 1e-12); }
        }

        #[test]
        fn triangle_and_reverse_triangle(z in point(2), w in point(2)) {
            let rz = z.gauge();
            let rw = w.gauge();
            let rzw = z.compose(&w).gauge();
            prop_assert!(rzw <= rz + rw + 1e-12 * (1.0 + rz + rw));
            prop_assert!((rz - rw).abs() <= rzw + 1e-12 * (1.0 + rz + rw));
        }

        #[test]
        fn dilation_is_homomorphism(z in point(1), w in point(1), r in 0.1..5.0f64) {
            let a = z.compose(&w).scaled(r);
            let b = z.scaled(r).compose(&w.scaled(r));
            prop_assert!((a.t - b.t).abs() < 1e-11 * (1.0 + a.t.abs()));
            prop_assert!((z.scaled(r).gauge() - r * z.gauge()).abs() < 1e-12 * (1.0 + r * z.gauge()));
        }

        #[test]
        fn gauge_symmetry(z in point(3)) {
            prop_assert!((z.inverse().gauge() - z.gauge()).abs() <= 1e-15 * z.gauge());
        }
    }
}
