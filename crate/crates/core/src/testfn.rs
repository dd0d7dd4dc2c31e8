//! Schwartz test functions with hand-coded invariant derivatives.

use serde::{Deserialize, Serialize};

use crate::group::HPoint;

/// Profile of a test function before translation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestProfile {
    /// `exp(−|x|² − t²)`.
    Gaussian,
    /// `exp(−ρ⁴) = exp(−|x|⁴ − t²)`.
    GaugeGaussian,
    /// The zero function.
    Zero,
}

/// `u(w) = u₀(c⁻¹·w)` for a profile `u₀` and a centre `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub profile: TestProfile,
    pub center: HPoint,
}

impl TestFunction {
    pub fn new(profile: TestProfile, center: HPoint) -> Self {
        Self { profile, center }
    }

    pub fn centered(profile: TestProfile, n: usize) -> Self {
        Self::new(profile, HPoint::identity(n))
    }

    pub fn name(&self) -> String {
        let p = match self.profile {
            TestProfile::Gaussian => "gaussian",
            TestProfile::GaugeGaussian => "gauge_gaussian",
            TestProfile::Zero => "zero",
        };
        if self.center.is_identity() {
            p.to_string()
        } else {
            format!("{p}@{}", self.center)
        }
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }

    fn local(&self, w: &HPoint) -> HPoint {
        self.center.inverse().compose(w)
    }

    pub fn value(&self, w: &HPoint) -> f64 {
        let z = self.local(w);
        profile_value(self.profile, &z)
    }

    pub fn sup_abs(&self) -> f64 {
        match self.profile {
            TestProfile::Zero => 0.0,
            _ => 1.0,
        }
    }

    /// Left-invariant derivative `X_i u`, `0 ≤ i ≤ 2n`.
    pub fn left(&self, i: usize, w: &HPoint) -> f64 {
        // X_i commutes with left translation.
        let z = self.local(w);
        profile_left(self.profile, i, &z)
    }

    /// Right-invariant derivative `X̃_i u`.
    pub fn right(&self, i: usize, w: &HPoint) -> f64 {
        let n = self.n();
        let dt = self.left(2 * n, w);
        if i < n {
            self.left(i, w) - 4.0 * w.x[i + n] * dt
        } else if i < 2 * n {
            self.left(i, w) + 4.0 * w.x[i - n] * dt
        } else {
            dt
        }
    }

    /// `ℒu = −Σ_{i<2n} X_i² u`.
    pub fn sublaplacian(&self, w: &HPoint) -> f64 {
        let z = self.local(w);
        profile_sublaplacian(self.profile, &z)
    }
}

fn profile_value(p: TestProfile, z: &HPoint) -> f64 {
    match p {
        TestProfile::Gaussian => (-z.x_norm2() - z.t * z.t).exp(),
        TestProfile::GaugeGaussian => (-z.gauge4()).exp(),
        TestProfile::Zero => 0.0,
    }
}

fn profile_left(p: TestProfile, i: usize, z: &HPoint) -> f64 {
    let n = z.n();
    let u = profile_value(p, z);
    let t = z.t;
    match p {
        TestProfile::Zero => 0.0,
        TestProfile::Gaussian => {
            if i < n {
                (-2.0 * z.x[i] - 4.0 * z.x[i + n] * t) * u
            } else if i < 2 * n {
                (-2.0 * z.x[i] + 4.0 * z.x[i - n] * t) * u
            } else {
                -2.0 * t * u
            }
        }
        TestProfile::GaugeGaussian => {
            let x2 = z.x_norm2();
            if i < n {
                -4.0 * (x2 * z.x[i] + t * z.x[i + n]) * u
            } else if i < 2 * n {
                -4.0 * (x2 * z.x[i] - t * z.x[i - n]) * u
            } else {
                -2.0 * t * u
            }
        }
    }
}

fn profile_sublaplacian(p: TestProfile, z: &HPoint) -> f64 {
    let n = z.n() as f64;
    let u = profile_value(p, z);
    let x2 = z.x_norm2();
    let t = z.t;
    match p {
        TestProfile::Zero => 0.0,
        TestProfile::Gaussian => (4.0 * n + 4.0 * x2 - 16.0 * t * t * x2) * u,
        TestProfile::GaugeGaussian => (8.0 * (n + 2.0) * x2 - 16.0 * x2 * z.gauge4()) * u,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shift(n: usize, i: usize, h: f64) -> HPoint {
        let mut e = HPoint::identity(n);
        if i < 2 * n {
            e.x[i] = h;
        } else {
            e.t = h;
        }
        e
    }

    fn fd_left(f: &TestFunction, i: usize, z: &HPoint, h: f64) -> f64 {
        let n = z.n();
        (f.value(&z.compose(&shift(n, i, h))) - f.value(&z.compose(&shift(n, i, -h)))) / (2.0 * h)
    }

    fn fd_right(f: &TestFunction, i: usize, z: &HPoint, h: f64) -> f64 {
        let n = z.n();
        (f.value(&shift(n, i, h).compose(z)) - f.value(&shift(n, i, -h).compose(z))) / (2.0 * h)
    }

    fn fd_sublaplacian(f: &TestFunction, z: &HPoint, h: f64) -> f64 {
        let n = z.n();
        let mut acc = 0.0;
        for i in 0..2 * n {
            let p = f.value(&z.compose(&shift(n, i, h)));
            let m = f.value(&z.compose(&shift(n, i, -h)));
            acc += (p - 2.0 * f.value(z) + m) / (h * h);
        }
        -acc
    }

    #[test]
    fn hand_coded_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=2 {
            for profile in [TestProfile::Gaussian, TestProfile::GaugeGaussian] {
                let c = HPoint::new(&vec![0.3; 2 * n], -0.2);
                for f in [TestFunction::centered(profile, n), TestFunction::new(profile, c)] {
                    for _ in 0..20 {
                        let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
                        let z = HPoint::new(&x, rng.random_range(-1.0..1.0));
                        let scale = 1.0;
                        for i in 0..=2 * n {
                            let a = f.left(i, &z);
                            let b = fd_left(&f, i, &z, 1e-5);
                            assert!((a - b).abs() < 1e-6 * scale, "{} X{i} {a} {b}", f.name());
                            let a = f.right(i, &z);
                            let b = fd_right(&f, i, &z, 1e-5);
                            assert!((a - b).abs() < 1e-6 * scale, "{} X~{i} {a} {b}", f.name());
                        }
                        let a = f.sublaplacian(&z);
                        let b = fd_sublaplacian(&f, &z, 1e-4);
                        assert!((a - b).abs() < 1e-5 * scale, "{} L {a} {b}", f.name());
                    }
                }
            }
        }
    }

    #[test]
    fn zero_profile() {
        let f = TestFunction::centered(TestProfile::Zero, 1);
        let z = HPoint::new(&[0.4, 0.1], 0.3);
        assert_eq!(f.value(&z), 0.0);
        assert_eq!(f.sublaplacian(&z), 0.0);
        assert_eq!(f.sup_abs(), 0.0);
    }
}
