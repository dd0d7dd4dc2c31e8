//! Exact calculus on expressions `Σ c · x^α t^k ρ^{−β}` with rational `c` and rational `β`.
//!
//! Field indices are zero-based: `i < 2n` is the horizontal field `X_{i+1}` of the usual
//! one-based notation and `i = 2n` is `X_{2n+1} = ∂/∂t`.
//!
//! The canonical form eliminates `t²` through `t² = ρ⁴ − |x|⁴`, so every stored term has
//! `k ∈ {0, 1}`. With that reduction the representation of a function is unique, and an
//! expression that vanishes identically canonicalises to the empty term list. A consequence is
//! that `β` may become negative (`t²` alone is stored as `ρ⁴ − |x|⁴`).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::KernelError;
use crate::group::HPoint;

/// Exact rational exponent of `ρ^{−β}`.
pub type Exponent = Ratio<i64>;

/// Multi-index `I = (i₁, …, i_{2n+1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self, KernelError> {
        if entries.len() < 3 || entries.len() % 2 == 0 {
            return Err(KernelError::IndexLength { got: entries.len(), expected: 3 });
        }
        Ok(Self(entries))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; 2 * n + 1])
    }

    /// The index with a single 1 in (zero-based) slot `i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; 2 * n + 1];
        v[i] = 1;
        Self(v)
    }

    pub fn n(&self) -> usize {
        (self.0.len() - 1) / 2
    }

    /// `|I| = Σ iⱼ`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Homogeneous degree `d(I) = i₁ + ⋯ + i_{2n} + 2 i_{2n+1}`.
    pub fn degree(&self) -> u32 {
        let last = self.0.len() - 1;
        self.0[..last].iter().sum::<u32>() + 2 * self.0[last]
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// The monomial `z^I = x^{(i₁,…,i_{2n})} t^{i_{2n+1}}` at `z`.
    pub fn monomial(&self, z: &HPoint) -> f64 {
        let last = self.0.len() - 1;
        let mut v = z.t.powi(self.0[last] as i32);
        for (xi, &e) in z.x.iter().zip(&self.0[..last]) {
            if e > 0 {
                v *= xi.powi(e as i32);
            }
        }
        v
    }

    /// All multi-indices with `d(I) = d` for ℍⁿ, in descending lexicographic order.
    pub fn of_degree(n: usize, d: u32) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; 2 * n + 1];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            let last = cur.len() - 1;
            if pos == last {
                if left % 2 == 0 {
                    cur[last] = left / 2;
                    out.push(MultiIndex(cur.clone()));
                    cur[last] = 0;
                }
                return;
            }
            for e in (0..=left).rev() {
                cur[pos] = e;
                rec(pos + 1, left - e, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, d, &mut cur, &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// The polynomials of homogeneous degree at most `k` with their monomial basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySpace {
    pub k: u32,
    pub n: usize,
    pub basis: Vec<MultiIndex>,
}

impl PolySpace {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `Σ c_I z^I`.
    pub fn eval(&self, coeffs: &[f64], z: &HPoint) -> f64 {
        self.basis.iter().zip(coeffs).map(|(i, c)| c * i.monomial(z)).sum()
    }
}

/// Basis of `𝒫_k`, graded by `d(I)` and descending lexicographic within a degree.
pub fn monomial_basis(k: u32, n: usize) -> PolySpace {
    let basis = (0..=k).flat_map(|d| MultiIndex::of_degree(n, d)).collect();
    PolySpace { k, n, basis }
}

/// Left-invariant (`X_i`) or right-invariant (`X̃_i`) fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct TermKey {
    beta: Exponent,
    alpha: Vec<u32>,
    k: u32,
}

/// An exact element of `span{ x^α t^k ρ^{−β} }` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelExpr {
    n: usize,
    terms: BTreeMap<TermKey, BigRational>,
}

/// One term `coeff · x^alpha t^k ρ^{−beta}` of a canonical expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: BigRational,
    pub alpha: Vec<u32>,
    pub k: u32,
    pub beta: Exponent,
}

impl Term {
    /// Homogeneous degree `|α| + 2k − β`.
    pub fn degree(&self) -> Exponent {
        Exponent::from_integer(self.alpha.iter().sum::<u32>() as i64 + 2 * self.k as i64) - self.beta
    }
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn exp_to_rat(e: Exponent) -> BigRational {
    BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()))
}

impl KernelExpr {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut e = Self::zero(n);
        e.insert(vec![0; 2 * n], 0, Exponent::zero(), c);
        e
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, BigRational::one())
    }

    /// `ρ^{−β}`.
    pub fn rho_power(n: usize, beta: Exponent) -> Self {
        let mut e = Self::zero(n);
        e.insert(vec![0; 2 * n], 0, beta, BigRational::one());
        e
    }

    /// The coordinate function `x_{i+1}` (zero-based `i < 2n`).
    pub fn x(n: usize, i: usize) -> Self {
        let mut alpha = vec![0; 2 * n];
        alpha[i] = 1;
        let mut e = Self::zero(n);
        e.insert(alpha, 0, Exponent::zero(), BigRational::one());
        e
    }

    pub fn t(n: usize) -> Self {
        let mut e = Self::zero(n);
        e.insert(vec![0; 2 * n], 1, Exponent::zero(), BigRational::one());
        e
    }

    /// The monomial `z^I`.
    pub fn monomial(index: &MultiIndex) -> Self {
        let n = index.n();
        let mut e = Self::zero(n);
        e.insert(index.0[..2 * n].to_vec(), index.0[2 * n], Exponent::zero(), BigRational::one());
        e
    }

    /// A single term `c · x^α t^k ρ^{−β}`, canonicalised.
    pub fn term(n: usize, coeff: BigRational, alpha: Vec<u32>, k: u32, beta: Exponent) -> Self {
        assert_eq!(alpha.len(), 2 * n);
        let mut e = Self::zero(n);
        e.insert(alpha, k, beta, coeff);
        e
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.terms.iter().map(|(k, c)| Term { coeff: c.clone(), alpha: k.alpha.clone(), k: k.k, beta: k.beta })
    }

    /// Homogeneous degree of every term, in canonical order.
    pub fn degrees(&self) -> Vec<Exponent> {
        self.terms().map(|t| t.degree()).collect()
    }

    fn insert(&mut self, alpha: Vec<u32>, k: u32, beta: Exponent, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        if k >= 2 {
            // x^α t^k ρ^{−β} = x^α t^{k−2} ρ^{−β+4} − Σ_{i,j} x^{α+2eᵢ+2eⱼ} t^{k−2} ρ^{−β}
            self.insert(alpha.clone(), k - 2, beta - Exponent::from_integer(4), coeff.clone());
            let m = alpha.len();
            for i in 0..m {
                for j in 0..m {
                    let mut a = alpha.clone();
                    a[i] += 2;
                    a[j] += 2;
                    self.insert(a, k - 2, beta, -coeff.clone());
                }
            }
            return;
        }
        match self.terms.entry(TermKey { beta, alpha, k }) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn add_assign_scaled(&mut self, other: &Self, s: &BigRational) {
        assert_eq!(self.n, other.n, "expressions over different groups");
        for (k, c) in &other.terms {
            self.insert(k.alpha.clone(), k.k, k.beta, c.clone() * s.clone());
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut out = Self::zero(self.n);
        out.add_assign_scaled(self, s);
        out
    }

    /// Product with `x_{i+1}`.
    pub fn times_x(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            let mut a = k.alpha.clone();
            a[i] += 1;
            out.insert(a, k.k, k.beta, c.clone());
        }
        out
    }

    /// Product with `t`.
    pub fn times_t(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            out.insert(k.alpha.clone(), k.k + 1, k.beta, c.clone());
        }
        out
    }

    /// Product of two expressions.
    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let alpha = ka.alpha.iter().zip(&kb.alpha).map(|(a, b)| a + b).collect();
                out.insert(alpha, ka.k + kb.k, ka.beta + kb.beta, ca.clone() * cb.clone());
            }
        }
        out
    }

    /// `∂/∂x_{i+1}`.
    pub fn d_x(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        let four = Exponent::from_integer(4);
        for (k, c) in &self.terms {
            if k.alpha[i] > 0 {
                let mut a = k.alpha.clone();
                a[i] -= 1;
                out.insert(a, k.k, k.beta, c.clone() * rat(k.alpha[i] as i64));
            }
            if !k.beta.is_zero() {
                // ∂ᵢ ρ^{−β} = −β ρ^{−β−4} |x|² xᵢ
                let cb = -c.clone() * exp_to_rat(k.beta);
                for j in 0..2 * self.n {
                    let mut a = k.alpha.clone();
                    a[i] += 1;
                    a[j] += 2;
                    out.insert(a, k.k, k.beta + four, cb.clone());
                }
            }
        }
        out
    }

    /// `∂/∂t`.
    pub fn d_t(&self) -> Self {
        let mut out = Self::zero(self.n);
        let four = Exponent::from_integer(4);
        for (k, c) in &self.terms {
            if k.k > 0 {
                out.insert(k.alpha.clone(), k.k - 1, k.beta, c.clone() * rat(k.k as i64));
            }
            if !k.beta.is_zero() {
                // ∂ₜ ρ^{−β} = −(β/2) ρ^{−β−4} t
                let cb = -c.clone() * exp_to_rat(k.beta) / rat(2);
                out.insert(k.alpha.clone(), k.k + 1, k.beta + four, cb);
            }
        }
        out
    }

    fn field(&self, i: usize, side: Side) -> Result<Self, KernelError> {
        let n = self.n;
        if i > 2 * n {
            return Err(KernelError::FieldIndex { index: i, count: 2 * n + 1 });
        }
        if i == 2 * n {
            return Ok(self.d_t());
        }
        let sign = match side {
            Side::Left => 1,
            Side::Right => -1,
        };
        let dt = self.d_t();
        let mut out = self.d_x(i);
        // X_i = ∂_{x_i} + 2 x_{i+n} ∂_t (i < n), X_{i+n} = ∂_{x_{i+n}} − 2 x_i ∂_t; X̃ flips the sign.
        let (partner, s) = if i < n { (i + n, 2 * sign) } else { (i - n, -2 * sign) };
        out.add_assign_scaled(&dt.times_x(partner), &rat(s));
        Ok(out)
    }

    /// `X_{i+1} e`.
    pub fn apply_left(&self, i: usize) -> Result<Self, KernelError> {
        self.field(i, Side::Left)
    }

    /// `X̃_{i+1} e`.
    pub fn apply_right(&self, i: usize) -> Result<Self, KernelError> {
        self.field(i, Side::Right)
    }

    /// `X^I e = X_1^{i₁} ⋯ X_{2n+1}^{i_{2n+1}} e` (the rightmost factor acts first).
    pub fn apply_multi(&self, index: &MultiIndex, side: Side) -> Result<Self, KernelError> {
        if index.0.len() != 2 * self.n + 1 {
            return Err(KernelError::IndexLength { got: index.0.len(), expected: 2 * self.n + 1 });
        }
        let mut e = self.clone();
        for i in (0..=2 * self.n).rev() {
            for _ in 0..index.0[i] {
                e = e.field(i, side)?;
            }
        }
        Ok(e)
    }

    /// `ℒ e = −Σ_{i<2n} X_i² e`.
    pub fn sublaplacian(&self) -> Self {
        let mut out = Self::zero(self.n);
        for i in 0..2 * self.n {
            let xi = self.apply_left(i).and_then(|e| e.apply_left(i)).expect("valid field index");
            out.add_assign_scaled(&xi, &rat(-1));
        }
        out
    }

    /// Value at `z`; fails at the identity when some term has `β > 0`.
    pub fn eval<T: Float>(&self, z: &HPoint<T>) -> Result<T, KernelError>
    where
        T: crate::group::Scalar,
    {
        if z.n() != self.n {
            return Err(crate::error::GroupError::DimensionMismatch { left: self.n, right: z.n() }.into());
        }
        let r4 = z.gauge4();
        let mut acc = T::zero();
        let mut cached: Option<(Exponent, T)> = None;
        for (k, c) in &self.terms {
            let rb = if k.beta.is_zero() {
                T::one()
            } else {
                if k.beta.is_positive() && r4.is_zero() {
                    return Err(KernelError::SingularPoint);
                }
                match cached {
                    Some((b, v)) if b == k.beta => v,
                    _ => {
                        let v = rho_neg_power(r4, k.beta);
                        cached = Some((k.beta, v));
                        v
                    }
                }
            };
            let mut m = T::from(c.to_f64().unwrap_or(f64::NAN)).unwrap();
            for (xi, &e) in z.x.iter().zip(&k.alpha) {
                if e > 0 {
                    m = m * xi.powi(e as i32);
                }
            }
            if k.k == 1 {
                m = m * z.t;
            }
            acc = acc + m * rb;
        }
        Ok(acc)
    }

    /// Lowered form for fast repeated evaluation in `f64`.
    pub fn compile(&self) -> CompiledKernel {
        let mut betas: Vec<Exponent> = Vec::new();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, c) in &self.terms {
            let bi = match betas.iter().position(|b| *b == k.beta) {
                Some(p) => p,
                None => {
                    betas.push(k.beta);
                    betas.len() - 1
                }
            };
            terms.push(CompiledTerm {
                coeff: c.to_f64().unwrap_or(f64::NAN),
                alpha: k.alpha.iter().map(|&a| a as i32).collect(),
                k: k.k,
                beta: bi,
            });
        }
        let integer_betas = betas.iter().map(|b| if b.is_integer() { Some(b.to_integer() as i32) } else { None }).collect();
        CompiledKernel {
            betas: betas.iter().map(|b| b.to_f64().unwrap()).collect(),
            integer_betas,
            terms,
        }
    }
}

fn rho_neg_power<T: Float>(r4: T, beta: Exponent) -> T {
    if beta.is_integer() {
        let b = beta.to_integer();
        if b % 4 == 0 {
            return r4.powi(-(b / 4) as i32);
        }
        let rho = r4.sqrt().sqrt();
        return rho.powi(-b as i32);
    }
    r4.powf(T::from(-beta.to_f64().unwrap() / 4.0).unwrap())
}

impl Add for &KernelExpr {
    type Output = KernelExpr;
    fn add(self, rhs: &KernelExpr) -> KernelExpr {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, &BigRational::one());
        out
    }
}

impl Sub for &KernelExpr {
    type Output = KernelExpr;
    fn sub(self, rhs: &KernelExpr) -> KernelExpr {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, &-BigRational::one());
        out
    }
}

impl Neg for &KernelExpr {
    type Output = KernelExpr;
    fn neg(self) -> KernelExpr {
        self.scale(&-BigRational::one())
    }
}

impl Mul for &KernelExpr {
    type Output = KernelExpr;
    fn mul(self, rhs: &KernelExpr) -> KernelExpr {
        self.product(rhs)
    }
}

/// One line per term: `c * x^(α) t^k rho^-β`.
impl fmt::Display for KernelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return writeln!(f, "0");
        }
        for (k, c) in &self.terms {
            write!(f, "{c} * x^(")?;
            for (i, a) in k.alpha.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            writeln!(f, ") t^{} rho^-{}", k.k, k.beta)?;
        }
        Ok(())
    }
}

/// `[X_i, X_j] e`.
pub fn commutator(i: usize, j: usize, e: &KernelExpr) -> Result<KernelExpr, KernelError> {
    let a = e.apply_left(j)?.apply_left(i)?;
    let b = e.apply_left(i)?.apply_left(j)?;
    Ok(&a - &b)
}

/// `[X_i, X_j]` applied to the coordinate `t`. Every bracket of the fields is a constant
/// multiple of `∂/∂t`, so the result is that constant.
pub fn commutator_check(n: usize, i: usize, j: usize) -> Result<KernelExpr, KernelError> {
    commutator(i, j, &KernelExpr::t(n))
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coeff: f64,
    alpha: smallvec::SmallVec<[i32; 6]>,
    k: u32,
    beta: usize,
}

/// `f64` evaluator of a [`KernelExpr`].
#[derive(Clone, Debug)]
pub struct CompiledKernel {
    betas: Vec<f64>,
    integer_betas: Vec<Option<i32>>,
    terms: Vec<CompiledTerm>,
}

impl CompiledKernel {
    /// Value at `(x, t)`; the caller guarantees the point is not the identity when `β > 0`.
    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let r4 = x2 * x2 + t * t;
        let mut powers: smallvec::SmallVec<[f64; 8]> = smallvec::SmallVec::with_capacity(self.betas.len());
        let mut rho_inv = None;
        for (b, ib) in self.betas.iter().zip(&self.integer_betas) {
            let v = match ib {
                Some(0) => 1.0,
                Some(k) if k % 4 == 0 => r4.powi(-k / 4),
                Some(k) => {
                    let ri = *rho_inv.get_or_insert_with(|| 1.0 / r4.sqrt().sqrt());
                    ri.powi(*k)
                }
                None => r4.powf(-b / 4.0),
            };
            powers.push(v);
        }
        let mut acc = 0.0;
        for term in &self.terms {
            let mut m = term.coeff;
            for (xi, &e) in x.iter().zip(&term.alpha) {
                match e {
                    0 => {}
                    1 => m *= xi,
                    2 => m *= xi * xi,
                    _ => m *= xi.powi(e),
                }
            }
            if term.k == 1 {
                m *= t;
            }
            acc += m * powers[term.beta];
        }
        acc
    }

    pub fn eval_point(&self, z: &HPoint) -> f64 {
        self.eval(&z.x, z.t)
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}
