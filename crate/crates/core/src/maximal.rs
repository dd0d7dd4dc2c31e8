//! Maximal functions on ℍⁿ: local `q`-means, `η_{q,γ}`, the maximal function `N_{q,γ}` over
//! polynomial representatives, the centred Hardy–Littlewood maximal function, the maximal
//! truncated singular integrals `T*_I` and the nontangential maximal function `M_φ`.
//!
//! All `sup_{r>0}` are taken over a logarithmic [`RadialGrid`]. Means over the nested balls
//! `B(z, r_j)` are computed from one set of weighted nodes ([`EtaSampler`]): every node carries the
//! index of the smallest grid ball containing it, so all means come from a single cumulative sum.

use serde::{Deserialize, Serialize};

use crate::atoms::{unit_ball_rule, Atom, FINE_RULE};
use crate::error::MaximalError;
use crate::gauss;
use crate::group::{HPoint, KoranyiBall};
use crate::kernel::{CompiledKernel, KernelExpr, MultiIndex, Side};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::polar::{pieces, sphere_crossings, SphereRule};
use crate::potential::{affine_eval, potential_derivative};
use crate::quadrature::{integrate_fullspace_zonal, unit_ball_volume, QuadSpec};
use crate::table::FastPotential;
use crate::testfn::{TestFunction, TestProfile};

/// Logarithmically spaced radii `r_min = r_0 < … < r_{count−1} = r_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, count: usize) -> Result<Self, MaximalError> {
        if !(r_min > 0.0 && r_min.is_finite() && r_max.is_finite() && r_min < r_max) {
            return Err(MaximalError::Grid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if count < 16 {
            return Err(MaximalError::Grid(format!("need at least 16 radii, got {count}")));
        }
        Ok(Self { r_min, r_max, count })
    }

    /// `[δ/64, 512δ]` with 64 radii.
    pub fn for_scale(delta: f64) -> Self {
        Self { r_min: delta / 64.0, r_max: 512.0 * delta, count: 64 }
    }

    pub fn radii(&self) -> Vec<f64> {
        let ratio = (self.r_max / self.r_min).ln() / (self.count - 1) as f64;
        let mut r: Vec<f64> = (0..self.count).map(|j| self.r_min * (ratio * j as f64).exp()).collect();
        r[self.count - 1] = self.r_max;
        r
    }

    /// The grid with every gap halved; its radii contain the original ones.
    pub fn refined(&self) -> Self {
        Self { count: 2 * self.count - 1, ..*self }
    }
}

/// Parameters of `η_{q,γ}`: `γ = k + t` with `k` a non-negative integer and `0 < t ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalParams {
    pub q: f64,
    pub gamma: f64,
    pub k: u32,
    /// Angular order of the direction rule used to sample each ball.
    pub samples_per_ball: usize,
}

impl MaximalParams {
    pub fn new(q: f64, gamma: f64, samples_per_ball: usize) -> Result<Self, MaximalError> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(MaximalError::Params(format!("q must exceed 1, got {q}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(MaximalError::Params(format!("γ must be positive, got {gamma}")));
        }
        if samples_per_ball < 2 {
            return Err(MaximalError::Params(format!("samples_per_ball must be at least 2, got {samples_per_ball}")));
        }
        let k = (gamma.ceil() - 1.0).max(0.0) as u32;
        Ok(Self { q, gamma, k, samples_per_ball })
    }

    /// Checks `1 < q < (n+1)/n`.
    pub fn check_theorem_range(&self, n: usize) -> Result<(), MaximalError> {
        let upper = (n as f64 + 1.0) / n as f64;
        if self.q > 1.0 && self.q < upper {
            Ok(())
        } else {
            Err(MaximalError::Params(format!("q = {} outside (1, {upper})", self.q)))
        }
    }
}

/// A supremum over a grid together with the grid value where it is attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMax {
    pub value: f64,
    /// Radius (or `ε`, or `t`) attaining the maximum.
    pub at: f64,
}

impl GridMax {
    fn of(values: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut best = GridMax { value: 0.0, at: f64::NAN };
        for (at, v) in values {
            if v > best.value || best.at.is_nan() {
                best = GridMax { value: v, at };
            }
        }
        best
    }
}

/// Weighted node of an [`EtaSampler`].
#[derive(Clone, Debug)]
pub struct BallNode {
    /// Absolute position `y`.
    pub y: HPoint,
    /// Offset `w = z⁻¹·y`.
    pub w: HPoint,
    pub weight: f64,
    /// Index of the smallest grid ball `B(z, r_j)` containing the node.
    pub level: usize,
}

const RADIAL_NODES: usize = 2;

/// Nodes and weights for integrals over all balls `B(z, r_j)` of a radial grid at once.
///
/// The region is covered by rays from `z`, split at every grid radius. When a focus ball
/// `B(c, δ)` is given, rays are also split where they cross its sphere; if moreover `ρ(c⁻¹z) =
/// D ≥ 8δ`, the ball `B(c, D/2)` is sampled by rays from `c` (split at the focus sphere and at the
/// spheres `∂B(z, r_j)`), which resolves the focus ball at the resolution of the direction rule.
/// A focus ball also adds the radii `D + kδ/4`, `−4 ≤ k ≤ 8`, to the grid, so that the sup over
/// `r` does not depend on where `D` falls between two grid radii.
#[derive(Clone, Debug)]
pub struct EtaSampler {
    pub z: HPoint,
    pub radii: Vec<f64>,
    /// `|B(z, r_j)|`.
    pub volumes: Vec<f64>,
    pub nodes: Vec<BallNode>,
}

/// Direction rule of order `m` rescaled so that it integrates constants exactly.
fn normalized_sphere(n: usize, m: usize) -> SphereRule {
    let mut sphere = SphereRule::new(n, m, m);
    let factor = (2 * n + 2) as f64 * unit_ball_volume(n) / sphere.total();
    sphere.weights.iter_mut().for_each(|w| *w *= factor);
    sphere
}

/// The grid radii together with `D + kδ/4`, `−4 ≤ k ≤ 8`: the radii at which the balls
/// `B(z, r)` sweep across a focus ball `B(c, δ)` at distance `D`.
fn with_focus_radii(grid: &[f64], d: f64, delta: f64) -> Vec<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut radii = grid.to_vec();
    radii.extend((-4..=8).map(|k| d + 0.25 * k as f64 * delta).filter(|r| *r > lo && *r < hi));
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * *b);
    radii
}

fn level_of(radii: &[f64], rho: f64) -> Option<usize> {
    let j = radii.partition_point(|r| *r < rho * (1.0 - 1e-12));
    (j < radii.len()).then_some(j)
}

impl EtaSampler {
    pub fn new(z: &HPoint, grid: &RadialGrid, params: &MaximalParams, focus: Option<&KoranyiBall>) -> Self {
        let n = z.n();
        let q = 2 * n as i32 + 2;
        let grid_radii = grid.radii();
        let radii = match focus {
            Some(b) => with_focus_radii(&grid_radii, b.center.gauge_distance(z), b.radius),
            None => grid_radii.clone(),
        };
        let unit = unit_ball_volume(n);
        let volumes = radii.iter().map(|r| unit * r.powi(q)).collect();
        let sphere = normalized_sphere(n, params.samples_per_ball);
        let rule = gauss::rule(RADIAL_NODES);
        let r_max = grid.r_max;
        let far_ball = focus.and_then(|b| {
            let d = b.center.gauge_distance(z);
            (d >= 8.0 * b.radius).then(|| (b.clone(), d))
        });
        let mut nodes = Vec::new();
        // Below r_0 the rays continue with the grid's ratio so every piece is resolved alike.
        let mut base = radii.clone();
        let ratio = if grid_radii.len() > 1 { grid_radii[1] / grid_radii[0] } else { 2.0 };
        base.extend((1..=24).map(|k| radii[0] * ratio.powi(-k)));
        for (sigma, wd) in sphere.dirs.iter().zip(&sphere.weights) {
            let mut breaks = base.clone();
            if let Some(b) = focus {
                breaks.extend(sphere_crossings(z, sigma, &b.center, b.radius, 0.0, r_max));
            }
            if let Some((b, d)) = &far_ball {
                breaks.extend(sphere_crossings(z, sigma, &b.center, 0.5 * d, 0.0, r_max));
            }
            for (lo, hi) in pieces(breaks, 0.0, r_max) {
                if let Some((b, d)) = &far_ball {
                    let mid = z.compose(&sigma.scaled(0.5 * (lo + hi)));
                    if b.center.gauge_distance(&mid) < 0.5 * d {
                        continue;
                    }
                }
                let level = level_of(&radii, hi).expect("piece inside the grid");
                for (s, ws) in rule.mapped(lo, hi) {
                    let w = sigma.scaled(s);
                    nodes.push(BallNode { y: z.compose(&w), w, weight: wd * ws * s.powi(q - 1), level });
                }
            }
        }
        if let Some((b, d)) = &far_ball {
            let c = &b.center;
            let delta = b.radius;
            let outer = 0.5 * d;
            let zi = z.inverse();
            let mut base = vec![0.5 * delta, 0.8 * delta, 0.95 * delta, delta];
            let mut r = 2.0 * delta;
            while r < outer {
                base.push(r);
                r *= 2.0;
            }
            let relevant: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.99 * outer && *r < 1.51 * d).collect();
            for (sigma, wd) in sphere.dirs.iter().zip(&sphere.weights) {
                let mut breaks = base.clone();
                for rj in &relevant {
                    breaks.extend(sphere_crossings(c, sigma, z, *rj, 0.0, outer));
                }
                for (lo, hi) in pieces(breaks, 0.0, outer) {
                    for (s, ws) in rule.mapped(lo, hi) {
                        let y = c.compose(&sigma.scaled(s));
                        let w = zi.compose(&y);
                        if let Some(level) = level_of(&radii, w.gauge()) {
                            nodes.push(BallNode { y, w, weight: wd * ws * s.powi(q - 1), level });
                        }
                    }
                }
            }
        }
        Self { z: z.clone(), radii, volumes, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{B(z, r_j)} h` for every `j`, given `h` at the nodes.
    pub fn cumulative(&self, h: &[f64]) -> Vec<f64> {
        let mut per_level = vec![0.0; self.radii.len()];
        for (node, v) in self.nodes.iter().zip(h) {
            per_level[node.level] += node.weight * v;
        }
        let mut acc = 0.0;
        per_level
            .into_iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    }

    /// `|g|_{q, B(z, r_j)}` for every `j`, given `g` at the nodes.
    pub fn q_means(&self, g: &[f64], q: f64) -> Vec<f64> {
        let h: Vec<f64> = g.iter().map(|v| v.abs().powf(q)).collect();
        self.cumulative(&h).iter().zip(&self.volumes).map(|(s, v)| (s / v).max(0.0).powf(1.0 / q)).collect()
    }

    /// `max_j r_j^{−γ} |g|_{q, B(z, r_j)}`.
    pub fn eta(&self, g: &[f64], q: f64, gamma: f64) -> GridMax {
        let means = self.q_means(g, q);
        GridMax::of(self.radii.iter().zip(means).map(|(r, m)| (*r, r.powf(-gamma) * m)))
    }

    /// `η` of `g − P` where `P(w) = c₀ + Σ cᵢ wᵢ` in the offset coordinates `w = z⁻¹·y`.
    pub fn eta_with_offset(&self, g: &[f64], coeffs: &[f64], q: f64, gamma: f64) -> GridMax {
        let h: Vec<f64> = self.nodes.iter().zip(g).map(|(node, v)| v - affine_eval(coeffs, &node.w)).collect();
        self.eta(&h, q, gamma)
    }

    /// `max_j |B(z, r_j)|^{−1} ∫_{B(z, r_j)} |f|`, given `f` at the nodes.
    pub fn max_mean(&self, f: &[f64]) -> GridMax {
        let h: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        let sums = self.cumulative(&h);
        GridMax::of(self.radii.iter().zip(sums.iter().zip(&self.volumes)).map(|(r, (s, v))| (*r, s / v)))
    }
}

/// `|g|_{q,B} = (|B|⁻¹ ∫_B |g|^q)^{1/q}` on a fixed gauge-polar product rule with
/// `spec.points_per_axis` nodes per axis.
pub fn local_q_mean(g: &dyn Fn(&HPoint) -> f64, q: f64, ball: &KoranyiBall, spec: &QuadSpec) -> Result<f64, MaximalError> {
    if !(q > 1.0) {
        return Err(MaximalError::Params(format!("q must exceed 1, got {q}")));
    }
    spec.validate()?;
    let n = ball.n();
    let m = spec.points_per_axis;
    let sphere = normalized_sphere(n, m);
    let exp = 2 * n as i32 + 1;
    let mut acc = 0.0;
    for (sigma, wd) in sphere.dirs.iter().zip(&sphere.weights) {
        for (s, ws) in gauss::rule(m).mapped(0.0, ball.radius) {
            acc += wd * ws * s.powi(exp) * g(&ball.center.compose(&sigma.scaled(s))).abs().powf(q);
        }
    }
    let vol = unit_ball_volume(n) * ball.radius.powi(exp + 1);
    Ok((acc / vol).powf(1.0 / q))
}

/// `η_{q,γ}(g; z) = sup_r r^{−γ} |g|_{q, B(z,r)}` over the grid; `at` is the maximising radius.
pub fn eta(g: &dyn Fn(&HPoint) -> f64, params: &MaximalParams, z: &HPoint, grid: &RadialGrid) -> GridMax {
    let sampler = EtaSampler::new(z, grid, params, None);
    let values: Vec<f64> = sampler.nodes.iter().map(|node| g(&node.y)).collect();
    sampler.eta(&values, params.q, params.gamma)
}

/// Result of minimising `η` over representatives `g − P`, `P ∈ 𝒫₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NOptimum {
    pub value: f64,
    pub radius: f64,
    /// Coefficients `(c₀, c₁, …, c_{2n})` of the subtracted `P(w) = c₀ + Σ cᵢ wᵢ`, `w = z⁻¹·y`.
    pub offset: Vec<f64>,
    pub converged: bool,
    pub evaluations: usize,
}

/// A representative `g − P` of the class of `g` modulo `𝒫₁`, with `P` written in offset
/// coordinates around `origin`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassRepresentative<F> {
    pub base: F,
    pub origin: HPoint,
    pub offset: Vec<f64>,
}

impl<F: Fn(&HPoint) -> f64> ClassRepresentative<F> {
    pub fn eval(&self, y: &HPoint) -> f64 {
        (self.base)(y) - affine_eval(&self.offset, &self.origin.inverse().compose(y))
    }
}

fn check_k(params: &MaximalParams) -> Result<(), MaximalError> {
    if params.k != 1 {
        return Err(MaximalError::Params(format!("polynomial offsets are implemented for k = 1, got k = {}", params.k)));
    }
    Ok(())
}

/// `c ↦ η(g − P_c)` with the node data laid out flat for repeated evaluation.
struct OffsetObjective {
    dim: usize,
    /// `(1, w₁, …, w_{2n})` per node.
    basis: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    levels: Vec<usize>,
    /// `r_j^{−γ}` and `|B(z, r_j)|⁻¹`.
    radius_factor: Vec<f64>,
    inv_volume: Vec<f64>,
    q: f64,
}

impl OffsetObjective {
    fn new(sampler: &EtaSampler, g: &[f64], q: f64, gamma: f64) -> Self {
        let dim = 2 * sampler.z.n() + 1;
        let mut basis = Vec::with_capacity(dim * sampler.len());
        for node in &sampler.nodes {
            basis.push(1.0);
            basis.extend_from_slice(&node.w.x);
        }
        Self {
            dim,
            basis,
            values: g.to_vec(),
            weights: sampler.nodes.iter().map(|n| n.weight).collect(),
            levels: sampler.nodes.iter().map(|n| n.level).collect(),
            radius_factor: sampler.radii.iter().map(|r| r.powf(-gamma)).collect(),
            inv_volume: sampler.volumes.iter().map(|v| 1.0 / v).collect(),
            q,
        }
    }

    fn eval(&self, c: &[f64], per_level: &mut Vec<f64>) -> GridMax {
        per_level.clear();
        per_level.resize(self.radius_factor.len(), 0.0);
        for (i, b) in self.basis.chunks_exact(self.dim).enumerate() {
            let p: f64 = b.iter().zip(c).map(|(b, c)| b * c).sum();
            let h = (self.values[i] - p).abs();
            if h > 0.0 {
                per_level[self.levels[i]] += self.weights[i] * (self.q * h.ln()).exp();
            }
        }
        let mut acc = 0.0;
        let inv_q = 1.0 / self.q;
        GridMax::of(per_level.iter().enumerate().map(|(j, v)| {
            acc += v;
            (j, self.radius_factor[j] * (acc * self.inv_volume[j]).max(0.0).powf(inv_q))
        }).map(|(j, v)| (j as f64, v)))
    }
}

/// Minimises `c ↦ η(g − P_c)` by Nelder–Mead from each start; the result is never worse than
/// the best start.
pub fn optimize_offsets(sampler: &EtaSampler, g: &[f64], params: &MaximalParams, starts: &[Vec<f64>]) -> NOptimum {
    let n = sampler.z.n();
    let dim = 2 * n + 1;
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let r_typ = (sampler.radii[0] * sampler.radii[sampler.radii.len() - 1]).sqrt();
    let mut best = NOptimum { value: f64::INFINITY, radius: f64::NAN, offset: vec![0.0; dim], converged: false, evaluations: 0 };
    let opts = NelderMeadOptions { max_evals: 100 * dim, f_tol: 1e-7, f_floor: 1e-30 * scale, restarts: 1 };
    let objective = OffsetObjective::new(sampler, g, params.q, params.gamma);
    let mut scratch = Vec::new();
    for start in starts {
        let steps: Vec<f64> = (0..dim)
            .map(|i| {
                let typ = if i == 0 { scale } else { scale / r_typ };
                0.05 * start[i].abs().max(typ)
            })
            .collect();
        let mut f = |c: &[f64]| objective.eval(c, &mut scratch).value;
        let m = nelder_mead(&mut f, start, &steps, &opts);
        best.evaluations += m.evals;
        if m.f < best.value {
            let at = objective.eval(&m.x, &mut scratch);
            best = NOptimum { value: m.f, radius: sampler.radii[at.at as usize], offset: m.x, converged: m.converged, evaluations: best.evaluations };
        }
    }
    best
}

/// Degree-one Taylor coefficients of `g` at `z` by central differences along `exp(±h eᵢ)`.
fn finite_difference_taylor(g: &dyn Fn(&HPoint) -> f64, z: &HPoint, h: f64) -> Vec<f64> {
    let n = z.n();
    let mut c = vec![g(z)];
    for i in 0..2 * n {
        let mut e = HPoint::identity(n);
        e.x[i] = h;
        let plus = g(&z.compose(&e));
        e.x[i] = -h;
        let minus = g(&z.compose(&e));
        c.push((plus - minus) / (2.0 * h));
    }
    c
}

/// Upper bound for `N_{q,γ}(G; z) = inf_{g ∈ G} η_{q,γ}(g; z)` with `G = g + 𝒫₁`, from
/// simplex searches started at the zero offset and at the finite-difference Taylor polynomial.
pub fn big_n_opt(
    g: &dyn Fn(&HPoint) -> f64,
    params: &MaximalParams,
    z: &HPoint,
    grid: &RadialGrid,
    focus: Option<&KoranyiBall>,
) -> Result<NOptimum, MaximalError> {
    check_k(params)?;
    let sampler = EtaSampler::new(z, grid, params, focus);
    let values: Vec<f64> = sampler.nodes.iter().map(|node| g(&node.y)).collect();
    let dim = 2 * z.n() + 1;
    let taylor = finite_difference_taylor(g, z, 0.5 * grid.r_min);
    Ok(optimize_offsets(&sampler, &values, params, &[vec![0.0; dim], taylor]))
}

/// Both estimates of `N_{q,2}(b̃; z)` for a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialN {
    /// `η` of the Taylor remainder `w ↦ b(z·w) − Σ_{d(I) ≤ 1} (X^I b)(z) w^I`.
    pub taylor: GridMax,
    pub opt: NOptimum,
    pub taylor_coefficients: Vec<f64>,
    pub nodes: usize,
}

/// Samples `b` on the balls around `z` and evaluates the Taylor representative and the optimised
/// one. The constant Taylor coefficient is taken from the same evaluator as the samples.
pub fn big_n_potential(fp: &FastPotential, params: &MaximalParams, z: &HPoint, grid: &RadialGrid) -> Result<PotentialN, MaximalError> {
    check_k(params)?;
    let pf = &fp.field;
    let n = pf.n();
    let sampler = EtaSampler::new(z, grid, params, Some(pf.atom.ball()));
    let values = sampler.nodes.iter().map(|node| fp.value(&node.y)).collect::<Result<Vec<f64>, _>>()?;
    let mut coeffs = vec![fp.value(z)?];
    for i in 0..2 * n {
        coeffs.push(potential_derivative(pf, &MultiIndex::unit(n, i), z, &pf.spec)?);
    }
    let taylor = sampler.eta_with_offset(&values, &coeffs, params.q, params.gamma);
    let opt = optimize_offsets(&sampler, &values, params, &[vec![0.0; 2 * n + 1], coeffs.clone()]);
    Ok(PotentialN { taylor, opt, taylor_coefficients: coeffs, nodes: sampler.len() })
}

/// `η` of the Taylor remainder of the potential at `z`.
pub fn big_n_taylor(fp: &FastPotential, params: &MaximalParams, z: &HPoint, grid: &RadialGrid) -> Result<GridMax, MaximalError> {
    Ok(big_n_potential(fp, params, z, grid)?.taylor)
}

/// Centred Hardy–Littlewood maximal function `max_j |B(z,r_j)|⁻¹ ∫_{B(z,r_j)} |f|`; a focus ball
/// on whose sphere `f` may jump makes the sampling exact there.
pub fn hardy_littlewood(
    f: &dyn Fn(&HPoint) -> f64,
    z: &HPoint,
    grid: &RadialGrid,
    params: &MaximalParams,
    focus: Option<&KoranyiBall>,
) -> GridMax {
    let sampler = EtaSampler::new(z, grid, params, focus);
    let values: Vec<f64> = sampler.nodes.iter().map(|node| f(&node.y)).collect();
    sampler.max_mean(&values)
}

/// Kernels `X^I ρ^{−2n}` for every `I` with `d(I) = 2`.
pub fn singular_kernels(n: usize) -> Vec<(MultiIndex, CompiledKernel)> {
    let base = KernelExpr::rho_power(n, num_rational::Ratio::from_integer(2 * n as i64));
    MultiIndex::of_degree(n, 2)
        .into_iter()
        .map(|i| {
            let e = base.apply_multi(&i, Side::Left).expect("index length matches n");
            (i, e.compile())
        })
        .collect()
}

/// `(T*_I a)(z)` for each kernel: maxima over the `ε` grid of
/// `|∫_{ρ(w⁻¹·z) > ε} (X^I ρ^{−2n})(w⁻¹·z) a(w) dw|`.
///
/// On rays `w = z·(sσ)` the kernel is `s^{−Q} K_I(σ⁻¹)` and `dw = s^{Q−1} ds dσ`. Below
/// `ρ₀ = ε_max` the value `a(z)` is subtracted on every ray and added back as
/// `a(z) ln(ρ₀/ε) Σ_σ w_σ K_I(σ⁻¹)` (zero up to the direction rule's error, since the kernels
/// have mean zero on the sphere). When `B(z, ε_max)` misses the support and `ρ(c⁻¹z) ≥ 2δ`,
/// truncation is inactive and the full integral is summed over the atom's fine rule.
pub fn truncated_singular_max_all(
    atom: &Atom,
    kernels: &[(MultiIndex, CompiledKernel)],
    z: &HPoint,
    eps_grid: &RadialGrid,
    spec: &QuadSpec,
) -> Vec<GridMax> {
    let eps = eps_grid.radii();
    let eps_max = eps_grid.r_max;
    if atom.normalization == 0.0 {
        return vec![GridMax { value: 0.0, at: eps[0] }; kernels.len()];
    }
    let n = z.n();
    let c = atom.center();
    let delta = atom.delta();
    let dist = c.gauge_distance(z);
    if dist >= 2.0 * delta && dist - delta > eps_max * (1.0 + 1e-12) {
        let y = c.inverse().compose(z);
        let rule = &atom.fine;
        return kernels
            .iter()
            .map(|(_, k)| {
                let mut acc = 0.0;
                for ((u, w), a) in rule.nodes.iter().zip(&rule.weights).zip(&rule.values) {
                    let d = u.inverse().compose(&y);
                    acc += w * a * k.eval(&d.x, d.t);
                }
                GridMax { value: acc.abs(), at: eps[0] }
            })
            .collect();
    }
    let m = spec.points_per_axis.max(2);
    let sphere = SphereRule::new(n, 2 * m, 2 * m);
    let rule = gauss::rule(m);
    let ball = atom.ball();
    let reach = dist + delta;
    let s_max = reach.max(eps_max) * (1.0 + 1e-9);
    let az = atom.eval(z);
    let segments = eps.len();
    let mut totals = vec![vec![0.0; segments]; kernels.len()];
    let mut kernel_mass = vec![0.0; kernels.len()];
    let mut seg = vec![0.0; segments];
    for (sigma, wd) in sphere.dirs.iter().zip(&sphere.weights) {
        let kv: Vec<f64> = kernels.iter().map(|(_, k)| k.eval_point(&sigma.inverse())).collect();
        let mut breaks = eps.clone();
        breaks.extend(sphere_crossings(z, sigma, &ball.center, ball.radius, eps[0], s_max));
        seg.iter_mut().for_each(|v| *v = 0.0);
        for (lo, hi) in pieces(breaks, eps[0], s_max) {
            let j = eps.partition_point(|e| *e <= lo * (1.0 + 1e-12)).saturating_sub(1);
            let below = hi <= eps_max * (1.0 + 1e-12);
            let mut acc = 0.0;
            for (s, ws) in rule.mapped(lo, hi) {
                let v = atom.eval(&z.compose(&sigma.scaled(s)));
                acc += ws * if below { v - az } else { v } / s;
            }
            seg[j] += acc;
        }
        // suffix sums: contribution of s > ε_j
        let mut tail = 0.0;
        for j in (0..segments).rev() {
            tail += seg[j];
            for (t, k) in totals.iter_mut().zip(&kv) {
                t[j] += wd * k * tail;
            }
        }
        for (mass, k) in kernel_mass.iter_mut().zip(&kv) {
            *mass += wd * k;
        }
    }
    totals
        .iter()
        .zip(&kernel_mass)
        .map(|(t, mass)| GridMax::of(eps.iter().zip(t).map(|(e, v)| (*e, (v + az * (eps_max / e).ln() * mass).abs()))))
        .collect()
}

/// `(T*_I a)(z)` for a single `I` with `d(I) = 2`.
pub fn truncated_singular_max(atom: &Atom, index: &MultiIndex, z: &HPoint, eps_grid: &RadialGrid, spec: &QuadSpec) -> Result<GridMax, MaximalError> {
    if index.degree() != 2 || index.n() != atom.n() {
        return Err(MaximalError::Params(format!("T*_I needs d(I) = 2 on ℍ^{}, got {index}", atom.n())));
    }
    let base = KernelExpr::rho_power(atom.n(), num_rational::Ratio::from_integer(2 * atom.n() as i64));
    let k = base.apply_multi(index, Side::Left).map_err(|e| MaximalError::Potential(e.into()))?.compile();
    Ok(truncated_singular_max_all(atom, &[(index.clone(), k)], z, eps_grid, spec)[0].clone())
}

/// `Σ_{d(I) = 2} (T*_I a)(z)`.
pub fn truncated_singular_sum(atom: &Atom, z: &HPoint, eps_grid: &RadialGrid, spec: &QuadSpec) -> f64 {
    let kernels = singular_kernels(atom.n());
    truncated_singular_max_all(atom, &kernels, z, eps_grid, spec).iter().map(|g| g.value).sum()
}

/// Integrable source for [`nontangential_max`].
#[derive(Clone, Debug)]
pub enum Density<'a> {
    Atom(&'a Atom),
    Indicator(&'a KoranyiBall),
    Zero(usize),
}

impl Density<'_> {
    fn n(&self) -> usize {
        match self {
            Density::Atom(a) => a.n(),
            Density::Indicator(b) => b.n(),
            Density::Zero(n) => *n,
        }
    }

    fn value(&self, w: &HPoint) -> f64 {
        match self {
            Density::Atom(a) => a.eval(w),
            Density::Indicator(b) => {
                if b.contains(w) {
                    1.0
                } else {
                    0.0
                }
            }
            Density::Zero(_) => 0.0,
        }
    }

    /// Absolute nodes, weights and values of a product rule on the support.
    fn rule(&self) -> Option<(Vec<HPoint>, Vec<f64>, Vec<f64>)> {
        match self {
            Density::Atom(a) => {
                let c = a.center();
                let r = &a.fine;
                Some((r.nodes.iter().map(|u| c.compose(u)).collect(), r.weights.clone(), r.values.clone()))
            }
            Density::Indicator(b) => {
                let (nodes, weights) = unit_ball_rule(b.n(), FINE_RULE);
                let q = 2 * b.n() as i32 + 2;
                let scale = b.radius.powi(q);
                let len = nodes.len();
                Some((
                    nodes.iter().map(|u| b.center.compose(&u.scaled(b.radius))).collect(),
                    weights.iter().map(|w| w * scale).collect(),
                    vec![1.0; len],
                ))
            }
            Density::Zero(_) => None,
        }
    }

    fn support_radius(&self) -> f64 {
        match self {
            Density::Atom(a) => a.delta(),
            Density::Indicator(b) => b.radius,
            Density::Zero(_) => 0.0,
        }
    }
}

/// Radius beyond which the profile is below `e^{−30}`.
fn profile_reach(p: TestProfile) -> f64 {
    match p {
        TestProfile::GaugeGaussian => 2.4,
        TestProfile::Gaussian | TestProfile::Zero => 6.0,
    }
}

/// `M_φ f(z) = sup { |(f ∗ φ_t)(w)| : ρ(w⁻¹·z) < t }` over the `t` grid, with `φ = u/∫u`
/// and `w` sampled at `z·(λ t σ)` for `λ ∈ {0, 1/2, 9/10}` and `aperture_samples` directions `σ`.
///
/// `(f ∗ φ_t)(w) = ∫ f(y) φ_t(y⁻¹·w) dy`, with `φ_t(v) = t^{−Q} φ(t⁻¹·v)`, is summed over a
/// product rule on the support of `f` when `t` exceeds a quarter of the support radius, and as
/// `∫ f(w·(t v)⁻¹) φ(v) dv` over a gauge-polar rule for `φ` otherwise.
pub fn nontangential_max(
    f: &Density,
    u: &TestFunction,
    z: &HPoint,
    t_grid: &RadialGrid,
    aperture_samples: usize,
    spec: &QuadSpec,
) -> Result<GridMax, MaximalError> {
    let n = f.n();
    let q = 2 * n as i32 + 2;
    if u.profile == TestProfile::Zero {
        return Err(MaximalError::Params("the approximate identity must have nonzero integral".into()));
    }
    let ts = t_grid.radii();
    let Some((snodes, sweights, svalues)) = f.rule() else {
        return Ok(GridMax { value: 0.0, at: ts[0] });
    };
    let profile = u.profile;
    let zonal = move |r: f64, t: f64| {
        let p = HPoint::new(&{
            let mut x = vec![0.0; 2 * n];
            x[0] = r;
            x
        }, t);
        TestFunction::centered(profile, n).value(&p)
    };
    let mass = integrate_fullspace_zonal(&zonal, n, &QuadSpec { tail_exponent: Some(64.0), ..spec.clone() })?.value;
    let phi = |v: &HPoint| TestFunction::centered(profile, n).value(v) / mass;

    let m = spec.points_per_axis.max(2);
    let sphere = SphereRule::new(n, m, m);
    let reach = profile_reach(profile);
    let mut vrule: Vec<(HPoint, f64)> = Vec::new();
    let steps = 6;
    for (d, wd) in sphere.dirs.iter().zip(&sphere.weights) {
        for k in 0..steps {
            let (a, b) = (reach * k as f64 / steps as f64, reach * (k + 1) as f64 / steps as f64);
            for (s, ws) in gauss::rule(m).mapped(a, b) {
                let v = d.scaled(s);
                let weight = wd * ws * s.powi(q - 1) * phi(&v);
                vrule.push((v, weight));
            }
        }
    }
    let apertures = aperture_directions(n, aperture_samples);
    let small_t = 0.25 * f.support_radius();
    let conv = |w: &HPoint, t: f64| -> f64 {
        if t <= small_t {
            vrule.iter().map(|(v, wt)| wt * f.value(&w.compose(&v.scaled(t).inverse()))).sum()
        } else {
            let tq = t.powi(-q);
            let mut acc = 0.0;
            for ((y, wy), fy) in snodes.iter().zip(&sweights).zip(&svalues) {
                let v = y.inverse().compose(w).scaled(1.0 / t);
                acc += wy * fy * tq * phi(&v);
            }
            acc
        }
    };
    let mut best = GridMax { value: 0.0, at: ts[0] };
    for &t in &ts {
        let mut local = conv(z, t).abs();
        for sigma in &apertures {
            for lambda in [0.5, 0.9] {
                local = local.max(conv(&z.compose(&sigma.scaled(lambda * t)), t).abs());
            }
        }
        if local > best.value {
            best = GridMax { value: local, at: t };
        }
    }
    Ok(best)
}

/// Deterministic, well-spread unit-gauge directions.
pub fn aperture_directions(n: usize, count: usize) -> Vec<HPoint> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|k| {
            let u = (k as f64 + 0.5) / count as f64;
            let psi = (2.0 * u - 1.0).asin();
            let mut omega = vec![0.0; 2 * n];
            let mut norm = 0.0;
            for (i, o) in omega.iter_mut().enumerate() {
                let a = 2.0 * std::f64::consts::PI * ((k + 1) as f64 * golden * (i + 1) as f64).fract();
                *o = if i % 2 == 0 { a.cos() } else { a.sin() };
                norm += *o * *o;
            }
            let omega: Vec<f64> = omega.iter().map(|o| o / norm.sqrt()).collect();
            HPoint::from_gauge_polar(1.0, psi, &omega)
        })
        .collect()
}

/// `(Mχ_B)(z) = max_j |B ∩ B(z, r_j)| / |B(z, r_j)|` over the grid augmented by the focus radii
/// of `B`. The overlap is summed over a product rule on `B`, so small balls `B` far from `z` are
/// never missed; radii with `B(z, r) ⊂ B` or `B(z, r) ∩ B = ∅` are set to 1 and 0 exactly.
pub fn hardy_littlewood_indicator(ball: &KoranyiBall, z: &HPoint, grid: &RadialGrid, _params: &MaximalParams) -> GridMax {
    let n = z.n();
    let q = 2 * n as i32 + 2;
    let d = ball.center.gauge_distance(z);
    let radii = with_focus_radii(&grid.radii(), d, ball.radius);
    let (nodes, weights) = unit_ball_rule(n, FINE_RULE);
    let scale = ball.radius.powi(q);
    let mut dist: Vec<(f64, f64)> =
        nodes.iter().zip(&weights).map(|(u, w)| (ball.center.compose(&u.scaled(ball.radius)).gauge_distance(z), w * scale)).collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let unit = unit_ball_volume(n);
    let mut k = 0;
    let mut overlap = 0.0;
    GridMax::of(radii.iter().map(|&r| {
        while k < dist.len() && dist[k].0 < r {
            overlap += dist[k].1;
            k += 1;
        }
        let mean = if r <= ball.radius - d {
            1.0
        } else if r <= d - ball.radius {
            0.0
        } else {
            (overlap / (unit * r.powi(q))).min(1.0)
        };
        (r, mean)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{build_atom, AtomParams};
    use crate::potential::{FundamentalSolution, PotentialField};
    use crate::table::TableSize;
    use std::sync::Arc;

    fn params() -> MaximalParams {
        MaximalParams::new(1.2, 2.0, 8).unwrap()
    }

    fn grid() -> RadialGrid {
        RadialGrid::new(1.0 / 64.0, 512.0, 64).unwrap()
    }

    fn atom() -> Atom {
        let params = AtomParams::new(0.9, 2.0, 1, KoranyiBall::centered(1, 1.0).unwrap()).unwrap();
        build_atom(params, MultiIndex::unit(1, 2), &QuadSpec::default()).unwrap()
    }

    #[test]
    fn grid_and_params_validation() {
        assert!(RadialGrid::new(1.0, 0.5, 32).is_err());
        assert!(RadialGrid::new(0.1, 1.0, 8).is_err());
        let g = grid();
        let r = g.radii();
        assert_eq!(r.len(), 64);
        assert!((r[0] - 1.0 / 64.0).abs() < 1e-15 && r[63] == 512.0);
        let fine = g.refined().radii();
        for (j, v) in r.iter().enumerate() {
            assert!((fine[2 * j] / v - 1.0).abs() < 1e-12);
        }
        let p = params();
        assert_eq!(p.k, 1);
        assert_eq!(MaximalParams::new(1.2, 1.5, 8).unwrap().k, 1);
        assert_eq!(MaximalParams::new(1.2, 3.0, 8).unwrap().k, 2);
        assert!(p.check_theorem_range(1).is_ok());
        assert!(p.check_theorem_range(2).is_ok());
        assert!(p.check_theorem_range(5).is_err());
        assert!(MaximalParams::new(1.0, 2.0, 8).is_err());
    }

    #[test]
    fn sampler_volumes_and_partition() {
        let z = HPoint::new(&[0.3, -0.2], 0.5);
        let focus = KoranyiBall::centered(1, 0.05).unwrap();
        // With a focus ball far from z the level sets inside B(c, D/2) are curved in the chart
        // around c, so partial volumes are only as exact as the direction rule.
        for (f, tol) in [(None, 1e-10), (Some(&focus), 5e-3)] {
            let s = EtaSampler::new(&z, &grid(), &params(), f);
            let ones = vec![1.0; s.len()];
            let cum = s.cumulative(&ones);
            for (v, exact) in cum.iter().zip(&s.volumes) {
                assert!((v / exact - 1.0).abs() < tol, "{v} {exact}");
            }
            assert!((cum[cum.len() - 1] / s.volumes[cum.len() - 1] - 1.0).abs() < 1e-10);
            for node in &s.nodes {
                let rho = node.w.gauge();
                assert!(rho <= s.radii[node.level] * (1.0 + 1e-9));
                if node.level > 0 {
                    assert!(rho >= s.radii[node.level - 1] * (1.0 - 1e-9));
                }
            }
        }
    }

    #[test]
    fn local_mean_examples() {
        let spec = QuadSpec::default();
        let ball = KoranyiBall::new(HPoint::new(&[0.2, 0.1], -0.3), 0.7).unwrap();
        assert!((local_q_mean(&|_| 3.0, 1.5, &ball, &spec).unwrap() - 3.0).abs() < 1e-12);
        let centred = KoranyiBall::centered(1, 1.0).unwrap();
        let half = |w: &HPoint| if w.x[0] > 0.0 { 1.0 } else { 0.0 };
        for q in [1.1, 1.5, 1.9] {
            let v = local_q_mean(&half, q, &centred, &spec).unwrap();
            assert!((v - 0.5f64.powf(1.0 / q)).abs() < 1e-12, "{q} {v}");
        }
        let g = |w: &HPoint| w.t + 0.4 * w.x[0] * w.x[1];
        let vals: Vec<f64> = [1.1, 1.5, 1.9].iter().map(|q| local_q_mean(&g, *q, &ball, &spec).unwrap()).collect();
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        assert!(local_q_mean(&g, 1.0, &ball, &spec).is_err());
    }

    #[test]
    fn eta_examples() {
        let p = params();
        let g = grid();
        let z = HPoint::identity(1);
        let c = eta(&|_| 2.0, &p, &z, &g);
        assert!((c.value - 2.0 * g.r_min.powi(-2)).abs() < 1e-9 * c.value && c.at == g.r_min);
        assert_eq!(eta(&|_| 0.0, &p, &z, &g).value, 0.0);
        // g = t is homogeneous of degree 2: r^{-2}|t|_{q,B(e,r)} does not depend on r.
        let s = EtaSampler::new(&z, &g, &p, None);
        let vals: Vec<f64> = s.nodes.iter().map(|node| node.y.t).collect();
        let means = s.q_means(&vals, p.q);
        let scaled: Vec<f64> = s.radii.iter().zip(&means).map(|(r, m)| m / (r * r)).collect();
        for v in &scaled {
            assert!((v / scaled[0] - 1.0).abs() < 1e-3);
        }
        let f = |w: &HPoint| w.t * w.x[0] + (w.x[1] - 1.0).powi(2);
        let zz = HPoint::new(&[0.2, 0.0], 0.1);
        let a = eta(&f, &p, &zz, &g).value;
        let b = eta(&f, &p, &zz, &g.refined()).value;
        assert!(b >= a * (1.0 - 1e-9));
        let lambda = 3.5;
        let c = eta(&|w| lambda * f(w), &p, &zz, &g).value;
        assert!((c / (lambda * a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn big_n_examples() {
        let p = params();
        let g = RadialGrid::new(1.0 / 64.0, 64.0, 32).unwrap();
        let z = HPoint::new(&[0.3, 0.1], -0.2);
        let affine = |w: &HPoint| 1.5 - 0.7 * w.x[0] + 2.0 * w.x[1];
        let r = big_n_opt(&affine, &p, &z, &g, None).unwrap();
        assert!(r.value < 1e-8, "{r:?}");
        let t = |w: &HPoint| w.t;
        let e = HPoint::identity(1);
        let plain = eta(&t, &p, &e, &g).value;
        let opt = big_n_opt(&t, &p, &e, &g, None).unwrap();
        assert!(opt.value <= plain * (1.0 + 1e-12) && opt.value >= 0.95 * plain, "{} {plain}", opt.value);
        let f = |w: &HPoint| (w.x[0] - 0.2).powi(2) + w.t;
        let a = big_n_opt(&f, &p, &z, &g, None).unwrap();
        let b = big_n_opt(&|w| 4.0 * f(w), &p, &z, &g, None).unwrap();
        assert!((b.value / (4.0 * a.value) - 1.0).abs() < 1e-3, "{} {}", a.value, b.value);
        let rep = ClassRepresentative { base: f, origin: z.clone(), offset: a.offset.clone() };
        let s = EtaSampler::new(&z, &g, &p, None);
        let vals: Vec<f64> = s.nodes.iter().map(|node| rep.eval(&node.y)).collect();
        assert!((s.eta(&vals, p.q, p.gamma).value / a.value - 1.0).abs() < 1e-9);
        let raw: Vec<f64> = s.nodes.iter().map(|node| f(&node.y)).collect();
        let objective = OffsetObjective::new(&s, &raw, p.q, p.gamma);
        let c = [0.3, -1.1, 0.4];
        let fast = objective.eval(&c, &mut Vec::new());
        let slow = s.eta_with_offset(&raw, &c, p.q, p.gamma);
        assert!((fast.value / slow.value - 1.0).abs() < 1e-12 && s.radii[fast.at as usize] == slow.at);
        assert!(big_n_opt(&f, &MaximalParams::new(1.2, 3.0, 8).unwrap(), &z, &g, None).is_err());
    }

    #[test]
    fn potential_n_and_lower_semicontinuity() {
        let spec = QuadSpec { points_per_axis: 6, ..QuadSpec::default() };
        let a = atom();
        let fs = Arc::new(FundamentalSolution::new(1, &spec).unwrap());
        let pf = PotentialField::new(a, fs, &spec);
        let fp = FastPotential::new(pf, None).unwrap();
        let p = params();
        let g = grid();
        let mut prev = None;
        for k in 0..4 {
            let z = HPoint::from_gauge_polar(10.0 + 0.01 * k as f64, 0.3, &[0.6, 0.8]);
            let r = big_n_potential(&fp, &p, &z, &g).unwrap();
            assert!(r.opt.value <= r.taylor.value + 1e-6 * r.taylor.value);
            assert!(r.opt.value > 0.0);
            if let Some(v) = prev {
                let ratio: f64 = r.opt.value / v;
                assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
            }
            prev = Some(r.opt.value);
        }
        let zero = PotentialField::new(fp.field.atom.scaled(0.0), fp.field.fs.clone(), &spec);
        let affine = FastPotential::new(zero, Some(TableSize::default())).unwrap();
        let r = big_n_potential(&affine, &p, &HPoint::new(&[3.0, 0.0], 0.0), &g).unwrap();
        assert_eq!(r.taylor.value, 0.0);
    }

    #[test]
    fn hardy_littlewood_examples() {
        let p = params();
        let g = grid();
        let ball = KoranyiBall::centered(1, 1.0).unwrap();
        let e = HPoint::identity(1);
        let v = hardy_littlewood_indicator(&ball, &e, &g, &p);
        assert!((v.value - 1.0).abs() < 1e-10);
        let f = |w: &HPoint| (-w.gauge4()).exp();
        let z = HPoint::new(&[0.4, 0.0], 0.2);
        let a = hardy_littlewood(&f, &z, &g, &p, None).value;
        let b = hardy_littlewood(&|w| 2.5 * f(w), &z, &g, &p, None).value;
        assert!((b / (2.5 * a) - 1.0).abs() < 1e-12);
        // Far field: |B ∩ B(z,r)|/|B(z,r)| is maximised near r = ρ + δ, so Mχ_B ≈ (ρ/δ)^{−Q}.
        // Sample distances advance by whole grid steps so the discrete sup sits at the same
        // relative position for every sample.
        let r = g.radii();
        let step = r[1] / r[0];
        let mut pts = Vec::new();
        for k in 0..8 {
            let rho = 16.0 * step.powi(2 * k);
            let z = HPoint::from_gauge_polar(rho, 0.5, &[0.8, 0.6]);
            pts.push((rho.ln(), hardy_littlewood_indicator(&ball, &z, &g, &p).value.ln()));
        }
        let slope = (pts[7].1 - pts[0].1) / (pts[7].0 - pts[0].0);
        assert!((slope + 4.0).abs() < 0.1, "{slope}");
        // Oracle: B ⊂ B(z, D + δ) by the triangle inequality, so Mχ_B(z) ≥ (δ/(D + δ))^Q, while
        // B(z, r) misses B for r ≤ D − δ, so Mχ_B(z) ≤ |B|/|B(z, D − δ)| = (δ/(D − δ))^Q.
        for (d, psi) in [(3.19, 1.3), (4.76, -1.4), (1.5, 0.2), (40.0, 1.5)] {
            let z = HPoint::from_gauge_polar(d, psi, &[0.28, -0.96]);
            let v = hardy_littlewood_indicator(&ball, &z, &g, &p).value;
            assert!(v >= (1.0 / (d + 1.0)).powi(4) * (1.0 - 1e-9), "{d}: {v}");
            assert!(v <= (1.0 / (d - 1.0)).powi(4).min(1.0) * (1.0 + 1e-9), "{d}: {v}");
        }
    }

    #[test]
    fn truncated_singular_examples() {
        let spec = QuadSpec { points_per_axis: 6, ..QuadSpec::default() };
        let a = atom();
        let eps = RadialGrid::new(1e-2, 4.0, 32).unwrap();
        let kernels = singular_kernels(1);
        assert_eq!(kernels.len(), 4);
        let far = HPoint::new(&[6.0, 0.5], 1.0);
        let v = truncated_singular_max_all(&a, &kernels, &far, &eps, &spec);
        let v2 = truncated_singular_max_all(&a, &kernels, &far, &RadialGrid::new(1e-3, 4.0, 20).unwrap(), &spec);
        for (x, y) in v.iter().zip(&v2) {
            assert!((x.value - y.value).abs() <= 1e-10 * x.value.max(1e-300));
        }
        let zero = a.scaled(0.0);
        assert_eq!(truncated_singular_sum(&zero, &far, &eps, &spec), 0.0);
        let inside = HPoint::new(&[0.2, -0.1], 0.3);
        let coarse = truncated_singular_max_all(&a, &kernels, &inside, &eps, &spec);
        let fine = truncated_singular_max_all(&a, &kernels, &inside, &eps.refined(), &spec);
        for (x, y) in coarse.iter().zip(&fine) {
            assert!(x.value.is_finite() && x.value > 0.0);
            assert!((x.value - y.value).abs() <= 0.05 * y.value, "{} {}", x.value, y.value);
        }
        let single = truncated_singular_max(&a, &kernels[1].0, &inside, &eps, &spec).unwrap();
        assert!((single.value - coarse[1].value).abs() <= 1e-12 * single.value);
        assert!(truncated_singular_max(&a, &MultiIndex::unit(1, 0), &inside, &eps, &spec).is_err());
    }

    #[test]
    fn nontangential_examples() {
        let spec = QuadSpec::default();
        let ball = KoranyiBall::centered(1, 1.0).unwrap();
        let e = HPoint::identity(1);
        let u = TestFunction::centered(TestProfile::GaugeGaussian, 1);
        let tg = RadialGrid::new(1.0 / 32.0, 8.0, 24).unwrap();
        let v = nontangential_max(&Density::Indicator(&ball), &u, &e, &tg, 6, &spec).unwrap();
        assert!(v.value >= 0.5 && v.value <= 1.5, "{v:?}");
        let v2 = nontangential_max(&Density::Indicator(&ball), &u, &e, &tg.refined(), 6, &spec).unwrap();
        assert!((v2.value - v.value).abs() < 0.05 * v.value);
        assert_eq!(nontangential_max(&Density::Zero(1), &u, &e, &tg, 6, &spec).unwrap().value, 0.0);
        let a = atom();
        let z = HPoint::new(&[3.0, 1.0], 0.5);
        let m = nontangential_max(&Density::Atom(&a), &u, &z, &tg, 6, &spec).unwrap();
        assert!(m.value.is_finite() && m.value > 0.0);
        assert!(nontangential_max(&Density::Atom(&a), &TestFunction::centered(TestProfile::Zero, 1), &z, &tg, 6, &spec).is_err());
    }
}
