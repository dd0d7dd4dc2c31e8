//! Shared construction of atoms, potentials, sample points and integration nodes.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use hh_core::atoms::{build_atom, default_target, Atom};
use hh_core::polar::SphereRule;
use hh_core::potential::{FundamentalSolution, PotentialField};
use hh_core::quadrature::unit_ball_volume;
use hh_core::table::FastPotential;
use hh_core::{gauss, HPoint, MultiIndex};

use crate::config::{ExperimentConfig, IntegrationConfig};
use crate::report::Cell;
use crate::ExperimentError;

pub fn thread_pool(config: &ExperimentConfig) -> Result<rayon::ThreadPool, ExperimentError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(config.threads).build()?)
}

/// Seeded generator for the stream `stream` of the experiment seed.
pub fn rng(config: &ExperimentConfig, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut r = ChaCha8Rng::seed_from_u64(config.seed);
    r.set_stream(stream);
    r
}

pub fn fundamental_solution(config: &ExperimentConfig) -> Result<Arc<FundamentalSolution>, ExperimentError> {
    Ok(Arc::new(FundamentalSolution::new(config.n, &config.quad_spec())?))
}

pub fn atom(config: &ExperimentConfig, delta: f64, center: &HPoint, target: Option<MultiIndex>) -> Result<Atom, ExperimentError> {
    let params = config.atom_params(delta, center)?;
    let target = target.unwrap_or_else(|| default_target(config.n, config.big_n));
    Ok(build_atom(params, target, &config.quad_spec())?)
}

pub fn field(config: &ExperimentConfig, fs: &Arc<FundamentalSolution>, atom: Atom) -> PotentialField {
    PotentialField::new(atom, fs.clone(), &config.quad_spec())
}

pub fn fast(config: &ExperimentConfig, field: PotentialField) -> Result<FastPotential, ExperimentError> {
    Ok(FastPotential::new(field, config.table_size())?)
}

/// `c·(direction of ray)` at gauge distance `rho` from `c`.
pub fn ray_point(config: &ExperimentConfig, center: &HPoint, ray: [f64; 2], rho: f64) -> HPoint {
    center.compose(&config.ray_direction(ray).scaled(rho))
}

/// `count` points spaced geometrically on `[a, b]`.
pub fn geometric(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count).map(|k| a * (b / a).powf(k as f64 / (count - 1) as f64)).collect()
}

/// A point `c·(s σ)` with `σ` uniform in `(ψ, ω)` and `s` drawn by `radius`.
pub fn random_point(rng: &mut ChaCha8Rng, n: usize, center: &HPoint, s: f64) -> HPoint {
    let psi = rng.random_range(-1.5..1.5);
    let mut omega: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = omega.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
    omega.iter_mut().for_each(|v| *v /= norm);
    center.compose(&HPoint::from_gauge_polar(s, psi, &omega))
}

/// Column names `x1, …, x2n, t`.
pub fn coord_columns(n: usize) -> Vec<String> {
    (1..=2 * n).map(|i| format!("x{i}")).chain(std::iter::once("t".to_string())).collect()
}

pub fn coord_cells(z: &HPoint) -> Vec<Cell> {
    z.x.iter().map(|v| Cell::Num(*v)).chain(std::iter::once(Cell::Num(z.t))).collect()
}

/// Column list: `leading`, the coordinates, then `trailing`.
pub fn columns(n: usize, leading: &[&str], trailing: &[&str]) -> Vec<String> {
    leading.iter().map(|s| s.to_string()).chain(coord_columns(n)).chain(trailing.iter().map(|s| s.to_string())).collect()
}

/// Integration node of a gauge-polar shell rule around a centre.
#[derive(Clone, Debug)]
pub struct ShellNode {
    pub y: HPoint,
    /// Distance to the centre.
    pub s: f64,
    /// Index of the shell `[e_k, e_{k+1}]` containing `s`.
    pub shell: usize,
    pub weight: f64,
}

/// Gauss nodes in `s` on each shell times a sphere rule normalised to `Q·|B(e,1)|`, so that
/// `Σ w f(y) ≈ ∫_{ρ(c⁻¹y) < e_last·δ} f`.
pub fn shell_nodes(n: usize, center: &HPoint, delta: f64, integ: &IntegrationConfig) -> Vec<ShellNode> {
    let sphere = SphereRule::new(n, integ.sphere_psi, integ.sphere_angle);
    let q = 2 * n as i32 + 2;
    let factor = q as f64 * unit_ball_volume(n) / sphere.total();
    let rule = gauss::rule(integ.radial_nodes);
    let mut out = Vec::new();
    for (shell, e) in integ.shell_edges.windows(2).enumerate() {
        for (s, ws) in rule.mapped(e[0] * delta, e[1] * delta) {
            for (sigma, wd) in sphere.dirs.iter().zip(&sphere.weights) {
                out.push(ShellNode { y: center.compose(&sigma.scaled(s)), s, shell, weight: ws * wd * factor * s.powi(q - 1) });
            }
        }
    }
    out
}
