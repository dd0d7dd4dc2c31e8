//! Interpolation table for an atom's potential near its support (`n = 1`).
//!
//! The potential is sampled on a tensor grid in gauge-polar coordinates `(s, ψ, θ)` around the
//! atom centre: Chebyshev nodes in `s` on each radial shell (shells meet at the atom's sphere,
//! where the profile is flat but not analytic), Chebyshev nodes in `ψ` and equispaced nodes in
//! the periodic angle `θ`. Evaluation is barycentric in every axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::PotentialError;
use crate::group::HPoint;
use crate::potential::{potential_eval, PotentialField};

/// Number of nodes per axis of every shell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSize {
    pub radial: usize,
    pub psi: usize,
    pub angle: usize,
}

impl Default for TableSize {
    fn default() -> Self {
        Self { radial: 8, psi: 10, angle: 16 }
    }
}

/// Shell boundaries in units of `δ`.
pub const SHELL_EDGES: [f64; 14] = [0.0, 0.6, 1.0, 1.4, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

/// Radial order of the doubling shells beyond `8δ`, where samples are cheap.
pub const FAR_RADIAL: usize = 14;

fn radial_order(shell: usize, size: &TableSize) -> usize {
    if SHELL_EDGES[shell] >= 8.0 { FAR_RADIAL.max(size.radial) } else { size.radial }
}

#[derive(Clone, Debug)]
pub struct PotentialTable {
    center: HPoint,
    delta: f64,
    size: TableSize,
    /// Chebyshev nodes and weights in `s` for the near and the far shells.
    cheb_s: [(Vec<f64>, Vec<f64>); 2],
    cheb_psi: Vec<f64>,
    cheb_psi_w: Vec<f64>,
    /// Start of each shell's block in `values`.
    offsets: Vec<usize>,
    /// `values[shell][is][ipsi][itheta]`, flattened.
    values: Vec<f64>,
}

fn chebyshev(m: usize) -> (Vec<f64>, Vec<f64>) {
    let nodes = (0..m).map(|j| ((2 * j + 1) as f64 * PI / (2 * m) as f64).cos()).collect();
    let weights = (0..m)
        .map(|j| {
            let s = ((2 * j + 1) as f64 * PI / (2 * m) as f64).sin();
            if j % 2 == 0 { s } else { -s }
        })
        .collect();
    (nodes, weights)
}

/// Barycentric Lagrange basis values at `x` for Chebyshev nodes of the first kind.
fn cheb_basis(x: f64, nodes: &[f64], weights: &[f64], out: &mut [f64]) {
    for (j, xj) in nodes.iter().enumerate() {
        if (x - xj).abs() < 1e-15 {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[j] = 1.0;
            return;
        }
    }
    let mut total = 0.0;
    for j in 0..nodes.len() {
        out[j] = weights[j] / (x - nodes[j]);
        total += out[j];
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Trigonometric interpolation basis at `theta` for `m` (even) equispaced nodes `2πk/m`.
fn trig_basis(theta: f64, out: &mut [f64]) {
    let m = out.len();
    let h = 2.0 * PI / m as f64;
    for k in 0..m {
        let d = 0.5 * (theta - k as f64 * h);
        let sd = d.sin();
        if sd.abs() < 1e-15 {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[k] = 1.0;
            return;
        }
    }
    let mut total = 0.0;
    for k in 0..m {
        let d = 0.5 * (theta - k as f64 * h);
        let c = d.cos() / d.sin();
        out[k] = if k % 2 == 0 { c } else { -c };
        total += out[k];
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Gauge-polar coordinates `(s, ψ, θ)` of a point of ℍ¹.
pub fn polar_coords(v: &HPoint) -> (f64, f64, f64) {
    let s = v.gauge();
    if s == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let r = v.x_norm2().sqrt();
    let cp = (r / s).min(1.0);
    let sp = v.t / (s * s * (1.0 + cp * cp).sqrt());
    let psi = sp.atan2(cp);
    let mut theta = v.x[1].atan2(v.x[0]);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    (s, psi, theta)
}

impl PotentialTable {
    /// Samples the potential on the grid. Only implemented for `n = 1`; returns `None` otherwise.
    pub fn build(pf: &PotentialField, size: TableSize) -> Result<Option<Self>, PotentialError> {
        if pf.n() != 1 {
            return Ok(None);
        }
        let m_theta = size.angle + size.angle % 2;
        let size = TableSize { angle: m_theta, ..size };
        let cheb_s = [chebyshev(size.radial), chebyshev(FAR_RADIAL.max(size.radial))];
        let (cheb_psi, cheb_psi_w) = chebyshev(size.psi);
        let delta = pf.atom.delta();
        let center = pf.atom.center().clone();
        let mut values = Vec::new();
        let mut offsets = Vec::new();
        for (shell, edge) in SHELL_EDGES.windows(2).enumerate() {
            offsets.push(values.len());
            let (lo, hi) = (edge[0] * delta, edge[1] * delta);
            let far = usize::from(SHELL_EDGES[shell] >= 8.0);
            for xs in &cheb_s[far].0 {
                let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xs;
                for xp in &cheb_psi {
                    let psi = 0.5 * PI * xp;
                    for k in 0..m_theta {
                        let th = 2.0 * PI * k as f64 / m_theta as f64;
                        let v = HPoint::from_gauge_polar(s, psi, &[th.cos(), th.sin()]);
                        values.push(potential_eval(pf, &center.compose(&v), &pf.spec)?);
                    }
                }
            }
        }
        Ok(Some(Self { center, delta, size, cheb_s, cheb_psi, cheb_psi_w, offsets, values }))
    }

    /// Outer radius of the tabulated region.
    pub fn radius(&self) -> f64 {
        SHELL_EDGES[SHELL_EDGES.len() - 1] * self.delta
    }

    pub fn size(&self) -> TableSize {
        self.size
    }

    /// Interpolated potential at `y`, or `None` outside the table.
    pub fn eval(&self, y: &HPoint) -> Option<f64> {
        let v = self.center.inverse().compose(y);
        let (s, psi, theta) = polar_coords(&v);
        let rel = s / self.delta;
        let shell = SHELL_EDGES.windows(2).position(|e| rel < e[1])?;
        let (lo, hi) = (SHELL_EDGES[shell], SHELL_EDGES[shell + 1]);
        let xs = (2.0 * rel - lo - hi) / (hi - lo);
        let TableSize { psi: mp, angle: mt, .. } = self.size;
        let radial = radial_order(shell, &self.size);
        let (nodes_s, weights_s) = &self.cheb_s[usize::from(SHELL_EDGES[shell] >= 8.0)];
        let mut bs = [0.0f64; 64];
        let mut bp = [0.0f64; 64];
        let mut bt = [0.0f64; 64];
        cheb_basis(xs, nodes_s, weights_s, &mut bs[..radial]);
        cheb_basis(psi / (0.5 * PI), &self.cheb_psi, &self.cheb_psi_w, &mut bp[..mp]);
        trig_basis(theta, &mut bt[..mt]);
        let block = &self.values[self.offsets[shell]..self.offsets[shell] + radial * mp * mt];
        let mut acc = 0.0;
        for (i, ws) in bs[..radial].iter().enumerate() {
            let mut inner = 0.0;
            for (j, wp) in bp[..mp].iter().enumerate() {
                let row = &block[(i * mp + j) * mt..(i * mp + j + 1) * mt];
                let dot: f64 = row.iter().zip(&bt[..mt]).map(|(a, b)| a * b).sum();
                inner += wp * dot;
            }
            acc += ws * inner;
        }
        Some(acc)
    }
}

/// Potential evaluator that uses a [`PotentialTable`] near the atom when one is available.
#[derive(Clone, Debug)]
pub struct FastPotential {
    pub field: PotentialField,
    pub table: Option<PotentialTable>,
}

impl FastPotential {
    pub fn new(field: PotentialField, size: Option<TableSize>) -> Result<Self, PotentialError> {
        let table = match size {
            Some(s) => PotentialTable::build(&field, s)?,
            None => None,
        };
        Ok(Self { field, table })
    }

    pub fn value(&self, y: &HPoint) -> Result<f64, PotentialError> {
        if let Some(v) = self.table.as_ref().and_then(|t| t.eval(y)) {
            return Ok(v);
        }
        potential_eval(&self.field, y, &self.field.spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{build_atom, AtomParams};
    use crate::group::KoranyiBall;
    use crate::kernel::MultiIndex;
    use crate::potential::FundamentalSolution;
    use crate::quadrature::QuadSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn basis_functions_reproduce_nodes_and_constants() {
        let (x, w) = chebyshev(7);
        let mut b = vec![0.0; 7];
        cheb_basis(0.3, &x, &w, &mut b);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let interp: f64 = b.iter().zip(&x).map(|(b, x)| b * x.powi(3)).sum();
        assert!((interp - 0.027).abs() < 1e-14);
        let mut t = vec![0.0; 8];
        trig_basis(1.1, &mut t);
        let interp: f64 = t.iter().enumerate().map(|(k, b)| b * (2.0 * (k as f64) * PI / 8.0).sin()).sum();
        assert!((interp - 1.1f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn polar_coords_round_trip() {
        let v = HPoint::from_gauge_polar(1.7, -0.4, &[(2.5f64).cos(), (2.5f64).sin()]);
        let (s, psi, th) = polar_coords(&v);
        assert!((s - 1.7).abs() < 1e-13 && (psi + 0.4).abs() < 1e-13 && (th - 2.5).abs() < 1e-13);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let spec = QuadSpec { points_per_axis: 6, ..QuadSpec::default() };
        let params = AtomParams::new(0.9, 2.0, 1, KoranyiBall::new(HPoint::new(&[0.2, -0.1], 0.3), 1.0).unwrap()).unwrap();
        let atom = build_atom(params, MultiIndex::unit(1, 2), &spec).unwrap();
        let fs = Arc::new(FundamentalSolution::new(1, &spec).unwrap());
        let pf = PotentialField::new(atom, fs, &spec);
        let fast = FastPotential::new(pf.clone(), Some(TableSize::default())).unwrap();
        let table = fast.table.as_ref().unwrap();
        let c = pf.atom.center().clone();
        let scale = table.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Interpolation is spectrally accurate away from the atom; next to its sphere the error is
        // that of the near-field quadrature itself.
        let (mut near, mut far) = (0.0f64, 0.0f64);
        for _ in 0..60 {
            let s = rng.random_range(0.0..7.9);
            let psi = rng.random_range(-1.5..1.5);
            let th: f64 = rng.random_range(0.0..6.28);
            let y = c.compose(&HPoint::from_gauge_polar(s, psi, &[th.cos(), th.sin()]));
            let a = table.eval(&y).unwrap();
            let b = potential_eval(&pf, &y, &spec).unwrap();
            let err = (a - b).abs() / scale;
            if s < 2.0 {
                near = near.max(err);
            } else {
                far = far.max(err);
            }
        }
        assert!(near < 5e-3 && far < 2e-5, "{near} {far}");
        // Beyond 8δ the potential is smooth on doubling shells; compare with the local magnitude.
        let mut rel = 0.0f64;
        for _ in 0..40 {
            let s: f64 = 8.0 * 2f64.powf(rng.random_range(0.0..6.9));
            let psi = rng.random_range(-1.5..1.5);
            let th: f64 = rng.random_range(0.0..6.28);
            let y = c.compose(&HPoint::from_gauge_polar(s, psi, &[th.cos(), th.sin()]));
            let exact = potential_eval(&pf, &y, &spec).unwrap();
            rel = rel.max((table.eval(&y).unwrap() - exact).abs() * s.powi(4) / scale);
        }
        assert!(rel < 3e-5, "{rel}");
        let far = c.compose(&HPoint::new(&[1100.0, 0.0], 0.0));
        assert!(table.eval(&far).is_none());
        assert_eq!(fast.value(&far).unwrap(), potential_eval(&pf, &far, &spec).unwrap());
    }
}
