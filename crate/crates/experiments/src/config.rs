//! Experiment configuration: one TOML document with a section per experiment.

use serde::{Deserialize, Serialize};

use hh_core::atoms::AtomParams;
use hh_core::maximal::{MaximalParams, RadialGrid};
use hh_core::table::TableSize;
use hh_core::testfn::{TestFunction, TestProfile};
use hh_core::{HPoint, KoranyiBall, MultiIndex, QuadSpec};

use crate::ExperimentError;

/// Every parameter of every experiment. Lengths are in units of `δ` unless stated otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads for per-point sweeps; 0 uses every core.
    pub threads: usize,
    pub n: usize,
    pub q: f64,
    pub p: f64,
    pub p0: f64,
    pub big_n: u32,
    pub delta: f64,
    /// Atom centre `(x₁, …, x_{2n}, t)`; empty for the identity.
    pub center: Vec<f64>,
    pub beta: f64,
    /// Left translation applied to the atom in the recertification check.
    pub translation: Vec<f64>,
    /// Sample rays `[ψ, θ]` in gauge-polar coordinates around the atom centre, with
    /// `ω = cos θ e₁ + sin θ e_{n+1}`.
    pub rays: Vec<[f64; 2]>,
    pub quadrature: QuadratureConfig,
    pub maximal: MaximalConfig,
    pub decay: DecayConfig,
    pub domination: DominationConfig,
    pub weak: WeakConfig,
    pub comparability: ComparabilityConfig,
    pub triviality: TrivialityConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Legendre order for potentials, `T*_I`, `M_φ` and local means.
    pub points_per_axis: usize,
    pub relative_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximalConfig {
    pub gamma: f64,
    pub samples_per_ball: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_count: usize,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub aperture_samples: usize,
    /// Interpolation table of the potential (`n = 1` only).
    pub use_table: bool,
    pub table_radial: usize,
    pub table_psi: usize,
    pub table_angle: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    pub points_per_ray: usize,
    pub window: f64,
    /// Second run with `δ` multiplied by this factor; 0 disables it.
    pub dilation_factor: f64,
    pub dilation_window: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DominationConfig {
    /// Random points inside `4β²B`.
    pub near_points: usize,
    /// Random points with `4β² ≤ ρ < far_rho_min`.
    pub mid_points: usize,
    pub far_rho_min: f64,
    pub far_rho_max: f64,
    pub far_points_per_ray: usize,
    /// Minimum total number of sample points.
    pub min_points: usize,
    pub slope_window: f64,
    pub c_band: [f64; 2],
    /// Points used for the `M_φ` domination, taken alternately from the near and far strata.
    pub lg_points: usize,
    pub lg_profile: TestProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionConfig {
    pub profile: TestProfile,
    /// Centre `(x, t)` in absolute coordinates; empty for the identity.
    #[serde(default)]
    pub center: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakConfig {
    pub test_functions: Vec<TestFunctionConfig>,
    pub base_order: usize,
    pub tolerance: f64,
    /// Relative residual below which the halving check is waived.
    pub noise_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    /// Radial pieces `[e_k, e_{k+1}]` (units of `δ`) around the atom centre.
    pub shell_edges: Vec<f64>,
    pub radial_nodes: usize,
    pub sphere_psi: usize,
    pub sphere_angle: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparabilityConfig {
    pub deltas: Vec<f64>,
    /// Extra member at `δ = delta` with this centre; empty to skip.
    pub translated_center: Vec<f64>,
    /// Extra member at `δ = delta` whose polynomial targets this multi-index; empty to skip.
    pub extra_target: Vec<u32>,
    pub integration: IntegrationConfig,
    pub max_spread: f64,
    pub scaling_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrivialityConfig {
    pub p_values: Vec<f64>,
    /// Partial-integral radii `R` (units of `δ`); must be a subset of the shell edges.
    pub radii: Vec<f64>,
    pub integration: IntegrationConfig,
    /// Fraction of the predicted growth exponent required below the threshold.
    pub min_fraction: f64,
    /// Half-width of the band around 0 that counts as borderline.
    pub borderline_band: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            threads: 0,
            n: 1,
            q: 1.2,
            p: 0.9,
            p0: 2.0,
            big_n: 1,
            delta: 1.0,
            center: Vec::new(),
            beta: 1.0,
            translation: vec![1.5, -0.5, 2.0],
            rays: vec![[0.35, 0.3], [1.2, 0.9], [0.75, 0.785]],
            quadrature: QuadratureConfig::default(),
            maximal: MaximalConfig::default(),
            decay: DecayConfig::default(),
            domination: DominationConfig::default(),
            weak: WeakConfig::default(),
            comparability: ComparabilityConfig::default(),
            triviality: TrivialityConfig::default(),
        }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { points_per_axis: 6, relative_tolerance: 1e-10 }
    }
}

impl Default for MaximalConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            samples_per_ball: 8,
            grid_min: 1.0 / 64.0,
            grid_max: 512.0,
            grid_count: 64,
            eps_min: 1e-2,
            eps_max: 4.0,
            eps_count: 32,
            t_min: 1.0 / 64.0,
            t_max: 512.0,
            t_count: 64,
            aperture_samples: 6,
            use_table: true,
            table_radial: 8,
            table_psi: 10,
            table_angle: 16,
        }
    }
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { rho_min: 8.0, rho_max: 256.0, points_per_ray: 12, window: 0.15, dilation_factor: 2.0, dilation_window: 0.05 }
    }
}

impl Default for DominationConfig {
    fn default() -> Self {
        Self {
            near_points: 24,
            mid_points: 6,
            far_rho_min: 16.0,
            far_rho_max: 320.0,
            far_points_per_ray: 7,
            min_points: 50,
            slope_window: 0.2,
            c_band: [1e-2, 1e2],
            lg_points: 30,
            lg_profile: TestProfile::GaugeGaussian,
        }
    }
}

impl Default for WeakConfig {
    fn default() -> Self {
        Self {
            test_functions: vec![
                TestFunctionConfig { profile: TestProfile::Gaussian, center: Vec::new() },
                TestFunctionConfig { profile: TestProfile::GaugeGaussian, center: Vec::new() },
                TestFunctionConfig { profile: TestProfile::Gaussian, center: vec![0.5, -0.3, 0.4] },
            ],
            base_order: 6,
            tolerance: 2e-2,
            noise_floor: 1e-6,
        }
    }
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self { shell_edges: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0], radial_nodes: 2, sphere_psi: 2, sphere_angle: 2 }
    }
}

impl Default for ComparabilityConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.5, 1.0, 2.0],
            translated_center: vec![1.5, -0.5, 2.0],
            extra_target: vec![2, 0, 0],
            integration: IntegrationConfig::default(),
            max_spread: 10.0,
            scaling_tolerance: 0.05,
        }
    }
}

impl Default for TrivialityConfig {
    fn default() -> Self {
        Self {
            p_values: vec![0.6, 0.75, 0.9],
            radii: vec![8.0, 16.0, 32.0, 64.0],
            integration: IntegrationConfig::default(),
            min_fraction: 0.5,
            borderline_band: 0.3,
        }
    }
}

impl ExperimentConfig {
    /// A reduced configuration that runs every experiment in about a minute; used for smoke and
    /// determinism runs, not for the quantitative criteria.
    pub fn quick() -> Self {
        let mut c = Self::default();
        c.maximal.samples_per_ball = 4;
        c.maximal.grid_count = 16;
        c.maximal.eps_count = 16;
        c.maximal.t_count = 16;
        c.maximal.aperture_samples = 2;
        c.decay.points_per_ray = 8;
        c.decay.dilation_factor = 0.0;
        c.domination.near_points = 4;
        c.domination.mid_points = 1;
        c.domination.far_points_per_ray = 3;
        c.domination.min_points = 1;
        c.domination.lg_points = 4;
        c.weak.test_functions.truncate(1);
        c.weak.base_order = 4;
        c.comparability.deltas = vec![1.0];
        c.comparability.translated_center.clear();
        c.comparability.extra_target.clear();
        for integ in [&mut c.comparability.integration, &mut c.triviality.integration] {
            integ.radial_nodes = 1;
            integ.sphere_psi = 1;
            integ.sphere_angle = 1;
        }
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let c: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Sets the dotted key `key` (e.g. `maximal.grid_count`) to `value`, parsed as a TOML value
    /// (bare words are taken as strings). Only existing keys can be set; the result is not
    /// validated, so several related keys can be changed before calling [`Self::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let mut root = toml::Value::try_from(&*self).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let mut slot = &mut root;
        for part in key.split('.') {
            slot = slot
                .as_table_mut()
                .and_then(|t| t.get_mut(part))
                .ok_or_else(|| ExperimentError::Config(format!("unknown configuration key `{key}`")))?;
        }
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        *slot = parsed;
        let updated: Self = root.try_into().map_err(|e: toml::de::Error| ExperimentError::Config(format!("`{key}`: {e}")))?;
        *self = updated;
        Ok(())
    }

    /// The same configuration on `ℍⁿ`. Point-valued settings whose length no longer fits are
    /// dropped: the center and translation fall back to the origin, and mismatched test functions,
    /// translated center and extra target are removed.
    pub fn with_dimension(mut self, n: usize) -> Self {
        let fits = |v: &Vec<f64>| v.is_empty() || v.len() == 2 * n + 1;
        self.n = n;
        for v in [&mut self.center, &mut self.translation, &mut self.comparability.translated_center] {
            if !fits(v) {
                v.clear();
            }
        }
        self.weak.test_functions.retain(|tf| fits(&tf.center));
        if !self.comparability.extra_target.is_empty() && self.comparability.extra_target.len() != 2 * n + 1 {
            self.comparability.extra_target.clear();
        }
        self
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !self.center.is_empty() && self.center.len() != 2 * self.n + 1 {
            return bad(format!("center needs {} coordinates", 2 * self.n + 1));
        }
        if !(self.delta > 0.0 && self.beta >= 1.0) {
            return bad("delta must be positive and beta at least 1".into());
        }
        if self.rays.is_empty() {
            return bad("at least one sample ray is needed".into());
        }
        self.maximal_params()?;
        self.atom_params(self.delta, &self.center_point()?)?;
        self.radial_grid(self.delta)?;
        point_from(&self.translation, self.n)?;
        for tf in &self.weak.test_functions {
            point_from(&tf.center, self.n)?;
        }
        if !self.comparability.translated_center.is_empty() {
            point_from(&self.comparability.translated_center, self.n)?;
        }
        if !self.comparability.extra_target.is_empty() {
            self.extra_target()?;
        }
        for integ in [&self.comparability.integration, &self.triviality.integration] {
            let e = &integ.shell_edges;
            if e.len() < 2 || e[0] != 0.0 || e.windows(2).any(|w| w[1] <= w[0]) || integ.radial_nodes == 0 {
                return bad("shell_edges must start at 0 and increase; radial_nodes ≥ 1".into());
            }
        }
        if self.triviality.radii.iter().any(|r| !self.triviality.integration.shell_edges.contains(r)) {
            return bad("triviality radii must be shell edges".into());
        }
        Ok(())
    }

    /// The homogeneous dimension `Q = 2n + 2`.
    pub fn hom_dim(&self) -> f64 {
        (2 * self.n + 2) as f64
    }

    pub fn center_point(&self) -> Result<HPoint, ExperimentError> {
        point_from(&self.center, self.n)
    }

    pub fn atom_params(&self, delta: f64, center: &HPoint) -> Result<AtomParams, ExperimentError> {
        let ball = KoranyiBall::new(center.clone(), delta).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(AtomParams::new(self.p, self.p0, self.big_n, ball)?)
    }

    pub fn maximal_params(&self) -> Result<MaximalParams, ExperimentError> {
        Ok(MaximalParams::new(self.q, self.maximal.gamma, self.maximal.samples_per_ball)?)
    }

    pub fn radial_grid(&self, delta: f64) -> Result<RadialGrid, ExperimentError> {
        let m = &self.maximal;
        Ok(RadialGrid::new(m.grid_min * delta, m.grid_max * delta, m.grid_count)?)
    }

    pub fn eps_grid(&self, delta: f64) -> Result<RadialGrid, ExperimentError> {
        let m = &self.maximal;
        Ok(RadialGrid::new(m.eps_min * delta, m.eps_max * delta, m.eps_count)?)
    }

    pub fn t_grid(&self, delta: f64) -> Result<RadialGrid, ExperimentError> {
        let m = &self.maximal;
        Ok(RadialGrid::new(m.t_min * delta, m.t_max * delta, m.t_count)?)
    }

    pub fn table_size(&self) -> Option<TableSize> {
        let m = &self.maximal;
        m.use_table.then_some(TableSize { radial: m.table_radial, psi: m.table_psi, angle: m.table_angle })
    }

    pub fn quad_spec(&self) -> QuadSpec {
        QuadSpec {
            points_per_axis: self.quadrature.points_per_axis,
            relative_tolerance: self.quadrature.relative_tolerance,
            ..QuadSpec::default()
        }
    }

    pub fn test_functions(&self) -> Result<Vec<TestFunction>, ExperimentError> {
        self.weak.test_functions.iter().map(|tf| Ok(TestFunction::new(tf.profile, point_from(&tf.center, self.n)?))).collect()
    }

    pub fn extra_target(&self) -> Result<MultiIndex, ExperimentError> {
        MultiIndex::new(self.comparability.extra_target.clone()).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Unit direction of ray `[ψ, θ]` at gauge 1.
    pub fn ray_direction(&self, ray: [f64; 2]) -> HPoint {
        let mut omega = vec![0.0; 2 * self.n];
        omega[0] = ray[1].cos();
        omega[self.n] = ray[1].sin();
        HPoint::from_gauge_polar(1.0, ray[0], &omega)
    }
}

/// `(x, t)` from a flat coordinate list; empty gives the identity.
pub fn point_from(coords: &[f64], n: usize) -> Result<HPoint, ExperimentError> {
    if coords.is_empty() {
        return Ok(HPoint::identity(n));
    }
    if coords.len() != 2 * n + 1 {
        return Err(ExperimentError::Config(format!("a point of ℍ^{n} needs {} coordinates, got {}", 2 * n + 1, coords.len())));
    }
    HPoint::from_parts(coords[..2 * n].iter().copied(), coords[2 * n]).map_err(|e| ExperimentError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let q = ExperimentConfig::quick();
        assert_eq!(ExperimentConfig::from_toml(&q.to_toml()).unwrap(), q);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c = ExperimentConfig::from_toml("q = 1.3\n[decay]\npoints_per_ray = 9\n").unwrap();
        assert_eq!(c.q, 1.3);
        assert_eq!(c.decay.points_per_ray, 9);
        assert_eq!(c.decay.window, DecayConfig::default().window);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("q = 0.9").is_err());
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::default();
        c.set("maximal.grid_count", "32").unwrap();
        assert_eq!(c.maximal.grid_count, 32);
        c.set("domination.lg_profile", "gaussian").unwrap();
        assert_eq!(c.domination.lg_profile, TestProfile::Gaussian);
        c.set("center", "[0.5, 0.0, 1.0]").unwrap();
        assert_eq!(c.center_point().unwrap(), HPoint::new(&[0.5, 0.0], 1.0));
        assert!(c.set("maximal.nope", "1").is_err());
        assert!(c.set("n", "\"one\"").is_err());
        assert_eq!(c.maximal.grid_count, 32);
        c.set("maximal.grid_count", "3").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn changing_dimension() {
        let c = ExperimentConfig::default();
        assert!(c.clone().with_dimension(2).validate().is_ok());
        let mut c = c.with_dimension(2);
        assert!(c.center.is_empty() && c.translation.is_empty() && c.comparability.extra_target.is_empty());
        c.set("n", "1").unwrap();
        assert!(c.validate().is_ok());
        c.set("center", "[0.5, 0.0, 1.0, 0.0, 0.0]").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn ray_directions_have_unit_gauge() {
        let c = ExperimentConfig::default();
        for r in &c.rays {
            assert!((c.ray_direction(*r).gauge() - 1.0).abs() < 1e-14);
        }
    }
}
