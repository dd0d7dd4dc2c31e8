//! Truncated `L^p` integrals of `N_{q,2}(b̃; ·)` over a family of atoms, against the uniform
//! atomic bound `‖a‖_{H^p} ≲ 1`.

use rayon::prelude::*;

use hh_core::maximal::big_n_potential;
use hh_core::table::FastPotential;
use hh_core::{HPoint, MultiIndex};

use crate::config::{point_from, ExperimentConfig, IntegrationConfig};
use crate::report::{Cell, ExperimentReport, Table};
use crate::setup::{self, ShellNode};
use crate::ExperimentError;

/// `N_{q,2}(b̃; y)` (both estimates) at a shell node.
#[derive(Clone, Debug)]
pub struct NodeValue {
    pub node: ShellNode,
    pub n_opt: f64,
    pub n_taylor: f64,
}

/// Evaluates `N` at every shell node around the atom of `fast`.
pub fn n_on_shells(config: &ExperimentConfig, fast: &FastPotential, integ: &IntegrationConfig) -> Result<Vec<NodeValue>, ExperimentError> {
    let atom = &fast.field.atom;
    let delta = atom.delta();
    let params = config.maximal_params()?;
    let grid = config.radial_grid(delta)?;
    let nodes = setup::shell_nodes(config.n, atom.center(), delta, integ);
    nodes
        .into_par_iter()
        .map(|node| {
            let nn = big_n_potential(fast, &params, &node.y, &grid)?;
            Ok(NodeValue { node, n_opt: nn.opt.value, n_taylor: nn.taylor.value })
        })
        .collect()
}

/// `Σ w N^p` over nodes in shells below `upto` (exclusive shell index).
pub fn partial_integral(values: &[NodeValue], p: f64, upto: usize) -> f64 {
    values.iter().filter(|v| v.node.shell < upto).map(|v| v.node.weight * v.n_opt.powf(p)).sum()
}

struct Member {
    label: String,
    delta: f64,
    center: HPoint,
    target: Option<MultiIndex>,
}

fn members(config: &ExperimentConfig) -> Result<Vec<Member>, ExperimentError> {
    let c = &config.comparability;
    let base = config.center_point()?;
    let mut out: Vec<Member> =
        c.deltas.iter().map(|d| Member { label: format!("delta_{d}"), delta: d * config.delta, center: base.clone(), target: None }).collect();
    if !c.translated_center.is_empty() {
        out.push(Member { label: "translated".into(), delta: config.delta, center: point_from(&c.translated_center, config.n)?, target: None });
    }
    if !c.extra_target.is_empty() {
        out.push(Member { label: "extra_target".into(), delta: config.delta, center: base, target: Some(config.extra_target()?) });
    }
    Ok(out)
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("comparability", config);
    let fs = setup::fundamental_solution(config)?;
    let integ = &config.comparability.integration;
    let p = config.p;
    let last = integ.shell_edges.len() - 1;
    let cols = setup::columns(config.n, &["member", "shell"], &["s", "weight", "n_opt", "n_taylor"]);
    let mut nodes_table = Table::new("nodes", &cols.iter().map(String::as_str).collect::<Vec<_>>());
    let mut summary = Table::new("members", &["member", "delta", "truncation_radius", "integral", "proxy", "taylor_proxy", "outer_shell_fraction"]);
    let mut proxies = Vec::new();
    let mut reference = None;
    for m in members(config)? {
        let atom = setup::atom(config, m.delta, &m.center, m.target.clone())?;
        let fast = setup::fast(config, setup::field(config, &fs, atom))?;
        let values = n_on_shells(config, &fast, integ)?;
        let integral = partial_integral(&values, p, last);
        let taylor: f64 = values.iter().map(|v| v.node.weight * v.n_taylor.powf(p)).sum();
        let outer = integral - partial_integral(&values, p, last - 1);
        let proxy = integral.powf(1.0 / p);
        for v in &values {
            let mut row: Vec<Cell> = vec![m.label.clone().into(), v.node.shell.into()];
            row.extend(setup::coord_cells(&v.node.y));
            row.extend([v.node.s.into(), v.node.weight.into(), v.n_opt.into(), v.n_taylor.into()]);
            nodes_table.push(row);
        }
        let radius = integ.shell_edges[last] * m.delta;
        summary.push(vec![
            m.label.clone().into(),
            m.delta.into(),
            radius.into(),
            integral.into(),
            proxy.into(),
            taylor.powf(1.0 / p).into(),
            (outer / integral).into(),
        ]);
        report.constant(&format!("proxy_{}", m.label), proxy, proxy * (outer / integral) / p, "truncated ‖N(b̃)‖_p; error from the outermost shell share");
        let dilation = m.label.starts_with("delta_");
        if dilation && m.delta == config.delta {
            reference = Some(proxy);
        }
        proxies.push((m.label, dilation, proxy));
    }
    report.tables.push(summary);
    report.tables.push(nodes_table);
    let finite = proxies.iter().all(|(_, _, v)| v.is_finite() && *v > 0.0);
    report.check("proxies_positive_finite", finite, "");
    let (lo, hi) = proxies.iter().fold((f64::INFINITY, 0.0f64), |(l, h), (_, _, v)| (l.min(*v), h.max(*v)));
    report.constant("c2_over_c1", hi / lo, 0.0, "spread max/min of the proxy over the family; H^p proxy of each atom is 1");
    report.check_le("proxy_spread", hi / lo, config.comparability.max_spread, "");
    if let Some(r) = reference {
        for (label, _, v) in proxies.iter().filter(|m| m.1) {
            report.check_le(&format!("scaling_{label}"), (v / r - 1.0).abs(), config.comparability.scaling_tolerance, "proxy invariant under dilation");
        }
    }
    zero_atom_check(config, &fs, &mut report)?;
    Ok(report.finish())
}

/// The zero multiple of an atom has a vanishing proxy.
fn zero_atom_check(config: &ExperimentConfig, fs: &std::sync::Arc<hh_core::potential::FundamentalSolution>, report: &mut ExperimentReport) -> Result<(), ExperimentError> {
    let atom = setup::atom(config, config.delta, &config.center_point()?, None)?.scaled(0.0);
    let fast = FastPotential::new(setup::field(config, fs, atom), None)?;
    let integ = IntegrationConfig { shell_edges: vec![0.0, 1.0, 4.0], radial_nodes: 1, sphere_psi: 1, sphere_angle: 1 };
    let values = n_on_shells(config, &fast, &integ)?;
    let total = partial_integral(&values, config.p, integ.shell_edges.len() - 1);
    report.check_le("zero_atom_proxy", total, 0.0, "0·a gives N ≡ 0");
    Ok(())
}
