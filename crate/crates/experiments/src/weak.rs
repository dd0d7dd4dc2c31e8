//! The weak identity `∫ b ℒu = ∫ a u` for test functions `u`.

use hh_core::potential::weak_residual;

use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, Table};
use crate::setup;
use crate::ExperimentError;

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("weak", config);
    let spec = config.quad_spec();
    let fs = setup::fundamental_solution(config)?;
    let atom = setup::atom(config, config.delta, &config.center_point()?, None)?;
    let pf = setup::field(config, &fs, atom);
    let tol = config.weak.tolerance;
    let mut table = Table::new("weak", &["test_function", "order", "lhs", "rhs", "residual", "scale", "relative"]);
    let base = config.weak.base_order;
    for u in config.test_functions()? {
        let name = u.name();
        let mut rel = Vec::new();
        for order in [base, 2 * base] {
            let r = weak_residual(&pf, &u, &spec.with_order(order))?;
            table.push(vec![name.clone().into(), order.into(), r.lhs.into(), r.rhs.into(), r.residual.into(), r.scale.into(), r.relative().into()]);
            rel.push(r.relative());
        }
        report.check_le(&format!("residual_{name}"), rel[0], tol, "|∫bℒu − ∫au| / (‖a‖₁ sup|u|)");
        report.check_le(&format!("residual_refined_{name}"), rel[1], tol, "at doubled order");
        report.check_le(
            &format!("halving_{name}"),
            rel[1],
            (0.5 * rel[0]).max(config.weak.noise_floor),
            "refined residual at most half the base one, unless below the noise floor",
        );
        report.constant(&format!("relative_residual_{name}"), rel[1], (rel[0] - rel[1]).abs(), "");
    }
    report.tables.push(table);
    Ok(report.finish())
}
