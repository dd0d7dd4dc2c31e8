//! Growth of the partial integrals `S(R) = ∫_{ρ < R} N_{q,2}(b̃)^p` below and above the critical
//! exponent `p* = Q/(2 + Q/q)`.

use crate::comparability::{n_on_shells, partial_integral};
use crate::config::ExperimentConfig;
use crate::fit::linear_fit;
use crate::report::{Cell, ExperimentReport, Table};
use crate::setup;
use crate::ExperimentError;

/// `p* = Q/(2 + Q/q)`.
pub fn critical_p(config: &ExperimentConfig) -> f64 {
    let q = config.hom_dim();
    q / (2.0 + q / config.q)
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("triviality", config);
    let t = &config.triviality;
    let fs = setup::fundamental_solution(config)?;
    let atom = setup::atom(config, config.delta, &config.center_point()?, None)?;
    let fast = setup::fast(config, setup::field(config, &fs, atom))?;
    let values = n_on_shells(config, &fast, &t.integration)?;
    let edges = &t.integration.shell_edges;
    let upto: Vec<usize> = t.radii.iter().map(|r| edges.iter().position(|e| e == r).expect("validated")).collect();
    let p_star = critical_p(config);
    let q_hom = config.hom_dim();
    let decay = 2.0 + q_hom / config.q;
    report.constant("p_star", p_star, 0.0, "Q/(2+Q/q)");

    let mut table = Table::new("partial_integrals", &["p", "R", "S", "increment"]);
    let mut growth = Table::new("growth", &["p", "predicted", "measured", "stderr", "regime"]);
    for &p in &t.p_values {
        let s: Vec<f64> = upto.iter().map(|&k| partial_integral(&values, p, k)).collect();
        let increments: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        for (k, (r, v)) in t.radii.iter().zip(&s).enumerate() {
            let inc = if k == 0 { f64::NAN } else { increments[k - 1] };
            table.push(vec![p.into(), (r * config.delta).into(), (*v).into(), inc.into()]);
        }
        // Over a doubling shell the increment scales like R^{Q − (2+Q/q)p}.
        let pts: Vec<(f64, f64)> = t.radii[1..].iter().zip(&increments).filter(|(_, i)| **i > 0.0).map(|(r, i)| (r.ln(), i.ln())).collect();
        let fit = linear_fit(&pts).ok();
        let (measured, stderr) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.stderr));
        let predicted = q_hom - decay * p;
        let regime = if (p - p_star).abs() < 1e-9 {
            "borderline"
        } else if p < p_star {
            "divergent"
        } else {
            "convergent"
        };
        growth.push(vec![p.into(), predicted.into(), measured.into(), stderr.into(), Cell::from(regime)]);
        report.constant(&format!("growth_exponent_p{p}"), measured, stderr, &format!("predicted {predicted:.4}"));
        match regime {
            "divergent" => {
                report.check_ge(&format!("growth_p{p}"), measured, t.min_fraction * predicted, "fraction of the predicted exponent");
            }
            "borderline" => {
                report.check_le(&format!("borderline_p{p}"), measured.abs(), t.borderline_band, "logarithmic growth: exponent near 0");
            }
            _ => {
                let (first, last) = (increments[0], increments[increments.len() - 1]);
                report.check_le(&format!("increments_decrease_p{p}"), last, first, "S(R_max) − S(R_max/2) below S(R_1) − S(R_0)");
            }
        }
    }
    report.tables.push(table);
    report.tables.push(growth);
    Ok(report.finish())
}
