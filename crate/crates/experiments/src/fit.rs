//! Power-law fits by least squares in log–log coordinates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("sample {index} is not a positive finite pair: ({rho}, {value})")]
    NonPositive { index: usize, rho: f64, value: f64 },
    #[error("all abscissae coincide")]
    Degenerate,
}

/// `log value ≈ intercept + slope · log ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub samples: usize,
}

/// Minimum sample count accepted by [`fit_decay_slope`].
pub const MIN_SAMPLES: usize = 8;

/// Least-squares line through `(x, y)` pairs.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<SlopeFit, FitError> {
    let m = points.len();
    if m < 2 {
        return Err(FitError::TooFew { needed: 2, got: m });
    }
    let mf = m as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if m > 2 {
        let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (ssr / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit { slope, intercept, stderr, samples: m })
}

/// Fits `value ∝ ρ^slope` to positive samples `(ρ, value)`.
pub fn fit_decay_slope(samples: &[(f64, f64)]) -> Result<SlopeFit, FitError> {
    if samples.len() < MIN_SAMPLES {
        return Err(FitError::TooFew { needed: MIN_SAMPLES, got: samples.len() });
    }
    let mut logs = Vec::with_capacity(samples.len());
    for (index, &(rho, value)) in samples.iter().enumerate() {
        if !(rho > 0.0 && value > 0.0 && rho.is_finite() && value.is_finite()) {
            return Err(FitError::NonPositive { index, rho, value });
        }
        logs.push((rho.ln(), value.ln()));
    }
    linear_fit(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rhos() -> Vec<f64> {
        (0..12).map(|k| 8.0 * 2f64.powf(k as f64 * 5.0 / 11.0)).collect()
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = rhos().into_iter().map(|r| (r, 3.0 * r.powi(-4))).collect();
        let f = fit_decay_slope(&s).unwrap();
        assert!((f.slope + 4.0).abs() < 1e-10 && f.stderr < 1e-10);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn constant_samples() {
        let s: Vec<(f64, f64)> = rhos().into_iter().map(|r| (r, 2.5)).collect();
        assert!(fit_decay_slope(&s).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        // Oracle: multiplicative noise of size 1% moves log values by ≤ 0.01, which over a
        // log-range of 3.5 shifts the slope by well under 0.02.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s: Vec<(f64, f64)> = rhos().into_iter().map(|r| (r, r.powi(-4) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))).collect();
            let f = fit_decay_slope(&s).unwrap();
            assert!((f.slope + 4.0).abs() < 0.02, "{f:?}");
            assert!(f.stderr > 0.0 && f.stderr < 0.02);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let s: Vec<(f64, f64)> = rhos().into_iter().map(|r| (r, 1.0)).collect();
        assert_eq!(fit_decay_slope(&s[..7]), Err(FitError::TooFew { needed: 8, got: 7 }));
        let mut bad = s.clone();
        bad[3].1 = 0.0;
        assert!(matches!(fit_decay_slope(&bad), Err(FitError::NonPositive { index: 3, .. })));
        let same = vec![(2.0, 1.0); 9];
        assert_eq!(fit_decay_slope(&same), Err(FitError::Degenerate));
    }

    proptest! {
        #[test]
        fn recovers_any_exponent(a in -8.0f64..2.0, c in 1e-6f64..1e6) {
            let s: Vec<(f64, f64)> = rhos().into_iter().map(|r| (r, c * r.powf(a))).collect();
            let f = fit_decay_slope(&s).unwrap();
            prop_assert!((f.slope - a).abs() < 1e-9);
        }

        #[test]
        fn scaling_values_keeps_slope(a in -8.0f64..2.0, k in 1e-3f64..1e3) {
            let s: Vec<(f64, f64)> = rhos().into_iter().map(|r| (r, r.powf(a) * (1.0 + 0.1 * (r.ln()).sin()))).collect();
            let t: Vec<(f64, f64)> = s.iter().map(|(r, v)| (*r, k * v)).collect();
            let (f, g) = (fit_decay_slope(&s).unwrap(), fit_decay_slope(&t).unwrap());
            prop_assert!((f.slope - g.slope).abs() < 1e-9 && (f.stderr - g.stderr).abs() < 1e-9);
        }
    }
}
