//! Derivative-free minimisation (Nelder–Mead simplex search).

/// Stopping rules for [`nelder_mead`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when `max f − min f` over the simplex is below `f_tol · (|min f| + f_floor)`.
    pub f_tol: f64,
    pub f_floor: f64,
    /// Number of restarts from the best vertex with a fresh simplex.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 600, f_tol: 1e-9, f_floor: 1e-300, restarts: 2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimises `f` from `x0` with initial simplex edges `steps` (one per coordinate).
///
/// Non-finite objective values are treated as `+∞`.
pub fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    if dim == 0 {
        return Minimum { x: best_x, f: best_f, evals, converged: true };
    }
    let mut converged = false;
    let mut scale = 1.0;
    for _ in 0..=opts.restarts {
        let mut simplex: Vec<Vec<f64>> = vec![best_x.clone()];
        let mut values = vec![best_f];
        for i in 0..dim {
            let mut x = best_x.clone();
            x[i] += scale * if steps[i] != 0.0 { steps[i] } else { 1e-3 };
            values.push(eval(&x, &mut evals));
            simplex.push(x);
        }
        converged = false;
        while evals < opts.max_evals {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|a, b| values[*a].total_cmp(&values[*b]).then(a.cmp(b)));
            simplex = order.iter().map(|i| simplex[*i].clone()).collect();
            values = order.iter().map(|i| values[*i]).collect();
            let (lo, hi) = (values[0], values[dim]);
            if hi - lo <= opts.f_tol * (lo.abs() + opts.f_floor) {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; dim];
            for x in &simplex[..dim] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / dim as f64;
                }
            }
            let point = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[dim]).map(|(c, w)| c + t * (w - c)).collect() };
            let xr = point(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < values[0] {
                let xe = point(-2.0);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[dim] = xe;
                    values[dim] = fe;
                } else {
                    simplex[dim] = xr;
                    values[dim] = fr;
                }
                continue;
            }
            if fr < values[dim - 1] {
                simplex[dim] = xr;
                values[dim] = fr;
                continue;
            }
            let (xc, fc) = if fr < values[dim] {
                let x = point(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = point(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < values[dim].min(fr) {
                simplex[dim] = xc;
                values[dim] = fc;
                continue;
            }
            for k in 1..=dim {
                let x: Vec<f64> = simplex[0].iter().zip(&simplex[k]).map(|(a, b)| a + 0.5 * (b - a)).collect();
                values[k] = eval(&x, &mut evals);
                simplex[k] = x;
            }
        }
        let (i, v) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, v)| (i, *v)).unwrap();
        if v <= best_f {
            best_f = v;
            best_x = simplex[i].clone();
        }
        if evals >= opts.max_evals {
            break;
        }
        scale *= 0.1;
    }
    Minimum { x: best_x, f: best_f, evals, converged }
}
