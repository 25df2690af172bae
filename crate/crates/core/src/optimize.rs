//! Derivative-free Nelder–Mead simplex minimization.

/// Simplex coefficients and stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iter: usize,
    /// Relative tolerance on the spread of vertex values.
    pub rel_tol: f64,
    /// Absolute floor added to the tolerance, in objective units.
    pub abs_tol: f64,
    /// Restarts from the current best vertex after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iter: 10_000,
            rel_tol: 1e-12,
            abs_tol: 0.0,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after every iteration.
    pub history: Vec<f64>,
}

/// Minimizes `f` starting from `x0`, with initial simplex edge `steps[i]` along
/// each coordinate.
pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len());
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0);
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut converged = false;
    for round in 0..=opts.restarts {
        let (x, v, conv) = run_simplex(&eval, &best_x, steps, opts, &mut iterations, &mut history);
        let improved = v < best_v;
        if v <= best_v {
            best_x = x;
            best_v = v;
        }
        converged = conv;
        if !conv || (round > 0 && !improved) {
            break;
        }
        if best_v == 0.0 {
            break;
        }
    }
    Minimum {
        x: best_x,
        value: best_v,
        iterations,
        converged,
        history,
    }
}

fn run_simplex<F>(
    f: &F,
    x0: &[f64],
    steps: &[f64],
    o: &NelderMeadOptions,
    iterations: &mut usize,
    history: &mut Vec<f64>,
) -> (Vec<f64>, f64, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (lo, hi, second) = (order[0], order[n], order[n - 1]);
        let spread = vals[hi] - vals[lo];
        if spread <= o.rel_tol * vals[lo].abs() + o.abs_tol || spread.is_nan() {
            return (pts[lo].clone(), vals[lo], true);
        }
        if *iterations >= o.max_iter {
            return (pts[lo].clone(), vals[lo], false);
        }
        *iterations += 1;

        let mut centroid = vec![0.0; n];
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[k]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[hi])
                .map(|(c, x)| c + t * (c - x))
                .collect()
        };
        let xr = along(o.reflection);
        let fr = f(&xr);
        if fr < vals[lo] {
            let xe = along(o.reflection * o.expansion);
            let fe = f(&xe);
            if fe < fr {
                pts[hi] = xe;
                vals[hi] = fe;
            } else {
                pts[hi] = xr;
                vals[hi] = fr;
            }
        } else if fr < vals[second] {
            pts[hi] = xr;
            vals[hi] = fr;
        } else {
            let (xc, fc) = if fr < vals[hi] {
                let xc = along(o.reflection * o.contraction);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-o.contraction);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[hi].min(fr) {
                pts[hi] = xc;
                vals[hi] = fc;
            } else {
                let best = pts[lo].clone();
                for k in 0..=n {
                    if k == lo {
                        continue;
                    }
                    for (x, b) in pts[k].iter_mut().zip(&best) {
                        *x = b + o.shrink * (*x - b);
                    }
                    vals[k] = f(&pts[k]);
                }
            }
        }
        history.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
    }
}
