//! Local minimizers used by the synthesis searches.
//!
//! Three methods: BFGS with a backtracking line search, Levenberg-Marquardt on
//! a residual vector, and Nelder-Mead for derivative-free fallback.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOptions {
    pub max_iterations: usize,
    /// Stop when the objective drops below this value.
    pub f_target: f64,
    /// Stop when the gradient infinity-norm drops below this value.
    pub gradient_tol: f64,
    /// Stop when a step changes `x` by less than this (infinity norm).
    pub step_tol: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self { max_iterations: 500, f_target: 0.0, gradient_tol: 1e-14, step_tol: 1e-15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// BFGS on `f` with gradient. `fg` returns `(f, grad f)`.
pub fn bfgs<F>(mut fg: F, x0: &[f64], opts: &LocalOptions) -> LocalResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut f, g) = fg(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut evals = 1;
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut it = 0;
    let mut converged = false;
    while it < opts.max_iterations {
        if f <= opts.f_target || inf_norm(&g) < opts.gradient_tol {
            converged = true;
            break;
        }
        it += 1;
        let mut p = -(&h_inv * &g);
        let mut slope = p.dot(&g);
        if slope >= 0.0 {
            h_inv = DMatrix::identity(n, n);
            p = -g.clone();
            slope = p.dot(&g);
        }
        // backtracking Armijo search
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xt = &x + &p * alpha;
            let (ft, gt) = fg(xt.as_slice());
            evals += 1;
            if ft.is_finite() && ft <= f + 1e-4 * alpha * slope {
                accepted = Some((xt, ft, DVector::from_vec(gt)));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            break;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy^T + hy s^T) + (rho^2 yHy + rho) s s^T
            h_inv -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }
        let step = inf_norm(&s);
        x = xn;
        f = fnew;
        g = gn;
        if step < opts.step_tol {
            converged = f <= opts.f_target;
            break;
        }
    }
    if f <= opts.f_target {
        converged = true;
    }
    LocalResult { x: x.as_slice().to_vec(), f, iterations: it, evaluations: evals, converged }
}

/// Levenberg-Marquardt on `f = |r|^2`. `rj` returns residuals and their Jacobian.
pub fn levenberg_marquardt<F>(mut rj: F, x0: &[f64], opts: &LocalOptions) -> LocalResult
where
    F: FnMut(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut r, mut j) = rj(x.as_slice());
    let mut f = r.norm_squared();
    let mut evals = 1;
    let mut mu = 1e-3;
    let mut it = 0;
    let mut converged = false;
    while it < opts.max_iterations {
        let g = j.transpose() * &r;
        if f <= opts.f_target || inf_norm(&g) < opts.gradient_tol {
            converged = true;
            break;
        }
        it += 1;
        let jtj = j.transpose() * &j;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += mu * (1.0 + jtj[(k, k)]);
            }
            let Some(chol) = a.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let dx = -chol.solve(&g);
            let xt = &x + &dx;
            let (rt, jt) = rj(xt.as_slice());
            evals += 1;
            let ft = rt.norm_squared();
            if ft.is_finite() && ft < f {
                let step = inf_norm(&dx);
                x = xt;
                r = rt;
                j = jt;
                f = ft;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                if step < opts.step_tol {
                    it = opts.max_iterations;
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    if f <= opts.f_target {
        converged = true;
    }
    LocalResult { x: x.as_slice().to_vec(), f, iterations: it, evaluations: evals, converged }
}

/// Nelder-Mead with standard coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], scale: f64, opts: &LocalOptions) -> LocalResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    simplex.push(DVector::from_column_slice(x0));
    for k in 0..n {
        let mut v = DVector::from_column_slice(x0);
        v[k] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v.as_slice())).collect();
    let mut evals = n + 1;
    let mut it = 0;
    while it < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();
        if values[0] <= opts.f_target {
            break;
        }
        let spread = simplex[1..].iter().map(|v| inf_norm(&(v - &simplex[0]))).fold(0.0, f64::max);
        if spread < opts.step_tol.max(1e-14) {
            break;
        }
        it += 1;
        let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, v| acc + v) / n as f64;
        let worst = simplex[n].clone();
        let reflect = &centroid + (&centroid - &worst);
        let fr = f(reflect.as_slice());
        evals += 1;
        if fr < values[0] {
            let expand = &centroid + (&reflect - &centroid) * 2.0;
            let fe = f(expand.as_slice());
            evals += 1;
            if fe < fr {
                simplex[n] = expand;
                values[n] = fe;
            } else {
                simplex[n] = reflect;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflect;
            values[n] = fr;
        } else {
            let contract = if fr < values[n] {
                &centroid + (&reflect - &centroid) * 0.5
            } else {
                &centroid + (&worst - &centroid) * 0.5
            };
            let fc = f(contract.as_slice());
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = contract;
                values[n] = fc;
            } else {
                for k in 1..=n {
                    simplex[k] = &simplex[0] + (&simplex[k] - &simplex[0]) * 0.5;
                    values[k] = f(simplex[k].as_slice());
                    evals += 1;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    LocalResult {
        x: simplex[best].as_slice().to_vec(),
        f: values[best],
        iterations: it,
        evaluations: evals,
        converged: values[best] <= opts.f_target,
    }
}
