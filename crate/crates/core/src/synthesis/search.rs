use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{bfgs, levenberg_marquardt, nelder_mead, LocalOptions, LocalResult};

use super::objective::{Evaluator, SynthesisObjective};
use super::sequence::{canonical_tau, Pattern};

/// Local minimizer run from each starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Quasi-Newton on `f` with the analytic gradient.
    Bfgs,
    /// Levenberg-Marquardt on the residual vector behind `f`.
    LevenbergMarquardt,
    /// Derivative-free simplex.
    NelderMead,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bfgs => "bfgs",
            Method::LevenbergMarquardt => "levenberg-marquardt",
            Method::NelderMead => "nelder-mead",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bfgs" => Ok(Method::Bfgs),
            "lm" | "levenberg-marquardt" => Ok(Method::LevenbergMarquardt),
            "nelder-mead" | "simplex" => Ok(Method::NelderMead),
            _ => Err(Error::Domain(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartOptions {
    pub restarts: usize,
    pub seed: u64,
    pub method: Method,
    /// Success requires `f` below this...
    pub success_f: f64,
    /// ...and leakage below this.
    pub success_leakage: f64,
    pub max_iterations: usize,
    /// Stop after the first batch containing a success.
    pub stop_on_success: bool,
    /// Restarts per batch. Batches are the unit of early stopping, so the
    /// result does not depend on the number of worker threads.
    pub batch: usize,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            restarts: 100,
            seed: 0,
            method: Method::LevenbergMarquardt,
            success_f: 1e-12,
            success_leakage: 1e-8,
            max_iterations: 400,
            stop_on_success: true,
            batch: 32,
        }
    }
}

/// Outcome of a multi-start search over the durations of one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub pattern: Pattern,
    /// Best durations, reduced to `[0, 1)`.
    pub best_times: Vec<f64>,
    pub f: f64,
    pub mismatch: f64,
    pub leakage: f64,
    pub success: bool,
    pub seed: u64,
    pub method: Method,
    pub restarts_requested: usize,
    pub restarts_run: usize,
    /// Index of the restart that produced the best point.
    pub best_restart: usize,
    pub iterations: usize,
    pub evaluations: usize,
    /// Final `f` of every restart that was run, in restart order.
    pub f_min_distribution: Vec<f64>,
    /// Entrywise residual after one-qubit corrections, when computed.
    pub correction_residual: Option<f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl OptimizationReport {
    /// Smallest final `f` over all restarts.
    pub fn f_min(&self) -> f64 {
        self.f_min_distribution.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Starting point of restart `index`: uniform in `[0, 1)` from a ChaCha stream
/// keyed by `(seed, index)`.
pub fn starting_point(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// One local minimization from `x0`.
pub fn local_minimize(
    eval: &Evaluator,
    x0: &[f64],
    method: Method,
    max_iterations: usize,
    f_target: f64,
) -> LocalResult {
    let opts = LocalOptions { max_iterations, f_target, gradient_tol: 1e-15, step_tol: 1e-15 };
    let run = match method {
        Method::Bfgs => bfgs(|x| eval.value_and_gradient(x), x0, &opts),
        Method::LevenbergMarquardt => levenberg_marquardt(|x| eval.residuals_and_jacobian(x), x0, &opts),
        Method::NelderMead => nelder_mead(|x| eval.evaluate(x).f, x0, 0.1, &opts),
    };
    if method != Method::NelderMead && (!run.f.is_finite() || run.iterations == 0) {
        let mut fallback = nelder_mead(|x| eval.evaluate(x).f, x0, 0.1, &opts);
        fallback.evaluations += run.evaluations;
        return fallback;
    }
    run
}

/// Multi-start minimization of `obj` over the durations of `pattern`.
///
/// Restart `k` starts from [`starting_point`]`(seed, k)`. Restarts run in
/// parallel batches; the best point is the lowest `f`, ties going to the
/// lowest restart index. The result depends only on the arguments.
pub fn minimize_multistart(
    obj: &SynthesisObjective,
    pattern: &Pattern,
    opts: &MultistartOptions,
) -> Result<OptimizationReport> {
    if opts.restarts == 0 {
        return Err(Error::Domain("restarts must be at least 1".into()));
    }
    let started = Instant::now();
    let eval = Evaluator::new(obj, pattern)?;
    let dim = eval.n_params();
    let batch = opts.batch.max(1);
    let mut results: Vec<LocalResult> = Vec::with_capacity(opts.restarts);
    let mut next = 0;
    while next < opts.restarts {
        let end = (next + batch).min(opts.restarts);
        let chunk: Vec<LocalResult> = (next..end)
            .into_par_iter()
            .map(|k| {
                let x0 = starting_point(opts.seed, k, dim);
                let mut r = local_minimize(&eval, &x0, opts.method, opts.max_iterations, opts.success_f * 1e-3);
                for t in &mut r.x {
                    *t = canonical_tau(*t);
                }
                r.f = eval.evaluate(&r.x).f;
                r
            })
            .collect();
        results.extend(chunk);
        next = end;
        let hit = results.iter().any(|r| {
            let e = eval.evaluate(&r.x);
            e.f < opts.success_f && e.leakage < opts.success_leakage
        });
        if hit && opts.stop_on_success {
            break;
        }
    }
    let (best_restart, best) = results
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.f.total_cmp(&b.f).then(ia.cmp(ib)))
        .expect("at least one restart");
    let e = eval.evaluate(&best.x);
    Ok(OptimizationReport {
        pattern: pattern.clone(),
        best_times: best.x.clone(),
        f: e.f,
        mismatch: e.mismatch,
        leakage: e.leakage,
        success: e.f < opts.success_f && e.leakage < opts.success_leakage,
        seed: opts.seed,
        method: opts.method,
        restarts_requested: opts.restarts,
        restarts_run: results.len(),
        best_restart,
        iterations: results.iter().map(|r| r.iterations).sum(),
        evaluations: results.iter().map(|r| r.evaluations).sum(),
        f_min_distribution: results.iter().map(|r| r.f).collect(),
        correction_residual: None,
        wall_time: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c};
    use crate::synthesis::objective::Equivalence;

    #[test]
    fn starting_points_are_keyed_by_seed_and_index() {
        let a = starting_point(7, 3, 5);
        assert_eq!(a, starting_point(7, 3, 5));
        assert_ne!(a, starting_point(7, 4, 5));
        assert_ne!(a, starting_point(8, 3, 5));
        assert!(a.iter().all(|t| (0.0..1.0).contains(t)));
    }

    #[test]
    fn z_rotation_by_pi_needs_half_pulse() {
        let target = linalg::from_rows([[c(0.0, -1.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]]);
        let obj = SynthesisObjective::single_qubit(target).unwrap();
        let pattern: Pattern = vec![vec![(0, 1)]];
        for method in [Method::LevenbergMarquardt, Method::Bfgs, Method::NelderMead] {
            let opts = MultistartOptions { restarts: 8, seed: 1, method, success_f: 1e-20, ..Default::default() };
            let rep = minimize_multistart(&obj, &pattern, &opts).unwrap();
            assert!((rep.best_times[0] - 0.5).abs() < 1e-10, "{method}: {rep:?}");
            assert_eq!(obj.equivalence, Equivalence::Exact);
        }
    }

    #[test]
    fn no_inter_block_coupling_cannot_entangle() {
        let obj = SynthesisObjective::cnot();
        let pattern: Pattern = vec![vec![(0, 1)], vec![(1, 2)], vec![(3, 4)], vec![(4, 5)], vec![(0, 1)]];
        let opts = MultistartOptions { restarts: 200, seed: 3, ..Default::default() };
        let rep = minimize_multistart(&obj, &pattern, &opts).unwrap();
        assert!(!rep.success);
        assert_eq!(rep.restarts_run, 200);
        assert!(rep.f_min() > 0.1, "{}", rep.f_min());
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let obj = SynthesisObjective::cnot();
        let pattern: Pattern = vec![vec![(2, 3)], vec![(1, 2)], vec![(3, 4)], vec![(2, 3)]];
        let opts = MultistartOptions { restarts: 20, seed: 11, batch: 6, ..Default::default() };
        let a = minimize_multistart(&obj, &pattern, &opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| minimize_multistart(&obj, &pattern, &opts).unwrap());
        assert_eq!(a.best_times, b.best_times);
        assert_eq!(a.f_min_distribution, b.f_min_distribution);
    }

    #[test]
    fn reported_f_reproduces() {
        let obj = SynthesisObjective::cnot();
        let pattern: Pattern = vec![vec![(2, 3)], vec![(3, 4)], vec![(2, 3)]];
        let rep =
            minimize_multistart(&obj, &pattern, &MultistartOptions { restarts: 4, ..Default::default() }).unwrap();
        let again = Evaluator::new(&obj, &pattern).unwrap().evaluate(&rep.best_times);
        assert!((again.f - rep.f).abs() < 1e-12);
        assert!(minimize_multistart(&obj, &pattern, &MultistartOptions { restarts: 0, ..Default::default() }).is_err());
    }
}
