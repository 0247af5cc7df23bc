//! Derivative-free optimization: adaptive Nelder-Mead with seeded multi-start.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::random::{rng_stream, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub max_evals: usize,
    /// Simplex diameter (parameter units) below which a run may stop.
    pub xtol: f64,
    /// Spread of simplex values below which a run may stop.
    pub ftol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 16, max_evals: 20_000, xtol: 1e-6, ftol: 1e-6, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_evals == 0 {
            return Err(Error::InvalidArgument("restarts and max_evals must be ≥ 1".into()));
        }
        if !(self.xtol > 0.0 && self.ftol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an initial simplex of edge `step`.
///
/// Dimension-adaptive coefficients keep the method effective beyond a handful of
/// parameters. After convergence the simplex is rebuilt around the best point and the
/// search resumes while that still improves the value by more than `ftol`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, max_evals: usize, xtol: f64, ftol: f64) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        return NelderMeadResult { x: Vec::new(), f: eval(&[]), evals: 1, converged: true };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0);
    evals += 1;
    let mut converged = false;
    let mut scale = step;

    'outer: loop {
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut values: Vec<f64> = Vec::with_capacity(n + 1);
        simplex.push(best_x.clone());
        values.push(best_f);
        for i in 0..n {
            if evals >= max_evals {
                break 'outer;
            }
            let mut v = best_x.clone();
            v[i] += scale;
            values.push(eval(&v));
            simplex.push(v);
            evals += 1;
        }
        let start_f = best_f;

        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial2 = vec![0.0; n];
        loop {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let diameter = simplex[1..]
                .iter()
                .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread <= ftol && diameter <= xtol {
                break;
            }
            if evals >= max_evals {
                break;
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / nf;
                }
            }
            let worst = simplex[n].clone();
            for i in 0..n {
                trial[i] = centroid[i] + alpha * (centroid[i] - worst[i]);
            }
            let fr = eval(&trial);
            evals += 1;
            if fr < values[0] {
                for i in 0..n {
                    trial2[i] = centroid[i] + gamma * (trial[i] - centroid[i]);
                }
                let fe = eval(&trial2);
                evals += 1;
                if fe < fr {
                    simplex[n].copy_from_slice(&trial2);
                    values[n] = fe;
                } else {
                    simplex[n].copy_from_slice(&trial);
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
                continue;
            }
            // Outside contraction when the reflection beats the worst, inside otherwise.
            let outside = fr < values[n];
            for i in 0..n {
                trial2[i] = if outside {
                    centroid[i] + rho * (trial[i] - centroid[i])
                } else {
                    centroid[i] + rho * (worst[i] - centroid[i])
                };
            }
            let fc = eval(&trial2);
            evals += 1;
            if (outside && fc <= fr) || (!outside && fc < values[n]) {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fc;
                continue;
            }
            let best = simplex[0].clone();
            for j in 1..=n {
                for i in 0..n {
                    simplex[j][i] = best[i] + sigma * (simplex[j][i] - best[i]);
                }
                values[j] = eval(&simplex[j]);
                evals += 1;
            }
        }

        let (ib, _) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("simplex is nonempty");
        if values[ib] < best_f {
            best_f = values[ib];
            best_x = simplex[ib].clone();
        }
        if evals >= max_evals {
            break;
        }
        if start_f - best_f <= ftol {
            converged = true;
            break;
        }
        scale = (scale * 0.5).max(xtol * 10.0);
    }
    NelderMeadResult { x: best_x, f: best_f, evals, converged }
}

/// Outcome of a multi-start maximization.
#[derive(Debug, Clone, Serialize)]
pub struct MultiStartResult {
    #[serde(skip)]
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub best_restart: usize,
    pub restarts_used: usize,
    pub evals: usize,
    /// Restarts that hit the evaluation budget before converging.
    pub exhausted: usize,
    pub values: Vec<f64>,
}

/// Maximizes `f` from `cfg.restarts` starting points, run in parallel.
///
/// Start `r` comes from `starts[r]` when given, otherwise from `init` with the RNG stream
/// `(cfg.seed, r)`, so results do not depend on scheduling.
pub fn maximize<F, I>(f: F, init: I, starts: &[Vec<f64>], step: f64, cfg: &OptimizerConfig) -> MultiStartResult
where
    F: Fn(&[f64]) -> f64 + Sync,
    I: Fn(&mut SeededRng) -> Vec<f64> + Sync,
{
    let restarts = cfg.restarts.max(starts.len()).max(1);
    let runs: Vec<NelderMeadResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = match starts.get(r) {
                Some(x) => x.clone(),
                None => init(&mut rng_stream(cfg.seed, r as u64)),
            };
            nelder_mead(|x| -f(x), &x0, step, cfg.max_evals, cfg.xtol, cfg.ftol)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.f < runs[best].f {
            best = r;
        }
    }
    MultiStartResult {
        best_x: runs[best].x.clone(),
        best_value: -runs[best].f,
        best_restart: best,
        restarts_used: restarts,
        evals: runs.iter().map(|r| r.evals).sum(),
        exhausted: runs.iter().filter(|r| !r.converged).count(),
        values: runs.iter().map(|r| -r.f).collect(),
    }
}

/// Minimizes `f`; see [`maximize`].
pub fn minimize<F, I>(f: F, init: I, starts: &[Vec<f64>], step: f64, cfg: &OptimizerConfig) -> MultiStartResult
where
    F: Fn(&[f64]) -> f64 + Sync,
    I: Fn(&mut SeededRng) -> Vec<f64> + Sync,
{
    let mut r = maximize(|x| -f(x), init, starts, step, cfg);
    r.best_value = -r.best_value;
    r.values.iter_mut().for_each(|v| *v = -*v);
    r
}

/// Uniform starting point in `[-1, 1]^n`.
pub fn uniform_start(n: usize) -> impl Fn(&mut SeededRng) -> Vec<f64> + Sync {
    move |rng| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }

    #[test]
    fn minimizes_quadratic() {
        let r = nelder_mead(|x| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2), &[0.0, 0.0], 0.5, 5000, 1e-10, 1e-14);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn minimizes_rosenbrock_4d() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0, -0.5, 0.3], 0.5, 50_000, 1e-10, 1e-14);
        assert!(r.f < 1e-8, "f = {}", r.f);
    }

    #[test]
    fn respects_budget() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0, 0.0, 0.0, 0.0, 0.0], 0.5, 100, 1e-12, 1e-16);
        assert!(r.evals <= 100 + 7);
        assert!(!r.converged);
    }

    #[test]
    fn multistart_is_deterministic() {
        let cfg = OptimizerConfig { restarts: 4, max_evals: 2000, seed: 9, ..Default::default() };
        let f = |x: &[f64]| -(x[0].sin() * x[1].cos());
        let a = minimize(f, uniform_start(2), &[], 0.3, &cfg);
        let b = minimize(f, uniform_start(2), &[], 0.3, &cfg);
        assert_eq!(a.best_x, b.best_x);
        assert_eq!(a.values, b.values);
        assert!((a.best_value + 1.0).abs() < 1e-6);
    }

    #[test]
    fn explicit_starts_are_used() {
        let cfg = OptimizerConfig { restarts: 1, max_evals: 1, ..Default::default() };
        let r = maximize(|x| -x[0].abs(), uniform_start(1), &[vec![0.0]], 0.1, &cfg);
        assert_eq!(r.best_value, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        assert!(OptimizerConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { ftol: 0.0, ..Default::default() }.validate().is_err());
    }
}
