//! Damped Newton iteration with finite-difference Jacobians, and parameter continuation.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A square nonlinear system.
pub trait Problem: Sync {
    fn dim(&self) -> usize;
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Weights of the squared residual components in the convergence norm.
    fn row_weights(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }
}

pub fn weighted_norm(r: &[f64], w: &[f64]) -> f64 {
    r.iter().zip(w).map(|(a, b)| b * a * a).sum::<f64>().sqrt()
}

/// Central differences, step h·max(1, |x_j|) per column; columns run in parallel.
pub fn fd_jacobian<P: Problem + ?Sized>(p: &P, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    if !(h > 1e-14 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step {h} outside (1e-14, 1)")));
    }
    let n = p.dim();
    if x.len() != n {
        return Err(Error::InvalidParameter(format!("expected {n} unknowns, got {}", x.len())));
    }
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let step = h * x[j].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += step;
            xm[j] -= step;
            let fp = p.residual(&xp)?;
            let fm = p.residual(&xm)?;
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        })
        .collect::<Result<_>>()?;
    let rows = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, n, |i, j| cols[j][i]))
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub max_halvings: usize,
    pub max_condition: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 20, fd_step: 1e-6, max_halvings: 8, max_condition: 1e12 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Weighted residual norm before the first and after every accepted step.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    /// Norms of the accepted Newton corrections.
    pub step_norms: Vec<f64>,
    /// Largest 2-norm condition number of the Jacobians used.
    pub condition_estimate: Option<f64>,
}

fn condition(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Newton's method from `x0`. The Jacobian of each iteration is reused across the
/// backtracking line search.
pub fn newton_solve<P: Problem + ?Sized>(p: &P, x0: &[f64], opts: &NewtonOptions) -> Result<(Vec<f64>, SolveReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = p.dim();
    if x0.len() != n {
        return Err(Error::InvalidParameter(format!("expected {n} unknowns, got {}", x0.len())));
    }
    let w = p.row_weights();
    let mut x = x0.to_vec();
    let mut f = p.residual(&x)?;
    if f.len() != n {
        return Err(Error::InvalidParameter(format!(
            "residual has {} components for {n} unknowns",
            f.len()
        )));
    }
    let mut norm = weighted_norm(&f, &w);
    let mut report = SolveReport { residual_history: vec![norm], ..Default::default() };
    while norm > opts.tol {
        if report.iterations >= opts.max_iter {
            report.final_residual = norm;
            return Err(Error::NotConverged { iterations: report.iterations, residual: norm });
        }
        let j = fd_jacobian(p, &x, opts.fd_step)?;
        let cond = condition(&j);
        report.condition_estimate = Some(report.condition_estimate.map_or(cond, |c: f64| c.max(cond)));
        if !(cond <= opts.max_condition) {
            return Err(Error::Singular(cond));
        }
        let delta = j
            .lu()
            .solve(&DVector::from_column_slice(&f))
            .ok_or(Error::Singular(f64::INFINITY))?;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a - alpha * d).collect();
            if let Ok(ft) = p.residual(&trial) {
                let nt = weighted_norm(&ft, &w);
                if nt < norm {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xt, ft, nt)) = accepted else {
            report.final_residual = norm;
            return Err(Error::LineSearchStall(norm));
        };
        report.iterations += 1;
        report.step_norms.push(alpha * delta.norm());
        debug!("newton iteration {}: residual {nt:.3e} (alpha {alpha})", report.iterations);
        x = xt;
        f = ft;
        norm = nt;
        report.residual_history.push(norm);
    }
    report.converged = true;
    report.final_residual = norm;
    Ok((x, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationStep {
    pub param: f64,
    pub solution: Vec<f64>,
    pub report: SolveReport,
    /// Family-specific size measure (e.g. ‖εφ‖).
    pub measure: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationResult {
    pub steps: Vec<ContinuationStep>,
    /// Least-squares slope of log(measure) against log(param).
    pub slope: Option<f64>,
}

const MAX_BISECTIONS: usize = 6;

/// Solves along `schedule`, warm-starting each step from the previous solution.
/// A failed step is approached through bisected intermediate parameters.
pub fn continuation<P, F, G>(
    schedule: &[f64],
    x0: Vec<f64>,
    make: F,
    measure: G,
    opts: &NewtonOptions,
) -> Result<ContinuationResult>
where
    P: Problem,
    F: Fn(f64) -> Result<P>,
    G: Fn(f64, &[f64]) -> f64,
{
    let monotone = schedule.windows(2).all(|w| w[1] < w[0]) || schedule.windows(2).all(|w| w[1] > w[0]);
    if !monotone {
        return Err(Error::InvalidParameter("schedule must be strictly monotone".into()));
    }
    let mut steps = Vec::with_capacity(schedule.len());
    let mut x = x0;
    let mut prev: Option<f64> = None;
    for &target in schedule {
        let (sol, report) = reach(target, prev, &x, &make, opts, 0)?;
        steps.push(ContinuationStep { param: target, measure: measure(target, &sol), solution: sol.clone(), report });
        x = sol;
        prev = Some(target);
    }
    let slope = log_log_slope(steps.iter().map(|s| (s.param, s.measure)));
    Ok(ContinuationResult { steps, slope })
}

fn reach<P, F>(
    target: f64,
    prev: Option<f64>,
    x: &[f64],
    make: &F,
    opts: &NewtonOptions,
    depth: usize,
) -> Result<(Vec<f64>, SolveReport)>
where
    P: Problem,
    F: Fn(f64) -> Result<P>,
{
    let attempt = make(target).and_then(|p| newton_solve(&p, x, opts));
    match (attempt, prev) {
        (Ok(r), _) => Ok(r),
        (Err(e), Some(p)) if depth < MAX_BISECTIONS => {
            let mid = 0.5 * (p + target);
            debug!("continuation step to {target} failed ({e}); bisecting at {mid}");
            let (xm, _) = reach(mid, prev, x, make, opts, depth + 1)?;
            reach(target, Some(mid), &xm, make, opts, depth + 1)
        }
        (Err(e), _) => Err(Error::Continuation { param: target, reason: e.to_string() }),
    }
}

/// Least-squares slope of log y against log x over positive pairs.
pub fn log_log_slope(pts: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let v: Vec<(f64, f64)> = pts
        .filter(|(a, b)| *a > 0.0 && *b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if v.len() < 2 {
        return None;
    }
    let n = v.len() as f64;
    let mx = v.iter().map(|p| p.0).sum::<f64>() / n;
    let my = v.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = v.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = v.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl Problem for Quadratic {
        fn dim(&self) -> usize {
            2
        }
        fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[0] * x[0] - 2.0, x[1] - x[0] * x[1] + 0.5])
        }
    }

    #[test]
    fn newton_converges_quadratically() {
        let (x, r) = newton_solve(&Quadratic, &[1.5, 0.0], &NewtonOptions::default()).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(r.converged);
        assert!(r.residual_history.windows(2).all(|w| w[1] < w[0]));
        let s = &r.step_norms;
        let k = s.len();
        assert!(s[k - 1] <= 10.0 * s[k - 2] * s[k - 2]);
    }

    #[test]
    fn zero_residual_returns_immediately() {
        struct Lin;
        impl Problem for Lin {
            fn dim(&self) -> usize {
                1
            }
            fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
                Ok(vec![3.0 * x[0]])
            }
        }
        let (x, r) = newton_solve(&Lin, &[0.0], &NewtonOptions::default()).unwrap();
        assert_eq!(x, vec![0.0]);
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn singular_jacobian_reported() {
        struct Flat;
        impl Problem for Flat {
            fn dim(&self) -> usize {
                2
            }
            fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
                Ok(vec![x[0] + x[1] - 1.0, 2.0 * (x[0] + x[1]) - 2.0 + 1e-3])
            }
        }
        assert!(matches!(
            newton_solve(&Flat, &[0.0, 0.0], &NewtonOptions::default()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn empty_schedule() {
        let r = continuation(&[], vec![1.0], |_| Ok(Quadratic), |_, _| 0.0, &NewtonOptions::default()).unwrap();
        assert!(r.steps.is_empty());
        assert!(r.slope.is_none());
    }

    #[test]
    fn slope_fit() {
        let pts = [0.1f64, 0.05, 0.02].map(|e| (e, 3.0 * e * e));
        assert!((log_log_slope(pts.into_iter()).unwrap() - 2.0).abs() < 1e-12);
    }
}
