//! ℓ₁-penalized least squares, (1/2n)‖y − Xβ‖² + λ‖β‖₁, by cyclic
//! coordinate descent, tuned by k-fold cross-validation. No intercept is fit.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RegressionDataset;
use crate::par::{try_map_range, Execution};
use crate::report::{FitReport, Method};
use crate::rng::{stream, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub beta: DVector<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Exact solution for the support and signs of `beta`, if it satisfies the
/// optimality conditions: β_A = (X_A'X_A)⁻¹(X_A'y − nλ s_A).
fn solve_on_support(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let support: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
    let mut out = DVector::zeros(p);
    if !support.is_empty() {
        let xa = x.select_columns(&support);
        let chol = (xa.transpose() * &xa).cholesky()?;
        let signs = DVector::from_iterator(support.len(), support.iter().map(|&j| beta[j].signum()));
        let ba = chol.solve(&(xa.transpose() * y - signs.clone() * (nf * lambda)));
        for (k, &j) in support.iter().enumerate() {
            if ba[k].signum() != signs[k] || ba[k] == 0.0 {
                return None;
            }
            out[j] = ba[k];
        }
    }
    let g = x.transpose() * (y - x * &out) / nf;
    let slack = 1e-12 * (1.0 + lambda);
    for j in 0..p {
        if out[j] == 0.0 && g[j].abs() > lambda + slack {
            return None;
        }
    }
    Some(out)
}

/// Coordinate descent from `start` (zeros when `None`). Every so often the
/// current support and signs are tried in [`solve_on_support`]; an exact
/// solution found that way ends the descent.
pub fn lasso_cd(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    start: Option<&DVector<f64>>,
    options: &LassoOptions,
) -> Result<LassoSolution> {
    let (n, p) = x.shape();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain("lasso_cd", format!("lambda must be non-negative, got {lambda}")));
    }
    if y.len() != n {
        return Err(Error::Usage(format!("lasso_cd: y has {} rows, X has {n}", y.len())));
    }
    let nf = n as f64;
    let scale: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / nf).collect();
    let mut beta = start.cloned().unwrap_or_else(|| DVector::zeros(p));
    let mut resid = y - x * &beta;
    for sweep in 1..=options.max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let c = scale[j];
            let old = beta[j];
            let new = if c > 0.0 {
                let col = x.column(j);
                let z = col.dot(&resid) / nf + c * old;
                soft(z, lambda) / c
            } else {
                0.0
            };
            if new != old {
                resid.axpy(old - new, &x.column(j), 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if sweep.is_power_of_two() && sweep >= 8 {
            if let Some(exact) = solve_on_support(x, y, &beta, lambda) {
                return Ok(LassoSolution {
                    beta: exact,
                    sweeps: sweep,
                    converged: true,
                });
            }
        }
        if max_change < options.tol {
            return Ok(LassoSolution {
                beta,
                sweeps: sweep,
                converged: true,
            });
        }
    }
    Ok(LassoSolution {
        beta,
        sweeps: options.max_sweeps,
        converged: false,
    })
}

/// Largest violation of the optimality conditions:
/// |gⱼ| ≤ λ where βⱼ = 0 and gⱼ = λ·sign(βⱼ) otherwise, g = X'(y − Xβ)/n.
pub fn kkt_residual(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let g = x.transpose() * (y - x * beta) / n;
    g.iter()
        .zip(beta.iter())
        .map(|(&gj, &bj)| if bj == 0.0 { (gj.abs() - lambda).max(0.0) } else { (gj - lambda * bj.signum()).abs() })
        .fold(0.0, f64::max)
}

/// maxⱼ |xⱼ'y|/n, the smallest λ with an all-zero solution.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    (x.transpose() * y).amax() / x.nrows() as f64
}

/// `points` values log-spaced from `hi` down to `ratio·hi`.
pub fn log_grid(hi: f64, ratio: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![hi];
    }
    let (l0, l1) = (hi.ln(), (hi * ratio).ln());
    (0..points)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub lambda: f64,
    /// (λ, mean held-out squared error), in grid order.
    pub cv_curve: Vec<(f64, f64)>,
    pub folds: usize,
    pub seed: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    /// Descending grid; 100 points from λ_max to 1e-4·λ_max when `None`.
    pub grid: Option<Vec<f64>>,
    pub solver: LassoOptions,
    pub execution: Execution,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            grid: None,
            solver: LassoOptions::default(),
            execution: Execution::default(),
        }
    }
}

/// Fold label for every row: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, 0, Stage::Folds));
    let mut label = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = pos % folds;
    }
    label
}

fn rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    m.select_rows(idx)
}

/// Warm-started path over a descending grid.
fn path(x: &DMatrix<f64>, y: &DVector<f64>, grid: &[f64], options: &LassoOptions) -> Result<(Vec<DVector<f64>>, bool)> {
    let mut out = Vec::with_capacity(grid.len());
    let mut all = true;
    let mut prev: Option<DVector<f64>> = None;
    for &lambda in grid {
        let sol = lasso_cd(x, y, lambda, prev.as_ref(), options)?;
        all &= sol.converged;
        prev = Some(sol.beta.clone());
        out.push(sol.beta);
    }
    Ok((out, all))
}

pub fn cv_lasso(data: &RegressionDataset, options: &CvOptions, seed: u64) -> Result<LassoFit> {
    let (n, _) = data.x.shape();
    let k = options.folds;
    if k < 2 || n < k {
        return Err(Error::Usage(format!("cross-validation needs 2 <= folds <= n, got folds = {k}, n = {n}")));
    }
    let grid = match &options.grid {
        Some(g) => {
            if g.is_empty() || g.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::Usage("lambda grid must be non-empty and non-negative".into()));
            }
            g.clone()
        }
        None => {
            let hi = lambda_max(&data.x, &data.y);
            if hi == 0.0 {
                vec![0.0]
            } else {
                log_grid(hi, 1e-4, 100)
            }
        }
    };
    let label = fold_assignment(n, k, seed);
    let errors = try_map_range(k, options.execution, |f| {
        let train: Vec<usize> = (0..n).filter(|&i| label[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| label[i] == f).collect();
        if train.is_empty() || test.is_empty() {
            return Err(Error::Usage(format!("fold {f} is degenerate")));
        }
        let (xt, yt) = (rows(&data.x, &train), data.y.select_rows(&train));
        let (xv, yv) = (rows(&data.x, &test), data.y.select_rows(&test));
        let (betas, _) = path(&xt, &yt, &grid, &options.solver)?;
        Ok(betas
            .iter()
            .map(|b| (&yv - &xv * b).norm_squared() / test.len() as f64)
            .collect::<Vec<f64>>())
    })?;
    let cv_curve: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, errors.iter().map(|e| e[i]).sum::<f64>() / k as f64))
        .collect();
    let mut best = 0;
    for (i, &(_, e)) in cv_curve.iter().enumerate() {
        if e < cv_curve[best].1 {
            best = i;
        }
    }
    let (betas, converged) = path(&data.x, &data.y, &grid[..=best], &options.solver)?;
    let beta = betas.last().cloned().unwrap_or_else(|| DVector::zeros(data.p()));
    Ok(LassoFit {
        beta: beta.iter().cloned().collect(),
        lambda: grid[best],
        cv_curve,
        folds: k,
        seed,
        converged,
    })
}

impl LassoFit {
    pub fn report(&self, elapsed_seconds: f64) -> FitReport {
        let mut coefficients = FitReport::point_summaries(&self.beta);
        for c in coefficients.iter_mut() {
            c.exact_zero = c.estimate == 0.0;
        }
        FitReport {
            method: Method::Lasso,
            beta: self.beta.clone(),
            sigma2: f64::NAN,
            iterations: self.cv_curve.len(),
            draws: 0,
            converged: self.converged,
            elapsed_seconds,
            seed: Some(self.seed),
            coefficients,
            warnings: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DMatrix<f64>, DVector<f64>) {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 1.2, 0.8, -0.4]);
        let y = DVector::from_vec(vec![1.1, 0.7, 0.2]);
        (x, y)
    }

    #[test]
    fn zero_lambda_is_least_squares() {
        let (x, y) = toy();
        let sol = lasso_cd(&x, &y, 0.0, None, &LassoOptions::default()).unwrap();
        let ols = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * &y));
        assert!((&sol.beta - ols).amax() < 1e-8);
    }

    #[test]
    fn above_lambda_max_is_zero() {
        let (x, y) = toy();
        let sol = lasso_cd(&x, &y, lambda_max(&x, &y) * 1.0001, None, &LassoOptions::default()).unwrap();
        assert!(sol.beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn matches_grid_search() {
        let (x, y) = toy();
        let lambda = 0.1;
        let obj = |b0: f64, b1: f64| {
            let b = DVector::from_vec(vec![b0, b1]);
            (&y - &x * &b).norm_squared() / 6.0 + lambda * (b0.abs() + b1.abs())
        };
        // coarse grid, then a fine grid around the coarse minimizer
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in -300..=300 {
            for j in -300..=300 {
                let (b0, b1) = (i as f64 * 0.01, j as f64 * 0.01);
                let v = obj(b0, b1);
                if v < best.2 {
                    best = (b0, b1, v);
                }
            }
        }
        let (c0, c1) = (best.0, best.1);
        for i in -1000..=1000 {
            for j in -1000..=1000 {
                let (b0, b1) = (c0 + i as f64 * 1e-5, c1 + j as f64 * 1e-5);
                let v = obj(b0, b1);
                if v < best.2 {
                    best = (b0, b1, v);
                }
            }
        }
        let sol = lasso_cd(&x, &y, lambda, None, &LassoOptions::default()).unwrap();
        assert!((sol.beta[0] - best.0).abs() < 1e-4 && (sol.beta[1] - best.1).abs() < 1e-4, "{sol:?} vs {best:?}");
        assert!(kkt_residual(&x, &y, &sol.beta, lambda) < 1e-6);
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = fold_assignment(53, 10, 3);
        assert_eq!(a, fold_assignment(53, 10, 3));
        for f in 0..10 {
            let c = a.iter().filter(|&&l| l == f).count();
            assert!(c == 5 || c == 6);
        }
    }
}
