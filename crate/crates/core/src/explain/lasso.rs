use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LASSO_TOLERANCE: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective on the centered data at the solution.
    pub objective: f64,
    /// Objective after each sweep.
    pub objective_history: Vec<f64>,
    /// Columns forced to zero because they do not vary.
    pub zero_variance: Vec<usize>,
}

impl LassoFit {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.intercept + row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>()
    }

    pub fn nonzero(&self) -> usize {
        self.coefficients.iter().filter(|&&b| b > 0.0).count()
    }
}

/// `sum (y_c - X_c b)^2 + penalty * sum b` on centered data.
pub fn lasso_objective(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64], penalty: f64) -> f64 {
    let xm = x.mean_axis(Axis(0)).unwrap_or_else(|| ndarray::Array1::zeros(x.ncols()));
    let ym = y.mean().unwrap_or(0.0);
    let mut sse = 0.0;
    for (row, &yi) in x.rows().into_iter().zip(y) {
        let mut pred = 0.0;
        for (j, (&v, &b)) in row.iter().zip(beta).enumerate() {
            pred += (v - xm[j]) * b;
        }
        let r = (yi - ym) - pred;
        sse += r * r;
    }
    sse + penalty * beta.iter().sum::<f64>()
}

/// Non-negative Lasso by cyclic coordinate descent.
///
/// Minimizes `sum_i (y_i - mean(y) - sum_j (x_ij - mean_j) b_j)^2 + penalty * sum_j b_j`
/// subject to `b >= 0`; the intercept is recovered from the means. Each
/// full sweep is followed by sweeps over the active set until that settles.
/// Converged when a full sweep changes no coefficient by more than
/// `LASSO_TOLERANCE`. Columns with no variation get a zero coefficient.
pub fn fit_nonneg_lasso(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, penalty: f64) -> Result<LassoFit> {
    let (n, m) = x.dim();
    if y.len() != n {
        return Err(Error::Numeric(format!("X has {n} rows but y has {}", y.len())));
    }
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(Error::Numeric(format!("invalid Lasso penalty {penalty}")));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in Lasso input".into()));
    }
    if n == 0 {
        return Ok(LassoFit {
            coefficients: vec![0.0; m],
            intercept: 0.0,
            sweeps: 0,
            converged: true,
            objective: 0.0,
            objective_history: Vec::new(),
            zero_variance: (0..m).collect(),
        });
    }

    let ym = y.sum() / n as f64;
    let mut resid: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let mut means = vec![0.0; m];
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut ss = vec![0.0; m];
    let mut zero_variance = Vec::new();
    for j in 0..m {
        let col = x.column(j);
        let first = col[0];
        let mean = col.sum() / n as f64;
        let centered: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let s: f64 = centered.iter().map(|v| v * v).sum();
        means[j] = mean;
        if col.iter().all(|&v| v == first) || s == 0.0 {
            zero_variance.push(j);
            cols.push(Vec::new());
        } else {
            ss[j] = s;
            cols.push(centered);
        }
    }
    let live: Vec<usize> = (0..m).filter(|&j| !cols[j].is_empty()).collect();

    let mut beta = vec![0.0; m];
    let half = penalty / 2.0;
    let update = |j: usize, beta: &mut [f64], resid: &mut [f64]| -> f64 {
        let c = &cols[j];
        let rho: f64 = c.iter().zip(resid.iter()).map(|(a, b)| a * b).sum::<f64>() + ss[j] * beta[j];
        let new = ((rho - half).max(0.0)) / ss[j];
        let delta = new - beta[j];
        if delta != 0.0 {
            for (r, a) in resid.iter_mut().zip(c) {
                *r -= a * delta;
            }
            beta[j] = new;
        }
        delta.abs()
    };
    let objective = |beta: &[f64], resid: &[f64]| -> f64 {
        resid.iter().map(|r| r * r).sum::<f64>() + penalty * beta.iter().sum::<f64>()
    };

    let mut sweeps = 0;
    let mut converged = false;
    let mut history = Vec::new();
    while sweeps < LASSO_MAX_SWEEPS {
        let mut max_delta: f64 = 0.0;
        for &j in &live {
            max_delta = max_delta.max(update(j, &mut beta, &mut resid));
        }
        sweeps += 1;
        history.push(objective(&beta, &resid));
        if max_delta < LASSO_TOLERANCE {
            converged = true;
            break;
        }
        let active: Vec<usize> = live.iter().copied().filter(|&j| beta[j] > 0.0).collect();
        while sweeps < LASSO_MAX_SWEEPS && !active.is_empty() {
            let mut inner: f64 = 0.0;
            for &j in &active {
                inner = inner.max(update(j, &mut beta, &mut resid));
            }
            sweeps += 1;
            history.push(objective(&beta, &resid));
            if inner < LASSO_TOLERANCE {
                break;
            }
        }
    }
    let intercept = ym - means.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    Ok(LassoFit {
        objective: objective(&beta, &resid),
        coefficients: beta,
        intercept,
        sweeps,
        converged,
        objective_history: history,
        zero_variance,
    })
}
