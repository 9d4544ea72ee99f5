//! Small least-squares helpers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let coef = least_squares(&[x], y)?;
    let r2 = r_squared(&[x], y, &coef);
    Some(LineFit {
        slope: coef[1],
        intercept: coef[0],
        r2,
    })
}

/// Slope of `log y` against `log x`, skipping non-positive samples.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    fit_line(&lx, &ly)
}

/// Least squares with an intercept column followed by one column per regressor.
pub fn least_squares(regressors: &[&[f64]], y: &[f64]) -> Option<Vec<f64>> {
    let rows = y.len();
    let cols = regressors.len() + 1;
    if rows < cols || regressors.iter().any(|r| r.len() != rows) {
        return None;
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| if j == 0 { 1.0 } else { regressors[j - 1][i] });
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-12).ok()?;
    let out: Vec<f64> = sol.iter().copied().collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

pub fn r_squared(regressors: &[&[f64]], y: &[f64], coef: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..y.len() {
        let pred = coef[0]
            + regressors
                .iter()
                .enumerate()
                .map(|(j, r)| coef[j + 1] * r[i])
                .sum::<f64>();
        ss_res += (y[i] - pred).powi(2);
        ss_tot += (y[i] - mean).powi(2);
    }
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
