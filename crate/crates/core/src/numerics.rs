//! Small numerical kernels shared by the simulation and optimisation modules.
//!
//! Aggregates over Monte Carlo batches go through [`pairwise_sum`] so that
//! results do not depend on how work was split across threads.

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation.
///
/// The recursion splits at the midpoint, so the rounding pattern depends only
/// on the slice length and never on scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Element-wise pairwise summation of equally long rows.
pub fn pairwise_sum_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    match rows.len() {
        0 => Vec::new(),
        1 => rows[0].clone(),
        n => {
            let mid = n / 2;
            let left = pairwise_sum_rows(&rows[..mid]);
            let right = pairwise_sum_rows(&rows[mid..]);
            left.iter().zip(&right).map(|(a, b)| a + b).collect()
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Degenerate(format!(
            "regression inputs differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate("need at least two points".into()));
    }
    let x_bar = mean(xs);
    let y_bar = mean(ys);
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - x_bar).powi(2)).collect();
    let sxx = pairwise_sum(&sxx);
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    Ok(pairwise_sum(&sxy) / sxx)
}

/// `n` points spaced evenly in log10 between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::domain(format!(
            "log grid needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if n < 2 {
        return Err(Error::domain("log grid needs at least two points"));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => 10f64.powf(a + step * i as f64),
        })
        .collect())
}

/// Cholesky factor `L` (row-major, lower triangular) of a symmetric
/// positive-definite matrix.
pub fn cholesky(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(matrix.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            let s = matrix[i * n + j] - dot;
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::Generation {
                        method: "cholesky",
                        reason: format!("matrix not positive definite at pivot {i} ({s:e})"),
                    });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}
