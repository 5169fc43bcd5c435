//! Small statistical helpers for Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Upper tail `P(χ²_df ≥ stat)`.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df).expect("df > 0").cdf(stat)
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Goodness-of-fit of observed counts against expected probabilities.
///
/// Cells are pooled from the right until every expected count is at least
/// `min_expected`; the probability mass not covered by `probs` is added as a
/// final cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let nf = total as f64;
    let mut obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    let mut exp: Vec<f64> = probs.iter().map(|p| p * nf).collect();
    let covered: f64 = probs.iter().sum();
    let rest = (1.0 - covered).max(0.0) * nf;
    if rest > 0.0 {
        obs.push(0.0);
        exp.push(rest);
    }
    let (obs, exp) = pool_cells(obs, exp, min_expected);
    let statistic = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum::<f64>();
    let df = (obs.len() as f64 - 1.0).max(0.0);
    ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    }
}

fn pool_cells(obs: Vec<f64>, exp: Vec<f64>, min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let mut po = Vec::new();
    let mut pe = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (o, e) in obs.into_iter().zip(exp) {
        acc_o += o;
        acc_e += e;
        if acc_e >= min_expected {
            po.push(acc_o);
            pe.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        if let (Some(lo), Some(le)) = (po.last_mut(), pe.last_mut()) {
            *lo += acc_o;
            *le += acc_e;
        } else {
            po.push(acc_o);
            pe.push(acc_e);
        }
    }
    (po, pe)
}

/// Independence test on an `r × c` contingency table of counts.
pub fn chi_square_independence(table: &[Vec<u64>]) -> ChiSquare {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let ncols = table.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..ncols)
        .map(|j| table.iter().map(|r| r[j] as f64).sum())
        .collect();
    let total: f64 = rows.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / total;
            if e > 0.0 {
                statistic += (o as f64 - e).powi(2) / e;
            }
        }
    }
    let nz_rows = rows.iter().filter(|&&r| r > 0.0).count() as f64;
    let nz_cols = cols.iter().filter(|&&c| c > 0.0).count() as f64;
    let df = ((nz_rows - 1.0) * (nz_cols - 1.0)).max(0.0);
    ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Standard error of a binomial proportion estimate.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
