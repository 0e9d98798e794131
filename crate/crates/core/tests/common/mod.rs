#![allow(dead_code)]

use wkde::kernels::Kernel;
use wkde::poly::PiecewisePoly;

/// `n^-1 sum w_i K_h(x - X_i)` by a plain loop.
pub fn naive_single(k: &Kernel<f64>, h: f64, data: &[f64], weights: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (&xi, &wi) in data.iter().zip(weights) {
        acc += wi * k.eval((x - xi) / h) / h;
    }
    acc / data.len() as f64
}

/// `n^-1 sum w_i P(x - X_i)` by a plain loop.
pub fn naive_poly(p: &PiecewisePoly<f64>, data: &[f64], weights: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (&xi, &wi) in data.iter().zip(weights) {
        acc += wi * p.eval(x - xi);
    }
    acc / data.len() as f64
}

/// Pair kernels for every `(i, j)` of a grid.
pub fn pair_table(k: &Kernel<f64>, grid: &[f64]) -> Vec<Vec<PiecewisePoly<f64>>> {
    grid.iter()
        .map(|&h| grid.iter().map(|&hp| k.pair(h, hp).unwrap()).collect())
        .collect()
}

/// Comparison rule written out directly: returns (index, criterion).
/// Ties go to the larger bandwidth.
pub fn brute_select(grid: &[f64], single: &[f64], pair: &[Vec<f64>], pen: &[f64]) -> (usize, Vec<f64>) {
    let m = grid.len();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            d[i][j] = (pair[i][j] - single[j]).powi(2);
        }
    }
    brute_select_sq(grid, &d, pen)
}

/// Same rule from precomputed squared discrepancies `d[i][j]`.
pub fn brute_select_sq(grid: &[f64], d: &[Vec<f64>], pen: &[f64]) -> (usize, Vec<f64>) {
    let m = grid.len();
    let mut crit = vec![0.0; m];
    for i in 0..m {
        let mut a: f64 = 0.0;
        for j in 0..m {
            a = a.max(d[i][j] - pen[j]);
        }
        crit[i] = a + pen[i];
    }
    let mut best = 0;
    for i in 0..m {
        if crit[i] < crit[best] || (crit[i] == crit[best] && grid[i] > grid[best]) {
            best = i;
        }
    }
    (best, crit)
}

pub fn unit_weights(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Kolmogorov distance between a sample and a continuous cdf.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let c = cdf(x);
        d = d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs());
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS test.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
