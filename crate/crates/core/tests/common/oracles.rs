//! Independent numeric oracles.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use relgraph::learn::{train_regression, FeatureVector, SgdConfig};

/// Least-squares coefficients of `y ~ X` via the SVD.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let (n, d) = (x.len(), x[0].len());
    let a = DMatrix::from_fn(n, d, |i, j| x[i][j]);
    let b = DVector::from_column_slice(y);
    a.svd(true, true).solve(&b, 1e-12).unwrap().iter().copied().collect()
}

/// Noiseless linear data with an intercept. Column 0 of the returned
/// design is the constant 1, matching the bias feature's index.
pub fn linear_data(seed: u64, d: usize, n: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..=d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![1.0];
        row.extend((0..d).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)));
        ys.push(row.iter().zip(&w).map(|(a, b)| a * b).sum());
        xs.push(row);
    }
    (xs, ys, w)
}

/// Largest absolute difference between default-config SGD weights and
/// the least-squares solution.
pub fn sgd_vs_least_squares(seed: u64, d: usize) -> f64 {
    let (xs, ys, _) = linear_data(seed, d, 200);
    let examples: Vec<(FeatureVector, f64)> = xs
        .iter()
        .zip(&ys)
        .map(|(row, &y)| (FeatureVector::from_pairs(row.iter().copied().enumerate()), y))
        .collect();
    let w = train_regression(&examples, d + 1, &SgdConfig::default()).unwrap();
    let ls = least_squares(&xs, &ys);
    w.iter().zip(&ls).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Central-difference gradient of `f` at `w`.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    let mut w = w.to_vec();
    (0..w.len())
        .map(|i| {
            let orig = w[i];
            w[i] = orig + h;
            let up = f(&w);
            w[i] = orig - h;
            let down = f(&w);
            w[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error ‖a − b‖∞ / max(1, ‖b‖∞).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(1.0, f64::max);
    diff / scale
}

pub fn ssr(y: &[f64], p: &[f64]) -> f64 {
    y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Pearson correlation from raw sums, a different formulation from the
/// centered one under test.
pub fn pearson_from_sums(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}
