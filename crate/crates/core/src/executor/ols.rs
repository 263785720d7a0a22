//! Ordinary least squares through the normal equations.

use std::collections::BTreeMap;

use super::dataset::{ModelArtifact, LEAST_SQUARES};
use crate::provenance::stable_sum;

/// Diagonal regularizer added to the feature block of the normal matrix.
pub const RIDGE: f64 = 1e-9;

fn sum(mut values: Vec<f64>) -> f64 {
    stable_sum(&mut values)
}

/// Root mean squared error of `model` on `(x, y)` samples.
pub fn rmse(model: &ModelArtifact, samples: &[(Vec<f64>, f64)]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sq: Vec<f64> = samples.iter().map(|(x, y)| (model.predict(x) - y).powi(2)).collect();
    (sum(sq) / samples.len() as f64).sqrt()
}

/// Fits `y = intercept + Σ coef·x`. Samples are sorted first and every sum is
/// pairwise over sorted terms, so the result does not depend on row order.
pub fn fit(features: &[String], target: &str, mut samples: Vec<(Vec<f64>, f64)>) -> ModelArtifact {
    samples.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.total_cmp(&b.1))
    });
    let p = features.len();
    let n = samples.len();
    let mut model = ModelArtifact {
        gid: None,
        kind: LEAST_SQUARES.into(),
        coefficients: vec![0.0; p],
        intercept: 0.0,
        feature_names: features.to_vec(),
        target_name: target.to_string(),
        training_metrics: BTreeMap::new(),
    };
    if n > 0 {
        // Design column 0 is the intercept.
        let col = |s: &(Vec<f64>, f64), j: usize| if j == 0 { 1.0 } else { s.0[j - 1] };
        let d = p + 1;
        let mut a = vec![vec![0.0; d + 1]; d];
        for i in 0..d {
            for j in i..d {
                let v = sum(samples.iter().map(|s| col(s, i) * col(s, j)).collect());
                a[i][j] = v;
                a[j][i] = v;
            }
            a[i][d] = sum(samples.iter().map(|s| col(s, i) * s.1).collect());
            if i > 0 {
                a[i][i] += RIDGE;
            }
        }
        let beta = solve(a);
        model.intercept = beta[0];
        model.coefficients = beta[1..].to_vec();
    }
    let err = rmse(&model, &samples);
    model.training_metrics.insert("rmse".into(), err);
    model.training_metrics.insert("n_rows".into(), n as f64);
    model
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
/// Zero pivots leave the corresponding coefficient at zero.
fn solve(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let d = a.len();
    for c in 0..d {
        let pivot = (c..d).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, pivot);
        if a[c][c] == 0.0 {
            continue;
        }
        for r in 0..d {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..=d {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    (0..d).map(|i| if a[i][i] == 0.0 { 0.0 } else { a[i][d] / a[i][i] }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<(Vec<f64>, f64)> {
        (0..n).map(|i| (vec![i as f64], 2.0 * i as f64 + 1.0)).collect()
    }

    #[test]
    fn recovers_exact_line() {
        let m = fit(&["x".into()], "y", line(100));
        assert!((m.coefficients[0] - 2.0).abs() <= 1e-9);
        assert!((m.intercept - 1.0).abs() <= 1e-9);
        assert!(m.training_metrics["rmse"] <= 1e-9);
        assert_eq!(m.training_metrics["n_rows"], 100.0);
    }

    #[test]
    fn collinear_through_origin() {
        let samples = (1..20).map(|i| (vec![i as f64], 2.0 * i as f64)).collect();
        let m = fit(&["x".into()], "y", samples);
        assert!((m.coefficients[0] - 2.0).abs() <= 1e-9);
        assert!(m.training_metrics["rmse"] <= 1e-9);
    }

    #[test]
    fn duplicated_feature_stays_finite() {
        let samples = (0..30).map(|i| (vec![i as f64, i as f64], 3.0 * i as f64)).collect();
        let m = fit(&["a".into(), "b".into()], "y", samples);
        assert!(m.coefficients.iter().all(|c| c.is_finite()));
        assert!((m.coefficients[0] + m.coefficients[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn empty_input_gives_zero_model() {
        let m = fit(&["x".into()], "y", vec![]);
        assert_eq!(m.coefficients, vec![0.0]);
        assert_eq!(m.training_metrics["rmse"], 0.0);
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut samples: Vec<(Vec<f64>, f64)> =
            (0..200).map(|i| (vec![(i * 37 % 101) as f64 * 0.13, (i % 7) as f64], (i * 11 % 23) as f64 * 0.7)).collect();
        let a = fit(&["p".into(), "q".into()], "y", samples.clone());
        samples.reverse();
        samples.rotate_left(17);
        let b = fit(&["p".into(), "q".into()], "y", samples);
        assert_eq!(a, b);
    }
}
