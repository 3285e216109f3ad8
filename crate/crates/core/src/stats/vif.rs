use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::least_squares;
use super::DesignMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub step: usize,
    pub column: String,
    pub vif: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneOutcome {
    pub retained: Vec<String>,
    pub removals: Vec<Removal>,
}

fn r_squared(target: &DVector<f64>, regressors: &DMatrix<f64>) -> f64 {
    let mean = target.mean();
    let tss: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
    if tss == 0.0 {
        // A constant column is fully explained by the intercept.
        return 1.0;
    }
    match least_squares(regressors, target) {
        Some((beta, _)) => {
            let rss = (target - regressors * beta).norm_squared();
            if !rss.is_finite() {
                return 1.0;
            }
            (1.0 - rss / tss).clamp(0.0, 1.0)
        }
        None => 1.0,
    }
}

const PERFECT_FIT: f64 = 1e-10;

/// Variance inflation factor of each non-intercept column, in column order.
/// Perfectly collinear columns get `f64::INFINITY`.
pub fn vif(x: &DesignMatrix) -> Vec<(String, f64)> {
    let predictors = x.predictor_indices();
    let n = x.nrows();
    predictors
        .iter()
        .map(|&j| {
            let others: Vec<usize> = predictors.iter().copied().filter(|&k| k != j).collect();
            let mut regressors = DMatrix::from_element(n, others.len() + 1, 1.0);
            for (c, &k) in others.iter().enumerate() {
                regressors.set_column(c + 1, &x.data.column(k));
            }
            let target: DVector<f64> = x.data.column(j).into_owned();
            let r2 = r_squared(&target, &regressors);
            let value = if 1.0 - r2 <= PERFECT_FIT { f64::INFINITY } else { 1.0 / (1.0 - r2) };
            (x.names[j].clone(), value)
        })
        .collect()
}

/// Drops the highest-VIF column while any VIF exceeds `threshold`.
/// Ties go to the earlier column.
pub fn stepwise_vif_prune(x: &DesignMatrix, threshold: f64) -> PruneOutcome {
    let mut retained: Vec<String> = x.predictor_indices().into_iter().map(|j| x.names[j].clone()).collect();
    let mut removals = Vec::new();
    while retained.len() > 1 {
        let scores = vif(&x.select(&retained));
        let mut worst: Option<(usize, f64)> = None;
        for (i, (_, v)) in scores.iter().enumerate() {
            if worst.map_or(true, |(_, w)| *v > w) {
                worst = Some((i, *v));
            }
        }
        match worst {
            Some((i, v)) if v > threshold => {
                let column = retained.remove(i);
                removals.push(Removal { step: removals.len() + 1, column, vif: v });
            }
            _ => break,
        }
    }
    PruneOutcome { retained, removals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_columns_have_unit_vif() {
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let d = DesignMatrix::from_columns(&[("a", &a), ("b", &b)], true).unwrap();
        for (_, v) in vif(&d) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(stepwise_vif_prune(&d, 5.0).removals.is_empty());
    }

    #[test]
    fn duplicate_pair_loses_the_earlier_column() {
        let a = [1.0, 2.0, 3.0, 5.0, 8.0];
        let c = [2.0, -1.0, 0.0, 1.0, 3.0];
        let d = DesignMatrix::from_columns(&[("a", &a), ("b", &a), ("c", &c)], true).unwrap();
        let scores = vif(&d);
        assert!(scores[0].1.is_infinite() && scores[1].1.is_infinite());
        let out = stepwise_vif_prune(&d, 5.0);
        assert_eq!(out.removals.len(), 1);
        assert_eq!(out.removals[0].column, "a");
        assert_eq!(out.retained, ["b", "c"]);
    }
}
