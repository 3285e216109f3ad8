//! Regression kernels: OLS, random-intercept mixed models, VIF pruning.

mod design;
mod lmm;
mod ols;
mod vif;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use design::{DesignBuilder, DesignMatrix, INTERCEPT};
pub use lmm::{fit_random_intercept_lmm, fit_random_intercept_lmm_with, LmmOptions, MixedModelResult, ProfiledFit, RandomInterceptProblem};
pub use ols::{collinear_columns, fit_ols};
pub use vif::{stepwise_vif_prune, vif, PruneOutcome, Removal};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub terms: Vec<Coefficient>,
    pub residual_variance: f64,
    pub n: usize,
    pub log: Vec<String>,
}

impl RegressionResult {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.terms.iter().find(|c| c.term == term)
    }

    pub fn estimate(&self, term: &str) -> Option<f64> {
        self.coefficient(term).map(|c| c.estimate)
    }

    /// Regression table: term, estimate, std_error, statistic, p_value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["term", "estimate", "std_error", "statistic", "p_value"])?;
        for c in &self.terms {
            w.write_record([
                c.term.clone(),
                format!("{}", c.estimate),
                format!("{}", c.std_error),
                format!("{}", c.statistic),
                format!("{}", c.p_value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Proportional change implied by a coefficient on a log outcome.
pub fn percent_change(beta: f64) -> f64 {
    beta.exp_m1()
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_p_value(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pearson correlation; `None` if either input has zero variance or the
/// lengths differ or fewer than two points are given.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_change_values() {
        assert_eq!(percent_change(0.0), 0.0);
        assert!((percent_change(0.519) - 0.680).abs() < 1e-3);
        assert!((percent_change(-0.693) + 0.5).abs() < 1e-3);
        assert!((percent_change(-std::f64::consts::LN_2) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn p_values() {
        let p = normal_p_value(1.959963984540054);
        assert!((p - 0.05).abs() < 1e-10, "{p}");
        assert_eq!(normal_p_value(0.0), 1.0);
    }

    #[test]
    fn correlations() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
