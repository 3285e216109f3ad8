//! Random-intercept linear mixed model fit by maximum likelihood.
//!
//! Model: `y = Xβ + u[g] + ε`, `u ~ N(0, σ_u²)`, `ε ~ N(0, σ²)`.
//! With `λ = σ_u²/σ²` the marginal covariance is `σ²V(λ)` where each group
//! block is `I + λ11ᵀ`. Its inverse is `I - λ/(1+λn_g) 11ᵀ` and its log
//! determinant `ln(1+λn_g)`, so β and σ² have closed forms for fixed λ and
//! the likelihood reduces to a scalar function of λ.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::collinear_columns;
use super::{normal_p_value, Coefficient, DesignMatrix, RegressionResult};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Final bracket width on log λ.
    pub tolerance: f64,
    pub grid_points: usize,
    pub max_iterations: usize,
}

impl Default for LmmOptions {
    fn default() -> Self {
        Self { lambda_min: 1e-8, lambda_max: 1e3, tolerance: 1e-8, grid_points: 41, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedModelResult {
    /// Fixed effects with Wald z statistics; `residual_variance` is σ².
    pub fixed: RegressionResult,
    pub group_variable: String,
    pub n_groups: usize,
    pub random_intercept_variance: f64,
    pub variance_ratio: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl MixedModelResult {
    pub fn estimate(&self, term: &str) -> Option<f64> {
        self.fixed.estimate(term)
    }

    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.fixed.coefficient(term)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.fixed.write_csv(writer)
    }
}

#[derive(Debug, Clone)]
pub struct ProfiledFit {
    pub lambda: f64,
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub log_likelihood: f64,
    /// `XᵀV⁻¹X` at this λ.
    pub xtvx: DMatrix<f64>,
}

struct GroupStats {
    n: f64,
    /// Column sums of X within the group.
    x_sum: DVector<f64>,
    y_sum: f64,
}

/// Sufficient statistics for profiling the likelihood over λ.
pub struct RandomInterceptProblem {
    names: Vec<String>,
    n: usize,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    groups: Vec<GroupStats>,
}

impl RandomInterceptProblem {
    pub fn new<S: AsRef<str>>(x: &DesignMatrix, y: &[f64], groups: &[S]) -> Result<Self> {
        let (n, p) = (x.nrows(), x.ncols());
        if y.len() != n || groups.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{n} design rows, {} responses, {} group labels",
                y.len(),
                groups.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite response".into()));
        }
        if n <= p {
            return Err(Error::InsufficientData(format!("{n} rows for {p} columns")));
        }
        let collinear = collinear_columns(x);
        if !collinear.is_empty() {
            return Err(Error::RankDeficient(collinear));
        }

        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut stats: Vec<GroupStats> = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            let k = *index.entry(g.as_ref()).or_insert_with(|| {
                stats.push(GroupStats { n: 0.0, x_sum: DVector::zeros(p), y_sum: 0.0 });
                stats.len() - 1
            });
            let s = &mut stats[k];
            s.n += 1.0;
            s.x_sum += x.data.row(i).transpose();
            s.y_sum += y[i];
        }
        if stats.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} group(s); the random intercept needs at least 2",
                stats.len()
            )));
        }

        let yv = DVector::from_column_slice(y);
        Ok(Self {
            names: x.names.clone(),
            n,
            xtx: x.data.transpose() * &x.data,
            xty: x.data.transpose() * &yv,
            yty: yv.norm_squared(),
            groups: stats,
        })
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// GLS solution and profiled log-likelihood at a fixed variance ratio.
    pub fn profile(&self, lambda: f64) -> Result<ProfiledFit> {
        let mut xtvx = self.xtx.clone();
        let mut xtvy = self.xty.clone();
        let mut ytvy = self.yty;
        let mut log_det = 0.0;
        for g in &self.groups {
            let w = lambda / (1.0 + lambda * g.n);
            xtvx.ger(-w, &g.x_sum, &g.x_sum, 1.0);
            xtvy.axpy(-w * g.y_sum, &g.x_sum, 1.0);
            ytvy -= w * g.y_sum * g.y_sum;
            log_det += (lambda * g.n).ln_1p();
        }
        let chol = xtvx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularDesign(format!("XᵀV⁻¹X not positive definite at λ={lambda}")))?;
        let beta = chol.solve(&xtvy);
        let rss = (ytvy - beta.dot(&xtvy)).max(f64::MIN_POSITIVE);
        let n = self.n as f64;
        let sigma2 = rss / n;
        let log_likelihood = -0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0) - 0.5 * log_det;
        Ok(ProfiledFit { lambda, beta, sigma2, log_likelihood, xtvx })
    }

    pub fn fit(&self, options: &LmmOptions) -> Result<MixedModelResult> {
        let lo = options.lambda_min.ln();
        let hi = options.lambda_max.ln();
        let mut warnings = Vec::new();

        let eval = |t: f64| -> Result<f64> { Ok(self.profile(t.exp())?.log_likelihood) };

        let singletons = self.groups.iter().all(|g| g.n == 1.0);
        let (best_t, converged) = if singletons {
            warnings.push(
                "every group has one observation: random-intercept and residual variance are not separately \
                 identifiable; reporting the lower-boundary solution"
                    .to_string(),
            );
            (lo, true)
        } else {
            // Coarse grid, then golden-section refinement around the best grid point.
            let k = options.grid_points.max(3);
            let grid: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
            let mut best = 0;
            let mut best_ll = f64::NEG_INFINITY;
            for (i, &t) in grid.iter().enumerate() {
                let ll = eval(t)?;
                if ll > best_ll {
                    best_ll = ll;
                    best = i;
                }
            }
            let mut a = grid[best.saturating_sub(1)];
            let mut b = grid[(best + 1).min(k - 1)];
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            let mut c = b - ratio * (b - a);
            let mut d = a + ratio * (b - a);
            let mut fc = eval(c)?;
            let mut fd = eval(d)?;
            let mut iterations = 0;
            while (b - a) > options.tolerance && iterations < options.max_iterations {
                iterations += 1;
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - ratio * (b - a);
                    fc = eval(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + ratio * (b - a);
                    fd = eval(d)?;
                }
            }
            let converged = (b - a) <= options.tolerance;
            // Compare the refined interior point against the bracket ends.
            let mut t_best = if fc >= fd { c } else { d };
            let mut f_best = fc.max(fd);
            for t in [a, b, grid[best]] {
                let f = eval(t)?;
                if f > f_best {
                    f_best = f;
                    t_best = t;
                }
            }
            (t_best, converged)
        };

        if !singletons {
            if best_t - lo <= 1e-6 {
                warnings.push("variance ratio at the lower bound: random-intercept variance is effectively zero".into());
            } else if hi - best_t <= 1e-6 {
                warnings.push("variance ratio at the upper bound".into());
            }
        }
        if !converged {
            warnings.push(format!("scalar search did not converge in {} iterations", options.max_iterations));
        }

        let fit = self.profile(best_t.exp())?;
        let cov = fit
            .xtvx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularDesign("XᵀV⁻¹X not invertible at optimum".into()))?
            .inverse()
            * fit.sigma2;
        let terms = self
            .names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let se = cov[(j, j)].max(0.0).sqrt();
                let z = fit.beta[j] / se;
                Coefficient { term: name.clone(), estimate: fit.beta[j], std_error: se, statistic: z, p_value: normal_p_value(z) }
            })
            .collect();

        Ok(MixedModelResult {
            fixed: RegressionResult {
                terms,
                residual_variance: fit.sigma2,
                n: self.n,
                log: vec![format!(
                    "lmm (ML, profiled): n={}, groups={}, lambda={:.6e}",
                    self.n,
                    self.groups.len(),
                    fit.lambda
                )],
            },
            group_variable: String::new(),
            n_groups: self.groups.len(),
            random_intercept_variance: fit.lambda * fit.sigma2,
            variance_ratio: fit.lambda,
            log_likelihood: fit.log_likelihood,
            converged,
            warnings,
        })
    }
}

pub fn fit_random_intercept_lmm<S: AsRef<str>>(x: &DesignMatrix, y: &[f64], groups: &[S]) -> Result<MixedModelResult> {
    fit_random_intercept_lmm_with(x, y, groups, "group", &LmmOptions::default())
}

pub fn fit_random_intercept_lmm_with<S: AsRef<str>>(
    x: &DesignMatrix,
    y: &[f64],
    groups: &[S],
    group_variable: &str,
    options: &LmmOptions,
) -> Result<MixedModelResult> {
    let mut result = RandomInterceptProblem::new(x, y, groups)?.fit(options)?;
    result.group_variable = group_variable.to_string();
    Ok(result)
}
