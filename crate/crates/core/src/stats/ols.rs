use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{Coefficient, DesignMatrix, RegressionResult};
use crate::{Error, Result};

const COLLINEAR_TOL: f64 = 1e-9;

/// Columns that are (numerically) linear combinations of earlier columns.
pub fn collinear_columns(x: &DesignMatrix) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..x.ncols() {
        let col: DVector<f64> = x.data.column(j).into_owned();
        let norm = col.norm();
        let mut v = col;
        // Two passes of modified Gram-Schmidt keep the residual honest.
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let rest = v.norm();
        if norm == 0.0 || rest <= COLLINEAR_TOL * norm {
            out.push(x.names[j].clone());
        } else {
            basis.push(v / rest);
        }
    }
    out
}

/// Least-squares coefficients and `(XᵀX)⁻¹` via QR.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let p = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty)?;
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(p, p))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Some((beta, xtx_inv))
}

pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<RegressionResult> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::InvalidParameter(format!("{} responses for {n} rows", y.len())));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} rows for {p} columns")));
    }
    let collinear = collinear_columns(x);
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }
    let yv = DVector::from_column_slice(y);
    let (beta, xtx_inv) =
        least_squares(&x.data, &yv).ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let resid = &yv - &x.data * &beta;
    let df = (n - p) as f64;
    let sigma2 = resid.norm_squared() / df;
    let t_dist = StudentsT::new(0.0, 1.0, df).ok();

    let terms = (0..p)
        .map(|j| {
            let se = (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt();
            let t = beta[j] / se;
            let p_value = match (&t_dist, t.is_finite()) {
                (Some(d), true) => 2.0 * (1.0 - d.cdf(t.abs())),
                (_, false) if t.is_infinite() => 0.0,
                _ => f64::NAN,
            };
            Coefficient { term: x.names[j].clone(), estimate: beta[j], std_error: se, statistic: t, p_value }
        })
        .collect();

    Ok(RegressionResult { terms, residual_variance: sigma2, n, log: vec![format!("ols: n={n}, p={p}")] })
}
