//! Krippendorff's alpha per statement and Cronbach's alpha per statement group.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::aggregate::reverse;
use crate::catalog::{DimensionId, StatementCatalog};
use crate::corpus::AnnotationRecord;
use crate::{Error, Result};

/// Units (rows) by raters (columns) of 1-5 ratings; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReliabilityMatrix {
    pub units: Vec<String>,
    pub raters: Vec<String>,
    pub values: Vec<Vec<Option<u8>>>,
}

impl ReliabilityMatrix {
    /// Builds a matrix with generated unit and rater labels.
    pub fn from_grid(values: Vec<Vec<Option<u8>>>) -> Self {
        let raters = values.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            units: (0..values.len()).map(|i| format!("u{i}")).collect(),
            raters: (0..raters).map(|j| format!("r{j}")).collect(),
            values,
        }
    }

    /// Number of values in units holding at least two ratings.
    pub fn pairable_count(&self) -> usize {
        self.values
            .iter()
            .map(|row| row.iter().flatten().count())
            .filter(|&m| m >= 2)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Interval,
    Ordinal,
}

const LEVELS: usize = 5;

/// Krippendorff's alpha via the coincidence matrix.
///
/// Returns `Ok(None)` when expected disagreement is zero (all pairable values
/// identical), where alpha is undefined.
pub fn krippendorff_alpha(matrix: &ReliabilityMatrix, metric: Metric) -> Result<Option<f64>> {
    let mut coincidence = [[0.0f64; LEVELS]; LEVELS];
    for row in &matrix.values {
        let mut counts = [0usize; LEVELS];
        for v in row.iter().flatten() {
            if !(1..=5).contains(v) {
                return Err(Error::InvalidParameter(format!("rating {v} outside 1-5")));
            }
            counts[usize::from(*v) - 1] += 1;
        }
        let m: usize = counts.iter().sum();
        if m < 2 {
            continue;
        }
        let scale = 1.0 / (m as f64 - 1.0);
        for c in 0..LEVELS {
            for k in 0..LEVELS {
                let pairs = if c == k { counts[c] * counts[c].saturating_sub(1) } else { counts[c] * counts[k] };
                coincidence[c][k] += pairs as f64 * scale;
            }
        }
    }

    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    if n == 0.0 {
        return Err(Error::NoPairableValues);
    }

    let delta = |c: usize, k: usize| -> f64 {
        match metric {
            Metric::Interval => (c as f64 - k as f64).powi(2),
            Metric::Ordinal => {
                let (lo, hi) = (c.min(k), c.max(k));
                let between: f64 = marginals[lo..=hi].iter().sum();
                (between - (marginals[lo] + marginals[hi]) / 2.0).powi(2)
            }
        }
    };

    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..LEVELS {
        for k in 0..LEVELS {
            let d = delta(c, k);
            observed += coincidence[c][k] * d;
            expected += marginals[c] * marginals[k] * d;
        }
    }
    observed /= n;
    expected /= n * (n - 1.0);
    if expected == 0.0 {
        return Ok(None);
    }
    Ok(Some(1.0 - observed / expected))
}

fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's alpha over a complete respondents x items grid.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 respondents and 2 items, got {n}x{k}")));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParameter("item grid is ragged".into()));
    }
    let item_variance: f64 = (0..k).map(|j| sample_variance(rows.iter().map(move |r| r[j]))).sum();
    let total_variance = sample_variance(rows.iter().map(|r| r.iter().sum::<f64>()));
    if total_variance == 0.0 {
        return Err(Error::DegenerateVariance("total score variance is zero".into()));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_variance / total_variance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementReliability {
    pub statement_id: String,
    pub dimension: DimensionId,
    /// `None` when undefined or when no unit has two ratings.
    pub k_alpha: Option<f64>,
    pub n_units: usize,
    pub n_pairable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReliability {
    pub dimension: DimensionId,
    pub c_alpha: Option<f64>,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub metric: Metric,
    pub statements: Vec<StatementReliability>,
    pub groups: Vec<GroupReliability>,
    pub n_units: usize,
    pub n_raters: usize,
}

impl ReliabilityReport {
    pub fn mean_k_alpha(&self) -> Option<f64> {
        let defined: Vec<f64> = self.statements.iter().filter_map(|s| s.k_alpha).collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }

    /// One row per statement: statement_id, group, k_alpha, c_alpha, n_units, n_pairable.
    /// `c_alpha` is filled on rows of multi-statement groups.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let groups: BTreeMap<DimensionId, &GroupReliability> = self.groups.iter().map(|g| (g.dimension, g)).collect();
        let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["statement_id", "group", "k_alpha", "c_alpha", "n_units", "n_pairable"])?;
        for s in &self.statements {
            w.write_record([
                s.statement_id.clone(),
                s.dimension.name().to_string(),
                fmt(s.k_alpha),
                fmt(groups.get(&s.dimension).and_then(|g| g.c_alpha)),
                s.n_units.to_string(),
                s.n_pairable.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn reliability_report(records: &[AnnotationRecord], catalog: &StatementCatalog, metric: Metric) -> Result<ReliabilityReport> {
    let mut units: Vec<&str> = records.iter().map(|r| r.doc_id.as_str()).collect();
    units.sort_unstable();
    units.dedup();
    let mut raters: Vec<&str> = records.iter().map(|r| r.annotator_id.as_str()).collect();
    raters.sort_unstable();
    raters.dedup();
    let unit_index: BTreeMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let rater_index: BTreeMap<&str, usize> = raters.iter().enumerate().map(|(i, r)| (*r, i)).collect();

    let mut statements = Vec::with_capacity(catalog.len());
    for s in &catalog.statements {
        let mut grid = vec![vec![None; raters.len()]; units.len()];
        for r in records {
            if let Some(&v) = r.ratings.get(&s.id) {
                grid[unit_index[r.doc_id.as_str()]][rater_index[r.annotator_id.as_str()]] = Some(v);
            }
        }
        let matrix = ReliabilityMatrix {
            units: units.iter().map(|u| u.to_string()).collect(),
            raters: raters.iter().map(|r| r.to_string()).collect(),
            values: grid,
        };
        let k_alpha = match krippendorff_alpha(&matrix, metric) {
            Ok(v) => v,
            Err(Error::NoPairableValues) => None,
            Err(e) => return Err(e),
        };
        statements.push(StatementReliability {
            statement_id: s.id.clone(),
            dimension: s.dimension,
            k_alpha,
            n_units: matrix.values.iter().filter(|row| row.iter().any(Option::is_some)).count(),
            n_pairable: matrix.pairable_count(),
        });
    }

    let mut groups = Vec::new();
    for d in catalog.multi_statement_dimensions() {
        let items: Vec<_> = catalog.statements_of(d).collect();
        let rows: Vec<Vec<f64>> = records
            .iter()
            .filter_map(|r| {
                items
                    .iter()
                    .map(|s| {
                        r.ratings.get(&s.id).map(|&v| {
                            let v = f64::from(v);
                            if s.reverse_coded {
                                reverse(v)
                            } else {
                                v
                            }
                        })
                    })
                    .collect::<Option<Vec<f64>>>()
            })
            .collect();
        let c_alpha = cronbach_alpha(&rows).ok();
        groups.push(GroupReliability { dimension: d, c_alpha, n_rows: rows.len() });
    }

    Ok(ReliabilityReport { metric, statements, groups, n_units: units.len(), n_raters: raters.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&[Option<u8>]]) -> ReliabilityMatrix {
        ReliabilityMatrix::from_grid(rows.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn perfect_agreement_is_one() {
        let m = grid(&[&[Some(1), Some(1)], &[Some(5), Some(5)]]);
        assert_eq!(krippendorff_alpha(&m, Metric::Interval).unwrap(), Some(1.0));
        assert_eq!(krippendorff_alpha(&m, Metric::Ordinal).unwrap(), Some(1.0));
    }

    #[test]
    fn constant_data_undefined() {
        let m = grid(&[&[Some(3), Some(3)], &[Some(3), Some(3), Some(3)]]);
        assert_eq!(krippendorff_alpha(&m, Metric::Interval).unwrap(), None);
    }

    #[test]
    fn no_pairable_values() {
        let m = grid(&[&[Some(3), None], &[None, Some(2)]]);
        assert!(matches!(krippendorff_alpha(&m, Metric::Interval), Err(Error::NoPairableValues)));
    }

    #[test]
    fn cronbach_identical_items() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        assert!((cronbach_alpha(&rows).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cronbach_uncorrelated_equal_variance() {
        // x deviations (-1.5,-.5,.5,1.5), y deviations (.5,-1.5,1.5,-.5): covariance 0
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 1.0, 4.0, 2.0];
        let rows: Vec<Vec<f64>> = x.iter().zip(y).map(|(&a, b)| vec![a, b]).collect();
        assert!(cronbach_alpha(&rows).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cronbach_degenerate() {
        let rows = vec![vec![1.0, 5.0], vec![5.0, 1.0]];
        assert!(matches!(cronbach_alpha(&rows), Err(Error::DegenerateVariance(_))));
        assert!(cronbach_alpha(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn csv_has_expected_columns() {
        let report = ReliabilityReport {
            metric: Metric::Interval,
            statements: vec![StatementReliability {
                statement_id: "share_direct".into(),
                dimension: DimensionId::Sharing,
                k_alpha: Some(0.5),
                n_units: 3,
                n_pairable: 6,
            }],
            groups: vec![GroupReliability { dimension: DimensionId::Sharing, c_alpha: Some(0.8), n_rows: 6 }],
            n_units: 3,
            n_raters: 2,
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "statement_id,group,k_alpha,c_alpha,n_units,n_pairable\nshare_direct,Sharing,0.5,0.8,3,6\n"
        );
    }
}
