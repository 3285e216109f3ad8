use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::{Error, Result};

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub data: DMatrix<f64>,
    /// True when column 0 is an all-ones intercept named [`INTERCEPT`].
    pub intercept: bool,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, data: DMatrix<f64>, intercept: bool) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(Error::InvalidParameter(format!(
                "{} column names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("design matrix has non-finite entries".into()));
        }
        Ok(Self { names, data, intercept })
    }

    /// Columns given as (name, values); an intercept is prepended when asked.
    pub fn from_columns(columns: &[(&str, &[f64])], intercept: bool) -> Result<Self> {
        let mut b = DesignBuilder::new(columns.first().map_or(0, |c| c.1.len()));
        if intercept {
            b = b.intercept();
        }
        for (name, values) in columns {
            b = b.numeric(name, values.to_vec());
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Columns other than the intercept, in order.
    pub fn predictor_indices(&self) -> Vec<usize> {
        (0..self.ncols()).filter(|&j| !(self.intercept && j == 0)).collect()
    }

    /// Keeps the intercept (if any) and the named columns, in original order.
    pub fn select(&self, keep: &[String]) -> DesignMatrix {
        let idx: Vec<usize> = (0..self.ncols())
            .filter(|&j| (self.intercept && j == 0) || keep.contains(&self.names[j]))
            .collect();
        DesignMatrix {
            names: idx.iter().map(|&j| self.names[j].clone()).collect(),
            data: self.data.select_columns(idx.iter()),
            intercept: self.intercept,
        }
    }
}

/// Column-by-column design construction with reference-coded categoricals.
#[derive(Debug, Clone)]
pub struct DesignBuilder {
    n: usize,
    intercept: bool,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    log: Vec<String>,
}

impl DesignBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, intercept: false, names: Vec::new(), columns: Vec::new(), log: Vec::new() }
    }

    pub fn intercept(mut self) -> Self {
        self.intercept = true;
        self
    }

    pub fn numeric(mut self, name: &str, values: Vec<f64>) -> Self {
        self.names.push(name.to_string());
        self.columns.push(values);
        self
    }

    /// Indicator columns `name[level]` for every level except the reference,
    /// which is the most frequent level (ties: lexicographically first).
    pub fn categorical<S: AsRef<str>>(mut self, name: &str, levels: &[S]) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in levels {
            *counts.entry(l.as_ref()).or_default() += 1;
        }
        let reference = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(l, _)| l.to_string());
        if let Some(r) = &reference {
            self.log.push(format!("{name}: reference level `{r}`"));
        }
        for level in counts.keys() {
            if Some(level.to_string()) == reference {
                continue;
            }
            self.names.push(format!("{name}[{level}]"));
            self.columns.push(levels.iter().map(|l| f64::from(u8::from(l.as_ref() == *level))).collect());
        }
        self
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    pub fn build(self) -> Result<DesignMatrix> {
        if let Some((name, col)) = self.names.iter().zip(&self.columns).find(|(_, c)| c.len() != self.n) {
            return Err(Error::InvalidParameter(format!("column `{name}` has {} rows, expected {}", col.len(), self.n)));
        }
        let mut names = Vec::with_capacity(self.columns.len() + 1);
        let p = self.columns.len() + usize::from(self.intercept);
        let mut data = DMatrix::zeros(self.n, p);
        let mut j = 0;
        if self.intercept {
            names.push(INTERCEPT.to_string());
            data.column_mut(0).fill(1.0);
            j = 1;
        }
        for (name, col) in self.names.into_iter().zip(self.columns) {
            names.push(name);
            for (i, v) in col.into_iter().enumerate() {
                data[(i, j)] = v;
            }
            j += 1;
        }
        DesignMatrix::new(names, data, self.intercept)
    }
}
