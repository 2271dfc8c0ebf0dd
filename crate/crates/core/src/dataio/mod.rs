//! Datasets, their on-disk formats, and tour files.

mod columnar;
mod csv_input;
mod standardize;
mod tourfile;

pub use columnar::{load_columnar, read_columnar, save_columnar, write_columnar, COLUMNAR_MAGIC, COLUMNAR_VERSION};
pub use csv_input::{load_csv, read_csv, CsvOptions, CsvReport};
pub use standardize::{standardize, ColumnTransform, StandardizeMode, StandardizeReport};
pub use tourfile::{
    load_tour, read_tour, save_tour, write_tour, KeyframeRecord, Preprocess, TourFile, TourLoadReport, LOAD_DRIFT_LIMIT,
    TOURFILE_VERSION,
};

use std::collections::HashSet;

use crate::error::{Result, TourError};

/// A column that is carried alongside the data but not embedded.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelColumn {
    Categorical {
        name: String,
        codes: Vec<u16>,
        categories: Vec<String>,
    },
    Continuous {
        name: String,
        values: Vec<f32>,
    },
}

impl LabelColumn {
    pub fn name(&self) -> &str {
        match self {
            LabelColumn::Categorical { name, .. } | LabelColumn::Continuous { name, .. } => name,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LabelColumn::Categorical { codes, .. } => codes.len(),
            LabelColumn::Continuous { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Text rendering of row `i`, used by CSV exports.
    pub fn display(&self, i: usize) -> String {
        match self {
            LabelColumn::Categorical {
                codes, categories, ..
            } => categories
                .get(codes[i] as usize)
                .cloned()
                .unwrap_or_default(),
            LabelColumn::Continuous { values, .. } => values[i].to_string(),
        }
    }

    fn select_rows(&self, keep: &[usize]) -> LabelColumn {
        match self {
            LabelColumn::Categorical {
                name,
                codes,
                categories,
            } => LabelColumn::Categorical {
                name: name.clone(),
                codes: keep.iter().map(|&i| codes[i]).collect(),
                categories: categories.clone(),
            },
            LabelColumn::Continuous { name, values } => LabelColumn::Continuous {
                name: name.clone(),
                values: keep.iter().map(|&i| values[i]).collect(),
            },
        }
    }
}

/// An N×p numeric matrix stored column-major in `f32`, plus label columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    columns: Vec<Vec<f32>>,
    dim_names: Vec<String>,
    labels: Vec<LabelColumn>,
}

impl Dataset {
    pub fn new(columns: Vec<Vec<f32>>, dim_names: Vec<String>, labels: Vec<LabelColumn>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if dim_names.len() != columns.len() {
            return Err(TourError::LengthMismatch(format!(
                "{} columns but {} names",
                columns.len(),
                dim_names.len()
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != n_rows) {
            return Err(TourError::LengthMismatch(format!(
                "column of length {} in a dataset of {n_rows} rows",
                c.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| l.len() != n_rows) {
            return Err(TourError::LengthMismatch(format!(
                "label column '{}' has {} rows, expected {n_rows}",
                l.name(),
                l.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in dim_names.iter().map(String::as_str).chain(labels.iter().map(|l| l.name())) {
            if !seen.insert(name) {
                return Err(TourError::Schema(format!("duplicate column name '{name}'")));
            }
        }
        if columns.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(TourError::InvalidArgument(
                "embedded columns must be finite".into(),
            ));
        }
        Ok(Self {
            n_rows,
            columns,
            dim_names,
            labels,
        })
    }

    /// Builds a dataset from row-major `f64` values with generated names `d0, d1, …`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for r in rows {
            if r.len() != p {
                return Err(TourError::LengthMismatch("ragged rows".into()));
            }
            for (c, v) in columns.iter_mut().zip(r) {
                c.push(*v as f32);
            }
        }
        Self::new(columns, default_names(p), Vec::new())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_dims(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f32>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f32] {
        &self.columns[j]
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn labels(&self) -> &[LabelColumn] {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&LabelColumn> {
        self.labels.iter().find(|l| l.name() == name)
    }

    pub fn with_labels(mut self, labels: Vec<LabelColumn>) -> Result<Self> {
        self.labels = labels;
        Self::new(self.columns, self.dim_names, self.labels)
    }

    /// Row `i` widened to `f64`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i] as f64).collect()
    }

    /// Per-column means accumulated in `f64`.
    pub fn means(&self) -> Vec<f64> {
        let n = self.n_rows.max(1) as f64;
        self.columns
            .iter()
            .map(|c| c.iter().map(|&v| v as f64).sum::<f64>() / n)
            .collect()
    }

    /// Sample covariance (divisor `N − 1`) as a dense row-major p×p matrix.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let p = self.n_dims();
        let means = self.means();
        let centered: Vec<Vec<f64>> = self
            .columns
            .iter()
            .zip(&means)
            .map(|(c, m)| c.iter().map(|&v| v as f64 - m).collect())
            .collect();
        let denom = (self.n_rows.max(2) - 1) as f64;
        let mut cov = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in i..p {
                let s = centered[i]
                    .iter()
                    .zip(&centered[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / denom;
                cov[i][j] = s;
                cov[j][i] = s;
            }
        }
        cov
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Dataset {
        Dataset {
            n_rows: keep.len(),
            columns: self
                .columns
                .iter()
                .map(|c| keep.iter().map(|&i| c[i]).collect())
                .collect(),
            dim_names: self.dim_names.clone(),
            labels: self.labels.iter().map(|l| l.select_rows(keep)).collect(),
        }
    }
}

pub fn default_names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("d{i}")).collect()
}
