//! Datasets, CSV ingestion / emission and seeded synthetic-data generators.

mod csv_io;
mod synth;

use std::ops::Deref;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use csv_io::{format_number, load_csv, load_table, save_csv, save_dataset, Table};
pub use synth::{
    gen_linear_coeff, gen_linear_sparse, gen_logit_plane, gen_logit_sparse, gen_polynomial,
    PolyKind, Seed, SyntheticLinear, SyntheticLogit, SyntheticPolynomial,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column \"{column}\": cannot parse \"{value}\" as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column \"{column}\": value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("target column \"{0}\" not found in header")]
    MissingTarget(String),
    #[error("need at least one data row")]
    NoRows,
    #[error("need at least one feature column")]
    NoFeatures,
    #[error("row {row}: label {value} is not -1 or +1")]
    InvalidLabel { row: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// N observations of D real features plus a real-valued target.
///
/// Rows of `x` are the observations. All entries are finite, N ≥ 1, D ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    feature_names: Vec<String>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self, DataError> {
        if x.nrows() == 0 {
            return Err(DataError::NoRows);
        }
        if x.ncols() == 0 {
            return Err(DataError::NoFeatures);
        }
        if y.len() != x.nrows() {
            return Err(DataError::Shape(format!(
                "{} targets for {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if feature_names.len() != x.ncols() {
            return Err(DataError::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        let target_name = target_name.into();
        for (r, row) in x.row_iter().enumerate() {
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite {
                    row: r + 1,
                    column: feature_names[c].clone(),
                });
            }
        }
        if let Some(r) = y.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                row: r + 1,
                column: target_name,
            });
        }
        Ok(Self {
            x,
            y,
            feature_names,
            target_name,
        })
    }

    /// Dataset with generated names `x1..xD` and target `y`.
    pub fn from_xy(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self, DataError> {
        let names = default_feature_names(x.ncols());
        Self::new(x, y, names, "y")
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Same data with observation order permuted; `order[k]` is the source row of row k.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, DataError> {
        if order.len() != self.n() {
            return Err(DataError::Shape("permutation length".into()));
        }
        let x = DMatrix::from_fn(self.n(), self.d(), |r, c| self.x[(order[r], c)]);
        let y = DVector::from_fn(self.n(), |r, _| self.y[order[r]]);
        Self::new(x, y, self.feature_names.clone(), self.target_name.clone())
    }
}

pub fn default_feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// A [`Dataset`] whose targets are all exactly −1 or +1.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDataset(Dataset);

impl LabelDataset {
    pub fn into_inner(self) -> Dataset {
        self.0
    }

    /// Same features with every label negated.
    pub fn flipped(&self) -> Self {
        let d = &self.0;
        Self(Dataset {
            x: d.x.clone(),
            y: -&d.y,
            feature_names: d.feature_names.clone(),
            target_name: d.target_name.clone(),
        })
    }
}

impl TryFrom<Dataset> for LabelDataset {
    type Error = DataError;

    fn try_from(data: Dataset) -> Result<Self, DataError> {
        if let Some((r, &v)) = data
            .y
            .iter()
            .enumerate()
            .find(|(_, &v)| v != 1.0 && v != -1.0)
        {
            return Err(DataError::InvalidLabel { row: r + 1, value: v });
        }
        Ok(Self(data))
    }
}

impl Deref for LabelDataset {
    type Target = Dataset;

    fn deref(&self) -> &Dataset {
        &self.0
    }
}
