//! Labeled tabular data: ingestion, min-max normalization, MCAR corruption,
//! class-imbalance subsampling, and stratified folds.

mod ops;
mod table;
pub mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

pub use ops::{corrupt_mcar, split_folds, subsample_imbalance};
pub use table::{load_csv, read_mask_csv, write_mask_csv, CsvTable, LoadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Binary,
}

impl ColumnKind {
    pub(crate) fn code(self) -> u8 {
        match self {
            ColumnKind::Continuous => 0,
            ColumnKind::Binary => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ColumnKind::Continuous),
            1 => Some(ColumnKind::Binary),
            _ => None,
        }
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Ok(ColumnKind::Continuous),
            "binary" => Ok(ColumnKind::Binary),
            other => Err(Error::invalid("column kind", other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Raw-scale minimum used for normalization.
    pub min: f64,
    /// Raw-scale maximum used for normalization.
    pub max: f64,
}

impl ColumnSpec {
    pub fn normalize(&self, raw: f64) -> f64 {
        match self.kind {
            ColumnKind::Binary => raw,
            ColumnKind::Continuous => (raw - self.min) / (self.max - self.min),
        }
    }

    pub fn denormalize(&self, value: f64) -> f64 {
        match self.kind {
            ColumnKind::Binary => value,
            ColumnKind::Continuous => self.min + value * (self.max - self.min),
        }
    }
}

/// Per-column typing and normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
}

impl FeatureSchema {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(|c| c.kind).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Schema of already normalized continuous columns (identity scaling).
    pub fn unit(names: &[&str]) -> Self {
        Self {
            columns: names
                .iter()
                .map(|n| ColumnSpec {
                    name: n.to_string(),
                    kind: ColumnKind::Continuous,
                    min: 0.0,
                    max: 1.0,
                })
                .collect(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for c in &self.columns {
            if !(c.min <= c.max) {
                return Err(Error::Data(format!(
                    "column '{}' has min {} > max {}",
                    c.name, c.min, c.max
                )));
            }
            if c.kind == ColumnKind::Continuous && c.min == c.max {
                return Err(Error::Data(format!(
                    "continuous column '{}' is constant ({}); normalization is undefined",
                    c.name, c.min
                )));
            }
        }
        Ok(())
    }
}

/// Maps normalized values back to the raw scale. With `round_binary`, binary
/// columns snap to the nearer of {0, 1}.
pub fn denormalize(schema: &FeatureSchema, values: &Matrix, round_binary: bool) -> Result<Matrix> {
    if values.cols() != schema.width() {
        return Err(Error::shape("denormalize", schema.width(), values.cols()));
    }
    Ok(Matrix::from_fn(values.rows(), values.cols(), |i, j| {
        let col = &schema.columns[j];
        let v = col.denormalize(values.get(i, j));
        if round_binary && col.kind == ColumnKind::Binary {
            if v >= 0.5 {
                1.0
            } else {
                0.0
            }
        } else {
            v
        }
    }))
}

/// Column selector for the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

/// Fully observed, normalized, labeled data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Matrix,
    classes: Vec<usize>,
    class_names: Vec<String>,
    schema: FeatureSchema,
    label_name: String,
    label_position: usize,
}

impl Dataset {
    /// `features` must already be normalized to `[0, 1]`; `classes[i]` indexes `class_names`.
    pub fn new(
        features: Matrix,
        classes: Vec<usize>,
        class_names: Vec<String>,
        schema: FeatureSchema,
    ) -> Result<Self> {
        for (j, col) in schema.columns.iter().enumerate() {
            if col.kind == ColumnKind::Binary
                && (0..features.rows()).any(|i| !matches!(features.get(i, j), v if v == 0.0 || v == 1.0))
            {
                return Err(Error::Data(format!(
                    "binary column '{}' holds values other than 0/1",
                    col.name
                )));
            }
        }
        let position = schema.width();
        Self::with_layout(features, classes, class_names, schema, "label".into(), position)
    }

    pub(crate) fn with_layout(
        features: Matrix,
        classes: Vec<usize>,
        class_names: Vec<String>,
        schema: FeatureSchema,
        label_name: String,
        label_position: usize,
    ) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::Data("dataset needs at least one row and one feature".into()));
        }
        if class_names.len() < 2 {
            return Err(Error::Data(format!(
                "label column needs at least two classes, found {}",
                class_names.len()
            )));
        }
        if classes.len() != features.rows() {
            return Err(Error::shape("Dataset labels", features.rows(), classes.len()));
        }
        if schema.width() != features.cols() {
            return Err(Error::shape("Dataset schema", features.cols(), schema.width()));
        }
        schema.validate()?;
        if let Some(&bad) = classes.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::Data(format!("class index {bad} out of range")));
        }
        if let Some(pos) = features
            .as_slice()
            .iter()
            .position(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Data(format!(
                "feature value {} at row {}, column {} outside [0, 1]",
                features.as_slice()[pos],
                pos / features.cols(),
                pos % features.cols()
            )));
        }
        let labels = one_hot(&classes, class_names.len());
        Ok(Self {
            features,
            labels,
            classes,
            class_names,
            schema,
            label_name,
            label_position,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    /// One-hot labels, `n x m`.
    pub fn labels(&self) -> &Matrix {
        &self.labels
    }

    /// Class index per row.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    /// Position of the label among the original CSV columns.
    pub fn label_position(&self) -> usize {
        self.label_position
    }

    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &c in &self.classes {
            counts[c] += 1;
        }
        counts
    }

    /// Rows in the given order; class names and schema are kept.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: self.labels.select_rows(indices),
            classes: indices.iter().map(|&i| self.classes[i]).collect(),
            class_names: self.class_names.clone(),
            schema: self.schema.clone(),
            label_name: self.label_name.clone(),
            label_position: self.label_position,
        }
    }

    /// Same labels and metadata, new normalized feature values. Binary
    /// columns may hold any value in `[0, 1]` here (imputed proposals).
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        self.features.same_shape(&features, "Dataset::with_features")?;
        Dataset::with_layout(
            features,
            self.classes.clone(),
            self.class_names.clone(),
            self.schema.clone(),
            self.label_name.clone(),
            self.label_position,
        )
    }

    /// Features on the raw scale.
    pub fn raw_features(&self, round_binary: bool) -> Matrix {
        denormalize(&self.schema, &self.features, round_binary).expect("schema matches features")
    }
}

pub(crate) fn one_hot(classes: &[usize], m: usize) -> Matrix {
    let mut out = Matrix::zeros(classes.len(), m);
    for (i, &c) in classes.iter().enumerate() {
        out.set(i, c, 1.0);
    }
    out
}

/// Observed (1) / missing (0) indicator matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskMatrix(Matrix);

impl MaskMatrix {
    pub fn new(entries: Matrix) -> Result<Self> {
        if entries.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Data("mask entries must be 0 or 1".into()));
        }
        Ok(Self(entries))
    }

    pub fn all_observed(rows: usize, cols: usize) -> Self {
        Self(Matrix::filled(rows, cols, 1.0))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.0.get(row, col) == 1.0
    }

    pub fn missing_count(&self) -> usize {
        self.0.as_slice().iter().filter(|&&v| v == 0.0).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.missing_count() as f64 / self.0.len() as f64
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> MaskMatrix {
        MaskMatrix(self.0.select_rows(indices))
    }
}

/// Data with missing feature cells. Missing cells hold 0.0; the mask is the
/// only record of missingness. Labels are always fully observed.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteDataset {
    dataset: Dataset,
    mask: MaskMatrix,
}

impl IncompleteDataset {
    /// Zeroes every feature cell whose mask entry is 0.
    pub fn new(dataset: Dataset, mask: MaskMatrix) -> Result<Self> {
        dataset
            .features()
            .same_shape(mask.matrix(), "IncompleteDataset mask")?;
        let zeroed = dataset
            .features()
            .zip_map(mask.matrix(), |x, m| if m == 1.0 { x } else { 0.0 })?;
        let dataset = dataset.with_features(zeroed)?;
        Ok(Self { dataset, mask })
    }

    pub fn complete(dataset: Dataset) -> Self {
        let mask = MaskMatrix::all_observed(dataset.rows(), dataset.width());
        Self { dataset, mask }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// Features with zeros at missing cells.
    pub fn features(&self) -> &Matrix {
        self.dataset.features()
    }

    pub fn mask(&self) -> &MaskMatrix {
        &self.mask
    }

    pub fn rows(&self) -> usize {
        self.dataset.rows()
    }

    pub fn width(&self) -> usize {
        self.dataset.width()
    }

    pub fn select_rows(&self, indices: &[usize]) -> IncompleteDataset {
        IncompleteDataset {
            dataset: self.dataset.select_rows(indices),
            mask: self.mask.select_rows(indices),
        }
    }
}
