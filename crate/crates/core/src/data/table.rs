use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnSpec, Dataset, FeatureSchema, IncompleteDataset, LabelColumn, MaskMatrix};
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Raw CSV contents: header plus string cells. Empty cells mean "missing".
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Column kinds that override inference, keyed by column name.
    pub kinds: BTreeMap<String, ColumnKind>,
    /// Compute min/max from observed cells only. Always on for inputs with
    /// empty cells.
    pub observed_minmax: bool,
}

impl CsvTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::Parse {
                    row: i + 1,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file)
    }

    pub fn to_writer(&self, writer: impl std::io::Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.headers)?;
        for row in &self.rows {
            wtr.write_record(row)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn label_index(&self, label: &LabelColumn) -> Result<usize> {
        match label {
            LabelColumn::Index(i) if *i < self.headers.len() => Ok(*i),
            LabelColumn::Index(i) => Err(Error::Data(format!(
                "label column index {i} out of range ({} columns)",
                self.headers.len()
            ))),
            LabelColumn::Name(name) => self
                .headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Data(format!("label column '{name}' not found"))),
        }
    }

    /// Fully observed dataset; empty feature cells are an error.
    pub fn to_dataset(&self, label: &LabelColumn, options: &LoadOptions) -> Result<Dataset> {
        let parsed = self.parse(label, options, false)?;
        Dataset::with_layout(
            parsed.features,
            parsed.classes,
            parsed.class_names,
            parsed.schema,
            parsed.label_name,
            parsed.label_position,
        )
    }

    /// Dataset with empty cells treated as missing. Normalization uses observed
    /// cells only. When `mask` is given it must agree with the empty cells.
    pub fn to_incomplete(
        &self,
        label: &LabelColumn,
        options: &LoadOptions,
        mask: Option<&MaskMatrix>,
    ) -> Result<IncompleteDataset> {
        let parsed = self.parse(label, options, true)?;
        let observed = MaskMatrix::new(parsed.observed)?;
        check_mask(&observed, mask)?;
        let dataset = Dataset::with_layout(
            parsed.features,
            parsed.classes,
            parsed.class_names,
            parsed.schema,
            parsed.label_name,
            parsed.label_position,
        )?;
        IncompleteDataset::new(dataset, mask.cloned().unwrap_or(observed))
    }

    /// Dataset with empty cells treated as missing, normalized with a given
    /// schema (typically a trained model's) instead of statistics of this
    /// table. Feature columns must match the schema by name and order; labels
    /// must be among `class_names`.
    pub fn to_incomplete_with_schema(
        &self,
        label: &LabelColumn,
        schema: &FeatureSchema,
        class_names: &[String],
        mask: Option<&MaskMatrix>,
    ) -> Result<IncompleteDataset> {
        let cells = self.parse_cells(label, true)?;
        let names: Vec<&str> = cells.feature_cols.iter().map(|&j| self.headers[j].as_str()).collect();
        let expected = schema.names();
        if names != expected {
            return Err(Error::shape(
                "feature columns vs model schema",
                expected.join(","),
                names.join(","),
            ));
        }
        let classes = cells
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                class_names.iter().position(|c| c == l).ok_or_else(|| Error::Parse {
                    row: i + 1,
                    column: self.headers[cells.label_position].clone(),
                    message: format!("label '{l}' unknown to the model (classes {class_names:?})"),
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        let observed = MaskMatrix::new(cells.observed.clone())?;
        check_mask(&observed, mask)?;
        let features = normalize_observed(&cells.raw, &cells.observed, schema);
        let dataset = Dataset::with_layout(
            features,
            classes,
            class_names.to_vec(),
            schema.clone(),
            self.headers[cells.label_position].clone(),
            cells.label_position,
        )?;
        IncompleteDataset::new(dataset, mask.cloned().unwrap_or(observed))
    }

    fn parse_cells(&self, label: &LabelColumn, allow_missing: bool) -> Result<Cells> {
        let label_position = self.label_index(label)?;
        if self.rows.is_empty() {
            return Err(Error::Data("CSV has no data rows".into()));
        }
        let feature_cols: Vec<usize> = (0..self.headers.len()).filter(|&j| j != label_position).collect();
        if feature_cols.is_empty() {
            return Err(Error::Data("CSV has no feature columns".into()));
        }
        let n = self.rows.len();
        let d = feature_cols.len();
        let mut raw = Matrix::zeros(n, d);
        let mut observed = Matrix::filled(n, d, 1.0);
        let mut labels = Vec::with_capacity(n);
        for (i, row) in self.rows.iter().enumerate() {
            let label_cell = &row[label_position];
            if label_cell.is_empty() {
                return Err(Error::Parse {
                    row: i + 1,
                    column: self.headers[label_position].clone(),
                    message: "missing label".into(),
                });
            }
            labels.push(label_cell.clone());
            for (k, &j) in feature_cols.iter().enumerate() {
                let cell = &row[j];
                if cell.is_empty() {
                    if !allow_missing {
                        return Err(Error::Parse {
                            row: i + 1,
                            column: self.headers[j].clone(),
                            message: "empty cell in fully observed input".into(),
                        });
                    }
                    observed.set(i, k, 0.0);
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: i + 1,
                    column: self.headers[j].clone(),
                    message: format!("'{cell}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: i + 1,
                        column: self.headers[j].clone(),
                        message: format!("'{cell}' is not finite"),
                    });
                }
                raw.set(i, k, v);
            }
        }

        Ok(Cells {
            raw,
            observed,
            labels,
            feature_cols,
            label_position,
        })
    }

    fn parse(&self, label: &LabelColumn, options: &LoadOptions, allow_missing: bool) -> Result<Parsed> {
        let Cells {
            raw,
            observed,
            labels,
            feature_cols,
            label_position,
        } = self.parse_cells(label, allow_missing)?;
        for name in options.kinds.keys() {
            if !feature_cols.iter().any(|&j| &self.headers[j] == name) {
                return Err(Error::Data(format!("kind override for unknown column '{name}'")));
            }
        }
        let n = raw.rows();
        let d = raw.cols();
        let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let class_names = sorted_classes(&label_refs);
        if class_names.len() < 2 {
            return Err(Error::Data(format!(
                "label column '{}' has a single class",
                self.headers[label_position]
            )));
        }
        let classes = labels
            .iter()
            .map(|l| class_names.iter().position(|c| c == l).expect("class present"))
            .collect();

        let use_observed = options.observed_minmax || allow_missing;
        let mut columns = Vec::with_capacity(d);
        for (k, &j) in feature_cols.iter().enumerate() {
            let name = self.headers[j].clone();
            let values: Vec<f64> = (0..n)
                .filter(|&i| !use_observed || observed.get(i, k) == 1.0)
                .map(|i| raw.get(i, k))
                .collect();
            if values.is_empty() {
                return Err(Error::Data(format!("column '{name}' has no observed values")));
            }
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let is_binary = values.iter().all(|&v| v == 0.0 || v == 1.0);
            let kind = match options.kinds.get(&name) {
                Some(&ColumnKind::Binary) if !is_binary => {
                    return Err(Error::Data(format!(
                        "column '{name}' declared binary but holds values other than 0/1"
                    )))
                }
                Some(&kind) => kind,
                None if is_binary => ColumnKind::Binary,
                None => ColumnKind::Continuous,
            };
            let (min, max) = match kind {
                ColumnKind::Binary => (0.0, 1.0),
                ColumnKind::Continuous => (min, max),
            };
            columns.push(ColumnSpec { name, kind, min, max });
        }
        let schema = FeatureSchema { columns };
        schema.validate()?;

        let features = normalize_observed(&raw, &observed, &schema);
        Ok(Parsed {
            features,
            observed,
            classes,
            class_names,
            schema,
            label_name: self.headers[label_position].clone(),
            label_position,
        })
    }
}

struct Cells {
    raw: Matrix,
    observed: Matrix,
    labels: Vec<String>,
    feature_cols: Vec<usize>,
    label_position: usize,
}

fn normalize_observed(raw: &Matrix, observed: &Matrix, schema: &FeatureSchema) -> Matrix {
    Matrix::from_fn(raw.rows(), raw.cols(), |i, k| {
        if observed.get(i, k) == 1.0 {
            schema.columns[k].normalize(raw.get(i, k)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    })
}

/// A mask may hide cells present in the file, never the reverse.
fn check_mask(observed: &MaskMatrix, mask: Option<&MaskMatrix>) -> Result<()> {
    if let Some(mask) = mask {
        observed
            .matrix()
            .same_shape(mask.matrix(), "mask file vs data")?;
        for i in 0..observed.matrix().rows() {
            for j in 0..observed.matrix().cols() {
                if mask.is_observed(i, j) && !observed.is_observed(i, j) {
                    return Err(Error::Data(format!(
                        "mask marks row {} column {} observed but the cell is empty",
                        i + 1,
                        j
                    )));
                }
            }
        }
    }
    Ok(())
}

struct Parsed {
    features: Matrix,
    observed: Matrix,
    classes: Vec<usize>,
    class_names: Vec<String>,
    schema: FeatureSchema,
    label_name: String,
    label_position: usize,
}

/// Distinct labels, numerically sorted when every label is a number.
fn sorted_classes(labels: &[&str]) -> Vec<String> {
    let distinct: BTreeSet<&str> = labels.iter().copied().collect();
    let mut names: Vec<String> = distinct.into_iter().map(str::to_string).collect();
    let numeric: Option<Vec<f64>> = names.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(names).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        names = paired.into_iter().map(|(_, s)| s).collect();
    }
    names
}

/// Loads a fully observed labeled CSV and min-max normalizes its features.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, options: &LoadOptions) -> Result<Dataset> {
    CsvTable::read(path)?.to_dataset(label, options)
}

/// Mask CSV: feature names as header, one 0/1 row per data row.
pub fn write_mask_csv(path: impl AsRef<Path>, names: &[String], mask: &MaskMatrix) -> Result<()> {
    let m = mask.matrix();
    let table = CsvTable {
        headers: names.to_vec(),
        rows: (0..m.rows())
            .map(|i| m.row(i).iter().map(|&v| format!("{}", v as u8)).collect())
            .collect(),
    };
    table.write(path)
}

pub fn read_mask_csv(path: impl AsRef<Path>) -> Result<MaskMatrix> {
    let table = CsvTable::read(path)?;
    let mut m = Matrix::zeros(table.rows.len(), table.headers.len());
    for (i, row) in table.rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let v = match cell.as_str() {
                "0" => 0.0,
                "1" => 1.0,
                other => {
                    return Err(Error::Parse {
                        row: i + 1,
                        column: table.headers[j].clone(),
                        message: format!("mask cell '{other}' is not 0 or 1"),
                    })
                }
            };
            m.set(i, j, v);
        }
    }
    MaskMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> CsvTable {
        CsvTable::from_reader(text.as_bytes()).unwrap()
    }

    fn by_name(name: &str) -> LabelColumn {
        LabelColumn::Name(name.into())
    }

    #[test]
    fn min_max_normalization() {
        let t = table("x,flag,y\n10,0,A\n20,1,B\n30,0,A\n");
        let d = t.to_dataset(&by_name("y"), &LoadOptions::default()).unwrap();
        assert_eq!(d.features().column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(d.schema().columns[1].kind, ColumnKind::Binary);
        assert_eq!(d.schema().columns[0].kind, ColumnKind::Continuous);
        assert_eq!(d.label_position(), 2);
        assert_eq!(
            d.labels(),
            &Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn external_schema_normalization() {
        let train = table("x,flag,y\n10,0,A\n20,1,B\n30,0,A\n");
        let d = train.to_dataset(&by_name("y"), &LoadOptions::default()).unwrap();
        let fresh = table("x,flag,y\n25,,B\n,1,B\n");
        let inc = fresh
            .to_incomplete_with_schema(&by_name("y"), d.schema(), d.class_names(), None)
            .unwrap();
        assert_eq!(inc.features().row(0), &[0.75, 0.0]);
        assert_eq!(inc.mask().missing_count(), 2);
        assert_eq!(inc.dataset().classes(), &[1, 1]);
        let unknown = table("x,flag,y\n25,1,C\n");
        assert!(unknown.to_incomplete_with_schema(&by_name("y"), d.schema(), d.class_names(), None).is_err());
        let renamed = table("z,flag,y\n25,1,A\n");
        assert!(renamed.to_incomplete_with_schema(&by_name("y"), d.schema(), d.class_names(), None).is_err());
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let t = table("x,y\n1,10\n2,9\n3,10\n");
        let d = t.to_dataset(&LabelColumn::Index(1), &LoadOptions::default()).unwrap();
        assert_eq!(d.class_names(), &["9".to_string(), "10".to_string()]);
        assert_eq!(d.classes(), &[1, 0, 1]);
    }

    #[test]
    fn parse_errors_report_location() {
        let t = table("x,y\n1,A\nfoo,B\n");
        match t.to_dataset(&by_name("y"), &LoadOptions::default()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "x");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn constant_continuous_column_rejected() {
        let t = table("x,z,y\n5,1,A\n5,2,B\n");
        assert!(matches!(
            t.to_dataset(&by_name("y"), &LoadOptions::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn single_class_rejected() {
        let t = table("x,y\n1,A\n2,A\n");
        assert!(t.to_dataset(&by_name("y"), &LoadOptions::default()).is_err());
    }

    #[test]
    fn missing_label_column_rejected() {
        let t = table("x,y\n1,A\n2,B\n");
        assert!(t.to_dataset(&by_name("nope"), &LoadOptions::default()).is_err());
        assert!(t.to_dataset(&LabelColumn::Index(5), &LoadOptions::default()).is_err());
    }

    #[test]
    fn empty_cell_rejected_unless_incomplete() {
        let t = table("x,w,y\n1,4,A\n,5,B\n3,6,A\n");
        assert!(t.to_dataset(&by_name("y"), &LoadOptions::default()).is_err());
        let inc = t.to_incomplete(&by_name("y"), &LoadOptions::default(), None).unwrap();
        assert_eq!(inc.mask().missing_count(), 1);
        assert!(!inc.mask().is_observed(1, 0));
        assert_eq!(inc.features().column(0), vec![0.0, 0.0, 1.0]);
        assert_eq!(inc.dataset().schema().columns[0].min, 1.0);
    }

    #[test]
    fn kind_override() {
        let t = table("x,y\n0,A\n1,B\n1,A\n");
        let mut options = LoadOptions::default();
        options.kinds.insert("x".into(), ColumnKind::Continuous);
        let d = t.to_dataset(&by_name("y"), &options).unwrap();
        assert_eq!(d.schema().columns[0].kind, ColumnKind::Continuous);
        options.kinds.insert("ghost".into(), ColumnKind::Binary);
        assert!(t.to_dataset(&by_name("y"), &options).is_err());
    }

    #[test]
    fn mask_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.csv");
        let mask = MaskMatrix::new(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
        write_mask_csv(&path, &["a".into(), "b".into()], &mask).unwrap();
        assert_eq!(read_mask_csv(&path).unwrap(), mask);
    }
}
