use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benchmark::{BenchmarkConfig, EvalMode, RepRecord};
use crate::error::{Error, Result};
use crate::imputer::Method;

/// `class` value of the overall row of a report cell.
pub const ALL_CLASSES: &str = "all";

/// One aggregated row: a (mode, fraction, rate, method, class) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub dataset: String,
    pub method: Method,
    pub mode: EvalMode,
    pub rate: f64,
    pub fraction: Option<f64>,
    pub class: String,
    pub rmse_mean: Option<f64>,
    /// Sample standard deviation; `None` below two repetitions.
    pub rmse_std: Option<f64>,
    /// Repetitions contributing to the statistics.
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub class_names: Vec<String>,
    pub config: BenchmarkConfig,
    pub records: Vec<RepRecord>,
    pub cells: Vec<ReportCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    pub runs: usize,
    pub total_seconds: f64,
    pub mean_seconds: f64,
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

type CellKey = (EvalMode, Option<u64>, u64, Method);

fn key(r: &RepRecord) -> CellKey {
    (r.mode, r.fraction.map(f64::to_bits), r.rate.to_bits(), r.method)
}

/// Collapses repetition records into report rows, keeping the order in which
/// each cell first appears. Every cell yields an overall row followed by one
/// row per class.
pub fn aggregate(dataset: &str, class_names: &[String], records: &[RepRecord]) -> Vec<ReportCell> {
    let mut keys: Vec<CellKey> = Vec::new();
    for r in records {
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut cells = Vec::new();
    for k in keys {
        let group: Vec<&RepRecord> = records.iter().filter(|r| key(r) == k).collect();
        let first = group[0];
        let failures = group.iter().filter(|r| r.result.is_none()).count();
        let results: Vec<_> = group.iter().filter_map(|r| r.result.as_ref()).collect();
        let make = |class: String, values: Vec<f64>| ReportCell {
            dataset: dataset.to_string(),
            method: first.method,
            mode: first.mode,
            rate: first.rate,
            fraction: first.fraction,
            class,
            rmse_mean: mean(&values),
            rmse_std: sample_std(&values),
            reps: values.len(),
            failures,
        };
        cells.push(make(ALL_CLASSES.into(), results.iter().map(|r| r.overall).collect()));
        for (c, name) in class_names.iter().enumerate() {
            let values = results
                .iter()
                .filter_map(|r| r.per_class.get(c).copied().flatten())
                .collect();
            cells.push(make(name.clone(), values));
        }
    }
    cells
}

/// Per-method wall-clock totals over every record of the report.
pub fn time_methods(report: &BenchmarkReport) -> Vec<MethodTiming> {
    let mut methods = report.config.methods.clone();
    for r in &report.records {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let times: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.method == method && r.result.is_some())
                .map(|r| r.seconds)
                .collect();
            let total: f64 = times.iter().sum();
            MethodTiming {
                method,
                runs: times.len(),
                total_seconds: total,
                mean_seconds: if times.is_empty() { 0.0 } else { total / times.len() as f64 },
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BenchmarkReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.result.is_none()).count()
    }

    /// Report rows as CSV. Timings are kept out so identical seeds give
    /// identical bytes; see [`BenchmarkReport::timing_csv`].
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset", "method", "mode", "rate", "fraction", "class", "rmse_mean", "rmse_std", "reps",
            "failures",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.dataset.clone(),
                c.method.to_string(),
                c.mode.to_string(),
                c.rate.to_string(),
                opt(c.fraction),
                c.class.clone(),
                opt(c.rmse_mean),
                opt(c.rmse_std),
                c.reps.to_string(),
                c.failures.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn timing_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "runs", "total_seconds", "mean_seconds"])?;
        for t in time_methods(self) {
            w.write_record([
                t.method.to_string(),
                t.runs.to_string(),
                format!("{:.6}", t.total_seconds),
                format!("{:.6}", t.mean_seconds),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Report rebuilt from its own records.
    pub fn reaggregated(&self) -> BenchmarkReport {
        BenchmarkReport {
            cells: aggregate(&self.dataset, &self.class_names, &self.records),
            ..self.clone()
        }
    }

    /// Writes `report.csv`, `timing.csv` and `report.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("report.csv", self.to_csv()?),
            ("timing.csv", self.timing_csv()?),
            ("report.json", self.to_json()?),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Overall cell of `method` at `rate` (and `fraction`) under `mode`.
    pub fn overall(&self, mode: EvalMode, method: Method, rate: f64, fraction: Option<f64>) -> Option<&ReportCell> {
        self.class_cell(mode, method, rate, fraction, ALL_CLASSES)
    }

    pub fn class_cell(
        &self,
        mode: EvalMode,
        method: Method,
        rate: f64,
        fraction: Option<f64>,
        class: &str,
    ) -> Option<&ReportCell> {
        self.cells.iter().find(|c| {
            c.mode == mode && c.method == method && c.rate == rate && c.fraction == fraction && c.class == class
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{CellSeeds, RmseResult};

    fn record(method: Method, rep: usize, overall: f64, per_class: Vec<Option<f64>>, seconds: f64) -> RepRecord {
        RepRecord {
            mode: EvalMode::Repetition,
            method,
            rate: 0.2,
            fraction: None,
            repetition: rep,
            seeds: CellSeeds {
                subsample: 0,
                corruption: 0,
                folds: 0,
                method: 0,
            },
            seconds,
            result: Some(RmseResult {
                overall,
                per_class,
                n_missing: 10,
                per_class_missing: vec![5, 5],
            }),
            error: None,
        }
    }

    fn report(records: Vec<RepRecord>) -> BenchmarkReport {
        let names = vec!["a".to_string(), "b".to_string()];
        BenchmarkReport {
            dataset: "toy".into(),
            cells: aggregate("toy", &names, &records),
            class_names: names,
            config: BenchmarkConfig {
                methods: vec![Method::Mean, Method::Gain],
                ..BenchmarkConfig::default()
            },
            records,
        }
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        assert_eq!(sample_std(&[1.0]), None);
        assert!((sample_std(&[1.0, 3.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn aggregate_rows_and_statistics() {
        let r = report(vec![
            record(Method::Mean, 0, 0.2, vec![Some(0.1), Some(0.3)], 1.0),
            record(Method::Mean, 1, 0.4, vec![Some(0.2), None], 2.0),
        ]);
        assert_eq!(r.cells.len(), 3);
        assert_eq!(r.cells[0].class, "all");
        assert!((r.cells[0].rmse_mean.unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(r.cells[2].reps, 1);
        assert_eq!(r.cells[2].rmse_std, None);
    }

    #[test]
    fn timing_totals_are_sums() {
        let r = report(vec![
            record(Method::Mean, 0, 0.2, vec![None, None], 1.25),
            record(Method::Mean, 1, 0.2, vec![None, None], 2.5),
        ]);
        let t = time_methods(&r);
        assert_eq!(t[0].total_seconds, 3.75);
        assert_eq!(t[0].mean_seconds, 1.875);
        assert_eq!(t[1].runs, 0);
        assert_eq!(t[1].total_seconds, 0.0);
    }

    #[test]
    fn json_round_trip_reproduces_csv() {
        let r = report(vec![
            record(Method::Mean, 0, 0.123456789, vec![Some(0.1), Some(0.3)], 1.0),
            record(Method::Mean, 1, 0.3141592653589793, vec![Some(0.2), Some(1.0 / 3.0)], 2.0),
        ]);
        let back = BenchmarkReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.reaggregated().to_csv().unwrap(), r.to_csv().unwrap());
        assert!(r.to_csv().unwrap().starts_with("dataset,method,mode,rate,fraction,class"));
    }
}
