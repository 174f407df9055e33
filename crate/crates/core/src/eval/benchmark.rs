use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{aggregate, BenchmarkReport};
use super::{rmse_missing, RmseResult};
use crate::data::{corrupt_mcar, split_folds, subsample_imbalance, Dataset};
use crate::error::{Error, Result};
use crate::imputer::{FittedImputer, Method, MethodSettings};
use crate::nn::{derive_seed, Rng};

/// How a repetition turns one corrupted table into an RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Fit and evaluate on the whole corrupted table.
    Repetition,
    /// Fit on k-1 stratified folds, impute and evaluate the held-out fold.
    StrictFold,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Repetition => "repetition",
            EvalMode::StrictFold => "strict_fold",
        }
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repetition" => Ok(EvalMode::Repetition),
            "strict_fold" | "strict-fold" => Ok(EvalMode::StrictFold),
            other => Err(Error::invalid(
                "evaluation mode",
                format!("'{other}' (expected repetition|strict-fold)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    /// Name written into every report row.
    pub dataset: String,
    pub methods: Vec<Method>,
    pub rates: Vec<f64>,
    pub repetitions: usize,
    /// Minority fractions for the imbalance benchmark; unused by the plain one.
    pub fractions: Vec<f64>,
    pub minority_class: usize,
    /// `StrictFold` runs the repetition protocol as well and reports both.
    pub mode: EvalMode,
    pub folds: usize,
    pub root_seed: u64,
    pub settings: MethodSettings,
    /// Worker threads; 0 uses every logical processor.
    pub jobs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            dataset: "data".into(),
            methods: Method::ALL.to_vec(),
            rates: vec![0.05, 0.10, 0.15, 0.20],
            repetitions: 10,
            fractions: vec![0.10, 0.25, 0.40, 0.50],
            minority_class: 1,
            mode: EvalMode::Repetition,
            folds: 10,
            root_seed: 0,
            settings: MethodSettings::default(),
            jobs: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "at least one method is required"));
        }
        if self.rates.is_empty() {
            return Err(Error::invalid("missing rates", "at least one rate is required"));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::invalid("missing rate", format!("must lie strictly between 0 and 1, got {r}")));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be at least 1"));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 0.5)) {
            return Err(Error::invalid("minority fraction", format!("must lie in (0, 0.5], got {f}")));
        }
        if self.folds < 2 {
            return Err(Error::invalid("fold count", format!("must be at least 2, got {}", self.folds)));
        }
        if self.settings.mice_sweeps == 0 {
            return Err(Error::invalid("sweeps", "must be at least 1"));
        }
        self.settings.adversarial.validate()
    }

    fn modes(&self) -> Vec<EvalMode> {
        match self.mode {
            EvalMode::Repetition => vec![EvalMode::Repetition],
            EvalMode::StrictFold => vec![EvalMode::Repetition, EvalMode::StrictFold],
        }
    }
}

/// Seeds of one benchmark cell. Each is `derive_seed(root, [tag, ...])`
/// with the tag first, then the fraction and rate bit patterns (fraction 0
/// when absent), the repetition index and, for `method`, the method index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSeeds {
    pub subsample: u64,
    pub corruption: u64,
    pub folds: u64,
    pub method: u64,
}

const TAG_SUBSAMPLE: u64 = 1;
const TAG_CORRUPTION: u64 = 2;
const TAG_FOLDS: u64 = 3;
const TAG_METHOD: u64 = 4;

pub fn cell_seeds(root: u64, fraction: Option<f64>, rate: f64, repetition: usize, method: Method) -> CellSeeds {
    let f = fraction.map_or(0, f64::to_bits);
    let r = rate.to_bits();
    let k = repetition as u64;
    let m = Method::ALL.iter().position(|&x| x == method).expect("known method") as u64;
    CellSeeds {
        subsample: derive_seed(root, &[TAG_SUBSAMPLE, f, k]),
        corruption: derive_seed(root, &[TAG_CORRUPTION, f, r, k]),
        folds: derive_seed(root, &[TAG_FOLDS, f, r, k]),
        method: derive_seed(root, &[TAG_METHOD, f, r, k, m]),
    }
}

/// One (mode, fraction, rate, repetition, method) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub mode: EvalMode,
    pub method: Method,
    pub rate: f64,
    pub fraction: Option<f64>,
    pub repetition: usize,
    pub seeds: CellSeeds,
    /// Wall-clock seconds spent fitting and imputing.
    pub seconds: f64,
    pub result: Option<RmseResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy)]
struct Task {
    mode: EvalMode,
    method: Method,
    rate: f64,
    fraction: Option<f64>,
    repetition: usize,
}

fn run_task(dataset: &Dataset, config: &BenchmarkConfig, task: Task) -> RepRecord {
    let seeds = cell_seeds(config.root_seed, task.fraction, task.rate, task.repetition, task.method);
    let mut seconds = 0.0;
    let outcome = (|| -> Result<RmseResult> {
        let subsampled;
        let data = match task.fraction {
            Some(f) => {
                subsampled = subsample_imbalance(dataset, config.minority_class, f, &mut Rng::new(seeds.subsample))?;
                &subsampled
            }
            None => dataset,
        };
        let incomplete = corrupt_mcar(data, task.rate, &mut Rng::new(seeds.corruption))?;
        let mut rng = Rng::new(seeds.method);
        match task.mode {
            EvalMode::Repetition => {
                let start = Instant::now();
                let (_, completed) = FittedImputer::fit(task.method, &incomplete, &config.settings, &mut rng)?;
                seconds = start.elapsed().as_secs_f64();
                rmse_missing(data, &completed, incomplete.mask())
            }
            EvalMode::StrictFold => {
                let folds = split_folds(data, config.folds, &mut Rng::new(seeds.folds))?;
                let held = &folds[task.repetition % config.folds];
                let mut train_rows: Vec<usize> = folds
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != task.repetition % config.folds)
                    .flat_map(|(_, f)| f.iter().copied())
                    .collect();
                train_rows.sort_unstable();
                let train = incomplete.select_rows(&train_rows);
                let test = incomplete.select_rows(held);
                let start = Instant::now();
                let (fitted, _) = FittedImputer::fit(task.method, &train, &config.settings, &mut rng)?;
                let completed = fitted.apply(&test, &mut rng)?;
                seconds = start.elapsed().as_secs_f64();
                rmse_missing(&data.select_rows(held), &completed, test.mask())
            }
        }
    })();
    log::info!(
        "{} {} rate {} fraction {:?} rep {}: {}",
        task.mode,
        task.method,
        task.rate,
        task.fraction,
        task.repetition,
        match &outcome {
            Ok(r) => format!("rmse {:.5} in {seconds:.2}s", r.overall),
            Err(e) => format!("failed: {e}"),
        }
    );
    let (result, error) = match outcome {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    RepRecord {
        mode: task.mode,
        method: task.method,
        rate: task.rate,
        fraction: task.fraction,
        repetition: task.repetition,
        seeds,
        seconds,
        result,
        error,
    }
}

fn run(dataset: &Dataset, config: &BenchmarkConfig, fractions: &[Option<f64>]) -> Result<BenchmarkReport> {
    config.validate()?;
    let mut tasks = Vec::new();
    for mode in config.modes() {
        for &fraction in fractions {
            for &rate in &config.rates {
                for repetition in 0..config.repetitions {
                    for &method in &config.methods {
                        tasks.push(Task {
                            mode,
                            method,
                            rate,
                            fraction,
                            repetition,
                        });
                    }
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let records: Vec<RepRecord> =
        pool.install(|| tasks.par_iter().map(|&t| run_task(dataset, config, t)).collect());
    let cells = aggregate(&config.dataset, dataset.class_names(), &records);
    Ok(BenchmarkReport {
        dataset: config.dataset.clone(),
        class_names: dataset.class_names().to_vec(),
        config: config.clone(),
        records,
        cells,
    })
}

/// Every (rate, repetition, method) on the full dataset. Within a repetition
/// all methods see the same corruption mask.
pub fn run_benchmark(dataset: &Dataset, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    run(dataset, config, &[None])
}

/// For each minority fraction: subsample, corrupt, run every method.
pub fn run_imbalance_benchmark(dataset: &Dataset, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if dataset.class_count() != 2 {
        return Err(Error::Data(format!(
            "imbalance benchmark needs a binary label, found {} classes",
            dataset.class_count()
        )));
    }
    if config.fractions.is_empty() {
        return Err(Error::invalid("minority fractions", "at least one fraction is required"));
    }
    let fractions: Vec<Option<f64>> = config.fractions.iter().map(|&f| Some(f)).collect();
    run(dataset, config, &fractions)
}
