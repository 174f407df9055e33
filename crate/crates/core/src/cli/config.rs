use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::data::LabelColumn;
use crate::error::{Error, Result};
use crate::eval::{BenchmarkConfig, EvalMode};
use crate::imputer::{AdversarialSign, ImputerConfig, Method, MethodSettings, DEFAULT_SWEEPS};
use crate::nn::{OptimizerConfig, OptimizerKind};

/// Environment variable consulted when neither a flag nor the config file
/// sets the seed.
pub const SEED_ENV: &str = "CGAIN_SEED";

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Input CSV (first row headers)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column, by name or 0-based index (default: last column)
    #[arg(long = "label-col")]
    pub label_col: Option<String>,
    /// Comma-separated methods: cgain, gain, mean, mice_lite
    #[arg(long)]
    pub method: Option<String>,
    /// Comma-separated missing rates in (0, 1)
    #[arg(long)]
    pub rate: Option<String>,
    /// Repetitions per benchmark cell
    #[arg(long)]
    pub reps: Option<usize>,
    /// Root seed (falls back to CGAIN_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight of the reconstruction term
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Mini-batch size
    #[arg(long)]
    pub batch: Option<usize>,
    /// Training iterations (D/G update pairs)
    #[arg(long)]
    pub iters: Option<usize>,
    /// sgd or adam
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Hidden width as a multiple of the feature count
    #[arg(long = "hidden-mult")]
    pub hidden_mult: Option<usize>,
    /// Comma-separated minority fractions; switches benchmark to the imbalance protocol
    #[arg(long)]
    pub imbalance: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Generator adversarial sign: negated or literal
    #[arg(long = "adv-sign")]
    pub adv_sign: Option<String>,
    /// repetition or strict-fold
    #[arg(long = "eval-mode")]
    pub eval_mode: Option<String>,
    /// Worker threads for the benchmark (0: all logical processors)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Flat TOML file with any of the keys above (dashes become underscores)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model file to read (impute)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// 0/1 mask CSV aligned with the feature columns (train, impute)
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Numbers {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl Numbers {
    fn resolve(self, name: &'static str) -> Result<Vec<f64>> {
        match self {
            Numbers::One(v) => Ok(vec![v]),
            Numbers::Many(v) => Ok(v),
            Numbers::Text(s) => parse_numbers(name, &s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Words {
    Many(Vec<String>),
    Text(String),
}

/// Config file contents: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data: Option<PathBuf>,
    label_col: Option<LabelColumn>,
    method: Option<Words>,
    rate: Option<Numbers>,
    reps: Option<usize>,
    seed: Option<u64>,
    alpha: Option<f64>,
    batch: Option<usize>,
    iters: Option<usize>,
    optimizer: Option<OptimizerKind>,
    lr: Option<f64>,
    hidden_mult: Option<usize>,
    imbalance: Option<Numbers>,
    out: Option<PathBuf>,
    adv_sign: Option<AdversarialSign>,
    eval_mode: Option<String>,
    jobs: Option<usize>,
    model: Option<PathBuf>,
    mask: Option<PathBuf>,
    log_interval: Option<usize>,
    sweeps: Option<usize>,
    folds: Option<usize>,
}

/// Fully resolved settings of one run. Printed before the run starts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_col: Option<LabelColumn>,
    pub method: Vec<Method>,
    pub rate: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub batch: usize,
    pub iters: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub hidden_mult: usize,
    pub imbalance: Vec<f64>,
    pub out: PathBuf,
    pub adv_sign: AdversarialSign,
    pub eval_mode: EvalMode,
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    pub log_interval: usize,
    pub sweeps: usize,
    pub folds: usize,
}

/// Which subcommand the defaults are for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Corrupt,
    Train,
    Impute,
    Benchmark,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let imputer = ImputerConfig::default();
        let bench = BenchmarkConfig::default();
        Self {
            data: None,
            label_col: None,
            method: match command {
                Command::Benchmark => Method::ALL.to_vec(),
                _ => vec![Method::Cgain],
            },
            rate: match command {
                Command::Benchmark => bench.rates,
                Command::Corrupt => vec![0.2],
                _ => Vec::new(),
            },
            reps: bench.repetitions,
            seed: 0,
            alpha: imputer.alpha,
            batch: imputer.batch_size,
            iters: imputer.iterations,
            optimizer: imputer.optimizer.kind,
            lr: imputer.optimizer.learning_rate,
            hidden_mult: imputer.hidden_mult,
            imbalance: Vec::new(),
            out: PathBuf::from("out"),
            adv_sign: imputer.adversarial_sign,
            eval_mode: bench.mode,
            jobs: 0,
            model: None,
            mask: None,
            log_interval: imputer.log_interval,
            sweeps: DEFAULT_SWEEPS,
            folds: bench.folds,
        }
    }

    /// Defaults, then the config file named by `--config`, then flags. The
    /// seed falls back to `env_seed` when neither sets it.
    pub fn resolve(command: Command, flags: &Overrides, env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = Self::defaults(command);
        let mut seed_set = false;
        if let Some(path) = &flags.config {
            seed_set = cfg.apply_file(&read_file_config(path)?)?;
        }
        seed_set |= cfg.apply_flags(flags)?;
        if !seed_set {
            if let Some(text) = env_seed {
                cfg.seed = text.trim().parse().map_err(|_| {
                    Error::invalid("seed", format!("{SEED_ENV}='{text}' is not an unsigned integer"))
                })?;
            }
        }
        cfg.validate(command)?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: &FileConfig) -> Result<bool> {
        let f = f.clone();
        if let Some(v) = f.data {
            self.data = Some(v);
        }
        if let Some(v) = f.label_col {
            self.label_col = Some(v);
        }
        if let Some(v) = f.method {
            self.method = match v {
                Words::Many(words) => words.iter().map(|w| w.parse()).collect::<Result<_>>()?,
                Words::Text(s) => parse_methods(&s)?,
            };
        }
        if let Some(v) = f.rate {
            self.rate = v.resolve("rate")?;
        }
        if let Some(v) = f.imbalance {
            self.imbalance = v.resolve("imbalance")?;
        }
        if let Some(v) = f.eval_mode {
            self.eval_mode = v.parse()?;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { self.$field = v; } )* };
        }
        take!(reps, alpha, batch, iters, optimizer, lr, hidden_mult, out, adv_sign, jobs, log_interval, sweeps, folds);
        if let Some(v) = f.model {
            self.model = Some(v);
        }
        if let Some(v) = f.mask {
            self.mask = Some(v);
        }
        Ok(match f.seed {
            Some(s) => {
                self.seed = s;
                true
            }
            None => false,
        })
    }

    fn apply_flags(&mut self, o: &Overrides) -> Result<bool> {
        if let Some(v) = &o.data {
            self.data = Some(v.clone());
        }
        if let Some(v) = &o.label_col {
            self.label_col = Some(v.parse().expect("infallible"));
        }
        if let Some(v) = &o.method {
            self.method = parse_methods(v)?;
        }
        if let Some(v) = &o.rate {
            self.rate = parse_numbers("rate", v)?;
        }
        if let Some(v) = &o.imbalance {
            self.imbalance = parse_numbers("imbalance", v)?;
        }
        if let Some(v) = &o.optimizer {
            self.optimizer = match v.as_str() {
                "sgd" => OptimizerKind::Sgd,
                "adam" => OptimizerKind::Adam,
                other => return Err(Error::invalid("optimizer", format!("'{other}' (expected sgd|adam)"))),
            };
        }
        if let Some(v) = &o.adv_sign {
            self.adv_sign = v.parse()?;
        }
        if let Some(v) = &o.eval_mode {
            self.eval_mode = v.parse()?;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = o.$field { self.$field = v; } )* };
        }
        take!(reps, alpha, batch, iters, lr, hidden_mult, jobs);
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.model {
            self.model = Some(v.clone());
        }
        if let Some(v) = &o.mask {
            self.mask = Some(v.clone());
        }
        Ok(match o.seed {
            Some(s) => {
                self.seed = s;
                true
            }
            None => false,
        })
    }

    /// Range checks for everything this command will use, before any work.
    pub fn validate(&self, command: Command) -> Result<()> {
        if self.method.is_empty() {
            return Err(Error::invalid("method", "at least one method is required"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::invalid("seed", format!("must be at most {}", i64::MAX)));
        }
        if command != Command::Impute && self.data.is_none() {
            return Err(Error::invalid("data", "--data is required"));
        }
        match command {
            Command::Corrupt => {
                if self.rate.len() != 1 {
                    return Err(Error::invalid("rate", "corrupt takes exactly one rate"));
                }
            }
            Command::Train => {
                if self.method.len() != 1 || !self.method[0].is_adversarial() {
                    return Err(Error::invalid("method", "train takes exactly one of cgain|gain"));
                }
                if self.rate.len() > 1 {
                    return Err(Error::invalid("rate", "train takes at most one rate"));
                }
            }
            Command::Impute => {
                if self.model.is_none() {
                    return Err(Error::invalid("model", "--model is required"));
                }
                if self.data.is_none() {
                    return Err(Error::invalid("data", "--data is required"));
                }
            }
            Command::Benchmark => {}
        }
        if let Some(r) = self.rate.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::invalid("missing rate", format!("must lie strictly between 0 and 1, got {r}")));
        }
        self.imputer_config(true).validate()?;
        if command == Command::Benchmark {
            self.benchmark_config("data").validate()?;
        }
        Ok(())
    }

    pub fn imputer_config(&self, conditioning: bool) -> ImputerConfig {
        let optimizer = match self.optimizer {
            OptimizerKind::Adam => OptimizerConfig::adam(self.lr),
            OptimizerKind::Sgd => OptimizerConfig::sgd(self.lr),
        };
        ImputerConfig {
            conditioning,
            alpha: self.alpha,
            batch_size: self.batch,
            iterations: self.iters,
            hidden_mult: self.hidden_mult,
            optimizer,
            adversarial_sign: self.adv_sign,
            log_interval: self.log_interval,
            ..ImputerConfig::default()
        }
    }

    pub fn benchmark_config(&self, dataset: &str) -> BenchmarkConfig {
        BenchmarkConfig {
            dataset: dataset.to_string(),
            methods: self.method.clone(),
            rates: self.rate.clone(),
            repetitions: self.reps,
            fractions: self.imbalance.clone(),
            mode: self.eval_mode,
            folds: self.folds,
            root_seed: self.seed,
            settings: MethodSettings {
                adversarial: self.imputer_config(true),
                mice_sweeps: self.sweeps,
            },
            jobs: self.jobs,
            ..BenchmarkConfig::default()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Data(format!("cannot render config: {e}")))
    }
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::invalid("config file", format!("{}: {e}", path.display())))
}

fn parse_methods(text: &str) -> Result<Vec<Method>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_numbers(name: &'static str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::invalid(name, format!("'{s}' is not a number")))
        })
        .collect()
}
