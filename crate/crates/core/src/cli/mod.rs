//! Command-line driver: `corrupt`, `train`, `impute` and `benchmark`.
//!
//! Exit status 0 on success, 1 for invalid input, 2 for failures while
//! running. Errors go to stderr as `error: <CODE>: <message>`.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{Command, Overrides, RunConfig, SEED_ENV};

use crate::data::{
    corrupt_mcar, denormalize, read_mask_csv, write_mask_csv, CsvTable, Dataset, LabelColumn,
    LoadOptions, MaskMatrix,
};
use crate::error::Error;
use crate::eval::{run_benchmark, run_imbalance_benchmark};
use crate::imputer::io::{load_model, save_model};
use crate::imputer::{train, Method};
use crate::nn::{derive_seed, Rng};

#[derive(Debug, Parser)]
#[command(name = "cgain", version, about = "Class-conditional adversarial imputation of labeled tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Hide feature cells completely at random; writes corrupted.csv and mask.csv
    Corrupt(Overrides),
    /// Train CGAIN or GAIN; writes model.cgain and trace.csv
    Train(Overrides),
    /// Fill missing cells with a trained model; writes imputed.csv
    Impute(Overrides),
    /// Run the RMSE benchmark grid; writes report.csv, timing.csv, report.json
    Benchmark(Overrides),
}

/// Failure of a command, with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub status: i32,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: e.code(),
            message: e.to_string(),
            status: if e.is_validation() { 1 } else { 2 },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit
/// status. `CGAIN_SEED` is read from the process environment.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "error: E_USAGE: {first}");
            let _ = write!(stderr, "{}", e.render());
            return 1;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let (command, flags) = match &cli.command {
        Sub::Corrupt(o) => (Command::Corrupt, o),
        Sub::Train(o) => (Command::Train, o),
        Sub::Impute(o) => (Command::Impute, o),
        Sub::Benchmark(o) => (Command::Benchmark, o),
    };
    match execute(command, flags, env_seed.as_deref(), stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {}", e.code, e.message);
            e.status
        }
    }
}

fn execute(command: Command, flags: &Overrides, env_seed: Option<&str>, out: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::resolve(command, flags, env_seed)?;
    emit(out, "# resolved config\n")?;
    emit(out, &cfg.to_toml()?)?;
    emit(out, "# results\n")?;
    match command {
        Command::Corrupt => cmd_corrupt(&cfg, out),
        Command::Train => cmd_train(&cfg, out),
        Command::Impute => cmd_impute(&cfg, out),
        Command::Benchmark => cmd_benchmark(&cfg, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e).into())
}

fn label_of(cfg: &RunConfig, table: &CsvTable) -> LabelColumn {
    cfg.label_col
        .clone()
        .unwrap_or(LabelColumn::Index(table.headers.len().saturating_sub(1)))
}

fn data_path(cfg: &RunConfig) -> &Path {
    cfg.data.as_deref().expect("validated: data present")
}

fn out_file(cfg: &RunConfig, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok(cfg.out.join(name))
}

/// Column of `table` holding feature `j`.
fn table_column(label_position: usize, j: usize) -> usize {
    if j < label_position {
        j
    } else {
        j + 1
    }
}

fn cmd_corrupt(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let table = CsvTable::read(data_path(cfg))?;
    let dataset = table.to_dataset(&label_of(cfg, &table), &LoadOptions::default())?;
    let incomplete = corrupt_mcar(&dataset, cfg.rate[0], &mut Rng::new(cfg.seed))?;
    let mask = incomplete.mask();
    let mut corrupted = table.clone();
    for (i, row) in corrupted.rows.iter_mut().enumerate() {
        for j in 0..dataset.width() {
            if !mask.is_observed(i, j) {
                row[table_column(dataset.label_position(), j)].clear();
            }
        }
    }
    let data_out = out_file(cfg, "corrupted.csv")?;
    let mask_out = out_file(cfg, "mask.csv")?;
    corrupted.write(&data_out)?;
    write_mask_csv(&mask_out, &dataset.schema().names(), mask)?;
    emit(
        out,
        &format!(
            "missing_cells = {}\ntotal_cells = {}\nmissing_fraction = {}\ndata = \"{}\"\nmask = \"{}\"\n",
            mask.missing_count(),
            mask.matrix().len(),
            mask.missing_fraction(),
            data_out.display(),
            mask_out.display()
        ),
    )
}

fn read_mask(cfg: &RunConfig) -> CliResult<Option<MaskMatrix>> {
    Ok(match &cfg.mask {
        Some(p) => Some(read_mask_csv(p)?),
        None => None,
    })
}

fn cmd_train(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let method = cfg.method[0];
    let table = CsvTable::read(data_path(cfg))?;
    let label = label_of(cfg, &table);
    let mask = read_mask(cfg)?;
    let has_empty = table.rows.iter().any(|r| r.iter().any(String::is_empty));
    let incomplete = match cfg.rate.first() {
        Some(&rate) if mask.is_none() && !has_empty => {
            let dataset = table.to_dataset(&label, &LoadOptions::default())?;
            corrupt_mcar(&dataset, rate, &mut Rng::new(derive_seed(cfg.seed, &[1])))?
        }
        Some(_) => {
            return Err(Error::invalid("rate", "data already has missing cells or a mask; drop --rate").into())
        }
        None if mask.is_some() || has_empty => table.to_incomplete(&label, &LoadOptions::default(), mask.as_ref())?,
        None => {
            return Err(Error::invalid(
                "rate",
                "data has no missing cells; pass --rate to corrupt it in memory or --mask",
            )
            .into())
        }
    };
    let config = cfg.imputer_config(method == Method::Cgain);
    let (model, trace) = train(&incomplete, &config, &mut Rng::new(cfg.seed))?;
    let model_out = out_file(cfg, "model.cgain")?;
    let trace_out = out_file(cfg, "trace.csv")?;
    save_model(&model, &model_out)?;
    trace.write_csv(&trace_out)?;
    let last = trace.rows.last();
    emit(
        out,
        &format!(
            "method = \"{method}\"\nconditioning = {}\nrows = {}\nmissing_cells = {}\niterations = {}\nbatch_size = {}\ntrace_rows = {}\nfinal_reconstruction = {}\nmodel = \"{}\"\ntrace = \"{}\"\n",
            model.conditioning(),
            incomplete.rows(),
            incomplete.mask().missing_count(),
            trace.iterations_run,
            trace.batch_size,
            trace.rows.len(),
            last.map_or(String::from("nan"), |r| r.reconstruction_loss.to_string()),
            model_out.display(),
            trace_out.display()
        ),
    )
}

fn cmd_impute(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(cfg.model.as_deref().expect("validated: model present"))?;
    let table = CsvTable::read(data_path(cfg))?;
    let label = label_of(cfg, &table);
    let mask = read_mask(cfg)?;
    let incomplete = table.to_incomplete_with_schema(&label, model.schema(), model.class_names(), mask.as_ref())?;
    let completed: Dataset = model.impute(&incomplete, &mut Rng::new(cfg.seed))?;
    let raw = denormalize(model.schema(), completed.features(), true)?;
    let position = incomplete.dataset().label_position();
    let mut filled = table.clone();
    let mut count = 0usize;
    for (i, row) in filled.rows.iter_mut().enumerate() {
        for j in 0..raw.cols() {
            if !incomplete.mask().is_observed(i, j) {
                row[table_column(position, j)] = raw.get(i, j).to_string();
                count += 1;
            }
        }
    }
    let path = out_file(cfg, "imputed.csv")?;
    filled.write(&path)?;
    emit(out, &format!("imputed_cells = {count}\nimputed = \"{}\"\n", path.display()))
}

fn cmd_benchmark(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let path = data_path(cfg);
    let table = CsvTable::read(path)?;
    let dataset = table.to_dataset(&label_of(cfg, &table), &LoadOptions::default())?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    let bench = cfg.benchmark_config(&name);
    let report = if cfg.imbalance.is_empty() {
        run_benchmark(&dataset, &bench)?
    } else {
        run_imbalance_benchmark(&dataset, &bench)?
    };
    let dir = &cfg.out;
    report.write_dir(dir)?;
    emit(out, &report.to_csv()?)?;
    let failures = report.failures();
    if failures > 0 {
        return Err(CliError {
            code: "E_CELL_FAILED",
            message: format!("{failures} benchmark runs failed; see {}", dir.join("report.json").display()),
            status: 2,
        });
    }
    Ok(())
}
