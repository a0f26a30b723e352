//! The `vbreg` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod baselines;
mod demo;
mod document;

use std::ffi::OsString;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

pub use demo::{run_demo, DemoConfig, Example};
pub use document::{ModelTag, Posterior, PosteriorDocument, PriorEcho, ScalarOrVec};

use crate::dataio::{format_number, load_csv, load_table, save_csv, DataError, LabelDataset};
use crate::fit::{FitError, FitOptions};
use crate::linear::{
    fit_linear, fit_linear_ard, predict_linear, LinearPriors, StudentTPrediction,
};
use crate::logit::{fit_logit, fit_logit_ard, fit_logit_iter, predict_logit, LogitPriors};
use crate::select::{select_model, SelectError, Selection, Task};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Invalid(_) => CliError::Usage(e.to_string()),
            FitError::Numerics(_) => CliError::Numerical(e.to_string()),
            FitError::Data(_) | FitError::Dimension { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<SelectError> for CliError {
    fn from(e: SelectError) -> Self {
        match &e {
            SelectError::Candidate { source, .. } => match source {
                FitError::Invalid(_) => CliError::Usage(e.to_string()),
                FitError::Numerics(_) => CliError::Numerical(e.to_string()),
                _ => CliError::Data(e.to_string()),
            },
            SelectError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            SelectError::NoCandidates | SelectError::ZeroOrder => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vbreg", version, about = "Variational Bayesian linear and logistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV dataset and write the posterior as JSON.
    Fit(FitArgs),
    /// Predict from a stored posterior for the rows of a CSV file.
    Predict(PredictArgs),
    /// Choose a polynomial order for a single input by the variational bound.
    Select(SelectArgs),
    /// Generate a synthetic experiment with its fits, predictions and metrics.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct PriorArgs {
    /// Shape of the Gamma prior on the noise precision (linear) or on α (logit).
    #[arg(long, default_value_t = 1e-2)]
    a0: f64,
    /// Rate of the Gamma prior on the noise precision (linear) or on α (logit).
    #[arg(long, default_value_t = 1e-4)]
    b0: f64,
    /// Shape of the Gamma hyper-prior on α (linear only).
    #[arg(long, default_value_t = 1e-2)]
    c0: f64,
    /// Rate of the Gamma hyper-prior on α (linear only).
    #[arg(long, default_value_t = 1e-4)]
    d0: f64,
    /// Relative change of the bound below which iteration stops.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

impl PriorArgs {
    fn linear(&self) -> LinearPriors {
        LinearPriors {
            a0: self.a0,
            b0: self.b0,
            c0: self.c0,
            d0: self.d0,
        }
    }

    fn logit(&self) -> LogitPriors {
        LogitPriors {
            a0: self.a0,
            b0: self.b0,
        }
    }

    fn options(&self) -> FitOptions {
        FitOptions {
            rel_tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    model: ModelTag,
    #[arg(long)]
    data: PathBuf,
    /// Target column (default: the last column).
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    priors: PriorArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    posterior: PathBuf,
    /// Feature columns are matched by name when the posterior stores names.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskKind {
    Linear,
    Logit,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long, value_enum)]
    task: TaskKind,
    /// CSV with one input column and the target.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: Option<String>,
    /// Inclusive range of polynomial column counts, e.g. 1..10.
    #[arg(long, value_parser = parse_orders)]
    orders: OrderRange,
    #[command(flatten)]
    priors: PriorArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct OrderRange(usize, usize);

fn parse_orders(s: &str) -> Result<OrderRange, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got \"{s}\""))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad lower order \"{a}\""))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad upper order \"{b}\""))?;
    if a == 0 || b < a {
        return Err(format!("need 1 <= a <= b, got {a}..{b}"));
    }
    Ok(OrderRange(a, b))
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, value_enum)]
    example: Example,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    outdir: PathBuf,
    /// Training set size override.
    #[arg(long)]
    n: Option<usize>,
    /// Test set size override.
    #[arg(long)]
    n_test: Option<usize>,
    /// Input dimension override (high-dimensional examples).
    #[arg(long)]
    d: Option<usize>,
    /// Informative dimension override (high-dimensional examples).
    #[arg(long)]
    d_eff: Option<usize>,
    /// Also evaluate the least-squares / discriminant reference estimators.
    #[arg(long)]
    baselines: bool,
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Demo(a) => run_demo(&DemoConfig {
            example: a.example,
            seed: a.seed,
            outdir: a.outdir,
            n: a.n,
            n_test: a.n_test,
            d: a.d,
            d_eff: a.d_eff,
            baselines: a.baselines,
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vbreg: {e}");
            e.exit_code()
        }
    }
}

fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let opts = a.priors.options();
    opts.validate()?;
    let data = load_csv(&a.data, a.target.as_deref())?;
    let names = data.feature_names().to_vec();
    let doc = if a.model.is_linear() {
        let priors = a.priors.linear();
        let post = match a.model {
            ModelTag::Linear => fit_linear(&data, &priors, &opts)?,
            _ => fit_linear_ard(&data, &priors, &opts)?,
        };
        PosteriorDocument::from_linear(&post, &priors, &opts, &names)?
    } else {
        let priors = a.priors.logit();
        let labels = LabelDataset::try_from(data)?;
        let post = match a.model {
            ModelTag::Logit => fit_logit(&labels, &priors, &opts)?,
            ModelTag::LogitArd => fit_logit_ard(&labels, &priors, &opts)?,
            _ => fit_logit_iter(&labels, &opts)?,
        };
        PosteriorDocument::from_logit(&post, &priors, &opts, &names)
    };
    doc.save(&a.out)?;
    println!("elbo = {}", doc.elbo);
    println!("iterations = {}", doc.iterations);
    println!("converged = {}", doc.converged);
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<(), CliError> {
    let doc = PosteriorDocument::load(&a.posterior)?;
    let post = doc.to_posterior()?;
    let table = load_table(&a.data)?;
    let d = doc.dim();
    let by_name: Option<Vec<usize>> = (!doc.feature_names.is_empty())
        .then(|| doc.feature_names.iter().map(|n| table.column_index(n)).collect())
        .flatten();
    let x = match by_name {
        Some(cols) => table.cells.select_columns(&cols),
        None if table.header.len() == d => table.cells,
        None => {
            return Err(CliError::Data(format!(
                "{} has {} columns but the posterior expects {d} features",
                a.data.display(),
                table.header.len()
            )))
        }
    };
    match post {
        Posterior::Linear(p) => write_linear_predictions(&a.out, &predict_linear(&p, &x)?),
        Posterior::Logit(p) => {
            write_logit_predictions(&a.out, &predict_logit(&p, &x, &doc.priors.options())?)
        }
    }
}

fn cmd_select(a: &SelectArgs) -> Result<(), CliError> {
    let opts = a.priors.options();
    opts.validate()?;
    let data = load_csv(&a.data, a.target.as_deref())?;
    if data.d() != 1 {
        return Err(CliError::Data(format!(
            "select needs exactly one input column besides the target, found {}",
            data.d()
        )));
    }
    let (task, data) = match a.task {
        TaskKind::Linear => (Task::Linear(a.priors.linear()), data),
        TaskKind::Logit => (
            Task::Logit(a.priors.logit()),
            LabelDataset::try_from(data)?.into_inner(),
        ),
    };
    let x = DVector::from_column_slice(data.x().column(0).as_slice());
    let orders: Vec<usize> = (a.orders.0..=a.orders.1).collect();
    let sel = select_model(&x, data.y(), &orders, &task, &opts)?;
    println!("order,bound");
    for c in &sel.candidates {
        println!("{},{}", c.order, format_number(c.bound));
    }
    println!("winner = {}", sel.winner().order);
    if let Some(out) = &a.out {
        write_selection(out, &sel)?;
    }
    Ok(())
}

pub(crate) fn write_linear_predictions(
    path: &Path,
    preds: &[StudentTPrediction],
) -> Result<(), CliError> {
    let col = |f: &dyn Fn(&StudentTPrediction) -> f64| preds.iter().map(f).collect::<Vec<_>>();
    let columns = vec![
        col(&|p| p.mu),
        col(&|p| p.lambda),
        col(&|p| p.nu),
        col(&|p| p.sd().unwrap_or(f64::NAN)),
    ];
    save_csv(path, &["mu", "lambda", "nu", "sd"], &columns)?;
    Ok(())
}

pub(crate) fn write_logit_predictions(path: &Path, p_pos: &[f64]) -> Result<(), CliError> {
    save_csv(path, &["p_pos"], &[p_pos.to_vec()])?;
    Ok(())
}

pub(crate) fn write_selection(path: &Path, sel: &Selection) -> Result<(), CliError> {
    let orders = sel.candidates.iter().map(|c| c.order as f64).collect();
    let bounds = sel.candidates.iter().map(|c| c.bound).collect();
    save_csv(path, &["order", "bound"], &[orders, bounds])?;
    Ok(())
}

/// Writes a headed CSV of preformatted cells.
pub(crate) fn save_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    let file = File::create(path).map_err(io_err)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let csv_err = |e: csv::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}
