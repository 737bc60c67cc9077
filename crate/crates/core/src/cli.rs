//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors. Runtime
//! errors are reported as a single `error: …` line on stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::{
    self, bound_validity_experiment, estimate_error, fit_scaling, missing_mass_experiment, net_growth_experiment,
    run_consistency_experiment, write_bench_csv, write_net_growth_csv, ExperimentConfig,
};
use crate::io::{read_dataset_file, read_matrix_file, read_points_file, write_dataset};
use crate::knn::{default_k, KnnModel};
use crate::metric::{check_triangle_sampled, Dataset, Metric, PointSet};
use crate::model::{self, FitOptions, OptiNetModel, SelectionMode};
use crate::net::farthest_first_with;
use crate::par::Parallelism;

const TRIANGLE_TRIALS: usize = 100_000;

#[derive(Parser, Debug)]
#[command(name = "optinet", version, about = "Compressed 1-NN classification over metric spaces")]
struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model and write it out.
    Fit(FitArgs),
    /// Label the points of a CSV with a fitted model.
    Predict(PredictArgs),
    /// Test error of a model (or of a fresh fit) and optionally k-NN.
    Eval(EvalArgs),
    /// Excess risk of OptiNet and k-NN along an n grid.
    ExpConsistency(ExpArgs),
    /// Monte Carlo frequency of the test error exceeding the bound.
    ExpBound(ExpArgs),
    /// Compression size of a fixed-scale net as n grows.
    ExpNetGrowth(ExpArgs),
    /// Estimated missing mass at a fixed scale as n grows.
    ExpMissingMass(ExpArgs),
    /// Fit wall time along the n grid.
    Bench(BenchArgs),
    /// Write a synthetic dataset drawn from a config's generator.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    L2,
    L1,
    Linf,
    Hamming,
    Precomputed,
}

impl MetricArg {
    fn id(self) -> &'static str {
        match self {
            MetricArg::L2 => "l2",
            MetricArg::L1 => "l1",
            MetricArg::Linf => "linf",
            MetricArg::Hamming => "hamming",
            MetricArg::Precomputed => "precomputed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SelectionArg {
    Bound,
    Holdout,
}

impl From<SelectionArg> for SelectionMode {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::Bound => SelectionMode::Bound,
            SelectionArg::Holdout => SelectionMode::Holdout,
        }
    }
}

#[derive(Args, Debug)]
struct MetricOpts {
    #[arg(long, value_enum, default_value = "l2")]
    metric: MetricArg,
    /// Distance matrix for `--metric precomputed`.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

impl MetricOpts {
    fn resolve(&self) -> Result<Metric> {
        let matrix = match (&self.matrix, self.metric) {
            (Some(path), MetricArg::Precomputed) => Some(Arc::new(read_matrix_file(path)?)),
            (Some(_), _) => return Err(Error::param("--matrix only applies to --metric precomputed")),
            (None, _) => None,
        };
        Metric::from_id(self.metric.id(), matrix)
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    metric: MetricOpts,
    /// Confidence; defaults to min(1/n², 1/2).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum, default_value = "bound")]
    selection: SelectionArg,
    /// Seed of the hold-out split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample triangle-inequality checks before fitting.
    #[arg(long)]
    check_metric: bool,
    /// Write the traversal order, radii and prefix statistics as CSV.
    #[arg(long)]
    dump_hierarchy: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Only needed for precomputed models, which do not store the matrix.
    #[command(flatten)]
    metric: MetricOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Fitted model; without it a model is fit on `--data`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Training data for a fresh fit and for the k-NN baseline.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    test_data: PathBuf,
    #[command(flatten)]
    metric: MetricOpts,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum, default_value = "bound")]
    selection: SelectionArg,
    /// Also evaluate k-NN with this k (0 means the √n schedule).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExpArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    selection: Option<SelectionArg>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let par = if cli.sequential { Parallelism::Sequential } else { Parallelism::default() };
    match execute(cli.command, par) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cmd: Command, par: Parallelism) -> Result<()> {
    match cmd {
        Command::Fit(a) => cmd_fit(a, par),
        Command::Predict(a) => cmd_predict(a, par),
        Command::Eval(a) => cmd_eval(a, par),
        Command::ExpConsistency(a) => {
            let (cfg, out) = load_config(&a)?;
            let report = run_consistency_experiment(&cfg, par)?;
            report.write(output(out.as_deref())?)
        }
        Command::ExpBound(a) => {
            let (cfg, out) = load_config(&a)?;
            let report = bound_validity_experiment(&cfg, par)?;
            report.write(output(out.as_deref())?)
        }
        Command::ExpNetGrowth(a) => {
            let (cfg, out) = load_config(&a)?;
            let rows = net_growth_experiment(&cfg, par)?;
            write_net_growth_csv(&rows, output(out.as_deref())?)
        }
        Command::ExpMissingMass(a) => {
            let (cfg, out) = load_config(&a)?;
            let report = missing_mass_experiment(&cfg, par)?;
            report.write(output(out.as_deref())?)
        }
        Command::Bench(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let rows = fit_scaling(&cfg.generator, &cfg.n_grid, cfg.trials, cfg.seed, par)?;
            write_bench_csv(&rows, output(a.out.as_deref().or(cfg.out.as_deref()))?)
        }
        Command::Sample(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let ds = cfg.generator.sample(a.n, a.seed)?;
            write_dataset(&ds, output(a.out.as_deref())?)
        }
    }
}

fn load_config(a: &ExpArgs) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.delta.is_some() {
        cfg.delta = a.delta;
    }
    if let Some(s) = a.selection {
        cfg.selection = s.into();
    }
    if a.k.is_some() {
        cfg.k = a.k;
    }
    cfg.validate()?;
    let out = a.out.clone().or_else(|| cfg.out.clone());
    Ok((cfg, out))
}

fn check_metric(ds: &Dataset, metric: &Metric) -> Result<()> {
    let ids;
    let points = match metric {
        // check the whole matrix, not just the ids that occur in the data
        Metric::Precomputed(m) => {
            ids = PointSet::ids((0..m.side()).collect());
            &ids
        }
        _ => ds.points(),
    };
    let d = metric.bind(points)?;
    match check_triangle_sampled(&d, TRIANGLE_TRIALS, 1e-9, 0) {
        None => Ok(()),
        Some(v) => Err(Error::InvalidMatrix(format!(
            "triangle inequality fails for ({}, {}, {}) by {}",
            v.a, v.b, v.c, v.excess
        ))),
    }
}

fn fit_model(ds: &Dataset, metric: &Metric, selection: SelectionMode, delta: Option<f64>, seed: u64, par: Parallelism) -> Result<OptiNetModel> {
    match selection {
        SelectionMode::Bound => model::fit_with(ds, metric, &FitOptions { delta, start: 0, parallelism: par }),
        SelectionMode::Holdout => {
            if delta.is_some() {
                return Err(Error::param("--delta does not apply to hold-out selection"));
            }
            model::fit_holdout_with(ds, metric, seed, par)
        }
    }
}

fn cmd_fit(a: FitArgs, par: Parallelism) -> Result<()> {
    let metric = a.metric.resolve()?;
    let ds = read_dataset_file(&a.data)?;
    if a.check_metric {
        check_metric(&ds, &metric)?;
    }
    let model = fit_model(&ds, &metric, a.selection.into(), a.delta, a.seed, par)?;
    if let Some(path) = &a.dump_hierarchy {
        let h = farthest_first_with(&ds, &metric, 0, par)?;
        h.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let mut w = output(a.out.as_deref())?;
    w.write_all(model.to_text().as_bytes())?;
    w.flush()?;
    Ok(())
}

fn load_model(path: &Path, opts: &MetricOpts) -> Result<OptiNetModel> {
    let text = std::fs::read_to_string(path)?;
    let recorded = text
        .lines()
        .nth(1)
        .and_then(|l| l.strip_prefix("metric_id = "))
        .ok_or_else(|| Error::parse("model file has no metric_id"))?;
    let metric = if recorded == "precomputed" || opts.matrix.is_some() {
        opts.resolve()?
    } else {
        Metric::from_id(recorded, None)?
    };
    OptiNetModel::from_text(&text, &metric)
}

fn cmd_predict(a: PredictArgs, par: Parallelism) -> Result<()> {
    let model = load_model(&a.model, &a.metric)?;
    let (points, _) = read_points_file(&a.data)?;
    let preds = model.predict_all(&points, par)?;
    let mut out = csv::Writer::from_writer(output(a.out.as_deref())?);
    out.write_record(["label"])?;
    for p in preds {
        out.write_record([p.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval(a: EvalArgs, par: Parallelism) -> Result<()> {
    let train = a.data.as_deref().map(read_dataset_file).transpose()?;
    let test = read_dataset_file(&a.test_data)?;
    let (model, metric) = match (&a.model, &train) {
        (Some(path), _) => {
            let m = load_model(path, &a.metric)?;
            let metric = m.metric().clone();
            (m, metric)
        }
        (None, Some(train)) => {
            let metric = a.metric.resolve()?;
            (fit_model(train, &metric, a.selection.into(), a.delta, a.seed, par)?, metric)
        }
        (None, None) => return Err(Error::param("eval needs --model or --data")),
    };
    let mut w = output(a.out.as_deref())?;
    let e = estimate_error(&model, &test, par)?;
    writeln!(
        w,
        "optinet test_err={} std_err={} M={} gamma={} alpha={} q={}",
        e.rate,
        e.std_err,
        model.m_star(),
        model.gamma_star(),
        model.alpha_star(),
        model.q_star()
    )?;
    if let Some(k) = a.k {
        let train = train.as_ref().ok_or_else(|| Error::param("--k needs --data for the k-NN training set"))?;
        let k = if k == 0 { default_k(train.len()) } else { k };
        let knn = KnnModel::new(train, &metric, k)?;
        let e = harness::estimate_error(&knn, &test, par)?;
        writeln!(w, "knn test_err={} std_err={} k={}", e.rate, e.std_err, k)?;
    }
    w.flush()?;
    Ok(())
}

