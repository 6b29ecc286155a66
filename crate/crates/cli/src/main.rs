use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ordstat::bounds::{
    kmax_bounds, kmin_bounds, kmin_bounds_gaussian_closed, kmin_moment_lower, max1_bounds,
    min_moment_upper,
};
use ordstat::montecarlo::{estimate_order_stats, MonteCarloEstimate, Statistic};
use ordstat::partition::build_partition;
use ordstat::verify::{run_suites, CheckRow, Suite, VerifyConfig};
use ordstat::weights::parse_values;
use ordstat::{
    BoundConstants, BoundReport, ConstantOverrides, DistributionModel, Error, Order,
    OrliczFunction, Weights,
};

const THREADS_ENV: &str = "ORDSTAT_THREADS";

#[derive(Parser)]
#[command(
    name = "ordstat",
    version,
    about = "Bounds and simulations for expected order statistics of weighted i.i.d. sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-sided bounds on E k-min |x_i ξ_i| (ascending weights).
    BoundsKmin(KminArgs),
    /// Two-sided bounds on E k-max |x_i ξ_i| (descending weights).
    BoundsKmax(KmaxArgs),
    /// Two-sided bounds on E max |x_i ξ_i|.
    BoundsMax1(Max1Args),
    /// Split 1..n into k consecutive blocks with a norm certificate (ascending weights).
    Partition(PartitionArgs),
    /// Monte Carlo estimate of expected order statistics.
    Simulate(SimulateArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// `gaussian`, `symexp:<rate>` or `table:<path>`.
    #[arg(long, default_value = "gaussian")]
    dist: String,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct KminArgs {
    #[command(flatten)]
    common: Common,
    /// One positive decimal per line.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    k: usize,
    /// Report moment bounds of order p instead.
    #[arg(long)]
    p: Option<f64>,
    /// Use the Gaussian closed form.
    #[arg(long)]
    closed_form: bool,
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long)]
    kmax_upper_c: Option<f64>,
    #[arg(long)]
    max1_c_low: Option<f64>,
    #[arg(long)]
    max1_c_high: Option<f64>,
}

impl ConstantArgs {
    fn overrides(&self) -> ConstantOverrides {
        ConstantOverrides {
            kmax_upper_c: self.kmax_upper_c,
            max1_c_low: self.max1_c_low,
            max1_c_high: self.max1_c_high,
        }
    }
}

#[derive(Args)]
struct KmaxArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Args)]
struct Max1Args {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    weights: PathBuf,
    #[command(flatten)]
    constants: ConstantArgs,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    k: usize,
    /// `linear`, `quadratic`, `power:<q>`, `n` (−ln F of --dist) or `gaussian-h`.
    #[arg(long, default_value = "n")]
    h: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    Kmin,
    Kmax,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    weights: PathBuf,
    /// One or more comma-separated k; all share the same draws.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, value_enum, default_value = "kmin")]
    statistic: StatisticArg,
    /// Estimate E (k-min)^p instead of E k-min.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// `all` or a comma-separated list of suite names.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Randomized configurations per suite.
    #[arg(long, default_value_t = 20)]
    cases: usize,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Lib(Error),
    Checks(usize),
    Output(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_weights(path: &Path, order: Order) -> Result<Weights, Error> {
    Weights::parse_csv(&read_text(path)?, order)
}

fn emit_json<T: Serialize>(value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Output(e.to_string()))?;
    let mut out = io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Failure::Output(e.to_string()))
}

fn emit_csv<T: Serialize>(rows: &[T]) -> Outcome {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Output(e.to_string()))
}

#[derive(Serialize)]
struct BoundRow<'a> {
    bound: String,
    model: &'a str,
    n: usize,
    k: usize,
    lower: f64,
    upper: Option<f64>,
    upper_unit: f64,
    inner_max: f64,
    argmax_j: usize,
    k0: Option<usize>,
    m_norm: Option<f64>,
    empirical_constant: bool,
}

fn emit_report(report: &BoundReport, format: Format) -> Outcome {
    match format {
        Format::Json => emit_json(report),
        Format::Csv => {
            let bound = serde_json::to_value(report.bound)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            emit_csv(&[BoundRow {
                bound,
                model: &report.model,
                n: report.n,
                k: report.k,
                lower: report.lower,
                upper: report.upper,
                upper_unit: report.upper_unit,
                inner_max: report.inner_max,
                argmax_j: report.argmax_j,
                k0: report.k0,
                m_norm: report.m_norm,
                empirical_constant: report.empirical_constant,
            }])
        }
    }
}

#[derive(Serialize)]
struct MomentReport {
    model: String,
    n: usize,
    k: usize,
    p: f64,
    lower: f64,
    /// Only available for k = 1.
    upper: Option<f64>,
}

fn bounds_kmin(a: &KminArgs) -> Outcome {
    let model = DistributionModel::from_spec(&a.common.dist)?;
    let x = read_weights(&a.weights, Order::Ascending)?;
    if let Some(p) = a.p {
        let report = MomentReport {
            model: model.to_string(),
            n: x.len(),
            k: a.k,
            p,
            lower: kmin_moment_lower(&x, &model, a.k, p)?,
            upper: if a.k == 1 {
                Some(min_moment_upper(&x, &model, p)?)
            } else {
                None
            },
        };
        return match a.common.format {
            Format::Json => emit_json(&report),
            Format::Csv => emit_csv(&[report]),
        };
    }
    let report = if a.closed_form {
        if !matches!(model.family(), ordstat::distributions::Family::Gaussian)
            || model.scale() != 1.0
        {
            return Err(Error::Domain("--closed-form needs --dist gaussian".into()).into());
        }
        kmin_bounds_gaussian_closed(&x, a.k)?
    } else {
        kmin_bounds(&x, &model, a.k)?
    };
    emit_report(&report, a.common.format)
}

fn constants_for(model: &DistributionModel, c: &ConstantArgs) -> Result<BoundConstants, Error> {
    let overrides = c.overrides();
    overrides.validate()?;
    Ok(BoundConstants::for_model(model).with_overrides(&overrides))
}

fn bounds_kmax(a: &KmaxArgs) -> Outcome {
    let model = DistributionModel::from_spec(&a.common.dist)?;
    let x = read_weights(&a.weights, Order::Descending)?;
    let constants = constants_for(&model, &a.constants)?;
    emit_report(&kmax_bounds(&x, &model, a.k, &constants)?, a.common.format)
}

fn bounds_max1(a: &Max1Args) -> Outcome {
    let model = DistributionModel::from_spec(&a.common.dist)?;
    let x = parse_values(&read_text(&a.weights)?)?;
    let constants = constants_for(&model, &a.constants)?;
    emit_report(&max1_bounds(&x, &model, &constants)?, a.common.format)
}

fn orlicz_from_spec(spec: &str, model: &DistributionModel) -> Result<OrliczFunction, Error> {
    match spec {
        "linear" => Ok(OrliczFunction::linear()),
        "quadratic" => OrliczFunction::power(2.0),
        "n" => OrliczFunction::make_n(model),
        "gaussian-h" => Ok(OrliczFunction::gaussian_h()),
        _ => match spec.strip_prefix("power:") {
            Some(q) => {
                let q: f64 = q
                    .parse()
                    .map_err(|_| Error::Domain(format!("invalid exponent in `{spec}`")))?;
                OrliczFunction::power(q)
            }
            None => Err(Error::Domain(format!(
                "unknown H `{spec}`, expected linear, quadratic, power:<q>, n or gaussian-h"
            ))),
        },
    }
}

#[derive(Serialize)]
struct BlockRow {
    block: usize,
    start: usize,
    end: usize,
}

fn partition(a: &PartitionArgs) -> Outcome {
    let model = DistributionModel::from_spec(&a.common.dist)?;
    let x = read_weights(&a.weights, Order::Ascending)?;
    let h = orlicz_from_spec(&a.h, &model)?;
    let result = build_partition(&x, &h, a.k)?;
    match a.common.format {
        Format::Json => emit_json(&result),
        Format::Csv => {
            let rows: Vec<_> = result
                .blocks
                .iter()
                .enumerate()
                .map(|(i, &(start, end))| BlockRow {
                    block: i + 1,
                    start,
                    end,
                })
                .collect();
            emit_csv(&rows)
        }
    }
}

#[derive(Serialize)]
struct EstimateRow {
    statistic: &'static str,
    p: Option<f64>,
    k: usize,
    mean: f64,
    std_error: f64,
    ci_halfwidth: f64,
    replications: usize,
    seed: u64,
}

fn estimate_row(e: &MonteCarloEstimate) -> EstimateRow {
    let (statistic, p) = match e.statistic {
        Statistic::Kmin => ("kmin", None),
        Statistic::Kmax => ("kmax", None),
        Statistic::KminPower(p) => ("kmin_power", Some(p)),
    };
    EstimateRow {
        statistic,
        p,
        k: e.k,
        mean: e.mean,
        std_error: e.std_error,
        ci_halfwidth: e.ci_halfwidth,
        replications: e.replications,
        seed: e.seed,
    }
}

fn simulate(a: &SimulateArgs) -> Outcome {
    let model = DistributionModel::from_spec(&a.common.dist)?;
    let x = parse_values(&read_text(&a.weights)?)?;
    let statistic = match (a.statistic, a.p) {
        (StatisticArg::Kmin, None) => Statistic::Kmin,
        (StatisticArg::Kmin, Some(p)) => Statistic::KminPower(p),
        (StatisticArg::Kmax, None) => Statistic::Kmax,
        (StatisticArg::Kmax, Some(_)) => {
            return Err(Error::Domain("--p applies to --statistic kmin only".into()).into())
        }
    };
    let queries: Vec<_> = a.k.iter().map(|&k| (k, statistic)).collect();
    let estimates = estimate_order_stats(&x, &model, &queries, a.reps, a.seed)?;
    match a.common.format {
        Format::Json => emit_json(&estimates),
        Format::Csv => emit_csv(&estimates.iter().map(estimate_row).collect::<Vec<_>>()),
    }
}

fn verify(a: &VerifyArgs) -> Outcome {
    let model = DistributionModel::from_spec(&a.common.dist)?;
    let suites = Suite::parse_list(&a.suite)?;
    let cfg = VerifyConfig {
        cases: a.cases,
        replications: a.reps,
        seed: a.seed,
    };
    let rows: Vec<CheckRow> = run_suites(&suites, &model, &cfg)?;
    match a.common.format {
        Format::Json => emit_json(&rows)?,
        Format::Csv => emit_csv(&rows)?,
    }
    match rows.iter().filter(|r| !r.pass).count() {
        0 => Ok(()),
        failed => Err(Failure::Checks(failed)),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let outcome = match &cli.command {
        Command::BoundsKmin(a) => bounds_kmin(a),
        Command::BoundsKmax(a) => bounds_kmax(a),
        Command::BoundsMax1(a) => bounds_max1(a),
        Command::Partition(a) => partition(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_precondition() { 2 } else { 1 })
        }
        Err(Failure::Checks(n)) => {
            eprintln!("error: {n} verification checks failed");
            ExitCode::from(1)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("error: writing output: {msg}");
            ExitCode::from(1)
        }
    }
}
