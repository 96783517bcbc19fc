//! Command-line front end: simulate scenario data, fit chains, predict,
//! evaluate, and run replicated experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use htem::data::{
    apply_scaling, destandardize_coefficients, destandardize_response, generate_scenario,
    standardize, Dataset, Scaling, ScenarioId, ScenarioSpec,
};
use htem::experiment::{run_experiment, ExperimentConfig};
use htem::inference::{
    bf_threshold, predictive_draws, prediction_interval, quantile, select_variables, summarize,
    PosteriorSummary,
};
use htem::metrics::{
    coverage_and_width, mead, rmse, tpr_tnr, write_metrics_csv, ReplicateMetrics,
};
use htem::rng::RandomStream;
use htem::sampler::{run_chain, ChainConfig, ChainTrace, ErrorMode, Hyperparameters};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "HTEM_OUT";

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<htem::Error> for Failure {
    fn from(e: htem::Error) -> Self {
        use htem::Error::*;
        let code = match &e {
            Domain(_) | NotPositiveDefinite(_) => EXIT_NUMERIC,
            Dimension(_) | Data(_) | Empty(_) | Io(_) | Csv(_) | Json(_) => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "htem",
    version,
    about = "Robust Bayesian variable selection under hyperbolic and Student-t error mixtures"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ChainArgs {
    /// Error model: htem (mixture), hem (hyperbolic only), tem (t only)
    #[arg(long, default_value = "htem")]
    mode: String,
    #[arg(long, default_value_t = 20_000)]
    iters: usize,
    #[arg(long, default_value_t = 2_000)]
    burnin: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic scenario datasets
    Simulate {
        /// Scenario id: I..VI
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a chain to a CSV dataset (last column, or a column named "y", is the response)
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predictive intervals for a test CSV from a saved fit
    Predict {
        /// fit.json produced by `htem fit`
        fit: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        level: f64,
        /// Extra thinning of the trace before predictive draws
        #[arg(long, default_value_t = 20)]
        predict_thin: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metrics for a predictions file (and optionally a fit against known truth)
    Evaluate {
        /// predictions.csv produced by `htem predict`
        #[arg(long)]
        pred: PathBuf,
        /// meta.json produced by `htem simulate` (enables coefficient metrics)
        #[arg(long)]
        truth: Option<PathBuf>,
        /// fit.json produced by `htem fit` (required with --truth)
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long, default_value_t = 3.2)]
        bf_cut: f64,
        /// Explicit inclusion threshold; overrides --bf-cut
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replicated simulate-fit-predict-evaluate experiment with aggregation
    Replicate {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        p: usize,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 3.2)]
        bf_cut: f64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.9)]
        level: f64,
        #[arg(long, default_value_t = 1_000)]
        test_points: usize,
        #[arg(long, default_value_t = 20)]
        predict_thin: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Everything `predict` and `evaluate` need from a fit, in one file.
#[derive(Serialize, Deserialize)]
struct FitArtifact {
    mode: String,
    chain: ChainConfig,
    scaling: Scaling,
    summary: PosteriorSummary,
    trace: ChainTrace,
}

/// Sidecar written next to each simulated dataset.
#[derive(Serialize, Deserialize)]
struct SimulateMeta {
    scenario: String,
    n: usize,
    p: usize,
    replicate: usize,
    seed: u64,
    beta_true: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = flag
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn parse_scenario(s: &str, n: usize, p: usize) -> Result<ScenarioSpec, Failure> {
    let id: ScenarioId = s
        .parse()
        .map_err(|e: htem::Error| Failure::usage(e.to_string()))?;
    ScenarioSpec::new(id, n, p).map_err(|e| Failure::usage(e.to_string()))
}

fn parse_mode(s: &str) -> Result<ErrorMode, Failure> {
    s.parse()
        .map_err(|e: htem::Error| Failure::usage(e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Numeric CSV with a header; the "y" column (or the last column when no
/// column is named y) is the response.
fn load_numeric_csv(path: &Path) -> Result<(Dataset, Vec<String>), Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.len() < 2 {
        return Err(Failure::data(format!(
            "{}: need at least one covariate and a response column",
            path.display()
        )));
    }
    let y_col = header
        .iter()
        .position(|h| h == "y")
        .unwrap_or(header.len() - 1);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Failure::data(format!(
                "{} row {}: {} fields, expected {}",
                path.display(),
                i + 2,
                record.len(),
                header.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Failure::data(format!(
                    "{} row {} column {:?}: not a number: {:?}",
                    path.display(),
                    i + 2,
                    header[j],
                    field
                ))
            })?;
            if j == y_col {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    let n = y.len();
    let p = header.len() - 1;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != y_col)
        .map(|(_, h)| h.clone())
        .collect();
    Ok((Dataset::new(x, y, n, p)?, names))
}

fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<(), Failure> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=data.p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    writer.write_record(&header)?;
    for i in 0..data.n {
        let mut row: Vec<String> = data.row(i).iter().map(|v| format!("{v}")).collect();
        row.push(format!("{}", data.y[i]));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Simulate {
            scenario,
            n,
            p,
            reps,
            seed,
            out,
        } => cmd_simulate(&scenario, n, p, reps, seed, out),
        Cmd::Fit { data, chain, out } => cmd_fit(&data, &chain, out),
        Cmd::Predict {
            fit,
            data,
            level,
            predict_thin,
            seed,
            out,
        } => cmd_predict(&fit, &data, level, predict_thin, seed, out),
        Cmd::Evaluate {
            pred,
            truth,
            fit,
            bf_cut,
            lambda,
            out,
        } => cmd_evaluate(&pred, truth.as_deref(), fit.as_deref(), bf_cut, lambda, out),
        Cmd::Replicate {
            scenario,
            n,
            p,
            chain,
            reps,
            bf_cut,
            lambda,
            level,
            test_points,
            predict_thin,
            jobs,
            out,
        } => cmd_replicate(
            &scenario,
            n,
            p,
            &chain,
            reps,
            bf_cut,
            lambda,
            level,
            test_points,
            predict_thin,
            jobs,
            out,
        ),
    }
}

fn cmd_simulate(
    scenario: &str,
    n: usize,
    p: usize,
    reps: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if reps == 0 {
        return Err(Failure::usage("--reps must be positive"));
    }
    let spec = parse_scenario(scenario, n, p)?;
    let dir = out_dir(out)?;
    let master = RandomStream::new(seed);
    for r in 0..reps {
        let mut stream = master.substream(r as u64);
        let rep_seed = stream.seed();
        let (data, beta_true) = generate_scenario(&spec, &mut stream)?;
        let stem = format!("scenario_{}_rep{r}", spec.id);
        write_dataset_csv(&dir.join(format!("{stem}.csv")), &data)?;
        write_json(
            &dir.join(format!("{stem}.meta.json")),
            &SimulateMeta {
                scenario: spec.id.to_string(),
                n,
                p,
                replicate: r,
                seed: rep_seed,
                beta_true,
            },
        )?;
        println!("wrote {}", dir.join(format!("{stem}.csv")).display());
    }
    Ok(())
}

fn chain_config(args: &ChainArgs) -> Result<ChainConfig, Failure> {
    let config = ChainConfig {
        iterations: args.iters,
        burn_in: args.burnin,
        thin: args.thin,
        seed: args.seed,
    };
    config.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(config)
}

fn cmd_fit(data_path: &Path, chain: &ChainArgs, out: Option<PathBuf>) -> Result<(), Failure> {
    let mode = parse_mode(&chain.mode)?;
    let config = chain_config(chain)?;
    let dir = out_dir(out)?;
    let (raw, _names) = load_numeric_csv(data_path)?;
    let std = standardize(&raw)?;
    let hyper = Hyperparameters::defaults(raw.p, mode);
    let mut stream = RandomStream::new(config.seed);
    let trace = run_chain(&std.data, &hyper, &config, &mut stream)?;
    let summary = summarize(&trace)?;
    trace.write_csv(&dir.join("trace.csv"))?;
    write_json(
        &dir.join("fit.json"),
        &FitArtifact {
            mode: chain.mode.clone(),
            chain: config,
            scaling: std.scaling,
            summary: summary.clone(),
            trace,
        },
    )?;
    println!(
        "fit: n={} p={} retained={} accept_rate={:.4} P(alpha=0|Y)={:.3}",
        raw.n,
        raw.p,
        (config.iterations - config.burn_in) / config.thin,
        summary.mc3_acceptance,
        summary.p_hyperbolic
    );
    println!("wrote {} and {}", dir.join("fit.json").display(), dir.join("trace.csv").display());
    Ok(())
}

fn cmd_predict(
    fit_path: &Path,
    data_path: &Path,
    level: f64,
    predict_thin: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if !(0.0 < level && level < 1.0) {
        return Err(Failure::usage(format!("--level {level} outside (0, 1)")));
    }
    if predict_thin == 0 {
        return Err(Failure::usage("--predict-thin must be positive"));
    }
    let fit: FitArtifact = read_json(fit_path)?;
    let dir = out_dir(out)?;
    let (test, _names) = load_numeric_csv(data_path)?;
    if test.p != fit.trace.p {
        return Err(Failure::data(format!(
            "test data has {} covariates, fit has {}",
            test.p, fit.trace.p
        )));
    }
    let x_std = apply_scaling(&test.x, test.n, &fit.scaling)?;
    let thin_trace = fit.trace.thin(predict_thin);
    let mut stream = RandomStream::new(seed);
    let mut writer = csv::Writer::from_path(dir.join("predictions.csv"))?;
    writer.write_record(["pred", "lo", "hi", "actual"])?;
    for i in 0..test.n {
        let row = &x_std[i * test.p..(i + 1) * test.p];
        let mut draws = predictive_draws(&thin_trace, row, &mut stream)?;
        let (lo, hi) = prediction_interval(&draws, level)?;
        draws.sort_by(f64::total_cmp);
        let med = quantile(&draws, 0.5);
        writer.write_record([
            format!("{}", destandardize_response(med, &fit.scaling)),
            format!("{}", destandardize_response(lo, &fit.scaling)),
            format!("{}", destandardize_response(hi, &fit.scaling)),
            format!("{}", test.y[i]),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    println!("wrote {}", dir.join("predictions.csv").display());
    Ok(())
}

fn cmd_evaluate(
    pred_path: &Path,
    truth: Option<&Path>,
    fit: Option<&Path>,
    bf_cut: f64,
    lambda: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let dir = out_dir(out)?;
    // predictions.csv: pred, lo, hi, actual
    let mut reader = csv::Reader::from_path(pred_path)
        .map_err(|e| Failure::data(format!("{}: {e}", pred_path.display())))?;
    let mut intervals = Vec::new();
    let mut preds = Vec::new();
    let mut actual = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |j: usize| -> Result<f64, Failure> {
            record
                .get(j)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    Failure::data(format!("{}: bad field {j}", pred_path.display()))
                })
        };
        preds.push(get(0)?);
        intervals.push((get(1)?, get(2)?));
        actual.push(get(3)?);
    }
    let (coverage, median_width) = coverage_and_width(&intervals, &actual)?;
    let mead_val = mead(&preds, &actual)?;

    let mut row = ReplicateMetrics {
        replicate: 0,
        rmse_all: f64::NAN,
        rmse_signal: f64::NAN,
        rmse_noise: f64::NAN,
        tpr: None,
        tnr: None,
        coverage,
        median_width,
        mead: mead_val,
    };
    if let Some(truth_path) = truth {
        let fit_path = fit.ok_or_else(|| {
            Failure::usage("--truth needs --fit to recover fitted coefficients")
        })?;
        let meta: SimulateMeta = read_json(truth_path)?;
        let artifact: FitArtifact = read_json(fit_path)?;
        let (beta_raw, intercept) =
            destandardize_coefficients(&artifact.summary.beta_median, &artifact.scaling)?;
        let mut beta_hat = vec![intercept];
        beta_hat.extend_from_slice(&beta_raw);
        row.rmse_all = rmse(&meta.beta_true, &beta_hat)?;
        let threshold = match lambda {
            Some(l) => l,
            None => bf_threshold(bf_cut, 1.0, (meta.p as f64).sqrt())?,
        };
        let gamma_hat = select_variables(&artifact.summary.inclusion_prob, threshold)?;
        let gamma_true: Vec<bool> = meta.beta_true[1..].iter().map(|b| *b != 0.0).collect();
        let (tpr, tnr) = tpr_tnr(&gamma_hat, &gamma_true)?;
        row.tpr = tpr;
        row.tnr = tnr;
    }
    write_metrics_csv(&dir.join("metrics.csv"), std::slice::from_ref(&row))?;
    println!(
        "coverage={coverage:.4} median_width={median_width:.4} mead={mead_val:.4}{}",
        if row.rmse_all.is_nan() {
            String::new()
        } else {
            format!(" rmse={:.4} tpr={:?} tnr={:?}", row.rmse_all, row.tpr, row.tnr)
        }
    );
    println!("wrote {}", dir.join("metrics.csv").display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_replicate(
    scenario: &str,
    n: usize,
    p: usize,
    chain: &ChainArgs,
    reps: usize,
    bf_cut: f64,
    lambda: Option<f64>,
    level: f64,
    test_points: usize,
    predict_thin: usize,
    jobs: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if reps == 0 || jobs == 0 {
        return Err(Failure::usage("--reps and --jobs must be positive"));
    }
    let spec = parse_scenario(scenario, n, p)?;
    let mode = parse_mode(&chain.mode)?;
    let chain_cfg = chain_config(chain)?;
    let config = ExperimentConfig {
        scenario: spec,
        error_mode: mode,
        replicates: reps,
        chain: chain_cfg,
        bf_cut,
        lambda,
        level,
        test_points,
        predict_thin,
        jobs,
    };
    config
        .selection_threshold()
        .map_err(|e| Failure::usage(e.to_string()))?;
    let dir = out_dir(out)?;
    let report = run_experiment(&config, chain.seed)?;
    let rows: Vec<ReplicateMetrics> = report
        .replicates
        .iter()
        .filter_map(|r| r.metrics.clone())
        .collect();
    write_metrics_csv(&dir.join("metrics.csv"), &rows)?;
    write_json(&dir.join("report.json"), &report)?;
    let agg = &report.aggregate;
    println!(
        "replicates {} ({} failed): mean rmse={:.4} tpr={:?} tnr={:?} coverage={:.4} P(alpha=0|Y)={:.3}",
        agg.completed, agg.failed, agg.mean_rmse_all, agg.mean_tpr, agg.mean_tnr,
        agg.mean_coverage, agg.mean_p_hyperbolic
    );
    println!("wrote {} and {}", dir.join("report.json").display(), dir.join("metrics.csv").display());
    Ok(())
}
