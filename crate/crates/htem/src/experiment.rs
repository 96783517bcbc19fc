//! Replicated synthetic experiments: simulate, fit, predict, and evaluate
//! end to end, with per-replicate random streams derived from one master
//! seed so results are independent of execution order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    apply_scaling, destandardize_coefficients, destandardize_response, generate_scenario,
    standardize, ScenarioSpec,
};
use crate::error::{Error, Result};
use crate::inference::{
    bf_threshold, predictive_draws, prediction_interval, quantile, select_variables, summarize,
};
use crate::metrics::{coverage_and_width, mead, rmse, rmse_subset, tpr_tnr, ReplicateMetrics};
use crate::rng::RandomStream;
use crate::sampler::{run_chain, ChainConfig, ErrorMode, Hyperparameters};

/// Everything needed to reproduce one replicated experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub error_mode: ErrorMode,
    pub replicates: usize,
    pub chain: ChainConfig,
    /// Marginal Bayes-factor cutoff used when `lambda` is not given.
    pub bf_cut: f64,
    pub lambda: Option<f64>,
    pub level: f64,
    pub test_points: usize,
    /// Extra thinning applied to the trace before predictive draws.
    pub predict_thin: usize,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn desk_scale(scenario: ScenarioSpec, error_mode: ErrorMode) -> Self {
        Self {
            scenario,
            error_mode,
            replicates: 20,
            chain: ChainConfig {
                iterations: 20_000,
                burn_in: 2_000,
                thin: 1,
                seed: 0,
            },
            bf_cut: 3.2,
            lambda: None,
            level: 0.9,
            test_points: 1_000,
            predict_thin: 20,
            jobs: 1,
        }
    }

    pub fn selection_threshold(&self) -> Result<f64> {
        match self.lambda {
            Some(l) => Ok(l),
            None => bf_threshold(self.bf_cut, 1.0, (self.scenario.p as f64).sqrt()),
        }
    }
}

/// Outcome of one replicate; failures carry the error text instead of
/// aborting the whole experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub metrics: Option<ReplicateMetrics>,
    pub p_hyperbolic: Option<f64>,
    pub eta_mode: Option<f64>,
    pub mc3_acceptance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub completed: usize,
    pub failed: usize,
    pub mean_rmse_all: f64,
    pub mean_tpr: Option<f64>,
    pub mean_tnr: Option<f64>,
    pub mean_coverage: f64,
    pub mean_median_width: f64,
    pub mean_mead: f64,
    pub mean_p_hyperbolic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateRecord>,
    pub aggregate: Aggregate,
}

/// FNV-1a over the serialized config; stable across runs and platforms.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(config).unwrap_or_default();
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn run_one_replicate(
    config: &ExperimentConfig,
    master: &RandomStream,
    r: usize,
) -> Result<(ReplicateMetrics, f64, f64, f64)> {
    let rep_stream = master.substream(r as u64);
    let mut data_stream = rep_stream.substream(1);
    let mut chain_stream = rep_stream.substream(2);
    let mut test_stream = rep_stream.substream(3);
    let mut pred_stream = rep_stream.substream(4);

    let (train, beta_true) = generate_scenario(&config.scenario, &mut data_stream)?;
    let std = standardize(&train)?;
    let hyper = Hyperparameters::defaults(train.p, config.error_mode);
    let trace = run_chain(&std.data, &hyper, &config.chain, &mut chain_stream)?;
    let summary = summarize(&trace)?;

    // coefficient recovery on the raw scale, intercept included
    let (beta_raw, intercept) = destandardize_coefficients(&summary.beta_median, &std.scaling)?;
    let mut beta_hat = Vec::with_capacity(train.p + 1);
    beta_hat.push(intercept);
    beta_hat.extend(beta_raw);
    let signal_idx: Vec<usize> = (0..beta_true.len()).filter(|&j| beta_true[j] != 0.0).collect();
    let noise_idx: Vec<usize> = (0..beta_true.len()).filter(|&j| beta_true[j] == 0.0).collect();
    let rmse_all = rmse(&beta_true, &beta_hat)?;
    let rmse_signal = rmse_subset(&beta_true, &beta_hat, &signal_idx)?;
    let rmse_noise = if noise_idx.is_empty() {
        0.0
    } else {
        rmse_subset(&beta_true, &beta_hat, &noise_idx)?
    };

    let lambda = config.selection_threshold()?;
    let gamma_hat = select_variables(&summary.inclusion_prob, lambda)?;
    let gamma_true: Vec<bool> = beta_true[1..].iter().map(|b| *b != 0.0).collect();
    let (tpr, tnr) = tpr_tnr(&gamma_hat, &gamma_true)?;

    // fresh test points, evaluated on the raw response scale
    let test_spec = ScenarioSpec {
        n: config.test_points,
        ..config.scenario.clone()
    };
    let (test, _) = generate_scenario(&test_spec, &mut test_stream)?;
    let x_std = apply_scaling(&test.x, test.n, &std.scaling)?;
    let pred_trace = trace.thin(config.predict_thin);
    let mut intervals = Vec::with_capacity(test.n);
    let mut point_preds = Vec::with_capacity(test.n);
    for i in 0..test.n {
        let draws = predictive_draws(
            &pred_trace,
            &x_std[i * test.p..(i + 1) * test.p],
            &mut pred_stream,
        )?;
        let (lo, hi) = prediction_interval(&draws, config.level)?;
        intervals.push((
            destandardize_response(lo, &std.scaling),
            destandardize_response(hi, &std.scaling),
        ));
        let mut sorted = draws;
        sorted.sort_by(f64::total_cmp);
        point_preds.push(destandardize_response(quantile(&sorted, 0.5), &std.scaling));
    }
    let (coverage, median_width) = coverage_and_width(&intervals, &test.y)?;
    let mead_val = mead(&point_preds, &test.y)?;

    Ok((
        ReplicateMetrics {
            replicate: r,
            rmse_all,
            rmse_signal,
            rmse_noise,
            tpr,
            tnr,
            coverage,
            median_width,
            mead: mead_val,
        },
        summary.p_hyperbolic,
        summary.eta_mode,
        summary.mc3_acceptance,
    ))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Run every replicate (in parallel up to `jobs`) and aggregate.
pub fn run_experiment(config: &ExperimentConfig, master_seed: u64) -> Result<ExperimentReport> {
    if config.replicates == 0 {
        return Err(Error::Empty("replicate count"));
    }
    config.chain.validate()?;
    let master = RandomStream::new(master_seed);
    let runner = |r: usize| -> ReplicateRecord {
        let seed = master.substream(r as u64).seed();
        match run_one_replicate(config, &master, r) {
            Ok((metrics, p_hyp, eta_mode, acc)) => ReplicateRecord {
                replicate: r,
                seed,
                metrics: Some(metrics),
                p_hyperbolic: Some(p_hyp),
                eta_mode: Some(eta_mode),
                mc3_acceptance: Some(acc),
                error: None,
            },
            Err(e) => ReplicateRecord {
                replicate: r,
                seed,
                metrics: None,
                p_hyperbolic: None,
                eta_mode: None,
                mc3_acceptance: None,
                error: Some(e.to_string()),
            },
        }
    };
    let records: Vec<ReplicateRecord> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Data(format!("thread pool: {e}")))?;
        pool.install(|| (0..config.replicates).into_par_iter().map(runner).collect())
    } else {
        (0..config.replicates).map(runner).collect()
    };

    let ok: Vec<&ReplicateMetrics> = records.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let aggregate = Aggregate {
        completed: ok.len(),
        failed: records.len() - ok.len(),
        mean_rmse_all: mean(ok.iter().map(|m| m.rmse_all)),
        mean_tpr: mean_opt(ok.iter().map(|m| m.tpr)),
        mean_tnr: mean_opt(ok.iter().map(|m| m.tnr)),
        mean_coverage: mean(ok.iter().map(|m| m.coverage)),
        mean_median_width: mean(ok.iter().map(|m| m.median_width)),
        mean_mead: mean(ok.iter().map(|m| m.mead)),
        mean_p_hyperbolic: mean(records.iter().filter_map(|r| r.p_hyperbolic)),
    };
    Ok(ExperimentReport {
        schema_version: 1,
        master_seed,
        config_hash: config_hash(config),
        config: config.clone(),
        replicates: records,
        aggregate,
    })
}
