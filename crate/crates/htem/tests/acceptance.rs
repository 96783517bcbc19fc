//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them on success).
//!
//! The desk-scale replicated experiments (criteria 1-3) share cached runs;
//! the whole suite is several minutes of single-core compute.

mod common;

use std::sync::OnceLock;

use common::*;
use htem::data::{ScenarioId, ScenarioSpec};
use htem::experiment::{run_experiment, ExperimentConfig, ExperimentReport};
use htem::inference::bf_threshold;
use htem::rng::RandomStream;
use htem::sampler::{
    log_model_weight, run_chain, update_gamma_mh, ChainConfig, ErrorMode, Hyperparameters,
    ModelState,
};
use htem::special::{log_add_exp, log_bessel_k};

fn verdict(criterion: u32, ok: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} FAILED: {detail}");
}

/// Full desk-scale runs (20 reps, 20k iterations, 1000 test points),
/// cached because criteria 1-3 all read them.
fn full_report(id: ScenarioId) -> &'static ExperimentReport {
    static REPORTS: [OnceLock<ExperimentReport>; 2] = [OnceLock::new(), OnceLock::new()];
    let slot = match id {
        ScenarioId::I => 0,
        ScenarioId::III => 1,
        _ => panic!("full reports only cached for I and III"),
    };
    REPORTS[slot].get_or_init(|| {
        let config = ExperimentConfig::desk_scale(
            ScenarioSpec::new(id, 100, 100).unwrap(),
            ErrorMode::Htem,
        );
        run_experiment(&config, 20_260_824).unwrap()
    })
}

/// Shorter runs for the error-model-detection bands of criterion 3; the
/// criterion pins replicates (20) but not chain length.
fn short_report(id: ScenarioId) -> ExperimentReport {
    let mut config = ExperimentConfig::desk_scale(
        ScenarioSpec::new(id, 100, 100).unwrap(),
        ErrorMode::Htem,
    );
    config.chain.iterations = 10_000;
    config.chain.burn_in = 1_000;
    config.test_points = 10;
    config.predict_thin = 100;
    run_experiment(&config, 20_260_824).unwrap()
}

#[test]
fn criterion_1_scenario_i_recovery() {
    let report = full_report(ScenarioId::I);
    let agg = &report.aggregate;
    let lambda = report.config.selection_threshold().unwrap();
    let ok = report.aggregate.failed == 0
        && (0.03..=0.13).contains(&agg.mean_rmse_all)
        && agg.mean_tpr == Some(1.0)
        && agg.mean_tnr.unwrap_or(0.0) >= 0.97;
    verdict(
        1,
        ok,
        &format!(
            "Scenario I (20 reps): mean RMSE {:.4} (band [0.03, 0.13]), TPR {:?}, TNR {:?} at lambda {:.4}",
            agg.mean_rmse_all, agg.mean_tpr, agg.mean_tnr, lambda
        ),
    );
}

#[test]
fn criterion_2_coverage() {
    let cov_i = full_report(ScenarioId::I).aggregate.mean_coverage;
    let cov_iii = full_report(ScenarioId::III).aggregate.mean_coverage;
    let ok = (0.87..=0.93).contains(&cov_i) && (0.87..=0.93).contains(&cov_iii);
    verdict(
        2,
        ok,
        &format!(
            "mean 90% coverage: Scenario I {cov_i:.4}, Scenario III {cov_iii:.4} (band [0.87, 0.93], 1000 test points)"
        ),
    );
}

#[test]
fn criterion_3_error_model_detection() {
    let p_i = full_report(ScenarioId::I).aggregate.mean_p_hyperbolic;
    let p_iii = full_report(ScenarioId::III).aggregate.mean_p_hyperbolic;
    let p_ii = short_report(ScenarioId::II).aggregate.mean_p_hyperbolic;
    let p_iv = short_report(ScenarioId::IV).aggregate.mean_p_hyperbolic;
    let p_v = short_report(ScenarioId::V).aggregate.mean_p_hyperbolic;
    let p_vi = short_report(ScenarioId::VI).aggregate.mean_p_hyperbolic;
    let ok = p_i > 0.6
        && p_iv > 0.6
        && p_iii < 0.4
        && p_vi < 0.4
        && (0.4..=0.7).contains(&p_ii)
        && (0.4..=0.7).contains(&p_v);
    verdict(
        3,
        ok,
        &format!(
            "mean P(alpha=0|Y): I {p_i:.3}, IV {p_iv:.3} (>0.6); III {p_iii:.3}, VI {p_vi:.3} (<0.4); II {p_ii:.3}, V {p_v:.3} ([0.4, 0.7])"
        ),
    );
}

#[test]
fn criterion_4_brute_force_model_posterior() {
    // p=2, n=4 toy with everything but gamma frozen
    let x = vec![0.8, -0.5, -1.2, 0.3, 0.4, 1.1, -0.9, -0.6];
    let y = vec![1.5, -0.7, 0.9, -1.1];
    let data = htem::data::Dataset::new(x, y, 4, 2).unwrap();
    let sigma2 = vec![0.6, 1.0, 1.7, 0.9];
    let (tau2, rho2, pi) = (0.9, 1.3, 0.35);
    let models = [[false, false], [true, false], [false, true], [true, true]];
    let logw: Vec<f64> = models
        .iter()
        .map(|g| log_model_weight(g, &sigma2, tau2, rho2, pi, &data).unwrap())
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    let exact: Vec<f64> = w.iter().map(|v| v / z).collect();

    let mut state = ModelState {
        gamma: vec![false, false],
        beta: vec![0.0, 0.0],
        sigma2,
        tau2,
        rho2,
        alpha: false,
        eta: 1.0,
        pi_tilde: pi,
        omega: 0.5,
    };
    let mut stream = RandomStream::new(0xACC4);
    let steps = 200_000;
    let mut counts = [0usize; 4];
    for _ in 0..steps {
        update_gamma_mh(&mut state, &data, &mut stream).unwrap();
        counts[state.gamma[0] as usize + 2 * state.gamma[1] as usize] += 1;
    }
    let tv: f64 = counts
        .iter()
        .zip(&exact)
        .map(|(c, e)| (*c as f64 / steps as f64 - e).abs())
        .sum::<f64>()
        / 2.0;
    verdict(
        4,
        tv < 0.01,
        &format!("MC3 occupancy vs enumeration over {steps} steps: TV {tv:.5} (< 0.01)"),
    );
}

#[test]
fn criterion_5_distribution_suite() {
    let mut failures = Vec::new();
    for triple in GIG_TRIPLES {
        if let Err(msg) = check_gig_mean(triple, 20_000, 3.0) {
            failures.push(msg);
        }
    }
    let (d_h, bound) = check_mixture_ks(0.5, 2.0, false, 0xACC5);
    if d_h >= bound {
        failures.push(format!("hyperbolic mixture KS {d_h}"));
    }
    let (d_t, bound) = check_mixture_ks(2.1, 1.0, true, 0xACC6);
    if d_t >= bound {
        failures.push(format!("student mixture KS {d_t}"));
    }
    let mut worst_rec = 0.0f64;
    for nu_i in 0..=5 {
        let nu = nu_i as f64;
        for &x in &[0.1, 1.0, 10.0, 100.0] {
            let lkm = log_bessel_k(nu - 1.0, x).unwrap();
            let lk = log_bessel_k(nu, x).unwrap();
            let lhs = log_bessel_k(nu + 1.0, x).unwrap();
            let rhs = log_add_exp(lkm, (2.0 * nu / x).ln() + lk);
            worst_rec = worst_rec.max(((lhs - rhs).exp() - 1.0).abs());
        }
    }
    if worst_rec >= 1e-8 {
        failures.push(format!("Bessel recurrence rel err {worst_rec}"));
    }
    verdict(
        5,
        failures.is_empty(),
        &format!(
            "12 GIG means within 3 SE, mixture KS {d_h:.4}/{d_t:.4} (< 0.006), Bessel recurrence {worst_rec:.2e} (< 1e-8){}{}",
            if failures.is_empty() { "" } else { "; failures: " },
            failures.join("; ")
        ),
    );
}

#[test]
fn criterion_6_geweke() {
    let results = geweke_ks(0x6E3E, 10_000, 100);
    let ok = results.iter().all(|(_, d, crit)| d < crit);
    let detail: Vec<String> = results
        .iter()
        .map(|(name, d, crit)| format!("{name} KS {d:.4} (< {crit:.4})"))
        .collect();
    verdict(6, ok, &format!("n=10, p=2 joint test: {}", detail.join(", ")));
}

#[test]
fn criterion_7_threshold_arithmetic() {
    let t1 = bf_threshold(3.2, 1.0, 10.0).unwrap();
    let t2 = bf_threshold(1.0, 1.0, 1.0).unwrap();
    let t3 = bf_threshold(10.0, 1.0, 10.0).unwrap();
    let ok = (t1 - 0.32 / 1.32).abs() < 1e-10 && t2 == 0.5 && t3 == 0.5;
    verdict(
        7,
        ok,
        &format!("bf_threshold(3.2,1,10) = {t1:.10}, (1,1,1) = {t2}, (10,1,10) = {t3}"),
    );
}

#[test]
fn criterion_8_mode_collapse_equivalence() {
    let spec = ScenarioSpec::new(ScenarioId::I, 50, 10).unwrap();
    let mut data_stream = RandomStream::new(0xACC8);
    let (raw, _) = htem::data::generate_scenario(&spec, &mut data_stream).unwrap();
    let std = htem::data::standardize(&raw).unwrap();
    let config = ChainConfig {
        iterations: 10_000,
        burn_in: 1_000,
        thin: 1,
        seed: 0,
    };
    let hem = Hyperparameters::defaults(10, ErrorMode::Hem);
    let mut htem_fixed = Hyperparameters::defaults(10, ErrorMode::Htem);
    htem_fixed.fixed_omega = Some(0.0);
    let mut s1 = RandomStream::new(81);
    let mut s2 = RandomStream::new(82);
    let trace_hem = run_chain(&std.data, &hem, &config, &mut s1).unwrap();
    let trace_mix = run_chain(&std.data, &htem_fixed, &config, &mut s2).unwrap();
    assert!(trace_mix.draws.iter().all(|d| !d.alpha));
    // thin the traces so the iid KS critical value applies
    let b1: Vec<f64> = trace_hem.thin(10).draws.iter().map(|d| d.beta[0]).collect();
    let b2: Vec<f64> = trace_mix.thin(10).draws.iter().map(|d| d.beta[0]).collect();
    let mut a = b1.clone();
    let mut b = b2.clone();
    let d = ks_two_sample(&mut a, &mut b);
    let crit = ks_two_sample_critical(b1.len(), b2.len(), ks_c_alpha(0.01));
    verdict(
        8,
        d < crit,
        &format!(
            "HEM vs HTEM(omega=0) beta_1 traces: KS {d:.4} (< {crit:.4}, n={} each)",
            b1.len()
        ),
    );
}
