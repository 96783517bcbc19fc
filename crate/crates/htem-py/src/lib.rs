//! Python bindings: scenario generation, fitting, prediction, and the
//! distribution/special-function primitives.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use htem::data::{
    apply_scaling, destandardize_coefficients, destandardize_response, generate_scenario,
    standardize, Dataset, Scaling, ScenarioSpec,
};
use htem::dist::{gig_sample, GigParams};
use htem::inference::{
    bf_threshold, predictive_draws, prediction_interval, quantile, select_variables, summarize,
    PosteriorSummary,
};
use htem::rng::RandomStream;
use htem::sampler::{run_chain, ChainConfig, ChainTrace, ErrorMode, Hyperparameters};

fn pyerr(e: htem::Error) -> PyErr {
    use htem::Error::*;
    match e {
        Domain(_) | NotPositiveDefinite(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn flatten(x: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, usize, usize)> {
    let n = x.len();
    if n == 0 {
        return Err(PyValueError::new_err("empty design matrix"));
    }
    let p = x[0].len();
    let mut flat = Vec::with_capacity(n * p);
    for (i, row) in x.into_iter().enumerate() {
        if row.len() != p {
            return Err(PyValueError::new_err(format!(
                "row {i} has {} entries, expected {p}",
                row.len()
            )));
        }
        flat.extend(row);
    }
    Ok((flat, n, p))
}

/// A fitted chain: posterior summary plus everything needed to predict.
#[pyclass]
struct Fit {
    trace: ChainTrace,
    scaling: Scaling,
    summary: PosteriorSummary,
}

#[pymethods]
impl Fit {
    /// Posterior-median coefficients on the raw scale: (intercept, coeffs).
    fn coefficients(&self) -> PyResult<(f64, Vec<f64>)> {
        let (beta, intercept) =
            destandardize_coefficients(&self.summary.beta_median, &self.scaling).map_err(pyerr)?;
        Ok((intercept, beta))
    }

    fn inclusion_prob(&self) -> Vec<f64> {
        self.summary.inclusion_prob.clone()
    }

    fn p_hyperbolic(&self) -> f64 {
        self.summary.p_hyperbolic
    }

    fn eta_mode(&self) -> f64 {
        self.summary.eta_mode
    }

    fn accept_rate(&self) -> f64 {
        self.summary.mc3_acceptance
    }

    fn n_draws(&self) -> usize {
        self.trace.draws.len()
    }

    /// Selected variables at an explicit threshold, or at the one implied
    /// by a marginal Bayes-factor cutoff.
    #[pyo3(signature = (lam=None, bf_cut=3.2))]
    fn select(&self, lam: Option<f64>, bf_cut: f64) -> PyResult<Vec<bool>> {
        let p = self.summary.inclusion_prob.len();
        let threshold = match lam {
            Some(l) => l,
            None => bf_threshold(bf_cut, 1.0, (p as f64).sqrt()).map_err(pyerr)?,
        };
        select_variables(&self.summary.inclusion_prob, threshold).map_err(pyerr)
    }

    /// Per-row (median, lo, hi) predictive intervals on the raw scale.
    #[pyo3(signature = (x, level=0.9, predict_thin=20, seed=0))]
    fn predict(
        &self,
        x: Vec<Vec<f64>>,
        level: f64,
        predict_thin: usize,
        seed: u64,
    ) -> PyResult<Vec<(f64, f64, f64)>> {
        let (flat, n, p) = flatten(x)?;
        if p != self.trace.p {
            return Err(PyValueError::new_err(format!(
                "test rows have {p} covariates, fit has {}",
                self.trace.p
            )));
        }
        let x_std = apply_scaling(&flat, n, &self.scaling).map_err(pyerr)?;
        let thin = self.trace.thin(predict_thin.max(1));
        let mut stream = RandomStream::new(seed);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let row = &x_std[i * p..(i + 1) * p];
            let mut draws = predictive_draws(&thin, row, &mut stream).map_err(pyerr)?;
            let (lo, hi) = prediction_interval(&draws, level).map_err(pyerr)?;
            draws.sort_by(f64::total_cmp);
            let med = quantile(&draws, 0.5);
            out.push((
                destandardize_response(med, &self.scaling),
                destandardize_response(lo, &self.scaling),
                destandardize_response(hi, &self.scaling),
            ));
        }
        Ok(out)
    }
}

/// Draw one synthetic scenario replicate; returns (X rows, y, beta_true).
#[pyfunction]
#[pyo3(signature = (scenario, n=100, p=100, seed=0))]
fn simulate_scenario(
    scenario: &str,
    n: usize,
    p: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    let id = scenario.parse().map_err(pyerr)?;
    let spec = ScenarioSpec::new(id, n, p).map_err(pyerr)?;
    let mut stream = RandomStream::new(seed);
    let (data, beta_true) = generate_scenario(&spec, &mut stream).map_err(pyerr)?;
    let rows = (0..n).map(|i| data.row(i).to_vec()).collect();
    Ok((rows, data.y, beta_true))
}

/// Standardize, run the Gibbs sampler, and summarize.
#[pyfunction]
#[pyo3(signature = (x, y, mode="htem", iters=20_000, burnin=2_000, thin=1, seed=0))]
fn fit(
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    mode: &str,
    iters: usize,
    burnin: usize,
    thin: usize,
    seed: u64,
) -> PyResult<Fit> {
    let mode: ErrorMode = mode.parse().map_err(pyerr)?;
    let (flat, n, p) = flatten(x)?;
    let raw = Dataset::new(flat, y, n, p).map_err(pyerr)?;
    let std = standardize(&raw).map_err(pyerr)?;
    let config = ChainConfig {
        iterations: iters,
        burn_in: burnin,
        thin,
        seed,
    };
    config.validate().map_err(pyerr)?;
    let hyper = Hyperparameters::defaults(p, mode);
    let mut stream = RandomStream::new(seed);
    let trace = run_chain(&std.data, &hyper, &config, &mut stream).map_err(pyerr)?;
    let summary = summarize(&trace).map_err(pyerr)?;
    Ok(Fit {
        trace,
        scaling: std.scaling,
        summary,
    })
}

/// Inclusion-probability threshold implied by a marginal Bayes-factor cutoff.
#[pyfunction(name = "bf_threshold")]
fn bf_threshold_py(bf_cut: f64, s1: f64, s2: f64) -> PyResult<f64> {
    bf_threshold(bf_cut, s1, s2).map_err(pyerr)
}

/// Generalized-inverse-Gaussian draws with density ∝ x^(p−1) e^(−(a·x + b/x)/2).
#[pyfunction]
#[pyo3(signature = (p, a, b, size=1, seed=0))]
fn gig_draws(p: f64, a: f64, b: f64, size: usize, seed: u64) -> PyResult<Vec<f64>> {
    let params = GigParams::new(p, a, b).map_err(pyerr)?;
    let mut stream = RandomStream::new(seed);
    (0..size)
        .map(|_| gig_sample(&mut stream, &params).map_err(pyerr))
        .collect()
}

/// log K_v(x), the modified Bessel function of the second kind.
#[pyfunction]
fn log_bessel_k(order: f64, x: f64) -> PyResult<f64> {
    htem::special::log_bessel_k(order, x).map_err(pyerr)
}

#[pymodule]
fn htem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Fit>()?;
    m.add_function(wrap_pyfunction!(simulate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(bf_threshold_py, m)?)?;
    m.add_function(wrap_pyfunction!(gig_draws, m)?)?;
    m.add_function(wrap_pyfunction!(log_bessel_k, m)?)?;
    Ok(())
}
