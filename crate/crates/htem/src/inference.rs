//! Posterior summarization: coefficient estimates, inclusion
//! probabilities, Bayes-factor-calibrated selection thresholds, and
//! posterior predictive intervals.

use serde::{Deserialize, Serialize};

use crate::dist::GigParams;
use crate::error::{domain_err, Error, Result};
use crate::rng::RandomStream;
use crate::sampler::ChainTrace;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub beta_median: Vec<f64>,
    pub inclusion_prob: Vec<f64>,
    /// Monte Carlo estimate of P(alpha = 0 | Y), the hyperbolic-branch mass.
    pub p_hyperbolic: f64,
    pub eta_mode: f64,
    pub mc3_acceptance: f64,
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Componentwise medians over all retained β draws (exact zeros included)
/// and sample proportions for the discrete quantities.
pub fn summarize(trace: &ChainTrace) -> Result<PosteriorSummary> {
    if trace.draws.is_empty() {
        return Err(Error::Empty("chain trace"));
    }
    let m = trace.draws.len() as f64;
    let p = trace.p;
    let mut beta_median = Vec::with_capacity(p);
    let mut inclusion_prob = Vec::with_capacity(p);
    let mut col = vec![0.0; trace.draws.len()];
    for j in 0..p {
        for (i, d) in trace.draws.iter().enumerate() {
            col[i] = d.beta[j];
        }
        beta_median.push(median(&mut col));
        inclusion_prob.push(trace.draws.iter().filter(|d| d.gamma[j]).count() as f64 / m);
    }
    let p_hyperbolic = trace.draws.iter().filter(|d| !d.alpha).count() as f64 / m;
    // mode of the retained η draws; ties break toward the smaller atom
    let mut atoms: Vec<f64> = trace.draws.iter().map(|d| d.eta).collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let eta_mode = atoms
        .iter()
        .map(|&a| (a, trace.draws.iter().filter(|d| d.eta == a).count()))
        .max_by(|(ea, ca), (eb, cb)| ca.cmp(cb).then(eb.total_cmp(ea)))
        .map(|(a, _)| a)
        .unwrap();
    Ok(PosteriorSummary {
        beta_median,
        inclusion_prob,
        p_hyperbolic,
        eta_mode,
        mc3_acceptance: trace.accept_rate(),
    })
}

/// Inclusion-probability threshold equivalent to a marginal Bayes-factor
/// cutoff under the Beta(s₁, s₂) inclusion prior: with prior odds
/// r = q/(1−q), q = s₁/(s₁+s₂), the threshold is (bf·r)/(1 + bf·r).
pub fn bf_threshold(bf_cut: f64, s1: f64, s2: f64) -> Result<f64> {
    if !(bf_cut > 0.0) || !(s1 > 0.0) || !(s2 > 0.0) {
        return Err(domain_err!(
            "bf_threshold needs positive arguments, got ({bf_cut}, {s1}, {s2})"
        ));
    }
    let r = s1 / s2; // q/(1-q) with q = s1/(s1+s2)
    Ok(bf_cut * r / (1.0 + bf_cut * r))
}

/// γ̂_j = 1 ⟺ inclusion probability ≥ λ.
pub fn select_variables(inclusion_prob: &[f64], lambda: f64) -> Result<Vec<bool>> {
    if !(0.0 < lambda && lambda < 1.0) {
        return Err(domain_err!("selection threshold {lambda} outside (0, 1)"));
    }
    Ok(inclusion_prob.iter().map(|&q| q >= lambda).collect())
}

/// One posterior predictive draw per retained state at covariate `x_new`
/// (standardized scale): a fresh error scale σ*² from the α-selected
/// mixing law, then y* ~ N(x_new^{(γ)⊤} β_γ, σ*²).
pub fn predictive_draws(
    trace: &ChainTrace,
    x_new: &[f64],
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    if x_new.len() != trace.p {
        return Err(Error::Dimension(format!(
            "x_new length {} != p={}",
            x_new.len(),
            trace.p
        )));
    }
    if trace.draws.is_empty() {
        return Err(Error::Empty("chain trace"));
    }
    let mut out = Vec::with_capacity(trace.draws.len());
    for d in &trace.draws {
        let mu: f64 = d
            .gamma
            .iter()
            .zip(&d.beta)
            .zip(x_new)
            .filter(|((g, _), _)| **g)
            .map(|((_, b), x)| b * x)
            .sum();
        let sigma2 = if d.alpha {
            stream.inv_gamma(0.5 * d.eta, 0.5 * d.eta * d.rho2)?
        } else {
            crate::dist::gig_sample(
                stream,
                &GigParams::new(1.0, d.eta / d.rho2, d.eta * d.rho2)?,
            )?
        };
        out.push(stream.normal(mu, sigma2)?);
    }
    Ok(out)
}

/// Empirical quantile with linear interpolation between order statistics
/// (type-7 rule: h = (n−1)q).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Central interval at the given coverage level from an empirical sample.
pub fn prediction_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::Empty("predictive draws"));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(domain_err!("interval level {level} outside (0, 1)"));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok((quantile(&sorted, tail), quantile(&sorted, 1.0 - tail)))
}
