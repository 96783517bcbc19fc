//! The HTEM Gibbs sampler with Metropolis-Hastings model moves.
//!
//! One iteration updates, in order: τ², ρ², the (α, η, σ²) block, π̃, ω,
//! γ (single-flip MH), and β. The α and η conditionals marginalize the
//! error family over a finite η grid in log space; HEM and TEM are the
//! fixed-α special cases.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dist::{gig_sample, GigParams};
use crate::error::{domain_err, Error, Result};
use crate::linalg::{correlated_normal_draw, spd_factorize, SpdFactor};
use crate::rng::RandomStream;
use crate::special::{log_bessel_k, log_gamma_fn, log_sum_exp};

/// The η grid used throughout: S_η = {0.05, 0.1, 0.2, ..., 0.9, 1, 2, 5, 10, 20, 50}.
pub fn default_eta_grid() -> Vec<f64> {
    vec![
        0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0,
    ]
}

/// Which error family the sampler entertains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorMode {
    /// Mixture: α switches between hyperbolic (α=0) and Student-t (α=1).
    Htem,
    /// Hyperbolic errors only (α ≡ 0).
    Hem,
    /// Student-t errors only (α ≡ 1).
    Tem,
}

impl std::str::FromStr for ErrorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "htem" => Ok(ErrorMode::Htem),
            "hem" => Ok(ErrorMode::Hem),
            "tem" => Ok(ErrorMode::Tem),
            other => Err(Error::Data(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub s1: f64,
    pub s2: f64,
    pub m1: f64,
    pub m2: f64,
    pub eta_grid: Vec<f64>,
    pub error_mode: ErrorMode,
    /// When set, ω is held at this value instead of being drawn (degenerate
    /// mixture-weight prior; used for model-reduction checks).
    pub fixed_omega: Option<f64>,
}

impl Hyperparameters {
    /// Reference defaults: ν=1, a=2.1, b=0.1, s₁=1, s₂=√p, m₁=m₂=1.
    pub fn defaults(p: usize, error_mode: ErrorMode) -> Self {
        Self {
            nu: 1.0,
            a: 2.1,
            b: 0.1,
            s1: 1.0,
            s2: (p as f64).sqrt(),
            m1: 1.0,
            m2: 1.0,
            eta_grid: default_eta_grid(),
            error_mode,
            fixed_omega: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("a", self.a),
            ("b", self.b),
            ("s1", self.s1),
            ("s2", self.s2),
            ("m1", self.m1),
            ("m2", self.m2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain_err!("hyperparameter {name} must be positive, got {v}"));
            }
        }
        if self.eta_grid.is_empty() {
            return Err(Error::Empty("eta_grid"));
        }
        if !self.eta_grid.windows(2).all(|w| w[0] < w[1]) || self.eta_grid[0] <= 0.0 {
            return Err(domain_err!("eta_grid must be positive and strictly increasing"));
        }
        if let Some(w) = self.fixed_omega {
            if !(0.0..=1.0).contains(&w) {
                return Err(domain_err!("fixed omega {w} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Current value of every latent quantity in the sampler.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelState {
    pub gamma: Vec<bool>,
    pub beta: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub tau2: f64,
    pub rho2: f64,
    pub alpha: bool,
    pub eta: f64,
    pub pi_tilde: f64,
    pub omega: f64,
}

impl ModelState {
    pub fn p_gamma(&self) -> usize {
        self.gamma.iter().filter(|g| **g).count()
    }

    fn debug_check(&self) {
        debug_assert!(self.gamma.len() == self.beta.len());
        debug_assert!(
            self.gamma.iter().zip(&self.beta).all(|(g, b)| *g || *b == 0.0),
            "beta nonzero outside the active set"
        );
        debug_assert!(self.sigma2.iter().all(|s| *s > 0.0));
        debug_assert!(self.tau2 > 0.0 && self.rho2 > 0.0);
        debug_assert!(self.pi_tilde > 0.0 && self.pi_tilde < 1.0);
        debug_assert!((0.0..=1.0).contains(&self.omega));
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations || self.thin == 0 {
            return Err(domain_err!(
                "invalid chain config: iterations={}, burn_in={}, thin={}",
                self.iterations,
                self.burn_in,
                self.thin
            ));
        }
        Ok(())
    }
}

/// One retained posterior draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Draw {
    pub gamma: Vec<bool>,
    pub beta: Vec<f64>,
    pub alpha: bool,
    pub eta: f64,
    pub rho2: f64,
    pub tau2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainTrace {
    pub p: usize,
    pub draws: Vec<Draw>,
    pub accepted: usize,
    pub proposals: usize,
}

impl ChainTrace {
    pub fn accept_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    /// Keep every k-th retained draw (for cheaper downstream passes).
    pub fn thin(&self, k: usize) -> ChainTrace {
        let k = k.max(1);
        ChainTrace {
            p: self.p,
            draws: self.draws.iter().step_by(k).cloned().collect(),
            accepted: self.accepted,
            proposals: self.proposals,
        }
    }

    /// Columnar CSV dump for offline inspection.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["draw".to_string(), "gamma".to_string()];
        header.extend((0..self.p).map(|j| format!("beta_{j}")));
        header.extend(["alpha", "eta", "rho2", "tau2"].map(String::from));
        w.write_record(&header)?;
        for (i, d) in self.draws.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                d.gamma.iter().map(|g| if *g { '1' } else { '0' }).collect(),
            ];
            row.extend(d.beta.iter().map(|b| format!("{b}")));
            row.push((d.alpha as u8).to_string());
            row.push(d.eta.to_string());
            row.push(d.rho2.to_string());
            row.push(d.tau2.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }
}

/// Per-grid-point constants that never change during a chain.
#[derive(Debug, Clone)]
pub struct GridCache {
    pub grid: Vec<f64>,
    ln_k1: Vec<f64>,
    t_const: Vec<f64>,
}

impl GridCache {
    pub fn new(grid: &[f64]) -> Result<Self> {
        let mut ln_k1 = Vec::with_capacity(grid.len());
        let mut t_const = Vec::with_capacity(grid.len());
        for &eta in grid {
            ln_k1.push(log_bessel_k(1.0, eta)?);
            // Student-t normalizer pieces that depend on η only.
            t_const.push(
                log_gamma_fn((eta + 1.0) / 2.0)? - log_gamma_fn(eta / 2.0)?
                    + 0.5 * eta * eta.ln()
                    - 0.5 * std::f64::consts::PI.ln(),
            );
        }
        Ok(Self {
            grid: grid.to_vec(),
            ln_k1,
            t_const,
        })
    }
}

/// Summed log-likelihood of the residual vector at each grid point, per
/// error family. Shared between the α and η conditionals.
#[derive(Debug, Clone)]
pub struct GridMasses {
    pub hyperbolic: Option<Vec<f64>>,
    pub student: Option<Vec<f64>>,
}

pub fn grid_log_masses(
    residuals: &[f64],
    rho2: f64,
    cache: &GridCache,
    need_hyperbolic: bool,
    need_student: bool,
) -> GridMasses {
    let n = residuals.len() as f64;
    let scaled_sq: Vec<f64> = residuals.iter().map(|e| e * e / rho2).collect();
    let hyperbolic = need_hyperbolic.then(|| {
        cache
            .grid
            .iter()
            .zip(&cache.ln_k1)
            .map(|(&eta, &lnk1)| {
                let s: f64 = scaled_sq.iter().map(|&z| (eta * (eta + z)).sqrt()).sum();
                -s - n * (std::f64::consts::LN_2 + 0.5 * (eta * rho2).ln() + lnk1)
            })
            .collect()
    });
    let student = need_student.then(|| {
        cache
            .grid
            .iter()
            .zip(&cache.t_const)
            .map(|(&eta, &tc)| {
                let s: f64 = scaled_sq.iter().map(|&z| (eta + z).ln()).sum();
                n * (tc - 0.5 * rho2.ln()) - 0.5 * (eta + 1.0) * s
            })
            .collect()
    });
    GridMasses {
        hyperbolic,
        student,
    }
}

/// Neutral deterministic start: null model, unit scales, η nearest 1.
pub fn init_state(
    data: &Dataset,
    hyper: &Hyperparameters,
    stream: &mut RandomStream,
) -> Result<ModelState> {
    hyper.validate()?;
    let eta = hyper
        .eta_grid
        .iter()
        .cloned()
        .min_by(|x, y| (x - 1.0).abs().total_cmp(&(y - 1.0).abs()))
        .unwrap();
    let alpha = match hyper.error_mode {
        ErrorMode::Hem => false,
        ErrorMode::Tem => true,
        ErrorMode::Htem => stream.bernoulli(0.5)?,
    };
    Ok(ModelState {
        gamma: vec![false; data.p],
        beta: vec![0.0; data.p],
        sigma2: vec![1.0; data.n],
        tau2: 1.0,
        rho2: 1.0,
        alpha,
        eta,
        pi_tilde: hyper.s1 / (hyper.s1 + hyper.s2),
        omega: hyper.fixed_omega.unwrap_or(0.5),
    })
}

/// ε_i = y_i − x_i^{(γ)⊤} β_γ under the current state.
pub fn compute_residuals(state: &ModelState, data: &Dataset) -> Vec<f64> {
    let active: Vec<usize> = (0..data.p).filter(|&j| state.gamma[j]).collect();
    (0..data.n)
        .map(|i| {
            let row = data.row(i);
            data.y[i] - active.iter().map(|&j| row[j] * state.beta[j]).sum::<f64>()
        })
        .collect()
}

/// Factor A_γ = X_γ^⊤ Σ^{-1} X_γ + I/(τ²ρ²) and accumulate
/// v = X_γ^⊤ Σ^{-1} Y for the model weight and β draw.
fn active_system(
    gamma: &[bool],
    sigma2: &[f64],
    tau2: f64,
    rho2: f64,
    data: &Dataset,
) -> Result<(Vec<usize>, SpdFactor, Vec<f64>)> {
    let active: Vec<usize> = (0..data.p).filter(|&j| gamma[j]).collect();
    let k = active.len();
    let mut a = vec![0.0; k * k];
    let mut v = vec![0.0; k];
    for i in 0..data.n {
        let row = data.row(i);
        let w = 1.0 / sigma2[i];
        for (ai, &ja) in active.iter().enumerate() {
            let xa = row[ja] * w;
            v[ai] += xa * data.y[i];
            for (bi, &jb) in active.iter().enumerate().skip(ai) {
                a[ai * k + bi] += xa * row[jb];
            }
        }
    }
    let ridge = 1.0 / (tau2 * rho2);
    for ai in 0..k {
        a[ai * k + ai] += ridge;
        for bi in (ai + 1)..k {
            a[bi * k + ai] = a[ai * k + bi];
        }
    }
    let factor = spd_factorize(&a, k)?;
    Ok((active, factor, v))
}

/// Log of the unnormalized γ conditional (the MC³ target).
pub fn log_model_weight(
    gamma: &[bool],
    sigma2: &[f64],
    tau2: f64,
    rho2: f64,
    pi_tilde: f64,
    data: &Dataset,
) -> Result<f64> {
    if gamma.len() != data.p {
        return Err(Error::Dimension(format!(
            "gamma length {} != p={}",
            gamma.len(),
            data.p
        )));
    }
    let p_gamma = gamma.iter().filter(|g| **g).count();
    let prior = p_gamma as f64 * pi_tilde.ln()
        + (data.p - p_gamma) as f64 * (1.0 - pi_tilde).ln();
    if p_gamma == 0 {
        return Ok(prior);
    }
    let (_, factor, v) = active_system(gamma, sigma2, tau2, rho2, data)?;
    let sol = factor.solve(&v)?;
    let quad: f64 = v.iter().zip(&sol).map(|(a, b)| a * b).sum();
    Ok(-0.5 * factor.log_det() - 0.5 * p_gamma as f64 * (tau2 * rho2).ln() + 0.5 * quad + prior)
}

/// Flip one uniformly chosen coordinate of γ.
pub fn mc3_propose(gamma: &[bool], stream: &mut RandomStream) -> Vec<bool> {
    let mut proposal = gamma.to_vec();
    let k = (stream.uniform() * gamma.len() as f64) as usize;
    let k = k.min(gamma.len() - 1);
    proposal[k] = !proposal[k];
    proposal
}

/// One MH step on γ; returns whether the move was accepted. A proposal
/// whose system cannot be factorized is rejected outright.
pub fn update_gamma_mh(
    state: &mut ModelState,
    data: &Dataset,
    stream: &mut RandomStream,
) -> Result<bool> {
    let current = log_model_weight(
        &state.gamma,
        &state.sigma2,
        state.tau2,
        state.rho2,
        state.pi_tilde,
        data,
    )?;
    let proposal = mc3_propose(&state.gamma, stream);
    let proposed = match log_model_weight(
        &proposal,
        &state.sigma2,
        state.tau2,
        state.rho2,
        state.pi_tilde,
        data,
    ) {
        Ok(w) => w,
        Err(Error::NotPositiveDefinite(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    let accept = proposed - current >= 0.0 || stream.uniform().ln() < proposed - current;
    if accept {
        state.gamma = proposal;
    }
    Ok(accept)
}

/// β_γ ~ N(A_γ^{-1} X_γ^⊤ Σ^{-1} Y, A_γ^{-1}); excluded coordinates exactly 0.
pub fn draw_beta(state: &mut ModelState, data: &Dataset, stream: &mut RandomStream) -> Result<()> {
    state.beta.iter_mut().for_each(|b| *b = 0.0);
    if state.p_gamma() == 0 {
        return Ok(());
    }
    let (active, factor, v) =
        active_system(&state.gamma, &state.sigma2, state.tau2, state.rho2, data)?;
    let mean = factor.solve(&v)?;
    let draw = correlated_normal_draw(stream, &mean, &factor)?;
    for (j, b) in active.into_iter().zip(draw) {
        state.beta[j] = b;
    }
    Ok(())
}

/// GIG parameters of the ρ² conditional for the current α branch.
pub fn rho2_gig_params(state: &ModelState, hyper: &Hyperparameters, n: usize) -> Result<GigParams> {
    let p_gamma = state.p_gamma() as f64;
    let bsq: f64 = state.beta.iter().map(|b| b * b).sum();
    let inv_sum: f64 = state.sigma2.iter().map(|s| 1.0 / s).sum();
    if state.alpha {
        GigParams::new(
            0.5 * (n as f64 * state.eta - p_gamma - 2.0 * hyper.a),
            state.eta * inv_sum,
            2.0 * hyper.b + bsq / state.tau2,
        )
    } else {
        let sum: f64 = state.sigma2.iter().sum();
        GigParams::new(
            -(hyper.a + n as f64 + 0.5 * p_gamma),
            state.eta * inv_sum,
            2.0 * hyper.b + bsq / state.tau2 + state.eta * sum,
        )
    }
}

pub fn draw_rho2(
    state: &mut ModelState,
    hyper: &Hyperparameters,
    n: usize,
    stream: &mut RandomStream,
) -> Result<()> {
    let params = rho2_gig_params(state, hyper, n)?;
    state.rho2 = gig_sample(stream, &params)?;
    Ok(())
}

/// Bernoulli draw of the family indicator from the grid-marginalized masses.
pub fn draw_alpha(
    state: &mut ModelState,
    hyper: &Hyperparameters,
    masses: &GridMasses,
    stream: &mut RandomStream,
) -> Result<()> {
    match hyper.error_mode {
        ErrorMode::Hem => {
            state.alpha = false;
            Ok(())
        }
        ErrorMode::Tem => {
            state.alpha = true;
            Ok(())
        }
        ErrorMode::Htem => {
            let h = masses.hyperbolic.as_deref().ok_or(Error::Empty("hyperbolic masses"))?;
            let t = masses.student.as_deref().ok_or(Error::Empty("student masses"))?;
            let h_total = (1.0 - state.omega).ln() + log_sum_exp(h);
            let t_total = state.omega.ln() + log_sum_exp(t);
            let p1 = (t_total - crate::special::log_add_exp(h_total, t_total)).exp();
            state.alpha = stream.bernoulli(p1)?;
            Ok(())
        }
    }
}

/// Normalized log-probabilities of the η conditional for the α branch.
pub fn eta_log_probs(alpha: bool, masses: &GridMasses) -> Result<Vec<f64>> {
    let m = if alpha {
        masses.student.as_deref().ok_or(Error::Empty("student masses"))?
    } else {
        masses.hyperbolic.as_deref().ok_or(Error::Empty("hyperbolic masses"))?
    };
    let z = log_sum_exp(m);
    Ok(m.iter().map(|v| v - z).collect())
}

pub fn draw_eta(
    state: &mut ModelState,
    cache: &GridCache,
    masses: &GridMasses,
    stream: &mut RandomStream,
) -> Result<()> {
    let log_probs = eta_log_probs(state.alpha, masses)?;
    let u = stream.uniform();
    let mut acc = 0.0;
    let mut chosen = cache.grid.len() - 1;
    for (g, lp) in log_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            chosen = g;
            break;
        }
    }
    state.eta = cache.grid[chosen];
    Ok(())
}

/// n independent mixing-scale draws: GIG(1/2, η/ρ², ε²+ηρ²) under the
/// hyperbolic branch, IGamma((η+1)/2, (ε²+ηρ²)/2) under the t branch.
pub fn draw_sigma2(
    state: &mut ModelState,
    residuals: &[f64],
    stream: &mut RandomStream,
) -> Result<()> {
    let (eta, rho2) = (state.eta, state.rho2);
    for (s, &e) in state.sigma2.iter_mut().zip(residuals) {
        *s = if state.alpha {
            stream.inv_gamma(0.5 * (eta + 1.0), 0.5 * (e * e + eta * rho2))?
        } else {
            gig_sample(stream, &GigParams::new(0.5, eta / rho2, e * e + eta * rho2)?)?
        };
    }
    Ok(())
}

/// Shape and scale of the τ² conditional IGamma((ν+p_γ)/2, β^⊤β/(2ρ²) + ν/2).
pub fn tau2_params(state: &ModelState, hyper: &Hyperparameters) -> (f64, f64) {
    let bsq: f64 = state.beta.iter().map(|b| b * b).sum();
    (
        0.5 * (hyper.nu + state.p_gamma() as f64),
        0.5 * bsq / state.rho2 + 0.5 * hyper.nu,
    )
}

pub fn draw_tau2(
    state: &mut ModelState,
    hyper: &Hyperparameters,
    stream: &mut RandomStream,
) -> Result<()> {
    let (shape, scale) = tau2_params(state, hyper);
    state.tau2 = stream.inv_gamma(shape, scale)?;
    Ok(())
}

pub fn draw_pi(
    state: &mut ModelState,
    hyper: &Hyperparameters,
    p: usize,
    stream: &mut RandomStream,
) -> Result<()> {
    let p_gamma = state.p_gamma() as f64;
    state.pi_tilde = stream.beta(hyper.s1 + p_gamma, hyper.s2 + p as f64 - p_gamma)?;
    Ok(())
}

pub fn draw_omega(
    state: &mut ModelState,
    hyper: &Hyperparameters,
    stream: &mut RandomStream,
) -> Result<()> {
    if let Some(w) = hyper.fixed_omega {
        state.omega = w;
        return Ok(());
    }
    let a = state.alpha as u8 as f64;
    state.omega = stream.beta(hyper.m1 + a, hyper.m2 + 1.0 - a)?;
    Ok(())
}

/// Which conditional a Gibbs iteration is about to execute; reported to
/// the observer hook in `run_chain_observed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Tau2,
    Rho2,
    Alpha,
    Eta,
    Sigma2,
    Pi,
    Omega,
    GammaMh,
    Beta,
}

/// One full Gibbs iteration in Algorithm-1 order; returns the MH accept flag.
pub fn gibbs_step(
    state: &mut ModelState,
    data: &Dataset,
    hyper: &Hyperparameters,
    cache: &GridCache,
    stream: &mut RandomStream,
    observe: &mut dyn FnMut(StepKind),
) -> Result<bool> {
    observe(StepKind::Tau2);
    draw_tau2(state, hyper, stream)?;
    observe(StepKind::Rho2);
    draw_rho2(state, hyper, data.n, stream)?;

    let residuals = compute_residuals(state, data);
    let (need_h, need_t) = match hyper.error_mode {
        ErrorMode::Htem => (true, true),
        ErrorMode::Hem => (true, false),
        ErrorMode::Tem => (false, true),
    };
    let masses = grid_log_masses(&residuals, state.rho2, cache, need_h, need_t);
    observe(StepKind::Alpha);
    draw_alpha(state, hyper, &masses, stream)?;
    observe(StepKind::Eta);
    draw_eta(state, cache, &masses, stream)?;
    observe(StepKind::Sigma2);
    draw_sigma2(state, &residuals, stream)?;

    observe(StepKind::Pi);
    draw_pi(state, hyper, data.p, stream)?;
    observe(StepKind::Omega);
    draw_omega(state, hyper, stream)?;

    observe(StepKind::GammaMh);
    let accepted = update_gamma_mh(state, data, stream)?;
    observe(StepKind::Beta);
    draw_beta(state, data, stream)?;
    state.debug_check();
    Ok(accepted)
}

pub fn run_chain(
    data: &Dataset,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    stream: &mut RandomStream,
) -> Result<ChainTrace> {
    run_chain_observed(data, hyper, config, stream, &mut |_| {})
}

pub fn run_chain_observed(
    data: &Dataset,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    stream: &mut RandomStream,
    observe: &mut dyn FnMut(StepKind),
) -> Result<ChainTrace> {
    config.validate()?;
    let cache = GridCache::new(&hyper.eta_grid)?;
    let mut state = init_state(data, hyper, stream)?;
    let mut trace = ChainTrace {
        p: data.p,
        draws: Vec::with_capacity((config.iterations - config.burn_in).div_ceil(config.thin)),
        accepted: 0,
        proposals: 0,
    };
    for t in 0..config.iterations {
        let accepted = gibbs_step(&mut state, data, hyper, &cache, stream, observe)?;
        trace.proposals += 1;
        trace.accepted += accepted as usize;
        if t >= config.burn_in && (t - config.burn_in) % config.thin == 0 {
            trace.draws.push(Draw {
                gamma: state.gamma.clone(),
                beta: state.beta.clone(),
                alpha: state.alpha,
                eta: state.eta,
                rho2: state.rho2,
                tau2: state.tau2,
            });
        }
    }
    Ok(trace)
}
