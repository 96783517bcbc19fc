//! Shared oracle helpers for the integration tests: quadrature CDFs,
//! Kolmogorov-Smirnov statistics, and the Geweke simulators.
#![allow(dead_code)]

/// Composite Simpson integration of `f` over [a, b] with `n` panels
/// (n rounded up to even).
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// CDF values of the density `exp(log_pdf)` at each point of an ascending
/// sample, by cumulative quadrature from `lower` (a point with negligible
/// mass below it).
pub fn cdf_at_sorted_samples(
    sorted: &[f64],
    log_pdf: &dyn Fn(f64) -> f64,
    lower: f64,
) -> Vec<f64> {
    let pdf = |x: f64| log_pdf(x).exp();
    let mut out = Vec::with_capacity(sorted.len());
    let mut acc = simpson(&pdf, lower, sorted[0], 4000);
    out.push(acc);
    for w in sorted.windows(2) {
        if w[1] > w[0] {
            // consecutive order statistics are close; a few panels suffice
            acc += simpson(&pdf, w[0], w[1], 8);
        }
        out.push(acc);
    }
    out
}

/// One-sample KS statistic given the CDF evaluated at the sorted sample.
pub fn ks_one_sample(cdf_at_samples: &[f64]) -> f64 {
    let n = cdf_at_samples.len() as f64;
    cdf_at_samples
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let lo = (f - i as f64 / n).abs();
            let hi = ((i + 1) as f64 / n - f).abs();
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic; both inputs are sorted in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let f1 = i as f64 / a.len() as f64;
        let f2 = j as f64 / b.len() as f64;
        d = d.max((f1 - f2).abs());
    }
    d
}

/// Two-sample KS critical value: c(alpha) * sqrt((n+m)/(n*m)).
pub fn ks_two_sample_critical(n: usize, m: usize, c_alpha: f64) -> f64 {
    c_alpha * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// c(alpha) for the two-sample KS test: sqrt(-ln(alpha/2)/2).
pub fn ks_c_alpha(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

use htem::dist::{
    gig_mean, gig_sample, hyperbolic_log_pdf, hyperbolic_sample, student_t_log_pdf,
    student_t_sample, GigParams, ScaledTailParams,
};
use htem::rng::RandomStream;

/// The 12 GIG parameter triples of the distribution-correctness suite,
/// spanning both sampling algorithms and orders down to -110.
pub const GIG_TRIPLES: [(f64, f64, f64); 12] = [
    (0.5, 1.0, 1.0),
    (1.0, 2.0, 2.0),
    (2.0, 0.5, 3.0),
    (-0.5, 1.0, 1.0),
    (-2.0, 3.0, 1.0),
    (5.0, 1.0, 0.2),
    (0.1, 0.1, 0.1),
    (0.9, 0.05, 0.05),
    (0.0, 1.0, 1.0),
    (20.0, 2.0, 5.0),
    (-20.0, 4.0, 0.5),
    (-110.0, 50.0, 30.0),
];

/// Check the sampler mean against sqrt(b/a) K_{p+1}(w)/K_p(w) within
/// `z` MC standard errors; returns (mean, expected, se) on failure text.
pub fn check_gig_mean(triple: (f64, f64, f64), draws: usize, z: f64) -> Result<(), String> {
    let params = GigParams::new(triple.0, triple.1, triple.2).unwrap();
    let expected = gig_mean(&params).unwrap();
    let mut stream = RandomStream::new(0xD15C0 ^ triple.0.to_bits() ^ triple.1.to_bits());
    let xs: Vec<f64> = (0..draws)
        .map(|_| gig_sample(&mut stream, &params).unwrap())
        .collect();
    let (mean, se) = mean_and_se(&xs);
    if (mean - expected).abs() <= z * se.max(1e-12) {
        Ok(())
    } else {
        Err(format!(
            "GIG{triple:?}: mean {mean} vs {expected}, se {se}"
        ))
    }
}

/// KS of 10^5 scale-mixture draws against the closed-form density, via the
/// quadrature CDF oracle. `student` selects the t identity, else hyperbolic.
pub fn check_mixture_ks(eta: f64, rho2: f64, student: bool, seed: u64) -> (f64, f64) {
    let params = ScaledTailParams::new(eta, rho2).unwrap();
    let mut stream = RandomStream::new(seed);
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|_| {
            if student {
                student_t_sample(&mut stream, &params).unwrap()
            } else {
                hyperbolic_sample(&mut stream, &params).unwrap()
            }
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    // integrate from far enough into the left tail that the missed mass is
    // negligible relative to the 0.006 bound
    let lower = xs[0] - if student { 400.0 } else { 40.0 * rho2.sqrt() };
    let log_pdf = |x: f64| {
        if student {
            student_t_log_pdf(x, &params).unwrap()
        } else {
            hyperbolic_log_pdf(x, &params).unwrap()
        }
    };
    let cdf = cdf_at_sorted_samples(&xs, &log_pdf, lower);
    (ks_one_sample(&cdf), 0.006)
}

/// Two-sample KS for possibly-discrete samples: sup |F1 - F2| over the
/// union of observed atoms (tie-safe, unlike the merge formulation).
pub fn ks_discrete(a: &[f64], b: &[f64]) -> f64 {
    let mut atoms: Vec<f64> = a.iter().chain(b).cloned().collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let cdf = |s: &[f64], x: f64| s.partition_point(|v| *v <= x) as f64 / s.len() as f64;
    atoms
        .iter()
        .map(|&x| (cdf(&sa, x) - cdf(&sb, x)).abs())
        .fold(0.0, f64::max)
}

use htem::data::Dataset;
use htem::sampler::{gibbs_step, ErrorMode, GridCache, Hyperparameters, ModelState};

const GEWEKE_N: usize = 10;
const GEWEKE_P: usize = 2;

/// One exact draw of every parameter from its prior, plus simulated Y.
fn geweke_prior_draw(
    hyper: &Hyperparameters,
    x: &[f64],
    stream: &mut RandomStream,
) -> htem::Result<(ModelState, Vec<f64>)> {
    let tau2 = stream.inv_gamma(0.5 * hyper.nu, 0.5 * hyper.nu)?;
    let rho2 = stream.inv_gamma(hyper.a, hyper.b)?;
    let eta = stream.disc_uniform(&hyper.eta_grid)?;
    let pi_tilde = stream.beta(hyper.s1, hyper.s2)?;
    let omega = stream.beta(hyper.m1, hyper.m2)?;
    let alpha = stream.bernoulli(omega)?;
    let mut gamma = vec![false; GEWEKE_P];
    let mut beta = vec![0.0; GEWEKE_P];
    for j in 0..GEWEKE_P {
        gamma[j] = stream.bernoulli(pi_tilde)?;
        if gamma[j] {
            beta[j] = stream.normal(0.0, rho2 * tau2)?;
        }
    }
    let mut sigma2 = vec![0.0; GEWEKE_N];
    for s in sigma2.iter_mut() {
        *s = if alpha {
            stream.inv_gamma(0.5 * eta, 0.5 * eta * rho2)?
        } else {
            gig_sample(stream, &GigParams::new(1.0, eta / rho2, eta * rho2)?)?
        };
    }
    let state = ModelState {
        gamma,
        beta,
        sigma2,
        tau2,
        rho2,
        alpha,
        eta,
        pi_tilde,
        omega,
    };
    let y = geweke_simulate_y(&state, x, stream)?;
    Ok((state, y))
}

fn geweke_simulate_y(
    state: &ModelState,
    x: &[f64],
    stream: &mut RandomStream,
) -> htem::Result<Vec<f64>> {
    (0..GEWEKE_N)
        .map(|i| {
            let mu: f64 = (0..GEWEKE_P)
                .filter(|&j| state.gamma[j])
                .map(|j| x[i * GEWEKE_P + j] * state.beta[j])
                .sum();
            stream.normal(mu, state.sigma2[i])
        })
        .collect()
}

/// Marginal-conditional vs successive-conditional KS statistics for
/// (tau2, rho2, eta, alpha), with the shared critical value.
pub fn geweke_ks(seed: u64, m: usize, thin: usize) -> Vec<(&'static str, f64, f64)> {
    let hyper = Hyperparameters::defaults(GEWEKE_P, ErrorMode::Htem);
    let cache = GridCache::new(&hyper.eta_grid).unwrap();
    let mut stream = RandomStream::new(seed);
    let x: Vec<f64> = (0..GEWEKE_N * GEWEKE_P)
        .map(|_| -2.0 + 4.0 * stream.uniform())
        .collect();

    let mut mc = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..m {
        let (s, _) = geweke_prior_draw(&hyper, &x, &mut stream).unwrap();
        mc.0.push(s.tau2);
        mc.1.push(s.rho2);
        mc.2.push(s.eta);
        mc.3.push(s.alpha as u8 as f64);
    }

    let (mut state, mut y) = geweke_prior_draw(&hyper, &x, &mut stream).unwrap();
    let mut sc = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for t in 0..m * thin {
        let data = Dataset::new(x.clone(), y, GEWEKE_N, GEWEKE_P).unwrap();
        gibbs_step(&mut state, &data, &hyper, &cache, &mut stream, &mut |_| {}).unwrap();
        y = geweke_simulate_y(&state, &x, &mut stream).unwrap();
        if t % thin == thin - 1 {
            sc.0.push(state.tau2);
            sc.1.push(state.rho2);
            sc.2.push(state.eta);
            sc.3.push(state.alpha as u8 as f64);
        }
    }

    let crit = ks_two_sample_critical(m, m, ks_c_alpha(0.001));
    vec![
        ("tau2", ks_discrete(&mc.0, &sc.0), crit),
        ("rho2", ks_discrete(&mc.1, &sc.1), crit),
        ("eta", ks_discrete(&mc.2, &sc.2), crit),
        ("alpha", ks_discrete(&mc.3, &sc.3), crit),
    ]
}
