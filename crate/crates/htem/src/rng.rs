//! Seedable random stream with keyed substream derivation.
//!
//! One `RandomStream` backs one chain; replicates and test points derive
//! independent substreams from the same master seed so results do not
//! depend on execution order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal, StandardNormal};

use crate::error::{domain_err, Result};

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha12Rng,
}

/// splitmix64 finalizer; used to mix (seed, key) into a fresh seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Independent substream keyed by `key`; derivation depends only on the
    /// parent's seed, not on how many draws the parent has made.
    pub fn substream(&self, key: u64) -> Self {
        Self::new(mix(self.seed ^ mix(key)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, var: f64) -> Result<f64> {
        let n = Normal::new(mean, var.sqrt())
            .map_err(|e| domain_err!("normal({mean}, {var}): {e}"))?;
        Ok(n.sample(&mut self.rng))
    }

    /// Gamma with shape `a` and *rate* `b`.
    pub fn gamma(&mut self, a: f64, b: f64) -> Result<f64> {
        let g = Gamma::new(a, 1.0 / b).map_err(|e| domain_err!("gamma({a}, {b}): {e}"))?;
        Ok(g.sample(&mut self.rng))
    }

    /// Inverse gamma with shape `a` and *scale* `b`: 1/X for X ~ Gamma(a, rate b).
    pub fn inv_gamma(&mut self, a: f64, b: f64) -> Result<f64> {
        Ok(1.0 / self.gamma(a, b)?)
    }

    pub fn beta(&mut self, s1: f64, s2: f64) -> Result<f64> {
        let d = Beta::new(s1, s2).map_err(|e| domain_err!("beta({s1}, {s2}): {e}"))?;
        Ok(d.sample(&mut self.rng))
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain_err!("bernoulli probability {p} outside [0, 1]"));
        }
        Ok(self.uniform() < p)
    }

    /// Uniform draw from a finite set.
    pub fn disc_uniform(&mut self, atoms: &[f64]) -> Result<f64> {
        if atoms.is_empty() {
            return Err(crate::error::Error::Empty("disc_uniform atom set"));
        }
        let i = self.rng.random_range(0..atoms.len());
        Ok(atoms[i])
    }

    /// Exponential with rate `lambda`.
    pub fn exponential(&mut self, lambda: f64) -> f64 {
        -(-self.uniform()).ln_1p() / lambda
    }
}
