//! Dense symmetric positive definite factorization and solves for the
//! model-weight and coefficient-draw kernels. Matrices here are small
//! (the active-predictor count), so a plain Cholesky recomputed from
//! scratch is all that is needed.

use crate::error::{domain_err, Error, Result};
use crate::rng::RandomStream;

/// Lower-triangular Cholesky factor of an SPD matrix, row-major.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    dim: usize,
    l: Vec<f64>,
}

/// Cholesky factorization of a symmetric matrix given row-major.
pub fn spd_factorize(m: &[f64], dim: usize) -> Result<SpdFactor> {
    if m.len() != dim * dim {
        return Err(Error::Dimension(format!(
            "expected {dim}x{dim} matrix, got {} entries",
            m.len()
        )));
    }
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for i in 0..dim {
        for j in (i + 1)..dim {
            if (m[i * dim + j] - m[j * dim + i]).abs() > 1e-12 * scale {
                return Err(domain_err!("matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = m[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::NotPositiveDefinite(i));
                }
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    Ok(SpdFactor { dim, l })
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// M^{-1} v via forward and back substitution.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!(
                "solve: vector length {} != {}",
                v.len(),
                self.dim
            )));
        }
        let n = self.dim;
        let mut y = v.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        Ok(y)
    }

    /// ln det M = 2 sum ln L_ii.
    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.l[i * self.dim + i].ln())
            .sum::<f64>()
            * 2.0
    }

    /// Solve L^T w = z (used for precision-matrix normal draws).
    fn solve_transposed(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut w = z.to_vec();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                w[i] -= self.l[k * n + i] * w[k];
            }
            w[i] /= self.l[i * n + i];
        }
        w
    }
}

/// Exact draw from N(mean, P^{-1}) where `precision` factors P = L L^T:
/// x = mean + L^{-T} z with z standard normal.
pub fn correlated_normal_draw(
    stream: &mut RandomStream,
    mean: &[f64],
    precision: &SpdFactor,
) -> Result<Vec<f64>> {
    if mean.len() != precision.dim {
        return Err(Error::Dimension(format!(
            "mean length {} != factor dim {}",
            mean.len(),
            precision.dim
        )));
    }
    let z: Vec<f64> = (0..precision.dim).map(|_| stream.standard_normal()).collect();
    let w = precision.solve_transposed(&z);
    Ok(mean.iter().zip(&w).map(|(m, wi)| m + wi).collect())
}
