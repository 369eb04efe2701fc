//! Correlated load sampling through a Gaussian copula with Kumaraswamy marginals.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kumaraswamy {
    pub a: f64,
    pub b: f64,
}

impl Kumaraswamy {
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        1.0 - (1.0 - x.powf(self.a)).powf(self.b)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        (1.0 - (1.0 - u).powf(1.0 / self.b)).powf(1.0 / self.a)
    }
}

pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Draws equicorrelated load vectors: Gaussian draw, normal CDF, Kumaraswamy
/// quantile, then an affine map onto `[min_mw, max_mw]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSampler {
    pub dims: usize,
    pub correlation: f64,
    pub marginal: Kumaraswamy,
    pub min_mw: f64,
    pub max_mw: f64,
}

impl Default for LoadSampler {
    fn default() -> Self {
        Self {
            dims: 3,
            correlation: 0.75,
            marginal: Kumaraswamy { a: 1.6, b: 2.8 },
            min_mw: 50.0,
            max_mw: 150.0,
        }
    }
}

impl LoadSampler {
    /// Lower Cholesky factor of the equicorrelation matrix.
    pub fn cholesky(&self) -> Result<DMatrix<f64>, ScenarioError> {
        let n = self.dims;
        let corr = DMatrix::from_fn(n, n, |r, c| if r == c { 1.0 } else { self.correlation });
        corr.cholesky()
            .map(|ch| ch.l())
            .ok_or(ScenarioError::InvalidCorrelation(self.correlation))
    }

    pub fn to_mw(&self, u: f64) -> f64 {
        self.min_mw + (self.max_mw - self.min_mw) * self.marginal.quantile(u)
    }

    pub fn draw<R: Rng>(&self, chol: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dims, |_, _| rng.sample::<f64, _>(StandardNormal));
        let correlated = chol * z;
        correlated.iter().map(|&v| self.to_mw(standard_normal_cdf(v))).collect()
    }
}

/// RNG stream for one condition index under a run seed.
pub fn condition_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` load vectors; row `i` comes from stream `(seed, i)`.
pub fn sample_loads(sampler: &LoadSampler, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::InvalidConfig("n must be at least 1".into()));
    }
    let chol = sampler.cholesky()?;
    Ok((0..n as u64)
        .map(|i| sampler.draw(&chol, &mut condition_rng(seed, i)))
        .collect())
}
