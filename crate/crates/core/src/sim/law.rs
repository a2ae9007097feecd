use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, tag};
use crate::torus::{wrap_unit, TorusSample};

/// A planar normal `N(mean, cov)` pushed to `T^2` coordinate-wise mod 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrappedGaussianSpec {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl WrappedGaussianSpec {
    /// Validate a symmetric positive definite covariance.
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        if mean.iter().chain(cov.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("wrapped Gaussian parameters must be finite".into()));
        }
        if cov[0][1] != cov[1][0] {
            return Err(Error::InvalidInput(format!(
                "covariance not symmetric: {} vs {}",
                cov[0][1], cov[1][0]
            )));
        }
        let spec = Self {
            mean: [wrap_unit(mean[0]), wrap_unit(mean[1])],
            cov,
        };
        spec.cholesky()?;
        Ok(spec)
    }

    /// Isotropic-diagonal covariance with a shared off-diagonal term.
    pub fn with_diag(mean: f64, diag: f64, off: f64) -> Result<Self> {
        Self::new([mean, mean], [[diag, off], [off, diag]])
    }

    /// Lower Cholesky factor `(l11, l21, l22)`.
    fn cholesky(&self) -> Result<(f64, f64, f64)> {
        let [[a, b], [_, d]] = self.cov;
        let not_pd = || Error::InvalidInput(format!("covariance {:?} is not positive definite", self.cov));
        if !(a > 0.0) {
            return Err(not_pd());
        }
        let l11 = a.sqrt();
        let l21 = b / l11;
        let rest = d - l21 * l21;
        if !(rest > 0.0) {
            return Err(not_pd());
        }
        Ok((l11, l21, rest.sqrt()))
    }

    fn draw_into(&self, n: usize, rng: &mut impl Rng, out: &mut Vec<f64>) {
        let (l11, l21, l22) = self.cholesky().expect("validated at construction");
        for _ in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            out.push(wrap_unit(self.mean[0] + l11 * z1));
            out.push(wrap_unit(self.mean[1] + l21 * z1 + l22 * z2));
        }
    }
}

/// Laws on `T^2` used by the simulation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Law {
    Uniform,
    WrappedGaussian(WrappedGaussianSpec),
    PointMass { at: [f64; 2] },
}

impl Law {
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<TorusSample> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let mut flat = Vec::with_capacity(2 * n);
        match self {
            Law::Uniform => flat.extend((0..2 * n).map(|_| rng.gen::<f64>())),
            Law::WrappedGaussian(spec) => spec.draw_into(n, rng, &mut flat),
            Law::PointMass { at } => {
                for _ in 0..n {
                    flat.extend_from_slice(at);
                }
            }
        }
        TorusSample::from_flat(2, flat)
    }
}

/// `n` i.i.d. uniform points on `[0, 1)^d`.
pub fn sample_uniform_torus(n: usize, d: usize, seed: u64) -> Result<TorusSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let mut rng = stream(seed, tag::REPLICATE, 0);
    TorusSample::from_flat(d, (0..n * d).map(|_| rng.gen::<f64>()).collect())
}

/// `n` i.i.d. draws from a wrapped Gaussian.
pub fn sample_wrapped_gaussian(spec: &WrappedGaussianSpec, n: usize, seed: u64) -> Result<TorusSample> {
    let mut rng = stream(seed, tag::REPLICATE, 0);
    Law::WrappedGaussian(*spec).sample(n, &mut rng)
}
