use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::law::{Law, WrappedGaussianSpec};
use crate::error::{Error, Result};

/// The named simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioName {
    /// Uniform against uniform.
    H0,
    /// Uniform against `N(0.5, Σ1)`.
    H1,
    /// `N(0.25, Σ2)` against `N(0.75, Σ2)`.
    H2,
    /// `N(0.25, Σ3)` against `N(0.75, Σ3)`.
    H3,
    /// Equal marginals, opposite correlation.
    H4,
    Custom,
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "H0" => Self::H0,
            "H1" => Self::H1,
            "H2" => Self::H2,
            "H3" => Self::H3,
            "H4" => Self::H4,
            "CUSTOM" => Self::Custom,
            _ => return Err(Error::InvalidParameter(format!("unknown scenario {s:?}"))),
        })
    }
}

impl std::fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::H0 => "H0",
            Self::H1 => "H1",
            Self::H2 => "H2",
            Self::H3 => "H3",
            Self::H4 => "H4",
            Self::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Off-diagonal covariance shared by Σ1, Σ2, Σ3.
const OFF_DIAG: f64 = 1e-4;
const SIGMA1_DIAG: f64 = 0.01;
const SIGMA2_DIAG: f64 = 0.05;
const SIGMA3_DIAG: f64 = 0.005;
const SIGMA4_DIAG: f64 = 0.02;
const SIGMA4_OFF: f64 = 0.019;

/// A replicated two-sample experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub p: Law,
    pub q: Law,
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Parameter bindings worth recording alongside results.
    pub metadata: BTreeMap<String, String>,
}

impl ScenarioSpec {
    /// One of the named scenarios with its fixed laws.
    pub fn named(name: ScenarioName, n: usize, m: usize, replicates: usize, seed: u64) -> Result<Self> {
        let wg = |mean, diag, off| WrappedGaussianSpec::with_diag(mean, diag, off).map(Law::WrappedGaussian);
        let mut metadata = BTreeMap::new();
        let (p, q) = match name {
            ScenarioName::H0 => (Law::Uniform, Law::Uniform),
            ScenarioName::H1 => (Law::Uniform, wg(0.5, SIGMA1_DIAG, OFF_DIAG)?),
            ScenarioName::H2 => {
                metadata.insert("sigma_binding".into(), format!("Sigma2 diagonal {SIGMA2_DIAG}, printed under index 4"));
                (wg(0.25, SIGMA2_DIAG, OFF_DIAG)?, wg(0.75, SIGMA2_DIAG, OFF_DIAG)?)
            }
            ScenarioName::H3 => {
                metadata.insert("sigma_binding".into(), format!("Sigma3 diagonal {SIGMA3_DIAG}, printed under index 5"));
                (wg(0.25, SIGMA3_DIAG, OFF_DIAG)?, wg(0.75, SIGMA3_DIAG, OFF_DIAG)?)
            }
            ScenarioName::H4 => (wg(0.5, SIGMA4_DIAG, SIGMA4_OFF)?, wg(0.5, SIGMA4_DIAG, -SIGMA4_OFF)?),
            ScenarioName::Custom => {
                return Err(Error::InvalidParameter("custom scenarios need explicit laws; use ScenarioSpec::custom".into()))
            }
        };
        Self::build(name, p, q, n, m, replicates, seed, metadata)
    }

    /// A scenario with caller-supplied laws.
    pub fn custom(p: Law, q: Law, n: usize, m: usize, replicates: usize, seed: u64) -> Result<Self> {
        Self::build(ScenarioName::Custom, p, q, n, m, replicates, seed, BTreeMap::new())
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        name: ScenarioName,
        p: Law,
        q: Law,
        n: usize,
        m: usize,
        replicates: usize,
        seed: u64,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("sample sizes must be positive".into()));
        }
        if replicates == 0 {
            return Err(Error::InvalidParameter("replicate count must be positive".into()));
        }
        Ok(Self {
            name,
            p,
            q,
            n,
            m,
            replicates,
            seed,
            metadata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_laws() {
        let h1 = ScenarioSpec::named(ScenarioName::H1, 10, 10, 1, 0).unwrap();
        assert_eq!(h1.p, Law::Uniform);
        let Law::WrappedGaussian(g) = h1.q else { panic!() };
        assert_eq!(g.mean, [0.5, 0.5]);
        assert_eq!(g.cov, [[0.01, 1e-4], [1e-4, 0.01]]);

        let h3 = ScenarioSpec::named(ScenarioName::H3, 10, 10, 1, 0).unwrap();
        let Law::WrappedGaussian(g) = h3.q else { panic!() };
        assert_eq!(g.cov[0][0], 0.005);
        assert!(h3.metadata.contains_key("sigma_binding"));

        let h4 = ScenarioSpec::named(ScenarioName::H4, 10, 10, 1, 0).unwrap();
        let (Law::WrappedGaussian(a), Law::WrappedGaussian(b)) = (h4.p, h4.q) else { panic!() };
        assert_eq!(a.cov[0][1], -b.cov[0][1]);
        assert!(ScenarioSpec::named(ScenarioName::Custom, 10, 10, 1, 0).is_err());
        assert!(ScenarioSpec::named(ScenarioName::H0, 0, 10, 1, 0).is_err());
    }

    #[test]
    fn parses_names() {
        assert_eq!("h2".parse::<ScenarioName>().unwrap(), ScenarioName::H2);
        assert!("H9".parse::<ScenarioName>().is_err());
    }
}
