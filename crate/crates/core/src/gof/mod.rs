//! Two-sample goodness-of-fit tests on the torus `T^2`.
//!
//! * [`marginal_test`]: per-axis circle statistics, permutation calibrated,
//!   combined by the Bonferroni `2 min` rule.
//! * [`upper_bound_test`]: the exact transport cost against the
//!   concentration bound `exp(-8 nm/(n+m) t^2)`.
//! * [`clt_diagnostic`]: a bootstrap standardization of the cost. It does
//!   not separate hypotheses and is reported as a diagnostic only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

mod bound;
mod clt;
mod ks;
mod marginal;

pub use bound::{
    composed_one_sample_bound, mcdiarmid_one_sample, upper_bound_pvalue, upper_bound_test,
};
pub use clt::{clt_diagnostic, DEFAULT_BOOTSTRAP};
pub use ks::{ks_normality_pvalue, ks_statistic_normal, kolmogorov_survival};
pub use marginal::{
    marginal_statistic_1d, marginal_test, marginal_test_with_table, NullTable, DEFAULT_PERMUTATIONS,
    MIN_PERMUTATIONS, NULL_TABLE_VERSION,
};

/// The test procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Marginal,
    UpperBound,
    CltDiagnostic,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Marginal, Method::UpperBound, Method::CltDiagnostic];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Marginal => "marginal",
            Method::UpperBound => "upper-bound",
            Method::CltDiagnostic => "clt-diagnostic",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| crate::Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Outcome of one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: f64,
    /// Always in `[0, 1]`.
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    /// Every tunable and intermediate a rerun needs, keyed by name.
    pub details: BTreeMap<String, Value>,
}

impl TestReport {
    fn new(method: Method, statistic: f64, p_value: f64, n: usize, m: usize) -> Self {
        Self {
            method,
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            n,
            m,
            details: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_owned(), value.into());
        self
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

fn require_plane(p: &crate::TorusSample64, q: &crate::TorusSample64) -> crate::Result<()> {
    for s in [p, q] {
        if s.dim() != 2 {
            return Err(crate::Error::DimensionMismatch {
                left: s.dim(),
                right: 2,
            });
        }
    }
    Ok(())
}
