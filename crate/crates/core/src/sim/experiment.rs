use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::ScenarioSpec;
use crate::error::{Error, Result};
use crate::gof::{
    clt_diagnostic, marginal_test, upper_bound_test, Method, TestReport, DEFAULT_BOOTSTRAP,
    DEFAULT_PERMUTATIONS,
};
use crate::rng::{derive_seed, stream, tag};
use crate::torus::TorusSample;

/// Version of the CSV and JSON experiment formats.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
/// Significance levels summarized when none are requested.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.1];
/// Grid size of the p-value ECDF in summaries.
pub const ECDF_POINTS: usize = 101;

/// Tunables of the test procedures inside a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub permutations: usize,
    pub bootstrap: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            permutations: DEFAULT_PERMUTATIONS,
            bootstrap: DEFAULT_BOOTSTRAP,
        }
    }
}

impl MethodConfig {
    /// Run one method with a seed private to the replicate.
    pub fn run(&self, method: Method, p: &TorusSample, q: &TorusSample, seed: u64) -> Result<TestReport> {
        match method {
            Method::Marginal => marginal_test(p, q, self.permutations, seed),
            Method::UpperBound => upper_bound_test(p, q),
            Method::CltDiagnostic => clt_diagnostic(p, q, self.bootstrap, seed),
        }
    }
}

/// One line of the long-format export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
}

/// All records of a run, ordered by replicate then by method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ScenarioSpec,
    pub methods: Vec<Method>,
    pub config: MethodConfig,
    pub records: Vec<ReplicateRecord>,
    /// Wall-clock time; the only field that varies between identical runs.
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub alpha: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub rejection: Vec<RejectionRate>,
    /// `(u, #{p <= u} / R)` on a uniform grid of `[0, 1]`.
    pub ecdf: Vec<[f64; 2]>,
    pub mean_statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub scenario: String,
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
    pub config: MethodConfig,
    pub metadata: BTreeMap<String, String>,
    pub methods: Vec<MethodSummary>,
}

/// Draw `spec.replicates` sample pairs and test each with every method.
pub fn run_scenario(spec: &ScenarioSpec, methods: &[Method], config: &MethodConfig) -> Result<ExperimentResult> {
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no test method selected".into()));
    }
    let mut methods = methods.to_vec();
    methods.dedup();
    let start = Instant::now();
    let per_replicate: Vec<Vec<ReplicateRecord>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(spec.seed, tag::REPLICATE, r as u64);
            let p = spec.p.sample(spec.n, &mut rng)?;
            let q = spec.q.sample(spec.m, &mut rng)?;
            let seed = derive_seed(spec.seed, tag::METHOD, r as u64);
            methods
                .iter()
                .map(|&method| {
                    let report = config.run(method, &p, &q, seed)?;
                    Ok(ReplicateRecord {
                        replicate: r,
                        method,
                        statistic: report.statistic,
                        p_value: report.p_value,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        methods,
        config: *config,
        records: per_replicate.into_iter().flatten().collect(),
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

impl ExperimentResult {
    pub fn p_values(&self, method: Method) -> Vec<f64> {
        self.records.iter().filter(|r| r.method == method).map(|r| r.p_value).collect()
    }

    pub fn statistics(&self, method: Method) -> Vec<f64> {
        self.records.iter().filter(|r| r.method == method).map(|r| r.statistic).collect()
    }

    /// Fraction of replicates with `p <= alpha`; `None` if the method did
    /// not run.
    pub fn rejection_rate(&self, method: Method, alpha: f64) -> Option<f64> {
        let p = self.p_values(method);
        if p.is_empty() {
            return None;
        }
        Some(p.iter().filter(|&&v| v <= alpha).count() as f64 / p.len() as f64)
    }

    pub fn summary(&self, alphas: &[f64]) -> ExperimentSummary {
        let methods = self
            .methods
            .iter()
            .map(|&method| {
                let p = self.p_values(method);
                let k = p.len().max(1) as f64;
                let stats = self.statistics(method);
                MethodSummary {
                    method,
                    rejection: alphas
                        .iter()
                        .map(|&alpha| RejectionRate {
                            alpha,
                            rate: self.rejection_rate(method, alpha).unwrap_or(0.0),
                        })
                        .collect(),
                    ecdf: (0..ECDF_POINTS)
                        .map(|i| {
                            let u = i as f64 / (ECDF_POINTS - 1) as f64;
                            [u, p.iter().filter(|&&v| v <= u).count() as f64 / k]
                        })
                        .collect(),
                    mean_statistic: stats.iter().sum::<f64>() / k,
                }
            })
            .collect();
        ExperimentSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            scenario: self.spec.name.to_string(),
            n: self.spec.n,
            m: self.spec.m,
            replicates: self.spec.replicates,
            seed: self.spec.seed,
            config: self.config,
            metadata: self.spec.metadata.clone(),
            methods,
        }
    }

    /// Long-format CSV: `replicate,method,statistic,p_value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<csv output>".into(),
            source,
        })
    }
}
