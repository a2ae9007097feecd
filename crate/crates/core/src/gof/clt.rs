use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Method, TestReport};
use crate::error::{Error, Result};
use crate::ot::{cost_matrix, estimate_clt_variance, solve_ot_with_cost, CostMatrix, Side};
use crate::rng::{stream, tag};
use crate::torus::TorusSample;

/// Bootstrap replicate count used when the caller has no preference.
pub const DEFAULT_BOOTSTRAP: usize = 200;
const MIN_BOOTSTRAP: usize = 100;

fn resampled(cost: &CostMatrix, rows: &[usize], cols: &[usize]) -> Result<CostMatrix> {
    let mut entries = Vec::with_capacity(rows.len() * cols.len());
    for &i in rows {
        let row = cost.row(i);
        entries.extend(cols.iter().map(|&j| row[j]));
    }
    CostMatrix::from_entries(rows.len(), cols.len(), entries)
}

/// Standardize the observed cost by bootstrap moments:
/// `z = (T_2 - mean*) / sd*`, with a two-sided normal p-value.
///
/// Both samples are resampled with replacement `b_boot` times; `sd*` uses
/// the unbiased estimator. This is a diagnostic: the standardized cost is
/// not pivotal under the null and the procedure is not a valid test.
pub fn clt_diagnostic(p: &TorusSample, q: &TorusSample, b_boot: usize, seed: u64) -> Result<TestReport> {
    if b_boot < MIN_BOOTSTRAP {
        return Err(Error::InvalidParameter(format!(
            "bootstrap too small: {b_boot} replicates, need at least {MIN_BOOTSTRAP}"
        )));
    }
    let cost = cost_matrix(p, q)?;
    let observed = solve_ot_with_cost(&cost)?;
    let (n, m) = (p.len(), q.len());
    let replicates: Vec<f64> = (0..b_boot)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, tag::BOOTSTRAP, r as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let cols: Vec<usize> = (0..m).map(|_| rng.gen_range(0..m)).collect();
            solve_ot_with_cost(&resampled(&cost, &rows, &cols)?).map(|r| r.cost)
        })
        .collect::<Result<_>>()?;
    let mean = replicates.iter().sum::<f64>() / b_boot as f64;
    let var = replicates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b_boot - 1) as f64;
    let sd = var.sqrt();
    // spread at rounding level means every replicate has the same cost
    if !(sd > 1e-12 * mean.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateVariance(
            "bootstrap replicates of the cost are all equal".into(),
        ));
    }
    let z = (observed.cost - mean) / sd;
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    let pv = 2.0 * normal.sf(z.abs());

    let mut report = TestReport::new(Method::CltDiagnostic, z, pv, n, m)
        .with("cost", observed.cost)
        .with("bootstrap_mean", mean)
        .with("bootstrap_sd", sd)
        .with("B_boot", b_boot)
        .with("seed", seed)
        .with("diagnostic", true)
        .with("note", "diagnostic only; not a valid goodness-of-fit test");
    if n >= 2 && m >= 2 {
        report = report
            .with("potential_variance_p", estimate_clt_variance(&observed, Side::P)?)
            .with("potential_variance_q", estimate_clt_variance(&observed, Side::Q)?);
    }
    Ok(report)
}
