use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::law::Law;
use crate::error::{Error, Result};
use crate::ot::solve_ot;
use crate::rng::{stream, tag};
use crate::torus::TorusSample;

const MIN_DEVIATION_REPLICATES: usize = 50;

/// Standardized replicates `(T_i - mean) / sd` of `T_2(P_n, Q_n)` over `r`
/// independent sample pairs.
pub fn clt_deviation_experiment(p: &Law, q: &Law, n: usize, r: usize, seed: u64) -> Result<Vec<f64>> {
    if r < MIN_DEVIATION_REPLICATES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_DEVIATION_REPLICATES} replicates, got {r}"
        )));
    }
    let costs: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, tag::CLT_DEVIATION, i as u64);
            let a = p.sample(n, &mut rng)?;
            let b = q.sample(n, &mut rng)?;
            solve_ot(&a, &b).map(|t| t.cost)
        })
        .collect::<Result<_>>()?;
    let mean = costs.iter().sum::<f64>() / r as f64;
    let sd = (costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt();
    if !(sd > 1e-12 * mean.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateVariance("transport cost is constant across replicates".into()));
    }
    Ok(costs.iter().map(|c| (c - mean) / sd).collect())
}

/// `log(n) / (4 π n)`, the leading behaviour of `E T_2(P_n, μ)` for uniform
/// `P` and the uniform law `μ` on `T^2`.
pub fn predicted_mean_rate(n: usize) -> f64 {
    let n = n as f64;
    n.ln() / (4.0 * std::f64::consts::PI * n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    /// Side of the reference grid.
    pub k: usize,
    pub mean: f64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log mean` against `log n`; needs two sizes.
    pub fitted_exponent: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
}

fn grid_reference(k: usize) -> Result<TorusSample> {
    let h = 1.0 / k as f64;
    let mut flat = Vec::with_capacity(2 * k * k);
    for a in 0..k {
        for b in 0..k {
            flat.push((a as f64 + 0.5) * h);
            flat.push((b as f64 + 0.5) * h);
        }
    }
    TorusSample::from_flat(2, flat)
}

/// Average `T_2` between `r` uniform samples of each size and a `k × k`
/// grid of cell centres standing in for the uniform law, with the smallest
/// `k` such that `k^2 >= 4n`.
pub fn mean_rate_check(n_grid: &[usize], r: usize, seed: u64) -> Result<RateTable> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("size grid is empty".into()));
    }
    if r == 0 || n_grid.contains(&0) {
        return Err(Error::InvalidParameter("sizes and replicate count must be positive".into()));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let k = ((4 * n) as f64).sqrt().ceil() as usize;
        let reference = grid_reference(k)?;
        let costs: Vec<f64> = (0..r)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, tag::RATE_CHECK, (gi * r + i) as u64);
                let sample = Law::Uniform.sample(n, &mut rng)?;
                solve_ot(&sample, &reference).map(|t| t.cost)
            })
            .collect::<Result<_>>()?;
        let mean = costs.iter().sum::<f64>() / r as f64;
        let predicted = predicted_mean_rate(n);
        rows.push(RateRow {
            n,
            k,
            mean,
            predicted,
            ratio: mean / predicted,
        });
    }
    Ok(RateTable {
        fitted_exponent: log_log_slope(&rows),
        rows,
        replicates: r,
        seed,
    })
}

fn log_log_slope(rows: &[RateRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean > 0.0)
        .map(|r| ((r.n as f64).ln(), r.mean.ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
