use std::cmp::Ordering;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{require_plane, Method, TestReport};
use crate::circle::{optimal_lattice_shift, w2_circle, CircularSample};
use crate::error::{Error, Result};
use crate::rng::{stream, tag};
use crate::torus::TorusSample;

/// Smallest admissible permutation count.
pub const MIN_PERMUTATIONS: usize = 99;
/// Permutation count used when the caller has no preference.
pub const DEFAULT_PERMUTATIONS: usize = 999;
/// Format version of serialized [`NullTable`]s.
pub const NULL_TABLE_VERSION: u32 = 1;

/// `S = ∫_0^1 (G(F⁻¹(t)) - t)^2 dt` for two circular samples, where `F`,
/// `G` are their empirical CDFs read from the optimal circle cut.
///
/// Computed without materializing a cut: with `α` the optimal vertical
/// shift and `F`, `G` lifted periodically, the integrand over any unit
/// window is `(G(F⁻¹(s)) - α - s)^2`, which is what the cut version
/// integrates after translation. This form stays defined when unequal
/// sample sizes admit no cut.
pub fn marginal_statistic_1d(x: &CircularSample, y: &CircularSample) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("marginal statistic needs two nonempty samples".into()));
    }
    Ok(statistic_sorted(x.values(), y.values()))
}

/// [`marginal_statistic_1d`] on sorted canonical values.
pub(crate) fn statistic_sorted(x: &[f64], y: &[f64]) -> f64 {
    let shift = optimal_lattice_shift(x, y);
    let l = shift.lattice(x.len());
    let exact = exact_piece_sum(x, y, shift.a, shift.b, shift.k);
    let denom = 3.0 * (l as f64).powi(3);
    match exact {
        Some(num) => num as f64 / denom,
        None => float_piece_sum(x, y, shift.a, shift.b, shift.k) / denom,
    }
}

// Piece i spans t ∈ (i a, (i+1) a] in lattice units, on which the integrand
// is (c_i - t)^2 with c_i = g_i b - k and g_i = #{y <= x_i}. Its integral is
// (lo^3 - hi^3) / 3 with lo - hi = a.
fn exact_piece_sum(x: &[f64], y: &[f64], a: i64, b: i64, k: i64) -> Option<i128> {
    let (a, b, k) = (a as i128, b as i128, k as i128);
    let mut j = 0usize;
    let mut acc: i128 = 0;
    for (i, &xi) in x.iter().enumerate() {
        while j < y.len() && y[j] <= xi {
            j += 1;
        }
        let c = (j as i128).checked_mul(b)? - k;
        let lo = c - i as i128 * a;
        let hi = lo - a;
        let quad = lo
            .checked_mul(lo)?
            .checked_add(lo.checked_mul(hi)?)?
            .checked_add(hi.checked_mul(hi)?)?;
        acc = acc.checked_add(a.checked_mul(quad)?)?;
    }
    Some(acc)
}

fn float_piece_sum(x: &[f64], y: &[f64], a: i64, b: i64, k: i64) -> f64 {
    let (a, b, k) = (a as f64, b as f64, k as f64);
    let mut j = 0usize;
    let mut acc = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        while j < y.len() && y[j] <= xi {
            j += 1;
        }
        let lo = j as f64 * b - k - i as f64 * a;
        let hi = lo - a;
        acc += a * (lo * lo + lo * hi + hi * hi);
    }
    acc
}

fn sorted_axis(s: &TorusSample, axis: usize) -> Vec<f64> {
    let mut v = s.axis(axis);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

fn merge_sorted(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        if j == y.len() || (i < x.len() && x[i] <= y[j]) {
            out.push(x[i]);
            i += 1;
        } else {
            out.push(y[j]);
            j += 1;
        }
    }
    out
}

/// Split a sorted pool into a random `n`-subset and its complement, both
/// still sorted.
fn random_split(pooled: &[f64], n: usize, rng: &mut impl Rng, xs: &mut Vec<f64>, ys: &mut Vec<f64>) {
    let mut in_x = vec![false; pooled.len()];
    for i in sample_indices(rng, pooled.len(), n) {
        in_x[i] = true;
    }
    xs.clear();
    ys.clear();
    for (&v, &flag) in pooled.iter().zip(&in_x) {
        if flag {
            xs.push(v);
        } else {
            ys.push(v);
        }
    }
}

/// Per-axis quantities of the marginal test.
struct AxisOutcome {
    statistic: f64,
    p_value: f64,
    shift: f64,
    cut: Option<f64>,
}

fn describe_axis(x: &[f64], y: &[f64]) -> Result<(f64, f64, Option<f64>)> {
    let cx = CircularSample::new(x)?;
    let cy = CircularSample::new(y)?;
    let r = w2_circle(&cx, &cy)?;
    Ok((statistic_sorted(x, y), r.shift, r.cut))
}

fn permutation_axis(x: &[f64], y: &[f64], b: usize, seed: u64, stream_tag: u64) -> Result<AxisOutcome> {
    let (statistic, shift, cut) = describe_axis(x, y)?;
    let pooled = merge_sorted(x, y);
    let n = x.len();
    let exceed = (0..b)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n), Vec::with_capacity(pooled.len() - n)),
            |(xs, ys), r| {
                let mut rng = stream(seed, stream_tag, r as u64);
                random_split(&pooled, n, &mut rng, xs, ys);
                statistic_sorted(xs, ys) >= statistic
            },
        )
        .filter(|&hit| hit)
        .count();
    Ok(AxisOutcome {
        statistic,
        p_value: (1 + exceed) as f64 / (b + 1) as f64,
        shift,
        cut,
    })
}

fn combine(
    per_axis: [AxisOutcome; 2],
    n: usize,
    m: usize,
    calibration: &str,
    b: usize,
    seed: u64,
) -> TestReport {
    let [ax, ay] = per_axis;
    let p = (2.0 * ax.p_value.min(ay.p_value)).min(1.0);
    let (statistic, axis) = if ax.p_value <= ay.p_value {
        (ax.statistic, "x")
    } else {
        (ay.statistic, "y")
    };
    let cut = |c: Option<f64>| c.map_or(Value::Null, Value::from);
    TestReport::new(Method::Marginal, statistic, p, n, m)
        .with("p_x", ax.p_value)
        .with("p_y", ay.p_value)
        .with("statistic_x", ax.statistic)
        .with("statistic_y", ay.statistic)
        .with("statistic_axis", axis)
        .with("shift_x", ax.shift)
        .with("shift_y", ay.shift)
        .with("cut_x", cut(ax.cut))
        .with("cut_y", cut(ay.cut))
        .with("calibration", calibration)
        .with("B", b)
        .with("seed", seed)
        .with("multiplicity", "bonferroni: min(1, 2 min(p_x, p_y))")
}

/// Marginal two-sample test on `T^2`, each axis calibrated by `b` random
/// label permutations of the pooled axis values.
///
/// Per-axis p-values use the add-one estimator
/// `(1 + #{S_perm >= S_obs}) / (b + 1)`; the reported p-value is
/// `min(1, 2 min(p_x, p_y))` and the reported statistic is that of the
/// axis attaining the minimum.
pub fn marginal_test(p: &TorusSample, q: &TorusSample, b: usize, seed: u64) -> Result<TestReport> {
    require_plane(p, q)?;
    if b < MIN_PERMUTATIONS {
        return Err(Error::InvalidParameter(format!(
            "calibration too small: {b} permutations, need at least {MIN_PERMUTATIONS}"
        )));
    }
    let tags = [tag::PERMUTATION_X, tag::PERMUTATION_Y];
    let mut out = Vec::with_capacity(2);
    for (axis, &t) in tags.iter().enumerate() {
        out.push(permutation_axis(&sorted_axis(p, axis), &sorted_axis(q, axis), b, seed, t)?);
    }
    let per_axis: [AxisOutcome; 2] = out.try_into().map_err(|_| Error::Internal("axis count".into()))?;
    Ok(combine(per_axis, p.len(), q.len(), "permutation", b, seed))
}

/// Marginal test calibrated by a precomputed uniform-null table instead of
/// permutations. Both axes share the table.
pub fn marginal_test_with_table(p: &TorusSample, q: &TorusSample, table: &NullTable) -> Result<TestReport> {
    require_plane(p, q)?;
    if (table.n, table.m) != (p.len(), q.len()) {
        return Err(Error::InvalidParameter(format!(
            "null table built for sizes ({}, {}), samples have ({}, {})",
            table.n,
            table.m,
            p.len(),
            q.len()
        )));
    }
    let mut out = Vec::with_capacity(2);
    for axis in 0..2 {
        let (x, y) = (sorted_axis(p, axis), sorted_axis(q, axis));
        let (statistic, shift, cut) = describe_axis(&x, &y)?;
        out.push(AxisOutcome {
            statistic,
            p_value: table.p_value(statistic),
            shift,
            cut,
        });
    }
    let per_axis: [AxisOutcome; 2] = out.try_into().map_err(|_| Error::Internal("axis count".into()))?;
    Ok(combine(per_axis, p.len(), q.len(), "null-table", table.b, table.seed))
}

/// Sorted marginal statistics of independent uniform circle samples of
/// sizes `(n, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTable {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    /// Ascending, length `b`.
    pub statistics: Vec<f64>,
}

impl NullTable {
    pub fn generate(n: usize, m: usize, b: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("null table sizes must be positive".into()));
        }
        if b < MIN_PERMUTATIONS {
            return Err(Error::InvalidParameter(format!(
                "calibration too small: {b} replicates, need at least {MIN_PERMUTATIONS}"
            )));
        }
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| {
            let mut v: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            v
        };
        let mut statistics: Vec<f64> = (0..b)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(seed, tag::NULL_TABLE, r as u64);
                let x = draw(&mut rng, n);
                let y = draw(&mut rng, m);
                statistic_sorted(&x, &y)
            })
            .collect();
        statistics.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        Ok(Self {
            version: NULL_TABLE_VERSION,
            n,
            m,
            b,
            seed,
            statistics,
        })
    }

    /// `(1 + #{S_null >= s}) / (B + 1)`.
    pub fn p_value(&self, s: f64) -> f64 {
        let below = self.statistics.partition_point(|&v| v < s);
        (1 + self.statistics.len() - below) as f64 / (self.statistics.len() + 1) as f64
    }

    /// Check the invariants of a table read from outside.
    pub fn validate(&self) -> Result<()> {
        if self.version != NULL_TABLE_VERSION {
            return Err(Error::InvalidInput(format!(
                "null table version {} unsupported (expected {NULL_TABLE_VERSION})",
                self.version
            )));
        }
        if self.statistics.len() != self.b {
            return Err(Error::InvalidInput(format!(
                "null table declares B = {} but holds {} values",
                self.b,
                self.statistics.len()
            )));
        }
        if self.statistics.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidInput("null table statistics are not sorted".into()));
        }
        Ok(())
    }
}
