//! Quadratic optimal transport on the circle `R/Z`.
//!
//! Circular transport is reduced to the line through a vertical shift of
//! the periodically extended CDF: with `F`, `G` the lifted CDFs of the two
//! samples, the circle cost is `min_α ∫_0^1 (F⁻¹(t) - G⁻¹(t + α))² dt`. For
//! empirical measures this objective is convex and piecewise linear in `α`
//! with kinks at multiples of `1/lcm(n, m)`, so the minimum is found by an
//! exact integer search on that lattice. The minimizing coupling then
//! identifies a cut point where the circle can be unrolled onto `[0, 1)`
//! without changing the transport cost.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::torus::wrap_unit;

/// A sample on `R/Z`, sorted ascending, remembering where each value came
/// from in the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularSample<T = f64> {
    values: Vec<T>,
    indices: Vec<usize>,
}

impl<T: Real> CircularSample<T> {
    /// Canonicalize into `[0, 1)` and sort.
    pub fn new(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("circular sample is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value {bad}")));
        }
        let mut pairs: Vec<(T, usize)> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (wrap_unit(v), i))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let (values, indices) = pairs.into_iter().unzip();
        Ok(Self { values, indices })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Position in the original input of each sorted value.
    pub fn original_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rotate every value by `r` around the circle.
    pub fn rotate(&self, r: T) -> Result<Self> {
        let shifted: Vec<T> = self.values.iter().map(|&v| v + r).collect();
        let mut out = Self::new(&shifted)?;
        out.indices = out.indices.iter().map(|&k| self.indices[k]).collect();
        Ok(out)
    }
}

/// Optimal circular transport together with the reduction that achieves it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutResult<T = f64> {
    /// Squared 2-Wasserstein distance on the circle.
    pub cost: T,
    /// Point of `[0, 1)` where both samples may be unrolled onto the line
    /// without changing the cost. Always present for equal sizes; with
    /// unequal sizes the optimal coupling can cross every gap, and then no
    /// such point exists.
    pub cut: Option<T>,
    /// Optimal vertical CDF shift.
    pub shift: T,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Squared 2-Wasserstein distance between two empirical measures on the
/// line, `∫_0^1 (F⁻¹(t) - G⁻¹(t))² dt`, for sorted inputs.
pub fn w2_line<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("w2_line needs two nonempty samples".into()));
    }
    let (n, m) = (x.len() as i64, y.len() as i64);
    let l = n / gcd(n, m) * m;
    let (a, b) = (l / n, l / m);
    let (mut i, mut j, mut pos) = (0usize, 0usize, 0i64);
    let mut acc = T::zero();
    while i < x.len() {
        let x_end = (i as i64 + 1) * a;
        let y_end = (j as i64 + 1) * b;
        let end = x_end.min(y_end);
        let d = x[i] - y[j];
        acc = acc + T::from_i64(end - pos).expect("segment length") * d * d;
        pos = end;
        if x_end == end {
            i += 1;
        }
        if y_end == end {
            j += 1;
        }
    }
    Ok(acc / T::from_i64(l).expect("lcm representable"))
}

/// The monotone coupling of the lifted samples induced by a lattice shift
/// `k / lcm(n, m)`, as consecutive segments of `t ∈ (0, 1]`.
struct ShiftedCoupling<'a, T> {
    x: &'a [T],
    y: &'a [T],
    a: i64,
    b: i64,
}

/// One piece of a coupling: `len` lattice units of mass move between
/// `x[xi]` and the lift `y[yj] + offset`.
#[derive(Debug, Clone, Copy)]
struct Segment {
    len: i64,
    xi: usize,
    yj: usize,
    offset: i64,
}

impl<'a, T: Real> ShiftedCoupling<'a, T> {
    fn new(x: &'a [T], y: &'a [T]) -> Self {
        let (n, m) = (x.len() as i64, y.len() as i64);
        let l = n / gcd(n, m) * m;
        Self {
            x,
            y,
            a: l / n,
            b: l / m,
        }
    }

    fn lattice(&self) -> i64 {
        self.a * self.x.len() as i64
    }

    fn for_each_segment(&self, k: i64, mut visit: impl FnMut(Segment)) {
        let m = self.y.len() as i64;
        let mut i = 0usize;
        let mut q = k.div_euclid(self.b);
        let mut pos = 0i64;
        while i < self.x.len() {
            let x_end = (i as i64 + 1) * self.a;
            let y_end = (q + 1) * self.b - k;
            let end = x_end.min(y_end);
            if end > pos {
                visit(Segment {
                    len: end - pos,
                    xi: i,
                    yj: q.rem_euclid(m) as usize,
                    offset: q.div_euclid(m),
                });
            }
            pos = end;
            if x_end == end {
                i += 1;
            }
            if y_end == end {
                q += 1;
            }
        }
    }

    fn cost_at(&self, k: i64) -> T {
        let mut acc = T::zero();
        self.for_each_segment(k, |s| {
            let d = (self.x[s.xi] - self.y[s.yj]) - T::from_i64(s.offset).expect("offset");
            acc = acc + T::from_i64(s.len).expect("segment length") * d * d;
        });
        acc / T::from_i64(self.lattice()).expect("lcm representable")
    }

    /// Minimize the convex lattice objective over `k ∈ [-L, L]`.
    fn argmin(&self) -> (i64, T) {
        let l = self.lattice();
        let (mut lo, mut hi) = (-l, l);
        while lo < hi {
            let mid = lo + (hi - lo).div_euclid(2);
            if self.cost_at(mid) <= self.cost_at(mid + 1) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let mut best = (lo, self.cost_at(lo));
        for k in [lo - 1, lo + 1] {
            let c = self.cost_at(k);
            if c < best.1 {
                best = (k, c);
            }
        }
        best
    }
}

/// Optimal lattice shift for sorted canonical samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LatticeShift {
    /// Shift in units of `1 / lcm(n, m)`.
    pub k: i64,
    /// Lattice units per atom of `x`.
    pub a: i64,
    /// Lattice units per atom of `y`.
    pub b: i64,
}

impl LatticeShift {
    pub fn lattice(&self, n: usize) -> i64 {
        self.a * n as i64
    }
}

pub(crate) fn optimal_lattice_shift<T: Real>(x: &[T], y: &[T]) -> LatticeShift {
    let coupling = ShiftedCoupling::new(x, y);
    let (k, _) = coupling.argmin();
    LatticeShift {
        k,
        a: coupling.a,
        b: coupling.b,
    }
}

/// Circle cost as a function of an arbitrary real shift `α`.
///
/// Convex in `α`; its minimum over `α` is [`w2_circle`]'s cost.
pub fn shift_objective<T: Real>(x: &CircularSample<T>, y: &CircularSample<T>, alpha: T) -> T {
    let (xs, ys) = (x.values(), y.values());
    let (nf, mf) = (T::from_count(xs.len()), T::from_count(ys.len()));
    let m = ys.len() as i64;
    let mut q = (alpha * mf).floor().to_i64().expect("finite shift");
    let (mut i, mut pos, mut acc) = (0usize, T::zero(), T::zero());
    while i < xs.len() {
        let x_end = T::from_count(i + 1) / nf;
        let y_end = T::from_i64(q + 1).expect("index") / mf - alpha;
        let end = x_end.min(y_end);
        if end > pos {
            let lift = ys[q.rem_euclid(m) as usize] + T::from_i64(q.div_euclid(m)).expect("offset");
            let d = xs[i] - lift;
            acc = acc + (end - pos) * d * d;
            pos = end;
        }
        if x_end <= end {
            i += 1;
        }
        if y_end <= end {
            q += 1;
        }
    }
    acc
}

/// Exact squared 2-Wasserstein distance on the circle with its optimal
/// shift and, when one exists, a valid cut point.
///
/// The reported cut is the smallest admissible one: `0` if the samples may
/// be unrolled at the origin, else the smallest pooled value `v` such that
/// no transport arc crosses the gap just below `v`.
pub fn w2_circle<T: Real>(x: &CircularSample<T>, y: &CircularSample<T>) -> Result<CutResult<T>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("w2_circle needs two nonempty samples".into()));
    }
    let coupling = ShiftedCoupling::new(x.values(), y.values());
    let (k, cost) = coupling.argmin();
    let shift = T::from_i64(k).expect("shift") / T::from_i64(coupling.lattice()).expect("lcm");
    let cut = find_cut(&coupling, k)?;
    Ok(CutResult { cost, cut, shift })
}

/// Locate an unrolling point not crossed by any arc of the optimal coupling.
fn find_cut<T: Real>(coupling: &ShiftedCoupling<'_, T>, k: i64) -> Result<Option<T>> {
    let (x, y) = (coupling.x, coupling.y);
    // Rank every value among the distinct pooled values.
    let mut distinct: Vec<T> = Vec::with_capacity(x.len() + y.len());
    let (mut rx, mut ry) = (vec![0i64; x.len()], vec![0i64; y.len()]);
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j == y.len() || (i < x.len() && x[i] <= y[j]);
        let v = if take_x { x[i] } else { y[j] };
        if distinct.last() != Some(&v) {
            distinct.push(v);
        }
        let r = distinct.len() as i64 - 1;
        if take_x {
            rx[i] = r;
            i += 1;
        } else {
            ry[j] = r;
            j += 1;
        }
    }
    let r = distinct.len() as i64;

    // cover[g] counts arcs crossing the gap just below distinct[g]; gap 0
    // is the wrap-around gap containing the origin.
    let mut diff = vec![0i64; distinct.len() + 1];
    let mut everything = false;
    coupling.for_each_segment(k, |s| {
        let px = rx[s.xi];
        let py = s.offset * r + ry[s.yj];
        let (lo, hi) = if px <= py { (px, py) } else { (py, px) };
        if lo == hi {
            return;
        }
        if hi - lo >= r {
            everything = true;
            return;
        }
        let start = (lo + 1).rem_euclid(r);
        let end = start + (hi - lo);
        if end <= r {
            diff[start as usize] += 1;
            diff[end as usize] -= 1;
        } else {
            diff[start as usize] += 1;
            diff[r as usize] -= 1;
            diff[0] += 1;
            diff[(end - r) as usize] -= 1;
        }
    });
    if !everything {
        let mut running = 0i64;
        for g in 0..distinct.len() {
            running += diff[g];
            if running == 0 {
                return Ok(Some(if g == 0 { T::zero() } else { distinct[g] }));
            }
        }
    }

    // The optimal coupling crossed every gap; fall back to the gap whose
    // unrolled line cost is smallest.
    let target = coupling.cost_at(k);
    let mut best: Option<(T, T)> = None;
    for (g, &v) in distinct.iter().enumerate() {
        let cut = if g == 0 { T::zero() } else { v };
        let ux = unroll_sorted(x, cut);
        let uy = unroll_sorted(y, cut);
        let c = w2_line(&ux, &uy)?;
        if best.map_or(true, |(b, _)| c < b) {
            best = Some((c, cut));
        }
    }
    let (c, cut) = best.expect("nonempty samples");
    if (c - target).abs() <= T::of(1e-9).max(T::epsilon() * T::of(1e4)) {
        return Ok(Some(cut));
    }
    if x.len() == y.len() {
        return Err(Error::Internal(format!(
            "no cut reproduces circle cost {target} (best line cost {c})"
        )));
    }
    Ok(None)
}

/// Number of leading values below `cut`; unrolling starts right after them.
fn cut_index<T: Real>(sorted: &[T], cut: T) -> usize {
    sorted.partition_point(|&v| v < cut)
}

fn unroll_sorted<T: Real>(sorted: &[T], cut: T) -> Vec<T> {
    let p = cut_index(sorted, cut);
    let mut out: Vec<T> = sorted[p..]
        .iter()
        .map(|&v| v - cut)
        .chain(sorted[..p].iter().map(|&v| v - cut + T::one()))
        .map(wrap_unit)
        .collect();
    // rounding at the seam can swap neighbours by one ulp
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    out
}

/// Lay a circular sample out on `[0, 1)` starting at `cut`:
/// `v ↦ (v - cut) mod 1`, re-sorted. Cyclic order is preserved.
pub fn unroll_at_cut<T: Real>(sample: &CircularSample<T>, cut: T) -> Result<Vec<T>> {
    if !cut.is_finite() || cut < T::zero() || cut >= T::one() {
        return Err(Error::InvalidInput(format!("cut {cut} outside [0, 1)")));
    }
    Ok(unroll_sorted(sample.values(), cut))
}
