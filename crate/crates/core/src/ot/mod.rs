//! Exact discrete optimal transport between empirical measures on `T^d`
//! with the squared geodesic cost.
//!
//! [`solve_ot`] dispatches to a shortest-augmenting-path assignment solver
//! when both samples have the same size (an optimal plan is then a
//! permutation) and to a network simplex otherwise. Both return an optimal
//! plan together with optimal dual potentials `(f, g)`.

mod assignment;
mod bruteforce;
mod network_simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::torus::{torus_distance_sq_unchecked, TorusSample};

pub use assignment::solve_assignment;
pub use bruteforce::{solve_ot_bruteforce, BRUTEFORCE_MAX_POINTS};
pub use network_simplex::solve_network_simplex;

/// Dense `n x m` matrix of squared torus distances, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T = f64> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Real> CostMatrix<T> {
    /// Wrap a precomputed row-major buffer.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("cost matrix must be nonempty".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} cost entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite cost entry".into()));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn max_entry(&self) -> T {
        self.entries.iter().copied().fold(T::zero(), T::max)
    }
}

/// Squared-distance cost matrix between two samples.
pub fn cost_matrix<T: Real>(p: &TorusSample<T>, q: &TorusSample<T>) -> Result<CostMatrix<T>> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let mut entries = Vec::with_capacity(p.len() * q.len());
    for x in p.points() {
        entries.extend(q.points().map(|y| torus_distance_sq_unchecked(x, y)));
    }
    CostMatrix::from_entries(p.len(), q.len(), entries)
}

/// One nonzero entry of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry<T = f64> {
    pub source: usize,
    pub target: usize,
    pub mass: T,
}

/// Optimal value, plan and dual potentials of a discrete transport problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult<T = f64> {
    /// Optimal value `T_2(P_n, Q_m)`.
    pub cost: T,
    pub plan: Vec<PlanEntry<T>>,
    /// Potential on the source sample, one value per point.
    pub dual_f: Vec<T>,
    /// Potential on the target sample, one value per point.
    pub dual_g: Vec<T>,
}

/// Which sample a potential lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    P,
    Q,
}

impl<T: Real> TransportResult<T> {
    /// The 2-Wasserstein distance, `sqrt(cost)`.
    pub fn w2(&self) -> T {
        self.cost.max(T::zero()).sqrt()
    }

    pub fn potentials(&self, side: Side) -> &[T] {
        match side {
            Side::P => &self.dual_f,
            Side::Q => &self.dual_g,
        }
    }

    /// Check marginals, primal value, dual feasibility and strong duality.
    pub fn verify(&self, cost: &CostMatrix<T>) -> Result<()> {
        let (n, m) = (cost.rows(), cost.cols());
        let tol_mass = tolerance::<T>(1e-9);
        let mut rows = vec![T::zero(); n];
        let mut cols = vec![T::zero(); m];
        let mut primal = T::zero();
        for e in &self.plan {
            if e.source >= n || e.target >= m {
                return Err(Error::Internal(format!(
                    "plan entry ({}, {}) outside {n}x{m}",
                    e.source, e.target
                )));
            }
            if e.mass < -tol_mass {
                return Err(Error::Internal("negative plan mass".into()));
            }
            rows[e.source] = rows[e.source] + e.mass;
            cols[e.target] = cols[e.target] + e.mass;
            primal = primal + e.mass * cost.get(e.source, e.target);
        }
        let (a, b) = (T::one() / T::from_count(n), T::one() / T::from_count(m));
        if rows.iter().any(|&r| (r - a).abs() > tol_mass)
            || cols.iter().any(|&c| (c - b).abs() > tol_mass)
        {
            return Err(Error::Internal("plan marginals violated".into()));
        }
        if (primal - self.cost).abs() > tolerance::<T>(1e-10) {
            return Err(Error::Internal(format!(
                "plan cost {primal} differs from reported cost {}",
                self.cost
            )));
        }
        if self.dual_f.len() != n || self.dual_g.len() != m {
            return Err(Error::Internal("dual vectors have wrong length".into()));
        }
        let feas = tolerance::<T>(1e-9);
        for i in 0..n {
            let row = cost.row(i);
            for j in 0..m {
                if self.dual_f[i] + self.dual_g[j] > row[j] + feas {
                    return Err(Error::Internal(format!(
                        "dual infeasible at ({i}, {j}): {} + {} > {}",
                        self.dual_f[i], self.dual_g[j], row[j]
                    )));
                }
            }
        }
        let dual = self.dual_f.iter().copied().sum::<T>() * a
            + self.dual_g.iter().copied().sum::<T>() * b;
        if (dual - self.cost).abs() > tolerance::<T>(1e-8) {
            return Err(Error::Internal(format!(
                "duality gap: dual {dual} vs primal {}",
                self.cost
            )));
        }
        Ok(())
    }
}

// Absolute tolerance, widened for low-precision scalars.
fn tolerance<T: Real>(abs: f64) -> T {
    T::of(abs).max(T::epsilon() * T::of(1e4))
}

/// Exact `T_2(P, Q)` with optimal plan and potentials.
pub fn solve_ot<T: Real>(p: &TorusSample<T>, q: &TorusSample<T>) -> Result<TransportResult<T>> {
    let cost = cost_matrix(p, q)?;
    solve_ot_with_cost(&cost)
}

/// Solve a balanced uniform-weight transport problem on a given cost matrix.
pub fn solve_ot_with_cost<T: Real>(cost: &CostMatrix<T>) -> Result<TransportResult<T>> {
    let result = if cost.rows() == cost.cols() {
        solve_assignment(cost)?
    } else {
        solve_network_simplex(cost)?
    };
    if cfg!(debug_assertions) {
        result.verify(cost)?;
    }
    Ok(result)
}

/// Make a feasible dual pair tight by two c-transforms:
/// `g_j = min_i (c_ij - f_i)`, then `f_i = min_j (c_ij - g_j)`.
///
/// From an optimal pair this keeps optimality and removes arbitrary offsets
/// an LP basis can leave on components joined only by degenerate arcs.
pub(crate) fn tighten_duals<T: Real>(cost: &CostMatrix<T>, f: &mut [T], g: &mut [T]) {
    let (n, m) = (cost.rows(), cost.cols());
    g.iter_mut().for_each(|v| *v = T::infinity());
    for i in 0..n {
        let row = cost.row(i);
        for j in 0..m {
            let v = row[j] - f[i];
            if v < g[j] {
                g[j] = v;
            }
        }
    }
    for i in 0..n {
        let row = cost.row(i);
        f[i] = row
            .iter()
            .zip(g.iter())
            .map(|(&c, &gj)| c - gj)
            .fold(T::infinity(), T::min);
    }
}

/// Sample variance of the optimal potential on one side, the plug-in
/// estimate of the CLT variance `Var(φ(X))`.
///
/// Uses the unbiased `1/(n-1)` normalization. Adding a constant to all
/// potentials does not change the result.
pub fn estimate_clt_variance<T: Real>(result: &TransportResult<T>, side: Side) -> Result<T> {
    let values = result.potentials(side);
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = values.iter().copied().sum::<T>() / T::from_count(n);
    let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    Ok(ss / T::from_count(n - 1))
}
