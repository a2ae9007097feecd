use crate::error::{Error, Result};
use crate::num::Real;

use super::{tighten_duals, CostMatrix, PlanEntry, TransportResult};

/// Square uniform-weight transport via the Hungarian method with row and
/// column potentials (shortest augmenting paths, `O(n^3)`).
///
/// Each of the `n` points carries mass `1/n`, so the optimal plan is a
/// permutation scaled by `1/n` and the assignment potentials are directly
/// the transport potentials.
pub fn solve_assignment<T: Real>(cost: &CostMatrix<T>) -> Result<TransportResult<T>> {
    let n = cost.rows();
    if cost.cols() != n {
        return Err(Error::Unsupported(format!(
            "assignment needs a square cost matrix, got {n}x{}",
            cost.cols()
        )));
    }

    // 1-based with a virtual column 0, as in the classic formulation.
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = inf);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = cost.row(i0 - 1);
            let ui0 = u[i0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - ui0 - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            if j1 == 0 {
                return Err(Error::Internal("assignment search found no column".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] = u[row_of[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mass = T::one() / T::from_count(n);
    let mut plan: Vec<PlanEntry<T>> = (1..=n)
        .map(|j| PlanEntry {
            source: row_of[j] - 1,
            target: j - 1,
            mass,
        })
        .collect();
    plan.sort_by_key(|e| e.source);
    let total: T = plan.iter().map(|e| cost.get(e.source, e.target)).sum();

    let mut f = u[1..].to_vec();
    let mut g = v[1..].to_vec();
    tighten_duals(cost, &mut f, &mut g);

    Ok(TransportResult {
        cost: total * mass,
        plan,
        dual_f: f,
        dual_g: g,
    })
}
