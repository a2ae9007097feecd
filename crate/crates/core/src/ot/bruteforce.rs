use crate::error::{Error, Result};
use crate::num::Real;
use crate::torus::TorusSample;

use super::{cost_matrix, CostMatrix, PlanEntry, TransportResult};

/// Largest instance [`solve_ot_bruteforce`] accepts (8! permutations).
pub const BRUTEFORCE_MAX_POINTS: usize = 8;

/// Exact optimum for `n = m <= 8` by enumerating every permutation.
///
/// With equal uniform weights the optimum lies at a vertex of the Birkhoff
/// polytope, so scanning permutations is exhaustive. Potentials are then
/// recovered independently of the LP solvers as shortest-path distances in
/// the residual graph of the optimal matching.
pub fn solve_ot_bruteforce<T: Real>(
    p: &TorusSample<T>,
    q: &TorusSample<T>,
) -> Result<TransportResult<T>> {
    let (n, m) = (p.len(), q.len());
    if n != m {
        return Err(Error::Unsupported(format!(
            "brute force needs equal sizes, got {n} and {m}"
        )));
    }
    if n > BRUTEFORCE_MAX_POINTS {
        return Err(Error::Unsupported(format!(
            "brute force limited to {BRUTEFORCE_MAX_POINTS} points, got {n}"
        )));
    }
    let cost = cost_matrix(p, q)?;

    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best = matching_cost(&cost, &perm);
    // Heap's algorithm, iterative form
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let value = matching_cost(&cost, &perm);
            if value < best {
                best = value;
                best_perm.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    let (dual_f, dual_g) = residual_potentials(&cost, &best_perm);
    let mass = T::one() / T::from_count(n);
    Ok(TransportResult {
        cost: best * mass,
        plan: best_perm
            .iter()
            .enumerate()
            .map(|(i, &j)| PlanEntry {
                source: i,
                target: j,
                mass,
            })
            .collect(),
        dual_f,
        dual_g,
    })
}

fn matching_cost<T: Real>(cost: &CostMatrix<T>, perm: &[usize]) -> T {
    perm.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum()
}

/// Bellman-Ford from a virtual source on the residual graph: row `i` ->
/// column `j` with cost `c_ij`, and column `perm[i]` -> row `i` with cost
/// `-c_i,perm[i]`. An optimal matching has no negative cycle, and the
/// distances give `f_i = -d(row_i)`, `g_j = d(col_j)`.
fn residual_potentials<T: Real>(cost: &CostMatrix<T>, perm: &[usize]) -> (Vec<T>, Vec<T>) {
    let n = perm.len();
    let mut row = vec![T::zero(); n];
    let mut col = vec![T::zero(); n];
    for _ in 0..=2 * n {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                let via = row[i] + cost.get(i, j);
                if via < col[j] {
                    col[j] = via;
                    changed = true;
                }
            }
        }
        for (i, &j) in perm.iter().enumerate() {
            let via = col[j] - cost.get(i, j);
            if via < row[i] {
                row[i] = via;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (row.iter().map(|&r| -r).collect(), col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        let a = TorusSample::from_rows(&[[0.1, 0.1]]).unwrap();
        let b = TorusSample::from_rows(&[[0.1, 0.1], [0.2, 0.2]]).unwrap();
        assert!(matches!(solve_ot_bruteforce(&a, &b), Err(Error::Unsupported(_))));
        let rows: Vec<[f64; 2]> = (0..9).map(|i| [i as f64 / 9.0, 0.0]).collect();
        let big = TorusSample::from_rows(&rows).unwrap();
        assert!(matches!(solve_ot_bruteforce(&big, &big), Err(Error::Unsupported(_))));
    }

    #[test]
    fn identity_and_two_point_instance() {
        let p = TorusSample::from_rows(&[[0.0, 0.0], [0.5, 0.5]]).unwrap();
        assert_eq!(solve_ot_bruteforce(&p, &p).unwrap().cost, 0.0);
        let q = TorusSample::from_rows(&[[0.1, 0.0], [0.6, 0.5]]).unwrap();
        let r: TransportResult<f64> = solve_ot_bruteforce(&p, &q).unwrap();
        assert!((r.cost - 0.01).abs() < 1e-12);
        r.verify(&cost_matrix(&p, &q).unwrap()).unwrap();
    }
}
