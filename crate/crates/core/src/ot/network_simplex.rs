//! Primal network simplex for the uncapacitated bipartite transportation
//! problem.
//!
//! Masses are kept integral: source `i` supplies `m` units and sink `j`
//! demands `n` units, so a plan entry of `k` units carries mass `k / (n m)`.
//! The spanning tree starts from artificial arcs to an extra root node
//! (big-M initialization) and is kept strongly feasible, which rules out
//! cycling. Entering arcs are chosen by block search.

use crate::error::{Error, Result};
use crate::num::Real;

use super::{tighten_duals, CostMatrix, PlanEntry, TransportResult};

const NONE: usize = usize::MAX;

struct Simplex<'a, T> {
    cost: &'a CostMatrix<T>,
    n: usize,
    m: usize,
    root: usize,
    art_cost: T,
    // per node, describing the arc to the parent
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    flow: Vec<i64>,
    depth: Vec<usize>,
    pi: Vec<T>,
    // children as doubly linked sibling lists
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    next_arc: usize,
    block: usize,
    eps: T,
    stem: Vec<usize>,
    stack: Vec<usize>,
}

impl<'a, T: Real> Simplex<'a, T> {
    fn new(cost: &'a CostMatrix<T>) -> Self {
        let (n, m) = (cost.rows(), cost.cols());
        let nodes = n + m;
        let root = nodes;
        let art_cost = (cost.max_entry() + T::one()) * T::from_count(nodes);
        let arcs = n * m;

        let mut s = Simplex {
            cost,
            n,
            m,
            root,
            art_cost,
            parent: vec![root; nodes + 1],
            pred: vec![NONE; nodes + 1],
            up: vec![false; nodes + 1],
            flow: vec![0; nodes + 1],
            depth: vec![1; nodes + 1],
            pi: vec![T::zero(); nodes + 1],
            first_child: vec![NONE; nodes + 1],
            next_sib: vec![NONE; nodes + 1],
            prev_sib: vec![NONE; nodes + 1],
            next_arc: 0,
            block: ((arcs as f64).sqrt().ceil() as usize).max(10).min(arcs),
            eps: T::epsilon() * art_cost * T::of(8.0),
            stem: Vec::new(),
            stack: Vec::new(),
        };
        s.parent[root] = NONE;
        s.depth[root] = 0;
        for u in 0..nodes {
            s.pred[u] = arcs + u;
            if u < n {
                // source -> root, zero cost
                s.up[u] = true;
                s.flow[u] = m as i64;
            } else {
                // root -> sink, big-M cost
                s.up[u] = false;
                s.flow[u] = n as i64;
                s.pi[u] = art_cost;
            }
            s.attach(u, root);
        }
        s
    }

    #[inline]
    fn arc_ends(&self, e: usize) -> (usize, usize) {
        let arcs = self.n * self.m;
        if e < arcs {
            (e / self.m, self.n + e % self.m)
        } else {
            let u = e - arcs;
            if u < self.n {
                (u, self.root)
            } else {
                (self.root, u)
            }
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> T {
        let arcs = self.n * self.m;
        if e < arcs {
            self.cost.entries()[e]
        } else if e - arcs < self.n {
            T::zero()
        } else {
            self.art_cost
        }
    }

    fn attach(&mut self, child: usize, parent: usize) {
        let head = self.first_child[parent];
        self.next_sib[child] = head;
        self.prev_sib[child] = NONE;
        if head != NONE {
            self.prev_sib[head] = child;
        }
        self.first_child[parent] = child;
    }

    fn detach(&mut self, child: usize, parent: usize) {
        let (prev, next) = (self.prev_sib[child], self.next_sib[child]);
        if prev == NONE {
            self.first_child[parent] = next;
        } else {
            self.next_sib[prev] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.next_sib[child] = NONE;
        self.prev_sib[child] = NONE;
    }

    /// Block search over real arcs for the most negative reduced cost.
    fn find_entering(&mut self) -> Option<usize> {
        let arcs = self.n * self.m;
        let entries = self.cost.entries();
        let mut best = -self.eps;
        let mut chosen = NONE;
        let mut count = self.block;
        let mut e = self.next_arc;
        for _ in 0..arcs {
            let (i, j) = (e / self.m, e % self.m);
            let rc = entries[e] + self.pi[i] - self.pi[self.n + j];
            if rc < best {
                best = rc;
                chosen = e;
            }
            e += 1;
            if e == arcs {
                e = 0;
            }
            count -= 1;
            if count == 0 {
                if chosen != NONE {
                    break;
                }
                count = self.block;
            }
        }
        self.next_arc = e;
        (chosen != NONE).then_some(chosen)
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] > self.depth[v] {
                u = self.parent[u];
            } else if self.depth[v] > self.depth[u] {
                v = self.parent[v];
            } else {
                u = self.parent[u];
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, e_in: usize) -> Result<()> {
        let (first, second) = self.arc_ends(e_in);
        let join = self.join(first, second);

        // Leaving arc: last blocking arc in the cycle orientation, which keeps
        // the tree strongly feasible.
        let mut delta = i64::MAX;
        let mut u_out = NONE;
        let mut side = 0u8;
        let mut u = first;
        while u != join {
            if self.up[u] && self.flow[u] < delta {
                delta = self.flow[u];
                u_out = u;
                side = 1;
            }
            u = self.parent[u];
        }
        u = second;
        while u != join {
            if !self.up[u] && self.flow[u] <= delta {
                delta = self.flow[u];
                u_out = u;
                side = 2;
            }
            u = self.parent[u];
        }
        if side == 0 {
            return Err(Error::Internal("unbounded pivot cycle".into()));
        }
        let (u_in, v_in) = if side == 1 {
            (first, second)
        } else {
            (second, first)
        };

        if delta > 0 {
            let mut u = first;
            while u != join {
                if self.up[u] {
                    self.flow[u] -= delta;
                } else {
                    self.flow[u] += delta;
                }
                u = self.parent[u];
            }
            u = second;
            while u != join {
                if self.up[u] {
                    self.flow[u] += delta;
                } else {
                    self.flow[u] -= delta;
                }
                u = self.parent[u];
            }
        }

        // Re-root the subtree hanging from u_out at u_in and hang it below v_in.
        self.stem.clear();
        let mut s = u_in;
        loop {
            self.stem.push(s);
            if s == u_out {
                break;
            }
            s = self.parent[s];
        }
        for k in 0..self.stem.len() {
            let node = self.stem[k];
            let par = self.parent[node];
            self.detach(node, par);
        }
        for k in (1..self.stem.len()).rev() {
            let (child, new_parent) = (self.stem[k], self.stem[k - 1]);
            self.parent[child] = new_parent;
            self.pred[child] = self.pred[new_parent];
            self.up[child] = !self.up[new_parent];
            self.flow[child] = self.flow[new_parent];
            self.attach(child, new_parent);
        }
        self.parent[u_in] = v_in;
        self.pred[u_in] = e_in;
        self.up[u_in] = first == u_in;
        self.flow[u_in] = delta;
        self.attach(u_in, v_in);

        let c = self.arc_cost(e_in);
        let target = if self.up[u_in] {
            self.pi[v_in] - c
        } else {
            self.pi[v_in] + c
        };
        let sigma = target - self.pi[u_in];
        self.relabel_subtree(u_in, sigma);
        Ok(())
    }

    fn relabel_subtree(&mut self, top: usize, sigma: T) {
        self.stack.clear();
        self.depth[top] = self.depth[self.parent[top]] + 1;
        self.pi[top] = self.pi[top] + sigma;
        let mut c = self.first_child[top];
        while c != NONE {
            self.stack.push(c);
            c = self.next_sib[c];
        }
        while let Some(u) = self.stack.pop() {
            self.depth[u] = self.depth[self.parent[u]] + 1;
            self.pi[u] = self.pi[u] + sigma;
            let mut c = self.first_child[u];
            while c != NONE {
                self.stack.push(c);
                c = self.next_sib[c];
            }
        }
    }

    /// Recompute all potentials from the root to shed accumulated rounding.
    fn refresh_potentials(&mut self) {
        self.stack.clear();
        self.stack.push(self.root);
        while let Some(u) = self.stack.pop() {
            let mut c = self.first_child[u];
            while c != NONE {
                let cost = self.arc_cost(self.pred[c]);
                self.pi[c] = if self.up[c] {
                    self.pi[u] - cost
                } else {
                    self.pi[u] + cost
                };
                self.depth[c] = self.depth[u] + 1;
                self.stack.push(c);
                c = self.next_sib[c];
            }
        }
    }

    fn run(&mut self) -> Result<()> {
        let arcs = self.n * self.m;
        // Generous cap; strongly feasible trees do not cycle.
        let max_pivots = 50 * arcs + 10_000;
        let mut pivots = 0usize;
        loop {
            while let Some(e) = self.find_entering() {
                let (a, b) = self.arc_ends(e);
                if self.pred[a] == e || self.pred[b] == e {
                    // a tree arc only looks improving through potential drift
                    self.refresh_potentials();
                    if self.find_entering() == Some(e) {
                        return Err(Error::Internal("tree arc selected as entering".into()));
                    }
                    continue;
                }
                self.pivot(e)?;
                pivots += 1;
                if pivots > max_pivots {
                    return Err(Error::Internal("network simplex pivot limit reached".into()));
                }
            }
            self.refresh_potentials();
            if self.find_entering().is_none() {
                return Ok(());
            }
        }
    }
}

/// Exact uniform-weight transport between `n` sources and `m` sinks.
pub fn solve_network_simplex<T: Real>(cost: &CostMatrix<T>) -> Result<TransportResult<T>> {
    let (n, m) = (cost.rows(), cost.cols());
    n.checked_mul(m)
        .and_then(|a| a.checked_mul(4))
        .ok_or_else(|| Error::Unsupported(format!("{n}x{m} problem too large")))?;
    let mut s = Simplex::new(cost);
    s.run()?;

    let arcs = n * m;
    let unit = T::one() / (T::from_count(n) * T::from_count(m));
    let mut plan = Vec::new();
    let mut total = T::zero();
    for u in 0..n + m {
        let e = s.pred[u];
        let f = s.flow[u];
        if f < 0 {
            return Err(Error::Internal("negative flow on tree arc".into()));
        }
        if f == 0 {
            continue;
        }
        if e >= arcs {
            return Err(Error::Internal("artificial arc carries flow".into()));
        }
        let mass = T::from_i64(f).expect("flow representable") * unit;
        total = total + mass * cost.entries()[e];
        plan.push(PlanEntry {
            source: e / m,
            target: e % m,
            mass,
        });
    }
    plan.sort_by_key(|e| (e.source, e.target));

    let mut f: Vec<T> = (0..n).map(|i| -s.pi[i]).collect();
    let mut g: Vec<T> = (0..m).map(|j| s.pi[n + j]).collect();
    tighten_duals(cost, &mut f, &mut g);

    Ok(TransportResult {
        cost: total,
        plan,
        dual_f: f,
        dual_g: g,
    })
}
