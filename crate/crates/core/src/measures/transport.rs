//! Exact discrete optimal transport by the transportation simplex.
//!
//! The basis is a spanning tree of the bipartite support graph with
//! `m + n − 1` cells (degenerate zero-flow cells included). Each pivot
//! prices the tree with dual potentials, enters the most negative reduced
//! cost and pushes flow around the unique tree cycle. After a run of
//! degenerate pivots the entering and leaving choices switch to Bland's
//! lowest-index rule, which cannot cycle.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `Σ_ij P_ij C_ij`.
    pub cost: f64,
    /// Nonzero flows `(i, j, P_ij)`.
    pub flows: Vec<(usize, usize, f64)>,
    pub iterations: usize,
}

struct Basis {
    m: usize,
    n: usize,
    /// Basic cells and their flows.
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

impl Basis {
    fn northwest(a: &[f64], b: &[f64]) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            cells.push((i, j));
            flow.push(x);
            ra[i] -= x;
            rb[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || ra[i] < rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(cells.len(), m + n - 1);
        Basis { m, n, cells, flow }
    }

    /// Node ids: rows `0..m`, columns `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, e));
            adj[self.m + j].push((i, e));
        }
        adj
    }

    fn potentials(&self, adj: &[Vec<(usize, usize)>], cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &(w, e) in &adj[v] {
                if pot[w].is_nan() {
                    let (i, j) = self.cells[e];
                    let c = cost[i * n + j];
                    // u_i + v_j = c_ij
                    pot[w] = c - pot[v];
                    queue.push_back(w);
                }
            }
        }
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Tree edges on the path from column node `m + j` to row node `i`.
    fn path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let start = self.m + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            if v == i {
                break;
            }
            for &(w, e) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    queue.push_back(w);
                }
            }
        }
        let mut edges = Vec::new();
        let mut v = i;
        while v != start {
            let (p, e) = parent[v].expect("basis is a spanning tree");
            edges.push(e);
            v = p;
        }
        edges.reverse();
        edges
    }
}

/// Minimise `Σ P_ij C_ij` over couplings of `a` and `b`.
///
/// `cost` is row-major `a.len() × b.len()`. Masses must be non-negative and
/// balanced to within `1e-9`; the residual imbalance is absorbed by the last
/// column.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty marginal".into()));
    }
    if cost.len() != m * n {
        return Err(Error::DimensionMismatch { expected: m * n, got: cost.len() });
    }
    if a.iter().chain(b).any(|x| !(*x >= 0.0)) || cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("masses must be >= 0 and costs finite".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::Unbalanced { left: sa, right: sb });
    }
    let mut b = b.to_vec();
    b[n - 1] = (b[n - 1] + sa - sb).max(0.0);

    let scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    let mut basis = Basis::northwest(a, &b);
    let max_iter = 50 * (m + n) * (m + n) + 1000;
    let mut degenerate = 0usize;
    let mut iterations = 0usize;
    loop {
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, residual: f64::NAN });
        }
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(&adj, cost);
        let bland = degenerate >= DEGENERATE_RUN;
        let mut enter: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                let r = cost[i * n + j] - u[i] - v[j];
                if r < best {
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = enter else { break };
        iterations += 1;

        // Cycle: entering cell (+), then alternate −, +, … along the tree
        // path from column ej back to row ei.
        let path = basis.path(&adj, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = basis.flow[e];
                let better = f < theta || (f == theta && (!bland || basis.cells[e] < basis.cells[leave]));
                if better {
                    theta = f;
                    leave = e;
                }
            }
        }
        theta = theta.max(0.0);
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.flow[e] = (basis.flow[e] - theta).max(0.0);
            } else {
                basis.flow[e] += theta;
            }
        }
        basis.cells[leave] = (ei, ej);
        basis.flow[leave] = theta;
        if theta == 0.0 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
    }
    let mut flows: Vec<(usize, usize, f64)> = basis
        .cells
        .iter()
        .zip(&basis.flow)
        .filter(|(_, f)| **f > 0.0)
        .map(|(&(i, j), &f)| (i, j, f))
        .collect();
    flows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let cost_value = flows.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum();
    Ok(TransportPlan { cost: cost_value, flows, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_instance<R: Rng>(m: usize, n: usize, r: &mut R) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let a = norm((0..m).map(|_| r.gen_range(0.05..1.0)).collect());
        let b = norm((0..n).map(|_| r.gen_range(0.05..1.0)).collect());
        let c = (0..m * n).map(|_| r.gen_range(0.0..1.0)).collect();
        (a, b, c)
    }

    #[test]
    fn plan_has_correct_marginals() {
        let mut r = rng::stream(2, 0);
        for _ in 0..50 {
            let (m, n) = (r.gen_range(1..12), r.gen_range(1..12));
            let (a, b, c) = random_instance(m, n, &mut r);
            let plan = solve(&a, &b, &c).unwrap();
            let mut ra = vec![0.0; m];
            let mut rb = vec![0.0; n];
            for &(i, j, f) in &plan.flows {
                ra[i] += f;
                rb[j] += f;
            }
            for (x, y) in ra.iter().zip(&a).chain(rb.iter().zip(&b)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn never_worse_than_independent_coupling() {
        let mut r = rng::stream(3, 0);
        for _ in 0..30 {
            let (a, b, c) = random_instance(7, 9, &mut r);
            let plan = solve(&a, &b, &c).unwrap();
            let product: f64 = (0..7).flat_map(|i| (0..9).map(move |j| (i, j))).map(|(i, j)| a[i] * b[j] * c[i * 9 + j]).sum();
            assert!(plan.cost <= product + 1e-12);
        }
    }

    #[test]
    fn degenerate_equal_marginals() {
        // identical uniform marginals create many simultaneous exhaustions
        let n = 10;
        let a = vec![0.1; n];
        let c: Vec<f64> = (0..n * n).map(|k| if k / n == (n - 1 - k % n) { 0.0 } else { 1.0 }).collect();
        let plan = solve(&a, &a, &c).unwrap();
        assert!(plan.cost.abs() < 1e-12);
    }

    #[test]
    fn unbalanced_is_rejected() {
        assert!(matches!(
            solve(&[0.5, 0.5], &[0.6, 0.5], &[0.0; 4]),
            Err(Error::Unbalanced { .. })
        ));
    }
}
