//! Prokhorov distance between finitely supported measures via Strassen's
//! theorem.
//!
//! For a threshold `T` let `F(T)` be the maximal mass that can be moved from
//! `μ` to `ν` along pairs with `d₁ ≤ T` (a bipartite max-flow). Strassen's
//! theorem gives `π(μ, ν) = inf{ε : 1 − F(ε) ≤ ε}`. `F` is a step function
//! jumping only at pairwise distances, so the infimum is
//! `min_k max(T_k, 1 − F(T_k))` over the sorted distinct distances `T_k`
//! (together with 0); `T_k` increases and `1 − F(T_k)` decreases, so the
//! minimiser is found by binary search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const FLOW_EPS: f64 = 1e-15;

struct Network {
    n: usize,
    cap: Vec<f64>,
}

impl Network {
    fn new(n: usize) -> Self {
        Self { n, cap: vec![0.0; n * n] }
    }

    fn add(&mut self, u: usize, v: usize, c: f64) {
        self.cap[u * self.n + v] += c;
    }

    /// Edmonds–Karp maximum flow on a dense residual matrix.
    fn max_flow(mut self, s: usize, t: usize) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        loop {
            let mut parent = vec![usize::MAX; n];
            parent[s] = s;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for v in 0..n {
                    if parent[v] == usize::MAX && self.cap[u * n + v] > FLOW_EPS {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if parent[t] == usize::MAX {
                return total;
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let u = parent[v];
                push = push.min(self.cap[u * n + v]);
                v = u;
            }
            let mut v = t;
            while v != s {
                let u = parent[v];
                self.cap[u * n + v] -= push;
                self.cap[v * n + u] += push;
                v = u;
            }
            total += push;
        }
    }
}

/// Largest mass transportable from `a` to `b` using pairs with `d[i][j] ≤ t`.
pub(crate) fn matched_mass(a: &[f64], b: &[f64], d: &[f64], t: f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let (s, sink) = (m + n, m + n + 1);
    let mut net = Network::new(m + n + 2);
    for i in 0..m {
        net.add(s, i, a[i]);
    }
    for j in 0..n {
        net.add(m + j, sink, b[j]);
    }
    for i in 0..m {
        for j in 0..n {
            if d[i * n + j] <= t {
                net.add(i, m + j, 2.0);
            }
        }
    }
    net.max_flow(s, sink)
}

/// Prokhorov distance for probability vectors `a`, `b` with bounded
/// distance matrix `d1` (entries in `[0, 1]`).
pub fn prokhorov_from_matrix(a: &[f64], b: &[f64], d1: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = d1.to_vec();
    thresholds.push(0.0);
    thresholds.sort_by(|x, y| x.partial_cmp(y).unwrap());
    thresholds.dedup();
    let g = |k: usize| {
        let t = thresholds[k];
        t.max(1.0 - matched_mass(a, b, d1, t))
    };
    // first k with T_k ≥ 1 − F(T_k)
    let (mut lo, mut hi) = (0usize, thresholds.len() - 1);
    let crosses = |k: usize| thresholds[k] >= 1.0 - matched_mass(a, b, d1, thresholds[k]);
    if !crosses(hi) {
        return g(hi).min(1.0);
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if crosses(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut best = g(lo);
    if lo > 0 {
        best = best.min(g(lo - 1));
    }
    best.clamp(0.0, 1.0)
}

pub(crate) fn check_cap(m: usize, n: usize, cap: usize) -> Result<()> {
    let got = m.max(n);
    if got > cap {
        return Err(Error::SupportTooLarge { got, cap });
    }
    Ok(())
}
