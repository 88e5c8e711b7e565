//! Independent oracles and random instances shared by the integration tests.

#![allow(dead_code)]

use massive::ambient::{BaseSpace, TestFunction};
use massive::cylinder::{CylinderFunction, MassCutoff, Outer, Pair, Polynomial, Scalar};
use massive::measures::AtomicMeasure;
use rand::Rng;

/// Minimum transport cost over all vertices of the transportation polytope.
///
/// Every vertex is supported on at most `m + n − 1` cells. All supports of
/// that size are tried; a support yields a vertex when the marginal system
/// restricted to it has a unique non-negative solution.
pub fn enumerate_transport(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells = m * n;
    let size = m + n - 1;
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        if let Some(x) = solve_support(a, b, &idx) {
            let c: f64 = idx.iter().zip(&x).map(|(&e, v)| cost[e] * v).sum();
            best = best.min(c);
        }
        // next combination in lexicographic order
        let Some(i) = (0..size).rev().find(|&i| idx[i] < cells - size + i) else {
            return best;
        };
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn solve_support(a: &[f64], b: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let (m, n) = (a.len(), b.len());
    let k = support.len();
    let rows = m + n;
    // augmented matrix of the marginal constraints
    let mut mat = vec![vec![0.0; k + 1]; rows];
    for (c, &e) in support.iter().enumerate() {
        mat[e / n][c] = 1.0;
        mat[m + e % n][c] = 1.0;
    }
    for i in 0..m {
        mat[i][k] = a[i];
    }
    for j in 0..n {
        mat[m + j][k] = b[j];
    }
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..rows).max_by(|x, y| mat[*x][c].abs().partial_cmp(&mat[*y][c].abs()).unwrap()) else {
            return None;
        };
        if mat[p][c].abs() < 1e-12 {
            return None;
        }
        mat.swap(r, p);
        let piv = mat[r][c];
        for v in mat[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..rows {
            if i != r && mat[i][c] != 0.0 {
                let f = mat[i][c];
                for j in 0..=k {
                    mat[i][j] -= f * mat[r][j];
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    // remaining rows must be consistent
    if (r..rows).any(|i| mat[i][k].abs() > 1e-9) {
        return None;
    }
    let x: Vec<f64> = (0..k).map(|c| mat[c][k]).collect();
    if x.iter().any(|v| *v < -1e-12) {
        return None;
    }
    Some(x)
}

/// Probability vector with `n` entries, none tiny.
pub fn weights<R: Rng>(n: usize, r: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

pub fn random_measure<R: Rng>(space: BaseSpace, n: usize, r: &mut R) -> AtomicMeasure {
    let d = space.dim();
    let x: Vec<f64> = (0..n * d).map(|_| r.gen::<f64>()).collect();
    AtomicMeasure::new(space, x, weights(n, r)).unwrap()
}

/// Torus distance computed from scratch.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let t = (a - b).rem_euclid(1.0);
            t.min(1.0 - t).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Random trigonometric test function on `torus(d)` with up to three modes.
pub fn random_trig<R: Rng>(d: usize, r: &mut R) -> TestFunction {
    let mut f = TestFunction::cos(&vec![0; d], r.gen_range(-1.0..1.0));
    for _ in 0..r.gen_range(1..=3) {
        let k: Vec<i32> = (0..d).map(|_| r.gen_range(-2..=2)).collect();
        let c = r.gen_range(-1.0..1.0);
        let g = if r.gen_bool(0.5) { TestFunction::cos(&k, c) } else { TestFunction::sin(&k, c) };
        f = f.add(&g).unwrap();
    }
    f
}

fn random_outer<R: Rng>(k: usize, depth: usize, r: &mut R) -> Outer {
    let choice = if depth == 0 { 0 } else { r.gen_range(0..4) };
    match choice {
        1 => Outer::apply(
            [Scalar::Exp, Scalar::Tanh, Scalar::Sin, Scalar::Cos][r.gen_range(0..4)],
            random_outer(k, depth - 1, r),
        ),
        2 => Outer::times(random_outer(k, depth - 1, r), random_outer(k, depth - 1, r)),
        3 => Outer::plus(random_outer(k, depth - 1, r), random_outer(k, depth - 1, r)),
        _ => {
            let mut terms = vec![(Vec::new(), r.gen_range(-1.0..1.0))];
            for _ in 0..r.gen_range(1..=3) {
                let e: Vec<u32> = (0..k).map(|_| r.gen_range(0..=2)).collect();
                terms.push((e, r.gen_range(-1.0..1.0)));
            }
            Outer::Poly(Polynomial::from_terms(terms))
        }
    }
}

/// Random cylinder function on `torus(d)` with `1..=3` pairs.
pub fn random_cylinder<R: Rng>(d: usize, r: &mut R) -> CylinderFunction {
    let k = r.gen_range(1..=3);
    let pairs = (0..k)
        .map(|_| Pair {
            phi: MassCutoff::new(r.gen_range(0.01..0.1))
                .with_poly(vec![r.gen_range(0.5..1.5), r.gen_range(-1.0..1.0)]),
            f: random_trig(d, r),
        })
        .collect();
    CylinderFunction::new(random_outer(k, 2, r), pairs).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
