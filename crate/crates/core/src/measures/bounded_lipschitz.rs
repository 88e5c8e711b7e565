//! Bounded-Lipschitz distance as a linear program on the joint support.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// `sup { Σ_k f_k w_k : |f_k| ≤ 1, f_k − f_l ≤ d_kl }` for signed weights
/// `w` on `n` points with distance matrix `d` (row-major `n × n`).
pub fn bounded_lipschitz_lp(w: &[f64], d: &[f64]) -> Result<f64> {
    let n = w.len();
    if d.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: d.len() });
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let f: Vec<_> = w.iter().map(|&wk| lp.add_var(wk, (-1.0, 1.0))).collect();
    for k in 0..n {
        for l in 0..n {
            // the box already enforces gaps ≤ 2
            if k != l && d[k * n + l] < 2.0 {
                lp.add_constraint(&[(f[k], 1.0), (f[l], -1.0)], ComparisonOp::Le, d[k * n + l]);
            }
        }
    }
    let sol = lp.solve().map_err(|e| Error::Solver(e.to_string()))?;
    Ok(sol.objective().max(0.0))
}
