//! Entropic optimal transport with log-domain Sinkhorn iterations.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// Transport cost `⟨P, C⟩` of the entropic plan (no entropy term).
    pub cost: f64,
    pub iterations: usize,
    /// L1 violation of the row marginal at exit.
    pub marginal_error: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl SinkhornOptions {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, tolerance: 1e-9, max_iter: 100_000 }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Solve the entropic problem `min ⟨P,C⟩ − ε H(P)` with dual potentials kept
/// in the log domain, so small `ε` never underflows the Gibbs kernel.
pub fn sinkhorn(a: &[f64], b: &[f64], cost: &[f64], opts: SinkhornOptions) -> Result<SinkhornResult> {
    let (m, n) = (a.len(), b.len());
    if cost.len() != m * n {
        return Err(Error::DimensionMismatch { expected: m * n, got: cost.len() });
    }
    if !(opts.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", opts.epsilon)));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::Unbalanced { left: sa, right: sb });
    }
    let eps = opts.epsilon;
    // zero-mass atoms are dropped from the log marginals
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut err = f64::INFINITY;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        for i in 0..m {
            let row = &cost[i * n..(i + 1) * n];
            f[i] = eps * la[i] - eps * log_sum_exp((0..n).map(|j| (g[j] - row[j]) / eps));
        }
        for j in 0..n {
            g[j] = eps * lb[j] - eps * log_sum_exp((0..m).map(|i| (f[i] - cost[i * n + j]) / eps));
        }
        if it % 10 == 0 || it == opts.max_iter {
            err = (0..m)
                .map(|i| {
                    let r: f64 = (0..n).map(|j| ((f[i] + g[j] - cost[i * n + j]) / eps).exp()).sum();
                    (r - a[i]).abs()
                })
                .sum();
            if err < opts.tolerance {
                break;
            }
        }
    }
    if !(err < opts.tolerance) {
        return Err(Error::NotConverged { iterations: it, residual: err });
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let c = cost[i * n + j];
            total += ((f[i] + g[j] - c) / eps).exp() * c;
        }
    }
    Ok(SinkhornResult { cost: total, iterations: it, marginal_error: err, f, g })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_to_exact_on_small_problem() {
        let a = [0.5, 0.5];
        let b = [0.5, 0.5];
        let c = [0.0, 1.0, 1.0, 0.0];
        let r = sinkhorn(&a, &b, &c, SinkhornOptions::new(1e-2)).unwrap();
        assert!(r.cost < 1e-10);
        assert!(r.marginal_error < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let a = [0.3, 0.7];
        let b = [0.6, 0.4];
        let c = [0.0, 1.0, 1.0, 0.0];
        let opts = SinkhornOptions { epsilon: 1e-3, tolerance: 1e-15, max_iter: 3 };
        assert!(matches!(sinkhorn(&a, &b, &c, opts), Err(Error::NotConverged { .. })));
    }
}
