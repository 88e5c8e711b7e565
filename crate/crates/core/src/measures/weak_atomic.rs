//! Supremum of the oscillatory term in the weak-atomic distance.
//!
//! With `θ = 1/ε` the difference `Φ_ε(μ) − Φ_ε(ν)` is a finite cosine sum
//! `g(θ) = c₀ + Σ_p c_p cos(a_p θ)` with `a_p = 2 d₁/π ≤ 2/π`. Its derivative
//! is bounded by `L = Σ |c_p| a_p`, so a uniform grid of spacing `h` misses
//! the supremum by at most `L h / 2`. The grid uses `h = 0.2 / a_max` (ten
//! points per shortest period) and the best local maxima are then polished
//! by golden-section search.

/// Range of `θ = 1/ε` that is searched.
pub const THETA_MIN: f64 = 1.0;
pub const THETA_MAX: f64 = 1e4;
const REFINED_PEAKS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct CosineSum {
    pub constant: f64,
    /// `(a_p, c_p)` with distinct positive frequencies.
    pub terms: Vec<(f64, f64)>,
}

impl CosineSum {
    /// Build from signed `(frequency, coefficient)` pairs; equal frequencies
    /// are merged and zero frequencies folded into the constant.
    pub fn new(raw: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut constant = 0.0;
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for (a, c) in raw {
            if a == 0.0 {
                constant += c;
            } else {
                terms.push((a, c));
            }
        }
        terms.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(terms.len());
        for (a, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += c,
                _ => merged.push((a, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Self { constant, terms: merged }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.constant + self.terms.iter().map(|(a, c)| c * (a * theta).cos()).sum::<f64>()
    }

    pub fn lipschitz(&self) -> f64 {
        self.terms.iter().map(|(a, c)| a * c.abs()).sum()
    }

    /// `sup_{θ ∈ [lo, hi]} |g(θ)|`.
    pub fn sup_abs(&self, lo: f64, hi: f64) -> f64 {
        let abs = |t: f64| self.eval(t).abs();
        let Some(a_max) = self.terms.iter().map(|t| t.0).reduce(f64::max) else {
            return self.constant.abs();
        };
        let n = (((hi - lo) * a_max / 0.2).ceil() as usize).max(2);
        let h = (hi - lo) / n as f64;
        let values: Vec<f64> = (0..=n).map(|k| abs(lo + k as f64 * h)).collect();
        let mut best = values.iter().cloned().fold(0.0, f64::max);
        let mut peaks: Vec<usize> = (1..n).filter(|&k| values[k] >= values[k - 1] && values[k] >= values[k + 1]).collect();
        peaks.sort_by(|&x, &y| values[y].partial_cmp(&values[x]).unwrap());
        for &k in peaks.iter().take(REFINED_PEAKS) {
            best = best.max(golden_max(abs, lo + (k - 1) as f64 * h, lo + (k + 1) as f64 * h));
        }
        best
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Frequencies and coefficients of `Φ(μ) − Φ(ν)` given the within-measure
/// `d₁` matrices (row-major, symmetric).
pub(crate) fn phi_difference(a: &[f64], da: &[f64], b: &[f64], db: &[f64]) -> CosineSum {
    let freq = |d: f64| 2.0 * d / std::f64::consts::PI;
    let mut raw = Vec::with_capacity(a.len() * a.len() / 2 + b.len() * b.len() / 2 + 2);
    for (w, d, sign) in [(a, da, 1.0), (b, db, -1.0)] {
        let n = w.len();
        for i in 0..n {
            raw.push((0.0, sign * w[i] * w[i]));
            for j in (i + 1)..n {
                raw.push((freq(d[i * n + j]), sign * 2.0 * w[i] * w[j]));
            }
        }
    }
    CosineSum::new(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_frequencies() {
        let s = CosineSum::new([(0.0, 1.0), (0.5, 2.0), (0.5, -2.0), (0.3, 1.0)]);
        assert_eq!(s.constant, 1.0);
        assert_eq!(s.terms, vec![(0.3, 1.0)]);
    }

    #[test]
    fn sup_of_single_cosine() {
        let s = CosineSum::new([(0.01, 1.0)]);
        // first maximum of |cos| after θ = 1 is at θ = 100π
        assert!((s.sup_abs(1.0, 1e4) - 1.0).abs() < 1e-12);
        let near = CosineSum::new([(1e-4, 1.0), (0.0, -1.0)]);
        // 1 − cos(θ/1e4) is increasing on [1, 1e4]
        assert!((near.sup_abs(1.0, 1e4) - (1.0 - 1f64.cos())).abs() < 1e-9);
    }

    #[test]
    fn matches_dense_brute_force() {
        use crate::rng;
        use rand::Rng;
        let mut r = rng::stream(77, 0);
        for _ in 0..8 {
            let raw: Vec<(f64, f64)> = (0..6).map(|_| (r.gen_range(0.0..0.64), r.gen_range(-0.3..0.3))).collect();
            let s = CosineSum::new(raw);
            let dense = (0..=2_000_000).map(|k| s.eval(1.0 + k as f64 * (1e4 - 1.0) / 2e6).abs()).fold(0.0, f64::max);
            let fast = s.sup_abs(1.0, 1e4);
            assert!(fast >= dense - 1e-9, "{fast} < {dense}");
            assert!(fast <= dense + s.lipschitz() * 5e-3 / 2.0 + 1e-12);
        }
    }
}
