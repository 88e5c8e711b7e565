//! Finite spectral expansions on each base space.
//!
//! Test functions are stored as finite sums of eigenfunctions of the base
//! generator (trigonometric modes on the torus, probabilists' Hermite
//! polynomials for OU, Neumann cosines on the interval), so `L`, products and
//! gradients are exact symbol-level operations.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::BaseSpace;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cos,
    Sin,
}

/// `coeff · cos(2π k·x)` or `coeff · sin(2π k·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigMode {
    pub k: Vec<i32>,
    pub phase: Phase,
    pub coeff: f64,
}

/// `coeff · Π_c He_{α_c}(x_c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteMode {
    pub alpha: Vec<u32>,
    pub coeff: f64,
}

/// `coeff · cos(mπx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineMode {
    pub m: u32,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum TestFunction {
    Torus { dim: usize, modes: Vec<TrigMode> },
    EuclideanOu { dim: usize, modes: Vec<HermiteMode> },
    IntervalReflected { modes: Vec<CosineMode> },
}

fn canonical_trig(k: &[i32], phase: Phase, coeff: f64) -> Option<(Vec<i32>, Phase, f64)> {
    let flip = k.iter().find(|c| **c != 0).is_some_and(|c| *c < 0);
    let is_zero = k.iter().all(|c| *c == 0);
    match phase {
        Phase::Sin if is_zero => None,
        Phase::Sin if flip => Some((k.iter().map(|c| -c).collect(), phase, -coeff)),
        _ if flip => Some((k.iter().map(|c| -c).collect(), phase, coeff)),
        _ => Some((k.to_vec(), phase, coeff)),
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// `He_0(x), …, He_n(x)` by the three-term recurrence.
fn hermite_values(n: u32, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for j in 1..n as usize {
        let next = x * out[j] - j as f64 * out[j - 1];
        out.push(next);
    }
}

impl TestFunction {
    /// The constant `c` on `space`.
    pub fn constant(space: &BaseSpace, c: f64) -> Self {
        match *space {
            BaseSpace::Torus { d } => TestFunction::Torus {
                dim: d,
                modes: vec![TrigMode { k: vec![0; d], phase: Phase::Cos, coeff: c }],
            },
            BaseSpace::EuclideanOu { d } => TestFunction::EuclideanOu {
                dim: d,
                modes: vec![HermiteMode { alpha: vec![0; d], coeff: c }],
            },
            BaseSpace::IntervalReflected => TestFunction::IntervalReflected {
                modes: vec![CosineMode { m: 0, coeff: c }],
            },
        }
    }

    /// `coeff · cos(2π k·x)` on `torus(k.len())`.
    pub fn cos(k: &[i32], coeff: f64) -> Self {
        Self::trig(k, Phase::Cos, coeff)
    }

    /// `coeff · sin(2π k·x)` on `torus(k.len())`.
    pub fn sin(k: &[i32], coeff: f64) -> Self {
        Self::trig(k, Phase::Sin, coeff)
    }

    fn trig(k: &[i32], phase: Phase, coeff: f64) -> Self {
        TestFunction::Torus {
            dim: k.len(),
            modes: vec![TrigMode { k: k.to_vec(), phase, coeff }],
        }
        .canonical()
    }

    /// `coeff · Π He_{α_c}(x_c)` on `euclidean_ou(α.len())`.
    pub fn hermite(alpha: &[u32], coeff: f64) -> Self {
        TestFunction::EuclideanOu {
            dim: alpha.len(),
            modes: vec![HermiteMode { alpha: alpha.to_vec(), coeff }],
        }
    }

    /// `coeff · cos(mπx)` on the reflected interval.
    pub fn cosine(m: u32, coeff: f64) -> Self {
        TestFunction::IntervalReflected {
            modes: vec![CosineMode { m, coeff }],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Torus { dim, .. } | TestFunction::EuclideanOu { dim, .. } => *dim,
            TestFunction::IntervalReflected { .. } => 1,
        }
    }

    pub fn n_modes(&self) -> usize {
        match self {
            TestFunction::Torus { modes, .. } => modes.len(),
            TestFunction::EuclideanOu { modes, .. } => modes.len(),
            TestFunction::IntervalReflected { modes } => modes.len(),
        }
    }

    pub fn check_space(&self, space: &BaseSpace) -> Result<()> {
        let ok = match (self, space) {
            (TestFunction::Torus { dim, .. }, BaseSpace::Torus { d }) => dim == d,
            (TestFunction::EuclideanOu { dim, .. }, BaseSpace::EuclideanOu { d }) => dim == d,
            (TestFunction::IntervalReflected { .. }, BaseSpace::IntervalReflected) => true,
            _ => false,
        };
        let modes_ok = match self {
            TestFunction::Torus { dim, modes } => modes.iter().all(|m| m.k.len() == *dim),
            TestFunction::EuclideanOu { dim, modes } => modes.iter().all(|m| m.alpha.len() == *dim),
            TestFunction::IntervalReflected { .. } => true,
        };
        if ok && modes_ok {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(space.name()))
        }
    }

    /// Merge repeated modes, put torus frequencies in canonical sign and
    /// drop zero coefficients.
    pub fn canonical(&self) -> Self {
        match self {
            TestFunction::Torus { dim, modes } => {
                let mut acc: BTreeMap<(Vec<i32>, Phase), f64> = BTreeMap::new();
                for m in modes {
                    if let Some((k, p, c)) = canonical_trig(&m.k, m.phase, m.coeff) {
                        *acc.entry((k, p)).or_default() += c;
                    }
                }
                TestFunction::Torus {
                    dim: *dim,
                    modes: acc
                        .into_iter()
                        .filter(|(_, c)| *c != 0.0)
                        .map(|((k, phase), coeff)| TrigMode { k, phase, coeff })
                        .collect(),
                }
            }
            TestFunction::EuclideanOu { dim, modes } => {
                let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                for m in modes {
                    *acc.entry(m.alpha.clone()).or_default() += m.coeff;
                }
                TestFunction::EuclideanOu {
                    dim: *dim,
                    modes: acc
                        .into_iter()
                        .filter(|(_, c)| *c != 0.0)
                        .map(|(alpha, coeff)| HermiteMode { alpha, coeff })
                        .collect(),
                }
            }
            TestFunction::IntervalReflected { modes } => {
                let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
                for m in modes {
                    *acc.entry(m.m).or_default() += m.coeff;
                }
                TestFunction::IntervalReflected {
                    modes: acc
                        .into_iter()
                        .filter(|(_, c)| *c != 0.0)
                        .map(|(m, coeff)| CosineMode { m, coeff })
                        .collect(),
                }
            }
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_coeffs(|_, x| c * x)
    }

    /// Multiply every mode's coefficient by `g(eigenvalue of −L, coeff)`.
    fn map_coeffs(&self, mut g: impl FnMut(f64, f64) -> f64) -> Self {
        match self {
            TestFunction::Torus { dim, modes } => TestFunction::Torus {
                dim: *dim,
                modes: modes
                    .iter()
                    .map(|m| {
                        let k2: f64 = m.k.iter().map(|c| (*c as f64).powi(2)).sum();
                        TrigMode { coeff: g(4.0 * PI * PI * k2, m.coeff), ..m.clone() }
                    })
                    .collect(),
            },
            TestFunction::EuclideanOu { dim, modes } => TestFunction::EuclideanOu {
                dim: *dim,
                modes: modes
                    .iter()
                    .map(|m| {
                        let order: u32 = m.alpha.iter().sum();
                        HermiteMode { coeff: g(order as f64, m.coeff), ..m.clone() }
                    })
                    .collect(),
            },
            TestFunction::IntervalReflected { modes } => TestFunction::IntervalReflected {
                modes: modes
                    .iter()
                    .map(|m| CosineMode {
                        m: m.m,
                        coeff: g(PI * PI * (m.m as f64).powi(2), m.coeff),
                    })
                    .collect(),
            },
        }
    }

    /// `L f`: each eigenmode multiplied by its eigenvalue.
    pub(crate) fn generator_image(&self) -> Self {
        self.map_coeffs(|lambda, c| -lambda * c)
    }

    /// Eigenvalues of `−L` of the modes present, in storage order.
    pub fn mode_eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.map_coeffs(|lambda, c| {
            out.push(lambda);
            c
        });
        out
    }

    fn same_kind(&self, other: &Self) -> Result<()> {
        let ok = match (self, other) {
            (TestFunction::Torus { dim: a, .. }, TestFunction::Torus { dim: b, .. }) => a == b,
            (TestFunction::EuclideanOu { dim: a, .. }, TestFunction::EuclideanOu { dim: b, .. }) => {
                a == b
            }
            (TestFunction::IntervalReflected { .. }, TestFunction::IntervalReflected { .. }) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SpaceMismatch("test functions live on different spaces".into()))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_kind(other)?;
        let out = match (self, other) {
            (TestFunction::Torus { dim, modes: a }, TestFunction::Torus { modes: b, .. }) => {
                TestFunction::Torus { dim: *dim, modes: a.iter().chain(b).cloned().collect() }
            }
            (TestFunction::EuclideanOu { dim, modes: a }, TestFunction::EuclideanOu { modes: b, .. }) => {
                TestFunction::EuclideanOu { dim: *dim, modes: a.iter().chain(b).cloned().collect() }
            }
            (TestFunction::IntervalReflected { modes: a }, TestFunction::IntervalReflected { modes: b }) => {
                TestFunction::IntervalReflected { modes: a.iter().chain(b).cloned().collect() }
            }
            _ => unreachable!(),
        };
        Ok(out.canonical())
    }

    /// Pointwise product, expanded back into the eigenbasis.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.same_kind(other)?;
        let out = match (self, other) {
            (TestFunction::Torus { dim, modes: a }, TestFunction::Torus { modes: b, .. }) => {
                let mut modes = Vec::new();
                for p in a {
                    for q in b {
                        let plus: Vec<i32> = p.k.iter().zip(&q.k).map(|(x, y)| x + y).collect();
                        let minus: Vec<i32> = p.k.iter().zip(&q.k).map(|(x, y)| x - y).collect();
                        let c = 0.5 * p.coeff * q.coeff;
                        let mut push = |k: &Vec<i32>, phase, coeff| {
                            modes.push(TrigMode { k: k.clone(), phase, coeff })
                        };
                        match (p.phase, q.phase) {
                            (Phase::Cos, Phase::Cos) => {
                                push(&minus, Phase::Cos, c);
                                push(&plus, Phase::Cos, c);
                            }
                            (Phase::Sin, Phase::Sin) => {
                                push(&minus, Phase::Cos, c);
                                push(&plus, Phase::Cos, -c);
                            }
                            (Phase::Sin, Phase::Cos) => {
                                push(&plus, Phase::Sin, c);
                                push(&minus, Phase::Sin, c);
                            }
                            (Phase::Cos, Phase::Sin) => {
                                push(&plus, Phase::Sin, c);
                                push(&minus, Phase::Sin, -c);
                            }
                        }
                    }
                }
                TestFunction::Torus { dim: *dim, modes }
            }
            (TestFunction::EuclideanOu { dim, modes: a }, TestFunction::EuclideanOu { modes: b, .. }) => {
                let mut modes = Vec::new();
                for p in a {
                    for q in b {
                        // tensor product of the one-dimensional linearisations
                        let mut terms: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), p.coeff * q.coeff)];
                        for (m, n) in p.alpha.iter().zip(&q.alpha) {
                            let mut next = Vec::new();
                            for (idx, c) in &terms {
                                for j in 0..=(*m).min(*n) {
                                    let w = factorial(j) * binom(*m, j) * binom(*n, j);
                                    let mut idx = idx.clone();
                                    idx.push(m + n - 2 * j);
                                    next.push((idx, c * w));
                                }
                            }
                            terms = next;
                        }
                        modes.extend(terms.into_iter().map(|(alpha, coeff)| HermiteMode { alpha, coeff }));
                    }
                }
                TestFunction::EuclideanOu { dim: *dim, modes }
            }
            (TestFunction::IntervalReflected { modes: a }, TestFunction::IntervalReflected { modes: b }) => {
                let mut modes = Vec::new();
                for p in a {
                    for q in b {
                        let c = 0.5 * p.coeff * q.coeff;
                        modes.push(CosineMode { m: p.m.abs_diff(q.m), coeff: c });
                        modes.push(CosineMode { m: p.m + q.m, coeff: c });
                    }
                }
                TestFunction::IntervalReflected { modes }
            }
            _ => unreachable!(),
        };
        Ok(out.canonical())
    }

    /// `f(x)`. The length of `x` is not checked.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Torus { modes, .. } => modes
                .iter()
                .map(|m| {
                    let theta = TWO_PI * m.k.iter().zip(x).map(|(k, c)| *k as f64 * c).sum::<f64>();
                    m.coeff
                        * match m.phase {
                            Phase::Cos => theta.cos(),
                            Phase::Sin => theta.sin(),
                        }
                })
                .sum(),
            TestFunction::EuclideanOu { modes, .. } => {
                let mut buf = Vec::new();
                modes
                    .iter()
                    .map(|m| {
                        m.coeff
                            * m.alpha
                                .iter()
                                .zip(x)
                                .map(|(a, c)| {
                                    hermite_values(*a, *c, &mut buf);
                                    buf[*a as usize]
                                })
                                .product::<f64>()
                    })
                    .sum()
            }
            TestFunction::IntervalReflected { modes } => modes
                .iter()
                .map(|m| m.coeff * (m.m as f64 * PI * x[0]).cos())
                .sum(),
        }
    }

    /// `∇f(x)` written into `out` (length = dimension).
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            TestFunction::Torus { modes, .. } => {
                for m in modes {
                    let theta = TWO_PI * m.k.iter().zip(x).map(|(k, c)| *k as f64 * c).sum::<f64>();
                    let s = match m.phase {
                        Phase::Cos => -theta.sin(),
                        Phase::Sin => theta.cos(),
                    } * TWO_PI
                        * m.coeff;
                    for (o, k) in out.iter_mut().zip(&m.k) {
                        *o += s * *k as f64;
                    }
                }
            }
            TestFunction::EuclideanOu { modes, .. } => {
                let mut buf = Vec::new();
                let d = x.len();
                let mut vals = vec![0.0; d];
                let mut ders = vec![0.0; d];
                for m in modes {
                    for c in 0..d {
                        let a = m.alpha[c];
                        hermite_values(a, x[c], &mut buf);
                        vals[c] = buf[a as usize];
                        // He_a' = a He_{a-1}
                        ders[c] = if a == 0 { 0.0 } else { a as f64 * buf[a as usize - 1] };
                    }
                    for c in 0..d {
                        let others: f64 = (0..d).filter(|j| *j != c).map(|j| vals[j]).product();
                        out[c] += m.coeff * ders[c] * others;
                    }
                }
            }
            TestFunction::IntervalReflected { modes } => {
                for m in modes {
                    let w = m.m as f64 * PI;
                    out[0] -= m.coeff * w * (w * x[0]).sin();
                }
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out);
        out
    }

    /// Whether `f` is constant (only the zero mode carries weight).
    pub fn is_constant(&self) -> bool {
        self.canonical().mode_eigenvalues().iter().all(|l| *l == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_trig<R: Rng>(d: usize, r: &mut R) -> TestFunction {
        let mut f = TestFunction::constant(&BaseSpace::torus(d), r.gen_range(-1.0..1.0));
        for _ in 0..3 {
            let k: Vec<i32> = (0..d).map(|_| r.gen_range(-2..=2)).collect();
            let g = if r.gen::<bool>() {
                TestFunction::cos(&k, r.gen_range(-1.0..1.0))
            } else {
                TestFunction::sin(&k, r.gen_range(-1.0..1.0))
            };
            f = f.add(&g).unwrap();
        }
        f
    }

    fn random_hermite<R: Rng>(d: usize, r: &mut R) -> TestFunction {
        let mut f = TestFunction::constant(&BaseSpace::ou(d), 0.3);
        for _ in 0..3 {
            let a: Vec<u32> = (0..d).map(|_| r.gen_range(0..=3)).collect();
            f = f.add(&TestFunction::hermite(&a, r.gen_range(-1.0..1.0))).unwrap();
        }
        f
    }

    fn random_cosine<R: Rng>(r: &mut R) -> TestFunction {
        let mut f = TestFunction::cosine(0, 0.2);
        for m in 1..4 {
            f = f.add(&TestFunction::cosine(m, r.gen_range(-1.0..1.0))).unwrap();
        }
        f
    }

    /// Central-difference generator: Δf on torus and interval, Δf − x·∇f for OU.
    fn fd_generator(space: &BaseSpace, f: &TestFunction, x: &[f64]) -> f64 {
        let h = 1e-4;
        let d = x.len();
        let mut lap = 0.0;
        for c in 0..d {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[c] += h;
            m[c] -= h;
            lap += (f.eval(&p) - 2.0 * f.eval(x) + f.eval(&m)) / (h * h);
        }
        match space {
            BaseSpace::EuclideanOu { .. } => {
                let g = f.gradient(x);
                lap - x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
            }
            _ => lap,
        }
    }

    #[test]
    fn torus_cos_generator() {
        let s = BaseSpace::torus(1);
        let f = TestFunction::cos(&[1], 1.0);
        let lf = s.apply_l(&f).unwrap();
        for x in [0.0, 0.1, 0.37] {
            assert!((lf.eval(&[x]) + 4.0 * PI * PI * (TWO_PI * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_annihilated() {
        for s in [BaseSpace::torus(2), BaseSpace::ou(3), BaseSpace::interval()] {
            let lf = s.apply_l(&TestFunction::constant(&s, 2.5)).unwrap();
            assert!(lf.canonical().n_modes() == 0 || lf.eval(&vec![0.3; s.dim()]) == 0.0);
        }
    }

    #[test]
    fn ou_second_hermite() {
        // He_2 = x² − 1; Δf − x f' = 2 − 2x²
        let s = BaseSpace::ou(1);
        let f = TestFunction::hermite(&[2], 1.0);
        let lf = s.apply_l(&f).unwrap();
        for x in [-1.3, 0.0, 0.4, 2.0] {
            assert!((f.eval(&[x]) - (x * x - 1.0)).abs() < 1e-12);
            assert!((lf.eval(&[x]) - (2.0 - 2.0 * x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_matches_finite_differences() {
        let mut r = rng::stream(4, 0);
        for _ in 0..20 {
            let cases = [
                (BaseSpace::torus(2), random_trig(2, &mut r)),
                (BaseSpace::ou(2), random_hermite(2, &mut r)),
                (BaseSpace::interval(), random_cosine(&mut r)),
            ];
            for (s, f) in cases {
                let x: Vec<f64> = (0..s.dim()).map(|_| r.gen_range(0.05..0.95)).collect();
                let exact = s.apply_l(&f).unwrap().eval(&x);
                let fd = fd_generator(&s, &f, &x);
                assert!((exact - fd).abs() < 1e-3 * (1.0 + exact.abs()), "{exact} vs {fd}");
            }
        }
    }

    #[test]
    fn gamma_of_cosine_at_quarter() {
        let s = BaseSpace::torus(1);
        let f = TestFunction::cos(&[1], 1.0);
        let g = s.gamma(&f, &f, &[0.25]).unwrap();
        assert!((g - 4.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn gamma_is_nonnegative() {
        let mut r = rng::stream(12, 0);
        let s = BaseSpace::torus(2);
        let f = random_trig(2, &mut r);
        for _ in 0..1000 {
            let x = [r.gen::<f64>(), r.gen::<f64>()];
            assert!(s.gamma(&f, &f, &x).unwrap() >= 0.0);
        }
    }

    #[test]
    fn gamma_matches_product_identity() {
        let mut r = rng::stream(13, 0);
        for _ in 0..30 {
            let cases = [
                (BaseSpace::torus(2), random_trig(2, &mut r), random_trig(2, &mut r)),
                (BaseSpace::ou(2), random_hermite(2, &mut r), random_hermite(2, &mut r)),
                (BaseSpace::interval(), random_cosine(&mut r), random_cosine(&mut r)),
            ];
            for (s, f, g) in cases {
                let x: Vec<f64> = (0..s.dim()).map(|_| r.gen_range(-0.5..1.0f64).abs()).collect();
                let fg = f.product(&g).unwrap();
                let rhs = 0.5
                    * (s.apply_l(&fg).unwrap().eval(&x)
                        - f.eval(&x) * s.apply_l(&g).unwrap().eval(&x)
                        - g.eval(&x) * s.apply_l(&f).unwrap().eval(&x));
                let lhs = s.gamma(&f, &g, &x).unwrap();
                assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn product_is_pointwise() {
        let mut r = rng::stream(14, 0);
        let f = random_trig(3, &mut r);
        let g = random_trig(3, &mut r);
        let h = random_hermite(2, &mut r);
        let hh = h.product(&random_hermite(2, &mut rng::stream(14, 1))).unwrap();
        let h2 = random_hermite(2, &mut rng::stream(14, 1));
        for _ in 0..50 {
            let x = [r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>()];
            assert!((f.product(&g).unwrap().eval(&x) - f.eval(&x) * g.eval(&x)).abs() < 1e-12);
            let y = [x[0] * 3.0 - 1.5, x[1] * 2.0];
            assert!((hh.eval(&y) - h.eval(&y) * h2.eval(&y)).abs() < 1e-10);
        }
    }

    #[test]
    fn torus_spectral_gap_is_four_pi_squared() {
        let s = BaseSpace::torus(2);
        let mut f = TestFunction::constant(&s, 0.0);
        for k1 in -3..=3 {
            for k2 in -3..=3 {
                f = f.add(&TestFunction::cos(&[k1, k2], 1.0)).unwrap();
            }
        }
        let gap = f
            .mode_eigenvalues()
            .into_iter()
            .filter(|l| *l > 0.0)
            .fold(f64::INFINITY, f64::min);
        assert!((gap - 4.0 * PI * PI).abs() < 1e-12);
        assert!((gap - s.spectral_gap()).abs() < 1e-12);
    }

    #[test]
    fn space_mismatch_is_reported() {
        let f = TestFunction::cos(&[1, 0], 1.0);
        assert!(matches!(BaseSpace::torus(1).apply_l(&f), Err(Error::SpaceMismatch(_))));
        assert!(BaseSpace::ou(2).apply_l(&f).is_err());
        assert!(f.product(&TestFunction::cosine(1, 1.0)).is_err());
    }

    #[test]
    fn negative_frequencies_are_canonicalised() {
        let a = TestFunction::sin(&[-1, 2], 1.0);
        let b = TestFunction::sin(&[1, -2], -1.0);
        assert_eq!(a, b);
        assert_eq!(TestFunction::sin(&[0, 0], 1.0).n_modes(), 0);
    }

    #[test]
    fn json_shape() {
        let f = TestFunction::cos(&[1, 0], 0.5);
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["space"], "torus");
        assert_eq!(v["modes"][0]["k"], serde_json::json!([1, 0]));
        let back: TestFunction = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
        let h = TestFunction::hermite(&[2, 1], 1.0);
        let v = serde_json::to_value(&h).unwrap();
        assert_eq!(v["modes"][0]["alpha"], serde_json::json!([2, 1]));
    }
}
