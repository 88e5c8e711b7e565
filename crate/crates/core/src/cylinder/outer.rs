//! Outer functions `F: R^k → R` with exact first and second partials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial as a map from exponent vectors to coefficients. Exponent
/// vectors shorter than `k` are padded with zeros.
///
/// Serialized as a coefficient map with comma-joined exponent keys, e.g.
/// `{"": 1.0, "2,1": -0.5}` for `1 − ½ t₁² t₂`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct Polynomial {
    terms: Vec<(Vec<u32>, f64)>,
}

impl TryFrom<BTreeMap<String, f64>> for Polynomial {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        let mut terms = Vec::with_capacity(map.len());
        for (key, c) in map {
            let exps = if key.trim().is_empty() {
                Vec::new()
            } else {
                key.split(',')
                    .map(|e| e.trim().parse::<u32>().map_err(|err| Error::Parse(format!("exponent key `{key}`: {err}"))))
                    .collect::<Result<Vec<u32>>>()?
            };
            terms.push((exps, c));
        }
        Ok(Self::from_terms(terms))
    }
}

impl From<Polynomial> for BTreeMap<String, f64> {
    fn from(p: Polynomial) -> Self {
        p.terms
            .into_iter()
            .map(|(e, c)| (e.iter().map(u32::to_string).collect::<Vec<_>>().join(","), c))
            .collect()
    }
}

impl Polynomial {
    /// Normalizes exponent vectors (trailing zeros dropped) and merges
    /// repeated monomials.
    pub fn from_terms(terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (mut e, c) in terms {
            while e.last() == Some(&0) {
                e.pop();
            }
            *map.entry(e).or_insert(0.0) += c;
        }
        Self { terms: map.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([(Vec::new(), c)])
    }

    /// `t_i`.
    pub fn variable(i: usize) -> Self {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        Self::from_terms([(e, 1.0)])
    }

    /// `Σ_i c_i t_i`.
    pub fn linear(coeffs: &[f64]) -> Self {
        Self::from_terms(coeffs.iter().enumerate().map(|(i, c)| {
            let mut e = vec![0; i + 1];
            e[i] = 1;
            (e, *c)
        }))
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    /// Number of variables actually used.
    pub fn arity(&self) -> usize {
        self.terms.iter().map(|(e, _)| e.len()).max().unwrap_or(0)
    }

    fn shifted(&self, offset: usize) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, c)| {
            if e.is_empty() {
                (Vec::new(), *c)
            } else {
                let mut s = vec![0; offset];
                s.extend_from_slice(e);
                (s, *c)
            }
        }))
    }

    fn jet(&self, t: &[f64], out: &mut Jet) {
        let k = t.len();
        out.reset(k);
        let pow = |x: f64, n: u32| if n == 0 { 1.0 } else { x.powi(n as i32) };
        for (e, c) in &self.terms {
            let mono: Vec<f64> = (0..k).map(|i| pow(t[i], e.get(i).copied().unwrap_or(0))).collect();
            let prod_except = |skip: &[usize]| -> f64 {
                (0..k).filter(|i| !skip.contains(i)).map(|i| mono[i]).product()
            };
            out.value += c * prod_except(&[]);
            for (i, &ei) in e.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                let di = ei as f64 * pow(t[i], ei - 1);
                out.grad[i] += c * di * prod_except(&[i]);
                if ei >= 2 {
                    out.hess[i * k + i] += c * (ei * (ei - 1)) as f64 * pow(t[i], ei - 2) * prod_except(&[i]);
                }
                for (j, &ej) in e.iter().enumerate().skip(i + 1) {
                    if ej == 0 {
                        continue;
                    }
                    let dj = ej as f64 * pow(t[j], ej - 1);
                    let v = c * di * dj * prod_except(&[i, j]);
                    out.hess[i * k + j] += v;
                    out.hess[j * k + i] += v;
                }
            }
        }
    }
}

/// Scalar functions available for composition, each with closed-form
/// first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scalar {
    Exp,
    Tanh,
    Sin,
    Cos,
}

impl Scalar {
    /// `(g(x), g'(x), g''(x))`.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Scalar::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            Scalar::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            Scalar::Sin => (x.sin(), x.cos(), -x.sin()),
            Scalar::Cos => (x.cos(), -x.sin(), -x.cos()),
        }
    }
}

/// Value, gradient and Hessian (row-major `k × k`) at a point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet {
    fn reset(&mut self, k: usize) {
        self.value = 0.0;
        self.grad.clear();
        self.grad.resize(k, 0.0);
        self.hess.clear();
        self.hess.resize(k * k, 0.0);
    }
}

/// Outer function as a small expression tree over the pair-evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outer {
    Poly(Polynomial),
    Apply { apply: Scalar, of: Box<Outer> },
    Product { product: Box<(Outer, Outer)> },
    Sum { sum: Box<(Outer, Outer)> },
}

impl Outer {
    pub fn constant(c: f64) -> Self {
        Outer::Poly(Polynomial::constant(c))
    }

    /// `F(t) = t₁`.
    pub fn identity() -> Self {
        Outer::Poly(Polynomial::variable(0))
    }

    pub fn apply(g: Scalar, of: Outer) -> Self {
        Outer::Apply { apply: g, of: Box::new(of) }
    }

    pub fn times(a: Outer, b: Outer) -> Self {
        Outer::Product { product: Box::new((a, b)) }
    }

    pub fn plus(a: Outer, b: Outer) -> Self {
        Outer::Sum { sum: Box::new((a, b)) }
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Outer::Poly(p) => p.arity(),
            Outer::Apply { of, .. } => of.arity(),
            Outer::Product { product: b } | Outer::Sum { sum: b } => b.0.arity().max(b.1.arity()),
        }
    }

    /// Rename variable `i` to `i + offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        match self {
            Outer::Poly(p) => Outer::Poly(p.shifted(offset)),
            Outer::Apply { apply, of } => Outer::apply(*apply, of.shifted(offset)),
            Outer::Product { product: b } => Outer::times(b.0.shifted(offset), b.1.shifted(offset)),
            Outer::Sum { sum: b } => Outer::plus(b.0.shifted(offset), b.1.shifted(offset)),
        }
    }

    /// `F`, `∇F` and `∇²F` at `t`.
    pub fn jet(&self, t: &[f64]) -> Jet {
        let mut out = Jet::default();
        self.jet_into(t, &mut out);
        out
    }

    pub fn jet_into(&self, t: &[f64], out: &mut Jet) {
        let k = t.len();
        match self {
            Outer::Poly(p) => p.jet(t, out),
            Outer::Apply { apply, of } => {
                of.jet_into(t, out);
                let (g, g1, g2) = apply.jet(out.value);
                for i in 0..k {
                    for j in 0..k {
                        out.hess[i * k + j] = g2 * out.grad[i] * out.grad[j] + g1 * out.hess[i * k + j];
                    }
                }
                out.grad.iter_mut().for_each(|v| *v *= g1);
                out.value = g;
            }
            Outer::Product { product: b } => {
                let (mut a, mut c) = (Jet::default(), Jet::default());
                b.0.jet_into(t, &mut a);
                b.1.jet_into(t, &mut c);
                out.reset(k);
                out.value = a.value * c.value;
                for i in 0..k {
                    out.grad[i] = a.grad[i] * c.value + a.value * c.grad[i];
                    for j in 0..k {
                        out.hess[i * k + j] = a.hess[i * k + j] * c.value
                            + a.grad[i] * c.grad[j]
                            + a.grad[j] * c.grad[i]
                            + a.value * c.hess[i * k + j];
                    }
                }
            }
            Outer::Sum { sum: b } => {
                let mut a = Jet::default();
                b.0.jet_into(t, out);
                b.1.jet_into(t, &mut a);
                out.value += a.value;
                out.grad.iter_mut().zip(&a.grad).for_each(|(x, y)| *x += y);
                out.hess.iter_mut().zip(&a.hess).for_each(|(x, y)| *x += y);
            }
        }
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        self.jet(t).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &Outer, t: &[f64]) {
        let k = t.len();
        let j = f.jet(t);
        let h = 1e-5;
        for i in 0..k {
            let mut p = t.to_vec();
            let mut m = t.to_vec();
            p[i] += h;
            m[i] -= h;
            let gi = (f.value(&p) - f.value(&m)) / (2.0 * h);
            assert!((gi - j.grad[i]).abs() < 1e-7 * (1.0 + gi.abs()), "grad {i}: {gi} vs {}", j.grad[i]);
            let (jp, jm) = (f.jet(&p), f.jet(&m));
            for l in 0..k {
                let hil = (jp.grad[l] - jm.grad[l]) / (2.0 * h);
                assert!((hil - j.hess[i * k + l]).abs() < 1e-6 * (1.0 + hil.abs()));
            }
        }
    }

    #[test]
    fn polynomial_partials() {
        let p = Polynomial::from_terms([(vec![2, 1], 1.5), (vec![0, 3], -0.5), (vec![], 2.0), (vec![1], 1.0)]);
        fd_check(&Outer::Poly(p), &[0.3, -0.7]);
    }

    #[test]
    fn composed_partials() {
        let inner = Outer::Poly(Polynomial::from_terms([(vec![1, 1], 1.0), (vec![2], 0.5)]));
        let f = Outer::plus(
            Outer::apply(Scalar::Tanh, inner.clone()),
            Outer::times(Outer::apply(Scalar::Exp, Outer::Poly(Polynomial::variable(1))), inner),
        );
        fd_check(&f, &[0.4, 0.2]);
        fd_check(&Outer::apply(Scalar::Sin, Outer::apply(Scalar::Cos, Outer::identity())), &[0.9]);
    }

    #[test]
    fn shift_moves_variables() {
        let f = Outer::Poly(Polynomial::from_terms([(vec![1, 2], 1.0)])).shifted(1);
        assert_eq!(f.arity(), 3);
        assert_eq!(f.value(&[9.0, 2.0, 3.0]), 18.0);
    }

    #[test]
    fn json_coefficient_map() {
        let p = Outer::Poly(Polynomial::from_terms([(vec![], 1.0), (vec![2, 1], -0.5)]));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"":1.0,"2,1":-0.5}"#);
        let back: Outer = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let g = Outer::apply(Scalar::Tanh, p);
        let back: Outer = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
