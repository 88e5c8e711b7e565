//! Cylinder functions `u(μ) = F((φ₁⊗f₁)⋆μ, …, (φ_k⊗f_k)⋆μ)` with
//! `(φ⊗f)⋆μ = Σ_x μ_x φ(μ_x) f(x)`.
//!
//! Every atom of mass `s` moves at speed `1/s`, so the generator of the
//! measure-valued process acts on a cylinder function as
//!
//! `L̂u = Σ_i ∂_iF · Σ_x φ_i(μ_x) Lf_i(x) + Σ_ij ∂²_ijF · Σ_x μ_x φ_iφ_j(μ_x) Γ(f_i, f_j)(x)`
//!
//! and its carré du champ is `Ĝ(u, v) = ½(L̂(uv) − uL̂v − vL̂u)`. Only atoms
//! heavier than the smallest threshold `ε_u` contribute, so every sum is
//! finite.

mod cutoff;
mod outer;

use serde::{Deserialize, Serialize};

use crate::ambient::{gamma_unchecked, BaseSpace, TestFunction};
use crate::dynamics::{InteractionSpec, PairPotential};
use crate::error::{Error, Result};
use crate::measures::AtomicMeasure;

pub use cutoff::MassCutoff;
pub use outer::{Jet, Outer, Polynomial, Scalar};

/// One factor `φ ⊗ f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub phi: MassCutoff,
    pub f: TestFunction,
}

/// Atoms given as parallel slices; positions are `len × d`.
#[derive(Debug, Clone, Copy)]
pub struct Atoms<'a> {
    pub masses: &'a [f64],
    pub positions: &'a [f64],
    pub dim: usize,
}

impl<'a> Atoms<'a> {
    pub fn new(masses: &'a [f64], positions: &'a [f64], dim: usize) -> Self {
        debug_assert_eq!(masses.len() * dim, positions.len());
        Self { masses, positions, dim }
    }

    pub fn of(mu: &'a AtomicMeasure) -> Self {
        Self::new(mu.masses(), mu.positions(), mu.space().dim())
    }

    #[inline]
    pub fn position(&self, k: usize) -> &'a [f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// `(φ⊗f)⋆μ = Σ_{μ_x > ε} μ_x φ(μ_x) f(x)`.
pub fn eval_pair(phi: &MassCutoff, f: &TestFunction, mu: &AtomicMeasure) -> f64 {
    pair_value(phi, f, Atoms::of(mu))
}

fn pair_value(phi: &MassCutoff, f: &TestFunction, atoms: Atoms) -> f64 {
    let mut acc = 0.0;
    for (k, &m) in atoms.masses.iter().enumerate() {
        if phi.active(m) {
            acc += m * phi.value(m) * f.eval(atoms.position(k));
        }
    }
    acc
}

/// `Σ_{μ_x > ε} φ(μ_x) (Lf)(x)`: the Dean–Kawasaki drift `L'ρ` paired with
/// `φ ⊗ f`.
pub fn dual_pairing(rho: &AtomicMeasure, phi: &MassCutoff, f: &TestFunction, space: &BaseSpace) -> Result<f64> {
    let lf = space.apply_l(f)?;
    let mut acc = 0.0;
    for (x, m) in rho.atoms() {
        if phi.active(m) {
            acc += phi.value(m) * lf.eval(x);
        }
    }
    Ok(acc)
}

/// `½ Σ_{i≠j} s_i s_j σ(d(x_i, x_j))`.
pub fn interaction_energy(sigma: &PairPotential, mu: &AtomicMeasure) -> Result<f64> {
    energy_atoms(mu.space(), sigma, Atoms::of(mu))
}

fn energy_atoms(space: &BaseSpace, sigma: &PairPotential, atoms: Atoms) -> Result<f64> {
    let n = atoms.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = space.distance_sq_unchecked(atoms.position(i), atoms.position(j)).sqrt();
            if r == 0.0 {
                return Err(Error::Singular { i, j });
            }
            acc += atoms.masses[i] * atoms.masses[j] * sigma.sigma(r);
        }
    }
    Ok(acc)
}

/// `∇_{x_k} W_σ = Σ_{j≠k} s_k s_j σ'(d_kj) e_kj` with `e_kj` the unit vector
/// at `x_k` pointing away from `x_j`, written as `len × d`.
pub fn interaction_gradient(space: &BaseSpace, sigma: &PairPotential, atoms: Atoms) -> Result<Vec<f64>> {
    let (n, d) = (atoms.len(), atoms.dim);
    let mut out = vec![0.0; n * d];
    let mut disp = vec![0.0; d];
    for i in 0..n {
        for j in (i + 1)..n {
            space.displacement_into(atoms.position(i), atoms.position(j), &mut disp);
            let r = disp.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r == 0.0 {
                return Err(Error::Singular { i, j });
            }
            let c = atoms.masses[i] * atoms.masses[j] * sigma.dsigma(r) / r;
            for a in 0..d {
                out[i * d + a] += c * disp[a];
                out[j * d + a] -= c * disp[a];
            }
        }
    }
    Ok(out)
}

/// `u = F ∘ (φ⊗f)⋆`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunction {
    #[serde(rename = "F")]
    pub outer: Outer,
    pub pairs: Vec<Pair>,
}

impl CylinderFunction {
    pub fn new(outer: Outer, pairs: Vec<Pair>) -> Result<Self> {
        let u = Self { outer, pairs };
        u.validate()?;
        Ok(u)
    }

    pub fn constant(c: f64) -> Self {
        Self { outer: Outer::constant(c), pairs: Vec::new() }
    }

    /// `(φ ⊗ f)⋆`.
    pub fn pair(phi: MassCutoff, f: TestFunction) -> Self {
        Self { outer: Outer::identity(), pairs: vec![Pair { phi, f }] }
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// Smallest mass threshold `ε_u`; infinite for constants.
    pub fn threshold(&self) -> f64 {
        self.pairs.iter().map(|p| p.phi.eps).fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer.arity() > self.k() {
            return Err(Error::InvalidParameter(format!(
                "outer function uses {} variables but only {} pairs are given",
                self.outer.arity(),
                self.k()
            )));
        }
        self.pairs.iter().try_for_each(|p| p.phi.validate())
    }

    pub fn check_space(&self, space: &BaseSpace) -> Result<()> {
        self.validate()?;
        self.pairs.iter().try_for_each(|p| p.f.check_space(space))
    }

    /// `G ∘ u` for a library scalar `G`.
    pub fn compose(&self, g: Scalar) -> Self {
        Self { outer: Outer::apply(g, self.outer.clone()), pairs: self.pairs.clone() }
    }

    /// `c · u`.
    pub fn scale(&self, c: f64) -> Self {
        Self { outer: Outer::times(Outer::constant(c), self.outer.clone()), pairs: self.pairs.clone() }
    }

    fn joined(&self, other: &Self, combine: fn(Outer, Outer) -> Outer) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().cloned());
        Self { outer: combine(self.outer.clone(), other.outer.shifted(self.k())), pairs }
    }

    /// `u · v` as a cylinder function on the concatenated pairs.
    pub fn product(&self, other: &Self) -> Self {
        self.joined(other, Outer::times)
    }

    /// `u + v` on the concatenated pairs.
    pub fn sum(&self, other: &Self) -> Self {
        self.joined(other, Outer::plus)
    }

    /// Pair evaluations `((φ_i⊗f_i)⋆μ)_i`.
    pub fn pair_values(&self, atoms: Atoms) -> Vec<f64> {
        self.pairs.iter().map(|p| pair_value(&p.phi, &p.f, atoms)).collect()
    }

    pub fn eval_atoms(&self, atoms: Atoms) -> f64 {
        self.outer.value(&self.pair_values(atoms))
    }

    pub fn eval(&self, mu: &AtomicMeasure) -> f64 {
        self.eval_atoms(Atoms::of(mu))
    }

    /// Precompute `Lf_i` for repeated evaluation on one space.
    pub fn prepare(&self, space: &BaseSpace) -> Result<Prepared<'_>> {
        self.check_space(space)?;
        let lf = self.pairs.iter().map(|p| space.apply_l(&p.f)).collect::<Result<_>>()?;
        Ok(Prepared { u: self, space: *space, lf })
    }

    pub fn generator(&self, mu: &AtomicMeasure) -> Result<f64> {
        Ok(self.prepare(mu.space())?.generator(Atoms::of(mu)))
    }

    pub fn carre_du_champ(&self, other: &Self, mu: &AtomicMeasure) -> Result<f64> {
        self.check_space(mu.space())?;
        other.check_space(mu.space())?;
        Ok(carre_du_champ_atoms(self, other, Atoms::of(mu)))
    }

    /// `L̂u − β · Σ_i ∂_iF · Σ_x φ_i(μ_x) ∇_x W_σ · ∇f_i(x)`: the generator
    /// of the Girsanov-transformed dynamics, `L̂u + φ⁻¹Ĝ(φ, u)` with
    /// `φ = exp(−βW_σ)`.
    pub fn girsanov_generator(&self, mu: &AtomicMeasure, interaction: &InteractionSpec) -> Result<f64> {
        self.prepare(mu.space())?.girsanov_generator(Atoms::of(mu), interaction)
    }
}

/// `Σ_ij ∂_iF ∂_jG Σ_x μ_x φ_i ψ_j(μ_x) Γ(f_i, g_j)(x)`.
pub fn carre_du_champ_atoms(u: &CylinderFunction, v: &CylinderFunction, atoms: Atoms) -> f64 {
    let (ku, kv) = (u.k(), v.k());
    if ku == 0 || kv == 0 {
        return 0.0;
    }
    let ju = u.outer.jet(&u.pair_values(atoms));
    let jv = v.outer.jet(&v.pair_values(atoms));
    let eps = u.threshold().min(v.threshold());
    let mut acc = 0.0;
    for (k, &m) in atoms.masses.iter().enumerate() {
        if m <= eps {
            continue;
        }
        let x = atoms.position(k);
        for (i, p) in u.pairs.iter().enumerate() {
            let wi = ju.grad[i] * p.phi.value(m);
            if wi == 0.0 {
                continue;
            }
            for (j, q) in v.pairs.iter().enumerate() {
                let wj = jv.grad[j] * q.phi.value(m);
                if wj != 0.0 {
                    acc += m * wi * wj * gamma_unchecked(&p.f, &q.f, x);
                }
            }
        }
    }
    acc
}

/// A cylinder function bound to a space with `Lf_i` precomputed.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    u: &'a CylinderFunction,
    space: BaseSpace,
    lf: Vec<TestFunction>,
}

impl Prepared<'_> {
    pub fn function(&self) -> &CylinderFunction {
        self.u
    }

    pub fn space(&self) -> &BaseSpace {
        &self.space
    }

    pub fn eval(&self, atoms: Atoms) -> f64 {
        self.u.eval_atoms(atoms)
    }

    /// `u(μ)` and `L̂u(μ)` together.
    pub fn eval_with_generator(&self, atoms: Atoms) -> (f64, f64) {
        let u = self.u;
        if u.k() == 0 {
            return (u.outer.value(&[]), 0.0);
        }
        let jet = u.outer.jet(&u.pair_values(atoms));
        let k = u.k();
        let eps = u.threshold();
        let mut acc = 0.0;
        for (a, &m) in atoms.masses.iter().enumerate() {
            if m <= eps {
                continue;
            }
            let x = atoms.position(a);
            for i in 0..k {
                let phi_i = u.pairs[i].phi.value(m);
                if phi_i == 0.0 {
                    continue;
                }
                acc += jet.grad[i] * phi_i * self.lf[i].eval(x);
                for j in 0..k {
                    let h = jet.hess[i * k + j];
                    if h != 0.0 {
                        let phi_j = u.pairs[j].phi.value(m);
                        if phi_j != 0.0 {
                            acc += h * m * phi_i * phi_j * gamma_unchecked(&u.pairs[i].f, &u.pairs[j].f, x);
                        }
                    }
                }
            }
        }
        (jet.value, acc)
    }

    pub fn generator(&self, atoms: Atoms) -> f64 {
        self.eval_with_generator(atoms).1
    }

    /// `Σ_i ∂_iF Σ_x φ_i(μ_x) ∇_x W_σ · ∇f_i(x)`.
    pub fn girsanov_cross(&self, atoms: Atoms, sigma: &PairPotential) -> Result<f64> {
        let u = self.u;
        if u.k() == 0 {
            return Ok(0.0);
        }
        let grad_w = interaction_gradient(&self.space, sigma, atoms)?;
        let jet = u.outer.jet(&u.pair_values(atoms));
        let d = atoms.dim;
        let mut gf = vec![0.0; d];
        let mut acc = 0.0;
        for (a, &m) in atoms.masses.iter().enumerate() {
            for (i, p) in u.pairs.iter().enumerate() {
                let w = jet.grad[i] * p.phi.value(m);
                if w == 0.0 {
                    continue;
                }
                p.f.gradient_into(atoms.position(a), &mut gf);
                acc += w * gf.iter().zip(&grad_w[a * d..(a + 1) * d]).map(|(x, y)| x * y).sum::<f64>();
            }
        }
        Ok(acc)
    }

    pub fn girsanov_generator(&self, atoms: Atoms, interaction: &InteractionSpec) -> Result<f64> {
        let base = self.generator(atoms);
        if interaction.beta == 0.0 {
            return Ok(base);
        }
        Ok(base - interaction.beta * self.girsanov_cross(atoms, &interaction.potential)?)
    }
}
