//! Purely atomic measures and distances between them.
//!
//! Distances use the base geodesic distance `d`, and the bounded version
//! `d₁ = min(d, 1)` where the construction needs a bounded metric
//! (Prokhorov and the weak-atomic term).

mod bounded_lipschitz;
mod prokhorov;
mod sinkhorn;
mod transport;
mod weak_atomic;

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::BaseSpace;
use crate::error::{Error, Result};
use crate::simplex::MassSequence;

pub use bounded_lipschitz::bounded_lipschitz_lp;
pub use prokhorov::prokhorov_from_matrix;
pub use sinkhorn::{sinkhorn, SinkhornOptions, SinkhornResult};
pub use transport::{solve as transport, TransportPlan};
pub use weak_atomic::{CosineSum, THETA_MAX, THETA_MIN};

/// Default support cap for Prokhorov-type distances.
pub const PROKHOROV_CAP: usize = 64;
/// Positions closer than this are treated as equal by [`em`].
pub const INJECTIVITY_TOL: f64 = 1e-12;
const BALANCE_TOL: f64 = 1e-9;

/// `Σ_k m_k δ_{x_k}` on a base space. Positions are stored flat
/// (`len × d`).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    space: BaseSpace,
    positions: Vec<f64>,
    masses: Vec<f64>,
    normalized: bool,
}

impl AtomicMeasure {
    /// Probability measure; masses must be positive and sum to 1 within 1e-9.
    pub fn new(space: BaseSpace, positions: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let mu = Self::unnormalized(space, positions, masses)?;
        let total = mu.total_mass();
        if (total - 1.0).abs() > BALANCE_TOL {
            return Err(Error::InvalidParameter(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { normalized: true, ..mu })
    }

    /// Finite positive measure of arbitrary total mass.
    pub fn unnormalized(space: BaseSpace, positions: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let d = space.dim();
        if positions.len() != masses.len() * d {
            return Err(Error::DimensionMismatch { expected: masses.len() * d, got: positions.len() });
        }
        if masses.is_empty() {
            return Err(Error::InvalidParameter("measure without atoms".into()));
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter(format!("atom mass {m} is not positive")));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite position".into()));
        }
        Ok(Self { space, positions, masses, normalized: false })
    }

    pub fn dirac(space: BaseSpace, x: &[f64]) -> Result<Self> {
        Self::new(space, x.to_vec(), vec![1.0])
    }

    pub fn space(&self) -> &BaseSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, k: usize) -> &[f64] {
        let d = self.space.dim();
        &self.positions[k * d..(k + 1) * d]
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.positions.chunks(self.space.dim()).zip(self.masses.iter().copied())
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms().map(|(x, m)| m * f(x)).sum()
    }

    /// Inverse of [`em`]: masses in descending order with matching positions.
    pub fn to_sequence(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.space.dim();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.masses[b].partial_cmp(&self.masses[a]).unwrap());
        let masses = order.iter().map(|&k| self.masses[k]).collect();
        let mut pos = Vec::with_capacity(self.positions.len());
        for &k in &order {
            pos.extend_from_slice(&self.positions[k * d..(k + 1) * d]);
        }
        (masses, pos)
    }

    /// `η² = Σ m_k² δ_{x_k}`.
    pub fn squared(&self) -> AtomicMeasure {
        AtomicMeasure {
            space: self.space,
            positions: self.positions.clone(),
            masses: self.masses.iter().map(|m| m * m).collect(),
            normalized: false,
        }
    }

    /// CSV rows `mass,x0,…`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "mass")?;
        for c in 0..self.space.dim() {
            write!(w, ",x{c}")?;
        }
        writeln!(w)?;
        for (x, m) in self.atoms() {
            write!(w, "{m}")?;
            for c in x {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Read the format of [`AtomicMeasure::write_csv`]; the result is a
    /// probability measure when the masses sum to one.
    pub fn read_csv<R: BufRead>(space: BaseSpace, reader: R) -> Result<Self> {
        let d = space.dim();
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty measure CSV".into()))??;
        if header.split(',').count() != d + 1 || !header.starts_with("mass") {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut masses = Vec::new();
        let mut positions = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {row}: {e}"))))
                .collect::<Result<_>>()?;
            if fields.len() != d + 1 {
                return Err(Error::Parse(format!("row {row}: expected {} fields", d + 1)));
            }
            masses.push(fields[0]);
            positions.extend_from_slice(&fields[1..]);
        }
        let mu = Self::unnormalized(space, positions, masses)?;
        let normalized = (mu.total_mass() - 1.0).abs() <= BALANCE_TOL;
        Ok(Self { normalized, ..mu })
    }
}

/// Empirical measure `Σ_i s_i δ_{x_i}` of a configuration. Zero masses are
/// dropped; coinciding positions are rejected so that the map stays
/// invertible. The result counts as a probability measure even when the
/// sequence leaves a truncation tail unrepresented.
pub fn em(masses: &MassSequence, space: BaseSpace, positions: &[f64]) -> Result<AtomicMeasure> {
    let d = space.dim();
    let n = masses.len();
    if positions.len() != n * d {
        return Err(Error::DimensionMismatch { expected: n * d, got: positions.len() });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| masses.masses()[i] > 0.0).collect();
    for (a, &i) in keep.iter().enumerate() {
        for &j in &keep[a + 1..] {
            let dist = space.distance_sq_unchecked(&positions[i * d..(i + 1) * d], &positions[j * d..(j + 1) * d]);
            if dist.sqrt() < INJECTIVITY_TOL {
                return Err(Error::NotInjective { i, j });
            }
        }
    }
    let mut pos = Vec::with_capacity(keep.len() * d);
    for &i in &keep {
        pos.extend_from_slice(&positions[i * d..(i + 1) * d]);
    }
    let mu = AtomicMeasure::unnormalized(space, pos, keep.iter().map(|&i| masses.masses()[i]).collect())?;
    Ok(AtomicMeasure { normalized: true, ..mu })
}

pub fn squared_measure(mu: &AtomicMeasure) -> AtomicMeasure {
    mu.squared()
}

fn same_space(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<()> {
    if mu.space != nu.space {
        return Err(Error::SpaceMismatch(format!("{} vs {}", mu.space.name(), nu.space.name())));
    }
    Ok(())
}

fn balanced(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<()> {
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if (a - b).abs() > BALANCE_TOL {
        return Err(Error::Unbalanced { left: a, right: b });
    }
    Ok(())
}

/// `d(x_i, y_j)` row-major over the atoms of `mu` and `nu`.
pub fn cross_distances(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Vec<f64> {
    let mut out = Vec::with_capacity(mu.len() * nu.len());
    for x in mu.positions.chunks(mu.space.dim()) {
        for y in nu.positions.chunks(nu.space.dim()) {
            out.push(mu.space.distance_sq_unchecked(x, y).sqrt());
        }
    }
    out
}

fn bounded(d: Vec<f64>) -> Vec<f64> {
    d.into_iter().map(|v| v.min(1.0)).collect()
}

/// Prokhorov distance induced by `d₁ = min(d, 1)`, exact on finite supports.
pub fn prokhorov(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    same_space(mu, nu)?;
    balanced(mu, nu)?;
    prokhorov::check_cap(mu.len(), nu.len(), PROKHOROV_CAP)?;
    Ok(prokhorov_from_matrix(&mu.masses, &nu.masses, &bounded(cross_distances(mu, nu))))
}

/// Cosine sum `θ ↦ Φ_{1/θ}(μ) − Φ_{1/θ}(ν)` with
/// `Φ_ε(μ) = Σ_{ij} m_i m_j cos(2 d₁(x_i, x_j) / (π ε))`.
pub fn phi_difference(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<CosineSum> {
    same_space(mu, nu)?;
    Ok(weak_atomic::phi_difference(
        &mu.masses,
        &bounded(cross_distances(mu, mu)),
        &nu.masses,
        &bounded(cross_distances(nu, nu)),
    ))
}

/// Prokhorov distance plus `sup_{ε ∈ [1e-4, 1]} |Φ_ε(μ) − Φ_ε(ν)|`.
pub fn weak_atomic_distance(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    let p = prokhorov(mu, nu)?;
    let g = phi_difference(mu, nu)?;
    Ok(p + g.sup_abs(THETA_MIN, THETA_MAX))
}

/// `sup{ ∫ f d(μ − ν) : ‖f‖_∞ ≤ 1, Lip(f) ≤ 1 }` on the joint support.
pub fn bounded_lipschitz(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    same_space(mu, nu)?;
    let joint = AtomicMeasure {
        space: mu.space,
        positions: [mu.positions.as_slice(), nu.positions.as_slice()].concat(),
        masses: vec![1.0; mu.len() + nu.len()],
        normalized: false,
    };
    let w: Vec<f64> = mu.masses.iter().copied().chain(nu.masses.iter().map(|m| -m)).collect();
    bounded_lipschitz_lp(&w, &cross_distances(&joint, &joint))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum W2Method {
    Exact,
    Sinkhorn { epsilon: f64 },
}

/// Exact optimal transport cost for `cost(d)` applied to every atom pair.
pub fn transport_cost(mu: &AtomicMeasure, nu: &AtomicMeasure, cost: impl Fn(f64) -> f64) -> Result<f64> {
    same_space(mu, nu)?;
    balanced(mu, nu)?;
    let c: Vec<f64> = cross_distances(mu, nu).into_iter().map(cost).collect();
    Ok(transport(&mu.masses, &nu.masses, &c)?.cost)
}

/// `W₂` with cost `d²`; the Sinkhorn variant returns `sqrt ⟨P_ε, C⟩`.
pub fn w2(mu: &AtomicMeasure, nu: &AtomicMeasure, method: W2Method) -> Result<f64> {
    match method {
        W2Method::Exact => Ok(transport_cost(mu, nu, |d| d * d)?.max(0.0).sqrt()),
        W2Method::Sinkhorn { epsilon } => {
            same_space(mu, nu)?;
            balanced(mu, nu)?;
            let c: Vec<f64> = cross_distances(mu, nu).into_iter().map(|d| d * d).collect();
            let r = sinkhorn(&mu.masses, &nu.masses, &c, SinkhornOptions::new(epsilon))?;
            Ok(r.cost.max(0.0).sqrt())
        }
    }
}

/// `W₁` with cost `d`.
pub fn w1(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    transport_cost(mu, nu, |d| d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum Metric {
    Prokhorov,
    WeakAtomic,
    BoundedLipschitz,
    W1,
    W2Exact,
    W2Sinkhorn { epsilon: f64 },
}

impl Metric {
    pub fn name(&self) -> String {
        match self {
            Metric::Prokhorov => "prokhorov".into(),
            Metric::WeakAtomic => "weak_atomic".into(),
            Metric::BoundedLipschitz => "bounded_lipschitz".into(),
            Metric::W1 => "w1".into(),
            Metric::W2Exact => "w2_exact".into(),
            Metric::W2Sinkhorn { epsilon } => format!("w2_sinkhorn_{epsilon}"),
        }
    }

    pub fn distance(&self, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
        match *self {
            Metric::Prokhorov => prokhorov(mu, nu),
            Metric::WeakAtomic => weak_atomic_distance(mu, nu),
            Metric::BoundedLipschitz => bounded_lipschitz(mu, nu),
            Metric::W1 => w1(mu, nu),
            Metric::W2Exact => w2(mu, nu, W2Method::Exact),
            Metric::W2Sinkhorn { epsilon } => w2(mu, nu, W2Method::Sinkhorn { epsilon }),
        }
    }
}

/// Symmetric matrix of pairwise distances, computed in parallel over the
/// upper triangle. The diagonal is zero.
pub fn distance_matrix(measures: &[AtomicMeasure], metric: Metric) -> Result<Vec<Vec<f64>>> {
    let n = measures.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| metric.distance(&measures[i], &measures[j]))
        .collect::<Result<_>>()?;
    let mut out = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[i][j] = v;
        out[j][i] = v;
    }
    Ok(out)
}
