//! Regular pair potentials `σ: (0, ∞) → R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPotential {
    /// `t^{−p}/p`, and `−log t` for `p = 0`.
    Riesz { p: f64 },
    /// `(−log t)^+`.
    Logarithmic,
    /// `a t^{−α} − b t^{−β}` with `α > β`.
    Mie { a: f64, b: f64, alpha: f64, beta_exp: f64 },
    /// `−log t`.
    Dyson,
}

impl PairPotential {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PairPotential::Riesz { p } if !(p >= 0.0 && p.is_finite()) => Err(Error::InvalidParameter(
                format!("Riesz exponent must be >= 0, got {p}"),
            )),
            PairPotential::Mie { a, b, alpha, beta_exp }
                if !(a > 0.0 && b >= 0.0 && alpha > beta_exp && beta_exp >= 0.0) =>
            {
                Err(Error::InvalidParameter(
                    "Mie potential needs a > 0, b >= 0 and alpha > beta_exp >= 0".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Singularity order at 0, when it is a power law (`0` for logarithms).
    pub fn exponent(&self) -> f64 {
        match *self {
            PairPotential::Riesz { p } => p,
            PairPotential::Mie { alpha, .. } => alpha,
            PairPotential::Logarithmic | PairPotential::Dyson => 0.0,
        }
    }

    #[inline]
    pub fn sigma(&self, t: f64) -> f64 {
        match *self {
            PairPotential::Riesz { p } if p == 0.0 => -t.ln(),
            PairPotential::Riesz { p } => t.powf(-p) / p,
            PairPotential::Logarithmic => (-t.ln()).max(0.0),
            PairPotential::Mie { a, b, alpha, beta_exp } => a * t.powf(-alpha) - b * t.powf(-beta_exp),
            PairPotential::Dyson => -t.ln(),
        }
    }

    #[inline]
    pub fn dsigma(&self, t: f64) -> f64 {
        match *self {
            PairPotential::Riesz { p } => -t.powf(-p - 1.0),
            PairPotential::Logarithmic => {
                if t < 1.0 {
                    -1.0 / t
                } else {
                    0.0
                }
            }
            PairPotential::Mie { a, b, alpha, beta_exp } => {
                -a * alpha * t.powf(-alpha - 1.0) + b * beta_exp * t.powf(-beta_exp - 1.0)
            }
            PairPotential::Dyson => -1.0 / t,
        }
    }

    /// Check on a grid in `(0, delta]` that `σ` is positive and decreasing
    /// with `σ' < 0`.
    pub fn is_regular_near_zero(&self, delta: f64) -> bool {
        let grid: Vec<f64> = (1..=200).map(|j| delta * (j as f64 / 200.0).powi(3)).collect();
        grid.windows(2).all(|w| self.sigma(w[1]) < self.sigma(w[0]))
            && grid.iter().all(|t| self.sigma(*t) > 0.0 && self.dsigma(*t) < 0.0)
    }
}
