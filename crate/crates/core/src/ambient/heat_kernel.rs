//! Heat kernel of `Δ` on the flat unit torus and the infinite-product
//! density of a massive system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{wrap_signed, BaseSpace};
use crate::error::{Error, Result};
use crate::simplex::MassSequence;

const TERM_TOL: f64 = 1e-16;
const SPECTRAL_SWITCH: f64 = 0.2;

/// `log θ(z, t)` where `θ(·, t)` is the density at time `t` of the
/// `Δ`-diffusion on the unit circle, started at 0.
pub fn log_theta(z: f64, t: f64) -> f64 {
    let z = wrap_signed(z);
    if t > SPECTRAL_SWITCH {
        let mut sum = 1.0;
        let mut n = 1.0f64;
        loop {
            let term = 2.0 * (-4.0 * PI * PI * n * n * t).exp();
            if term < TERM_TOL {
                break;
            }
            sum += term * (2.0 * PI * n * z).cos();
            n += 1.0;
        }
        return sum.ln();
    }
    // images relative to the dominant one, so small t never underflows
    let base = z * z / (4.0 * t);
    let mut rel = 1.0;
    let mut n = 1.0f64;
    loop {
        let a = (-((z + n).powi(2) / (4.0 * t) - base)).exp();
        let b = (-((z - n).powi(2) / (4.0 * t) - base)).exp();
        rel += a + b;
        if a.max(b) < TERM_TOL * rel {
            break;
        }
        n += 1.0;
    }
    -base - 0.5 * (4.0 * PI * t).ln() + rel.ln()
}

/// `θ(z, t)`, the one-dimensional torus heat kernel.
pub fn theta(z: f64, t: f64) -> f64 {
    log_theta(z, t).exp()
}

fn torus_dim(space: &BaseSpace) -> Result<usize> {
    match *space {
        BaseSpace::Torus { d } => Ok(d),
        _ => Err(Error::NotApplicable(format!(
            "heat kernel is only provided on the torus, not {}",
            space.name()
        ))),
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be > 0, got {t}")))
    }
}

/// `h_t(x, y)` on `torus(d)`, density with respect to the uniform measure.
pub fn heat_kernel(space: &BaseSpace, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    let d = torus_dim(space)?;
    check_time(t)?;
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len().max(y.len()) });
    }
    Ok(x.iter().zip(y).map(|(a, b)| log_theta(a - b, t)).sum::<f64>().exp())
}

/// Bound on `|log h_s(x, y)|` uniform in `x, y` on `torus(d)`.
///
/// Per coordinate `|θ(·, s) − 1| ≤ 2q/(1 − q) =: r` with `q = e^{−4π²s}`, so
/// `|h_s − 1| ≤ (1 + r)^d − 1 =: ρ` and `|log h_s| ≤ −log(1 − ρ)`.
pub fn log_kernel_bound(d: usize, s: f64) -> f64 {
    let q = (-4.0 * PI * PI * s).exp();
    let r = 2.0 * q / (1.0 - q);
    let rho = (r.ln_1p() * d as f64).exp_m1();
    if rho >= 1.0 || !rho.is_finite() {
        f64::INFINITY
    } else {
        -(-rho).ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDensity {
    /// `Σ_{k<K} log h_{t/s_k}(x_k, y_k)` over the supplied points.
    pub partial_sum: f64,
    /// Bound on the absolute contribution of every particle not summed.
    pub tail_bound: f64,
}

/// Logarithm of the product density `Π_k h_{t/s_k}(x_k, y_k)` of the free
/// massive system, evaluated on the first `K` particles, with a bound on the
/// remainder.
///
/// `xs` and `ys` hold `K` points each, flattened. Particles `K..` of `masses`
/// contribute at most [`log_kernel_bound`] each. The unrepresented tail mass
/// `T` is split into atoms no larger than `m = min(s_last, T)`; since a
/// particle of mass `σ` contributes at most `g(σ) = bound(t/σ)`, the tail is
/// bounded by `T · sup_{σ ≤ m} g(σ)/σ`, evaluated on a dyadic grid.
pub fn log_product_density(
    space: &BaseSpace,
    xs: &[f64],
    ys: &[f64],
    masses: &MassSequence,
    t: f64,
) -> Result<LogDensity> {
    let d = torus_dim(space)?;
    check_time(t)?;
    if xs.len() != ys.len() || xs.len() % d != 0 {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let k = xs.len() / d;
    let s = masses.masses();
    if k > s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: k });
    }
    let mut partial_sum = 0.0;
    for i in 0..k {
        if s[i] == 0.0 {
            continue;
        }
        let ti = t / s[i];
        partial_sum += (0..d)
            .map(|c| log_theta(xs[i * d + c] - ys[i * d + c], ti))
            .sum::<f64>();
    }
    let mut tail_bound: f64 = s[k..]
        .iter()
        .filter(|m| **m > 0.0)
        .map(|m| log_kernel_bound(d, t / m))
        .sum();
    let tail = masses.tail_mass();
    if tail > 0.0 {
        let m = s.last().copied().unwrap_or(1.0).min(tail);
        let sup = (0..200)
            .map(|j| {
                let sigma = m * 0.5f64.powi(j);
                log_kernel_bound(d, t / sigma) / sigma
            })
            .fold(0.0, f64::max);
        tail_bound += tail * sup;
    }
    Ok(LogDensity { partial_sum, tail_bound })
}
