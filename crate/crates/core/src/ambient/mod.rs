//! Base spaces a single particle lives on.
//!
//! Three spaces are supported: the flat unit torus `[0,1)^d`, `R^d` with the
//! Ornstein–Uhlenbeck generator `Δ − x·∇`, and `[0,1]` with the Neumann
//! Laplacian. In every case the generator is normalised without the factor
//! ½, so a unit-speed particle accumulates variance `2t` per coordinate.

mod heat_kernel;
mod test_function;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use heat_kernel::{heat_kernel, log_product_density, theta, LogDensity};
pub use test_function::{Phase, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpace {
    Torus { d: usize },
    EuclideanOu { d: usize },
    IntervalReflected,
}

impl BaseSpace {
    pub fn torus(d: usize) -> Self {
        BaseSpace::Torus { d }
    }

    pub fn ou(d: usize) -> Self {
        BaseSpace::EuclideanOu { d }
    }

    pub fn interval() -> Self {
        BaseSpace::IntervalReflected
    }

    pub fn dim(&self) -> usize {
        match *self {
            BaseSpace::Torus { d } | BaseSpace::EuclideanOu { d } => d,
            BaseSpace::IntervalReflected => 1,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            BaseSpace::Torus { d } => format!("torus({d})"),
            BaseSpace::EuclideanOu { d } => format!("euclidean_ou({d})"),
            BaseSpace::IntervalReflected => "interval_reflected".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(())
    }

    /// Smallest nonzero eigenvalue of `−L`.
    pub fn spectral_gap(&self) -> f64 {
        match self {
            BaseSpace::Torus { .. } => 4.0 * PI * PI,
            BaseSpace::EuclideanOu { .. } => 1.0,
            BaseSpace::IntervalReflected => PI * PI,
        }
    }

    /// Largest possible distance, or `∞` for the Euclidean space.
    pub fn diameter(&self) -> f64 {
        match *self {
            BaseSpace::Torus { d } => (d as f64).sqrt() / 2.0,
            BaseSpace::EuclideanOu { .. } => f64::INFINITY,
            BaseSpace::IntervalReflected => 1.0,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Whether `x` is a valid coordinate vector of this space.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && match self {
                BaseSpace::Torus { .. } => x.iter().all(|c| (0.0..1.0).contains(c)),
                BaseSpace::EuclideanOu { .. } => x.iter().all(|c| c.is_finite()),
                BaseSpace::IntervalReflected => (0.0..=1.0).contains(&x[0]),
            }
    }

    /// Displacement `x − y` along a shortest geodesic (wrapped into
    /// `[−½, ½)` per coordinate on the torus). Unchecked.
    #[inline]
    pub fn displacement_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match self {
            BaseSpace::Torus { .. } => {
                for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                    *o = wrap_signed(a - b);
                }
            }
            _ => {
                for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                    *o = a - b;
                }
            }
        }
    }

    /// Squared distance without dimension checks; hot path of the dynamics.
    #[inline]
    pub fn distance_sq_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            BaseSpace::Torus { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let t = (a - b).abs();
                    let m = t.min(1.0 - t);
                    m * m
                })
                .sum(),
            _ => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
        }
    }

    /// Geodesic distance; on the torus `sqrt Σ min(|Δ_k|, 1 − |Δ_k|)²`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.distance_sq_unchecked(x, y).sqrt())
    }

    /// Map an unconstrained coordinate back onto the space.
    #[inline]
    pub fn project(&self, x: &mut [f64]) {
        match self {
            BaseSpace::Torus { .. } => x.iter_mut().for_each(|c| *c = wrap_unit(*c)),
            BaseSpace::EuclideanOu { .. } => {}
            BaseSpace::IntervalReflected => x.iter_mut().for_each(|c| *c = fold_unit(*c)),
        }
    }

    /// Draw the driving Gaussian increments of one step: independent
    /// coordinates of variance `2·speed·dt`.
    pub fn draw_increment<R: Rng + ?Sized>(&self, dt: f64, speed: f64, rng: &mut R, out: &mut [f64]) {
        let sd = (2.0 * speed * dt).sqrt();
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o = sd * z;
        }
    }

    /// Exact transition over `dt` at the given speed, in place.
    ///
    /// A frozen particle (`speed = 0`) and a zero step consume no randomness.
    pub fn step_in_place<R: Rng + ?Sized>(&self, x: &mut [f64], dt: f64, speed: f64, rng: &mut R) {
        if dt == 0.0 || speed == 0.0 {
            return;
        }
        match self {
            BaseSpace::Torus { .. } | BaseSpace::IntervalReflected => {
                let sd = (2.0 * speed * dt).sqrt();
                for c in x.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *c += sd * z;
                }
                self.project(x);
            }
            BaseSpace::EuclideanOu { .. } => {
                let tau = speed * dt;
                let a = (-tau).exp();
                let sd = (-(-2.0 * tau).exp_m1()).sqrt();
                for c in x.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *c = *c * a + sd * z;
                }
            }
        }
    }

    /// Exact transition of a particle at `x` over `dt` at `speed`.
    pub fn step<R: Rng + ?Sized>(&self, x: &[f64], dt: f64, speed: f64, rng: &mut R) -> Result<Vec<f64>> {
        self.check(x)?;
        if !(dt >= 0.0) || !(speed >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step needs dt >= 0 and speed >= 0, got dt = {dt}, speed = {speed}"
            )));
        }
        let mut y = x.to_vec();
        self.step_in_place(&mut y, dt, speed, rng);
        Ok(y)
    }

    /// Draw from the reference measure: uniform on torus and interval,
    /// standard Gaussian for OU.
    pub fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            BaseSpace::EuclideanOu { .. } => {
                out.iter_mut().for_each(|c| *c = rng.sample(StandardNormal))
            }
            _ => out.iter_mut().for_each(|c| *c = rng.gen::<f64>()),
        }
    }

    /// `L f` as a test function.
    pub fn apply_l(&self, f: &TestFunction) -> Result<TestFunction> {
        f.check_space(self)?;
        Ok(f.generator_image())
    }

    /// `Γ(f, g)(x) = ∇f(x)·∇g(x)`.
    pub fn gamma(&self, f: &TestFunction, g: &TestFunction, x: &[f64]) -> Result<f64> {
        f.check_space(self)?;
        g.check_space(self)?;
        self.check(x)?;
        Ok(gamma_unchecked(f, g, x))
    }
}

pub(crate) fn gamma_unchecked(f: &TestFunction, g: &TestFunction, x: &[f64]) -> f64 {
    let mut a = [0.0; 8];
    let mut b = [0.0; 8];
    let d = x.len();
    if d <= 8 {
        f.gradient_into(x, &mut a[..d]);
        g.gradient_into(x, &mut b[..d]);
        a[..d].iter().zip(&b[..d]).map(|(p, q)| p * q).sum()
    } else {
        let (ga, gb) = (f.gradient(x), g.gradient(x));
        ga.iter().zip(&gb).map(|(p, q)| p * q).sum()
    }
}

/// Reduce to `[0, 1)`.
#[inline]
pub fn wrap_unit(c: f64) -> f64 {
    let r = c.rem_euclid(1.0);
    // rem_euclid rounds tiny negative inputs up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Reduce to `[−½, ½)`.
#[inline]
pub fn wrap_signed(c: f64) -> f64 {
    let r = wrap_unit(c + 0.5) - 0.5;
    if r < -0.5 {
        -0.5
    } else {
        r
    }
}

/// Reflect onto `[0, 1]`: the Neumann folding map `y mod 2`, then `2 − y`
/// on the upper half.
#[inline]
pub fn fold_unit(c: f64) -> f64 {
    let r = c.rem_euclid(2.0);
    if r > 1.0 {
        2.0 - r
    } else {
        r
    }
}
