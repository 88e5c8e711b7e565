use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass cutoff `φ(s) = S((s − ε)/w) · P(s)` with `S` the quintic
/// smootherstep `6x⁵ − 15x⁴ + 10x³` clamped to `[0, 1]`.
///
/// `φ` vanishes on `[0, ε]` and is `C²` at `ε` and at `ε + w`. Above `ε + w`
/// it equals the polynomial `P`, so `φ ≡ 1` there with the default `P = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassCutoff {
    pub eps: f64,
    pub w: f64,
    /// Coefficients of `P` in increasing degree.
    #[serde(default = "unit_poly")]
    pub poly: Vec<f64>,
}

fn unit_poly() -> Vec<f64> {
    vec![1.0]
}

fn smootherstep(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0)
    } else {
        let x2 = x * x;
        (x2 * x * (x * (6.0 * x - 15.0) + 10.0), 30.0 * x2 * (x - 1.0) * (x - 1.0))
    }
}

impl MassCutoff {
    /// Threshold `ε` with ramp width `ε/2` and `P = 1`.
    pub fn new(eps: f64) -> Self {
        Self { eps, w: 0.5 * eps, poly: unit_poly() }
    }

    pub fn with_width(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn with_poly(mut self, poly: Vec<f64>) -> Self {
        self.poly = poly;
        self
    }

    /// `φ ≡ 0`.
    pub fn zero(eps: f64) -> Self {
        Self::new(eps).with_poly(Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) || !(self.w > 0.0) || !self.w.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass cutoff needs 0 < eps < 1 and w > 0, got eps = {}, w = {}",
                self.eps, self.w
            )));
        }
        if self.poly.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite cutoff polynomial".into()));
        }
        Ok(())
    }

    fn poly_at(&self, s: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.poly.iter().rev() {
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp)
    }

    /// Whether an atom of mass `s` contributes at all.
    #[inline]
    pub fn active(&self, s: f64) -> bool {
        s > self.eps
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        if !self.active(s) {
            return 0.0;
        }
        smootherstep((s - self.eps) / self.w).0 * self.poly_at(s).0
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if !self.active(s) {
            return 0.0;
        }
        let (h, dh) = smootherstep((s - self.eps) / self.w);
        let (p, dp) = self.poly_at(s);
        dh / self.w * p + h * dp
    }
}
