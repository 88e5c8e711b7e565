//! First-collision detection on simulated paths.
//!
//! In `d ≥ 2` pairs are compared at grid times only. On the circle the pair
//! difference between two grid times is a Brownian bridge, so the chance that
//! it entered `(−δ, δ)` in between is computed exactly and a crossing is
//! reported when it exceeds ½.

use crate::ambient::{wrap_unit, BaseSpace};
use crate::error::{Error, Result};

use super::Trajectory;

/// Probability that a Brownian bridge on the unit circle from `a` to `b`
/// with variance `var` avoids the arc `(−δ, δ)`. Both endpoints lie outside
/// the arc.
///
/// The killed density on the complementary arc of length `L = 1 − 2δ` is
/// `Σ_n φ(b' − a' + 2nL) − φ(b' + a' + 2nL)` (method of images) and the free
/// density on the circle is `Σ_n φ(b − a + n)`.
pub fn circle_bridge_no_hit(a: f64, b: f64, delta: f64, var: f64) -> f64 {
    let len = 1.0 - 2.0 * delta;
    let ap = wrap_unit(a) - delta;
    let bp = wrap_unit(b) - delta;
    let sd = var.sqrt();
    if sd > 2.0 {
        // spectral decay e^{−π² var / (2L²)} makes avoidance negligible
        return 0.0;
    }
    let margin = ap.min(len - ap).min(bp.min(len - bp));
    if margin > 12.0 * sd {
        return 1.0;
    }
    let reach = (12.0 * sd / len).ceil() as i64 + 2;
    let e = |x: f64| x * x / (2.0 * var);
    let diff = wrap_unit(b - a);
    // shift every exponent by the smallest one so nothing underflows
    let shift = [diff, diff - 1.0, bp - ap]
        .iter()
        .map(|x| e(*x))
        .fold(f64::INFINITY, f64::min);
    let g = |x: f64| (shift - e(x)).exp();
    let free: f64 = (-reach..=reach).map(|n| g(diff + n as f64)).sum();
    let killed: f64 = (-reach..=reach)
        .map(|n| {
            let s = 2.0 * n as f64 * len;
            g(bp - ap + s) - g(bp + ap + s)
        })
        .sum();
    (killed / free).clamp(0.0, 1.0)
}

/// Streaming first-collision detector fed with consecutive configurations.
#[derive(Debug, Clone)]
pub struct CollisionMonitor {
    space: BaseSpace,
    delta: f64,
    speeds: Vec<f64>,
    bridge: bool,
    hit: Option<f64>,
}

impl CollisionMonitor {
    /// `speeds[i]` is the diffusion speed of particle `i`, used for the
    /// bridge variance on the circle.
    pub fn new(space: BaseSpace, delta: f64, speeds: Vec<f64>) -> Self {
        let bridge = matches!(space, BaseSpace::Torus { d: 1 });
        Self { space, delta, speeds, bridge, hit: None }
    }

    pub fn hit(&self) -> Option<f64> {
        self.hit
    }

    fn grid_check(&mut self, t: f64, frame: &[f64]) -> bool {
        let d = self.space.dim();
        let n = frame.len() / d;
        let d2 = self.delta * self.delta;
        for i in 0..n {
            for j in (i + 1)..n {
                let dist = self
                    .space
                    .distance_sq_unchecked(&frame[i * d..(i + 1) * d], &frame[j * d..(j + 1) * d]);
                if dist < d2 {
                    self.hit = Some(t);
                    return true;
                }
            }
        }
        false
    }

    pub fn observe_initial(&mut self, t: f64, frame: &[f64]) {
        if self.hit.is_none() {
            self.grid_check(t, frame);
        }
    }

    /// Account for the step from `prev` at `t0` to `next` at `t1`.
    pub fn observe_step(&mut self, t0: f64, prev: &[f64], t1: f64, next: &[f64]) {
        if self.hit.is_some() {
            return;
        }
        if self.bridge {
            let dt = t1 - t0;
            let n = next.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    let var = 2.0 * dt * (self.speeds[i] + self.speeds[j]);
                    if var == 0.0 {
                        continue;
                    }
                    let a = prev[i] - prev[j];
                    let b = next[i] - next[j];
                    let inside = |z: f64| {
                        let w = wrap_unit(z);
                        w.min(1.0 - w) < self.delta
                    };
                    if inside(a) {
                        // already reported at the previous grid time
                        continue;
                    }
                    if inside(b) {
                        self.hit = Some(t1);
                        return;
                    }
                    if circle_bridge_no_hit(a, b, self.delta, var) < 0.5 {
                        self.hit = Some(0.5 * (t0 + t1));
                        return;
                    }
                }
            }
        } else {
            self.grid_check(t1, next);
        }
    }
}

/// Smallest time at which two particles come within `delta`, or `+∞`.
///
/// Uses the recorded frames of `traj`; on the circle crossings between
/// frames are refined with the Brownian-bridge probability.
pub fn first_collision_time(traj: &Trajectory, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    if traj.n_particles() < 2 || traj.n_times() == 0 {
        return Ok(f64::INFINITY);
    }
    let speeds = (0..traj.n_particles()).map(|i| traj.masses().speed(i)).collect();
    let mut mon = CollisionMonitor::new(*traj.space(), delta, speeds);
    let times = traj.times();
    mon.observe_initial(times[0], traj.frame(0));
    for k in 1..traj.n_times() {
        mon.observe_step(times[k - 1], traj.frame(k - 1), times[k], traj.frame(k));
        if mon.hit().is_some() {
            break;
        }
    }
    Ok(mon.hit().unwrap_or(f64::INFINITY))
}

/// Minimum pairwise distance at each recorded time.
pub fn min_pair_distance_series(traj: &Trajectory) -> Result<Vec<f64>> {
    let n = traj.n_particles();
    if n < 2 {
        return Err(Error::InsufficientData("need at least two particles".into()));
    }
    let d = traj.dim();
    let space = traj.space();
    Ok((0..traj.n_times())
        .map(|k| {
            let f = traj.frame(k);
            let mut best = f64::INFINITY;
            for i in 0..n {
                for j in (i + 1)..n {
                    best = best.min(space.distance_sq_unchecked(&f[i * d..(i + 1) * d], &f[j * d..(j + 1) * d]));
                }
            }
            best.sqrt()
        })
        .collect())
}
