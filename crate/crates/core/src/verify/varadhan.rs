//! One-sided small-time bound for a single unit-mass particle, where the
//! `W2`-ball around `δ_x` is the metric ball around `x`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TestReport;
use crate::ambient::BaseSpace;
use crate::error::{Error, Result};
use crate::rng;

const CHUNKS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaradhanSpec {
    pub space: BaseSpace,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub radius: f64,
    pub times: Vec<f64>,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl VaradhanSpec {
    pub fn new(space: BaseSpace, x1: Vec<f64>, x2: Vec<f64>, radius: f64, times: Vec<f64>) -> Self {
        Self { space, x1, x2, radius, times, n_samples: 1_000_000, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let d = match self.space {
            BaseSpace::Torus { d } => d,
            _ => return Err(Error::NotApplicable("varadhan_check runs on the torus".into())),
        };
        for x in [&self.x1, &self.x2] {
            if x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x.len() });
            }
        }
        if !(self.radius > 0.0 && self.radius < 0.5) {
            return Err(Error::InvalidParameter("radius must lie in (0, 1/2)".into()));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("times must be positive".into()));
        }
        if self.n_samples < 100 {
            return Err(Error::InvalidParameter("n_samples must be >= 100".into()));
        }
        Ok(())
    }
}

fn ball_volume(d: usize, r: f64) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h + 1.0) * r.powi(d as i32)
}

/// Uniform point of the ball of radius `r` around `c`, by rejection.
fn uniform_in_ball<R: Rng + ?Sized>(r: f64, c: &[f64], rng: &mut R, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for v in out.iter_mut() {
            *v = r * (2.0 * rng.gen::<f64>() - 1.0);
            s += *v * *v;
        }
        if s <= r * r {
            break;
        }
    }
    for (v, ci) in out.iter_mut().zip(c) {
        *v += ci;
    }
}

/// Checks `−2t log ⟨1_{A1}, H_t 1_{A2}⟩ ≥ (d(x1, x2) − 2r)₊² − margin` for
/// every `t`, with `A_i` the balls of radius `r` and `margin` three standard
/// errors carried through the logarithm.
///
/// The pairing is `vol(A1) · P(X_t ∈ A2)` with `X_0` uniform on `A1`. A time
/// with no hit at all gives `+∞` on the left and a warning, never a failure.
pub fn varadhan_check(spec: &VaradhanSpec) -> Result<TestReport> {
    spec.validate()?;
    let space = spec.space;
    let d = space.dim();
    let r = spec.radius;
    let dist = space.distance(&spec.x1, &spec.x2)?;
    let rhs = (dist - 2.0 * r).max(0.0).powi(2);
    let vol = ball_volume(d, r);
    let per_chunk = spec.n_samples.div_ceil(CHUNKS as usize);
    let n = per_chunk * CHUNKS as usize;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut pass = true;
    let mut worst: Option<(f64, f64)> = None;
    for (ti, &t) in spec.times.iter().enumerate() {
        let seed = rng::derive_seed(spec.seed, &format!("varadhan-{ti}"));
        let hits: usize = (0..CHUNKS)
            .into_par_iter()
            .map(|c| {
                let mut g = rng::stream(seed, c);
                let mut x = vec![0.0; d];
                let sd = (2.0 * t).sqrt();
                let mut h = 0;
                for _ in 0..per_chunk {
                    uniform_in_ball(r, &spec.x1, &mut g, &mut x);
                    for v in x.iter_mut() {
                        let z: f64 = g.sample(StandardNormal);
                        *v += sd * z;
                    }
                    space.project(&mut x);
                    if space.distance_sq_unchecked(&x, &spec.x2) <= r * r {
                        h += 1;
                    }
                }
                h
            })
            .sum();
        let q = hits as f64 / n as f64;
        let se_q = (q * (1.0 - q) / n as f64).sqrt();
        let (lhs, margin) = if hits == 0 {
            warnings.push(format!("no hits at t = {t}: margin widened to infinity"));
            (f64::INFINITY, f64::INFINITY)
        } else {
            // d(−2t log P) = −2t dP/P, and P = vol · q scales out of the ratio
            (-2.0 * t * (vol * q).ln(), 3.0 * 2.0 * t * se_q / q)
        };
        let holds = hits == 0 || lhs >= rhs - margin;
        pass &= holds;
        let slack = lhs - rhs;
        if hits > 0 && worst.map_or(true, |w| slack / margin < w.0 / w.1) {
            worst = Some((slack, margin));
        }
        rows.push(serde_json::json!({
            "t": t, "hits": hits, "pairing": vol * q, "lhs": if lhs.is_finite() { Some(lhs) } else { None },
            "rhs": rhs, "margin": if margin.is_finite() { Some(margin) } else { None }, "holds": holds,
        }));
    }
    // −2t log P along increasing t, compared step by step within the margins
    let mut order: Vec<usize> = (0..spec.times.len()).collect();
    order.sort_by(|a, b| spec.times[*a].partial_cmp(&spec.times[*b]).unwrap());
    let lhs_of = |i: usize| rows[i]["lhs"].as_f64();
    let margin_of = |i: usize| rows[i]["margin"].as_f64().unwrap_or(f64::INFINITY);
    let mut non_decreasing = true;
    let mut non_increasing = true;
    for w in order.windows(2) {
        if let (Some(a), Some(b)) = (lhs_of(w[0]), lhs_of(w[1])) {
            let tol = margin_of(w[0]) + margin_of(w[1]);
            non_decreasing &= b >= a - tol;
            non_increasing &= b <= a + tol;
        }
    }
    let (slack, margin) = worst.unwrap_or((f64::INFINITY, f64::INFINITY));
    let se = margin / 3.0;
    Ok(TestReport {
        name: "varadhan".into(),
        statistic: slack,
        standard_error: se,
        z_score: if se > 0.0 && se.is_finite() { slack / se } else { 0.0 },
        threshold: -3.0,
        pass,
        diagnostics: Default::default(),
    }
    .with("distance", dist)
    .with("radius", r)
    .with("essinf_w2_sq", rhs)
    .with("n_samples", n)
    .with("per_time", rows)
    .with("lhs_non_decreasing_in_t", non_decreasing)
    .with("lhs_non_increasing_in_t", non_increasing)
    .with("warnings", warnings))
}
