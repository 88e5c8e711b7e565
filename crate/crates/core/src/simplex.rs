//! Mass sequences in the ordered infinite simplex.
//!
//! A [`MassSequence`] is a finite, descending truncation of an element of the
//! ordered simplex together with the mass that the truncation dropped. The
//! tail is carried explicitly so that downstream code can bound the error it
//! makes by ignoring the unrepresented particles.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const SUM_TOL: f64 = 1e-12;

/// Law a [`MassSequence`] was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MassLaw {
    PoissonDirichlet { beta: f64 },
    DirichletSymmetric { n: usize },
    Uniform { n: usize },
    Explicit,
}

impl MassLaw {
    pub fn name(&self) -> &'static str {
        match self {
            MassLaw::PoissonDirichlet { .. } => "poisson_dirichlet",
            MassLaw::DirichletSymmetric { .. } => "dirichlet_symmetric",
            MassLaw::Uniform { .. } => "uniform",
            MassLaw::Explicit => "explicit",
        }
    }

    fn params(&self) -> serde_json::Value {
        match *self {
            MassLaw::PoissonDirichlet { beta } => serde_json::json!({ "beta": beta }),
            MassLaw::DirichletSymmetric { n } | MassLaw::Uniform { n } => {
                serde_json::json!({ "n": n })
            }
            MassLaw::Explicit => serde_json::json!({}),
        }
    }

    fn from_parts(name: &str, params: &serde_json::Value) -> Result<Self> {
        let get_f = |k: &str| {
            params
                .get(k)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::Parse(format!("law {name}: missing numeric param `{k}`")))
        };
        let get_n = |k: &str| {
            params
                .get(k)
                .and_then(|v| v.as_u64())
                .map(|n| n as usize)
                .ok_or_else(|| Error::Parse(format!("law {name}: missing integer param `{k}`")))
        };
        match name {
            "poisson_dirichlet" => Ok(MassLaw::PoissonDirichlet { beta: get_f("beta")? }),
            "dirichlet_symmetric" => Ok(MassLaw::DirichletSymmetric { n: get_n("n")? }),
            "uniform" => Ok(MassLaw::Uniform { n: get_n("n")? }),
            "explicit" => Ok(MassLaw::Explicit),
            other => Err(Error::Parse(format!("unknown mass law `{other}`"))),
        }
    }
}

/// How an infinite stick-breaking sequence is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Break exactly this many sticks.
    Count(usize),
    /// Stop once the remaining stick is below the threshold.
    TailThreshold(f64),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::TailThreshold(1e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassLawSpec {
    #[serde(flatten)]
    pub law: MassLaw,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub seed: u64,
}

impl MassLawSpec {
    pub fn new(law: MassLaw) -> Self {
        Self {
            law,
            truncation: Truncation::default(),
            seed: 0,
        }
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.law {
            MassLaw::PoissonDirichlet { beta } if !(beta > 0.0 && beta.is_finite()) => {
                return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")))
            }
            MassLaw::DirichletSymmetric { n } | MassLaw::Uniform { n } if n == 0 => {
                return Err(Error::InvalidParameter("n must be >= 1".into()))
            }
            MassLaw::Explicit => {
                return Err(Error::InvalidParameter(
                    "explicit sequences are constructed, not sampled".into(),
                ))
            }
            _ => {}
        }
        match self.truncation {
            Truncation::TailThreshold(d) if !(d > 0.0 && d < 1.0) => Err(Error::InvalidParameter(
                format!("tail threshold must lie in (0,1), got {d}"),
            )),
            Truncation::Count(0) => Err(Error::InvalidParameter("count truncation must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

/// Finite descending truncation of a point of the ordered simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MassSequenceJson", into = "MassSequenceJson")]
pub struct MassSequence {
    masses: Vec<f64>,
    tail_mass: f64,
    law: MassLaw,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct MassSequenceJson {
    law: String,
    params: serde_json::Value,
    masses: Vec<f64>,
    tail_mass: f64,
    seed: Option<u64>,
}

impl From<MassSequence> for MassSequenceJson {
    fn from(m: MassSequence) -> Self {
        Self {
            law: m.law.name().to_string(),
            params: m.law.params(),
            masses: m.masses,
            tail_mass: m.tail_mass,
            seed: m.seed,
        }
    }
}

impl TryFrom<MassSequenceJson> for MassSequence {
    type Error = Error;
    fn try_from(j: MassSequenceJson) -> Result<Self> {
        let law = MassLaw::from_parts(&j.law, &j.params)?;
        let mut m = MassSequence::explicit(j.masses, j.tail_mass)?;
        m.law = law;
        m.seed = j.seed;
        Ok(m)
    }
}

impl MassSequence {
    /// A hand-written sequence. Trailing zero masses are allowed: such
    /// particles never move and carry no atom.
    pub fn explicit(masses: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0 && *m <= 1.0)) {
            return Err(Error::InvalidParameter("masses must lie in [0,1]".into()));
        }
        if masses.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("masses must be non-increasing".into()));
        }
        if !(tail_mass >= 0.0) {
            return Err(Error::InvalidParameter("tail mass must be >= 0".into()));
        }
        let total: f64 = masses.iter().sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "masses plus tail must sum to 1, got {total}"
            )));
        }
        Ok(Self {
            masses,
            tail_mass,
            law: MassLaw::Explicit,
            seed: None,
        })
    }

    /// `n` equal masses `1/n`, exact.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        Ok(Self {
            masses: vec![1.0 / n as f64; n],
            tail_mass: 0.0,
            law: MassLaw::Uniform { n },
            seed: None,
        })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn law(&self) -> MassLaw {
        self.law
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Diffusion speed of particle `i`: `1/s_i`, and 0 for a massless particle.
    pub fn speed(&self, i: usize) -> f64 {
        let s = self.masses[i];
        if s > 0.0 {
            1.0 / s
        } else {
            0.0
        }
    }

    /// Keep the `n` largest masses, moving the rest into the tail.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.masses.len());
        let dropped: f64 = self.masses[n..].iter().sum();
        Self {
            masses: self.masses[..n].to_vec(),
            tail_mass: self.tail_mass + dropped,
            law: self.law,
            seed: self.seed,
        }
    }

    /// Check every type invariant; used by tests and by deserialisation.
    pub fn check_invariants(&self) -> Result<()> {
        let positive = self.masses.iter().all(|m| *m > 0.0 && *m <= 1.0);
        let descending = self.masses.windows(2).all(|w| w[1] <= w[0]);
        let total: f64 = self.masses.iter().sum::<f64>() + self.tail_mass;
        if self.law != MassLaw::Explicit && !positive {
            return Err(Error::InvalidParameter("masses must be strictly positive".into()));
        }
        if !descending {
            return Err(Error::InvalidParameter("masses must be non-increasing".into()));
        }
        if (total - 1.0).abs() > SUM_TOL || self.tail_mass < 0.0 {
            return Err(Error::InvalidParameter(format!("total mass {total} != 1")));
        }
        if let MassLaw::Uniform { n } = self.law {
            let exact = self.masses.len() == n
                && self.tail_mass == 0.0
                && self.masses.iter().all(|m| *m == 1.0 / n as f64);
            if !exact {
                return Err(Error::InvalidParameter("uniform law must be exact".into()));
            }
        }
        Ok(())
    }
}

/// Stick-breaking weights `Λ_i = r_i ∏_{k<i} (1 - r_k)` and the stick left
/// over after the last break.
pub fn stick_break(sticks: &[f64]) -> (Vec<f64>, f64) {
    let mut remaining = 1.0;
    let weights = sticks
        .iter()
        .map(|r| {
            let w = r * remaining;
            remaining *= 1.0 - r;
            w
        })
        .collect();
    (weights, remaining)
}

fn sort_descending(v: &mut [f64]) {
    // Stable: equal masses keep their generation order.
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite masses"));
}

/// Beta(1, beta) by inversion of `1 - (1 - r)^beta`.
fn beta_one<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.gen::<f64>();
    1.0 - u.powf(1.0 / beta)
}

fn poisson_dirichlet<R: Rng + ?Sized>(
    beta: f64,
    truncation: Truncation,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    let mut remaining = 1.0f64;
    let mut weights = Vec::new();
    let keep_going = |count: usize, remaining: f64| match truncation {
        Truncation::Count(n) => count < n,
        Truncation::TailThreshold(delta) => remaining >= delta,
    };
    while keep_going(weights.len(), remaining) {
        let r = beta_one(beta, rng);
        let w = r * remaining;
        remaining *= 1.0 - r;
        if w > 0.0 {
            weights.push(w);
        } else if matches!(truncation, Truncation::Count(_)) {
            // keep the requested particle count
            weights.push(f64::MIN_POSITIVE);
        }
    }
    sort_descending(&mut weights);
    // Re-derive the tail from the sum so the unit-mass invariant holds to
    // rounding rather than to the accumulated product error.
    let tail = (1.0 - weights.iter().sum::<f64>()).max(0.0);
    Ok((weights, tail))
}

/// Poisson–Dirichlet(β) masses by Beta(1,β) stick-breaking, truncated when
/// the remaining stick drops below `tail_threshold`, then sorted.
pub fn sample_poisson_dirichlet<R: Rng + ?Sized>(
    beta: f64,
    tail_threshold: f64,
    rng: &mut R,
) -> Result<MassSequence> {
    if !(tail_threshold > 0.0 && tail_threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail threshold must lie in (0,1), got {tail_threshold}"
        )));
    }
    let (masses, tail_mass) =
        poisson_dirichlet(beta, Truncation::TailThreshold(tail_threshold), rng)?;
    Ok(MassSequence {
        masses,
        tail_mass,
        law: MassLaw::PoissonDirichlet { beta },
        seed: None,
    })
}

/// Draw a [`MassSequence`] from `spec` using `rng`.
pub fn sample_masses<R: Rng + ?Sized>(spec: &MassLawSpec, rng: &mut R) -> Result<MassSequence> {
    spec.validate()?;
    let (masses, tail_mass) = match spec.law {
        MassLaw::PoissonDirichlet { beta } => poisson_dirichlet(beta, spec.truncation, rng)?,
        MassLaw::DirichletSymmetric { n } => {
            let mut e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = e.iter().sum();
            e.iter_mut().for_each(|x| *x /= total);
            sort_descending(&mut e);
            let drift = 1.0 - e.iter().sum::<f64>();
            e[0] += drift;
            (e, 0.0)
        }
        MassLaw::Uniform { n } => return MassSequence::uniform(n),
        MassLaw::Explicit => unreachable!("rejected by validate"),
    };
    Ok(MassSequence {
        masses,
        tail_mass,
        law: spec.law,
        seed: Some(spec.seed),
    })
}

/// Draw from `spec` on stream `index` of `spec.seed`.
pub fn sample_masses_seeded(spec: &MassLawSpec, index: u64) -> Result<MassSequence> {
    let mut r = rng::stream(spec.seed, index);
    sample_masses(spec, &mut r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    /// `None` when fewer than two samples were drawn.
    pub standard_error: Option<f64>,
    pub n_samples: usize,
}

/// `Σ_i s_i τ_p(1/s_i)` with `τ_p(t) = t^{(p-1)/p}`.
pub fn tau_moment(masses: &[f64], p: f64) -> f64 {
    let expo = (p - 1.0) / p;
    masses.iter().map(|s| s * (1.0 / s).powf(expo)).sum()
}

/// Monte-Carlo estimate of `C_π(τ_p) = E_π Σ_i s_i (1/s_i)^{(p-1)/p}`.
pub fn moment_estimate(spec: &MassLawSpec, p: f64, n_samples: usize) -> Result<MomentEstimate> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must be > 1, got {p}")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    spec.validate()?;
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| sample_masses_seeded(spec, i).map(|m| tau_moment(m.masses(), p)))
        .collect::<Result<_>>()?;
    let (mean, se) = crate::verify::stats::mean_se(&values);
    Ok(MomentEstimate {
        estimate: mean,
        standard_error: (n_samples >= 2).then_some(se),
        n_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TStarEstimate {
    /// Estimated `t* = inf{t > 0 : Σ_k e^{-2tλ_k} < ∞}`.
    pub value: f64,
    /// Summability verdict at each grid point.
    pub grid: Vec<f64>,
    pub summable: Vec<bool>,
    /// Growth of λ_k against log k in the late window.
    pub log_slope: f64,
    /// Whether the rates grow faster than any multiple of log k.
    pub superlogarithmic: bool,
}

/// 64 log-spaced points in `[1e-3, 10]`.
pub fn default_t_grid() -> Vec<f64> {
    let (lo, hi, n) = (1e-3f64.ln(), 10f64.ln(), 64);
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn slope_against_log_index(rates: &[f64], from: usize, to: usize) -> f64 {
    // least squares of λ_k on ln k for 1-based k in [from, to]
    let pts: Vec<(f64, f64)> = (from..=to).map(|k| ((k as f64).ln(), rates[k - 1])).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Estimate the summability threshold `t*` of `Σ_k e^{-2tλ_k}` from a finite
/// prefix of rates.
///
/// The terms behave like `k^{-2tλ_k/ln k}`, so the series converges exactly
/// when the tail exponent `2t·λ_k/ln k` stays above one. The growth of λ
/// against `ln k` is fitted on an early and a late window of the prefix: if
/// the late slope clearly exceeds the early one the rates are
/// super-logarithmic and the series converges at every grid point (`t* = 0`);
/// otherwise the late slope `b` is extrapolated and each grid point is
/// summable iff `2tb > 1`, giving `t* = 1/(2b)`.
pub fn t_star(rates: &[f64], grid: Option<&[f64]>) -> Result<TStarEstimate> {
    if rates.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "t* needs at least 10 rates, got {}",
            rates.len()
        )));
    }
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidParameter("rates must be finite and non-negative".into()));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let grid = grid.map(<[f64]>::to_vec).unwrap_or_else(default_t_grid);

    let k = sorted.len();
    let late = slope_against_log_index(&sorted, k / 2, k);
    let early = slope_against_log_index(&sorted, (k / 4).max(2), k / 2);
    const ACCELERATION: f64 = 1.25;
    let superlogarithmic = late > 0.0 && (early <= 0.0 || late > ACCELERATION * early);

    let summable: Vec<bool> = grid
        .iter()
        .map(|t| superlogarithmic || 2.0 * t * late > 1.0)
        .collect();
    let value = if summable.iter().all(|s| *s) {
        0.0
    } else if late > 0.0 {
        1.0 / (2.0 * late)
    } else {
        f64::INFINITY
    };
    Ok(TStarEstimate {
        value,
        grid,
        summable,
        log_slope: late,
        superlogarithmic,
    })
}
