use serde::{Deserialize, Serialize};

use super::PairPotential;
use crate::ambient::BaseSpace;
use crate::error::{Error, Result};
use crate::simplex::MassSequence;

/// Which interaction drift the Euler scheme integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftVariant {
    /// `b_i = (β/2) Σ_j s_i s_j (−σ'(d_ij)) e_ij`.
    #[default]
    MassWeighted,
    /// `b_i = β Σ_j s_j (−σ'(d_ij)) e_ij`, i.e. `−(β/s_i) ∇_{x_i} W_σ`.
    GirsanovDerived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub potential: PairPotential,
    pub beta: f64,
}

/// Deliberate faults, used as negative controls for the statistical tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// Every particle runs at `factor / s_i` instead of `1 / s_i`.
    SpeedScale { factor: f64 },
    /// Extra drift `−strength · (x − point)` toward `point`.
    Attractor { point: Vec<f64>, strength: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Positions i.i.d. from the reference measure of the space.
    #[default]
    Reference,
    /// Flattened `n × d` positions.
    Fixed { positions: Vec<f64> },
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub space: BaseSpace,
    pub masses: MassSequence,
    #[serde(default)]
    pub interaction: Option<InteractionSpec>,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub drift_variant: DriftVariant,
    /// Reject Riesz interactions with `p ≥ d − 1` on `torus(d)`.
    #[serde(default)]
    pub strict_integrability: bool,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    /// When set, the integrator tracks the first time two particles come
    /// within this distance, on the full step grid.
    #[serde(default)]
    pub collision_delta: Option<f64>,
}

impl SystemConfig {
    pub fn free(space: BaseSpace, masses: MassSequence, dt: f64, horizon: f64) -> Self {
        Self {
            space,
            masses,
            interaction: None,
            dt,
            horizon,
            record_stride: 1,
            seed: 0,
            drift_variant: DriftVariant::default(),
            strict_integrability: false,
            initial: InitialCondition::Reference,
            perturbation: None,
            collision_delta: None,
        }
    }

    pub fn with_interaction(mut self, potential: PairPotential, beta: f64) -> Self {
        self.interaction = Some(InteractionSpec { potential, beta });
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_drift(mut self, v: DriftVariant) -> Self {
        self.drift_variant = v;
        self
    }

    pub fn with_initial(mut self, init: InitialCondition) -> Self {
        self.initial = init;
        self
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Self {
        self.perturbation = Some(p);
        self
    }

    pub fn with_collision_delta(mut self, delta: f64) -> Self {
        self.collision_delta = Some(delta);
        self
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    /// Number of Euler/transition steps; the horizon is split evenly.
    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    /// Step actually used: `horizon / n_steps`.
    pub fn step_size(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    /// Whether the path needs the Euler scheme (drift present).
    pub fn has_drift(&self) -> bool {
        self.interaction.is_some() || matches!(self.perturbation, Some(Perturbation::Attractor { .. }))
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if self.dt > self.horizon {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds horizon {}",
                self.dt, self.horizon
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be >= 1".into()));
        }
        if self.masses.is_empty() {
            return Err(Error::InvalidConfig("at least one particle is needed".into()));
        }
        if let InitialCondition::Fixed { positions } = &self.initial {
            let want = self.n_particles() * self.space.dim();
            if positions.len() != want {
                return Err(Error::DimensionMismatch { expected: want, got: positions.len() });
            }
            if positions.chunks(self.space.dim()).any(|x| !self.space.contains(x)) {
                return Err(Error::InvalidConfig("initial position outside the space".into()));
            }
        }
        if let Some(delta) = self.collision_delta {
            if !(delta > 0.0) {
                return Err(Error::InvalidConfig("collision delta must be > 0".into()));
            }
        }
        if self.has_drift() && !matches!(self.space, BaseSpace::Torus { .. }) {
            return Err(Error::InvalidConfig(
                "drifted dynamics are only supported on the torus".into(),
            ));
        }
        match &self.perturbation {
            Some(Perturbation::SpeedScale { factor }) if !(*factor >= 0.0) => {
                return Err(Error::InvalidConfig("speed factor must be >= 0".into()))
            }
            Some(Perturbation::Attractor { point, .. }) if point.len() != self.space.dim() => {
                return Err(Error::DimensionMismatch { expected: self.space.dim(), got: point.len() })
            }
            _ => {}
        }
        if let Some(inter) = &self.interaction {
            inter.potential.validate()?;
            if !(inter.beta >= 0.0) {
                return Err(Error::InvalidConfig(format!("beta must be >= 0, got {}", inter.beta)));
            }
            if self.strict_integrability {
                if let (PairPotential::Riesz { p }, BaseSpace::Torus { d }) = (inter.potential, self.space) {
                    if p >= d as f64 - 1.0 {
                        return Err(Error::InvalidConfig(format!(
                            "Riesz exponent {p} is not integrable on torus({d}); need p < {}",
                            d - 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
