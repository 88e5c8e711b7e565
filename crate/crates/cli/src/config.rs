//! Run configuration: a TOML document whose every field has a default.
//!
//! The resolved configuration (defaults filled in, command-line overrides
//! applied) is echoed into each run manifest, and a manifest can be fed back
//! through `--config` to repeat the run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use massive::ambient::BaseSpace;
use massive::dynamics::{DriftVariant, InitialCondition, InteractionSpec, Perturbation, SystemConfig};
use massive::measures::Metric;
use massive::simplex::{MassLaw, MassLawSpec, MassSequence, Truncation};
use massive::verify::THREE_SIGMA;
use serde::{Deserialize, Serialize};

/// A problem with the configuration or the command line; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed; every random draw of a run derives from it.
    pub seed: u64,
    pub space: BaseSpace,
    pub masses: MassesConfig,
    pub system: DynamicsConfig,
    pub simulate: SimulateConfig,
    pub metrics: MetricsConfig,
    pub verify: VerifyConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            space: BaseSpace::torus(2),
            masses: MassesConfig::default(),
            system: DynamicsConfig::default(),
            simulate: SimulateConfig::default(),
            metrics: MetricsConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// Where particle masses come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassesConfig {
    Uniform { n: usize },
    Explicit { values: Vec<f64> },
    DirichletSymmetric { n: usize },
    PoissonDirichlet {
        beta: f64,
        #[serde(default)]
        truncation: Truncation,
    },
}

impl Default for MassesConfig {
    fn default() -> Self {
        MassesConfig::Uniform { n: 4 }
    }
}

impl MassesConfig {
    /// The sampling law, or `None` for deterministic sequences.
    pub fn law(&self, seed: u64) -> Option<MassLawSpec> {
        let law = match *self {
            MassesConfig::DirichletSymmetric { n } => MassLaw::DirichletSymmetric { n },
            MassesConfig::PoissonDirichlet { beta, .. } => MassLaw::PoissonDirichlet { beta },
            _ => return None,
        };
        let truncation = match *self {
            MassesConfig::PoissonDirichlet { truncation, .. } => truncation,
            _ => Truncation::default(),
        };
        Some(MassLawSpec::new(law).with_truncation(truncation).with_seed(seed))
    }

    /// Draw `index` of the sequence; deterministic laws ignore the index.
    pub fn draw(&self, seed: u64, index: u64) -> massive::Result<MassSequence> {
        match self {
            MassesConfig::Uniform { n } => MassSequence::uniform(*n),
            MassesConfig::Explicit { values } => MassSequence::explicit(values.clone(), 0.0),
            _ => massive::simplex::sample_masses_seeded(&self.law(seed).expect("random law"), index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub horizon: f64,
    pub record_stride: usize,
    pub interaction: Option<InteractionSpec>,
    pub drift_variant: DriftVariant,
    pub strict_integrability: bool,
    pub initial: InitialCondition,
    pub perturbation: Option<Perturbation>,
    pub collision_delta: Option<f64>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 0.1,
            record_stride: 1,
            interaction: None,
            drift_variant: DriftVariant::default(),
            strict_integrability: false,
            initial: InitialCondition::Reference,
            perturbation: None,
            collision_delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Number of independent trajectories to write.
    pub n_paths: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { n_paths: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MetricName {
    Prokhorov,
    WeakAtomic,
    BoundedLipschitz,
    W1,
    W2Exact,
    W2Sinkhorn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub metrics: Vec<MetricName>,
    pub sinkhorn_epsilon: f64,
    /// Use every `frame_stride`-th frame when the input is a trajectory.
    pub frame_stride: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            metrics: vec![MetricName::Prokhorov, MetricName::W2Exact],
            sinkhorn_epsilon: 1e-3,
            frame_stride: 1,
        }
    }
}

impl MetricsConfig {
    pub fn resolve(&self, name: MetricName) -> Metric {
        match name {
            MetricName::Prokhorov => Metric::Prokhorov,
            MetricName::WeakAtomic => Metric::WeakAtomic,
            MetricName::BoundedLipschitz => Metric::BoundedLipschitz,
            MetricName::W1 => Metric::W1,
            MetricName::W2Exact => Metric::W2Exact,
            MetricName::W2Sinkhorn => Metric::W2Sinkhorn { epsilon: self.sinkhorn_epsilon },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Martingale, quadratic variation, stationarity and mass invariance
    /// of the free system.
    FreeCore,
    /// Stationarity of the interacting system against its Gibbs law.
    Girsanov,
    /// Collision counts at the configured distance.
    Collisions,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::FreeCore => "free-core",
            Suite::Girsanov => "girsanov",
            Suite::Collisions => "collisions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub n_paths: usize,
    /// Stationarity checkpoints; empty means the horizon.
    pub times: Vec<f64>,
    pub significance: f64,
    /// JSON array of cylinder functions; built-in observables when absent.
    pub observables_file: Option<PathBuf>,
    /// Paths simulated in full for the mass-invariance check.
    pub mass_paths: usize,
    pub burn_in_fraction: f64,
    pub is_samples: usize,
    pub pi_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let g = massive::verify::GirsanovOptions::default();
        Self {
            suite: Suite::FreeCore,
            n_paths: 2000,
            times: Vec::new(),
            significance: THREE_SIGMA,
            observables_file: None,
            mass_paths: 20,
            burn_in_fraction: g.burn_in_fraction,
            is_samples: g.is_samples,
            pi_samples: g.pi_samples,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| UsageError(format!("invalid configuration: {e}")).into())
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serialising configuration")
    }

    /// Load a TOML configuration, or the configuration recorded in a run
    /// manifest when the file is JSON.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
            let Some(c) = v.get("config") else {
                bail!(UsageError(format!("{} is not a run manifest", path.display())));
            };
            return serde_json::from_value(c.clone())
                .map_err(|e| UsageError(format!("{}: invalid configuration: {e}", path.display())).into());
        }
        Self::from_toml(&text)
    }

    /// Seed for a labelled part of a run.
    pub fn seed_for(&self, label: &str) -> u64 {
        massive::rng::derive_seed(self.seed, label)
    }

    /// The dynamics configuration with `masses`.
    pub fn system(&self, masses: MassSequence) -> SystemConfig {
        let s = &self.system;
        SystemConfig {
            space: self.space,
            masses,
            interaction: s.interaction,
            dt: s.dt,
            horizon: s.horizon,
            record_stride: s.record_stride,
            seed: self.seed_for("dynamics"),
            drift_variant: s.drift_variant,
            strict_integrability: s.strict_integrability,
            initial: s.initial.clone(),
            perturbation: s.perturbation.clone(),
            collision_delta: s.collision_delta,
        }
    }

    /// Checks that do not need any sampling.
    pub fn validate(&self) -> anyhow::Result<()> {
        let masses = self.masses.draw(self.seed_for("masses"), 0).map_err(usage)?;
        self.system(masses).validate().map_err(usage)?;
        if let Some(law) = self.masses.law(0) {
            law.validate().map_err(usage)?;
        }
        if self.simulate.n_paths == 0 {
            bail!(UsageError("simulate.n_paths must be >= 1".into()));
        }
        if self.metrics.frame_stride == 0 {
            bail!(UsageError("metrics.frame_stride must be >= 1".into()));
        }
        if self.metrics.metrics.contains(&MetricName::W2Sinkhorn) && !(self.metrics.sinkhorn_epsilon > 0.0) {
            bail!(UsageError("metrics.sinkhorn_epsilon must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.verify.burn_in_fraction) {
            bail!(UsageError("verify.burn_in_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Parameter errors from the library are the caller's fault.
pub fn usage(e: massive::Error) -> anyhow::Error {
    match e {
        massive::Error::InvalidParameter(_)
        | massive::Error::InvalidConfig(_)
        | massive::Error::DimensionMismatch { .. }
        | massive::Error::SpaceMismatch(_)
        | massive::Error::Validity { .. }
        | massive::Error::NotApplicable(_) => UsageError(e.to_string()).into(),
        other => other.into(),
    }
}
