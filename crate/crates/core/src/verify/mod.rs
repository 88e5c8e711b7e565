//! Ensemble Monte-Carlo tests for simulated measure-valued paths.
//!
//! Every test simulates `n_paths` independent paths, path `p` drawing all
//! of its randomness (masses, initial positions, increments) from stream
//! `p` of the system seed. Per-path records are collected in path order, so
//! a report depends on the seed only, not on the thread count.
//!
//! Passing means `|z| < threshold`, with the threshold the two-sided normal
//! quantile for the family-wise level `significance` split evenly over the
//! statistics a test computes (Bonferroni).

mod collisions;
mod martingale;
mod stationarity;
pub mod stats;
mod varadhan;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cylinder::CylinderFunction;
use crate::dynamics::{initial_positions, InitialCondition, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::simplex::{sample_masses, MassLawSpec, MassSequence};

pub use collisions::{collision_experiment, CollisionSpec};
pub use martingale::{
    martingale_suite, martingale_test, qv_test, rigidity_test, shadow_mp_test, MartingaleOutcome,
};
pub use stationarity::{
    girsanov_stationarity_test, mass_invariance_test, measure_path, stationarity_test, GirsanovOptions,
};
pub use varadhan::{varadhan_check, VaradhanSpec};

/// Two-sided level of a 3σ normal test.
pub const THREE_SIGMA: f64 = 0.002_699_796_063_260_2;

/// Initial law of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialLaw {
    /// Positions i.i.d. from the reference measure; masses drawn per path
    /// from `masses`, or the system's own masses when absent.
    ProductNu {
        #[serde(default)]
        masses: Option<MassLawSpec>,
    },
    Fixed { positions: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub system: SystemConfig,
    pub n_paths: usize,
    #[serde(default)]
    pub observables: Vec<CylinderFunction>,
    /// Checkpoints in `(0, horizon]`.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default = "default_significance")]
    pub significance: f64,
    pub initial_law: InitialLaw,
}

fn default_significance() -> f64 {
    THREE_SIGMA
}

impl EnsembleSpec {
    pub fn new(system: SystemConfig, n_paths: usize, initial_law: InitialLaw) -> Self {
        Self {
            system,
            n_paths,
            observables: Vec::new(),
            times: Vec::new(),
            significance: THREE_SIGMA,
            initial_law,
        }
    }

    pub fn with_observables(mut self, observables: Vec<CylinderFunction>) -> Self {
        self.observables = observables;
        self
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Self {
        self.times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.n_paths < 100 {
            return Err(Error::InvalidConfig(format!("n_paths must be >= 100, got {}", self.n_paths)));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::InvalidConfig("significance must lie in (0, 1)".into()));
        }
        if let Some(t) = self.times.iter().find(|t| !(**t > 0.0 && **t <= self.system.horizon + 1e-12)) {
            return Err(Error::InvalidConfig(format!("checkpoint {t} outside (0, horizon]")));
        }
        if let InitialLaw::Fixed { positions } = &self.initial_law {
            let want = self.system.n_particles() * self.system.space.dim();
            if positions.len() != want {
                return Err(Error::DimensionMismatch { expected: want, got: positions.len() });
            }
        }
        for u in &self.observables {
            u.check_space(&self.system.space)?;
        }
        Ok(())
    }

    /// Two-sided critical value for `m` simultaneous statistics.
    pub fn threshold(&self, m: usize) -> f64 {
        stats::normal_quantile_two_sided(self.significance / m.max(1) as f64)
    }

    /// Configuration, initial positions and random stream of path `p`.
    pub fn path(&self, p: u64) -> Result<(SystemConfig, Vec<f64>, Stream)> {
        let mut r = rng::stream(self.system.seed, p);
        let mut config = self.system.clone();
        if let InitialLaw::ProductNu { masses: Some(law) } = &self.initial_law {
            config.masses = sample_masses(law, &mut r)?;
        }
        config.initial = match &self.initial_law {
            InitialLaw::ProductNu { .. } => InitialCondition::Reference,
            InitialLaw::Fixed { positions } => InitialCondition::Fixed { positions: positions.clone() },
        };
        let x0 = initial_positions(&config, &mut r);
        Ok((config, x0, r))
    }

    /// Map every path to a record, in parallel, keeping path order.
    pub fn map_paths<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, SystemConfig, Vec<f64>, Stream) -> Result<T> + Sync,
    {
        (0..self.n_paths as u64)
            .into_par_iter()
            .map(|p| {
                let (config, x0, r) = self.path(p)?;
                f(p, config, x0, r)
            })
            .collect()
    }
}

/// Observables must ignore every atom the truncation may have dropped.
pub(crate) fn check_validity(u: &CylinderFunction, masses: &MassSequence) -> Result<()> {
    let eps = u.threshold();
    if u.k() > 0 && !(eps > masses.tail_mass()) {
        return Err(Error::Validity { eps, tail: masses.tail_mass() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

impl TestReport {
    /// Two-sided report: passes iff `|z| < threshold`.
    pub fn two_sided(name: impl Into<String>, statistic: f64, standard_error: f64, z: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            standard_error,
            z_score: z,
            threshold,
            pass: z.abs() < threshold,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.diagnostics
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(reports: &[TestReport], mut w: W) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_jsonl(text: &str) -> Result<Vec<TestReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Fixed-width table with one row per report.
pub fn summary_table(reports: &[TestReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!(
        "{:<width$}  {:>12}  {:>10}  {:>9}  {:>9}  {}\n",
        "test", "statistic", "std.err", "z", "threshold", "result"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<width$}  {:>12.5e}  {:>10.3e}  {:>9.3}  {:>9.3}  {}\n",
            r.name,
            r.statistic,
            r.standard_error,
            r.z_score,
            r.threshold,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}
