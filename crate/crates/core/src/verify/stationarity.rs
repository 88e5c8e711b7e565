//! Invariance tests: stationarity of `Q_π`, conservation of masses and
//! stationarity of the Girsanov-reweighted law.

use serde::{Deserialize, Serialize};

use super::stats::{mean_se, two_sample_z, z_score};
use super::{check_validity, EnsembleSpec, InitialLaw, TestReport};
use crate::cylinder::{interaction_energy, Atoms};
use crate::dynamics::{run_path, DriftVariant, InteractionSpec, Trajectory};
use crate::error::{Error, Result};
use crate::measures::{em, AtomicMeasure};
use crate::rng;
use crate::simplex::sample_masses;

fn worst(zs: &[(String, f64, f64, f64)]) -> (String, f64, f64, f64) {
    zs.iter()
        .max_by(|a, b| a.3.abs().partial_cmp(&b.3.abs()).unwrap_or(std::cmp::Ordering::Less))
        .cloned()
        .unwrap_or_else(|| ("none".into(), 0.0, 0.0, 0.0))
}

fn checkpoint_steps(spec: &EnsembleSpec) -> Vec<usize> {
    let h = spec.system.step_size();
    let times = if spec.times.is_empty() { vec![spec.system.horizon] } else { spec.times.clone() };
    times.iter().map(|t| ((t / h).round() as usize).min(spec.system.n_steps())).collect()
}

/// Paired comparison of `E u(μ_t)` with `E u(μ_0)` for every observable and
/// checkpoint, started from `Q_π`.
pub fn stationarity_test(spec: &EnsembleSpec) -> Result<TestReport> {
    if !matches!(spec.initial_law, InitialLaw::ProductNu { .. }) {
        return Err(Error::NotApplicable("stationarity needs the product initial law".into()));
    }
    spec.validate()?;
    let steps = checkpoint_steps(spec);
    let us = &spec.observables;
    let d = spec.system.space.dim();
    // per path: [observable][checkpoint] differences u(μ_t) − u(μ_0)
    let diffs: Vec<Vec<Vec<f64>>> = spec.map_paths(|_, mut config, x0, mut r| {
        config.record_stride = 1;
        for u in us {
            check_validity(u, &config.masses)?;
        }
        let masses = config.masses.masses().to_vec();
        let mut u0 = vec![0.0; us.len()];
        let mut out = vec![vec![0.0; steps.len()]; us.len()];
        run_path(&config, x0, &mut r, |k, _, frame| {
            let atoms = Atoms::new(&masses, frame, d);
            let at: Vec<usize> = (0..steps.len()).filter(|c| steps[*c] == k).collect();
            if k == 0 || !at.is_empty() {
                for (j, u) in us.iter().enumerate() {
                    let v = u.eval_atoms(atoms);
                    if k == 0 {
                        u0[j] = v;
                    }
                    for &c in &at {
                        out[j][c] = v - u0[j];
                    }
                }
            }
        })?;
        Ok(out)
    })?;
    let mut zs = Vec::new();
    for j in 0..us.len() {
        for (c, step) in steps.iter().enumerate() {
            let xs: Vec<f64> = diffs.iter().map(|p| p[j][c]).collect();
            let (m, s) = mean_se(&xs);
            let t = *step as f64 * spec.system.step_size();
            zs.push((format!("u{j} at t={t}"), m, s, z_score(m, s)));
        }
    }
    let w = worst(&zs);
    let table: Vec<(String, f64)> = zs.iter().map(|z| (z.0.clone(), z.3)).collect();
    Ok(TestReport::two_sided("stationarity", w.1, w.2, w.3, spec.threshold(zs.len()))
        .with("worst_statistic", w.0)
        .with("z_scores", table)
        .with("n_paths", spec.n_paths))
}

/// Measure path `t ↦ μ_t` of a recorded trajectory.
pub fn measure_path(traj: &Trajectory) -> Result<Vec<AtomicMeasure>> {
    (0..traj.n_times())
        .map(|k| em(traj.masses(), *traj.space(), traj.frame(k)))
        .collect()
}

/// Exact check that every measure of every path carries the same sorted
/// mass vector as its first measure.
pub fn mass_invariance_test(paths: &[Vec<AtomicMeasure>]) -> TestReport {
    let sorted = |mu: &AtomicMeasure| {
        let mut m = mu.masses().to_vec();
        m.sort_by(|a, b| b.partial_cmp(a).unwrap());
        m
    };
    let mut bad_paths = Vec::new();
    for (p, path) in paths.iter().enumerate() {
        if let Some(first) = path.first() {
            let reference = sorted(first);
            let same = path.iter().all(|mu| {
                let m = sorted(mu);
                m.len() == reference.len() && m.iter().zip(&reference).all(|(a, b)| a.to_bits() == b.to_bits())
            });
            if !same {
                bad_paths.push(p);
            }
        }
    }
    let n_bad = bad_paths.len() as f64;
    TestReport {
        name: "mass_invariance".into(),
        statistic: n_bad,
        standard_error: 0.0,
        z_score: n_bad,
        threshold: 0.5,
        pass: bad_paths.is_empty(),
        diagnostics: Default::default(),
    }
    .with("n_paths", paths.len())
    .with("violating_paths", bad_paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirsanovOptions {
    /// Fraction of the horizon discarded before time-averaging.
    pub burn_in_fraction: f64,
    /// Reference-measure position samples per mass vector.
    pub is_samples: usize,
    /// Independent mass draws for the pure `π`-expectation.
    pub pi_samples: usize,
}

impl Default for GirsanovOptions {
    fn default() -> Self {
        Self { burn_in_fraction: 0.5, is_samples: 256, pi_samples: 20_000 }
    }
}

/// Stationarity of the Girsanov dynamics.
///
/// The interacting dynamics (drift `−(β/s_i) ∇_i W_σ`) conserves masses and,
/// given masses `s`, is reversible for `exp(−βW_σ) ν^{⊗N}`. For every
/// observable the late-time average along each path is compared, path by
/// path, with the self-normalised importance-sampling estimate
/// `E_ν[u e^{−βW}|s] / E_ν[e^{−βW}|s]` computed for the same masses.
/// Observables that depend on masses only are additionally compared with an
/// independent estimate of their `π`-expectation.
pub fn girsanov_stationarity_test(
    interaction: &InteractionSpec,
    spec: &EnsembleSpec,
    opts: GirsanovOptions,
) -> Result<TestReport> {
    if !matches!(spec.initial_law, InitialLaw::ProductNu { .. }) {
        return Err(Error::NotApplicable("Girsanov stationarity needs the product initial law".into()));
    }
    if !(opts.burn_in_fraction >= 0.0 && opts.burn_in_fraction < 1.0) || opts.is_samples == 0 {
        return Err(Error::InvalidConfig("burn-in must lie in [0, 1) and is_samples be > 0".into()));
    }
    let mut spec = spec.clone();
    spec.system.interaction = Some(*interaction);
    spec.system.drift_variant = DriftVariant::GirsanovDerived;
    spec.validate()?;
    let us = &spec.observables;
    let space = spec.system.space;
    let d = space.dim();
    let beta = interaction.beta;
    let burn = (opts.burn_in_fraction * spec.system.n_steps() as f64).ceil() as usize;
    let is_seed = rng::derive_seed(spec.system.seed, "girsanov-importance");

    struct PathOut {
        dynamics: Vec<f64>,
        reweighted: Vec<f64>,
        rejected: usize,
    }
    let per_path: Vec<PathOut> = spec.map_paths(|p, config, x0, mut r| {
        for u in us {
            check_validity(u, &config.masses)?;
        }
        let masses = config.masses.masses().to_vec();
        let stride = config.record_stride;
        let mut sums = vec![0.0; us.len()];
        let mut count = 0usize;
        run_path(&config, x0, &mut r, |k, _, frame| {
            if k * stride >= burn {
                let atoms = Atoms::new(&masses, frame, d);
                for (j, u) in us.iter().enumerate() {
                    sums[j] += u.eval_atoms(atoms);
                }
                count += 1;
            }
        })?;
        let dynamics = sums.iter().map(|s| s / count as f64).collect();

        let mut ir = rng::stream(is_seed, p);
        let mut num = vec![0.0; us.len()];
        let mut den = 0.0;
        let mut rejected = 0;
        let mut x = vec![0.0; masses.len() * d];
        let mut log_w = Vec::with_capacity(opts.is_samples);
        let mut values = Vec::with_capacity(opts.is_samples);
        for _ in 0..opts.is_samples {
            space.sample_reference(&mut ir, &mut x);
            let mu = AtomicMeasure::unnormalized(space, x.clone(), masses.clone())?;
            match interaction_energy(&interaction.potential, &mu) {
                Ok(w) => {
                    log_w.push(-beta * w);
                    values.push(us.iter().map(|u| u.eval(&mu)).collect::<Vec<f64>>());
                }
                Err(Error::Singular { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
        let shift = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (lw, vals) in log_w.iter().zip(&values) {
            let w = (lw - shift).exp();
            den += w;
            for j in 0..us.len() {
                num[j] += w * vals[j];
            }
        }
        let reweighted = num.iter().map(|n| n / den).collect();
        Ok(PathOut { dynamics, reweighted, rejected })
    })?;

    let mut zs = Vec::new();
    let mut mass_only = Vec::new();
    let pi_seed = rng::derive_seed(spec.system.seed, "girsanov-pi");
    for (j, u) in us.iter().enumerate() {
        let diffs: Vec<f64> = per_path.iter().map(|p| p.dynamics[j] - p.reweighted[j]).collect();
        let (m, s) = mean_se(&diffs);
        zs.push((format!("u{j}: dynamics - reweighted"), m, s, z_score(m, s)));
        if u.pairs.iter().all(|pr| pr.f.is_constant()) {
            let law = match &spec.initial_law {
                InitialLaw::ProductNu { masses: Some(law) } => Some(law.clone()),
                _ => None,
            };
            let pi_values: Vec<f64> = match law {
                Some(law) => (0..opts.pi_samples as u64)
                    .map(|k| {
                        let s = sample_masses(&law, &mut rng::stream(pi_seed, k))?;
                        let x = vec![0.0; s.len() * d];
                        Ok(u.eval_atoms(Atoms::new(s.masses(), &x, d)))
                    })
                    .collect::<Result<_>>()?,
                None => vec![u.eval_atoms(Atoms::new(spec.system.masses.masses(), &vec![0.0; spec.system.n_particles() * d], d)); 2],
            };
            let dyn_values: Vec<f64> = per_path.iter().map(|p| p.dynamics[j]).collect();
            let (diff, se, z) = two_sample_z(&dyn_values, &pi_values);
            let z = if diff == 0.0 && se == 0.0 { 0.0 } else { z };
            zs.push((format!("u{j}: dynamics - pi expectation"), diff, se, z));
            mass_only.push(j);
        }
    }
    let w = worst(&zs);
    let rejected: usize = per_path.iter().map(|p| p.rejected).sum();
    let table: Vec<(String, f64)> = zs.iter().map(|z| (z.0.clone(), z.3)).collect();
    Ok(TestReport::two_sided("girsanov_stationarity", w.1, w.2, w.3, spec.threshold(zs.len()))
        .with("worst_statistic", w.0)
        .with("z_scores", table)
        .with("mass_only_observables", mass_only)
        .with("rejected_samples", rejected)
        .with("beta", beta)
        .with("n_paths", spec.n_paths))
}
