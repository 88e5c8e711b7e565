use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    CollisionMonitor, DriftVariant, InitialCondition, InteractionSpec, Perturbation, SystemConfig,
    Trajectory,
};
use crate::ambient::{wrap_signed, BaseSpace};
use crate::error::{Error, Result};
use crate::simplex::MassSequence;

/// Pairs closer than this abort the Euler step.
pub const HARD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub final_positions: Vec<f64>,
    /// First time two particles came within `collision_delta`, when tracked.
    pub collision_time: Option<f64>,
}

/// Initial configuration for one path, drawn from `rng` when the config asks
/// for the reference measure.
pub fn initial_positions<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Vec<f64> {
    match &config.initial {
        InitialCondition::Fixed { positions } => positions.clone(),
        InitialCondition::Reference => {
            let mut x = vec![0.0; config.n_particles() * config.space.dim()];
            config.space.sample_reference(rng, &mut x);
            x
        }
    }
}

/// Interaction drift of every particle, written into `out` (`n × d`).
///
/// With `e_ij` the unit vector at `x_i` pointing away from `x_j` along the
/// shortest geodesic, particle `i` receives `c_ij (−σ'(d_ij)) e_ij` where
/// `c_ij = (β/2) s_i s_j` for [`DriftVariant::MassWeighted`] and
/// `c_ij = β s_j` for [`DriftVariant::GirsanovDerived`]. Massless
/// particles neither feel nor exert a force.
pub fn interaction_drift(
    space: &BaseSpace,
    masses: &[f64],
    x: &[f64],
    inter: &InteractionSpec,
    variant: DriftVariant,
    time: f64,
    out: &mut [f64],
) -> Result<()> {
    let d = space.dim();
    let n = masses.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    if inter.beta == 0.0 {
        return Ok(());
    }
    let mut e = [0.0f64; 8];
    let mut e_big = vec![0.0; if d > 8 { d } else { 0 }];
    for i in 0..n {
        if masses[i] == 0.0 {
            continue;
        }
        for j in (i + 1)..n {
            if masses[j] == 0.0 {
                continue;
            }
            let disp: &mut [f64] = if d <= 8 { &mut e[..d] } else { &mut e_big[..] };
            space.displacement_into(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d], disp);
            let r = disp.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r < HARD_FLOOR {
                return Err(Error::StepRejected { time, i, j, distance: r });
            }
            let force = -inter.potential.dsigma(r) / r;
            let (ci, cj) = match variant {
                DriftVariant::MassWeighted => {
                    let c = 0.5 * inter.beta * masses[i] * masses[j];
                    (c, c)
                }
                DriftVariant::GirsanovDerived => (inter.beta * masses[j], inter.beta * masses[i]),
            };
            for c in 0..d {
                out[i * d + c] += ci * force * disp[c];
                out[j * d + c] -= cj * force * disp[c];
            }
        }
    }
    Ok(())
}

fn speed_factor(config: &SystemConfig) -> f64 {
    match config.perturbation {
        Some(Perturbation::SpeedScale { factor }) => factor,
        _ => 1.0,
    }
}

/// Simulate one path from `initial`, calling `observe(k, t, frame)` at
/// every recorded time. Nothing but the current frame is kept in memory.
pub fn run_path<R, F>(config: &SystemConfig, initial: Vec<f64>, rng: &mut R, mut observe: F) -> Result<PathOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64, &[f64]),
{
    config.validate()?;
    let space = config.space;
    let d = space.dim();
    let masses: &[f64] = config.masses.masses();
    let n = masses.len();
    if initial.len() != n * d {
        return Err(Error::DimensionMismatch { expected: n * d, got: initial.len() });
    }
    let n_steps = config.n_steps();
    let h = config.step_size();
    let factor = speed_factor(config);
    let speeds: Vec<f64> = (0..n).map(|i| factor * config.masses.speed(i)).collect();
    let drifted = config.has_drift();

    let mut x = initial;
    let mut drift = vec![0.0; if drifted { n * d } else { 0 }];
    let mut monitor = config
        .collision_delta
        .map(|delta| CollisionMonitor::new(space, delta, speeds.clone()));
    let mut prev = Vec::new();
    if let Some(m) = monitor.as_mut() {
        m.observe_initial(0.0, &x);
    }

    let mut k = 0;
    observe(k, 0.0, &x);
    for step in 1..=n_steps {
        let t0 = (step - 1) as f64 * h;
        let t1 = if step == n_steps { config.horizon } else { step as f64 * h };
        if monitor.as_ref().is_some_and(|m| m.hit().is_none()) {
            prev.clone_from(&x);
        }
        if drifted {
            match &config.interaction {
                Some(inter) => interaction_drift(&space, masses, &x, inter, config.drift_variant, t0, &mut drift)?,
                None => drift.iter_mut().for_each(|b| *b = 0.0),
            }
            if let Some(Perturbation::Attractor { point, strength }) = &config.perturbation {
                for i in 0..n {
                    for c in 0..d {
                        drift[i * d + c] -= strength * wrap_signed(x[i * d + c] - point[c]);
                    }
                }
            }
            for i in 0..n {
                if speeds[i] == 0.0 {
                    continue;
                }
                let sd = (2.0 * speeds[i] * h).sqrt();
                let xi = &mut x[i * d..(i + 1) * d];
                for c in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    let mut v = xi[c] + drift[i * d + c] * h;
                    v += sd * z;
                    xi[c] = v;
                }
                space.project(xi);
            }
        } else {
            for i in 0..n {
                space.step_in_place(&mut x[i * d..(i + 1) * d], h, speeds[i], rng);
            }
        }
        if let Some(m) = monitor.as_mut() {
            if m.hit().is_none() {
                m.observe_step(t0, &prev, t1, &x);
            }
        }
        if step % config.record_stride == 0 || step == n_steps {
            k += 1;
            observe(k, t1, &x);
        }
    }
    Ok(PathOutcome {
        final_positions: x,
        collision_time: monitor.and_then(|m| m.hit()),
    })
}

fn record<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<Trajectory> {
    config.validate()?;
    let initial = initial_positions(config, rng);
    let mut times = Vec::new();
    let mut positions = Vec::new();
    let out = run_path(config, initial, rng, |_, t, frame| {
        times.push(t);
        positions.extend_from_slice(frame);
    })?;
    Trajectory::new(config.space, config.masses.clone(), times, positions, out.collision_time)
}

/// Free massive system: particle `i` follows the exact base transition at
/// speed `1/s_i`.
pub fn simulate_free<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<Trajectory> {
    if config.has_drift() {
        return Err(Error::InvalidConfig("simulate_free needs a drift-free configuration".into()));
    }
    record(config, rng)
}

/// Interacting system by Euler–Maruyama with the configured drift variant.
pub fn simulate_interacting<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<Trajectory> {
    if config.interaction.is_none() {
        return Err(Error::InvalidConfig("simulate_interacting needs an interaction".into()));
    }
    record(config, rng)
}

/// Dispatch on the configuration.
pub fn simulate<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<Trajectory> {
    record(config, rng)
}

/// Simulate path `index` of `config` on its own counter-based stream.
pub fn simulate_path(config: &SystemConfig, index: u64) -> Result<Trajectory> {
    simulate(config, &mut crate::rng::stream(config.seed, index))
}

/// Replace the masses of `config`; used when masses are random per path.
pub fn with_masses(config: &SystemConfig, masses: MassSequence) -> SystemConfig {
    SystemConfig { masses, ..config.clone() }
}
