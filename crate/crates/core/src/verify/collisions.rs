//! Collision dichotomy: particles on the circle meet immediately, in
//! dimension two and higher they never come close at any practical
//! resolution.

use super::stats::mean_se;
use super::{EnsembleSpec, TestReport};
use crate::dynamics::run_path;
use crate::error::{Error, Result};

/// Required collision fraction on the circle.
pub const D1_MIN_FRACTION: f64 = 0.99;

/// Ensemble run with the collision monitor switched on.
pub type CollisionSpec = EnsembleSpec;

/// Fraction of paths with a pair closer than `collision_delta` before the
/// horizon.
///
/// In dimension one the test passes iff the fraction is at least 99%, in
/// higher dimension iff no path records an event.
pub fn collision_experiment(spec: &CollisionSpec) -> Result<TestReport> {
    spec.validate()?;
    let delta = spec
        .system
        .collision_delta
        .ok_or_else(|| Error::InvalidConfig("collision_experiment needs collision_delta".into()))?;
    let d = spec.system.space.dim();
    let horizon = spec.system.horizon;
    let times: Vec<f64> = spec.map_paths(|_, mut config, x0, mut r| {
        config.record_stride = config.n_steps();
        let out = run_path(&config, x0, &mut r, |_, _, _| {})?;
        Ok(out.collision_time.unwrap_or(f64::INFINITY))
    })?;
    let hits: Vec<f64> = times.iter().map(|t| if *t < horizon { 1.0 } else { 0.0 }).collect();
    let (fraction, se) = mean_se(&hits);
    let events = hits.iter().filter(|h| **h > 0.0).count();
    let (pass, target) = if d == 1 { (fraction >= D1_MIN_FRACTION, D1_MIN_FRACTION) } else { (events == 0, 0.0) };
    let finite: Vec<f64> = times.iter().cloned().filter(|t| t.is_finite()).collect();
    let median = if finite.is_empty() {
        f64::INFINITY
    } else {
        let mut s = finite.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    };
    Ok(TestReport {
        name: format!("collisions_d{d}"),
        statistic: fraction,
        standard_error: se,
        z_score: if se > 0.0 { (fraction - target) / se } else { 0.0 },
        threshold: target,
        pass,
        diagnostics: Default::default(),
    }
    .with("dim", d)
    .with("delta", delta)
    .with("dt", spec.system.step_size())
    .with("events", events)
    .with("n_paths", spec.n_paths)
    .with("median_collision_time", if median.is_finite() { Some(median) } else { None }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::BaseSpace;
    use crate::dynamics::SystemConfig;
    use crate::simplex::MassSequence;
    use crate::verify::InitialLaw;

    #[test]
    fn single_particle_never_collides() {
        let sys = SystemConfig::free(BaseSpace::torus(1), MassSequence::uniform(1).unwrap(), 1e-3, 0.1)
            .with_collision_delta(1e-2);
        let spec = EnsembleSpec::new(sys, 100, InitialLaw::ProductNu { masses: None });
        let r = collision_experiment(&spec).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.diagnostics["events"], serde_json::json!(0));
    }

    #[test]
    fn close_pair_on_circle_collides() {
        let sys = SystemConfig::free(BaseSpace::torus(1), MassSequence::explicit(vec![0.5, 0.5], 0.0).unwrap(), 1e-3, 1.0)
            .with_collision_delta(1e-3);
        let spec = EnsembleSpec::new(sys, 200, InitialLaw::Fixed { positions: vec![0.0, 0.01] });
        let r = collision_experiment(&spec).unwrap();
        assert!(r.statistic > 0.95, "{r:?}");
    }

    #[test]
    fn needs_delta() {
        let sys = SystemConfig::free(BaseSpace::torus(1), MassSequence::uniform(2).unwrap(), 1e-3, 0.1);
        let spec = EnsembleSpec::new(sys, 100, InitialLaw::ProductNu { masses: None });
        assert!(collision_experiment(&spec).is_err());
    }
}
