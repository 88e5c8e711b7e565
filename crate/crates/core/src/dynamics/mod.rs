//! Path simulation of free and interacting massive systems.
//!
//! Free systems are sampled exactly at grid times. Interacting systems use
//! Euler–Maruyama with a pair-potential drift. Paths are independent: path
//! `k` of master seed `s` always draws from stream `k` of `s`, so ensembles
//! are bit-reproducible under any thread count.

mod collision;
mod config;
mod integrator;
mod potential;
mod trajectory;

pub use collision::{circle_bridge_no_hit, first_collision_time, min_pair_distance_series, CollisionMonitor};
pub use config::{DriftVariant, InitialCondition, InteractionSpec, Perturbation, SystemConfig};
pub use integrator::{
    initial_positions, interaction_drift, run_path, simulate, simulate_free, simulate_interacting,
    simulate_path, with_masses, PathOutcome, HARD_FLOOR,
};
pub use potential::PairPotential;
pub use trajectory::{Trajectory, TrajectorySidecar};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{heat_kernel, BaseSpace};
    use crate::error::Error;
    use crate::rng;
    use crate::simplex::MassSequence;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn torus_cfg(d: usize, masses: MassSequence, dt: f64, t: f64) -> SystemConfig {
        SystemConfig::free(BaseSpace::torus(d), masses, dt, t)
    }

    #[test]
    fn zero_beta_matches_free_bitwise() {
        let m = MassSequence::explicit(vec![0.5, 0.3, 0.2], 0.0).unwrap();
        let free = torus_cfg(2, m, 1e-3, 0.05);
        let inter = free.clone().with_interaction(PairPotential::Riesz { p: 0.5 }, 0.0);
        for k in 0..5 {
            let a = simulate_free(&free, &mut rng::stream(3, k)).unwrap();
            let b = simulate_interacting(&inter, &mut rng::stream(3, k)).unwrap();
            assert_eq!(a.positions(), b.positions());
        }
    }

    #[test]
    fn frozen_particle_stays_put() {
        let m = MassSequence::explicit(vec![0.6, 0.4, 0.0], 0.0).unwrap();
        let cfg = torus_cfg(2, m, 1e-2, 0.5);
        let tr = simulate_free(&cfg, &mut rng::stream(1, 0)).unwrap();
        let p0 = tr.position(0, 2).to_vec();
        for k in 0..tr.n_times() {
            assert_eq!(tr.position(k, 2), &p0[..]);
        }
        assert_ne!(tr.position(0, 0), tr.position(tr.n_times() - 1, 0));
    }

    #[test]
    fn free_marginal_matches_heat_kernel() {
        // 64-bin chi-square against the heat-kernel density, start at 0.5
        let m = MassSequence::explicit(vec![0.5, 0.5], 0.0).unwrap();
        let t = 0.01;
        let cfg = torus_cfg(1, m, t, t)
            .with_initial(InitialCondition::Fixed { positions: vec![0.5, 0.5] });
        let n_paths = 100_000;
        let bins = 64;
        let mut counts = vec![0usize; bins];
        for k in 0..n_paths as u64 {
            let mut r = rng::stream(17, k);
            let out = run_path(&cfg, vec![0.5, 0.5], &mut r, |_, _, _| {}).unwrap();
            let x = out.final_positions[0];
            counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let space = BaseSpace::torus(1);
        let sub = 32;
        let probs: Vec<f64> = (0..bins)
            .map(|b| {
                (0..sub)
                    .map(|j| {
                        let y = (b as f64 + (j as f64 + 0.5) / sub as f64) / bins as f64;
                        heat_kernel(&space, &[0.5], &[y], t / 0.5).unwrap()
                    })
                    .sum::<f64>()
                    / (sub * bins) as f64
            })
            .collect();
        let chi2: f64 = counts
            .iter()
            .zip(&probs)
            .filter(|(_, p)| **p * n_paths as f64 > 5.0)
            .map(|(c, p)| {
                let e = p * n_paths as f64;
                (*c as f64 - e).powi(2) / e
            })
            .sum();
        let dof = probs.iter().filter(|p| **p * n_paths as f64 > 5.0).count() - 1;
        let pval = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi2);
        assert!(pval > 0.01, "chi2 = {chi2}, dof = {dof}");
    }

    #[test]
    fn equal_masses_are_exchangeable() {
        let m = MassSequence::explicit(vec![0.5, 0.5], 0.0).unwrap();
        let cfg = torus_cfg(1, m, 0.01, 0.1)
            .with_initial(InitialCondition::Fixed { positions: vec![0.5, 0.5] });
        let n = 20_000;
        let diffs: Vec<f64> = (0..n as u64)
            .map(|k| {
                let out = run_path(&cfg, vec![0.5, 0.5], &mut rng::stream(5, k), |_, _, _| {}).unwrap();
                let f = |x: f64| (2.0 * std::f64::consts::PI * x).cos();
                f(out.final_positions[0]) - f(out.final_positions[1])
            })
            .collect();
        let (mean, se) = crate::verify::stats::mean_se(&diffs);
        assert!(mean.abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn drift_scales_with_inverse_distance_power() {
        let space = BaseSpace::torus(2);
        let masses = [0.5, 0.5];
        let inter = InteractionSpec { potential: PairPotential::Riesz { p: 0.5 }, beta: 1.0 };
        let mut b1 = [0.0; 4];
        let mut b2 = [0.0; 4];
        interaction_drift(&space, &masses, &[0.3, 0.5, 0.5, 0.5], &inter, DriftVariant::MassWeighted, 0.0, &mut b1)
            .unwrap();
        interaction_drift(&space, &masses, &[0.4, 0.5, 0.5, 0.5], &inter, DriftVariant::MassWeighted, 0.0, &mut b2)
            .unwrap();
        let ratio = b2[0] / b1[0];
        assert!((ratio - 2f64.powf(1.5)).abs() < 1e-12);
        // repulsive: particle 0 sits left of particle 1 and is pushed left
        assert!(b1[0] < 0.0 && b1[2] > 0.0);
        assert_eq!(b1[1], 0.0);
    }

    #[test]
    fn repulsion_increases_mean_distance() {
        let m = MassSequence::uniform(2).unwrap();
        let base = torus_cfg(2, m, 1e-3, 0.05).with_stride(50);
        let inter = base.clone().with_interaction(PairPotential::Riesz { p: 0.5 }, 1.0);
        let n = 4000;
        let dist = |cfg: &SystemConfig, seed: u64| -> Vec<f64> {
            (0..n as u64)
                .map(|k| {
                    let tr = simulate(cfg, &mut rng::stream(seed, k)).unwrap();
                    let last = tr.n_times() - 1;
                    tr.space().distance(tr.position(last, 0), tr.position(last, 1)).unwrap()
                })
                .collect()
        };
        // start close together so the repulsion matters
        let init = InitialCondition::Fixed { positions: vec![0.5, 0.5, 0.55, 0.5] };
        // shared noise: the paired difference isolates the drift
        let a = dist(&base.clone().with_initial(init.clone()), 1);
        let b = dist(&inter.clone().with_initial(init), 1);
        let diffs: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
        let (mean, se) = crate::verify::stats::mean_se(&diffs);
        let z = mean / se;
        assert!(z > 3.0, "z = {z}");
    }

    #[test]
    fn step_rejected_on_blow_up() {
        let m = MassSequence::uniform(2).unwrap();
        let cfg = torus_cfg(1, m, 1e-3, 0.01)
            .with_interaction(PairPotential::Riesz { p: 1.0 }, 1.0)
            .with_initial(InitialCondition::Fixed { positions: vec![0.25, 0.25] });
        let err = simulate(&cfg, &mut rng::stream(0, 0)).unwrap_err();
        assert!(matches!(err, Error::StepRejected { i: 0, j: 1, .. }));
    }

    #[test]
    fn deterministic_per_seed() {
        let m = MassSequence::explicit(vec![0.7, 0.2, 0.1], 0.0).unwrap();
        let cfg = torus_cfg(2, m, 1e-3, 0.02).with_seed(9);
        assert_eq!(simulate_path(&cfg, 4).unwrap(), simulate_path(&cfg, 4).unwrap());
        assert_ne!(simulate_path(&cfg, 4).unwrap(), simulate_path(&cfg, 5).unwrap());
    }

    #[test]
    fn collision_edge_cases() {
        let one = torus_cfg(1, MassSequence::uniform(1).unwrap(), 1e-3, 0.1);
        let tr = simulate_path(&one, 0).unwrap();
        assert_eq!(first_collision_time(&tr, 1e-3).unwrap(), f64::INFINITY);
        assert!(min_pair_distance_series(&tr).is_err());

        let still = Trajectory::new(
            BaseSpace::torus(1),
            MassSequence::explicit(vec![1.0, 0.0], 0.0).unwrap(),
            vec![0.0, 0.1, 0.2],
            vec![0.0, 0.5, 0.0, 0.5, 0.0, 0.5],
            None,
        )
        .unwrap();
        assert_eq!(min_pair_distance_series(&still).unwrap(), vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn two_frozen_particles_never_collide() {
        let tr = Trajectory::new(
            BaseSpace::torus(2),
            MassSequence::explicit(vec![0.5, 0.5], 0.0).unwrap(),
            vec![0.0, 1.0],
            vec![0.1, 0.1, 0.4, 0.1, 0.1, 0.1, 0.4, 0.1],
            None,
        )
        .unwrap();
        assert_eq!(first_collision_time(&tr, 1e-3).unwrap(), f64::INFINITY);
    }

    #[test]
    fn close_unit_particles_collide_on_circle() {
        // two unit-speed particles 0.01 apart: crossing is near certain
        let masses = MassSequence::explicit(vec![0.5, 0.5], 0.0).unwrap();
        let cfg = torus_cfg(1, masses, 1e-3, 1.0)
            .with_initial(InitialCondition::Fixed { positions: vec![0.3, 0.31] })
            .with_collision_delta(1e-4)
            .with_stride(1000);
        let hits = (0..1000u64)
            .filter(|k| {
                let out = run_path(&cfg, vec![0.3, 0.31], &mut rng::stream(11, *k), |_, _, _| {}).unwrap();
                out.collision_time.is_some_and(|t| t <= 1.0)
            })
            .count();
        assert!(hits > 950, "{hits}");
    }

    #[test]
    fn min_distance_never_exceeds_diameter() {
        let m = MassSequence::uniform(5).unwrap();
        let cfg = torus_cfg(3, m, 1e-2, 0.5);
        let tr = simulate_path(&cfg, 0).unwrap();
        let s = min_pair_distance_series(&tr).unwrap();
        assert_eq!(s.len(), tr.n_times());
        assert!(s.iter().all(|v| *v <= 3f64.sqrt() / 2.0));
    }

    #[test]
    fn csv_round_trip() {
        let m = MassSequence::explicit(vec![0.6, 0.4], 0.0).unwrap();
        let cfg = torus_cfg(2, m, 1e-2, 0.1).with_seed(4);
        let tr = simulate_path(&cfg, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv, json) = tr.save(dir.path(), "traj", Some(&cfg)).unwrap();
        let head = std::fs::read_to_string(&csv).unwrap();
        assert!(head.starts_with("time,particle,x0,x1\n"));
        let back = Trajectory::load(&csv, &json).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn config_validation() {
        let m = MassSequence::uniform(2).unwrap();
        let bad_dt = torus_cfg(1, m.clone(), 2.0, 1.0);
        assert!(bad_dt.validate().is_err());
        let neg = torus_cfg(1, m.clone(), -1.0, 1.0);
        assert!(neg.validate().is_err());
        let mut strict = torus_cfg(2, m.clone(), 1e-3, 1.0).with_interaction(PairPotential::Riesz { p: 1.5 }, 1.0);
        strict.strict_integrability = true;
        assert!(strict.validate().is_err());
        let mut ok = torus_cfg(3, m, 1e-3, 1.0).with_interaction(PairPotential::Riesz { p: 1.5 }, 1.0);
        ok.strict_integrability = true;
        ok.validate().unwrap();
    }
}
