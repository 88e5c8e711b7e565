//! Martingale-problem tests.
//!
//! For a cylinder function `u` the process
//! `M_t = u(μ_t) − u(μ_0) − c ∫_0^t L̂u(μ_s) ds` is a martingale when
//! `c = 1`, with `⟨M⟩_t = ∫_0^t 2Ĝ(u, u)(μ_s) ds` under the generator `Δ`.
//! Time integrals use the trapezoidal rule on the simulation grid.

use super::stats::{mean_se, ratio_se, z_score};
use super::{check_validity, EnsembleSpec, TestReport};
use crate::ambient::TestFunction;
use crate::cylinder::{carre_du_champ_atoms, dual_pairing, Atoms, CylinderFunction, MassCutoff, Prepared};
use crate::dynamics::run_path;
use crate::error::{Error, Result};
use crate::measures::AtomicMeasure;

/// Martingale and quadratic-variation reports for one observable.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleOutcome {
    pub martingale: TestReport,
    pub qv: TestReport,
}

#[derive(Debug, Clone, Default)]
struct PathRecord {
    m_final: f64,
    m_half: f64,
    /// Dictionary statistics evaluated at the half-way checkpoint.
    g_half: Vec<f64>,
    qv_integral: f64,
}

/// `1, u, t_i, t_i t_j` at the current pair values.
fn dictionary(u: &CylinderFunction, value: f64, pairs: &[f64]) -> Vec<f64> {
    let mut g = vec![1.0, value];
    g.extend_from_slice(pairs);
    for i in 0..u.k() {
        for j in i..u.k() {
            g.push(pairs[i] * pairs[j]);
        }
    }
    g
}

fn dictionary_names(k: usize) -> Vec<String> {
    let mut names = vec!["1".to_string(), "u".to_string()];
    names.extend((0..k).map(|i| format!("t{i}")));
    for i in 0..k {
        for j in i..k {
            names.push(format!("t{i}*t{j}"));
        }
    }
    names
}

/// Per-step drift evaluator; the shadow test swaps in the dual pairing.
trait Drift: Sync {
    fn value_and_drift(&self, atoms: Atoms) -> (f64, f64);
}

impl Drift for Prepared<'_> {
    fn value_and_drift(&self, atoms: Atoms) -> (f64, f64) {
        self.eval_with_generator(atoms)
    }
}

struct DualPairing<'a> {
    u: &'a CylinderFunction,
    phi: &'a MassCutoff,
    f: &'a TestFunction,
    space: crate::ambient::BaseSpace,
}

impl Drift for DualPairing<'_> {
    fn value_and_drift(&self, atoms: Atoms) -> (f64, f64) {
        let rho = AtomicMeasure::unnormalized(self.space, atoms.positions.to_vec(), atoms.masses.to_vec())
            .expect("simulated atoms are valid");
        let drift = dual_pairing(&rho, self.phi, self.f, &self.space).expect("space checked");
        (self.u.eval_atoms(atoms), drift)
    }
}

/// Simulate the ensemble once and accumulate, for every observable, the
/// martingale increments, the dictionary at `T/2` and `∫ 2Ĝ(u,u)`.
fn collect(spec: &EnsembleSpec, us: &[CylinderFunction], drifts: &[&dyn Drift], scale: f64) -> Result<Vec<Vec<PathRecord>>> {
    spec.validate()?;
    for u in us {
        u.check_space(&spec.system.space)?;
    }
    let d = spec.system.space.dim();
    let per_path = spec.map_paths(|_, mut config, x0, mut r| {
        config.record_stride = 1;
        for u in us {
            check_validity(u, &config.masses)?;
        }
        let masses = config.masses.masses().to_vec();
        let n_steps = config.n_steps();
        let half = n_steps / 2;
        let mut recs = vec![PathRecord::default(); us.len()];
        let mut u0 = vec![0.0; us.len()];
        let mut prev_drift = vec![0.0; us.len()];
        let mut prev_qv = vec![0.0; us.len()];
        let mut comp = vec![0.0; us.len()];
        let mut qv = vec![0.0; us.len()];
        let mut t_prev = 0.0;
        run_path(&config, x0, &mut r, |k, t, frame| {
            let atoms = Atoms::new(&masses, frame, d);
            let h = t - t_prev;
            for (j, u) in us.iter().enumerate() {
                let (val, drift) = drifts[j].value_and_drift(atoms);
                let g2 = 2.0 * carre_du_champ_atoms(u, u, atoms);
                if k == 0 {
                    u0[j] = val;
                } else {
                    comp[j] += 0.5 * h * (prev_drift[j] + drift);
                    qv[j] += 0.5 * h * (prev_qv[j] + g2);
                }
                prev_drift[j] = drift;
                prev_qv[j] = g2;
                let m = val - u0[j] - scale * comp[j];
                if k == half {
                    recs[j].m_half = m;
                    recs[j].g_half = dictionary(u, val, &u.pair_values(atoms));
                }
                if k == n_steps {
                    recs[j].m_final = m;
                    recs[j].qv_integral = qv[j];
                }
            }
            t_prev = t;
        })?;
        Ok(recs)
    })?;
    Ok(per_path)
}

fn martingale_report(spec: &EnsembleSpec, name: &str, u: &CylinderFunction, recs: &[PathRecord]) -> TestReport {
    let finals: Vec<f64> = recs.iter().map(|r| r.m_final).collect();
    let (mean, se) = mean_se(&finals);
    let names = dictionary_names(u.k());
    let mut zs = vec![("E[M_T]".to_string(), mean, se, z_score(mean, se))];
    for (g, gname) in names.iter().enumerate() {
        let xs: Vec<f64> = recs.iter().map(|r| (r.m_final - r.m_half) * r.g_half[g]).collect();
        let (m, s) = mean_se(&xs);
        zs.push((format!("E[(M_T - M_T/2) {gname}]"), m, s, z_score(m, s)));
    }
    let worst = zs
        .iter()
        .max_by(|a, b| a.3.abs().partial_cmp(&b.3.abs()).unwrap_or(std::cmp::Ordering::Less))
        .cloned()
        .unwrap();
    let threshold = spec.threshold(zs.len());
    let table: Vec<(String, f64)> = zs.iter().map(|(n, _, _, z)| (n.clone(), *z)).collect();
    TestReport::two_sided(name, mean, se, worst.3, threshold)
        .with("worst_statistic", &worst.0)
        .with("z_scores", table)
        .with("n_paths", recs.len())
}

fn qv_report(spec: &EnsembleSpec, name: &str, recs: &[PathRecord]) -> TestReport {
    let sq: Vec<f64> = recs.iter().map(|r| r.m_final * r.m_final).collect();
    let qv: Vec<f64> = recs.iter().map(|r| r.qv_integral).collect();
    let (ms, _) = mean_se(&sq);
    let (mq, _) = mean_se(&qv);
    let (ratio, se) = if ms == 0.0 && mq == 0.0 { (1.0, 0.0) } else { ratio_se(&sq, &qv) };
    TestReport::two_sided(name, ratio, se, z_score(ratio - 1.0, se), spec.threshold(1))
        .with("mean_m_squared", ms)
        .with("mean_qv_integral", mq)
        .with("n_paths", recs.len())
}

/// Martingale and QV reports for each observable on one shared ensemble.
/// `drift_scale` multiplies the compensator; any value but 1 is a fault.
pub fn martingale_suite(spec: &EnsembleSpec, us: &[CylinderFunction], drift_scale: f64) -> Result<Vec<MartingaleOutcome>> {
    let prepared: Vec<Prepared> = us.iter().map(|u| u.prepare(&spec.system.space)).collect::<Result<_>>()?;
    let drifts: Vec<&dyn Drift> = prepared.iter().map(|p| p as &dyn Drift).collect();
    let per_path = collect(spec, us, &drifts, drift_scale)?;
    Ok(us
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let recs: Vec<PathRecord> = per_path.iter().map(|p| p[j].clone()).collect();
            MartingaleOutcome {
                martingale: martingale_report(spec, &format!("martingale[{j}]"), u, &recs).with("drift_scale", drift_scale),
                qv: qv_report(spec, &format!("qv[{j}]"), &recs),
            }
        })
        .collect())
}

pub fn martingale_test(spec: &EnsembleSpec, u: &CylinderFunction) -> Result<TestReport> {
    Ok(martingale_suite(spec, std::slice::from_ref(u), 1.0)?.remove(0).martingale)
}

pub fn qv_test(spec: &EnsembleSpec, u: &CylinderFunction) -> Result<TestReport> {
    Ok(martingale_suite(spec, std::slice::from_ref(u), 1.0)?.remove(0).qv)
}

/// Martingale test of `(φ⊗f)⋆` with the drift computed as the pairing
/// `(L'ρ)(φ⊗f)`. The same ensemble is pushed through the generator form
/// as well; the report carries both and their largest path-wise gap.
pub fn shadow_mp_test(spec: &EnsembleSpec, phi: &MassCutoff, f: &TestFunction) -> Result<TestReport> {
    let u = CylinderFunction::pair(phi.clone(), f.clone());
    let prepared = u.prepare(&spec.system.space)?;
    let dual = DualPairing { u: &u, phi, f, space: spec.system.space };
    let us = [u.clone(), u.clone()];
    let per_path = collect(spec, &us, &[&dual as &dyn Drift, &prepared as &dyn Drift], 1.0)?;
    let shadow: Vec<PathRecord> = per_path.iter().map(|p| p[0].clone()).collect();
    let generator: Vec<PathRecord> = per_path.iter().map(|p| p[1].clone()).collect();
    let gap = shadow
        .iter()
        .zip(&generator)
        .map(|(a, b)| (a.m_final - b.m_final).abs())
        .fold(0.0, f64::max);
    let g_report = martingale_report(spec, "martingale", &u, &generator);
    Ok(martingale_report(spec, "shadow_mp", &u, &shadow)
        .with("generator_form_z", g_report.z_score)
        .with("generator_form_statistic", g_report.statistic)
        .with("generator_form_pass", g_report.pass)
        .with("max_path_gap", gap))
}

/// KLR rigidity: with `ρ = (1/n) Σ δ_{X^i}` and particles at speed `n`,
/// `ρ_t f − ρ_0 f − α ∫ ρ_s(Lf) ds` is a martingale iff `α = n`.
pub fn rigidity_test(n: usize, alpha: f64, spec: &EnsembleSpec, f: &TestFunction) -> Result<TestReport> {
    let masses = spec.system.masses.masses();
    if masses.len() != n || masses.iter().any(|m| (m - 1.0 / n as f64).abs() > 1e-15) {
        return Err(Error::InvalidParameter(format!("rigidity test needs uniform({n}) masses")));
    }
    if !matches!(spec.initial_law, super::InitialLaw::Fixed { .. } | super::InitialLaw::ProductNu { masses: None }) {
        return Err(Error::InvalidParameter("rigidity test needs the system masses on every path".into()));
    }
    // φ = 1 at 1/n, so (φ⊗f)⋆ρ = ρ f and L̂ of it is n ρ(Lf)
    let eps = 0.5 / n as f64;
    let u = CylinderFunction::pair(MassCutoff::new(eps).with_width(0.25 / n as f64), f.clone());
    let out = martingale_suite(spec, std::slice::from_ref(&u), alpha / n as f64)?.remove(0);
    let mut report = out.martingale.with("n", n).with("alpha", alpha);
    report.name = format!("rigidity[n={n}, alpha={alpha}]");
    Ok(report)
}
