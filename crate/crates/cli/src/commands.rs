use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use massive::ambient::{BaseSpace, TestFunction};
use massive::cylinder::{CylinderFunction, MassCutoff, Scalar};
use massive::dynamics::{simulate_path, Trajectory};
use massive::measures::{distance_matrix, em, AtomicMeasure};
use massive::verify::{
    collision_experiment, girsanov_stationarity_test, martingale_suite, mass_invariance_test, measure_path,
    read_jsonl, stationarity_test, summary_table, write_jsonl, EnsembleSpec, GirsanovOptions, InitialLaw,
    TestReport,
};
use rayon::prelude::*;

use crate::config::{usage, Config, Suite, UsageError};
use crate::manifest::{Run, RunManifest, MANIFEST};

/// Outcome of a command; `failed` maps to exit code 1.
pub struct Outcome {
    pub failed: bool,
}

const OK: Outcome = Outcome { failed: false };

pub fn sample_masses(cfg: &Config, mut run: Run, count: usize) -> anyhow::Result<Outcome> {
    if count == 0 {
        bail!(UsageError("--count must be >= 1".into()));
    }
    let seed = cfg.seed_for("masses");
    let draws: Vec<_> = (0..count as u64).map(|i| cfg.masses.draw(seed, i)).collect::<Result<_, _>>().map_err(usage)?;
    run.write("masses.json", "mass_sequence", (serde_json::to_string_pretty(&draws[0])? + "\n").as_bytes())?;
    if count > 1 {
        let mut lines = String::new();
        for d in &draws {
            lines.push_str(&serde_json::to_string(d)?);
            lines.push('\n');
        }
        run.write("masses.jsonl", "mass_sequences", lines.as_bytes())?;
    }
    run.detail("count", count)?;
    run.finish()?;
    Ok(OK)
}

pub fn simulate(cfg: &Config, mut run: Run) -> anyhow::Result<Outcome> {
    let masses = cfg.masses.draw(cfg.seed_for("masses"), 0).map_err(usage)?;
    let system = cfg.system(masses);
    system.validate().map_err(usage)?;
    let trajectories: Vec<Trajectory> = (0..cfg.simulate.n_paths as u64)
        .into_par_iter()
        .map(|p| simulate_path(&system, p))
        .collect::<Result<_, _>>()?;
    for (p, traj) in trajectories.iter().enumerate() {
        let (csv, json) = traj.save(&run.dir, &format!("trajectory_{p:04}"), Some(&system))?;
        run.record(&csv, "trajectory_csv");
        run.record(&json, "trajectory_sidecar");
    }
    run.detail("system", &system)?;
    run.finish()?;
    Ok(OK)
}

/// Read a trajectory through its sidecar, which sits next to it.
fn load_trajectory(csv: &Path) -> anyhow::Result<Trajectory> {
    let json = csv.with_extension("json");
    Trajectory::load(csv, &json).with_context(|| format!("loading {} with {}", csv.display(), json.display()))
}

pub fn metrics(cfg: &Config, mut run: Run, trajectory: Option<&Path>, inputs: &[PathBuf]) -> anyhow::Result<Outcome> {
    let measures: Vec<AtomicMeasure> = match trajectory {
        Some(csv) => {
            if !inputs.is_empty() {
                bail!(UsageError("give either --trajectory or measure files, not both".into()));
            }
            let traj = load_trajectory(csv)?;
            run.detail("trajectory", csv)?;
            let frames: Vec<usize> = (0..traj.n_times()).step_by(cfg.metrics.frame_stride).collect();
            run.detail("frames", &frames)?;
            run.detail("times", frames.iter().map(|k| traj.times()[*k]).collect::<Vec<_>>())?;
            frames.iter().map(|k| em(traj.masses(), *traj.space(), traj.frame(*k))).collect::<Result<_, _>>()?
        }
        None => {
            if inputs.len() < 2 {
                bail!(UsageError("metrics needs --trajectory or at least two measure files".into()));
            }
            run.detail("inputs", inputs)?;
            inputs
                .iter()
                .map(|p| {
                    let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    AtomicMeasure::read_csv(cfg.space, BufReader::new(f))
                        .with_context(|| format!("reading {}", p.display()))
                })
                .collect::<anyhow::Result<_>>()?
        }
    };
    if cfg.metrics.metrics.is_empty() {
        bail!(UsageError("no metrics requested".into()));
    }
    let n = measures.len();
    let mut names = Vec::new();
    let mut matrices = Vec::new();
    for m in &cfg.metrics.metrics {
        let metric = cfg.metrics.resolve(*m);
        let mat = distance_matrix(&measures, metric).map_err(usage)?;
        let name = metric.name();
        let mut text = String::from("i");
        for j in 0..n {
            write!(text, ",{j}")?;
        }
        text.push('\n');
        for (i, row) in mat.iter().enumerate() {
            write!(text, "{i}")?;
            for v in row {
                write!(text, ",{v}")?;
            }
            text.push('\n');
        }
        run.write(&format!("matrix_{name}.csv"), "distance_matrix", text.as_bytes())?;
        names.push(name);
        matrices.push(mat);
    }
    let mut pairs = format!("i,j,{}\n", names.join(","));
    for i in 0..n {
        for j in i..n {
            write!(pairs, "{i},{j}")?;
            for mat in &matrices {
                write!(pairs, ",{}", mat[i][j])?;
            }
            pairs.push('\n');
        }
    }
    run.write("pairs.csv", "distance_pairs", pairs.as_bytes())?;
    run.detail("n_measures", n)?;
    run.finish()?;
    Ok(OK)
}

/// Lowest two non-constant eigenfunctions of the base generator.
fn basis(space: &BaseSpace) -> (TestFunction, TestFunction) {
    match *space {
        BaseSpace::Torus { d } => {
            let mut e = vec![0; d];
            e[0] = 1;
            let mut last = vec![0; d];
            last[d - 1] = 1;
            (TestFunction::cos(&e, 1.0), TestFunction::sin(&last, 1.0))
        }
        BaseSpace::EuclideanOu { d } => {
            let mut a = vec![0; d];
            a[0] = 1;
            let mut b = vec![0; d];
            b[d - 1] += 2;
            (TestFunction::hermite(&a, 1.0), TestFunction::hermite(&b, 0.5))
        }
        BaseSpace::IntervalReflected => (TestFunction::cosine(1, 1.0), TestFunction::cosine(2, 1.0)),
    }
}

/// Linear, product and composed observables with mass threshold `eps`.
pub fn default_observables(space: &BaseSpace, eps: f64) -> Vec<CylinderFunction> {
    let (f, g) = basis(space);
    let a = CylinderFunction::pair(MassCutoff::new(eps), f);
    let b = CylinderFunction::pair(MassCutoff::new(eps), g);
    vec![a.clone(), a.product(&b), b.compose(Scalar::Exp)]
}

const DEFAULT_EPS: f64 = 0.01;

fn observables(cfg: &Config) -> anyhow::Result<Vec<CylinderFunction>> {
    let us = match &cfg.verify.observables_file {
        Some(p) => {
            let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            serde_json::from_reader(BufReader::new(f))
                .map_err(|e| UsageError(format!("{}: invalid observables: {e}", p.display())))?
        }
        None => default_observables(&cfg.space, DEFAULT_EPS),
    };
    Ok(us)
}

fn ensemble(cfg: &Config, observables: Vec<CylinderFunction>) -> anyhow::Result<EnsembleSpec> {
    let masses = cfg.masses.draw(cfg.seed_for("masses"), 0).map_err(usage)?;
    let law = cfg.masses.law(cfg.seed_for("masses"));
    let mut spec = EnsembleSpec::new(cfg.system(masses), cfg.verify.n_paths, InitialLaw::ProductNu { masses: law })
        .with_observables(observables)
        .with_times(cfg.verify.times.clone());
    spec.significance = cfg.verify.significance;
    spec.validate().map_err(usage)?;
    Ok(spec)
}

/// Full trajectories of the first `mass_paths` ensemble paths.
fn mass_check(cfg: &Config, spec: &EnsembleSpec) -> anyhow::Result<TestReport> {
    let n = cfg.verify.mass_paths.min(spec.n_paths);
    let paths = (0..n as u64)
        .into_par_iter()
        .map(|p| {
            let (config, _, _) = spec.path(p)?;
            measure_path(&simulate_path(&config, p)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mass_invariance_test(&paths))
}

fn run_suite(cfg: &Config, suite: Suite, run: &mut Run) -> anyhow::Result<Vec<TestReport>> {
    let mut reports = Vec::new();
    match suite {
        Suite::FreeCore => {
            if cfg.system.interaction.is_some() {
                bail!(UsageError("free-core needs a free system; remove system.interaction".into()));
            }
            let us = observables(cfg)?;
            run.detail("observables", &us)?;
            let spec = ensemble(cfg, us.clone())?;
            for o in martingale_suite(&spec, &us, 1.0).map_err(usage)? {
                reports.push(o.martingale);
                reports.push(o.qv);
            }
            reports.push(stationarity_test(&spec).map_err(usage)?);
            reports.push(mass_check(cfg, &spec)?);
        }
        Suite::Girsanov => {
            let Some(interaction) = cfg.system.interaction else {
                bail!(UsageError("the girsanov suite needs system.interaction".into()));
            };
            let us = observables(cfg)?;
            run.detail("observables", &us)?;
            let spec = ensemble(cfg, us)?;
            let opts = GirsanovOptions {
                burn_in_fraction: cfg.verify.burn_in_fraction,
                is_samples: cfg.verify.is_samples,
                pi_samples: cfg.verify.pi_samples,
            };
            reports.push(girsanov_stationarity_test(&interaction, &spec, opts).map_err(usage)?);
            reports.push(mass_check(cfg, &spec)?);
        }
        Suite::Collisions => {
            if cfg.system.collision_delta.is_none() {
                bail!(UsageError("the collisions suite needs system.collision_delta".into()));
            }
            let spec = ensemble(cfg, Vec::new())?;
            reports.push(collision_experiment(&spec).map_err(usage)?);
        }
    }
    Ok(reports)
}

pub fn verify(cfg: &Config, mut run: Run, suite: Suite) -> anyhow::Result<Outcome> {
    run.detail("suite", suite.name())?;
    let reports = run_suite(cfg, suite, &mut run)?;
    let mut buf = Vec::new();
    write_jsonl(&reports, &mut buf)?;
    run.write("reports.jsonl", "test_reports", &buf)?;
    let table = summary_table(&reports);
    run.write("summary.txt", "summary", table.as_bytes())?;
    print!("{table}");
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    run.detail("failed", &failed)?;
    run.finish()?;
    Ok(Outcome { failed: !failed.is_empty() })
}

/// Human-readable account of an existing run directory.
pub fn report(dir: &Path, run: Option<Run>) -> anyhow::Result<Outcome> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: not a run manifest: {e}", path.display())))?;
    let mut out = format!(
        "command   {}\nversion   {}\nseed      {}\nwall time {:.3} s\noutputs   {}\n",
        m.command,
        m.code_version,
        m.master_seed,
        m.finished_unix - m.started_unix,
        m.outputs.len()
    );
    for o in &m.outputs {
        writeln!(out, "  {:<24} {}", o.kind, o.path)?;
    }
    let mut failed = false;
    let reports = dir.join("reports.jsonl");
    if reports.exists() {
        let rs = read_jsonl(&std::fs::read_to_string(&reports)?)?;
        failed = rs.iter().any(|r| !r.pass);
        out.push('\n');
        out.push_str(&summary_table(&rs));
    }
    print!("{out}");
    if let Some(mut run) = run {
        run.detail("source", dir)?;
        run.write("report.txt", "report", out.as_bytes())?;
        run.finish()?;
    }
    Ok(Outcome { failed })
}
