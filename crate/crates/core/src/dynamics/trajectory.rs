use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SystemConfig;
use crate::ambient::BaseSpace;
use crate::error::{Error, Result};
use crate::simplex::MassSequence;

/// Recorded path of a massive system. Masses are stored once and never
/// mutated; positions are `n_times × n_particles × d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    space: BaseSpace,
    masses: MassSequence,
    times: Vec<f64>,
    positions: Vec<f64>,
    collision_time: Option<f64>,
}

/// JSON sidecar written next to the trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub space: BaseSpace,
    pub masses: MassSequence,
    pub n_times: usize,
    pub n_particles: usize,
    pub dim: usize,
    pub collision_time: Option<f64>,
    #[serde(default)]
    pub config: Option<SystemConfig>,
}

impl Trajectory {
    pub fn new(
        space: BaseSpace,
        masses: MassSequence,
        times: Vec<f64>,
        positions: Vec<f64>,
        collision_time: Option<f64>,
    ) -> Result<Self> {
        let want = times.len() * masses.len() * space.dim();
        if positions.len() != want {
            return Err(Error::DimensionMismatch { expected: want, got: positions.len() });
        }
        Ok(Self { space, masses, times, positions, collision_time })
    }

    pub fn space(&self) -> &BaseSpace {
        &self.space
    }

    pub fn masses(&self) -> &MassSequence {
        &self.masses
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn collision_time(&self) -> Option<f64> {
        self.collision_time
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// All particle positions at recorded time index `k`.
    pub fn frame(&self, k: usize) -> &[f64] {
        let w = self.n_particles() * self.dim();
        &self.positions[k * w..(k + 1) * w]
    }

    pub fn position(&self, k: usize, i: usize) -> &[f64] {
        let d = self.dim();
        &self.frame(k)[i * d..(i + 1) * d]
    }

    pub fn sidecar(&self, config: Option<&SystemConfig>) -> TrajectorySidecar {
        TrajectorySidecar {
            space: self.space,
            masses: self.masses.clone(),
            n_times: self.n_times(),
            n_particles: self.n_particles(),
            dim: self.dim(),
            collision_time: self.collision_time,
            config: config.cloned(),
        }
    }

    /// Columnar CSV `time,particle,x0,…`; reals use shortest round-trip
    /// formatting so reading back is bit-exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        write!(w, "time,particle")?;
        for c in 0..d {
            write!(w, ",x{c}")?;
        }
        writeln!(w)?;
        for (k, t) in self.times.iter().enumerate() {
            for i in 0..self.n_particles() {
                write!(w, "{t},{i}")?;
                for c in self.position(k, i) {
                    write!(w, ",{c}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
    pub fn save(
        &self,
        dir: &Path,
        stem: &str,
        config: Option<&SystemConfig>,
    ) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        let mut w = BufWriter::new(File::create(&csv)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        let f = File::create(&json)?;
        serde_json::to_writer_pretty(f, &self.sidecar(config))?;
        Ok((csv, json))
    }

    /// Read a trajectory back from its CSV and sidecar.
    pub fn load(csv: &Path, json: &Path) -> Result<Self> {
        let side: TrajectorySidecar = serde_json::from_reader(BufReader::new(File::open(json)?))?;
        let reader = BufReader::new(File::open(csv)?);
        Self::from_csv(reader, side)
    }

    pub fn from_csv<R: BufRead>(reader: R, side: TrajectorySidecar) -> Result<Self> {
        let (n, d) = (side.n_particles, side.dim);
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty trajectory CSV".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() != d + 2 || cols[0] != "time" || cols[1] != "particle" {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut times = Vec::with_capacity(side.n_times);
        let mut positions = Vec::with_capacity(side.n_times * n * d);
        for (row, line) in lines.enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 2 {
                return Err(Error::Parse(format!("row {row}: expected {} fields", d + 2)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {row}: {e}")));
            let t = num(fields[0])?;
            let i: usize = fields[1].parse().map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
            if i != row % n {
                return Err(Error::Parse(format!("row {row}: particle index {i} out of order")));
            }
            if i == 0 {
                times.push(t);
            }
            for f in &fields[2..] {
                positions.push(num(f)?);
            }
        }
        if times.len() != side.n_times {
            return Err(Error::Parse(format!(
                "sidecar announces {} times, CSV holds {}",
                side.n_times,
                times.len()
            )));
        }
        Self::new(side.space, side.masses, times, positions, side.collision_time)
    }
}
