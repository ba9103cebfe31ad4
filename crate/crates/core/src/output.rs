//! Plain CSV output: probe displacement histories and particle snapshots.
//!
//! Numbers are written with 17 significant digits so they parse back to the
//! same doubles. Lines end with `\n`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::state::{Material, ParticleSystem};
use crate::{Error, Result, Vec3};

const AXES: [&str; 3] = ["x", "y", "z"];

/// Displacement history of one probe particle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeSeries {
    pub particle: usize,
    pub times: Vec<f64>,
    pub displacements: Vec<Vec3>,
}

impl ProbeSeries {
    pub fn new(particle: usize) -> Self {
        Self {
            particle,
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, u: Vec3) {
        self.times.push(t);
        self.displacements.push(u);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Component `axis` of every sample.
    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.displacements.iter().map(|u| u[axis]).collect()
    }

    pub fn last(&self) -> Option<(f64, Vec3)> {
        Some((*self.times.last()?, *self.displacements.last()?))
    }
}

#[inline]
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t,ux,uy[,uz]`, one row per sample.
pub fn write_probe_csv(series: &ProbeSeries, dim: usize, out: &mut impl Write) -> Result<()> {
    if series.is_empty() {
        return Err(Error::invalid("probe series is empty"));
    }
    let mut header = String::from("t");
    for axis in &AXES[..dim] {
        header.push_str(",u");
        header.push_str(axis);
    }
    writeln!(out, "{header}")?;
    for (t, u) in series.times.iter().zip(&series.displacements) {
        let mut line = num(*t);
        for a in 0..dim {
            line.push(',');
            line.push_str(&num(u[a]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_probe_file(series: &ProbeSeries, dim: usize, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_probe_csv(series, dim, &mut w)?;
    w.flush()?;
    Ok(())
}

/// `id,x,y[,z],vx,vy[,vz],von_mises` for every particle.
pub fn write_snapshot(system: &ParticleSystem, material: &Material, out: &mut impl Write) -> Result<()> {
    let dim = system.dim;
    let von_mises = system.von_mises_field(material)?;
    let mut header = String::from("id");
    for axis in &AXES[..dim] {
        header.push(',');
        header.push_str(axis);
    }
    for axis in &AXES[..dim] {
        header.push_str(",v");
        header.push_str(axis);
    }
    header.push_str(",von_mises");
    writeln!(out, "{header}")?;
    #[allow(clippy::needless_range_loop)]
    for i in 0..system.len() {
        let mut line = i.to_string();
        for field in [&system.r[i], &system.v[i]] {
            for a in 0..dim {
                line.push(',');
                line.push_str(&num(field[a]));
            }
        }
        line.push(',');
        line.push_str(&num(von_mises[i]));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_snapshot_file(system: &ParticleSystem, material: &Material, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(system, material, &mut w)?;
    w.flush()?;
    Ok(())
}
