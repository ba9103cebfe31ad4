//! Benchmark bodies: bending and twisting cantilevers, falling ball.

use std::f64::consts::PI;

use crate::damping::{artificial_viscosity, DampingConfig, DampingScheme};
use crate::kernel::SmoothingKernel;
use crate::state::{Material, MaterialModel, ParticleSystem};
use crate::tlsph::{Body, ExternalForce};
use crate::{Error, Result, Vec3};

pub const GRAVITY: f64 = 9.8;

/// Clamped lattice layers behind the cantilever root, at least `2h / dp`.
pub const CLAMP_LAYERS: usize = 3;

/// Lattice particles with per-particle reference volume `dp^dim`.
#[derive(Debug, Clone)]
pub struct ParticleBlock {
    pub dim: usize,
    pub dp: f64,
    pub positions: Vec<Vec3>,
    pub volume: f64,
}

impl ParticleBlock {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_mass(&self, rho0: f64) -> f64 {
        rho0 * self.volume * self.len() as f64
    }

    pub fn into_system(self, rho0: f64) -> Result<ParticleSystem> {
        let n = self.positions.len();
        ParticleSystem::new(self.dim, self.positions, vec![self.volume; n], rho0)
    }
}

/// Regular lattice filling the box `[lo, lo + lengths]` (first `dim` axes),
/// one particle at the centre of each `dp`-cell, `round(length / dp)` per axis.
pub fn generate_box_lattice(lo: Vec3, lengths: &[f64], dp: f64) -> Result<ParticleBlock> {
    let dim = lengths.len();
    if dim != 2 && dim != 3 {
        return Err(Error::invalid(format!("box needs 2 or 3 lengths, got {dim}")));
    }
    if !(dp > 0.0) {
        return Err(Error::invalid(format!("particle spacing must be positive, got {dp}")));
    }
    let mut counts = [1usize; 3];
    for (a, &len) in lengths.iter().enumerate() {
        if !(len >= dp * (1.0 - 1e-9)) {
            return Err(Error::invalid(format!(
                "box length {len} along axis {a} is shorter than dp = {dp}"
            )));
        }
        counts[a] = (len / dp).round() as usize;
    }
    let mut positions = Vec::with_capacity(counts.iter().product());
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let mut p = Vec3::new(
                    lo.x + (i as f64 + 0.5) * dp,
                    lo.y + (j as f64 + 0.5) * dp,
                    lo.z + (k as f64 + 0.5) * dp,
                );
                if dim == 2 {
                    p.z = 0.0;
                }
                positions.push(p);
            }
        }
    }
    Ok(ParticleBlock {
        dim,
        dp,
        positions,
        volume: dp.powi(dim as i32),
    })
}

/// Centres of the `dp`-cells tiling the square around the disk, kept when
/// within `diameter / 2` of `center` (2D). With an odd number of cells across,
/// one particle sits on the centre.
pub fn generate_disk(center: Vec3, diameter: f64, dp: f64) -> Result<ParticleBlock> {
    if !(dp > 0.0) || !(diameter >= 2.0 * dp) {
        return Err(Error::invalid(format!(
            "disk of diameter {diameter} needs dp > 0 and diameter >= 2 dp, got dp = {dp}"
        )));
    }
    let radius = 0.5 * diameter;
    let n = (diameter / dp).round() as usize;
    let offset = |k: usize| (k as f64 + 0.5 - 0.5 * n as f64) * dp;
    let mut positions = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (offset(i), offset(j));
            if x * x + y * y <= radius * radius {
                positions.push(Vec3::new(center.x + x, center.y + y, 0.0));
            }
        }
    }
    Ok(ParticleBlock {
        dim: 2,
        dp,
        positions,
        volume: dp * dp,
    })
}

/// Sinusoidal body force `(0, y γ, z γ)` with `γ = (20 g / h_len) sin(π x / 2L)`,
/// with `y, z` measured from the beam axis.
pub fn rotational_body_force(r0: &Vec3, length: f64, g: f64, h_len: f64) -> Vec3 {
    let gamma = 20.0 * g / h_len * (PI * r0.x / (2.0 * length)).sin();
    Vec3::new(0.0, r0.y * gamma, r0.z * gamma)
}

/// Penalty half-space: particles behind the plane are pushed back along the
/// normal with force `stiffness * penetration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPlane {
    pub point: Vec3,
    pub normal: Vec3,
    pub stiffness: f64,
}

impl ContactPlane {
    pub fn new(point: Vec3, normal: Vec3, stiffness: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !(stiffness >= 0.0) {
            return Err(Error::invalid(
                "contact plane needs a non-zero normal and non-negative stiffness",
            ));
        }
        Ok(Self {
            point,
            normal: normal / len,
            stiffness,
        })
    }

    /// `K dp^(dim - 2)`, which keeps resting penetration well below `dp`.
    pub fn default_stiffness(bulk_modulus: f64, dp: f64, dim: usize) -> f64 {
        bulk_modulus * dp.powi(dim as i32 - 2)
    }

    pub fn penetration(&self, r: &Vec3) -> f64 {
        (-(r - self.point).dot(&self.normal)).max(0.0)
    }
}

/// Acceleration of a particle of mass `mass` at `r` against `plane`.
pub fn contact_plane_force(r: &Vec3, mass: f64, plane: &ContactPlane) -> Vec3 {
    let depth = plane.penetration(r);
    if depth > 0.0 {
        plane.normal * (plane.stiffness * depth / mass)
    } else {
        Vec3::zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Square-section beam along +x, section centred on the x axis, clamped
    /// behind `x = 0`.
    Cantilever { length: f64, thickness: f64 },
    /// Disk (2D ball) resting above a floor at `y = 0`.
    Disk { diameter: f64, drop_gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BodyForceSpec {
    Gravity(Vec3),
    Rotational { g: f64, length: f64, h_len: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub name: String,
    pub dim: usize,
    pub geometry: Geometry,
    /// Particles across the thickness (cantilever) or diameter (ball).
    pub resolution: usize,
    pub dp: f64,
    pub rho0: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub model: MaterialModel,
    pub body_force: BodyForceSpec,
    pub floor: bool,
    /// Shape parameter β and length scale L of the default viscosity.
    pub beta: f64,
    pub length_scale: f64,
    pub damping: DampingConfig,
    pub end_time: f64,
    pub probes: Vec<Vec3>,
    pub output_interval: f64,
}

pub const CASE_NAMES: [&str; 3] = ["bending_cantilever", "twisting_cantilever", "falling_ball"];

pub const CANTILEVER_LENGTH: f64 = 0.1;
pub const CANTILEVER_THICKNESS: f64 = 0.04;
pub const BALL_DIAMETER: f64 = 1.0;

impl CaseSpec {
    /// Built-in case at the given resolution, with its default damping: α = 0.2,
    /// η from β, particle split for the cantilevers and pairwise split for the
    /// ball.
    pub fn builtin(name: &str, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        let spec = match name {
            "bending_cantilever" | "twisting_cantilever" => {
                let (l, d) = (CANTILEVER_LENGTH, CANTILEVER_THICKNESS);
                let (rho0, e) = (1265.0, 5e4);
                let twisting = name == "twisting_cantilever";
                let body_force = if twisting {
                    BodyForceSpec::Rotational {
                        g: GRAVITY,
                        length: l,
                        h_len: d,
                    }
                } else {
                    BodyForceSpec::Gravity(Vec3::new(0.0, -GRAVITY, 0.0))
                };
                let probe = if twisting {
                    Vec3::new(l, 0.5 * d, 0.5 * d)
                } else {
                    Vec3::new(l, 0.0, 0.0)
                };
                let beta = d / l;
                CaseSpec {
                    name: name.to_string(),
                    dim: 3,
                    geometry: Geometry::Cantilever {
                        length: l,
                        thickness: d,
                    },
                    resolution,
                    dp: d / resolution as f64,
                    rho0,
                    youngs_modulus: e,
                    poisson_ratio: 0.45,
                    model: MaterialModel::NeoHookean,
                    body_force,
                    floor: false,
                    beta,
                    length_scale: d,
                    damping: DampingConfig::new(
                        DampingScheme::ParticleSplit,
                        artificial_viscosity(beta, rho0, e, d),
                        0.2,
                        0,
                    )?,
                    end_time: 2.0,
                    probes: vec![probe],
                    output_interval: 0.01,
                }
            }
            "falling_ball" => {
                let d = BALL_DIAMETER;
                let (rho0, e) = (1000.0, 5e5);
                CaseSpec {
                    name: name.to_string(),
                    dim: 2,
                    geometry: Geometry::Disk {
                        diameter: d,
                        drop_gap: 0.25 * d,
                    },
                    resolution,
                    dp: d / resolution as f64,
                    rho0,
                    youngs_modulus: e,
                    poisson_ratio: 0.45,
                    model: MaterialModel::LinearKirchhoff,
                    body_force: BodyForceSpec::Gravity(Vec3::new(0.0, -GRAVITY, 0.0)),
                    floor: true,
                    beta: 1.0,
                    length_scale: d,
                    // The particle-split neighbour correction overshoots at this
                    // viscosity-to-step ratio, so the pair solve is the default.
                    damping: DampingConfig::new(
                        DampingScheme::PairwiseSplit,
                        artificial_viscosity(1.0, rho0, e, d),
                        0.2,
                        0,
                    )?,
                    end_time: 4.0,
                    probes: vec![Vec3::new(0.0, 0.5 * d + 0.25 * d, 0.0)],
                    output_interval: 0.01,
                }
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown case '{other}' (expected one of {})",
                    CASE_NAMES.join(", ")
                )))
            }
        };
        Ok(spec)
    }

    /// Default resolution of each built-in case.
    pub fn default_resolution(name: &str) -> usize {
        match name {
            "falling_ball" => 50,
            "twisting_cantilever" => 12,
            _ => 6,
        }
    }

    pub fn material(&self) -> Result<Material> {
        Material::from_young_poisson(self.youngs_modulus, self.poisson_ratio, self.rho0, self.model)
    }

    /// Viscosity for shape parameter `beta` of this case.
    pub fn eta_for_beta(&self, beta: f64) -> f64 {
        artificial_viscosity(beta, self.rho0, self.youngs_modulus, self.length_scale)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dp > 0.0) {
            return Err(Error::invalid("dp must be positive"));
        }
        if !(self.end_time >= 0.0) {
            return Err(Error::invalid("end time must be non-negative"));
        }
        if !(self.output_interval > 0.0) {
            return Err(Error::invalid("output interval must be positive"));
        }
        Ok(())
    }

    /// Discretises the case into a body, its forcing and probe particle ids.
    pub fn build(&self) -> Result<Setup> {
        self.validate()?;
        let material = self.material()?;
        let kernel = SmoothingKernel::for_spacing(self.dp, self.dim)?;
        let (system, clamp_count) = match self.geometry {
            Geometry::Cantilever { length, thickness } => {
                let root = CLAMP_LAYERS as f64 * self.dp;
                let lo = Vec3::new(-root, -0.5 * thickness, -0.5 * thickness);
                let block = generate_box_lattice(lo, &[length + root, thickness, thickness], self.dp)?;
                let mut sys = block.into_system(self.rho0)?;
                for (c, r) in sys.constrained.iter_mut().zip(&sys.r0) {
                    *c = r.x < 0.0;
                }
                let count = sys.constrained.iter().filter(|&&c| c).count();
                (sys, count)
            }
            Geometry::Disk { diameter, drop_gap } => {
                let centre = Vec3::new(0.0, 0.5 * diameter + drop_gap, 0.0);
                (generate_disk(centre, diameter, self.dp)?.into_system(self.rho0)?, 0)
            }
        };
        if matches!(self.geometry, Geometry::Cantilever { .. }) && clamp_count == 0 {
            return Err(Error::invalid("clamp region selects no particles"));
        }

        let body_accel = system
            .r0
            .iter()
            .map(|r0| match self.body_force {
                BodyForceSpec::Gravity(g) => g,
                BodyForceSpec::Rotational { g, length, h_len } => rotational_body_force(r0, length, g, h_len),
            })
            .collect();
        let contact = if self.floor {
            Some(ContactPlane::new(
                Vec3::zeros(),
                Vec3::y(),
                ContactPlane::default_stiffness(material.bulk_modulus, self.dp, self.dim),
            )?)
        } else {
            None
        };
        let probes = self
            .probes
            .iter()
            .map(|target| nearest_particle(&system.r0, target))
            .collect();
        let forcing = Forcing {
            body: body_accel,
            contact,
            mass: system.mass.clone(),
        };
        let body = Body::new(system, material, kernel)?;
        Ok(Setup { body, forcing, probes })
    }
}

/// Lowest-index particle closest to `target`.
pub fn nearest_particle(positions: &[Vec3], target: &Vec3) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in positions.iter().enumerate() {
        let d = (p - target).norm_squared();
        if d < best_d - 1e-15 * best_d.min(1.0) {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Body force plus optional floor contact.
#[derive(Debug, Clone)]
pub struct Forcing {
    pub body: Vec<Vec3>,
    pub contact: Option<ContactPlane>,
    mass: Vec<f64>,
}

impl Forcing {
    pub fn new(body: Vec<Vec3>, contact: Option<ContactPlane>, mass: Vec<f64>) -> Self {
        Self { body, contact, mass }
    }
}

impl ExternalForce for Forcing {
    #[inline]
    fn acceleration(&self, i: usize, _r0: &Vec3, r: &Vec3) -> Vec3 {
        let mut a = self.body[i];
        if let Some(plane) = &self.contact {
            a += contact_plane_force(r, self.mass[i], plane);
        }
        a
    }
}

pub struct Setup {
    pub body: Body,
    pub forcing: Forcing,
    pub probes: Vec<usize>,
}
