//! Particle storage and constitutive evaluation.
//!
//! Two-dimensional bodies are stored in the same 3-vector / 3x3 layout as
//! three-dimensional ones: positions have `z = 0` and the deformation
//! gradient keeps `F_zz = 1` (plane strain).

use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialModel {
    /// Saint Venant-Kirchhoff: `S = λ tr(E) I + 2μ E`.
    LinearKirchhoff,
    /// `W = μ tr(E) - μ ln J + λ/2 (ln J)²`.
    NeoHookean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub model: MaterialModel,
    pub lambda: f64,
    pub mu: f64,
    pub bulk_modulus: f64,
    pub shear_modulus: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub rho0: f64,
    pub sound_speed: f64,
}

impl Material {
    /// Standard isotropic conversion, `E = 2G(1 + ν) = 3K(1 - 2ν)`.
    pub fn from_young_poisson(
        youngs_modulus: f64,
        poisson_ratio: f64,
        rho0: f64,
        model: MaterialModel,
    ) -> Result<Self> {
        if !(youngs_modulus > 0.0) {
            return Err(Error::invalid(format!(
                "Young's modulus must be positive, got {youngs_modulus}"
            )));
        }
        if !(0.0..0.5).contains(&poisson_ratio) {
            return Err(Error::invalid(format!(
                "Poisson ratio must lie in [0, 0.5), got {poisson_ratio}"
            )));
        }
        if !(rho0 > 0.0) {
            return Err(Error::invalid(format!("density must be positive, got {rho0}")));
        }
        let nu = poisson_ratio;
        let lambda = youngs_modulus * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = youngs_modulus / (2.0 * (1.0 + nu));
        let bulk_modulus = lambda + 2.0 * mu / 3.0;
        Ok(Self {
            model,
            lambda,
            mu,
            bulk_modulus,
            shear_modulus: mu,
            youngs_modulus,
            poisson_ratio,
            rho0,
            sound_speed: (bulk_modulus / rho0).sqrt(),
        })
    }

    /// Second Piola-Kirchhoff stress for deformation gradient `f`.
    pub fn second_pk(&self, f: &Mat3) -> Result<Mat3> {
        second_pk(f, self)
    }

    /// Stored energy per unit reference volume.
    pub fn strain_energy_density(&self, f: &Mat3) -> Result<f64> {
        let j = checked_det(f, 0)?;
        let e = green_lagrange(f);
        Ok(match self.model {
            MaterialModel::LinearKirchhoff => {
                let tr = e.trace();
                0.5 * self.lambda * tr * tr + self.mu * e.component_mul(&e).sum()
            }
            MaterialModel::NeoHookean => {
                let ln_j = j.ln();
                self.mu * e.trace() - self.mu * ln_j + 0.5 * self.lambda * ln_j * ln_j
            }
        })
    }
}

pub fn green_lagrange(f: &Mat3) -> Mat3 {
    0.5 * (f.transpose() * f - Mat3::identity())
}

fn checked_det(f: &Mat3, particle: usize) -> Result<f64> {
    let det = f.determinant();
    if det > 0.0 && det.is_finite() {
        Ok(det)
    } else {
        Err(Error::InvertedElement { particle, det })
    }
}

pub fn second_pk(f: &Mat3, mat: &Material) -> Result<Mat3> {
    let j = checked_det(f, 0)?;
    Ok(second_pk_with_det(f, j, mat))
}

#[inline]
pub(crate) fn second_pk_with_det(f: &Mat3, j: f64, mat: &Material) -> Mat3 {
    let id = Mat3::identity();
    let c = f.transpose() * f;
    match mat.model {
        MaterialModel::LinearKirchhoff => {
            let e = 0.5 * (c - id);
            id * (mat.lambda * e.trace()) + e * (2.0 * mat.mu)
        }
        MaterialModel::NeoHookean => {
            // C is SPD whenever det F > 0.
            let c_inv = c.try_inverse().unwrap_or_else(Mat3::zeros);
            (id - c_inv) * mat.mu + c_inv * (mat.lambda * j.ln())
        }
    }
}

pub fn first_pk(f: &Mat3, s: &Mat3) -> Mat3 {
    f * s
}

/// Von Mises equivalent of the Cauchy stress `σ = J⁻¹ P Fᵀ`.
pub fn von_mises(f: &Mat3, p: &Mat3, j: f64) -> Result<f64> {
    if !(j > 0.0) {
        return Err(Error::InvertedElement { particle: 0, det: j });
    }
    let sigma = p * f.transpose() / j;
    Ok(von_mises_of_cauchy(&sigma))
}

pub fn von_mises_of_cauchy(sigma: &Mat3) -> f64 {
    let dev = sigma - Mat3::identity() * (sigma.trace() / 3.0);
    (1.5 * dev.component_mul(&dev).sum()).sqrt()
}

/// Columnar particle state. Reference quantities carry a `0` suffix.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    pub dim: usize,
    pub r0: Vec<Vec3>,
    pub r: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub vol0: Vec<f64>,
    pub mass: Vec<f64>,
    pub rho0: Vec<f64>,
    pub rho: Vec<f64>,
    pub f: Vec<Mat3>,
    pub dfdt: Vec<Mat3>,
    pub b0: Vec<Mat3>,
    pub acc: Vec<Vec3>,
    pub constrained: Vec<bool>,
}

impl ParticleSystem {
    /// Undeformed body at rest with `m = ρ0 V0`.
    pub fn new(dim: usize, positions: Vec<Vec3>, volumes: Vec<f64>, rho0: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if positions.len() != volumes.len() {
            return Err(Error::invalid("positions and volumes differ in length"));
        }
        if volumes.iter().any(|&v| !(v > 0.0)) || !(rho0 > 0.0) {
            return Err(Error::invalid("volumes and density must be positive"));
        }
        if dim == 2 && positions.iter().any(|p| p.z != 0.0) {
            return Err(Error::invalid("two-dimensional particles must have z = 0"));
        }
        let n = positions.len();
        Ok(Self {
            dim,
            r: positions.clone(),
            r0: positions,
            v: vec![Vec3::zeros(); n],
            mass: volumes.iter().map(|v| v * rho0).collect(),
            vol0: volumes,
            rho0: vec![rho0; n],
            rho: vec![rho0; n],
            f: vec![Mat3::identity(); n],
            dfdt: vec![Mat3::zeros(); n],
            b0: vec![Mat3::identity(); n],
            acc: vec![Vec3::zeros(); n],
            constrained: vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.r0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r0.is_empty()
    }

    pub fn displacement(&self, i: usize) -> Vec3 {
        self.r[i] - self.r0[i]
    }

    pub fn total_momentum(&self) -> Vec3 {
        self.v.iter().zip(&self.mass).map(|(v, m)| v * *m).sum()
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.v
            .iter()
            .zip(&self.mass)
            .map(|(v, m)| 0.5 * m * v.norm_squared())
            .sum()
    }

    /// Zeroes the velocity of constrained particles.
    pub fn apply_constraints(&mut self) {
        for (v, &c) in self.v.iter_mut().zip(&self.constrained) {
            if c {
                *v = Vec3::zeros();
            }
        }
    }

    /// Von Mises stress per particle from the current deformation gradients.
    pub fn von_mises_field(&self, mat: &Material) -> Result<Vec<f64>> {
        self.f
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let j = checked_det(f, i)?;
                let p = first_pk(f, &second_pk_with_det(f, j, mat));
                von_mises(f, &p, j)
            })
            .collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        for i in 0..self.len() {
            let ok = self.r[i].iter().all(|x| x.is_finite())
                && self.v[i].iter().all(|x| x.is_finite())
                && self.f[i].iter().all(|x| x.is_finite());
            if !ok {
                return Err(Error::NonFinite { particle: i });
            }
        }
        Ok(())
    }
}
