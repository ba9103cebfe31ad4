//! Total-Lagrangian SPH discretisation and position-Verlet time stepping.
//!
//! All kernel sums run over the fixed reference neighbourhoods. Gradients are
//! corrected by the per-particle matrix `B0`, which makes the discrete
//! gradient exact for affine fields.

use rayon::prelude::*;

use crate::kernel::SmoothingKernel;
use crate::neighbors::{BlockDecomposition, CellGrid, ReferenceNeighborhood};
use crate::state::{first_pk, second_pk_with_det, Material, ParticleSystem};
use crate::{Error, Mat3, Result, Vec3};

/// Largest accepted condition number of a correction matrix.
pub const MAX_CORRECTION_CONDITION: f64 = 1e8;

/// Acoustic/body-force safety factor.
pub const CFL: f64 = 0.6;

/// External acceleration of particle `i` at its current position.
pub trait ExternalForce: Sync {
    fn acceleration(&self, i: usize, r0: &Vec3, r: &Vec3) -> Vec3;
}

impl<F> ExternalForce for F
where
    F: Fn(usize, &Vec3, &Vec3) -> Vec3 + Sync,
{
    fn acceleration(&self, i: usize, r0: &Vec3, r: &Vec3) -> Vec3 {
        self(i, r0, r)
    }
}

/// Zero external acceleration.
pub struct NoForce;

impl ExternalForce for NoForce {
    fn acceleration(&self, _: usize, _: &Vec3, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// A discretised elastic body: particles plus everything fixed at t = 0.
#[derive(Debug, Clone)]
pub struct Body {
    pub system: ParticleSystem,
    pub material: Material,
    pub kernel: SmoothingKernel,
    pub grid: CellGrid,
    pub blocks: BlockDecomposition,
    pub neighborhood: ReferenceNeighborhood,
    /// `P_i B0_i`, refreshed by [`momentum_rhs`].
    pub pk1_b: Vec<Mat3>,
}

impl Body {
    /// Builds the reference grid, neighbourhoods and correction matrices.
    pub fn new(mut system: ParticleSystem, material: Material, kernel: SmoothingKernel) -> Result<Self> {
        if kernel.dim() != system.dim {
            return Err(Error::invalid("kernel and particle system dimensions differ"));
        }
        let grid = CellGrid::build(&system.r0, system.dim, kernel.support_radius())?;
        let blocks = BlockDecomposition::new(&grid);
        let neighborhood = ReferenceNeighborhood::build(&system.r0, &system.vol0, &kernel, &grid)?;
        compute_correction_matrices(&mut system, &neighborhood)?;
        let n = system.len();
        Ok(Self {
            system,
            material,
            kernel,
            grid,
            blocks,
            neighborhood,
            pk1_b: vec![Mat3::zeros(); n],
        })
    }

    pub fn h(&self) -> f64 {
        self.kernel.h()
    }
}

/// `B0_i = (-Σ_j V0_j r0_ij ⊗ ∇0W_ij)^-1`.
pub fn compute_correction_matrices(system: &mut ParticleSystem, nb: &ReferenceNeighborhood) -> Result<()> {
    let dim = system.dim;
    let vol0 = &system.vol0;
    let r0 = &system.r0;
    system.b0.par_iter_mut().enumerate().try_for_each(|(i, b0)| {
        let mut moment = uncorrected_moment(i, r0, vol0, nb);
        if dim == 2 {
            moment[(2, 2)] = 1.0;
        }
        let inverse = moment.try_inverse();
        let condition = inverse.map_or(f64::INFINITY, |inv| moment.norm() * inv.norm());
        match inverse {
            Some(inv) if condition.is_finite() && condition <= MAX_CORRECTION_CONDITION => {
                *b0 = inv;
                Ok(())
            }
            _ => Err(Error::DegenerateNeighborhood { particle: i, condition }),
        }
    })
}

/// `-Σ_j V0_j r0_ij ⊗ ∇0W_ij`.
pub fn uncorrected_moment(i: usize, r0: &[Vec3], vol0: &[f64], nb: &ReferenceNeighborhood) -> Mat3 {
    let mut m = Mat3::zeros();
    for p in nb.of(i) {
        let rij = r0[i] - r0[p.j];
        m -= (rij * vol0[p.j]) * p.grad0.transpose();
    }
    m
}

/// `dF_i/dt = -(Σ_j V0_j v_ij ⊗ ∇0W_ij) B0_i`.
pub fn deformation_rate(system: &mut ParticleSystem, nb: &ReferenceNeighborhood) {
    let v = &system.v;
    let vol0 = &system.vol0;
    let b0 = &system.b0;
    system.dfdt.par_iter_mut().enumerate().for_each(|(i, dfdt)| {
        let mut sum = Mat3::zeros();
        for p in nb.of(i) {
            sum += ((v[i] - v[p.j]) * vol0[p.j]) * p.grad0.transpose();
        }
        *dfdt = -sum * b0[i];
    });
}

/// `ρ_i = ρ0_i / det F_i`.
pub fn update_density(system: &mut ParticleSystem) -> Result<()> {
    let f = &system.f;
    let rho0 = &system.rho0;
    system.rho.par_iter_mut().enumerate().try_for_each(|(i, rho)| {
        let j = f[i].determinant();
        if j > 0.0 {
            *rho = rho0[i] / j;
            Ok(())
        } else {
            Err(Error::InvertedElement { particle: i, det: j })
        }
    })
}

/// Fills `pk1_b[i] = P_i B0_i` from the current deformation gradients.
pub fn compute_stress(system: &ParticleSystem, material: &Material, pk1_b: &mut [Mat3]) -> Result<()> {
    pk1_b.par_iter_mut().enumerate().try_for_each(|(i, out)| {
        let f = &system.f[i];
        let j = f.determinant();
        if !(j > 0.0) {
            return Err(Error::InvertedElement { particle: i, det: j });
        }
        *out = first_pk(f, &second_pk_with_det(f, j, material)) * system.b0[i];
        Ok(())
    })
}

/// `a_i = (2/m_i) Σ_j V0_i V0_j P̃_ij ∇0W_ij + g_i` with
/// `P̃_ij = (P_i B0_i + P_j B0_j) / 2`.
pub fn momentum_rhs(body: &mut Body, external: &dyn ExternalForce) -> Result<()> {
    compute_stress(&body.system, &body.material, &mut body.pk1_b)?;
    let sys = &mut body.system;
    let pk1_b = &body.pk1_b;
    let nb = &body.neighborhood;
    let (vol0, mass, r0, r) = (&sys.vol0, &sys.mass, &sys.r0, &sys.r);
    sys.acc.par_iter_mut().enumerate().for_each(|(i, acc)| {
        *acc = internal_acceleration(i, vol0, mass, pk1_b, nb) + external.acceleration(i, &r0[i], &r[i]);
    });
    Ok(())
}

#[inline]
fn internal_acceleration(i: usize, vol0: &[f64], mass: &[f64], pk1_b: &[Mat3], nb: &ReferenceNeighborhood) -> Vec3 {
    let mut sum = Vec3::zeros();
    for p in nb.of(i) {
        sum += (pk1_b[i] + pk1_b[p.j]) * (p.grad0 * vol0[p.j]);
    }
    sum * (vol0[i] / mass[i])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub acoustic: f64,
    pub viscous_explicit: f64,
    pub viscous_implicit: f64,
    pub dt: f64,
}

/// `dt = 0.6 min(h / (c + |v|max), sqrt(h / |a|max))`, the second bound
/// dropped when all accelerations vanish. Viscous bounds start unlimited.
pub fn stable_dt(system: &ParticleSystem, material: &Material, h: f64) -> StepSizes {
    let v_max = system.v.iter().map(|v| v.norm_squared()).fold(0.0, f64::max).sqrt();
    let a_max = system.acc.iter().map(|a| a.norm_squared()).fold(0.0, f64::max).sqrt();
    let mut bound = h / (material.sound_speed + v_max);
    if a_max > 0.0 {
        bound = bound.min((h / a_max).sqrt());
    }
    let acoustic = CFL * bound;
    StepSizes {
        acoustic,
        viscous_explicit: f64::INFINITY,
        viscous_implicit: f64::INFINITY,
        dt: acoustic,
    }
}

/// One position-Verlet step of the undamped momentum equation.
///
/// Expects `dfdt` consistent with the current velocities (call
/// [`deformation_rate`] after any external velocity change). Accelerations
/// are evaluated at the half-step configuration.
pub fn verlet_step(body: &mut Body, dt: f64, external: &dyn ExternalForce) -> Result<()> {
    half_kick(&mut body.system, dt)?;
    momentum_rhs(body, external)?;

    let sys = &mut body.system;
    sys.v
        .par_iter_mut()
        .zip(sys.acc.par_iter())
        .zip(sys.constrained.par_iter())
        .for_each(|((v, a), &c)| {
            if c {
                *v = Vec3::zeros();
            } else {
                *v += a * dt;
            }
        });

    deformation_rate(sys, &body.neighborhood);
    half_kick(sys, dt)
}

/// `F += dt/2 dF/dt`, `ρ = ρ0 / det F` (pre-kick F), `r += dt/2 v`.
fn half_kick(sys: &mut ParticleSystem, dt: f64) -> Result<()> {
    update_density(sys)?;
    let half = 0.5 * dt;
    sys.f
        .par_iter_mut()
        .zip(sys.dfdt.par_iter())
        .for_each(|(f, dfdt)| *f += dfdt * half);
    sys.r
        .par_iter_mut()
        .zip(sys.v.par_iter())
        .zip(sys.constrained.par_iter())
        .for_each(|((r, v), &c)| {
            if !c {
                *r += v * half;
            }
        });
    Ok(())
}

/// `Σ_i V0_i W(F_i)`.
pub fn strain_energy(system: &ParticleSystem, material: &Material) -> Result<f64> {
    let mut total = 0.0;
    for (f, v0) in system.f.iter().zip(&system.vol0) {
        total += v0 * material.strain_energy_density(f)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::MaterialModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn soft() -> Material {
        Material::from_young_poisson(5e4, 0.45, 1265.0, MaterialModel::NeoHookean).unwrap()
    }

    fn lattice(dim: usize, n: usize, dp: f64) -> ParticleSystem {
        let mut ps = Vec::new();
        let nz = if dim == 3 { n } else { 1 };
        for z in 0..nz {
            for y in 0..n {
                for x in 0..n {
                    ps.push(Vec3::new(x as f64 * dp, y as f64 * dp, z as f64 * dp));
                }
            }
        }
        let vol = vec![dp.powi(dim as i32); ps.len()];
        ParticleSystem::new(dim, ps, vol, 1265.0).unwrap()
    }

    fn body(dim: usize, n: usize, dp: f64) -> Body {
        Body::new(
            lattice(dim, n, dp),
            soft(),
            SmoothingKernel::for_spacing(dp, dim).unwrap(),
        )
        .unwrap()
    }

    fn is_interior(b: &Body, i: usize, n: usize, dp: f64) -> bool {
        let margin = 3.0 * dp;
        let hi = (n - 1) as f64 * dp - margin;
        (0..b.system.dim).all(|a| b.system.r0[i][a] >= margin && b.system.r0[i][a] <= hi)
    }

    fn jittered(dim: usize, n: usize, dp: f64, seed: u64) -> ParticleSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sys = lattice(dim, n, dp);
        for r in sys.r0.iter_mut() {
            for a in 0..dim {
                r[a] += (rng.random::<f64>() - 0.5) * 0.2 * dp;
            }
        }
        sys.r = sys.r0.clone();
        sys
    }

    #[test]
    fn lone_particle_has_singular_correction() {
        let sys = ParticleSystem::new(2, vec![Vec3::zeros()], vec![1.0], 1.0).unwrap();
        let err = Body::new(sys, soft(), SmoothingKernel::new(0.1, 2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateNeighborhood { particle: 0, .. }));
    }

    #[test]
    fn corrected_gradient_is_exact_for_affine_fields() {
        for dim in [2, 3] {
            let (n, dp) = if dim == 2 { (12, 0.1) } else { (8, 0.1) };
            let b = body(dim, n, dp);
            let mut a = Mat3::new(0.3, -1.2, 0.5, 2.0, 0.1, -0.7, 0.4, 0.9, -0.2);
            if dim == 2 {
                a.fixed_view_mut::<3, 1>(0, 2).fill(0.0);
                a.fixed_view_mut::<1, 3>(2, 0).fill(0.0);
            }
            let sys = &b.system;
            for i in 0..sys.len() {
                let mut g = Mat3::zeros();
                for p in b.neighborhood.of(i) {
                    let u_ij = a * (sys.r0[i] - sys.r0[p.j]);
                    g -= (u_ij * sys.vol0[p.j]) * p.grad0.transpose();
                }
                let g = g * sys.b0[i];
                assert!((g - a).norm() <= 1e-10 * a.norm(), "dim {dim} particle {i}");
            }
        }
    }

    #[test]
    fn interior_correction_is_near_identity() {
        let dp = 0.1;
        let b = body(2, 15, dp);
        let centre = 7 * 15 + 7;
        // Independent summation of the moment matrix straight from the kernel.
        let k = SmoothingKernel::for_spacing(dp, 2).unwrap();
        let mut m = Mat3::zeros();
        for j in 0..b.system.len() {
            let d = b.system.r0[centre] - b.system.r0[j];
            let r = d.norm();
            if j != centre && r < k.support_radius() {
                m -= (d * (dp * dp)) * (d / r * k.grad_mag(r).unwrap()).transpose();
            }
        }
        m[(2, 2)] = 1.0;
        let oracle = m.try_inverse().unwrap();
        assert!((b.system.b0[centre] - oracle).norm() < 1e-12);
        let dev = (b.system.b0[centre] - Mat3::identity()).norm();
        assert!(dev < 0.05, "‖B0 - I‖ = {dev}");
    }

    #[test]
    fn uniform_velocity_gives_zero_rate() {
        let mut b = body(3, 6, 0.1);
        b.system.v.iter_mut().for_each(|v| *v = Vec3::new(1.0, -2.0, 0.5));
        deformation_rate(&mut b.system, &b.neighborhood);
        assert!(b.system.dfdt.iter().all(|d| d.norm() < 1e-12));
    }

    #[test]
    fn linear_velocity_field_rate_is_exact() {
        let dp = 0.1;
        let n = 8;
        let mut b = body(3, n, dp);
        let l = Mat3::new(0.1, 0.4, -0.3, 0.2, -0.5, 0.0, 0.7, 0.1, 0.2);
        let shift = Vec3::new(3.0, 1.0, -2.0);
        for i in 0..b.system.len() {
            b.system.v[i] = shift + l * b.system.r0[i];
        }
        deformation_rate(&mut b.system, &b.neighborhood);
        for i in 0..b.system.len() {
            if is_interior(&b, i, n, dp) {
                assert!((b.system.dfdt[i] - l).norm() <= 1e-10);
            }
        }
        // Correction makes boundary particles exact as well.
        assert!(b.system.dfdt.iter().all(|d| (d - l).norm() <= 1e-10));
    }

    #[test]
    fn deformation_rate_matches_direct_summation() {
        let sys = jittered(2, 7, 0.1, 9);
        assert!(sys.len() <= 100);
        let mut b = Body::new(sys, soft(), SmoothingKernel::for_spacing(0.1, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for v in b.system.v.iter_mut() {
            *v = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, 0.0);
        }
        deformation_rate(&mut b.system, &b.neighborhood);
        let k = b.kernel;
        let s = &b.system;
        for i in 0..s.len() {
            let mut sum = Mat3::zeros();
            for j in 0..s.len() {
                let d = s.r0[i] - s.r0[j];
                let r = d.norm();
                if j == i || r >= k.support_radius() {
                    continue;
                }
                let grad = d / r * k.grad_mag(r).unwrap();
                for a in 0..3 {
                    for c in 0..3 {
                        sum[(a, c)] += s.vol0[j] * (s.v[i][a] - s.v[j][a]) * grad[c];
                    }
                }
            }
            let mut oracle = Mat3::zeros();
            for a in 0..3 {
                for c in 0..3 {
                    oracle[(a, c)] = -(0..3).map(|q| sum[(a, q)] * s.b0[i][(q, c)]).sum::<f64>();
                }
            }
            assert!((s.dfdt[i] - oracle).norm() <= 1e-12 * oracle.norm().max(1.0));
        }
    }

    #[test]
    fn density_follows_jacobian() {
        let mut sys = lattice(3, 2, 1.0);
        update_density(&mut sys).unwrap();
        assert!(sys.rho.iter().all(|&r| r == 1265.0));
        sys.f[0] = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        update_density(&mut sys).unwrap();
        assert_eq!(sys.rho[0], 1265.0 / 2.0);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for f in sys.f.iter_mut() {
            loop {
                let cand = Mat3::from_fn(|_, _| rng.random::<f64>() - 0.5) * 0.6 + Mat3::identity() * 1.1;
                let det = cand.determinant();
                if (0.5..=2.0).contains(&det) {
                    *f = cand;
                    break;
                }
            }
        }
        update_density(&mut sys).unwrap();
        for (f, rho) in sys.f.iter().zip(&sys.rho) {
            // cofactor expansion along the first row
            let det = f[(0, 0)] * (f[(1, 1)] * f[(2, 2)] - f[(1, 2)] * f[(2, 1)])
                - f[(0, 1)] * (f[(1, 0)] * f[(2, 2)] - f[(1, 2)] * f[(2, 0)])
                + f[(0, 2)] * (f[(1, 0)] * f[(2, 1)] - f[(1, 1)] * f[(2, 0)]);
            assert!((rho - 1265.0 / det).abs() <= 1e-14 * rho.abs() * 4.0);
        }
        sys.f[1] = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(matches!(
            update_density(&mut sys),
            Err(Error::InvertedElement { particle: 1, .. })
        ));
    }

    #[test]
    fn stress_free_body_has_no_acceleration() {
        let mut b = body(3, 5, 0.1);
        momentum_rhs(&mut b, &NoForce).unwrap();
        assert!(b.system.acc.iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn internal_forces_conserve_momentum() {
        let mut b = Body::new(
            jittered(3, 6, 0.1, 1),
            soft(),
            SmoothingKernel::for_spacing(0.1, 3).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for f in b.system.f.iter_mut() {
            *f = Mat3::identity() + Mat3::from_fn(|_, _| (rng.random::<f64>() - 0.5) * 0.1);
        }
        let g = Vec3::new(0.0, -9.8, 0.0);
        momentum_rhs(&mut b, &|_: usize, _: &Vec3, _: &Vec3| g).unwrap();
        let s = &b.system;
        let net: Vec3 = (0..s.len()).map(|i| (s.acc[i] - g) * s.mass[i]).sum();
        let scale: f64 = (0..s.len()).map(|i| ((s.acc[i] - g) * s.mass[i]).norm()).sum();
        assert!(scale > 0.0);
        assert!(net.norm() <= 1e-10 * scale);
    }

    #[test]
    fn momentum_rhs_matches_three_particle_summation() {
        // Chain along x; P prescribed through F, B0 taken from the solver.
        let dp = 0.1;
        let pos = vec![
            Vec3::zeros(),
            Vec3::new(dp, 0.0, 0.0),
            Vec3::new(2.0 * dp, 0.0, 0.0),
            Vec3::new(0.0, dp, 0.0),
        ];
        let sys = ParticleSystem::new(2, pos, vec![dp * dp; 4], 1000.0).unwrap();
        let mat = Material::from_young_poisson(1e4, 0.3, 1000.0, MaterialModel::LinearKirchhoff).unwrap();
        let mut b = Body::new(sys, mat, SmoothingKernel::for_spacing(dp, 2).unwrap()).unwrap();
        b.system.f[0] = Mat3::new(1.02, 0.01, 0.0, 0.0, 0.99, 0.0, 0.0, 0.0, 1.0);
        b.system.f[2] = Mat3::new(0.97, 0.0, 0.0, 0.03, 1.01, 0.0, 0.0, 0.0, 1.0);
        momentum_rhs(&mut b, &NoForce).unwrap();
        let s = &b.system;
        let k = b.kernel;
        let pb: Vec<Mat3> = (0..4)
            .map(|i| s.f[i] * crate::state::second_pk(&s.f[i], &mat).unwrap() * s.b0[i])
            .collect();
        for i in 0..4 {
            let mut oracle = Vec3::zeros();
            for j in 0..4 {
                let d = s.r0[i] - s.r0[j];
                let r = d.norm();
                if i == j || r >= k.support_radius() {
                    continue;
                }
                let grad = d / r * k.grad_mag(r).unwrap();
                let avg = (pb[i] + pb[j]) * 0.5;
                oracle += avg * grad * (2.0 * s.vol0[i] * s.vol0[j] / s.mass[i]);
            }
            assert!((s.acc[i] - oracle).norm() <= 1e-12 * oracle.norm().max(1e-12));
        }
    }

    #[test]
    fn stable_dt_matches_cantilever_arithmetic() {
        let mut sys = lattice(3, 2, 1.0);
        sys.acc.iter_mut().for_each(|a| *a = Vec3::new(0.0, -9.8, 0.0));
        let mat = soft();
        let h = 1.3 * 0.04 / 6.0;
        let s = stable_dt(&sys, &mat, h);
        let expected = 0.6 * (h / mat.sound_speed).min((h / 9.8).sqrt());
        assert!((s.dt - expected).abs() < 1e-15);
        assert!((s.dt - 4.53e-4).abs() < 0.01 * 4.53e-4);

        sys.acc.iter_mut().for_each(|a| *a = Vec3::zeros());
        let s0 = stable_dt(&sys, &mat, h);
        assert!((s0.dt - 0.6 * h / mat.sound_speed).abs() < 1e-18);
        let mut stiff = mat;
        stiff.sound_speed *= 2.0;
        assert!((stable_dt(&sys, &stiff, h).dt - 0.5 * s0.dt).abs() < 1e-18);
    }

    #[test]
    fn free_particle_constant_acceleration_is_exact() {
        let mut b = body(2, 4, 0.1);
        let g = Vec3::new(0.3, -9.8, 0.0);
        let v0 = Vec3::new(1.0, 2.0, 0.0);
        b.system.v.iter_mut().for_each(|v| *v = v0);
        deformation_rate(&mut b.system, &b.neighborhood);
        let r_before = b.system.r.clone();
        let dt = 1e-3;
        verlet_step(&mut b, dt, &|_: usize, _: &Vec3, _: &Vec3| g).unwrap();
        for ((v, r), r0) in b.system.v.iter().zip(&b.system.r).zip(&r_before) {
            assert!((v - (v0 + g * dt)).norm() < 1e-14);
            assert!((r - (r0 + v0 * dt + g * (0.5 * dt * dt))).norm() < 1e-14);
        }
    }

    #[test]
    fn rest_state_is_a_fixed_point() {
        let mut b = body(3, 4, 0.1);
        let before = b.system.clone();
        for _ in 0..10 {
            verlet_step(&mut b, 1e-4, &NoForce).unwrap();
        }
        assert_eq!(before.r, b.system.r);
        assert_eq!(before.v, b.system.v);
        assert_eq!(before.f, b.system.f);
    }

    #[test]
    fn momentum_is_conserved_over_many_steps() {
        let mut b = body(2, 6, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for v in b.system.v.iter_mut() {
            *v = Vec3::new(0.05, 0.01, 0.0)
                + Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, 0.0) * 2e-3;
        }
        let p0 = b.system.total_momentum();
        deformation_rate(&mut b.system, &b.neighborhood);
        let mat = b.material;
        for _ in 0..1000 {
            let dt = stable_dt(&b.system, &mat, b.h()).dt;
            verlet_step(&mut b, dt, &NoForce).unwrap();
        }
        let p1 = b.system.total_momentum();
        assert!((p1 - p0).norm() <= 1e-12 * p0.norm());
    }
}
