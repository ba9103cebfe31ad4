//! Artificial-viscosity damping for dynamic relaxation.
//!
//! The viscous term `η ∇0² v` is split off the momentum equation and applied
//! after each elastic step. Three integrators are provided:
//!
//! * explicit: plain forward Euler of the discrete Laplacian, limited by
//!   `dt <= 0.5 h² / (ν D)`;
//! * particle split: each particle solves its local implicit system along the
//!   gradient direction, then corrects its neighbours so momentum is conserved;
//! * pairwise split: each particle pair is solved exactly as a 2x2 implicit
//!   system, unconditionally stable.
//!
//! The split operators are composed in a forward-then-backward (Strang) sweep
//! over all particles, scheduled through the coloured cell blocks so cells of
//! the same block can run on different threads.
//!
//! With random choice, the damping of a time step is applied with probability
//! `α` at strength `η / α`, otherwise skipped, so its expectation stays `η`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::neighbors::{
    block_sweep, BlockDecomposition, CellGrid, NeighborPair, ReferenceNeighborhood, Schedule, StencilView,
    SweepDirection,
};
use crate::tlsph::{Body, StepSizes};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingScheme {
    None,
    Explicit,
    ParticleSplit,
    PairwiseSplit,
}

impl DampingScheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" | "off" => Some(Self::None),
            "explicit" => Some(Self::Explicit),
            "particle_split" | "particle" | "split" => Some(Self::ParticleSplit),
            "pairwise_split" | "pairwise" => Some(Self::PairwiseSplit),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Explicit => "explicit",
            Self::ParticleSplit => "particle_split",
            Self::PairwiseSplit => "pairwise_split",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingConfig {
    pub scheme: DampingScheme,
    /// Artificial dynamic viscosity η [kg/(m s)].
    pub eta: f64,
    /// Probability of applying the damping in a given step.
    pub alpha: f64,
    pub seed: u64,
}

impl DampingConfig {
    pub fn new(scheme: DampingScheme, eta: f64, alpha: f64, seed: u64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("viscosity must be non-negative, got {eta}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self {
            scheme,
            eta,
            alpha,
            seed,
        })
    }

    /// Viscosity from the body-shape parameter β and length scale `L`.
    pub fn from_shape(
        scheme: DampingScheme,
        beta: f64,
        rho0: f64,
        youngs_modulus: f64,
        length: f64,
        alpha: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::new(
            scheme,
            artificial_viscosity(beta, rho0, youngs_modulus, length),
            alpha,
            seed,
        )
    }

    pub fn undamped() -> Self {
        Self {
            scheme: DampingScheme::None,
            eta: 0.0,
            alpha: 1.0,
            seed: 0,
        }
    }

    /// `ν = η / ρ0`.
    pub fn kinematic_viscosity(&self, rho0: f64) -> f64 {
        self.eta / rho0
    }

    pub fn is_active(&self) -> bool {
        self.scheme != DampingScheme::None && self.eta > 0.0
    }

    /// Largest viscosity a single step can apply, `η / α`.
    pub fn peak_eta(&self) -> f64 {
        self.eta / self.alpha
    }
}

/// `η = (β/4) sqrt(ρ0 E) L`.
pub fn artificial_viscosity(beta: f64, rho0: f64, youngs_modulus: f64, length: f64) -> f64 {
    0.25 * beta * (rho0 * youngs_modulus).sqrt() * length
}

/// `(0.5 h² / (ν D), 50 h² / (ν D))`: explicit and implicit viscous limits.
pub fn viscous_dt_bounds(h: f64, nu_kin: f64, dim: usize) -> (f64, f64) {
    let base = h * h / (nu_kin * dim as f64);
    (0.5 * base, 50.0 * base)
}

/// Tightens `steps.dt` with the viscous limit of `scheme` at viscosity `eta`.
pub fn limit_step(steps: &mut StepSizes, scheme: DampingScheme, eta: f64, rho0: f64, h: f64, dim: usize) {
    if eta <= 0.0 || scheme == DampingScheme::None {
        return;
    }
    let (explicit, implicit) = viscous_dt_bounds(h, eta / rho0, dim);
    steps.viscous_explicit = explicit;
    steps.viscous_implicit = implicit;
    steps.dt = match scheme {
        DampingScheme::Explicit => steps.acoustic.min(explicit),
        DampingScheme::ParticleSplit => steps.acoustic.min(implicit),
        DampingScheme::PairwiseSplit | DampingScheme::None => steps.acoustic,
    };
}

/// Seedable stream of uniforms in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct RandomSource(ChaCha8Rng);

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }
}

/// `η / α` with probability `α`, else zero.
pub fn random_choice_eta(eta: f64, alpha: f64, rng: &mut RandomSource) -> f64 {
    let phi = rng.uniform();
    if phi < alpha {
        eta / alpha
    } else {
        0.0
    }
}

/// Read/write access to particle velocities for the local operators.
pub trait VelocityAccess {
    fn get(&self, i: usize) -> Vec3;
    fn set(&mut self, i: usize, v: Vec3);
}

impl VelocityAccess for [Vec3] {
    #[inline]
    fn get(&self, i: usize) -> Vec3 {
        self[i]
    }

    #[inline]
    fn set(&mut self, i: usize, v: Vec3) {
        self[i] = v;
    }
}

impl VelocityAccess for StencilView<'_, Vec3> {
    #[inline]
    fn get(&self, i: usize) -> Vec3 {
        StencilView::get(self, i)
    }

    #[inline]
    fn set(&mut self, i: usize, v: Vec3) {
        StencilView::set(self, i, v)
    }
}

/// `a_i = (η / m_i) Σ_j G_ij v_ij`, the explicit viscous acceleration.
pub fn explicit_damping_accel(v: &[Vec3], mass: &[f64], nb: &ReferenceNeighborhood, eta: f64, out: &mut [Vec3]) {
    out.par_iter_mut().enumerate().for_each(|(i, a)| {
        let mut sum = Vec3::zeros();
        for p in nb.of(i) {
            sum += (v[i] - v[p.j]) * p.pair_factor;
        }
        *a = sum * (eta / mass[i]);
    });
}

/// Forward-Euler application of the explicit viscous term.
pub fn explicit_damping_step(body: &mut Body, eta: f64, dt: f64, scratch: &mut Vec<Vec3>) {
    let sys = &mut body.system;
    scratch.resize(sys.len(), Vec3::zeros());
    explicit_damping_accel(&sys.v, &sys.mass, &body.neighborhood, eta, scratch);
    sys.v
        .par_iter_mut()
        .zip(scratch.par_iter())
        .zip(sys.constrained.par_iter())
        .for_each(|((v, a), &c)| {
            if !c {
                *v += a * dt;
            }
        });
}

/// Gradient-descent step of particle `i`'s local implicit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSolve {
    /// `Σ_j B_j`
    pub sum_b: f64,
    /// `E_i = -Σ_j B_j v_ij`
    pub residual: Vec3,
    /// `k = E_i / ((Σ B_j - m_i)² + Σ B_j²)`
    pub rate: Vec3,
}

impl LocalSolve {
    pub fn new(
        i: usize,
        vel: &(impl VelocityAccess + ?Sized),
        mass_i: f64,
        pairs: &[NeighborPair],
        eta: f64,
        dt: f64,
    ) -> Self {
        let vi = vel.get(i);
        let mut sum_b = 0.0;
        let mut sum_b2 = 0.0;
        let mut residual = Vec3::zeros();
        for p in pairs {
            let b = eta * p.pair_factor * dt;
            sum_b += b;
            sum_b2 += b * b;
            residual -= (vi - vel.get(p.j)) * b;
        }
        let diag = sum_b - mass_i;
        let rate = residual / (diag * diag + sum_b2);
        Self { sum_b, residual, rate }
    }

    /// Predicted increment of particle `i`, `(Σ B_j - m_i) k`.
    pub fn own_increment(&self, mass_i: f64) -> Vec3 {
        self.rate * (self.sum_b - mass_i)
    }
}

/// Particle-by-particle implicit damping of particle `i` over `dt`.
///
/// Step one moves `v_i` along the gradient of its local residual and predicts
/// neighbour increments; step two sets each neighbour from its prediction so
/// that total momentum is unchanged. Writes to constrained particles are
/// discarded, so they act as zero-velocity neighbours.
pub fn particle_split_update(
    i: usize,
    vel: &mut (impl VelocityAccess + ?Sized),
    mass: &[f64],
    constrained: &[bool],
    pairs: &[NeighborPair],
    eta: f64,
    dt: f64,
) {
    if pairs.is_empty() {
        return;
    }
    let solve = LocalSolve::new(i, vel, mass[i], pairs, eta, dt);
    let vi_new = vel.get(i) + solve.own_increment(mass[i]);
    if !constrained[i] {
        vel.set(i, vi_new);
    }
    for p in pairs {
        if constrained[p.j] {
            continue;
        }
        let b = eta * p.pair_factor * dt;
        let vj = vel.get(p.j);
        let vj_pred = vj - solve.rate * b;
        vel.set(p.j, vj - (vi_new - vj_pred) * (b / mass[p.j]));
    }
}

/// Exact solution of the implicit pair system
/// `m_i dv_i = B (v_ij + dv_i - dv_j)`, `m_j dv_j = -B (v_ij + dv_i - dv_j)`.
#[inline]
pub fn pairwise_increments(mass_i: f64, mass_j: f64, b: f64, v_ij: Vec3) -> (Vec3, Vec3) {
    let denom = mass_i * mass_j - (mass_i + mass_j) * b;
    debug_assert!(denom > 0.0, "pair damping coefficient must be non-positive");
    let s = v_ij * (b / denom);
    (s * mass_j, -s * mass_i)
}

/// One pair sub-operator over `dt`.
pub fn pairwise_split_update(
    i: usize,
    pair: &NeighborPair,
    vel: &mut (impl VelocityAccess + ?Sized),
    mass: &[f64],
    constrained: &[bool],
    eta: f64,
    dt: f64,
) {
    let j = pair.j;
    let vi = vel.get(i);
    let vj = vel.get(j);
    let (dvi, dvj) = pairwise_increments(mass[i], mass[j], eta * pair.pair_factor * dt, vi - vj);
    if !constrained[i] {
        vel.set(i, vi + dvi);
    }
    if !constrained[j] {
        vel.set(j, vj + dvj);
    }
}

/// Particle `i`'s pairwise operator over `dt`: its pair sub-operators over
/// `dt/2` in ascending neighbour order, then in descending order.
pub fn pairwise_particle_update(
    i: usize,
    vel: &mut (impl VelocityAccess + ?Sized),
    mass: &[f64],
    constrained: &[bool],
    pairs: &[NeighborPair],
    eta: f64,
    dt: f64,
) {
    let sub = 0.5 * dt;
    for p in pairs {
        pairwise_split_update(i, p, vel, mass, constrained, eta, sub);
    }
    for p in pairs.iter().rev() {
        pairwise_split_update(i, p, vel, mass, constrained, eta, sub);
    }
}

/// Applies the damping operator of `scheme` at viscosity `eta` over `dt`.
///
/// Split schemes sweep every particle's local operator over `dt/2` forwards
/// and then backwards through the cell blocks. A zero `eta` is a no-op.
pub fn apply_damping(
    body: &mut Body,
    scheme: DampingScheme,
    eta: f64,
    dt: f64,
    parallel: bool,
    scratch: &mut Vec<Vec3>,
) {
    if eta == 0.0 {
        return;
    }
    match scheme {
        DampingScheme::None => {}
        DampingScheme::Explicit => explicit_damping_step(body, eta, dt, scratch),
        DampingScheme::ParticleSplit | DampingScheme::PairwiseSplit => {
            strang_damping_sweep(body, scheme, eta, dt, parallel)
        }
    }
}

pub fn strang_damping_sweep(body: &mut Body, scheme: DampingScheme, eta: f64, dt: f64, parallel: bool) {
    let sys = &mut body.system;
    let fields = DampedFields {
        mass: &sys.mass,
        constrained: &sys.constrained,
        neighborhood: &body.neighborhood,
    };
    sweep_velocities(&body.grid, &body.blocks, &fields, &mut sys.v, scheme, eta, dt, parallel);
}

/// Read-only particle data used by the local damping operators.
#[derive(Clone, Copy)]
pub struct DampedFields<'a> {
    pub mass: &'a [f64],
    pub constrained: &'a [bool],
    pub neighborhood: &'a ReferenceNeighborhood,
}

/// Strang sweep of the split operator of `scheme` over raw velocity data:
/// every particle's operator over `dt/2` in ascending order through the cell
/// blocks, then over `dt/2` in descending order.
#[allow(clippy::too_many_arguments)]
pub fn sweep_velocities(
    grid: &CellGrid,
    blocks: &BlockDecomposition,
    fields: &DampedFields<'_>,
    v: &mut [Vec3],
    scheme: DampingScheme,
    eta: f64,
    dt: f64,
    parallel: bool,
) {
    if eta == 0.0 || !matches!(scheme, DampingScheme::ParticleSplit | DampingScheme::PairwiseSplit) {
        return;
    }
    let half = 0.5 * dt;
    let DampedFields {
        mass,
        constrained,
        neighborhood: nb,
    } = *fields;
    block_sweep(
        grid,
        blocks,
        v,
        Schedule::ForwardThenReverse,
        parallel,
        |view: &mut StencilView<'_, Vec3>| {
            let own = view.cell_particles();
            let forward = view.direction() == SweepDirection::Forward;
            for k in 0..own.len() {
                let i = if forward { own[k] } else { own[own.len() - 1 - k] };
                if scheme == DampingScheme::ParticleSplit {
                    particle_split_update(i, view, mass, constrained, nb.of(i), eta, half);
                } else {
                    pairwise_particle_update(i, view, mass, constrained, nb.of(i), eta, half);
                }
            }
        },
    );
}
