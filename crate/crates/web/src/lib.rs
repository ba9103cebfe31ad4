//! Browser bindings: kernel profile, cell-block colouring and a live 2D
//! cantilever relaxing under gravity.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg`.

use sphrelax::cases::{generate_box_lattice, Forcing, CLAMP_LAYERS, GRAVITY};
use sphrelax::damping::{
    apply_damping, artificial_viscosity, limit_step, random_choice_eta, DampingConfig, DampingScheme, RandomSource,
};
use sphrelax::kernel::SmoothingKernel;
use sphrelax::neighbors::{block_of, BlockDecomposition};
use sphrelax::state::{Material, MaterialModel};
use sphrelax::tlsph::{deformation_rate, momentum_rhs, stable_dt, verlet_step, Body};
use sphrelax::{Error, Result, Vec3};
use wasm_bindgen::prelude::*;

/// `[q, W h^dim, dW/dr h^(dim+1)]` triples at `samples` points over `q ∈ [0, 2]`.
pub fn kernel_samples(dim: usize, samples: usize) -> Result<Vec<f64>> {
    let kernel = SmoothingKernel::new(1.0, dim)?;
    let n = samples.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let q = 2.0 * k as f64 / (n - 1) as f64;
        out.extend([q, kernel.value(q)?, kernel.grad_mag(q)?]);
    }
    Ok(out)
}

/// Block id of every cell of an `nx` by `ny` grid, x fastest.
pub fn grid_blocks(nx: usize, ny: usize) -> Vec<u32> {
    let mut ids = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            ids.push(block_of([ix, iy, 0]) as u32);
        }
    }
    ids
}

/// Cells of each block in sweep order, flattened with a `-1` after each block.
pub fn sweep_order(nx: usize, ny: usize) -> Vec<i32> {
    let blocks = BlockDecomposition::from_dims(2, [nx.max(1), ny.max(1), 1]);
    let mut out = Vec::new();
    for block in blocks.blocks() {
        out.extend(block.iter().map(|&c| c as i32));
        out.push(-1);
    }
    out
}

const BEAM_LENGTH: f64 = 0.1;
const BEAM_THICKNESS: f64 = 0.04;

/// Plane-strain cantilever clamped at `x < 0`, sagging under gravity.
pub struct Beam {
    body: Body,
    forcing: Forcing,
    damping: DampingConfig,
    rng: RandomSource,
    tip: usize,
    time: f64,
    steps: u64,
    damped_steps: u64,
    scratch: Vec<Vec3>,
}

impl Beam {
    pub fn new(resolution: usize, scheme: DampingScheme, eta_scale: f64, alpha: f64, seed: u64) -> Result<Self> {
        if !(2..=16).contains(&resolution) {
            return Err(Error::InvalidArgument(format!(
                "resolution must lie in 2..=16, got {resolution}"
            )));
        }
        let dp = BEAM_THICKNESS / resolution as f64;
        let root = CLAMP_LAYERS as f64 * dp;
        let lo = Vec3::new(-root, -0.5 * BEAM_THICKNESS, 0.0);
        let block = generate_box_lattice(lo, &[BEAM_LENGTH + root, BEAM_THICKNESS], dp)?;
        let (rho0, youngs) = (1265.0, 5e4);
        let mut system = block.into_system(rho0)?;
        for (c, r) in system.constrained.iter_mut().zip(&system.r0) {
            *c = r.x < 0.0;
        }
        let tip = system
            .r0
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1 - Vec3::new(BEAM_LENGTH, 0.0, 0.0)).norm();
                let db = (b.1 - Vec3::new(BEAM_LENGTH, 0.0, 0.0)).norm();
                da.total_cmp(&db)
            })
            .map_or(0, |(i, _)| i);
        let material = Material::from_young_poisson(youngs, 0.45, rho0, MaterialModel::NeoHookean)?;
        let forcing = Forcing::new(
            vec![Vec3::new(0.0, -GRAVITY, 0.0); system.len()],
            None,
            system.mass.clone(),
        );
        let mut body = Body::new(system, material, SmoothingKernel::for_spacing(dp, 2)?)?;
        momentum_rhs(&mut body, &forcing)?;
        let eta0 = artificial_viscosity(0.4, rho0, youngs, BEAM_THICKNESS);
        let damping = DampingConfig::new(scheme, eta0 * eta_scale, alpha, seed)?;
        Ok(Self {
            body,
            forcing,
            rng: RandomSource::new(seed),
            damping,
            tip,
            time: 0.0,
            steps: 0,
            damped_steps: 0,
            scratch: Vec::new(),
        })
    }

    /// Steps until `duration` of simulated time has passed.
    pub fn advance(&mut self, duration: f64) -> Result<u64> {
        let target = self.time + duration;
        let mut taken = 0;
        while self.time < target {
            let sys = &self.body.system;
            let mut sizes = stable_dt(sys, &self.body.material, self.body.h());
            if self.damping.is_active() {
                limit_step(
                    &mut sizes,
                    self.damping.scheme,
                    self.damping.peak_eta(),
                    self.body.material.rho0,
                    self.body.h(),
                    2,
                );
            }
            verlet_step(&mut self.body, sizes.dt, &self.forcing)?;
            if self.damping.is_active() {
                let eta = random_choice_eta(self.damping.eta, self.damping.alpha, &mut self.rng);
                if eta > 0.0 {
                    apply_damping(
                        &mut self.body,
                        self.damping.scheme,
                        eta,
                        sizes.dt,
                        false,
                        &mut self.scratch,
                    );
                    deformation_rate(&mut self.body.system, &self.body.neighborhood);
                    self.damped_steps += 1;
                }
            }
            self.body.system.check_finite()?;
            self.time += sizes.dt;
            self.steps += 1;
            taken += 1;
        }
        Ok(taken)
    }

    pub fn positions(&self) -> Vec<f64> {
        self.body.system.r.iter().flat_map(|r| [r.x, r.y]).collect()
    }

    pub fn von_mises(&self) -> Result<Vec<f64>> {
        self.body.system.von_mises_field(&self.body.material)
    }

    pub fn tip_deflection(&self) -> f64 {
        self.body.system.displacement(self.tip).y
    }
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = kernelProfile)]
pub fn kernel_profile(dim: u32, samples: u32) -> std::result::Result<Vec<f64>, JsError> {
    kernel_samples(dim as usize, samples as usize).map_err(js)
}

#[wasm_bindgen(js_name = blockColouring)]
pub fn block_colouring(nx: u32, ny: u32) -> Vec<u32> {
    grid_blocks(nx as usize, ny as usize)
}

#[wasm_bindgen(js_name = sweepOrder)]
pub fn js_sweep_order(nx: u32, ny: u32) -> Vec<i32> {
    sweep_order(nx as usize, ny as usize)
}

#[wasm_bindgen]
pub struct BeamDemo(Beam);

#[wasm_bindgen]
impl BeamDemo {
    /// `scheme`: none, explicit, particle_split or pairwise_split.
    #[wasm_bindgen(constructor)]
    pub fn new(
        resolution: u32,
        scheme: &str,
        eta_scale: f64,
        alpha: f64,
        seed: u32,
    ) -> std::result::Result<BeamDemo, JsError> {
        let scheme = DampingScheme::parse(scheme).ok_or_else(|| JsError::new(&format!("unknown scheme '{scheme}'")))?;
        Beam::new(resolution as usize, scheme, eta_scale, alpha, seed as u64)
            .map(BeamDemo)
            .map_err(js)
    }

    pub fn advance(&mut self, duration: f64) -> std::result::Result<u32, JsError> {
        self.0.advance(duration).map(|n| n as u32).map_err(js)
    }

    pub fn positions(&self) -> Vec<f64> {
        self.0.positions()
    }

    #[wasm_bindgen(js_name = vonMises)]
    pub fn von_mises(&self) -> std::result::Result<Vec<f64>, JsError> {
        self.0.von_mises().map_err(js)
    }

    #[wasm_bindgen(js_name = tipDeflection)]
    pub fn tip_deflection(&self) -> f64 {
        self.0.tip_deflection()
    }

    pub fn time(&self) -> f64 {
        self.0.time
    }

    pub fn steps(&self) -> f64 {
        self.0.steps as f64
    }

    #[wasm_bindgen(js_name = dampedSteps)]
    pub fn damped_steps(&self) -> f64 {
        self.0.damped_steps as f64
    }

    #[wasm_bindgen(js_name = clampedCount)]
    pub fn clamped_count(&self) -> u32 {
        self.0.body.system.constrained.iter().filter(|&&c| c).count() as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_profile_shape() {
        let s = kernel_samples(2, 41).unwrap();
        assert_eq!(s.len(), 123);
        assert!((s[1] - 7.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert_eq!(s[2], 0.0);
        assert_eq!(s[120], 2.0);
        assert!(s[121].abs() < 1e-15);
        assert!(s.chunks(3).all(|t| t[2] <= 0.0));
    }

    #[test]
    fn colouring_repeats_every_three_cells() {
        let ids = grid_blocks(9, 6);
        assert_eq!(&ids[..9], &[0, 1, 2, 0, 1, 2, 0, 1, 2]);
        assert_eq!(ids[9], 3);
        assert_eq!(ids[27], 0);
        let order = sweep_order(9, 6);
        let first: Vec<i32> = order.iter().copied().take_while(|&c| c >= 0).collect();
        assert_eq!(first, vec![0, 3, 6, 27, 30, 33]);
        assert_eq!(order.iter().filter(|&&c| c < 0).count(), 9);
    }

    #[test]
    fn damped_beam_sags_and_settles() {
        let mut damped = Beam::new(4, DampingScheme::ParticleSplit, 1.0, 0.2, 1).unwrap();
        damped.advance(1.0).unwrap();
        let u = damped.tip_deflection();
        assert!(u < -1e-3, "{u}");
        let before = u;
        damped.advance(0.2).unwrap();
        assert!((damped.tip_deflection() - before).abs() < 0.01 * before.abs());
        assert!(damped.damped_steps > 0 && damped.damped_steps < damped.steps);
        assert_eq!(damped.positions().len(), 2 * damped.body.system.len());
        assert!(damped.von_mises().unwrap().iter().all(|&s| s >= 0.0));
        assert!(Beam::new(1, DampingScheme::None, 1.0, 1.0, 0).is_err());
    }
}
