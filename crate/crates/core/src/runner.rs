//! Time loop: elastic step, random-choice damping, output, timing.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::cases::{CaseSpec, Forcing};
use crate::damping::{apply_damping, limit_step, random_choice_eta, DampingConfig, RandomSource};
use crate::output::{write_probe_file, write_snapshot_file, ProbeSeries};
use crate::tlsph::{deformation_rate, momentum_rhs, stable_dt, strain_energy, verlet_step, Body, StepSizes};
use crate::{Error, Result, Vec3};

/// Accumulated wall time per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub neighbor_build: Duration,
    pub elastic: Duration,
    pub damping: Duration,
    pub output: Duration,
}

impl PhaseTimes {
    pub fn sum(&self) -> Duration {
        self.neighbor_build + self.elastic + self.damping + self.output
    }
}

/// A body advancing in time under its forcing and damping.
pub struct Simulation {
    pub body: Body,
    pub forcing: Forcing,
    pub probes: Vec<usize>,
    pub damping: DampingConfig,
    pub time: f64,
    pub steps: usize,
    pub damped_steps: usize,
    pub timings: PhaseTimes,
    /// Run cell blocks concurrently in the damping sweep.
    pub parallel: bool,
    /// Honour the viscous step limit of the damping scheme.
    pub viscous_limit: bool,
    rng: RandomSource,
    scratch: Vec<Vec3>,
}

impl Simulation {
    pub fn new(mut body: Body, forcing: Forcing, probes: Vec<usize>, damping: DampingConfig) -> Result<Self> {
        if let Some(&p) = probes.iter().find(|&&p| p >= body.system.len()) {
            return Err(Error::invalid(format!("probe particle {p} does not exist")));
        }
        deformation_rate(&mut body.system, &body.neighborhood);
        momentum_rhs(&mut body, &forcing)?;
        Ok(Self {
            body,
            forcing,
            probes,
            rng: RandomSource::new(damping.seed),
            damping,
            time: 0.0,
            steps: 0,
            damped_steps: 0,
            timings: PhaseTimes::default(),
            parallel: true,
            viscous_limit: true,
            scratch: Vec::new(),
        })
    }

    /// Discretises `spec` with its own damping configuration.
    pub fn from_case(spec: &CaseSpec) -> Result<Self> {
        let start = Instant::now();
        let setup = spec.build()?;
        let mut sim = Self::new(setup.body, setup.forcing, setup.probes, spec.damping)?;
        sim.timings.neighbor_build = start.elapsed();
        Ok(sim)
    }

    /// Step sizes for the current state. The viscous limit uses the peak
    /// viscosity `η / α` so the step does not depend on the random draw.
    pub fn step_sizes(&self) -> StepSizes {
        let sys = &self.body.system;
        let mut steps = stable_dt(sys, &self.body.material, self.body.h());
        if self.viscous_limit && self.damping.is_active() {
            limit_step(
                &mut steps,
                self.damping.scheme,
                self.damping.peak_eta(),
                self.body.material.rho0,
                self.body.h(),
                sys.dim,
            );
        }
        steps
    }

    /// Advances by one step of size `dt`. Returns whether damping was applied.
    pub fn step(&mut self, dt: f64) -> Result<bool> {
        let result = self.step_inner(dt);
        result.map_err(|e| Error::SolverFailure {
            step: self.steps + 1,
            time: self.time,
            source: Box::new(e),
        })
    }

    fn step_inner(&mut self, dt: f64) -> Result<bool> {
        let start = Instant::now();
        verlet_step(&mut self.body, dt, &self.forcing)?;
        self.timings.elastic += start.elapsed();

        let mut damped = false;
        if self.damping.is_active() {
            let start = Instant::now();
            let eta = random_choice_eta(self.damping.eta, self.damping.alpha, &mut self.rng);
            if eta > 0.0 {
                apply_damping(
                    &mut self.body,
                    self.damping.scheme,
                    eta,
                    dt,
                    self.parallel,
                    &mut self.scratch,
                );
                deformation_rate(&mut self.body.system, &self.body.neighborhood);
                self.damped_steps += 1;
                damped = true;
            }
            self.timings.damping += start.elapsed();
        }
        self.body.system.check_finite()?;
        self.steps += 1;
        self.time += dt;
        Ok(damped)
    }

    /// Advances with the stable step until `time >= t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.time < t_end {
            let dt = self.step_sizes().dt;
            self.step(dt)?;
        }
        Ok(())
    }

    pub fn probe_displacement(&self, k: usize) -> Vec3 {
        self.body.system.displacement(self.probes[k])
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.body.system.kinetic_energy()
    }

    pub fn strain_energy(&self) -> Result<f64> {
        strain_energy(&self.body.system, &self.body.material)
    }
}

/// Everything `run` needs beyond the case itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseSpec,
    /// Worker threads; 0 uses all available.
    pub threads: usize,
    pub output_dir: Option<PathBuf>,
}

/// Trailing-window steadiness of a probe component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub mean: f64,
    pub range: f64,
    pub reached: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub case: String,
    pub particles: usize,
    pub threads: usize,
    pub steps: usize,
    pub damped_steps: usize,
    pub final_time: f64,
    pub phases: PhaseTimes,
    pub total_wall: Duration,
    pub probes: Vec<ProbeSeries>,
    pub final_displacements: Vec<Vec3>,
    pub kinetic_energy: f64,
    /// Steadiness of the dominant displacement component of the first probe.
    pub steady: Option<SteadyState>,
}

impl RunReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "case {}: {} particles, {} threads\nsteps {} (damped {}), t = {:.6} s\n",
            self.case, self.particles, self.threads, self.steps, self.damped_steps, self.final_time
        );
        s += &format!(
            "wall time {:.3} s: neighbours {:.3} s, elastic {:.3} s, damping {:.3} s, output {:.3} s\n",
            self.total_wall.as_secs_f64(),
            self.phases.neighbor_build.as_secs_f64(),
            self.phases.elastic.as_secs_f64(),
            self.phases.damping.as_secs_f64(),
            self.phases.output.as_secs_f64()
        );
        for (k, u) in self.final_displacements.iter().enumerate() {
            s += &format!(
                "probe {k} (particle {}): u = ({:.6e}, {:.6e}, {:.6e}) m\n",
                self.probes[k].particle, u.x, u.y, u.z
            );
        }
        s += &format!("kinetic energy {:.6e} J\n", self.kinetic_energy);
        if let Some(st) = self.steady {
            s += &format!(
                "steady: {} (trailing mean {:.6e}, range {:.3e})\n",
                if st.reached { "yes" } else { "no" },
                st.mean,
                st.range
            );
        }
        s
    }
}

/// Runs a case to its end time inside a pool of `threads` workers.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
    pool.install(|| run_in_pool(config, pool.current_num_threads()))
}

fn run_in_pool(config: &RunConfig, threads: usize) -> Result<RunReport> {
    let wall = Instant::now();
    let spec = &config.case;
    let mut sim = Simulation::from_case(spec)?;
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
    }
    let mut series: Vec<ProbeSeries> = sim.probes.iter().map(|&p| ProbeSeries::new(p)).collect();
    let record = |sim: &Simulation, series: &mut Vec<ProbeSeries>| {
        for (k, s) in series.iter_mut().enumerate() {
            s.push(sim.time, sim.probe_displacement(k));
        }
    };
    record(&sim, &mut series);
    if let Some(dir) = &config.output_dir {
        let start = Instant::now();
        write_snapshot_file(&sim.body.system, &sim.body.material, &dir.join("snapshot_initial.csv"))?;
        sim.timings.output += start.elapsed();
    }

    let mut next_output = spec.output_interval;
    while sim.time < spec.end_time {
        let dt = sim.step_sizes().dt;
        sim.step(dt)?;
        if sim.time >= next_output * (1.0 - 1e-12) || sim.time >= spec.end_time {
            record(&sim, &mut series);
            while next_output <= sim.time * (1.0 + 1e-12) {
                next_output += spec.output_interval;
            }
        }
    }

    if let Some(dir) = &config.output_dir {
        let start = Instant::now();
        for (k, s) in series.iter().enumerate() {
            write_probe_file(s, sim.body.system.dim, &dir.join(format!("probe_{k}.csv")))?;
        }
        if sim.steps > 0 {
            write_snapshot_file(&sim.body.system, &sim.body.material, &dir.join("snapshot_final.csv"))?;
        }
        sim.timings.output += start.elapsed();
    }

    let steady = series.first().and_then(|s| {
        let axis = dominant_axis(&s.displacements);
        steady_state(&s.times, &s.component(axis), 0.1, 0.01)
    });
    Ok(RunReport {
        case: spec.name.clone(),
        particles: sim.body.system.len(),
        threads,
        steps: sim.steps,
        damped_steps: sim.damped_steps,
        final_time: sim.time,
        phases: sim.timings,
        total_wall: wall.elapsed(),
        final_displacements: (0..sim.probes.len()).map(|k| sim.probe_displacement(k)).collect(),
        probes: series,
        kinetic_energy: sim.kinetic_energy(),
        steady,
    })
}

/// Axis with the largest final displacement magnitude.
pub fn dominant_axis(displacements: &[Vec3]) -> usize {
    displacements.last().map_or(0, |u| u.iamax())
}

/// Mean and range of `values` over the trailing `fraction` of the time span;
/// steady when the range is below `tolerance` times the mean magnitude.
pub fn steady_state(times: &[f64], values: &[f64], fraction: f64, tolerance: f64) -> Option<SteadyState> {
    let (&t_end, &t_start) = (times.last()?, times.first()?);
    let cut = t_end - fraction * (t_end - t_start);
    let window: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= cut)
        .map(|(_, v)| *v)
        .collect();
    if window.is_empty() {
        return None;
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    Some(SteadyState {
        mean,
        range,
        reached: range < tolerance * mean.abs(),
    })
}

/// First time after which `values` stay within `tolerance * |target|` of
/// `target`; `None` if the last sample is still outside.
pub fn settling_time(times: &[f64], values: &[f64], target: f64, tolerance: f64) -> Option<f64> {
    let band = tolerance * target.abs();
    match values.iter().rposition(|v| (v - target).abs() > band) {
        None => times.first().copied(),
        Some(k) if k + 1 < values.len() => Some(times[k + 1]),
        Some(_) => None,
    }
}

/// Time average of an oscillating signal over whole cycles: the span between
/// the first and last upward crossings of its overall mean, or the whole
/// record when fewer than two crossings exist.
pub fn oscillation_mean(times: &[f64], values: &[f64]) -> Option<f64> {
    let average = |a: usize, b: usize| -> f64 {
        let mut area = 0.0;
        for k in a..b {
            area += 0.5 * (values[k] + values[k + 1]) * (times[k + 1] - times[k]);
        }
        area / (times[b] - times[a])
    };
    if values.len() < 2 {
        return values.first().copied();
    }
    let overall = average(0, values.len() - 1);
    let crossings: Vec<usize> = (1..values.len())
        .filter(|&k| values[k - 1] < overall && values[k] >= overall)
        .collect();
    match (crossings.first(), crossings.last()) {
        (Some(&a), Some(&b)) if b > a => Some(average(a, b)),
        _ => Some(overall),
    }
}

/// Number of rebounds: local minima followed by a rise of at least `min_rise`.
pub fn count_rebounds(values: &[f64], min_rise: f64) -> usize {
    let mut count = 0;
    let mut low = f64::INFINITY;
    let mut falling = true;
    for &v in values {
        if falling {
            low = low.min(v);
            if v - low >= min_rise {
                count += 1;
                falling = false;
                low = v;
            }
        } else if v > low {
            low = v;
        } else if low - v >= min_rise {
            falling = true;
            low = v;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_window() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let flat: Vec<f64> = t.iter().map(|&t| -1.0 + 1e-4 * (50.0 * t).sin()).collect();
        let st = steady_state(&t, &flat, 0.1, 0.01).unwrap();
        assert!(st.reached && (st.mean + 1.0).abs() < 1e-3);
        let wavy: Vec<f64> = t.iter().map(|&t| -1.0 + 0.2 * (50.0 * t).sin()).collect();
        assert!(!steady_state(&t, &wavy, 0.1, 0.01).unwrap().reached);
        assert!(steady_state(&[], &[], 0.1, 0.01).is_none());
    }

    #[test]
    fn settling_of_decaying_oscillation() {
        let t: Vec<f64> = (0..=10_000).map(|k| k as f64 * 1e-3).collect();
        let u: Vec<f64> = t.iter().map(|&t| -1.0 + (-t).exp() * (20.0 * t).cos()).collect();
        let ts = settling_time(&t, &u, -1.0, 0.01).unwrap();
        // envelope e^-t drops below 0.01 at ln 100
        assert!(ts <= 100f64.ln() + 1e-3 && ts > 100f64.ln() - 0.4, "{ts}");
        let undamped: Vec<f64> = t.iter().map(|&t| -1.0 + (20.0 * t).cos()).collect();
        assert!(settling_time(&t, &undamped, -1.0, 0.01).is_none());
        assert_eq!(settling_time(&t, &vec![-1.0; t.len()], -1.0, 0.01), Some(0.0));
    }

    #[test]
    fn oscillation_mean_over_whole_cycles() {
        let t: Vec<f64> = (0..=20_000).map(|k| k as f64 * 1e-4).collect();
        let u: Vec<f64> = t
            .iter()
            .map(|&t| -0.5 + 0.5 * (2.0 * std::f64::consts::PI * 3.7 * t).cos())
            .collect();
        let m = oscillation_mean(&t, &u).unwrap();
        assert!((m + 0.5).abs() < 1e-3, "{m}");
    }

    #[test]
    fn rebound_counting() {
        let t: Vec<f64> = (0..4000).map(|k| k as f64 * 1e-3).collect();
        let bouncing: Vec<f64> = t
            .iter()
            .map(|&t| 1.0 + (-0.5 * t).exp() * (6.0 * t).sin().abs())
            .collect();
        let n = count_rebounds(&bouncing, 0.05);
        assert!((6..=8).contains(&n), "{n}");
        assert_eq!(count_rebounds(&[1.0, 0.9, 0.8, 0.8], 0.05), 0);
        assert_eq!(count_rebounds(&[1.0, 0.5, 0.9, 0.4, 0.8], 0.1), 2);
    }
}
