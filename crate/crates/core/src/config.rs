//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! case = "bending_cantilever"   # bending_cantilever | twisting_cantilever | falling_ball
//! resolution = 6                # particles across the thickness / diameter
//! seed = 42
//! threads = 0                   # 0 = all cores
//! end_time = 2.0                # [s]
//!
//! [damping]
//! scheme = "particle_split"     # none | explicit | particle_split | pairwise_split
//! alpha = 0.2                   # application probability, (0, 1]
//! beta = 0.4                    # shape parameter, or give eta [kg/(m s)] directly
//!
//! [output]
//! dir = "out"
//! interval = 0.01               # [s] of simulated time
//! ```
//!
//! Flags override file values; unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use toml::Spanned;

use crate::cases::{CaseSpec, CASE_NAMES};
use crate::damping::{DampingConfig, DampingScheme};
use crate::runner::RunConfig;
use crate::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub case: Option<Spanned<String>>,
    pub resolution: Option<Spanned<i64>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub end_time: Option<Spanned<f64>>,
    #[serde(default)]
    pub damping: DampingSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSection {
    pub scheme: Option<Spanned<String>>,
    pub alpha: Option<Spanned<f64>>,
    pub beta: Option<Spanned<f64>>,
    pub eta: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub interval: Option<Spanned<f64>>,
}

/// Parsed configuration file with its source, for line-numbered errors.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub origin: String,
    text: String,
    pub values: FileConfig,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let values = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| format!("{origin}:{}", line_of(text, s.start)))
                .unwrap_or_else(|| origin.to_string());
            Error::config(at, e.message().to_string())
        })?;
        Ok(Self {
            origin: origin.to_string(),
            text: text.to_string(),
            values,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn at<T>(&self, key: &str, value: &Spanned<T>) -> String {
        format!("{}:{}: {key}", self.origin, line_of(&self.text, value.span().start))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Command-line interface; every setting overrides the config file.
#[derive(Debug, Default, Clone, Parser)]
#[command(
    name = "sphrelax",
    version,
    about = "Damped total-Lagrangian SPH relaxation of elastic bodies"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// bending_cantilever, twisting_cantilever or falling_ball.
    #[arg(long)]
    pub case: Option<String>,
    /// Particles across the cantilever thickness or ball diameter.
    #[arg(long)]
    pub resolution: Option<i64>,
    /// none, explicit, particle_split (particle) or pairwise_split (pairwise).
    #[arg(long)]
    pub damping: Option<String>,
    /// Probability of applying the damping in a step, in (0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Body-shape parameter setting the viscosity.
    #[arg(long, conflicts_with = "eta")]
    pub beta: Option<f64>,
    /// Artificial dynamic viscosity [kg/(m s)].
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Simulated end time [s].
    #[arg(long)]
    pub end_time: Option<f64>,
    /// Directory for probe and snapshot CSV files.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Probe sampling interval in simulated time [s].
    #[arg(long)]
    pub output_interval: Option<f64>,
    /// List the built-in cases and exit.
    #[arg(long)]
    pub list_cases: bool,
    /// Print only the final report.
    #[arg(long, short)]
    pub quiet: bool,
}

fn pick<T: Clone>(flag: Option<T>, flag_name: &str, file: Option<(T, String)>) -> Option<(T, String)> {
    match flag {
        Some(v) => Some((v, flag_name.to_string())),
        None => file,
    }
}

fn from_file<T: Clone>(cfg: &ConfigFile, key: &str, v: &Option<Spanned<T>>) -> Option<(T, String)> {
    v.as_ref().map(|s| (s.get_ref().clone(), cfg.at(key, s)))
}

/// Merges defaults, file and flags (in rising precedence) into a run.
pub fn resolve(file: &ConfigFile, cli: &Cli) -> Result<RunConfig> {
    let f = &file.values;
    let (case, case_ctx) = pick(cli.case.clone(), "--case", from_file(file, "case", &f.case)).ok_or_else(|| {
        Error::config(
            "--case",
            format!("missing case name (one of {})", CASE_NAMES.join(", ")),
        )
    })?;
    if !CASE_NAMES.contains(&case.as_str()) {
        return Err(Error::config(
            case_ctx,
            format!("unknown case '{case}' (expected one of {})", CASE_NAMES.join(", ")),
        ));
    }
    let resolution = match pick(
        cli.resolution,
        "--resolution",
        from_file(file, "resolution", &f.resolution),
    ) {
        Some((r, ctx)) if r < 2 => return Err(Error::config(ctx, format!("resolution must be at least 2, got {r}"))),
        Some((r, _)) => r as usize,
        None => CaseSpec::default_resolution(&case),
    };
    let mut spec = CaseSpec::builtin(&case, resolution)?;

    let d = &f.damping;
    if let Some((name, ctx)) = pick(
        cli.damping.clone(),
        "--damping",
        from_file(file, "damping.scheme", &d.scheme),
    ) {
        spec.damping.scheme = DampingScheme::parse(&name).ok_or_else(|| {
            Error::config(
                ctx,
                format!("unknown damping scheme '{name}' (none, explicit, particle_split, pairwise_split)"),
            )
        })?;
    }
    if let Some((alpha, ctx)) = pick(cli.alpha, "--alpha", from_file(file, "damping.alpha", &d.alpha)) {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config(ctx, format!("alpha must lie in (0, 1], got {alpha}")));
        }
        spec.damping.alpha = alpha;
    }
    if let (Some(b), Some(e)) = (&d.beta, &d.eta) {
        if cli.beta.is_none() && cli.eta.is_none() {
            return Err(Error::config(
                format!("{} / {}", file.at("damping.beta", b), file.at("damping.eta", e)),
                "give either beta or eta, not both",
            ));
        }
    }
    let viscosity = if cli.eta.is_some() || cli.beta.is_some() {
        cli.eta
            .map(|e| (e, "--eta".to_string(), false))
            .or(cli.beta.map(|b| (b, "--beta".to_string(), true)))
    } else {
        from_file(file, "damping.eta", &d.eta)
            .map(|(e, c)| (e, c, false))
            .or(from_file(file, "damping.beta", &d.beta).map(|(b, c)| (b, c, true)))
    };
    if let Some((value, ctx, is_beta)) = viscosity {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::config(
                ctx,
                format!("must be a non-negative number, got {value}"),
            ));
        }
        if is_beta {
            spec.beta = value;
            spec.damping.eta = spec.eta_for_beta(value);
        } else {
            spec.damping.eta = value;
        }
    }
    if let Some(seed) = cli.seed.or(f.seed) {
        spec.damping.seed = seed;
    }
    spec.damping = DampingConfig::new(
        spec.damping.scheme,
        spec.damping.eta,
        spec.damping.alpha,
        spec.damping.seed,
    )?;

    if let Some((t, ctx)) = pick(cli.end_time, "--end-time", from_file(file, "end_time", &f.end_time)) {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::config(ctx, format!("end time must be non-negative, got {t}")));
        }
        spec.end_time = t;
    }
    if let Some((dt, ctx)) = pick(
        cli.output_interval,
        "--output-interval",
        from_file(file, "output.interval", &f.output.interval),
    ) {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config(
                ctx,
                format!("output interval must be positive, got {dt}"),
            ));
        }
        spec.output_interval = dt;
    }
    Ok(RunConfig {
        case: spec,
        threads: cli.threads.or(f.threads).unwrap_or(0),
        output_dir: cli.output_dir.clone().or(f.output.dir.clone()),
    })
}

/// Loads the file named by `--config`, if any, and applies the flags.
pub fn load(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    resolve(&file, cli)
}
