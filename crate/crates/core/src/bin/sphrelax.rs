use std::process::ExitCode;

use clap::Parser;
use sphrelax::cases::{CaseSpec, CASE_NAMES};
use sphrelax::config::{load, Cli};
use sphrelax::runner::run;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_cases {
        for name in CASE_NAMES {
            let spec = CaseSpec::builtin(name, CaseSpec::default_resolution(name)).expect("built-in case");
            println!(
                "{name}: {}D, resolution {}, end time {} s, damping {} (eta {:.1}, alpha {})",
                spec.dim,
                spec.resolution,
                spec.end_time,
                spec.damping.scheme.name(),
                spec.damping.eta,
                spec.damping.alpha
            );
        }
        return ExitCode::SUCCESS;
    }
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if !cli.quiet {
        let s = &config.case;
        eprintln!(
            "running {} at resolution {} to t = {} s with {} damping (eta {:.3}, alpha {}, seed {})",
            s.name,
            s.resolution,
            s.end_time,
            s.damping.scheme.name(),
            s.damping.eta,
            s.damping.alpha,
            s.damping.seed
        );
    }
    match run(&config) {
        Ok(report) => {
            print!("{}", report.summary());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
