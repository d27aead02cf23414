use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irsopt_harness::config::{Config, Family, InterIrsScheme, Scheme};
use irsopt_harness::error::{HarnessError, Result};
use irsopt_harness::experiment::{run_experiment, run_scheme, sweep_point, trial_channels, write_csv, RunOptions};
use irsopt_harness::trace::emit_trace;

#[derive(Parser)]
#[command(name = "irsopt", version, about = "Monte Carlo experiments for IRS-aided downlink optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write one CSV row per sweep value, scheme and trial.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the configured base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Record solve times in the wall_time column (output is then no
        /// longer byte-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Run one solve and write its per-iteration trace.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Algorithm identifier; defaults to the proposed solver.
        #[arg(long)]
        scheme: Option<String>,
        /// Channel seed; defaults to the configured base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep value to solve at; defaults to the first one.
        #[arg(long)]
        sweep_value: Option<f64>,
    },
    /// Check a config file and print its canonical form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            trials,
            seed,
            threads,
            timing,
        } => {
            let mut cfg = Config::load(&config)?;
            if let Some(t) = trials {
                cfg.experiment.trials = t;
            }
            if let Some(s) = seed {
                cfg.experiment.base_seed = s;
            }
            let opts = RunOptions {
                threads,
                record_wall_time: timing,
            };
            let rows = run_experiment(&cfg, &opts)?;
            let file = File::create(&out).map_err(|source| HarnessError::Io { path: out.clone(), source })?;
            write_csv(&rows, BufWriter::new(file))?;
            let failed = rows.iter().filter(|r| r.objective_value.is_none()).count();
            eprintln!("wrote {} rows to {} ({failed} failed)", rows.len(), out.display());
            Ok(())
        }
        Command::Trace {
            config,
            out,
            scheme,
            seed,
            sweep_value,
        } => {
            let cfg = Config::load(&config)?;
            let e = &cfg.experiment;
            let scheme = match scheme {
                Some(s) => Scheme::parse(&s).ok_or_else(|| HarnessError::Invalid(format!("unknown scheme {s:?}")))?,
                None => Scheme::defaults(e.objective)[0],
            };
            let value = match (sweep_value, e.family) {
                (Some(v), _) => v,
                (None, Family::Convergence) => 0.0,
                (None, _) => e.sweep_values[0],
            };
            let seed = seed.unwrap_or(e.base_seed);
            let (sys, panels) = sweep_point(&cfg, value);
            let ch = trial_channels(&cfg, &sys, &panels, seed)?;
            let link = e.inter_irs_scheme.unwrap_or(InterIrsScheme::Scheme1);
            let r = run_scheme(&cfg, scheme, link, &ch, &sys, seed, e.max_outer)?;
            emit_trace(&r.solution.report, &out)?;
            eprintln!(
                "{}: {} outer iterations, objective {}",
                scheme.name(),
                r.solution.report.outer_iterations,
                r.verified
            );
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = Config::load(&config)?;
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
