//! Monte Carlo sweeps over channel draws and the CSV result format.

use std::io::Write;
use std::time::Instant;

use irsopt::baselines::{run_baseline, BaselineOptions, Objective};
use irsopt::channel::{apply_blocking, synthesize_channels_with_panels, ChannelSet};
use irsopt::maxmin::{run_sdomalo, run_sdomalo_inter_irs, SdomaloOptions};
use irsopt::rates::{weighted_min_rate_with, weighted_sum_rate_with};
use irsopt::sumrate::{run_domalo, run_domalo_inter_irs, DomaloOptions};
use irsopt::{LinkModel, Solution, SystemConfig};
use rayon::prelude::*;

use crate::config::{Config, Family, InterIrsScheme, Scheme};
use crate::error::{HarnessError, Result};

/// First line of every results file.
pub const SCHEMA_LINE: &str = "# irsopt-results v1";
pub const CSV_HEADER: [&str; 8] = [
    "family",
    "sweep_value",
    "scheme",
    "trial",
    "seed",
    "objective_value",
    "iterations",
    "wall_time",
];
/// Written for every value a failed solve could not produce.
pub const FAILURE_MARKER: &str = "NA";

/// Seed offsets that keep the blocking draw and the random-phase baseline
/// independent of the channel stream.
const BLOCKING_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const RANDOM_PHI_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub family: Family,
    pub sweep_value: f64,
    /// Algorithm identifier, suffixed with `:schemeN` when inter-IRS schemes
    /// are compared.
    pub scheme: String,
    pub trial: usize,
    pub seed: u64,
    /// Weighted rate in bits/s/Hz; `None` when the solve failed.
    pub objective_value: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Record solve times. Off by default so output bytes depend only on
    /// the configuration.
    pub record_wall_time: bool,
}

/// System and panel sizes for one sweep value.
pub fn sweep_point(cfg: &Config, value: f64) -> (SystemConfig, Vec<usize>) {
    let mut c = cfg.clone();
    let n = value as usize;
    let mut panels = None;
    match cfg.experiment.family {
        Family::Convergence => {}
        Family::VsBsAntennas => c.num_bs_antennas = n,
        Family::VsIrsElements | Family::BlockingSchemes => c.elements_per_irs = n,
        Family::VsUsers => c.num_users = n,
        Family::VsPower => c.power_dbm = value,
        Family::VsQuantization => c.quantizer_levels = value.is_finite().then_some(n),
        Family::IrsSplit => panels = Some(vec![n, cfg.experiment.split_total - n]),
    }
    let mut sys = c.system();
    if c.num_users != cfg.num_users {
        sys = cfg.system().with_users(c.num_users);
    }
    let panels = panels.unwrap_or_else(|| vec![sys.elements_per_irs; sys.num_irs]);
    (sys, panels)
}

/// Channels for one trial, with blocking applied when configured.
pub fn trial_channels(cfg: &Config, sys: &SystemConfig, panels: &[usize], seed: u64) -> Result<ChannelSet> {
    let ch = synthesize_channels_with_panels(sys, &cfg.geometry, &cfg.channel, panels, seed)?;
    Ok(match &cfg.experiment.blocking {
        Some(b) => apply_blocking(&ch, &cfg.geometry, b, seed ^ BLOCKING_STREAM)?,
        None => ch,
    })
}

/// Result of running one scheme on one channel draw.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub solution: Solution,
    /// Rate under the verification model of the inter-IRS scheme.
    pub verified: f64,
}

/// Runs `scheme` with the optimization and verification models implied by
/// `link`. Cascade-aware models fall back to the direct link when the
/// channels carry no IRS1→IRS2 term.
pub fn run_scheme(
    cfg: &Config,
    scheme: Scheme,
    link: InterIrsScheme,
    ch: &ChannelSet,
    sys: &SystemConfig,
    seed: u64,
    max_outer: usize,
) -> irsopt::Result<SchemeRun> {
    let e = &cfg.experiment;
    let cascade = ch.num_panels() == 2 && ch.inter_irs().is_some();
    let optimize = if link == InterIrsScheme::Scheme3 && cascade {
        LinkModel::InterIrs
    } else {
        LinkModel::Direct
    };
    let verify = if link != InterIrsScheme::Scheme1 && cascade {
        LinkModel::InterIrs
    } else {
        LinkModel::Direct
    };
    let solution = match scheme {
        Scheme::Domalo => {
            let o = DomaloOptions {
                max_outer,
                outer_tol: e.outer_tol,
                ..Default::default()
            };
            match optimize {
                LinkModel::Direct => run_domalo(ch, sys, &o, None)?,
                LinkModel::InterIrs => run_domalo_inter_irs(ch, sys, &o, None)?,
            }
        }
        Scheme::Sdomalo => {
            let o = SdomaloOptions { max_outer, ..Default::default() };
            match optimize {
                LinkModel::Direct => run_sdomalo(ch, sys, &o, None)?,
                LinkModel::InterIrs => run_sdomalo_inter_irs(ch, sys, &o, None)?,
            }
        }
        Scheme::Baseline(kind) => {
            let o = BaselineOptions {
                objective: e.objective,
                model: optimize,
                max_outer,
                outer_tol: e.outer_tol,
                ..Default::default()
            };
            run_baseline(kind, ch, sys, &o, seed ^ RANDOM_PHI_STREAM)?
        }
    };
    let verified = match e.objective {
        Objective::SumRate => weighted_sum_rate_with(verify, &solution.beamformer, &solution.reflection, ch, sys)?,
        Objective::MinRate => weighted_min_rate_with(verify, &solution.beamformer, &solution.reflection, ch, sys)?,
    };
    Ok(SchemeRun { solution, verified })
}

/// Scheme columns in output order.
fn columns(cfg: &Config) -> Vec<(Scheme, InterIrsScheme, String)> {
    let e = &cfg.experiment;
    let labelled = e.family == Family::BlockingSchemes || e.inter_irs_scheme.is_some();
    let mut out = Vec::new();
    for &s in &e.schemes {
        for l in e.link_schemes() {
            let label = if labelled {
                format!("{}:{}", s.name(), l.name())
            } else {
                s.name().to_string()
            };
            out.push((s, l, label));
        }
    }
    out
}

struct Keyed {
    point: usize,
    column: usize,
    row: ResultRow,
}

fn run_job(cfg: &Config, point: usize, trial: usize) -> Result<Vec<Keyed>> {
    let e = &cfg.experiment;
    let seed = e.base_seed.wrapping_add(trial as u64);
    let convergence = e.family == Family::Convergence;
    let value = e.sweep_values[point];
    let (sys, panels) = sweep_point(cfg, value);
    let ch = trial_channels(cfg, &sys, &panels, seed)?;
    let max_outer = if convergence {
        e.sweep_values.iter().fold(0.0f64, |a, &b| a.max(b)) as usize
    } else {
        e.max_outer
    };

    let mut out = Vec::new();
    for (column, (scheme, link, label)) in columns(cfg).into_iter().enumerate() {
        let start = Instant::now();
        let run = run_scheme(cfg, scheme, link, &ch, &sys, seed, max_outer);
        let elapsed = start.elapsed().as_secs_f64();
        let row = |sweep_value: f64, objective_value: Option<f64>, iterations: Option<usize>| ResultRow {
            family: e.family,
            sweep_value,
            scheme: label.clone(),
            trial,
            seed,
            objective_value,
            iterations,
            wall_time: Some(elapsed),
        };
        if convergence {
            for (p, &t) in e.sweep_values.iter().enumerate() {
                let t = t as usize;
                let r = match &run {
                    Ok(r) => row(
                        t as f64,
                        Some(r.solution.report.objective_at(t)),
                        Some(t.min(r.solution.report.outer_iterations)),
                    ),
                    Err(_) => row(t as f64, None, None),
                };
                out.push(Keyed { point: p, column, row: r });
            }
        } else {
            let r = match &run {
                Ok(r) => row(value, Some(r.verified), Some(r.solution.report.outer_iterations)),
                Err(_) => row(value, None, None),
            };
            out.push(Keyed { point, column, row: r });
        }
    }
    Ok(out)
}

/// Runs every sweep value, scheme and trial. Rows come back ordered by
/// sweep value, then scheme, then trial, independent of scheduling.
pub fn run_experiment(cfg: &Config, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let e = &cfg.experiment;
    let points = if e.family == Family::Convergence { 1 } else { e.sweep_values.len() };
    let jobs: Vec<(usize, usize)> = (0..points).flat_map(|p| (0..e.trials).map(move |t| (p, t))).collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let results: Vec<Result<Vec<Keyed>>> = pool.install(|| jobs.par_iter().map(|&(p, t)| run_job(cfg, p, t)).collect());

    let mut keyed = Vec::new();
    for r in results {
        keyed.extend(r?);
    }
    keyed.sort_by_key(|k| (k.point, k.column, k.row.trial));
    Ok(keyed
        .into_iter()
        .map(|k| {
            let mut row = k.row;
            if !opts.record_wall_time {
                row.wall_time = None;
            }
            row
        })
        .collect())
}

fn fmt_value(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Writes the schema line, the header and one record per row.
pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}").map_err(|e| HarnessError::Csv(e.into()))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let na = || FAILURE_MARKER.to_string();
        w.write_record([
            r.family.name().to_string(),
            fmt_value(r.sweep_value),
            r.scheme.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.objective_value.map_or_else(na, fmt_value),
            r.iterations.map_or_else(na, |i| i.to_string()),
            r.wall_time.map_or_else(|| "-".to_string(), |t| format!("{t:.6}")),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

/// Mean objective per `(sweep_value, scheme)` over successful rows, in
/// first-appearance order.
pub fn mean_by_scheme(rows: &[ResultRow]) -> Vec<(f64, String, f64, usize)> {
    let mut acc: Vec<(f64, String, f64, usize)> = Vec::new();
    for r in rows {
        let Some(v) = r.objective_value else { continue };
        match acc.iter_mut().find(|a| a.0 == r.sweep_value && a.1 == r.scheme) {
            Some(a) => {
                a.2 += v;
                a.3 += 1;
            }
            None => acc.push((r.sweep_value, r.scheme.clone(), v, 1)),
        }
    }
    for a in &mut acc {
        a.2 /= a.3 as f64;
    }
    acc
}
