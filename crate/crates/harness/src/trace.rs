//! Per-iteration convergence traces.

use std::io::Write;
use std::path::Path;

use irsopt::SolveReport;

use crate::error::{io_err, Result};

pub const TRACE_HEADER: &str = "# iter,objective,tau,mu_v,mu_u";

fn cell(v: Option<&f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

/// Writes one line per outer iteration. The Dinkelbach parameter and the
/// smoothing parameters are `NA` for solvers that do not track them.
pub fn write_trace<W: Write>(report: &SolveReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for t in 1..=report.outer_iterations {
        writeln!(
            out,
            "{t},{},{},{},{}",
            report.objective_trace[t],
            cell(report.tau_trace.get(t - 1)),
            cell(report.mu_v_trace.get(t - 1)),
            cell(report.mu_u_trace.get(t - 1)),
        )?;
    }
    Ok(())
}

pub fn emit_trace(report: &SolveReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    write_trace(report, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
