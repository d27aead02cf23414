use crate::manifolds::{ObliquePoint, SpherePoint};
use crate::system::BeamformerMatrix;
use crate::{CMat, CVec};

/// Why an outer alternating loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterTermination {
    /// Objective change fell within the outer tolerance.
    Converged,
    /// Iteration budget exhausted.
    MaxOuter,
    /// A smoothing parameter reached its floor.
    MuFloor,
}

impl OuterTermination {
    pub fn as_str(self) -> &'static str {
        match self {
            OuterTermination::Converged => "converged",
            OuterTermination::MaxOuter => "max_outer",
            OuterTermination::MuFloor => "mu_floor",
        }
    }
}

/// State recorded after an outer iteration of the max-min solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub beamformer: CMat,
    pub reflection: CVec,
    pub tau: f64,
    pub mu_v: f64,
    pub mu_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Objective in bits at the start point followed by one entry per outer
    /// iteration (sum-rate or minimal rate, matching the solver).
    pub objective_trace: Vec<f64>,
    /// Objective of the returned solution; differs from the last trace entry
    /// only when phases were quantized afterwards.
    pub final_objective: f64,
    pub outer_iterations: usize,
    pub inner_iterations_v: usize,
    pub inner_iterations_u: usize,
    pub termination: OuterTermination,
    /// Dinkelbach parameter after each outer iteration (max-min solvers).
    pub tau_trace: Vec<f64>,
    pub tau_beam: Vec<f64>,
    pub tau_phase: Vec<f64>,
    pub mu_v_trace: Vec<f64>,
    pub mu_u_trace: Vec<f64>,
    pub accepted_v: usize,
    pub accepted_u: usize,
    pub max_sphere_error: f64,
    pub max_oblique_error: f64,
    pub iterates: Vec<Iterate>,
}

impl SolveReport {
    pub(crate) fn new(initial: f64) -> Self {
        Self {
            objective_trace: vec![initial],
            final_objective: initial,
            outer_iterations: 0,
            inner_iterations_v: 0,
            inner_iterations_u: 0,
            termination: OuterTermination::MaxOuter,
            tau_trace: Vec::new(),
            tau_beam: Vec::new(),
            tau_phase: Vec::new(),
            mu_v_trace: Vec::new(),
            mu_u_trace: Vec::new(),
            accepted_v: 0,
            accepted_u: 0,
            max_sphere_error: 0.0,
            max_oblique_error: 0.0,
            iterates: Vec::new(),
        }
    }

    /// Objective after outer iteration `t`, holding the last value once the
    /// solver has stopped.
    pub fn objective_at(&self, t: usize) -> f64 {
        let i = t.min(self.objective_trace.len() - 1);
        self.objective_trace[i]
    }
}

/// Result of a solve: physical beamformer, reflection vector and report.
#[derive(Debug, Clone)]
pub struct Solution {
    pub beamformer: BeamformerMatrix,
    pub reflection: ObliquePoint,
    /// Lifted beamformer the physical one was extracted from, when the
    /// solver optimized on the sphere.
    pub lifted: Option<SpherePoint>,
    pub report: SolveReport,
}
