//! Geometric conjugate-gradient ascent on a Riemannian manifold.
//!
//! Each iteration takes an Armijo backtracking step along the current search
//! direction, retracts back onto the manifold, and forms the next direction
//! as the fresh Riemannian gradient plus a Fletcher–Reeves multiple of the
//! transported previous direction.

use crate::error::{Error, Result};
use crate::manifolds::{Ambient, Manifold, FEASIBILITY_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct GcgOptions {
    pub max_iters: usize,
    /// Stop once the Riemannian gradient norm drops to this value.
    pub grad_tol: f64,
    /// Trial step of the first line search. Later searches start from
    /// `2 Δf / slope`, with `Δf` the previous iteration's gain.
    pub armijo_initial_step: f64,
    pub armijo_backtrack: f64,
    pub armijo_sufficient: f64,
    pub max_backtracks: usize,
    /// Reset the CG direction to the gradient every this many iterations.
    pub restart_every: Option<usize>,
}

impl Default for GcgOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-6,
            armijo_initial_step: 1.0,
            armijo_backtrack: 0.5,
            armijo_sufficient: 1e-4,
            max_backtracks: 30,
            restart_every: None,
        }
    }
}

impl GcgOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.grad_tol >= 0.0) {
            return bad("grad_tol must be non-negative");
        }
        if !(self.armijo_initial_step > 0.0) || !self.armijo_initial_step.is_finite() {
            return bad("armijo_initial_step must be positive");
        }
        if !(self.armijo_backtrack > 0.0 && self.armijo_backtrack < 1.0) {
            return bad("armijo_backtrack must lie in (0, 1)");
        }
        if !(self.armijo_sufficient > 0.0 && self.armijo_sufficient < 1.0) {
            return bad("armijo_sufficient must lie in (0, 1)");
        }
        if self.restart_every == Some(0) {
            return bad("restart_every must be positive");
        }
        Ok(())
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_restart_every(mut self, n: usize) -> Self {
        self.restart_every = Some(n.max(1));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTol,
    MaxIters,
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct GcgResult<P> {
    pub point: P,
    /// Cost at the start point followed by the cost after every iteration.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub final_grad_norm: f64,
    /// Largest constraint residual seen over every retraction performed.
    pub max_feasibility_error: f64,
}

impl<P> GcgResult<P> {
    pub fn final_cost(&self) -> f64 {
        *self.cost_trace.last().expect("trace holds the start cost")
    }
}

struct Accepted<P> {
    point: P,
    cost: f64,
    step: f64,
}

/// Maximizes `cost` over `manifold` starting from `x0`.
///
/// `egrad` must return the Euclidean gradient with respect to the real inner
/// product `Re{tr(A^H B)}`, i.e. twice the Wirtinger derivative `∂f/∂X*`.
pub fn gcg_maximize<M, F, G>(
    manifold: &M,
    mut cost: F,
    mut egrad: G,
    x0: M::Point,
    opts: &GcgOptions,
) -> Result<GcgResult<M::Point>>
where
    M: Manifold,
    F: FnMut(&M::Point) -> f64,
    G: FnMut(&M::Point) -> M::Vector,
{
    opts.validate()?;
    let start_err = manifold.feasibility_error(&x0);
    if !(start_err <= FEASIBILITY_TOL) {
        return Err(Error::OffManifold(start_err));
    }

    let mut max_err = start_err;
    let mut x = x0;
    let mut fx = cost(&x);
    let mut trace = vec![fx];
    let mut grad = manifold.riemannian_gradient(&x, &egrad(&x))?;
    let mut grad_sq = grad.norm_sq();
    let mut dir = grad.clone();
    let mut last_step = opts.armijo_initial_step;
    let mut last_gain: Option<f64> = None;
    let mut since_restart = 0usize;
    let mut iterations = 0usize;

    let termination = loop {
        if grad_sq.sqrt() <= opts.grad_tol {
            break Termination::GradientTol;
        }
        if iterations >= opts.max_iters {
            break Termination::MaxIters;
        }

        let mut slope = grad.inner(&dir);
        if !(slope > 0.0) {
            dir = grad.clone();
            slope = grad_sq;
            since_restart = 0;
        }

        // Initial trial: the step a quadratic model through the last gain and
        // the current slope would take, else the previous accepted step.
        let trial = match last_gain {
            Some(g) if g > 0.0 && (2.0 * g / slope).is_finite() => 2.0 * g / slope,
            Some(_) => last_step,
            None => opts.armijo_initial_step,
        };
        let mut found = armijo(manifold, &mut cost, &x, fx, &dir, slope, trial, opts, &mut max_err);
        if found.is_none() && since_restart > 0 {
            // A stale conjugate direction; retry from the plain gradient.
            dir = grad.clone();
            since_restart = 0;
            found = armijo(manifold, &mut cost, &x, fx, &dir, grad_sq, trial, opts, &mut max_err);
        }
        let Some(acc) = found else {
            break Termination::LineSearchStalled;
        };

        let new_grad = manifold.riemannian_gradient(&acc.point, &egrad(&acc.point))?;
        let new_grad_sq = new_grad.norm_sq();
        since_restart += 1;
        let restart = opts.restart_every.is_some_and(|n| since_restart >= n);
        dir = if restart || grad_sq < 1e-30 {
            since_restart = 0;
            new_grad.clone()
        } else {
            let beta = new_grad_sq / grad_sq;
            let moved = manifold.transport(&acc.point, &dir)?;
            new_grad.add_scaled(beta, &moved)
        };

        let gain = acc.cost - fx;
        last_step = acc.step;
        last_gain = Some(gain);
        x = acc.point;
        fx = acc.cost;
        grad = new_grad;
        grad_sq = new_grad_sq;
        iterations += 1;
        trace.push(fx);
        debug_assert!(manifold.feasibility_error(&x) <= FEASIBILITY_TOL);
    };

    Ok(GcgResult {
        point: x,
        cost_trace: trace,
        iterations,
        termination,
        final_grad_norm: grad_sq.sqrt(),
        max_feasibility_error: max_err,
    })
}

#[allow(clippy::too_many_arguments)]
fn armijo<M, F>(
    manifold: &M,
    cost: &mut F,
    x: &M::Point,
    fx: f64,
    dir: &M::Vector,
    slope: f64,
    initial: f64,
    opts: &GcgOptions,
    max_err: &mut f64,
) -> Option<Accepted<M::Point>>
where
    M: Manifold,
    F: FnMut(&M::Point) -> f64,
{
    let mut alpha = initial;
    for _ in 0..=opts.max_backtracks {
        if let Ok(candidate) = manifold.retract(x, &dir.scaled(alpha)) {
            *max_err = max_err.max(manifold.feasibility_error(&candidate));
            let fc = cost(&candidate);
            if fc.is_finite() && fc >= fx + opts.armijo_sufficient * alpha * slope {
                return Some(Accepted {
                    point: candidate,
                    cost: fc,
                    step: alpha,
                });
            }
        }
        alpha *= opts.armijo_backtrack;
    }
    None
}
