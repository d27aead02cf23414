//! Closed-form beamformers and the comparison schemes built on them.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{record_u, Ctx, InitialPoint, PhaseUpdate};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::gcg::GcgOptions;
use crate::manifolds::ObliquePoint;
use crate::maxmin::{run_maxmin, tau_from_products, Dinkelbach, SdomaloOptions};
use crate::objective::Kernel;
use crate::rates::{min_rate_from_sinrs, sinrs_from_products, sum_rate_from_sinrs, LinkModel};
use crate::report::{OuterTermination, SolveReport, Solution};
use crate::sumrate::{quantize_phases, run_sumrate, DomaloOptions};
use crate::system::{BeamformerMatrix, SystemConfig};
use crate::CMat;

pub use crate::rates::{effective_channel_matrix, effective_channel_matrix_with};

/// Largest accepted condition number of `H H^H` for zero-forcing.
pub const ZF_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Fixed uniformly random phases; only the beamformer is optimized.
    RandomPhi,
    MrtAlt,
    ZfAlt,
    MmseAlt,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::RandomPhi,
        BaselineKind::MrtAlt,
        BaselineKind::ZfAlt,
        BaselineKind::MmseAlt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::RandomPhi => "random_phi",
            BaselineKind::MrtAlt => "mrt_alt",
            BaselineKind::ZfAlt => "zf_alt",
            BaselineKind::MmseAlt => "mmse_alt",
        }
    }
}

/// Which rate metric a scheme targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    #[default]
    SumRate,
    MinRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOptions {
    pub objective: Objective,
    pub model: LinkModel,
    pub max_outer: usize,
    pub outer_tol: f64,
    pub inner_v: GcgOptions,
    pub inner_u: GcgOptions,
    /// Smoothing-parameter shrink factor for max-min phase updates.
    pub shrink: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self {
            objective: Objective::SumRate,
            model: LinkModel::Direct,
            max_outer: 30,
            outer_tol: 1e-4,
            inner_v: GcgOptions::default(),
            inner_u: GcgOptions::default(),
            shrink: 0.8,
        }
    }
}

fn scale_to_power(f: CMat, power: f64) -> Result<BeamformerMatrix> {
    let norm = f.norm_squared();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateChannel("beamformer direction vanishes".into()));
    }
    Ok(BeamformerMatrix(f * Complex64::from((power / norm).sqrt())))
}

/// `V = √(P/‖H‖_F²) H^H`.
pub fn mrt_from_channel(heff: &CMat, power: f64) -> Result<BeamformerMatrix> {
    if heff.norm_squared() == 0.0 {
        return Err(Error::DegenerateChannel("effective channel is zero".into()));
    }
    scale_to_power(heff.adjoint(), power)
}

/// `V = √(P / tr((HH^H)^{-1})) H^H (HH^H)^{-1}`.
pub fn zf_from_channel(heff: &CMat, power: f64) -> Result<BeamformerMatrix> {
    let gram = heff * heff.adjoint();
    let sv = gram.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond <= ZF_MAX_CONDITION) {
        return Err(Error::Singular(cond));
    }
    let inv = gram.try_inverse().ok_or(Error::Singular(cond))?;
    let trace = inv.trace().re;
    Ok(BeamformerMatrix(heff.adjoint() * &inv * Complex64::from((power / trace).sqrt())))
}

/// `F = H^H (HH^H + (σ²K/P) I)^{-1}` scaled to full power, `σ²` the mean noise power.
pub fn mmse_from_channel(heff: &CMat, power: f64, noise: f64) -> Result<BeamformerMatrix> {
    let k = heff.nrows();
    let reg = noise * k as f64 / power;
    let a = heff * heff.adjoint() + CMat::identity(k, k) * Complex64::from(reg);
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::DegenerateChannel("regularized Gram matrix not invertible".into()))?;
    scale_to_power(heff.adjoint() * inv, power)
}

pub fn mrt_beamformer(u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<BeamformerMatrix> {
    mrt_from_channel(&effective_channel_matrix(u, ch)?, sys.power_budget)
}

pub fn zf_beamformer(u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<BeamformerMatrix> {
    zf_from_channel(&effective_channel_matrix(u, ch)?, sys.power_budget)
}

pub fn mmse_beamformer(u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<BeamformerMatrix> {
    mmse_from_channel(&effective_channel_matrix(u, ch)?, sys.power_budget, sys.mean_noise())
}

/// Uniformly random phases drawn from `seed`.
pub fn random_reflection(len: usize, seed: u64) -> ObliquePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * TAU).collect();
    ObliquePoint::from_phases(&p)
}

fn closed_form(kind: BaselineKind, heff: &CMat, sys: &SystemConfig) -> Result<BeamformerMatrix> {
    match kind {
        BaselineKind::MrtAlt => mrt_from_channel(heff, sys.power_budget),
        BaselineKind::ZfAlt => zf_from_channel(heff, sys.power_budget),
        BaselineKind::MmseAlt => mmse_from_channel(heff, sys.power_budget, sys.mean_noise()),
        BaselineKind::RandomPhi => unreachable!("random_phi has no closed form"),
    }
}

/// Runs a comparison scheme.
///
/// `random_phi` draws phases from `seed` and optimizes only the lifted
/// beamformer with the sum-rate or max-min inner solver. The `*_alt` schemes
/// start from `u = 1` and alternate the closed-form beamformer with one
/// manifold phase solve per outer iteration. Their traces are not monotone
/// in general.
pub fn run_baseline(
    kind: BaselineKind,
    ch: &ChannelSet,
    sys: &SystemConfig,
    opts: &BaselineOptions,
    seed: u64,
) -> Result<Solution> {
    if kind == BaselineKind::RandomPhi {
        let u = random_reflection(ch.total_elements(), seed);
        let init = InitialPoint::matched(ch, opts.model, u)?;
        return match opts.objective {
            Objective::SumRate => {
                let o = DomaloOptions {
                    outer_tol: opts.outer_tol,
                    max_outer: opts.max_outer,
                    inner_v: opts.inner_v.clone(),
                    inner_u: opts.inner_u.clone(),
                    ..Default::default()
                };
                run_sumrate(ch, sys, &o, Some(init), opts.model, false)
            }
            Objective::MinRate => {
                let o = SdomaloOptions {
                    max_outer: opts.max_outer,
                    shrink: opts.shrink,
                    inner_v: opts.inner_v.clone(),
                    inner_u: opts.inner_u.clone(),
                    ..Default::default()
                };
                run_maxmin(ch, sys, &o, Some(init), opts.model, false)
            }
        };
    }

    let c = Ctx::new(ch, sys, opts.model, &opts.inner_v, &opts.inner_u, PhaseUpdate::Joint)?;
    let metric = |z: &CMat| {
        let r = sinrs_from_products(z, &sys.noise_power);
        match opts.objective {
            Objective::SumRate => sum_rate_from_sinrs(&r, &sys.weights),
            Objective::MinRate => min_rate_from_sinrs(&r, &sys.weights),
        }
    };
    let dk = Dinkelbach::new(sys);

    let mut u = ObliquePoint::ones(ch.total_elements());
    let mut v = closed_form(kind, &c.heff(&u), sys)?;
    let mut report = SolveReport::new(metric(&c.products(&v.0, &u)));
    let mut mu_u: Option<f64> = None;
    let mut prev = report.objective_trace[0];
    for t in 1..=opts.max_outer {
        match opts.objective {
            Objective::SumRate => {
                let zeta = c.sinrs(&v.0, &u);
                let zt: Vec<f64> = zeta.iter().zip(&sys.weights).map(|(z, w)| w * (1.0 + z)).collect();
                let kernel = Kernel::SumRate { zeta_tilde: zt, noise: &sys.noise_power };
                let su = c.u_step(u, &v.0, &kernel)?;
                record_u(&mut report, &su);
                u = su.point;
            }
            Objective::MinRate => {
                let z = c.products(&v.0, &u);
                let tau = tau_from_products(&z, sys);
                let mu = *mu_u.get_or_insert_with(|| dk.initial_mu(&z));
                let su = c.u_step(u.clone(), &v.0, &dk.kernel(tau, mu))?;
                record_u(&mut report, &su);
                let z_new = c.products(&v.0, &su.point);
                if dk.accept(&z, &z_new, tau).is_some() {
                    u = su.point;
                    report.accepted_u += 1;
                } else {
                    mu_u = Some(mu * opts.shrink);
                }
            }
        }
        v = closed_form(kind, &c.heff(&u), sys)?;
        let f = metric(&c.products(&v.0, &u));
        report.objective_trace.push(f);
        report.outer_iterations = t;
        if (f - prev).abs() <= opts.outer_tol {
            report.termination = OuterTermination::Converged;
            break;
        }
        prev = f;
    }
    report.final_objective = *report.objective_trace.last().expect("non-empty trace");
    if let Some(q) = sys.quantizer_levels {
        u = quantize_phases(&u, q)?;
        v = closed_form(kind, &c.heff(&u), sys)?;
        report.final_objective = metric(&c.products(&v.0, &u));
    }
    Ok(Solution {
        beamformer: v,
        reflection: u,
        lifted: None,
        report,
    })
}
