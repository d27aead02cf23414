//! Weighted max-min rate by a Dinkelbach-type parameter `τ`, a log-sum-exp
//! smoothing of the per-user power surplus, and conditional block updates
//! with shrinking smoothing parameters (S-DOMALO).

use crate::blocks::{record_u, record_v, Ctx, InitialPoint, PhaseUpdate};
use crate::channel::ChannelSet;
use crate::error::{dim_check, Error, Result};
use crate::gcg::GcgOptions;
use crate::manifolds::{ObliquePoint, SpherePoint};
use crate::objective::{check_mu, maxmin_terms, smooth_min, Kernel};
use crate::rates::{min_rate_from_sinrs, sinrs_from_products, LinkModel};
use crate::report::{Iterate, OuterTermination, SolveReport, Solution};
use crate::sumrate::quantize_phases;
use crate::system::{BeamformerMatrix, SystemConfig};
use crate::{CMat, CVec};

/// Relative slack when deciding whether `g₃` decreased.
const ACCEPT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SdomaloOptions {
    /// Factor `ς` applied to a smoothing parameter after a rejected block.
    pub shrink: f64,
    /// Floor `ε₀`; `None` means `1e-8` times the initial smoothing parameter.
    pub mu_floor: Option<f64>,
    pub max_outer: usize,
    /// Initial smoothing parameters; `None` derives them from the start point.
    pub mu_v_init: Option<f64>,
    pub mu_u_init: Option<f64>,
    pub inner_v: GcgOptions,
    pub inner_u: GcgOptions,
    pub phase_update: PhaseUpdate,
    pub refine_after_quantize: bool,
    /// Keep a copy of every outer iterate in the report.
    pub record_iterates: bool,
}

impl Default for SdomaloOptions {
    fn default() -> Self {
        Self {
            shrink: 0.8,
            mu_floor: None,
            max_outer: 30,
            mu_v_init: None,
            mu_u_init: None,
            inner_v: GcgOptions::default(),
            inner_u: GcgOptions::default(),
            phase_update: PhaseUpdate::Joint,
            refine_after_quantize: true,
            record_iterates: false,
        }
    }
}

impl SdomaloOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParameter("shrink must lie in (0, 1)".into()));
        }
        for mu in [self.mu_floor, self.mu_v_init, self.mu_u_init].into_iter().flatten() {
            check_mu(mu)?;
        }
        self.inner_v.validate()?;
        self.inner_u.validate()
    }
}

fn ctx<'a>(ch: &'a ChannelSet, sys: &'a SystemConfig, model: LinkModel) -> Result<Ctx<'a>> {
    let o = GcgOptions::default();
    Ctx::new(ch, sys, model, &o, &o, PhaseUpdate::Joint)
}

fn check_beam(v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet) -> Result<()> {
    dim_check(v.0.shape() == (ch.num_bs_antennas(), ch.num_users()), || {
        format!("beamformer is {:?}", v.0.shape())
    })?;
    dim_check(u.len() == ch.total_elements(), || {
        format!("reflection vector has {} entries, expected {}", u.len(), ch.total_elements())
    })
}

fn products(model: LinkModel, v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<CMat> {
    check_beam(v, u, ch)?;
    Ok(ctx(ch, sys, model)?.products(&v.0, u))
}

fn hard_min(t: &[f64]) -> f64 {
    t.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `min_k [ω_k |h_k^H v_k|² − τ (Σ_{j≠k} |h_k^H v_j|² + σ_k²)]`.
pub fn g3_with(model: LinkModel, v: &BeamformerMatrix, u: &ObliquePoint, tau: f64, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    let z = products(model, v, u, ch, sys)?;
    Ok(hard_min(&maxmin_terms(&z, &sys.weights, tau, &sys.noise_power)))
}

pub fn g3(v: &BeamformerMatrix, u: &ObliquePoint, tau: f64, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    g3_with(LinkModel::Direct, v, u, tau, ch, sys)
}

/// Log-sum-exp lower bound on [`g3`]: `g̃₃ ≤ g₃ ≤ g̃₃ + μ ln K`.
pub fn smooth_g3_with(
    model: LinkModel,
    v: &BeamformerMatrix,
    u: &ObliquePoint,
    tau: f64,
    mu: f64,
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<f64> {
    check_mu(mu)?;
    let z = products(model, v, u, ch, sys)?;
    Ok(smooth_min(&maxmin_terms(&z, &sys.weights, tau, &sys.noise_power), mu))
}

pub fn smooth_g3(v: &BeamformerMatrix, u: &ObliquePoint, tau: f64, mu: f64, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    smooth_g3_with(LinkModel::Direct, v, u, tau, mu, ch, sys)
}

fn kernel<'a>(sys: &'a SystemConfig, tau: f64, mu: f64, scale: f64) -> Kernel<'a> {
    Kernel::SmoothMin {
        weights: &sys.weights,
        tau,
        mu,
        noise: &sys.noise_power,
        scale,
    }
}

/// Euclidean gradient of `g̃₃` in the lifted beamformer `V̂` (physical `V = √P V̂(1:N)`).
pub fn maxmin_egrad_v_with(
    model: LinkModel,
    vhat: &SpherePoint,
    u: &ObliquePoint,
    tau: f64,
    mu: f64,
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<CMat> {
    check_mu(mu)?;
    let c = ctx(ch, sys, model)?;
    InitialPoint { vhat: vhat.clone(), u: u.clone() }.check(ch)?;
    Ok(c.v_egrad(vhat, u, &kernel(sys, tau, mu, 1.0)))
}

pub fn maxmin_egrad_v(vhat: &SpherePoint, u: &ObliquePoint, tau: f64, mu: f64, ch: &ChannelSet, sys: &SystemConfig) -> Result<CMat> {
    maxmin_egrad_v_with(LinkModel::Direct, vhat, u, tau, mu, ch, sys)
}

/// Euclidean gradient of `g̃₃` in `u` for a fixed physical beamformer. In the
/// inter-IRS model the entries split as `[∂/∂u_1; ∂/∂u_2]`.
pub fn maxmin_egrad_u_with(
    model: LinkModel,
    u: &ObliquePoint,
    v: &BeamformerMatrix,
    tau: f64,
    mu: f64,
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<CVec> {
    check_mu(mu)?;
    check_beam(v, u, ch)?;
    let c = ctx(ch, sys, model)?;
    Ok(c.u_egrad(u, &v.0, &kernel(sys, tau, mu, 1.0)))
}

pub fn maxmin_egrad_u(u: &ObliquePoint, v: &BeamformerMatrix, tau: f64, mu: f64, ch: &ChannelSet, sys: &SystemConfig) -> Result<CVec> {
    maxmin_egrad_u_with(LinkModel::Direct, u, v, tau, mu, ch, sys)
}

/// `min_k ω_k SINR_k`.
pub fn update_tau_with(model: LinkModel, v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    let z = products(model, v, u, ch, sys)?;
    Ok(tau_from_products(&z, sys))
}

pub fn update_tau(v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    update_tau_with(LinkModel::Direct, v, u, ch, sys)
}

pub(crate) fn tau_from_products(z: &CMat, sys: &SystemConfig) -> f64 {
    sinrs_from_products(z, &sys.noise_power)
        .iter()
        .zip(&sys.weights)
        .map(|(r, w)| w * r)
        .fold(f64::INFINITY, f64::min)
}

/// Conditional-acceptance bookkeeping for one max-min block.
pub(crate) struct Dinkelbach<'a> {
    pub sys: &'a SystemConfig,
    pub scale: f64,
}

impl Dinkelbach<'_> {
    pub fn new(sys: &SystemConfig) -> Dinkelbach<'_> {
        Dinkelbach {
            sys,
            scale: 1.0 / sys.mean_noise(),
        }
    }

    pub fn kernel(&self, tau: f64, mu: f64) -> Kernel<'_> {
        kernel(self.sys, tau, mu, self.scale)
    }

    /// Whether moving from `old` to `new` products keeps `g₃(·, τ)` from
    /// decreasing and does not lower `τ`. Returns the new `τ` on acceptance.
    pub fn accept(&self, old: &CMat, new: &CMat, tau: f64) -> Option<f64> {
        let s = self.sys;
        let t_old = maxmin_terms(old, &s.weights, tau, &s.noise_power);
        let t_new = maxmin_terms(new, &s.weights, tau, &s.noise_power);
        let magnitude = (0..old.nrows())
            .map(|k| {
                let total: f64 = old.row(k).iter().map(|x| x.norm_sqr()).sum();
                s.weights[k] * old[(k, k)].norm_sqr() + tau * (total + s.noise_power[k])
            })
            .fold(0.0, f64::max);
        let tau_new = tau_from_products(new, s);
        (hard_min(&t_new) >= hard_min(&t_old) - ACCEPT_RTOL * magnitude && tau_new >= tau).then_some(tau_new)
    }

    /// Default smoothing parameter `0.1 p / ln max(K, 2)` with `p` the
    /// smallest weighted received signal power at the start point.
    pub fn initial_mu(&self, z: &CMat) -> f64 {
        let s = self.sys;
        let p = (0..z.nrows())
            .map(|k| s.weights[k] * z[(k, k)].norm_sqr())
            .fold(f64::INFINITY, f64::min);
        let p = if p > 0.0 && p.is_finite() { p } else { s.mean_noise() };
        0.1 * p / (z.nrows().max(2) as f64).ln()
    }
}

pub(crate) fn run_maxmin(
    ch: &ChannelSet,
    sys: &SystemConfig,
    opts: &SdomaloOptions,
    init: Option<InitialPoint>,
    model: LinkModel,
    update_phases: bool,
) -> Result<Solution> {
    opts.validate()?;
    let c = Ctx::new(ch, sys, model, &opts.inner_v, &opts.inner_u, opts.phase_update)?;
    let init = match init {
        Some(p) => p,
        None => InitialPoint::standard(ch, model)?,
    };
    init.check(ch)?;
    let InitialPoint { mut vhat, mut u } = init;
    let dk = Dinkelbach::new(sys);
    let min_rate = |z: &CMat| min_rate_from_sinrs(&sinrs_from_products(z, &sys.noise_power), &sys.weights);

    let mut z = c.products(&c.physical(&vhat), &u);
    let mut tau = tau_from_products(&z, sys);
    let mu0 = dk.initial_mu(&z);
    let mut mu_v = opts.mu_v_init.unwrap_or(mu0);
    let mut mu_u = opts.mu_u_init.unwrap_or(mu0);
    let floor = opts.mu_floor.unwrap_or(1e-8 * mu0);

    let mut report = SolveReport::new(min_rate(&z));
    let mut t = 0;
    report.termination = loop {
        if mu_v <= floor || (update_phases && mu_u <= floor) {
            break OuterTermination::MuFloor;
        }
        if t >= opts.max_outer {
            break OuterTermination::MaxOuter;
        }
        t += 1;

        let sv = c.v_step(vhat.clone(), &u, &dk.kernel(tau, mu_v))?;
        record_v(&mut report, &sv);
        let z_new = c.products(&c.physical(&sv.point), &u);
        match dk.accept(&z, &z_new, tau) {
            Some(t_new) => {
                vhat = sv.point;
                z = z_new;
                tau = t_new;
                report.accepted_v += 1;
            }
            None => mu_v *= opts.shrink,
        }
        report.tau_beam.push(tau);

        if update_phases {
            let v = c.physical(&vhat);
            let su = c.u_step(u.clone(), &v, &dk.kernel(tau, mu_u))?;
            record_u(&mut report, &su);
            let z_new = c.products(&v, &su.point);
            match dk.accept(&z, &z_new, tau) {
                Some(t_new) => {
                    u = su.point;
                    z = z_new;
                    tau = t_new;
                    report.accepted_u += 1;
                }
                None => mu_u *= opts.shrink,
            }
        }
        report.tau_phase.push(tau);

        report.tau_trace.push(tau);
        report.mu_v_trace.push(mu_v);
        report.mu_u_trace.push(mu_u);
        report.objective_trace.push(min_rate(&z));
        report.outer_iterations = t;
        if opts.record_iterates {
            report.iterates.push(Iterate {
                beamformer: c.physical(&vhat),
                reflection: u.entries().clone(),
                tau,
                mu_v,
                mu_u,
            });
        }
    };
    report.final_objective = *report.objective_trace.last().expect("non-empty trace");

    if let Some(q) = sys.quantizer_levels {
        u = quantize_phases(&u, q)?;
        z = c.products(&c.physical(&vhat), &u);
        if opts.refine_after_quantize {
            let tau_q = tau_from_products(&z, sys);
            let sv = c.v_step(vhat.clone(), &u, &dk.kernel(tau_q, mu_v))?;
            record_v(&mut report, &sv);
            let z_new = c.products(&c.physical(&sv.point), &u);
            if dk.accept(&z, &z_new, tau_q).is_some() {
                vhat = sv.point;
                z = z_new;
            }
        }
        report.final_objective = min_rate(&z);
    }

    Ok(Solution {
        beamformer: BeamformerMatrix(c.physical(&vhat)),
        reflection: u,
        lifted: Some(vhat),
        report,
    })
}

/// Weighted max-min rate optimization over `V` and a stacked `u`.
pub fn run_sdomalo(ch: &ChannelSet, sys: &SystemConfig, opts: &SdomaloOptions, init: Option<InitialPoint>) -> Result<Solution> {
    run_maxmin(ch, sys, opts, init, LinkModel::Direct, true)
}

/// Two-panel variant including the IRS1→IRS2 cascade.
pub fn run_sdomalo_inter_irs(
    ch: &ChannelSet,
    sys: &SystemConfig,
    opts: &SdomaloOptions,
    init: Option<InitialPoint>,
) -> Result<Solution> {
    if ch.num_panels() != 2 {
        return Err(Error::Unsupported(format!(
            "inter-IRS optimization needs two panels, got {}",
            ch.num_panels()
        )));
    }
    run_maxmin(ch, sys, opts, init, LinkModel::InterIrs, true)
}
