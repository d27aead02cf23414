//! Weighted sum-rate maximization by alternating a closed-form ζ update, a
//! beamformer solve on the trace-one sphere and a phase solve on the
//! oblique manifold (DOMALO).

use std::f64::consts::{LN_2, TAU};

use crate::blocks::{record_u, record_v, Ctx, InitialPoint, PhaseUpdate};
use crate::channel::ChannelSet;
use crate::error::{dim_check, Error, Result};
use crate::gcg::GcgOptions;
use crate::manifolds::{ObliquePoint, SpherePoint};
use crate::objective::Kernel;
use crate::rates::{sum_rate_from_sinrs, LinkModel};
use crate::report::{OuterTermination, SolveReport, Solution};
use crate::system::{BeamformerMatrix, SystemConfig};
use crate::{CMat, CVec};

#[derive(Debug, Clone, PartialEq)]
pub struct DomaloOptions {
    /// Stop once the sum-rate changes by at most this much between outer iterations.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub inner_v: GcgOptions,
    pub inner_u: GcgOptions,
    /// Panel update order in the inter-IRS variant.
    pub phase_update: PhaseUpdate,
    /// After quantizing phases, refresh ζ and re-solve `V̂` once at the
    /// quantized reflection vector.
    pub refine_after_quantize: bool,
}

impl Default for DomaloOptions {
    fn default() -> Self {
        Self {
            outer_tol: 1e-4,
            max_outer: 30,
            inner_v: GcgOptions::default(),
            inner_u: GcgOptions::default(),
            phase_update: PhaseUpdate::Joint,
            refine_after_quantize: true,
        }
    }
}

impl DomaloOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tol >= 0.0) {
            return Err(Error::InvalidParameter("outer_tol must be non-negative".into()));
        }
        self.inner_v.validate()?;
        self.inner_u.validate()
    }
}

/// Iterate of the alternating loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DomaloState {
    pub vhat: SpherePoint,
    pub u: ObliquePoint,
    pub zeta: Vec<f64>,
    pub outer_iter: usize,
}

impl DomaloState {
    pub fn beamformer(&self, sys: &SystemConfig) -> BeamformerMatrix {
        BeamformerMatrix(crate::blocks::physical_beamformer(&self.vhat, sys.power_budget))
    }
}

fn zeta_tilde(zeta: &[f64], weights: &[f64]) -> Vec<f64> {
    zeta.iter().zip(weights).map(|(z, w)| w * (1.0 + z)).collect()
}

fn ctx<'a>(ch: &'a ChannelSet, sys: &'a SystemConfig, model: LinkModel) -> Result<Ctx<'a>> {
    let o = GcgOptions::default();
    Ctx::new(ch, sys, model, &o, &o, PhaseUpdate::Joint)
}

fn check_zeta(zeta: &[f64], sys: &SystemConfig) -> Result<()> {
    dim_check(zeta.len() == sys.num_users, || {
        format!("expected {} auxiliary variables, got {}", sys.num_users, zeta.len())
    })
}

/// ζ_k = SINR_k at the state's beamformer and reflection vector.
pub fn update_zeta(state: &DomaloState, ch: &ChannelSet, sys: &SystemConfig) -> Result<Vec<f64>> {
    let c = ctx(ch, sys, LinkModel::Direct)?;
    Ok(c.sinrs(&c.physical(&state.vhat), &state.u))
}

/// Auxiliary objective in bits:
/// `(Σ ω_k ln(1+ζ_k) − Σ ω_k ζ_k + Σ ω_k(1+ζ_k) r_k/(1+r_k)) / ln 2`.
pub fn f2(v: &BeamformerMatrix, u: &ObliquePoint, zeta: &[f64], ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    check_zeta(zeta, sys)?;
    let c = ctx(ch, sys, LinkModel::Direct)?;
    let r = c.sinrs(&v.0, u);
    let mut acc = 0.0;
    for k in 0..zeta.len() {
        let w = sys.weights[k];
        acc += w * zeta[k].ln_1p() - w * zeta[k] + w * (1.0 + zeta[k]) * r[k] / (1.0 + r[k]);
    }
    Ok(acc / LN_2)
}

/// Beamformer sub-objective `Σ_k ζ̃_k |h̃_k^H v̂_k|² / (Σ_j |h̃_k^H v̂_j|² + σ_k²)`
/// with the lifted channel `√P [Heff, 0]`.
pub fn sumrate_cost_v_with(
    model: LinkModel,
    vhat: &SpherePoint,
    u: &ObliquePoint,
    zeta: &[f64],
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<f64> {
    check_zeta(zeta, sys)?;
    let c = ctx(ch, sys, model)?;
    InitialPoint { vhat: vhat.clone(), u: u.clone() }.check(ch)?;
    let k = Kernel::SumRate { zeta_tilde: zeta_tilde(zeta, &sys.weights), noise: &sys.noise_power };
    Ok(c.v_cost(vhat, u, &k))
}

/// Euclidean gradient of [`sumrate_cost_v_with`] with respect to `V̂`.
pub fn sumrate_egrad_v_with(
    model: LinkModel,
    vhat: &SpherePoint,
    u: &ObliquePoint,
    zeta: &[f64],
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<CMat> {
    check_zeta(zeta, sys)?;
    let c = ctx(ch, sys, model)?;
    InitialPoint { vhat: vhat.clone(), u: u.clone() }.check(ch)?;
    let k = Kernel::SumRate { zeta_tilde: zeta_tilde(zeta, &sys.weights), noise: &sys.noise_power };
    Ok(c.v_egrad(vhat, u, &k))
}

pub fn sumrate_cost_v(vhat: &SpherePoint, u: &ObliquePoint, zeta: &[f64], ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    sumrate_cost_v_with(LinkModel::Direct, vhat, u, zeta, ch, sys)
}

pub fn sumrate_egrad_v(vhat: &SpherePoint, u: &ObliquePoint, zeta: &[f64], ch: &ChannelSet, sys: &SystemConfig) -> Result<CMat> {
    sumrate_egrad_v_with(LinkModel::Direct, vhat, u, zeta, ch, sys)
}

fn check_beam(v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet) -> Result<()> {
    dim_check(v.0.shape() == (ch.num_bs_antennas(), ch.num_users()), || {
        format!("beamformer is {:?}", v.0.shape())
    })?;
    dim_check(u.len() == ch.total_elements(), || {
        format!("reflection vector has {} entries, expected {}", u.len(), ch.total_elements())
    })
}

/// Phase sub-objective for a fixed physical beamformer.
pub fn sumrate_cost_u_with(
    model: LinkModel,
    u: &ObliquePoint,
    v: &BeamformerMatrix,
    zeta: &[f64],
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<f64> {
    check_zeta(zeta, sys)?;
    check_beam(v, u, ch)?;
    let c = ctx(ch, sys, model)?;
    let k = Kernel::SumRate { zeta_tilde: zeta_tilde(zeta, &sys.weights), noise: &sys.noise_power };
    Ok(c.u_cost(u, &v.0, &k))
}

/// Euclidean gradient of [`sumrate_cost_u_with`] with respect to `u`. In the
/// inter-IRS model the first `M_1` entries are the gradient in `u_1` and
/// the rest the gradient in `u_2`.
pub fn sumrate_egrad_u_with(
    model: LinkModel,
    u: &ObliquePoint,
    v: &BeamformerMatrix,
    zeta: &[f64],
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<CVec> {
    check_zeta(zeta, sys)?;
    check_beam(v, u, ch)?;
    let c = ctx(ch, sys, model)?;
    let k = Kernel::SumRate { zeta_tilde: zeta_tilde(zeta, &sys.weights), noise: &sys.noise_power };
    Ok(c.u_egrad(u, &v.0, &k))
}

pub fn sumrate_cost_u(u: &ObliquePoint, v: &BeamformerMatrix, zeta: &[f64], ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    sumrate_cost_u_with(LinkModel::Direct, u, v, zeta, ch, sys)
}

pub fn sumrate_egrad_u(u: &ObliquePoint, v: &BeamformerMatrix, zeta: &[f64], ch: &ChannelSet, sys: &SystemConfig) -> Result<CVec> {
    sumrate_egrad_u_with(LinkModel::Direct, u, v, zeta, ch, sys)
}

/// Maps every phase to the nearest of `Q` uniform levels `2πq/Q` under
/// wrap-around distance; ties go to the lower level.
pub fn quantize_phases(u: &ObliquePoint, levels: usize) -> Result<ObliquePoint> {
    if levels == 0 {
        return Err(Error::InvalidParameter("quantizer needs at least one level".into()));
    }
    let step = TAU / levels as f64;
    let q: Vec<f64> = u
        .phases()
        .into_iter()
        .map(|p| {
            let mut best = 0.0;
            let mut best_d = f64::INFINITY;
            for i in 0..levels {
                let c = step * i as f64;
                let d = (p - c).rem_euclid(TAU);
                let d = d.min(TAU - d);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(ObliquePoint::from_phases(&q))
}

pub(crate) fn run_sumrate(
    ch: &ChannelSet,
    sys: &SystemConfig,
    opts: &DomaloOptions,
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
    let f1 = |vhat: &SpherePoint, u: &ObliquePoint| sum_rate_from_sinrs(&c.sinrs(&c.physical(vhat), u), &sys.weights);

    let mut report = SolveReport::new(f1(&vhat, &u));
    let mut prev = report.objective_trace[0];
    for t in 1..=opts.max_outer {
        let zeta = c.sinrs(&c.physical(&vhat), &u);
        let kernel = Kernel::SumRate { zeta_tilde: zeta_tilde(&zeta, &sys.weights), noise: &sys.noise_power };
        let sv = c.v_step(vhat, &u, &kernel)?;
        record_v(&mut report, &sv);
        vhat = sv.point;

        if update_phases {
            let v = c.physical(&vhat);
            let su = c.u_step(u, &v, &kernel)?;
            record_u(&mut report, &su);
            u = su.point;
        }

        let f = f1(&vhat, &u);
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
        if opts.refine_after_quantize {
            let zeta = c.sinrs(&c.physical(&vhat), &u);
            let kernel = Kernel::SumRate { zeta_tilde: zeta_tilde(&zeta, &sys.weights), noise: &sys.noise_power };
            let sv = c.v_step(vhat, &u, &kernel)?;
            record_v(&mut report, &sv);
            vhat = sv.point;
        }
        report.final_objective = f1(&vhat, &u);
    }

    Ok(Solution {
        beamformer: BeamformerMatrix(c.physical(&vhat)),
        reflection: u,
        lifted: Some(vhat),
        report,
    })
}

/// Weighted sum-rate maximization over `V` and a single stacked `u`.
///
/// Starts from [`InitialPoint::standard`] unless `init` is given. When
/// `sys.quantizer_levels` is set the phases are quantized after the loop.
pub fn run_domalo(ch: &ChannelSet, sys: &SystemConfig, opts: &DomaloOptions, init: Option<InitialPoint>) -> Result<Solution> {
    run_sumrate(ch, sys, opts, init, LinkModel::Direct, true)
}

/// Two-panel variant whose effective channel includes the IRS1→IRS2 cascade.
/// The returned reflection vector is `[u_1; u_2]`.
pub fn run_domalo_inter_irs(
    ch: &ChannelSet,
    sys: &SystemConfig,
    opts: &DomaloOptions,
    init: Option<InitialPoint>,
) -> Result<Solution> {
    if ch.num_panels() != 2 {
        return Err(Error::Unsupported(format!(
            "inter-IRS optimization needs two panels, got {}",
            ch.num_panels()
        )));
    }
    run_sumrate(ch, sys, opts, init, LinkModel::InterIrs, true)
}
