//! Single-block manifold solves shared by every alternating scheme.

use num_complex::Complex64;

use crate::error::{dim_check, Result};
use crate::gcg::{gcg_maximize, GcgOptions};
use crate::manifolds::{ComplexOblique, ComplexSphere, ObliquePoint, SpherePoint};
use crate::objective::{lifted_channel, Kernel, Link};
use crate::rates::{sinrs_from_products, LinkModel};
use crate::report::SolveReport;
use crate::system::SystemConfig;
use crate::channel::ChannelSet;
use crate::{CMat, CVec};

/// How the reflection vector of a multi-panel system is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseUpdate {
    /// One solve over all panels at once.
    #[default]
    Joint,
    /// One solve per panel in order, the others held fixed.
    Sequential,
}

/// Starting point of an alternating solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPoint {
    pub vhat: SpherePoint,
    pub u: ObliquePoint,
}

impl InitialPoint {
    /// `u = 1` and `V̂ = [Heff^H; 0] / ‖Heff‖_F` (all-equal entries if the
    /// effective channel vanishes).
    pub fn standard(ch: &ChannelSet, model: LinkModel) -> Result<Self> {
        let u = ObliquePoint::ones(ch.total_elements());
        Self::matched(ch, model, u)
    }

    /// Matched-filter `V̂` for a given reflection vector.
    pub fn matched(ch: &ChannelSet, model: LinkModel, u: ObliquePoint) -> Result<Self> {
        let link = Link::new(ch, model)?;
        let heff = link.heff(u.entries());
        let (k, n) = heff.shape();
        let mut v = CMat::zeros(n + 1, k);
        if heff.norm() > 0.0 {
            v.rows_mut(0, n).copy_from(&heff.adjoint());
        } else {
            v.fill(Complex64::new(1.0, 0.0));
        }
        Ok(Self {
            vhat: SpherePoint::from_unnormalized(v)?,
            u,
        })
    }

    pub(crate) fn check(&self, ch: &ChannelSet) -> Result<()> {
        let (n, k) = (ch.num_bs_antennas(), ch.num_users());
        dim_check(self.vhat.shape() == (n + 1, k), || {
            format!("lifted beamformer is {:?}, expected {:?}", self.vhat.shape(), (n + 1, k))
        })?;
        dim_check(self.u.len() == ch.total_elements(), || {
            format!("reflection vector has {} entries, expected {}", self.u.len(), ch.total_elements())
        })
    }
}

/// `V = √P V̂(1:N, :)`.
pub fn physical_beamformer(vhat: &SpherePoint, power: f64) -> CMat {
    let e = vhat.entries();
    e.rows(0, e.nrows() - 1).into_owned() * Complex64::from(power.sqrt())
}

/// Default CG restart period `max(N·K, SM)`.
pub(crate) fn restart_period(ch: &ChannelSet) -> usize {
    (ch.num_bs_antennas() * ch.num_users()).max(ch.total_elements())
}

pub(crate) fn with_restart(opts: &GcgOptions, ch: &ChannelSet) -> GcgOptions {
    let mut o = opts.clone();
    if o.restart_every.is_none() {
        o.restart_every = Some(restart_period(ch));
    }
    o
}

pub(crate) struct Ctx<'a> {
    pub link: Link<'a>,
    pub sys: &'a SystemConfig,
    pub opts_v: GcgOptions,
    pub opts_u: GcgOptions,
    pub phase_update: PhaseUpdate,
}

pub(crate) struct Step<P> {
    pub point: P,
    pub iterations: usize,
    pub feasibility: f64,
}

impl<'a> Ctx<'a> {
    pub fn new(
        ch: &'a ChannelSet,
        sys: &'a SystemConfig,
        model: LinkModel,
        inner_v: &GcgOptions,
        inner_u: &GcgOptions,
        phase_update: PhaseUpdate,
    ) -> Result<Self> {
        sys.validate()?;
        dim_check(sys.num_users == ch.num_users(), || {
            format!("system has {} users, channels have {}", sys.num_users, ch.num_users())
        })?;
        Ok(Self {
            link: Link::new(ch, model)?,
            sys,
            opts_v: with_restart(inner_v, ch),
            opts_u: with_restart(inner_u, ch),
            phase_update,
        })
    }

    pub fn heff(&self, u: &ObliquePoint) -> CMat {
        self.link.heff(u.entries())
    }

    pub fn physical(&self, vhat: &SpherePoint) -> CMat {
        physical_beamformer(vhat, self.sys.power_budget)
    }

    /// `Z = Heff(u) V`.
    pub fn products(&self, v: &CMat, u: &ObliquePoint) -> CMat {
        self.heff(u) * v
    }

    pub fn sinrs(&self, v: &CMat, u: &ObliquePoint) -> Vec<f64> {
        sinrs_from_products(&self.products(v, u), &self.sys.noise_power)
    }

    pub fn lifted(&self, u: &ObliquePoint) -> CMat {
        lifted_channel(&self.heff(u), self.sys.power_budget)
    }

    pub fn v_cost(&self, vhat: &SpherePoint, u: &ObliquePoint, kernel: &Kernel) -> f64 {
        kernel.value(&(self.lifted(u) * vhat.entries()))
    }

    pub fn v_egrad(&self, vhat: &SpherePoint, u: &ObliquePoint, kernel: &Kernel) -> CMat {
        let hh = self.lifted(u);
        hh.adjoint() * kernel.weights(&(&hh * vhat.entries()))
    }

    pub fn u_cost(&self, u: &ObliquePoint, v: &CMat, kernel: &Kernel) -> f64 {
        let x = self.link.ch.stacked_h() * v;
        kernel.value(&self.link.z_of_u(u.entries(), &x))
    }

    pub fn u_egrad(&self, u: &ObliquePoint, v: &CMat, kernel: &Kernel) -> CVec {
        let x = self.link.ch.stacked_h() * v;
        let z = self.link.z_of_u(u.entries(), &x);
        self.link.u_egrad(u.entries(), &x, &kernel.weights(&z))
    }

    pub fn v_step(&self, vhat: SpherePoint, u: &ObliquePoint, kernel: &Kernel) -> Result<Step<SpherePoint>> {
        let hh = self.lifted(u);
        let res = gcg_maximize(
            &ComplexSphere,
            |p: &SpherePoint| kernel.value(&(&hh * p.entries())),
            |p: &SpherePoint| hh.adjoint() * kernel.weights(&(&hh * p.entries())),
            vhat,
            &self.opts_v,
        )?;
        Ok(Step {
            iterations: res.iterations,
            feasibility: res.max_feasibility_error,
            point: res.point,
        })
    }

    pub fn u_step(&self, u: ObliquePoint, v: &CMat, kernel: &Kernel) -> Result<Step<ObliquePoint>> {
        let x = self.link.ch.stacked_h() * v;
        let sizes = self.link.ch.panel_sizes();
        if self.phase_update == PhaseUpdate::Joint || sizes.len() == 1 {
            let res = gcg_maximize(
                &ComplexOblique,
                |p: &ObliquePoint| kernel.value(&self.link.z_of_u(p.entries(), &x)),
                |p: &ObliquePoint| {
                    let z = self.link.z_of_u(p.entries(), &x);
                    self.link.u_egrad(p.entries(), &x, &kernel.weights(&z))
                },
                u,
                &self.opts_u,
            )?;
            return Ok(Step {
                iterations: res.iterations,
                feasibility: res.max_feasibility_error,
                point: res.point,
            });
        }

        let mut full = u;
        let mut iterations = 0;
        let mut feasibility: f64 = 0.0;
        let mut offset = 0;
        for &m in sizes {
            let splice = |seg: &ObliquePoint| -> CVec {
                let mut e = full.entries().clone();
                e.rows_mut(offset, m).copy_from(seg.entries());
                e
            };
            let res = gcg_maximize(
                &ComplexOblique,
                |p: &ObliquePoint| kernel.value(&self.link.z_of_u(&splice(p), &x)),
                |p: &ObliquePoint| {
                    let e = splice(p);
                    let z = self.link.z_of_u(&e, &x);
                    self.link.u_egrad(&e, &x, &kernel.weights(&z)).rows(offset, m).into_owned()
                },
                full.segment(offset, m),
                &self.opts_u,
            )?;
            iterations += res.iterations;
            feasibility = feasibility.max(res.max_feasibility_error);
            let e = splice(&res.point);
            full = ObliquePoint::new(e)?;
            offset += m;
        }
        Ok(Step {
            point: full,
            iterations,
            feasibility,
        })
    }
}

pub(crate) fn record_v(report: &mut SolveReport, step: &Step<SpherePoint>) {
    report.inner_iterations_v += step.iterations;
    report.max_sphere_error = report.max_sphere_error.max(step.feasibility);
}

pub(crate) fn record_u(report: &mut SolveReport, step: &Step<ObliquePoint>) {
    report.inner_iterations_u += step.iterations;
    report.max_oblique_error = report.max_oblique_error.max(step.feasibility);
}
