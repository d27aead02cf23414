//! Objective kernels shared by the sum-rate and max-min solvers.
//!
//! Every objective here depends on the beamformer and the reflection vector
//! only through `Z_kj = h_k^H v_j`. A kernel returns the value and
//! `W = 2 ∂f/∂Z*`; the chain rule to `V̂` or `u` is applied by [`Link`].

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::rates::{combiner, LinkModel};
use crate::{CMat, CVec};

/// `Σ_k ζ̃_k |Z_kk|² / (Σ_j |Z_kj|² + σ_k²)`.
pub(crate) fn sumrate_value(z: &CMat, zt: &[f64], noise: &[f64]) -> f64 {
    (0..z.nrows())
        .map(|k| {
            let d: f64 = z.row(k).iter().map(|x| x.norm_sqr()).sum::<f64>() + noise[k];
            zt[k] * z[(k, k)].norm_sqr() / d
        })
        .sum()
}

pub(crate) fn sumrate_weights(z: &CMat, zt: &[f64], noise: &[f64]) -> CMat {
    let k_users = z.nrows();
    let mut w = CMat::zeros(k_users, z.ncols());
    for k in 0..k_users {
        let d: f64 = z.row(k).iter().map(|x| x.norm_sqr()).sum::<f64>() + noise[k];
        let a = z[(k, k)].norm_sqr();
        for i in 0..z.ncols() {
            w[(k, i)] = z[(k, i)] * (-2.0 * zt[k] * a / (d * d));
        }
        w[(k, k)] += z[(k, k)] * (2.0 * zt[k] / d);
    }
    w
}

/// Per-user surplus `ω_k |Z_kk|² − τ (Σ_{j≠k} |Z_kj|² + σ_k²)`.
pub(crate) fn maxmin_terms(z: &CMat, weights: &[f64], tau: f64, noise: &[f64]) -> Vec<f64> {
    (0..z.nrows())
        .map(|k| {
            let a = z[(k, k)].norm_sqr();
            let total: f64 = z.row(k).iter().map(|x| x.norm_sqr()).sum();
            weights[k] * a - tau * (total - a + noise[k])
        })
        .collect()
}

pub(crate) fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("smoothing parameter must be positive, got {mu}")))
    }
}

/// `−μ log Σ_k exp(−t_k/μ)`, shifted by `min t` so no term overflows.
pub(crate) fn smooth_min(t: &[f64], mu: f64) -> f64 {
    let m = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let s: f64 = t.iter().map(|&x| (-(x - m) / mu).exp()).sum();
    m - mu * s.ln()
}

/// Normalized softmin weights `ψ_k / Σ ψ`.
pub(crate) fn softmin_weights(t: &[f64], mu: f64) -> Vec<f64> {
    let m = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let psi: Vec<f64> = t.iter().map(|&x| (-(x - m) / mu).exp()).collect();
    let s: f64 = psi.iter().sum();
    psi.into_iter().map(|p| p / s).collect()
}

pub(crate) fn maxmin_weights(z: &CMat, weights: &[f64], tau: f64, mu: f64, noise: &[f64]) -> CMat {
    let t = maxmin_terms(z, weights, tau, noise);
    let rho = softmin_weights(&t, mu);
    let mut w = CMat::zeros(z.nrows(), z.ncols());
    for k in 0..z.nrows() {
        for i in 0..z.ncols() {
            w[(k, i)] = if i == k {
                z[(k, k)] * (2.0 * rho[k] * weights[k])
            } else {
                z[(k, i)] * (-2.0 * rho[k] * tau)
            };
        }
    }
    w
}

/// Objective selector used by the generic block steps.
#[derive(Debug, Clone)]
pub(crate) enum Kernel<'a> {
    SumRate { zeta_tilde: Vec<f64>, noise: &'a [f64] },
    /// `scale · g̃` with `scale > 0`; solvers normalize by the noise power so
    /// gradient tolerances are meaningful at physical power levels.
    SmoothMin { weights: &'a [f64], tau: f64, mu: f64, noise: &'a [f64], scale: f64 },
}

impl Kernel<'_> {
    pub(crate) fn value(&self, z: &CMat) -> f64 {
        match self {
            Kernel::SumRate { zeta_tilde, noise } => sumrate_value(z, zeta_tilde, noise),
            Kernel::SmoothMin { weights, tau, mu, noise, scale } => {
                scale * smooth_min(&maxmin_terms(z, weights, *tau, noise), *mu)
            }
        }
    }

    pub(crate) fn weights(&self, z: &CMat) -> CMat {
        match self {
            Kernel::SumRate { zeta_tilde, noise } => sumrate_weights(z, zeta_tilde, noise),
            Kernel::SmoothMin { weights, tau, mu, noise, scale } => {
                maxmin_weights(z, weights, *tau, *mu, noise) * Complex64::from(*scale)
            }
        }
    }
}

/// Channel structure for the chain rule from `Z` to `V̂` or `u`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Link<'a> {
    pub ch: &'a ChannelSet,
    inter: Option<&'a CMat>,
}

impl<'a> Link<'a> {
    pub(crate) fn new(ch: &'a ChannelSet, model: LinkModel) -> Result<Self> {
        model.check(ch)?;
        let inter = match model {
            LinkModel::Direct => None,
            LinkModel::InterIrs => ch.inter_irs(),
        };
        Ok(Self { ch, inter })
    }

    pub(crate) fn combiner(&self, u: &CVec) -> CMat {
        combiner(self.ch, u, self.inter)
    }

    /// `K × N` effective channel.
    pub(crate) fn heff(&self, u: &CVec) -> CMat {
        self.combiner(u) * self.ch.stacked_h()
    }

    /// `Z` as a function of `u` for fixed `X = H V` (`SM × K`).
    pub(crate) fn z_of_u(&self, u: &CVec, x: &CMat) -> CMat {
        self.combiner(u) * x
    }

    /// `2 ∂f/∂u*` given `X = H V` and the kernel weights `W` at `Z(u)`.
    pub(crate) fn u_egrad(&self, u: &CVec, x: &CMat, w: &CMat) -> CVec {
        let g = self.ch.stacked_g();
        let s = x * w.adjoint();
        let total = u.len();
        let mut grad = CVec::zeros(total);
        match self.inter {
            None => {
                for m in 0..total {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..g.nrows() {
                        acc += g[(k, m)] * s[(m, k)];
                    }
                    grad[m] = acc;
                }
            }
            Some(lam) => {
                let m1 = self.ch.panel_sizes()[0];
                let m2 = self.ch.panel_sizes()[1];
                let cu = u.map(|z| z.conj());
                for k in 0..g.nrows() {
                    let g2 = CVec::from_fn(m2, |j, _| g[(k, m1 + j)]);
                    let a = CVec::from_fn(m2, |j, _| g2[j] * cu[m1 + j]);
                    let y = lam.tr_mul(&a);
                    let sk1 = CVec::from_fn(m1, |m, _| s[(m, k)]);
                    let back = lam * CVec::from_fn(m1, |m, _| cu[m] * sk1[m]);
                    for m in 0..m1 {
                        grad[m] += (g[(k, m)] + y[m]) * sk1[m];
                    }
                    for j in 0..m2 {
                        grad[m1 + j] += g2[j] * (s[(m1 + j, k)] + back[j]);
                    }
                }
            }
        }
        grad
    }
}

/// `√P [Heff, 0]`, the lifted channel acting on `V̂`.
pub(crate) fn lifted_channel(heff: &CMat, power: f64) -> CMat {
    let (k, n) = heff.shape();
    let mut out = CMat::zeros(k, n + 1);
    out.columns_mut(0, n).copy_from(&(heff * Complex64::from(power.sqrt())));
    out
}
