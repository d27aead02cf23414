//! Effective channels, SINR and weighted rates.

use std::f64::consts::LN_2;

use crate::channel::ChannelSet;
use crate::error::{dim_check, Error, Result};
use crate::manifolds::ObliquePoint;
use crate::system::{BeamformerMatrix, SystemConfig};
use crate::{CMat, CVec};

/// How the reflection vector enters each user's effective channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkModel {
    /// `h_k^H = g_k^H Φ H`, panels acting independently.
    #[default]
    Direct,
    /// Adds the IRS1→IRS2 cascade `g_{2,k}^H Φ_2 Λ Φ_1 H_1`; needs two panels and `Λ`.
    InterIrs,
}

impl LinkModel {
    pub(crate) fn check(self, ch: &ChannelSet) -> Result<()> {
        if self == LinkModel::InterIrs && (ch.num_panels() != 2 || ch.inter_irs().is_none()) {
            return Err(Error::Config(
                "inter-IRS link requires two panels and an inter-IRS channel".into(),
            ));
        }
        Ok(())
    }
}

/// Row `k` of the reflected-path combiner: `c_k = g_k ∘ conj(u)`, plus the
/// cascade term on the IRS1 block when `Λ` is supplied.
pub(crate) fn combiner(ch: &ChannelSet, u: &CVec, inter: Option<&CMat>) -> CMat {
    let g = ch.stacked_g();
    let cu = u.map(|z| z.conj());
    let mut c = CMat::from_fn(g.nrows(), g.ncols(), |k, m| g[(k, m)] * cu[m]);
    if let Some(lam) = inter {
        let m1 = ch.panel_sizes()[0];
        let m2 = ch.panel_sizes()[1];
        for k in 0..g.nrows() {
            let a = CVec::from_fn(m2, |j, _| g[(k, m1 + j)] * cu[m1 + j]);
            let y = lam.tr_mul(&a);
            for m in 0..m1 {
                c[(k, m)] += y[m] * cu[m];
            }
        }
    }
    c
}

fn check_u(u: &ObliquePoint, ch: &ChannelSet) -> Result<()> {
    dim_check(u.len() == ch.total_elements(), || {
        format!("reflection vector has {} entries, expected {}", u.len(), ch.total_elements())
    })
}

fn check_v(v: &BeamformerMatrix, ch: &ChannelSet) -> Result<()> {
    dim_check(v.0.shape() == (ch.num_bs_antennas(), ch.num_users()), || {
        format!(
            "beamformer is {:?}, expected {:?}",
            v.0.shape(),
            (ch.num_bs_antennas(), ch.num_users())
        )
    })
}

/// Entries of the effective channel row `h_k^H = u^H diag(g_k^H) H`.
pub fn effective_channel(k: usize, u: &ObliquePoint, ch: &ChannelSet) -> Result<CVec> {
    check_u(u, ch)?;
    dim_check(k < ch.num_users(), || format!("user {k} out of range"))?;
    let g = ch.stacked_g().row(k);
    let c = CVec::from_fn(u.len(), |m, _| g[m] * u.entries()[m].conj());
    Ok(ch.stacked_h().tr_mul(&c))
}

/// `K × N` matrix whose row `k` is `h_k^H` under `model`.
pub fn effective_channel_matrix_with(model: LinkModel, u: &ObliquePoint, ch: &ChannelSet) -> Result<CMat> {
    check_u(u, ch)?;
    model.check(ch)?;
    let inter = match model {
        LinkModel::Direct => None,
        LinkModel::InterIrs => ch.inter_irs(),
    };
    Ok(combiner(ch, u.entries(), inter) * ch.stacked_h())
}

/// `K × N` matrix whose row `k` is `g_k^H Φ H`.
pub fn effective_channel_matrix(u: &ObliquePoint, ch: &ChannelSet) -> Result<CMat> {
    effective_channel_matrix_with(LinkModel::Direct, u, ch)
}

/// Per-user SINR from a `K × N` effective channel and an `N × K` beamformer.
pub fn sinrs_from_channel(heff: &CMat, v: &CMat, noise: &[f64]) -> Result<Vec<f64>> {
    dim_check(heff.ncols() == v.nrows() && heff.nrows() == v.ncols(), || {
        format!("channel {:?} incompatible with beamformer {:?}", heff.shape(), v.shape())
    })?;
    dim_check(noise.len() == heff.nrows(), || "one noise power per user required".into())?;
    let z = heff * v;
    Ok(sinrs_from_products(&z, noise))
}

/// SINRs from `Z_kj = h_k^H v_j`.
pub(crate) fn sinrs_from_products(z: &CMat, noise: &[f64]) -> Vec<f64> {
    (0..z.nrows())
        .map(|k| {
            let signal = z[(k, k)].norm_sqr();
            let total: f64 = z.row(k).iter().map(|x| x.norm_sqr()).sum();
            signal / (total - signal + noise[k])
        })
        .collect()
}

/// Per-user SINR under `model`.
pub fn sinrs_with(
    model: LinkModel,
    v: &BeamformerMatrix,
    u: &ObliquePoint,
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<Vec<f64>> {
    check_v(v, ch)?;
    let heff = effective_channel_matrix_with(model, u, ch)?;
    sinrs_from_channel(&heff, &v.0, &sys.noise_power)
}

/// SINR of user `k`: `|h_k^H v_k|² / (Σ_{j≠k} |h_k^H v_j|² + σ_k²)`.
pub fn sinr(k: usize, v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    dim_check(k < ch.num_users(), || format!("user {k} out of range"))?;
    Ok(sinrs_with(LinkModel::Direct, v, u, ch, sys)?[k])
}

/// SINR of user `k` including the IRS1→IRS2 cascade.
pub fn sinr_inter_irs(
    k: usize,
    v: &BeamformerMatrix,
    u1: &ObliquePoint,
    u2: &ObliquePoint,
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<f64> {
    dim_check(k < ch.num_users(), || format!("user {k} out of range"))?;
    let u = ObliquePoint::concat(&[u1, u2]);
    Ok(sinrs_with(LinkModel::InterIrs, v, &u, ch, sys)?[k])
}

/// `Σ_k ω_k log₂(1 + r_k)`.
pub fn sum_rate_from_sinrs(sinrs: &[f64], weights: &[f64]) -> f64 {
    sinrs.iter().zip(weights).map(|(r, w)| w * r.ln_1p() / LN_2).sum()
}

/// `min_k ω_k log₂(1 + r_k)`.
pub fn min_rate_from_sinrs(sinrs: &[f64], weights: &[f64]) -> f64 {
    sinrs
        .iter()
        .zip(weights)
        .map(|(r, w)| w * r.ln_1p() / LN_2)
        .fold(f64::INFINITY, f64::min)
}

pub fn weighted_sum_rate_with(
    model: LinkModel,
    v: &BeamformerMatrix,
    u: &ObliquePoint,
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<f64> {
    Ok(sum_rate_from_sinrs(&sinrs_with(model, v, u, ch, sys)?, &sys.weights))
}

pub fn weighted_min_rate_with(
    model: LinkModel,
    v: &BeamformerMatrix,
    u: &ObliquePoint,
    ch: &ChannelSet,
    sys: &SystemConfig,
) -> Result<f64> {
    Ok(min_rate_from_sinrs(&sinrs_with(model, v, u, ch, sys)?, &sys.weights))
}

/// Weighted sum-rate in bits per channel use.
pub fn weighted_sum_rate(v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    weighted_sum_rate_with(LinkModel::Direct, v, u, ch, sys)
}

/// Weighted minimal rate in bits per channel use.
pub fn weighted_min_rate(v: &BeamformerMatrix, u: &ObliquePoint, ch: &ChannelSet, sys: &SystemConfig) -> Result<f64> {
    weighted_min_rate_with(LinkModel::Direct, v, u, ch, sys)
}
