use crate::error::{Error, Result};
use crate::CMat;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Dimensions, power budget, noise and user weights of one downlink system.
///
/// Powers are linear (watts); dBm values are converted at the config boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_bs_antennas: usize,
    pub elements_per_irs: usize,
    pub num_irs: usize,
    pub num_users: usize,
    pub power_budget: f64,
    /// Noise power per user.
    pub noise_power: Vec<f64>,
    pub weights: Vec<f64>,
    /// Phase quantizer levels; `None` means continuous phases.
    pub quantizer_levels: Option<usize>,
}

impl Default for SystemConfig {
    /// N = 20, M = 20, S = 2, K = 4, P = 30 dBm, σ² = −80 dBm, unit weights.
    fn default() -> Self {
        Self::uniform(20, 20, 2, 4, dbm_to_watts(30.0), dbm_to_watts(-80.0))
    }
}

impl SystemConfig {
    /// Configuration with equal noise power and unit weights for every user.
    pub fn uniform(n: usize, m: usize, s: usize, k: usize, power: f64, noise: f64) -> Self {
        Self {
            num_bs_antennas: n,
            elements_per_irs: m,
            num_irs: s,
            num_users: k,
            power_budget: power,
            noise_power: vec![noise; k],
            weights: vec![1.0; k],
            quantizer_levels: None,
        }
    }

    /// Total number of reflecting elements `S·M`.
    pub fn total_elements(&self) -> usize {
        self.num_irs * self.elements_per_irs
    }

    /// Same system with `k` users; per-user vectors are resized using the
    /// first user's noise power and weight.
    pub fn with_users(&self, k: usize) -> Self {
        let noise = self.noise_power.first().copied().unwrap_or(1.0);
        let weight = self.weights.first().copied().unwrap_or(1.0);
        Self {
            num_users: k,
            noise_power: vec![noise; k],
            weights: vec![weight; k],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [
            ("num_bs_antennas", self.num_bs_antennas),
            ("elements_per_irs", self.elements_per_irs),
            ("num_irs", self.num_irs),
            ("num_users", self.num_users),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(self.power_budget > 0.0) || !self.power_budget.is_finite() {
            return bad("power_budget must be positive".into());
        }
        if self.noise_power.len() != self.num_users || self.weights.len() != self.num_users {
            return bad(format!(
                "expected {} noise powers and weights, got {} and {}",
                self.num_users,
                self.noise_power.len(),
                self.weights.len()
            ));
        }
        if self.noise_power.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return bad("noise powers must be positive".into());
        }
        if self.weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return bad("weights must be non-negative".into());
        }
        if self.quantizer_levels == Some(0) {
            return bad("quantizer_levels must be at least 1".into());
        }
        Ok(())
    }

    pub fn mean_noise(&self) -> f64 {
        self.noise_power.iter().sum::<f64>() / self.noise_power.len() as f64
    }
}

/// Physical BS beamformer `V` (N×K, column k serves user k).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerMatrix(pub CMat);

impl BeamformerMatrix {
    pub fn entries(&self) -> &CMat {
        &self.0
    }

    /// Transmit power `tr(V V^H)`.
    pub fn power(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        Self(CMat::zeros(n, k))
    }
}
