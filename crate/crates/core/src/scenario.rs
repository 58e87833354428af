//! Scenario parameters, unit conversion, and validation.
//!
//! [`ScenarioParams`] is the on-disk form: powers in dBm, field names matching
//! the config file keys. [`ScenarioParams::validate`] checks every invariant
//! and produces a [`ScenarioConfig`] with all powers converted to watts.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

/// Converts a power level in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * libm::log10(watts) + 30.0
}

/// SINR threshold `2^(Y·r/(τW)) − 1` a slot must reach to carry `rate`
/// packets of `bits` bits each.
pub fn spectral_threshold(bits: u32, rate: u32, tau_s: f64, bandwidth_hz: f64) -> f64 {
    if rate == 0 || bits == 0 {
        return 0.0;
    }
    libm::exp2(f64::from(bits) * f64::from(rate) / (tau_s * bandwidth_hz)) - 1.0
}

/// Raw scenario parameters as written in a config file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
#[allow(non_snake_case)]
pub struct ScenarioParams {
    /// Horizon in slots.
    pub T: u32,
    /// Packets user 1 must receive within the horizon.
    pub N: u32,
    /// Outage probability threshold.
    pub delta: f64,
    /// Slot length in seconds.
    pub tau_s: f64,
    /// Bandwidth in Hz.
    pub W_hz: f64,
    /// Total transmit power in dBm.
    pub P_dbm: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Noise-plus-interference power at user 1, dBm.
    pub sigma1_sq_dbm: f64,
    /// Noise-plus-interference power at user 2, dBm.
    pub sigma2_sq_dbm: f64,
    /// Packet size of user 1 in bits.
    pub Y1: u32,
    /// Packet size of user 2 in bits.
    pub Y2: u32,
    /// Power splits `(v1, v2)` as fractions of the total power.
    pub power_set: Vec<(f64, f64)>,
    /// Target rates of user 1 in packets per slot.
    pub rate_set_1: Vec<u32>,
    /// Target rates of user 2 in packets per slot.
    pub rate_set_2: Vec<u32>,
}

impl ScenarioParams {
    /// The two-user reference experiment: `T=4`, `N=13`, 1 ms slots, 1 MHz,
    /// 30 dBm, `β = 1e-6`, 1500-bit packets, −70 dBm noise, `δ = 0.1`,
    /// eight power splits and rates `{0,…,4}`.
    pub fn reference() -> Self {
        Self {
            T: 4,
            N: 13,
            delta: 0.1,
            tau_s: 1e-3,
            W_hz: 1e6,
            P_dbm: 30.0,
            beta1: 1e-6,
            beta2: 1e-6,
            sigma1_sq_dbm: -70.0,
            sigma2_sq_dbm: -70.0,
            Y1: 1500,
            Y2: 1500,
            power_set: vec![
                (0.0, 0.0),
                (0.0, 1.0),
                (0.1, 0.9),
                (0.3, 0.7),
                (0.5, 0.5),
                (0.7, 0.3),
                (0.9, 0.1),
                (1.0, 0.0),
            ],
            rate_set_1: vec![0, 1, 2, 3, 4],
            rate_set_2: vec![0, 1, 2, 3, 4],
        }
    }

    /// The random-placement experiment: the reference scenario with `T=10`,
    /// `N=16`, 1650-bit packets and rates `{0,1,2}`. Fading gains are
    /// overwritten per placement.
    pub fn placement_reference() -> Self {
        Self {
            T: 10,
            N: 16,
            Y1: 1650,
            Y2: 1650,
            rate_set_1: vec![0, 1, 2],
            rate_set_2: vec![0, 1, 2],
            ..Self::reference()
        }
    }

    /// Checks every invariant and converts powers to watts.
    pub fn validate(&self) -> Result<ScenarioConfig, ConfigError> {
        if self.T == 0 {
            return Err(ConfigError::NonPositive { field: "T" });
        }
        if self.N == 0 {
            return Err(ConfigError::NonPositive { field: "N" });
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(ConfigError::DeltaOutOfRange(self.delta));
        }
        positive("tau_s", self.tau_s)?;
        positive("W_hz", self.W_hz)?;
        positive("beta1", self.beta1)?;
        positive("beta2", self.beta2)?;
        if self.Y1 == 0 {
            return Err(ConfigError::NonPositive { field: "Y1" });
        }
        if self.Y2 == 0 {
            return Err(ConfigError::NonPositive { field: "Y2" });
        }
        let power_w = dbm_to_watts(self.P_dbm);
        let noise1_w = dbm_to_watts(self.sigma1_sq_dbm);
        let noise2_w = dbm_to_watts(self.sigma2_sq_dbm);
        positive("P_dbm", power_w)?;
        positive("sigma1_sq_dbm", noise1_w)?;
        positive("sigma2_sq_dbm", noise2_w)?;

        if self.power_set.is_empty() {
            return Err(ConfigError::EmptyPowerSet);
        }
        for (index, &(v1, v2)) in self.power_set.iter().enumerate() {
            // Splits summing to less than one are legal; (0, 0) is silence.
            let valid = v1.is_finite() && v2.is_finite() && v1 >= 0.0 && v2 >= 0.0;
            if !valid || v1 + v2 > 1.0 {
                return Err(ConfigError::InvalidPowerSplit { index, v1, v2 });
            }
        }
        check_rates("rate_set_1", &self.rate_set_1)?;
        check_rates("rate_set_2", &self.rate_set_2)?;

        Ok(ScenarioConfig {
            horizon: self.T,
            packets: self.N,
            delta: self.delta,
            tau_s: self.tau_s,
            bandwidth_hz: self.W_hz,
            power_w,
            beta: [self.beta1, self.beta2],
            noise_w: [noise1_w, noise2_w],
            packet_bits: [self.Y1, self.Y2],
            power_set: self.power_set.iter().map(|&(v1, v2)| PowerSplit { v1, v2 }).collect(),
            rate_sets: [self.rate_set_1.clone(), self.rate_set_2.clone()],
            params: self.clone(),
        })
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::NonPositive { field })
    }
}

fn check_rates(field: &'static str, rates: &[u32]) -> Result<(), ConfigError> {
    if rates.first() != Some(&0) {
        return Err(ConfigError::RateSetMissingZero { field });
    }
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::RateSetNotIncreasing { field });
    }
    Ok(())
}

/// Violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("`{field}` must be strictly positive")]
    NonPositive { field: &'static str },
    #[error("`delta` must lie in [0, 1], got {0}")]
    DeltaOutOfRange(f64),
    #[error("`power_set` must not be empty")]
    EmptyPowerSet,
    #[error("power_set[{index}] = ({v1}, {v2}) needs v1 >= 0, v2 >= 0 and v1 + v2 <= 1")]
    InvalidPowerSplit { index: usize, v1: f64, v2: f64 },
    #[error("`{field}` must contain the zero rate")]
    RateSetMissingZero { field: &'static str },
    #[error("`{field}` must be strictly increasing")]
    RateSetNotIncreasing { field: &'static str },
}

/// Fractions of the total power given to user 1 and user 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub v1: f64,
    pub v2: f64,
}

/// Validated scenario, SI units throughout. Index `0` of the per-user arrays
/// is user 1 (reliability sensitive), index `1` is user 2 (capacity hungry).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub horizon: u32,
    pub packets: u32,
    pub delta: f64,
    pub tau_s: f64,
    pub bandwidth_hz: f64,
    pub power_w: f64,
    pub beta: [f64; 2],
    pub noise_w: [f64; 2],
    pub packet_bits: [u32; 2],
    pub power_set: Vec<PowerSplit>,
    pub rate_sets: [Vec<u32>; 2],
    params: ScenarioParams,
}

impl ScenarioConfig {
    /// The parameters this config was validated from.
    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    /// SINR threshold for `rate` packets of user `user` (0 or 1) per slot.
    pub fn threshold(&self, user: usize, rate: u32) -> f64 {
        spectral_threshold(self.packet_bits[user], rate, self.tau_s, self.bandwidth_hz)
    }

    /// Mean received SNR per unit power fraction, `P·β_k/σ_k²`.
    pub fn snr_scale(&self, user: usize) -> f64 {
        self.power_w * self.beta[user] / self.noise_w[user]
    }

    /// Largest target rate of user 2; bounds per-slot capacity.
    pub fn max_rate_2(&self) -> u32 {
        self.rate_sets[1].last().copied().unwrap_or(0)
    }

    /// Returns a copy with a different outage threshold.
    pub fn with_delta(&self, delta: f64) -> Result<Self, ConfigError> {
        ScenarioParams {
            delta,
            ..self.params.clone()
        }
        .validate()
    }

    /// Returns a copy with different large-scale fading gains.
    pub fn with_fading(&self, beta1: f64, beta2: f64) -> Result<Self, ConfigError> {
        ScenarioParams {
            beta1,
            beta2,
            ..self.params.clone()
        }
        .validate()
    }
}
