//! Protocol domain types and the per-attempt decoding model: the slotted
//! time-frequency grid, the conditional arrival distribution of contenders in
//! a time-frequency slot (TFS), the Chase-combined SINR across retransmission
//! attempts, and the largest occupancy a given attempt can tolerate.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Capacity model used for decoding thresholds and error rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Infinite block length: Shannon capacity, hard SINR threshold.
    Ibl,
    /// Finite block length: normal approximation, soft block-error rate.
    Fbl,
}

/// Received-power model at the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fading {
    /// Perfect power control: every device is received at SNR rho exactly.
    #[serde(rename = "constant")]
    ConstantSnr,
    /// Rayleigh block fading: channel power is exponential with mean 1/mu.
    #[serde(rename = "rayleigh")]
    Rayleigh { mu: f64 },
}

/// Mapping from the aggregate per-frame rate lambda_M to the Poisson mean
/// occupancy of a single TFS.
///
/// The per-slot convention nu = lambda_M / (B*M) matches the frame's physical
/// accounting (lambda_M attempts spread over M slots of B bins each). The
/// per-frame convention nu = lambda_M / B reproduces the printed closed forms,
/// which are derived in that parameterization. The two coincide at M = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuConvention {
    #[default]
    PerSlot,
    PerFrame,
}

impl NuConvention {
    /// Per-TFS Poisson mean for aggregate rate `lambda_m` on a (B, M) grid.
    pub fn nu(self, lambda_m: f64, bins: u32, attempts: u32) -> PerTfsRate {
        let b = f64::from(bins);
        match self {
            NuConvention::PerSlot => PerTfsRate::new(lambda_m / (b * f64::from(attempts))),
            NuConvention::PerFrame => PerTfsRate::new(lambda_m / b),
        }
    }
}

/// Physical inputs of an optimization or simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Shared bandwidth W in Hz.
    pub bandwidth_hz: f64,
    /// Latency budget T in seconds; a payload missing it is an outage.
    pub deadline_s: f64,
    /// Payload size L in bits.
    pub payload_bits: u32,
    /// Outage target delta in (0, 1).
    pub outage_target: f64,
    /// Received SNR rho (linear).
    pub snr_linear: f64,
    pub fading: Fading,
    pub regime: Regime,
}

impl Scenario {
    /// Total symbol budget N = floor(T * W); floored so it is never overstated.
    pub fn symbol_budget(&self) -> u64 {
        (self.deadline_s * self.bandwidth_hz).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(Error::InvalidConfig(format!("bandwidth_hz = {}", self.bandwidth_hz)));
        }
        if !(self.deadline_s > 0.0) || !self.deadline_s.is_finite() {
            return Err(Error::InvalidConfig(format!("deadline_s = {}", self.deadline_s)));
        }
        if self.payload_bits == 0 {
            return Err(Error::InvalidConfig("payload_bits = 0".into()));
        }
        if !(self.outage_target > 0.0 && self.outage_target < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "outage_target = {} not in (0, 1)",
                self.outage_target
            )));
        }
        if !(self.snr_linear > 0.0) || !self.snr_linear.is_finite() {
            return Err(Error::InvalidConfig(format!("snr_linear = {}", self.snr_linear)));
        }
        if let Fading::Rayleigh { mu } = self.fading {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::InvalidConfig(format!("rayleigh mu = {mu}")));
            }
        }
        if self.symbol_budget() < 1 {
            return Err(Error::InvalidConfig("symbol budget T*W < 1".into()));
        }
        Ok(())
    }
}

/// A candidate time-frequency partition: B frequency bins, M transmission
/// attempts, and the induced block length and decoding threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub bins: u32,
    pub attempts: u32,
    /// N = floor(T * W).
    pub symbol_budget: u64,
    /// n = floor(N / (B * M)); one encoded block per attempt.
    pub block_length: u64,
    /// Payload carried per block, from the scenario.
    pub payload_bits: u32,
    /// Decoding SINR threshold Gamma. IBL: 2^{L/n} - 1. FBL: the rate
    /// inversion at the per-attempt error budget (reporting only; the FBL
    /// outage math uses the block error rate directly).
    pub sinr_threshold: f64,
}

impl Grid {
    /// Build the grid for `scenario` with `bins` x `attempts` partitioning.
    ///
    /// Fails if even one symbol per block cannot be afforded.
    pub fn new(scenario: &Scenario, bins: u32, attempts: u32) -> Result<Grid> {
        if bins < 1 || attempts < 1 {
            return Err(Error::InvalidConfig(format!("bins = {bins}, attempts = {attempts}")));
        }
        let n_total = scenario.symbol_budget();
        let block_length = n_total / (u64::from(bins) * u64::from(attempts));
        if block_length < 1 {
            return Err(Error::InvalidConfig(format!(
                "block length 0: N = {n_total}, B*M = {}",
                u64::from(bins) * u64::from(attempts)
            )));
        }
        let sinr_threshold = match scenario.regime {
            Regime::Ibl => ibl_threshold(scenario.payload_bits, block_length),
            Regime::Fbl => {
                // Per-attempt error budget delta^{1/M}; when that is >= 1/2 the
                // normal-approximation inversion is undefined (the dispersion
                // term would raise the rate above Shannon), so report the
                // eps = 1/2 threshold where the dispersion term vanishes.
                let eps = scenario.outage_target.powf(1.0 / f64::from(attempts));
                if eps < 0.5 {
                    crate::fbl::fbl_threshold(block_length, scenario.payload_bits, eps)?
                } else {
                    let n = block_length as f64;
                    let l = f64::from(scenario.payload_bits);
                    2f64.powf((l - 0.5 * n.log2()) / n) - 1.0
                }
            }
        };
        Ok(Grid {
            bins,
            attempts,
            symbol_budget: n_total,
            block_length,
            payload_bits: scenario.payload_bits,
            sinr_threshold,
        })
    }
}

/// Poisson mean occupancy of one TFS (the engine's explicit load parameter).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PerTfsRate(f64);

impl PerTfsRate {
    pub fn new(mean: f64) -> PerTfsRate {
        assert!(mean >= 0.0, "per-TFS rate must be >= 0, got {mean}");
        PerTfsRate(mean)
    }

    pub fn mean(self) -> f64 {
        self.0
    }
}

/// One realization of the typical device's contention history: per-attempt
/// TFS occupancies, and under Rayleigh fading the desired channel power
/// (constant across the device's attempts) plus per-attempt aggregate
/// interference powers.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptHistory {
    /// k_1..k_m, each >= 1 (the device itself occupies its TFS).
    pub occupancies: Vec<u32>,
    /// h_1 > 0; Rayleigh only.
    pub desired_channel: Option<f64>,
    /// I_{K_i} = rho * sum of interferer channel powers in attempt i.
    pub interference: Option<Vec<f64>>,
}

impl AttemptHistory {
    pub fn constant_snr(occupancies: Vec<u32>) -> AttemptHistory {
        AttemptHistory { occupancies, desired_channel: None, interference: None }
    }

    pub fn rayleigh(desired_channel: f64, interference: Vec<f64>) -> AttemptHistory {
        let occupancies = vec![1; interference.len()];
        AttemptHistory {
            occupancies,
            desired_channel: Some(desired_channel),
            interference: Some(interference),
        }
    }
}

/// Truncation point for sums over the conditional Poisson occupancy: the
/// neglected tail mass beyond ceil(nu + 10 sqrt(nu) + 50) is below 1e-12.
/// Hard-capped so pathological loads cannot demand unbounded tables; the
/// neglected mass always lands in the evaluators' truncation accounting.
pub fn occupancy_truncation(nu: PerTfsRate) -> u32 {
    let v = nu.mean();
    (v + 10.0 * v.sqrt() + 50.0).ceil().min(2e7) as u32
}

/// Conditional probability D(k, nu) that a nonempty TFS holds exactly k
/// devices when the occupancy is Poisson with mean nu:
/// D(k, nu) = nu^k e^{-nu} / (k! (1 - e^{-nu})), k >= 1.
pub fn conditional_arrival_pmf(k: u32, nu: PerTfsRate) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("conditional_arrival_pmf", "k = 0 (a nonempty TFS has k >= 1)"));
    }
    let v = nu.mean();
    if !(v > 0.0) {
        return Err(Error::domain("conditional_arrival_pmf", format!("nu = {v} <= 0")));
    }
    // log-space for stability at large k / small nu
    let kf = f64::from(k);
    let log_p = kf * v.ln() - v - libm::lgamma(kf + 1.0) - (-libm::expm1(-v)).ln();
    Ok(log_p.exp())
}

/// Fills `out[k]` with D(k, nu) for k = 0..=k_max (out[0] = 0).
pub(crate) fn conditional_pmf_table(nu: PerTfsRate, k_max: u32) -> Vec<f64> {
    let v = nu.mean();
    let mut out = vec![0.0; k_max as usize + 1];
    if v <= 0.0 {
        return out;
    }
    if v < 700.0 {
        let norm = -libm::expm1(-v); // 1 - e^{-nu}
        let mut p = (-v).exp(); // Poisson pmf at k = 0
        for k in 1..=k_max {
            p *= v / f64::from(k);
            out[k as usize] = p / norm;
        }
    } else {
        // e^{-nu} underflows; anchor each entry in log space instead.
        let ln_v = v.ln();
        let mut ln_fact = 0.0;
        for k in 1..=k_max {
            ln_fact += f64::from(k).ln();
            out[k as usize] = (f64::from(k) * ln_v - v - ln_fact).exp();
        }
    }
    out
}

/// IBL decoding threshold Gamma = 2^{L/n} - 1; strictly decreasing in n.
pub fn ibl_threshold(payload_bits: u32, block_length: u64) -> f64 {
    2f64.powf(f64::from(payload_bits) / block_length as f64) - 1.0
}

/// Chase combiner output SINR after attempt m at constant SNR rho:
/// rho m^2 / (m + rho (sum_{i<=m} k_i - m)). Equals rho*m when every
/// attempt was interference-free.
pub fn chase_sinr_constant(history: &AttemptHistory, rho: f64, m: u32) -> f64 {
    let m_us = m as usize;
    assert!(m >= 1 && m_us <= history.occupancies.len(), "attempt index out of range");
    let sum_k: u64 = history.occupancies[..m_us].iter().map(|&k| u64::from(k)).sum();
    let mf = f64::from(m);
    rho * mf * mf / (mf + rho * (sum_k as f64 - mf))
}

/// Chase combiner output SINR after attempt m under Rayleigh block fading:
/// m^2 rho h_1 / (m + sum_{i<=m} I_{K_i}).
pub fn chase_sinr_rayleigh(history: &AttemptHistory, rho: f64, m: u32) -> f64 {
    let m_us = m as usize;
    let h1 = history.desired_channel.expect("rayleigh history requires desired_channel");
    let interf = history.interference.as_ref().expect("rayleigh history requires interference");
    assert!(m >= 1 && m_us <= interf.len(), "attempt index out of range");
    let total_i: f64 = interf[..m_us].iter().sum();
    let mf = f64::from(m);
    mf * mf * rho * h1 / (mf + total_i)
}

/// Largest occupancy k*_m the m-th attempt can carry and still decode, given
/// the occupancies of the previous attempts:
/// k*_m = max{ floor(m + m^2/Gamma - m/rho - sum_{i<m} k_i), 1 }.
pub fn max_supportable_occupancy(history_prefix: &[u32], m: u32, gamma: f64, rho: f64) -> u32 {
    assert!(gamma > 0.0 && rho > 0.0 && m >= 1);
    assert!(history_prefix.len() + 1 >= m as usize, "prefix must cover attempts 1..m-1");
    let mf = f64::from(m);
    let prefix_sum: f64 = history_prefix[..(m as usize - 1)]
        .iter()
        .map(|&k| f64::from(k))
        .sum();
    let arg = mf + mf * mf / gamma - mf / rho - prefix_sum;
    if arg < 1.0 {
        1
    } else {
        // arg can exceed u32 for tiny Gamma; saturate.
        arg.floor().min(f64::from(u32::MAX)) as u32
    }
}

/// Unclamped floor argument of k*_m; callers use it to know whether the
/// clamp in [`max_supportable_occupancy`] was active.
#[cfg(test)]
pub(crate) fn supportable_floor_arg(prefix_sum: u64, m: u32, gamma: f64, rho: f64) -> f64 {
    let mf = f64::from(m);
    mf + mf * mf / gamma - mf / rho - prefix_sum as f64
}
