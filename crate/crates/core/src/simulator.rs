//! Slot-level Monte Carlo simulation of the random-access protocol.
//!
//! Two occupancy models are supported:
//!
//! * `Protocol` — the physical population: Poisson arrivals per slot, failed
//!   devices persist and retransmit (size bias and retransmission correlation
//!   included), each device has exactly M consecutive slots from its arrival
//!   slot before the deadline expires.
//! * `AnalyticIid` — an event-level rendering of the analysis's own model of
//!   the typical device: its TFS occupancy at each attempt is drawn i.i.d.
//!   from the conditional distribution D(., nu), with nu derived from the
//!   aggregate-rate fixed point. This is the comparator the closed forms can
//!   be validated against at tight statistical tolerances; the gap between
//!   the two models is itself a reported quantity, not an error.
//!
//! Runs are bit-reproducible for a given seed: every slot (and, in the
//! analytic model, every tagged device) consumes an independent counter-keyed
//! stream of the root seed.

use crate::analysis::outage_with_aggregate;
use crate::error::{Error, Result};
use crate::fbl::block_error_rate;
use crate::ibl::EvalBudget;
use crate::model::{Fading, Grid, NuConvention, Regime, Scenario};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    ConstantSnr,
    /// Desired channel drawn once per device (constant across its attempts);
    /// interferer channels redrawn every slot.
    RayleighBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OccupancyModel {
    #[default]
    Protocol,
    AnalyticIid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub grid: Grid,
    /// New-arrival rate per frame of T seconds.
    pub lambda_per_frame: f64,
    /// 0 = automatic: 20 M slots, extended until the active-device count
    /// drifts < 1% across 10 M-slot windows.
    pub warmup_slots: u64,
    /// Number of tagged arrivals to measure.
    pub measured_arrivals: u64,
    pub seed: u64,
    pub channel_model: ChannelModel,
    pub occupancy: OccupancyModel,
    pub nu_convention: NuConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub arrivals_measured: u64,
    pub failures: u64,
    pub p_fail_hat: f64,
    pub binomial_stderr: f64,
    /// Index m-1: measured devices first decoded at attempt m.
    pub per_attempt_success_histogram: Vec<u64>,
    pub mean_occupancy_per_tfs: f64,
}

impl SimStats {
    fn from_counts(histogram: Vec<u64>, failures: u64, mean_occupancy: f64) -> SimStats {
        let successes: u64 = histogram.iter().sum();
        let measured = successes + failures;
        let p = failures as f64 / measured.max(1) as f64;
        SimStats {
            arrivals_measured: measured,
            failures,
            p_fail_hat: p,
            binomial_stderr: (p * (1.0 - p) / measured.max(1) as f64).sqrt(),
            per_attempt_success_histogram: histogram,
            mean_occupancy_per_tfs: mean_occupancy,
        }
    }
}

/// Active-device cap: beyond this the offered load has no steady state.
const MAX_ACTIVE_DEVICES: usize = 1_000_000;

struct Device {
    attempt: u32,
    occupancy_sum: u64,
    /// Rayleigh: own channel power, fixed across the device's attempts.
    own_channel: f64,
    /// Rayleigh: accumulated interference sum_{i<=m} I_{K_i}.
    interference_sum: f64,
    /// Some(slot-local index) while being measured.
    measured: bool,
    bin: u32,
    slot_channel: f64,
}

pub fn run_simulation(config: &SimConfig) -> Result<SimStats> {
    config.scenario.validate()?;
    if config.measured_arrivals == 0 {
        return Err(Error::InvalidConfig("measured_arrivals = 0".into()));
    }
    if !(config.lambda_per_frame > 0.0) || !config.lambda_per_frame.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "lambda_per_frame = {}",
            config.lambda_per_frame
        )));
    }
    if config.scenario.regime == Regime::Fbl
        && config.channel_model == ChannelModel::RayleighBlock
    {
        return Err(Error::InvalidConfig(
            "finite-block-length simulation under Rayleigh fading is not supported".into(),
        ));
    }
    match config.occupancy {
        OccupancyModel::Protocol => run_protocol(config),
        OccupancyModel::AnalyticIid => run_analytic_iid(config),
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn mu_of(config: &SimConfig) -> f64 {
    match config.scenario.fading {
        Fading::Rayleigh { mu } => mu,
        Fading::ConstantSnr => 1.0,
    }
}

/// Success test for one attempt given the combined SINR.
fn attempt_succeeds(
    config: &SimConfig,
    sinr: f64,
    rng: &mut ChaCha12Rng,
) -> bool {
    match config.scenario.regime {
        Regime::Ibl => sinr >= config.grid.sinr_threshold,
        Regime::Fbl => {
            let eps = block_error_rate(
                config.grid.block_length,
                config.grid.payload_bits,
                sinr,
            );
            rng.gen::<f64>() >= eps
        }
    }
}

fn run_protocol(config: &SimConfig) -> Result<SimStats> {
    let attempts = config.grid.attempts;
    let bins = config.grid.bins;
    let rho = config.scenario.snr_linear;
    let rayleigh = config.channel_model == ChannelModel::RayleighBlock;
    let mu = mu_of(config);
    let lambda_slot = config.lambda_per_frame / f64::from(attempts);
    let poisson = Poisson::new(lambda_slot)
        .map_err(|e| Error::InvalidConfig(format!("arrival rate: {e}")))?;
    let exp_dist =
        Exp::new(mu).map_err(|e| Error::InvalidConfig(format!("fading rate: {e}")))?;

    let mut devices: Vec<Device> = Vec::new();
    let mut histogram = vec![0u64; attempts as usize];
    let mut failures = 0u64;
    let mut measured_started = 0u64;
    let mut occupancy_acc: u64 = 0;
    let mut occupancy_slots: u64 = 0;

    // Warmup control.
    let auto_warmup = config.warmup_slots == 0;
    let base_warmup = if auto_warmup {
        20 * u64::from(attempts)
    } else {
        config.warmup_slots
    };
    let window = 10 * u64::from(attempts);
    let mut window_active: u64 = 0;
    let mut prev_window_mean: Option<f64> = None;
    let mut warm = false;

    let mut bin_occupancy = vec![0u32; bins as usize];
    let mut bin_channel_sum = vec![0.0f64; bins as usize];

    let mut slot: u64 = 0;
    loop {
        let mut rng = stream_rng(config.seed, slot);

        // New arrivals; tag them for measurement once warm.
        let n_new = poisson.sample(&mut rng) as u64;
        if devices.len() as u64 + n_new > MAX_ACTIVE_DEVICES as u64 {
            return Err(Error::DivergentLoad(format!(
                "active devices would exceed {MAX_ACTIVE_DEVICES} at slot {slot}"
            )));
        }
        for _ in 0..n_new {
            let measured = warm && measured_started < config.measured_arrivals;
            if measured {
                measured_started += 1;
            }
            devices.push(Device {
                attempt: 0,
                occupancy_sum: 0,
                own_channel: if rayleigh { exp_dist.sample(&mut rng) } else { 1.0 },
                interference_sum: 0.0,
                measured,
                bin: 0,
                slot_channel: 0.0,
            });
        }

        // Bin selection and per-slot channels.
        bin_occupancy.iter_mut().for_each(|c| *c = 0);
        bin_channel_sum.iter_mut().for_each(|c| *c = 0.0);
        for d in devices.iter_mut() {
            d.bin = rng.gen_range(0..bins);
            bin_occupancy[d.bin as usize] += 1;
            if rayleigh {
                d.slot_channel = exp_dist.sample(&mut rng);
                bin_channel_sum[d.bin as usize] += d.slot_channel;
            }
        }
        window_active += devices.len() as u64;
        if warm {
            occupancy_acc += devices.len() as u64;
            occupancy_slots += u64::from(bins);
        }

        // Decode attempts; keep unresolved devices.
        let mut idx = 0;
        while idx < devices.len() {
            let d = &mut devices[idx];
            d.attempt += 1;
            let m = d.attempt;
            let k = bin_occupancy[d.bin as usize];
            let sinr = if rayleigh {
                let interference =
                    rho * (bin_channel_sum[d.bin as usize] - d.slot_channel).max(0.0);
                d.interference_sum += interference;
                let mf = f64::from(m);
                mf * mf * rho * d.own_channel / (mf + d.interference_sum)
            } else {
                d.occupancy_sum += u64::from(k);
                let mf = f64::from(m);
                rho * mf * mf / (mf + rho * (d.occupancy_sum as f64 - mf))
            };
            let succeeded = attempt_succeeds(config, sinr, &mut rng);
            if succeeded || m >= attempts {
                if d.measured {
                    if succeeded {
                        histogram[m as usize - 1] += 1;
                    } else {
                        failures += 1;
                    }
                }
                devices.swap_remove(idx);
            } else {
                idx += 1;
            }
        }

        slot += 1;

        // Warmup bookkeeping.
        if !warm {
            if slot >= base_warmup {
                if !auto_warmup {
                    warm = true;
                } else if slot.is_multiple_of(window) {
                    let mean = window_active as f64 / window as f64;
                    if let Some(prev) = prev_window_mean {
                        let drift = (mean - prev).abs() / prev.max(1e-12);
                        if drift < 0.01 || slot > base_warmup + 500 * window {
                            warm = true;
                        }
                    }
                    prev_window_mean = Some(mean);
                    window_active = 0;
                }
            }
            if warm {
                window_active = 0;
            }
            continue;
        }

        // Done once the measurement quota is issued and every tagged device
        // has resolved.
        if measured_started >= config.measured_arrivals
            && devices.iter().all(|d| !d.measured)
        {
            break;
        }
    }

    let mean_occ = occupancy_acc as f64 / occupancy_slots.max(1) as f64;
    Ok(SimStats::from_counts(histogram, failures, mean_occ))
}

fn run_analytic_iid(config: &SimConfig) -> Result<SimStats> {
    let attempts = config.grid.attempts;
    let rho = config.scenario.snr_linear;
    let rayleigh = config.channel_model == ChannelModel::RayleighBlock;
    let mu = mu_of(config);

    // Per-TFS load from the analytic fixed point at this arrival rate.
    let out = outage_with_aggregate(
        &config.scenario,
        &config.grid,
        config.lambda_per_frame,
        config.nu_convention,
        &EvalBudget::default(),
        None,
    )?;
    let nu = config
        .nu_convention
        .nu(out.lambda_aggregate, config.grid.bins, config.grid.attempts);
    if nu.mean() <= 0.0 {
        return Err(Error::InvalidConfig("per-TFS load is zero".into()));
    }
    let sampler = crate::ibl::OccupancySampler::new(nu);
    let exp_dist =
        Exp::new(mu).map_err(|e| Error::InvalidConfig(format!("fading rate: {e}")))?;

    let mut histogram = vec![0u64; attempts as usize];
    let mut failures = 0u64;
    let mut occupancy_acc: u64 = 0;
    let mut occupancy_draws: u64 = 0;

    for device in 0..config.measured_arrivals {
        let mut rng = stream_rng(config.seed, device);
        let own = if rayleigh { exp_dist.sample(&mut rng) } else { 1.0 };
        let mut occupancy_sum: u64 = 0;
        let mut interference_sum = 0.0;
        let mut resolved = false;
        for m in 1..=attempts {
            let k = sampler.sample(&mut rng);
            occupancy_acc += u64::from(k);
            occupancy_draws += 1;
            let mf = f64::from(m);
            let sinr = if rayleigh {
                let mut interference = 0.0;
                for _ in 1..k {
                    interference += exp_dist.sample(&mut rng);
                }
                interference_sum += rho * interference;
                mf * mf * rho * own / (mf + interference_sum)
            } else {
                occupancy_sum += u64::from(k);
                rho * mf * mf / (mf + rho * (occupancy_sum as f64 - mf))
            };
            if attempt_succeeds(config, sinr, &mut rng) {
                histogram[m as usize - 1] += 1;
                resolved = true;
                break;
            }
        }
        if !resolved {
            failures += 1;
        }
    }

    let mean_occ = occupancy_acc as f64 / occupancy_draws.max(1) as f64;
    Ok(SimStats::from_counts(histogram, failures, mean_occ))
}

/// Empirical aggregate rate from the per-attempt histogram:
/// lambda [1 + sum_{m=1}^{M-1} (fraction still unresolved after m attempts)].
pub fn estimate_aggregate_rate(stats: &SimStats, lambda: f64, attempts: u32) -> f64 {
    let measured = stats.arrivals_measured.max(1) as f64;
    let mut unresolved = measured;
    let mut factor = 1.0;
    for m in 1..attempts {
        unresolved -= stats.per_attempt_success_histogram[m as usize - 1] as f64;
        factor += unresolved / measured;
    }
    lambda * factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibl::outage_curve_ibl_constant;
    use crate::model::PerTfsRate;

    fn base_config(occupancy: OccupancyModel) -> SimConfig {
        let scenario = Scenario {
            bandwidth_hz: 10_000.0,
            deadline_s: 0.1,
            payload_bits: 100,
            outage_target: 0.1,
            snr_linear: 10.0,
            fading: Fading::ConstantSnr,
            regime: Regime::Ibl,
        };
        let grid = Grid::new(&scenario, 1, 1).unwrap();
        SimConfig {
            scenario,
            grid,
            lambda_per_frame: 1.0,
            warmup_slots: 0,
            measured_arrivals: 20_000,
            seed: 1234,
            channel_model: ChannelModel::ConstantSnr,
            occupancy,
            nu_convention: NuConvention::PerSlot,
        }
    }

    #[test]
    fn seed_determinism() {
        let cfg = base_config(OccupancyModel::Protocol);
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        let mut cfg2 = cfg;
        cfg2.seed ^= 1;
        let c = run_simulation(&cfg2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lone_arrivals_always_decode() {
        // lambda -> 0 with k*_1 >= 1: no failures.
        let mut cfg = base_config(OccupancyModel::Protocol);
        cfg.lambda_per_frame = 0.01;
        cfg.measured_arrivals = 2_000;
        let stats = run_simulation(&cfg).unwrap();
        assert_eq!(stats.failures, 0);
        assert_eq!(stats.arrivals_measured, 2_000);
    }

    #[test]
    fn impossible_threshold_fails_everyone() {
        // Gamma > rho*M: the combined SINR cannot reach the threshold even
        // without interference.
        let mut cfg = base_config(OccupancyModel::Protocol);
        cfg.scenario.bandwidth_hz = 400.0; // N = 40, Gamma = 2^{2.5}-1 = 4.66
        cfg.scenario.snr_linear = 2.0;
        cfg.grid = Grid::new(&cfg.scenario, 1, 1).unwrap();
        cfg.measured_arrivals = 2_000;
        let stats = run_simulation(&cfg).unwrap();
        assert_eq!(stats.failures, stats.arrivals_measured);
        assert!((stats.p_fail_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_accounting_invariant() {
        let mut cfg = base_config(OccupancyModel::Protocol);
        cfg.scenario.bandwidth_hz = 20_000.0; // N = 2000, n = 500 at B=2, M=2
        cfg.grid = Grid::new(&cfg.scenario, 2, 2).unwrap();
        cfg.lambda_per_frame = 3.0;
        cfg.measured_arrivals = 10_000;
        let stats = run_simulation(&cfg).unwrap();
        let successes: u64 = stats.per_attempt_success_histogram.iter().sum();
        assert_eq!(successes + stats.failures, stats.arrivals_measured);
        assert_eq!(stats.arrivals_measured, 10_000);
        assert!(stats.mean_occupancy_per_tfs > 0.0);
    }

    #[test]
    fn analytic_mode_matches_exact_enumeration() {
        // M=1, B=1: the analytic occupancy model reproduces the conditional
        // Poisson tail within 3 binomial standard errors.
        let mut cfg = base_config(OccupancyModel::AnalyticIid);
        cfg.lambda_per_frame = 1.0; // nu = 1
        cfg.measured_arrivals = 100_000;
        let stats = run_simulation(&cfg).unwrap();
        let analytic = outage_curve_ibl_constant(
            PerTfsRate::new(1.0),
            cfg.grid.sinr_threshold,
            cfg.scenario.snr_linear,
            1,
            &EvalBudget::default(),
        )
        .p_fail_cumulative[0];
        let err = (stats.p_fail_hat - analytic).abs();
        assert!(
            err <= 3.0 * stats.binomial_stderr.max(1e-9),
            "sim {} vs analytic {analytic} (3se {})",
            stats.p_fail_hat,
            3.0 * stats.binomial_stderr
        );
    }

    #[test]
    fn monotone_load_in_protocol_mode() {
        // N = 200 gives Gamma = 0.414 and k*_1 = 3, so the swept loads cover
        // light to heavy contention.
        let mut prev = -1.0;
        for &lambda in &[0.5, 1.5, 3.0] {
            let mut cfg = base_config(OccupancyModel::Protocol);
            cfg.scenario.bandwidth_hz = 2_000.0;
            cfg.grid = Grid::new(&cfg.scenario, 1, 1).unwrap();
            cfg.lambda_per_frame = lambda;
            cfg.measured_arrivals = 30_000;
            let stats = run_simulation(&cfg).unwrap();
            assert!(
                stats.p_fail_hat >= prev - 0.01,
                "failure rate dropped with load: {} after {prev}",
                stats.p_fail_hat
            );
            prev = stats.p_fail_hat;
        }
    }

    #[test]
    fn aggregate_rate_estimates() {
        // All succeed at first attempt -> lambda_M = lambda.
        let stats = SimStats::from_counts(vec![100, 0, 0], 0, 1.0);
        assert!((estimate_aggregate_rate(&stats, 2.0, 3) - 2.0).abs() < 1e-12);
        // Everyone fails every attempt -> lambda_M = M lambda.
        let stats = SimStats::from_counts(vec![0, 0, 0], 100, 1.0);
        assert!((estimate_aggregate_rate(&stats, 2.0, 3) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_load_rejected() {
        let mut cfg = base_config(OccupancyModel::Protocol);
        cfg.scenario.bandwidth_hz = 400.0; // hopeless threshold
        cfg.scenario.snr_linear = 2.0;
        cfg.grid = Grid::new(&cfg.scenario, 1, 1).unwrap();
        cfg.lambda_per_frame = 5e6; // nobody ever leaves fast enough
        cfg.measured_arrivals = 10;
        match run_simulation(&cfg) {
            Err(Error::DivergentLoad(_)) => {}
            other => panic!("expected divergent-load error, got {other:?}"),
        }
    }

    #[test]
    fn rayleigh_protocol_runs() {
        let mut cfg = base_config(OccupancyModel::Protocol);
        cfg.scenario.fading = Fading::Rayleigh { mu: 1.0 };
        cfg.channel_model = ChannelModel::RayleighBlock;
        cfg.scenario.bandwidth_hz = 1_000.0; // N = 100, Gamma = 1
        cfg.grid = Grid::new(&cfg.scenario, 1, 1).unwrap();
        cfg.scenario.snr_linear = 1.0;
        cfg.lambda_per_frame = 1.0;
        cfg.measured_arrivals = 20_000;
        let stats = run_simulation(&cfg).unwrap();
        assert!(stats.p_fail_hat > 0.3 && stats.p_fail_hat < 0.95);
    }
}
