//! Finite-block-length machinery: the normal-approximation achievable rate,
//! channel dispersion, block error rate, threshold inversion, the FBL outage
//! (exact product-form enumeration with Monte Carlo fallback), the high-SNR
//! approximation, and the low-SNR bounds built on the mean first-attempt SINR.

use crate::error::{Error, Result};
use crate::ibl::{EvalBudget, EvalMethod, OutageCurve};
use crate::model::{self, PerTfsRate};
use crate::specfun::{q_function, q_inverse, scaled_lower_gamma_series};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Block-length validity floor of the normal approximation; below it results
/// carry a warning flag rather than an error so sweeps can probe small n.
pub const NORMAL_APPROX_MIN_N: u64 = 100;

/// Finite-block-length rate parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblRateParams {
    pub block_length: u64,
    pub payload_bits: u32,
    pub error_prob: f64,
}

impl FblRateParams {
    /// b = (0.5 log2 n - L)/n; the concavity lemma assumes b <= 0,
    /// i.e. n <= 2^{2L}.
    pub fn rate_offset(&self) -> f64 {
        let n = self.block_length as f64;
        (0.5 * n.log2() - f64::from(self.payload_bits)) / n
    }
}

/// Channel dispersion V(sinr) = [1 - 1/(1+sinr)^2] log2^2(e), in
/// [0, log2^2 e).
pub fn dispersion(sinr: f64) -> f64 {
    assert!(sinr >= 0.0);
    let c = 1.0 + sinr;
    (1.0 - 1.0 / (c * c)) * LOG2_E * LOG2_E
}

/// Normal-approximation achievable rate (bits/symbol) at block length n and
/// block error probability eps:
/// C = log2(1+sinr) - sqrt(V/n) Q^{-1}(eps) + 0.5 log2(n)/n.
///
/// The o(1/n) remainder is dropped. Valid for n >= 100; smaller n is
/// accepted (sweeps probe it) and flagged by [`small_block_warning`].
pub fn achievable_rate(params: &FblRateParams, sinr: f64) -> Result<f64> {
    let n = params.block_length;
    if n < 1 {
        return Err(Error::domain("achievable_rate", "block length 0"));
    }
    let qi = q_inverse(params.error_prob)?;
    let nf = n as f64;
    Ok((1.0 + sinr).log2() - (dispersion(sinr) / nf).sqrt() * qi + 0.5 * nf.log2() / nf)
}

/// True when the block length sits below the approximation's validity floor.
pub fn small_block_warning(block_length: u64) -> bool {
    block_length < NORMAL_APPROX_MIN_N
}

/// f(n, L, sinr) = (n log2(1+sinr) + 0.5 log2 n - L) / sqrt(n V(sinr)).
/// Monotone increasing and concave in sinr whenever n <= 2^{2L}.
pub fn f_metric(block_length: u64, payload_bits: u32, sinr: f64) -> f64 {
    assert!(sinr > 0.0, "f_metric requires sinr > 0");
    let n = block_length as f64;
    (n * (1.0 + sinr).log2() + 0.5 * n.log2() - f64::from(payload_bits))
        / (n * dispersion(sinr)).sqrt()
}

/// Block error rate eps_FBL(n, L, sinr) = Q(f(n, L, sinr)); decreasing in
/// sinr.
pub fn block_error_rate(block_length: u64, payload_bits: u32, sinr: f64) -> f64 {
    q_function(f_metric(block_length, payload_bits, sinr))
}

const THRESHOLD_SINR_LO: f64 = 1e-9;
const THRESHOLD_SINR_HI: f64 = 1e9;

/// SINR threshold of the FBL regime: the Gamma with
/// C_{n,eps}(Gamma) = L/n, found by bisection (the rate is strictly
/// increasing in sinr).
pub fn fbl_threshold(block_length: u64, payload_bits: u32, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain("fbl_threshold", format!("eps = {eps} not in (0, 0.5)")));
    }
    let params = FblRateParams { block_length, payload_bits, error_prob: eps };
    let target = f64::from(payload_bits) / block_length as f64;
    let rate_hi = achievable_rate(&params, THRESHOLD_SINR_HI)?;
    if rate_hi < target {
        return Err(Error::Infeasible(format!(
            "rate {target} unreachable: C_n,eps at the search ceiling is {rate_hi}"
        )));
    }
    let (mut lo, mut hi) = (THRESHOLD_SINR_LO, THRESHOLD_SINR_HI);
    if achievable_rate(&params, lo)? >= target {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if achievable_rate(&params, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Chase-combined SINR after attempt m given the occupancy prefix sum S
/// (constant SNR): rho m^2 / (m + rho (S - m)).
fn combined_sinr(rho: f64, m: u32, prefix_sum: u64) -> f64 {
    let mf = f64::from(m);
    rho * mf * mf / (mf + rho * (prefix_sum as f64 - mf))
}

/// FBL outage curve at per-TFS load nu: the probability that all decodings
/// through attempt m fail, with conditionally independent per-attempt error
/// rates eps_FBL(n, L, zeta_i) given the occupancy sequence (product form).
///
/// Exact evaluation is a dynamic program over the occupancy prefix sum; the
/// per-state error factors depend only on (attempt, prefix sum) and are
/// cached. Falls back to seeded Monte Carlo beyond the state budget.
pub fn outage_curve_fbl(
    nu: PerTfsRate,
    block_length: u64,
    payload_bits: u32,
    rho: f64,
    attempts: u32,
    budget: &EvalBudget,
) -> OutageCurve {
    assert!(rho > 0.0 && attempts >= 1);
    if nu.mean() == 0.0 {
        let mut p = 1.0;
        let curve = (1..=attempts)
            .map(|m| {
                p *= block_error_rate(block_length, payload_bits, f64::from(m) * rho);
                p
            })
            .collect();
        return OutageCurve {
            p_fail_cumulative: curve,
            truncation_error_bound: 0.0,
            evaluation_method: EvalMethod::Exact,
        };
    }
    let k_max = model::occupancy_truncation(nu);
    let est_cost =
        u64::from(attempts) * u64::from(attempts) * u64::from(k_max) * u64::from(k_max);
    if est_cost <= budget.max_states {
        fbl_curve_exact(nu, block_length, payload_bits, rho, attempts, k_max)
    } else {
        fbl_curve_mc(nu, block_length, payload_bits, rho, attempts, budget)
    }
}

fn fbl_curve_exact(
    nu: PerTfsRate,
    block_length: u64,
    payload_bits: u32,
    rho: f64,
    attempts: u32,
    k_max: u32,
) -> OutageCurve {
    let pmf = model::conditional_pmf_table(nu, k_max);
    let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    let eps = |m: u32, s: usize| -> f64 {
        block_error_rate(block_length, payload_bits, combined_sinr(rho, m, s as u64))
    };

    let mut curve = Vec::with_capacity(attempts as usize);
    let mut pruned = 0.0;

    // weights[s] = P(K_1..K_m = sequence with sum s, all decodings 1..m fail)
    let mut weights = vec![0.0f64; k_max as usize + 1];
    for k in 1..=k_max as usize {
        weights[k] = pmf[k] * eps(1, k);
    }
    curve.push(weights.iter().sum());

    for m in 2..=attempts {
        let mut next = vec![0.0f64; weights.len() + k_max as usize];
        for (s_prev, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if w < 1e-18 {
                pruned += w;
                continue;
            }
            for k in 1..=k_max as usize {
                next[s_prev + k] += w * pmf[k];
            }
        }
        for (s, w) in next.iter_mut().enumerate() {
            if *w > 0.0 {
                *w *= eps(m, s);
            }
        }
        weights = next;
        curve.push(weights.iter().sum());
    }

    OutageCurve {
        p_fail_cumulative: curve,
        truncation_error_bound: f64::from(attempts) * tail + pruned,
        evaluation_method: EvalMethod::Exact,
    }
}

fn fbl_curve_mc(
    nu: PerTfsRate,
    block_length: u64,
    payload_bits: u32,
    rho: f64,
    attempts: u32,
    budget: &EvalBudget,
) -> OutageCurve {
    use rand::Rng;
    let sampler = crate::ibl::OccupancySampler::new(nu);
    let mut rng = ChaCha12Rng::seed_from_u64(budget.seed);
    let n_draws = budget.mc_samples.max(1);
    let mut fail_counts = vec![0u64; attempts as usize];
    for _ in 0..n_draws {
        let mut s: u64 = 0;
        for m in 1..=attempts {
            s += u64::from(sampler.sample(&mut rng));
            let e = block_error_rate(block_length, payload_bits, combined_sinr(rho, m, s));
            if rng.gen::<f64>() >= e {
                break;
            }
            fail_counts[m as usize - 1] += 1;
        }
    }
    let p: Vec<f64> = fail_counts.iter().map(|&c| c as f64 / n_draws as f64).collect();
    let max_se = p
        .iter()
        .map(|&q| (q * (1.0 - q) / n_draws as f64).sqrt())
        .fold(0.0, f64::max);
    OutageCurve {
        p_fail_cumulative: p,
        truncation_error_bound: max_se,
        evaluation_method: EvalMethod::MonteCarloFallback,
    }
}

/// Cumulative FBL outage through attempt `m` on `grid`.
pub fn outage_fbl(
    nu: PerTfsRate,
    grid: &model::Grid,
    rho: f64,
    m: u32,
) -> Result<f64> {
    if m < 1 || m > grid.attempts {
        return Err(Error::domain("outage_fbl", format!("m = {m} not in 1..=M")));
    }
    let curve = outage_curve_fbl(
        nu,
        grid.block_length,
        grid.payload_bits,
        rho,
        grid.attempts,
        &EvalBudget::default(),
    );
    Ok(curve.p_fail_cumulative[m as usize - 1])
}

/// High-SNR approximation of the FBL outage:
/// D(1, nu)^M prod_{m=1..M} Q(f(n, L, rho m)).
pub fn outage_fbl_high_snr(
    nu: PerTfsRate,
    block_length: u64,
    payload_bits: u32,
    rho: f64,
    attempts: u32,
) -> Result<f64> {
    let d1 = model::conditional_arrival_pmf(1, nu)?;
    let mut p = d1.powi(attempts as i32);
    for m in 1..=attempts {
        p *= q_function(f_metric(block_length, payload_bits, rho * f64::from(m)));
    }
    Ok(p)
}

/// Mean first-attempt SINR under the conditional occupancy, by direct
/// truncated summation: E[rho / (1 + rho (K - 1))], K ~ D(., nu).
pub fn mean_sinr_direct(nu: PerTfsRate, rho: f64) -> f64 {
    let k_max = model::occupancy_truncation(nu);
    let pmf = model::conditional_pmf_table(nu, k_max);
    (1..=k_max as usize)
        .map(|k| pmf[k] * rho / (1.0 + rho * (k as f64 - 1.0)))
        .sum()
}

/// Working-domain guard for the closed form below: away from the removable
/// rho = 1 singularity the cancellation stays benign.
const CLOSED_FORM_RHO_GAP: f64 = 0.05;

/// Mean first-attempt SINR through the incomplete-gamma closed form,
/// E[SINR_1] = rho/(1-rho) [1 - nu/(e^nu - 1) * S(1/rho, nu)] with
/// S the analytically continued lower-incomplete-gamma series
/// ([`scaled_lower_gamma_series`]); real-valued because the complex
/// prefactors of the printed form cancel against the series.
///
/// Errors outside the working domain |1 - rho| >= 0.05 (the prefactor's
/// removable singularity at rho = 1 amplifies cancellation); callers fall
/// back to [`mean_sinr_direct`].
pub fn mean_sinr_closed_form(nu: PerTfsRate, rho: f64) -> Result<f64> {
    let v = nu.mean();
    if !(v > 0.0) || !(rho > 0.0) {
        return Err(Error::domain("mean_sinr_closed_form", "requires nu > 0, rho > 0"));
    }
    if (1.0 - rho).abs() < CLOSED_FORM_RHO_GAP {
        return Err(Error::domain(
            "mean_sinr_closed_form",
            format!("rho = {rho} within {CLOSED_FORM_RHO_GAP} of the removable singularity"),
        ));
    }
    let series = scaled_lower_gamma_series(1.0 / rho, v)?;
    Ok(rho / (1.0 - rho) * (1.0 - v / libm::expm1(v) * series))
}

/// Lower/upper bounds on the single-attempt FBL outage (B = 1, M = 1 intent):
/// lower = Q(f(n, L, E[SINR_1])), upper = sum_k D(k, nu) exp(-f(n, L,
/// SINR_1(k))^2). The sandwich around the exact expectation holds on the
/// low-SNR feasible region where the f values carrying the probability mass
/// are positive and moderate.
pub fn outage_fbl_low_snr_bounds(
    nu: PerTfsRate,
    block_length: u64,
    payload_bits: u32,
    rho: f64,
) -> Result<(f64, f64)> {
    let mean_sinr = match mean_sinr_closed_form(nu, rho) {
        Ok(v) => v,
        Err(_) => mean_sinr_direct(nu, rho),
    };
    let lower = q_function(f_metric(block_length, payload_bits, mean_sinr));
    let k_max = model::occupancy_truncation(nu);
    let pmf = model::conditional_pmf_table(nu, k_max);
    let upper = (1..=k_max as usize)
        .map(|k| {
            let sinr = rho / (1.0 + rho * (k as f64 - 1.0));
            let f = f_metric(block_length, payload_bits, sinr);
            pmf[k] * (-f * f).exp()
        })
        .sum();
    Ok((lower, upper))
}
