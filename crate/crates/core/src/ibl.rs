//! Infinite-block-length outage probabilities and the aggregate-rate fixed
//! point.
//!
//! Constant SNR: the failure event through attempt m is a nested sum over
//! occupancy sequences k_1..k_m with each k_i exceeding the supportable
//! occupancy given its prefix. Because the per-attempt threshold depends on
//! the prefix only through its sum, the enumeration is carried exactly by a
//! dynamic program over (attempt, occupancy prefix sum); when its transition
//! count exceeds the budget the evaluator falls back to seeded Monte Carlo
//! over i.i.d. occupancy draws and records that in the result.
//!
//! Rayleigh fading: the outage through attempt m is the signed lattice-path
//! sum over l_0 = 0, l_i in {l_{i-1}, l_{i-1}+1} with sign (-1)^{l_m} and
//! per-attempt factors f(mu, nu, l_i * Gamma).

use crate::error::{Error, Result};
use crate::model::{self, PerTfsRate};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// How an outage curve was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMethod {
    /// Exact enumeration (prefix-sum dynamic program).
    Exact,
    /// Seeded Monte Carlo over i.i.d. occupancy sequences.
    MonteCarloFallback,
}

/// Budget and seeding for outage evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalBudget {
    /// Exact enumeration allowed while its transition count stays below this.
    pub max_states: u64,
    /// Sample count for the Monte Carlo fallback.
    pub mc_samples: u64,
    /// Root seed for the fallback; per-shard streams derive from it.
    pub seed: u64,
}

impl Default for EvalBudget {
    fn default() -> Self {
        EvalBudget { max_states: 10_000_000, mc_samples: 1_000_000, seed: 0x5eed }
    }
}

/// Cumulative failure probabilities through attempts 1..=M plus evaluation
/// metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    /// p[m-1] = P(fail attempts 1..m).
    pub p_fail_cumulative: Vec<f64>,
    /// Neglected probability mass (occupancy-tail truncation and state
    /// pruning), or the largest per-attempt binomial standard error for the
    /// Monte Carlo fallback.
    pub truncation_error_bound: f64,
    pub evaluation_method: EvalMethod,
}

/// Outage evaluation bundled with its aggregate-rate fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageResult {
    pub p_fail_cumulative: Vec<f64>,
    /// lambda_M = lambda [1 + sum_{m<M} P_Fail(m)].
    pub lambda_aggregate: f64,
    pub truncation_error_bound: f64,
    pub evaluation_method: EvalMethod,
}

/// Per-attempt failure thresholds for the constant-SNR event: attempt m fails
/// iff the occupancy prefix sum S_m exceeds floor(x_m), with the Eq-driven
/// clamp that k_m must also be at least 2 whenever the unclamped supportable
/// occupancy drops below 1.
fn floor_thresholds(gamma: f64, rho: f64, attempts: u32) -> Vec<i64> {
    (1..=attempts)
        .map(|m| {
            let mf = f64::from(m);
            let x = mf + mf * mf / gamma - mf / rho;
            x.floor().clamp(-1e18, 1e18) as i64
        })
        .collect()
}

/// Exact/fallback evaluation of the constant-SNR outage curve at per-TFS
/// load `nu` and threshold `gamma`.
pub fn outage_curve_ibl_constant(
    nu: PerTfsRate,
    gamma: f64,
    rho: f64,
    attempts: u32,
    budget: &EvalBudget,
) -> OutageCurve {
    assert!(gamma > 0.0 && rho > 0.0 && attempts >= 1);
    if nu.mean() == 0.0 {
        return OutageCurve {
            p_fail_cumulative: vec![0.0; attempts as usize],
            truncation_error_bound: 0.0,
            evaluation_method: EvalMethod::Exact,
        };
    }
    let k_max = model::occupancy_truncation(nu);
    let est_cost =
        u64::from(attempts) * u64::from(attempts) * u64::from(k_max) * u64::from(k_max);
    if est_cost <= budget.max_states {
        constant_curve_exact(nu, gamma, rho, attempts, k_max)
    } else {
        constant_curve_mc(nu, gamma, rho, attempts, budget)
    }
}

fn constant_curve_exact(
    nu: PerTfsRate,
    gamma: f64,
    rho: f64,
    attempts: u32,
    k_max: u32,
) -> OutageCurve {
    let pmf = model::conditional_pmf_table(nu, k_max);
    let mass_in: f64 = pmf.iter().sum();
    let tail = (1.0 - mass_in).max(0.0);
    // Suffix sums: suf[k] = sum_{j>=k} D(j, nu).
    let mut suf = vec![0.0; k_max as usize + 2];
    for k in (1..=k_max as usize).rev() {
        suf[k] = suf[k + 1] + pmf[k];
    }
    let thresholds = floor_thresholds(gamma, rho, attempts);

    let mut curve = Vec::with_capacity(attempts as usize);
    let mut pruned = 0.0;

    // Attempt 1: fail iff k_1 > max(floor(x_1), 1).
    let kstar1 = thresholds[0].max(1);
    let mut weights = vec![0.0; k_max as usize + 1]; // indexed by prefix sum
    if kstar1 < i64::from(k_max) {
        let lo = (kstar1 + 1) as usize;
        weights[lo..=k_max as usize].copy_from_slice(&pmf[lo..=k_max as usize]);
    }
    curve.push(weights.iter().sum());

    for m in 2..=attempts {
        let xm = thresholds[m as usize - 1];
        let new_len = weights.len() + k_max as usize;
        let mut next = vec![0.0; new_len];
        let mut total = 0.0;
        for (s_prev, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if w < 1e-18 {
                pruned += w;
                continue;
            }
            // Fail at m: k > max(floor(x_m) - s_prev, 1).
            let kstar = (xm - s_prev as i64).max(1);
            if kstar >= i64::from(k_max) {
                continue;
            }
            let k_lo = (kstar + 1) as usize;
            total += w * suf[k_lo];
            for k in k_lo..=k_max as usize {
                next[s_prev + k] += w * pmf[k];
            }
        }
        weights = next;
        curve.push(total);
    }

    OutageCurve {
        p_fail_cumulative: curve,
        truncation_error_bound: f64::from(attempts) * tail + pruned,
        evaluation_method: EvalMethod::Exact,
    }
}

/// Inverse-CDF sampler for the conditional occupancy distribution.
pub(crate) struct OccupancySampler {
    cdf: Vec<f64>,
}

impl OccupancySampler {
    pub(crate) fn new(nu: PerTfsRate) -> OccupancySampler {
        let k_max = model::occupancy_truncation(nu);
        let pmf = model::conditional_pmf_table(nu, k_max);
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        OccupancySampler { cdf }
    }

    pub(crate) fn sample(&self, rng: &mut impl rand::Rng) -> u32 {
        let u: f64 = rng.gen();
        match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) | Err(i) => (i.max(1) as u32).min(self.cdf.len() as u32 - 1),
        }
    }
}

fn constant_curve_mc(
    nu: PerTfsRate,
    gamma: f64,
    rho: f64,
    attempts: u32,
    budget: &EvalBudget,
) -> OutageCurve {
    let thresholds = floor_thresholds(gamma, rho, attempts);
    let sampler = OccupancySampler::new(nu);
    let mut rng = ChaCha12Rng::seed_from_u64(budget.seed);
    let mut fail_counts = vec![0u64; attempts as usize];
    let n = budget.mc_samples.max(1);
    for _ in 0..n {
        let mut s: i64 = 0;
        for m in 0..attempts {
            let k = i64::from(sampler.sample(&mut rng));
            let kstar = (thresholds[m as usize] - s).max(1);
            if k <= kstar {
                break;
            }
            s += k;
            fail_counts[m as usize] += 1;
        }
    }
    let p: Vec<f64> = fail_counts.iter().map(|&c| c as f64 / n as f64).collect();
    let max_se = p
        .iter()
        .map(|&q| (q * (1.0 - q) / n as f64).sqrt())
        .fold(0.0, f64::max);
    OutageCurve {
        p_fail_cumulative: p,
        truncation_error_bound: max_se,
        evaluation_method: EvalMethod::MonteCarloFallback,
    }
}

/// Cumulative constant-SNR outage through attempt `m` on `grid`.
pub fn outage_ibl_constant(
    nu: PerTfsRate,
    grid: &model::Grid,
    rho: f64,
    m: u32,
) -> Result<f64> {
    if m < 1 || m > grid.attempts {
        return Err(Error::domain("outage_ibl_constant", format!("m = {m} not in 1..=M")));
    }
    let curve = outage_curve_ibl_constant(
        nu,
        grid.sinr_threshold,
        rho,
        grid.attempts,
        &EvalBudget::default(),
    );
    Ok(curve.p_fail_cumulative[m as usize - 1])
}

/// (e^{a/c} - 1) / (e^a - 1) scaled by c, evaluated without overflowing for
/// large a: equals c e^{a(1-c)/c} (1 - e^{-a/c}) / (1 - e^{-a}).
fn scaled_exp_ratio(a: f64, c: f64) -> f64 {
    if a < 500.0 {
        c * libm::expm1(a / c) / libm::expm1(a)
    } else {
        c * (a / c - a).exp() * (-libm::expm1(-a / c)) / (-libm::expm1(-a))
    }
}

/// The interference factor of the Rayleigh outage,
/// f(mu, alpha, Gamma) = e^{-mu Gamma / rho} (Gamma+1)
///   (e^{alpha/(Gamma+1)} - 1) / (e^alpha - 1); equals 1 at Gamma = 0.
pub fn interference_term_f(mu: f64, alpha: f64, gamma: f64, rho: f64) -> f64 {
    assert!(alpha > 0.0 && gamma >= 0.0);
    if gamma == 0.0 {
        return 1.0;
    }
    (-mu * gamma / rho).exp() * scaled_exp_ratio(alpha, gamma + 1.0)
}

/// Laplace transform of the aggregate interference in one TFS, averaged over
/// the conditional occupancy:
/// L(s) = (s rho / mu + 1) (e^{nu/(s rho/mu + 1)} - 1) / (e^nu - 1).
pub fn interference_laplace(s: f64, nu: PerTfsRate, mu: f64, rho: f64) -> f64 {
    assert!(s >= 0.0);
    let v = nu.mean();
    assert!(v > 0.0 && mu > 0.0 && rho > 0.0);
    scaled_exp_ratio(v, s * rho / mu + 1.0)
}

/// Rayleigh outage curve through attempts 1..=M: the signed lattice-path sum
/// evaluated by a transfer recursion over the path height l (identical to
/// enumerating all 2^m paths; the recursion groups paths by their current
/// height).
pub fn outage_curve_ibl_rayleigh(
    nu: PerTfsRate,
    gamma: f64,
    rho: f64,
    mu: f64,
    attempts: u32,
) -> Result<OutageCurve> {
    if attempts > 30 {
        return Err(Error::Budget(format!(
            "rayleigh path sum limited to M <= 30, got {attempts}"
        )));
    }
    let v = nu.mean();
    if !(v > 0.0) {
        // Lone-device limit: I_i = 0, so attempt m fails with probability
        // 1 - e^{-mu m Gamma / rho} independently.
        let mut p = 1.0;
        let curve = (1..=attempts)
            .map(|m| {
                p *= -libm::expm1(-mu * f64::from(m) * gamma / rho);
                p
            })
            .collect();
        return Ok(OutageCurve {
            p_fail_cumulative: curve,
            truncation_error_bound: 0.0,
            evaluation_method: EvalMethod::Exact,
        });
    }
    let f: Vec<f64> = (0..=attempts)
        .map(|l| interference_term_f(mu, v, f64::from(l) * gamma, rho))
        .collect();
    let mut height_mass = vec![0.0f64; attempts as usize + 2];
    height_mass[0] = 1.0;
    let mut curve = Vec::with_capacity(attempts as usize);
    for i in 1..=attempts as usize {
        let mut next = vec![0.0f64; attempts as usize + 2];
        for l in (0..=i).rev() {
            let stay = height_mass[l];
            let up = if l >= 1 { height_mass[l - 1] } else { 0.0 };
            next[l] = (stay + up) * f[l];
        }
        height_mass = next;
        let signed: f64 = height_mass
            .iter()
            .enumerate()
            .map(|(l, &w)| if l % 2 == 0 { w } else { -w })
            .sum();
        curve.push(signed);
    }
    Ok(OutageCurve {
        p_fail_cumulative: curve,
        truncation_error_bound: 0.0,
        evaluation_method: EvalMethod::Exact,
    })
}

/// Cumulative Rayleigh outage through attempt `m` on `grid`.
pub fn outage_ibl_rayleigh(
    nu: PerTfsRate,
    grid: &model::Grid,
    rho: f64,
    mu: f64,
    m: u32,
) -> Result<f64> {
    if m < 1 || m > grid.attempts {
        return Err(Error::domain("outage_ibl_rayleigh", format!("m = {m} not in 1..=M")));
    }
    let curve = outage_curve_ibl_rayleigh(nu, grid.sinr_threshold, rho, mu, grid.attempts)?;
    Ok(curve.p_fail_cumulative[m as usize - 1])
}

/// Solution of the aggregate-rate fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub lambda_aggregate: f64,
    /// |lambda_M - g(lambda_M)| at the returned point.
    pub residual: f64,
    pub iterations: u32,
}

const FP_THETA: f64 = 0.5;
const FP_MAX_ITERS: u32 = 10_000;
const FP_REL_TOL: f64 = 1e-9;

/// Solves lambda_M = lambda [1 + sum_{m=1}^{M-1} P_Fail(lambda_M, m)] by
/// damped iteration (theta = 1/2) with a bisection fallback, starting from
/// `start` (or lambda when absent). `eval` maps a candidate lambda_M to the
/// cumulative failure curve for attempts 1..=M.
///
/// The solution always lies in [lambda, M*lambda].
pub fn solve_aggregate_rate(
    lambda: f64,
    attempts: u32,
    start: Option<f64>,
    mut eval: impl FnMut(f64) -> Vec<f64>,
) -> Result<FixedPoint> {
    assert!(lambda >= 0.0 && attempts >= 1);
    if lambda == 0.0 || attempts == 1 {
        return Ok(FixedPoint { lambda_aggregate: lambda, residual: 0.0, iterations: 0 });
    }
    let lo = lambda;
    let hi = lambda * f64::from(attempts);
    let mut g = |x: f64| -> f64 {
        let curve = eval(x);
        debug_assert_eq!(curve.len(), attempts as usize);
        let retx: f64 = curve[..attempts as usize - 1].iter().sum();
        lambda * (1.0 + retx)
    };

    let mut x = start.unwrap_or(lambda).clamp(lo, hi);
    let mut residual = f64::INFINITY;
    for it in 0..FP_MAX_ITERS {
        let gx = g(x);
        residual = (x - gx).abs();
        if residual <= FP_REL_TOL * x.max(f64::MIN_POSITIVE) {
            return Ok(FixedPoint { lambda_aggregate: x, residual, iterations: it });
        }
        x = ((1.0 - FP_THETA) * x + FP_THETA * gx).clamp(lo, hi);
        // Damping stalls when the map oscillates faster than it contracts;
        // after a generous number of sweeps switch to bisection on x - g(x).
        if it == 200 {
            break;
        }
    }

    // Bisection fallback: h(x) = x - g(x), h(lo) <= 0 <= h(hi).
    let (mut a, mut b) = (lo, hi);
    let mut ha = a - g(a);
    if ha > 0.0 {
        // g(lo) < lo can only happen through evaluation noise; accept lo.
        return Ok(FixedPoint { lambda_aggregate: a, residual: ha.abs(), iterations: 201 });
    }
    let mut iterations = 201;
    for _ in 0..200 {
        iterations += 1;
        let mid = 0.5 * (a + b);
        let hm = mid - g(mid);
        if hm.abs() <= FP_REL_TOL * mid {
            return Ok(FixedPoint { lambda_aggregate: mid, residual: hm.abs(), iterations });
        }
        if (hm < 0.0) == (ha < 0.0) {
            a = mid;
            ha = hm;
        } else {
            b = mid;
        }
        if (b - a) <= 1e-15 * hi {
            let mid = 0.5 * (a + b);
            let r = (mid - g(mid)).abs();
            if r <= FP_REL_TOL * mid {
                return Ok(FixedPoint { lambda_aggregate: mid, residual: r, iterations });
            }
            return Err(Error::NonConvergence {
                op: "solve_aggregate_rate",
                msg: format!("bracket collapsed at {mid} with residual {r:e}"),
            });
        }
    }
    Err(Error::NonConvergence {
        op: "solve_aggregate_rate",
        msg: format!("no fixed point after {iterations} evaluations (residual {residual:e})"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fading, Grid, NuConvention, Regime, Scenario};
    use rand::Rng;

    fn nu(v: f64) -> PerTfsRate {
        PerTfsRate::new(v)
    }

    fn scenario() -> Scenario {
        Scenario {
            bandwidth_hz: 10_000.0,
            deadline_s: 0.1,
            payload_bits: 100,
            outage_target: 0.1,
            snr_linear: 10.0,
            fading: Fading::ConstantSnr,
            regime: Regime::Ibl,
        }
    }

    #[test]
    fn single_attempt_matches_tail_sum() {
        // m=1, nu=1, k*_1=2 -> 1 - D(1,1) - D(2,1) = 0.1270349
        let curve = outage_curve_ibl_constant(nu(1.0), 0.5, 10.0, 1, &EvalBudget::default());
        assert!((curve.p_fail_cumulative[0] - 0.127_035).abs() < 1e-5);
        let d1 = model::conditional_arrival_pmf(1, nu(1.0)).unwrap();
        let d2 = model::conditional_arrival_pmf(2, nu(1.0)).unwrap();
        assert!((curve.p_fail_cumulative[0] - (1.0 - d1 - d2)).abs() < 1e-12);
    }

    #[test]
    fn lone_arrival_never_fails_when_supportable() {
        // Gamma <= rho so k*_1 >= 1; nu -> 0 means the device is almost
        // surely alone, so failure probability vanishes.
        let curve =
            outage_curve_ibl_constant(nu(1e-8), 10.0, 10.0, 1, &EvalBudget::default());
        assert!(curve.p_fail_cumulative[0] < 1e-7);
    }

    #[test]
    fn cumulative_curve_monotone_in_attempts() {
        for &(v, g, r, mm) in
            &[(0.5, 0.5, 10.0, 4u32), (2.0, 1.0, 5.0, 5), (1.0, 0.2, 0.5, 3), (4.0, 2.0, 50.0, 6)]
        {
            let curve = outage_curve_ibl_constant(nu(v), g, r, mm, &EvalBudget::default());
            for w in curve.p_fail_cumulative.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "curve not monotone: {curve:?}");
            }
            assert!(curve.p_fail_cumulative.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn enumeration_matches_monte_carlo() {
        // Exact DP vs 10^6-draw MC of the same
        // nested failure event, within 3 binomial standard errors.
        for &(v, mm) in &[(0.6, 2u32), (1.2, 3)] {
            let gamma = 0.8;
            let rho = 6.0;
            let exact = outage_curve_ibl_constant(nu(v), gamma, rho, mm, &EvalBudget::default());
            assert_eq!(exact.evaluation_method, EvalMethod::Exact);
            let mc = constant_curve_mc(
                nu(v),
                gamma,
                rho,
                mm,
                &EvalBudget { max_states: 0, mc_samples: 1_000_000, seed: 42 },
            );
            for m in 0..mm as usize {
                let p = exact.p_fail_cumulative[m];
                let q = mc.p_fail_cumulative[m];
                let se = (p.max(1e-12) * (1.0 - p) / 1e6).sqrt();
                assert!(
                    (p - q).abs() <= 3.0 * se + 1e-9,
                    "m={} exact {p} vs mc {q} (3se = {})",
                    m + 1,
                    3.0 * se
                );
            }
        }
    }

    #[test]
    fn budget_triggers_monte_carlo_fallback() {
        let tight = EvalBudget { max_states: 10, mc_samples: 20_000, seed: 7 };
        let curve = outage_curve_ibl_constant(nu(1.0), 0.5, 10.0, 2, &tight);
        assert_eq!(curve.evaluation_method, EvalMethod::MonteCarloFallback);
        assert!(curve.truncation_error_bound > 0.0);
    }

    #[test]
    fn grid_level_op_checks_attempt_range() {
        let sc = scenario();
        let grid = Grid::new(&sc, 1, 2).unwrap();
        assert!(outage_ibl_constant(nu(1.0), &grid, 10.0, 0).is_err());
        assert!(outage_ibl_constant(nu(1.0), &grid, 10.0, 3).is_err());
        assert!(outage_ibl_constant(nu(1.0), &grid, 10.0, 2).is_ok());
    }

    #[test]
    fn f_term_examples() {
        assert_eq!(interference_term_f(1.0, 1.0, 0.0, 1.0), 1.0);
        // alpha -> 0+ tends to e^{-mu Gamma / rho}
        let f = interference_term_f(1.0, 1e-12, 1.0, 1.0);
        assert!((f - (-1f64).exp()).abs() < 1e-9);
        // mu=1, Gamma=1, rho=1, alpha=1: 2 e^{-1} (e^{1/2} - 1)/(e - 1)
        let f = interference_term_f(1.0, 1.0, 1.0, 1.0);
        let direct = 2.0 * (-1f64).exp() * ((0.5f64).exp() - 1.0) / (1f64.exp() - 1.0);
        assert!((f - direct).abs() < 1e-15);
        assert!((f - 0.277_778_9).abs() < 1e-7);
    }

    #[test]
    fn laplace_examples_and_identity() {
        assert!((interference_laplace(0.0, nu(1.0), 1.0, 1.0) - 1.0).abs() < 1e-12);
        let l = interference_laplace(1.0, nu(1.0), 1.0, 1.0);
        assert!((l - 0.755_081).abs() < 1e-6);
        // e^{-mu Gamma/rho} L(mu Gamma / rho) = f(mu, nu, Gamma)
        for &(mu, v, gamma, rho) in
            &[(1.0, 1.0, 1.0, 1.0), (0.5, 2.0, 3.0, 4.0), (2.0, 0.3, 0.7, 0.9)]
        {
            let s: f64 = mu * gamma / rho;
            let lhs = (-s).exp() * interference_laplace(s, nu(v), mu, rho);
            let rhs = interference_term_f(mu, v, gamma, rho);
            assert!((lhs - rhs).abs() < 1e-14 * rhs.max(1.0));
        }
    }

    #[test]
    fn rayleigh_m1_equals_corollary() {
        // P(M=1) = 1 - f(mu, nu, Gamma) exactly (l = 0 path contributes 1).
        for &(mu, v, gamma, rho) in
            &[(1.0, 1.0, 1.0, 1.0), (0.7, 2.5, 0.4, 3.0), (1.5, 0.2, 5.0, 10.0)]
        {
            let curve = outage_curve_ibl_rayleigh(nu(v), gamma, rho, mu, 1).unwrap();
            let expect = 1.0 - interference_term_f(mu, v, gamma, rho);
            assert!(
                (curve.p_fail_cumulative[0] - expect).abs() <= 1e-12,
                "mu={mu} nu={v} gamma={gamma} rho={rho}"
            );
        }
    }

    #[test]
    fn rayleigh_spot_value_and_tiny_threshold() {
        let curve = outage_curve_ibl_rayleigh(nu(1.0), 1.0, 1.0, 1.0, 2).unwrap();
        assert!((curve.p_fail_cumulative[0] - 0.722_221_1).abs() < 1e-6);
        assert!((curve.p_fail_cumulative[1] - 0.671_026_1).abs() < 1e-6);
        // Gamma -> 0 never fails
        let curve = outage_curve_ibl_rayleigh(nu(1.0), 1e-14, 1.0, 1.0, 1).unwrap();
        assert!(curve.p_fail_cumulative[0] < 1e-10);
    }

    #[test]
    fn rayleigh_transfer_matches_explicit_path_enumeration() {
        // Independent oracle: walk all 2^M lattice paths explicitly,
        // checking the partial signed sums stay inside [-1, 2].
        fn explicit(v: f64, gamma: f64, rho: f64, mu: f64, mm: u32) -> f64 {
            let f: Vec<f64> = (0..=mm)
                .map(|l| interference_term_f(mu, v, f64::from(l) * gamma, rho))
                .collect();
            let mut total = 0.0;
            // Each path is a bit string: bit i set means l increments there.
            for bits in 0..(1u32 << mm) {
                let mut l = 0u32;
                let mut prod = 1.0;
                for i in 0..mm {
                    l += (bits >> i) & 1;
                    prod *= f[l as usize];
                }
                let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
                total += sign * prod;
                assert!((-1.0..=2.0).contains(&total), "partial sum left [-1,2]: {total}");
            }
            total
        }
        for &(v, gamma, rho, mu, mm) in &[
            (1.0, 1.0, 1.0, 1.0, 2u32),
            (1.0, 1.0, 1.0, 1.0, 6),
            (0.4, 2.0, 5.0, 1.0, 8),
            (2.0, 0.3, 0.8, 0.6, 5),
        ] {
            let dp = outage_curve_ibl_rayleigh(nu(v), gamma, rho, mu, mm).unwrap();
            let oracle = explicit(v, gamma, rho, mu, mm);
            let got = *dp.p_fail_cumulative.last().unwrap();
            assert!((got - oracle).abs() < 1e-12, "DP {got} vs enumeration {oracle}");
            assert!((0.0..=1.0).contains(&got));
            for w in dp.p_fail_cumulative.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn rayleigh_guard_rails() {
        assert!(outage_curve_ibl_rayleigh(nu(1.0), 1.0, 1.0, 1.0, 31).is_err());
        // nu = 0: lone-device limit, product of per-attempt fade outages.
        let c = outage_curve_ibl_rayleigh(PerTfsRate::new(0.0), 1.0, 1.0, 1.0, 2).unwrap();
        let e1 = -libm::expm1(-1.0);
        let e2 = -libm::expm1(-2.0);
        assert!((c.p_fail_cumulative[0] - e1).abs() < 1e-14);
        assert!((c.p_fail_cumulative[1] - e1 * e2).abs() < 1e-14);
    }

    #[test]
    fn fixed_point_trivial_cases() {
        // M = 1: empty retransmission sum.
        let fp = solve_aggregate_rate(3.0, 1, None, |_| vec![0.3]).unwrap();
        assert_eq!(fp.lambda_aggregate, 3.0);
        // P == 0: no retransmissions.
        let fp = solve_aggregate_rate(2.0, 4, None, |_| vec![0.0; 4]).unwrap();
        assert!((fp.lambda_aggregate - 2.0).abs() < 1e-9);
        // P == 1: every attempt retransmits.
        let fp = solve_aggregate_rate(2.0, 4, None, |_| vec![1.0; 4]).unwrap();
        assert!((fp.lambda_aggregate - 8.0).abs() < 1e-8);
    }

    #[test]
    fn fixed_point_bracket_and_restart_agreement() {
        // Randomized smooth failure maps: both bracket-end starts converge to
        // the same point with residual within tolerance.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..20 {
            let lambda = 0.5 + rng.gen::<f64>() * 5.0;
            let attempts = rng.gen_range(2..=6u32);
            let scale = 0.05 + rng.gen::<f64>() * 0.4;
            let shape = 0.5 + rng.gen::<f64>() * 2.0;
            let eval = |x: f64| -> Vec<f64> {
                (1..=attempts)
                    .map(|m| {
                        let p1 = 1.0 - (-scale * x).exp();
                        p1.powf(f64::from(m).powf(shape) / shape)
                    })
                    .collect()
            };
            let lo = solve_aggregate_rate(lambda, attempts, Some(lambda), eval).unwrap();
            let hi = solve_aggregate_rate(
                lambda,
                attempts,
                Some(lambda * f64::from(attempts)),
                eval,
            )
            .unwrap();
            assert!(lo.residual <= 1e-9 * lo.lambda_aggregate);
            assert!(hi.residual <= 1e-9 * hi.lambda_aggregate);
            assert!(
                (lo.lambda_aggregate - hi.lambda_aggregate).abs() <= 1e-8 * hi.lambda_aggregate,
                "restarts disagree: {} vs {}",
                lo.lambda_aggregate,
                hi.lambda_aggregate
            );
            assert!(lo.lambda_aggregate >= lambda - 1e-12);
            assert!(lo.lambda_aggregate <= lambda * f64::from(attempts) + 1e-12);
        }
    }

    #[test]
    fn fixed_point_with_real_outage_curve() {
        let gamma = 0.8;
        let rho = 6.0;
        let b = 2u32;
        let mm = 3u32;
        let lambda = 1.5;
        let budget = EvalBudget::default();
        let fp = solve_aggregate_rate(lambda, mm, None, |lam_m| {
            let v = NuConvention::PerSlot.nu(lam_m, b, mm);
            outage_curve_ibl_constant(v, gamma, rho, mm, &budget).p_fail_cumulative
        })
        .unwrap();
        assert!(fp.lambda_aggregate >= lambda);
        assert!(fp.lambda_aggregate <= lambda * f64::from(mm));
        assert!(fp.residual <= 1e-9 * fp.lambda_aggregate);
    }
}

