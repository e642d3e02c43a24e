//! Resource-partition optimization: exhaustive integer search over (B, M)
//! maximizing the supportable new-arrival rate subject to the outage
//! constraint, plus the high-/low-SNR closed forms used to cross-validate it.
//!
//! Per cell the outage constraint is inverted on the per-TFS load nu (the
//! constraint is monotone in the load, which the solver verifies as it goes);
//! the arrival rate then follows from the aggregate-rate identity and is
//! capped by the capacity bracket (N/L) * M / ln 2.

use crate::analysis::{lone_device_limit, outage_curve_for};
use crate::error::{Error, Result};
use crate::fbl::{achievable_rate, fbl_threshold, FblRateParams};
use crate::ibl::EvalBudget;
use crate::model::{Fading, Grid, NuConvention, PerTfsRate, Regime, Scenario};
use crate::specfun::{lambert_w_m1, q_inverse};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which solver produced an [`Optimum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exhaustive,
    HighSnrClosedForm,
    LowSnrClosedForm,
    RayleighHighSnr,
    FblHighSnr,
}

/// One evaluated cell of the search, kept as the optimizer's trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub bins: u32,
    pub attempts: u32,
    pub block_length: u64,
    pub lambda: f64,
    pub lambda_aggregate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cells_examined: u32,
    pub cells_feasible: u32,
    /// Block length at the optimum sits below the normal-approximation floor.
    pub small_block_warning: bool,
    pub notes: Vec<String>,
    /// Feasible cells, ordered by (attempts, bins).
    pub trace: Vec<CellSummary>,
}

/// Result of an optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub bins: u32,
    pub attempts: u32,
    /// Maximum supportable new-arrival rate, per frame of T seconds.
    pub lambda_opt: f64,
    /// Aggregate rate (retransmissions included) at the optimum.
    pub lambda_aggregate: f64,
    /// Decoding threshold of the optimal grid.
    pub threshold: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

/// Search configuration.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Largest number of transmission attempts considered.
    pub m_cap: u32,
    /// Load-accounting convention (see [`NuConvention`]).
    pub convention: NuConvention,
    pub budget: EvalBudget,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            m_cap: 16,
            convention: NuConvention::PerSlot,
            budget: EvalBudget::default(),
        }
    }
}

/// Upper end of the arrival-rate bracket: lambda_M <= (N/L) M / ln 2.
fn capacity_cap(symbol_budget: u64, payload_bits: u32, attempts: u32) -> f64 {
    symbol_budget as f64 / f64::from(payload_bits) * f64::from(attempts)
        / std::f64::consts::LN_2
}

struct CellSolution {
    bins: u32,
    attempts: u32,
    block_length: u64,
    threshold: f64,
    lambda: f64,
    lambda_aggregate: f64,
    capped: bool,
}

/// Inverts the outage constraint on one (B, M) cell. Returns None when no
/// positive load satisfies it.
fn solve_cell(
    scenario: &Scenario,
    grid: &Grid,
    options: &SearchOptions,
) -> Result<Option<CellSolution>> {
    let delta = scenario.outage_target;
    if lone_device_limit(scenario, grid)? > delta {
        return Ok(None);
    }
    let attempts = grid.attempts;
    let curve_at = |nu: f64| -> Result<Vec<f64>> {
        Ok(outage_curve_for(scenario, grid, PerTfsRate::new(nu), &options.budget)?
            .p_fail_cumulative)
    };
    let p_final = |curve: &[f64]| curve[attempts as usize - 1];

    // Bracket the load: double until the constraint is violated. Loads
    // beyond nu_ceiling already push the arrival rate past the capacity
    // bracket, so probing stops there (after confirming feasibility at the
    // ceiling itself).
    let cap = capacity_cap(grid.symbol_budget, grid.payload_bits, attempts);
    let nu_ceiling = 2.0
        * match options.convention {
            NuConvention::PerSlot => cap / f64::from(grid.bins),
            NuConvention::PerFrame => cap * f64::from(attempts) / f64::from(grid.bins),
        };
    let mut nu_lo = 0.0f64;
    let mut nu_hi = 1.0f64.min(nu_ceiling);
    let mut hi_infeasible = false;
    for _ in 0..60 {
        if p_final(&curve_at(nu_hi)?) > delta {
            hi_infeasible = true;
            break;
        }
        nu_lo = nu_hi;
        if nu_hi >= nu_ceiling {
            break;
        }
        nu_hi = (nu_hi * 2.0).min(nu_ceiling);
    }

    let mut samples: Vec<(f64, f64)> = Vec::new();
    let nu_star = if !hi_infeasible {
        // Constraint does not bind anywhere the capacity bracket allows;
        // the cap below decides instead.
        nu_hi
    } else {
        let (mut lo, mut hi) = (nu_lo, nu_hi);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let p = p_final(&curve_at(mid)?);
            samples.push((mid, p));
            if p <= delta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    // Monotone-feasibility assertion: the recorded (load, P_Fail) samples
    // must be non-decreasing; a violation means the bisection premise broke.
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in samples.windows(2) {
        if pair[1].1 < pair[0].1 - 1e-9 {
            return Err(Error::NonConvergence {
                op: "optimize_exhaustive",
                msg: format!(
                    "outage not monotone in load on B={} M={}: P({:.6e}) = {:.6e} > P({:.6e}) = {:.6e}",
                    grid.bins, grid.attempts, pair[0].0, pair[0].1, pair[1].0, pair[1].1
                ),
            });
        }
    }

    if nu_star <= 0.0 {
        return Ok(None);
    }
    let curve = curve_at(nu_star)?;
    let retx: f64 = curve[..attempts as usize - 1].iter().sum();
    let lambda_aggregate = match options.convention {
        NuConvention::PerSlot => nu_star * f64::from(grid.bins) * f64::from(attempts),
        NuConvention::PerFrame => nu_star * f64::from(grid.bins),
    };
    let mut lambda = lambda_aggregate / (1.0 + retx);
    let cap = capacity_cap(grid.symbol_budget, grid.payload_bits, attempts);
    let mut capped = false;
    let mut lambda_aggregate = lambda_aggregate;
    if lambda > cap {
        // The outage constraint stopped binding before the capacity bracket;
        // report the bracket end, with its own aggregate rate.
        capped = true;
        lambda = cap;
        let out = crate::analysis::outage_with_aggregate(
            scenario,
            grid,
            cap,
            options.convention,
            &options.budget,
            Some(lambda_aggregate.min(cap * f64::from(attempts))),
        )?;
        lambda_aggregate = out.lambda_aggregate;
    }
    Ok(Some(CellSolution {
        bins: grid.bins,
        attempts,
        block_length: grid.block_length,
        threshold: grid.sinr_threshold,
        lambda,
        lambda_aggregate,
        capped,
    }))
}

/// Candidate (B, M) cells after capacity gating.
fn candidate_cells(scenario: &Scenario, options: &SearchOptions) -> Result<Vec<Grid>> {
    let n_total = scenario.symbol_budget();
    let l = f64::from(scenario.payload_bits);
    let rho = scenario.snr_linear;
    let mut grids = Vec::new();
    for m in 1..=options.m_cap {
        let bm_cap = n_total / u64::from(m);
        if bm_cap < 1 {
            break;
        }
        for b in 1..=bm_cap.min(u64::from(u32::MAX)) as u32 {
            let denom = u64::from(b) * u64::from(m);
            let n = n_total / denom;
            if n < 1 {
                break;
            }
            match (scenario.regime, scenario.fading) {
                (Regime::Ibl, Fading::ConstantSnr) => {
                    // Capacity constraint at the first attempt: Gamma <= rho.
                    let gamma = crate::model::ibl_threshold(scenario.payload_bits, n);
                    if gamma > rho * (1.0 + 1e-12) {
                        break; // n only shrinks as B grows
                    }
                }
                (Regime::Fbl, Fading::ConstantSnr) => {
                    // The combined channel after all M attempts must clear the
                    // payload at the 50%-error point of the normal
                    // approximation: f(n, L, rho M) > 0.
                    let nf = n as f64;
                    if nf * (1.0 + rho * f64::from(m)).log2() + 0.5 * nf.log2() <= l {
                        break;
                    }
                }
                _ => {}
            }
            grids.push(Grid::new(scenario, b, m)?);
        }
    }
    Ok(grids)
}

/// Exhaustive search of Eq-style problem: max lambda over integer (B, M)
/// subject to P_Fail <= delta, ties broken by smaller M then smaller B.
pub fn optimize_exhaustive(scenario: &Scenario, options: &SearchOptions) -> Result<Optimum> {
    scenario.validate()?;
    let grids = candidate_cells(scenario, options)?;
    let cells_examined = grids.len() as u32;

    let solutions: Vec<Result<Option<CellSolution>>> = grids
        .par_iter()
        .map(|grid| solve_cell(scenario, grid, options))
        .collect();

    let mut feasible: Vec<CellSolution> = Vec::new();
    for s in solutions {
        if let Some(sol) = s? {
            feasible.push(sol);
        }
    }
    // Deterministic order independent of the parallel schedule.
    feasible.sort_by_key(|a| (a.attempts, a.bins));

    let mut best: Option<&CellSolution> = None;
    for sol in &feasible {
        best = Some(match best {
            None => sol,
            Some(cur) => {
                let tie = (sol.lambda - cur.lambda).abs()
                    <= 1e-9 * cur.lambda.abs().max(sol.lambda.abs());
                if tie {
                    // Smaller M, then smaller B.
                    if (sol.attempts, sol.bins) < (cur.attempts, cur.bins) {
                        sol
                    } else {
                        cur
                    }
                } else if sol.lambda > cur.lambda {
                    sol
                } else {
                    cur
                }
            }
        });
    }

    let best = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no (B, M, lambda > 0) satisfies the outage target {} ({} cells examined)",
            scenario.outage_target, cells_examined
        ))
    })?;

    let mut notes = Vec::new();
    if best.capped {
        notes.push("arrival rate limited by the capacity bracket, not the outage target".into());
    }
    notes.push(format!("nu convention: {:?}", options.convention));
    let diagnostics = Diagnostics {
        cells_examined,
        cells_feasible: feasible.len() as u32,
        small_block_warning: scenario.regime == Regime::Fbl
            && crate::fbl::small_block_warning(best.block_length),
        notes,
        trace: feasible
            .iter()
            .map(|s| CellSummary {
                bins: s.bins,
                attempts: s.attempts,
                block_length: s.block_length,
                lambda: s.lambda,
                lambda_aggregate: s.lambda_aggregate,
            })
            .collect(),
    };
    Ok(Optimum {
        bins: best.bins,
        attempts: best.attempts,
        lambda_opt: best.lambda,
        lambda_aggregate: best.lambda_aggregate,
        threshold: best.threshold,
        method: Method::Exhaustive,
        diagnostics,
    })
}

/// Per-bin loading alpha_M(delta): the unique alpha > 0 with
/// 1 - delta^{1/M} = alpha / (e^alpha - 1), computed through the real
/// secondary Lambert branch:
/// alpha = -W_{-1}((delta^{1/M} - 1) e^{delta^{1/M} - 1}) + delta^{1/M} - 1.
///
/// The principal branch would return the trivial root alpha = 0; the result
/// is residual-checked rather than trusted by branch label.
pub fn alpha_of_delta(delta: f64, attempts: u32) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("alpha_of_delta", format!("delta = {delta} not in (0, 1)")));
    }
    if attempts < 1 {
        return Err(Error::domain("alpha_of_delta", "M >= 1 required"));
    }
    let u = delta.powf(1.0 / f64::from(attempts)) - 1.0; // in (-1, 0)
    let mut alpha = -lambert_w_m1(u * u.exp())? + u;
    // Newton polish on g(a) = a/(e^a - 1): the Lambert evaluation sits next
    // to its branch point when delta^{1/M} is small, which caps its own
    // accuracy below the identity tolerance.
    let target = -u;
    for _ in 0..3 {
        let em = libm::expm1(alpha);
        let g = if alpha.abs() < 1e-12 { 1.0 - alpha / 2.0 } else { alpha / em };
        let gp = if alpha.abs() < 1e-12 {
            -0.5
        } else {
            (em - alpha * (em + 1.0)) / (em * em)
        };
        let step = (g - target) / gp;
        alpha -= step;
        if step.abs() <= 1e-15 * alpha.abs().max(1e-300) {
            break;
        }
    }
    let residual = (target - alpha / libm::expm1(alpha)).abs();
    if !(alpha > 0.0) || residual > 1e-10 {
        return Err(Error::NonConvergence {
            op: "alpha_of_delta",
            msg: format!("alpha = {alpha}, identity residual {residual:e}"),
        });
    }
    Ok(alpha)
}

/// High-SNR closed form (constant SNR, IBL): splits resources so each bin
/// carries alpha_M(delta) devices on average with no interference budget,
/// B_opt = (N / (M_opt L)) log2(1 + rho) floored to an integer.
///
/// Derived in the per-frame load convention (nu = lambda_M / B).
pub fn high_snr_optimum(scenario: &Scenario, options: &SearchOptions) -> Result<Optimum> {
    scenario.validate()?;
    if scenario.regime != Regime::Ibl || scenario.fading != Fading::ConstantSnr {
        return Err(Error::InvalidConfig(
            "high_snr_optimum applies to the constant-SNR IBL model".into(),
        ));
    }
    let n_total = scenario.symbol_budget() as f64;
    let l = f64::from(scenario.payload_bits);
    let rho = scenario.snr_linear;
    let delta = scenario.outage_target;
    let log_term = (1.0 + rho).log2();

    let mut best: Option<(f64, u32, f64)> = None; // (objective, M, alpha)
    for m in 1..=options.m_cap {
        let alpha = alpha_of_delta(delta, m)?;
        let b_real = n_total / (f64::from(m) * l) * log_term;
        let objective = b_real * alpha * (1.0 - delta.powf(1.0 / f64::from(m)));
        if best.is_none_or(|(obj, _, _)| objective > obj) {
            best = Some((objective, m, alpha));
        }
    }
    let (_, m_opt, alpha) = best.expect("m_cap >= 1");
    let b_real = n_total / (f64::from(m_opt) * l) * log_term;
    if b_real < 1.0 {
        return Err(Error::Infeasible(format!(
            "B_opt = {b_real:.3} < 1: the scenario is not high-SNR-splittable"
        )));
    }

    // Integer flooring with a feasibility recheck at floor and floor + 1,
    // using the exact outage machinery at the closed form's own load.
    let survival = (1.0 - delta.powf(1.0 / f64::from(m_opt))) / (1.0 - delta);
    let mut notes = Vec::new();
    let feasible_at = |b: u32| -> Result<bool> {
        let grid = match Grid::new(scenario, b, m_opt) {
            Ok(g) => g,
            Err(_) => return Ok(false),
        };
        if grid.sinr_threshold > rho * (1.0 + 1e-12) {
            return Ok(false);
        }
        let curve = outage_curve_for(scenario, &grid, PerTfsRate::new(alpha), &options.budget)?;
        Ok(*curve.p_fail_cumulative.last().unwrap() <= delta + 1e-9)
    };
    let b_floor = b_real.floor() as u32;
    let b_opt = if feasible_at(b_floor + 1)? {
        b_floor + 1
    } else if feasible_at(b_floor)? {
        b_floor
    } else {
        notes.push(format!(
            "closed-form bins {b_floor} fail the exact feasibility recheck; reporting the floor"
        ));
        b_floor
    };

    let lambda_aggregate = alpha * f64::from(b_opt);
    let lambda_opt = lambda_aggregate * survival;
    let grid = Grid::new(scenario, b_opt, m_opt)?;
    notes.push("derived in the per-frame load convention".into());
    Ok(Optimum {
        bins: b_opt,
        attempts: m_opt,
        lambda_opt,
        lambda_aggregate,
        threshold: grid.sinr_threshold,
        method: Method::HighSnrClosedForm,
        diagnostics: Diagnostics { notes, ..Diagnostics::default() },
    })
}

/// True when rho < 2^{2L/N} - 1, the sufficient condition for
/// B_opt = M_opt = 1.
pub fn low_snr_sufficient(scenario: &Scenario) -> bool {
    let exponent = 2.0 * f64::from(scenario.payload_bits) / scenario.symbol_budget() as f64;
    scenario.snr_linear < 2f64.powf(exponent) - 1.0
}

/// Low-SNR closed form (constant SNR, IBL): B_opt = M_opt = 1 and the
/// Gaussian tail approximation of the single-slot occupancy constraint,
/// lambda_opt = (sqrt(k*_1 + Q^{-1}(delta)^2 / 4) - Q^{-1}(delta)/2)^2.
pub fn low_snr_optimum(scenario: &Scenario) -> Result<Optimum> {
    scenario.validate()?;
    if scenario.regime != Regime::Ibl || scenario.fading != Fading::ConstantSnr {
        return Err(Error::InvalidConfig(
            "low_snr_optimum applies to the constant-SNR IBL model".into(),
        ));
    }
    let n_total = scenario.symbol_budget();
    let gamma = crate::model::ibl_threshold(scenario.payload_bits, n_total);
    let rho = scenario.snr_linear;
    let arg = 1.0 + 1.0 / gamma - 1.0 / rho;
    if arg < 1.0 {
        return Err(Error::Infeasible(format!(
            "k*_1 = floor({arg:.3}) < 1: SNR below single-user decodability"
        )));
    }
    let k_star = arg.floor();
    let qi = q_inverse(scenario.outage_target)?;
    let lambda_opt = ((k_star + qi * qi / 4.0).sqrt() - qi / 2.0).powi(2);
    Ok(Optimum {
        bins: 1,
        attempts: 1,
        lambda_opt,
        lambda_aggregate: lambda_opt,
        threshold: gamma,
        method: Method::LowSnrClosedForm,
        diagnostics: Diagnostics::default(),
    })
}

/// High-SNR scaling cell for Rayleigh fading (IBL): per attempt budget, the
/// threshold a lone fading device can meet with outage delta is
/// Gamma_opt = M rho ln(1/(1-delta)) / mu, the bins follow the capacity
/// relation B = (N/(ML)) log2(1 + Gamma_opt), the per-bin load solves the
/// exact fading outage at the realized grid threshold, and M is selected by
/// the factorial-weighted retransmission denominator.
pub fn rayleigh_high_snr_optimum(scenario: &Scenario, options: &SearchOptions) -> Result<Optimum> {
    scenario.validate()?;
    let mu = match (scenario.regime, scenario.fading) {
        (Regime::Ibl, Fading::Rayleigh { mu }) => mu,
        _ => {
            return Err(Error::InvalidConfig(
                "rayleigh_high_snr_optimum applies to the Rayleigh IBL model".into(),
            ))
        }
    };
    let n_total = scenario.symbol_budget() as f64;
    let l = f64::from(scenario.payload_bits);
    let rho = scenario.snr_linear;
    let delta = scenario.outage_target;

    struct Candidate {
        m: u32,
        bins: u32,
        grid: Grid,
        nu_star: f64,
        selector: f64,
    }
    let mut cands: Vec<Candidate> = Vec::new();
    let mut notes = Vec::new();
    for m in 1..=options.m_cap {
        let gamma_opt = f64::from(m) * rho * (1.0 / (1.0 - delta)).ln() / mu;
        let b_real = n_total / (f64::from(m) * l) * (1.0 + gamma_opt).log2();
        if b_real < 1.0 {
            continue;
        }
        // Feasibility recheck at floor and floor+1; the integer grid's
        // realized threshold can overshoot Gamma_opt, in which case step the
        // bins down until a lone device meets the budget.
        let mut b = b_real.floor() as u32;
        let mut chosen: Option<(u32, Grid, f64)> = None;
        for cand in [b + 1, b] {
            if let Ok(grid) = Grid::new(scenario, cand, m) {
                if let Some(nu) = invert_outage(scenario, &grid, options)? {
                    chosen = Some((cand, grid, nu));
                    break;
                }
            }
        }
        while chosen.is_none() && b > 1 {
            b -= 1;
            if let Ok(grid) = Grid::new(scenario, b, m) {
                if let Some(nu) = invert_outage(scenario, &grid, options)? {
                    notes.push(format!(
                        "M = {m}: bins stepped down to {b} (integer grid overshoots Gamma_opt)"
                    ));
                    chosen = Some((b, grid, nu));
                }
            }
        }
        let Some((bins, grid, nu_star)) = chosen else { continue };
        // Table selector: lambda_M / (1 + sum m! (mu Gamma_opt / rho)^m).
        let lambda_m = nu_star * f64::from(bins); // per-frame convention
        let mut denom = 1.0;
        let mut fact = 1.0;
        for mm in 1..m {
            fact *= f64::from(mm);
            denom += fact * (mu * gamma_opt / rho).powi(mm as i32);
        }
        cands.push(Candidate { m, bins, grid, nu_star, selector: lambda_m / denom });
    }
    let best = cands
        .into_iter()
        .max_by(|a, b| a.selector.partial_cmp(&b.selector).unwrap())
        .ok_or_else(|| {
            Error::Infeasible("no M yields B >= 1 under the Rayleigh high-SNR scaling".into())
        })?;

    let curve = outage_curve_for(
        scenario,
        &best.grid,
        PerTfsRate::new(best.nu_star),
        &options.budget,
    )?;
    let retx: f64 = curve.p_fail_cumulative[..best.m as usize - 1].iter().sum();
    let lambda_aggregate = best.nu_star * f64::from(best.bins);
    notes.push("derived in the per-frame load convention".into());
    Ok(Optimum {
        bins: best.bins,
        attempts: best.m,
        lambda_opt: lambda_aggregate / (1.0 + retx),
        lambda_aggregate,
        threshold: best.grid.sinr_threshold,
        method: Method::RayleighHighSnr,
        diagnostics: Diagnostics { notes, ..Diagnostics::default() },
    })
}

/// Bisection inversion of the outage constraint on nu for a fixed grid;
/// shared by the closed-form solvers. Returns None when infeasible.
fn invert_outage(
    scenario: &Scenario,
    grid: &Grid,
    options: &SearchOptions,
) -> Result<Option<f64>> {
    let delta = scenario.outage_target;
    if lone_device_limit(scenario, grid)? > delta {
        return Ok(None);
    }
    let attempts = grid.attempts as usize;
    let p_at = |nu: f64| -> Result<f64> {
        Ok(outage_curve_for(scenario, grid, PerTfsRate::new(nu), &options.budget)?
            .p_fail_cumulative[attempts - 1])
    };
    let mut hi = 1.0f64;
    let mut bounded = false;
    for _ in 0..40 {
        if p_at(hi)? > delta {
            bounded = true;
            break;
        }
        hi *= 2.0;
    }
    if !bounded {
        return Ok(Some(hi));
    }
    let mut lo = 0.0f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if p_at(mid)? <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 {
        Ok(Some(lo))
    } else {
        Ok(None)
    }
}

/// High-SNR scaling cell for the FBL regime (constant SNR): for each M whose
/// per-attempt error budget delta^{1/M} stays below 1/2, the bins are pushed
/// to the largest B with L/n <= C_{n, delta^{1/M}}(m rho) for every attempt m
/// (n = floor(N/(BM))), the per-bin load carries alpha_M(delta) devices, and
/// M is selected by the approximate retransmission denominator.
pub fn fbl_high_snr_optimum(scenario: &Scenario, options: &SearchOptions) -> Result<Optimum> {
    scenario.validate()?;
    if scenario.regime != Regime::Fbl || scenario.fading != Fading::ConstantSnr {
        return Err(Error::InvalidConfig(
            "fbl_high_snr_optimum applies to the constant-SNR FBL model".into(),
        ));
    }
    let n_total = scenario.symbol_budget();
    let l = scenario.payload_bits;
    let rho = scenario.snr_linear;
    let delta = scenario.outage_target;

    struct Candidate {
        m: u32,
        bins: u32,
        block_length: u64,
        objective: f64,
        lambda_m: f64,
        retx: f64,
        eps: f64,
    }
    let mut cands: Vec<Candidate> = Vec::new();
    for m in 1..=options.m_cap {
        let eps = delta.powf(1.0 / f64::from(m));
        if eps >= 0.5 {
            // Q^{-1}(eps) <= 0 would push the rate above Shannon; such
            // budgets route through Chase combining at smaller M instead.
            continue;
        }
        let bins = match largest_fbl_bins(n_total, l, rho, m, eps)? {
            Some(b) => b,
            None => continue,
        };
        let n = n_total / (u64::from(bins) * u64::from(m));
        let alpha = alpha_of_delta(delta, m)?;
        let lambda_m = alpha * f64::from(bins);
        // Approximate cumulative failures: D(1, nu)^j prod_{i<=j} Q(f(., i rho)).
        let nu = PerTfsRate::new(alpha);
        let mut retx = 0.0;
        for j in 1..m {
            retx += crate::fbl::outage_fbl_high_snr(nu, n, l, rho, j)?;
        }
        cands.push(Candidate {
            m,
            bins,
            block_length: n,
            objective: lambda_m / (1.0 + retx),
            lambda_m,
            retx,
            eps,
        });
    }
    let best = cands
        .into_iter()
        .max_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
        .ok_or_else(|| {
            Error::Infeasible(
                "no (B >= 1, M) satisfies the FBL capacity constraint at M = 1".into(),
            )
        })?;
    let threshold = fbl_threshold(best.block_length, l, best.eps)?;
    Ok(Optimum {
        bins: best.bins,
        attempts: best.m,
        lambda_opt: best.lambda_m / (1.0 + best.retx),
        lambda_aggregate: best.lambda_m,
        threshold,
        method: Method::FblHighSnr,
        diagnostics: Diagnostics {
            small_block_warning: crate::fbl::small_block_warning(best.block_length),
            notes: vec!["derived in the per-frame load convention".into()],
            ..Diagnostics::default()
        },
    })
}

/// Largest B >= 1 such that every attempt m <= M satisfies
/// L/n <= C_{n, eps}(m rho) at n = floor(N/(BM)); None when even B = 1 fails.
fn largest_fbl_bins(
    n_total: u64,
    payload_bits: u32,
    rho: f64,
    attempts: u32,
    eps: f64,
) -> Result<Option<u32>> {
    let feasible = |b: u32| -> Result<bool> {
        let n = n_total / (u64::from(b) * u64::from(attempts));
        if n < 1 {
            return Ok(false);
        }
        let params = FblRateParams { block_length: n, payload_bits, error_prob: eps };
        let rate = f64::from(payload_bits) / n as f64;
        for m in 1..=attempts {
            if rate > achievable_rate(&params, rho * f64::from(m))? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if !feasible(1)? {
        return Ok(None);
    }
    // Scan the distinct block lengths downward; the constraint tightens as B
    // grows, modulo plateaus of the integer division.
    let mut best = 1u32;
    let mut b = 1u64;
    while b * u64::from(attempts) <= n_total {
        let n = n_total / (b * u64::from(attempts));
        // Largest B sharing this block length.
        let b_plateau = n_total / (n * u64::from(attempts));
        let candidate = b_plateau.min(u64::from(u32::MAX)) as u32;
        if feasible(candidate)? {
            best = best.max(candidate);
        }
        b = b_plateau + 1;
    }
    Ok(Some(best))
}

/// Eq-style slope approximation of lambda_opt / W at high SNR (constant SNR,
/// IBL): 0.332 alpha_{M}(delta) (T / (M L)) ((1 - delta^{1/M})/(1 - delta))
/// rho_dB.
pub fn high_snr_slope_per_hz(scenario: &Scenario, m_opt: u32) -> Result<f64> {
    let alpha = alpha_of_delta(scenario.outage_target, m_opt)?;
    let delta = scenario.outage_target;
    let rho_db = 10.0 * scenario.snr_linear.log10();
    Ok(0.332
        * alpha
        * (scenario.deadline_s / (f64::from(m_opt) * f64::from(scenario.payload_bits)))
        * ((1.0 - delta.powf(1.0 / f64::from(m_opt))) / (1.0 - delta))
        * rho_db)
}
