//! Scenario-level outage evaluation: dispatches to the regime- and
//! fading-appropriate curve and couples it with the aggregate-rate fixed
//! point.

use crate::error::{Error, Result};
use crate::fbl::outage_curve_fbl;
use crate::ibl::{
    outage_curve_ibl_constant, outage_curve_ibl_rayleigh, solve_aggregate_rate, EvalBudget,
    OutageCurve, OutageResult,
};
use crate::model::{Fading, Grid, NuConvention, PerTfsRate, Regime, Scenario};

/// Outage curve for `scenario` on `grid` at per-TFS load `nu`.
pub fn outage_curve_for(
    scenario: &Scenario,
    grid: &Grid,
    nu: PerTfsRate,
    budget: &EvalBudget,
) -> Result<OutageCurve> {
    match (scenario.regime, scenario.fading) {
        (Regime::Ibl, Fading::ConstantSnr) => Ok(outage_curve_ibl_constant(
            nu,
            grid.sinr_threshold,
            scenario.snr_linear,
            grid.attempts,
            budget,
        )),
        (Regime::Ibl, Fading::Rayleigh { mu }) => outage_curve_ibl_rayleigh(
            nu,
            grid.sinr_threshold,
            scenario.snr_linear,
            mu,
            grid.attempts,
        ),
        (Regime::Fbl, Fading::ConstantSnr) => Ok(outage_curve_fbl(
            nu,
            grid.block_length,
            grid.payload_bits,
            scenario.snr_linear,
            grid.attempts,
            budget,
        )),
        (Regime::Fbl, Fading::Rayleigh { .. }) => Err(Error::InvalidConfig(
            "finite-block-length analysis under Rayleigh fading is not supported".into(),
        )),
    }
}

/// Failure probability of a lone device (nu -> 0+) through all attempts;
/// the cell is infeasible for any positive load when this exceeds delta.
pub fn lone_device_limit(scenario: &Scenario, grid: &Grid) -> Result<f64> {
    let curve = outage_curve_for(scenario, grid, PerTfsRate::new(0.0), &EvalBudget::default())?;
    Ok(*curve.p_fail_cumulative.last().expect("attempts >= 1"))
}

/// Full evaluation at new-arrival rate `lambda`: solves the aggregate-rate
/// fixed point, then reports the outage curve at the solved lambda_M.
///
/// `warm_start` seeds the fixed-point iteration (bisection sweeps reuse the
/// previous solution).
pub fn outage_with_aggregate(
    scenario: &Scenario,
    grid: &Grid,
    lambda: f64,
    convention: NuConvention,
    budget: &EvalBudget,
    warm_start: Option<f64>,
) -> Result<OutageResult> {
    let mut eval_err = None;
    let fp = solve_aggregate_rate(lambda, grid.attempts, warm_start, |lambda_m| {
        let nu = convention.nu(lambda_m, grid.bins, grid.attempts);
        match outage_curve_for(scenario, grid, nu, budget) {
            Ok(c) => c.p_fail_cumulative,
            Err(e) => {
                eval_err = Some(e);
                vec![0.0; grid.attempts as usize]
            }
        }
    })?;
    if let Some(e) = eval_err {
        return Err(e);
    }
    let nu = convention.nu(fp.lambda_aggregate, grid.bins, grid.attempts);
    let curve = outage_curve_for(scenario, grid, nu, budget)?;
    Ok(OutageResult {
        p_fail_cumulative: curve.p_fail_cumulative,
        lambda_aggregate: fp.lambda_aggregate,
        truncation_error_bound: curve.truncation_error_bound,
        evaluation_method: curve.evaluation_method,
    })
}
