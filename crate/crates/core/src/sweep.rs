//! Parameter sweeps: run the exhaustive optimizer across a grid of one
//! scenario variable for one or more regime/fading combinations, emitting one
//! row per (grid point, regime) in deterministic order.

use crate::error::{Error, Result};
use crate::model::{Fading, Regime, Scenario};
use crate::optimizer::{optimize_exhaustive, Optimum, SearchOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    BandwidthHz,
    SnrDb,
    Delta,
    PayloadBits,
    DeadlineS,
}

impl SweepVariable {
    pub fn apply(self, base: &Scenario, value: f64) -> Scenario {
        let mut sc = *base;
        match self {
            SweepVariable::BandwidthHz => sc.bandwidth_hz = value,
            SweepVariable::SnrDb => sc.snr_linear = 10f64.powf(value / 10.0),
            SweepVariable::Delta => sc.outage_target = value,
            SweepVariable::PayloadBits => sc.payload_bits = value.round() as u32,
            SweepVariable::DeadlineS => sc.deadline_s = value,
        }
        sc
    }
}

/// Regime/fading combinations a sweep can cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeCombo {
    IblConst,
    IblRayleigh,
    FblConst,
}

impl RegimeCombo {
    pub fn label(self) -> &'static str {
        match self {
            RegimeCombo::IblConst => "ibl-const",
            RegimeCombo::IblRayleigh => "ibl-rayleigh",
            RegimeCombo::FblConst => "fbl-const",
        }
    }

    fn apply(self, base: &Scenario, mu: f64) -> Scenario {
        let mut sc = *base;
        match self {
            RegimeCombo::IblConst => {
                sc.regime = Regime::Ibl;
                sc.fading = Fading::ConstantSnr;
            }
            RegimeCombo::IblRayleigh => {
                sc.regime = Regime::Ibl;
                sc.fading = Fading::Rayleigh { mu };
            }
            RegimeCombo::FblConst => {
                sc.regime = Regime::Fbl;
                sc.fading = Fading::ConstantSnr;
            }
        }
        sc
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Strictly increasing, non-empty.
    pub grid: Vec<f64>,
    /// Scenario providing every non-swept field.
    pub base: Scenario,
    pub regimes: Vec<RegimeCombo>,
    /// Rayleigh mean parameter for the ibl-rayleigh combination.
    pub mu: f64,
    pub options: SearchOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("sweep grid must be strictly increasing".into()));
        }
        if self.regimes.is_empty() {
            return Err(Error::InvalidConfig("no regimes selected".into()));
        }
        Ok(())
    }
}

/// One sweep result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub swept_value: f64,
    pub regime: String,
    pub fading: String,
    pub b_opt: u32,
    pub m_opt: u32,
    pub lambda_opt: f64,
    pub lambda_m: f64,
    pub gamma: f64,
    pub method: String,
    /// Convenience column: arrivals per second at the row's deadline.
    pub lambda_opt_per_s: f64,
}

impl SweepRow {
    fn infeasible(value: f64, scenario: &Scenario) -> Self {
        SweepRow {
            swept_value: value,
            regime: match scenario.regime {
                Regime::Ibl => "ibl".into(),
                Regime::Fbl => "fbl".into(),
            },
            fading: match scenario.fading {
                Fading::ConstantSnr => "constant".into(),
                Fading::Rayleigh { .. } => "rayleigh".into(),
            },
            b_opt: 0,
            m_opt: 0,
            lambda_opt: 0.0,
            lambda_m: 0.0,
            gamma: 0.0,
            method: "Infeasible".into(),
            lambda_opt_per_s: 0.0,
        }
    }

    fn from_optimum(value: f64, scenario: &Scenario, opt: &Optimum) -> Self {
        SweepRow {
            swept_value: value,
            regime: match scenario.regime {
                Regime::Ibl => "ibl".into(),
                Regime::Fbl => "fbl".into(),
            },
            fading: match scenario.fading {
                Fading::ConstantSnr => "constant".into(),
                Fading::Rayleigh { .. } => "rayleigh".into(),
            },
            b_opt: opt.bins,
            m_opt: opt.attempts,
            lambda_opt: opt.lambda_opt,
            lambda_m: opt.lambda_aggregate,
            gamma: opt.threshold,
            method: format!("{:?}", opt.method),
            lambda_opt_per_s: opt.lambda_opt / scenario.deadline_s,
        }
    }
}

/// Runs the sweep; rows are ordered by grid point, then by the requested
/// regime order, regardless of worker scheduling.
///
/// Grid points whose outage target no partition can meet (possible under
/// fading at low SNR, where a lone device alone exceeds the budget) produce
/// a zeroed row with method "Infeasible" rather than aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let tasks: Vec<(usize, f64, RegimeCombo)> = spec
        .grid
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| spec.regimes.iter().map(move |&c| (i, v, c)))
        .collect();
    let mut rows: Vec<(usize, usize, SweepRow)> = tasks
        .par_iter()
        .map(|&(i, value, combo)| -> Result<(usize, usize, SweepRow)> {
            let scenario = combo.apply(&spec.variable.apply(&spec.base, value), spec.mu);
            let combo_idx = spec.regimes.iter().position(|&c| c == combo).unwrap();
            let row = match optimize_exhaustive(&scenario, &spec.options) {
                Ok(opt) => SweepRow::from_optimum(value, &scenario, &opt),
                Err(Error::Infeasible(_)) => SweepRow::infeasible(value, &scenario),
                Err(e) => return Err(e),
            };
            Ok((i, combo_idx, row))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|(i, j, _)| (*i, *j));
    Ok(rows.into_iter().map(|(_, _, r)| r).collect())
}
