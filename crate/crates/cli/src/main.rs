//! Command-line front end for the random-access uplink analyzer.
//!
//! Subcommands: `optimize` (best partition for one scenario), `sweep`
//! (parameter sweeps to CSV), `simulate` (slot-level Monte Carlo against the
//! analytic outage), `validate` (the full acceptance suite).
//!
//! SNR is taken in dB at this boundary and converted once; everything inside
//! the library is linear. Arrival rates are per frame of T seconds; sweep
//! output also carries a derived per-second column.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invalid flags or config,
//! 3 infeasible scenario or divergent simulated load.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ra_uplink::acceptance;
use ra_uplink::analysis::outage_with_aggregate;
use ra_uplink::error::Error;
use ra_uplink::ibl::EvalBudget;
use ra_uplink::model::{Fading, Grid, NuConvention, Regime, Scenario};
use ra_uplink::optimizer::{
    fbl_high_snr_optimum, high_snr_optimum, low_snr_optimum, low_snr_sufficient,
    optimize_exhaustive, rayleigh_high_snr_optimum, Optimum, SearchOptions,
};
use ra_uplink::simulator::{
    run_simulation, ChannelModel, OccupancyModel, SimConfig, SimStats,
};
use ra_uplink::sweep::{run_sweep, RegimeCombo, SweepSpec, SweepVariable};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ra-uplink",
    about = "Supportable arrival rates and time-frequency partitioning for a slotted \
             random-access uplink with Chase combining",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the optimal (B, M, lambda) for one scenario.
    Optimize(OptimizeArgs),
    /// Sweep one scenario variable and write a CSV of optima.
    Sweep(SweepArgs),
    /// Run the slot-level Monte Carlo and compare against the analytic outage.
    Simulate(SimulateArgs),
    /// Run the acceptance-criteria suite.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Ibl,
    Fbl,
}

#[derive(Clone, Copy, ValueEnum)]
enum FadingArg {
    Constant,
    Rayleigh,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    PerSlot,
    PerFrame,
}

impl From<ConventionArg> for NuConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::PerSlot => NuConvention::PerSlot,
            ConventionArg::PerFrame => NuConvention::PerFrame,
        }
    }
}

/// Scenario flags shared by the subcommands; a JSON config file can provide
/// any of them, with explicit flags taking precedence.
#[derive(Args, Clone)]
struct ScenarioArgs {
    /// JSON file with scenario fields (flags override its values).
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Shared bandwidth W in Hz.
    #[arg(long)]
    bandwidth_hz: Option<f64>,
    /// Latency budget T in seconds.
    #[arg(long)]
    deadline_s: Option<f64>,
    /// Payload size L in bits.
    #[arg(long)]
    payload_bits: Option<u32>,
    /// Outage target delta in (0, 1).
    #[arg(long)]
    delta: Option<f64>,
    /// Received SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Capacity model.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Received-power model.
    #[arg(long, value_enum)]
    fading: Option<FadingArg>,
    /// Rayleigh rate parameter (channel power mean 1/mu).
    #[arg(long)]
    mu: Option<f64>,
    /// Load-accounting convention for the per-TFS Poisson mean.
    #[arg(long, value_enum, default_value = "per-slot")]
    nu_convention: ConventionArg,
}

/// Flat JSON mirror of the scenario flags.
#[derive(Default, Deserialize)]
struct ScenarioFile {
    bandwidth_hz: Option<f64>,
    deadline_s: Option<f64>,
    payload_bits: Option<u32>,
    delta: Option<f64>,
    snr_db: Option<f64>,
    regime: Option<String>,
    fading: Option<String>,
    mu: Option<f64>,
}

impl ScenarioArgs {
    fn build(&self) -> Result<(Scenario, NuConvention), Error> {
        let file: ScenarioFile = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::InvalidConfig(format!("reading {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    Error::InvalidConfig(format!("parsing {}: {e}", path.display()))
                })?
            }
            None => ScenarioFile::default(),
        };
        let bandwidth_hz = self
            .bandwidth_hz
            .or(file.bandwidth_hz)
            .ok_or_else(|| Error::InvalidConfig("missing --bandwidth-hz".into()))?;
        let deadline_s = self
            .deadline_s
            .or(file.deadline_s)
            .ok_or_else(|| Error::InvalidConfig("missing --deadline-s".into()))?;
        let payload_bits = self
            .payload_bits
            .or(file.payload_bits)
            .ok_or_else(|| Error::InvalidConfig("missing --payload-bits".into()))?;
        let delta = self
            .delta
            .or(file.delta)
            .ok_or_else(|| Error::InvalidConfig("missing --delta".into()))?;
        let snr_db = self
            .snr_db
            .or(file.snr_db)
            .ok_or_else(|| Error::InvalidConfig("missing --snr-db".into()))?;
        let regime = match self.regime {
            Some(RegimeArg::Ibl) => Regime::Ibl,
            Some(RegimeArg::Fbl) => Regime::Fbl,
            None => match file.regime.as_deref() {
                Some("ibl") | None => Regime::Ibl,
                Some("fbl") => Regime::Fbl,
                Some(other) => {
                    return Err(Error::InvalidConfig(format!("unknown regime {other:?}")))
                }
            },
        };
        let mu = self.mu.or(file.mu).unwrap_or(1.0);
        let fading = match self.fading {
            Some(FadingArg::Constant) => Fading::ConstantSnr,
            Some(FadingArg::Rayleigh) => Fading::Rayleigh { mu },
            None => match file.fading.as_deref() {
                Some("constant") | None => Fading::ConstantSnr,
                Some("rayleigh") => Fading::Rayleigh { mu },
                Some(other) => {
                    return Err(Error::InvalidConfig(format!("unknown fading {other:?}")))
                }
            },
        };
        let scenario = Scenario {
            bandwidth_hz,
            deadline_s,
            payload_bits,
            outage_target: delta,
            snr_linear: 10f64.powf(snr_db / 10.0),
            fading,
            regime,
        };
        scenario.validate()?;
        Ok((scenario, self.nu_convention.into()))
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Largest number of transmission attempts searched.
    #[arg(long, default_value_t = 16)]
    m_cap: u32,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Swept scenario variable.
    #[arg(long, value_enum)]
    variable: SweepVariableArg,
    /// Comma-separated, strictly increasing grid values.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    values: Vec<f64>,
    /// Regime/fading combinations to run.
    #[arg(long, value_delimiter = ',', default_value = "ibl-const")]
    regimes: Vec<RegimeComboArg>,
    /// Largest number of transmission attempts searched.
    #[arg(long, default_value_t = 16)]
    m_cap: u32,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepVariableArg {
    BandwidthHz,
    SnrDb,
    Delta,
    PayloadBits,
    DeadlineS,
}

impl From<SweepVariableArg> for SweepVariable {
    fn from(v: SweepVariableArg) -> Self {
        match v {
            SweepVariableArg::BandwidthHz => SweepVariable::BandwidthHz,
            SweepVariableArg::SnrDb => SweepVariable::SnrDb,
            SweepVariableArg::Delta => SweepVariable::Delta,
            SweepVariableArg::PayloadBits => SweepVariable::PayloadBits,
            SweepVariableArg::DeadlineS => SweepVariable::DeadlineS,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeComboArg {
    IblConst,
    IblRayleigh,
    FblConst,
}

impl From<RegimeComboArg> for RegimeCombo {
    fn from(v: RegimeComboArg) -> Self {
        match v {
            RegimeComboArg::IblConst => RegimeCombo::IblConst,
            RegimeComboArg::IblRayleigh => RegimeCombo::IblRayleigh,
            RegimeComboArg::FblConst => RegimeCombo::FblConst,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Frequency bins B.
    #[arg(long, default_value_t = 1)]
    bins: u32,
    /// Transmission attempts M.
    #[arg(long, default_value_t = 1)]
    attempts: u32,
    /// New-arrival rate per frame of T seconds.
    #[arg(long)]
    lambda: f64,
    /// Tagged arrivals to measure.
    #[arg(long, default_value_t = 100_000)]
    measured_arrivals: u64,
    /// Warmup slots (0 = automatic).
    #[arg(long, default_value_t = 0)]
    warmup_slots: u64,
    /// RNG seed (echoed in the output).
    #[arg(long, default_value_t = 0xC0FFEE)]
    seed: u64,
    /// Channel model (defaults to the scenario's fading).
    #[arg(long, value_enum)]
    channel: Option<FadingArg>,
    /// Occupancy model: faithful population or the analysis's i.i.d. view.
    #[arg(long, value_enum, default_value = "protocol")]
    occupancy: OccupancyArg,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OccupancyArg {
    Protocol,
    Analytic,
}

#[derive(Args)]
struct ValidateArgs {
    /// Run a single criterion (1..=12) instead of all.
    #[arg(long)]
    criterion: Option<u32>,
}

#[derive(Serialize)]
struct ClosedFormReport {
    method: String,
    bins: u32,
    attempts: u32,
    lambda_opt: f64,
    relative_gap_to_exhaustive: f64,
    note: &'static str,
}

#[derive(Serialize)]
struct OptimizeReport {
    scenario: Scenario,
    nu_convention: NuConvention,
    exhaustive: Optimum,
    closed_form: Option<ClosedFormReport>,
    closed_form_error: Option<String>,
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<(), Error> {
    let (scenario, convention) = args.scenario.build()?;
    let options = SearchOptions { m_cap: args.m_cap, convention, ..Default::default() };
    let exhaustive = optimize_exhaustive(&scenario, &options)?;

    // The applicable closed form; all of them are derived in the per-frame
    // load convention.
    let cf_options =
        SearchOptions { convention: NuConvention::PerFrame, ..options };
    let closed = match (scenario.regime, scenario.fading) {
        (Regime::Ibl, Fading::ConstantSnr) => {
            if low_snr_sufficient(&scenario) {
                low_snr_optimum(&scenario)
            } else {
                high_snr_optimum(&scenario, &cf_options)
            }
        }
        (Regime::Ibl, Fading::Rayleigh { .. }) => {
            rayleigh_high_snr_optimum(&scenario, &cf_options)
        }
        (Regime::Fbl, Fading::ConstantSnr) => fbl_high_snr_optimum(&scenario, &cf_options),
        (Regime::Fbl, Fading::Rayleigh { .. }) => {
            Err(Error::InvalidConfig("no closed form for Rayleigh FBL".into()))
        }
    };

    let (closed_form, closed_form_error) = match closed {
        Ok(cf) => {
            let gap = (exhaustive.lambda_opt - cf.lambda_opt).abs() / cf.lambda_opt.max(1e-300);
            (
                Some(ClosedFormReport {
                    method: format!("{:?}", cf.method),
                    bins: cf.bins,
                    attempts: cf.attempts,
                    lambda_opt: cf.lambda_opt,
                    relative_gap_to_exhaustive: gap,
                    note: if convention == NuConvention::PerFrame {
                        "matched per-frame convention"
                    } else {
                        "closed form uses the per-frame convention; exhaustive ran per-slot"
                    },
                }),
                None,
            )
        }
        Err(e) => (None, Some(e.to_string())),
    };

    println!("scenario: W = {} Hz, T = {} s, L = {} bits, delta = {}, SNR = {:.2} dB",
        scenario.bandwidth_hz,
        scenario.deadline_s,
        scenario.payload_bits,
        scenario.outage_target,
        10.0 * scenario.snr_linear.log10(),
    );
    println!(
        "exhaustive: B = {}, M = {}, lambda_opt = {:.6} /frame ({:.3} /s), lambda_M = {:.6}, Gamma = {:.6}",
        exhaustive.bins,
        exhaustive.attempts,
        exhaustive.lambda_opt,
        exhaustive.lambda_opt / scenario.deadline_s,
        exhaustive.lambda_aggregate,
        exhaustive.threshold,
    );
    match (&closed_form, &closed_form_error) {
        (Some(cf), _) => println!(
            "closed form [{}]: B = {}, M = {}, lambda_opt = {:.6} (gap {:.2}%) [{}]",
            cf.method,
            cf.bins,
            cf.attempts,
            cf.lambda_opt,
            100.0 * cf.relative_gap_to_exhaustive,
            cf.note,
        ),
        (None, Some(e)) => println!("closed form unavailable: {e}"),
        _ => {}
    }

    let report = OptimizeReport {
        scenario,
        nu_convention: convention,
        exhaustive,
        closed_form,
        closed_form_error,
    };
    emit_json(&report, args.output.as_deref())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Error> {
    let (scenario, convention) = args.scenario.build()?;
    let mu = match scenario.fading {
        Fading::Rayleigh { mu } => mu,
        Fading::ConstantSnr => args.scenario.mu.unwrap_or(1.0),
    };
    let spec = SweepSpec {
        variable: args.variable.into(),
        grid: args.values.clone(),
        base: scenario,
        regimes: args.regimes.iter().map(|&c| c.into()).collect(),
        mu,
        options: SearchOptions { m_cap: args.m_cap, convention, ..Default::default() },
    };
    let rows = run_sweep(&spec)?;

    let io_err = |path: &std::path::Path, e: csv::Error| {
        Error::InvalidConfig(format!("writing {}: {e}", path.display()))
    };
    match &args.output {
        Some(path) => {
            let mut writer = csv::Writer::from_path(path)
                .map_err(|e| io_err(path, e))?;
            for row in &rows {
                writer.serialize(row).map_err(|e| io_err(path, e))?;
            }
            writer.flush().map_err(|e| {
                Error::InvalidConfig(format!("flushing {}: {e}", path.display()))
            })?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            let mut writer = csv::Writer::from_writer(std::io::stdout());
            for row in &rows {
                writer
                    .serialize(row)
                    .map_err(|e| Error::InvalidConfig(format!("writing stdout: {e}")))?;
            }
            writer
                .flush()
                .map_err(|e| Error::InvalidConfig(format!("flushing stdout: {e}")))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport {
    scenario: Scenario,
    bins: u32,
    attempts: u32,
    lambda_per_frame: f64,
    seed: u64,
    occupancy: &'static str,
    stats: SimStats,
    analytic_p_fail: f64,
    analytic_lambda_aggregate: f64,
    z_score: f64,
    empirical_lambda_aggregate: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let (scenario, convention) = args.scenario.build()?;
    let grid = Grid::new(&scenario, args.bins, args.attempts)?;
    let channel_model = match args.channel {
        Some(FadingArg::Rayleigh) => ChannelModel::RayleighBlock,
        Some(FadingArg::Constant) => ChannelModel::ConstantSnr,
        None => match scenario.fading {
            Fading::Rayleigh { .. } => ChannelModel::RayleighBlock,
            Fading::ConstantSnr => ChannelModel::ConstantSnr,
        },
    };
    let config = SimConfig {
        scenario,
        grid,
        lambda_per_frame: args.lambda,
        warmup_slots: args.warmup_slots,
        measured_arrivals: args.measured_arrivals,
        seed: args.seed,
        channel_model,
        occupancy: match args.occupancy {
            OccupancyArg::Protocol => OccupancyModel::Protocol,
            OccupancyArg::Analytic => OccupancyModel::AnalyticIid,
        },
        nu_convention: convention,
    };
    let stats = run_simulation(&config)?;
    let analytic = outage_with_aggregate(
        &scenario,
        &grid,
        args.lambda,
        convention,
        &EvalBudget::default(),
        None,
    )?;
    let p = *analytic.p_fail_cumulative.last().unwrap();
    let z = (stats.p_fail_hat - p) / stats.binomial_stderr.max(1e-300);
    let report = SimulateReport {
        scenario,
        bins: args.bins,
        attempts: args.attempts,
        lambda_per_frame: args.lambda,
        seed: args.seed,
        occupancy: match args.occupancy {
            OccupancyArg::Protocol => "protocol",
            OccupancyArg::Analytic => "analytic",
        },
        empirical_lambda_aggregate: ra_uplink::simulator::estimate_aggregate_rate(
            &stats,
            args.lambda,
            args.attempts,
        ),
        stats,
        analytic_p_fail: p,
        analytic_lambda_aggregate: analytic.lambda_aggregate,
        z_score: z,
    };
    emit_json(&report, args.output.as_deref())
}

fn cmd_validate(args: &ValidateArgs) -> Result<bool, Error> {
    let reports = match args.criterion {
        None => acceptance::run_all(),
        Some(id) => {
            let all = [
                acceptance::criterion_1 as fn() -> acceptance::CriterionReport,
                acceptance::criterion_2,
                acceptance::criterion_3,
                acceptance::criterion_4,
                acceptance::criterion_5,
                acceptance::criterion_6,
                acceptance::criterion_7,
                acceptance::criterion_8,
                acceptance::criterion_9,
                acceptance::criterion_10,
                acceptance::criterion_11,
                acceptance::criterion_12,
            ];
            let idx = id
                .checked_sub(1)
                .filter(|&i| (i as usize) < all.len())
                .ok_or_else(|| Error::InvalidConfig(format!("criterion {id} not in 1..=12")))?;
            vec![all[idx as usize]()]
        }
    };
    let mut all_passed = true;
    for r in &reports {
        println!("{}", r.summary_line());
        all_passed &= r.passed;
    }
    println!(
        "{}/{} criteria passed",
        reports.iter().filter(|r| r.passed).count(),
        reports.len()
    );
    Ok(all_passed)
}

fn emit_json<T: Serialize>(value: &T, output: Option<&std::path::Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidConfig(format!("serializing report: {e}")))?;
    match output {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| Error::InvalidConfig(format!("creating {}: {e}", path.display())))?;
            f.write_all(text.as_bytes())
                .and_then(|_| f.write_all(b"\n"))
                .map_err(|e| Error::InvalidConfig(format!("writing {}: {e}", path.display())))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::Domain { .. } => 2,
        Error::Infeasible(_) | Error::DivergentLoad(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool, Error> = match &cli.command {
        Command::Optimize(args) => cmd_optimize(args).map(|_| true),
        Command::Sweep(args) => cmd_sweep(args).map(|_| true),
        Command::Simulate(args) => cmd_simulate(args).map(|_| true),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
