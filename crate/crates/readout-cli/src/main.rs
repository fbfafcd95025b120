//! `readout` — design calculator for dispersive qubit readout with a
//! photon-number-resolving detector.
//!
//! Subcommands cover single-point statistics, SNR- and
//! fidelity-optimal parameter searches, laboratory-unit estimation,
//! parameter sweeps, Monte Carlo validation, and figure-data emission.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use readout_core::montecarlo::{partition_trials, simulate_stream};
use readout_core::statistics::{
    fidelity, fidelity_gaussian, fidelity_gaussian_snr, fidelity_on_off, mean_counts_deltak,
    mean_counts_dx, snr, threshold_count, DimensionlessDX, DimensionlessDeltaK, MeanCounts,
};
use readout_core::{
    check_regime, estimate_measurement_time, fidelity_detuning_bounds, fidelity_joint_optimum,
    fidelity_jump_times, fidelity_optimal_detuning, snr_detuning_large_x_approx,
    snr_detuning_small_x_approx, snr_global_optimum, snr_optimal_detuning, to_dimensionless,
    Branch, JumpKind, RegimeReport, Verdict,
};

use config::{load_setup, Units};
use output::{emit_json, Format, Table, SCHEMA};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files, malformed values. Exit code 2.
    Usage(String),
    /// Arguments outside the physics domain. Exit code 3.
    Domain(String),
    /// Solver non-convergence. Exit code 4.
    Numerical(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Domain(_) => "domain",
            CliError::Numerical(_) => "numerical",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Numerical(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<readout_core::Error> for CliError {
    fn from(e: readout_core::Error) -> Self {
        match e {
            readout_core::Error::Domain(_)
            | readout_core::Error::Degenerate(_)
            | readout_core::Error::CapExceeded { .. } => CliError::Domain(e.to_string()),
            readout_core::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "readout",
    version,
    about = "Dispersive-readout design calculator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format for the primary document.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Output path (file; for `figures`, a directory).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps, grids and Monte Carlo (default: all).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Photocount statistics at a single working point.
    Stats(StatsArgs),
    /// SNR-optimal detuning or the joint (Delta, K) SNR optimum.
    OptimizeSnr(OptimizeSnrArgs),
    /// Fidelity-optimal detuning, jump localization, or the joint
    /// optimum.
    OptimizeFidelity(OptimizeFidelityArgs),
    /// Measurement-time estimate from a laboratory setup file.
    Estimate(EstimateArgs),
    /// Grid sweep over a dimensionless parametrization (CSV).
    Sweep(SweepArgs),
    /// Monte Carlo cross-check of the analytic fidelity.
    McCheck(McCheckArgs),
    /// Emit data files for the standard diagnostic figures.
    Figures(FiguresArgs),
}

#[derive(Args)]
struct PointArgs {
    /// Weak-coupling point: --dx D=0.6 X=0.15 tau=20
    #[arg(long, num_args = 1..=3, value_name = "KEY=VALUE")]
    dx: Option<Vec<String>>,

    /// Pull-normalized point: --deltak Delta=1.12 K=0.87 Tm=11.3
    #[arg(long, num_args = 1..=3, value_name = "KEY=VALUE")]
    deltak: Option<Vec<String>>,

    /// Laboratory setup file (TOML with a `[setup]` section).
    #[arg(long, value_name = "FILE")]
    physical: Option<PathBuf>,

    /// Frequency convention for --physical inputs.
    #[arg(long, value_enum, default_value = "angular")]
    units: Units,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    point: PointArgs,
}

#[derive(Args)]
struct OptimizeSnrArgs {
    /// Dispersive pull X (in units of kappa/2) for the fixed-pull
    /// problem.
    #[arg(long = "X", visible_alias = "x", value_name = "X")]
    x: Option<f64>,

    /// Solve the joint (Delta, K) optimum instead.
    #[arg(long, conflicts_with = "x")]
    joint: bool,

    /// All leakage through the detector port (joint problem only).
    #[arg(long)]
    asymmetric: bool,

    /// Relative tolerance on the stationarity residual.
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
}

#[derive(Args)]
struct OptimizeFidelityArgs {
    /// Dispersive pull X for the fixed-pull problem.
    #[arg(long = "X", visible_alias = "x", value_name = "X")]
    x: Option<f64>,

    /// Dimensionless measurement time tau_m (fixed-pull problem).
    #[arg(long)]
    tau: Option<f64>,

    /// Locate optimal-detuning jumps over (tau-min, tau-max] instead of
    /// optimizing a single point.
    #[arg(long, requires = "x")]
    jumps: bool,

    #[arg(long, default_value_t = 0.1)]
    tau_min: f64,

    #[arg(long, requires = "jumps")]
    tau_max: Option<f64>,

    /// Solve the joint (Delta, K) optimum at dimensionless time --tm.
    #[arg(long, conflicts_with_all = ["x", "tau", "jumps"])]
    joint: bool,

    /// Dimensionless time T_m for the joint problem.
    #[arg(long, requires = "joint")]
    tm: Option<f64>,

    /// All leakage through the detector port (doubles the effective
    /// time).
    #[arg(long)]
    asymmetric: bool,
}

#[derive(Args)]
struct EstimateArgs {
    /// Laboratory setup file (TOML with a `[setup]` section).
    #[arg(long, value_name = "FILE")]
    physical: PathBuf,

    #[arg(long, value_enum, default_value = "angular")]
    units: Units,

    /// Target measurement fidelity in [0.5, 0.9999].
    #[arg(long)]
    target_fidelity: f64,

    /// All leakage through the detector port.
    #[arg(long)]
    asymmetric: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    point: PointArgs,
}

#[derive(Args)]
struct McCheckArgs {
    #[command(flatten)]
    point: PointArgs,

    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,

    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct FiguresArgs {
    /// Which figure's data to emit.
    #[arg(long, value_enum, default_value = "all")]
    which: Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Figure {
    /// Optimal vs naive detuning and SNR gain as functions of X.
    Fig2,
    /// Optimal-detuning sawtooth vs measurement time for X = 1 and 9.
    Fig3,
    /// Photocount distributions at D=0.6, X=0.15 for short/long runs.
    Fig4,
    /// Fidelity over the (Delta, K) plane at T_m = 11.29.
    Fig5,
    All,
}

// ---------------------------------------------------------------------------
// Point parsing
// ---------------------------------------------------------------------------

/// A swept or fixed value.
#[derive(Debug, Clone, Copy)]
enum Span {
    Fixed(f64),
    Range { lo: f64, hi: f64, count: usize },
}

impl Span {
    fn values(&self) -> Vec<f64> {
        match *self {
            Span::Fixed(v) => vec![v],
            Span::Range { lo, hi, count } => (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }

    fn fixed(&self) -> Option<f64> {
        match *self {
            Span::Fixed(v) => Some(v),
            Span::Range { .. } => None,
        }
    }
}

fn parse_span(text: &str) -> Result<Span, CliError> {
    if let Some((lo, rest)) = text.split_once(':') {
        let (hi, count) = rest
            .split_once(':')
            .ok_or_else(|| CliError::usage(format!("range must be lo:hi:count, got `{text}`")))?;
        let lo: f64 = lo
            .parse()
            .map_err(|_| CliError::usage(format!("bad number in range `{text}`")))?;
        let hi: f64 = hi
            .parse()
            .map_err(|_| CliError::usage(format!("bad number in range `{text}`")))?;
        let count: usize = count
            .parse()
            .map_err(|_| CliError::usage(format!("bad count in range `{text}`")))?;
        if count < 2 {
            return Err(CliError::usage("range count must be >= 2"));
        }
        Ok(Span::Range { lo, hi, count })
    } else {
        let v: f64 = text
            .parse()
            .map_err(|_| CliError::usage(format!("bad number `{text}`")))?;
        Ok(Span::Fixed(v))
    }
}

fn parse_keyed(pairs: &[String], fields: &[(&str, &[&str])]) -> Result<Vec<Span>, CliError> {
    let mut out: Vec<Option<Span>> = vec![None; fields.len()];
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("expected KEY=VALUE, got `{pair}`")))?;
        let key_lc = key.to_ascii_lowercase();
        let idx = fields
            .iter()
            .position(|(_, aliases)| aliases.contains(&key_lc.as_str()))
            .ok_or_else(|| CliError::usage(format!("unknown key `{key}`")))?;
        if out[idx].is_some() {
            return Err(CliError::usage(format!("key `{key}` given twice")));
        }
        out[idx] = Some(parse_span(value)?);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::usage(format!("missing key `{}`", fields[i].0))))
        .collect()
}

const DX_FIELDS: &[(&str, &[&str])] = &[
    ("D", &["d"]),
    ("X", &["x"]),
    ("tau", &["tau", "tau_m", "taum"]),
];
const DK_FIELDS: &[(&str, &[&str])] = &[
    ("Delta", &["delta"]),
    ("K", &["k"]),
    ("Tm", &["tm", "t_m", "t"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parametrization {
    Dx,
    DeltaK,
    Physical,
}

/// A resolved single point plus the regime report when it came from a
/// laboratory setup.
struct Point {
    parametrization: Parametrization,
    dx: DimensionlessDX,
    regime: Option<RegimeReport>,
}

impl PointArgs {
    fn count_given(&self) -> usize {
        usize::from(self.dx.is_some())
            + usize::from(self.deltak.is_some())
            + usize::from(self.physical.is_some())
    }

    fn resolve(&self) -> Result<Point, CliError> {
        if self.count_given() != 1 {
            return Err(CliError::usage(
                "give exactly one of --dx, --deltak, --physical",
            ));
        }
        if let Some(pairs) = &self.dx {
            let spans = parse_keyed(pairs, DX_FIELDS)?;
            let fixed = fixed_only(&spans)?;
            let dx = DimensionlessDX::new(fixed[0], fixed[1], fixed[2])?;
            return Ok(Point {
                parametrization: Parametrization::Dx,
                dx,
                regime: None,
            });
        }
        if let Some(pairs) = &self.deltak {
            let spans = parse_keyed(pairs, DK_FIELDS)?;
            let fixed = fixed_only(&spans)?;
            let dk = DimensionlessDeltaK::new(fixed[0], fixed[1], fixed[2])?;
            return Ok(Point {
                parametrization: Parametrization::DeltaK,
                dx: dk.to_dx()?,
                regime: None,
            });
        }
        let path = self.physical.as_ref().unwrap();
        let setup = load_setup(path, self.units, true)?;
        let (dx, _) = to_dimensionless(&setup)?;
        Ok(Point {
            parametrization: Parametrization::Physical,
            dx,
            regime: Some(check_regime(&setup, setup.alpha_res_sq)),
        })
    }
}

fn fixed_only(spans: &[Span]) -> Result<Vec<f64>, CliError> {
    spans
        .iter()
        .map(|s| {
            s.fixed()
                .ok_or_else(|| CliError::usage("ranges are only valid in `sweep`"))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Ok => "ok",
        Verdict::Marginal => "marginal",
        Verdict::Violated => "violated",
    }
}

#[derive(Serialize)]
struct RegimeDoc {
    dispersive_ratio: f64,
    dispersive: &'static str,
    rwa_ratio: f64,
    rwa: &'static str,
    settling_ratio: f64,
    settling: &'static str,
    t1_ratio_t0: f64,
    t1_t0: &'static str,
    t1_ratio_tm: f64,
    t1_tm: &'static str,
    overall: &'static str,
}

impl From<&RegimeReport> for RegimeDoc {
    fn from(r: &RegimeReport) -> Self {
        RegimeDoc {
            dispersive_ratio: r.dispersive_ratio,
            dispersive: verdict_str(r.dispersive),
            rwa_ratio: r.rwa_ratio,
            rwa: verdict_str(r.rwa),
            settling_ratio: r.settling_ratio,
            settling: verdict_str(r.settling),
            t1_ratio_t0: r.t1_ratio_t0,
            t1_t0: verdict_str(r.t1_t0),
            t1_ratio_tm: r.t1_ratio_tm,
            t1_tm: verdict_str(r.t1_tm),
            overall: verdict_str(r.overall()),
        }
    }
}

#[derive(Serialize)]
struct StatsDoc {
    schema: &'static str,
    command: &'static str,
    parametrization: &'static str,
    d: f64,
    x: f64,
    tau_m: f64,
    delta: Option<f64>,
    k: Option<f64>,
    t_m: Option<f64>,
    n_up: f64,
    n_down: f64,
    snr: f64,
    n_th: Option<u64>,
    fidelity: f64,
    fidelity_on_off: f64,
    fidelity_gaussian: f64,
    fidelity_gaussian_snr: f64,
    degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<RegimeDoc>,
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_stats(args: &StatsArgs, format: Format, out: Option<&PathBuf>) -> Result<(), CliError> {
    let point = args.point.resolve()?;
    let dx = &point.dx;
    let mc = mean_counts_dx(dx);
    let dk = dx.to_delta_k().ok();
    let doc = StatsDoc {
        schema: SCHEMA,
        command: "stats",
        parametrization: match point.parametrization {
            Parametrization::Dx => "dx",
            Parametrization::DeltaK => "deltak",
            Parametrization::Physical => "physical",
        },
        d: dx.d(),
        x: dx.x(),
        tau_m: dx.tau_m(),
        delta: dk.as_ref().map(|p| p.delta()),
        k: dk.as_ref().map(|p| p.k()),
        t_m: dk.as_ref().map(|p| p.t_m()),
        n_up: mc.n_up(),
        n_down: mc.n_down(),
        snr: snr(&mc),
        n_th: threshold_count(&mc).ok(),
        fidelity: fidelity(&mc),
        fidelity_on_off: fidelity_on_off(&mc),
        fidelity_gaussian: fidelity_gaussian(&mc),
        fidelity_gaussian_snr: fidelity_gaussian_snr(&mc),
        degenerate: mc.is_degenerate(),
        regime: point.regime.as_ref().map(RegimeDoc::from),
    };
    match format {
        Format::Json => emit_json(out, &doc),
        Format::Csv => {
            let mut t = Table::new(vec![
                "d",
                "x",
                "tau_m",
                "n_up",
                "n_down",
                "snr",
                "n_th",
                "fidelity",
                "fidelity_on_off",
                "fidelity_gaussian",
                "degenerate",
            ]);
            t.push(vec![
                doc.d,
                doc.x,
                doc.tau_m,
                doc.n_up,
                doc.n_down,
                doc.snr,
                doc.n_th.map_or(0.0, |v| v as f64),
                doc.fidelity,
                doc.fidelity_on_off,
                doc.fidelity_gaussian,
                f64::from(doc.degenerate),
            ]);
            t.emit(out)
        }
    }
}

#[derive(Serialize)]
struct SnrPointDoc {
    schema: &'static str,
    command: &'static str,
    x: f64,
    d_opt: f64,
    snr1: f64,
    bracket: [f64; 2],
    method: &'static str,
    rel_tol: f64,
    large_x_xi: f64,
    large_x_d_opt: f64,
    large_x_d_opt_simple: f64,
    small_x_d_opt: f64,
}

#[derive(Serialize)]
struct SnrJointDoc {
    schema: &'static str,
    command: &'static str,
    delta: f64,
    k: f64,
    snr_coefficient: f64,
    asymmetric: bool,
}

fn cmd_optimize_snr(
    args: &OptimizeSnrArgs,
    _format: Format,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    if args.joint {
        let opt = snr_global_optimum(args.asymmetric);
        return emit_json(
            out,
            &SnrJointDoc {
                schema: SCHEMA,
                command: "optimize-snr",
                delta: opt.delta,
                k: opt.k,
                snr_coefficient: opt.snr_coefficient,
                asymmetric: opt.asymmetric,
            },
        );
    }
    let x = args
        .x
        .ok_or_else(|| CliError::usage("give --X <pull> or --joint"))?;
    let opt = snr_optimal_detuning(x, args.rel_tol)?;
    let approx = snr_detuning_large_x_approx(x);
    emit_json(
        out,
        &SnrPointDoc {
            schema: SCHEMA,
            command: "optimize-snr",
            x,
            d_opt: opt.d_opt,
            snr1: opt.snr1,
            bracket: [opt.bracket.0, opt.bracket.1],
            method: "root-found",
            rel_tol: args.rel_tol,
            large_x_xi: approx.xi,
            large_x_d_opt: approx.d_opt,
            large_x_d_opt_simple: approx.d_opt_simple,
            small_x_d_opt: snr_detuning_small_x_approx(),
        },
    )
}

#[derive(Serialize)]
struct FidelityPointDoc {
    schema: &'static str,
    command: &'static str,
    x: f64,
    tau_m: f64,
    d_opt: f64,
    fidelity: f64,
    n_th: u64,
    branch: &'static str,
    d_lo: f64,
    d_hi: f64,
}

#[derive(Serialize)]
struct FidelityJointDoc {
    schema: &'static str,
    command: &'static str,
    t_m: f64,
    asymmetric: bool,
    delta_opt: f64,
    k_opt: f64,
    fidelity: f64,
    n_th: u64,
}

#[derive(Serialize)]
struct JumpDoc {
    time: f64,
    n_th_before: u64,
    n_th_after: u64,
    d_before: f64,
    d_after: f64,
    kind: &'static str,
}

#[derive(Serialize)]
struct JumpsDoc {
    schema: &'static str,
    command: &'static str,
    x: f64,
    tau_min: f64,
    tau_max: f64,
    jumps: Vec<JumpDoc>,
}

fn branch_str(b: Branch) -> &'static str {
    match b {
        Branch::InteriorStationary => "interior-stationary",
        Branch::AtUpperBound => "at-upper-bound",
    }
}

fn cmd_optimize_fidelity(
    args: &OptimizeFidelityArgs,
    format: Format,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    if args.joint {
        let t_m = args
            .tm
            .ok_or_else(|| CliError::usage("--joint requires --tm <time>"))?;
        let opt = fidelity_joint_optimum(t_m, args.asymmetric)?;
        return emit_json(
            out,
            &FidelityJointDoc {
                schema: SCHEMA,
                command: "optimize-fidelity",
                t_m,
                asymmetric: args.asymmetric,
                delta_opt: opt.d_opt,
                k_opt: opt.k_opt.unwrap_or(f64::NAN),
                fidelity: opt.fidelity,
                n_th: opt.n_th,
            },
        );
    }
    let x = args
        .x
        .ok_or_else(|| CliError::usage("give --X <pull> (with --tau or --jumps), or --joint"))?;
    if args.jumps {
        let tau_max = args
            .tau_max
            .ok_or_else(|| CliError::usage("--jumps requires --tau-max"))?;
        let events = fidelity_jump_times(x, (args.tau_min, tau_max))?;
        let jumps: Vec<JumpDoc> = events
            .iter()
            .map(|e| JumpDoc {
                time: e.time,
                n_th_before: e.n_th_before,
                n_th_after: e.n_th_after,
                d_before: e.d_before,
                d_after: e.d_after,
                kind: match e.kind {
                    JumpKind::EqualFidelity => "equal-fidelity",
                    JumpKind::BoundReach => "bound-reach",
                },
            })
            .collect();
        if format == Format::Csv {
            let mut t = Table::new(vec![
                "time",
                "n_th_before",
                "n_th_after",
                "d_before",
                "d_after",
                "bound_reach",
            ]);
            for j in &jumps {
                t.push(vec![
                    j.time,
                    j.n_th_before as f64,
                    j.n_th_after as f64,
                    j.d_before,
                    j.d_after,
                    f64::from(j.kind == "bound-reach"),
                ]);
            }
            return t.emit(out);
        }
        return emit_json(
            out,
            &JumpsDoc {
                schema: SCHEMA,
                command: "optimize-fidelity",
                x,
                tau_min: args.tau_min,
                tau_max,
                jumps,
            },
        );
    }
    let tau = args
        .tau
        .ok_or_else(|| CliError::usage("give --tau <time> or --jumps"))?;
    let opt = fidelity_optimal_detuning(x, tau)?;
    let (d_lo, d_hi) = fidelity_detuning_bounds(x);
    emit_json(
        out,
        &FidelityPointDoc {
            schema: SCHEMA,
            command: "optimize-fidelity",
            x,
            tau_m: tau,
            d_opt: opt.d_opt,
            fidelity: opt.fidelity,
            n_th: opt.n_th,
            branch: branch_str(opt.branch),
            d_lo,
            d_hi,
        },
    )
}

#[derive(Serialize)]
struct EstimateDoc {
    schema: &'static str,
    command: &'static str,
    target_fidelity: f64,
    units: &'static str,
    asymmetric: bool,
    t_m_seconds: f64,
    t_m_seconds_symmetric: f64,
    t_m_seconds_asymmetric: f64,
    t_m_dimensionless: f64,
    delta_opt: f64,
    k_opt: f64,
    n_th: u64,
    fidelity: f64,
    /// Laboratory values to configure: drive detuning and total cavity
    /// damping, in the input units.
    omega_dr: f64,
    kappa: f64,
    regime: RegimeDoc,
}

fn cmd_estimate(args: &EstimateArgs, out: Option<&PathBuf>) -> Result<(), CliError> {
    let setup = load_setup(&args.physical, args.units, false)?;
    let sym = estimate_measurement_time(&setup, args.target_fidelity, false)?;
    let asym = estimate_measurement_time(&setup, args.target_fidelity, true)?;
    let est = if args.asymmetric { &asym } else { &sym };
    let opt = &est.optimum;
    let g_lambda = setup.g_lambda();
    let unit_scale = match args.units {
        Units::Angular => 1.0,
        Units::Cyclic => std::f64::consts::TAU,
    };
    // Regime check at the estimated duration.
    let mut configured = setup;
    configured.t_m = est.t_m;
    let regime = check_regime(&configured, configured.alpha_res_sq);
    emit_json(
        out,
        &EstimateDoc {
            schema: SCHEMA,
            command: "estimate",
            target_fidelity: args.target_fidelity,
            units: match args.units {
                Units::Angular => "angular",
                Units::Cyclic => "cyclic",
            },
            asymmetric: args.asymmetric,
            t_m_seconds: est.t_m,
            t_m_seconds_symmetric: sym.t_m,
            t_m_seconds_asymmetric: asym.t_m,
            t_m_dimensionless: est.t_m_dimensionless,
            delta_opt: opt.d_opt,
            k_opt: opt.k_opt.unwrap_or(f64::NAN),
            n_th: opt.n_th,
            fidelity: opt.fidelity,
            omega_dr: opt.d_opt * g_lambda / unit_scale,
            kappa: 2.0 * opt.k_opt.unwrap_or(f64::NAN) * g_lambda / unit_scale,
            regime: RegimeDoc::from(&regime),
        },
    )
}

fn cmd_sweep(args: &SweepArgs, out: Option<&PathBuf>) -> Result<(), CliError> {
    let p = &args.point;
    if p.count_given() != 1 || p.physical.is_some() {
        return Err(CliError::usage("sweep needs exactly one of --dx, --deltak"));
    }
    let (spans, columns, is_dx) = if let Some(pairs) = &p.dx {
        (
            parse_keyed(pairs, DX_FIELDS)?,
            vec![
                "d",
                "x",
                "tau_m",
                "n_up",
                "n_down",
                "snr",
                "n_th",
                "fidelity",
                "fidelity_on_off",
                "fidelity_gaussian",
                "degenerate",
            ],
            true,
        )
    } else {
        (
            parse_keyed(p.deltak.as_ref().unwrap(), DK_FIELDS)?,
            vec![
                "delta",
                "k",
                "t_m",
                "n_up",
                "n_down",
                "snr",
                "n_th",
                "fidelity",
                "fidelity_on_off",
                "fidelity_gaussian",
                "degenerate",
            ],
            false,
        )
    };

    let a_vals = spans[0].values();
    let b_vals = spans[1].values();
    let c_vals = spans[2].values();
    let mut points = Vec::with_capacity(a_vals.len() * b_vals.len() * c_vals.len());
    for &a in &a_vals {
        for &b in &b_vals {
            for &c in &c_vals {
                points.push((a, b, c));
            }
        }
    }

    let rows: Result<Vec<Vec<f64>>, CliError> = points
        .par_iter()
        .map(|&(a, b, c)| -> Result<Vec<f64>, CliError> {
            let mc = if is_dx {
                mean_counts_dx(&DimensionlessDX::new(a, b, c)?)
            } else {
                mean_counts_deltak(&DimensionlessDeltaK::new(a, b, c)?)
            };
            Ok(row_for(a, b, c, &mc))
        })
        .collect();

    let mut table = Table::new(columns);
    table.rows = rows?;
    table.emit(out)
}

fn row_for(a: f64, b: f64, c: f64, mc: &MeanCounts) -> Vec<f64> {
    vec![
        a,
        b,
        c,
        mc.n_up(),
        mc.n_down(),
        snr(mc),
        threshold_count(mc).map_or(0.0, |t| t as f64),
        fidelity(mc),
        fidelity_on_off(mc),
        fidelity_gaussian(mc),
        f64::from(mc.is_degenerate()),
    ]
}

#[derive(Serialize)]
struct McCheckDoc {
    schema: &'static str,
    command: &'static str,
    trials: u64,
    seed: u64,
    streams: u32,
    n_up: f64,
    n_down: f64,
    analytic_fidelity: f64,
    empirical_fidelity: f64,
    std_error: f64,
    z_score: f64,
    degenerate: bool,
    verdict: &'static str,
}

fn cmd_mc_check(args: &McCheckArgs, out: Option<&PathBuf>) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Domain("trials must be >= 1".into()));
    }
    let point = args.point.resolve()?;
    let mc = mean_counts_dx(&point.dx);
    let analytic = fidelity(&mc);
    let (n_th, degenerate) = match threshold_count(&mc) {
        Ok(t) => (t, false),
        Err(_) => (1, true),
    };

    // Fixed stream fan-out keeps the result independent of --jobs.
    const STREAMS: u32 = 64;
    let chunks: Vec<(u64, u64)> = partition_trials(args.trials, STREAMS).collect();
    let correct: u64 = chunks
        .par_iter()
        .map(|&(stream, n)| simulate_stream(&mc, n_th, n, args.seed, stream))
        .sum();
    let p_hat = correct as f64 / args.trials as f64;
    let empirical = 2.0 * p_hat - 1.0;
    let var = (4.0 * p_hat * (1.0 - p_hat) / args.trials as f64)
        .max(1.0 / (args.trials * args.trials) as f64);
    let std_error = var.sqrt();
    let z = (empirical - analytic) / std_error;

    emit_json(
        out,
        &McCheckDoc {
            schema: SCHEMA,
            command: "mc-check",
            trials: args.trials,
            seed: args.seed,
            streams: STREAMS,
            n_up: mc.n_up(),
            n_down: mc.n_down(),
            analytic_fidelity: analytic,
            empirical_fidelity: empirical,
            std_error,
            z_score: z,
            degenerate,
            verdict: if z.abs() <= 3.5 { "agree" } else { "disagree" },
        },
    )
}

#[derive(Serialize)]
struct FiguresDoc {
    schema: &'static str,
    command: &'static str,
    files: Vec<String>,
}

fn cmd_figures(args: &FiguresArgs, out: Option<&PathBuf>) -> Result<(), CliError> {
    let dir = out.cloned().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    let all = args.which == Figure::All;

    if all || args.which == Figure::Fig2 {
        let path = dir.join("fig2.csv");
        fig2_table()?.write_csv_to(&path)?;
        files.push(path.display().to_string());
    }
    if all || args.which == Figure::Fig3 {
        let path = dir.join("fig3.csv");
        fig3_table()?.write_csv_to(&path)?;
        files.push(path.display().to_string());
    }
    if all || args.which == Figure::Fig4 {
        let path = dir.join("fig4.csv");
        fig4_table()?.write_csv_to(&path)?;
        files.push(path.display().to_string());
    }
    if all || args.which == Figure::Fig5 {
        let path = dir.join("fig5.csv");
        fig5_table()?.write_csv_to(&path)?;
        files.push(path.display().to_string());
    }
    emit_json(
        None,
        &FiguresDoc {
            schema: SCHEMA,
            command: "figures",
            files,
        },
    )
}

/// Optimal vs naive (D = X) detuning and the SNR they produce.
fn fig2_table() -> Result<Table, CliError> {
    let mut t = Table::new(vec![
        "x",
        "d_opt",
        "d_opt_minus_x",
        "snr1_opt",
        "snr1_naive",
        "snr1_gain",
    ]);
    let n = 700;
    let rows: Result<Vec<_>, CliError> = (1..=n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>, CliError> {
            let x = 3.5 * i as f64 / n as f64;
            let opt = snr_optimal_detuning(x, 1e-10)?;
            let naive = {
                let (nu, nd) = readout_core::statistics::mean_counts_raw(x, x, 1.0);
                let mc = MeanCounts::new(nu, nd).expect("ordered");
                snr(&mc)
            };
            Ok(vec![
                x,
                opt.d_opt,
                opt.d_opt - x,
                opt.snr1,
                naive,
                opt.snr1 - naive,
            ])
        })
        .collect();
    t.rows = rows?;
    Ok(t)
}

/// The optimal-detuning sawtooth against measurement time for X = 1
/// and X = 9, with the SNR-optimal line and both bounds.
fn fig3_table() -> Result<Table, CliError> {
    let mut t = Table::new(vec![
        "x", "tau_m", "d_opt", "n_th", "fidelity", "d_snr", "d_lo", "d_hi",
    ]);
    for &x in &[1.0f64, 9.0] {
        let d_snr = snr_optimal_detuning(x, 1e-10)?.d_opt;
        let (d_lo, d_hi) = fidelity_detuning_bounds(x);
        let rows: Result<Vec<_>, CliError> = (1..=450)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>, CliError> {
                let tau = 0.1 * i as f64;
                let opt = fidelity_optimal_detuning(x, tau)?;
                Ok(vec![
                    x,
                    tau,
                    opt.d_opt,
                    opt.n_th as f64,
                    opt.fidelity,
                    d_snr,
                    d_lo,
                    d_hi,
                ])
            })
            .collect();
        t.rows.extend(rows?);
    }
    Ok(t)
}

/// Photocount distributions for both qubit states at D = 0.6, X = 0.15,
/// for a short and a long measurement.
fn fig4_table() -> Result<Table, CliError> {
    let mut t = Table::new(vec!["tau_m", "n", "p_up", "p_down"]);
    for &tau in &[0.5f64, 20.0] {
        let p = DimensionlessDX::new(0.6, 0.15, tau)?;
        let mc = mean_counts_dx(&p);
        let n_max = (mc.n_up() + 10.0 * mc.n_up().sqrt()).ceil() as u64;
        for n in 0..=n_max {
            let p_up = readout_core::poisson_logpmf(n, mc.n_up())?.prob();
            let p_down = readout_core::poisson_logpmf(n, mc.n_down())?.prob();
            t.push(vec![tau, n as f64, p_up, p_down]);
        }
    }
    Ok(t)
}

/// Fidelity over the (Delta, K) plane at T_m = 11.29.
fn fig5_table() -> Result<Table, CliError> {
    let mut t = Table::new(vec!["delta", "k", "fidelity"]);
    let n = 200;
    let rows: Vec<Vec<f64>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let i = idx / n;
            let j = idx % n;
            let delta = 0.9 + 0.5 * (i as f64 + 0.5) / n as f64;
            let k = 0.5 + 0.8 * (j as f64 + 0.5) / n as f64;
            let t_m = 11.29;
            let k3t = k * k * k * t_m;
            let nu = k3t / ((delta - 1.0) * (delta - 1.0) + k * k);
            let nd = k3t / ((delta + 1.0) * (delta + 1.0) + k * k);
            let f = fidelity(&MeanCounts::new(nu, nd).expect("ordered"));
            vec![delta, k, f]
        })
        .collect();
    t.rows = rows;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be >= 1"));
        }
        // A global pool; later calls are no-ops, which is fine for a
        // one-shot CLI process.
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    let out = cli.out.as_ref();
    match &cli.command {
        Command::Stats(a) => cmd_stats(a, cli.format, out),
        Command::OptimizeSnr(a) => cmd_optimize_snr(a, cli.format, out),
        Command::OptimizeFidelity(a) => cmd_optimize_fidelity(a, cli.format, out),
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::McCheck(a) => cmd_mc_check(a, out),
        Command::Figures(a) => cmd_figures(a, out),
    }
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    schema: &'static str,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'static str,
    message: &'a str,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match cli.format {
                Format::Json => {
                    let doc = ErrorDoc {
                        schema: SCHEMA,
                        error: ErrorBody {
                            kind: e.kind(),
                            message: e.message(),
                        },
                    };
                    eprintln!("{}", serde_json::to_string(&doc).unwrap());
                }
                Format::Csv => eprintln!("error ({}): {}", e.kind(), e.message()),
            }
            ExitCode::from(e.code())
        }
    }
}
