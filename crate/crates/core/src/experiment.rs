//! Experiment runners and their CSV output.
//!
//! Each runner takes a validated [`GameConfig`] and returns a typed report.
//! Reports render to deterministic text via [`Report::render`] and carry a
//! [`Status`] that the `crowdgame` binary turns into its exit code.
//!
//! CSV conventions: a header row is always present, columns appear in a
//! fixed order, numbers carry 12 significant digits with `.` as the decimal
//! separator, and sensor ids are 1-based. Metadata rows start with `#`.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use crate::config::load_config;
use crate::equilibrium::{
    best_response, check_existence, feasible_interval, solve, uniform_grid, verify_epsilon_ne, ExistenceReport, Method,
    NeVerification, RateBox, SolverOptions,
};
use crate::error::{GameError, Result};
use crate::model::{utility_rate_space, EquilibriumResult, GameConfig};

/// Points on a best-response curve, excluding the refined maximizer.
pub const CURVE_POINTS: usize = 512;
/// Deviation gain tolerated by `verify`.
pub const VERIFY_EPSILON: f64 = 1e-6;
/// Grid resolution used by `verify` before local refinement.
pub const VERIFY_GRID: usize = 1_000;
/// Upper corner of the rate box searched by `check`; the lower corner is `min_rate`.
pub const CHECK_REGION_UPPER: f64 = 0.5;
pub const CHECK_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    BrCurve,
    Verify,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::BrCurve => "br-curve",
            Command::Verify => "verify",
            Command::Check => "check",
        }
    }
}

impl FromStr for Command {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Command::Solve),
            "sweep" => Ok(Command::Sweep),
            "br-curve" => Ok(Command::BrCurve),
            "verify" => Ok(Command::Verify),
            "check" => Ok(Command::Check),
            other => Err(GameError::invalid("command", format!("unknown command `{other}`"))),
        }
    }
}

/// A parameter path such as `blockchain.compute_coeff` and the values to try.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config_path: PathBuf,
    pub command: Command,
    /// Required by, and only allowed for, [`Command::Sweep`].
    pub sweep: Option<SweepSpec>,
    /// 1-based sensor id. Required by, and only allowed for, [`Command::BrCurve`].
    pub curve_sensor: Option<usize>,
    /// Where to write the rendered report; `None` leaves it to the caller.
    pub output_path: Option<PathBuf>,
    pub solver: SolverOptions,
}

impl ExperimentSpec {
    pub fn new(config_path: impl Into<PathBuf>, command: Command) -> Self {
        ExperimentSpec {
            config_path: config_path.into(),
            command,
            sweep: None,
            curve_sensor: None,
            output_path: None,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.command, &self.sweep) {
            (Command::Sweep, None) => return Err(GameError::invalid("sweep_param", "required by sweep")),
            (Command::Sweep, Some(s)) if s.values.is_empty() => {
                return Err(GameError::invalid("sweep_values", "must list at least one value"))
            }
            (Command::Sweep, Some(_)) | (_, None) => {}
            (other, Some(_)) => {
                return Err(GameError::invalid(
                    "sweep_param",
                    format!("not used by {}", other.name()),
                ))
            }
        }
        match (self.command, self.curve_sensor) {
            (Command::BrCurve, None) => Err(GameError::invalid("sensor", "required by br-curve")),
            (Command::BrCurve, Some(0)) => Err(GameError::invalid("sensor", "sensor ids start at 1")),
            (Command::BrCurve, Some(_)) | (_, None) => Ok(()),
            (other, Some(_)) => Err(GameError::invalid("sensor", format!("not used by {}", other.name()))),
        }
    }
}

/// How a run ended, independent of whether it produced output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success,
    Infeasible,
    /// The solver stopped before meeting its tolerance, or the profile
    /// failed epsilon-Nash verification.
    NotConverged,
    /// An existence condition or the sampled concavity check failed.
    ExistenceFailed,
}

/// Process exit codes. Usage errors share the config code.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
    pub const EXISTENCE_FAILED: i32 = 5;
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => exit_code::SUCCESS,
            Status::Infeasible => exit_code::INFEASIBLE,
            Status::NotConverged => exit_code::NOT_CONVERGED,
            Status::ExistenceFailed => exit_code::EXISTENCE_FAILED,
        }
    }
}

/// Exit code for a run that failed before producing a report.
pub fn error_exit_code(err: &GameError) -> i32 {
    if err.is_infeasibility() {
        exit_code::INFEASIBLE
    } else {
        exit_code::CONFIG
    }
}

fn error_status(err: &GameError) -> Status {
    if err.is_infeasibility() {
        Status::Infeasible
    } else {
        Status::NotConverged
    }
}

pub trait Report {
    fn render(&self) -> String;
    fn status(&self) -> Status;
}

/// Formats `x` with 12 significant digits. Magnitudes in `[1e-5, 1e12)`
/// print in positional notation, everything else in scientific notation.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..12).contains(&exp) {
        format!("{x:.*}", (11 - exp) as usize)
    } else {
        sci
    }
}

/// In-memory CSV table. Metadata rows may have their own width.
struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new() -> Self {
        Table(csv::WriterBuilder::new().flexible(true).from_writer(Vec::new()))
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        self.0.write_record(cells).expect("writing to memory cannot fail");
    }

    fn finish(self) -> String {
        let bytes = self.0.into_inner().expect("writing to memory cannot fail");
        String::from_utf8(bytes).expect("all cells are UTF-8")
    }
}

fn num(x: f64) -> String {
    format_number(x)
}

fn solver_status(result: &EquilibriumResult) -> Status {
    if result.converged {
        Status::Success
    } else {
        Status::NotConverged
    }
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub tol: f64,
    pub result: EquilibriumResult,
}

pub fn run_solve(cfg: &GameConfig, opts: &SolverOptions) -> Result<SolveReport> {
    Ok(SolveReport {
        method: opts.method,
        tol: opts.tol,
        result: solve(cfg, opts)?,
    })
}

impl Report for SolveReport {
    fn render(&self) -> String {
        let r = &self.result;
        let mut out = Table::new();
        out.row(["sensor_id", "rate", "power", "fee", "fee_share", "utility"].map(String::from));
        for i in 0..r.rates.len() {
            out.row([
                (i + 1).to_string(),
                num(r.rates[i]),
                num(r.powers[i]),
                num(r.fees[i]),
                num(r.fee_shares[i]),
                num(r.utilities[i]),
            ]);
        }
        out.row([
            "#".to_string(),
            format!("converged={}", r.converged),
            format!("iterations={}", r.iterations),
            format!("residual={}", num(r.residual)),
            format!("method={}", self.method.name()),
            format!("tol={}", num(self.tol)),
        ]);
        out.finish()
    }

    fn status(&self) -> Status {
        solver_status(&self.result)
    }
}

// ---------------------------------------------------------------- sweep

/// Sets the parameter named by `path` to `value`.
///
/// Accepted paths: `noise_variance`, `power_price`, `wpt_path_loss_exp`,
/// `blockchain.<field>` and `sensors.<field>`, where the latter sets the
/// field for every sensor. The modified config is validated.
pub fn set_param(cfg: &mut GameConfig, path: &str, value: f64) -> Result<()> {
    let unknown = || GameError::invalid("sweep_param", format!("unknown parameter `{path}`"));
    match path.split_once('.') {
        None => match path {
            "noise_variance" => cfg.noise_variance = value,
            "power_price" => cfg.power_price = value,
            "wpt_path_loss_exp" => cfg.wpt_path_loss_exp = value,
            _ => return Err(unknown()),
        },
        Some(("blockchain", field)) => {
            let bc = &mut cfg.blockchain;
            *match field {
                "quad_coeff" => &mut bc.quad_coeff,
                "lin_coeff" => &mut bc.lin_coeff,
                "const_coeff" => &mut bc.const_coeff,
                "compute_coeff" => &mut bc.compute_coeff,
                _ => return Err(unknown()),
            } = value;
        }
        Some(("sensors", field)) => {
            for s in &mut cfg.sensors {
                *match field {
                    "bandwidth" => &mut s.bandwidth,
                    "channel_gain" => &mut s.channel_gain,
                    "ap_distance" => &mut s.ap_distance,
                    "path_loss_exp" => &mut s.path_loss_exp,
                    "circuit_power" => &mut s.circuit_power,
                    "unit_rate_price" => &mut s.unit_rate_price,
                    "beacon_distance" => &mut s.beacon_distance,
                    "max_received_power" => &mut s.max_received_power,
                    _ => return Err(unknown()),
                } = value;
            }
        }
        Some(_) => return Err(unknown()),
    }
    cfg.validate()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: std::result::Result<EquilibriumResult, GameError>,
}

impl SweepPoint {
    pub fn status(&self) -> Status {
        match &self.outcome {
            Ok(r) => solver_status(r),
            Err(e) => error_status(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub param: String,
    pub num_sensors: usize,
    pub points: Vec<SweepPoint>,
}

/// Solves once per sweep value, each time from the default start.
///
/// Every value is applied and validated before any solve, so a bad value
/// fails the whole sweep. Solver failures are recorded per point.
pub fn run_sweep(cfg: &GameConfig, sweep: &SweepSpec, opts: &SolverOptions) -> Result<SweepReport> {
    if sweep.values.is_empty() {
        return Err(GameError::invalid("sweep_values", "must list at least one value"));
    }
    opts.validate()?;
    let configs = sweep
        .values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            set_param(&mut c, &sweep.param, v).map(|_| c)
        })
        .collect::<Result<Vec<_>>>()?;
    let points = sweep
        .values
        .iter()
        .zip(&configs)
        .map(|(&value, c)| SweepPoint {
            value,
            outcome: solve(c, opts),
        })
        .collect();
    Ok(SweepReport {
        param: sweep.param.clone(),
        num_sensors: cfg.num_sensors(),
        points,
    })
}

impl Report for SweepReport {
    fn render(&self) -> String {
        let n = self.num_sensors;
        let mut out = Table::new();
        let mut header = vec![
            self.param.clone(),
            "status".into(),
            "iterations".into(),
            "residual".into(),
        ];
        header.extend((1..=n).map(|i| format!("rate_{i}")));
        header.extend((1..=n).map(|i| format!("utility_{i}")));
        out.row(header);
        for p in &self.points {
            let mut row = vec![num(p.value)];
            match &p.outcome {
                Ok(r) => {
                    row.push(if r.converged { "converged" } else { "not_converged" }.into());
                    row.push(r.iterations.to_string());
                    row.push(num(r.residual));
                    row.extend(r.rates.iter().map(|&x| num(x)));
                    row.extend(r.utilities.iter().map(|&x| num(x)));
                }
                Err(e) => {
                    row.push(if e.is_infeasibility() { "infeasible" } else { "error" }.into());
                    row.extend(std::iter::repeat_n(String::new(), 2 + 2 * n));
                }
            }
            out.row(row);
        }
        out.finish()
    }

    /// The most severe point status.
    fn status(&self) -> Status {
        self.points
            .iter()
            .map(SweepPoint::status)
            .max()
            .unwrap_or(Status::Success)
    }
}

// ---------------------------------------------------------------- br-curve

#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    /// 0-based index of the deviating sensor.
    pub sensor: usize,
    pub equilibrium: EquilibriumResult,
    /// `(rate, utility)` on a uniform grid over the feasible interval.
    pub grid: Vec<(f64, f64)>,
    /// Refined best response against the equilibrium profile of the others.
    pub best_response: (f64, f64),
}

impl CurveReport {
    /// Spacing of the uniform grid.
    pub fn cell_width(&self) -> f64 {
        let (first, last) = (self.grid[0].0, self.grid[self.grid.len() - 1].0);
        (last - first) / (self.grid.len() - 1) as f64
    }
}

/// Tabulates the utility of `sensor` (0-based) against the solved
/// equilibrium profile of the other sensors.
pub fn run_br_curve(cfg: &GameConfig, sensor: usize, opts: &SolverOptions) -> Result<CurveReport> {
    cfg.sensor(sensor)?;
    let equilibrium = solve(cfg, opts)?;
    let r = &equilibrium.rates;
    let (lo, hi) = feasible_interval(sensor, r, cfg, opts.min_rate)?;
    let grid = uniform_grid(lo, hi, CURVE_POINTS)
        .into_iter()
        .map(|x| utility_rate_space(sensor, &r.with(sensor, x), cfg).map(|u| (x, u)))
        .collect::<Result<Vec<_>>>()?;
    let x = best_response(sensor, r, cfg, opts)?;
    let best_response = (x, utility_rate_space(sensor, &r.with(sensor, x), cfg)?);
    Ok(CurveReport {
        sensor,
        equilibrium,
        grid,
        best_response,
    })
}

impl Report for CurveReport {
    fn render(&self) -> String {
        let mut out = Table::new();
        out.row(["rate", "utility", "best_response"].map(String::from));
        let (bx, bu) = self.best_response;
        let mut marked = false;
        for &(x, u) in &self.grid {
            if !marked && bx <= x {
                out.row([num(bx), num(bu), "1".into()]);
                marked = true;
            }
            out.row([num(x), num(u), "0".into()]);
        }
        if !marked {
            out.row([num(bx), num(bu), "1".into()]);
        }
        out.finish()
    }

    fn status(&self) -> Status {
        solver_status(&self.equilibrium)
    }
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub epsilon: f64,
    pub equilibrium: EquilibriumResult,
    pub verification: NeVerification,
}

/// Solves, then searches every sensor's feasible interval for a profitable
/// unilateral deviation.
pub fn run_verify(cfg: &GameConfig, opts: &SolverOptions) -> Result<VerifyReport> {
    let equilibrium = solve(cfg, opts)?;
    let verification = verify_epsilon_ne(&equilibrium.rates, cfg, VERIFY_EPSILON, VERIFY_GRID, opts.min_rate)?;
    Ok(VerifyReport {
        epsilon: VERIFY_EPSILON,
        equilibrium,
        verification,
    })
}

impl Report for VerifyReport {
    fn render(&self) -> String {
        let mut out = Table::new();
        out.row(["sensor_id", "rate", "utility", "deviation_gain"].map(String::from));
        let r = &self.equilibrium;
        for (i, gain) in self.verification.gains.iter().enumerate() {
            out.row([(i + 1).to_string(), num(r.rates[i]), num(r.utilities[i]), num(*gain)]);
        }
        out.row([
            "#".to_string(),
            format!("verified={}", self.verification.verified),
            format!("worst_gain={}", num(self.verification.worst_gain)),
            format!("epsilon={}", num(self.epsilon)),
        ]);
        out.finish()
    }

    fn status(&self) -> Status {
        if self.equilibrium.converged && self.verification.verified {
            Status::Success
        } else {
            Status::NotConverged
        }
    }
}

// ---------------------------------------------------------------- check

pub fn run_check(cfg: &GameConfig, opts: &SolverOptions) -> Result<ExistenceReport> {
    let region = RateBox::uniform(cfg.num_sensors(), opts.min_rate, CHECK_REGION_UPPER.max(opts.min_rate));
    check_existence(cfg, &region, CHECK_SAMPLES)
}

impl Report for ExistenceReport {
    fn render(&self) -> String {
        let mut out = String::new();
        let point: Vec<String> = self.worst_point.iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "condition_a = {}", self.condition_a);
        let _ = writeln!(out, "curvature_margin = {}", num(self.curvature_margin));
        let _ = writeln!(out, "condition_b = {}", self.condition_b);
        let _ = writeln!(out, "numeric_concavity = {}", self.numeric_concavity);
        let _ = writeln!(out, "worst_second_derivative = {}", num(self.worst_second_derivative));
        let _ = writeln!(out, "worst_sensor = {}", self.worst_sensor + 1);
        let _ = writeln!(out, "worst_point = [{}]", point.join(", "));
        let _ = writeln!(out, "samples_evaluated = {}", self.samples_evaluated);
        let _ = writeln!(out, "draws = {}", self.draws);
        out
    }

    fn status(&self) -> Status {
        if self.condition_a && self.numeric_concavity {
            Status::Success
        } else {
            Status::ExistenceFailed
        }
    }
}

// ---------------------------------------------------------------- driver

/// Rendered output of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub status: Status,
}

fn finish(report: &dyn Report) -> Outcome {
    Outcome {
        output: report.render(),
        status: report.status(),
    }
}

/// Runs `spec` end to end. The rendered report is written to
/// `spec.output_path` when set and is always returned.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    spec.solver.validate()?;
    let cfg = load_config(&spec.config_path)?;
    let opts = &spec.solver;
    let outcome = match spec.command {
        Command::Solve => finish(&run_solve(&cfg, opts)?),
        Command::Sweep => finish(&run_sweep(&cfg, spec.sweep.as_ref().expect("validated"), opts)?),
        Command::BrCurve => {
            let id = spec.curve_sensor.expect("validated");
            finish(&run_br_curve(&cfg, id - 1, opts)?)
        }
        Command::Verify => finish(&run_verify(&cfg, opts)?),
        Command::Check => finish(&run_check(&cfg, opts)?),
    };
    if let Some(path) = &spec.output_path {
        fs::write(path, &outcome.output)
            .map_err(|e| GameError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::reference_scenario;
    use crate::model::fixtures;

    #[test]
    fn numbers_have_twelve_significant_digits() {
        assert_eq!(format_number(0.3), "0.300000000000");
        assert_eq!(format_number(-12.5), "-12.5000000000");
        assert_eq!(format_number(1e-7), "1.00000000000e-7");
        assert_eq!(format_number(2.0f64.sqrt()), "1.41421356237");
        assert_eq!(format_number(0.0), "0");
    }

    #[test]
    fn spec_invariants() {
        let mut spec = ExperimentSpec::new("x.cfg", Command::Sweep);
        assert!(spec.validate().is_err());
        spec.sweep = Some(SweepSpec {
            param: "power_price".into(),
            values: vec![],
        });
        assert!(spec.validate().is_err());
        spec.sweep.as_mut().unwrap().values.push(0.1);
        assert!(spec.validate().is_ok());
        spec.curve_sensor = Some(1);
        assert!(spec.validate().is_err());

        let mut spec = ExperimentSpec::new("x.cfg", Command::BrCurve);
        assert!(spec.validate().is_err());
        spec.curve_sensor = Some(2);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn set_param_paths() {
        let mut cfg = reference_scenario();
        set_param(&mut cfg, "blockchain.compute_coeff", 2.4).unwrap();
        assert_eq!(cfg.blockchain.compute_coeff, 2.4);
        set_param(&mut cfg, "sensors.unit_rate_price", 0.0).unwrap();
        assert!(cfg.sensors.iter().all(|s| s.unit_rate_price == 0.0));
        assert!(set_param(&mut cfg, "sensors.colour", 1.0).is_err());
        assert!(set_param(&mut cfg, "blockchain", 1.0).is_err());
        assert!(matches!(
            set_param(&mut cfg, "sensors.channel_gain", -1.0),
            Err(GameError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn single_sensor_solve_has_one_row_and_footer() {
        let report = run_solve(&fixtures::single(), &SolverOptions::default()).unwrap();
        let text = report.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("sensor_id,rate"));
        assert!(lines[2].starts_with("#,converged=true"));
        assert!(report.result.iterations <= 2);
        assert_eq!(report.status(), Status::Success);
    }

    #[test]
    fn zero_price_curve_peaks_at_left_end() {
        let mut cfg = fixtures::single();
        cfg.sensors[0].unit_rate_price = 0.0;
        let report = run_br_curve(&cfg, 0, &SolverOptions::default()).unwrap();
        assert_eq!(report.grid.len(), CURVE_POINTS);
        assert_eq!(report.best_response.0, 0.1);
        let first_marker = report.render().lines().nth(1).unwrap().to_string();
        assert!(first_marker.ends_with(",1"), "{first_marker}");
    }

    #[test]
    fn existence_failure_maps_to_status() {
        let mut cfg = reference_scenario();
        cfg.blockchain.quad_coeff = 0.0;
        let report = run_check(&cfg, &SolverOptions::default()).unwrap();
        assert_eq!(report.status(), Status::ExistenceFailed);
        assert_eq!(report.status().exit_code(), exit_code::EXISTENCE_FAILED);
    }
}
