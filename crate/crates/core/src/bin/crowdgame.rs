//! Command-line front end. All logic lives in `crowdgame::experiment`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use crowdgame::equilibrium::{Method, SolverOptions};
use crowdgame::experiment::{self, error_exit_code, exit_code, Command, ExperimentSpec, SweepSpec};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Sweep,
    BrCurve,
    Verify,
    Check,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    GaussSeidelBr,
    JacobiBr,
    GradientAscent,
}

#[derive(Debug, Parser)]
#[command(version, about = "Equilibrium experiments for the sensor data-trading game")]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Game-config document (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gauss_seidel_br")]
    method: MethodArg,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Parameter path, e.g. blockchain.compute_coeff or sensors.unit_rate_price.
    #[arg(long)]
    sweep_param: Option<String>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    sweep_values: Option<Vec<f64>>,
    /// 1-based sensor id for br-curve.
    #[arg(long)]
    sensor: Option<usize>,
}

fn spec_from(cli: Cli) -> ExperimentSpec {
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Sweep => Command::Sweep,
        Cmd::BrCurve => Command::BrCurve,
        Cmd::Verify => Command::Verify,
        Cmd::Check => Command::Check,
    };
    let method = match cli.method {
        MethodArg::GaussSeidelBr => Method::GaussSeidelBr,
        MethodArg::JacobiBr => Method::JacobiBr,
        MethodArg::GradientAscent => Method::GradientAscent,
    };
    let mut solver = SolverOptions::with_method(method);
    if let Some(tol) = cli.tol {
        solver.tol = tol;
    }
    if let Some(max_iter) = cli.max_iter {
        solver.max_iter = max_iter;
    }
    let sweep = match (cli.sweep_param, cli.sweep_values) {
        (None, None) => None,
        (param, values) => Some(SweepSpec {
            param: param.unwrap_or_default(),
            values: values.unwrap_or_default(),
        }),
    };
    ExperimentSpec {
        config_path: cli.config,
        command,
        sweep,
        curve_sensor: cli.sensor,
        output_path: cli.out,
        solver,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = spec_from(cli);

    if let Ok(cfg) = crowdgame::config::load_config(&spec.config_path) {
        let bc = cfg.blockchain;
        let margin = bc.quad_coeff * bc.compute_coeff * bc.compute_coeff - bc.const_coeff;
        if margin < 0.0 {
            eprintln!(
                "warning: a*m^2 - c = {margin} < 0; utilities may not be concave and an equilibrium may not exist"
            );
        }
    }

    match experiment::run(&spec) {
        Ok(outcome) => {
            if spec.output_path.is_none() {
                print!("{}", outcome.output);
            }
            if outcome.status.exit_code() != exit_code::SUCCESS {
                eprintln!(
                    "crowdgame {}: finished with status {:?}",
                    spec.command.name(),
                    outcome.status
                );
            }
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("crowdgame {}: {e}", spec.command.name());
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
