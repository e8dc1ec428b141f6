use std::path::{Path, PathBuf};
use std::process::Command as Process;

use crowdgame::config::{load_config, parse_config, reference_scenario, to_document};
use crowdgame::equilibrium::SolverOptions;
use crowdgame::experiment::{exit_code, run, run_sweep, Command, ExperimentSpec, SweepSpec};
use tempfile::TempDir;

const SHIPPED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/paper_sec4.cfg");

fn write_variant(dir: &TempDir, name: &str, edit: impl Fn(&str) -> String) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, edit(&std::fs::read_to_string(SHIPPED).unwrap())).unwrap();
    path
}

fn crowdgame(args: &[&str], config: &Path) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_crowdgame"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn shipped_config_is_the_reference_scenario() {
    let cfg = load_config(SHIPPED).unwrap();
    assert_eq!(cfg, reference_scenario());
    assert_eq!(cfg.num_sensors(), 10);
    let bc = cfg.blockchain;
    assert_eq!(
        (bc.quad_coeff, bc.lin_coeff, bc.const_coeff, bc.compute_coeff),
        (0.1, 0.1, 0.1, 3.0)
    );
}

#[test]
fn config_survives_a_round_trip() {
    let cfg = load_config(SHIPPED).unwrap();
    assert_eq!(parse_config(&to_document(&cfg)).unwrap(), cfg);
}

#[test]
fn identical_specs_write_identical_bytes() {
    let dir = TempDir::new().unwrap();
    for (command, name) in [(Command::Solve, "solve"), (Command::BrCurve, "curve")] {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let mut spec = ExperimentSpec::new(SHIPPED, command);
            if command == Command::BrCurve {
                spec.curve_sensor = Some(2);
            }
            let path = dir.path().join(format!("{name}{k}.csv"));
            spec.output_path = Some(path.clone());
            run(&spec).unwrap();
            outputs.push(std::fs::read(path).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{name}");
    }
}

#[test]
fn solve_csv_layout() {
    let (code, out, _) = crowdgame(&["solve"], Path::new(SHIPPED));
    assert_eq!(code, exit_code::SUCCESS);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "sensor_id,rate,power,fee,fee_share,utility");
    assert_eq!(lines.len(), 12);
    assert!(lines[1..11].iter().all(|l| l.split(',').count() == 6));
    assert!(lines[11].starts_with("#,converged=true,"));
}

#[test]
fn curve_csv_marks_one_best_response() {
    let (code, out, _) = crowdgame(&["br-curve", "--sensor", "2"], Path::new(SHIPPED));
    assert_eq!(code, exit_code::SUCCESS);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 513);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",1")).count(), 1);
}

#[test]
fn zero_price_sweep_sits_at_min_rate() {
    let sweep = SweepSpec {
        param: "sensors.unit_rate_price".into(),
        values: vec![0.0],
    };
    let report = run_sweep(&reference_scenario(), &sweep, &SolverOptions::default()).unwrap();
    let eq = report.points[0].outcome.as_ref().unwrap();
    assert!(eq.rates.iter().all(|&r| r == 0.1));
}

#[test]
fn empty_sweep_is_rejected() {
    let sweep = SweepSpec {
        param: "blockchain.compute_coeff".into(),
        values: vec![],
    };
    assert!(run_sweep(&reference_scenario(), &sweep, &SolverOptions::default()).is_err());
    let (code, _, err) = crowdgame(
        &[
            "sweep",
            "--sweep-param",
            "blockchain.compute_coeff",
            "--sweep-values",
            "",
        ],
        Path::new(SHIPPED),
    );
    assert_eq!(code, exit_code::CONFIG, "{err}");
}

#[test]
fn single_sensor_solve_has_one_row() {
    let dir = TempDir::new().unwrap();
    let path = write_variant(&dir, "single.cfg", |text| {
        text.lines()
            .map(|l| match l.split_once(" = [") {
                Some((key, values)) => format!("{key} = [{}]", values.split(',').next().unwrap().trim_end_matches(']')),
                None => l.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\n")
    });
    let (code, out, err) = crowdgame(&["solve"], &path);
    assert_eq!(code, exit_code::SUCCESS, "{err}");
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = TempDir::new().unwrap();
    let shipped = Path::new(SHIPPED);
    assert_eq!(crowdgame(&["check"], shipped).0, exit_code::SUCCESS);
    assert_eq!(crowdgame(&["verify"], shipped).0, exit_code::SUCCESS);

    let missing = dir.path().join("does-not-exist.cfg");
    assert_eq!(crowdgame(&["solve"], &missing).0, exit_code::CONFIG);

    let bad_gain = write_variant(&dir, "bad-gain.cfg", |t| {
        t.replace("channel_gain = [1.95", "channel_gain = [-1.0")
    });
    let (code, _, err) = crowdgame(&["solve"], &bad_gain);
    assert_eq!(code, exit_code::CONFIG);
    assert!(err.contains("sensors[0].channel_gain"), "{err}");

    let (code, _, err) = crowdgame(&["br-curve"], shipped);
    assert_eq!(code, exit_code::CONFIG, "{err}");

    let capped = write_variant(&dir, "capped.cfg", |t| {
        format!("{t}max_received_power = [1.0001, 2.0001, 3.0001, 1.0001, 2.0001, 3.0001, 1.0001, 2.0001, 3.0001, 1.0001]\n")
    });
    assert_eq!(crowdgame(&["solve"], &capped).0, exit_code::INFEASIBLE);

    assert_eq!(
        crowdgame(&["solve", "--max-iter", "1"], shipped).0,
        exit_code::NOT_CONVERGED
    );

    let flat_fee = write_variant(&dir, "flat-fee.cfg", |t| {
        t.replace("quad_coeff = 0.1", "quad_coeff = 0.0")
    });
    let (code, out, err) = crowdgame(&["check"], &flat_fee);
    assert_eq!(code, exit_code::EXISTENCE_FAILED);
    assert!(out.contains("condition_a = false"));
    assert!(err.contains("warning"), "{err}");
}
