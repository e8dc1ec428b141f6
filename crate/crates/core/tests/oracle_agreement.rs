mod common;

use common::{random_feasible, random_powers, rel_err, rng};
use crowdgame::config::reference_scenario;
use crowdgame::equilibrium::{best_response, solve, SolverOptions};
use crowdgame::model::forward_rates;
use crowdgame::oracle::{grid_best_response, grid_cell, grid_certify_ne, scalar_rate};
use crowdgame::{PowerVector, RateVector};
use rand::RngExt;

#[test]
fn scalar_rate_matches_vectorised_map() {
    let cfg = reference_scenario();
    let mut rng = rng(30);
    for _ in 0..200 {
        let p = random_powers(&mut rng, &cfg);
        let r = forward_rates(&p, &cfg).unwrap();
        for i in 0..10 {
            assert!(rel_err(r[i], scalar_rate(i, &p, &cfg)) <= 1e-12);
        }
    }
}

#[test]
fn scalar_rate_is_zero_at_circuit_power() {
    let cfg = reference_scenario();
    let mut p: Vec<f64> = cfg.sensors.iter().map(|s| s.circuit_power + 0.5).collect();
    p[4] = cfg.sensors[4].circuit_power;
    assert_eq!(scalar_rate(4, &PowerVector::new(p), &cfg), 0.0);
}

#[test]
fn grid_and_refined_best_responses_agree_within_a_cell() {
    let cfg = reference_scenario();
    let opts = SolverOptions::default();
    let mut rng = rng(31);
    for _ in 0..20 {
        let i = rng.random_range(0..10);
        let r = random_feasible(&mut rng, &cfg, 0.9);
        let r = RateVector::new(r.iter().map(|&x| x.max(opts.min_rate)).collect());
        let Ok(cell) = grid_cell(i, &r, &cfg, 10_000, opts.min_rate) else {
            continue;
        };
        let grid = grid_best_response(i, &r, &cfg, 10_000, opts.min_rate).unwrap();
        let refined = best_response(i, &r, &cfg, &opts).unwrap();
        assert!(
            (grid - refined).abs() <= cell,
            "sensor {i}: grid {grid}, refined {refined}, cell {cell}"
        );
    }
}

#[test]
fn zero_price_sensor_gains_by_dropping_to_min_rate() {
    let mut cfg = reference_scenario();
    cfg.sensors[2].unit_rate_price = 0.0;
    let r = RateVector::filled(10, 0.2);
    assert_eq!(grid_best_response(2, &r, &cfg, 1_000, 0.1).unwrap(), 0.1);
    assert!(grid_certify_ne(&r, &cfg, 1_000, 0.1).unwrap() > 0.0);
}

#[test]
fn solved_single_sensor_game_has_no_grid_improvement() {
    let mut cfg = reference_scenario();
    cfg.sensors.truncate(1);
    let eq = solve(&cfg, &SolverOptions::default()).unwrap();
    assert!(grid_certify_ne(&eq.rates, &cfg, 10_000, 0.1).unwrap() <= 1e-12);
}

#[test]
fn difference_oracle_tracks_analytic_gradient() {
    let cfg = reference_scenario();
    let mut rng = rng(32);
    for k in 0..50 {
        let r = random_feasible(&mut rng, &cfg, 0.9);
        let i = k % 10;
        let numeric = crowdgame::oracle::fd_gradient(i, &r, &cfg, 1e-6 * r[i].max(1.0)).unwrap();
        let exact = crowdgame::model::utility_gradient_analytic(i, &r, &cfg).unwrap();
        assert!(rel_err(numeric, exact) <= 1e-5, "{numeric} vs {exact}");
    }
}
