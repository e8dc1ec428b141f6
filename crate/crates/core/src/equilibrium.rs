//! Equilibrium existence, best responses and equilibrium search.
//!
//! Both best-response methods iterate a fixed-point map `G` (one Gauss-Seidel
//! sweep, or one simultaneous Jacobi update) whose fixed points are exactly
//! the Nash equilibria. Near the equilibrium of a congested game these maps
//! are badly conditioned: every sensor's best response fills whatever load
//! slack the others leave, so Gauss-Seidel contracts at a rate close to one
//! and Jacobi overshoots. The iteration is therefore wrapped in safeguarded
//! Anderson acceleration; setting `anderson_memory = 0` runs the plain map.
//!
//! Gradient ascent integrates `dr/dt = grad_i u_i(r)` projected onto each
//! sensor's feasible interval. The default linearly-implicit step stays
//! stable when the utilities are stiff near the load limit.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{GameError, Result};
use crate::model::{
    invert_rates, pseudo_gradient, pseudo_gradient_jacobian, utility_gradient_analytic, utility_rate_space,
    utility_second_derivative, EquilibriumResult, GameConfig, RateVector,
};
use crate::search::{argmax_first, bisect_boundary, golden_section_max};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GaussSeidelBr,
    JacobiBr,
    GradientAscent,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GaussSeidelBr => "gauss_seidel_br",
            Method::JacobiBr => "jacobi_br",
            Method::GradientAscent => "gradient_ascent",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss_seidel_br" => Ok(Method::GaussSeidelBr),
            "jacobi_br" => Ok(Method::JacobiBr),
            "gradient_ascent" => Ok(Method::GradientAscent),
            other => Err(GameError::invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Time discretization for [`Method::GradientAscent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientScheme {
    /// `r <- P(r + h F(r))`.
    Explicit,
    /// `r <- P(r + h (I - h J)^-1 F(r))` over the unclamped coordinates.
    LinearlyImplicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    /// Starting profile; `None` starts every sensor at `min_rate + 0.1`.
    pub init_rates: Option<RateVector>,
    pub step_size: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub min_rate: f64,
    /// History length for Anderson acceleration of the best-response maps.
    pub anderson_memory: usize,
    pub gradient_scheme: GradientScheme,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::GaussSeidelBr,
            init_rates: None,
            step_size: 1e-3,
            tol: 1e-8,
            max_iter: 10_000,
            min_rate: 0.1,
            anderson_memory: 10,
            gradient_scheme: GradientScheme::LinearlyImplicit,
        }
    }
}

impl SolverOptions {
    pub fn with_method(method: Method) -> Self {
        SolverOptions {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(GameError::invalid("tol", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(GameError::invalid("max_iter", "must be >= 1"));
        }
        if !self.min_rate.is_finite() || self.min_rate < 0.0 {
            return Err(GameError::invalid("min_rate", "must be finite and >= 0"));
        }
        if self.method == Method::GradientAscent && (self.step_size.is_nan() || self.step_size <= 0.0) {
            return Err(GameError::invalid("step_size", "must be > 0 for gradient ascent"));
        }
        Ok(())
    }

    fn initial_profile(&self, cfg: &GameConfig) -> Result<RateVector> {
        match &self.init_rates {
            Some(r) => RateVector::checked(r.to_vec(), cfg),
            None => Ok(RateVector::filled(cfg.num_sensors(), self.min_rate + 0.1)),
        }
    }
}

const COARSE_GRID: usize = 64;
const GOLDEN_TOL: f64 = 1e-10;

/// `[min_rate, r_i^max]`: the rates sensor `i` can pick against `r_{-i}`.
///
/// The upper end is the largest rate for which [`invert_rates`] still
/// succeeds, found by bisection.
pub fn feasible_interval(i: usize, r: &RateVector, cfg: &GameConfig, min_rate: f64) -> Result<(f64, f64)> {
    cfg.sensor(i)?;
    cfg.check_len(r.len())?;
    let mut trial = r.clone();
    let mut feasible = |x: f64| {
        trial.as_mut_slice()[i] = x;
        invert_rates(&trial, cfg).is_ok()
    };
    if !feasible(min_rate) {
        return Err(GameError::EmptyFeasibleInterval {
            sensor: i,
            lower: min_rate,
            upper: upper_bound_estimate(i, r, cfg),
        });
    }
    let mut hi = 2.0 * min_rate.max(1.0);
    while feasible(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(GameError::invalid(
                format!("sensors[{i}]"),
                "feasible rate is unbounded",
            ));
        }
    }
    Ok((min_rate, bisect_boundary(min_rate, hi, feasible)))
}

/// Largest feasible rate for `i` ignoring the lower bound, or -inf if none.
fn upper_bound_estimate(i: usize, r: &RateVector, cfg: &GameConfig) -> f64 {
    feasible_interval(i, r, cfg, 0.0).map_or(f64::NEG_INFINITY, |(_, hi)| hi)
}

/// Utility-maximizing rate of sensor `i` against the other entries of `r`.
///
/// The utility is concave in the own rate, so a 64-point grid brackets the
/// peak and golden-section search refines it. Ties go to the smaller rate.
pub fn best_response(i: usize, r: &RateVector, cfg: &GameConfig, opts: &SolverOptions) -> Result<f64> {
    let (lo, hi) = feasible_interval(i, r, cfg, opts.min_rate)?;
    Ok(maximize_on_interval(i, r, cfg, lo, hi, COARSE_GRID, GOLDEN_TOL).0)
}

/// Grid search over `[lo, hi]` followed by golden-section refinement inside
/// the cells adjacent to the best grid point. Returns `(rate, utility)`.
pub(crate) fn maximize_on_interval(
    i: usize,
    r: &RateVector,
    cfg: &GameConfig,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: f64,
) -> (f64, f64) {
    let mut trial = r.clone();
    let mut utility = |x: f64| -> f64 {
        trial.as_mut_slice()[i] = x;
        utility_rate_space(i, &trial, cfg).unwrap_or(f64::NEG_INFINITY)
    };
    if hi <= lo || grid < 2 {
        return (lo, utility(lo));
    }
    let xs = uniform_grid(lo, hi, grid);
    let values: Vec<f64> = xs.iter().map(|&x| utility(x)).collect();
    let k = argmax_first(&values);
    let a = xs[k.saturating_sub(1)];
    let b = xs[(k + 1).min(grid - 1)];
    let (golden, golden_value) = golden_section_max(&mut utility, a, b, tol);
    let (x, v) = if golden_value > values[k] {
        (golden, golden_value)
    } else {
        (xs[k], values[k])
    };
    // Value comparisons cannot resolve a peak finer than sqrt(eps / |u''|);
    // finish on the sign of the own-rate derivative instead.
    let polished = newton_polish(i, r, cfg, x, a, b);
    let polished_value = utility(polished);
    // The guard only rejects a polish that lost real utility; rounding in u
    // is far above one ulp.
    if polished_value >= v - 1e-10 * (1.0 + v.abs()) {
        (polished, polished_value)
    } else {
        (x, v)
    }
}

/// Safeguarded Newton iteration on `du_i/dr_i = 0` inside `[a, b]`,
/// falling back to bisection when a step leaves the bracket.
fn newton_polish(i: usize, r: &RateVector, cfg: &GameConfig, start: f64, mut a: f64, mut b: f64) -> f64 {
    let mut trial = r.clone();
    let mut x = start;
    for _ in 0..50 {
        trial.as_mut_slice()[i] = x;
        let (Ok(slope), Ok(curvature)) = (
            utility_gradient_analytic(i, &trial, cfg),
            utility_second_derivative(i, &trial, cfg),
        ) else {
            break;
        };
        if slope == 0.0 {
            break;
        }
        if slope > 0.0 {
            a = x;
        } else {
            b = x;
        }
        if b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
        let newton = x - slope / curvature;
        let next = if curvature < 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// `n` evenly spaced points from `lo` to exactly `hi`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + step * k as f64 })
        .collect()
}

/// One Gauss-Seidel pass: sensors in ascending index order replace their
/// rate by their best response to the current profile.
pub fn gauss_seidel_sweep(r: &RateVector, cfg: &GameConfig, opts: &SolverOptions) -> Result<RateVector> {
    let mut next = r.clone();
    for i in 0..cfg.num_sensors() {
        let br = best_response(i, &next, cfg, opts)?;
        next.as_mut_slice()[i] = br;
    }
    Ok(next)
}

/// One Jacobi update: every sensor best-responds to the same profile `r`.
/// The result need not be jointly feasible.
pub fn jacobi_update(r: &RateVector, cfg: &GameConfig, opts: &SolverOptions) -> Result<RateVector> {
    (0..cfg.num_sensors())
        .map(|i| best_response(i, r, cfg, opts))
        .collect::<Result<Vec<_>>>()
        .map(RateVector::new)
}

/// Finds an equilibrium with the method selected in `opts`.
///
/// Running out of iterations is not an error: the result carries
/// `converged = false` and the last profile.
pub fn solve(cfg: &GameConfig, opts: &SolverOptions) -> Result<EquilibriumResult> {
    opts.validate()?;
    let init = opts.initial_profile(cfg)?;
    if !admissible(&init, cfg, opts.min_rate) {
        invert_rates(&init, cfg)?;
        return Err(GameError::invalid("init_rates", "entries must be >= min_rate"));
    }
    let run = match opts.method {
        Method::GaussSeidelBr => accelerated_fixed_point(init, cfg, opts, gauss_seidel_sweep)?,
        Method::JacobiBr => accelerated_fixed_point(init, cfg, opts, jacobi_update)?,
        Method::GradientAscent => gradient_ascent(init, cfg, opts)?,
    };
    EquilibriumResult::evaluate(run.rates, cfg, run.iterations, run.converged, run.residual, run.trace)
}

struct Run {
    rates: RateVector,
    iterations: usize,
    converged: bool,
    residual: f64,
    trace: Vec<f64>,
}

fn admissible(r: &RateVector, cfg: &GameConfig, min_rate: f64) -> bool {
    r.iter().all(|&x| x >= min_rate) && invert_rates(r, cfg).is_ok()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Anderson-accelerated iteration of `map`, stopping once one application
/// of the map moves the profile by less than `tol`.
fn accelerated_fixed_point<F>(init: RateVector, cfg: &GameConfig, opts: &SolverOptions, map: F) -> Result<Run>
where
    F: Fn(&RateVector, &GameConfig, &SolverOptions) -> Result<RateVector>,
{
    let n = init.len();
    let mut x = init;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trace = Vec::new();

    for iteration in 1..=opts.max_iter {
        let g = map(&x, cfg, opts)?;
        let f: Vec<f64> = (0..n).map(|k| g[k] - x[k]).collect();
        let residual = inf_norm(&f);
        trace.push(residual);
        if residual < opts.tol {
            let rates = if admissible(&g, cfg, opts.min_rate) { g } else { x };
            return Ok(Run {
                rates,
                iterations: iteration,
                converged: true,
                residual,
                trace,
            });
        }
        if iteration == opts.max_iter {
            let rates = if admissible(&g, cfg, opts.min_rate) { g } else { x };
            return Ok(Run {
                rates,
                iterations: iteration,
                converged: false,
                residual,
                trace,
            });
        }

        if let Some((g_prev, f_prev)) = prev.take() {
            let dg: Vec<f64> = (0..n).map(|k| g[k] - g_prev[k]).collect();
            let df: Vec<f64> = (0..n).map(|k| f[k] - f_prev[k]).collect();
            history.push_back((dg, df));
            while history.len() > opts.anderson_memory {
                history.pop_front();
            }
        }
        prev = Some((g.to_vec(), f.clone()));

        let candidate = anderson_step(&g, &f, &history).map(|c| clamp_below(c, opts.min_rate));
        x = match candidate {
            Some(c) if admissible(&c, cfg, opts.min_rate) => c,
            _ if admissible(&g, cfg, opts.min_rate) => g,
            _ => {
                history.clear();
                damped_step(&x, &f, cfg, opts.min_rate)?
            }
        };
    }
    unreachable!("loop returns on the last iteration")
}

fn clamp_below(v: RateVector, floor: f64) -> RateVector {
    RateVector::new(v.iter().map(|&x| x.max(floor)).collect())
}

/// Type-II Anderson update `g - dG gamma` with `gamma` minimizing `|f - dF gamma|`.
fn anderson_step(g: &RateVector, f: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Option<RateVector> {
    if history.is_empty() {
        return None;
    }
    let n = f.len();
    let m = history.len();
    let df = DMatrix::from_fn(n, m, |row, col| history[col].1[row]);
    let svd = df.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-12;
    let gamma = svd.solve(&DVector::from_column_slice(f), cutoff).ok()?;
    let next: Vec<f64> = (0..n)
        .map(|row| g[row] - (0..m).map(|col| history[col].0[row] * gamma[col]).sum::<f64>())
        .collect();
    next.iter().all(|v| v.is_finite()).then(|| RateVector::new(next))
}

/// `x + beta f`, halving `beta` from one until the profile is admissible.
fn damped_step(x: &RateVector, f: &[f64], cfg: &GameConfig, min_rate: f64) -> Result<RateVector> {
    let mut beta = 1.0;
    for _ in 0..60 {
        let c = RateVector::new(x.iter().zip(f).map(|(a, d)| (a + beta * d).max(min_rate)).collect());
        if admissible(&c, cfg, min_rate) {
            return Ok(c);
        }
        beta *= 0.5;
    }
    // x itself is admissible; a zero step is the last resort.
    Ok(x.clone())
}

fn gradient_ascent(init: RateVector, cfg: &GameConfig, opts: &SolverOptions) -> Result<Run> {
    let n = init.len();
    let h = opts.step_size;
    let mut x = init;
    let mut trace = Vec::new();
    let mut residual = f64::INFINITY;

    for iteration in 1..=opts.max_iter {
        let bounds = (0..n)
            .map(|i| feasible_interval(i, &x, cfg, opts.min_rate))
            .collect::<Result<Vec<_>>>()?;
        let grad = pseudo_gradient(&x, cfg)?;
        // Coordinates pinned at a bound with the gradient pushing outward stay put.
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let (lo, hi) = bounds[i];
                !(x[i] <= lo && grad[i] <= 0.0 || x[i] >= hi && grad[i] >= 0.0)
            })
            .collect();

        let mut delta = vec![0.0; n];
        match opts.gradient_scheme {
            GradientScheme::Explicit => {
                for &i in &free {
                    delta[i] = h * grad[i];
                }
            }
            GradientScheme::LinearlyImplicit => {
                if !free.is_empty() {
                    let jac = pseudo_gradient_jacobian(&x, cfg)?;
                    let k = free.len();
                    let system = DMatrix::from_fn(k, k, |a, b| {
                        let identity = if a == b { 1.0 } else { 0.0 };
                        identity - h * jac[free[a]][free[b]]
                    });
                    let rhs = DVector::from_iterator(k, free.iter().map(|&i| h * grad[i]));
                    let step = system
                        .lu()
                        .solve(&rhs)
                        .ok_or_else(|| GameError::invalid("step_size", "implicit step matrix is singular"))?;
                    for (a, &i) in free.iter().enumerate() {
                        delta[i] = step[a];
                    }
                }
            }
        }

        let mut scale = 1.0;
        let mut next = x.clone();
        for _ in 0..60 {
            let candidate = RateVector::new(
                (0..n)
                    .map(|i| (x[i] + scale * delta[i]).clamp(bounds[i].0, bounds[i].1))
                    .collect(),
            );
            if admissible(&candidate, cfg, opts.min_rate) {
                next = candidate;
                break;
            }
            scale *= 0.5;
        }

        residual = next.max_abs_diff(&x);
        trace.push(residual);
        x = next;
        if residual < opts.tol {
            return Ok(Run {
                rates: x,
                iterations: iteration,
                converged: true,
                residual,
                trace,
            });
        }
    }
    Ok(Run {
        rates: x,
        iterations: opts.max_iter,
        converged: false,
        residual,
        trace,
    })
}

/// Axis-aligned rate region `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl RateBox {
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Self {
        RateBox {
            lower: vec![lower; n],
            upper: vec![upper; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceReport {
    /// `a m^2 - c >= 0`.
    pub condition_a: bool,
    /// Aggregate rate at the region's lower corner is at least one.
    pub condition_b: bool,
    /// Every sampled own-rate second derivative was negative.
    pub numeric_concavity: bool,
    pub curvature_margin: f64,
    pub worst_second_derivative: f64,
    pub worst_sensor: usize,
    pub worst_point: RateVector,
    /// Feasible points evaluated (infeasible draws are skipped).
    pub samples_evaluated: usize,
    pub draws: usize,
}

/// Concavity conditions for equilibrium existence over a rate region.
///
/// Points come from a Halton sequence over the box interior; draws outside
/// the achievable rate region are skipped until `samples` feasible points
/// have been evaluated or `1000 * samples` draws are exhausted.
pub fn check_existence(cfg: &GameConfig, region: &RateBox, samples: usize) -> Result<ExistenceReport> {
    let n = cfg.num_sensors();
    cfg.check_len(region.lower.len())?;
    cfg.check_len(region.upper.len())?;
    if samples == 0 {
        return Err(GameError::invalid("samples", "must be >= 1"));
    }
    for (k, (lo, hi)) in region.lower.iter().zip(&region.upper).enumerate() {
        if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo <= hi) {
            return Err(GameError::invalid(
                format!("region[{k}]"),
                format!("[{lo}, {hi}] is not a valid interval"),
            ));
        }
    }
    let bc = &cfg.blockchain;
    let curvature_margin = bc.quad_coeff * bc.compute_coeff * bc.compute_coeff - bc.const_coeff;
    // allow for rounding in the sum: ten corners at 0.1 add up to 1 - 1ulp
    let corner_total: f64 = region.lower.iter().sum();
    let condition_b = corner_total >= 1.0 - 4.0 * f64::EPSILON * region.lower.len() as f64;

    let mut worst = f64::NEG_INFINITY;
    let mut worst_sensor = 0;
    let mut worst_point = RateVector::new(region.lower.clone());
    let mut evaluated = 0;
    let mut draws = 0;
    let max_draws = samples.saturating_mul(1000);
    let mut halton = Halton::new(n);
    while evaluated < samples && draws < max_draws {
        draws += 1;
        let unit = halton.next_point();
        let point = RateVector::new(
            (0..n)
                .map(|k| region.lower[k] + unit[k] * (region.upper[k] - region.lower[k]))
                .collect(),
        );
        if invert_rates(&point, cfg).is_err() {
            continue;
        }
        evaluated += 1;
        for i in 0..n {
            let d2 = utility_second_derivative(i, &point, cfg)?;
            if d2 > worst || d2.is_nan() {
                worst = d2;
                worst_sensor = i;
                worst_point = point.clone();
            }
        }
    }
    if evaluated == 0 {
        return Err(GameError::EmptyRegion { draws });
    }
    Ok(ExistenceReport {
        condition_a: curvature_margin >= 0.0,
        condition_b,
        numeric_concavity: worst < 0.0,
        curvature_margin,
        worst_second_derivative: worst,
        worst_sensor,
        worst_point,
        samples_evaluated: evaluated,
        draws,
    })
}

/// Halton low-discrepancy sequence in `[0, 1)^dim`, skipping the origin.
pub struct Halton {
    bases: Vec<u64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        Halton {
            bases: first_primes(dim),
            index: 0,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.bases.iter().map(|&b| radical_inverse(self.index, b)).collect()
    }
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut scale = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * scale;
        index /= base;
        scale /= base as f64;
    }
    result
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeVerification {
    pub verified: bool,
    pub worst_gain: f64,
    pub worst_sensor: usize,
    /// Best unilateral utility gain found per sensor.
    pub gains: Vec<f64>,
}

/// Checks that no sensor can gain more than `epsilon` by deviating alone
/// anywhere in `[min_rate, r_i^max]`.
pub fn verify_epsilon_ne(
    r_star: &RateVector,
    cfg: &GameConfig,
    epsilon: f64,
    grid_points: usize,
    min_rate: f64,
) -> Result<NeVerification> {
    invert_rates(r_star, cfg)?;
    let mut gains = Vec::with_capacity(r_star.len());
    for i in 0..cfg.num_sensors() {
        let current = utility_rate_space(i, r_star, cfg)?;
        let (lo, hi) = feasible_interval(i, r_star, cfg, min_rate.min(r_star[i]))?;
        let (_, best) = maximize_on_interval(i, r_star, cfg, lo, hi, grid_points.max(2), GOLDEN_TOL);
        gains.push(best - current);
    }
    let worst_sensor = argmax_first(&gains);
    let worst_gain = gains[worst_sensor];
    Ok(NeVerification {
        verified: worst_gain <= epsilon,
        worst_gain,
        worst_sensor,
        gains,
    })
}
