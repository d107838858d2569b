//! Browser bindings for three interactive views: rate functions, a Monte
//! Carlo mean-cost curve, and the self-normalized annulus statistic against
//! its envelope. Results come back as flat `Float64Array`s.

use otconc::costs::{rate_phi, rate_phi_eta};
use otconc::harness::{estimate_mean_cost, CostMethod, ExperimentConfig};
use otconc::partition::{selfnorm_tail_mc, Direction, SelfNormConfig};
use otconc::{Distribution, RadialCost, RateParams, Regime, Seed};
use wasm_bindgen::prelude::*;

/// A one-parameter law by name; `param` is the law's shape or scale.
pub fn distribution(name: &str, param: f64) -> otconc::Result<Distribution> {
    match name {
        "gaussian" => Distribution::gaussian(param, 1),
        "geometric" => Distribution::geometric(param),
        "poisson" => Distribution::poisson(param),
        "weibull" => Distribution::weibull(param),
        "uniform" => Distribution::uniform_ball(param, 1),
        _ => Err(otconc::Error::InvalidParameter(format!("unknown distribution {name}"))),
    }
}

/// `points` log-spaced x in [x_min, x_max], then φ(x), then φ_η(x).
pub fn rate_table(d: usize, p: f64, eta: f64, x_min: f64, x_max: f64, points: usize) -> otconc::Result<Vec<f64>> {
    let params = RateParams::new(d, p, eta)?;
    if !(x_min > 0.0 && x_max > x_min) || points < 2 {
        return Err(otconc::Error::InvalidParameter("need 0 < x_min < x_max and at least 2 points".into()));
    }
    let step = (x_max / x_min).ln() / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| x_min * (step * i as f64).exp()).collect();
    let phi = xs.iter().map(|&x| rate_phi(d, p, x));
    let phi_eta = xs.iter().map(|&x| rate_phi_eta(&params, x));
    Ok(xs.iter().copied().chain(phi).chain(phi_eta).collect())
}

/// (N, mean, stderr) triples of E D_f(μ, μ_N) on a geometric N grid up to `n_max`.
#[allow(clippy::too_many_arguments)]
pub fn mean_curve(
    dist: &str,
    param: f64,
    exponential: bool,
    p: f64,
    a: f64,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> otconc::Result<Vec<f64>> {
    let dist = distribution(dist, param)?;
    let cost = if exponential { RadialCost::exponential(p, a)? } else { RadialCost::power(p)? };
    let mut grid: Vec<usize> = (0..=40).map(|i| (n_max.max(1) as f64).powf(i as f64 / 40.0).round() as usize).collect();
    grid.dedup();
    let mut cfg = ExperimentConfig::new(dist, cost, grid, trials, Seed::new(seed), CostMethod::Quantile1d)?;
    cfg.seed = cfg.derived_seed(seed);
    let table = estimate_mean_cost(&cfg)?;
    Ok(table.rows.iter().flat_map(|r| [r.n as f64, r.mean, r.stderr]).collect())
}

/// (x, p̂, Wilson upper bound, envelope) rows for x = 0.05, 0.10, ..., 1.00.
pub fn selfnorm_table(
    sigma: f64,
    alpha: f64,
    delta: f64,
    n: usize,
    trials: usize,
    seed: u64,
    empirical_minus_true: bool,
) -> otconc::Result<Vec<f64>> {
    let dist = Distribution::gaussian(sigma, 1)?;
    let direction = if empirical_minus_true { Direction::EmpiricalMinusTrue } else { Direction::TrueMinusEmpirical };
    let cfg = SelfNormConfig::new(delta, alpha, direction)?;
    let xs: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
    let rows = selfnorm_tail_mc(&dist, n, &cfg, &xs, trials, Seed::new(seed))?;
    Ok(rows.iter().flat_map(|r| [r.x, r.phat, r.ci_hi, r.envelope]).collect())
}

fn js(e: otconc::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = rateFunctions)]
pub fn rate_functions(d: usize, p: f64, eta: f64, x_min: f64, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    rate_table(d, p, eta, x_min, x_max, points).map_err(js)
}

#[wasm_bindgen(js_name = regime)]
pub fn regime(d: usize, p: f64) -> String {
    Regime::detect(d, p).label().to_string()
}

#[wasm_bindgen(js_name = meanCostCurve)]
#[allow(clippy::too_many_arguments)]
pub fn mean_cost_curve(
    dist: &str,
    param: f64,
    exponential: bool,
    p: f64,
    a: f64,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    mean_curve(dist, param, exponential, p, a, n_max, trials, seed).map_err(js)
}

#[wasm_bindgen(js_name = selfnormTail)]
pub fn selfnorm_tail(
    sigma: f64,
    alpha: f64,
    delta: f64,
    n: usize,
    trials: usize,
    seed: u64,
    empirical_minus_true: bool,
) -> Result<Vec<f64>, JsError> {
    selfnorm_table(sigma, alpha, delta, n, trials, seed, empirical_minus_true).map_err(js)
}
