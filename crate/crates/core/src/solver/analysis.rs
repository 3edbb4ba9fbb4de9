use ndarray::Array2;

use super::picard::{solve_from, window_contraction};
use super::ProblemSpec;
use crate::controlled::{crp_norm, lift_extrapolate, pair_seminorms, sup_norm, ControlledPath, SeminormWeights};
use crate::driver::RoughDriver;
use crate::error::{Error, Result};

/// `d_(gamma', gamma, -eta)` between `(u, u')` over `d1` and `(v, v')` over `d2`:
/// `||u - v||_(inf, a) + ||u' - v'||_(inf, a - gamma) + [u' - v']_(gamma', a - 2 gamma)
///  + [R^u - R^v]_(gamma', a - gamma) + [R^u - R^v]_(2 gamma', a - 2 gamma)`
/// with `a` the index of `u`.
pub fn stability_distance(
    u: &ControlledPath,
    v: &ControlledPath,
    d1: &RoughDriver,
    d2: &RoughDriver,
    gamma_prime: f64,
) -> Result<f64> {
    u.grid().ensure_same(v.grid())?;
    u.grid().ensure_same(d1.grid())?;
    u.grid().ensure_same(d2.grid())?;
    let gamma = u.gamma();
    if !(gamma_prime > 1.0 / 3.0 && gamma_prime < gamma) {
        return Err(Error::config(format!(
            "gamma' = {gamma_prime} must lie in (1/3, {gamma})"
        )));
    }
    let diff = u.difference(v)?;
    let a = u.alpha();
    let w0 = u.space().weights(a);
    let w1 = u.space().weights(a - gamma);
    let w2 = u.space().weights(a - 2.0 * gamma);
    let neg_vp: Array2<f64> = -&v.derivatives();
    let pairs = pair_seminorms(
        u.grid(),
        diff.values(),
        &[(u.derivatives(), d1.values()), (neg_vp.view(), d2.values())],
        diff.derivatives(),
        &SeminormWeights {
            holder: &w2,
            rem_low: &w1,
            rem_high: &w2,
            exponents: [gamma_prime, gamma_prime, 2.0 * gamma_prime],
        },
    );
    Ok(sup_norm(diff.values(), &w0) + sup_norm(diff.derivatives(), &w1) + pairs.holder + pairs.rem_low + pairs.rem_high)
}

/// `|phi(t + tau, y0) - phi(t, theta_tau, phi(tau, y0))|_(-eta)`.
pub fn cocycle_defect(spec: &ProblemSpec, driver: &RoughDriver, t: f64, tau: f64) -> Result<f64> {
    let grid = driver.grid();
    let i_tau = grid.index_of(tau)?;
    let i_t = grid.index_of(t)?;
    let i_sum = grid.index_of(t + tau)?;
    if i_t == 0 {
        return Err(Error::config("cocycle time t must be positive"));
    }
    let y0 = &spec.y0().coeffs;
    let full = solve_from(spec, &driver.restrict(i_sum)?, y0)?;
    let mid = if i_tau == 0 {
        y0.clone()
    } else {
        solve_from(spec, &driver.restrict(i_tau)?, y0)?.terminal().to_vec()
    };
    let shifted = driver.shift(i_tau)?.restrict(i_t)?;
    let second = solve_from(spec, &shifted, &mid)?;
    let d: Vec<f64> = full.terminal().iter().zip(second.terminal()).map(|(a, b)| a - b).collect();
    Ok(spec.scale().norm_of(&d, spec.solution_index()))
}

/// Empirical Picard contraction on `[0, tau]` for `tau = T 2^(-level)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRow {
    pub tau: f64,
    pub factor: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn contraction_profile(spec: &ProblemSpec, driver: &RoughDriver, levels: usize) -> Result<Vec<ContractionRow>> {
    let n = driver.grid().steps();
    (0..=levels)
        .filter(|l| (n >> l) >= 1)
        .map(|l| {
            let window = driver.restrict(n >> l)?;
            let (factor, iterations, converged) = window_contraction(spec, &window, &spec.y0().coeffs)?;
            Ok(ContractionRow {
                tau: window.grid().horizon(),
                factor,
                iterations,
                converged,
            })
        })
        .collect()
}

/// `||G(y), DG(y) G(y)|| <= C (1 + ||y, G(y)||)` evaluated on a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGrowth {
    pub image_norm: f64,
    pub solution_norm: f64,
    pub ratio: f64,
}

pub fn linear_growth_ratio(spec: &ProblemSpec, solution: &ControlledPath, driver: &RoughDriver) -> Result<LinearGrowth> {
    let g = lift_extrapolate(spec.diffusion(), solution, spec.lift())?;
    let image_norm = crp_norm(&g, driver)?;
    let solution_norm = crp_norm(solution, driver)?;
    Ok(LinearGrowth {
        image_norm,
        solution_norm,
        ratio: image_norm / (1.0 + solution_norm),
    })
}
