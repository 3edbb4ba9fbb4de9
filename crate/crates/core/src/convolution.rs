//! Semigroup-compensated sewing sums: the rough convolution, the Young
//! convolution, dyadic convergence studies and remainder certificates.

use std::ops::RangeInclusive;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::controlled::{crp_norm, sup_norm, pair_seminorms, ControlledPath, SeminormWeights, Space};
use crate::driver::{holder_seminorm, rho, RoughDriver};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scale::Scale;
use crate::semigroup::{decay_factors, LagTable};

/// A grid-sampled path in the scale, without a Gubinelli derivative.
#[derive(Debug, Clone)]
pub struct HolderPath {
    grid: TimeGrid,
    scale: Arc<Scale>,
    alpha: f64,
    values: Array2<f64>,
}

impl HolderPath {
    pub fn new(grid: TimeGrid, scale: Arc<Scale>, alpha: f64, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.len(), scale.modes()) {
            return Err(Error::GridMismatch(format!(
                "path array {:?} does not match grid x modes ({}, {})",
                values.dim(),
                grid.len(),
                scale.modes()
            )));
        }
        Ok(Self {
            grid,
            scale,
            alpha,
            values: values.as_standard_layout().into_owned(),
        })
    }

    pub fn constant(grid: TimeGrid, scale: Arc<Scale>, alpha: f64, v: &[f64]) -> Result<Self> {
        let mut values = Array2::zeros((grid.len(), scale.modes()));
        for mut row in values.rows_mut() {
            row.assign(&ndarray::ArrayView1::from(v));
        }
        Self::new(grid, scale, alpha, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scale(&self) -> &Arc<Scale> {
        &self.scale
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn value(&self, i: usize) -> &[f64] {
        self.values.row(i).to_slice().expect("standard layout")
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn difference(&self, other: &HolderPath) -> Result<HolderPath> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            values: &self.values - &other.values,
            ..self.clone()
        })
    }

    pub fn subsample(&self, stride: usize) -> Result<HolderPath> {
        if stride == 0 || !self.grid.steps().is_multiple_of(stride) {
            return Err(Error::GridMismatch(format!(
                "stride {stride} does not divide {} steps",
                self.grid.steps()
            )));
        }
        let grid = TimeGrid::new(self.grid.steps() / stride, self.grid.horizon())?;
        let idx: Vec<usize> = (0..grid.len()).map(|i| i * stride).collect();
        Ok(Self {
            grid,
            values: self.values.select(Axis(0), &idx),
            ..self.clone()
        })
    }

    /// `sup_t |y_t|_index`.
    pub fn sup_norm(&self, index: f64) -> f64 {
        sup_norm(self.values.view(), &self.scale.weights(index))
    }

    /// `[y]_(exponent, index)` over grid pairs.
    pub fn holder(&self, exponent: f64, index: f64) -> f64 {
        let w = self.scale.weights(index);
        pair_seminorms(
            &self.grid,
            self.values.view(),
            &[],
            self.values.view(),
            &SeminormWeights {
                holder: &w,
                rem_low: &w,
                rem_high: &w,
                exponents: [exponent; 3],
            },
        )
        .holder
    }

    /// `||y||_(inf, alpha) + [y]_(gamma, alpha - gamma)`.
    pub fn holder_norm(&self, gamma: f64) -> f64 {
        self.sup_norm(self.alpha) + self.holder(gamma, self.alpha - gamma)
    }
}

fn interior_scale(path: &ControlledPath) -> Result<&Arc<Scale>> {
    path.space()
        .scale()
        .ok_or_else(|| Error::SpaceMismatch("convolution needs an interior-valued path".into()))
}

fn check_stride(grid: &TimeGrid, stride: usize) -> Result<TimeGrid> {
    if stride == 0 || !grid.steps().is_multiple_of(stride) {
        return Err(Error::GridMismatch(format!(
            "output stride {stride} does not divide {} steps",
            grid.steps()
        )));
    }
    TimeGrid::new(grid.steps() / stride, grid.horizon())
}

/// `z_{j+1} = S_h (z_j + y_j X_{j+1,j} + y'_j XX_{j+1,j})`, `z_0 = 0`,
/// which is the compensated sum over the finest grid, sampled every `stride` steps.
fn compensated_sum(
    decay: &[f64],
    y: ArrayView2<'_, f64>,
    yp: Option<ArrayView2<'_, f64>>,
    driver: &RoughDriver,
    stride: usize,
) -> Array2<f64> {
    let n = driver.grid().steps();
    let modes = y.ncols();
    let mut out = Array2::zeros((n / stride + 1, modes));
    let mut z = vec![0.0; modes];
    for j in 0..n {
        let dx = driver.increment(j, j + 1);
        let yj = y.row(j);
        match yp {
            Some(yp) => {
                let dxx = driver.second_order(j, j + 1);
                let ypj = yp.row(j);
                for k in 0..modes {
                    z[k] = decay[k] * (z[k] + yj[k] * dx + ypj[k] * dxx);
                }
            }
            None => {
                for k in 0..modes {
                    z[k] = decay[k] * (z[k] + yj[k] * dx);
                }
            }
        }
        if (j + 1) % stride == 0 {
            out.row_mut((j + 1) / stride).assign(&ndarray::ArrayView1::from(&z[..]));
        }
    }
    out
}

/// `int_0^t S_(t-r) y_r dX_r` as a controlled path `(z, y)` at index `alpha + theta`,
/// sampled every `stride` fine steps.
pub fn rough_convolve(path: &ControlledPath, driver: &RoughDriver, stride: usize, theta: f64) -> Result<ControlledPath> {
    path.grid().ensure_same(driver.grid())?;
    let scale = interior_scale(path)?.clone();
    if !(0.0..path.gamma()).contains(&theta) {
        return Err(Error::config(format!(
            "regularity gain {theta} must lie in [0, {})",
            path.gamma()
        )));
    }
    let out_grid = check_stride(path.grid(), stride)?;
    let decay = decay_factors(&scale, driver.grid().step());
    let z = compensated_sum(&decay, path.values(), Some(path.derivatives()), driver, stride);
    let idx: Vec<usize> = (0..out_grid.len()).map(|i| i * stride).collect();
    let zp = path.values().select(Axis(0), &idx);
    ControlledPath::new(
        out_grid,
        Space::Interior(scale),
        path.alpha() + theta,
        path.gamma(),
        z,
        zp,
    )
}

/// `int_0^t S_(t-r) y_r dX_r` in the Young sense, sampled every `stride` steps.
pub fn young_convolve(path: &HolderPath, driver: &RoughDriver, stride: usize) -> Result<HolderPath> {
    if driver.gamma() <= 0.5 {
        return Err(Error::Regularity(driver.gamma()));
    }
    path.grid.ensure_same(driver.grid())?;
    let out_grid = check_stride(&path.grid, stride)?;
    let decay = decay_factors(&path.scale, driver.grid().step());
    let z = compensated_sum(&decay, path.values(), None, driver, stride);
    HolderPath::new(out_grid, path.scale.clone(), path.alpha, z)
}

/// Dyadic defects `|I^n - I^(n+1)|` and their fitted decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SewingReport {
    pub beta: f64,
    /// Scale index the defects are measured in.
    pub index: f64,
    pub rows: Vec<(u32, f64)>,
    /// Least-squares slope of `-log2(defect)` against the level.
    pub slope: f64,
}

impl SewingReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,defect,beta\n");
        for (l, d) in &self.rows {
            s.push_str(&format!(
                "{l},{},{}\n",
                crate::driver::fmt_f64(*d),
                crate::driver::fmt_f64(self.beta)
            ));
        }
        s
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `I^(P^n)_(t,0)`: the compensated sum over the dyadic partition of `[0, t]` into `2^n` pieces.
fn dyadic_sum(
    scale: &Scale,
    grid: &TimeGrid,
    y: ArrayView2<'_, f64>,
    yp: Option<ArrayView2<'_, f64>>,
    driver: &RoughDriver,
    t_index: usize,
    level: u32,
) -> Vec<f64> {
    let pieces = 1usize << level;
    let width = t_index / pieces;
    let t = grid.time(t_index);
    let modes = scale.modes();
    let mut acc = vec![0.0; modes];
    for i in 0..pieces {
        let (u, v) = (i * width, (i + 1) * width);
        let dx = driver.increment(u, v);
        let dxx = driver.second_order(u, v);
        let lag = t - grid.time(u);
        for k in 0..modes {
            let mut xi = y[[u, k]] * dx;
            if let Some(yp) = yp {
                xi += yp[[u, k]] * dxx;
            }
            acc[k] += (-scale.eigenvalues()[k] * lag).exp() * xi;
        }
    }
    acc
}

fn dyadic_report(
    scale: &Scale,
    grid: &TimeGrid,
    y: ArrayView2<'_, f64>,
    yp: Option<ArrayView2<'_, f64>>,
    driver: &RoughDriver,
    t_index: usize,
    levels: RangeInclusive<u32>,
    beta: f64,
    index: f64,
) -> Result<SewingReport> {
    let (lo, hi) = (*levels.start(), *levels.end());
    if lo > hi || t_index == 0 || t_index > grid.steps() || !t_index.is_multiple_of(1usize << (hi + 1)) {
        return Err(Error::GridMismatch(format!(
            "levels {lo}..={hi} need t_index {t_index} divisible by 2^{}",
            hi + 1
        )));
    }
    let w = scale.weights(index);
    let sums: Vec<Vec<f64>> = (lo..=hi + 1)
        .into_par_iter()
        .map(|l| dyadic_sum(scale, grid, y, yp, driver, t_index, l))
        .collect();
    let rows: Vec<(u32, f64)> = (lo..=hi)
        .zip(sums.windows(2))
        .map(|(l, pair)| {
            let d: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| a - b).collect();
            (l, crate::controlled::weighted_norm(&d, &w))
        })
        .collect();
    let slope = if rows.len() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let ly: Vec<f64> = rows.iter().map(|r| -r.1.max(f64::MIN_POSITIVE).log2()).collect();
        fit_slope(&x, &ly)
    } else {
        f64::NAN
    };
    Ok(SewingReport { beta, index, rows, slope })
}

/// Dyadic sewing defects of the rough convolution at `t = t_index`, measured
/// in `B_(alpha - 2 gamma + beta)`.
pub fn sewing_convergence(
    path: &ControlledPath,
    driver: &RoughDriver,
    t_index: usize,
    levels: RangeInclusive<u32>,
    beta: f64,
) -> Result<SewingReport> {
    path.grid().ensure_same(driver.grid())?;
    let scale = interior_scale(path)?;
    let index = path.alpha() - 2.0 * path.gamma() + beta;
    dyadic_report(
        scale,
        path.grid(),
        path.values(),
        Some(path.derivatives()),
        driver,
        t_index,
        levels,
        beta,
        index,
    )
}

/// Dyadic defects of the Young convolution in `B_(alpha - gamma + beta)`.
pub fn young_sewing_convergence(
    path: &HolderPath,
    driver: &RoughDriver,
    t_index: usize,
    levels: RangeInclusive<u32>,
    beta: f64,
) -> Result<SewingReport> {
    if driver.gamma() <= 0.5 {
        return Err(Error::Regularity(driver.gamma()));
    }
    path.grid.ensure_same(driver.grid())?;
    let index = path.alpha - driver.gamma() + beta;
    dyadic_report(
        &path.scale,
        &path.grid,
        path.values(),
        None,
        driver,
        t_index,
        levels,
        beta,
        index,
    )
}

/// Normalised suprema of the integral remainder for each `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct RemainderReport {
    /// `(beta, sup |R_(t,s)|_(index) / ((t-s)^exponent * normaliser))`.
    pub rows: Vec<(f64, f64)>,
    pub normaliser: f64,
}

impl RemainderReport {
    pub fn ratio(&self, beta: f64) -> Option<f64> {
        self.rows.iter().find(|r| (r.0 - beta).abs() < 1e-12).map(|r| r.1)
    }
}

/// `sup_(s<t) |z_t - S_(t-s) z_s - S_(t-s) xi_(t,s)|_(idx_i) / (t-s)^(exp_i)`
/// with `xi_(t,s) = y_s X_(t,s) [+ y'_s XX_(t,s)]`.
fn remainder_sup(
    scale: &Scale,
    grid: &TimeGrid,
    z: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    yp: Option<ArrayView2<'_, f64>>,
    driver: &RoughDriver,
    targets: &[(f64, f64)],
) -> Vec<f64> {
    let n = grid.steps();
    let h = grid.step();
    let modes = scale.modes();
    let lags = LagTable::new(scale, h, n);
    let weights: Vec<Vec<f64>> = targets.iter().map(|(idx, _)| scale.weights(*idx)).collect();
    (0..n)
        .into_par_iter()
        .map(|s| {
            let mut best = vec![0.0f64; targets.len()];
            let mut r = vec![0.0; modes];
            for t in s + 1..=n {
                let dx = driver.increment(s, t);
                let dxx = driver.second_order(s, t);
                let decay = lags.lag(t - s);
                for k in 0..modes {
                    let mut xi = y[[s, k]] * dx;
                    if let Some(yp) = yp {
                        xi += yp[[s, k]] * dxx;
                    }
                    r[k] = z[[t, k]] - decay[k] * (z[[s, k]] + xi);
                }
                let dt = (t - s) as f64 * h;
                for (j, (_, e)) in targets.iter().enumerate() {
                    let norm = crate::controlled::weighted_norm(&r, &weights[j]);
                    best[j] = best[j].max(norm / dt.powf(*e));
                }
            }
            best
        })
        .reduce(
            || vec![0.0; targets.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        )
}

/// Certificate for `z = rough_convolve(path, driver)` on the same grid:
/// `sup |R_(t,s)|_(alpha - 2 gamma + beta) / ((t-s)^(3 gamma - beta) rho_gamma(X) ||path||)`.
pub fn remainder_certificate(
    path: &ControlledPath,
    driver: &RoughDriver,
    z: &ControlledPath,
    betas: &[f64],
) -> Result<RemainderReport> {
    path.grid().ensure_same(driver.grid())?;
    path.grid().ensure_same(z.grid())?;
    let scale = interior_scale(path)?;
    let (a, g) = (path.alpha(), path.gamma());
    let targets: Vec<(f64, f64)> = betas.iter().map(|b| (a - 2.0 * g + b, 3.0 * g - b)).collect();
    let sups = remainder_sup(
        scale,
        path.grid(),
        z.values(),
        path.values(),
        Some(path.derivatives()),
        driver,
        &targets,
    );
    let normaliser = rho(driver) * crp_norm(path, driver)?;
    let rows = betas
        .iter()
        .zip(sups)
        .map(|(b, s)| (*b, if normaliser > 0.0 { s / normaliser } else { s }))
        .collect();
    Ok(RemainderReport { rows, normaliser })
}

/// Certificate for `z = young_convolve(path, driver)`:
/// `sup |R_(t,s)|_(alpha - gamma + beta) / ((t-s)^(2 gamma - beta) [X]_gamma ||y||)`.
pub fn young_certificate(path: &HolderPath, driver: &RoughDriver, z: &HolderPath, betas: &[f64]) -> Result<RemainderReport> {
    path.grid.ensure_same(driver.grid())?;
    path.grid.ensure_same(&z.grid)?;
    let g = driver.gamma();
    let targets: Vec<(f64, f64)> = betas.iter().map(|b| (path.alpha - g + b, 2.0 * g - b)).collect();
    let sups = remainder_sup(&path.scale, &path.grid, z.values(), path.values(), None, driver, &targets);
    let normaliser = holder_seminorm(driver, g) * path.holder_norm(g);
    let rows = betas
        .iter()
        .zip(sups)
        .map(|(b, s)| (*b, if normaliser > 0.0 { s / normaliser } else { s }))
        .collect();
    Ok(RemainderReport { rows, normaliser })
}
