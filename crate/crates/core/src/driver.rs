//! Scalar gamma-Hoelder rough paths on a uniform grid: fractional Brownian
//! motion sampling, the geometric lift, the inhomogeneous rough path metric
//! and the time shift.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Absolute tolerance for Chen's relation on explicit second-order processes.
pub const CHEN_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_GAMMA_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum Lift {
    /// `XX_{t,s} = (X_t - X_s)^2 / 2`, evaluated on demand.
    Geometric,
    /// Stored values with `second[[s, t]] = XX_{t,s}` for `s <= t`.
    Explicit(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughDriver {
    grid: TimeGrid,
    x: Vec<f64>,
    lift: Lift,
    gamma: f64,
    hurst: Option<f64>,
}

impl RoughDriver {
    /// A driver carrying the geometric lift of `x`.
    pub fn geometric(grid: TimeGrid, x: Vec<f64>, gamma: f64) -> Result<Self> {
        if x.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} path values for a grid of {} points",
                x.len(),
                grid.len()
            )));
        }
        if x[0] != 0.0 {
            return Err(Error::config(format!("driver must start at 0, got {}", x[0])));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("driver values must be finite"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::config(format!("Hoelder exponent must lie in (0, 1), got {gamma}")));
        }
        Ok(Self {
            grid,
            x,
            lift: Lift::Geometric,
            gamma,
            hurst: None,
        })
    }

    /// A driver with a stored second-order process, validated against Chen's relation.
    pub fn explicit(grid: TimeGrid, x: Vec<f64>, second: Array2<f64>, gamma: f64) -> Result<Self> {
        let mut d = Self::geometric(grid, x, gamma)?;
        if second.dim() != (grid.len(), grid.len()) {
            return Err(Error::GridMismatch(format!(
                "second-order process has shape {:?}, expected {n} x {n}",
                second.dim(),
                n = grid.len()
            )));
        }
        d.lift = Lift::Explicit(second);
        if let Some((defect, s, u, t)) = d.worst_chen_triple() {
            if defect > CHEN_TOLERANCE {
                return Err(Error::ChenViolation { defect, s, u, t });
            }
        }
        Ok(d)
    }

    pub fn with_hurst(mut self, hurst: f64) -> Self {
        self.hurst = Some(hurst);
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn lift(&self) -> &Lift {
        &self.lift
    }

    pub fn lift_tag(&self) -> &'static str {
        match self.lift {
            Lift::Geometric => "geometric",
            Lift::Explicit(_) => "explicit",
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn hurst(&self) -> Option<f64> {
        self.hurst
    }

    /// `X_{t,s} = X_t - X_s`.
    pub fn increment(&self, s: usize, t: usize) -> f64 {
        self.x[t] - self.x[s]
    }

    /// `XX_{t,s}`.
    pub fn second_order(&self, s: usize, t: usize) -> f64 {
        match &self.lift {
            Lift::Geometric => {
                let d = self.x[t] - self.x[s];
                0.5 * d * d
            }
            Lift::Explicit(m) => m[[s, t]],
        }
    }

    fn chen_defect_at(&self, s: usize, u: usize, t: usize) -> f64 {
        let lhs = self.second_order(s, t) - self.second_order(s, u) - self.second_order(u, t);
        (lhs - self.increment(s, u) * self.increment(u, t)).abs()
    }

    fn worst_chen_triple(&self) -> Option<(f64, usize, usize, usize)> {
        let n = self.grid.steps();
        (0..=n)
            .into_par_iter()
            .filter_map(|s| {
                let mut best: Option<(f64, usize, usize, usize)> = None;
                for u in s..=n {
                    for t in u..=n {
                        let d = self.chen_defect_at(s, u, t);
                        if best.is_none_or(|b| d > b.0) {
                            best = Some((d, s, u, t));
                        }
                    }
                }
                best
            })
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    }

    /// Largest Chen defect over all grid triples `s <= u <= t`.
    pub fn chen_defect(&self) -> f64 {
        self.worst_chen_triple().map_or(0.0, |b| b.0)
    }

    /// The shifted driver `X^theta_i = X_{j+i} - X_j` on the remaining grid.
    pub fn shift(&self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Ok(self.clone());
        }
        if steps >= self.grid.steps() {
            return Err(Error::GridMismatch(format!(
                "cannot shift a {}-step driver by {steps} steps",
                self.grid.steps()
            )));
        }
        let grid = TimeGrid::new(self.grid.steps() - steps, self.grid.time(self.grid.steps()) - self.grid.time(steps))?;
        let x0 = self.x[steps];
        let x = self.x[steps..].iter().map(|v| v - x0).collect();
        let lift = match &self.lift {
            Lift::Geometric => Lift::Geometric,
            Lift::Explicit(m) => Lift::Explicit(m.slice(ndarray::s![steps.., steps..]).to_owned()),
        };
        Ok(Self {
            grid,
            x,
            lift,
            gamma: self.gamma,
            hurst: self.hurst,
        })
    }

    /// Shift by a time on the grid.
    pub fn shift_time(&self, tau: f64) -> Result<Self> {
        self.shift(self.grid.index_of(tau)?)
    }

    /// The restriction to the first `steps` steps.
    pub fn restrict(&self, steps: usize) -> Result<Self> {
        let grid = self.grid.truncated(steps)?;
        let lift = match &self.lift {
            Lift::Geometric => Lift::Geometric,
            Lift::Explicit(m) => Lift::Explicit(m.slice(ndarray::s![..=steps, ..=steps]).to_owned()),
        };
        Ok(Self {
            grid,
            x: self.x[..=steps].to_vec(),
            lift,
            gamma: self.gamma,
            hurst: self.hurst,
        })
    }

    /// Every `stride`-th point of the driver.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !self.grid.steps().is_multiple_of(stride) {
            return Err(Error::GridMismatch(format!(
                "stride {stride} does not divide {} steps",
                self.grid.steps()
            )));
        }
        let grid = TimeGrid::new(self.grid.steps() / stride, self.grid.horizon())?;
        let idx: Vec<usize> = (0..grid.len()).map(|i| i * stride).collect();
        let lift = match &self.lift {
            Lift::Geometric => Lift::Geometric,
            Lift::Explicit(m) => Lift::Explicit(Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| {
                m[[idx[a], idx[b]]]
            })),
        };
        Ok(Self {
            grid,
            x: idx.iter().map(|&i| self.x[i]).collect(),
            lift,
            gamma: self.gamma,
            hurst: self.hurst,
        })
    }

    /// The driver `lambda X` with second-order process `lambda^2 XX`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let lift = match &self.lift {
            Lift::Geometric => Lift::Geometric,
            Lift::Explicit(m) => Lift::Explicit(m * (lambda * lambda)),
        };
        Self {
            grid: self.grid,
            x: self.x.iter().map(|v| v * lambda).collect(),
            lift,
            gamma: self.gamma,
            hurst: self.hurst,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Writes `time,X` rows at 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("time,X\n");
        for (i, x) in self.x.iter().enumerate() {
            let _ = writeln!(out, "{},{}", fmt_f64(self.grid.time(i)), fmt_f64(*x));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Round-trip float formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// The geometric lift of a sampled scalar path.
pub fn lift_geometric(grid: TimeGrid, x: Vec<f64>, gamma: f64) -> Result<RoughDriver> {
    RoughDriver::geometric(grid, x, gamma)
}

fn pair_sup(grid: &TimeGrid, gamma: f64, f: impl Fn(usize, usize) -> (f64, f64) + Sync) -> (f64, f64) {
    let n = grid.steps();
    let h = grid.step();
    (0..n)
        .into_par_iter()
        .map(|s| {
            let mut m = (0.0f64, 0.0f64);
            for t in s + 1..=n {
                let dt = (t - s) as f64 * h;
                let (a, b) = f(s, t);
                m.0 = m.0.max(a.abs() / dt.powf(gamma));
                m.1 = m.1.max(b.abs() / dt.powf(2.0 * gamma));
            }
            m
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// `d_gamma(X, Y)`: sup of first-order increments over `|t-s|^gamma` plus
/// sup of second-order differences over `|t-s|^(2 gamma)`.
pub fn rough_metric(d1: &RoughDriver, d2: &RoughDriver, gamma: f64) -> Result<f64> {
    d1.grid.ensure_same(&d2.grid)?;
    let (a, b) = pair_sup(&d1.grid, gamma, |s, t| {
        (
            d1.increment(s, t) - d2.increment(s, t),
            d1.second_order(s, t) - d2.second_order(s, t),
        )
    });
    Ok(a + b)
}

/// `[X]_gamma` over grid pairs.
pub fn holder_seminorm(d: &RoughDriver, gamma: f64) -> f64 {
    pair_sup(&d.grid, gamma, |s, t| (d.increment(s, t), 0.0)).0
}

/// `[XX]_(2 gamma)` over grid pairs.
pub fn second_order_seminorm(d: &RoughDriver, gamma: f64) -> f64 {
    pair_sup(&d.grid, gamma, |s, t| (0.0, d.second_order(s, t))).1
}

/// `rho_gamma(X) = d_gamma(X, 0)` at the driver's own exponent.
pub fn rho(d: &RoughDriver) -> f64 {
    let (a, b) = pair_sup(&d.grid, d.gamma, |s, t| (d.increment(s, t), d.second_order(s, t)));
    a + b
}

/// Covariance `E[dX_i dX_j]` of fBm increments on a uniform grid, which depends only on `|i - j|`.
fn increment_covariance(hurst: f64, h: f64, lag: usize) -> f64 {
    let k = lag as f64;
    let p = 2.0 * hurst;
    0.5 * h.powf(p) * ((k + 1.0).powf(p) + (k - 1.0).abs().powf(p) - 2.0 * k.powf(p))
}

/// Exact fBm sampler with a cached Cholesky factor of the increment covariance.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    grid: TimeGrid,
    hurst: f64,
    gamma: f64,
    factor: DMatrix<f64>,
}

impl FbmSampler {
    pub fn new(hurst: f64, steps: usize, horizon: f64, gamma_slack: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::config(format!("Hurst parameter must lie in (0, 1), got {hurst}")));
        }
        if steps < 2 {
            return Err(Error::config(format!("fBm sampling needs at least 2 steps, got {steps}")));
        }
        let gamma = hurst - gamma_slack;
        if !(gamma > 0.0 && gamma_slack >= 0.0) {
            return Err(Error::config(format!(
                "gamma slack {gamma_slack} leaves no positive exponent for H = {hurst}"
            )));
        }
        let grid = TimeGrid::new(steps, horizon)?;
        let h = grid.step();
        let lags: Vec<f64> = (0..steps).map(|l| increment_covariance(hurst, h, l)).collect();
        let cov = DMatrix::from_fn(steps, steps, |i, j| lags[i.abs_diff(j)]);
        let chol = cov.cholesky().ok_or(Error::CovarianceNotPd { hurst, steps })?;
        Ok(Self {
            grid,
            hurst,
            gamma,
            factor: chol.unpack(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The path driven by the seed's standard normal stream.
    pub fn sample(&self, seed: u64) -> RoughDriver {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DVector::from_fn(self.grid.steps(), |_, _| StandardNormal.sample(&mut rng));
        let inc = &self.factor * z;
        let mut x = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        x.push(0.0);
        for d in inc.iter() {
            acc += d;
            x.push(acc);
        }
        RoughDriver {
            grid: self.grid,
            x,
            lift: Lift::Geometric,
            gamma: self.gamma,
            hurst: Some(self.hurst),
        }
    }
}

/// One exact fBm sample with the geometric lift and `gamma = H - gamma_slack`.
pub fn sample_fbm(hurst: f64, steps: usize, horizon: f64, seed: u64, gamma_slack: f64) -> Result<RoughDriver> {
    Ok(FbmSampler::new(hurst, steps, horizon, gamma_slack)?.sample(seed))
}
