use std::fmt::Write as _;
use std::path::Path;

use ndarray::{s, Array2};

use super::{drift_convolve, ProblemSpec};
use crate::controlled::{crp_norm, lift_extrapolate, sup_norm, ControlledPath, Space};
use crate::convolution::{fit_slope, rough_convolve};
use crate::driver::{fmt_f64, RoughDriver};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Diagnostics of one Picard window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub start: f64,
    pub start_index: usize,
    pub steps: usize,
    pub iterations: usize,
    /// Halving level the window was accepted at.
    pub halvings: usize,
    /// Geometric mean of successive increment ratios.
    pub contraction: f64,
    pub increments: Vec<f64>,
    /// `||Phi(y) - y||` at the accepted iterate.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub path: ControlledPath,
    pub tau: f64,
    pub report: WindowReport,
}

/// Fitted constants of `||y||_(inf, -eta) <= M1 r e^(M2 t)` over window ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriReport {
    pub r: f64,
    pub m1: f64,
    pub m2: f64,
    pub max_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub path: ControlledPath,
    pub windows: Vec<WindowReport>,
    pub apriori: AprioriReport,
}

impl Solution {
    pub fn terminal(&self) -> &[f64] {
        self.path.value(self.path.grid().steps())
    }

    pub fn residual(&self) -> f64 {
        self.windows.iter().map(|w| w.residual).fold(0.0, f64::max)
    }

    pub fn iterations(&self) -> usize {
        self.windows.iter().map(|w| w.iterations).sum()
    }

    pub fn output(&self, stride: usize) -> Result<ControlledPath> {
        self.path.subsample(stride)
    }

    /// `time,mode,coefficient` rows every `stride` grid steps.
    pub fn to_csv(&self, stride: usize) -> Result<String> {
        let out = self.output(stride)?;
        Ok(solution_csv(out.grid(), |i| out.value(i)))
    }

    pub fn write_csv(&self, path: &Path, stride: usize) -> Result<()> {
        std::fs::write(path, self.to_csv(stride)?).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn solution_csv<'a>(grid: &TimeGrid, row: impl Fn(usize) -> &'a [f64]) -> String {
    let mut s = String::from("time,mode,coefficient\n");
    for i in 0..grid.len() {
        let t = fmt_f64(grid.time(i));
        for (k, c) in row(i).iter().enumerate() {
            let _ = writeln!(s, "{t},{k},{}", fmt_f64(*c));
        }
    }
    s
}

/// `S_t y0` on every grid point.
pub(crate) fn semigroup_flow(spec: &ProblemSpec, grid: &TimeGrid, y0: &[f64]) -> Array2<f64> {
    let mu = spec.scale().eigenvalues();
    Array2::from_shape_fn((grid.len(), mu.len()), |(i, k)| (-mu[k] * grid.time(i)).exp() * y0[k])
}

enum Outcome<T> {
    Converged(T, WindowReport),
    Diverged(f64),
}

fn geometric_rate(incs: &[f64]) -> f64 {
    let pos: Vec<f64> = incs.iter().copied().filter(|x| *x > 0.0).collect();
    if pos.len() < 2 {
        return 0.0;
    }
    (pos[pos.len() - 1] / pos[0]).powf(1.0 / (pos.len() - 1) as f64)
}

struct Window<'a> {
    spec: &'a ProblemSpec,
    driver: &'a RoughDriver,
    flow: Array2<f64>,
}

impl Window<'_> {
    fn path(&self, y: Array2<f64>, yp: Array2<f64>) -> Result<ControlledPath> {
        ControlledPath::new(
            *self.driver.grid(),
            Space::Interior(self.spec.scale().clone()),
            self.spec.solution_index(),
            self.driver.gamma(),
            y,
            yp,
        )
    }

    /// `(S y0 + int S G(y0) dX, G(y0))`.
    fn anchor(&self, y_start: &[f64]) -> Result<ControlledPath> {
        let modes = self.spec.scale().modes();
        let cols = self.spec.lift().extrapolated_columns();
        let mut g0 = vec![0.0; modes];
        self.spec.g_into(y_start, &cols, &mut g0);
        let n = self.driver.grid().len();
        let g = Array2::from_shape_fn((n, modes), |(_, k)| g0[k]);
        let integrand = self.path(g.clone(), Array2::zeros((n, modes)))?;
        let z = rough_convolve(&integrand, self.driver, 1, 0.0)?;
        self.path(&self.flow + &z.values(), g)
    }

    /// `Phi(u, u') = (S y0 + int S f(u) dr + int S G(u) dX, G(u))`.
    fn phi(&self, u: &ControlledPath) -> Result<ControlledPath> {
        let g = lift_extrapolate(self.spec.diffusion(), u, self.spec.lift())?;
        let z = rough_convolve(&g, self.driver, 1, 0.0)?;
        let d = drift_convolve(self.spec.scale(), self.driver.grid(), u.values(), self.spec.drift(), 1)?;
        let (zv, zp) = z.into_parts();
        self.path(&self.flow + &d + &zv, zp)
    }

    fn run(&self, y_start: &[f64]) -> Result<Outcome<ControlledPath>> {
        let cfg = self.spec.picard();
        let mut u = self.anchor(y_start)?;
        let mut incs: Vec<f64> = Vec::new();
        let mut converged = false;
        for _ in 0..cfg.max_iter {
            let next = self.phi(&u)?;
            let inc = crp_norm(&next.difference(&u)?, self.driver)?;
            incs.push(inc);
            u = next;
            if !inc.is_finite() || inc > cfg.divergence_factor * incs[0].max(f64::MIN_POSITIVE) {
                return Ok(Outcome::Diverged(geometric_rate(&incs)));
            }
            if inc < cfg.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Ok(Outcome::Diverged(geometric_rate(&incs)));
        }
        let check = self.phi(&u)?;
        let residual = crp_norm(&check.difference(&u)?, self.driver)?;
        let (uv, _) = u.into_parts();
        let (_, gp) = check.into_parts();
        let path = self.path(uv, gp)?;
        let report = WindowReport {
            start: 0.0,
            start_index: 0,
            steps: self.driver.grid().steps(),
            iterations: incs.len(),
            halvings: 0,
            contraction: geometric_rate(&incs),
            increments: incs,
            residual,
        };
        Ok(Outcome::Converged(path, report))
    }
}

fn run_window(spec: &ProblemSpec, driver: &RoughDriver, y_start: &[f64]) -> Result<Outcome<ControlledPath>> {
    if driver.gamma() <= 1.0 / 3.0 || driver.gamma() > 0.5 {
        return Err(Error::config(format!(
            "rough solver needs a driver exponent in (1/3, 1/2], got {}",
            driver.gamma()
        )));
    }
    let window = Window {
        spec,
        driver,
        flow: semigroup_flow(spec, driver.grid(), y_start),
    };
    window.run(y_start)
}

/// Picard iteration on `[0, tau]`, halving `tau` from the full horizon until it converges.
pub fn solve_local(spec: &ProblemSpec, driver: &RoughDriver) -> Result<LocalSolution> {
    let n = driver.grid().steps();
    let mut last_factor = f64::NAN;
    for level in 0..=spec.picard().max_halvings {
        let steps = n >> level;
        if steps == 0 {
            break;
        }
        let window = driver.restrict(steps)?;
        match run_window(spec, &window, &spec.y0().coeffs)? {
            Outcome::Converged(path, mut report) => {
                report.halvings = level;
                return Ok(LocalSolution {
                    tau: window.grid().horizon(),
                    path,
                    report,
                });
            }
            Outcome::Diverged(f) => last_factor = f,
        }
    }
    Err(Error::ContractionFailure {
        window_start: 0.0,
        halvings: spec.picard().max_halvings,
        last_factor,
    })
}

/// Concatenated local solutions on the driver's whole horizon.
pub fn solve_global(spec: &ProblemSpec, driver: &RoughDriver) -> Result<Solution> {
    solve_from(spec, driver, &spec.y0().coeffs)
}

pub(crate) fn solve_from(spec: &ProblemSpec, driver: &RoughDriver, y0: &[f64]) -> Result<Solution> {
    let grid = *driver.grid();
    let n = grid.steps();
    let modes = spec.scale().modes();
    let index = spec.solution_index();
    let weights = spec.scale().weights(index);
    let r = spec.scale().norm_of(y0, index);
    let blowup = spec.picard().blowup_factor * r.max(1.0);

    let mut y = Array2::zeros((n + 1, modes));
    let mut yp = Array2::zeros((n + 1, modes));
    let mut windows = Vec::new();
    let mut level = 0usize;
    let mut start = 0usize;
    let mut y_start = y0.to_vec();
    let mut ends: Vec<(f64, f64)> = Vec::new();
    let mut running = 0.0f64;
    while start < n {
        let steps = (n >> level).max(1).min(n - start);
        let window = driver.shift(start)?.restrict(steps)?;
        match run_window(spec, &window, &y_start)? {
            Outcome::Converged(path, mut report) => {
                report.start = grid.time(start);
                report.start_index = start;
                report.halvings = level;
                let norm = sup_norm(path.values(), &weights);
                running = running.max(norm);
                let t_end = grid.time(start + steps);
                if !running.is_finite() || running > blowup {
                    return Err(Error::AprioriBound {
                        time: t_end,
                        norm: running,
                    });
                }
                ends.push((t_end, running));
                y.slice_mut(s![start..=start + steps, ..]).assign(&path.values());
                yp.slice_mut(s![start..=start + steps, ..]).assign(&path.derivatives());
                y_start = path.value(steps).to_vec();
                windows.push(report);
                start += steps;
            }
            Outcome::Diverged(f) => {
                level += 1;
                if level > spec.picard().max_halvings || (n >> level) == 0 {
                    return Err(Error::ContractionFailure {
                        window_start: grid.time(start),
                        halvings: level - 1,
                        last_factor: f,
                    });
                }
            }
        }
    }
    let path = ControlledPath::new(
        grid,
        Space::Interior(spec.scale().clone()),
        index,
        driver.gamma(),
        y,
        yp,
    )?;
    Ok(Solution {
        path,
        windows,
        apriori: fit_apriori(r, &ends),
    })
}

fn fit_apriori(r: f64, ends: &[(f64, f64)]) -> AprioriReport {
    let max_norm = ends.iter().map(|e| e.1).fold(0.0, f64::max);
    let scale = if r > 0.0 { r } else { 1.0 };
    let m2 = if ends.len() >= 2 && ends.iter().all(|e| e.1 > 0.0) {
        let t: Vec<f64> = ends.iter().map(|e| e.0).collect();
        let l: Vec<f64> = ends.iter().map(|e| e.1.ln()).collect();
        fit_slope(&t, &l).max(0.0)
    } else {
        0.0
    };
    let m1 = ends
        .iter()
        .map(|(t, v)| v * (-m2 * t).exp() / scale)
        .fold(0.0, f64::max);
    AprioriReport { r, m1, m2, max_norm }
}

/// `(contraction factor, iterations, converged)` of one window started at `y0`.
pub(crate) fn window_contraction(spec: &ProblemSpec, driver: &RoughDriver, y0: &[f64]) -> Result<(f64, usize, bool)> {
    Ok(match run_window(spec, driver, y0)? {
        Outcome::Converged(_, report) => (report.contraction, report.iterations, true),
        Outcome::Diverged(f) => (f, spec.picard().max_iter, false),
    })
}
