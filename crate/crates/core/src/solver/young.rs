use ndarray::{s, Array2};

use super::picard::{semigroup_flow, solution_csv, AprioriReport, WindowReport};
use super::{dirichlet_threshold, drift_convolve, ProblemSpec};
use crate::controlled::sup_norm;
use crate::convolution::{young_convolve, HolderPath};
use crate::driver::RoughDriver;
use crate::error::{Error, Result};
use crate::scale::BoundaryCondition;

#[derive(Debug, Clone)]
pub struct YoungSolution {
    pub path: HolderPath,
    pub windows: Vec<WindowReport>,
    pub apriori: AprioriReport,
}

impl YoungSolution {
    pub fn terminal(&self) -> &[f64] {
        self.path.value(self.path.grid().steps())
    }

    pub fn residual(&self) -> f64 {
        self.windows.iter().map(|w| w.residual).fold(0.0, f64::max)
    }

    pub fn to_csv(&self, stride: usize) -> Result<String> {
        let out = self.path.subsample(stride)?;
        Ok(solution_csv(out.grid(), |i| out.value(i)))
    }
}

struct Window<'a> {
    spec: &'a ProblemSpec,
    driver: &'a RoughDriver,
    flow: Array2<f64>,
    cols: [Vec<f64>; 2],
}

impl Window<'_> {
    fn holder(&self, values: Array2<f64>) -> Result<HolderPath> {
        HolderPath::new(
            *self.driver.grid(),
            self.spec.scale().clone(),
            self.spec.solution_index(),
            values,
        )
    }

    fn phi(&self, u: &HolderPath) -> Result<HolderPath> {
        let g = self.holder(self.spec.diffusion_field(u.values()))?;
        let z = young_convolve(&g, self.driver, 1)?;
        let d = drift_convolve(self.spec.scale(), self.driver.grid(), u.values(), self.spec.drift(), 1)?;
        self.holder(&self.flow + &d + z.values())
    }

    fn run(&self, y_start: &[f64]) -> Result<Option<(HolderPath, WindowReport)>> {
        let cfg = self.spec.picard();
        let gamma = self.driver.gamma();
        let n = self.driver.grid().len();
        let anchor_g = {
            let mut row = vec![0.0; y_start.len()];
            self.spec.g_into(y_start, &self.cols, &mut row);
            Array2::from_shape_fn((n, row.len()), |(_, k)| row[k])
        };
        let z0 = young_convolve(&self.holder(anchor_g)?, self.driver, 1)?;
        let mut u = self.holder(&self.flow + &z0.values())?;
        let mut incs: Vec<f64> = Vec::new();
        for _ in 0..cfg.max_iter {
            let next = self.phi(&u)?;
            let inc = next.difference(&u)?.holder_norm(gamma);
            incs.push(inc);
            u = next;
            if !inc.is_finite() || inc > cfg.divergence_factor * incs[0].max(f64::MIN_POSITIVE) {
                return Ok(None);
            }
            if inc < cfg.tol {
                let residual = self.phi(&u)?.difference(&u)?.holder_norm(gamma);
                let pos: Vec<f64> = incs.iter().copied().filter(|x| *x > 0.0).collect();
                let contraction = if pos.len() >= 2 {
                    (pos[pos.len() - 1] / pos[0]).powf(1.0 / (pos.len() - 1) as f64)
                } else {
                    0.0
                };
                let report = WindowReport {
                    start: 0.0,
                    start_index: 0,
                    steps: self.driver.grid().steps(),
                    iterations: incs.len(),
                    halvings: 0,
                    contraction,
                    increments: incs,
                    residual,
                };
                return Ok(Some((u, report)));
            }
        }
        Ok(None)
    }
}

/// Mild solution with Dirichlet boundary noise in the Young regime, by Picard
/// iteration in `||.||_(inf, -eta) + [.]_(gamma, -eta - gamma)` over
/// concatenated windows.
pub fn solve_young_dirichlet(spec: &ProblemSpec, driver: &RoughDriver) -> Result<YoungSolution> {
    if spec.scale().bc() != BoundaryCondition::Dirichlet {
        return Err(Error::config("the Young solver needs a Dirichlet scale"));
    }
    let threshold = dirichlet_threshold(spec.scale().config().p);
    if driver.gamma() <= threshold {
        return Err(Error::DirichletRegularity {
            gamma: driver.gamma(),
            threshold,
        });
    }
    let grid = *driver.grid();
    let n = grid.steps();
    let modes = spec.scale().modes();
    let index = spec.solution_index();
    let weights = spec.scale().weights(index);
    let y0 = spec.y0().coeffs.clone();
    let r = spec.scale().norm_of(&y0, index);
    let blowup = spec.picard().blowup_factor * r.max(1.0);
    let cols = spec.lift().extrapolated_columns();

    let mut y = Array2::zeros((n + 1, modes));
    let mut windows = Vec::new();
    let (mut level, mut start) = (0usize, 0usize);
    let mut y_start = y0;
    let mut running = 0.0f64;
    while start < n {
        let steps = (n >> level).max(1).min(n - start);
        let wd = driver.shift(start)?.restrict(steps)?;
        let window = Window {
            spec,
            driver: &wd,
            flow: semigroup_flow(spec, wd.grid(), &y_start),
            cols: cols.clone(),
        };
        match window.run(&y_start)? {
            Some((path, mut report)) => {
                report.start = grid.time(start);
                report.start_index = start;
                report.halvings = level;
                running = running.max(sup_norm(path.values(), &weights));
                if !running.is_finite() || running > blowup {
                    return Err(Error::AprioriBound {
                        time: grid.time(start + steps),
                        norm: running,
                    });
                }
                y.slice_mut(s![start..=start + steps, ..]).assign(&path.values());
                y_start = path.value(steps).to_vec();
                windows.push(report);
                start += steps;
            }
            None => {
                level += 1;
                if level > spec.picard().max_halvings || (n >> level) == 0 {
                    return Err(Error::ContractionFailure {
                        window_start: grid.time(start),
                        halvings: level - 1,
                        last_factor: f64::NAN,
                    });
                }
            }
        }
    }
    Ok(YoungSolution {
        path: HolderPath::new(grid, spec.scale().clone(), index, y)?,
        windows,
        apriori: AprioriReport {
            r,
            m1: if r > 0.0 { running / r } else { running },
            m2: 0.0,
            max_norm: running,
        },
    })
}
