//! Batch studies behind the command-line front end.
//!
//! Every study is a pure function of a [`RunConfig`]; it returns the CSV
//! artifacts it produced together with pass/fail checks. Nothing here touches
//! the filesystem except [`StudyOutput::write_to`].

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::{lift_controlled, neumann_map, BoundaryVector, LiftOperator};
use crate::config::RunConfig;
use crate::controlled::{lift_extrapolate, ControlledPath, Space};
use crate::convolution::{
    fit_slope, rough_convolve, sewing_convergence, young_sewing_convergence, HolderPath, SewingReport,
};
use crate::driver::{fmt_f64, rough_metric, FbmSampler, RoughDriver};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scale::{BoundaryCondition, Scale, ScaleConfig};
use crate::semigroup::{logspace, smoothing_constants};
use crate::solver::{cocycle_defect, solve_global, solve_young_dirichlet, stability_distance, ProblemSpec};

/// One pass/fail comparison of a measured value against a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
        }
    }

    /// `CHECK <name> PASS|FAIL value=<v> threshold=<t>`.
    pub fn summary_line(&self) -> String {
        format!(
            "CHECK {} {} value={} threshold={}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            fmt_f64(self.value),
            fmt_f64(self.threshold)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyOutput {
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl StudyOutput {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_str())
    }

    pub fn summary(&self) -> String {
        self.checks.iter().map(|c| c.summary_line() + "\n").collect()
    }

    /// Writes every artifact plus `summary.txt` into an existing directory.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
            ));
        }
        for (name, body) in self.files.iter().chain(std::iter::once(&("summary.txt".to_string(), self.summary()))) {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// The identically vanishing driver on `grid`.
pub fn zero_driver(grid: TimeGrid, gamma: f64) -> Result<RoughDriver> {
    RoughDriver::geometric(grid, vec![0.0; grid.len()], gamma)
}

/// The boundary path `(sin X_t, cos X_t)` with derivative `(cos X_t, -sin X_t)`.
pub fn trigonometric_boundary_path(driver: &RoughDriver) -> Result<ControlledPath> {
    let x = driver.values();
    let y = Array2::from_shape_fn((x.len(), 2), |(i, j)| if j == 0 { x[i].sin() } else { x[i].cos() });
    let yp = Array2::from_shape_fn((x.len(), 2), |(i, j)| if j == 0 { x[i].cos() } else { -x[i].sin() });
    ControlledPath::new(*driver.grid(), Space::Boundary, 0.0, driver.gamma(), y, yp)
}

fn sample_with(cfg: &RunConfig, steps: usize, seed: u64) -> Result<RoughDriver> {
    Ok(FbmSampler::new(cfg.hurst, steps, cfg.horizon, cfg.gamma_slack)?.sample(seed))
}

/// Driver CSV and its metadata sidecar.
pub fn sample_study(cfg: &RunConfig) -> Result<StudyOutput> {
    let driver = cfg.sampler()?.sample(cfg.seed);
    let mut csv = String::from("time,X\n");
    for (i, x) in driver.values().iter().enumerate() {
        let _ = writeln!(csv, "{},{}", fmt_f64(driver.grid().time(i)), fmt_f64(*x));
    }
    let meta = format!(
        "hurst = {}\nsteps = {}\nhorizon = {}\ngamma = {}\nseed = {}\nlift = \"{}\"\n",
        fmt_f64(cfg.hurst),
        cfg.steps,
        fmt_f64(cfg.horizon),
        fmt_f64(driver.gamma()),
        cfg.seed,
        driver.lift_tag()
    );
    Ok(StudyOutput {
        files: vec![("driver.csv".into(), csv), ("driver.meta.toml".into(), meta)],
        checks: vec![Check::at_most("chen_defect", driver.chen_defect(), 1e-10)],
    })
}

fn windows_csv(windows: &[crate::solver::WindowReport]) -> String {
    let mut s = String::from("start,steps,iterations,halvings,contraction,residual\n");
    for w in windows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(w.start),
            w.steps,
            w.iterations,
            w.halvings,
            fmt_f64(w.contraction),
            fmt_f64(w.residual)
        );
    }
    s
}

/// Global solve with the configured driver.
pub fn solve_study(cfg: &RunConfig) -> Result<StudyOutput> {
    let spec = cfg.problem()?;
    let driver = cfg.sampler()?.sample(cfg.seed);
    let tol = cfg.picard_tol;
    match spec.scale().bc() {
        BoundaryCondition::Neumann => {
            let sol = solve_global(&spec, &driver)?;
            let g = spec.diffusion_field(sol.path.values());
            let identity = (&g - &sol.path.derivatives()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(StudyOutput {
                files: vec![
                    ("solution.csv".into(), sol.to_csv(cfg.output_stride)?),
                    ("windows.csv".into(), windows_csv(&sol.windows)),
                ],
                checks: vec![
                    Check::at_most("picard_residual", sol.residual(), tol),
                    Check::at_most("derivative_identity", identity, 1e-12),
                    Check::at_most("apriori_norm", sol.apriori.max_norm, spec.picard().blowup_factor * sol.apriori.r.max(1.0)),
                ],
            })
        }
        BoundaryCondition::Dirichlet => {
            let sol = solve_young_dirichlet(&spec, &driver)?;
            let report = young_field_sewing(&spec, &sol.path, &driver, cfg)?;
            let gamma = driver.gamma();
            Ok(StudyOutput {
                files: vec![
                    ("solution.csv".into(), sol.to_csv(cfg.output_stride)?),
                    ("windows.csv".into(), windows_csv(&sol.windows)),
                    ("convergence.csv".into(), report.to_csv()),
                ],
                checks: vec![
                    Check::at_most("picard_residual", sol.residual(), tol),
                    Check::at_least("young_sewing_slope", report.slope, 2.0 * gamma - 1.0 - 0.1),
                ],
            })
        }
    }
}

/// Dyadic defects of `int S G(y) dX` along a Young solution, at the final time.
pub fn young_field_sewing(
    spec: &ProblemSpec,
    y: &HolderPath,
    driver: &RoughDriver,
    cfg: &RunConfig,
) -> Result<SewingReport> {
    let g = HolderPath::new(*y.grid(), spec.scale().clone(), y.alpha(), spec.diffusion_field(y.values()))?;
    young_sewing_convergence(&g, driver, driver.grid().steps(), cfg.level_range()?, 0.0)
}

/// Dyadic sewing defects of a lifted boundary integrand over several seeds.
pub fn convergence_study(cfg: &RunConfig) -> Result<StudyOutput> {
    let levels = cfg.level_range()?;
    let scale = std::sync::Arc::new(Scale::new(cfg.scale_config())?);
    let lift = LiftOperator::new(scale)?;
    let sampler = cfg.sampler()?;
    let n = cfg.steps;
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + cfg.seeds).collect();
    let reports: Vec<SewingReport> = seeds
        .par_iter()
        .map(|&seed| {
            let driver = sampler.sample(seed);
            let lifted = lift_controlled(&lift, &trigonometric_boundary_path(&driver)?)?;
            if cfg.bc == BoundaryCondition::Dirichlet {
                let h = HolderPath::new(*driver.grid(), lift.scale().clone(), lifted.alpha(), lifted.values().to_owned())?;
                young_sewing_convergence(&h, &driver, n, levels.clone(), 0.0)
            } else {
                sewing_convergence(&lifted, &driver, n, levels.clone(), 0.0)
            }
        })
        .collect::<Result<_>>()?;

    let gamma = cfg.gamma();
    let threshold = match cfg.bc {
        BoundaryCondition::Neumann => 3.0 * gamma - 1.0 - 0.1,
        BoundaryCondition::Dirichlet => 2.0 * gamma - 1.0 - 0.1,
    };
    // geometric mean of the defects over seeds, level by level
    let rows: Vec<(u32, f64)> = reports[0]
        .rows
        .iter()
        .enumerate()
        .map(|(i, (level, _))| {
            let mean_log = reports.iter().map(|r| r.rows[i].1.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / reports.len() as f64;
            (*level, mean_log.exp())
        })
        .collect();
    let increases = rows.windows(2).filter(|w| w[1].1 >= w[0].1).count();
    let mean = SewingReport {
        beta: 0.0,
        index: reports[0].index,
        slope: fit_slope(
            &rows.iter().map(|r| r.0 as f64).collect::<Vec<_>>(),
            &rows.iter().map(|r| -r.1.log2()).collect::<Vec<_>>(),
        ),
        rows,
    };
    let mut slopes = String::from("seed,slope\n");
    for (seed, r) in seeds.iter().zip(&reports) {
        let _ = writeln!(slopes, "{seed},{}", fmt_f64(r.slope));
    }
    let min_slope = reports.iter().map(|r| r.slope).fold(f64::INFINITY, f64::min);
    Ok(StudyOutput {
        files: vec![("convergence.csv".into(), mean.to_csv()), ("slopes.csv".into(), slopes)],
        checks: vec![
            Check::at_least("sewing_slope_min", min_slope, threshold),
            Check::at_most("defect_increases", increases as f64, 0.0),
        ],
    })
}

/// Cocycle defect on the configured grid and on its refinement, plus the zero-noise defect.
pub fn cocycle_study(cfg: &RunConfig) -> Result<StudyOutput> {
    let spec = cfg.problem()?;
    let fine = sample_with(cfg, 2 * cfg.steps, cfg.seed)?;
    let coarse = fine.subsample(2)?;
    let (t, tau) = (cfg.cocycle_t, cfg.cocycle_tau);
    let defects: Vec<(usize, f64)> = [&coarse, &fine]
        .par_iter()
        .map(|d| Ok((d.grid().steps(), cocycle_defect(&spec, d, t, tau)?)))
        .collect::<Result<_>>()?;
    let zero = cocycle_defect(&spec, &zero_driver(*coarse.grid(), coarse.gamma())?, t, tau)?;
    let ratio = defects[0].1 / defects[1].1;
    let mut csv = String::from("steps,defect\n");
    for (n, d) in &defects {
        let _ = writeln!(csv, "{n},{}", fmt_f64(*d));
    }
    Ok(StudyOutput {
        files: vec![("cocycle.csv".into(), csv)],
        checks: vec![
            Check::at_most("zero_noise_defect", zero, 1e-8),
            Check::at_least("refinement_ratio", ratio, 1.5),
        ],
    })
}

/// Largest relative deviation of `(x, y)` points from the least-squares line through the origin.
pub fn linearity_deviation(points: &[(f64, f64)]) -> (f64, f64) {
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let c = sxy / sxx;
    let dev = points
        .iter()
        .map(|(x, y)| (y / (c * x) - 1.0).abs())
        .fold(0.0, f64::max);
    (c, dev)
}

/// Solution response to scaled drivers and to perturbed initial data.
pub fn stability_study(cfg: &RunConfig) -> Result<StudyOutput> {
    let spec = cfg.problem()?;
    let driver = cfg.sampler()?.sample(cfg.seed);
    let base = solve_global(&spec, &driver)?;
    let gp = cfg.gamma_prime;
    let gamma = driver.gamma();

    let lambdas = [0.95, 0.99, 1.01, 1.05];
    let driver_pts: Vec<(f64, f64, f64)> = lambdas
        .par_iter()
        .map(|&l| {
            let d = driver.scaled(l);
            let v = solve_global(&spec, &d)?;
            Ok((l, rough_metric(&d, &driver, gamma)?, stability_distance(&v.path, &base.path, &d, &driver, gp)?))
        })
        .collect::<Result<_>>()?;

    let eta = spec.solution_index();
    let y0 = spec.y0().coeffs.clone();
    let r0 = spec.scale().norm_of(&y0, eta);
    let direction: Vec<f64> = (0..y0.len()).map(|k| if k == 1 { 1.0 } else { 0.0 }).collect();
    let unit = spec.scale().norm_of(&direction, eta);
    let eps = [0.01, 0.02, 0.05, 0.1];
    let datum_pts: Vec<(f64, f64, f64)> = eps
        .par_iter()
        .map(|&e| {
            let shifted: Vec<f64> = y0.iter().zip(&direction).map(|(a, d)| a + e * r0 / unit * d).collect();
            let input = spec.scale().norm_of(&shifted.iter().zip(&y0).map(|(a, b)| a - b).collect::<Vec<_>>(), eta);
            let v = solve_global(&spec.with_y0(shifted)?, &driver)?;
            Ok((e, input, stability_distance(&v.path, &base.path, &driver, &driver, gp)?))
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("kind,parameter,input_distance,output_distance\n");
    for (kind, pts) in [("driver", &driver_pts), ("datum", &datum_pts)] {
        for (p, i, o) in pts.iter() {
            let _ = writeln!(csv, "{kind},{},{},{}", fmt_f64(*p), fmt_f64(*i), fmt_f64(*o));
        }
    }
    let xy = |pts: &[(f64, f64, f64)]| pts.iter().map(|p| (p.1, p.2)).collect::<Vec<_>>();
    let (_, dev_driver) = linearity_deviation(&xy(&driver_pts));
    let (_, dev_datum) = linearity_deviation(&xy(&datum_pts));
    Ok(StudyOutput {
        files: vec![("stability.csv".into(), csv)],
        checks: vec![
            Check::at_most("driver_linearity", dev_driver, 0.2),
            Check::at_most("datum_linearity", dev_datum, 0.2),
        ],
    })
}

/// Fast structural self-checks at the configured sizes.
pub fn invariants_study(cfg: &RunConfig) -> Result<StudyOutput> {
    let mut checks = Vec::new();
    let small = cfg.steps.min(128);
    let sampler = FbmSampler::new(cfg.hurst, small, cfg.horizon, cfg.gamma_slack)?;

    let chen = (0..5)
        .into_par_iter()
        .map(|i| sampler.sample(cfg.seed + i).chen_defect())
        .reduce(|| 0.0, f64::max);
    checks.push(Check::at_most("chen_defect", chen, 1e-10));

    let scale = Scale::new(cfg.scale_config())?;
    checks.push(Check::at_most("interpolation_constant", interpolation_constant(&scale, cfg.seed, 1000), 1.0 + 1e-12));

    let times = logspace(1e-4, 1.0, 60);
    let mut smoothing = 0.0f64;
    let mut continuity = 0.0f64;
    for sigma in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let r = smoothing_constants(&scale, sigma, 0.0, &times);
        smoothing = smoothing.max(r.smoothing_sup / r.smoothing_bound);
        continuity = continuity.max(r.continuity_sup / r.continuity_bound);
    }
    checks.push(Check::at_most("smoothing_ratio", smoothing, 1.0 + 1e-12));
    checks.push(Check::at_most("continuity_ratio", continuity, 1.0 + 1e-12));

    if cfg.bc == BoundaryCondition::Neumann {
        let (below, above) = neumann_norm_ratios(cfg)?;
        checks.push(Check::at_most("neumann_ratio_below_threshold", below, 1.05));
        checks.push(Check::at_least("neumann_ratio_above_threshold", above, 1.15));

        let spec = cfg.problem()?;
        let driver = sampler.sample(cfg.seed);
        let u = ControlledPath::constant(
            *driver.grid(),
            Space::Interior(spec.scale().clone()),
            spec.solution_index(),
            driver.gamma(),
            &spec.y0().coeffs,
        )?;
        checks.push(Check::at_most("interchange_identity", interchange_defect(&spec, &u, &driver)?, 1e-10));

        let sol = solve_global(&spec, &driver)?;
        let g = spec.diffusion_field(sol.path.values());
        let identity = (&g - &sol.path.derivatives()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        checks.push(Check::at_most("derivative_identity", identity, 1e-12));
        checks.push(Check::at_most("picard_residual", sol.residual(), cfg.picard_tol));
    }
    Ok(StudyOutput {
        files: Vec::new(),
        checks,
    })
}

/// Worst ratio `|v|_(a2) / (|v|_(a1)^theta |v|_(a3)^(1 - theta))` over random draws.
pub fn interpolation_constant(scale: &Scale, seed: u64, draws: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = scale.modes();
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let v: Vec<f64> = (0..modes)
            .map(|k| rng.random_range(-1.0..1.0) / (1.0 + k as f64).powi(2))
            .collect();
        let a1 = rng.random_range(-1.5..0.5);
        let a3 = a1 + rng.random_range(0.1..1.5);
        let theta: f64 = rng.random_range(0.0..1.0);
        let a2 = theta * a1 + (1.0 - theta) * a3;
        let bound = scale.norm_of(&v, a1).powf(theta) * scale.norm_of(&v, a3).powf(1.0 - theta);
        worst = worst.max(scale.norm_of(&v, a2) / bound);
    }
    worst
}

/// Truncated `|N(0, 1)|_alpha` ratios between 256 and 64 modes at `alpha = 0.70` and `0.80`.
pub fn neumann_norm_ratios(cfg: &RunConfig) -> Result<(f64, f64)> {
    let norm = |modes: usize, alpha: f64| -> Result<f64> {
        let scale = Scale::new(ScaleConfig {
            modes,
            ..cfg.scale_config()
        })?;
        let v = neumann_map(&BoundaryVector::new(0.0, 1.0, 0.0), &scale)?;
        Ok(scale.norm(&v, alpha))
    };
    Ok((norm(256, 0.70)? / norm(64, 0.70)?, norm(256, 0.80)? / norm(64, 0.80)?))
}

/// Relative gap between `A int S N F(u) dX` and `int S A_(-sigma) N F(u) dX`.
pub fn interchange_defect(spec: &ProblemSpec, u: &ControlledPath, driver: &RoughDriver) -> Result<f64> {
    let boundary = crate::controlled::compose_smooth(spec.diffusion(), u)?;
    let lifted = lift_controlled(spec.lift(), &boundary)?;
    let left = rough_convolve(&lifted, driver, 1, 0.0)?;
    let right = rough_convolve(&lift_extrapolate(spec.diffusion(), u, spec.lift())?, driver, 1, 0.0)?;
    let mu = spec.scale().eigenvalues();
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (lrow, rrow) in left.values().outer_iter().zip(right.values().outer_iter()) {
        for k in 0..mu.len() {
            let a = -mu[k] * lrow[k];
            num = num.max((a - rrow[k]).abs());
            den = den.max(rrow[k].abs());
        }
    }
    Ok(if den > 0.0 { num / den } else { num })
}
