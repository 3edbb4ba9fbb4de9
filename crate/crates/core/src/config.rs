//! Flat key/value run configuration (TOML syntax, no tables).

use std::ops::RangeInclusive;
use std::path::Path;

use serde::Deserialize;

use crate::driver::FbmSampler;
use crate::error::{Error, Result};
use crate::scale::{BoundaryCondition, ScaleConfig};
use crate::solver::{geometric_profile, Diffusion, Drift, PicardConfig, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Zero,
    Linear,
    SmoothBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    Zero,
    Constant,
    LinearTrace,
    SquashedTrace,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub modes: usize,
    pub bc: BoundaryCondition,
    pub p: f64,
    pub delta: f64,
    pub hurst: f64,
    pub steps: usize,
    pub horizon: f64,
    pub gamma_slack: f64,
    pub seed: u64,
    pub drift: DriftKind,
    pub drift_coeff: f64,
    pub delta1: f64,
    pub diffusion: DiffusionKind,
    pub diffusion_amplitude: f64,
    pub trace_modes: usize,
    pub saturation: f64,
    pub g0: f64,
    pub g1: f64,
    pub delta2: f64,
    pub y0_amplitude: f64,
    pub y0_ratio: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub picard_max_halvings: usize,
    pub output_stride: usize,
    pub levels: String,
    pub seeds: u64,
    pub cocycle_t: f64,
    pub cocycle_tau: f64,
    pub gamma_prime: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: -1.0,
            modes: 32,
            bc: BoundaryCondition::Neumann,
            p: 2.0,
            delta: 0.05,
            hurst: 0.45,
            steps: 512,
            horizon: 1.0,
            gamma_slack: 0.05,
            seed: 7,
            drift: DriftKind::Zero,
            drift_coeff: -1.0,
            delta1: 0.8,
            diffusion: DiffusionKind::LinearTrace,
            diffusion_amplitude: 0.5,
            trace_modes: 4,
            saturation: 1.0,
            g0: 0.0,
            g1: 1.0,
            delta2: 2.5,
            y0_amplitude: 1.0,
            y0_ratio: 0.5,
            picard_tol: 1e-9,
            picard_max_iter: 60,
            picard_max_halvings: 8,
            output_stride: 1,
            levels: "4..8".into(),
            seeds: 20,
            cocycle_t: 0.25,
            cocycle_tau: 0.25,
            gamma_prime: 0.35,
        }
    }
}

/// Parses `a..b` (inclusive) into a level range.
pub fn parse_levels(s: &str) -> Result<RangeInclusive<u32>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::config(format!("levels must look like a..b, got {s:?}")))?;
    let parse = |x: &str| {
        x.trim()
            .trim_start_matches('=')
            .parse::<u32>()
            .map_err(|_| Error::config(format!("bad level bound {x:?}")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b || b > 24 {
        return Err(Error::config(format!("level range {a}..{b} is empty or too large")));
    }
    Ok(a..=b)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::config(format!("hurst must lie in (0, 1), got {}", self.hurst)));
        }
        if self.steps < 2 {
            return Err(Error::config("steps must be at least 2"));
        }
        if self.horizon.is_nan() || self.horizon <= 0.0 {
            return Err(Error::config("horizon must be positive"));
        }
        if self.output_stride == 0 || !self.steps.is_multiple_of(self.output_stride) {
            return Err(Error::config("output_stride must divide steps"));
        }
        if self.seeds == 0 {
            return Err(Error::config("seeds must be at least 1"));
        }
        parse_levels(&self.levels)?;
        Ok(())
    }

    pub fn level_range(&self) -> Result<RangeInclusive<u32>> {
        parse_levels(&self.levels)
    }

    /// Hoelder exponent attributed to the sampled driver.
    pub fn gamma(&self) -> f64 {
        self.hurst - self.gamma_slack
    }

    pub fn scale_config(&self) -> ScaleConfig {
        ScaleConfig {
            a: self.a,
            b: self.b,
            modes: self.modes,
            bc: self.bc,
            p: self.p,
            delta: self.delta,
            gamma: self.gamma(),
        }
    }

    pub fn sampler(&self) -> Result<FbmSampler> {
        FbmSampler::new(self.hurst, self.steps, self.horizon, self.gamma_slack)
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            tol: self.picard_tol,
            max_iter: self.picard_max_iter,
            max_halvings: self.picard_max_halvings,
            ..PicardConfig::default()
        }
    }

    pub fn diffusion_choice(&self) -> Diffusion {
        match self.diffusion {
            DiffusionKind::Zero => Diffusion::Zero,
            DiffusionKind::Constant => Diffusion::Constant([self.g0, self.g1]),
            DiffusionKind::LinearTrace => Diffusion::LinearTrace {
                amplitude: self.diffusion_amplitude,
                trace_modes: self.trace_modes,
            },
            DiffusionKind::SquashedTrace => Diffusion::SquashedTrace {
                amplitude: self.diffusion_amplitude,
                trace_modes: self.trace_modes,
                saturation: self.saturation,
            },
        }
    }

    pub fn initial_datum(&self) -> Vec<f64> {
        geometric_profile(self.modes, self.y0_amplitude, self.y0_ratio)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        // the drift needs the built scale, so build a drift-free spec first
        let base = ProblemSpec::new(
            self.scale_config(),
            Drift::Zero,
            self.delta1,
            self.diffusion_choice(),
            self.delta2,
            self.initial_datum(),
            self.picard(),
        )?;
        let drift = match self.drift {
            DriftKind::Zero => return Ok(base),
            DriftKind::Linear => Drift::Linear(self.drift_coeff),
            DriftKind::SmoothBounded => Drift::smooth_bounded(base.scale(), self.drift_coeff),
        };
        ProblemSpec::new(
            self.scale_config(),
            drift,
            self.delta1,
            self.diffusion_choice(),
            self.delta2,
            self.initial_datum(),
            self.picard(),
        )
    }
}
