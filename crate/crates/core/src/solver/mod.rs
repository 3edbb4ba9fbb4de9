//! The mild formulation `dy = (A y + f(y)) dt + A_(-sigma) N F(y) dX` and its
//! Picard solvers.

mod analysis;
mod drift;
mod picard;
mod young;

use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::boundary::LiftOperator;
use crate::controlled::SmoothMap;
use crate::error::{Error, Result};
use crate::scale::{BoundaryCondition, Scale, ScaleConfig, SpectralVector};

pub use analysis::{
    cocycle_defect, contraction_profile, linear_growth_ratio, stability_distance, ContractionRow, LinearGrowth,
};
pub use drift::drift_convolve;
pub use picard::{solve_global, solve_local, AprioriReport, LocalSolution, Solution, WindowReport};
pub use young::{solve_young_dirichlet, YoungSolution};

/// Drift selector.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Zero,
    /// `f(y) = c y`.
    Linear(f64),
    /// `f(y) = amplitude tanh(<y, weights>) direction`.
    SmoothBounded {
        amplitude: f64,
        weights: Vec<f64>,
        direction: Vec<f64>,
    },
}

impl Drift {
    /// The bounded drift with `weights_k = 1 / (1 + k^2)` pushing along the first mode.
    pub fn smooth_bounded(scale: &Scale, amplitude: f64) -> Self {
        let weights = (0..scale.modes())
            .map(|i| {
                let k = scale.wave_number(i) as f64;
                1.0 / (1.0 + k * k)
            })
            .collect();
        let mut direction = vec![0.0; scale.modes()];
        direction[0] = 1.0;
        Drift::SmoothBounded {
            amplitude,
            weights,
            direction,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero) || matches!(self, Drift::Linear(c) if *c == 0.0)
    }

    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            Drift::Zero => out.fill(0.0),
            Drift::Linear(c) => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = c * v;
                }
            }
            Drift::SmoothBounded {
                amplitude,
                weights,
                direction,
            } => {
                let p: f64 = weights.iter().zip(y).map(|(a, b)| a * b).sum();
                let s = amplitude * p.tanh();
                for (o, d) in out.iter_mut().zip(direction) {
                    *o = s * d;
                }
            }
        }
    }
}

/// Diffusion selector; the smooth map is built on the solution index of the scale.
#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    Zero,
    Constant([f64; 2]),
    LinearTrace { amplitude: f64, trace_modes: usize },
    SquashedTrace {
        amplitude: f64,
        trace_modes: usize,
        saturation: f64,
    },
}

impl Diffusion {
    fn build(&self, scale: &Scale, domain_index: f64, gain: f64) -> SmoothMap {
        match *self {
            Diffusion::Zero => SmoothMap::constant([0.0, 0.0], domain_index, gain),
            Diffusion::Constant(g) => SmoothMap::constant(g, domain_index, gain),
            Diffusion::LinearTrace { amplitude, trace_modes } => {
                SmoothMap::linear_trace(SmoothMap::trace_weights(scale, trace_modes, amplitude), domain_index, gain)
            }
            Diffusion::SquashedTrace {
                amplitude,
                trace_modes,
                saturation,
            } => SmoothMap::squashed_trace(
                SmoothMap::trace_weights(scale, trace_modes, amplitude),
                saturation,
                domain_index,
                gain,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Stop once successive iterates differ by less than this in the path norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of times the window may be halved before giving up.
    pub max_halvings: usize,
    /// Increments growing beyond this multiple of the first one count as divergence.
    pub divergence_factor: f64,
    /// Sup norms beyond this multiple of `max(1, |y0|)` abort the run.
    pub blowup_factor: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 60,
            max_halvings: 8,
            divergence_factor: 1e3,
            blowup_factor: 1e8,
        }
    }
}

/// Operator, nonlinearities, exponents and initial datum of one problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    scale: Arc<Scale>,
    lift: LiftOperator,
    drift: Drift,
    delta1: f64,
    diffusion: SmoothMap,
    y0: SpectralVector,
    picard: PicardConfig,
}

/// Threshold `1 - 1/(2p)` a Dirichlet driver exponent has to exceed.
pub fn dirichlet_threshold(p: f64) -> f64 {
    1.0 - 1.0 / (2.0 * p)
}

impl ProblemSpec {
    /// Validates the index contracts and builds the scale.
    ///
    /// For Dirichlet data the driver exponent is checked against
    /// `1 - 1/(2p)` before the scale is built.
    pub fn new(
        cfg: ScaleConfig,
        drift: Drift,
        delta1: f64,
        diffusion: Diffusion,
        delta2: f64,
        y0: Vec<f64>,
        picard: PicardConfig,
    ) -> Result<Self> {
        if cfg.bc == BoundaryCondition::Dirichlet && cfg.gamma <= dirichlet_threshold(cfg.p) {
            return Err(Error::DirichletRegularity {
                gamma: cfg.gamma,
                threshold: dirichlet_threshold(cfg.p),
            });
        }
        let scale = Arc::new(Scale::new(cfg)?);
        let gamma = scale.gamma();
        let ex = scale.exponents();
        if scale.bc() == BoundaryCondition::Neumann && !(delta1 >= 2.0 * gamma && delta1 < 1.0) {
            return Err(Error::config(format!(
                "drift index gap {delta1} must lie in [2 gamma, 1) = [{}, 1)",
                2.0 * gamma
            )));
        }
        if scale.bc() == BoundaryCondition::Dirichlet && !(0.0..1.0).contains(&delta1) {
            return Err(Error::config(format!("drift index gap {delta1} must lie in [0, 1)")));
        }
        let gain_floor = ex.eta + 1.0 + 1.0 / scale.config().p;
        if delta2 <= gain_floor {
            return Err(Error::config(format!(
                "diffusion gain {delta2} must exceed eta + 1 + 1/p = {gain_floor}"
            )));
        }
        if y0.len() != scale.modes() || y0.iter().any(|c| !c.is_finite()) {
            return Err(Error::config(format!(
                "initial datum needs {} finite coefficients",
                scale.modes()
            )));
        }
        if let Drift::SmoothBounded { weights, direction, .. } = &drift {
            if weights.len() != scale.modes() || direction.len() != scale.modes() {
                return Err(Error::config("drift vectors must have one entry per mode"));
            }
        }
        let diffusion = diffusion.build(&scale, -ex.eta, delta2);
        let lift = LiftOperator::new(scale.clone())?;
        Ok(Self {
            y0: SpectralVector::new(y0, -ex.eta),
            scale,
            lift,
            drift,
            delta1,
            diffusion,
            picard,
        })
    }

    pub fn scale(&self) -> &Arc<Scale> {
        &self.scale
    }

    pub fn lift(&self) -> &LiftOperator {
        &self.lift
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn diffusion(&self) -> &SmoothMap {
        &self.diffusion
    }

    pub fn y0(&self) -> &SpectralVector {
        &self.y0
    }

    pub fn picard(&self) -> &PicardConfig {
        &self.picard
    }

    /// Solution index `-eta`.
    pub fn solution_index(&self) -> f64 {
        -self.scale.exponents().eta
    }

    pub fn with_y0(&self, y0: Vec<f64>) -> Result<Self> {
        if y0.len() != self.scale.modes() {
            return Err(Error::config("initial datum has the wrong number of modes"));
        }
        Ok(Self {
            y0: SpectralVector::new(y0, self.solution_index()),
            ..self.clone()
        })
    }

    pub fn with_picard(&self, picard: PicardConfig) -> Self {
        Self {
            picard,
            ..self.clone()
        }
    }

    /// `G(y_i)` for every row `y_i` of `values`.
    pub fn diffusion_field(&self, values: ArrayView2<'_, f64>) -> Array2<f64> {
        let cols = self.lift.extrapolated_columns();
        let mut out = Array2::zeros(values.dim());
        let mut row = vec![0.0; values.ncols()];
        for (i, v) in values.outer_iter().enumerate() {
            self.g_into(&v.to_vec(), &cols, &mut row);
            out.row_mut(i).assign(&ArrayView1::from(&row[..]));
        }
        out
    }

    /// `G(v) = A_(-sigma) N F(v)` written into `out`.
    pub(crate) fn g_into(&self, v: &[f64], cols: &[Vec<f64>; 2], out: &mut [f64]) {
        let f = self.diffusion.eval(v);
        for (k, o) in out.iter_mut().enumerate() {
            *o = cols[0][k] * f[0] + cols[1][k] * f[1];
        }
    }
}

/// Initial profiles used by the studies: coefficients `amplitude * ratio^k`.
pub fn geometric_profile(modes: usize, amplitude: f64, ratio: f64) -> Vec<f64> {
    (0..modes).map(|k| amplitude * ratio.powi(k as i32)).collect()
}
