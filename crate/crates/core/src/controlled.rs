//! Controlled rough paths over the spectral scale (or over the two-point
//! boundary), their norm, and composition with smooth maps.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::boundary::LiftOperator;
use crate::driver::RoughDriver;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scale::{BoundaryCondition, Scale, SpectralVector};

/// Where path values live.
#[derive(Debug, Clone)]
pub enum Space {
    /// Eigenbasis coefficients of the scale.
    Interior(Arc<Scale>),
    /// Boundary data `(g0, g1)`; every boundary index carries the Euclidean norm.
    Boundary,
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Interior(s) => s.modes(),
            Space::Boundary => 2,
        }
    }

    /// Squared-norm weights at index `alpha`.
    pub fn weights(&self, alpha: f64) -> Vec<f64> {
        match self {
            Space::Interior(s) => s.weights(alpha),
            Space::Boundary => vec![1.0; 2],
        }
    }

    pub fn scale(&self) -> Option<&Arc<Scale>> {
        match self {
            Space::Interior(s) => Some(s),
            Space::Boundary => None,
        }
    }

    fn is_boundary(&self) -> bool {
        matches!(self, Space::Boundary)
    }
}

pub(crate) fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(c, w)| w * c * c).sum::<f64>().sqrt()
}

/// A grid-sampled pair `(y, y')` with `y` in `B_alpha` and `y'` in `B_(alpha - gamma)`.
#[derive(Debug, Clone)]
pub struct ControlledPath {
    grid: TimeGrid,
    space: Space,
    alpha: f64,
    gamma: f64,
    y: Array2<f64>,
    y_prime: Array2<f64>,
}

impl ControlledPath {
    pub fn new(
        grid: TimeGrid,
        space: Space,
        alpha: f64,
        gamma: f64,
        y: Array2<f64>,
        y_prime: Array2<f64>,
    ) -> Result<Self> {
        let shape = (grid.len(), space.dim());
        if y.dim() != shape || y_prime.dim() != shape {
            return Err(Error::GridMismatch(format!(
                "path arrays {:?}/{:?} do not match grid x space {:?}",
                y.dim(),
                y_prime.dim(),
                shape
            )));
        }
        Ok(Self {
            grid,
            space,
            alpha,
            gamma,
            y: y.as_standard_layout().into_owned(),
            y_prime: y_prime.as_standard_layout().into_owned(),
        })
    }

    /// The constant path `y = v`, `y' = 0`.
    pub fn constant(grid: TimeGrid, space: Space, alpha: f64, gamma: f64, v: &[f64]) -> Result<Self> {
        let dim = space.dim();
        if v.len() != dim {
            return Err(Error::SpaceMismatch(format!("value has {} entries, space {dim}", v.len())));
        }
        let mut y = Array2::zeros((grid.len(), dim));
        for mut row in y.rows_mut() {
            row.assign(&ndarray::ArrayView1::from(v));
        }
        let yp = Array2::zeros((grid.len(), dim));
        Self::new(grid, space, alpha, gamma, y, yp)
    }

    /// The path `y_t = base + dir * X_t`, `y' = dir`, whose remainder vanishes.
    pub fn linear_in_driver(
        driver: &RoughDriver,
        space: Space,
        alpha: f64,
        base: &[f64],
        dir: &[f64],
    ) -> Result<Self> {
        let grid = *driver.grid();
        let dim = space.dim();
        let mut y = Array2::zeros((grid.len(), dim));
        let mut yp = Array2::zeros((grid.len(), dim));
        for (i, x) in driver.values().iter().enumerate() {
            for k in 0..dim {
                y[[i, k]] = base[k] + dir[k] * x;
                yp[[i, k]] = dir[k];
            }
        }
        Self::new(grid, space, alpha, driver.gamma(), y, yp)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn derivatives(&self) -> ArrayView2<'_, f64> {
        self.y_prime.view()
    }

    pub fn value(&self, i: usize) -> &[f64] {
        self.y.row(i).to_slice().expect("standard layout")
    }

    pub fn derivative(&self, i: usize) -> &[f64] {
        self.y_prime.row(i).to_slice().expect("standard layout")
    }

    pub fn value_vector(&self, i: usize) -> SpectralVector {
        SpectralVector::new(self.value(i).to_vec(), self.alpha)
    }

    /// `R^y_{t,s} = y_t - y_s - y'_s X_{t,s}`.
    pub fn remainder(&self, driver: &RoughDriver, s: usize, t: usize) -> Vec<f64> {
        let dx = driver.increment(s, t);
        (0..self.dim())
            .map(|k| self.y[[t, k]] - self.y[[s, k]] - self.y_prime[[s, k]] * dx)
            .collect()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub(crate) fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.y, self.y_prime)
    }

    fn ensure_compatible(&self, other: &ControlledPath) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.dim() != other.dim() || self.space.is_boundary() != other.space.is_boundary() {
            return Err(Error::SpaceMismatch("paths live in different spaces".into()));
        }
        Ok(())
    }

    /// `(y - z, y' - z')`, tagged with this path's index.
    pub fn difference(&self, other: &ControlledPath) -> Result<ControlledPath> {
        self.ensure_compatible(other)?;
        Ok(Self {
            y: &self.y - &other.y,
            y_prime: &self.y_prime - &other.y_prime,
            ..self.clone()
        })
    }

    pub fn scaled(&self, factor: f64) -> ControlledPath {
        Self {
            y: &self.y * factor,
            y_prime: &self.y_prime * factor,
            ..self.clone()
        }
    }

    /// Samples every `stride`-th grid point.
    pub fn subsample(&self, stride: usize) -> Result<ControlledPath> {
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
            y: self.y.select(Axis(0), &idx),
            y_prime: self.y_prime.select(Axis(0), &idx),
            ..self.clone()
        })
    }

    /// The restriction to the first `steps` steps.
    pub fn restrict(&self, steps: usize) -> Result<ControlledPath> {
        let grid = self.grid.truncated(steps)?;
        Ok(Self {
            grid,
            y: self.y.slice(ndarray::s![..=steps, ..]).to_owned(),
            y_prime: self.y_prime.slice(ndarray::s![..=steps, ..]).to_owned(),
            ..self.clone()
        })
    }
}

/// The five terms of the controlled-path norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrpNorms {
    pub sup_value: f64,
    pub sup_derivative: f64,
    pub holder_derivative: f64,
    pub remainder_gamma: f64,
    pub remainder_two_gamma: f64,
}

impl CrpNorms {
    pub fn total(&self) -> f64 {
        self.sup_value
            + self.sup_derivative
            + self.holder_derivative
            + self.remainder_gamma
            + self.remainder_two_gamma
    }
}

/// Suprema over grid pairs of a Hoelder quotient and two remainder quotients.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct PairSeminorms {
    pub holder: f64,
    pub rem_low: f64,
    pub rem_high: f64,
}

/// Norm weights and Hoelder exponents for [`pair_seminorms`].
pub(crate) struct SeminormWeights<'a> {
    pub holder: &'a [f64],
    pub rem_low: &'a [f64],
    pub rem_high: &'a [f64],
    pub exponents: [f64; 3],
}

/// Scans all pairs `s < t`:
/// `holder = sup |h_t - h_s| / (t-s)^e0`, and for
/// `R_{t,s} = y_t - y_s - sum_j d_j(s) (x_j(t) - x_j(s))`,
/// `rem_low = sup |R| / (t-s)^e1`, `rem_high = sup |R| / (t-s)^e2`.
pub(crate) fn pair_seminorms(
    grid: &TimeGrid,
    y: ArrayView2<'_, f64>,
    terms: &[(ArrayView2<'_, f64>, &[f64])],
    holder_target: ArrayView2<'_, f64>,
    weights: &SeminormWeights<'_>,
) -> PairSeminorms {
    assert!(terms.len() <= 2, "at most two derivative terms are supported");
    let n = grid.steps();
    let dim = y.ncols();
    let h = grid.step();
    // squared reciprocals of the lag powers, so the scan compares squared quotients
    let inv_sq: Vec<[f64; 3]> = (0..=n)
        .map(|l| {
            let dt = l as f64 * h;
            weights.exponents.map(|e| dt.powf(-2.0 * e))
        })
        .collect();
    let y = y.as_standard_layout();
    let holder_target = holder_target.as_standard_layout();
    let derivs: Vec<_> = terms.iter().map(|(d, _)| d.as_standard_layout()).collect();
    let yf = y.as_slice().expect("standard layout");
    let hf = holder_target.as_slice().expect("standard layout");
    let df: Vec<&[f64]> = derivs.iter().map(|d| d.as_slice().expect("standard layout")).collect();
    let xs: Vec<&[f64]> = terms.iter().map(|(_, x)| *x).collect();
    let (wh, wl, wu) = (weights.holder, weights.rem_low, weights.rem_high);

    let best = (0..n)
        .into_par_iter()
        .map(|s| {
            let ys = &yf[s * dim..(s + 1) * dim];
            let hs = &hf[s * dim..(s + 1) * dim];
            let d0 = df.first().map(|d| &d[s * dim..(s + 1) * dim]);
            let d1 = df.get(1).map(|d| &d[s * dim..(s + 1) * dim]);
            let mut best = [0.0f64; 3];
            for t in s + 1..=n {
                let yt = &yf[t * dim..(t + 1) * dim];
                let ht = &hf[t * dim..(t + 1) * dim];
                let dx0 = xs.first().map_or(0.0, |x| x[t] - x[s]);
                let dx1 = xs.get(1).map_or(0.0, |x| x[t] - x[s]);
                let (mut a_h, mut a_l, mut a_u) = (0.0, 0.0, 0.0);
                for k in 0..dim {
                    let mut rk = yt[k] - ys[k];
                    if let Some(d) = d0 {
                        rk -= d[k] * dx0;
                    }
                    if let Some(d) = d1 {
                        rk -= d[k] * dx1;
                    }
                    let dh = ht[k] - hs[k];
                    a_h += wh[k] * dh * dh;
                    let r2 = rk * rk;
                    a_l += wl[k] * r2;
                    a_u += wu[k] * r2;
                }
                let p = &inv_sq[t - s];
                best[0] = best[0].max(a_h * p[0]);
                best[1] = best[1].max(a_l * p[1]);
                best[2] = best[2].max(a_u * p[2]);
            }
            best
        })
        .reduce(|| [0.0; 3], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])]);
    PairSeminorms {
        holder: best[0].sqrt(),
        rem_low: best[1].sqrt(),
        rem_high: best[2].sqrt(),
    }
}

pub(crate) fn sup_norm(values: ArrayView2<'_, f64>, w: &[f64]) -> f64 {
    values
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(w).map(|(c, w)| w * c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Terms of `||y, y'||_(X, 2 gamma, alpha)`.
pub fn crp_components(path: &ControlledPath, driver: &RoughDriver) -> Result<CrpNorms> {
    path.grid.ensure_same(driver.grid())?;
    let (a, g) = (path.alpha, path.gamma);
    let w0 = path.space.weights(a);
    let w1 = path.space.weights(a - g);
    let w2 = path.space.weights(a - 2.0 * g);
    let pairs = pair_seminorms(
        &path.grid,
        path.y.view(),
        &[(path.y_prime.view(), driver.values())],
        path.y_prime.view(),
        &SeminormWeights {
            holder: &w2,
            rem_low: &w1,
            rem_high: &w2,
            exponents: [g, g, 2.0 * g],
        },
    );
    Ok(CrpNorms {
        sup_value: sup_norm(path.y.view(), &w0),
        sup_derivative: sup_norm(path.y_prime.view(), &w1),
        holder_derivative: pairs.holder,
        remainder_gamma: pairs.rem_low,
        remainder_two_gamma: pairs.rem_high,
    })
}

/// The controlled rough path norm over all grid pairs.
pub fn crp_norm(path: &ControlledPath, driver: &RoughDriver) -> Result<f64> {
    crp_components(path, driver).map(|c| c.total())
}

/// `[y]_(gamma, alpha - theta)` over grid pairs.
pub fn path_holder(path: &ControlledPath, exponent: f64, index: f64) -> f64 {
    let w = path.space.weights(index);
    pair_seminorms(
        &path.grid,
        path.y.view(),
        &[],
        path.y.view(),
        &SeminormWeights {
            holder: &w,
            rem_low: &w,
            rem_high: &w,
            exponents: [exponent, exponent, exponent],
        },
    )
    .holder
}

/// Maps from interior values to boundary data with analytic first and second
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothKind {
    /// `v -> (<v, w0>, <v, w1>)`.
    LinearTrace { weights: [Vec<f64>; 2] },
    /// `v -> (s tanh(<v, w0>/s), s tanh(<v, w1>/s))`, bounded with three bounded derivatives.
    SquashedTrace { weights: [Vec<f64>; 2], saturation: f64 },
    ConstantBoundary { g: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    pub kind: SmoothKind,
    /// Scale index the map is declared on.
    pub domain_index: f64,
    /// Regularity gain: the image is tagged `domain_index + gain` on the boundary scale.
    pub gain: f64,
}

impl SmoothMap {
    /// Smoothed boundary evaluation `w_{i,k} = amplitude e_k(x_i) / (1 + k^2)`, `k < trace_modes`.
    ///
    /// Dirichlet eigenfunctions vanish at the boundary, so there the flux
    /// `e_k'(x_i)` is sampled instead.
    pub fn trace_weights(scale: &Scale, trace_modes: usize, amplitude: f64) -> [Vec<f64>; 2] {
        let make = |x: f64| -> Vec<f64> {
            (0..scale.modes())
                .map(|i| {
                    if i < trace_modes {
                        let k = scale.wave_number(i) as f64;
                        let e = match scale.bc() {
                            BoundaryCondition::Neumann => scale.eigenfunction(i, x),
                            BoundaryCondition::Dirichlet => scale.eigenfunction_derivative(i, x),
                        };
                        amplitude * e / (1.0 + k * k)
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        [make(0.0), make(1.0)]
    }

    pub fn linear_trace(weights: [Vec<f64>; 2], domain_index: f64, gain: f64) -> Self {
        Self {
            kind: SmoothKind::LinearTrace { weights },
            domain_index,
            gain,
        }
    }

    pub fn squashed_trace(weights: [Vec<f64>; 2], saturation: f64, domain_index: f64, gain: f64) -> Self {
        assert!(saturation > 0.0);
        Self {
            kind: SmoothKind::SquashedTrace { weights, saturation },
            domain_index,
            gain,
        }
    }

    pub fn constant(g: [f64; 2], domain_index: f64, gain: f64) -> Self {
        Self {
            kind: SmoothKind::ConstantBoundary { g },
            domain_index,
            gain,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, SmoothKind::ConstantBoundary { .. })
    }

    fn pairings(weights: &[Vec<f64>; 2], v: &[f64]) -> [f64; 2] {
        weights.each_ref().map(|w| w.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    pub fn eval(&self, v: &[f64]) -> [f64; 2] {
        match &self.kind {
            SmoothKind::LinearTrace { weights } => Self::pairings(weights, v),
            SmoothKind::SquashedTrace { weights, saturation: s } => {
                Self::pairings(weights, v).map(|p| s * (p / s).tanh())
            }
            SmoothKind::ConstantBoundary { g } => *g,
        }
    }

    /// `DF(v)[h]`.
    pub fn derivative(&self, v: &[f64], h: &[f64]) -> [f64; 2] {
        match &self.kind {
            SmoothKind::LinearTrace { weights } => Self::pairings(weights, h),
            SmoothKind::SquashedTrace { weights, saturation: s } => {
                let p = Self::pairings(weights, v);
                let q = Self::pairings(weights, h);
                [0, 1].map(|i| {
                    let th = (p[i] / s).tanh();
                    (1.0 - th * th) * q[i]
                })
            }
            SmoothKind::ConstantBoundary { .. } => [0.0; 2],
        }
    }

    /// `D^2 F(v)[h, k]`.
    pub fn second_derivative(&self, v: &[f64], h: &[f64], k: &[f64]) -> [f64; 2] {
        match &self.kind {
            SmoothKind::SquashedTrace { weights, saturation: s } => {
                let p = Self::pairings(weights, v);
                let qh = Self::pairings(weights, h);
                let qk = Self::pairings(weights, k);
                [0, 1].map(|i| {
                    let th = (p[i] / s).tanh();
                    -2.0 * th * (1.0 - th * th) / s * qh[i] * qk[i]
                })
            }
            _ => [0.0; 2],
        }
    }

    /// Bounds on `sup |DF|` and `sup |D^2 F|` as operators from `B_index`
    /// into the Euclidean boundary space.
    pub fn derivative_bounds(&self, scale: &Scale, index: f64) -> (f64, f64) {
        let dual = |weights: &[Vec<f64>; 2]| -> f64 {
            // largest singular value of the 2 x K pairing matrix against B_index
            let w = scale.weights(-index);
            let g = |a: &[f64], b: &[f64]| -> f64 {
                a.iter().zip(b).zip(&w).map(|((x, y), w)| x * y * w).sum()
            };
            let (a, b, c) = (
                g(&weights[0], &weights[0]),
                g(&weights[0], &weights[1]),
                g(&weights[1], &weights[1]),
            );
            let tr = a + c;
            let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
            (0.5 * (tr + disc)).sqrt()
        };
        match &self.kind {
            SmoothKind::LinearTrace { weights } => (dual(weights), 0.0),
            SmoothKind::SquashedTrace { weights, saturation } => {
                let d = dual(weights);
                // max |tanh''| = 4 / (3 sqrt 3); componentwise bound on D^2F
                let row_max = |w: &Vec<f64>| {
                    let sw = scale.weights(-index);
                    w.iter().zip(&sw).map(|(x, s)| x * x * s).sum::<f64>()
                };
                let c2 = 4.0 / (3.0 * 3f64.sqrt()) / saturation;
                let d2 = c2 * (row_max(&weights[0]).powi(2) + row_max(&weights[1]).powi(2)).sqrt();
                (d, d2)
            }
            SmoothKind::ConstantBoundary { .. } => (0.0, 0.0),
        }
    }

    /// `max_{theta in {0, gamma, 2 gamma}} (||DF|| + ||D^2 F||)` at `alpha - theta`.
    pub fn c2_norm(&self, scale: &Scale, alpha: f64, gamma: f64) -> f64 {
        [0.0, gamma, 2.0 * gamma]
            .iter()
            .map(|th| {
                let (d1, d2) = self.derivative_bounds(scale, alpha - th);
                d1 + d2
            })
            .fold(0.0, f64::max)
    }
}

/// `(F(y), DF(y) y')`, a boundary-valued controlled path.
pub fn compose_smooth(map: &SmoothMap, path: &ControlledPath) -> Result<ControlledPath> {
    if (map.domain_index - path.alpha).abs() > 1e-12 {
        return Err(Error::Index {
            expected: map.domain_index,
            found: path.alpha,
        });
    }
    if path.space.is_boundary() {
        return Err(Error::SpaceMismatch("smooth maps act on interior paths".into()));
    }
    let n = path.grid.len();
    let mut z = Array2::zeros((n, 2));
    let mut zp = Array2::zeros((n, 2));
    for i in 0..n {
        let v = path.value(i);
        let f = map.eval(v);
        let df = map.derivative(v, path.derivative(i));
        for j in 0..2 {
            z[[i, j]] = f[j];
            zp[[i, j]] = df[j];
        }
    }
    ControlledPath::new(
        path.grid,
        Space::Boundary,
        map.domain_index + map.gain,
        path.gamma,
        z,
        zp,
    )
}

/// `(A_(-sigma) N F(y), A_(-sigma) N (DF(y) y'))` at index `-eta`.
///
/// The same extrapolated multiplier is used for the value and for its
/// Gubinelli derivative, which therefore lives at `-eta - gamma = -sigma`.
pub fn lift_extrapolate(map: &SmoothMap, path: &ControlledPath, lift: &LiftOperator) -> Result<ControlledPath> {
    let boundary = compose_smooth(map, path)?;
    let cols = lift.extrapolated_columns();
    let n = boundary.grid.len();
    let modes = lift.scale().modes();
    let mut z = Array2::zeros((n, modes));
    let mut zp = Array2::zeros((n, modes));
    for i in 0..n {
        let g = boundary.value(i);
        let gp = boundary.derivative(i);
        for k in 0..modes {
            z[[i, k]] = cols[0][k] * g[0] + cols[1][k] * g[1];
            zp[[i, k]] = cols[0][k] * gp[0] + cols[1][k] * gp[1];
        }
    }
    let eta = lift.scale().exponents().eta;
    ControlledPath::new(
        boundary.grid,
        Space::Interior(lift.scale().clone()),
        -eta,
        path.gamma,
        z,
        zp,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::RoughDriver;
    use crate::scale::{build_scale, ScaleConfig};

    fn smooth_driver(n: usize) -> RoughDriver {
        let grid = TimeGrid::new(n, 1.0).unwrap();
        let x: Vec<f64> = grid.times().collect();
        RoughDriver::geometric(grid, x, 0.5).unwrap()
    }

    fn scale() -> Arc<Scale> {
        Arc::new(build_scale(ScaleConfig::neumann(8, 0.4)).unwrap())
    }

    #[test]
    fn constant_path_norm_is_value_norm() {
        let s = scale();
        let d = smooth_driver(16);
        let c: Vec<f64> = (0..8).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let p = ControlledPath::constant(*d.grid(), Space::Interior(s.clone()), 0.3, 0.4, &c).unwrap();
        let norm = crp_norm(&p, &d).unwrap();
        assert!((norm - s.norm_of(&c, 0.3)).abs() < 1e-14);
    }

    #[test]
    fn driver_linear_path_has_zero_remainder() {
        let s = scale();
        let d = smooth_driver(16);
        let v: Vec<f64> = (0..8).map(|k| (k as f64 + 1.0).recip()).collect();
        let zero = vec![0.0; 8];
        let p = ControlledPath::linear_in_driver(&d, Space::Interior(s.clone()), 0.2, &zero, &v).unwrap();
        let c = crp_components(&p, &d).unwrap();
        assert!(c.remainder_gamma < 1e-14 && c.remainder_two_gamma < 1e-14);
        assert_eq!(c.holder_derivative, 0.0);
        let sup: f64 = s.norm_of(&v, 0.2); // max |X_t| = 1
        assert!((c.sup_value - sup).abs() < 1e-14);
        assert!((c.sup_derivative - s.norm_of(&v, 0.2 - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn remainder_identity_reconstructs_increments() {
        let s = scale();
        let d = smooth_driver(8);
        let mut y = Array2::zeros((9, 8));
        let mut yp = Array2::zeros((9, 8));
        for i in 0..9 {
            for k in 0..8 {
                y[[i, k]] = ((i * (k + 1)) as f64).sin();
                yp[[i, k]] = ((i + k) as f64).cos();
            }
        }
        let p = ControlledPath::new(*d.grid(), Space::Interior(s), 0.0, 0.5, y, yp).unwrap();
        for (s_, t) in [(0, 3), (2, 8), (5, 6)] {
            let r = p.remainder(&d, s_, t);
            for k in 0..8 {
                let rebuilt = p.derivative(s_)[k] * d.increment(s_, t) + r[k];
                let inc = p.value(t)[k] - p.value(s_)[k];
                assert!((rebuilt - inc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn composition_index_contract() {
        let s = scale();
        let d = smooth_driver(4);
        let p = ControlledPath::constant(*d.grid(), Space::Interior(s.clone()), -0.3, 0.4, &[0.0; 8]).unwrap();
        let f = SmoothMap::constant([1.0, 2.0], -0.2, 2.0);
        assert!(matches!(compose_smooth(&f, &p), Err(Error::Index { .. })));
        let f = SmoothMap::constant([1.0, 2.0], -0.3, 2.0);
        let z = compose_smooth(&f, &p).unwrap();
        assert_eq!(z.value(3), &[1.0, 2.0]);
        assert_eq!(z.derivative(3), &[0.0, 0.0]);
        assert!((z.alpha() - 1.7).abs() < 1e-15);
    }

    #[test]
    fn linear_composition_maps_remainder_linearly() {
        let s = scale();
        let d = smooth_driver(8);
        let w = SmoothMap::trace_weights(&s, 4, 1.0);
        let f = SmoothMap::linear_trace(w.clone(), 0.0, 2.0);
        let mut y = Array2::zeros((9, 8));
        let mut yp = Array2::zeros((9, 8));
        for i in 0..9 {
            for k in 0..8 {
                y[[i, k]] = (0.3 * (i + k) as f64).sin();
                yp[[i, k]] = 0.1 * k as f64;
            }
        }
        let p = ControlledPath::new(*d.grid(), Space::Interior(s), 0.0, 0.5, y, yp).unwrap();
        let z = compose_smooth(&f, &p).unwrap();
        let rz = z.remainder(&d, 1, 6);
        let ry = p.remainder(&d, 1, 6);
        let expect = SmoothMap::pairings(&w, &ry);
        assert!((rz[0] - expect[0]).abs() < 1e-13 && (rz[1] - expect[1]).abs() < 1e-13);

        // commutes with scalar multiplication
        let z2 = compose_smooth(&f, &p.scaled(-2.5)).unwrap();
        for i in 0..9 {
            for j in 0..2 {
                assert!((z2.value(i)[j] + 2.5 * z.value(i)[j]).abs() < 1e-13);
                assert!((z2.derivative(i)[j] + 2.5 * z.derivative(i)[j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let s = scale();
        let w = SmoothMap::trace_weights(&s, 5, 0.8);
        let f = SmoothMap::squashed_trace(w, 0.7, 0.0, 2.0);
        let v: Vec<f64> = (0..8).map(|k| 0.4 * (k as f64).cos()).collect();
        let h: Vec<f64> = (0..8).map(|k| 0.3 * (k as f64 + 0.5).sin()).collect();
        let k2: Vec<f64> = (0..8).map(|k| 0.2 - 0.05 * k as f64).collect();
        let eps = 1e-5;
        let shift = |v: &[f64], d: &[f64], e: f64| -> Vec<f64> { v.iter().zip(d).map(|(a, b)| a + e * b).collect() };
        let fp = f.eval(&shift(&v, &h, eps));
        let fm = f.eval(&shift(&v, &h, -eps));
        let d = f.derivative(&v, &h);
        for i in 0..2 {
            assert!(((fp[i] - fm[i]) / (2.0 * eps) - d[i]).abs() < 1e-8);
        }
        let dp = f.derivative(&shift(&v, &k2, eps), &h);
        let dm = f.derivative(&shift(&v, &k2, -eps), &h);
        let d2 = f.second_derivative(&v, &h, &k2);
        for i in 0..2 {
            assert!(((dp[i] - dm[i]) / (2.0 * eps) - d2[i]).abs() < 1e-8);
        }
    }
}
