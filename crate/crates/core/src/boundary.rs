//! Neumann and Dirichlet lifts of boundary data, in closed form.
//!
//! For `b < 0 < a` put `kappa = sqrt(-b / a)`. The solution of
//! `a u'' + b u = 0` with conormal data `-a u'(0) = g0`, `a u'(1) = g1` is
//! `u = [g1 cosh(kappa x) + g0 cosh(kappa (1 - x))] / (a kappa sinh kappa)`,
//! and with trace data `u(0) = g0`, `u(1) = g1` it is
//! `u = [g0 sinh(kappa (1 - x)) + g1 sinh(kappa x)] / sinh kappa`.
//! Their eigenbasis coefficients follow from
//! `int_0^1 cosh(kappa x) cos(k pi x) dx = (-1)^k kappa sinh kappa / (kappa^2 + k^2 pi^2)`
//! and `int_0^1 sinh(kappa x) sin(k pi x) dx = (-1)^(k+1) k pi sinh kappa / (kappa^2 + k^2 pi^2)`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use ndarray::Array2;

use crate::controlled::{ControlledPath, Space};
use crate::error::{Error, Result};
use crate::scale::{BoundaryCondition, Scale, SpectralVector};

/// Boundary data `(g0, g1)` at a formal boundary-scale index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryVector {
    pub g0: f64,
    pub g1: f64,
    pub beta: f64,
}

impl BoundaryVector {
    pub fn new(g0: f64, g1: f64, beta: f64) -> Self {
        Self { g0, g1, beta }
    }

    pub fn norm(&self) -> f64 {
        self.g0.hypot(self.g1)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.g0, self.g1]
    }
}

fn kappa(scale: &Scale) -> Result<f64> {
    let cfg = scale.config();
    let k = (-cfg.b / cfg.a).sqrt();
    let s = k.sinh();
    if !(k.is_finite() && k > 0.0 && s.is_finite() && s > 0.0) {
        return Err(Error::SingularLift(format!("kappa = {k}, sinh kappa = {s}")));
    }
    Ok(k)
}

fn require(scale: &Scale, bc: BoundaryCondition) -> Result<()> {
    if scale.bc() != bc {
        return Err(Error::config(format!("{bc:?} lift requested on a {:?} scale", scale.bc())));
    }
    Ok(())
}

/// Eigenbasis coefficients of the two fundamental solutions (unit `g0`, unit `g1`).
fn neumann_columns(scale: &Scale) -> Result<[Vec<f64>; 2]> {
    require(scale, BoundaryCondition::Neumann)?;
    kappa(scale)?;
    // with a (kappa^2 + k^2 pi^2) = mu_k the coefficients reduce to e_k(x_i) / mu_k
    let mut c0 = Vec::with_capacity(scale.modes());
    let mut c1 = Vec::with_capacity(scale.modes());
    for (i, &mu) in scale.eigenvalues().iter().enumerate() {
        let k = scale.wave_number(i);
        let norm = if k == 0 { 1.0 } else { SQRT_2 };
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        c0.push(norm / mu);
        c1.push(norm * sign / mu);
    }
    Ok([c0, c1])
}

fn dirichlet_columns(scale: &Scale) -> Result<[Vec<f64>; 2]> {
    require(scale, BoundaryCondition::Dirichlet)?;
    kappa(scale)?;
    let a = scale.config().a;
    let mut c0 = Vec::with_capacity(scale.modes());
    let mut c1 = Vec::with_capacity(scale.modes());
    for (i, &mu) in scale.eigenvalues().iter().enumerate() {
        let k = scale.wave_number(i) as f64;
        let sign = if scale.wave_number(i).is_multiple_of(2) { 1.0 } else { -1.0 };
        c0.push(a * SQRT_2 * k * PI / mu);
        c1.push(-a * SQRT_2 * k * PI * sign / mu);
    }
    Ok([c0, c1])
}

/// Coefficients of the Neumann lift of `g`, tagged with index `epsilon`.
pub fn neumann_map(g: &BoundaryVector, scale: &Scale) -> Result<SpectralVector> {
    let [c0, c1] = neumann_columns(scale)?;
    let coeffs = c0.iter().zip(&c1).map(|(a, b)| g.g0 * a + g.g1 * b).collect();
    Ok(SpectralVector::new(coeffs, scale.exponents().epsilon))
}

/// Coefficients of the Dirichlet lift of `g`, tagged with index `epsilon_D`.
pub fn dirichlet_map(g: &BoundaryVector, scale: &Scale) -> Result<SpectralVector> {
    let [c0, c1] = dirichlet_columns(scale)?;
    let coeffs = c0.iter().zip(&c1).map(|(a, b)| g.g0 * a + g.g1 * b).collect();
    Ok(SpectralVector::new(coeffs, scale.exponents().epsilon))
}

/// `cosh(kappa x) / sinh(kappa)` without overflow for large `kappa`.
fn cosh_ratio(kappa: f64, x: f64) -> f64 {
    ((kappa * (x - 1.0)).exp() + (-kappa * (x + 1.0)).exp()) / -(-2.0 * kappa).exp_m1()
}

fn sinh_ratio(kappa: f64, x: f64) -> f64 {
    ((kappa * (x - 1.0)).exp() - (-kappa * (x + 1.0)).exp()) / -(-2.0 * kappa).exp_m1()
}

/// The untruncated Neumann lift `u(x)`.
pub fn neumann_profile(scale: &Scale, g: &BoundaryVector, x: f64) -> Result<f64> {
    require(scale, BoundaryCondition::Neumann)?;
    let k = kappa(scale)?;
    let a = scale.config().a;
    Ok((g.g1 * cosh_ratio(k, x) + g.g0 * cosh_ratio(k, 1.0 - x)) / (a * k))
}

/// `u'(x)` of the untruncated Neumann lift.
pub fn neumann_profile_derivative(scale: &Scale, g: &BoundaryVector, x: f64) -> Result<f64> {
    require(scale, BoundaryCondition::Neumann)?;
    let k = kappa(scale)?;
    let a = scale.config().a;
    Ok((g.g1 * sinh_ratio(k, x) - g.g0 * sinh_ratio(k, 1.0 - x)) / a)
}

/// The untruncated Dirichlet lift `u(x)`.
pub fn dirichlet_profile(scale: &Scale, g: &BoundaryVector, x: f64) -> Result<f64> {
    require(scale, BoundaryCondition::Dirichlet)?;
    let k = kappa(scale)?;
    Ok(g.g0 * sinh_ratio(k, 1.0 - x) + g.g1 * sinh_ratio(k, x))
}

/// The lift `N` (or `D`) as a `K x 2` coefficient matrix, stored by columns.
#[derive(Debug, Clone)]
pub struct LiftOperator {
    scale: Arc<Scale>,
    columns: [Vec<f64>; 2],
}

impl LiftOperator {
    /// The lift matching the scale's boundary condition.
    pub fn new(scale: Arc<Scale>) -> Result<Self> {
        let columns = match scale.bc() {
            BoundaryCondition::Neumann => neumann_columns(&scale)?,
            BoundaryCondition::Dirichlet => dirichlet_columns(&scale)?,
        };
        Ok(Self { scale, columns })
    }

    pub fn scale(&self) -> &Arc<Scale> {
        &self.scale
    }

    /// Index of the lifted data.
    pub fn index(&self) -> f64 {
        self.scale.exponents().epsilon
    }

    pub fn columns(&self) -> &[Vec<f64>; 2] {
        &self.columns
    }

    pub fn apply(&self, g: [f64; 2]) -> Vec<f64> {
        self.columns[0]
            .iter()
            .zip(&self.columns[1])
            .map(|(a, b)| g[0] * a + g[1] * b)
            .collect()
    }

    /// Columns of `A N`: every mode is multiplied by `-mu_k`.
    ///
    /// For the Neumann lift these are `-(e_k(0), e_k(1))`, the Green identity
    /// of the boundary value problem.
    pub fn extrapolated_columns(&self) -> [Vec<f64>; 2] {
        self.columns.each_ref().map(|c| {
            c.iter()
                .zip(self.scale.eigenvalues())
                .map(|(c, mu)| -mu * c)
                .collect()
        })
    }

    /// Operator norm from the Euclidean boundary space into `B_beta`.
    pub fn operator_norm(&self, beta: f64) -> f64 {
        let w = self.scale.weights(beta);
        let g = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(&w).map(|((x, y), w)| x * y * w).sum() };
        let (a, b, c) = (
            g(&self.columns[0], &self.columns[0]),
            g(&self.columns[0], &self.columns[1]),
            g(&self.columns[1], &self.columns[1]),
        );
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        (0.5 * (a + c + disc)).sqrt()
    }
}

/// `(N y, N y')` at the lift index; the remainder is `N R^y`.
pub fn lift_controlled(lift: &LiftOperator, path: &ControlledPath) -> Result<ControlledPath> {
    if !matches!(path.space(), Space::Boundary) {
        return Err(Error::SpaceMismatch("lift expects a boundary-valued path".into()));
    }
    let n = path.grid().len();
    let modes = lift.scale.modes();
    let mut y = Array2::zeros((n, modes));
    let mut yp = Array2::zeros((n, modes));
    for i in 0..n {
        let (v, d) = (path.value(i), path.derivative(i));
        for k in 0..modes {
            let (a, b) = (lift.columns[0][k], lift.columns[1][k]);
            y[[i, k]] = a * v[0] + b * v[1];
            yp[[i, k]] = a * d[0] + b * d[1];
        }
    }
    ControlledPath::new(
        *path.grid(),
        Space::Interior(lift.scale.clone()),
        lift.index(),
        path.gamma(),
        y,
        yp,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::{build_scale, ScaleConfig};

    #[test]
    fn zero_data_lifts_to_zero() {
        let s = build_scale(ScaleConfig::neumann(16, 0.4)).unwrap();
        let z = neumann_map(&BoundaryVector::new(0.0, 0.0, 0.0), &s).unwrap();
        assert!(z.coeffs.iter().all(|c| *c == 0.0));
        assert!((z.alpha - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unit_right_datum_coefficients() {
        let s = build_scale(ScaleConfig::neumann(6, 0.4)).unwrap();
        let c = neumann_map(&BoundaryVector::new(0.0, 1.0, 0.0), &s).unwrap().coeffs;
        assert!((c[0] - 1.0).abs() < 1e-15);
        for k in 1..6 {
            let mu = 1.0 + (k as f64 * PI).powi(2);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((c[k] - SQRT_2 * sign / mu).abs() < 1e-15);
        }
        // u = cosh x / sinh 1
        let u = neumann_profile(&s, &BoundaryVector::new(0.0, 1.0, 0.0), 0.3).unwrap();
        assert!((u - 0.3f64.cosh() / 1f64.sinh()).abs() < 1e-14);
    }

    #[test]
    fn conormal_data_are_reproduced() {
        let mut cfg = ScaleConfig::neumann(4, 0.4);
        cfg.a = 0.7;
        cfg.b = -2.3;
        let s = build_scale(cfg).unwrap();
        let g = BoundaryVector::new(0.4, -1.3, 0.0);
        let d0 = neumann_profile_derivative(&s, &g, 0.0).unwrap();
        let d1 = neumann_profile_derivative(&s, &g, 1.0).unwrap();
        assert!((-0.7 * d0 - 0.4).abs() < 1e-13);
        assert!((0.7 * d1 + 1.3).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_traces() {
        let s = build_scale(ScaleConfig::dirichlet(4, 0.8)).unwrap();
        let g = BoundaryVector::new(0.4, -1.3, 0.0);
        assert!((dirichlet_profile(&s, &g, 0.0).unwrap() - 0.4).abs() < 1e-14);
        assert!((dirichlet_profile(&s, &g, 1.0).unwrap() + 1.3).abs() < 1e-14);
    }

    #[test]
    fn wrong_boundary_condition_is_rejected() {
        let s = build_scale(ScaleConfig::dirichlet(4, 0.8)).unwrap();
        assert!(neumann_map(&BoundaryVector::new(1.0, 0.0, 0.0), &s).is_err());
    }

    #[test]
    fn extrapolated_columns_are_boundary_evaluations() {
        let s = Arc::new(build_scale(ScaleConfig::neumann(8, 0.4)).unwrap());
        let lift = LiftOperator::new(s.clone()).unwrap();
        let m = lift.extrapolated_columns();
        for i in 0..8 {
            assert!((m[0][i] + s.eigenfunction(i, 0.0)).abs() < 1e-13);
            assert!((m[1][i] + s.eigenfunction(i, 1.0)).abs() < 1e-13);
        }
    }
}
