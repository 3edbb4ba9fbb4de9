//! Interpolation-extrapolation scale generated by the spectral realization of
//! `A u = (a u')' + b u` on `(0, 1)`.
//!
//! Every space `B_alpha` of the scale is represented by the same coefficient
//! array against the orthonormal eigenbasis; only the norm changes with the
//! index: `|v|_alpha = (sum_k mu_k^(2 alpha) c_k^2)^(1/2)` where `-mu_k` is the
//! spectrum of `A`. Fractional powers and every extrapolated realization
//! `A_(-theta)` act by the same spectral multiplier.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest admissible scale index.
pub const SCALE_FLOOR: f64 = -2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleConfig {
    /// Diffusion coefficient, positive.
    pub a: f64,
    /// Zeroth-order coefficient, negative so that `A` is invertible.
    pub b: f64,
    /// Number of retained eigenmodes.
    pub modes: usize,
    pub bc: BoundaryCondition,
    /// Integrability exponent; only enters the exponent bookkeeping.
    pub p: f64,
    pub delta: f64,
    /// Hoelder exponent of the driver.
    pub gamma: f64,
}

impl ScaleConfig {
    pub fn neumann(modes: usize, gamma: f64) -> Self {
        Self {
            a: 1.0,
            b: -1.0,
            modes,
            bc: BoundaryCondition::Neumann,
            p: 2.0,
            delta: 0.05,
            gamma,
        }
    }

    pub fn dirichlet(modes: usize, gamma: f64) -> Self {
        Self {
            bc: BoundaryCondition::Dirichlet,
            ..Self::neumann(modes, gamma)
        }
    }
}

/// Derived exponents: lift regularity `epsilon`, solution index `-eta`,
/// extrapolation index `-sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub epsilon: f64,
    pub eta: f64,
    pub sigma: f64,
}

/// A scale element: eigenbasis coefficients plus the index it is considered in.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    pub coeffs: Vec<f64>,
    pub alpha: f64,
}

impl SpectralVector {
    pub fn new(coeffs: Vec<f64>, alpha: f64) -> Self {
        Self { coeffs, alpha }
    }

    pub fn zeros(modes: usize, alpha: f64) -> Self {
        Self::new(vec![0.0; modes], alpha)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect(), self.alpha)
    }

    pub fn add(&self, other: &SpectralVector) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self::new(coeffs, self.alpha.min(other.alpha))
    }

    pub fn sub(&self, other: &SpectralVector) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self::new(coeffs, self.alpha.min(other.alpha))
    }

    pub fn dot(&self, other: &SpectralVector) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Scale {
    config: ScaleConfig,
    eigenvalues: Vec<f64>,
    exponents: Exponents,
}

/// Builds the spectral scale for `cfg`, validating the exponent constraints.
pub fn build_scale(cfg: ScaleConfig) -> Result<Scale> {
    Scale::new(cfg)
}

impl Scale {
    pub fn new(cfg: ScaleConfig) -> Result<Self> {
        if !(cfg.a.is_finite() && cfg.a > 0.0) {
            return Err(Error::config(format!("diffusion coefficient a must be positive, got {}", cfg.a)));
        }
        if !(cfg.b.is_finite() && cfg.b < 0.0) {
            return Err(Error::config(format!("coefficient b must be negative, got {}", cfg.b)));
        }
        if cfg.modes == 0 {
            return Err(Error::config("at least one eigenmode is required"));
        }
        if !(2.0..=3.0).contains(&cfg.p) {
            return Err(Error::config(format!("p must lie in [2, 3], got {}", cfg.p)));
        }
        if !(cfg.delta.is_finite() && cfg.delta > 0.0) {
            return Err(Error::config(format!("delta must be positive, got {}", cfg.delta)));
        }
        let exponents = match cfg.bc {
            BoundaryCondition::Neumann => neumann_exponents(&cfg)?,
            BoundaryCondition::Dirichlet => dirichlet_exponents(&cfg)?,
        };
        let first = match cfg.bc {
            BoundaryCondition::Neumann => 0,
            BoundaryCondition::Dirichlet => 1,
        };
        let eigenvalues: Vec<f64> = (first..first + cfg.modes)
            .map(|k| {
                let kp = k as f64 * PI;
                -cfg.b + cfg.a * kp * kp
            })
            .collect();
        if eigenvalues[0] < 1.0 {
            return Err(Error::config(format!(
                "smallest eigenvalue {} is below 1; shift b further down",
                eigenvalues[0]
            )));
        }
        Ok(Self {
            config: cfg,
            eigenvalues,
            exponents,
        })
    }

    pub fn config(&self) -> &ScaleConfig {
        &self.config
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.config.bc
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn gamma(&self) -> f64 {
        self.config.gamma
    }

    /// `mu_k`, strictly positive and increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn exponents(&self) -> Exponents {
        self.exponents
    }

    /// Wave number `k` of the `i`-th retained mode.
    pub fn wave_number(&self, i: usize) -> usize {
        match self.config.bc {
            BoundaryCondition::Neumann => i,
            BoundaryCondition::Dirichlet => i + 1,
        }
    }

    /// Orthonormal eigenfunction `e_i(x)`.
    pub fn eigenfunction(&self, i: usize, x: f64) -> f64 {
        let k = self.wave_number(i) as f64;
        match self.config.bc {
            BoundaryCondition::Neumann if i == 0 => 1.0,
            BoundaryCondition::Neumann => SQRT_2 * (k * PI * x).cos(),
            BoundaryCondition::Dirichlet => SQRT_2 * (k * PI * x).sin(),
        }
    }

    pub fn eigenfunction_derivative(&self, i: usize, x: f64) -> f64 {
        let k = self.wave_number(i) as f64;
        match self.config.bc {
            BoundaryCondition::Neumann => -SQRT_2 * k * PI * (k * PI * x).sin(),
            BoundaryCondition::Dirichlet => SQRT_2 * k * PI * (k * PI * x).cos(),
        }
    }

    /// Evaluates the function with eigenbasis coefficients `coeffs` at `x`.
    pub fn synthesize(&self, coeffs: &[f64], x: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.eigenfunction(i, x))
            .sum()
    }

    /// Squared-norm weights `mu_k^(2 alpha)`.
    pub fn weights(&self, alpha: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|mu| mu.powf(2.0 * alpha)).collect()
    }

    /// `|v|_alpha` for raw coefficients.
    pub fn norm_of(&self, coeffs: &[f64], alpha: f64) -> f64 {
        debug_assert_eq!(coeffs.len(), self.modes());
        self.eigenvalues
            .iter()
            .zip(coeffs)
            .map(|(mu, c)| mu.powf(2.0 * alpha) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// `|v|_alpha`, independent of the index `v` is tagged with.
    pub fn norm(&self, v: &SpectralVector, alpha: f64) -> f64 {
        self.norm_of(&v.coeffs, alpha)
    }

    /// `(-A)^theta v`, moving the index from `alpha` to `alpha - theta`.
    ///
    /// The multiplier is `mu_k^theta`. `A` itself has spectrum `-mu_k`, so
    /// `theta = 1` yields `-A v`; see [`Scale::generator`] for the signed action.
    pub fn fractional_power(&self, v: &SpectralVector, theta: f64) -> Result<SpectralVector> {
        let alpha = v.alpha - theta;
        check_floor(alpha)?;
        let coeffs = self
            .eigenvalues
            .iter()
            .zip(&v.coeffs)
            .map(|(mu, c)| mu.powf(theta) * c)
            .collect();
        Ok(SpectralVector::new(coeffs, alpha))
    }

    /// The realization `A_(alpha - 1)` applied to `v in B_alpha`.
    pub fn generator(&self, v: &SpectralVector) -> Result<SpectralVector> {
        let alpha = v.alpha - 1.0;
        check_floor(alpha)?;
        let coeffs = self
            .eigenvalues
            .iter()
            .zip(&v.coeffs)
            .map(|(mu, c)| -mu * c)
            .collect();
        Ok(SpectralVector::new(coeffs, alpha))
    }

    pub fn basis(&self, i: usize, alpha: f64) -> SpectralVector {
        let mut coeffs = vec![0.0; self.modes()];
        coeffs[i] = 1.0;
        SpectralVector::new(coeffs, alpha)
    }
}

/// `|v|_alpha` on the scale.
pub fn scale_norm(scale: &Scale, v: &SpectralVector, alpha: f64) -> f64 {
    scale.norm(v, alpha)
}

pub fn fractional_power(scale: &Scale, v: &SpectralVector, theta: f64) -> Result<SpectralVector> {
    scale.fractional_power(v, theta)
}

fn check_floor(alpha: f64) -> Result<()> {
    if alpha < SCALE_FLOOR - 1e-12 {
        Err(Error::ScaleUnderflow {
            index: alpha,
            floor: SCALE_FLOOR,
        })
    } else {
        Ok(())
    }
}

fn neumann_exponents(cfg: &ScaleConfig) -> Result<Exponents> {
    let gamma = cfg.gamma;
    if !(gamma > 1.0 / 3.0 && gamma <= 0.5) {
        return Err(Error::config(format!(
            "Neumann boundary noise needs gamma in (1/3, 1/2], got {gamma}"
        )));
    }
    let epsilon = 0.5 + 0.5 / cfg.p - cfg.delta;
    if epsilon <= 1.0 - gamma {
        return Err(Error::config(format!(
            "epsilon = {epsilon} must exceed 1 - gamma = {}; decrease delta",
            1.0 - gamma
        )));
    }
    let eta = 1.0 - epsilon;
    Ok(Exponents {
        epsilon,
        eta,
        sigma: eta + gamma,
    })
}

fn dirichlet_exponents(cfg: &ScaleConfig) -> Result<Exponents> {
    let gamma = cfg.gamma;
    let ceiling = 0.5 / cfg.p;
    if !(gamma > 1.0 - ceiling && gamma < 1.0) {
        return Err(Error::config(format!(
            "Dirichlet boundary noise needs gamma in ({}, 1), got {gamma}",
            1.0 - ceiling
        )));
    }
    // epsilon must sit in (1 - gamma, 1/(2p)); take delta below the ceiling
    // unless that leaves the window, then the midpoint.
    let slack = cfg.delta.min(0.5 * (gamma - (1.0 - ceiling)));
    let epsilon = ceiling - slack;
    let eta = 1.0 - epsilon;
    Ok(Exponents {
        epsilon,
        eta,
        sigma: eta + gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn neumann_eigenvalues_closed_form() {
        let s = build_scale(ScaleConfig::neumann(3, 0.4)).unwrap();
        let mu = s.eigenvalues();
        assert_eq!(mu[0], 1.0);
        assert!(close(mu[1], 1.0 + PI * PI, 1e-15));
        assert!(close(mu[2], 1.0 + 4.0 * PI * PI, 1e-15));
    }

    #[test]
    fn derived_exponents() {
        let s = build_scale(ScaleConfig::neumann(3, 0.4)).unwrap();
        let e = s.exponents();
        assert!(close(e.epsilon, 0.70, 1e-15));
        assert!(close(e.eta, 0.30, 1e-15));
        assert!(close(e.sigma, 0.70, 1e-15));
    }

    #[test]
    fn dirichlet_needs_young_regularity_above_three_quarters() {
        let err = build_scale(ScaleConfig::dirichlet(8, 0.6)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let s = build_scale(ScaleConfig::dirichlet(8, 0.78)).unwrap();
        let e = s.exponents();
        assert!(e.epsilon < 0.25 && e.epsilon > 1.0 - 0.78);
        assert_eq!(s.eigenvalues()[0], 1.0 + PI * PI);
    }

    #[test]
    fn config_guards() {
        let mut c = ScaleConfig::neumann(4, 0.4);
        c.b = 0.0;
        assert!(build_scale(c.clone()).is_err());
        c.b = -1.0;
        c.a = -1.0;
        assert!(build_scale(c.clone()).is_err());
        c.a = 1.0;
        c.gamma = 0.3;
        assert!(build_scale(c.clone()).is_err());
        // epsilon = 0.75 - 0.2 = 0.55 <= 1 - 0.4
        c.gamma = 0.4;
        c.delta = 0.2;
        assert!(build_scale(c.clone()).is_err());
        c.delta = 0.05;
        c.b = -0.5;
        assert!(build_scale(c).is_err());
    }

    #[test]
    fn unit_eigenvector_norms() {
        let s = build_scale(ScaleConfig::neumann(4, 0.4)).unwrap();
        let e0 = s.basis(0, 0.0);
        for alpha in [-1.5, 0.0, 0.3, 2.0] {
            assert!(close(s.norm(&e0, alpha), 1.0, 1e-15));
        }
        let e1 = s.basis(1, 0.0);
        assert!(close(s.norm(&e1, 0.5), (1.0 + PI * PI).sqrt(), 1e-14));
        assert!((s.norm(&e1, 0.5) - 3.297).abs() < 1e-3);
    }

    #[test]
    fn fractional_power_basics() {
        let s = build_scale(ScaleConfig::neumann(4, 0.4)).unwrap();
        let v = SpectralVector::new(vec![0.3, -1.0, 2.0, 0.5], 0.2);
        let id = s.fractional_power(&v, 0.0).unwrap();
        assert_eq!(id, v);

        let e1 = s.basis(1, 0.0);
        let p = s.fractional_power(&e1, 1.0).unwrap();
        assert!(close(p.coeffs[1], s.eigenvalues()[1], 1e-15));
        assert_eq!(p.alpha, -1.0);
        let a = s.generator(&e1).unwrap();
        assert_eq!(a.coeffs[1], -p.coeffs[1]);

        let back = s
            .fractional_power(&s.fractional_power(&v, 0.3).unwrap(), -0.3)
            .unwrap();
        for (x, y) in back.coeffs.iter().zip(&v.coeffs) {
            assert!((x - y).abs() <= 1e-12 * y.abs());
        }
        assert!((back.alpha - v.alpha).abs() < 1e-15);
    }

    #[test]
    fn floor_is_enforced() {
        let s = build_scale(ScaleConfig::neumann(4, 0.4)).unwrap();
        let v = s.basis(0, -1.5);
        assert!(matches!(
            s.fractional_power(&v, 0.6),
            Err(Error::ScaleUnderflow { .. })
        ));
        assert!(s.fractional_power(&v, 0.5).is_ok());
        assert!(s.generator(&v).is_err());
    }

    #[test]
    fn eigenfunctions_are_orthonormal() {
        for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
            let mut cfg = ScaleConfig::neumann(5, 0.4);
            if bc == BoundaryCondition::Dirichlet {
                cfg = ScaleConfig::dirichlet(5, 0.8);
            }
            let s = build_scale(cfg).unwrap();
            let n = 4000;
            for i in 0..5 {
                for j in 0..5 {
                    // composite midpoint rule is exact enough for trig products
                    let h = 1.0 / n as f64;
                    let ip: f64 = (0..n)
                        .map(|m| {
                            let x = (m as f64 + 0.5) * h;
                            s.eigenfunction(i, x) * s.eigenfunction(j, x) * h
                        })
                        .sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-5, "{bc:?} {i} {j} {ip}");
                }
            }
        }
    }
}
