//! The analytic semigroup `S_t = e^(tA)`, evaluated exactly per eigenmode.

use crate::scale::{Scale, SpectralVector};

/// `S_t v`; the scale index is unchanged.
pub fn apply_semigroup(scale: &Scale, v: &SpectralVector, t: f64) -> SpectralVector {
    assert!(t >= 0.0, "semigroup time must be nonnegative");
    if t == 0.0 {
        return v.clone();
    }
    let coeffs = scale
        .eigenvalues()
        .iter()
        .zip(&v.coeffs)
        .map(|(mu, c)| (-mu * t).exp() * c)
        .collect();
    SpectralVector::new(coeffs, v.alpha)
}


/// `e^(-mu_k t)` for all modes.
pub fn decay_factors(scale: &Scale, t: f64) -> Vec<f64> {
    scale.eigenvalues().iter().map(|mu| (-mu * t).exp()).collect()
}

/// Measured and exact constants of the smoothing/continuity estimates
/// `|S_t v|_(alpha+sigma) <= C_s t^(-sigma) |v|_alpha` and
/// `|(S_t - Id) v|_alpha <= C_c t^sigma |v|_(alpha+sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport {
    pub sigma: f64,
    pub alpha: f64,
    /// `sup_t sup_k (t mu_k)^sigma e^(-mu_k t)`.
    pub smoothing_sup: f64,
    /// `sup_t sup_k (1 - e^(-mu_k t)) / (t mu_k)^sigma`.
    pub continuity_sup: f64,
    /// `(sigma / e)^sigma`, the supremum of `x^sigma e^(-x)` over `x > 0`.
    pub smoothing_bound: f64,
    pub continuity_bound: f64,
}

impl SmoothingReport {
    pub fn holds(&self) -> bool {
        self.smoothing_sup <= self.smoothing_bound * (1.0 + 1e-12)
            && self.continuity_sup <= self.continuity_bound * (1.0 + 1e-12)
    }
}

/// Scans the operator norms of `S_t` between scale spaces over `times`.
///
/// Diagonal operators have operator norm equal to the supremum of their
/// multipliers, so both suprema are independent of `alpha`.
pub fn smoothing_constants(scale: &Scale, sigma: f64, alpha: f64, times: &[f64]) -> SmoothingReport {
    assert!((0.0..=1.0).contains(&sigma), "sigma must lie in [0, 1]");
    let mut smoothing_sup: f64 = 0.0;
    let mut continuity_sup: f64 = 0.0;
    for &t in times.iter().filter(|t| **t > 0.0) {
        for &mu in scale.eigenvalues() {
            let x = mu * t;
            smoothing_sup = smoothing_sup.max(x.powf(sigma) * (-x).exp());
            continuity_sup = continuity_sup.max(-(-x).exp_m1() / x.powf(sigma));
        }
    }
    SmoothingReport {
        sigma,
        alpha,
        smoothing_sup,
        continuity_sup,
        smoothing_bound: (sigma / std::f64::consts::E).powf(sigma),
        continuity_bound: 1.0,
    }
}

/// `n` logarithmically spaced points between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Weights of the exponential trapezoid rule on one step of length `h`:
/// `int_0^h e^(-mu (h - r)) g(r) dr ~ w0 g(0) + w1 g(h)` for `g` linear.
pub fn exponential_trapezoid_weights(mu: f64, h: f64) -> (f64, f64) {
    let x = mu * h;
    if x < 0.1 {
        // w1 = h sum (-x)^n/(n+2)!, w0 = h sum (-1)^n (n+1) x^n/(n+2)!
        let mut w0 = 0.0;
        let mut w1 = 0.0;
        let mut term = 0.5; // x^n / (n+2)!
        for n in 0..14 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            w1 += sign * term;
            w0 += sign * (n as f64 + 1.0) * term;
            term *= x / (n as f64 + 3.0);
        }
        (h * w0, h * w1)
    } else {
        let e = (-x).exp();
        let w1 = h * (x - 1.0 + e) / (x * x);
        let w0 = h * (1.0 - e - x * e) / (x * x);
        (w0, w1)
    }
}

/// Per-step constants for a scale on a uniform grid.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub h: f64,
    /// `e^(-mu_k h)`.
    pub decay: Vec<f64>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
}

impl StepOperator {
    pub fn new(scale: &Scale, h: f64) -> Self {
        let decay = decay_factors(scale, h);
        let (w0, w1) = scale
            .eigenvalues()
            .iter()
            .map(|&mu| exponential_trapezoid_weights(mu, h))
            .unzip();
        Self { h, decay, w0, w1 }
    }
}

/// Table of `e^(-mu_k l h)` for lags `l = 0..=steps`, row-major by lag.
#[derive(Debug, Clone)]
pub struct LagTable {
    modes: usize,
    data: Vec<f64>,
}

impl LagTable {
    pub fn new(scale: &Scale, h: f64, steps: usize) -> Self {
        let modes = scale.modes();
        let mut data = Vec::with_capacity((steps + 1) * modes);
        for l in 0..=steps {
            let t = l as f64 * h;
            data.extend(scale.eigenvalues().iter().map(|mu| (-mu * t).exp()));
        }
        Self { modes, data }
    }

    pub fn lag(&self, l: usize) -> &[f64] {
        &self.data[l * self.modes..(l + 1) * self.modes]
    }
}
