use ndarray::{Array2, ArrayView2};

use super::Drift;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scale::Scale;
use crate::semigroup::StepOperator;

/// `int_0^t S_(t-r) f(y_r) dr` on every grid point, sampled every `stride` steps.
///
/// Each mode integrates `e^(-mu (t - r))` exactly against the piecewise-linear
/// interpolant of `f(y_r)`.
pub fn drift_convolve(
    scale: &Scale,
    grid: &TimeGrid,
    values: ArrayView2<'_, f64>,
    drift: &Drift,
    stride: usize,
) -> Result<Array2<f64>> {
    let modes = scale.modes();
    if values.dim() != (grid.len(), modes) {
        return Err(Error::GridMismatch(format!(
            "drift input {:?} does not match grid x modes ({}, {modes})",
            values.dim(),
            grid.len()
        )));
    }
    if stride == 0 || !grid.steps().is_multiple_of(stride) {
        return Err(Error::GridMismatch(format!("stride {stride} does not divide {}", grid.steps())));
    }
    let n = grid.steps();
    let mut out = Array2::zeros((n / stride + 1, modes));
    if drift.is_zero() {
        return Ok(out);
    }
    let op = StepOperator::new(scale, grid.step());
    let mut d = vec![0.0; modes];
    let mut f_prev = vec![0.0; modes];
    let mut f_next = vec![0.0; modes];
    let row = |i: usize| values.row(i).to_vec();
    drift.eval_into(&row(0), &mut f_prev);
    for j in 0..n {
        drift.eval_into(&row(j + 1), &mut f_next);
        for k in 0..modes {
            d[k] = op.decay[k] * d[k] + op.w0[k] * f_prev[k] + op.w1[k] * f_next[k];
        }
        std::mem::swap(&mut f_prev, &mut f_next);
        if (j + 1) % stride == 0 {
            out.row_mut((j + 1) / stride).assign(&ndarray::ArrayView1::from(&d[..]));
        }
    }
    Ok(out)
}
