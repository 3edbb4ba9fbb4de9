use crate::error::{Error, Result};

/// Uniform time grid `0 = t_0 < ... < t_n = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::config("time grid needs at least one step"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { steps, horizon })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.step()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|i| self.time(i))
    }

    /// Grid index of `t`, if `t` lies on the grid (relative tolerance 1e-9 of a step).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.step();
        let i = x.round();
        if (x - i).abs() > 1e-9 || i < 0.0 || i > self.steps as f64 {
            return Err(Error::GridMismatch(format!(
                "time {t} is not a point of the grid with step {}",
                self.step()
            )));
        }
        Ok(i as usize)
    }

    /// The grid covering `[0, t_steps]`.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.steps {
            return Err(Error::GridMismatch(format!(
                "cannot truncate a {}-step grid to {steps} steps",
                self.steps
            )));
        }
        Ok(Self {
            steps,
            horizon: self.time(steps),
        })
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.steps == other.steps && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon
    }

    pub fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grids differ: ({}, {}) vs ({}, {})",
                self.steps, self.horizon, other.steps, other.horizon
            )))
        }
    }
}
