//! Uniform one-dimensional grids and sampled fields.
//!
//! A grid covers `[-L, L)` with `points` nodes `x_j = -L + j h`, `h = 2L / points`.
//! The node count is a power of two so the spectral operators can use a
//! radix-2 FFT, and the node `points / 2` sits exactly at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= {MIN_POINTS}, got {points}"
            )));
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn coord(&self, index: usize) -> f64 {
        -self.half_width + index as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coord(j)).collect()
    }

    /// Index of the node at `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.points / 2
    }

    /// Nearest node to `x`, if `x` lies inside the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let j = ((x + self.half_width) / self.spacing()).round();
        if j >= 0.0 && (j as usize) < self.points {
            Some(j as usize)
        } else {
            None
        }
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.points {
            Ok(())
        } else {
            Err(Error::IndexOutOfGrid {
                index,
                points: self.points,
            })
        }
    }
}

/// Real samples on a [`GridSpec`]; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::LengthMismatch {
                expected: grid.points(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.points()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.coords().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    /// Skips the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_trusted(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.points());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Riemann sum `h * sum(values)`; exact for the discrete mass.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn l1_distance(&self, other: &GridField) -> f64 {
        self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
    }

    pub fn linf_distance(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Positions of the first and last node carrying a value above `threshold`.
    pub fn support(&self, threshold: f64) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|&v| v > threshold)?;
        let last = self.values.iter().rposition(|&v| v > threshold)?;
        Some((self.grid.coord(first), self.grid.coord(last)))
    }
}
