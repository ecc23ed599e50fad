//! Dense 2-D cell grids used for inputs, states, and outputs.

use serde::{Deserialize, Serialize};

use crate::error::{CennError, Result};

/// A rectangular grid of `f64` cell values in row-major order.
///
/// `width` is the number of columns, `height` the number of rows; the cell at
/// column `x`, row `y` lives at index `y * width + x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl CellGrid {
    /// Creates a grid filled with a constant value.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CennError::EmptyGrid);
        }
        Ok(Self {
            width,
            height,
            data: vec![value; width * height],
        })
    }

    /// Creates a grid from row-major data.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CennError::EmptyGrid);
        }
        if data.len() != width * height {
            return Err(CennError::ParamLength {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of cells in the grid.
    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Returns true if the two grids have identical dimensions.
    pub fn same_shape(&self, other: &CellGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Errors unless `other` has the same dimensions as `self`.
    pub fn check_shape(&self, other: &CellGrid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(CennError::DimensionMismatch {
                expected_width: self.width,
                expected_height: self.height,
                got_width: other.width,
                got_height: other.height,
            })
        }
    }

    /// Mean absolute difference over all cells.
    pub fn mean_abs_diff(&self, other: &CellGrid) -> Result<f64> {
        self.check_shape(other)?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(sum / self.area() as f64)
    }

    /// Maximum absolute difference over all cells.
    pub fn max_abs_diff(&self, other: &CellGrid) -> Result<f64> {
        self.check_shape(other)?;
        let mut max = 0.0f64;
        for (a, b) in self.data.iter().zip(&other.data) {
            max = max.max((a - b).abs());
        }
        Ok(max)
    }

    /// Returns true if every cell is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// How cells beyond the grid edge are read during template application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Out-of-range neighbors contribute a fixed value (zero by default).
    FixedZero,
    /// Out-of-range neighbors replicate the nearest edge cell.
    Replicate,
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::FixedZero
    }
}

/// Reads a cell with the boundary policy applied; `x`/`y` may be out of range
/// by at most the template radius.
#[inline]
pub(crate) fn sample(grid: &CellGrid, x: isize, y: isize, boundary: Boundary) -> f64 {
    let w = grid.width() as isize;
    let h = grid.height() as isize;
    match boundary {
        Boundary::FixedZero => {
            if x < 0 || y < 0 || x >= w || y >= h {
                0.0
            } else {
                grid.get(x as usize, y as usize)
            }
        }
        Boundary::Replicate => {
            let cx = x.clamp(0, w - 1) as usize;
            let cy = y.clamp(0, h - 1) as usize;
            grid.get(cx, cy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filled_and_index() {
        let mut g = CellGrid::filled(3, 2, 0.5).unwrap();
        assert_eq!(g.width(), 3);
        assert_eq!(g.height(), 2);
        assert_eq!(g.area(), 6);
        g.set(2, 1, -1.0);
        assert_eq!(g.get(2, 1), -1.0);
        assert_eq!(g.as_slice()[5], -1.0);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(CellGrid::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(CellGrid::from_vec(0, 2, vec![]).is_err());
        let g = CellGrid::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(g.get(0, 1), 3.0);
    }

    #[test]
    fn diff_metrics() {
        let a = CellGrid::from_vec(2, 1, vec![1.0, -1.0]).unwrap();
        let b = CellGrid::from_vec(2, 1, vec![0.0, -1.0]).unwrap();
        assert_eq!(a.mean_abs_diff(&b).unwrap(), 0.5);
        assert_eq!(a.max_abs_diff(&b).unwrap(), 1.0);
        let c = CellGrid::filled(3, 1, 0.0).unwrap();
        assert!(a.mean_abs_diff(&c).is_err());
    }

    #[test]
    fn boundary_sampling() {
        let g = CellGrid::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(sample(&g, -1, 0, Boundary::FixedZero), 0.0);
        assert_eq!(sample(&g, 2, 3, Boundary::FixedZero), 0.0);
        assert_eq!(sample(&g, -1, 0, Boundary::Replicate), 1.0);
        assert_eq!(sample(&g, 2, 3, Boundary::Replicate), 4.0);
        assert_eq!(sample(&g, 1, 1, Boundary::Replicate), 4.0);
    }
}
