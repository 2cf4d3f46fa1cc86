//! Uniform Cartesian grids and the central-difference stencils used on them.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("grid spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
}

/// Samples of a field on the nodes `origin + spacing * (i, j, k)`.
#[derive(Debug, Clone)]
pub struct Grid3<T> {
    dims: [usize; 3],
    spacing: f64,
    origin: [f64; 3],
    data: Vec<T>,
}

impl<T: Copy + Send + Sync> Grid3<T> {
    pub fn from_fn<F>(dims: [usize; 3], spacing: f64, origin: [f64; 3], f: F) -> Self
    where
        F: Fn([f64; 3]) -> T + Sync,
    {
        use rayon::prelude::*;
        let plane = dims[1] * dims[2];
        let data = (0..dims[0] * plane)
            .into_par_iter()
            .map(|idx| {
                let (i, rem) = (idx / plane, idx % plane);
                let (j, k) = (rem / dims[2], rem % dims[2]);
                f([
                    origin[0] + spacing * i as f64,
                    origin[1] + spacing * j as f64,
                    origin[2] + spacing * k as f64,
                ])
            })
            .collect();
        Self {
            dims,
            spacing,
            origin,
            data,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + self.spacing * i as f64,
            self.origin[1] + self.spacing * j as f64,
            self.origin[2] + self.spacing * k as f64,
        ]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    /// Maps every interior node (one layer stripped on each face) through
    /// `f(i, j, k)`, where the indices refer to this grid.
    pub(crate) fn map_interior<U, F>(&self, f: F) -> Result<Grid3<U>, GridError>
    where
        U: Copy + Send + Sync,
        F: Fn(usize, usize, usize) -> U + Sync,
    {
        use rayon::prelude::*;
        self.check_stencil()?;
        let inner = self.dims.map(|d| d - 2);
        let plane = inner[1] * inner[2];
        let data = (0..inner[0] * plane)
            .into_par_iter()
            .map(|idx| {
                let (i, rem) = (idx / plane, idx % plane);
                let (j, k) = (rem / inner[2], rem % inner[2]);
                f(i + 1, j + 1, k + 1)
            })
            .collect();
        Ok(Grid3 {
            dims: inner,
            spacing: self.spacing,
            origin: self.origin.map(|o| o + self.spacing),
            data,
        })
    }

    fn check_stencil(&self) -> Result<(), GridError> {
        if self.dims.iter().any(|&d| d < 3) {
            return Err(GridError::GridTooSmall(format!(
                "need at least 3 nodes per axis, got {:?}",
                self.dims
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(GridError::BadSpacing(self.spacing));
        }
        Ok(())
    }
}

impl Grid3<f64> {
    /// 7-point central Laplacian on the interior nodes.
    pub fn laplacian(&self) -> Result<Grid3<f64>, GridError> {
        let h2 = self.spacing * self.spacing;
        self.map_interior(|i, j, k| {
            (self.get(i + 1, j, k)
                + self.get(i - 1, j, k)
                + self.get(i, j + 1, k)
                + self.get(i, j - 1, k)
                + self.get(i, j, k + 1)
                + self.get(i, j, k - 1)
                - 6.0 * self.get(i, j, k))
                / h2
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_is_exact_on_quadratics() {
        let g = Grid3::from_fn([5, 6, 7], 0.3, [-1.0, 0.2, 0.5], |p| {
            p[0] * p[0] + 2.0 * p[1] * p[1] - p[2] * p[2] + p[0] * p[1]
        });
        let lap = g.laplacian().unwrap();
        assert_eq!(lap.dims(), [3, 4, 5]);
        for v in lap.values() {
            assert!((v - 4.0).abs() < 1e-11);
        }
    }

    #[test]
    fn too_small_grid_is_rejected() {
        let g = Grid3::from_fn([2, 5, 5], 0.1, [0.0; 3], |_| 0.0);
        assert!(matches!(g.laplacian(), Err(GridError::GridTooSmall(_))));
    }
}
