//! Neumann eigenbasis of the Laplacian on the unit interval and square.
//!
//! On the interval the eigenpairs are analytic: `β_i = (iπ)^2` with
//! eigenfunction `√2 cos(iπx)` for `i ≥ 1` and the constant 1 for `i = 0`.
//! The square basis is the tensor product, ordered by eigenvalue. Pairs are
//! sampled from the closed forms rather than computed numerically, so basis
//! quality never depends on an eigensolver.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::mesh::SpaceGrid;

/// One eigenpair: the eigenvalue of `-Δ` and the sampled eigenfunction.
#[derive(Debug, Clone)]
pub struct Mode {
    pub eigenvalue: f64,
    pub values: Vec<f64>,
    /// Axis indices of the mode, `(i, 0)` on the interval, `(i, j)` on the square.
    pub axis_indices: (usize, usize),
}

/// Ordered, discretely orthonormal Neumann eigenpairs on a grid.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    grid: SpaceGrid,
    modes: Vec<Mode>,
}

/// Highest cosine index with at least 4 grid points per wavelength.
///
/// Mode `i` has wavelength `2/i`, so the constraint `2/(i h) ≥ 4` gives
/// `i ≤ (points - 1) / 2`.
pub fn resolution_limit(grid: &SpaceGrid) -> usize {
    (grid.points_per_axis() - 1) / 2
}

/// Analytic Neumann eigenpairs on the unit interval, modes `0..count`.
///
/// Rejects truncations beyond the grid's resolution limit so that discrete
/// orthonormality holds for every retained pair.
pub fn build_interval_basis(grid: &SpaceGrid, count: usize) -> Result<SpectralBasis> {
    assert_eq!(grid.dimension(), 1, "interval basis needs a 1-d grid");
    if count == 0 {
        return Err(Error::InvalidConfig("basis needs at least one mode".into()));
    }
    let limit = resolution_limit(grid);
    if count - 1 > limit {
        return Err(Error::Resolution { mode: count - 1, limit });
    }
    let modes = (0..count)
        .map(|i| Mode {
            eigenvalue: interval_eigenvalue(i),
            values: sample_cosine(grid, i),
            axis_indices: (i, 0),
        })
        .collect();
    Ok(SpectralBasis { grid: grid.clone(), modes })
}

/// Tensor-product Neumann eigenpairs on the unit square, the `count`
/// smallest eigenvalues with lexicographic `(i, j)` tie-breaking.
pub fn build_square_basis(grid: &SpaceGrid, count: usize) -> Result<SpectralBasis> {
    assert_eq!(grid.dimension(), 2, "square basis needs a 2-d grid");
    if count == 0 {
        return Err(Error::InvalidConfig("basis needs at least one mode".into()));
    }
    let limit = resolution_limit(grid);
    let mut pairs: Vec<(usize, usize)> = (0..=limit)
        .flat_map(|i| (0..=limit).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|a, b| {
        let ba = interval_eigenvalue(a.0) + interval_eigenvalue(a.1);
        let bb = interval_eigenvalue(b.0) + interval_eigenvalue(b.1);
        ba.partial_cmp(&bb).unwrap().then(a.cmp(b))
    });
    if count > pairs.len() {
        return Err(Error::Resolution { mode: count - 1, limit });
    }
    let n = grid.points_per_axis();
    let modes = pairs[..count]
        .iter()
        .map(|&(i, j)| {
            let fx = sample_cosine_axis(grid, i);
            let fy = sample_cosine_axis(grid, j);
            let mut values = Vec::with_capacity(grid.len());
            for iy in 0..n {
                for ix in 0..n {
                    values.push(fx[ix] * fy[iy]);
                }
            }
            Mode {
                eigenvalue: interval_eigenvalue(i) + interval_eigenvalue(j),
                values,
                axis_indices: (i, j),
            }
        })
        .collect();
    Ok(SpectralBasis { grid: grid.clone(), modes })
}

fn interval_eigenvalue(i: usize) -> f64 {
    let w = i as f64 * PI;
    w * w
}

fn sample_cosine_axis(grid: &SpaceGrid, i: usize) -> Vec<f64> {
    let norm = if i == 0 { 1.0 } else { SQRT_2 };
    (0..grid.points_per_axis())
        .map(|j| norm * (i as f64 * PI * grid.coord(j)).cos())
        .collect()
}

fn sample_cosine(grid: &SpaceGrid, i: usize) -> Vec<f64> {
    sample_cosine_axis(grid, i)
}

/// Analytic spatial derivative of interval mode `i`, `-√2 iπ sin(iπx)`.
pub fn sample_cosine_derivative(grid: &SpaceGrid, i: usize) -> Vec<f64> {
    assert_eq!(grid.dimension(), 1);
    if i == 0 {
        return vec![0.0; grid.len()];
    }
    let w = i as f64 * PI;
    (0..grid.points_per_axis())
        .map(|j| -SQRT_2 * w * (w * grid.coord(j)).sin())
        .collect()
}

impl SpectralBasis {
    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, i: usize) -> &Mode {
        &self.modes[i]
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.modes[i].eigenvalue
    }

    pub fn values(&self, i: usize) -> &[f64] {
        &self.modes[i].values
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Coefficient of `f` on mode `i` under the discrete pairing.
    pub fn coefficient(&self, i: usize, f: &[f64]) -> f64 {
        self.grid.inner(&self.modes[i].values, f)
    }

    /// All modal coefficients of `f`.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        (0..self.count()).map(|i| self.coefficient(i, f)).collect()
    }

    /// Grid function `Σ coeffs[i] * mode_i`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        assert!(coeffs.len() <= self.count());
        let mut out = vec![0.0; self.grid.len()];
        for (c, mode) in coeffs.iter().zip(&self.modes) {
            if *c != 0.0 {
                for (o, v) in out.iter_mut().zip(&mode.values) {
                    *o += c * v;
                }
            }
        }
        out
    }

    /// Sup-norm of `f` minus its projection onto the basis.
    pub fn truncation_residual(&self, f: &[f64]) -> f64 {
        let recon = self.synthesize(&self.project(f));
        f.iter()
            .zip(&recon)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
