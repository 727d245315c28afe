//! Discrete spatial operators with the homogeneous Neumann condition
//! built into the boundary stencils.

use crate::error::{Error, Result};
use crate::mesh::SpaceGrid;

/// Second-order Laplacian with ghost-point reflection at the boundary.
///
/// Interior nodes use the central stencil `(f[j-1] - 2 f[j] + f[j+1]) / h^2`.
/// At a boundary the ghost value is the mirror image of the first interior
/// node, which enforces a zero normal derivative and makes the stencil
/// `2 (f[1] - f[0]) / h^2`. The operator returns `Δf` (not `-Δf`); callers
/// state their own sign.
///
/// Sampled Neumann cosine modes are exact eigenvectors of this operator
/// with eigenvalue `-2 (1 - cos(i π h)) / h^2`, which approaches the
/// continuum `-(i π)^2` at second order in the spacing.
pub fn neumann_laplacian_apply(grid: &SpaceGrid, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: f.len() });
    }
    let h2 = grid.spacing() * grid.spacing();
    match grid.dimension() {
        1 => {
            let n = grid.points_per_axis();
            let mut out = vec![0.0; n];
            out[0] = 2.0 * (f[1] - f[0]) / h2;
            for j in 1..n - 1 {
                out[j] = (f[j - 1] - 2.0 * f[j] + f[j + 1]) / h2;
            }
            out[n - 1] = 2.0 * (f[n - 2] - f[n - 1]) / h2;
            Ok(out)
        }
        2 => {
            let n = grid.points_per_axis();
            let idx = |ix: usize, iy: usize| iy * n + ix;
            let mut out = vec![0.0; grid.len()];
            for iy in 0..n {
                for ix in 0..n {
                    let center = f[idx(ix, iy)];
                    let left = if ix == 0 { f[idx(1, iy)] } else { f[idx(ix - 1, iy)] };
                    let right = if ix == n - 1 { f[idx(n - 2, iy)] } else { f[idx(ix + 1, iy)] };
                    let down = if iy == 0 { f[idx(ix, 1)] } else { f[idx(ix, iy - 1)] };
                    let up = if iy == n - 1 { f[idx(ix, n - 2)] } else { f[idx(ix, iy + 1)] };
                    out[idx(ix, iy)] = (left + right + down + up - 4.0 * center) / h2;
                }
            }
            Ok(out)
        }
        _ => unreachable!(),
    }
}

/// Node gradient on an interval grid: central differences in the interior,
/// one-sided second-order formulas at the boundary. For fields satisfying
/// the Neumann condition the boundary values converge to zero at O(h^2).
pub fn gradient(grid: &SpaceGrid, f: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(grid.dimension(), 1, "gradient is for interval grids");
    if f.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: f.len() });
    }
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    Ok(out)
}

/// One-sided first-difference defect at the two boundary nodes, an O(h)
/// diagnostic for the Neumann condition.
pub fn neumann_defect(grid: &SpaceGrid, f: &[f64]) -> f64 {
    assert_eq!(grid.dimension(), 1);
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let left = (f[1] - f[0]).abs() / h;
    let right = (f[n - 1] - f[n - 2]).abs() / h;
    left.max(right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = SpaceGrid::interval(33).unwrap();
        let f = vec![4.0; g.len()];
        let lap = neumann_laplacian_apply(&g, &f).unwrap();
        assert!(lap.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn laplacian_of_x_squared_interior() {
        // the operator returns Δf, so x^2 maps to 2 on interior nodes
        let g = SpaceGrid::interval(65).unwrap();
        let f = g.sample(|x| x * x);
        let lap = neumann_laplacian_apply(&g, &f).unwrap();
        for j in 1..g.len() - 1 {
            assert!((lap[j] - 2.0).abs() < 1e-9, "node {j}: {}", lap[j]);
        }
    }

    #[test]
    fn laplacian_eigen_residual_second_order() {
        // residual of Δ_h m + β m shrinks at slope 2 under refinement
        let beta = PI * PI;
        let mut sup = Vec::new();
        for points in [65usize, 129, 257] {
            let g = SpaceGrid::interval(points).unwrap();
            let m = g.sample(|x| (PI * x).cos() * std::f64::consts::SQRT_2);
            let lap = neumann_laplacian_apply(&g, &m).unwrap();
            let r = lap
                .iter()
                .zip(&m)
                .fold(0.0f64, |acc, (l, v)| acc.max((l + beta * v).abs()));
            sup.push(r);
        }
        let s1 = (sup[0] / sup[1]).log2();
        let s2 = (sup[1] / sup[2]).log2();
        assert!((s1 - 2.0).abs() < 0.2, "slope {s1}");
        assert!((s2 - 2.0).abs() < 0.2, "slope {s2}");
    }

    #[test]
    fn sampled_cosines_are_exact_discrete_eigenvectors() {
        // Δ_h cos(iπx) = -2(1 - cos(iπh))/h^2 cos(iπx), to roundoff
        let g = SpaceGrid::interval(49).unwrap();
        let h = g.spacing();
        for i in [1usize, 2, 5] {
            let f = g.sample(|x| (i as f64 * PI * x).cos());
            let lap = neumann_laplacian_apply(&g, &f).unwrap();
            let discrete = -2.0 * (1.0 - (i as f64 * PI * h).cos()) / (h * h);
            for j in 0..g.len() {
                assert!(
                    (lap[j] - discrete * f[j]).abs() < 1e-8,
                    "mode {i} node {j}"
                );
            }
        }
    }

    #[test]
    fn gradient_of_affine_exact() {
        let g = SpaceGrid::interval(33).unwrap();
        let f = g.sample(|x| 3.0 * x - 1.0);
        let grad = gradient(&g, &f).unwrap();
        assert!(grad.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn square_laplacian_tensor_mode() {
        let g = SpaceGrid::square(65).unwrap();
        let n = g.points_per_axis();
        let mut f = vec![0.0; g.len()];
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = (g.coord(ix), g.coord(iy));
                f[iy * n + ix] = (PI * x).cos() * (2.0 * PI * y).cos();
            }
        }
        let beta = PI * PI * 5.0;
        let lap = neumann_laplacian_apply(&g, &f).unwrap();
        let r = lap
            .iter()
            .zip(&f)
            .fold(0.0f64, |acc, (l, v)| acc.max((l + beta * v).abs()));
        assert!(r < 0.1, "square eigen residual {r}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = SpaceGrid::interval(9).unwrap();
        assert!(matches!(
            neumann_laplacian_apply(&g, &[0.0; 4]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
