//! Grids, fields, and quadrature on the unit domain.
//!
//! The state space is the unit interval (or unit square), so the domain
//! measure is 1 and densities integrate to 1. All fields are sampled on
//! uniform nodes including both endpoints; integrals use the composite
//! trapezoid rule, which is spectrally accurate for the cosine modes used
//! throughout.

use crate::error::{Error, Result};

/// Uniform spatial grid on the unit interval or unit square.
///
/// Node coordinates along an axis are `x_j = j * spacing` with
/// `spacing * (points_per_axis - 1) = 1`, so the endpoints always lie on
/// the grid and the total measure is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    dimension: usize,
    points_per_axis: usize,
    spacing: f64,
}

impl SpaceGrid {
    /// Interval grid with `points` nodes, endpoints included.
    pub fn interval(points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::GridTooSmall { got: points, min: 3 });
        }
        Ok(Self {
            dimension: 1,
            points_per_axis: points,
            spacing: 1.0 / (points - 1) as f64,
        })
    }

    /// Tensor grid on the unit square with `points` nodes per axis.
    pub fn square(points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::GridTooSmall { got: points, min: 3 });
        }
        Ok(Self {
            dimension: 2,
            points_per_axis: points,
            spacing: 1.0 / (points - 1) as f64,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes (`points_per_axis` to the power `dimension`).
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The domain always has unit measure.
    pub fn total_measure(&self) -> f64 {
        1.0
    }

    /// Coordinate of node `j` on an axis.
    pub fn coord(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    /// All axis coordinates.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|j| self.coord(j)).collect()
    }

    /// Sample a function of the axis coordinate on an interval grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        assert_eq!(self.dimension, 1, "sample is for interval grids");
        self.coords().into_iter().map(f).collect()
    }

    /// Trapezoid weight of node `index` (half weight on faces, quarter on corners).
    pub fn weight(&self, index: usize) -> f64 {
        let n = self.points_per_axis;
        let axis_weight = |j: usize| -> f64 {
            if j == 0 || j == n - 1 {
                0.5 * self.spacing
            } else {
                self.spacing
            }
        };
        match self.dimension {
            1 => axis_weight(index),
            2 => axis_weight(index % n) * axis_weight(index / n),
            _ => unreachable!(),
        }
    }

    /// Composite trapezoid approximation of the integral over the domain.
    ///
    /// Exact for affine functions, and exact (up to roundoff) for products
    /// of cosine modes below the Nyquist limit of the grid.
    pub fn quadrature(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len(), "slice shape must match grid");
        values
            .iter()
            .enumerate()
            .map(|(j, v)| self.weight(j) * v)
            .sum()
    }

    /// Quadrature of a pointwise product, the discrete L2 pairing.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), self.len());
        assert_eq!(b.len(), self.len());
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(j, (x, y))| self.weight(j) * x * y)
            .sum()
    }
}

/// Uniform time grid on `[0, horizon]` with `steps` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("time grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`; node 0 is t = 0, the last node is t = horizon.
    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.horizon
        } else {
            n as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|n| self.time(n)).collect()
    }
}

/// Scalar field on the space-time grid, stored row-major by time node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    nodes_t: usize,
    nodes_x: usize,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(time: &TimeGrid, space: &SpaceGrid) -> Self {
        Self {
            nodes_t: time.nodes(),
            nodes_x: space.len(),
            values: vec![0.0; time.nodes() * space.len()],
        }
    }

    /// Build from a function of (time index, space index).
    pub fn from_fn(time: &TimeGrid, space: &SpaceGrid, f: impl Fn(usize, usize) -> f64) -> Self {
        let (nt, nx) = (time.nodes(), space.len());
        let mut values = Vec::with_capacity(nt * nx);
        for n in 0..nt {
            for j in 0..nx {
                values.push(f(n, j));
            }
        }
        Self { nodes_t: nt, nodes_x: nx, values }
    }

    pub fn time_nodes(&self) -> usize {
        self.nodes_t
    }

    pub fn space_nodes(&self) -> usize {
        self.nodes_x
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        &self.values[n * self.nodes_x..(n + 1) * self.nodes_x]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.nodes_x..(n + 1) * self.nodes_x]
    }

    pub fn at(&self, n: usize, j: usize) -> f64 {
        self.values[n * self.nodes_x + j]
    }

    pub fn set(&mut self, n: usize, j: usize, v: f64) {
        self.values[n * self.nodes_x + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        Self {
            nodes_t: self.nodes_t,
            nodes_x: self.nodes_x,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + scale * b)
                .collect(),
        }
    }

    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            nodes_t: self.nodes_t,
            nodes_x: self.nodes_x,
            values: self.values.iter().map(|v| scale * v).collect(),
        }
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Trapezoid-in-time composition of the spatial quadrature: the integral
/// of a field over space and time.
pub fn spacetime_quadrature(field: &SpaceTimeField, time: &TimeGrid, space: &SpaceGrid) -> f64 {
    assert_eq!(field.time_nodes(), time.nodes());
    let dt = time.dt();
    let mut total = 0.0;
    for n in 0..time.nodes() {
        let w = if n == 0 || n == time.steps() { 0.5 * dt } else { dt };
        total += w * space.quadrature(field.slice(n));
    }
    total
}

/// Space-time integral of a pointwise product of three fields.
pub fn spacetime_triple_product(
    a: &SpaceTimeField,
    b: &SpaceTimeField,
    c: &SpaceTimeField,
    time: &TimeGrid,
    space: &SpaceGrid,
) -> f64 {
    let dt = time.dt();
    let mut total = 0.0;
    for n in 0..time.nodes() {
        let wt = if n == 0 || n == time.steps() { 0.5 * dt } else { dt };
        let (sa, sb, sc) = (a.slice(n), b.slice(n), c.slice(n));
        let mut inner = 0.0;
        for j in 0..space.len() {
            inner += space.weight(j) * sa[j] * sb[j] * sc[j];
        }
        total += wt * inner;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_geometry() {
        let g = SpaceGrid::interval(101).unwrap();
        assert_eq!(g.len(), 101);
        assert!((g.spacing() * 100.0 - 1.0).abs() < 1e-15);
        assert_eq!(g.total_measure(), 1.0);
        assert!((g.coord(100) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_small_grid_rejected() {
        assert!(matches!(SpaceGrid::interval(2), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn quadrature_constant_is_exact() {
        let g = SpaceGrid::interval(64 + 1).unwrap();
        let ones = vec![1.0; g.len()];
        assert_eq!(g.quadrature(&ones), 1.0);
    }

    #[test]
    fn quadrature_exact_for_affine() {
        // trapezoid integrates a + b*x exactly on a uniform grid
        let g = SpaceGrid::interval(17).unwrap();
        for (a, b) in [(1.0, 0.0), (0.0, 1.0), (2.5, -3.0), (-0.75, 0.125)] {
            let f = g.sample(|x| a + b * x);
            let exact = a + b / 2.0;
            assert!(
                (g.quadrature(&f) - exact).abs() < 1e-14,
                "affine ({a},{b}) not exact"
            );
        }
    }

    #[test]
    fn quadrature_kills_cosine_mean() {
        let g = SpaceGrid::interval(129).unwrap();
        let f = g.sample(|x| (std::f64::consts::PI * x).cos());
        assert!(g.quadrature(&f).abs() < 1e-12);
    }

    #[test]
    fn square_weights_sum_to_one() {
        let g = SpaceGrid::square(33).unwrap();
        let total: f64 = (0..g.len()).map(|j| g.weight(j)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_grid_nodes() {
        let t = TimeGrid::new(2.0, 8).unwrap();
        assert_eq!(t.nodes(), 9);
        assert!((t.dt() - 0.25).abs() < 1e-15);
        assert_eq!(t.time(0), 0.0);
        assert_eq!(t.time(8), 2.0);
    }

    #[test]
    fn spacetime_quadrature_separable() {
        // integral of (1 - t) * 1 over [0,1] x [0,1] is 1/2
        let time = TimeGrid::new(1.0, 64).unwrap();
        let space = SpaceGrid::interval(33).unwrap();
        let f = SpaceTimeField::from_fn(&time, &space, |n, _| 1.0 - time.time(n));
        assert!((spacetime_quadrature(&f, &time, &space) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn field_slicing_round_trips() {
        let time = TimeGrid::new(1.0, 4).unwrap();
        let space = SpaceGrid::interval(5).unwrap();
        let mut f = SpaceTimeField::zeros(&time, &space);
        f.set(2, 3, 7.0);
        assert_eq!(f.at(2, 3), 7.0);
        assert_eq!(f.slice(2)[3], 7.0);
        assert_eq!(f.sup_norm(), 7.0);
    }
}
