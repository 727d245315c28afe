//! Running costs represented by their Taylor coefficients about the
//! uniform density.
//!
//! A cost couples an agent at `x` to the population density through the
//! pointwise composition `F(x, m(x, t))`. Admissible costs vanish at the
//! uniform density `m = 1` and have a positive constant linear coefficient,
//! so they are stored as the truncated series
//! `F(x, m) = Σ_k F_k(x) (m - 1)^k / k!` with `F_1` a scalar.

use crate::mesh::SpaceGrid;

/// Truncated Taylor expansion of a running cost about `m = 1`.
///
/// `c1` is the linear coefficient (a positive constant for admissible
/// costs); `higher[k - 2]` holds the grid function multiplying
/// `(m - 1)^k / k!` for `k = 2, 3, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningCost {
    pub c1: f64,
    pub higher: Vec<Vec<f64>>,
}

impl RunningCost {
    /// Cost with only the linear term, `F(x, m) = c1 (m - 1)`.
    pub fn linear(c1: f64) -> Self {
        Self { c1, higher: Vec::new() }
    }

    pub fn with_higher(c1: f64, higher: Vec<Vec<f64>>) -> Self {
        Self { c1, higher }
    }

    /// Highest retained Taylor order.
    pub fn order(&self) -> usize {
        1 + self.higher.len()
    }

    /// Coefficient field of order `k` sampled on `grid` (`k >= 1`).
    pub fn coefficient(&self, k: usize, grid: &SpaceGrid) -> Vec<f64> {
        assert!(k >= 1);
        if k == 1 {
            vec![self.c1; grid.len()]
        } else if k - 2 < self.higher.len() {
            self.higher[k - 2].clone()
        } else {
            vec![0.0; grid.len()]
        }
    }

    /// Pointwise evaluation `Σ_k F_k(x) (m(x) - 1)^k / k!`.
    ///
    /// Identically zero at the uniform density since the series has no
    /// constant term.
    pub fn evaluate(&self, m_slice: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m_slice.len()];
        let mut factorial = 1.0;
        for k in 1..=self.order() {
            factorial *= k as f64;
            for (j, m) in m_slice.iter().enumerate() {
                let coeff = if k == 1 {
                    self.c1
                } else {
                    self.higher[k - 2][j]
                };
                if coeff != 0.0 {
                    out[j] += coeff * (m - 1.0).powi(k as i32) / factorial;
                }
            }
        }
        out
    }

    /// Checks the admissibility clauses and reports the first failure.
    pub fn check_admissible(&self) -> AdmissibilityReport {
        if !self.c1.is_finite() || self.c1 <= 0.0 {
            return AdmissibilityReport {
                admissible: false,
                failed_clause: Some(Clause::PositiveLinearCoefficient),
            };
        }
        for field in &self.higher {
            if field.iter().any(|v| !v.is_finite()) {
                return AdmissibilityReport {
                    admissible: false,
                    failed_clause: Some(Clause::FiniteCoefficients),
                };
            }
        }
        AdmissibilityReport { admissible: true, failed_clause: None }
    }
}

/// Admissibility clause identifiers, mirrored in failure reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// The linear coefficient must be a positive real number.
    PositiveLinearCoefficient,
    /// Stored coefficient fields must be finite-valued.
    FiniteCoefficients,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub failed_clause: Option<Clause>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_interval_basis;

    #[test]
    fn vanishes_at_uniform_density() {
        let g = SpaceGrid::interval(33).unwrap();
        let b = build_interval_basis(&g, 3).unwrap();
        let cost = RunningCost::with_higher(1.5, vec![b.values(1).to_vec()]);
        let out = cost.evaluate(&vec![1.0; g.len()]);
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_term_only() {
        // c1 = 2, m = 1.5 everywhere: F = 2 * 0.5 = 1
        let cost = RunningCost::linear(2.0);
        let out = cost.evaluate(&vec![1.5; 17]);
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn quadratic_term_matches_series_oracle() {
        // c1 = 1, F_2 = mode 1, m = 1 + eps: value is eps + mode1 * eps^2 / 2
        let g = SpaceGrid::interval(65).unwrap();
        let b = build_interval_basis(&g, 3).unwrap();
        let cost = RunningCost::with_higher(1.0, vec![b.values(1).to_vec()]);
        let eps = 0.3;
        let out = cost.evaluate(&vec![1.0 + eps; g.len()]);
        for (j, v) in out.iter().enumerate() {
            let oracle = eps + b.values(1)[j] * eps * eps / 2.0;
            assert!((v - oracle).abs() < 1e-14, "node {j}");
        }
    }

    #[test]
    fn admissibility_clauses() {
        assert!(RunningCost::linear(1.0).check_admissible().admissible);

        let zero = RunningCost::linear(0.0).check_admissible();
        assert!(!zero.admissible);
        assert_eq!(zero.failed_clause, Some(Clause::PositiveLinearCoefficient));

        let negative = RunningCost::linear(-0.5).check_admissible();
        assert!(!negative.admissible);
        assert_eq!(negative.failed_clause, Some(Clause::PositiveLinearCoefficient));

        let nan = RunningCost::with_higher(1.0, vec![vec![f64::NAN; 4]]).check_admissible();
        assert!(!nan.admissible);
        assert_eq!(nan.failed_clause, Some(Clause::FiniteCoefficients));
    }

    #[test]
    fn finite_differences_recover_each_coefficient() {
        // evaluate(F, 1 + z) is polynomial in z; divided differences at z = 0
        // reproduce F_k exactly for the retained orders
        let g = SpaceGrid::interval(33).unwrap();
        let b = build_interval_basis(&g, 4).unwrap();
        let f2 = b.values(1).to_vec();
        let f3: Vec<f64> = b.values(2).iter().map(|v| 0.4 * v).collect();
        let cost = RunningCost::with_higher(1.25, vec![f2.clone(), f3.clone()]);

        let eval_at = |z: f64| cost.evaluate(&vec![1.0 + z; g.len()]);
        let d = 1e-2;
        let (p2, p1, m1, m2) = (eval_at(2.0 * d), eval_at(d), eval_at(-d), eval_at(-2.0 * d));

        for j in 0..g.len() {
            // five-point first derivative and the central second and third
            // differences are exact for cubic polynomials
            let d1 = (-p2[j] + 8.0 * p1[j] - 8.0 * m1[j] + m2[j]) / (12.0 * d);
            let d2 = (p1[j] - 2.0 * 0.0 + m1[j]) / (d * d); // F(1) = 0
            let d3 = (p2[j] - 2.0 * p1[j] + 2.0 * m1[j] - m2[j]) / (2.0 * d * d * d);
            assert!((d1 - 1.25).abs() < 1e-9, "order 1 at {j}: {d1}");
            assert!((d2 - f2[j]).abs() < 1e-8, "order 2 at {j}: {d2}");
            assert!((d3 - f3[j]).abs() < 1e-6, "order 3 at {j}: {d3}");
        }
    }
}
