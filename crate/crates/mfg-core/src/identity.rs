//! Numerical verification of the pairing identity that drives the
//! coefficient-uniqueness argument.
//!
//! For a difference pair `(ū, m̄)` whose density row closes, whose data
//! rows all vanish, and for any solution `(v, ρ)` of the backward system,
//! the source of the value row pairs to zero against `ρ`:
//!
//! ```text
//!   ∫_Q (-ū_t - Δū - c m̄) ρ dx dt = 0.
//! ```
//!
//! Zero-data difference pairs are manufactured modally: pick a smooth
//! window `w` with `w = w' = 0` at both endpoints, set the density
//! coefficient `μ̄ = a w` on a mode, recover `ν̄` from the density row,
//! and read the value-row residual off as the source. The pairing, the
//! two integration-by-parts identities, and the hypothesis rows are then
//! evaluated by trapezoid quadrature on the grid. Breaking the window at
//! the far endpoint (the mutation scenario) must blow the pairing up by
//! orders of magnitude, which keeps the check falsifiable.

use crate::basis::SpectralBasis;
use crate::mesh::{SpaceGrid, SpaceTimeField, TimeGrid};
use crate::operators::neumann_laplacian_apply;
use crate::probes::{ProbeFamily, ProbingMode};
use crate::tolerances;

/// Space-time quadrature of `(f1 - f2)(x) · m2(x, t) · ρ(x, t)`.
pub fn evaluate_pairing(
    f1_coeff: &[f64],
    f2_coeff: &[f64],
    m2: &SpaceTimeField,
    rho: &SpaceTimeField,
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> f64 {
    assert_eq!(f1_coeff.len(), grid.len());
    assert_eq!(f2_coeff.len(), grid.len());
    let dt = time.dt();
    let mut total = 0.0;
    for n in 0..time.nodes() {
        let wt = if n == 0 || n == time.steps() { 0.5 * dt } else { dt };
        let (ms, rs) = (m2.slice(n), rho.slice(n));
        let mut inner = 0.0;
        for j in 0..grid.len() {
            inner += grid.weight(j) * (f1_coeff[j] - f2_coeff[j]) * ms[j] * rs[j];
        }
        total += wt * inner;
    }
    total
}

/// Time window shaping the manufactured density coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// `16 (t/T)² (1 - t/T)²`: vanishes with its derivative at both ends.
    ZeroData,
    /// `(t/T)²`: leaves the far endpoint open, breaking the hypothesis.
    BrokenAtHorizon,
}

impl Window {
    fn value(self, t: f64, horizon: f64) -> f64 {
        let s = t / horizon;
        match self {
            Window::ZeroData => 16.0 * s * s * (1.0 - s) * (1.0 - s),
            Window::BrokenAtHorizon => s * s,
        }
    }

    fn derivative(self, t: f64, horizon: f64) -> f64 {
        let s = t / horizon;
        match self {
            Window::ZeroData => 32.0 / horizon * (s * (1.0 - s) * (1.0 - s) - s * s * (1.0 - s)),
            Window::BrokenAtHorizon => 2.0 * s / horizon,
        }
    }

    fn second_derivative(self, t: f64, horizon: f64) -> f64 {
        let s = t / horizon;
        let h2 = horizon * horizon;
        match self {
            Window::ZeroData => 32.0 / h2 * ((1.0 - s) * (1.0 - s) - 4.0 * s * (1.0 - s) + s * s),
            Window::BrokenAtHorizon => 2.0 / h2,
        }
    }
}

/// A manufactured difference-pair scenario on a few modes.
#[derive(Debug, Clone)]
pub struct PairingScenario {
    pub label: String,
    pub c: f64,
    /// `(mode index, amplitude)` of the density coefficient.
    pub modes: Vec<(usize, f64)>,
    pub window: Window,
    /// Adjoint probe paired against the scenario.
    pub probe_family: ProbeFamily,
    pub probe_index: usize,
}

/// Quadrature report of one scenario.
#[derive(Debug, Clone)]
pub struct PairingReport {
    pub label: String,
    pub pairing: f64,
    /// `∫ (m̄ Δv - ρ Δū)`, the first integration-by-parts identity.
    pub ibp_first: f64,
    /// `∫ (2 m̄ Δv + c ρ m̄ + ū Δv)`, the second.
    pub ibp_second: f64,
    /// Sup norms of `ū(·,0), ū(·,T), m̄(·,0), m̄(·,T)`.
    pub data_rows: [f64; 4],
    /// Residual of the density row under the modal closed forms.
    pub density_row_residual: f64,
    pub hypothesis_ok: bool,
    /// Set when the hypothesis holds and the pairing is inside tolerance.
    pub pairing_ok: bool,
}

struct ModeChannel {
    shape: Vec<f64>,
    beta: f64,
    amp: f64,
}

/// Evaluates the pairing and both integration-by-parts identities for one
/// manufactured scenario, streaming over time nodes so horizon-scale
/// grids never materialize five full space-time fields.
pub fn verify_pairing_identity(
    scenario: &PairingScenario,
    time: &TimeGrid,
    basis: &SpectralBasis,
) -> PairingReport {
    let grid = basis.grid();
    let n = grid.len();
    let horizon = time.horizon();
    let c = scenario.c;
    let dt = time.dt();

    let probe = ProbingMode::new(
        scenario.probe_family,
        scenario.probe_index,
        c,
        basis,
        horizon,
    )
    .expect("probe parameters are validated by the scenario builder");
    let probe_shape = basis.values(scenario.probe_index);

    let channels: Vec<ModeChannel> = scenario
        .modes
        .iter()
        .map(|&(index, amp)| ModeChannel {
            shape: basis.values(index).to_vec(),
            beta: basis.eigenvalue(index),
            amp,
        })
        .collect();

    let mut pairing = 0.0;
    let mut ibp_first = 0.0;
    let mut ibp_second = 0.0;
    let mut data_rows = [0.0f64; 4];
    let mut density_row_residual = 0.0f64;

    let mut ubar = vec![0.0; n];
    let mut mbar = vec![0.0; n];
    let mut source = vec![0.0; n];

    for node in 0..time.nodes() {
        let t = time.time(node);
        let w = scenario.window.value(t, horizon);
        let dw = scenario.window.derivative(t, horizon);
        let ddw = scenario.window.second_derivative(t, horizon);

        ubar.iter_mut().for_each(|v| *v = 0.0);
        mbar.iter_mut().for_each(|v| *v = 0.0);
        source.iter_mut().for_each(|v| *v = 0.0);
        for ch in &channels {
            let mu = ch.amp * w;
            let dmu = ch.amp * dw;
            let ddmu = ch.amp * ddw;
            // density row closes by construction: ν̄ = -(μ̄' + β μ̄)/β
            let nu = -(dmu + ch.beta * mu) / ch.beta;
            let dnu = -(ddmu + ch.beta * dmu) / ch.beta;
            let s = -dnu + ch.beta * nu - c * mu;
            density_row_residual = density_row_residual.max((dmu + ch.beta * mu + ch.beta * nu).abs());
            for j in 0..n {
                ubar[j] += nu * ch.shape[j];
                mbar[j] += mu * ch.shape[j];
                source[j] += s * ch.shape[j];
            }
        }

        let (vf, rf) = (probe.u_factor(t), probe.m_factor(t));
        let wt = if node == 0 || node == time.steps() { 0.5 * dt } else { dt };

        let lap_ubar = neumann_laplacian_apply(grid, &ubar).expect("shape");
        // Δv of the sampled probe slice equals vf times Δ_h of the shape
        let lap_shape = neumann_laplacian_apply(grid, probe_shape).expect("shape");

        let mut inner_pairing = 0.0;
        let mut inner_first = 0.0;
        let mut inner_second = 0.0;
        for j in 0..n {
            let wj = grid.weight(j);
            let rho = rf * probe_shape[j];
            let lap_v = vf * lap_shape[j];
            inner_pairing += wj * source[j] * rho;
            inner_first += wj * (mbar[j] * lap_v - rho * lap_ubar[j]);
            inner_second += wj * (2.0 * mbar[j] * lap_v + c * rho * mbar[j] + ubar[j] * lap_v);
        }
        pairing += wt * inner_pairing;
        ibp_first += wt * inner_first;
        ibp_second += wt * inner_second;

        if node == 0 {
            data_rows[0] = ubar.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            data_rows[2] = mbar.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        }
        if node == time.nodes() - 1 {
            data_rows[1] = ubar.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            data_rows[3] = mbar.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        }
    }

    let hypothesis_ok = data_rows.iter().all(|r| *r <= 1e-8) && density_row_residual <= 1e-8;
    let pairing_ok = hypothesis_ok && pairing.abs() <= tolerances::PAIRING;
    PairingReport {
        label: scenario.label.clone(),
        pairing,
        ibp_first,
        ibp_second,
        data_rows,
        density_row_residual,
        hypothesis_ok,
        pairing_ok,
    }
}

/// The standard scenario set used by the verification suite: three
/// zero-data scenarios across couplings and probe families, plus the
/// broken-window mutation that must light up.
pub fn standard_scenarios() -> Vec<PairingScenario> {
    vec![
        PairingScenario {
            label: "mode1-c0.5-combined".into(),
            c: 0.5,
            modes: vec![(1, 0.01)],
            window: Window::ZeroData,
            probe_family: ProbeFamily::BackwardCombined,
            probe_index: 1,
        },
        PairingScenario {
            label: "mode1-c1-decay".into(),
            c: 1.0,
            modes: vec![(1, 0.01)],
            window: Window::ZeroData,
            probe_family: ProbeFamily::BackwardDecay,
            probe_index: 1,
        },
        PairingScenario {
            label: "mode12-c2-combined".into(),
            c: 2.0,
            modes: vec![(1, 0.008), (2, 0.004)],
            window: Window::ZeroData,
            probe_family: ProbeFamily::BackwardCombined,
            probe_index: 1,
        },
        PairingScenario {
            label: "mutation-broken-horizon".into(),
            c: 1.0,
            modes: vec![(1, 0.01)],
            window: Window::BrokenAtHorizon,
            probe_family: ProbeFamily::BackwardCombined,
            probe_index: 1,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_interval_basis;
    use std::f64::consts::PI;

    fn setup(points: usize, modes: usize, horizon: f64, steps: usize) -> (SpectralBasis, TimeGrid) {
        let grid = SpaceGrid::interval(points).unwrap();
        (
            build_interval_basis(&grid, modes).unwrap(),
            TimeGrid::new(horizon, steps).unwrap(),
        )
    }

    #[test]
    fn identical_coefficients_pair_to_exact_zero() {
        let (basis, time) = setup(65, 3, 1.0, 32);
        let grid = basis.grid().clone();
        let f = basis.values(1).to_vec();
        let m2 = SpaceTimeField::from_fn(&time, &grid, |n, j| {
            (-time.time(n)).exp() * basis.values(1)[j]
        });
        let p = evaluate_pairing(&f, &f, &m2, &m2, &time, &grid);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn constant_difference_matches_analytic_value() {
        // F1 - F2 = 1, m2 = ρ = e^{-t} m̄₁ on T = 1:
        // ∫ e^{-2t} dt · ∫ m̄₁² = (1 - e^{-2})/2
        let (basis, time) = setup(257, 3, 1.0, 512);
        let grid = basis.grid().clone();
        let ones = vec![1.0; grid.len()];
        let zeros = vec![0.0; grid.len()];
        let field = SpaceTimeField::from_fn(&time, &grid, |n, j| {
            (-time.time(n)).exp() * basis.values(1)[j]
        });
        let p = evaluate_pairing(&ones, &zeros, &field, &field, &time, &grid);
        let analytic = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((analytic - 0.432_332_358_381_693_6).abs() < 1e-15);
        assert!((p - analytic).abs() < 2e-6, "pairing {p} vs {analytic}");
    }

    #[test]
    fn mode_two_difference_against_dense_quadrature_oracle() {
        // F1 - F2 = m̄₂ against m2 = ρ = e^{-t} m̄₁: the spatial overlap
        // ∫ m̄₂ m̄₁² = 1/√2 does not vanish, so neither does the pairing
        let (basis, time) = setup(257, 3, 1.0, 512);
        let grid = basis.grid().clone();
        let diff = basis.values(2).to_vec();
        let zeros = vec![0.0; grid.len()];
        let field = SpaceTimeField::from_fn(&time, &grid, |n, j| {
            (-time.time(n)).exp() * basis.values(1)[j]
        });
        let p = evaluate_pairing(&diff, &zeros, &field, &field, &time, &grid);

        let analytic = (1.0 - (-2.0f64).exp()) / 2.0 / 2.0f64.sqrt();

        // independent dense-grid oracle, fully hand-rolled
        let fine_n = 2049;
        let fine_m = 4096;
        let h = 1.0 / (fine_n - 1) as f64;
        let dt = 1.0 / fine_m as f64;
        let mut oracle = 0.0;
        for q in 0..=fine_m {
            let t = q as f64 * dt;
            let wt = if q == 0 || q == fine_m { 0.5 * dt } else { dt };
            let decay = (-2.0 * t).exp();
            let mut inner = 0.0;
            for j in 0..fine_n {
                let x = j as f64 * h;
                let wx = if j == 0 || j == fine_n - 1 { 0.5 * h } else { h };
                let m1 = 2.0f64.sqrt() * (PI * x).cos();
                let m2v = 2.0f64.sqrt() * (2.0 * PI * x).cos();
                inner += wx * m2v * m1 * m1 * decay;
            }
            oracle += wt * inner;
        }
        assert!((oracle - analytic).abs() < 1e-7, "oracle {oracle} vs analytic {analytic}");
        assert!((p - oracle).abs() < 1e-5, "pairing {p} vs oracle {oracle}");
        assert!(p.abs() > 0.3, "pairing should be visibly nonzero, got {p}");
    }

    #[test]
    fn zero_data_scenarios_pair_to_quadrature_zero() {
        let (basis, time) = setup(1025, 4, 0.25, 8192);
        for scenario in standard_scenarios().iter().filter(|s| s.window == Window::ZeroData) {
            let report = verify_pairing_identity(scenario, &time, &basis);
            assert!(report.hypothesis_ok, "{}: {:?}", report.label, report.data_rows);
            assert!(
                report.pairing.abs() <= tolerances::PAIRING,
                "{}: pairing {}",
                report.label,
                report.pairing
            );
            assert!(
                report.ibp_first.abs() <= tolerances::PAIRING,
                "{}: ibp1 {}",
                report.label,
                report.ibp_first
            );
            assert!(
                report.ibp_second.abs() <= tolerances::PAIRING,
                "{}: ibp2 {}",
                report.label,
                report.ibp_second
            );
            assert!(report.pairing_ok);
        }
    }

    #[test]
    fn broken_hypothesis_is_loud() {
        let (basis, time) = setup(1025, 4, 0.25, 8192);
        let mutation = standard_scenarios()
            .into_iter()
            .find(|s| s.window == Window::BrokenAtHorizon)
            .unwrap();
        let report = verify_pairing_identity(&mutation, &time, &basis);
        assert!(!report.hypothesis_ok, "mutation should break the data rows");
        assert!(
            report.pairing.abs() >= tolerances::MUTATION_FLOOR,
            "mutation pairing too quiet: {}",
            report.pairing
        );
        assert!(!report.pairing_ok);
    }

    #[test]
    fn ibp_residuals_shrink_at_second_order() {
        let scenario = &standard_scenarios()[0];
        let mut firsts = Vec::new();
        for (points, steps) in [(257usize, 2048usize), (513, 4096), (1025, 8192)] {
            let (basis, time) = setup(points, 4, 0.25, steps);
            let report = verify_pairing_identity(scenario, &time, &basis);
            firsts.push(report.ibp_first.abs().max(report.ibp_second.abs()));
        }
        // halving both steps should cut the residual by about four
        let s1 = (firsts[0] / firsts[1]).log2();
        let s2 = (firsts[1] / firsts[2]).log2();
        assert!(s1 > 1.5, "slope {s1}: {firsts:?}");
        assert!(s2 > 1.5, "slope {s2}: {firsts:?}");
    }
}
