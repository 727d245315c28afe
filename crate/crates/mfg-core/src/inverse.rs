//! Staged reconstruction of the running-cost Taylor coefficients from
//! measurement data.
//!
//! The stages mirror the order-by-order structure of the uniqueness
//! argument: the first derivative of the measurement pins the scalar
//! linear coefficient through a one-dimensional root solve per probe
//! mode; at each higher order `k`, once everything below is known, the
//! only unknown source in the order-`k` system is `F_k(x)` times a known
//! product of first-order densities, which acts linearly on the data.
//! Expanding `F_k` over the eigenbasis turns each stage into a small
//! least-squares problem whose sensitivity columns are direct linear
//! solves.
//!
//! Observations at orders one and two come from the modal solvers;
//! order-three data is produced and predicted through the same
//! eight-point difference stencil on the nonlinear solver, since direct
//! third-order solvers are out of scope. The reconstruction therefore
//! carries its own forward model and must use the measurement protocol
//! (amplitude ladder and solver tolerances) that produced the data.

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::forward::ForwardConfig;
use crate::linearized::{
    mu_at_horizon, nu_at_zero, solve_first_order, solve_linear_response, solve_second_order,
    FirstOrderSolution, SourceRow, SourceTerm,
};
use crate::measurement::{
    add_slice_noise, extract_order3, EpsilonStencil, SplitMix64,
};
use crate::mesh::{SpaceGrid, TimeGrid};
use crate::running_cost::RunningCost;
use crate::tolerances;

/// Measurement side of the inverse problem: derivative records of the
/// measurement map along caller-chosen zero-mean directions.
pub trait MeasureOracle {
    /// `(u-derivative at time 0, m-derivative at the horizon)` along `f1`.
    fn order1(&self, f1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
    fn order2(&self, f1: &[f64], f2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
    fn order3(&self, f1: &[f64], f2: &[f64], f3: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
}

/// Synthetic data source for round-trip experiments: orders one and two
/// come from the direct linear solvers with the hidden truth, order three
/// from the difference stencil on the nonlinear solver.
pub struct SyntheticOracle<'a> {
    pub truth: RunningCost,
    pub time: &'a TimeGrid,
    pub grid: &'a SpaceGrid,
    pub basis: &'a SpectralBasis,
    pub forward: ForwardConfig,
    pub stencil: EpsilonStencil,
    pub refine: usize,
}

impl<'a> SyntheticOracle<'a> {
    pub fn new(
        truth: RunningCost,
        time: &'a TimeGrid,
        grid: &'a SpaceGrid,
        basis: &'a SpectralBasis,
    ) -> Self {
        Self {
            truth,
            time,
            grid,
            basis,
            forward: ForwardConfig::default(),
            stencil: EpsilonStencil::default(),
            refine: 8,
        }
    }
}

impl MeasureOracle for SyntheticOracle<'_> {
    fn order1(&self, f1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let sol = solve_first_order(self.truth.c1, f1, self.time, self.basis)?;
        let last = self.time.nodes() - 1;
        Ok((sol.u.slice(0).to_vec(), sol.m.slice(last).to_vec()))
    }

    fn order2(&self, f1: &[f64], f2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let a = solve_first_order(self.truth.c1, f1, self.time, self.basis)?;
        let b = solve_first_order(self.truth.c1, f2, self.time, self.basis)?;
        let f2_field = self.truth.coefficient(2, self.grid);
        let sol = solve_second_order(
            self.truth.c1,
            &f2_field,
            &a,
            &b,
            self.time,
            self.basis,
            self.refine,
        )?;
        let last = self.time.nodes() - 1;
        Ok((sol.u.slice(0).to_vec(), sol.m.slice(last).to_vec()))
    }

    fn order3(&self, f1: &[f64], f2: &[f64], f3: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = extract_order3(
            &self.truth,
            &self.forward,
            f1,
            f2,
            f3,
            &self.stencil,
            self.time,
            self.grid,
        )?;
        Ok((out.u0, out.m_final))
    }
}

/// Oracle producing every order by difference stencils on the nonlinear
/// solver; slower and noisier, used for consistency experiments.
pub struct StencilOracle<'a> {
    pub truth: RunningCost,
    pub time: &'a TimeGrid,
    pub grid: &'a SpaceGrid,
    pub forward: ForwardConfig,
    pub stencil: EpsilonStencil,
}

impl MeasureOracle for StencilOracle<'_> {
    fn order1(&self, f1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = crate::measurement::extract_order1(
            &self.truth,
            &self.forward,
            f1,
            &self.stencil,
            self.time,
            self.grid,
        )?;
        Ok((out.u0, out.m_final))
    }

    fn order2(&self, f1: &[f64], f2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = crate::measurement::extract_order2(
            &self.truth,
            &self.forward,
            f1,
            f2,
            &self.stencil,
            self.time,
            self.grid,
        )?;
        Ok((out.u0, out.m_final))
    }

    fn order3(&self, f1: &[f64], f2: &[f64], f3: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = extract_order3(
            &self.truth,
            &self.forward,
            f1,
            f2,
            f3,
            &self.stencil,
            self.time,
            self.grid,
        )?;
        Ok((out.u0, out.m_final))
    }
}

/// Wraps an oracle with deterministic Gaussian measurement noise.
pub struct NoisyOracle<O> {
    pub inner: O,
    pub level: f64,
    pub seed: u64,
    counter: std::cell::Cell<u64>,
}

impl<O> NoisyOracle<O> {
    pub fn new(inner: O, level: f64, seed: u64) -> Self {
        Self { inner, level, seed, counter: std::cell::Cell::new(0) }
    }

    fn perturb(&self, mut pair: (Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
        let call = self.counter.get();
        self.counter.set(call + 1);
        // one independent stream per call, stable under call order
        let mut rng = SplitMix64::new(self.seed ^ call.wrapping_mul(0x9e3779b97f4a7c15));
        add_slice_noise(&mut pair.0, &mut pair.1, self.level, &mut rng);
        pair
    }
}

impl<O: MeasureOracle> MeasureOracle for NoisyOracle<O> {
    fn order1(&self, f1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok(self.perturb(self.inner.order1(f1)?))
    }
    fn order2(&self, f1: &[f64], f2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok(self.perturb(self.inner.order2(f1, f2)?))
    }
    fn order3(&self, f1: &[f64], f2: &[f64], f3: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok(self.perturb(self.inner.order3(f1, f2, f3)?))
    }
}

/// Safeguarded root search: bisection with a secant step whenever it
/// stays inside the bracket.
fn find_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::BracketFailure { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        // secant candidate from the current endpoints
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if secant.is_finite() && secant > a && secant < b { secant } else { mid };
        let fx = f(x);
        if fx == 0.0 || (b - a) < rel_tol * x.abs().max(1.0) {
            return Ok(x);
        }
        if fa * fx < 0.0 {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
    }
    Ok(0.5 * (a + b))
}

/// Options of the linear-coefficient stage.
#[derive(Debug, Clone)]
pub struct LinearStageOptions {
    pub bracket: (f64, f64),
    /// Relative disagreement between the density-record root and the
    /// value-record root that triggers an inconsistency error.
    pub cross_tol: f64,
}

impl Default for LinearStageOptions {
    fn default() -> Self {
        Self { bracket: tolerances::C1_BRACKET, cross_tol: 1e-2 }
    }
}

/// Result of the linear-coefficient stage on one probe mode.
#[derive(Debug, Clone)]
pub struct LinearRecovery {
    pub c: f64,
    pub c_from_value_record: f64,
    pub probe_mode: usize,
    pub observed_density_coeff: f64,
    pub observed_value_coeff: f64,
}

/// Recovers the linear coefficient from one probe mode: send `f1 = m̄_i`,
/// read the mode-`i` coefficients of the derivative record, and invert
/// the closed-form observables in `c`. The density record drives the
/// primary root; the value record cross-validates it.
pub fn recover_c1(
    oracle: &dyn MeasureOracle,
    probe_mode: usize,
    time: &TimeGrid,
    basis: &SpectralBasis,
    opts: &LinearStageOptions,
) -> Result<LinearRecovery> {
    assert!(probe_mode >= 1, "probe mode 0 carries no signal");
    let (u0, m_final) = oracle.order1(basis.values(probe_mode))?;
    let a_m = basis.coefficient(probe_mode, &m_final);
    let a_u = basis.coefficient(probe_mode, &u0);
    let beta = basis.eigenvalue(probe_mode);
    let horizon = time.horizon();
    let (lo, hi) = opts.bracket;

    let c_m = find_root(|c| mu_at_horizon(beta, c, horizon) - a_m, lo, hi, 1e-13)?;
    let c_u = find_root(|c| nu_at_zero(beta, c, horizon) - a_u, lo, hi, 1e-13)?;
    if (c_m - c_u).abs() > opts.cross_tol * c_m.abs().max(1.0) {
        return Err(Error::InconsistentData { c_from_m: c_m, c_from_u: c_u });
    }
    Ok(LinearRecovery {
        c: c_m,
        c_from_value_record: c_u,
        probe_mode,
        observed_density_coeff: a_m,
        observed_value_coeff: a_u,
    })
}

/// Result of a higher-order coefficient stage.
#[derive(Debug, Clone)]
pub struct FieldRecovery {
    /// Modal coefficients of the recovered field, indices `0..=mode_cut`.
    pub coefficients: Vec<f64>,
    /// The field synthesized on the grid.
    pub field: Vec<f64>,
    /// Condition number of the sensitivity matrix.
    pub condition: f64,
    /// `‖data - fit‖₂ / ‖data‖₂` over all scenario rows.
    pub relative_residual: f64,
    /// Set when the residual says the mode cut cannot explain the data.
    pub truncation_flagged: bool,
}

/// Scenario list and mode cut of the quadratic stage.
#[derive(Debug, Clone)]
pub struct QuadraticStage {
    /// First-order excitation pairs `(j1, j2)`.
    pub scenarios: Vec<(usize, usize)>,
    /// Expand the coefficient over modes `0..=mode_cut`.
    pub mode_cut: usize,
    pub refine: usize,
}

impl QuadraticStage {
    /// Pairs whose products cover every mode up to the cut.
    pub fn standard(mode_cut: usize) -> Self {
        let mut scenarios = Vec::new();
        for j in 1..=mode_cut.div_ceil(2) {
            scenarios.push((j, j));
            scenarios.push((j, j + 1));
        }
        scenarios.truncate(mode_cut.max(2));
        Self { scenarios, mode_cut, refine: 8 }
    }
}

fn stack_projection(basis: &SpectralBasis, mode_cut: usize, u: &[f64], m: &[f64], out: &mut Vec<f64>) {
    for i in 0..=mode_cut {
        out.push(basis.coefficient(i, u));
    }
    for i in 0..=mode_cut {
        out.push(basis.coefficient(i, m));
    }
}

/// Least squares by normal equations with a Tikhonov floor; returns the
/// solution, the condition estimate of the sensitivity matrix, and the
/// relative residual.
fn least_squares(columns: &[Vec<f64>], target: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let k = columns.len();
    let mut normal = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (i, ci) in columns.iter().enumerate() {
        for (j, cj) in columns.iter().enumerate().skip(i) {
            let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            normal[i][j] = dot;
            normal[j][i] = dot;
        }
        rhs[i] = ci.iter().zip(target).map(|(a, b)| a * b).sum();
    }

    let eigens = symmetric_eigenvalues(&normal);
    let max_eig = eigens.iter().fold(0.0f64, |m, v| m.max(*v));
    let min_eig = eigens.iter().fold(f64::INFINITY, |m, v| m.min(v.max(0.0)));
    let condition = if min_eig > 0.0 { (max_eig / min_eig).sqrt() } else { f64::INFINITY };
    if condition > tolerances::CONDITION_LIMIT {
        return Err(Error::IllPosedTruncation { cond: condition });
    }

    for (i, row) in normal.iter_mut().enumerate() {
        row[i] += tolerances::TIKHONOV_FLOOR;
        let _ = i;
    }
    let solution = solve_dense(&mut normal, &mut rhs)?;

    let mut residual_sq = 0.0;
    let mut target_sq = 0.0;
    for (row, t) in target.iter().enumerate() {
        let fit: f64 = columns.iter().zip(&solution).map(|(c, a)| c[row] * a).sum();
        residual_sq += (t - fit) * (t - fit);
        target_sq += t * t;
    }
    let relative_residual = if target_sq > 0.0 {
        (residual_sq / target_sq).sqrt()
    } else {
        residual_sq.sqrt()
    };
    Ok((solution, condition, relative_residual))
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() == 0.0 {
            return Err(Error::IllPosedTruncation { cond: f64::INFINITY });
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let w = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= w * a[col][k];
            }
            b[row] -= w * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Jacobi eigenvalue iteration for small symmetric matrices.
fn symmetric_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    for _ in 0..100 {
        let mut off = 0.0;
        let (mut p, mut q) = (0, 1);
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j].abs() > off {
                    off = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if off < 1e-14 * (1.0 + a.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0, f64::max)) {
            break;
        }
        let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let cos = 1.0 / (t * t + 1.0).sqrt();
        let sin = t * cos;
        for k in 0..n {
            let (akp, akq) = (a[k][p], a[k][q]);
            a[k][p] = cos * akp - sin * akq;
            a[k][q] = sin * akp + cos * akq;
        }
        for k in 0..n {
            let (apk, aqk) = (a[p][k], a[q][k]);
            a[p][k] = cos * apk - sin * aqk;
            a[q][k] = sin * apk + cos * aqk;
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Response of the order-two record to a candidate quadratic coefficient
/// field: the linear solve with only the `F₂ m_a m_b` source.
fn quadratic_response(
    c: f64,
    f2_field: &[f64],
    pair_a: &FirstOrderSolution,
    pair_b: &FirstOrderSolution,
    time: &TimeGrid,
    basis: &SpectralBasis,
    refine: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = basis.grid();
    let mut terms = Vec::new();
    for ma in pair_a.modes.iter().filter(|fm| !fm.is_zero()) {
        for mb in pair_b.modes.iter().filter(|fm| !fm.is_zero()) {
            let shape_a = basis.values(ma.index);
            let shape_b = basis.values(mb.index);
            let profile: Vec<f64> = (0..grid.len())
                .map(|j| f2_field[j] * shape_a[j] * shape_b[j])
                .collect();
            let (a, b) = (*ma, *mb);
            terms.push(SourceTerm {
                row: SourceRow::Value,
                profile,
                time_factor: Box::new(move |t| a.mu(t) * b.mu(t)),
            });
        }
    }
    let sol = solve_linear_response(c, &terms, time, basis, refine)?;
    let last = time.nodes() - 1;
    Ok((sol.u.slice(0).to_vec(), sol.m.slice(last).to_vec()))
}

/// Recovers the quadratic coefficient field by Galerkin least squares
/// over the eigenbasis, given the already-recovered linear coefficient.
pub fn recover_f2(
    oracle: &dyn MeasureOracle,
    c: f64,
    stage: &QuadraticStage,
    time: &TimeGrid,
    basis: &SpectralBasis,
) -> Result<FieldRecovery> {
    let grid = basis.grid();
    let zeros = vec![0.0; grid.len()];
    let mut target = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); stage.mode_cut + 1];

    for &(j1, j2) in &stage.scenarios {
        let (data_u, data_m) = oracle.order2(basis.values(j1), basis.values(j2))?;
        let pair_a = solve_first_order(c, basis.values(j1), time, basis)?;
        let pair_b = solve_first_order(c, basis.values(j2), time, basis)?;
        let base = solve_second_order(c, &zeros, &pair_a, &pair_b, time, basis, stage.refine)?;
        let last = time.nodes() - 1;

        let diff_u: Vec<f64> = data_u.iter().zip(base.u.slice(0)).map(|(d, b)| d - b).collect();
        let diff_m: Vec<f64> =
            data_m.iter().zip(base.m.slice(last)).map(|(d, b)| d - b).collect();
        stack_projection(basis, stage.mode_cut, &diff_u, &diff_m, &mut target);

        for i in 0..=stage.mode_cut {
            let (resp_u, resp_m) =
                quadratic_response(c, basis.values(i), &pair_a, &pair_b, time, basis, stage.refine)?;
            stack_projection(basis, stage.mode_cut, &resp_u, &resp_m, &mut columns[i]);
        }
    }

    let (coefficients, condition, relative_residual) = least_squares(&columns, &target)?;
    let field = basis.synthesize(&coefficients);
    Ok(FieldRecovery {
        coefficients,
        field,
        condition,
        relative_residual,
        truncation_flagged: relative_residual > tolerances::TRUNCATION_RESIDUAL,
    })
}

/// Scenario list of the cubic stage; observations and baseline
/// predictions both run through the stated measurement protocol, so the
/// truncation flag uses the looser stencil-noise threshold.
#[derive(Debug, Clone)]
pub struct CubicStage {
    pub scenarios: Vec<(usize, usize, usize)>,
    pub mode_cut: usize,
    pub refine: usize,
    pub forward: ForwardConfig,
    pub stencil: EpsilonStencil,
}

impl CubicStage {
    pub fn standard(mode_cut: usize) -> Self {
        Self {
            scenarios: vec![(1, 1, 1), (1, 1, 2), (1, 2, 2)],
            mode_cut,
            refine: 8,
            forward: ForwardConfig::default(),
            stencil: EpsilonStencil::default(),
        }
    }
}

/// Recovers the cubic coefficient field. The baseline record is the
/// order-three stencil of the candidate model with the recovered lower
/// orders and zero cubic term; its difference from the data isolates the
/// linear response to `F₃ m^{(1)} m^{(2)} m^{(3)}`.
pub fn recover_f3(
    oracle: &dyn MeasureOracle,
    c: f64,
    f2_field: &[f64],
    stage: &CubicStage,
    time: &TimeGrid,
    basis: &SpectralBasis,
) -> Result<FieldRecovery> {
    let grid = basis.grid();
    let candidate = RunningCost::with_higher(c, vec![f2_field.to_vec()]);
    let mut target = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); stage.mode_cut + 1];

    for &(j1, j2, j3) in &stage.scenarios {
        let (data_u, data_m) =
            oracle.order3(basis.values(j1), basis.values(j2), basis.values(j3))?;
        let base = extract_order3(
            &candidate,
            &stage.forward,
            basis.values(j1),
            basis.values(j2),
            basis.values(j3),
            &stage.stencil,
            time,
            grid,
        )?;

        let diff_u: Vec<f64> = data_u.iter().zip(&base.u0).map(|(d, b)| d - b).collect();
        let diff_m: Vec<f64> = data_m.iter().zip(&base.m_final).map(|(d, b)| d - b).collect();
        stack_projection(basis, stage.mode_cut, &diff_u, &diff_m, &mut target);

        let pa = solve_first_order(c, basis.values(j1), time, basis)?;
        let pb = solve_first_order(c, basis.values(j2), time, basis)?;
        let pc = solve_first_order(c, basis.values(j3), time, basis)?;
        let (fa, fb, fc) = (pa.modes[j1], pb.modes[j2], pc.modes[j3]);
        let triple: Vec<f64> = (0..grid.len())
            .map(|j| basis.values(j1)[j] * basis.values(j2)[j] * basis.values(j3)[j])
            .collect();

        for i in 0..=stage.mode_cut {
            let profile: Vec<f64> =
                triple.iter().zip(basis.values(i)).map(|(t, s)| t * s).collect();
            let term = SourceTerm {
                row: SourceRow::Value,
                profile,
                time_factor: Box::new(move |t| fa.mu(t) * fb.mu(t) * fc.mu(t)),
            };
            let sol = solve_linear_response(c, &[term], time, basis, stage.refine)?;
            let last = time.nodes() - 1;
            stack_projection(
                basis,
                stage.mode_cut,
                sol.u.slice(0),
                sol.m.slice(last),
                &mut columns[i],
            );
        }
    }

    let (coefficients, condition, relative_residual) = least_squares(&columns, &target)?;
    let field = basis.synthesize(&coefficients);
    Ok(FieldRecovery {
        coefficients,
        field,
        condition,
        relative_residual,
        truncation_flagged: relative_residual > tolerances::TRUNCATION_RESIDUAL_STENCIL,
    })
}

/// Full-pipeline configuration.
#[derive(Debug, Clone)]
pub struct ReconstructionConfig {
    /// Probe modes of the linear stage; the first is the primary root,
    /// the rest cross-check probe independence.
    pub probe_modes: Vec<usize>,
    pub taylor_order: usize,
    pub quadratic: QuadraticStage,
    pub cubic: CubicStage,
    pub linear: LinearStageOptions,
}

impl ReconstructionConfig {
    pub fn standard(mode_cut: usize, taylor_order: usize) -> Self {
        Self {
            probe_modes: vec![1, 2],
            taylor_order,
            quadratic: QuadraticStage::standard(mode_cut),
            cubic: CubicStage::standard(mode_cut),
            linear: LinearStageOptions::default(),
        }
    }
}

/// The recovered expansion with per-stage diagnostics.
#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub c1: f64,
    /// `(probe mode, recovered c)` for every probe run.
    pub c1_by_probe: Vec<(usize, f64)>,
    pub quadratic: Option<FieldRecovery>,
    pub cubic: Option<FieldRecovery>,
    /// Largest relative spread of the linear coefficient across probes.
    pub probe_spread: f64,
}

impl ReconstructionReport {
    /// The recovered cost as a `RunningCost` value.
    pub fn running_cost(&self, grid: &SpaceGrid) -> RunningCost {
        let mut higher = Vec::new();
        if let Some(q) = &self.quadratic {
            higher.push(q.field.clone());
        }
        if let Some(cb) = &self.cubic {
            if higher.is_empty() {
                higher.push(vec![0.0; grid.len()]);
            }
            higher.push(cb.field.clone());
        }
        RunningCost::with_higher(self.c1, higher)
    }
}

/// Chains the stages: linear coefficient from each probe mode, then the
/// quadratic and cubic fields. Fails fast on any stage error and rejects
/// an inadmissible (nonpositive) recovered linear coefficient.
pub fn recover_running_cost(
    oracle: &dyn MeasureOracle,
    cfg: &ReconstructionConfig,
    time: &TimeGrid,
    basis: &SpectralBasis,
) -> Result<ReconstructionReport> {
    assert!(!cfg.probe_modes.is_empty());
    let mut c1_by_probe = Vec::new();
    for &mode in &cfg.probe_modes {
        let rec = recover_c1(oracle, mode, time, basis, &cfg.linear)?;
        c1_by_probe.push((mode, rec.c));
    }
    let c1 = c1_by_probe[0].1;
    if !(c1 > 0.0) {
        return Err(Error::BracketFailure {
            lo: cfg.linear.bracket.0,
            hi: cfg.linear.bracket.1,
        });
    }
    let probe_spread = c1_by_probe
        .iter()
        .fold(0.0f64, |s, (_, c)| s.max((c - c1).abs() / c1.abs().max(1e-30)));

    let quadratic = if cfg.taylor_order >= 2 {
        Some(recover_f2(oracle, c1, &cfg.quadratic, time, basis)?)
    } else {
        None
    };
    let cubic = if cfg.taylor_order >= 3 {
        let f2_field = quadratic
            .as_ref()
            .map(|q| q.field.clone())
            .unwrap_or_else(|| vec![0.0; basis.grid().len()]);
        Some(recover_f3(oracle, c1, &f2_field, &cfg.cubic, time, basis)?)
    } else {
        None
    };

    Ok(ReconstructionReport { c1, c1_by_probe, quadratic, cubic, probe_spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_interval_basis;
    use crate::measurement::Scheme;

    // Reconstruction experiments run on a short horizon: the density
    // record of mode i decays like e^{-λ_i T}, so T = 1 would push every
    // mode above the first below measurement roundoff.
    fn setup(points: usize, modes: usize, steps: usize) -> (SpaceGrid, SpectralBasis, TimeGrid) {
        setup_horizon(points, modes, 0.25, steps)
    }

    fn setup_horizon(
        points: usize,
        modes: usize,
        horizon: f64,
        steps: usize,
    ) -> (SpaceGrid, SpectralBasis, TimeGrid) {
        let grid = SpaceGrid::interval(points).unwrap();
        let basis = build_interval_basis(&grid, modes).unwrap();
        let time = TimeGrid::new(horizon, steps).unwrap();
        (grid, basis, time)
    }

    #[test]
    fn linear_coefficient_round_trip_is_tight() {
        let (grid, basis, time) = setup(257, 6, 128);
        let oracle = SyntheticOracle::new(RunningCost::linear(2.0), &time, &grid, &basis);
        for probe in [1usize, 2] {
            let rec =
                recover_c1(&oracle, probe, &time, &basis, &LinearStageOptions::default()).unwrap();
            assert!(
                (rec.c - 2.0).abs() / 2.0 <= tolerances::C1_RECOVERY_REL,
                "probe {probe}: {}",
                rec.c
            );
            assert!((rec.c_from_value_record - 2.0).abs() / 2.0 <= 1e-6);
        }
    }

    #[test]
    fn probe_modes_agree() {
        let (grid, basis, time) = setup(257, 8, 128);
        let oracle = SyntheticOracle::new(RunningCost::linear(0.75), &time, &grid, &basis);
        let opts = LinearStageOptions::default();
        let c1 = recover_c1(&oracle, 1, &time, &basis, &opts).unwrap().c;
        let c2 = recover_c1(&oracle, 2, &time, &basis, &opts).unwrap().c;
        let c3 = recover_c1(&oracle, 3, &time, &basis, &opts).unwrap().c;
        assert!((c1 - c2).abs() / c1 < 10.0 * tolerances::C1_RECOVERY_REL);
        assert!((c1 - c3).abs() / c1 < 10.0 * tolerances::C1_RECOVERY_REL);
    }

    #[test]
    fn out_of_bracket_truth_fails_the_bracket() {
        let (grid, basis, time) = setup(129, 4, 64);
        let oracle = SyntheticOracle::new(RunningCost::linear(60.0), &time, &grid, &basis);
        assert!(matches!(
            recover_c1(&oracle, 1, &time, &basis, &LinearStageOptions::default()),
            Err(Error::BracketFailure { .. })
        ));
    }

    #[test]
    fn inadmissible_truth_fails_the_bracket() {
        // data generated with a nonpositive linear coefficient sits outside
        // the admissible range of the observable
        let (grid, basis, time) = setup(129, 4, 64);
        let oracle = SyntheticOracle::new(RunningCost::linear(-0.5), &time, &grid, &basis);
        assert!(matches!(
            recover_c1(&oracle, 1, &time, &basis, &LinearStageOptions::default()),
            Err(Error::BracketFailure { .. })
        ));
    }

    #[test]
    fn mismatched_records_are_flagged_inconsistent() {
        let (grid, basis, time) = setup(129, 4, 64);
        struct Mixed<'a> {
            a: SyntheticOracle<'a>,
            b: SyntheticOracle<'a>,
        }
        impl MeasureOracle for Mixed<'_> {
            fn order1(&self, f1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
                // value record from one coefficient, density record from another
                let (u, _) = self.a.order1(f1)?;
                let (_, m) = self.b.order1(f1)?;
                Ok((u, m))
            }
            fn order2(&self, f1: &[f64], f2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
                self.a.order2(f1, f2)
            }
            fn order3(&self, f1: &[f64], f2: &[f64], f3: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
                self.a.order3(f1, f2, f3)
            }
        }
        let mixed = Mixed {
            a: SyntheticOracle::new(RunningCost::linear(1.0), &time, &grid, &basis),
            b: SyntheticOracle::new(RunningCost::linear(2.0), &time, &grid, &basis),
        };
        assert!(matches!(
            recover_c1(&mixed, 1, &time, &basis, &LinearStageOptions::default()),
            Err(Error::InconsistentData { .. })
        ));
    }

    #[test]
    fn zero_quadratic_truth_recovers_zeros() {
        let (grid, basis, time) = setup(257, 12, 128);
        let oracle = SyntheticOracle::new(RunningCost::linear(1.5), &time, &grid, &basis);
        let stage = QuadraticStage::standard(4);
        let rec = recover_f2(&oracle, 1.5, &stage, &time, &basis).unwrap();
        for (i, a) in rec.coefficients.iter().enumerate() {
            assert!(a.abs() < 1e-8, "mode {i}: {a}");
        }
        assert!(!rec.truncation_flagged);
    }

    #[test]
    fn quadratic_two_mode_truth_round_trip() {
        let (grid, basis, time) = setup(257, 20, 128);
        let truth_field: Vec<f64> = basis
            .values(1)
            .iter()
            .zip(basis.values(3))
            .map(|(a, b)| 0.3 * a + 0.1 * b)
            .collect();
        let oracle = SyntheticOracle::new(
            RunningCost::with_higher(2.0, vec![truth_field]),
            &time,
            &grid,
            &basis,
        );
        let stage = QuadraticStage::standard(8);
        let rec = recover_f2(&oracle, 2.0, &stage, &time, &basis).unwrap();
        assert!((rec.coefficients[1] - 0.3).abs() / 0.3 < tolerances::F2_RECOVERY_REL,
            "mode 1: {}", rec.coefficients[1]);
        assert!((rec.coefficients[3] - 0.1).abs() / 0.1 < tolerances::F2_RECOVERY_REL,
            "mode 3: {}", rec.coefficients[3]);
        for i in [0usize, 2, 4, 5, 6, 7, 8] {
            assert!(rec.coefficients[i].abs() < 1e-3, "mode {i}: {}", rec.coefficients[i]);
        }
        assert!(rec.condition < tolerances::CONDITION_LIMIT);
        assert!(!rec.truncation_flagged);
    }

    #[test]
    fn sensitivity_is_linear_in_the_coefficient_field() {
        let (grid, basis, time) = setup(129, 10, 64);
        let c = 1.0;
        let pa = solve_first_order(c, basis.values(1), &time, &basis).unwrap();
        let pb = solve_first_order(c, basis.values(2), &time, &basis).unwrap();
        let (ua, ma) = quadratic_response(c, basis.values(1), &pa, &pb, &time, &basis, 8).unwrap();
        let (ub, mb) = quadratic_response(c, basis.values(4), &pa, &pb, &time, &basis, 8).unwrap();
        let combo: Vec<f64> = basis
            .values(1)
            .iter()
            .zip(basis.values(4))
            .map(|(x, y)| 0.7 * x - 0.2 * y)
            .collect();
        let (uc, mc) = quadratic_response(c, &combo, &pa, &pb, &time, &basis, 8).unwrap();
        for j in 0..grid.len() {
            let expect_u = 0.7 * ua[j] - 0.2 * ub[j];
            let expect_m = 0.7 * ma[j] - 0.2 * mb[j];
            assert!((uc[j] - expect_u).abs() < 1e-10);
            assert!((mc[j] - expect_m).abs() < 1e-10);
        }
    }

    #[test]
    fn unexplainable_truth_is_flagged() {
        // truth holds energy above the mode cut; the residual must say so
        let (grid, basis, time) = setup(257, 20, 128);
        let truth_field: Vec<f64> = basis.values(6).iter().map(|v| 0.4 * v).collect();
        let oracle = SyntheticOracle::new(
            RunningCost::with_higher(1.0, vec![truth_field]),
            &time,
            &grid,
            &basis,
        );
        let stage = QuadraticStage { scenarios: vec![(1, 1), (1, 2)], mode_cut: 2, refine: 8 };
        let rec = recover_f2(&oracle, 1.0, &stage, &time, &basis).unwrap();
        assert!(
            rec.truncation_flagged,
            "residual {} should flag truncation",
            rec.relative_residual
        );
    }

    #[test]
    fn noisy_oracle_degrades_gracefully() {
        let (grid, basis, time) = setup(257, 6, 128);
        let clean = SyntheticOracle::new(RunningCost::linear(2.0), &time, &grid, &basis);
        let noisy = NoisyOracle::new(clean, 1e-4, 11);
        let rec = recover_c1(&noisy, 1, &time, &basis, &LinearStageOptions::default()).unwrap();
        let rel = (rec.c - 2.0).abs() / 2.0;
        assert!(rel <= tolerances::NOISE_DEGRADATION_REL, "relative error {rel}");
    }

    #[test]
    fn zero_cubic_truth_recovers_near_zero_coefficients() {
        let (grid, basis, time) = setup(129, 12, 128);
        let truth_f2: Vec<f64> = basis.values(1).iter().map(|v| 0.3 * v).collect();
        let truth = RunningCost::with_higher(1.5, vec![truth_f2.clone()]);
        let mut oracle = SyntheticOracle::new(truth, &time, &grid, &basis);
        oracle.stencil = EpsilonStencil { epsilons: vec![1e-2, 5e-3], scheme: Scheme::Central };
        let mut stage = CubicStage::standard(2);
        stage.scenarios = vec![(1, 1, 1)];
        stage.stencil = oracle.stencil.clone();
        let rec = recover_f3(&oracle, 1.5, &truth_f2, &stage, &time, &basis).unwrap();
        for (i, a) in rec.coefficients.iter().enumerate() {
            assert!(a.abs() < tolerances::F3_RECOVERY_REL, "mode {i}: {a}");
        }
    }

    #[test]
    fn wrong_linear_coefficient_leaves_a_systematic_residual() {
        // hand the cubic stage a wrong c: the baseline model disagrees with
        // the data at second order already, and the residual must say so
        let (grid, basis, time) = setup(129, 12, 128);
        let truth_f2: Vec<f64> = basis.values(1).iter().map(|v| 0.3 * v).collect();
        let truth = RunningCost::with_higher(1.5, vec![truth_f2.clone()]);
        let mut oracle = SyntheticOracle::new(truth, &time, &grid, &basis);
        oracle.stencil = EpsilonStencil { epsilons: vec![1e-2, 5e-3], scheme: Scheme::Central };
        let mut stage = CubicStage::standard(2);
        stage.scenarios = vec![(1, 1, 1)];
        stage.stencil = oracle.stencil.clone();
        let wrong_c = 1.8;
        let rec = recover_f3(&oracle, wrong_c, &truth_f2, &stage, &time, &basis).unwrap();
        assert!(
            rec.truncation_flagged,
            "wrong coefficient went unflagged (residual {})",
            rec.relative_residual
        );
    }

    #[test]
    fn distinct_truths_give_distinct_reports() {
        let (grid, basis, time) = setup(129, 12, 128);
        let cfg = ReconstructionConfig::standard(4, 2);
        let mut reports = Vec::new();
        for amp in [0.3, 0.4] {
            let f2: Vec<f64> = basis.values(1).iter().map(|v| amp * v).collect();
            let oracle = SyntheticOracle::new(
                RunningCost::with_higher(1.0, vec![f2]),
                &time,
                &grid,
                &basis,
            );
            reports.push(recover_running_cost(&oracle, &cfg, &time, &basis).unwrap());
        }
        let a = reports[0].quadratic.as_ref().unwrap().coefficients[1];
        let b = reports[1].quadratic.as_ref().unwrap().coefficients[1];
        assert!((a - 0.3).abs() < 1e-6);
        assert!((b - 0.4).abs() < 1e-6);
        assert!((a - b).abs() > 0.05, "reports failed to distinguish the truths");
    }

    #[test]
    fn stencil_oracle_error_shrinks_with_the_amplitude() {
        // the recovered coefficient inherits the stencil truncation, so
        // halving the amplitude should cut the error by about four; the
        // short horizon and fine steps keep the discrete bias underneath
        let (grid, basis, time) = setup_horizon(513, 4, 0.25, 2048);
        let truth = RunningCost::with_higher(
            2.0,
            vec![vec![0.0; grid.len()], vec![40.0; grid.len()]],
        );
        let mut errors = Vec::new();
        for eps in [2e-2, 1e-2] {
            let oracle = StencilOracle {
                truth: truth.clone(),
                time: &time,
                grid: &grid,
                forward: ForwardConfig::default(),
                stencil: EpsilonStencil { epsilons: vec![eps], scheme: Scheme::Central },
            };
            let rec =
                recover_c1(&oracle, 1, &time, &basis, &LinearStageOptions::default()).unwrap();
            errors.push((rec.c - 2.0).abs());
        }
        let slope = (errors[0] / errors[1]).log2();
        assert!(slope > 1.5, "slope {slope}, errors {errors:?}");
    }
}
