//! The verification suite: one runner per acceptance criterion, shared
//! by the integration-test gate and the command-line `all` subcommand.
//!
//! Every tolerance, grid size, and slope band lives in the suite
//! configuration or in [`crate::tolerances`]; the runners only assemble
//! rows of `(label, value, bound)` and an overall verdict, so the test
//! gate and the CSV reports cannot drift apart.

use std::time::Instant;

use crate::basis::{build_interval_basis, SpectralBasis};
use crate::error::Result;
use crate::forward::{mass_defect, solve_mfg, ForwardConfig};
use crate::identity::{standard_scenarios, verify_pairing_identity, Window};
use crate::inverse::{
    recover_c1, recover_running_cost, LinearStageOptions, NoisyOracle, ReconstructionConfig,
    SyntheticOracle,
};
use crate::linearized::{
    coupling_rate, rate_offset, solve_first_order, solve_second_order,
};
use crate::measurement::{stencil_order1, stencil_order2, Scheme};
use crate::mesh::{SpaceGrid, TimeGrid};
use crate::probes::{certify_probe, ProbeFamily, ProbingMode};
use crate::running_cost::RunningCost;
use crate::tolerances;

/// Comparison a checked value must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within { lo: f64, hi: f64 },
}

impl Bound {
    pub fn admits(&self, value: f64) -> bool {
        match *self {
            Bound::AtMost(b) => value <= b,
            Bound::AtLeast(b) => value >= b,
            Bound::Within { lo, hi } => (lo..=hi).contains(&value),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Bound::AtMost(b) => format!("<= {b:.3e}"),
            Bound::AtLeast(b) => format!(">= {b:.3e}"),
            Bound::Within { lo, hi } => format!("in [{lo:.3}, {hi:.3}]"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub label: String,
    pub value: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl CheckRow {
    fn new(label: impl Into<String>, value: f64, bound: Bound) -> Self {
        let pass = bound.admits(value);
        Self { label: label.into(), value, bound, pass }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub rows: Vec<CheckRow>,
    pub passed: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionReport {
    /// Wall-clock readings stay out of `rows` so serialized report bodies
    /// are byte-identical across runs; the budget still gates `passed`.
    fn assemble(
        id: usize,
        name: &'static str,
        started: Instant,
        rows: Vec<CheckRow>,
        budget_seconds: f64,
    ) -> Self {
        let seconds = started.elapsed().as_secs_f64();
        let passed = rows.iter().all(|r| r.pass) && seconds <= budget_seconds;
        Self { id, name, rows, passed, seconds, budget_seconds }
    }

    /// One terse pass/fail line for terminal output.
    pub fn summary_line(&self) -> String {
        format!(
            "{} criterion {}: {} ({:.2}s of {:.0}s budget)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.budget_seconds
        )
    }
}

/// Grid and model choices of the verification suite. The default is the
/// desk-scale configuration the acceptance gate runs.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Highest probe mode exercised by the algebra and certification runs.
    pub probe_mode_max: usize,
    pub couplings: Vec<f64>,
    pub probe_grids: Vec<usize>,
    pub probe_steps: usize,
    pub probe_horizon: f64,

    pub stationary_points: usize,
    pub stationary_steps: usize,
    pub stationary_terminal: f64,

    pub mass_points: usize,
    pub mass_steps: usize,
    pub mass_amplitude: f64,

    pub lin_points: usize,
    pub lin_steps: usize,
    pub lin_horizon: f64,
    pub lin_epsilons: Vec<f64>,
    pub lin_c1: f64,
    /// Amplitudes of the quadratic (mode 1) and cubic (constant)
    /// coefficients of the test cost; they give the measurement a visible
    /// third derivative without touching the first-order solve.
    pub lin_f2_amplitude: f64,
    pub lin_f3_amplitude: f64,
    pub lin_refine: usize,

    pub identity_points: usize,
    pub identity_steps: usize,
    pub identity_horizon: f64,

    pub inverse_points: usize,
    pub inverse_steps: usize,
    pub inverse_horizon: f64,
    pub inverse_mode_cut: usize,
    pub inverse_c1: f64,

    pub noise_points: usize,
    pub noise_steps: usize,
    pub noise_horizon: f64,
    pub noise_level: f64,
    pub noise_seeds: usize,
    pub noise_base_seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            probe_mode_max: 8,
            couplings: vec![0.5, 1.0, 2.0, 5.0],
            probe_grids: vec![65, 129, 257],
            probe_steps: 64,
            probe_horizon: 1.0,

            stationary_points: 257,
            stationary_steps: 128,
            stationary_terminal: 5.0,

            mass_points: 257,
            mass_steps: 256,
            mass_amplitude: 0.05,

            lin_points: 1025,
            lin_steps: 1024,
            lin_horizon: 0.25,
            lin_epsilons: vec![1e-2, 5e-3, 2.5e-3],
            lin_c1: 1.0,
            lin_f2_amplitude: 5.0,
            lin_f3_amplitude: 160.0,
            lin_refine: 32,

            identity_points: 1025,
            identity_steps: 8192,
            identity_horizon: 0.25,

            inverse_points: 257,
            inverse_steps: 256,
            inverse_horizon: 0.25,
            inverse_mode_cut: 8,
            inverse_c1: 2.0,

            noise_points: 257,
            noise_steps: 128,
            noise_horizon: 1.0,
            noise_level: 1e-4,
            noise_seeds: 10,
            noise_base_seed: 1,
        }
    }
}

impl SuiteConfig {
    /// Reduced grids for quick runs; every criterion still executes and
    /// still passes, with thinner margins than the defaults.
    pub fn reduced() -> Self {
        Self {
            probe_grids: vec![33, 65, 129],
            stationary_points: 65,
            stationary_steps: 32,
            mass_points: 65,
            mass_steps: 64,
            lin_points: 513,
            lin_steps: 512,
            lin_epsilons: vec![2e-2, 1e-2, 5e-3],
            identity_points: 513,
            identity_steps: 4096,
            inverse_points: 129,
            inverse_steps: 128,
            noise_points: 129,
            noise_steps: 64,
            noise_seeds: 3,
            ..Self::default()
        }
    }
}

fn slope_band() -> Bound {
    Bound::Within { lo: 2.0 - tolerances::SLOPE_BAND, hi: 2.0 + tolerances::SLOPE_BAND }
}

/// Least-squares slope of `log2 value` against `log2 scale` for a
/// geometric refinement; for three halvings this is the endpoint slope.
fn log_slope(scales: &[f64], values: &[f64]) -> f64 {
    let n = scales.len() as f64;
    let xs: Vec<f64> = scales.iter().map(|s| s.log2()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    num / den
}

/// Criterion 1: the rate algebra of every probe mode.
pub fn criterion_probe_algebra(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let grid = SpaceGrid::interval(129)?;
    let basis = build_interval_basis(&grid, cfg.probe_mode_max + 1)?;
    let mut worst_lambda = 0.0f64;
    let mut worst_k = 0.0f64;
    let mut worst_identity = 0.0f64;
    for i in 1..=cfg.probe_mode_max {
        let beta = basis.eigenvalue(i);
        for &c in &cfg.couplings {
            let lambda = coupling_rate(beta, c);
            let k = rate_offset(beta, c);
            worst_lambda = worst_lambda.max((lambda * lambda - (beta * beta + c * beta)).abs() / (beta * beta));
            worst_k = worst_k.max((k - (beta - lambda)).abs());
            worst_identity = worst_identity.max((k + (c + k) * beta / lambda).abs());
        }
    }
    let rows = vec![
        CheckRow::new("lambda-defining-relation", worst_lambda, Bound::AtMost(tolerances::PROBE_ALGEBRA)),
        CheckRow::new("k-offset-relation", worst_k, Bound::AtMost(tolerances::PROBE_ALGEBRA)),
        CheckRow::new("closure-identity", worst_identity, Bound::AtMost(tolerances::PROBE_ALGEBRA)),
    ];
    Ok(CriterionReport::assemble(1, "probe rate algebra", started, rows, 1.0))
}

/// Criterion 2: probe families certify on the grid ladder.
pub fn criterion_probe_certification(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let families = [
        ProbeFamily::ForwardDecay,
        ProbeFamily::ForwardGrowth,
        ProbeFamily::ForwardCombined,
        ProbeFamily::BackwardCombined,
        ProbeFamily::BackwardDecay,
    ];
    let time = TimeGrid::new(cfg.probe_horizon, cfg.probe_steps)?;
    let mut rows = Vec::new();
    for family in families {
        let mut worst_time = 0.0f64;
        let mut worst_terminal = 0.0f64;
        let mut grid_residuals = Vec::new();
        for &points in &cfg.probe_grids {
            let grid = SpaceGrid::interval(points)?;
            let basis = build_interval_basis(&grid, cfg.probe_mode_max + 1)?;
            let mut worst_grid = 0.0f64;
            for i in 1..=cfg.probe_mode_max {
                for &c in &cfg.couplings {
                    let probe = ProbingMode::new(family, i, c, &basis, time.horizon())?;
                    let (u, m) = probe.sample(&time, &basis);
                    let cert = certify_probe(&probe, &u, &m, &time, &basis);
                    worst_time = worst_time
                        .max(cert.time_residual_value_row)
                        .max(cert.time_residual_density_row);
                    worst_grid = worst_grid
                        .max(cert.grid_residual_value_row)
                        .max(cert.grid_residual_density_row);
                    if let Some(t) = cert.terminal_residual {
                        worst_terminal = worst_terminal.max(t);
                    }
                }
            }
            grid_residuals.push(worst_grid);
        }
        let spacings: Vec<f64> = cfg.probe_grids.iter().map(|p| 1.0 / (p - 1) as f64).collect();
        let slope = log_slope(&spacings, &grid_residuals);
        rows.push(CheckRow::new(
            format!("{}-time-residual", family.label()),
            worst_time,
            Bound::AtMost(tolerances::PROBE_TIME_RESIDUAL),
        ));
        rows.push(CheckRow::new(format!("{}-grid-slope", family.label()), slope, slope_band()));
        if family == ProbeFamily::ForwardCombined {
            rows.push(CheckRow::new(
                "forward-combined-terminal",
                worst_terminal,
                Bound::AtMost(tolerances::PROBE_TERMINAL_RESIDUAL),
            ));
        }
    }
    Ok(CriterionReport::assemble(2, "probe certification", started, rows, 10.0))
}

/// Criterion 3: the uniform density is a stationary state.
pub fn criterion_stationary(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let grid = SpaceGrid::interval(cfg.stationary_points)?;
    let time = TimeGrid::new(1.0, cfg.stationary_steps)?;
    let cost = RunningCost::linear(1.0);
    let fwd = ForwardConfig { terminal_cost: cfg.stationary_terminal, ..Default::default() };
    let sol = solve_mfg(&cost, &fwd, &vec![1.0; grid.len()], &time, &grid)?;
    let u_dev = sol
        .u
        .values()
        .iter()
        .fold(0.0f64, |d, v| d.max((v - cfg.stationary_terminal).abs()));
    let m_dev = sol.m.values().iter().fold(0.0f64, |d, v| d.max((v - 1.0).abs()));
    let rows = vec![
        CheckRow::new("value-deviation", u_dev, Bound::AtMost(tolerances::STATIONARY_SUP)),
        CheckRow::new("density-deviation", m_dev, Bound::AtMost(tolerances::STATIONARY_SUP)),
        CheckRow::new("picard-passes", sol.iterations_used as f64, Bound::AtMost(1.0)),
    ];
    Ok(CriterionReport::assemble(3, "stationary uniform state", started, rows, 5.0))
}

/// Criterion 4: mass conservation and monitored positivity.
pub fn criterion_mass_positivity(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let grid = SpaceGrid::interval(cfg.mass_points)?;
    let time = TimeGrid::new(1.0, cfg.mass_steps)?;
    let basis = build_interval_basis(&grid, 4)?;
    let f2: Vec<f64> = basis
        .values(1)
        .iter()
        .zip(basis.values(3))
        .map(|(a, b)| 0.3 * a + 0.1 * b)
        .collect();
    let cost = RunningCost::with_higher(1.0, vec![f2]);
    let fwd = ForwardConfig::default();
    let m0: Vec<f64> =
        grid.sample(|x| 1.0 + cfg.mass_amplitude * (std::f64::consts::PI * x).cos());
    let sol = solve_mfg(&cost, &fwd, &m0, &time, &grid)?;
    let rows = vec![
        CheckRow::new(
            "mass-defect",
            mass_defect(&sol, &time, &grid),
            Bound::AtMost(tolerances::MASS_CONSERVATION),
        ),
        CheckRow::new("min-density", sol.min_density(), Bound::AtLeast(tolerances::POSITIVITY_FLOOR)),
        CheckRow::new(
            "contraction-monotone",
            if sol.contraction_monotone() { 1.0 } else { 0.0 },
            Bound::AtLeast(1.0),
        ),
    ];
    Ok(CriterionReport::assemble(4, "mass conservation and positivity", started, rows, 30.0))
}

fn lin_check_cost(cfg: &SuiteConfig, basis: &SpectralBasis) -> RunningCost {
    let grid = basis.grid();
    let f2: Vec<f64> = basis.values(1).iter().map(|v| cfg.lin_f2_amplitude * v).collect();
    let f3 = vec![cfg.lin_f3_amplitude; grid.len()];
    RunningCost::with_higher(cfg.lin_c1, vec![f2, f3])
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()))
}

/// Criterion 5: amplitude stencils of the nonlinear solver converge to
/// the direct linear solves at the nominal order.
pub fn criterion_linearization(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let grid = SpaceGrid::interval(cfg.lin_points)?;
    let time = TimeGrid::new(cfg.lin_horizon, cfg.lin_steps)?;
    let basis = build_interval_basis(&grid, 8)?;
    let cost = lin_check_cost(cfg, &basis);
    let fwd = ForwardConfig::default();
    let last = time.nodes() - 1;

    // first order against the closed-form modal solve
    let direct1 = solve_first_order(cfg.lin_c1, basis.values(1), &time, &basis)?;
    let mut first_errors = Vec::new();
    for &eps in &cfg.lin_epsilons {
        let (du, dm) =
            stencil_order1(&cost, &fwd, basis.values(1), eps, Scheme::Central, &time, &grid)?;
        first_errors
            .push(sup_diff(&du, direct1.u.slice(0)).max(sup_diff(&dm, direct1.m.slice(last))));
    }
    let slope1 = log_slope(&cfg.lin_epsilons, &first_errors);

    // second order against the variation-of-constants solve
    let pair_a = solve_first_order(cfg.lin_c1, basis.values(1), &time, &basis)?;
    let pair_b = solve_first_order(cfg.lin_c1, basis.values(2), &time, &basis)?;
    let f2_field: Vec<f64> = basis.values(1).iter().map(|v| cfg.lin_f2_amplitude * v).collect();
    let direct2 =
        solve_second_order(cfg.lin_c1, &f2_field, &pair_a, &pair_b, &time, &basis, cfg.lin_refine)?;
    let mut second_errors = Vec::new();
    for &eps in &cfg.lin_epsilons {
        let (du, dm) =
            stencil_order2(&cost, &fwd, basis.values(1), basis.values(2), eps, &time, &grid)?;
        second_errors
            .push(sup_diff(&du, direct2.u.slice(0)).max(sup_diff(&dm, direct2.m.slice(last))));
    }
    let slope2 = log_slope(&cfg.lin_epsilons, &second_errors);

    let rows = vec![
        CheckRow::new("first-order-slope", slope1, slope_band()),
        CheckRow::new("second-order-slope", slope2, Bound::AtLeast(1.8)),
        CheckRow::new(
            "first-order-closeness",
            *first_errors.last().unwrap(),
            Bound::AtMost(1e-3),
        ),
    ];
    Ok(CriterionReport::assemble(5, "linearization consistency", started, rows, 120.0))
}

/// Criterion 6: the pairing identity on manufactured scenarios, plus the
/// loud mutation.
pub fn criterion_identity(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let grid = SpaceGrid::interval(cfg.identity_points)?;
    let time = TimeGrid::new(cfg.identity_horizon, cfg.identity_steps)?;
    let basis = build_interval_basis(&grid, 4)?;
    let mut rows = Vec::new();
    for scenario in standard_scenarios() {
        let report = verify_pairing_identity(&scenario, &time, &basis);
        match scenario.window {
            Window::ZeroData => {
                rows.push(CheckRow::new(
                    format!("{}-hypothesis", report.label),
                    if report.hypothesis_ok { 0.0 } else { 1.0 },
                    Bound::AtMost(0.0),
                ));
                rows.push(CheckRow::new(
                    format!("{}-pairing", report.label),
                    report.pairing.abs(),
                    Bound::AtMost(tolerances::PAIRING),
                ));
                rows.push(CheckRow::new(
                    format!("{}-ibp-first", report.label),
                    report.ibp_first.abs(),
                    Bound::AtMost(tolerances::PAIRING),
                ));
                rows.push(CheckRow::new(
                    format!("{}-ibp-second", report.label),
                    report.ibp_second.abs(),
                    Bound::AtMost(tolerances::PAIRING),
                ));
            }
            Window::BrokenAtHorizon => {
                rows.push(CheckRow::new(
                    format!("{}-pairing", report.label),
                    report.pairing.abs(),
                    Bound::AtLeast(tolerances::MUTATION_FLOOR),
                ));
            }
        }
    }
    Ok(CriterionReport::assemble(6, "pairing identity suite", started, rows, 30.0))
}

/// Criterion 7: the staged reconstruction round trip.
pub fn criterion_inverse_round_trip(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let grid = SpaceGrid::interval(cfg.inverse_points)?;
    let time = TimeGrid::new(cfg.inverse_horizon, cfg.inverse_steps)?;
    // basis generously larger than the mode cut so source products resolve
    let basis = build_interval_basis(&grid, 2 * cfg.inverse_mode_cut + 4)?;

    let truth_f2: Vec<f64> = basis
        .values(1)
        .iter()
        .zip(basis.values(3))
        .map(|(a, b)| 0.3 * a + 0.1 * b)
        .collect();
    let truth_f3: Vec<f64> = basis.values(2).iter().map(|v| 0.2 * v).collect();
    let truth = RunningCost::with_higher(cfg.inverse_c1, vec![truth_f2, truth_f3]);
    let oracle = SyntheticOracle::new(truth, &time, &grid, &basis);

    let mut rows = Vec::new();
    // linear coefficient from two probe modes independently
    for probe in [1usize, 2] {
        let rec = recover_c1(&oracle, probe, &time, &basis, &LinearStageOptions::default())?;
        rows.push(CheckRow::new(
            format!("c1-mode{probe}-relative-error"),
            (rec.c - cfg.inverse_c1).abs() / cfg.inverse_c1,
            Bound::AtMost(tolerances::C1_RECOVERY_REL),
        ));
    }

    // full pipeline
    let recon_cfg = ReconstructionConfig::standard(cfg.inverse_mode_cut, 3);
    let report = recover_running_cost(&oracle, &recon_cfg, &time, &basis)?;
    rows.push(CheckRow::new(
        "pipeline-c1-relative-error",
        (report.c1 - cfg.inverse_c1).abs() / cfg.inverse_c1,
        Bound::AtMost(tolerances::C1_RECOVERY_REL),
    ));
    let quad = report.quadratic.as_ref().expect("stage two ran");
    rows.push(CheckRow::new(
        "f2-mode1-relative-error",
        (quad.coefficients[1] - 0.3).abs() / 0.3,
        Bound::AtMost(tolerances::F2_RECOVERY_REL),
    ));
    rows.push(CheckRow::new(
        "f2-mode3-relative-error",
        (quad.coefficients[3] - 0.1).abs() / 0.1,
        Bound::AtMost(tolerances::F2_RECOVERY_REL),
    ));
    let spurious_f2 = quad
        .coefficients
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 1 && *i != 3)
        .fold(0.0f64, |s, (_, a)| s.max(a.abs()));
    rows.push(CheckRow::new(
        "f2-spurious-coefficients",
        spurious_f2,
        Bound::AtMost(tolerances::F2_RECOVERY_REL),
    ));
    let cubic = report.cubic.as_ref().expect("stage three ran");
    rows.push(CheckRow::new(
        "f3-mode2-relative-error",
        (cubic.coefficients[2] - 0.2).abs() / 0.2,
        Bound::AtMost(tolerances::F3_RECOVERY_REL),
    ));
    let spurious_f3 = cubic
        .coefficients
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 2)
        .fold(0.0f64, |s, (_, a)| s.max(a.abs()));
    rows.push(CheckRow::new(
        "f3-spurious-coefficients",
        spurious_f3,
        Bound::AtMost(tolerances::F3_RECOVERY_REL),
    ));
    rows.push(CheckRow::new(
        "probe-spread",
        report.probe_spread,
        Bound::AtMost(10.0 * tolerances::C1_RECOVERY_REL),
    ));
    Ok(CriterionReport::assemble(7, "inverse round trip", started, rows, 300.0))
}

/// Criterion 8: measurement noise degrades the linear coefficient
/// gracefully (median over seeds).
pub fn criterion_noise_robustness(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let started = Instant::now();
    let grid = SpaceGrid::interval(cfg.noise_points)?;
    let time = TimeGrid::new(cfg.noise_horizon, cfg.noise_steps)?;
    let basis = build_interval_basis(&grid, 6)?;
    let c_truth = 2.0;
    let mut errors = Vec::new();
    for s in 0..cfg.noise_seeds {
        let oracle = NoisyOracle::new(
            SyntheticOracle::new(RunningCost::linear(c_truth), &time, &grid, &basis),
            cfg.noise_level,
            cfg.noise_base_seed + s as u64,
        );
        let rec = recover_c1(&oracle, 1, &time, &basis, &LinearStageOptions::default())?;
        errors.push((rec.c - c_truth).abs() / c_truth);
    }
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = errors[errors.len() / 2];
    let rows = vec![
        CheckRow::new("median-relative-degradation", median, Bound::AtMost(tolerances::NOISE_DEGRADATION_REL)),
        CheckRow::new("worst-relative-degradation", *errors.last().unwrap(), Bound::AtMost(0.05)),
    ];
    Ok(CriterionReport::assemble(8, "noise robustness", started, rows, 300.0))
}

/// Runs criteria 1 through 8 in order. Determinism (criterion 9) is a
/// property of two whole runs, so it is checked by the callers that own
/// the report serialization.
pub fn run_all(cfg: &SuiteConfig) -> Result<Vec<CriterionReport>> {
    Ok(vec![
        criterion_probe_algebra(cfg)?,
        criterion_probe_certification(cfg)?,
        criterion_stationary(cfg)?,
        criterion_mass_positivity(cfg)?,
        criterion_linearization(cfg)?,
        criterion_identity(cfg)?,
        criterion_inverse_round_trip(cfg)?,
        criterion_noise_robustness(cfg)?,
    ])
}

/// Serializes criterion rows as CSV lines (no header) with a fixed float
/// format, the byte-stable body shared by reports.
pub fn rows_to_csv(reports: &[CriterionReport]) -> String {
    let mut out = String::new();
    out.push_str("criterion,name,check,value,bound,pass\n");
    for report in reports {
        for row in &report.rows {
            out.push_str(&format!(
                "{},{},{},{:.12e},{},{}\n",
                report.id,
                report.name,
                row.label,
                row.value,
                row.bound.describe().replace(',', ";"),
                row.pass
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_admit_correctly() {
        assert!(Bound::AtMost(1.0).admits(0.5));
        assert!(!Bound::AtMost(1.0).admits(1.5));
        assert!(Bound::AtLeast(1.0).admits(1.5));
        assert!(Bound::Within { lo: 1.8, hi: 2.2 }.admits(2.0));
        assert!(!Bound::Within { lo: 1.8, hi: 2.2 }.admits(1.7));
    }

    #[test]
    fn log_slope_of_exact_quadratic_is_two() {
        let scales = [1e-2, 5e-3, 2.5e-3];
        let values: Vec<f64> = scales.iter().map(|e| 3.0 * e * e).collect();
        assert!((log_slope(&scales, &values) - 2.0).abs() < 1e-12);
    }

    // calibration helper: prints the stencil-versus-direct tables so grid
    // and coefficient choices can be tuned; run with --ignored --nocapture
    #[test]
    #[ignore]
    fn calibrate_linearization() {
        for (points, steps, f3, epsilons) in [
            (513usize, 512usize, 160.0, vec![2e-2, 1e-2, 5e-3]),
            (1025, 1024, 160.0, vec![1e-2, 5e-3, 2.5e-3]),
        ] {
            let cfg = SuiteConfig {
                lin_points: points,
                lin_steps: steps,
                lin_f3_amplitude: f3,
                lin_epsilons: epsilons.clone(),
                ..Default::default()
            };
            let report = criterion_linearization(&cfg).unwrap();
            println!("points={points} steps={steps} f3={f3} eps={epsilons:?}");
            for row in &report.rows {
                println!("  {} = {:.6e} ({})", row.label, row.value, row.bound.describe());
            }
        }
    }
}
