//! The measurement map and the difference stencils that extract
//! derivative data from nonlinear solves.
//!
//! A measurement sends an initial density to the pair `(u(·,0), m(·,T))`.
//! Derivatives of the measurement at the uniform density along zero-mean
//! directions are formed by central difference stencils in the
//! perturbation amplitude, with optional Richardson extrapolation across
//! a ladder of amplitudes. The Picard tolerance of the underlying solves
//! sets the noise floor of a stencil at `tol / ε`, so the solver is run
//! tighter here than in plain forward mode.

use crate::error::Result;
use crate::forward::{solve_mfg, ForwardConfig};
use crate::mesh::{SpaceGrid, TimeGrid};
use crate::running_cost::RunningCost;
use crate::tolerances;

/// One measurement: the value function at time zero and the density at
/// the horizon, with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub u0: Vec<f64>,
    pub m_final: Vec<f64>,
    pub provenance: String,
}

/// Runs the forward solver and slices out the measurement pair.
pub fn measure(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    m0: &[f64],
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<MeasurementRecord> {
    let sol = solve_mfg(cost, cfg, m0, time, grid)?;
    let last = time.nodes() - 1;
    Ok(MeasurementRecord {
        u0: sol.u.slice(0).to_vec(),
        m_final: sol.m.slice(last).to_vec(),
        provenance: format!(
            "order={} points={} steps={} horizon={} terminal={}",
            cost.order(),
            grid.points_per_axis(),
            time.steps(),
            time.horizon(),
            cfg.terminal_cost
        ),
    })
}

/// Difference scheme in the perturbation amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Symmetric differences, accurate to second order in the amplitude.
    Central,
    /// Forward differences against the unperturbed solve, first order.
    OneSided,
}

impl Scheme {
    /// Nominal convergence order of the stencil.
    pub fn order(self) -> usize {
        match self {
            Scheme::Central => 2,
            Scheme::OneSided => 1,
        }
    }
}

/// Amplitude ladder for derivative extraction.
#[derive(Debug, Clone)]
pub struct EpsilonStencil {
    pub epsilons: Vec<f64>,
    pub scheme: Scheme,
}

impl Default for EpsilonStencil {
    fn default() -> Self {
        Self { epsilons: vec![1e-2, 5e-3, 2.5e-3], scheme: Scheme::Central }
    }
}

/// Convergence diagnostic of the extrapolation ladder: the ratios of
/// successive stencil differences, which should approach `2^order` (4
/// for central schemes) when the amplitude is in the asymptotic range.
#[derive(Debug, Clone)]
pub struct RichardsonDiagnostic {
    pub ratios: Vec<f64>,
    pub noisy: bool,
}

impl RichardsonDiagnostic {
    fn from_ratios(ratios: Vec<f64>, expected: f64) -> Self {
        let noisy = ratios
            .iter()
            .any(|r| !(expected / 1.6..=expected * 1.6).contains(r));
        Self { ratios, noisy }
    }
}

/// An extracted derivative of the measurement map: the best available
/// slices plus the raw per-amplitude stencil values behind them.
#[derive(Debug, Clone)]
pub struct ExtractedDerivative {
    pub u0: Vec<f64>,
    pub m_final: Vec<f64>,
    /// `(ε, u-slice, m-slice)` for each ladder amplitude, unextrapolated.
    pub per_epsilon: Vec<(f64, Vec<f64>, Vec<f64>)>,
    pub diagnostic: RichardsonDiagnostic,
}

fn perturbed(base: &[f64], directions: &[(&[f64], f64)]) -> Vec<f64> {
    let mut m0 = base.to_vec();
    for (f, eps) in directions {
        for (m, v) in m0.iter_mut().zip(*f) {
            *m += eps * v;
        }
    }
    m0
}

fn stencil_cfg(cfg: &ForwardConfig) -> ForwardConfig {
    ForwardConfig { picard_tol: cfg.picard_tol.min(tolerances::PICARD_TOL_STENCIL), ..cfg.clone() }
}

/// First derivative of the measurement along `f1` at one amplitude.
pub fn stencil_order1(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    f1: &[f64],
    eps: f64,
    scheme: Scheme,
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cfg = stencil_cfg(cfg);
    let ones = vec![1.0; grid.len()];
    match scheme {
        Scheme::Central => {
            let plus = measure(cost, &cfg, &perturbed(&ones, &[(f1, eps)]), time, grid)?;
            let minus = measure(cost, &cfg, &perturbed(&ones, &[(f1, -eps)]), time, grid)?;
            let du = diff_scaled(&plus.u0, &minus.u0, 2.0 * eps);
            let dm = diff_scaled(&plus.m_final, &minus.m_final, 2.0 * eps);
            Ok((du, dm))
        }
        Scheme::OneSided => {
            let plus = measure(cost, &cfg, &perturbed(&ones, &[(f1, eps)]), time, grid)?;
            let base = measure(cost, &cfg, &ones, time, grid)?;
            let du = diff_scaled(&plus.u0, &base.u0, eps);
            let dm = diff_scaled(&plus.m_final, &base.m_final, eps);
            Ok((du, dm))
        }
    }
}

/// Second mixed derivative along `(f1, f2)` at one amplitude, the
/// four-point cross stencil.
pub fn stencil_order2(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    f1: &[f64],
    f2: &[f64],
    eps: f64,
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cfg = stencil_cfg(cfg);
    let ones = vec![1.0; grid.len()];
    let mut u = vec![0.0; grid.len()];
    let mut m = vec![0.0; grid.len()];
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let rec = measure(
            cost,
            &cfg,
            &perturbed(&ones, &[(f1, s1 * eps), (f2, s2 * eps)]),
            time,
            grid,
        )?;
        let sign = s1 * s2;
        for j in 0..grid.len() {
            u[j] += sign * rec.u0[j];
            m[j] += sign * rec.m_final[j];
        }
    }
    let scale = 4.0 * eps * eps;
    u.iter_mut().for_each(|v| *v /= scale);
    m.iter_mut().for_each(|v| *v /= scale);
    Ok((u, m))
}

/// Third mixed derivative along `(f1, f2, f3)`, the eight-point stencil.
pub fn stencil_order3(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    f1: &[f64],
    f2: &[f64],
    f3: &[f64],
    eps: f64,
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cfg = stencil_cfg(cfg);
    let ones = vec![1.0; grid.len()];
    let mut u = vec![0.0; grid.len()];
    let mut m = vec![0.0; grid.len()];
    for bits in 0..8u32 {
        let s1 = if bits & 1 == 0 { 1.0 } else { -1.0 };
        let s2 = if bits & 2 == 0 { 1.0 } else { -1.0 };
        let s3 = if bits & 4 == 0 { 1.0 } else { -1.0 };
        let rec = measure(
            cost,
            &cfg,
            &perturbed(&ones, &[(f1, s1 * eps), (f2, s2 * eps), (f3, s3 * eps)]),
            time,
            grid,
        )?;
        let sign = s1 * s2 * s3;
        for j in 0..grid.len() {
            u[j] += sign * rec.u0[j];
            m[j] += sign * rec.m_final[j];
        }
    }
    let scale = 8.0 * eps * eps * eps;
    u.iter_mut().for_each(|v| *v /= scale);
    m.iter_mut().for_each(|v| *v /= scale);
    Ok((u, m))
}

fn diff_scaled(a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y) / scale).collect()
}

fn richardson_ladder(
    per_epsilon: &[(f64, Vec<f64>, Vec<f64>)],
    order: usize,
) -> (Vec<f64>, Vec<f64>, RichardsonDiagnostic) {
    let count = per_epsilon.len();
    if count == 1 {
        return (
            per_epsilon[0].1.clone(),
            per_epsilon[0].2.clone(),
            RichardsonDiagnostic { ratios: Vec::new(), noisy: false },
        );
    }
    // one extrapolation level between the two smallest amplitudes
    let (e_big, u_big, m_big) = &per_epsilon[count - 2];
    let (e_small, u_small, m_small) = &per_epsilon[count - 1];
    let p = order as f64;
    let w = (e_big / e_small).powf(p);
    let combine = |small: &[f64], big: &[f64]| -> Vec<f64> {
        small
            .iter()
            .zip(big)
            .map(|(s, b)| (w * s - b) / (w - 1.0))
            .collect()
    };
    let u = combine(u_small, u_big);
    let m = combine(m_small, m_big);

    let mut ratios = Vec::new();
    for win in per_epsilon.windows(3) {
        let d1 = sup_diff(&win[0].2, &win[1].2).max(sup_diff(&win[0].1, &win[1].1));
        let d2 = sup_diff(&win[1].2, &win[2].2).max(sup_diff(&win[1].1, &win[2].1));
        if d2 > 0.0 {
            ratios.push(d1 / d2);
        }
    }
    let expected = (per_epsilon[0].0 / per_epsilon[1].0).powf(p);
    (u, m, RichardsonDiagnostic::from_ratios(ratios, expected))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()))
}

/// First derivative of the measurement along `f1` over the whole ladder,
/// Richardson-extrapolated when at least two amplitudes are given.
pub fn extract_order1(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    f1: &[f64],
    stencil: &EpsilonStencil,
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<ExtractedDerivative> {
    let mut per_epsilon = Vec::new();
    for &eps in &stencil.epsilons {
        let (u, m) = stencil_order1(cost, cfg, f1, eps, stencil.scheme, time, grid)?;
        per_epsilon.push((eps, u, m));
    }
    let (u0, m_final, diagnostic) = richardson_ladder(&per_epsilon, stencil.scheme.order());
    Ok(ExtractedDerivative { u0, m_final, per_epsilon, diagnostic })
}

/// Second mixed derivative over the ladder.
pub fn extract_order2(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    f1: &[f64],
    f2: &[f64],
    stencil: &EpsilonStencil,
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<ExtractedDerivative> {
    let mut per_epsilon = Vec::new();
    for &eps in &stencil.epsilons {
        let (u, m) = stencil_order2(cost, cfg, f1, f2, eps, time, grid)?;
        per_epsilon.push((eps, u, m));
    }
    let (u0, m_final, diagnostic) = richardson_ladder(&per_epsilon, 2);
    Ok(ExtractedDerivative { u0, m_final, per_epsilon, diagnostic })
}

/// Third mixed derivative over the ladder.
pub fn extract_order3(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    f1: &[f64],
    f2: &[f64],
    f3: &[f64],
    stencil: &EpsilonStencil,
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<ExtractedDerivative> {
    let mut per_epsilon = Vec::new();
    for &eps in &stencil.epsilons {
        let (u, m) = stencil_order3(cost, cfg, f1, f2, f3, eps, time, grid)?;
        per_epsilon.push((eps, u, m));
    }
    let (u0, m_final, diagnostic) = richardson_ladder(&per_epsilon, 2);
    Ok(ExtractedDerivative { u0, m_final, per_epsilon, diagnostic })
}

/// Deterministic splittable generator for noise experiments.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `(0, 1)` with 53 significant bits.
    pub fn next_f64(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) / (1u64 << 53) as f64
    }

    /// Standard normal by Box-Muller, caching the spare draw.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Adds Gaussian noise scaled by `level` times the sup of each component.
pub fn add_record_noise(record: &mut MeasurementRecord, level: f64, rng: &mut SplitMix64) {
    for slice in [&mut record.u0, &mut record.m_final] {
        let scale = slice.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for v in slice.iter_mut() {
            *v += level * scale * rng.next_gaussian();
        }
    }
}

/// Same noise model applied to a bare slice pair.
pub fn add_slice_noise(u: &mut [f64], m: &mut [f64], level: f64, rng: &mut SplitMix64) {
    for slice in [u, m] {
        let scale = slice.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for v in slice.iter_mut() {
            *v += level * scale * rng.next_gaussian();
        }
    }
}
