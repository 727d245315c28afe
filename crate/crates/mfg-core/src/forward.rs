//! Nonlinear forward solver for the coupled value-function / density
//! system with reflecting boundaries.
//!
//! The value equation is swept backward and the density equation forward,
//! both with Crank-Nicolson time stepping, inside a damped fixed-point
//! iteration: the quadratic gradient term is lagged from the previous
//! iterate, the drift in the density equation is frozen from the current
//! value sweep. The advective flux `m ∇u` is discretized in conservative
//! face form with zero flux at the walls, which conserves the trapezoid
//! mass of the density identically, for any value field. Positivity is
//! monitored, never enforced, so a defective scheme cannot hide behind a
//! projection.

use crate::error::{Error, Result};
use crate::mesh::{SpaceGrid, SpaceTimeField, TimeGrid};
use crate::operators::gradient;
use crate::running_cost::RunningCost;
use crate::tolerances;

/// Parameters of a forward solve.
#[derive(Debug, Clone)]
pub struct ForwardConfig {
    /// Constant terminal cost `G`.
    pub terminal_cost: f64,
    /// Damping of the fixed-point update, in `(0, 1]`.
    pub damping: f64,
    /// Stop when successive iterates differ by less than this in sup norm.
    pub picard_tol: f64,
    pub max_iters: usize,
    /// Declared small-data radius `sup|m0 - 1|` for which convergence is
    /// expected. Documented, not enforced: stepping outside it shows up as
    /// non-contraction, which the solver reports rather than hides.
    pub small_data_radius: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            terminal_cost: 0.0,
            damping: 0.5,
            picard_tol: tolerances::PICARD_TOL,
            max_iters: 400,
            small_data_radius: tolerances::SMALL_DATA_RADIUS,
        }
    }
}

impl ForwardConfig {
    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidConfig("picard_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Converged solution pair with iteration diagnostics.
#[derive(Debug, Clone)]
pub struct MFGSolution {
    pub u: SpaceTimeField,
    pub m: SpaceTimeField,
    pub iterations_used: usize,
    pub final_residual: f64,
    /// Sup-norm change of the iterate after each pass.
    pub residual_history: Vec<f64>,
}

impl MFGSolution {
    /// True when the residual decreased monotonically after the first
    /// pass, the contraction signature of the small-data regime.
    pub fn contraction_monotone(&self) -> bool {
        self.residual_history
            .windows(2)
            .skip(1)
            .all(|w| w[1] <= w[0])
    }

    /// Smallest density value over the whole space-time grid.
    pub fn min_density(&self) -> f64 {
        self.m.values().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Per-time-node masses `(t, ∫ m(·, t))` of a solution.
pub fn mass_trace(sol: &MFGSolution, time: &TimeGrid, grid: &SpaceGrid) -> Vec<(f64, f64)> {
    (0..time.nodes())
        .map(|n| (time.time(n), grid.quadrature(sol.m.slice(n))))
        .collect()
}

/// Largest deviation of the mass trace from 1.
pub fn mass_defect(sol: &MFGSolution, time: &TimeGrid, grid: &SpaceGrid) -> f64 {
    mass_trace(sol, time, grid)
        .iter()
        .fold(0.0f64, |d, (_, mass)| d.max((mass - 1.0).abs()))
}

/// Solves the coupled system for an initial density `m0`.
///
/// `m0` must be a discrete probability density: unit trapezoid mass and
/// nonnegative nodes. Returns the last undamped sweep output once the
/// iterate change drops below `picard_tol`, after a mass-conservation
/// audit of the result.
pub fn solve_mfg(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    m0: &[f64],
    time: &TimeGrid,
    grid: &SpaceGrid,
) -> Result<MFGSolution> {
    cfg.validate()?;
    assert_eq!(grid.dimension(), 1, "the forward solver is one-dimensional");
    if m0.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: m0.len() });
    }
    let mass = grid.quadrature(m0);
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::MassDefect { defect: (mass - 1.0).abs() });
    }
    let min0 = m0.iter().copied().fold(f64::INFINITY, f64::min);
    if min0 < 0.0 {
        return Err(Error::NegativeDensity { min: min0 });
    }

    let nodes = time.nodes();
    let n = grid.len();

    // initial iterate: terminal cost everywhere, initial density everywhere
    let mut u_iter = SpaceTimeField::from_fn(time, grid, |_, _| cfg.terminal_cost);
    let mut m_iter = SpaceTimeField::from_fn(time, grid, |_, j| m0[j]);

    let mut history = Vec::new();
    let mut workspace = Workspace::new(n);

    for iter in 1..=cfg.max_iters {
        let u_new = hjb_sweep(cost, cfg, &u_iter, &m_iter, time, grid, &mut workspace);
        let m_new = kfp_sweep(&u_new, m0, time, grid, &mut workspace);

        let residual = u_new.sup_distance(&u_iter).max(m_new.sup_distance(&m_iter));
        history.push(residual);

        if residual < cfg.picard_tol {
            let sol = MFGSolution {
                u: u_new,
                m: m_new,
                iterations_used: iter,
                final_residual: residual,
                residual_history: history,
            };
            let drift = mass_defect(&sol, time, grid);
            if drift > tolerances::MASS_CONSERVATION {
                return Err(Error::MassDrift { drift, tol: tolerances::MASS_CONSERVATION });
            }
            return Ok(sol);
        }

        // damped update of the iterate; the returned pair is always the
        // raw sweep output, so converged solves are not blended
        let theta = cfg.damping;
        for node in 0..nodes {
            let (ui, un) = (u_iter.slice_mut(node), u_new.slice(node));
            for j in 0..n {
                ui[j] += theta * (un[j] - ui[j]);
            }
            let (mi, mn) = (m_iter.slice_mut(node), m_new.slice(node));
            for j in 0..n {
                mi[j] += theta * (mn[j] - mi[j]);
            }
        }
    }

    Err(Error::Diverged {
        iters: cfg.max_iters,
        residual: *history.last().unwrap_or(&f64::NAN),
    })
}

struct Workspace {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            sub: vec![0.0; n - 1],
            diag: vec![0.0; n],
            sup: vec![0.0; n - 1],
            rhs: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }
}

/// Thomas elimination; the matrix is destroyed, the solution lands in `rhs`.
fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i - 1] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}

/// `out = (I + a Δ_h) f` with the ghost-reflected Laplacian.
fn apply_identity_plus_laplacian(a: f64, f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let r = a / (h * h);
    out[0] = f[0] + 2.0 * r * (f[1] - f[0]);
    for j in 1..n - 1 {
        out[j] = f[j] + r * (f[j - 1] - 2.0 * f[j] + f[j + 1]);
    }
    out[n - 1] = f[n - 1] + 2.0 * r * (f[n - 2] - f[n - 1]);
}

/// Fills the tridiagonal bands of `I - a Δ_h`.
fn fill_identity_minus_laplacian(a: f64, h: f64, sub: &mut [f64], diag: &mut [f64], sup: &mut [f64]) {
    let n = diag.len();
    let r = a / (h * h);
    diag[0] = 1.0 + 2.0 * r;
    sup[0] = -2.0 * r;
    for j in 1..n - 1 {
        sub[j - 1] = -r;
        diag[j] = 1.0 + 2.0 * r;
        sup[j] = -r;
    }
    sub[n - 2] = -2.0 * r;
    diag[n - 1] = 1.0 + 2.0 * r;
}

/// Backward Crank-Nicolson sweep of the value equation with the source
/// `F(x, m) - ½|∇u|²` assembled from the previous iterate.
fn hjb_sweep(
    cost: &RunningCost,
    cfg: &ForwardConfig,
    u_prev: &SpaceTimeField,
    m_prev: &SpaceTimeField,
    time: &TimeGrid,
    grid: &SpaceGrid,
    ws: &mut Workspace,
) -> SpaceTimeField {
    let n = grid.len();
    let h = grid.spacing();
    let dt = time.dt();
    let nodes = time.nodes();

    // source S(t) = ½|∇u_prev|² - F(m_prev), so the equation reads
    // ∂_t u = -Δu + S marching backward
    let mut sources = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let grad = gradient(grid, u_prev.slice(node)).expect("shape checked");
        let f = cost.evaluate(m_prev.slice(node));
        let s: Vec<f64> = grad
            .iter()
            .zip(&f)
            .map(|(g, fv)| 0.5 * g * g - fv)
            .collect();
        sources.push(s);
    }

    let mut u = SpaceTimeField::zeros(time, grid);
    for j in 0..n {
        u.set(nodes - 1, j, cfg.terminal_cost);
    }

    for node in (0..nodes - 1).rev() {
        // (I - dt/2 Δ) u^n = (I + dt/2 Δ) u^{n+1} - dt/2 (S^n + S^{n+1})
        apply_identity_plus_laplacian(0.5 * dt, u.slice(node + 1), h, &mut ws.scratch);
        for j in 0..n {
            ws.rhs[j] = ws.scratch[j] - 0.5 * dt * (sources[node][j] + sources[node + 1][j]);
        }
        fill_identity_minus_laplacian(0.5 * dt, h, &mut ws.sub, &mut ws.diag, &mut ws.sup);
        solve_tridiagonal(&ws.sub, &mut ws.diag, &ws.sup, &mut ws.rhs);
        u.slice_mut(node).copy_from_slice(&ws.rhs);
    }
    u
}

/// Bands of the conservative advection operator `m ↦ div(m ∇u)` for one
/// value slice: face velocities `(u[j+1] - u[j]) / h`, face densities by
/// averaging, zero flux through the walls. Every band row sums into the
/// trapezoid weights as a telescoping flux, so the operator annihilates
/// the discrete mass identically.
fn advection_bands(u_slice: &[f64], h: f64, sub: &mut [f64], diag: &mut [f64], sup: &mut [f64]) {
    let n = u_slice.len();
    let face = |j: usize| (u_slice[j + 1] - u_slice[j]) / h;

    let g0 = face(0);
    diag[0] = g0 / h;
    sup[0] = g0 / h;
    for j in 1..n - 1 {
        let gl = face(j - 1);
        let gr = face(j);
        sub[j - 1] = -gl / (2.0 * h);
        diag[j] = (gr - gl) / (2.0 * h);
        sup[j] = gr / (2.0 * h);
    }
    let gl = face(n - 2);
    sub[n - 2] = -gl / h;
    diag[n - 1] = -gl / h;
}

/// Forward Crank-Nicolson sweep of the density equation with drift from
/// the given value field.
fn kfp_sweep(
    u: &SpaceTimeField,
    m0: &[f64],
    time: &TimeGrid,
    grid: &SpaceGrid,
    ws: &mut Workspace,
) -> SpaceTimeField {
    let n = grid.len();
    let h = grid.spacing();
    let dt = time.dt();
    let nodes = time.nodes();

    let mut m = SpaceTimeField::zeros(time, grid);
    m.slice_mut(0).copy_from_slice(m0);

    let mut adv_sub = vec![0.0; n - 1];
    let mut adv_diag = vec![0.0; n];
    let mut adv_sup = vec![0.0; n - 1];

    for node in 0..nodes - 1 {
        // explicit half step: (I + dt/2 (Δ + D^n)) m^n
        apply_identity_plus_laplacian(0.5 * dt, m.slice(node), h, &mut ws.scratch);
        advection_bands(u.slice(node), h, &mut adv_sub, &mut adv_diag, &mut adv_sup);
        {
            let ms = m.slice(node);
            ws.rhs[0] = ws.scratch[0] + 0.5 * dt * (adv_diag[0] * ms[0] + adv_sup[0] * ms[1]);
            for j in 1..n - 1 {
                ws.rhs[j] = ws.scratch[j]
                    + 0.5
                        * dt
                        * (adv_sub[j - 1] * ms[j - 1] + adv_diag[j] * ms[j] + adv_sup[j] * ms[j + 1]);
            }
            ws.rhs[n - 1] = ws.scratch[n - 1]
                + 0.5 * dt * (adv_sub[n - 2] * ms[n - 2] + adv_diag[n - 1] * ms[n - 1]);
        }

        // implicit half step: (I - dt/2 (Δ + D^{n+1})) m^{n+1} = rhs
        fill_identity_minus_laplacian(0.5 * dt, h, &mut ws.sub, &mut ws.diag, &mut ws.sup);
        advection_bands(u.slice(node + 1), h, &mut adv_sub, &mut adv_diag, &mut adv_sup);
        for j in 0..n - 1 {
            ws.sup[j] -= 0.5 * dt * adv_sup[j];
            ws.sub[j] -= 0.5 * dt * adv_sub[j];
        }
        for j in 0..n {
            ws.diag[j] -= 0.5 * dt * adv_diag[j];
        }
        solve_tridiagonal(&ws.sub, &mut ws.diag, &ws.sup, &mut ws.rhs);
        m.slice_mut(node + 1).copy_from_slice(&ws.rhs);
    }
    m
}
