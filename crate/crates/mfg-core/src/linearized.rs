//! Direct solvers for the linearized systems, exact per eigenmode.
//!
//! Around the uniform density the coupled system decouples over the
//! Neumann eigenbasis. On mode `i` with eigenvalue `β` the coefficient
//! pair `(ν, μ)` of `(u, m)` satisfies
//!
//! ```text
//!   -ν' + β ν = c μ + s_u(t)
//!    μ' + β μ + β ν = s_m(t)
//! ```
//!
//! a 2x2 linear system whose matrix squares to `λ² I` with
//! `λ = sqrt(β² + c β)`. All solves here use closed forms or
//! variation of constants with only decaying exponentials, so no time
//! stepping error enters and high modes cannot overflow.

use crate::basis::{sample_cosine_derivative, SpectralBasis};
use crate::error::{Error, Result};
use crate::mesh::{SpaceGrid, SpaceTimeField, TimeGrid};
use crate::tolerances;

/// Exponential rate `λ = sqrt(β² + c β)` of the coupled mode system.
pub fn coupling_rate(beta: f64, c: f64) -> f64 {
    (beta * beta + c * beta).sqrt()
}

/// `k = β - λ` in the cancellation-free form `-c β / (β + λ)`.
pub fn rate_offset(beta: f64, c: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let lambda = coupling_rate(beta, c);
    -c * beta / (beta + lambda)
}

/// Closed-form coefficient pair of one mode of the first-order system
/// with terminal value condition `ν(T) = 0` and initial density
/// coefficient `μ(0) = g`:
///
/// ```text
///   μ(t) = g [ (β+λ) e^{-λt} - (β-λ) e^{λ(t-2T)} ] / d
///   ν(t) = g c [ e^{-λt} - e^{λ(t-2T)} ] / d
///   d = (β+λ) - (β-λ) e^{-2λT}
/// ```
///
/// Every exponent is nonpositive on `[0, T]`, so evaluation is stable for
/// arbitrarily stiff modes.
#[derive(Debug, Clone, Copy)]
pub struct FirstOrderMode {
    pub index: usize,
    pub beta: f64,
    pub c: f64,
    pub lambda: f64,
    pub horizon: f64,
    amp: f64,
}

impl FirstOrderMode {
    pub fn new(index: usize, beta: f64, c: f64, horizon: f64, g: f64) -> Self {
        if beta == 0.0 || g == 0.0 {
            // mode 0 carries no dynamics: zero-mean data never excites it
            return Self { index, beta, c, lambda: coupling_rate(beta, c), horizon, amp: 0.0 };
        }
        let lambda = coupling_rate(beta, c);
        let denom = (beta + lambda) - (beta - lambda) * (-2.0 * lambda * horizon).exp();
        Self { index, beta, c, lambda, horizon, amp: g / denom }
    }

    pub fn mu(&self, t: f64) -> f64 {
        if self.amp == 0.0 {
            return 0.0;
        }
        let (b, l) = (self.beta, self.lambda);
        self.amp * ((b + l) * (-l * t).exp() - (b - l) * (l * (t - 2.0 * self.horizon)).exp())
    }

    pub fn nu(&self, t: f64) -> f64 {
        if self.amp == 0.0 {
            return 0.0;
        }
        let l = self.lambda;
        self.amp * self.c * ((-l * t).exp() - (l * (t - 2.0 * self.horizon)).exp())
    }

    pub fn is_zero(&self) -> bool {
        self.amp == 0.0
    }
}

/// Density coefficient at the horizon per unit initial coefficient,
/// the forward observable inverted by the coefficient search.
pub fn mu_at_horizon(beta: f64, c: f64, horizon: f64) -> f64 {
    let lambda = coupling_rate(beta, c);
    let denom = (beta + lambda) - (beta - lambda) * (-2.0 * lambda * horizon).exp();
    2.0 * lambda * (-lambda * horizon).exp() / denom
}

/// Value-function coefficient at time zero per unit initial density
/// coefficient; the cross-validation observable.
pub fn nu_at_zero(beta: f64, c: f64, horizon: f64) -> f64 {
    let lambda = coupling_rate(beta, c);
    let denom = (beta + lambda) - (beta - lambda) * (-2.0 * lambda * horizon).exp();
    c * (1.0 - (-2.0 * lambda * horizon).exp()) / denom
}

/// Sampled coefficient pair of one mode, `(ν(t_n), μ(t_n))` on the
/// output time nodes.
#[derive(Debug, Clone)]
pub struct ModalState {
    pub index: usize,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
}

/// First-order solution with its closed-form modal table.
#[derive(Debug, Clone)]
pub struct FirstOrderSolution {
    pub u: SpaceTimeField,
    pub m: SpaceTimeField,
    pub modes: Vec<FirstOrderMode>,
}

impl FirstOrderSolution {
    pub fn states(&self, time: &TimeGrid) -> Vec<ModalState> {
        self.modes
            .iter()
            .map(|fm| ModalState {
                index: fm.index,
                nu: time.times().iter().map(|&t| fm.nu(t)).collect(),
                mu: time.times().iter().map(|&t| fm.mu(t)).collect(),
            })
            .collect()
    }
}

/// Sampled solution of an inhomogeneous or adjoint solve.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub u: SpaceTimeField,
    pub m: SpaceTimeField,
    pub states: Vec<ModalState>,
}

fn check_zero_mean(grid: &SpaceGrid, f: &[f64]) -> Result<()> {
    let mean = grid.quadrature(f);
    if mean.abs() > tolerances::PERTURBATION_MEAN {
        return Err(Error::NonzeroMean { mean });
    }
    Ok(())
}

/// Solves the first-order system for a zero-mean initial perturbation
/// `f1`: per mode the closed-form boundary-value pair, assembled back to
/// grid fields. Mode 0 stays identically zero.
pub fn solve_first_order(
    c: f64,
    f1: &[f64],
    time: &TimeGrid,
    basis: &SpectralBasis,
) -> Result<FirstOrderSolution> {
    let grid = basis.grid();
    if f1.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: f1.len() });
    }
    check_zero_mean(grid, f1)?;
    let residual = basis.truncation_residual(f1);
    if residual > 1e-8 {
        return Err(Error::BasisTruncation { residual });
    }

    let coeffs = basis.project(f1);
    let modes: Vec<FirstOrderMode> = (0..basis.count())
        .map(|i| FirstOrderMode::new(i, basis.eigenvalue(i), c, time.horizon(), coeffs[i]))
        .collect();

    let mut u = SpaceTimeField::zeros(time, grid);
    let mut m = SpaceTimeField::zeros(time, grid);
    for (n, &t) in time.times().iter().enumerate() {
        for fm in &modes {
            if fm.is_zero() {
                continue;
            }
            let (nu, mu) = (fm.nu(t), fm.mu(t));
            let shape = basis.values(fm.index);
            let (us, ms) = (u.slice_mut(n), shape);
            for (j, s) in ms.iter().enumerate() {
                us[j] += nu * s;
            }
            let msl = m.slice_mut(n);
            for (j, s) in shape.iter().enumerate() {
                msl[j] += mu * s;
            }
        }
    }
    Ok(FirstOrderSolution { u, m, modes })
}

/// One separable source term: a spatial profile times a scalar function
/// of time, feeding either the value-function row or the density row.
pub struct SourceTerm {
    pub row: SourceRow,
    pub profile: Vec<f64>,
    pub time_factor: Box<dyn Fn(f64) -> f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceRow {
    /// Appears as `-∂_t u - Δu - c m = s(x, t)`.
    Value,
    /// Appears as `∂_t m - Δm - Δu = s(x, t)`.
    Density,
}

/// Exponential-trapezoid weights for one integration segment.
///
/// Integrates `e^{-λ (Δ - σ)} r(σ)` over a segment exactly for piecewise
/// linear `r`, which removes the stiffness of the exponential kernel from
/// the quadrature error.
fn segment_weights(z: f64) -> (f64, f64) {
    if z < 1e-4 {
        // series to avoid cancellation near z = 0
        let w0 = 0.5 - z / 3.0 + z * z / 8.0;
        let w1 = 0.5 - z / 6.0 + z * z / 24.0;
        (w0, w1)
    } else {
        let em = (-z).exp();
        let phi1 = (1.0 - em) / z;
        let w0 = (1.0 - em * (1.0 + z)) / (z * z);
        (w0, phi1 - w0)
    }
}

/// Per-mode inhomogeneous boundary-value solve with `ν(T) = 0, μ(0) = 0`.
///
/// The source is sampled on a refined uniform grid; the solution is split
/// into the `±λ` characteristic components, each integrated in its stable
/// direction, and the two free amplitudes are fixed by the boundary rows.
fn mode_bvp_inhomogeneous(
    beta: f64,
    c: f64,
    horizon: f64,
    r_nu: &[f64],
    r_mu: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let q_total = r_nu.len() - 1;
    let dt = horizon / q_total as f64;

    if beta == 0.0 {
        // mode 0: μ' = r_mu, then ν' = β ν - c μ + r_nu with ν(T) = 0
        let mut mu = vec![0.0; q_total + 1];
        for q in 0..q_total {
            mu[q + 1] = mu[q] + 0.5 * dt * (r_mu[q] + r_mu[q + 1]);
        }
        let mut nu = vec![0.0; q_total + 1];
        for q in (0..q_total).rev() {
            // ν' = -c μ + r_nu  =>  ν(t) = ∫_t^T (c μ - r_nu) dτ
            let f_q = c * mu[q] - r_nu[q];
            let f_q1 = c * mu[q + 1] - r_nu[q + 1];
            nu[q] = nu[q + 1] + 0.5 * dt * (f_q + f_q1);
        }
        return (nu, mu);
    }

    if c == 0.0 {
        // decoupled: ν(t) = ∫_t^T e^{-β(τ-t)} (-r_nu)(τ) dτ with ν' = βν + r_nu... sign:
        // row reads -ν' + βν = r_nu  =>  ν' = βν - r_nu, ν(T) = 0
        let z = beta * dt;
        let (w0, w1) = segment_weights(z);
        let decay = (-z).exp();
        let mut nu = vec![0.0; q_total + 1];
        for q in (0..q_total).rev() {
            nu[q] = decay * nu[q + 1] + dt * (w1 * r_nu[q] + w0 * r_nu[q + 1]);
        }
        // μ' = -βμ - βν + r_mu, μ(0) = 0
        let mut mu = vec![0.0; q_total + 1];
        for q in 0..q_total {
            let f_q = r_mu[q] - beta * nu[q];
            let f_q1 = r_mu[q + 1] - beta * nu[q + 1];
            mu[q + 1] = decay * mu[q] + dt * (w0 * f_q + w1 * f_q1);
        }
        return (nu, mu);
    }

    let lambda = coupling_rate(beta, c);
    let z = lambda * dt;
    let (w0, w1) = segment_weights(z);
    let decay = (-z).exp();
    let bl = beta / lambda;
    let cl = c / lambda;

    // characteristic components of the right-hand side r = (-s_u, s_m):
    // in (ν, μ) coordinates the ODE is x' = A x + r with A = [[β, -c], [-β, -β]]
    let proj_minus = |rn: f64, rm: f64| -> (f64, f64) {
        (0.5 * ((1.0 - bl) * rn + cl * rm), 0.5 * (bl * rn + (1.0 + bl) * rm))
    };
    let proj_plus = |rn: f64, rm: f64| -> (f64, f64) {
        (0.5 * ((1.0 + bl) * rn - cl * rm), 0.5 * (-bl * rn + (1.0 - bl) * rm))
    };

    // decaying component integrated forward
    let mut i_minus = vec![(0.0, 0.0); q_total + 1];
    for q in 0..q_total {
        let (a0, b0) = proj_minus(r_nu[q], r_mu[q]);
        let (a1, b1) = proj_minus(r_nu[q + 1], r_mu[q + 1]);
        i_minus[q + 1] = (
            decay * i_minus[q].0 + dt * (w0 * a0 + w1 * a1),
            decay * i_minus[q].1 + dt * (w0 * b0 + w1 * b1),
        );
    }
    // growing component integrated backward
    let mut i_plus = vec![(0.0, 0.0); q_total + 1];
    for q in (0..q_total).rev() {
        let (a0, b0) = proj_plus(r_nu[q], r_mu[q]);
        let (a1, b1) = proj_plus(r_nu[q + 1], r_mu[q + 1]);
        i_plus[q] = (
            decay * i_plus[q + 1].0 + dt * (w1 * a0 + w0 * a1),
            decay * i_plus[q + 1].1 + dt * (w1 * b0 + w0 * b1),
        );
    }

    // free amplitudes: x(0) = (ν0, 0), x(T) = (0, μT)
    //   ν row at T: e^{-λT} ν0 (P₋e₁)_ν + I₋(T)_ν + μT (P₊e₂)_ν = 0
    //   μ row at 0: ν0 (P₋e₁)_μ + e^{-λT} μT (P₊e₂)_μ - I₊(0)_μ = 0
    let e_t = (-lambda * horizon).exp();
    let pm_e1 = (0.5 * (1.0 - bl), 0.5 * bl);
    let pp_e2 = (-0.5 * cl, 0.5 * (1.0 - bl));
    let a11 = pm_e1.0 * e_t;
    let a12 = pp_e2.0;
    let a21 = pm_e1.1;
    let a22 = pp_e2.1 * e_t;
    let b1 = -i_minus[q_total].0;
    let b2 = i_plus[0].1;
    let det = a11 * a22 - a12 * a21;
    debug_assert!(det.abs() > 0.0, "mode boundary system is singular");
    let nu0 = (b1 * a22 - a12 * b2) / det;
    let mu_t = (a11 * b2 - b1 * a21) / det;

    // assemble x(t) = e^{-λt} x₋(0) + I₋(t) + e^{-λ(T-t)} x₊(T) - I₊(t)
    let x_minus0 = (nu0 * pm_e1.0, nu0 * pm_e1.1);
    let x_plus_t = (mu_t * pp_e2.0, mu_t * pp_e2.1);
    let mut nu = vec![0.0; q_total + 1];
    let mut mu = vec![0.0; q_total + 1];
    for q in 0..=q_total {
        let t = q as f64 * dt;
        let em = (-lambda * t).exp();
        let ep = (-lambda * (horizon - t)).exp();
        nu[q] = em * x_minus0.0 + i_minus[q].0 + ep * x_plus_t.0 - i_plus[q].0;
        mu[q] = em * x_minus0.1 + i_minus[q].1 + ep * x_plus_t.1 - i_plus[q].1;
    }
    (nu, mu)
}

/// Solves the zero-data linear system driven by separable sources by
/// variation of constants per mode. `refine` subdivides each output time
/// step for the source quadrature.
pub fn solve_linear_response(
    c: f64,
    terms: &[SourceTerm],
    time: &TimeGrid,
    basis: &SpectralBasis,
    refine: usize,
) -> Result<LinearSolution> {
    let grid = basis.grid();
    for term in terms {
        if term.profile.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: term.profile.len() });
        }
    }
    let refine = refine.max(1);
    let q_total = time.steps() * refine;
    let dt_fine = time.horizon() / q_total as f64;

    // project every profile once; evaluate time factors on the fine grid
    struct Projected {
        row: SourceRow,
        coeffs: Vec<f64>,
        samples: Vec<f64>,
    }
    let projected: Vec<Projected> = terms
        .iter()
        .map(|term| Projected {
            row: term.row,
            coeffs: basis.project(&term.profile),
            samples: (0..=q_total)
                .map(|q| (term.time_factor)(q as f64 * dt_fine))
                .collect(),
        })
        .collect();

    let mut states = Vec::with_capacity(basis.count());
    let mut u = SpaceTimeField::zeros(time, grid);
    let mut m = SpaceTimeField::zeros(time, grid);

    for i in 0..basis.count() {
        // r = (-s_u, s_m) per mode
        let mut r_nu = vec![0.0; q_total + 1];
        let mut r_mu = vec![0.0; q_total + 1];
        for p in &projected {
            let w = p.coeffs[i];
            if w == 0.0 {
                continue;
            }
            match p.row {
                SourceRow::Value => {
                    for (rv, s) in r_nu.iter_mut().zip(&p.samples) {
                        *rv -= w * s;
                    }
                }
                SourceRow::Density => {
                    for (rv, s) in r_mu.iter_mut().zip(&p.samples) {
                        *rv += w * s;
                    }
                }
            }
        }
        let (nu_fine, mu_fine) = if r_nu.iter().all(|v| *v == 0.0) && r_mu.iter().all(|v| *v == 0.0)
        {
            (vec![0.0; q_total + 1], vec![0.0; q_total + 1])
        } else {
            mode_bvp_inhomogeneous(basis.eigenvalue(i), c, time.horizon(), &r_nu, &r_mu)
        };

        let nu: Vec<f64> = (0..time.nodes()).map(|n| nu_fine[n * refine]).collect();
        let mu: Vec<f64> = (0..time.nodes()).map(|n| mu_fine[n * refine]).collect();
        for n in 0..time.nodes() {
            if nu[n] != 0.0 || mu[n] != 0.0 {
                let shape = basis.values(i);
                let us = u.slice_mut(n);
                for (j, s) in shape.iter().enumerate() {
                    us[j] += nu[n] * s;
                }
                let msl = m.slice_mut(n);
                for (j, s) in shape.iter().enumerate() {
                    msl[j] += mu[n] * s;
                }
            }
        }
        states.push(ModalState { index: i, nu, mu });
    }
    Ok(LinearSolution { u, m, states })
}

/// Assembles the separable source terms of the second-order system from
/// two first-order solutions and a quadratic coefficient field, then
/// solves with zero terminal and initial data.
///
/// All spatial derivatives are taken on the closed-form eigenfunctions,
/// never on the grid, so the sources carry no stencil error.
pub fn solve_second_order(
    c: f64,
    f2: &[f64],
    first_a: &FirstOrderSolution,
    first_b: &FirstOrderSolution,
    time: &TimeGrid,
    basis: &SpectralBasis,
    refine: usize,
) -> Result<LinearSolution> {
    let grid = basis.grid();
    if f2.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: f2.len() });
    }
    let terms = second_order_sources(f2, first_a, first_b, basis);
    solve_linear_response(c, &terms, time, basis, refine)
}

/// The four separable sources per excited mode pair of the second-order
/// system:
///
/// - value row: `F₂ m̄_a m̄_b · μ_a μ_b` and `-m̄_a' m̄_b' · ν_a ν_b`
/// - density row: `(m̄_a m̄_b')' · μ_a ν_b` and `(m̄_b m̄_a')' · μ_b ν_a`
pub fn second_order_sources(
    f2: &[f64],
    first_a: &FirstOrderSolution,
    first_b: &FirstOrderSolution,
    basis: &SpectralBasis,
) -> Vec<SourceTerm> {
    let grid = basis.grid();
    let n = grid.len();
    let mut terms = Vec::new();
    for ma in first_a.modes.iter().filter(|fm| !fm.is_zero()) {
        for mb in first_b.modes.iter().filter(|fm| !fm.is_zero()) {
            let shape_a = basis.values(ma.index).to_vec();
            let shape_b = basis.values(mb.index).to_vec();
            let da = sample_cosine_derivative(grid, ma.index);
            let db = sample_cosine_derivative(grid, mb.index);
            let (beta_a, beta_b) = (ma.beta, mb.beta);

            let mut prof_f2 = vec![0.0; n];
            let mut prof_grad = vec![0.0; n];
            let mut prof_div_ab = vec![0.0; n];
            let mut prof_div_ba = vec![0.0; n];
            for j in 0..n {
                let ab = shape_a[j] * shape_b[j];
                let dd = da[j] * db[j];
                prof_f2[j] = f2[j] * ab;
                prof_grad[j] = -dd;
                // d/dx (m̄_a m̄_b') = m̄_a' m̄_b' - β_b m̄_a m̄_b
                prof_div_ab[j] = dd - beta_b * ab;
                prof_div_ba[j] = dd - beta_a * ab;
            }

            let (a1, b1) = (*ma, *mb);
            terms.push(SourceTerm {
                row: SourceRow::Value,
                profile: prof_f2,
                time_factor: Box::new(move |t| a1.mu(t) * b1.mu(t)),
            });
            let (a2, b2) = (*ma, *mb);
            terms.push(SourceTerm {
                row: SourceRow::Value,
                profile: prof_grad,
                time_factor: Box::new(move |t| a2.nu(t) * b2.nu(t)),
            });
            let (a3, b3) = (*ma, *mb);
            terms.push(SourceTerm {
                row: SourceRow::Density,
                profile: prof_div_ab,
                time_factor: Box::new(move |t| a3.mu(t) * b3.nu(t)),
            });
            let (a4, b4) = (*ma, *mb);
            terms.push(SourceTerm {
                row: SourceRow::Density,
                profile: prof_div_ba,
                time_factor: Box::new(move |t| b4.mu(t) * a4.nu(t)),
            });
        }
    }
    terms
}

/// Propagates the backward (adjoint) system from a full terminal pair
/// `(v(·,T), ρ(·,T))`, splitting each mode into its two characteristic
/// branches so both are evaluated with controlled exponents.
pub fn solve_adjoint(
    c: f64,
    terminal_v: &[f64],
    terminal_rho: &[f64],
    time: &TimeGrid,
    basis: &SpectralBasis,
) -> Result<LinearSolution> {
    let grid = basis.grid();
    if terminal_v.len() != grid.len() || terminal_rho.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: terminal_v.len() });
    }
    let mut pv = basis.project(terminal_v);
    let mut pr = basis.project(terminal_rho);
    let horizon = time.horizon();

    // Backward propagation amplifies mode i by e^{λ_i T}, so projection
    // roundoff on modes absent from the data would swamp the result.
    // Coefficients below roundoff relative to the data are treated as zero.
    let scale = terminal_v
        .iter()
        .chain(terminal_rho)
        .fold(0.0f64, |s, v| s.max(v.abs()));
    let floor = 1e-12 * scale;
    for (p, r) in pv.iter_mut().zip(pr.iter_mut()) {
        if p.abs().max(r.abs()) <= floor {
            *p = 0.0;
            *r = 0.0;
        }
    }

    let mut u = SpaceTimeField::zeros(time, grid);
    let mut m = SpaceTimeField::zeros(time, grid);
    let mut states = Vec::with_capacity(basis.count());
    for i in 0..basis.count() {
        let beta = basis.eigenvalue(i);
        let (p_t, r_t) = (pv[i], pr[i]);
        let times = time.times();
        let (mut nu, mut mu) = (vec![0.0; time.nodes()], vec![0.0; time.nodes()]);
        if p_t == 0.0 && r_t == 0.0 {
            states.push(ModalState { index: i, nu, mu });
            continue;
        }
        if beta == 0.0 {
            // backward constant mode: ρ constant, v(t) = v(T) - c ρ (T - t)
            for (n, &t) in times.iter().enumerate() {
                nu[n] = p_t - c * r_t * (horizon - t);
                mu[n] = r_t;
            }
        } else {
            let lambda = coupling_rate(beta, c);
            if lambda * horizon > 700.0 {
                return Err(Error::ProbeOverflow(lambda * horizon));
            }
            // x' = B x with B = -A; branches of B for ±λ are the A-branches swapped
            let bl = beta / lambda;
            let cl = c / lambda;
            // P±(A) projections of the terminal pair
            let minus = (
                0.5 * ((1.0 - bl) * p_t + cl * r_t),
                0.5 * (bl * p_t + (1.0 + bl) * r_t),
            );
            let plus = (
                0.5 * ((1.0 + bl) * p_t - cl * r_t),
                0.5 * (-bl * p_t + (1.0 - bl) * r_t),
            );
            // B = -A: the A-minus branch evolves as e^{+λ} under B, so going
            // backward from T it decays as e^{-λ(T-t)} ... and vice versa:
            // x(t) = e^{A(T-t)} x(T) = e^{λ(T-t)} P₊x(T) + e^{-λ(T-t)} P₋x(T)
            for (n, &t) in times.iter().enumerate() {
                let grow = (lambda * (horizon - t)).exp();
                let decaying = (-lambda * (horizon - t)).exp();
                nu[n] = grow * plus.0 + decaying * minus.0;
                mu[n] = grow * plus.1 + decaying * minus.1;
            }
        }
        for n in 0..time.nodes() {
            if nu[n] != 0.0 || mu[n] != 0.0 {
                let shape = basis.values(i);
                let us = u.slice_mut(n);
                for (j, s) in shape.iter().enumerate() {
                    us[j] += nu[n] * s;
                }
                let msl = m.slice_mut(n);
                for (j, s) in shape.iter().enumerate() {
                    msl[j] += mu[n] * s;
                }
            }
        }
        states.push(ModalState { index: i, nu, mu });
    }
    Ok(LinearSolution { u, m, states })
}
