//! Central tolerances used by the library defaults, the verification suite,
//! and the CLI. Each threshold is pinned here with its rationale so no
//! check carries an ad-hoc magic number.

/// Discrete orthonormality and zero-mean defects of the sampled basis.
///
/// Trapezoid sums of cosine products below the Nyquist limit are exact,
/// so only accumulated roundoff remains.
pub const BASIS_ORTHONORMALITY: f64 = 1e-10;

/// Algebraic identities between a probe's rate constants.
///
/// Evaluated with the cancellation-free form of `k = β - λ`, the identity
/// `k + (c + k) β / λ` is a few ulps of quantities of order one.
pub const PROBE_ALGEBRA: f64 = 1e-12;

/// Modal (time-analytic) residual of a constructed probe.
///
/// The residual reduces to scalar algebra among the rate constants, so it
/// sits at roundoff; 1e-10 leaves four orders of headroom.
pub const PROBE_TIME_RESIDUAL: f64 = 1e-10;

/// Terminal-condition residual of the combined probe family, which is
/// enforced exactly by a 2x2 linear solve.
pub const PROBE_TERMINAL_RESIDUAL: f64 = 1e-12;

/// Sup-norm distance of the stationary solve from the constant pair.
///
/// The sweeps reduce to tridiagonal solves with constant solutions;
/// roundoff accumulates over the time steps but stays far below this.
pub const STATIONARY_SUP: f64 = 1e-10;

/// Per-time-node mass defect of a converged forward solve.
///
/// The flux-form divergence and reflected Laplacian conserve the trapezoid
/// mass identically, so the observed defect is pure roundoff; 1e-8 is the
/// contract exposed to callers.
pub const MASS_CONSERVATION: f64 = 1e-8;

/// Pointwise density floor monitored (not enforced) on small-data solves.
pub const POSITIVITY_FLOOR: f64 = -1e-8;

/// Default Picard stopping threshold on the sup-norm iterate change.
pub const PICARD_TOL: f64 = 1e-10;

/// Tightened Picard threshold for derivative stencils, keeping the
/// fixed-point noise below the stencil truncation at the smallest step.
pub const PICARD_TOL_STENCIL: f64 = 1e-12;

/// Zero-mean defect of perturbation directions and of extracted
/// derivative slices of the density.
pub const ZERO_MEAN: f64 = 1e-8;

/// Residual of the first-order modal solution plugged back into its
/// system at collocation points, time-analytic part.
pub const MODAL_RESIDUAL: f64 = 1e-10;

/// Space-time quadrature tolerance for the pairing and the two
/// integration-by-parts identities; scales as O(h^2 + dt^2) and the
/// default verification grids land two orders below it.
pub const PAIRING: f64 = 1e-6;

/// Pairing magnitude that a broken zero-data hypothesis must exceed,
/// demonstrating the check is not vacuous.
pub const MUTATION_FLOOR: f64 = 1e-3;

/// Relative error of the linear coefficient recovered from noiseless
/// synthetic data; the scalar root solve converges to ~1e-13.
pub const C1_RECOVERY_REL: f64 = 1e-6;

/// Relative coefficient error of the quadratic-coefficient stage under
/// its own forward model.
pub const F2_RECOVERY_REL: f64 = 1e-3;

/// Relative coefficient error of the cubic stage; looser because its
/// observations come from third-order difference stencils.
pub const F3_RECOVERY_REL: f64 = 5e-3;

/// Allowed relative degradation of the recovered linear coefficient under
/// 1e-4 relative Gaussian measurement noise (median over seeds).
pub const NOISE_DEGRADATION_REL: f64 = 1e-3;

/// Half-width of the accepted band around the nominal convergence slope
/// in refinement and stencil studies.
pub const SLOPE_BAND: f64 = 0.2;

/// Condition-number ceiling for the reconstruction sensitivity matrix.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Tikhonov floor added to the normal-equation diagonal.
pub const TIKHONOV_FLOOR: f64 = 1e-12;

/// Default root bracket for the linear-coefficient search.
pub const C1_BRACKET: (f64, f64) = (1e-3, 50.0);

/// Relative disagreement allowed between the coefficient recovered from
/// the value-function record and from the density record.
pub const CROSS_VALIDATION_REL: f64 = 1e-6;

/// Relative least-squares residual above which a truncated mode set is
/// flagged as unable to explain the data (stages fed by modal solves).
pub const TRUNCATION_RESIDUAL: f64 = 1e-4;

/// Same flag for the stencil-fed cubic stage, whose observations carry
/// an amplitude-truncation noise floor around 1e-4 of the signal.
pub const TRUNCATION_RESIDUAL_STENCIL: f64 = 1e-2;

/// Mean defect above which a perturbation direction is rejected.
pub const PERTURBATION_MEAN: f64 = 1e-10;

/// Declared small-data radius for initial densities, `sup |m0 - 1|`.
pub const SMALL_DATA_RADIUS: f64 = 0.05;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_sane() {
        assert!(PROBE_ALGEBRA < PROBE_TIME_RESIDUAL);
        assert!(PROBE_TIME_RESIDUAL <= STATIONARY_SUP);
        assert!(STATIONARY_SUP < MASS_CONSERVATION);
        assert!(MASS_CONSERVATION < PAIRING);
        assert!(PAIRING < MUTATION_FLOOR);
        assert!(PICARD_TOL_STENCIL < PICARD_TOL);
        assert!(C1_RECOVERY_REL < F2_RECOVERY_REL);
        assert!(F2_RECOVERY_REL < F3_RECOVERY_REL);
    }

    #[test]
    fn bracket_is_positive_and_wide() {
        assert!(C1_BRACKET.0 > 0.0);
        assert!(C1_BRACKET.1 / C1_BRACKET.0 > 1e3);
    }
}
