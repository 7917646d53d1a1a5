//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Group element does not lie on the requested one-parameter subgroup.
    #[error("element is not on the one-parameter subgroup (residual {residual:.3e} > tol {tol:.3e})")]
    NotInSubgroup { residual: f64, tol: f64 },

    /// The subgroup generator is parabolic (det = 0); the logarithm branch is undefined.
    #[error("parabolic generator: det of the algebra element is zero")]
    ParabolicGenerator,

    /// Argument outside the admissible range.
    #[error("{what} = {value} out of range: {need}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        need: &'static str,
    },

    /// The reduced period diverges on the separatrix level.
    #[error("reduced period diverges at the separatrix C = 1")]
    SeparatrixDivergence,

    /// Quadrature and ODE period detection disagree beyond the allowed budget.
    #[error("period cross-check failed: quadrature {quadrature}, ode {ode}, allowed {allowed:.3e}")]
    PeriodMismatch {
        quadrature: f64,
        ode: f64,
        allowed: f64,
    },

    /// Adaptive step size fell below the representable minimum.
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// Conserved quantities drifted beyond the permitted budget.
    #[error("invariant drift {drift:.3e} exceeds {allowed:.3e}")]
    InvariantDrift { drift: f64, allowed: f64 },

    /// No periodic Casimir orbit exists at this level (C = 0).
    #[error("no periodic Casimir orbit at C = 0")]
    NoPeriodicOrbit,

    /// Adjacent rotation numbers differ by >= 1/2 even after maximal grid refinement.
    #[error("rotation-number unwrap ambiguous between C = {c_lo} and C = {c_hi} (gap {gap:.3})")]
    UnwrapAmbiguity { c_lo: f64, c_hi: f64, gap: f64 },

    /// A bisection bracket collapsed without producing a sign change (tangency).
    #[error("unresolved root near C = {c}: |omega - target| = {defect:.3e} after bracket collapse")]
    UnresolvedRoot { c: f64, defect: f64 },

    /// Orbit closure residual exceeded the gate.
    #[error("closure failure: residual {residual:.3e} > {allowed:.3e}")]
    ClosureFailure { residual: f64, allowed: f64 },

    /// Momentum samples too sparse to determine a winding number.
    #[error("undersampled path: angular step {step:.3} rad >= pi/2 at sample {index}")]
    UndersampledPath { step: f64, index: usize },

    /// First and last samples of a closed path do not coincide.
    #[error("path not closed: endpoint mismatch {mismatch:.3e} > tol {tol:.3e}")]
    NotClosed { mismatch: f64, tol: f64 },

    /// Winding sum not close enough to an integer.
    #[error("winding defect {defect:.3} exceeds 0.01")]
    WindingDefect { defect: f64 },

    /// Newton iteration failed to converge.
    #[error("Newton iteration diverged ({context}, residual {residual:.3e} after {iters} steps)")]
    NewtonDivergence {
        context: &'static str,
        residual: f64,
        iters: usize,
    },

    /// The model Hamiltonian left its validity domain.
    #[error("invalid model: {what}")]
    InvalidModel { what: &'static str },

    /// Least-squares normal system too ill-conditioned to trust.
    #[error("ill-conditioned fit: condition estimate {cond:.3e} > 1e12")]
    IllConditionedFit { cond: f64 },

    /// The supplied annulus perturbation is not area-preserving.
    #[error("map is not area-preserving: max |det DF - 1| = {defect:.3e} > {allowed:.3e}")]
    NotAreaPreserving { defect: f64, allowed: f64 },

    /// Normal linearization has eigenvalue 1 and the fallback solve is singular.
    #[error("degenerate normal direction: invariant-graph linearization is singular")]
    DegenerateNormalDirection,

    /// The fixed-point indicator has constant sign on the search grid.
    #[error("no sign change on grid: g in [{g_min:.3e}, {g_max:.3e}] (coarse grid or violated hypothesis)")]
    NoSignChange { g_min: f64, g_max: f64 },

    /// The differential of the base flow became numerically singular.
    #[error("singular flow differential: smallest singular value {sigma_min:.3e}")]
    SingularDifferential { sigma_min: f64 },

    /// Run configuration rejected before any numerics ran.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code classification for the command-line front end:
    /// 2 for configuration/validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::OutOfRange { .. } => 2,
            _ => 3,
        }
    }
}
