//! Spectral deferred correction (SDC) time integration with adjoint-based
//! a posteriori error estimation for a quantity of interest (QoI).
//!
//! The crate solves initial value problems
//!
//! ```text
//!     y'(t) = f(y, t),   y(0) = y0,   t in [0, T]
//! ```
//!
//! with an SDC iteration on a two-level mesh (uniform outer intervals, each
//! carrying Gauss-Lobatto subnodes), and estimates the error in a QoI
//!
//! ```text
//!     Q(y) = < y, psi >_[0,T]  +  y(T) . psi_T
//! ```
//!
//! by solving the adjoint problem and splitting the a posteriori estimate
//! into three parts:
//!
//! * `E_D` — discretization error of the underlying collocation scheme,
//! * `E_M` — interpolation (quadrature-in-time) error of the spectral
//!   integral operator,
//! * `E_K` — iteration error from truncating the SDC sweeps at `K`.
//!
//! The split drives an adaptive loop ([`adapt`]) that refines whichever of
//! the time step, the number of subnodes `M`, or the sweep count `K`
//! currently dominates the estimate.
//!
//! Module map:
//!
//! * [`mesh`] — quadrature rules, Lagrange bases, and the two-level time mesh
//! * [`problems`] — the ODE/QoI containers and built-in benchmark problems
//! * [`sdc`] — the SDC sweep, implicit substep, and driver
//! * [`galerkin`] — continuous Galerkin reconstruction of SDC iterates
//! * [`adjoint`] — adjoint problem assembly and solve (time-reversed SDC)
//! * [`estimator`] — QoI evaluation, total estimate, and the E_D/E_M/E_K split
//! * [`adapt`] — error-balancing parameter adaptation
//! * [`oracle`] — analytic/reference solutions used for validation
//! * [`cli`] — the `sdc-adjoint` command line front end

pub mod adapt;
pub mod adjoint;
pub mod cli;
pub mod estimator;
pub mod galerkin;
mod linalg;
pub mod mesh;
pub mod oracle;
pub mod problems;
pub mod sdc;

use std::fmt;

/// Errors produced by the solver and estimator pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument was out of range or inconsistent.
    InvalidArgument(String),
    /// A nonlinear (Newton) iteration failed to reach its tolerance.
    IterationFailure {
        /// Time at which the implicit substep was being solved.
        time: f64,
        /// Residual norm when the iteration gave up.
        residual: f64,
    },
    /// A linear solve or other numerical kernel broke down.
    NumericalFailure(String),
    /// An effectivity ratio was requested against a vanishing estimate.
    DegenerateRatio {
        /// The estimate whose magnitude was too small to divide by.
        estimate: f64,
    },
    /// A reference solve did not pass its self-consistency check.
    ReferenceUnreliable {
        /// Difference between the two reference refinement levels.
        uncertainty: f64,
        /// The error magnitude the reference was supposed to resolve.
        measured: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::IterationFailure { time, residual } => write!(
                f,
                "implicit substep at t = {time} did not converge (residual {residual:.3e})"
            ),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::DegenerateRatio { estimate } => write!(
                f,
                "effectivity undefined: estimate magnitude {estimate:.3e} is numerically zero"
            ),
            Error::ReferenceUnreliable {
                uncertainty,
                measured,
            } => write!(
                f,
                "reference solve unreliable: refinement gap {uncertainty:.3e} \
                 is not small against measured error {measured:.3e}"
            ),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
