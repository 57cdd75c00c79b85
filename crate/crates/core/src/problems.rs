//! ODE problem and quantity-of-interest containers, plus the built-in
//! benchmark problems used throughout the tests and the CLI.
//!
//! A problem is `y' = f(y, t)` on `[0, t_final]` with initial state `y0`.
//! The quantity of interest pairs an integrand weight `psi(t)` with a
//! terminal weight `psi_T`:
//!
//! ```text
//!     Q(y) = integral_0^T  y(t) . psi(t) dt  +  y(T) . psi_T
//! ```
//!
//! Closures are stored behind `Arc` so problems can be cloned cheaply and
//! shared across sweep worker threads.

use std::sync::Arc;

use crate::{Error, Result};

/// Right-hand side `f(y, t)`.
pub type RhsFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
/// Jacobian `df/dy (y, t)`, row-major: `jac[i][j] = d f_i / d y_j`.
pub type JacFn = Arc<dyn Fn(&[f64], f64) -> Vec<Vec<f64>> + Send + Sync>;
/// Exact solution `y(t)` when one is known.
pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
/// QoI integrand weight `psi(t)`.
pub type WeightFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Sparsity structure of the Jacobian, used to pick the linear solver in
/// implicit substeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// No exploitable structure; dense LU.
    Dense,
    /// Banded with the given half-bandwidth. Only bandwidth 1 (tridiagonal)
    /// currently routes to a specialized solver; wider bands fall back to
    /// dense LU.
    Banded(usize),
}

/// An initial value problem `y' = f(y, t)`, `y(0) = y0`, on `[0, t_final]`.
#[derive(Clone)]
pub struct OdeProblem {
    /// State dimension `d`.
    pub dim: usize,
    /// Initial state, length `d`.
    pub y0: Vec<f64>,
    /// Final time `T`.
    pub t_final: f64,
    /// Jacobian sparsity.
    pub structure: Structure,
    /// Short human-readable label used in reports.
    pub label: String,
    rhs: RhsFn,
    jacobian: JacFn,
    exact: Option<ExactFn>,
}

impl std::fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeProblem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("t_final", &self.t_final)
            .field("structure", &self.structure)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl OdeProblem {
    /// Creates a problem from a right-hand side and an analytic Jacobian.
    pub fn new(
        label: impl Into<String>,
        y0: Vec<f64>,
        t_final: f64,
        rhs: RhsFn,
        jacobian: JacFn,
    ) -> Result<Self> {
        if y0.is_empty() {
            return Err(Error::InvalidArgument(
                "initial state must have at least one component".to_string(),
            ));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive and finite, got {t_final}"
            )));
        }
        Ok(OdeProblem {
            dim: y0.len(),
            y0,
            t_final,
            structure: Structure::Dense,
            label: label.into(),
            rhs,
            jacobian,
            exact: None,
        })
    }

    /// Creates a problem whose Jacobian is approximated by forward
    /// differences of the right-hand side (step `sqrt(eps) * max(1, |y_i|)`).
    pub fn new_with_fd_jacobian(
        label: impl Into<String>,
        y0: Vec<f64>,
        t_final: f64,
        rhs: RhsFn,
    ) -> Result<Self> {
        let rhs_for_jac = rhs.clone();
        let jacobian: JacFn = Arc::new(move |y, t| fd_jacobian(|y, t| rhs_for_jac(y, t), y, t));
        Self::new(label, y0, t_final, rhs, jacobian)
    }

    /// Declares the Jacobian sparsity structure.
    pub fn with_structure(mut self, structure: Structure) -> Self {
        self.structure = structure;
        self
    }

    /// Attaches a known exact solution.
    pub fn with_exact(mut self, exact: ExactFn) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Evaluates `f(y, t)`.
    pub fn rhs(&self, y: &[f64], t: f64) -> Vec<f64> {
        (self.rhs)(y, t)
    }

    /// Evaluates the Jacobian `df/dy` at `(y, t)`.
    pub fn jacobian(&self, y: &[f64], t: f64) -> Vec<Vec<f64>> {
        (self.jacobian)(y, t)
    }

    /// The exact solution at `t`, when known.
    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|f| f(t))
    }

    /// Whether an analytic solution is attached.
    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Shares the right-hand side closure (used when deriving the adjoint).
    pub(crate) fn rhs_fn(&self) -> RhsFn {
        self.rhs.clone()
    }

    /// Shares the Jacobian closure (used when deriving the adjoint).
    pub(crate) fn jacobian_fn(&self) -> JacFn {
        self.jacobian.clone()
    }
}

/// Quantity of interest: integrand weight plus terminal weight.
#[derive(Clone)]
pub struct Qoi {
    psi: WeightFn,
    /// Terminal weight, length `d`.
    pub psi_terminal: Vec<f64>,
    /// Whether `psi` is identically zero (lets integrators skip work).
    pub psi_is_zero: bool,
}

impl std::fmt::Debug for Qoi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Qoi")
            .field("psi_terminal", &self.psi_terminal)
            .field("psi_is_zero", &self.psi_is_zero)
            .finish()
    }
}

impl Qoi {
    /// QoI with a time-dependent integrand weight.
    pub fn new(psi: WeightFn, psi_terminal: Vec<f64>) -> Self {
        Qoi {
            psi,
            psi_terminal,
            psi_is_zero: false,
        }
    }

    /// QoI with a constant integrand weight.
    pub fn constant(psi: Vec<f64>, psi_terminal: Vec<f64>) -> Self {
        let zero = psi.iter().all(|&x| x == 0.0);
        Qoi {
            psi: Arc::new(move |_| psi.clone()),
            psi_terminal,
            psi_is_zero: zero,
        }
    }

    /// Terminal-only QoI (`psi = 0`).
    pub fn terminal(psi_terminal: Vec<f64>) -> Self {
        let d = psi_terminal.len();
        Qoi {
            psi: Arc::new(move |_| vec![0.0; d]),
            psi_terminal,
            psi_is_zero: true,
        }
    }

    /// Evaluates the integrand weight at `t`.
    pub fn psi(&self, t: f64) -> Vec<f64> {
        (self.psi)(t)
    }

    /// Shares the weight closure (used when deriving the adjoint).
    pub(crate) fn psi_fn(&self) -> WeightFn {
        self.psi.clone()
    }
}

/// Forward-difference Jacobian with step `sqrt(eps) * max(1, |y_i|)`.
pub fn fd_jacobian(rhs: impl Fn(&[f64], f64) -> Vec<f64>, y: &[f64], t: f64) -> Vec<Vec<f64>> {
    let d = y.len();
    let base = rhs(y, t);
    let mut jac = vec![vec![0.0; d]; d];
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut work = y.to_vec();
    for j in 0..d {
        let h = sqrt_eps * y[j].abs().max(1.0);
        work[j] = y[j] + h;
        let bumped = rhs(&work, t);
        work[j] = y[j];
        for i in 0..d {
            jac[i][j] = (bumped[i] - base[i]) / h;
        }
    }
    jac
}

/// Damped, periodically forced linear oscillator written as a first-order
/// system in (position, velocity):
///
/// ```text
///     x'' + 2 x' + 2 x = 20 cos(10 t),   x(0) = 0,  x'(0) = 1,  T = 5.
/// ```
///
/// The forcing period (~0.63) is deliberately short so that coarse meshes
/// underresolve it. QoI: time integral of `x + x'` plus terminal position.
pub fn harmonic_oscillator() -> (OdeProblem, Qoi) {
    let rhs: RhsFn = Arc::new(|y, t| vec![y[1], 20.0 * (10.0 * t).cos() - 2.0 * y[0] - 2.0 * y[1]]);
    let jacobian: JacFn = Arc::new(|_, _| vec![vec![0.0, 1.0], vec![-2.0, -2.0]]);
    let problem = OdeProblem::new("harmonic", vec![0.0, 1.0], 5.0, rhs, jacobian)
        .expect("static problem definition")
        .with_exact(Arc::new(crate::oracle::harmonic_exact));
    let qoi = Qoi::constant(vec![1.0, 1.0], vec![1.0, 0.0]);
    (problem, qoi)
}

/// Coefficient matrix of the Vinograd system at time `t` (the Jacobian,
/// since the system is linear).
fn vinograd_matrix(t: f64) -> Vec<Vec<f64>> {
    let c = (6.0 * t).cos();
    let s = (6.0 * t).sin();
    let s12 = (12.0 * t).sin();
    vec![
        vec![
            -(1.0 + 9.0 * c * c - 6.0 * s12),
            -(-12.0 * c * c - 4.5 * s12),
        ],
        vec![
            -(12.0 * s * s - 4.5 * s12),
            -(1.0 + 9.0 * s * s + 6.0 * s12),
        ],
    ]
}

/// Vinograd's example: a linear system with rapidly rotating eigenvectors,
/// the classic demonstration that frozen-time eigenvalues do not decide
/// stability. `y0 = [-1, 3]`, `T = 2`. QoI weights are all ones.
pub fn vinograd() -> (OdeProblem, Qoi) {
    let rhs: RhsFn = Arc::new(|y, t| {
        let a = vinograd_matrix(t);
        vec![
            a[0][0] * y[0] + a[0][1] * y[1],
            a[1][0] * y[0] + a[1][1] * y[1],
        ]
    });
    let jacobian: JacFn = Arc::new(|_, t| vinograd_matrix(t));
    let problem = OdeProblem::new("vinograd", vec![-1.0, 3.0], 2.0, rhs, jacobian)
        .expect("static problem definition");
    let qoi = Qoi::constant(vec![1.0, 1.0], vec![1.0, 1.0]);
    (problem, qoi)
}

fn two_body_rhs(y: &[f64], _t: f64) -> Vec<f64> {
    let r2 = y[0] * y[0] + y[1] * y[1];
    let r3 = r2 * r2.sqrt();
    vec![y[2], y[3], -y[0] / r3, -y[1] / r3]
}

fn two_body_jacobian(y: &[f64], _t: f64) -> Vec<Vec<f64>> {
    let r2 = y[0] * y[0] + y[1] * y[1];
    let r = r2.sqrt();
    let r5 = r2 * r2 * r;
    vec![
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![
            (2.0 * y[0] * y[0] - y[1] * y[1]) / r5,
            3.0 * y[0] * y[1] / r5,
            0.0,
            0.0,
        ],
        vec![
            3.0 * y[0] * y[1] / r5,
            (2.0 * y[1] * y[1] - y[0] * y[0]) / r5,
            0.0,
            0.0,
        ],
    ]
}

/// Planar Kepler problem in Cartesian coordinates, eccentricity 0.6:
/// state `[x, y, vx, vy]`, `y0 = [0.4, 0, 0, 2]`, `T = 2` by default.
/// QoI: integral and terminal value of the position components.
pub fn two_body() -> (OdeProblem, Qoi) {
    let rhs: RhsFn = Arc::new(two_body_rhs);
    let jacobian: JacFn = Arc::new(two_body_jacobian);
    let problem = OdeProblem::new("two_body", vec![0.4, 0.0, 0.0, 2.0], 2.0, rhs, jacobian)
        .expect("static problem definition")
        .with_exact(Arc::new(crate::oracle::two_body_exact));
    let qoi = Qoi::constant(vec![1.0, 1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0, 0.0]);
    (problem, qoi)
}

/// Two-body problem over `T = 8` with a Gaussian-windowed position weight
/// centered at `t = 2`; exercises high-order reconstruction on long
/// integrations.
pub fn two_body_gaussian() -> (OdeProblem, Qoi) {
    let (mut problem, _) = two_body();
    problem.t_final = 8.0;
    let psi: WeightFn = Arc::new(|t| {
        let w = (-(t - 2.0) * (t - 2.0)).exp();
        vec![w, w, 0.0, 0.0]
    });
    let qoi = Qoi::new(psi, vec![1.0, 1.0, 0.0, 0.0]);
    (problem, qoi)
}

/// Method-of-lines heat equation on `(0, 1)` with homogeneous Dirichlet
/// boundaries and forcing `sin(pi x) cos(2 pi t)`:
///
/// ```text
///     y_i' = (y_{i-1} - 2 y_i + y_{i+1}) / h^2 + sin(pi x_i) cos(2 pi t)
/// ```
///
/// with `d` interior nodes, `h = 1/(d+1)`, `x_i = i h`, `y(0) = 0`, `T = 2`.
/// The Jacobian is constant tridiagonal, so the problem is declared
/// `Banded(1)` and implicit substeps use the Thomas solver.
///
/// The returned QoI takes the *average of the terminal temperature profile*
/// (`psi_T = 1/d` per component, `psi = 0`). That choice is a configuration
/// default of this crate, not part of the PDE; override it by constructing
/// a different [`Qoi`] if the application calls for one.
pub fn heat_equation(d: usize) -> Result<(OdeProblem, Qoi)> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "heat equation needs at least one interior node".to_string(),
        ));
    }
    let h = 1.0 / (d as f64 + 1.0);
    let inv_h2 = 1.0 / (h * h);
    let profile: Vec<f64> = (1..=d)
        .map(|i| (std::f64::consts::PI * i as f64 * h).sin())
        .collect();

    let profile_for_rhs = profile.clone();
    let rhs: RhsFn = Arc::new(move |y: &[f64], t: f64| {
        let forcing = (2.0 * std::f64::consts::PI * t).cos();
        let d = y.len();
        let mut out = vec![0.0; d];
        for i in 0..d {
            let left = if i > 0 { y[i - 1] } else { 0.0 };
            let right = if i + 1 < d { y[i + 1] } else { 0.0 };
            out[i] = inv_h2 * (left - 2.0 * y[i] + right) + profile_for_rhs[i] * forcing;
        }
        out
    });
    let jacobian: JacFn = Arc::new(move |y: &[f64], _| {
        let d = y.len();
        let mut jac = vec![vec![0.0; d]; d];
        for i in 0..d {
            jac[i][i] = -2.0 * inv_h2;
            if i > 0 {
                jac[i][i - 1] = inv_h2;
            }
            if i + 1 < d {
                jac[i][i + 1] = inv_h2;
            }
        }
        jac
    });
    let problem = OdeProblem::new("heat", vec![0.0; d], 2.0, rhs, jacobian)?
        .with_structure(Structure::Banded(1));
    let qoi = Qoi::terminal(vec![1.0 / d as f64; d]);
    Ok((problem, qoi))
}
