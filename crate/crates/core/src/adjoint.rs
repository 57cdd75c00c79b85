//! The adjoint (dual) problem and its solver.
//!
//! The QoI error representation weights residuals by the solution φ of
//!
//! ```text
//!     -φ'(t) = J(t)ᵀ φ(t) + ψ(t),    φ(T) = ψ_T,
//! ```
//!
//! where `J(t) = ∂f/∂y` evaluated along the computed trajectory. This is a
//! linear ODE marching backwards from `T`. Substituting `s = T - t` turns
//! it into an ordinary forward problem, which the existing SDC machinery
//! solves; the reconstruction is then mirrored back to original time.

use crate::galerkin::{reconstruct, select_order, CgFunction};
use crate::mesh::build_mesh;
use crate::problems::{OdeProblem, Qoi};
use crate::sdc::{solve, SdcMode};
use crate::{Error, Result};
use std::sync::Arc;

/// How the adjoint solve is discretized, relative to the forward solve.
#[derive(Debug, Clone)]
pub struct AdjointConfig {
    /// Outer-interval multiplier: the adjoint mesh has `refinement * N`
    /// intervals. Must be at least 1.
    pub refinement: usize,
    /// Subinterval count for the adjoint mesh; `None` mirrors the forward
    /// mesh.
    pub subintervals: Option<usize>,
    /// Sweep count for the adjoint solve; `None` mirrors the forward solve.
    pub iterations: Option<usize>,
    /// Solver mode. Implicit by default: the adjoint of a stiff problem is
    /// stiff, and since the adjoint is linear each Newton solve is a single
    /// linear solve either way.
    pub mode: SdcMode,
}

impl Default for AdjointConfig {
    fn default() -> Self {
        AdjointConfig {
            refinement: 2,
            subintervals: None,
            iterations: None,
            mode: SdcMode::Implicit,
        }
    }
}

/// The adjoint system linearized about the computed trajectory `y`,
/// expressed in reversed time `s = T - t` so it can be solved forward:
///
/// ```text
///     χ'(s) = J(T - s)ᵀ χ(s) + ψ(T - s),    χ(0) = ψ_T,
/// ```
///
/// with `J` evaluated at `(y(T - s), T - s)`. Solving this on `[0, T]` and
/// reversing gives φ. The Jacobian transpose preserves bandwidth, so the
/// problem inherits the forward structure.
pub fn build_adjoint(problem: &OdeProblem, qoi: &Qoi, y: &CgFunction) -> Result<OdeProblem> {
    let dim = problem.dim;
    if qoi.psi_terminal.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "terminal weight has length {}, problem dimension is {dim}",
            qoi.psi_terminal.len()
        )));
    }
    if y.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "trajectory dimension {} does not match problem dimension {dim}",
            y.dim()
        )));
    }
    let t_final = problem.t_final;
    if (y.mesh().t_final - t_final).abs() > 1e-12 * t_final {
        return Err(Error::InvalidArgument(
            "trajectory and problem disagree on the final time".to_string(),
        ));
    }

    let jac = problem.jacobian_fn();
    let psi = qoi.psi_fn();
    let psi_is_zero = qoi.psi_is_zero;
    let traj = Arc::new(y.clone());

    let transposed_at = {
        let traj = traj.clone();
        let jac = jac.clone();
        move |s: f64| -> Vec<Vec<f64>> {
            let t = (t_final - s).clamp(0.0, t_final);
            let y_t = traj.eval(t).expect("t clamped into the trajectory domain");
            let j = jac(&y_t, t);
            let mut jt = vec![vec![0.0; j.len()]; j.len()];
            for (r, row) in j.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    jt[c][r] = v;
                }
            }
            jt
        }
    };

    let rhs_transpose = transposed_at.clone();
    let rhs = Arc::new(move |chi: &[f64], s: f64| -> Vec<f64> {
        let jt = rhs_transpose(s);
        let mut out = vec![0.0; chi.len()];
        for (r, row) in jt.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                out[r] += v * chi[c];
            }
        }
        if !psi_is_zero {
            let t = (t_final - s).clamp(0.0, t_final);
            let w = psi(t);
            for (o, &wi) in out.iter_mut().zip(&w) {
                *o += wi;
            }
        }
        out
    });
    let jacobian = Arc::new(move |_: &[f64], s: f64| transposed_at(s));

    Ok(OdeProblem::new(
        format!("{}-adjoint", problem.label),
        qoi.psi_terminal.clone(),
        t_final,
        rhs,
        jacobian,
    )?
    .with_structure(problem.structure))
}

/// Solves the adjoint problem linearized at `y` and returns φ in original
/// time.
///
/// The adjoint mesh has `cfg.refinement` times as many outer intervals as
/// the forward mesh; subintervals and sweeps default to the forward values
/// (`forward_iterations` must be passed in because the reconstruction alone
/// does not record how many sweeps produced it). The reconstruction degree
/// is chosen by [`select_order`] from the adjoint step size.
pub fn solve_adjoint(
    problem: &OdeProblem,
    qoi: &Qoi,
    y: &CgFunction,
    forward_iterations: usize,
    cfg: &AdjointConfig,
) -> Result<CgFunction> {
    if cfg.refinement < 1 {
        return Err(Error::InvalidArgument(
            "adjoint refinement factor must be at least 1".to_string(),
        ));
    }
    let n_adj = cfg.refinement * y.mesh().interval_count();
    let m_adj = cfg
        .subintervals
        .unwrap_or_else(|| y.mesh().subinterval_count());
    let k_adj = cfg.iterations.unwrap_or(forward_iterations);

    let adjoint_problem = build_adjoint(problem, qoi, y)?;
    let mesh = build_mesh(problem.t_final, n_adj, m_adj)?;
    let solution = solve(&adjoint_problem, &mesh, k_adj, cfg.mode)?;
    let q_adj = select_order(problem.t_final / n_adj as f64, m_adj, k_adj)?;
    let (chi, _) = reconstruct(&solution, q_adj)?;
    Ok(chi.reverse())
}

/// The vector field of `y(T - s)`: if `y' = f(y, t)`, then `z(s) = y(T - s)`
/// satisfies `z' = -f(z, T - s)`. `terminal_state` becomes the initial
/// value of the reversed problem (the caller supplies `y(T)` when known).
pub fn time_reversed(problem: &OdeProblem, terminal_state: Vec<f64>) -> Result<OdeProblem> {
    let t_final = problem.t_final;
    let rhs = problem.rhs_fn();
    let jac = problem.jacobian_fn();
    let reversed_rhs = Arc::new(move |y: &[f64], s: f64| -> Vec<f64> {
        let mut f = rhs(y, t_final - s);
        for v in f.iter_mut() {
            *v = -*v;
        }
        f
    });
    let reversed_jac = Arc::new(move |y: &[f64], s: f64| -> Vec<Vec<f64>> {
        let mut j = jac(y, t_final - s);
        for row in j.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        j
    });
    Ok(OdeProblem::new(
        format!("{}-reversed", problem.label),
        terminal_state,
        t_final,
        reversed_rhs,
        reversed_jac,
    )?
    .with_structure(problem.structure))
}
