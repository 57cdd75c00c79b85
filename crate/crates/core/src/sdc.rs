//! The spectral deferred correction (SDC) sweep and time-marching driver.
//!
//! On every outer interval the method starts from the flat iterate
//! `Y^0_{n,m} = u_n` (the incoming state) and applies `K` correction sweeps.
//! One sweep marches subnode to subnode:
//!
//! ```text
//!   explicit:  Y_{m+1} = Y_m + dt_m [f(Y_m^new) - f(Y_m^old)]     + I_m(f^old)
//!   implicit:  Y_{m+1} = Y_m + dt_m [f(Y_{m+1}^new) - f(Y_{m+1}^old)] + I_m(f^old)
//! ```
//!
//! where `I_m(f^old)` is the exact integral over subinterval `m` of the
//! degree-`M` Lagrange interpolant of the previous iterate's `f` values
//! (the Picard integral term), encoded in the spectral integration matrix.
//! Each sweep raises the convergence order by one, up to `min(K, M)`.
//!
//! The driver keeps the last two iterates (plus the right-hand-side values
//! of the third-to-last), which is exactly what the error decomposition and
//! the Galerkin reconstruction of both iterates consume.

use crate::linalg::{axpy, lu_solve, max_norm, tridiagonal_solve};
use crate::mesh::{gauss_legendre, lagrange_value, TimeMesh};
use crate::problems::{OdeProblem, Structure};
use crate::{Error, Result};

/// Newton tolerance for the implicit substep (absolute, max norm).
pub const NEWTON_TOLERANCE: f64 = 1e-12;
/// Newton iteration cap for the implicit substep.
pub const NEWTON_MAX_ITER: usize = 50;

/// Which low-order propagator the sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdcMode {
    /// Forward-Euler-type update; pairs with left-endpoint rectangle rule.
    Explicit,
    /// Backward-Euler-type update; pairs with right-endpoint rectangle rule.
    Implicit,
}

impl std::fmt::Display for SdcMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SdcMode::Explicit => write!(f, "explicit"),
            SdcMode::Implicit => write!(f, "implicit"),
        }
    }
}

/// Spectral integration matrix on a set of subnodes.
///
/// `matrix[m][j]` is the integral over `[subnodes[m], subnodes[m+1]]` of the
/// `j`-th Lagrange basis polynomial on the full subnode set, so that
/// `sum_j matrix[m][j] * f_j` integrates the degree-`M` interpolant of `f`
/// over subinterval `m`. Entries are computed with a Gauss-Legendre rule of
/// `ceil((M+2)/2)` points, exact for the degree-`M` integrands.
pub fn integration_matrix(subnodes: &[f64]) -> Result<Vec<Vec<f64>>> {
    if subnodes.len() < 2 {
        return Err(Error::InvalidArgument(
            "integration matrix needs at least two subnodes".to_string(),
        ));
    }
    if subnodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "subnodes must be strictly increasing".to_string(),
        ));
    }
    let m_sub = subnodes.len() - 1;
    let rule = gauss_legendre((m_sub + 2).div_ceil(2))?;
    let mut matrix = vec![vec![0.0; m_sub + 1]; m_sub];
    for m in 0..m_sub {
        let mid = 0.5 * (subnodes[m] + subnodes[m + 1]);
        let half = 0.5 * (subnodes[m + 1] - subnodes[m]);
        for j in 0..=m_sub {
            let mut acc = 0.0;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                acc += w * lagrange_value(subnodes, j, mid + half * x);
            }
            matrix[m][j] = half * acc;
        }
    }
    Ok(matrix)
}

/// One SDC sweep over a single outer interval.
///
/// `y_prev`/`f_prev` hold the previous iterate and its right-hand-side
/// values at all `M + 1` subnodes; `y_start` is the interval's incoming
/// state (every sweep restarts from it, keeping the global trajectory
/// continuous). Returns the new iterate and its `f` values.
pub fn sweep(
    problem: &OdeProblem,
    subnodes: &[f64],
    smat: &[Vec<f64>],
    y_prev: &[Vec<f64>],
    f_prev: &[Vec<f64>],
    y_start: &[f64],
    mode: SdcMode,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let m_sub = subnodes.len() - 1;
    if y_prev.len() != m_sub + 1 || f_prev.len() != m_sub + 1 || smat.len() != m_sub {
        return Err(Error::InvalidArgument(
            "sweep inputs disagree on subnode count".to_string(),
        ));
    }
    let dim = y_start.len();

    let mut y_new: Vec<Vec<f64>> = Vec::with_capacity(m_sub + 1);
    let mut f_new: Vec<Vec<f64>> = Vec::with_capacity(m_sub + 1);
    y_new.push(y_start.to_vec());
    f_new.push(problem.rhs(y_start, subnodes[0]));

    for m in 0..m_sub {
        let dt = subnodes[m + 1] - subnodes[m];
        // Picard integral of the previous iterate over this subinterval.
        let mut next = vec![0.0; dim];
        for (j, fj) in f_prev.iter().enumerate() {
            axpy(&mut next, smat[m][j], fj);
        }
        match mode {
            SdcMode::Explicit => {
                for c in 0..dim {
                    next[c] += y_new[m][c] + dt * (f_new[m][c] - f_prev[m][c]);
                }
                let f = problem.rhs(&next, subnodes[m + 1]);
                y_new.push(next);
                f_new.push(f);
            }
            SdcMode::Implicit => {
                for c in 0..dim {
                    next[c] += y_new[m][c] - dt * f_prev[m + 1][c];
                }
                let y = implicit_substep(problem, &next, dt, subnodes[m + 1], &y_prev[m + 1])?;
                let f = problem.rhs(&y, subnodes[m + 1]);
                y_new.push(y);
                f_new.push(f);
            }
        }
    }
    Ok((y_new, f_new))
}

/// Solves the backward-Euler-type substep `y - dt * f(y, t) = c` by Newton
/// iteration with analytic Jacobian.
///
/// The initial guess is the previous iterate's value at the same subnode,
/// which for converged sweeps is already close. Linear problems converge in
/// one Newton update. Tridiagonal Jacobians (declared `Banded(1)`) route
/// through the Thomas solver, everything else through dense LU.
pub fn implicit_substep(
    problem: &OdeProblem,
    c: &[f64],
    dt: f64,
    t: f64,
    guess: &[f64],
) -> Result<Vec<f64>> {
    let dim = c.len();
    let mut y = guess.to_vec();
    let mut residual = vec![0.0; dim];
    for iter in 0..=NEWTON_MAX_ITER {
        let f = problem.rhs(&y, t);
        for i in 0..dim {
            residual[i] = y[i] - dt * f[i] - c[i];
        }
        let norm = max_norm(&residual);
        if norm <= NEWTON_TOLERANCE {
            return Ok(y);
        }
        if iter == NEWTON_MAX_ITER || !norm.is_finite() {
            return Err(Error::IterationFailure {
                time: t,
                residual: norm,
            });
        }
        // Newton matrix I - dt * df/dy.
        let mut a = problem.jacobian(&y, t);
        for (i, row) in a.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                *entry = if i == k { 1.0 } else { 0.0 } - dt * *entry;
            }
        }
        let mut delta: Vec<f64> = residual.iter().map(|r| -r).collect();
        match problem.structure {
            Structure::Banded(1) => tridiagonal_solve(&a, &mut delta)?,
            _ => lu_solve(&mut a, &mut delta)?,
        }
        axpy(&mut y, 1.0, &delta);
    }
    unreachable!("newton loop returns or errors within the iteration cap");
}

/// SDC solution data on a mesh: the final iterate `Y^K`, the previous
/// iterate `Y^{K-1}`, and cached right-hand-side values of both (plus those
/// of `Y^{K-2}` when `K >= 2`, which the Galerkin reconstruction of the
/// previous iterate needs).
#[derive(Debug, Clone)]
pub struct SdcSolution {
    mesh: TimeMesh,
    mode: SdcMode,
    iterations: usize,
    dim: usize,
    /// `[n][m]` -> state at subnode `m` of interval `n`, final iterate.
    y_curr: Vec<Vec<Vec<f64>>>,
    y_prev: Vec<Vec<Vec<f64>>>,
    f_curr: Vec<Vec<Vec<f64>>>,
    f_prev: Vec<Vec<Vec<f64>>>,
    /// Right-hand-side values of iterate `K-2`; `None` when `K == 1`.
    f_prev2: Option<Vec<Vec<Vec<f64>>>>,
}

impl SdcSolution {
    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }
    pub fn mode(&self) -> SdcMode {
        self.mode
    }
    /// The sweep count `K`.
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Final iterate at subnode `(n, m)`.
    pub fn value(&self, n: usize, m: usize) -> &[f64] {
        &self.y_curr[n][m]
    }
    /// Iterate `K-1` at subnode `(n, m)`. For `K == 1` this is the flat
    /// initial iterate (the interval's incoming state at every subnode).
    pub fn previous_value(&self, n: usize, m: usize) -> &[f64] {
        &self.y_prev[n][m]
    }
    /// `f` evaluated on the final iterate at subnode `(n, m)`.
    pub fn rhs_value(&self, n: usize, m: usize) -> &[f64] {
        &self.f_curr[n][m]
    }
    /// `f` evaluated on iterate `K-1` at subnode `(n, m)`.
    pub fn previous_rhs_value(&self, n: usize, m: usize) -> &[f64] {
        &self.f_prev[n][m]
    }
    /// `f` evaluated on iterate `K-2`, when it exists (`K >= 2`).
    pub(crate) fn older_rhs_value(&self, n: usize, m: usize) -> Option<&[f64]> {
        self.f_prev2.as_ref().map(|f| f[n][m].as_slice())
    }
    /// State at the final time `T`.
    pub fn final_state(&self) -> &[f64] {
        let n = self.mesh.interval_count() - 1;
        let m = self.mesh.subinterval_count();
        &self.y_curr[n][m]
    }
}

/// Runs `iterations` SDC sweeps over every interval of `mesh` in sequence.
///
/// Interval `n + 1` starts from the final subnode value of interval `n`
/// (bitwise; the chain of states is exactly continuous). The initial
/// iterate on each interval is flat: the incoming state copied to every
/// subnode.
pub fn solve(
    problem: &OdeProblem,
    mesh: &TimeMesh,
    iterations: usize,
    mode: SdcMode,
) -> Result<SdcSolution> {
    if iterations == 0 {
        return Err(Error::InvalidArgument(
            "SDC needs at least one sweep".to_string(),
        ));
    }
    let n_int = mesh.interval_count();
    let m_sub = mesh.subinterval_count();

    let mut y_curr = Vec::with_capacity(n_int);
    let mut y_prev = Vec::with_capacity(n_int);
    let mut f_curr = Vec::with_capacity(n_int);
    let mut f_prev = Vec::with_capacity(n_int);
    let mut f_prev2 = Vec::with_capacity(if iterations >= 2 { n_int } else { 0 });

    let mut incoming = problem.y0.clone();
    for n in 0..n_int {
        let subnodes = &mesh.subnodes[n];
        let smat = integration_matrix(subnodes)?;

        // Iterate 0: flat in y, but f still varies with the subnode times.
        let mut y_a: Vec<Vec<f64>> = vec![incoming.clone(); m_sub + 1];
        let mut f_a: Vec<Vec<f64>> = subnodes
            .iter()
            .map(|&t| problem.rhs(&incoming, t))
            .collect();
        let mut f_older: Option<Vec<Vec<f64>>> = None;

        let (mut y_b, mut f_b) = sweep(problem, subnodes, &smat, &y_a, &f_a, &incoming, mode)?;
        for _ in 1..iterations {
            f_older = Some(f_a.clone());
            std::mem::swap(&mut y_a, &mut y_b);
            std::mem::swap(&mut f_a, &mut f_b);
            let (ny, nf) = sweep(problem, subnodes, &smat, &y_a, &f_a, &incoming, mode)?;
            y_b = ny;
            f_b = nf;
        }

        incoming = y_b[m_sub].clone();
        y_curr.push(y_b);
        y_prev.push(y_a);
        f_curr.push(f_b);
        f_prev.push(f_a);
        if iterations >= 2 {
            f_prev2.push(f_older.expect("set on every pass after the first"));
        }
    }

    Ok(SdcSolution {
        mesh: mesh.clone(),
        mode,
        iterations,
        dim: problem.dim,
        y_curr,
        y_prev,
        f_curr,
        f_prev,
        f_prev2: if iterations >= 2 { Some(f_prev2) } else { None },
    })
}
