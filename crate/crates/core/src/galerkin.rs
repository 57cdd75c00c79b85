//! Continuous Galerkin reconstruction of SDC iterates.
//!
//! An SDC iterate is nodal data; the error representation needs a function
//! of time with a derivative. This module builds, per subinterval, the
//! degree-`q` polynomial that matches both endpoint nodal values and
//! satisfies the iterate's variational (Petrov-Galerkin) equation against
//! `q - 1` test polynomials of degree `q - 1`. The result is nodally
//! equivalent to SDC: evaluating it at the subnodes reproduces the nodal
//! values bitwise.
//!
//! [`select_order`] picks `q` by balancing the interpolation error of the
//! degree-`q` polynomial on a width-`Δt` interval against the SDC
//! convergence order `min(K, M)`.

use crate::linalg::lu_solve_multi;
use crate::mesh::{gauss_legendre, lagrange_deriv, lagrange_value, TimeMesh};
use crate::sdc::{SdcMode, SdcSolution};
use crate::{Error, Result};

/// Largest reconstruction degree; uniform-node systems stay well
/// conditioned up to here, and the order formula never asks for more on
/// practical meshes.
pub const MAX_ORDER: usize = 12;

/// Reconstruction order from the step size and the SDC parameters:
///
/// ```text
///     q = ceil( min(K, M) * ln(dt) / (ln(dt) - ln(M)) - 1 ),
/// ```
///
/// clamped to `[1, MAX_ORDER]`. The formula equates the polynomial
/// interpolation error `(dt/M)^(q+1)`-ish decay with the nodal convergence
/// order `min(K, M)`; it needs `dt < 1` so that `ln(dt) < 0`.
pub fn select_order(dt: f64, m_sub: usize, iterations: usize) -> Result<usize> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "order selection needs a positive step size, got {dt}"
        )));
    }
    if dt >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "order selection needs dt < 1 (ln dt must be negative), got {dt}"
        )));
    }
    if m_sub < 1 || iterations < 1 {
        return Err(Error::InvalidArgument(
            "order selection needs M >= 1 and K >= 1".to_string(),
        ));
    }
    let order = iterations.min(m_sub) as f64;
    let raw = order * dt.ln() / (dt.ln() - (m_sub as f64).ln()) - 1.0;
    let q = raw.ceil();
    Ok((q.max(1.0).min(MAX_ORDER as f64)) as usize)
}

/// A piecewise-polynomial function of time: on each subinterval of `mesh` a
/// degree-`degree` polynomial stored as values at `degree + 1` uniformly
/// spaced local nodes (Lagrange form).
///
/// Evaluation at a breakpoint uses the subinterval to the *left* (the
/// left-limit convention); for continuous functions the two limits carry
/// identical bits anyway.
#[derive(Debug, Clone)]
pub struct CgFunction {
    mesh: TimeMesh,
    degree: usize,
    dim: usize,
    /// `coeffs[n * M + m]`: `(degree + 1) * dim` values, node-major.
    coeffs: Vec<Vec<f64>>,
    continuous: bool,
}

impl CgFunction {
    fn new(
        mesh: TimeMesh,
        degree: usize,
        dim: usize,
        coeffs: Vec<Vec<f64>>,
        continuous: bool,
    ) -> Self {
        debug_assert_eq!(
            coeffs.len(),
            mesh.interval_count() * mesh.subinterval_count()
        );
        debug_assert!(coeffs.iter().all(|c| c.len() == (degree + 1) * dim));
        CgFunction {
            mesh,
            degree,
            dim,
            coeffs,
            continuous,
        }
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// False only for the piecewise-flat initial iterate (`K = 1`), which
    /// jumps at interval boundaries.
    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    /// The `degree + 1` uniformly spaced local nodes of subinterval
    /// `(n, m)`, endpoints exact.
    pub fn local_nodes(&self, n: usize, m: usize) -> Vec<f64> {
        let a = self.mesh.subnodes[n][m];
        let b = self.mesh.subnodes[n][m + 1];
        uniform_nodes(a, b, self.degree)
    }

    /// Raw coefficient slice of subinterval `(n, m)`: value of component
    /// `c` at local node `i` sits at index `i * dim + c`.
    pub fn coefficients(&self, n: usize, m: usize) -> &[f64] {
        &self.coeffs[n * self.mesh.subinterval_count() + m]
    }

    /// Value at `t` (left-limit at breakpoints).
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let (n, m) = self.mesh.locate(t)?;
        Ok(self.eval_in(n, m, t))
    }

    /// Derivative at `t` (left-limit at breakpoints).
    pub fn deriv(&self, t: f64) -> Result<Vec<f64>> {
        let (n, m) = self.mesh.locate(t)?;
        Ok(self.deriv_in(n, m, t))
    }

    /// Value at `t` using subinterval `(n, m)`'s polynomial, regardless of
    /// which subinterval `t` falls in. This is how one-sided limits at
    /// breakpoints are taken.
    pub(crate) fn eval_in(&self, n: usize, m: usize, t: f64) -> Vec<f64> {
        let nodes = self.local_nodes(n, m);
        let coeffs = self.coefficients(n, m);
        // Exact fast path: at a stored node, return the stored value.
        for (i, &x) in nodes.iter().enumerate() {
            if x.to_bits() == t.to_bits() {
                return coeffs[i * self.dim..(i + 1) * self.dim].to_vec();
            }
        }
        let mut out = vec![0.0; self.dim];
        for i in 0..nodes.len() {
            let basis = lagrange_value(&nodes, i, t);
            for c in 0..self.dim {
                out[c] += basis * coeffs[i * self.dim + c];
            }
        }
        out
    }

    /// Derivative counterpart of [`CgFunction::eval_in`].
    pub(crate) fn deriv_in(&self, n: usize, m: usize, t: f64) -> Vec<f64> {
        let nodes = self.local_nodes(n, m);
        let coeffs = self.coefficients(n, m);
        let mut out = vec![0.0; self.dim];
        for i in 0..nodes.len() {
            let basis = lagrange_deriv(&nodes, i, t);
            for c in 0..self.dim {
                out[c] += basis * coeffs[i * self.dim + c];
            }
        }
        out
    }

    /// The same function in reversed time `s = T - t`. Coefficients are
    /// permuted, not recomputed, so nodal values survive bitwise.
    pub fn reverse(&self) -> CgFunction {
        let n_int = self.mesh.interval_count();
        let m_sub = self.mesh.subinterval_count();
        let q = self.degree;
        let mut coeffs = vec![Vec::new(); self.coeffs.len()];
        for n in 0..n_int {
            for m in 0..m_sub {
                let src = &self.coeffs[n * m_sub + m];
                let mut dst = vec![0.0; src.len()];
                for i in 0..=q {
                    let flip = q - i;
                    dst[flip * self.dim..(flip + 1) * self.dim]
                        .copy_from_slice(&src[i * self.dim..(i + 1) * self.dim]);
                }
                coeffs[(n_int - 1 - n) * m_sub + (m_sub - 1 - m)] = dst;
            }
        }
        CgFunction::new(self.mesh.reversed(), q, self.dim, coeffs, self.continuous)
    }

    /// Interpolates a closed-form function onto the mesh at the local
    /// nodes. Shared breakpoints are sampled once, so the result is
    /// continuous bitwise.
    pub fn interpolate(
        mesh: &TimeMesh,
        degree: usize,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Result<CgFunction> {
        if degree < 1 || degree > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "interpolation degree must lie in [1, {MAX_ORDER}], got {degree}"
            )));
        }
        let dim = f(mesh.subnodes[0][0]).len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "interpolated function must return a nonempty vector".to_string(),
            ));
        }
        let n_int = mesh.interval_count();
        let m_sub = mesh.subinterval_count();
        let mut coeffs = Vec::with_capacity(n_int * m_sub);
        let mut carry: Option<Vec<f64>> = None;
        for n in 0..n_int {
            for m in 0..m_sub {
                let nodes = uniform_nodes(mesh.subnodes[n][m], mesh.subnodes[n][m + 1], degree);
                let mut row = vec![0.0; (degree + 1) * dim];
                for (i, &x) in nodes.iter().enumerate() {
                    let v = if i == 0 {
                        carry.take().unwrap_or_else(|| f(x))
                    } else {
                        f(x)
                    };
                    debug_assert_eq!(v.len(), dim);
                    row[i * dim..(i + 1) * dim].copy_from_slice(&v);
                }
                carry = Some(row[degree * dim..].to_vec());
                coeffs.push(row);
            }
        }
        Ok(CgFunction::new(mesh.clone(), degree, dim, coeffs, true))
    }
}

/// `count + 1` uniformly spaced nodes on `[a, b]`, endpoints exact.
fn uniform_nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    let h = b - a;
    (0..=count)
        .map(|i| {
            if i == 0 {
                a
            } else if i == count {
                b
            } else {
                a + h * (i as f64 / count as f64)
            }
        })
        .collect()
}

/// Which iterate of an [`SdcSolution`] to reconstruct.
#[derive(Clone, Copy)]
enum Which {
    Current,
    Previous,
}

/// Builds the cG(`q`) reconstructions of the final iterate `Y^K` and the
/// previous iterate `Y^{K-1}`.
///
/// Endpoint coefficients are the SDC nodal values; for `q > 1` the interior
/// coefficients solve the (q-1)x(q-1) Petrov-Galerkin system whose test
/// space is spanned by the degree-`q-1` Lagrange polynomials on `q` uniform
/// nodes, excluding the one attached to the right endpoint. For `K = 1` the
/// previous iterate is the piecewise-flat initial iterate, represented
/// exactly (and flagged discontinuous).
pub fn reconstruct(sdc: &SdcSolution, q: usize) -> Result<(CgFunction, CgFunction)> {
    if q < 1 || q > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "reconstruction degree must lie in [1, {MAX_ORDER}], got {q}"
        )));
    }
    let current = reconstruct_iterate(sdc, q, Which::Current)?;
    let previous = if sdc.iterations() >= 2 {
        reconstruct_iterate(sdc, q, Which::Previous)?
    } else {
        flat_initial_iterate(sdc, q)
    };
    Ok((current, previous))
}

/// The `K = 1` previous iterate: constant per interval (the incoming
/// state), discontinuous at interval boundaries.
fn flat_initial_iterate(sdc: &SdcSolution, q: usize) -> CgFunction {
    let mesh = sdc.mesh();
    let dim = sdc.dim();
    let m_sub = mesh.subinterval_count();
    let mut coeffs = Vec::with_capacity(mesh.interval_count() * m_sub);
    for n in 0..mesh.interval_count() {
        let value = sdc.previous_value(n, 0);
        let mut row = vec![0.0; (q + 1) * dim];
        for i in 0..=q {
            row[i * dim..(i + 1) * dim].copy_from_slice(value);
        }
        coeffs.extend(std::iter::repeat_n(row, m_sub));
    }
    CgFunction::new(mesh.clone(), q, dim, coeffs, false)
}

fn reconstruct_iterate(sdc: &SdcSolution, q: usize, which: Which) -> Result<CgFunction> {
    let mesh = sdc.mesh();
    let dim = sdc.dim();
    let n_int = mesh.interval_count();
    let m_sub = mesh.subinterval_count();

    let nodal = |n: usize, m: usize| -> &[f64] {
        match which {
            Which::Current => sdc.value(n, m),
            Which::Previous => sdc.previous_value(n, m),
        }
    };
    // f-values driving the iterate's Picard term (one iterate older).
    let picard_f = |n: usize, m: usize| -> &[f64] {
        match which {
            Which::Current => sdc.previous_rhs_value(n, m),
            Which::Previous => sdc
                .older_rhs_value(n, m)
                .expect("previous-iterate reconstruction requires K >= 2"),
        }
    };
    let newer_f = |n: usize, m: usize| -> &[f64] {
        match which {
            Which::Current => sdc.rhs_value(n, m),
            Which::Previous => sdc.previous_rhs_value(n, m),
        }
    };

    let mut coeffs = Vec::with_capacity(n_int * m_sub);
    if q == 1 {
        // Piecewise-linear interpolant of the nodal values; nothing to solve.
        for n in 0..n_int {
            for m in 0..m_sub {
                let mut row = vec![0.0; 2 * dim];
                row[..dim].copy_from_slice(nodal(n, m));
                row[dim..].copy_from_slice(nodal(n, m + 1));
                coeffs.push(row);
            }
        }
        return Ok(CgFunction::new(mesh.clone(), 1, dim, coeffs, true));
    }

    // Reference-subinterval machinery, shared by every subinterval.
    // Trial basis: degree-q Lagrange on q+1 uniform nodes of [0, 1];
    // test basis: degree-(q-1) Lagrange on q uniform nodes, rows r = 0..q-2.
    let trial_nodes = uniform_nodes(0.0, 1.0, q);
    let test_nodes = uniform_nodes(0.0, 1.0, q - 1);
    let rule = gauss_legendre((2 * q + m_sub).div_ceil(2) + 1)?;
    // Quadrature on [0, 1].
    let qs: Vec<f64> = rule.nodes.iter().map(|&x| 0.5 * (x + 1.0)).collect();
    let qw: Vec<f64> = rule.weights.iter().map(|&w| 0.5 * w).collect();

    // a_full[r][j] = integral of d(trial_j)/ds * test_r over [0, 1];
    // columns j = 1..q-1 form the system matrix, columns 0 and q feed the
    // endpoint (known-value) contributions.
    let mut a_full = vec![vec![0.0; q + 1]; q - 1];
    for r in 0..q - 1 {
        for j in 0..=q {
            let mut acc = 0.0;
            for (&s, &w) in qs.iter().zip(&qw) {
                acc += w * lagrange_deriv(&trial_nodes, j, s) * lagrange_value(&test_nodes, r, s);
            }
            a_full[r][j] = acc;
        }
    }
    // Cached test-basis values at the quadrature points.
    let test_at_q: Vec<Vec<f64>> = (0..q - 1)
        .map(|r| {
            qs.iter()
                .map(|&s| lagrange_value(&test_nodes, r, s))
                .collect()
        })
        .collect();

    for n in 0..n_int {
        let subnodes = &mesh.subnodes[n];
        for m in 0..m_sub {
            let a = subnodes[m];
            let h = mesh.lengths[n][m];
            let left = nodal(n, m);
            let right = nodal(n, m + 1);

            // b_matrix[r][j] = integral over the subinterval of the full
            // interval's Lagrange basis L_j times test_r, divided by h
            // (kept in reference scale, multiplied back below).
            let mut rhs: Vec<Vec<f64>> = vec![vec![0.0; q - 1]; dim];
            for r in 0..q - 1 {
                for j in 0..=m_sub {
                    let mut acc = 0.0;
                    for (k, &s) in qs.iter().enumerate() {
                        acc += qw[k] * lagrange_value(subnodes, j, a + h * s) * test_at_q[r][k];
                    }
                    let fj = picard_f(n, j);
                    for c in 0..dim {
                        rhs[c][r] += h * acc * fj[c];
                    }
                }
                // Endpoint (known coefficient) contributions move to the
                // right-hand side.
                for c in 0..dim {
                    rhs[c][r] -= a_full[r][0] * left[c] + a_full[r][q] * right[c];
                }
            }
            // Rectangle-rule correction term. Test functions vanish at the
            // right endpoint, so only the explicit (left-endpoint) variant
            // contributes, and only through test_0 (which is 1 at s = 0).
            if sdc.mode() == SdcMode::Explicit {
                let f_new = newer_f(n, m);
                let f_old = picard_f(n, m);
                for c in 0..dim {
                    rhs[c][0] += h * (f_new[c] - f_old[c]);
                }
            }

            let mut a_sys: Vec<Vec<f64>> = (0..q - 1).map(|r| a_full[r][1..q].to_vec()).collect();
            let condition = lu_solve_multi(&mut a_sys, &mut rhs).map_err(|e| {
                Error::NumericalFailure(format!(
                    "reconstruction system (q = {q}) is singular on subinterval \
                     ({n}, {m}): {e}"
                ))
            })?;
            if !condition.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "reconstruction system (q = {q}) has a degenerate pivot ratio"
                )));
            }

            let mut row = vec![0.0; (q + 1) * dim];
            row[..dim].copy_from_slice(left);
            row[q * dim..].copy_from_slice(right);
            for j in 1..q {
                for c in 0..dim {
                    row[j * dim + c] = rhs[c][j - 1];
                }
            }
            coeffs.push(row);
        }
    }
    Ok(CgFunction::new(mesh.clone(), q, dim, coeffs, true))
}
