//! QoI evaluation, the adjoint-weighted total error estimate, and its
//! three-way decomposition.
//!
//! With `Y` the reconstructed solution and `φ` the adjoint, the QoI error
//! is the weighted residual `∫ (f(Y, t) - Y'(t)) · φ dt`. Regrouping that
//! single integral around the method's Galerkin orthogonality splits it
//! into
//!
//! * `E_D` — time-discretization error (residual against `φ - πφ`, the
//!   part of the adjoint the method cannot see),
//! * `E_M` — interpolation error of the degree-`M` subnode interpolant,
//! * `E_K` — leftover iteration error from stopping at `K` sweeps,
//!
//! which sum back to the total exactly: the reported total is defined as
//! the component sum, and the standalone single-integral form agrees with
//! it up to the round-off left in the reconstruction's orthogonality
//! residual (both share one quadrature — same points, same weights).
//!
//! Quadrature detail: the adjoint lives on its own (finer) mesh, so the
//! integrand has derivative kinks inside forward subintervals. Each
//! forward subinterval is split at the adjoint breakpoints it contains,
//! and a Gauss rule exact for every polynomial term (notably the
//! `πφ`-weighted orthogonality combination) is applied per piece.

use crate::adjoint::{solve_adjoint, AdjointConfig};
use crate::galerkin::{reconstruct, select_order, CgFunction, MAX_ORDER};
use crate::linalg::dot;
use crate::mesh::{build_mesh, gauss_legendre, lagrange_value, QuadRule, TimeMesh};
use crate::problems::{OdeProblem, Qoi};
use crate::sdc::{solve, SdcMode, SdcSolution};
use crate::{Error, Result};

/// Estimates below this magnitude make the effectivity ratio meaningless.
const DEGENERATE_ESTIMATE: f64 = 1e-300;

/// Parameters of one estimation run.
#[derive(Debug, Clone)]
pub struct RunParams {
    /// Outer interval count `N` (so `dt = T / N`).
    pub intervals: usize,
    /// Subinterval count `M`.
    pub subintervals: usize,
    /// Sweep count `K`.
    pub iterations: usize,
    pub mode: SdcMode,
    /// Reconstruction degree; `None` selects it from the step size.
    pub q: Option<usize>,
    pub adjoint: AdjointConfig,
}

impl RunParams {
    pub fn new(intervals: usize, subintervals: usize, iterations: usize, mode: SdcMode) -> Self {
        RunParams {
            intervals,
            subintervals,
            iterations,
            mode,
            q: None,
            adjoint: AdjointConfig::default(),
        }
    }
}

/// One run's error estimate, decomposition, and parameter echo.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// Total estimated QoI error, defined as `e_d + e_m + e_k` (exactly,
    /// including round-off). [`estimate_total`] computes the same quantity
    /// as a single weighted-residual integral; the two agree up to the
    /// reconstruction's orthogonality defect (linear-solver round-off,
    /// ~1e-15 absolute), which matters only when the components cancel.
    pub estimate_total: f64,
    /// Discretization contribution.
    pub e_d: f64,
    /// Interpolation contribution.
    pub e_m: f64,
    /// Iteration contribution.
    pub e_k: f64,
    /// Exact QoI error, when an oracle supplied one.
    pub exact_error: Option<f64>,
    /// `exact_error / estimate_total`, when both are available.
    pub effectivity: Option<f64>,
    pub dt: f64,
    pub subintervals: usize,
    pub iterations: usize,
    pub mode: SdcMode,
    /// Reconstruction degree used for `Y^K`.
    pub q: usize,
    /// Adjoint discretization, when the full pipeline produced this report.
    pub adjoint: Option<AdjointConfig>,
}

/// Everything produced by one pass of the estimation pipeline.
#[derive(Debug, Clone)]
pub struct EstimateRun {
    pub report: ErrorReport,
    pub sdc: SdcSolution,
    /// Reconstructed final iterate `Y^K`.
    pub y: CgFunction,
    /// Reconstructed previous iterate `Y^{K-1}`.
    pub y_prev: CgFunction,
    /// Adjoint solution in original time.
    pub phi: CgFunction,
}

/// `Q(Y) = ∫ (Y, ψ) dt + (Y(T), ψ_T)`, integrated per subinterval with a
/// `q + 4`-point Gauss rule.
pub fn qoi_value(y: &CgFunction, qoi: &Qoi) -> f64 {
    let mesh = y.mesh();
    let mut value = 0.0;
    if !qoi.psi_is_zero {
        let rule = gauss_legendre(y.degree() + 4).expect("small fixed-size rule");
        for n in 0..mesh.interval_count() {
            for m in 0..mesh.subinterval_count() {
                let a = mesh.subnodes[n][m];
                let half = 0.5 * mesh.lengths[n][m];
                let mid = a + half;
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let t = mid + half * x;
                    let y_t = y.eval_in(n, m, t);
                    value += half * w * dot(&y_t, &qoi.psi(t));
                }
            }
        }
    }
    let terminal = y
        .eval(mesh.t_final)
        .expect("final time lies in the mesh domain");
    value + dot(&terminal, &qoi.psi_terminal)
}

/// Gauss point count for the residual integrals: enough for the adjoint's
/// piecewise degree plus headroom, and never below what makes the
/// `πφ`-weighted orthogonality terms exact (degree `max(M, q-1) + q - 1`).
fn residual_rule_size(q: usize, q_adj: usize, m_sub: usize) -> usize {
    (q + q_adj + 3).max((m_sub + q).div_ceil(2) + 1)
}

/// Splits `[a, b]` at the breakpoints of `other` that fall strictly
/// inside, ignoring splits closer than `1e-12 * (b - a)` to either end
/// (those arise from round-off twins of shared breakpoints).
fn segments(a: f64, b: f64, other: &TimeMesh) -> Vec<(f64, f64)> {
    let tol = 1e-12 * (b - a);
    let mut cuts = vec![a];
    for &p in other.breakpoints_within(a, b) {
        if p - a > tol && b - p > tol {
            cuts.push(p);
        }
    }
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Applies `body(t, weight)` at every shared quadrature point of forward
/// subinterval `[a, b]`, split at the adjoint mesh's interior breakpoints.
fn for_each_residual_point(
    a: f64,
    b: f64,
    phi_mesh: &TimeMesh,
    rule: &QuadRule,
    mut body: impl FnMut(f64, f64),
) {
    for (s0, s1) in segments(a, b, phi_mesh) {
        let half = 0.5 * (s1 - s0);
        let mid = 0.5 * (s0 + s1);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            body(mid + half * x, half * w);
        }
    }
}

/// Total error estimate as the single weighted-residual integral
/// `∫ (f(Y, t) - Y') · φ dt`. Uses the same quadrature as
/// [`estimate_components`], whose component sum it matches up to the
/// reconstruction's orthogonality round-off.
pub fn estimate_total(y: &CgFunction, phi: &CgFunction, problem: &OdeProblem) -> f64 {
    let mesh = y.mesh();
    let dim = y.dim();
    let rule = gauss_legendre(residual_rule_size(
        y.degree(),
        phi.degree(),
        mesh.subinterval_count(),
    ))
    .expect("small fixed-size rule");
    let mut total = 0.0;
    for n in 0..mesh.interval_count() {
        for m in 0..mesh.subinterval_count() {
            let a = mesh.subnodes[n][m];
            let b = mesh.subnodes[n][m + 1];
            for_each_residual_point(a, b, phi.mesh(), &rule, |t, w| {
                let y_t = y.eval_in(n, m, t);
                let dy = y.deriv_in(n, m, t);
                let f = problem.rhs(&y_t, t);
                let phi_t = phi.eval(t).expect("quadrature point inside the domain");
                let mut dot = 0.0;
                for c in 0..dim {
                    dot += (f[c] - dy[c]) * phi_t[c];
                }
                total += w * dot;
            });
        }
    }
    total
}

/// Decomposes the estimate into `E_D + E_M + E_K`; the report's total is
/// this sum, so the decomposition identity holds bitwise.
///
/// `pi_points` is the interpolation-point count of the projection `π`
/// (Lagrange interpolation of `φ` at that many Gauss-Legendre points per
/// subinterval). Pass the reconstruction degree `q` for the standard
/// estimator; any value in `[1, q]` leaves the sum invariant, because `πφ`
/// then stays inside the method's test space.
pub fn estimate_components(
    y: &CgFunction,
    y_prev: &CgFunction,
    phi: &CgFunction,
    sdc: &SdcSolution,
    problem: &OdeProblem,
    pi_points: usize,
) -> Result<ErrorReport> {
    let mesh = y.mesh();
    let dim = y.dim();
    let m_sub = mesh.subinterval_count();
    if sdc.mesh() != mesh || y_prev.mesh() != mesh {
        return Err(Error::InvalidArgument(
            "solution, previous iterate, and SDC data must share one mesh".to_string(),
        ));
    }
    if dim != problem.dim || y_prev.dim() != dim || phi.dim() != dim {
        return Err(Error::InvalidArgument(
            "estimator inputs disagree on the state dimension".to_string(),
        ));
    }
    if (phi.mesh().t_final - mesh.t_final).abs() > 1e-12 * mesh.t_final {
        return Err(Error::InvalidArgument(
            "adjoint and solution disagree on the final time".to_string(),
        ));
    }
    if pi_points < 1 || pi_points > y.degree() {
        return Err(Error::InvalidArgument(format!(
            "pi must interpolate at 1..={} points, got {pi_points}",
            y.degree()
        )));
    }

    let rule = gauss_legendre(residual_rule_size(y.degree(), phi.degree(), m_sub))
        .expect("small fixed-size rule");
    let pi_rule = gauss_legendre(pi_points)?;

    let mut e_d = 0.0;
    let mut e_m = 0.0;
    let mut e_k = 0.0;

    let mut sf_curr = vec![0.0; dim];
    let mut sf_prev = vec![0.0; dim];
    for n in 0..mesh.interval_count() {
        let subnodes = &mesh.subnodes[n];
        for m in 0..m_sub {
            let a = subnodes[m];
            let b = subnodes[m + 1];
            let h = mesh.lengths[n][m];

            // pi phi: interpolate the adjoint at the Gauss points of this
            // subinterval (strictly interior, so evaluation is unambiguous).
            let pi_nodes: Vec<f64> = pi_rule
                .nodes
                .iter()
                .map(|&x| 0.5 * (a + b) + 0.5 * h * x)
                .collect();
            let pi_values: Vec<Vec<f64>> = pi_nodes
                .iter()
                .map(|&t| phi.eval(t).expect("interior point"))
                .collect();
            let pi_phi = |t: f64, out: &mut Vec<f64>| {
                out.clear();
                out.resize(dim, 0.0);
                for (i, vals) in pi_values.iter().enumerate() {
                    let basis = lagrange_value(&pi_nodes, i, t);
                    for c in 0..dim {
                        out[c] += basis * vals[c];
                    }
                }
            };

            let mut pi_t = Vec::with_capacity(dim);
            for_each_residual_point(a, b, phi.mesh(), &rule, |t, w| {
                let y_t = y.eval_in(n, m, t);
                let dy = y.deriv_in(n, m, t);
                let f = problem.rhs(&y_t, t);
                let phi_t = phi.eval(t).expect("quadrature point inside the domain");
                pi_phi(t, &mut pi_t);
                for c in 0..dim {
                    sf_curr[c] = 0.0;
                    sf_prev[c] = 0.0;
                }
                for j in 0..=m_sub {
                    let basis = lagrange_value(subnodes, j, t);
                    let fc = sdc.rhs_value(n, j);
                    let fp = sdc.previous_rhs_value(n, j);
                    for c in 0..dim {
                        sf_curr[c] += basis * fc[c];
                        sf_prev[c] += basis * fp[c];
                    }
                }
                // Per-point dot products, scaled by the weight once.
                let mut dot_d = 0.0;
                let mut dot_m = 0.0;
                let mut dot_k = 0.0;
                for c in 0..dim {
                    dot_d += (sf_prev[c] - dy[c]) * (phi_t[c] - pi_t[c]);
                    dot_m += (f[c] - sf_curr[c]) * phi_t[c];
                    dot_k += (sf_curr[c] - sf_prev[c]) * phi_t[c];
                }
                e_d += w * dot_d;
                e_m += w * dot_m;
                e_k += w * dot_k;
            });

            // Rectangle-rule terms: left endpoint for explicit sweeps,
            // right endpoint for implicit ones, using the cached nodal
            // f-values (identical bits to f evaluated on the
            // reconstruction there).
            let (idx, t_star) = match sdc.mode() {
                SdcMode::Explicit => (m, a),
                SdcMode::Implicit => (m + 1, b),
            };
            let f_new = sdc.rhs_value(n, idx);
            let f_old = sdc.previous_rhs_value(n, idx);
            let phi_star = phi.eval(t_star).expect("endpoint inside the domain");
            pi_phi(t_star, &mut pi_t);
            for c in 0..dim {
                let jump = f_new[c] - f_old[c];
                e_d += h * jump * (phi_star[c] - pi_t[c]);
                e_k -= h * jump * phi_star[c];
            }
        }
    }

    Ok(ErrorReport {
        estimate_total: e_d + e_m + e_k,
        e_d,
        e_m,
        e_k,
        exact_error: None,
        effectivity: None,
        dt: mesh.t_final / mesh.interval_count() as f64,
        subintervals: m_sub,
        iterations: sdc.iterations(),
        mode: sdc.mode(),
        q: y.degree(),
        adjoint: None,
    })
}

/// `ℰ = exact / estimate`. An estimate this close to zero usually means
/// the problem was solved to round-off and the ratio is noise, which is
/// reported as an error instead of a huge number.
pub fn effectivity(exact: f64, estimate: f64) -> Result<f64> {
    if estimate.abs() < DEGENERATE_ESTIMATE {
        return Err(Error::DegenerateRatio { estimate });
    }
    Ok(exact / estimate)
}

/// The full pipeline: SDC solve, reconstruction, adjoint solve, estimate.
///
/// `exact_error` and `effectivity` in the report stay `None`; callers with
/// a ground truth (see the oracle module) fill them in.
pub fn run_estimate(problem: &OdeProblem, qoi: &Qoi, params: &RunParams) -> Result<EstimateRun> {
    let mesh = build_mesh(problem.t_final, params.intervals, params.subintervals)?;
    let dt = problem.t_final / params.intervals as f64;
    let sdc_sol = solve(problem, &mesh, params.iterations, params.mode)?;
    let q = match params.q {
        Some(q) if q >= 1 && q <= MAX_ORDER => q,
        Some(q) => {
            return Err(Error::InvalidArgument(format!(
                "reconstruction degree must lie in [1, {MAX_ORDER}], got {q}"
            )))
        }
        None => select_order(dt, params.subintervals, params.iterations)?,
    };
    let (y, y_prev) = reconstruct(&sdc_sol, q)?;
    let phi = solve_adjoint(problem, qoi, &y, params.iterations, &params.adjoint)?;
    let mut report = estimate_components(&y, &y_prev, &phi, &sdc_sol, problem, q)?;
    report.adjoint = Some(params.adjoint.clone());
    Ok(EstimateRun {
        report,
        sdc: sdc_sol,
        y,
        y_prev,
        phi,
    })
}
