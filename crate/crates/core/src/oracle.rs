//! Ground truth: closed-form solutions where they exist, and a
//! refinement-based reference solve where they do not.
//!
//! The reference path reports its own uncertainty (the QoI shift between
//! two refinement levels) and refuses to certify an "exact" error that is
//! smaller than that uncertainty resolves.

use crate::estimator::qoi_value;
use crate::galerkin::{reconstruct, select_order, CgFunction};
use crate::linalg::dot;
use crate::mesh::{build_mesh, gauss_legendre};
use crate::problems::{OdeProblem, Qoi};
use crate::sdc::{solve, SdcMode};
use crate::{Error, Result};

/// Forced, damped oscillator `x'' + 2x' + 2x = 20 cos(10 t)` with
/// `x(0) = 0`, `x'(0) = 1`, as a first-order system `[x, x']`.
///
/// Particular solution `a cos(10t) + b sin(10t)` with
/// `a = -490/2501`, `b = 100/2501`; homogeneous part
/// `e^{-t}(c1 cos t + c2 sin t)` fitted to the initial data.
pub fn harmonic_exact(t: f64) -> Vec<f64> {
    let a = -490.0 / 2501.0;
    let b = 100.0 / 2501.0;
    let c1 = -a;
    let c2 = 1.0 + c1 - 10.0 * b;
    let (sin, cos) = t.sin_cos();
    let (sin10, cos10) = (10.0 * t).sin_cos();
    let damp = (-t).exp();
    let x = damp * (c1 * cos + c2 * sin) + a * cos10 + b * sin10;
    let v = damp * ((c2 - c1) * cos - (c1 + c2) * sin) - 10.0 * a * sin10 + 10.0 * b * cos10;
    vec![x, v]
}

/// Solves Kepler's equation `tau - 0.6 sin(tau) = t` for the eccentric
/// anomaly. Newton from `tau = t` (the derivative `1 - 0.6 cos` is bounded
/// below by 0.4), with a bisection fallback on `[t - 0.7, t + 0.7]`.
pub fn kepler_anomaly(t: f64) -> f64 {
    let g = |tau: f64| tau - 0.6 * tau.sin() - t;
    let mut tau = t;
    for _ in 0..50 {
        let r = g(tau);
        if r.abs() < 1e-14 {
            return tau;
        }
        tau -= r / (1.0 - 0.6 * tau.cos());
    }
    // |tau - t| <= 0.6, so this bracket always contains the root.
    let (mut lo, mut hi) = (t - 0.7, t + 0.7);
    for _ in 0..200 {
        tau = 0.5 * (lo + hi);
        if g(tau) < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    tau
}

/// Kepler orbit with eccentricity 0.6: state `[x, y, x', y']` where
/// `x = cos(tau) - 0.6`, `y = 0.8 sin(tau)`, and the velocities follow
/// from `dtau/dt = 1 / (1 - 0.6 cos(tau))`.
pub fn two_body_exact(t: f64) -> Vec<f64> {
    let tau = kepler_anomaly(t);
    let (sin, cos) = tau.sin_cos();
    let rate = 1.0 / (1.0 - 0.6 * cos);
    vec![cos - 0.6, 0.8 * sin, -sin * rate, 0.8 * cos * rate]
}

/// `Q` evaluated on the closed-form solution: 250 Gauss-8 panels for the
/// integral term plus the terminal pairing. Errors if the problem has no
/// closed form attached.
pub fn analytic_qoi(problem: &OdeProblem, qoi: &Qoi) -> Result<f64> {
    if !problem.has_exact() {
        return Err(Error::InvalidArgument(format!(
            "problem '{}' has no closed-form solution",
            problem.label
        )));
    }
    let exact = |t: f64| problem.exact(t).expect("has_exact checked above");
    let mut value = 0.0;
    if !qoi.psi_is_zero {
        let rule = gauss_legendre(8)?;
        let panels = 250;
        let width = problem.t_final / panels as f64;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * width;
            let half = 0.5 * width;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let t = mid + half * x;
                value += half * w * dot(&exact(t), &qoi.psi(t));
            }
        }
    }
    Ok(value + dot(&exact(problem.t_final), &qoi.psi_terminal))
}

/// How hard the reference solver should work: it runs implicit SDC at 16x
/// and 32x the interval count implied by `finest_dt`, with a few more
/// subnodes and sweeps than the run being checked.
#[derive(Debug, Clone)]
pub struct RefinementProfile {
    /// Finest step size of the study this reference will serve.
    pub finest_dt: f64,
    /// Subinterval count of the study.
    pub subintervals: usize,
    /// Sweep count of the study.
    pub iterations: usize,
}

/// A high-accuracy solve usable as ground truth, with a self-reported
/// uncertainty (the QoI shift over the last refinement doubling).
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub y: CgFunction,
    pub qoi: f64,
    pub uncertainty: f64,
}

/// Where an exact error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSource {
    Analytic,
    Reference,
}

/// Runs the reference solver (implicit, heavily refined) and records the
/// remaining QoI uncertainty.
pub fn reference_solve(
    problem: &OdeProblem,
    qoi: &Qoi,
    profile: &RefinementProfile,
) -> Result<ReferenceSolution> {
    if !(profile.finest_dt > 0.0) || !profile.finest_dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "finest_dt must be positive and finite, got {}",
            profile.finest_dt
        )));
    }
    if profile.subintervals == 0 || profile.iterations == 0 {
        return Err(Error::InvalidArgument(
            "refinement profile needs at least one subinterval and one sweep".to_string(),
        ));
    }
    let base = (problem.t_final / profile.finest_dt).round().max(1.0) as usize;
    let m_ref = (profile.subintervals + 3).min(9);
    let k_ref = (profile.iterations + 3).min(12);

    let solve_level = |n: usize| -> Result<(CgFunction, f64)> {
        let mesh = build_mesh(problem.t_final, n, m_ref)?;
        let sol = solve(problem, &mesh, k_ref, SdcMode::Implicit)?;
        let q = select_order(problem.t_final / n as f64, m_ref, k_ref)?;
        let (y, _) = reconstruct(&sol, q)?;
        let value = qoi_value(&y, qoi);
        Ok((y, value))
    };

    let (_, coarse_qoi) = solve_level(16 * base)?;
    let (y, fine_qoi) = solve_level(32 * base)?;
    Ok(ReferenceSolution {
        y,
        qoi: fine_qoi,
        uncertainty: (coarse_qoi - fine_qoi).abs(),
    })
}

/// Exact QoI error of a computed solution `y`: closed form when the
/// problem has one, otherwise against `reference` — but only if the
/// reference's own uncertainty is small against the error being measured
/// (a 1000x margin, with a round-off floor so that errors near machine
/// precision are not rejected).
pub fn exact_qoi_error(
    problem: &OdeProblem,
    qoi: &Qoi,
    y: &CgFunction,
    reference: Option<&ReferenceSolution>,
) -> Result<(f64, ExactSource)> {
    let measured = qoi_value(y, qoi);
    if problem.has_exact() {
        let exact = analytic_qoi(problem, qoi)?;
        return Ok((exact - measured, ExactSource::Analytic));
    }
    let reference = reference.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "problem '{}' has no closed form; pass a reference solution",
            problem.label
        ))
    })?;
    let err = reference.qoi - measured;
    let floor = 1e-13 * reference.qoi.abs().max(1.0);
    if reference.uncertainty < 1e-3 * err.abs() || reference.uncertainty < floor {
        Ok((err, ExactSource::Reference))
    } else {
        Err(Error::ReferenceUnreliable {
            uncertainty: reference.uncertainty,
            measured: err,
        })
    }
}
