//! Adaptive refinement steered by the error decomposition.
//!
//! Each step runs the full estimation pipeline, looks at which of
//! `E_D`, `E_M`, `E_K` dominates, and refines the matching knob: halve
//! the step for discretization error, add a subnode for interpolation
//! error, add a sweep for iteration error. Ties go to the cheaper-to-fix
//! discretization knob first, then subnodes, then sweeps.

use crate::estimator::{run_estimate, RunParams};
use crate::problems::{OdeProblem, Qoi};
use crate::{Error, Result};
use std::fmt;

/// Default cap on adaptive evaluations.
pub const DEFAULT_MAX_STEPS: usize = 25;

/// Refinement decision taken after one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    HalveDt,
    IncreaseM,
    IncreaseK,
    /// Tolerance met; no refinement taken.
    Done,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::HalveDt => "halve_dt",
            Action::IncreaseM => "inc_M",
            Action::IncreaseK => "inc_K",
            Action::Done => "done",
        };
        f.write_str(s)
    }
}

/// One adaptive step: the estimate it saw and the action it took.
#[derive(Debug, Clone)]
pub struct AdaptRow {
    pub estimate: f64,
    pub dt: f64,
    pub subintervals: usize,
    pub iterations: usize,
    pub e_d: f64,
    pub e_m: f64,
    pub e_k: f64,
    pub action: Action,
}

/// The whole adaptive history. `complete` is false when the step budget
/// ran out before the tolerance was met.
#[derive(Debug, Clone)]
pub struct AdaptTrace {
    pub rows: Vec<AdaptRow>,
    pub complete: bool,
}

fn dominant_action(e_d: f64, e_m: f64, e_k: f64) -> Action {
    let (ad, am, ak) = (e_d.abs(), e_m.abs(), e_k.abs());
    if ad >= am && ad >= ak {
        Action::HalveDt
    } else if am >= ak {
        Action::IncreaseM
    } else {
        Action::IncreaseK
    }
}

/// Runs the adaptive loop from `initial` until `|estimate| <= tol` or
/// `max_steps` evaluations have been spent.
///
/// The reconstruction degree is re-selected from the current step size on
/// every iteration (any explicit `q` in `initial` is ignored), since the
/// loop changes exactly the quantities that selection depends on.
pub fn run_adaptive(
    problem: &OdeProblem,
    qoi: &Qoi,
    initial: &RunParams,
    tol: f64,
    max_steps: usize,
) -> Result<AdaptTrace> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    if max_steps == 0 {
        return Err(Error::InvalidArgument(
            "the adaptive loop needs at least one step".to_string(),
        ));
    }

    let mut params = initial.clone();
    params.q = None;
    let mut rows = Vec::new();
    for _ in 0..max_steps {
        let run = run_estimate(problem, qoi, &params)?;
        let r = &run.report;
        let met = r.estimate_total.abs() <= tol;
        let action = if met {
            Action::Done
        } else {
            dominant_action(r.e_d, r.e_m, r.e_k)
        };
        rows.push(AdaptRow {
            estimate: r.estimate_total,
            dt: r.dt,
            subintervals: r.subintervals,
            iterations: r.iterations,
            e_d: r.e_d,
            e_m: r.e_m,
            e_k: r.e_k,
            action,
        });
        match action {
            Action::Done => {
                return Ok(AdaptTrace {
                    rows,
                    complete: true,
                })
            }
            Action::HalveDt => params.intervals *= 2,
            Action::IncreaseM => params.subintervals += 1,
            Action::IncreaseK => params.iterations += 1,
        }
    }
    Ok(AdaptTrace {
        rows,
        complete: false,
    })
}
