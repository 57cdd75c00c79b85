//! The `sdc-adjoint` command-line experiment runner.
//!
//! Three subcommands: `run` (one estimate, one CSV row), `sweep` (vary one
//! of dt/M/K/q, one row per value), and `adapt` (the adaptive loop's
//! trace). All output is CSV, to stdout or `--out`.
//!
//! Exit codes: 0 success, 2 usage or argument problems, 3 adaptive step
//! budget exhausted (partial trace still printed), 4 solver failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adapt::{run_adaptive, DEFAULT_MAX_STEPS};
use crate::estimator::{effectivity, run_estimate, ErrorReport, RunParams};
use crate::galerkin::MAX_ORDER;
use crate::oracle::{exact_qoi_error, reference_solve, ReferenceSolution, RefinementProfile};
use crate::problems::{
    harmonic_oscillator, heat_equation, two_body, two_body_gaussian, vinograd, JacFn, OdeProblem,
    Qoi, RhsFn, Structure,
};
use crate::sdc::SdcMode;
use crate::{Error, Result};

/// Header of `run` and `sweep` output.
pub const RUN_HEADER: &str = "param,est_err,effectivity,E_D,E_M,E_K,exact_err,q_used,wallclock_ms";
/// Header of `adapt` output.
pub const ADAPT_HEADER: &str = "est_err,dt,M,K,E_D,E_M,E_K,action";

#[derive(Debug, Parser)]
#[command(
    name = "sdc-adjoint",
    about = "SDC ODE solver with adjoint-based a posteriori error estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve once and print a single CSV row of estimates.
    Run(RunArgs),
    /// Vary one parameter (dt, M, K, or q); one CSV row per value.
    Sweep(SweepArgs),
    /// Refine adaptively until |estimate| <= tol; print the trace.
    Adapt(AdaptArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Axis to vary.
    #[arg(long, value_enum)]
    vary: Vary,
    /// Worker threads for sweep rows (output order stays the axis order).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct AdaptArgs {
    /// Stop once |estimate| <= tol.
    #[arg(long)]
    tol: f64,
    /// Evaluation budget before giving up (exit 3).
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Built-in problem: harmonic, vinograd, two_body, heat.
    #[arg(long)]
    problem: Option<String>,
    /// Linear-problem definition file (key = value; see the README).
    #[arg(long, conflicts_with = "problem")]
    config: Option<PathBuf>,
    /// Outer step size; must divide T. Comma list under `sweep --vary dt`.
    #[arg(long)]
    dt: Option<String>,
    /// Outer interval count; alternative to --dt.
    #[arg(long = "N", conflicts_with = "dt")]
    intervals: Option<usize>,
    /// Subintervals per interval. Range `lo..hi` under `sweep --vary M`.
    #[arg(long = "M", default_value = "3")]
    subintervals: String,
    /// SDC sweep count. Range `lo..hi` under `sweep --vary K`.
    #[arg(long = "K", default_value = "2")]
    iterations: String,
    /// Substep flavor of the sweeps.
    #[arg(long, value_enum, default_value = "explicit")]
    mode: ModeArg,
    /// Reconstruction degree: an integer, or "auto" to pick from dt, M, K.
    /// Range `lo..hi` under `sweep --vary q`.
    #[arg(long, default_value = "auto")]
    q: String,
    /// Override the problem's final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// QoI variant; `two_body` also accepts "gaussian".
    #[arg(long)]
    qoi: Option<String>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Explicit,
    Implicit,
}

impl From<ModeArg> for SdcMode {
    fn from(m: ModeArg) -> SdcMode {
        match m {
            ModeArg::Explicit => SdcMode::Explicit,
            ModeArg::Implicit => SdcMode::Implicit,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Vary {
    #[value(name = "dt")]
    Dt,
    #[value(name = "M", alias = "m")]
    M,
    #[value(name = "K", alias = "k")]
    K,
    #[value(name = "q")]
    Q,
}

/// Entry point; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Adapt(args) => cmd_adapt(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                _ => 4,
            }
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let (problem, qoi) = build_setup(&args.common)?;
    let (params, dt) = single_params(&args.common, problem.t_final)?;
    let reference = maybe_reference(&problem, &qoi, dt, &params)?;
    let row = compute_row(&problem, &qoi, &params, sci(dt), reference.as_ref())?;
    let mut csv = String::from(RUN_HEADER);
    csv.push('\n');
    csv.push_str(&format_row(&row));
    csv.push('\n');
    emit(&args.common.out, &csv)?;
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    if args.jobs == 0 {
        return Err(Error::InvalidArgument(
            "--jobs must be at least 1".to_string(),
        ));
    }
    let common = &args.common;
    let (problem, qoi) = build_setup(common)?;
    let t_final = problem.t_final;

    let mut rows_in: Vec<(String, RunParams)> = Vec::new();
    match args.vary {
        Vary::Dt => {
            let spec = common.dt.as_deref().ok_or_else(|| {
                Error::InvalidArgument(
                    "sweeping dt needs --dt with one or more comma-separated values".to_string(),
                )
            })?;
            let m = parse_single_usize(&common.subintervals, "--M")?;
            let k = parse_single_usize(&common.iterations, "--K")?;
            let q = parse_q(&common.q)?;
            for dt in parse_f64_axis(spec, "--dt")? {
                let n = intervals_for_dt(dt, t_final)?;
                let mut p = RunParams::new(n, m, k, common.mode.into());
                p.q = q;
                rows_in.push((sci(dt), p));
            }
        }
        Vary::M => {
            let n = resolve_intervals(common, t_final)?;
            let k = parse_single_usize(&common.iterations, "--K")?;
            let q = parse_q(&common.q)?;
            for m in parse_usize_axis(&common.subintervals, "--M")? {
                let mut p = RunParams::new(n, m, k, common.mode.into());
                p.q = q;
                rows_in.push((m.to_string(), p));
            }
        }
        Vary::K => {
            let n = resolve_intervals(common, t_final)?;
            let m = parse_single_usize(&common.subintervals, "--M")?;
            let q = parse_q(&common.q)?;
            for k in parse_usize_axis(&common.iterations, "--K")? {
                let mut p = RunParams::new(n, m, k, common.mode.into());
                p.q = q;
                rows_in.push((k.to_string(), p));
            }
        }
        Vary::Q => {
            if common.q == "auto" {
                return Err(Error::InvalidArgument(
                    "sweeping q needs --q with a range like 1..4".to_string(),
                ));
            }
            let n = resolve_intervals(common, t_final)?;
            let m = parse_single_usize(&common.subintervals, "--M")?;
            let k = parse_single_usize(&common.iterations, "--K")?;
            for q in parse_usize_axis(&common.q, "--q")? {
                if q > MAX_ORDER {
                    return Err(Error::InvalidArgument(format!(
                        "--q values must lie in [1, {MAX_ORDER}], got {q}"
                    )));
                }
                let mut p = RunParams::new(n, m, k, common.mode.into());
                p.q = Some(q);
                rows_in.push((q.to_string(), p));
            }
        }
    }
    if rows_in.is_empty() {
        return Err(Error::InvalidArgument("empty sweep range".to_string()));
    }

    let reference = if problem.has_exact() {
        None
    } else {
        let finest_dt = rows_in
            .iter()
            .map(|(_, p)| t_final / p.intervals as f64)
            .fold(f64::INFINITY, f64::min);
        let profile = RefinementProfile {
            finest_dt,
            subintervals: rows_in.iter().map(|(_, p)| p.subintervals).max().unwrap(),
            iterations: rows_in.iter().map(|(_, p)| p.iterations).max().unwrap(),
        };
        Some(reference_solve(&problem, &qoi, &profile)?)
    };

    let results = run_rows(&problem, &qoi, &rows_in, reference.as_ref(), args.jobs);
    let mut csv = String::from(RUN_HEADER);
    csv.push('\n');
    for result in results {
        csv.push_str(&format_row(&result?));
        csv.push('\n');
    }
    emit(&common.out, &csv)?;
    Ok(0)
}

fn cmd_adapt(args: &AdaptArgs) -> Result<i32> {
    let (problem, qoi) = build_setup(&args.common)?;
    let (params, _) = single_params(&args.common, problem.t_final)?;
    let trace = run_adaptive(&problem, &qoi, &params, args.tol, args.max_steps)?;
    let mut csv = String::from(ADAPT_HEADER);
    csv.push('\n');
    for row in &trace.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            sci(row.estimate),
            sci(row.dt),
            row.subintervals,
            row.iterations,
            sci(row.e_d),
            sci(row.e_m),
            sci(row.e_k),
            row.action
        ));
    }
    emit(&args.common.out, &csv)?;
    Ok(if trace.complete { 0 } else { 3 })
}

/// One finished CSV row.
struct CsvRow {
    param: String,
    report: ErrorReport,
    /// NaN when no ground truth was available.
    exact_err: f64,
    /// NaN when no ground truth was available or the estimate degenerated.
    effectivity: f64,
    wallclock_ms: u128,
}

fn compute_row(
    problem: &OdeProblem,
    qoi: &Qoi,
    params: &RunParams,
    param: String,
    reference: Option<&ReferenceSolution>,
) -> Result<CsvRow> {
    let start = Instant::now();
    let run = run_estimate(problem, qoi, params)?;
    let (exact_err, eff) = match exact_qoi_error(problem, qoi, &run.y, reference) {
        Ok((err, _)) => (
            err,
            effectivity(err, run.report.estimate_total).unwrap_or(f64::NAN),
        ),
        Err(Error::ReferenceUnreliable { .. }) => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(CsvRow {
        param,
        report: run.report,
        exact_err,
        effectivity: eff,
        wallclock_ms: start.elapsed().as_millis(),
    })
}

fn run_rows(
    problem: &OdeProblem,
    qoi: &Qoi,
    rows_in: &[(String, RunParams)],
    reference: Option<&ReferenceSolution>,
    jobs: usize,
) -> Vec<Result<CsvRow>> {
    let jobs = jobs.min(rows_in.len());
    if jobs <= 1 {
        return rows_in
            .iter()
            .map(|(label, p)| compute_row(problem, qoi, p, label.clone(), reference))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<CsvRow>>>> =
        rows_in.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= rows_in.len() {
                    break;
                }
                let (label, p) = &rows_in[i];
                let out = compute_row(problem, qoi, p, label.clone(), reference);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

fn maybe_reference(
    problem: &OdeProblem,
    qoi: &Qoi,
    finest_dt: f64,
    params: &RunParams,
) -> Result<Option<ReferenceSolution>> {
    if problem.has_exact() {
        return Ok(None);
    }
    let profile = RefinementProfile {
        finest_dt,
        subintervals: params.subintervals,
        iterations: params.iterations,
    };
    reference_solve(problem, qoi, &profile).map(Some)
}

fn build_setup(common: &CommonArgs) -> Result<(OdeProblem, Qoi)> {
    let (mut problem, qoi) = match (&common.problem, &common.config) {
        (Some(name), None) => builtin(name, common.qoi.as_deref())?,
        (None, Some(path)) => {
            if let Some(v) = &common.qoi {
                if v != "default" {
                    return Err(Error::InvalidArgument(
                        "config-file problems carry their own QoI; --qoi does not apply"
                            .to_string(),
                    ));
                }
            }
            load_config(path)?
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "pass --problem NAME or --config PATH".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --problem with --config"),
    };
    if let Some(t) = common.t_final {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "--T must be positive and finite, got {t}"
            )));
        }
        problem.t_final = t;
    }
    Ok((problem, qoi))
}

fn builtin(name: &str, qoi: Option<&str>) -> Result<(OdeProblem, Qoi)> {
    let variant = qoi.unwrap_or("default");
    match (name, variant) {
        ("harmonic", "default") => Ok(harmonic_oscillator()),
        ("vinograd", "default") => Ok(vinograd()),
        ("two_body", "default") => Ok(two_body()),
        ("two_body", "gaussian") => Ok(two_body_gaussian()),
        ("heat", "default") => heat_equation(39),
        ("harmonic" | "vinograd" | "two_body" | "heat", other) => Err(Error::InvalidArgument(
            format!("problem '{name}' has no QoI variant '{other}'"),
        )),
        _ => Err(Error::InvalidArgument(format!(
            "unknown problem '{name}' (expected harmonic, vinograd, two_body, or heat)"
        ))),
    }
}

fn single_params(common: &CommonArgs, t_final: f64) -> Result<(RunParams, f64)> {
    let m = parse_single_usize(&common.subintervals, "--M")?;
    let k = parse_single_usize(&common.iterations, "--K")?;
    let n = resolve_intervals(common, t_final)?;
    let mut params = RunParams::new(n, m, k, common.mode.into());
    params.q = parse_q(&common.q)?;
    Ok((params, t_final / n as f64))
}

fn resolve_intervals(common: &CommonArgs, t_final: f64) -> Result<usize> {
    match (&common.dt, common.intervals) {
        (Some(spec), None) => {
            let list = parse_f64_axis(spec, "--dt")?;
            if list.len() != 1 {
                return Err(Error::InvalidArgument(
                    "--dt lists are only for `sweep --vary dt`; pass one value here".to_string(),
                ));
            }
            intervals_for_dt(list[0], t_final)
        }
        (None, Some(n)) if n >= 1 => Ok(n),
        (None, Some(_)) => Err(Error::InvalidArgument("--N must be at least 1".to_string())),
        (None, None) => Err(Error::InvalidArgument(
            "pass --dt or --N to fix the outer mesh".to_string(),
        )),
        (Some(_), Some(_)) => unreachable!("clap rejects --dt with --N"),
    }
}

fn intervals_for_dt(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "--dt must be positive and finite, got {dt}"
        )));
    }
    let ratio = t_final / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n {
        return Err(Error::InvalidArgument(format!(
            "--dt {dt} does not evenly divide the final time {t_final}"
        )));
    }
    Ok(n as usize)
}

fn parse_single_usize(s: &str, what: &str) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(Error::InvalidArgument(format!(
            "{what} must be a positive integer, got '{s}'"
        ))),
    }
}

/// `lo..hi` (inclusive), a comma list, or a single integer.
fn parse_usize_axis(s: &str, what: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo = parse_single_usize(lo, what)?;
        let hi = parse_single_usize(hi, what)?;
        if hi < lo {
            return Err(Error::InvalidArgument(format!(
                "{what} range {lo}..{hi} is empty"
            )));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|p| parse_single_usize(p, what)).collect()
}

fn parse_f64_axis(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| match p.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(Error::InvalidArgument(format!(
                "{what} must be positive numbers, got '{p}'"
            ))),
        })
        .collect()
}

fn parse_q(s: &str) -> Result<Option<usize>> {
    if s.trim() == "auto" {
        return Ok(None);
    }
    let v = parse_single_usize(s, "--q")?;
    if v > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "--q must lie in [1, {MAX_ORDER}] or be \"auto\", got {v}"
        )));
    }
    Ok(Some(v))
}

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn format_row(row: &CsvRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        row.param,
        sci(row.report.estimate_total),
        sci(row.effectivity),
        sci(row.report.e_d),
        sci(row.report.e_m),
        sci(row.report.e_k),
        sci(row.exact_err),
        row.report.q,
        row.wallclock_ms
    )
}

fn emit(out: &Option<PathBuf>, csv: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, csv)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Config-file problems: linear systems y' = B y + g(t).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Forcing {
    None,
    /// `g_i(t) = amp_i cos(freq t)`
    Cos {
        amp: Vec<f64>,
        freq: f64,
    },
    /// `g_i(t) = sin_amp_i sin(sin_freq t) + cos_amp_i cos(cos_freq t)`
    SinCos {
        sin_amp: Vec<f64>,
        sin_freq: f64,
        cos_amp: Vec<f64>,
        cos_freq: f64,
    },
}

fn load_config(path: &Path) -> Result<(OdeProblem, Qoi)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses the `key = value` problem format. `#` starts a comment. Keys:
/// `dim`, `B` (row-major), `forcing` (none|cos|sincos) with its
/// `forcing_*` parameters, `y0`, `T`, `psi`, `psi_T`, optional `label`
/// and `bandwidth`.
fn parse_config(text: &str) -> Result<(OdeProblem, Qoi)> {
    let mut map = BTreeMap::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("config line '{line}' is not `key = value`"))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }

    let known = [
        "dim",
        "B",
        "forcing",
        "forcing_amplitude",
        "forcing_frequency",
        "forcing_sin_amplitude",
        "forcing_sin_frequency",
        "forcing_cos_amplitude",
        "forcing_cos_frequency",
        "y0",
        "T",
        "psi",
        "psi_T",
        "label",
        "bandwidth",
    ];
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "unknown config key '{key}'"
            )));
        }
    }

    let require = |key: &str| -> Result<&String> {
        map.get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("config is missing '{key}'")))
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        require(key)?
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("config '{key}' is not a number")))
    };
    let parse_vector = |key: &str, len: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = require(key)?
            .split_whitespace()
            .map(|p| {
                p.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("config '{key}' has a non-number '{p}'"))
                })
            })
            .collect::<Result<_>>()?;
        if v.len() != len {
            return Err(Error::InvalidArgument(format!(
                "config '{key}' needs {len} entries, got {}",
                v.len()
            )));
        }
        Ok(v)
    };

    let dim = require("dim")?
        .parse::<usize>()
        .ok()
        .filter(|&d| d >= 1)
        .ok_or_else(|| {
            Error::InvalidArgument("config 'dim' must be a positive integer".to_string())
        })?;
    let b_flat = parse_vector("B", dim * dim)?;
    let matrix: Vec<Vec<f64>> = (0..dim)
        .map(|i| b_flat[i * dim..(i + 1) * dim].to_vec())
        .collect();
    let y0 = parse_vector("y0", dim)?;
    let t_final = parse_f64("T")?;
    let psi = parse_vector("psi", dim)?;
    let psi_terminal = parse_vector("psi_T", dim)?;
    let label = map
        .get("label")
        .cloned()
        .unwrap_or_else(|| "custom".to_string());

    let forcing = match require("forcing")?.as_str() {
        "none" => Forcing::None,
        "cos" => Forcing::Cos {
            amp: parse_vector("forcing_amplitude", dim)?,
            freq: parse_f64("forcing_frequency")?,
        },
        "sincos" => Forcing::SinCos {
            sin_amp: parse_vector("forcing_sin_amplitude", dim)?,
            sin_freq: parse_f64("forcing_sin_frequency")?,
            cos_amp: parse_vector("forcing_cos_amplitude", dim)?,
            cos_freq: parse_f64("forcing_cos_frequency")?,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "config 'forcing' must be none, cos, or sincos, got '{other}'"
            )))
        }
    };

    let rhs_matrix = matrix.clone();
    let rhs_forcing = forcing.clone();
    let rhs: RhsFn = Arc::new(move |y: &[f64], t: f64| {
        let d = y.len();
        let mut out = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += rhs_matrix[i][j] * y[j];
            }
            out[i] = acc;
        }
        match &rhs_forcing {
            Forcing::None => {}
            Forcing::Cos { amp, freq } => {
                let c = (freq * t).cos();
                for i in 0..d {
                    out[i] += amp[i] * c;
                }
            }
            Forcing::SinCos {
                sin_amp,
                sin_freq,
                cos_amp,
                cos_freq,
            } => {
                let s = (sin_freq * t).sin();
                let c = (cos_freq * t).cos();
                for i in 0..d {
                    out[i] += sin_amp[i] * s + cos_amp[i] * c;
                }
            }
        }
        out
    });
    let jac_matrix = matrix;
    let jacobian: JacFn = Arc::new(move |_: &[f64], _| jac_matrix.clone());

    let mut problem = OdeProblem::new(label, y0, t_final, rhs, jacobian)?;
    if let Some(bw) = map.get("bandwidth") {
        let bw = bw
            .parse::<usize>()
            .ok()
            .filter(|&b| b < dim)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "config 'bandwidth' must be an integer below dim, got '{bw}'"
                ))
            })?;
        problem = problem.with_structure(Structure::Banded(bw));
    }
    Ok((problem, Qoi::constant(psi, psi_terminal)))
}
