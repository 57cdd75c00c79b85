//! End-to-end acceptance checks for the solver and estimator pipeline.
//!
//! Runs as a plain test binary (`harness = false` in Cargo.toml) so that each
//! numbered item prints one verdict line (`acceptance N: ... PASS` or
//! `... FAIL`) directly into the `cargo test` output. A single run always
//! reports every verdict; the process exits nonzero if any item failed.
//!
//! Gates are pinned against the published study values for these benchmarks
//! (3 printed digits) plus behavioral trends; every tolerance is explicit.

use std::sync::Arc;
use std::time::Instant;

use sdc_adjoint::adapt::{run_adaptive, Action};
use sdc_adjoint::estimator::{effectivity, run_estimate, EstimateRun, RunParams};
use sdc_adjoint::galerkin::reconstruct;
use sdc_adjoint::mesh::{build_mesh, gauss_legendre, gauss_lobatto, lagrange_basis};
use sdc_adjoint::oracle::{exact_qoi_error, harmonic_exact, reference_solve, RefinementProfile};
use sdc_adjoint::problems::{
    harmonic_oscillator, heat_equation, two_body, two_body_gaussian, vinograd, OdeProblem, Qoi,
    RhsFn,
};
use sdc_adjoint::sdc::{solve, SdcMode};

type Verdict = Result<String, String>;

fn report(idx: usize, outcome: &Verdict, failed: &mut Vec<usize>) {
    match outcome {
        Ok(detail) => println!("acceptance {idx}: {detail} ... PASS"),
        Err(reason) => {
            println!("acceptance {idx}: {reason} ... FAIL");
            failed.push(idx);
        }
    }
}

fn grid(
    problem: &OdeProblem,
    qoi: &Qoi,
    configs: &[(usize, usize, usize)],
    mode: SdcMode,
) -> Vec<EstimateRun> {
    configs
        .iter()
        .map(|&(n, m, k)| {
            run_estimate(problem, qoi, &RunParams::new(n, m, k, mode))
                .unwrap_or_else(|e| panic!("estimate N={n} M={m} K={k}: {e}"))
        })
        .collect()
}

fn same_sign(a: f64, b: f64) -> bool {
    a != 0.0 && b != 0.0 && (a > 0.0) == (b > 0.0)
}

/// K-sweep trend: |E_K| decreases monotonically (within factor-2 noise)
/// until it sits >= 100x below max(|E_D|, |E_M|); past that point the
/// total must stagnate within a factor of 3.
fn k_sweep_trend(label: &str, runs: &[EstimateRun]) -> Verdict {
    for (i, w) in runs.windows(2).enumerate() {
        let prev = w[0].report.e_k.abs();
        let cur = w[1].report.e_k.abs();
        if cur > 2.0 * prev {
            return Err(format!(
                "{label}: |E_K| rose {prev:.3e} -> {cur:.3e} at step {}",
                i + 1
            ));
        }
    }
    // The tail is the maximal suffix on which E_K stays >= 100x below the
    // other two: early sweeps can satisfy the ratio transiently while E_D
    // and E_M are still large (and cancelling), so scan from the end.
    let mut t = runs.len();
    while t > 0 {
        let r = &runs[t - 1].report;
        if 100.0 * r.e_k.abs() <= r.e_d.abs().max(r.e_m.abs()) {
            t -= 1;
        } else {
            break;
        }
    }
    if t == runs.len() {
        return Err(format!(
            "{label}: |E_K| never fell 100x below max(|E_D|, |E_M|)"
        ));
    }
    let tail: Vec<f64> = runs[t..]
        .iter()
        .map(|r| r.report.estimate_total.abs())
        .collect();
    let hi = tail.iter().cloned().fold(0.0f64, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi > 3.0 * lo {
        return Err(format!(
            "{label}: total varies {lo:.3e}..{hi:.3e} after E_K convergence"
        ));
    }
    Ok(format!("{label} stagnation ratio {:.2}", hi / lo))
}

fn m_sweep_trend(label: &str, runs: &[EstimateRun]) -> Verdict {
    for (i, w) in runs.windows(2).enumerate() {
        let prev = w[0].report.e_m.abs();
        let cur = w[1].report.e_m.abs();
        if cur >= prev {
            return Err(format!(
                "{label}: |E_M| did not strictly decrease at step {} ({prev:.3e} -> {cur:.3e})",
                i + 1
            ));
        }
    }
    Ok(label.to_string())
}

fn main() {
    let mut failed = Vec::new();

    let (harm, harm_qoi) = harmonic_oscillator();
    let (tb, tb_qoi) = two_body();
    let (tbg, tbg_qoi) = two_body_gaussian();
    let (heat, heat_qoi) = heat_equation(39).expect("heat benchmark");

    // ---- 1: dt-refinement study of the damped driven oscillator --------
    let t0 = Instant::now();
    let table1 = grid(
        &harm,
        &harm_qoi,
        &[(10, 3, 2), (20, 3, 2), (40, 3, 2), (80, 3, 2)],
        SdcMode::Explicit,
    );
    let table1_eff: Vec<f64> = table1
        .iter()
        .map(|run| {
            let (exact, _) = exact_qoi_error(&harm, &harm_qoi, &run.y, None).expect("analytic");
            effectivity(exact, run.report.estimate_total).expect("nondegenerate")
        })
        .collect();
    let c1_elapsed = t0.elapsed().as_secs_f64();
    let c1 = (|| -> Verdict {
        // Reference component values of this study, 3 printed digits:
        // (dt, E_D, E_M, E_K).
        const REF: [(f64, f64, f64, f64); 4] = [
            (0.5, -2.00e-1, 2.42e-1, 8.15e-2),
            (0.25, -3.15e-2, 3.06e-2, 3.11e-3),
            (0.125, -7.14e-3, 6.94e-3, 8.96e-5),
            (0.0625, -1.74e-3, 1.70e-3, -4.56e-5),
        ];
        for (run, &eff) in table1.iter().zip(&table1_eff) {
            let r = &run.report;
            if !(0.95..=1.05).contains(&eff) {
                return Err(format!(
                    "dt={}: effectivity {eff:.4} outside [0.95, 1.05]",
                    r.dt
                ));
            }
            let (_, rd, rm, rk) = REF[table1.iter().position(|x| std::ptr::eq(x, run)).unwrap()];
            for (mine, reference, name) in
                [(r.e_d, rd, "E_D"), (r.e_m, rm, "E_M"), (r.e_k, rk, "E_K")]
            {
                if !same_sign(mine, reference) {
                    return Err(format!(
                        "dt={}: {name} sign {mine:.3e} vs {reference:.3e}",
                        r.dt
                    ));
                }
                if reference.abs() > 1e-3 && (mine - reference).abs() > 0.10 * reference.abs() {
                    return Err(format!(
                        "dt={}: {name} {mine:.3e} vs {reference:.3e} differs by more than 10%",
                        r.dt
                    ));
                }
            }
        }
        if c1_elapsed >= 5.0 {
            return Err(format!("dt study took {c1_elapsed:.1}s (limit 5s)"));
        }
        let effs: Vec<String> = table1_eff.iter().map(|e| format!("{e:.4}")).collect();
        Ok(format!(
            "oscillator dt study (M=3 K=2 explicit): effectivities [{}] in [0.95,1.05], \
             components match reference signs and 10% where >1e-3 ({c1_elapsed:.2}s)",
            effs.join(", ")
        ))
    })();
    report(1, &c1, &mut failed);

    // ---- 2: decomposition identity across every study configuration ----
    let t0 = Instant::now();
    let k_range: Vec<(usize, usize, usize)> = (2..=8).map(|k| (40, 4, k)).collect();
    let t2 = grid(&harm, &harm_qoi, &k_range, SdcMode::Explicit);
    let m_range: Vec<(usize, usize, usize)> = (2..=11).map(|m| (40, m, 1)).collect();
    let t3 = grid(&harm, &harm_qoi, &m_range, SdcMode::Explicit);
    let t5 = grid(
        &tb,
        &tb_qoi,
        &[(10, 3, 2), (20, 3, 2), (40, 3, 2), (80, 3, 2)],
        SdcMode::Explicit,
    );
    let k_range: Vec<(usize, usize, usize)> = (2..=8).map(|k| (20, 3, k)).collect();
    let t6 = grid(&tb, &tb_qoi, &k_range, SdcMode::Explicit);
    let m_range: Vec<(usize, usize, usize)> = (2..=9).map(|m| (20, m, 1)).collect();
    let t7 = grid(&tb, &tb_qoi, &m_range, SdcMode::Explicit);
    let t9 = grid(
        &heat,
        &heat_qoi,
        &[(20, 3, 2), (40, 3, 2), (80, 3, 2), (160, 3, 2)],
        SdcMode::Implicit,
    );
    let k_range: Vec<(usize, usize, usize)> = (2..=8).map(|k| (20, 1, k)).collect();
    let t10 = grid(&heat, &heat_qoi, &k_range, SdcMode::Implicit);
    let m_range: Vec<(usize, usize, usize)> = (2..=8).map(|m| (20, m, 2)).collect();
    let t11 = grid(&heat, &heat_qoi, &m_range, SdcMode::Implicit);
    let c2_elapsed = t0.elapsed().as_secs_f64();
    let c2 = (|| -> Verdict {
        let sets: [(&str, &[EstimateRun]); 9] = [
            ("oscillator dt", &table1),
            ("oscillator K", &t2),
            ("oscillator M", &t3),
            ("two-body dt", &t5),
            ("two-body K", &t6),
            ("two-body M", &t7),
            ("heat dt", &t9),
            ("heat K", &t10),
            ("heat M", &t11),
        ];
        let mut count = 0usize;
        let mut worst = 0.0f64;
        for (label, runs) in sets {
            for run in runs {
                let r = &run.report;
                let defect = ((r.e_d + r.e_m + r.e_k) - r.estimate_total).abs();
                let rel = defect / r.estimate_total.abs();
                worst = worst.max(rel);
                if rel >= 1e-10 {
                    return Err(format!(
                        "{label} (dt={} M={} K={}): |E_D+E_M+E_K - total|/|total| = {rel:.2e}",
                        r.dt, r.subintervals, r.iterations
                    ));
                }
                count += 1;
            }
        }
        if c2_elapsed >= 60.0 {
            return Err(format!("identity sweep took {c2_elapsed:.1}s (limit 60s)"));
        }
        Ok(format!(
            "decomposition identity |E_D+E_M+E_K - total| < 1e-10 relative on all {count} \
             study configurations (worst {worst:.1e}, {c2_elapsed:.2}s)"
        ))
    })();
    report(2, &c2, &mut failed);

    // ---- 3: reconstruction-degree sensitivity (two-body, Gaussian QoI) -
    let t0 = Instant::now();
    let degree_runs: Vec<(usize, f64, f64)> = (1..=4usize)
        .map(|q| {
            let mut params = RunParams::new(64, 7, 8, SdcMode::Explicit);
            params.q = Some(q);
            let run = run_estimate(&tbg, &tbg_qoi, &params).expect("estimate");
            let (exact, _) = exact_qoi_error(&tbg, &tbg_qoi, &run.y, None).expect("analytic");
            let eff = effectivity(exact, run.report.estimate_total).expect("nondegenerate");
            (q, exact, eff)
        })
        .collect();
    let c3_elapsed = t0.elapsed().as_secs_f64();
    let c3 = (|| -> Verdict {
        // Reference exact errors of this study at q = 1..4 (3 printed
        // digits). The estimate is only trustworthy once q reaches the
        // degree the order-selection rule would pick (3 here); below that
        // the reconstruction leaves a residual the estimator misreads.
        const REF_EXACT: [f64; 4] = [-8.83e-6, -9.77e-9, -9.079e-9, -9.079e-9];
        for &(q, exact, _) in &degree_runs {
            let reference = REF_EXACT[q - 1];
            if (exact - reference).abs() > 0.05 * reference.abs() {
                return Err(format!(
                    "q={q}: exact error {exact:.4e} vs reference {reference:.3e} (5%)"
                ));
            }
        }
        for &(q, _, eff) in &degree_runs[2..] {
            if !(0.99..=1.01).contains(&eff) {
                return Err(format!("q={q}: effectivity {eff:.4} outside [0.99, 1.01]"));
            }
        }
        // At q below the selected degree the estimate must be visibly
        // wrong: no better than 1.2% even where cancellation helps it.
        for &(q, _, eff) in &degree_runs[..2] {
            if (eff - 1.0).abs() < 0.012 {
                return Err(format!(
                    "q={q}: effectivity {eff:.4} looks reliable; expected broken"
                ));
            }
        }
        if c3_elapsed >= 30.0 {
            return Err(format!("degree study took {c3_elapsed:.1}s (limit 30s)"));
        }
        let effs: Vec<String> = degree_runs
            .iter()
            .map(|(q, _, e)| format!("q{q}:{e:+.4}"))
            .collect();
        Ok(format!(
            "two-body Gaussian-QoI degree study (N=64 M=7 K=8): exact errors match reference \
             at every q, estimator reliable only from the selected degree up [{}] ({c3_elapsed:.2}s)",
            effs.join(" ")
        ))
    })();
    report(3, &c3, &mut failed);

    // ---- 4: convergence orders of the nodal error and E_D --------------
    let c4 = (|| -> Verdict {
        let nodal: Vec<f64> = table1
            .iter()
            .map(|run| {
                let exact = harmonic_exact(harm.t_final);
                run.sdc
                    .final_state()
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .collect();
        let e_d: Vec<f64> = table1.iter().map(|r| r.report.e_d.abs()).collect();
        let mut detail = Vec::new();
        for (name, errs) in [("nodal", &nodal), ("E_D", &e_d)] {
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                if !(order >= 1.7) {
                    return Err(format!(
                        "{name} error order {order:.2} < 1.7 (errors {errs:?})"
                    ));
                }
                detail.push(format!("{order:.2}"));
            }
        }
        Ok(format!(
            "oscillator explicit M=3 K=2: observed orders across halved steps \
             [nodal {} | E_D {}] all >= 1.7 (min(K,M) = 2 expected)",
            detail[..3].join(" "),
            detail[3..].join(" ")
        ))
    })();
    report(4, &c4, &mut failed);

    // ---- 5: K- and M-sweep trends ---------------------------------------
    let c5 = (|| -> Verdict {
        let mut notes = Vec::new();
        for (label, runs) in [
            ("oscillator K-sweep", &t2),
            ("two-body K-sweep", &t6),
            ("heat K-sweep", &t10),
        ] {
            notes.push(k_sweep_trend(label, runs)?);
        }
        for (label, runs) in [
            ("oscillator M-sweep", &t3),
            ("two-body M-sweep", &t7),
            ("heat M-sweep", &t11),
        ] {
            m_sweep_trend(label, runs)?;
        }
        Ok(format!(
            "|E_K| falls monotonically to >=100x below max(|E_D|,|E_M|) then the total \
             stagnates within 3x ({}); |E_M| strictly decreases in every M-sweep",
            notes.join(", ")
        ))
    })();
    report(5, &c5, &mut failed);

    // ---- 6: adaptive error control --------------------------------------
    let c6 = (|| -> Verdict {
        let trace = run_adaptive(
            &harm,
            &harm_qoi,
            &RunParams::new(10, 2, 1, SdcMode::Explicit),
            1e-4,
            10,
        )
        .map_err(|e| format!("adaptive loop failed: {e}"))?;
        if !trace.complete {
            return Err("adaptive loop hit the step limit".to_string());
        }
        let expected: [(f64, usize, usize, Action); 7] = [
            (0.5, 2, 1, Action::IncreaseK),
            (0.5, 2, 2, Action::IncreaseM),
            (0.5, 3, 2, Action::IncreaseM),
            (0.5, 4, 2, Action::HalveDt),
            (0.25, 4, 2, Action::HalveDt),
            (0.125, 4, 2, Action::HalveDt),
            (0.0625, 4, 2, Action::Done),
        ];
        if trace.rows.len() != expected.len() {
            return Err(format!(
                "trajectory has {} rows, expected 7",
                trace.rows.len()
            ));
        }
        for (row, &(dt, m, k, action)) in trace.rows.iter().zip(&expected) {
            if (row.dt - dt).abs() > 1e-12 || row.subintervals != m || row.iterations != k {
                return Err(format!(
                    "trajectory row (dt={} M={} K={}) expected (dt={dt} M={m} K={k})",
                    row.dt, row.subintervals, row.iterations
                ));
            }
            if row.action != action {
                return Err(format!(
                    "action at (dt={dt} M={m} K={k}) was {} expected {action}",
                    row.action
                ));
            }
        }
        let last = trace.rows.last().unwrap();
        if last.estimate.abs() > 1e-4 {
            return Err(format!(
                "final |estimate| {:.3e} above TOL 1e-4",
                last.estimate.abs()
            ));
        }
        Ok(format!(
            "adaptive loop from (dt=0.5, M=2, K=1) at TOL=1e-4: inc_K, inc_M, inc_M, \
             then halve_dt to completion in {} steps, final estimate {:+.3e}",
            trace.rows.len(),
            last.estimate
        ))
    })();
    report(6, &c6, &mut failed);

    // ---- 7: stiff/implicit correctness and explicit instability --------
    let t0 = Instant::now();
    let c7 = (|| -> Verdict {
        // QoI assumption documented with the heat benchmark: the estimated
        // functional is the spatial average of the solution at the final
        // time (terminal weight 1/d per component, no time integral).
        let profile = RefinementProfile {
            finest_dt: 2.0 / 160.0,
            subintervals: 3,
            iterations: 2,
        };
        let reference = reference_solve(&heat, &heat_qoi, &profile)
            .map_err(|e| format!("reference solve failed: {e}"))?;
        let mut effs = Vec::new();
        for run in &t9 {
            let (exact, _) = exact_qoi_error(&heat, &heat_qoi, &run.y, Some(&reference))
                .map_err(|e| format!("exact error: {e}"))?;
            let eff = effectivity(exact, run.report.estimate_total)
                .map_err(|e| format!("effectivity: {e}"))?;
            if !(0.95..=1.05).contains(&eff) {
                return Err(format!(
                    "dt={}: effectivity {eff:.4} outside [0.95, 1.05]",
                    run.report.dt
                ));
            }
            effs.push(format!("{eff:.4}"));
        }
        let mesh = build_mesh(heat.t_final, 20, 3).expect("mesh");
        let diverged = match solve(&heat, &mesh, 2, SdcMode::Explicit) {
            Ok(sol) => {
                let norm = sol
                    .final_state()
                    .iter()
                    .fold(0.0f64, |a, &v| a.max(v.abs()));
                norm > 1e6 || !norm.is_finite()
            }
            Err(_) => true,
        };
        if !diverged {
            return Err("explicit heat solve at dt=0.1 did not diverge".to_string());
        }
        let elapsed = t0.elapsed().as_secs_f64();
        if elapsed >= 60.0 {
            return Err(format!("stiff study took {elapsed:.1}s (limit 60s)"));
        }
        Ok(format!(
            "heat d=39 implicit M=3 K=2 (QoI: spatial average at final time, reference \
             uncertainty {:.1e}): effectivities [{}] in [0.95,1.05]; explicit dt=0.1 \
             diverges past 1e6 ({elapsed:.2}s)",
            reference.uncertainty,
            effs.join(", ")
        ))
    })();
    report(7, &c7, &mut failed);

    // ---- 8: property suites ---------------------------------------------
    let c8 = (|| -> Verdict {
        // (a) Nodal equivalence: the cG(q) reconstruction reproduces the
        // SDC subnode values bitwise for every q, on all four benchmarks.
        let (vin, _) = vinograd();
        let benches: [(&OdeProblem, usize, usize, usize, SdcMode); 4] = [
            (&harm, 5, 4, 2, SdcMode::Explicit),
            (&vin, 8, 4, 2, SdcMode::Implicit),
            (&tb, 8, 4, 3, SdcMode::Explicit),
            (&heat, 4, 4, 2, SdcMode::Implicit),
        ];
        for (problem, n_int, m_sub, k, mode) in benches {
            let mesh = build_mesh(problem.t_final, n_int, m_sub).expect("mesh");
            let sol = solve(problem, &mesh, k, mode).expect("solve");
            for q in 1..=4usize {
                let (y, _) = reconstruct(&sol, q).expect("reconstruct");
                for n in 0..n_int {
                    for m in 0..=m_sub {
                        let t = mesh.subnodes[n][m];
                        let v = y.eval(t).expect("subnode");
                        for (c, (a, b)) in v.iter().zip(sol.value(n, m)).enumerate() {
                            if a.to_bits() != b.to_bits() {
                                return Err(format!(
                                    "{}: q={q} subnode ({n},{m}) comp {c}: {a:e} != {b:e}",
                                    problem.label
                                ));
                            }
                        }
                    }
                }
            }
        }

        // (b) Galerkin orthogonality: the variational residual of the
        // reconstruction vanishes against the method's test space.
        let mesh = build_mesh(harm.t_final, 4, 3).expect("mesh");
        for mode in [SdcMode::Explicit, SdcMode::Implicit] {
            let sol = solve(&harm, &mesh, 2, mode).expect("solve");
            for q in 2..=4usize {
                let (y, _) = reconstruct(&sol, q).expect("reconstruct");
                let rule = gauss_legendre(8).expect("rule");
                for n in 0..4 {
                    let subnodes = &mesh.subnodes[n];
                    for m in 0..3 {
                        let a = subnodes[m];
                        let h = mesh.lengths[n][m];
                        for p in 0..q {
                            // Test function v(s) = s^p spans P^{q-1}.
                            for c in 0..2 {
                                let mut residual = 0.0;
                                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                                    let s = 0.5 * (x + 1.0);
                                    let t = a + h * s;
                                    let dy = y.deriv(t).expect("interior")[c];
                                    let mut sf = 0.0;
                                    for j in 0..=3 {
                                        sf += lagrange_basis(subnodes, j, t).expect("basis")
                                            * sol.previous_rhs_value(n, j)[c];
                                    }
                                    residual += 0.5 * w * h * (dy - sf) * s.powi(p as i32);
                                }
                                residual -= match mode {
                                    SdcMode::Explicit => {
                                        let jump = sol.rhs_value(n, m)[c]
                                            - sol.previous_rhs_value(n, m)[c];
                                        // v(0) = 0 except for the constant.
                                        if p == 0 {
                                            h * jump
                                        } else {
                                            0.0
                                        }
                                    }
                                    SdcMode::Implicit => {
                                        let jump = sol.rhs_value(n, m + 1)[c]
                                            - sol.previous_rhs_value(n, m + 1)[c];
                                        h * jump // v(1) = 1 for every power
                                    }
                                };
                                if residual.abs() >= 1e-10 {
                                    return Err(format!(
                                        "orthogonality {mode:?} q={q} ({n},{m}) v=s^{p} \
                                         comp {c}: residual {residual:e}"
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }

        // (c) Quadrature exactness: Gauss-Legendre with p points is exact
        // through degree 2p-1, Gauss-Lobatto through 2p-3.
        for p in 1..=8usize {
            let rule = gauss_legendre(p).expect("rule");
            for d in 0..=(2 * p - 1) {
                let num: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&x, &w)| w * x.powi(d as i32))
                    .sum();
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                if (num - exact).abs() >= 1e-13 {
                    return Err(format!("GL({p}) misses degree {d}: {num:e} vs {exact:e}"));
                }
            }
        }
        for p in 2..=8usize {
            let rule = gauss_lobatto(p).expect("rule");
            for d in 0..=(2 * p - 3) {
                let num: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&x, &w)| w * x.powi(d as i32))
                    .sum();
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                if (num - exact).abs() >= 1e-13 {
                    return Err(format!("GLo({p}) misses degree {d}: {num:e} vs {exact:e}"));
                }
            }
        }

        // (d) Linear-problem exactness: with f independent of y the
        // adjoint is represented exactly, so the estimate equals the true
        // QoI error to round-off.
        let rhs: RhsFn = Arc::new(|_, t| vec![3.0 * t * t - t]);
        let jac = Arc::new(|_: &[f64], _| vec![vec![0.0]]);
        let poly = OdeProblem::new("poly", vec![0.5], 1.0, rhs, jac).expect("problem");
        let qoi = Qoi::terminal(vec![1.0]);
        let run = run_estimate(&poly, &qoi, &RunParams::new(4, 1, 2, SdcMode::Explicit))
            .expect("estimate");
        let exact_terminal = 1.0; // y(1) = 0.5 + 1 - 0.5
        let exact_error = exact_terminal - run.y.eval(1.0).expect("eval")[0];
        if exact_error.abs() <= 1e-6 {
            return Err("linear-exactness case degenerated (no error to estimate)".to_string());
        }
        let defect = (run.report.estimate_total - exact_error).abs();
        if defect >= 1e-10 {
            return Err(format!(
                "linear problem estimated to {defect:e}, expected exactness below 1e-10"
            ));
        }

        // (e) Hand-written Jacobians match central finite differences.
        let fd_problems: [&OdeProblem; 5] = [&harm, &vin, &tb, &tbg, &heat];
        for problem in fd_problems {
            let base = problem.y0.clone();
            let mut shifted = base.clone();
            for (i, v) in shifted.iter_mut().enumerate() {
                *v += 0.1 + 0.03 * (i as f64);
            }
            for state in [base, shifted] {
                let t = 0.37 * problem.t_final;
                let jac = problem.jacobian(&state, t);
                for j in 0..problem.dim {
                    let h = 1e-6 * state[j].abs().max(1.0);
                    let mut plus = state.clone();
                    plus[j] += h;
                    let mut minus = state.clone();
                    minus[j] -= h;
                    let fp = problem.rhs(&plus, t);
                    let fm = problem.rhs(&minus, t);
                    for i in 0..problem.dim {
                        let fd = (fp[i] - fm[i]) / (2.0 * h);
                        let scale = jac[i][j].abs().max(1.0);
                        if (jac[i][j] - fd).abs() >= 1e-5 * scale {
                            return Err(format!(
                                "{}: dJ[{i}][{j}] = {:e} vs FD {fd:e}",
                                problem.label, jac[i][j]
                            ));
                        }
                    }
                }
            }
        }

        Ok(
            "properties hold: bitwise nodal equivalence (q=1..4, all benchmarks), \
            Galerkin orthogonality < 1e-10, quadrature exact to rule degree, \
            linear-problem estimate exact < 1e-10, Jacobians match FD < 1e-5"
                .to_string(),
        )
    })();
    report(8, &c8, &mut failed);

    if !failed.is_empty() {
        eprintln!("acceptance criteria failed: {failed:?}");
        std::process::exit(1);
    }
}
