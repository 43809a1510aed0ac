use std::path::Path;
use std::time::Instant;

use gauge_nlse::config::Which;
use gauge_nlse::diagnostics::{csv_header, record_trajectory, DiagnosticsRecord};
use gauge_nlse::evolve::{dual_evolution, linear_propagate, model_current, run as evolve, Leg, StepConfig, Trajectory};
use gauge_nlse::gauge::{
    apply_gauge, bilinear_current, compute_sigma_on, condition_residual_on, sigma_of_psi, CONDITION_TOLERANCE,
};
use gauge_nlse::snapshot::{decode_all, encode, Snapshot};
use gauge_nlse::varcalc::DEFAULT_FD_EPS;
use gauge_nlse::verify::{desk_grid, lattice_probe, probe_2d, run_suite, FD_ORACLE_TOL};
use gauge_nlse::{
    decompose, euler_lagrange, fd_oracle, ComplexField, Error, Expr, HydroFields, Jet, ModelKind, RunConfig, Target,
};
use serde_json::{json, Map, Value};

use crate::output::{ensure_dir, write_atomic, write_json, CliError, CliResult, EXIT_CHECK_FAILED};

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

fn leg_name(leg: Leg) -> &'static str {
    match leg {
        Leg::Original => "original",
        Leg::Transformed => "transformed",
    }
}

/// Final drifts and worst residuals of one leg.
fn leg_summary(records: &[DiagnosticsRecord]) -> Map<String, Value> {
    let (first, last) = (&records[0], &records[records.len() - 1]);
    let mut s = Map::new();
    s.insert("t_final".into(), json!(last.t));
    s.insert("samples".into(), json!(records.len()));
    s.insert("N_initial".into(), json!(first.n));
    s.insert("N_drift".into(), json!((last.n - first.n).abs() / first.n));
    if let (Some(e0), Some(e1)) = (first.energy, last.energy) {
        s.insert("E_initial".into(), json!(e0));
        s.insert("E_drift".into(), json!((e1 - e0).abs() / e0.abs().max(f64::MIN_POSITIVE)));
    }
    let p_drift: Vec<f64> = first.momentum.iter().zip(&last.momentum).map(|(a, b)| (b - a).abs()).collect();
    s.insert("P_initial".into(), json!(first.momentum));
    s.insert("P_drift".into(), json!(p_drift));
    let worst = |f: &dyn Fn(&DiagnosticsRecord) -> Option<f64>| json!(max_of(records.iter().filter_map(f)));
    s.insert("max_continuity_residual".into(), worst(&|r| r.continuity_residual));
    s.insert(
        "max_ehrenfest_residual".into(),
        worst(&|r| r.ehrenfest_residual.as_ref().and_then(|v| max_of(v.iter().copied()))),
    );
    s.insert("max_stress_continuity_residual".into(), worst(&|r| r.stress_continuity_residual));
    if let Some(d) = &last.galilei_drift_rate {
        s.insert("final_galilei_drift_rate".into(), json!(d));
    }
    s
}

fn csv(records: &[DiagnosticsRecord], dims: usize) -> String {
    let mut out = csv_header(dims);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn snapshots(trajs: &[&Trajectory]) -> String {
    let mut out = String::new();
    for tr in trajs {
        for s in &tr.samples {
            out.push_str(&encode(&Snapshot {
                t: s.t,
                leg: tr.leg,
                psi: s.psi.clone(),
            }));
            out.push('\n');
        }
    }
    out
}

fn meta(started: Instant, workers: usize) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "workers": workers,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    })
}

pub fn run(cfg: &RunConfig, out: &Path, workers: usize) -> CliResult<i32> {
    let started = Instant::now();
    let g = cfg.grid()?;
    let m = cfg.model()?;
    m.check_dims(g.dims())?;
    let ev = cfg.evolution()?;
    let psi0 = cfg.initial_state(&g)?;
    let rho_min = cfg.rho_min_for(&psi0);
    let step = StepConfig {
        dt: ev.dt,
        substeps: ev.substeps,
    };
    let gauged = |psi: &gauge_nlse::ComplexField| -> gauge_nlse::Result<_> { apply_gauge(psi, &sigma_of_psi(&m, psi)?) };

    let mut summary = Map::new();
    let trajs: Vec<Trajectory> = match ev.which {
        Which::Original => vec![evolve(&psi0, &m, Leg::Original, ev.t_final, step, ev.sample_every, rho_min)?],
        Which::Transformed => {
            let phi0 = gauged(&psi0)?;
            vec![evolve(&phi0, &m, Leg::Transformed, ev.t_final, step, ev.sample_every, rho_min)?]
        }
        Which::Both => {
            let r = dual_evolution(&psi0, &m, ev.t_final, step, ev.sample_every, rho_min, workers >= 2)?;
            summary.insert(
                "equivalence".into(),
                json!({"density_gap": r.density_gap, "current_gap": r.current_gap}),
            );
            vec![r.original, r.transformed]
        }
    };

    let mut legs = Map::new();
    let mut tables = Vec::new();
    for tr in &trajs {
        let records = record_trajectory(&m, tr)?;
        let mut s = leg_summary(&records);
        if tr.leg == Leg::Transformed && m.transformed_is_linear() {
            let last = tr.last();
            let exact = linear_propagate(&tr.samples[0].psi, m.hbar(), m.mass(), last.t);
            let gap = last.psi.values().iter().zip(exact.values()).fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
            s.insert("linearization_gap".into(), json!(gap));
        }
        legs.insert(leg_name(tr.leg).into(), Value::Object(s));
        tables.push((tr.leg, records));
    }
    summary.insert("model".into(), json!(m.name()));
    summary.insert("which".into(), json!(ev.which));
    summary.insert("legs".into(), Value::Object(legs));

    ensure_dir(out)?;
    if cfg.outputs.wants("csv") {
        for (i, (leg, records)) in tables.iter().enumerate() {
            let name = if i == 0 {
                "diagnostics.csv".to_string()
            } else {
                format!("diagnostics_{}.csv", leg_name(*leg))
            };
            write_atomic(&out.join(name), csv(records, g.dims()).as_bytes())?;
        }
    }
    if cfg.outputs.wants("jsonl") {
        let refs: Vec<&Trajectory> = trajs.iter().collect();
        write_atomic(&out.join("snapshots.jsonl"), snapshots(&refs).as_bytes())?;
    }
    if cfg.outputs.wants("json") {
        summary.insert("meta".into(), meta(started, workers));
        write_json(&out.join("summary.json"), &Value::Object(summary))?;
    }
    Ok(0)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn load_state(cfg: &RunConfig, snapshot: Option<&Path>, index: usize) -> CliResult<(f64, ComplexField)> {
    let Some(path) = snapshot else {
        let g = cfg.grid()?;
        return Ok((0.0, cfg.initial_state(&g)?));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut snaps = decode_all(&text)?;
    if index >= snaps.len() {
        return Err(CliError::config(format!(
            "snapshot index {index} out of range ({} snapshots)",
            snaps.len()
        )));
    }
    let s = snaps.swap_remove(index);
    if s.leg != Leg::Original {
        return Err(CliError::config("snapshot holds a transformed state; expected the original leg"));
    }
    Ok((s.t, s.psi))
}

pub fn transform(cfg: &RunConfig, out: &Path, snapshot: Option<&Path>, index: usize) -> CliResult<i32> {
    let m = cfg.model()?;
    let (t, psi) = load_state(cfg, snapshot, index)?;
    let dims = psi.grid().dims();
    let jet = Jet::from_psi(&psi, m.hbar())?.with_rho_min(cfg.rho_min_for(&psi));
    if !matches!(m.kind(), ModelKind::Free) {
        jet.require_nodeless()?;
    }
    let condition = if dims == 2 {
        Some(condition_residual_on(&m, &jet)?.residual)
    } else {
        None
    };
    let mut report = Map::new();
    report.insert("model".into(), json!(m.name()));
    report.insert("t".into(), json!(t));
    report.insert("dims".into(), json!(dims));
    report.insert("condition_residual".into(), json!(condition));
    report.insert("condition_tolerance".into(), json!(CONDITION_TOLERANCE));
    ensure_dir(out)?;
    let refused = match compute_sigma_on(&m, &jet) {
        Err(Error::ConditionResidual { .. }) => Err("condition_residual"),
        Err(Error::DimsMismatch { .. }) if condition.is_some() => Err("model_dims"),
        other => Ok(other?),
    };
    let gen = match refused {
        Ok(gen) => gen,
        Err(reason) => {
            report.insert("transform_unavailable".into(), json!(true));
            report.insert("reason".into(), json!(reason));
            write_json(&out.join("transform.json"), &Value::Object(report))?;
            return Ok(0);
        }
    };
    let shift = gen.winding_shift()?;
    let phi = apply_gauge(&psi, &gen)?;
    let density_gap = psi
        .values()
        .iter()
        .zip(phi.values())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a.norm_sqr() - b.norm_sqr()).abs()));
    let j = model_current(&m, &psi)?;
    let big_j = bilinear_current(&phi, m.hbar(), m.mass())?;
    let current_gap = j
        .iter()
        .zip(&big_j)
        .map(|(a, b)| max_gap(a.values(), b.values()))
        .fold(0.0, f64::max);
    report.insert("transform_unavailable".into(), json!(false));
    report.insert(
        "sigma".into(),
        json!({
            "secular_slope": gen.secular_slope,
            "winding": gen.winding(),
            "winding_shift": shift,
            "momentum_compatible": gen.momentum_compatible,
            "periodic_part_max_abs": max_abs(gen.periodic_part.values()),
        }),
    );
    report.insert("density_gap".into(), json!(density_gap));
    report.insert("current_reduction_gap".into(), json!(current_gap));
    write_json(&out.join("transform.json"), &Value::Object(report))?;
    let line = encode(&Snapshot {
        t,
        leg: Leg::Transformed,
        psi: phi,
    });
    write_atomic(&out.join("transformed.jsonl"), format!("{line}\n").as_bytes())?;
    Ok(0)
}

/// Relative gap between spectral and finite-difference functional derivatives.
fn el_vs_fd(u: &Expr, target: Target, h: &HydroFields, weight: &[f64]) -> gauge_nlse::Result<f64> {
    let el = euler_lagrange(u, target, h)?;
    let fd = fd_oracle(u, target, h, DEFAULT_FD_EPS)?;
    let a: Vec<f64> = el.values().iter().zip(weight).map(|(x, w)| x * w).collect();
    let b: Vec<f64> = fd.values().iter().zip(weight).map(|(x, w)| x * w).collect();
    Ok(max_gap(&a, &b) / max_abs(&a).max(1.0))
}

pub fn derive(cfg: &RunConfig, out: &Path) -> CliResult<i32> {
    let m = cfg.model()?;
    let g = match &cfg.grid {
        Some(_) => cfg.grid()?,
        None => desk_grid(m.supported_dims()[0]),
    };
    let dims = g.dims();
    m.check_dims(dims)?;
    let psi = if dims == 1 { lattice_probe(&m, &g)? } else { probe_2d(&g) };
    let jet = Jet::from_psi(&psi, m.hbar())?;
    let h = decompose(&psi, jet.rho_min(), m.hbar())?;

    let mut disc = Map::new();
    let mut worst = 0.0_f64;
    if m.is_canonical() {
        let u = m.potential_expr(dims)?;
        let ones = vec![1.0; g.len()];
        let wcal_weight: Vec<f64> = jet.rho.iter().map(|r| m.hbar() / (2.0 * r)).collect();
        let w = el_vs_fd(&u, Target::Rho, &h, &ones)?;
        let wcal = el_vs_fd(&u, Target::S, &h, &wcal_weight)?;
        let f = (0..dims)
            .map(|a| el_vs_fd(&u, Target::DS(a), &h, &ones))
            .collect::<gauge_nlse::Result<Vec<f64>>>()?;
        worst = f.iter().fold(w.max(wcal), |m, x| m.max(*x));
        disc.insert("W".into(), json!(w));
        disc.insert("Wcal".into(), json!(wcal));
        disc.insert("F".into(), json!(f));
    } else {
        disc.insert("W".into(), Value::Null);
        disc.insert("Wcal".into(), Value::Null);
        disc.insert("F".into(), Value::Null);
    }
    // grad sigma = -m F / rho, checked as rho grad sigma / m + F = 0.
    let gen = m.generator_exprs(dims)?;
    let f = m.current_f_on(&jet)?;
    let mut rel = 0.0_f64;
    for (ga, fa) in gen.iter().zip(&f) {
        let gv = ga.eval(&jet)?;
        let r: Vec<f64> = (0..g.len()).map(|i| jet.rho[i] * gv[i] / m.mass() + fa[i]).collect();
        rel = rel.max(max_abs(&r) / max_abs(fa).max(1.0));
    }
    worst = worst.max(rel);
    disc.insert("generator_relation".into(), json!(rel));

    let passed = worst <= FD_ORACLE_TOL;
    let report = json!({
        "model": m.name(),
        "probe": {"dims": dims, "lengths": g.lengths(), "points": g.points()},
        "discrepancies": disc,
        "tolerance": FD_ORACLE_TOL,
        "passed": passed,
    });
    ensure_dir(out)?;
    write_json(&out.join("derive.json"), &report)?;
    Ok(if passed { 0 } else { EXIT_CHECK_FAILED })
}

pub fn check(out: Option<&Path>, workers: usize) -> CliResult<i32> {
    let results = run_suite(workers);
    for c in &results {
        println!("{} {:>2} {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name);
        for n in &c.notes {
            println!("        {n}");
        }
    }
    let all = results.iter().all(|c| c.passed);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let v = json!({"passed": all, "checks": serde_json::to_value(&results).expect("results serialize")});
        write_json(&dir.join("check.json"), &v)?;
    }
    Ok(if all { 0 } else { EXIT_CHECK_FAILED })
}

pub fn catalog(as_json: bool) -> CliResult<i32> {
    let entries = gauge_nlse::catalog();
    if as_json {
        let v: Vec<Value> = entries
            .iter()
            .map(|e| {
                json!({
                    "kind": e.kind,
                    "params": e.params,
                    "example": e.example,
                    "dims": e.dims,
                    "canonical": e.canonical,
                    "transformed_canonical": e.transformed_canonical,
                    "note": e.note,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&v).expect("catalog serializes"));
        return Ok(0);
    }
    for e in &entries {
        println!("{:<16} example {:<5} dims {:?}", e.kind, e.example, e.dims);
        println!("    params: {}", if e.params.is_empty() { "-".into() } else { e.params.join(", ") });
        println!("    canonical: {}; transformed canonical: {}", e.canonical, e.transformed_canonical);
        if !e.note.is_empty() {
            println!("    {}", e.note);
        }
    }
    Ok(0)
}
