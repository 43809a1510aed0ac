use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gauge-nlse"))
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn exec(args: &[&str], cfg: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(cfg).arg("--out").arg(out).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line on stderr");
    serde_json::from_str(line).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn cll_both() -> Value {
    // N = 2 pi hbar^2 / (m alpha / 2)
    json!({
        "model": {"kind": "chen_lee_liu", "params": {"alpha": 0.5}},
        "grid": {"dims": 1, "lengths": [32.0], "points": [128]},
        "initial": {"type": "modulated", "amplitude": 1.0, "width": 2.0, "carrier_winding": [1],
                    "particle_number": 8.0 * PI},
        "evolution": {"t_final": 0.2, "dt": 0.001, "sample_every": 50, "which": "both"}
    })
}

#[test]
fn free_plane_wave_conserves_charge() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "free.json",
        &json!({
            "model": {"kind": "free"},
            "grid": {"dims": 1, "lengths": [32.0], "points": [64]},
            "initial": {"type": "plane_wave", "amplitude": 1.0, "winding": [2]},
            "evolution": {"t_final": 1.0, "dt": 0.01, "sample_every": 10, "which": "original"}
        }),
    );
    let out = dir.path().join("out");
    let o = exec(&["run"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&out.join("summary.json"));
    let leg = &s["legs"]["original"];
    assert!(num(&leg["N_drift"]) <= 1e-12);
    assert!(num(&leg["E_drift"]) <= 1e-12);
    assert_eq!(num(&leg["N_initial"]), 32.0);
    assert!(out.join("diagnostics.csv").exists());
    let lines = std::fs::read_to_string(out.join("snapshots.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 11);
}

#[test]
fn eckhaus_transformed_leg_is_linear() {
    let dir = TempDir::new().unwrap();
    let alpha: f64 = 0.3;
    let cfg = write_config(
        dir.path(),
        "eck.json",
        &json!({
            "model": {"kind": "eckhaus", "params": {"alpha": alpha, "beta": -alpha * alpha / 2.0}},
            "grid": {"dims": 1, "lengths": [32.0], "points": [128]},
            "initial": {"type": "modulated", "amplitude": 1.0, "width": 2.0, "carrier_winding": [0],
                        "particle_number": 2.0 * PI / alpha},
            "evolution": {"t_final": 1.0, "dt": 0.001, "sample_every": 100, "which": "transformed"}
        }),
    );
    let out = dir.path().join("out");
    let o = exec(&["run"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&out.join("summary.json"));
    assert!(num(&s["legs"]["transformed"]["linearization_gap"]) <= 1e-8);
    assert!(s["legs"].get("original").is_none());
}

#[test]
fn chen_lee_liu_dual_run_reports_equivalence() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cll.json", &cll_both());
    let out = dir.path().join("out");
    let o = exec(&["run"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&out.join("summary.json"));
    assert!(num(&s["equivalence"]["density_gap"]) <= 1e-5);
    assert!(num(&s["equivalence"]["current_gap"]) <= 1e-4);
    assert!(s["legs"]["transformed"].get("linearization_gap").is_none());
    assert!(out.join("diagnostics_transformed.csv").exists());
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,N,E,Px,x_cx,Gx,continuity_residual,"));
    assert_eq!(csv.lines().count(), 1 + 5);
}

#[test]
fn off_lattice_gauge_exits_with_gauge_code() {
    let dir = TempDir::new().unwrap();
    let mut v = cll_both();
    v["initial"]["particle_number"] = json!(20.0);
    let cfg = write_config(dir.path(), "cll.json", &v);
    let o = exec(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(stderr_error(&o)["error"]["kind"], "gauge");
}

#[test]
fn outputs_are_reproducible_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cll.json", &cll_both());
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = bin()
            .env("GAUGE_NLSE_THREADS", threads)
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("1", "a"), run("2", "b"));
    for f in ["diagnostics.csv", "diagnostics_transformed.csv", "snapshots.jsonl"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let strip = |p: &Path| {
        let mut v = read_json(&p.join("summary.json"));
        v.as_object_mut().unwrap().remove("meta");
        v
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn transform_of_snapshot_and_initial_state() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cll.json", &cll_both());
    let run_out = dir.path().join("run");
    assert!(exec(&["run"], &cfg, &run_out).status.success());
    let snaps = run_out.join("snapshots.jsonl");

    let out = dir.path().join("t2");
    let o = bin()
        .args(["transform", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--snapshot")
        .arg(&snaps)
        .args(["--index", "2"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("transform.json"));
    assert_eq!(r["transform_unavailable"], false);
    assert!((num(&r["t"]) - 0.1).abs() < 1e-12);
    assert!(num(&r["density_gap"]) <= 1e-12);
    assert!(num(&r["current_reduction_gap"]) <= 1e-9);
    assert_eq!(r["sigma"]["winding_shift"], json!([-1]));
    assert!(out.join("transformed.jsonl").exists());

    // Index 5 is the first transformed-leg snapshot.
    let o = bin()
        .args(["transform", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("t5"))
        .arg("--snapshot")
        .arg(&snaps)
        .args(["--index", "5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = exec(&["transform"], &cfg, &dir.path().join("t0"));
    assert!(o.status.success());
    let r = read_json(&dir.path().join("t0/transform.json"));
    assert_eq!(num(&r["t"]), 0.0);
}

#[test]
fn free_transform_is_identity() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "free.json",
        &json!({
            "model": {"kind": "free"},
            "grid": {"dims": 1, "lengths": [16.0], "points": [32]},
            "initial": {"type": "gaussian", "amplitude": 1.0, "width": 2.0, "carrier_winding": [1]}
        }),
    );
    let out = dir.path().join("out");
    assert!(exec(&["transform"], &cfg, &out).status.success());
    let r = read_json(&out.join("transform.json"));
    assert_eq!(num(&r["sigma"]["periodic_part_max_abs"]), 0.0);
    assert_eq!(r["sigma"]["winding_shift"], json!([0]));
    assert_eq!(num(&r["density_gap"]), 0.0);
}

#[test]
fn eip_in_two_dimensions_is_refused_with_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "eip.json",
        &json!({
            "model": {"kind": "eip", "params": {"kappa": 0.2}},
            "grid": {"dims": 2, "lengths": [32.0, 32.0], "points": [64, 64]},
            "initial": {"type": "modulated", "amplitude": 1.0, "width": 3.0, "carrier_winding": [1, 1]}
        }),
    );
    let out = dir.path().join("out");
    let o = exec(&["transform"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&out.join("transform.json"));
    assert_eq!(r["transform_unavailable"], true);
    assert_eq!(r["reason"], "condition_residual");
    assert!(num(&r["condition_residual"]) > 1e-3);
    assert!(r.get("sigma").is_none());
}

#[test]
fn dg_sub_in_two_dimensions_passes_curl_condition() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "dgs.json",
        &json!({
            "model": {"kind": "dg_sub", "params": {"alpha": 0.3, "beta": 0.1}},
            "grid": {"dims": 2, "lengths": [32.0, 32.0], "points": [64, 64]},
            "initial": {"type": "modulated", "amplitude": 1.0, "width": 3.0, "carrier_winding": [1, 0]}
        }),
    );
    let out = dir.path().join("out");
    let o = exec(&["transform"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("transform.json"));
    assert_eq!(r["transform_unavailable"], false);
    assert!(num(&r["condition_residual"]) <= 1e-10);
    assert!(num(&r["current_reduction_gap"]) <= 1e-9);
}

#[test]
fn derive_matches_finite_differences() {
    let dir = TempDir::new().unwrap();
    for (name, model) in [
        ("cll", json!({"kind": "chen_lee_liu", "params": {"alpha": 0.5}})),
        ("dgs", json!({"kind": "dg_sub", "params": {"alpha": 0.3, "beta": 0.1}})),
        ("gen", json!({"kind": "generic", "potential": "0.5*rho^2 + 0.1*rho*S_x"})),
    ] {
        let cfg = write_config(dir.path(), &format!("{name}.json"), &json!({ "model": model }));
        let out = dir.path().join(name);
        let o = exec(&["derive"], &cfg, &out);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let r = read_json(&out.join("derive.json"));
        assert_eq!(r["passed"], true, "{name}");
        assert!(num(&r["discrepancies"]["W"]) <= 1e-6, "{name}");
        assert!(num(&r["discrepancies"]["generator_relation"]) <= 1e-6, "{name}");
    }
}

#[test]
fn derive_rejects_bare_phase() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bare.json", &json!({"model": {"kind": "generic", "potential": "rho*S"}}));
    let o = exec(&["derive"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_error(&o)["error"]["code"], 3);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &json!({"model": {"kind": "free"}, "bogus": 1}));
    let o = exec(&["run"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_error(&o);
    assert_eq!(e["error"]["kind"], "config");
    assert!(e["error"]["message"].as_str().unwrap().contains("bogus"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn desk_preset_fills_grid_and_evolution() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "desk.json",
        &json!({
            "model": {"kind": "free"},
            "initial": {"type": "plane_wave", "amplitude": 0.5, "winding": [1]},
            "outputs": {"formats": ["json"]}
        }),
    );
    let out = dir.path().join("out");
    let o = bin().args(["run", "--preset", "desk", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&out.join("summary.json"));
    assert!((num(&s["legs"]["original"]["t_final"]) - 1.0).abs() < 1e-12);
    assert!(!out.join("diagnostics.csv").exists());
    assert!(!out.join("snapshots.jsonl").exists());
}

#[test]
fn catalog_lists_every_kind() {
    let o = bin().args(["catalog", "--json"]).output().unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let kinds: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds.len(), 10);
    for k in ["free", "chen_lee_liu", "eip", "dg_general", "eckhaus", "generic"] {
        assert!(kinds.contains(&k), "{k}");
    }
    let text = bin().arg("catalog").output().unwrap();
    assert!(String::from_utf8_lossy(&text.stdout).contains("jackiw_aglietti"));
}

#[test]
fn check_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("check");
    let o = bin().arg("check").arg("--out").arg(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 10);
    let r = read_json(&out.join("check.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["checks"].as_array().unwrap().len(), 10);
}
