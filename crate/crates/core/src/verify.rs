//! Built-in invariant suite at the `desk` resolution.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{DESK_DT, DESK_LENGTH, DESK_POINTS, DESK_T};
use crate::diagnostics::{energy, galilei_drift, momentum, particle_number, record_trajectory, stress_tensor};
use crate::error::{Error, Result};
use crate::evolve::{dual_evolution, linear_propagate, model_current, run, Leg, StepConfig};
use crate::fields::{decompose, Jet};
use crate::gauge::{
    apply_gauge, assemble_transformed_on, bilinear_current, compute_sigma_on, condition_residual_on,
    sigma_of_psi, transformed_nonlinearity_on,
};
use crate::grid::{ComplexField, Grid};
use crate::initial::{modulated, scale_to_particle_number};
use crate::model::{Model, ModelKind};
use crate::varcalc::{check_canonicity_transformed, euler_lagrange, fd_oracle, Target, DEFAULT_FD_EPS};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckResult {
    fn new(id: u32, name: &'static str) -> Self {
        Self {
            id,
            name,
            passed: true,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Records `value` under `key` and fails the check unless `ok`.
    fn metric(&mut self, key: impl Into<String>, value: f64, ok: bool) {
        let key = key.into();
        if !ok {
            self.passed = false;
            self.notes.push(format!("{key} = {value:e} out of tolerance"));
        }
        self.metrics.insert(key, value);
    }

    fn fail(&mut self, what: impl std::fmt::Display) {
        self.passed = false;
        self.notes.push(what.to_string());
    }
}

pub fn desk_grid(dims: usize) -> Grid {
    Grid::new(&vec![DESK_LENGTH; dims], &vec![DESK_POINTS; dims]).expect("desk grid is valid")
}

fn unit(kind: ModelKind) -> Model {
    Model::new(kind, 1.0, 1.0).expect("catalog parameters are finite")
}

/// Catalog members with parameters used throughout the suite.
pub fn reference_models() -> Vec<Model> {
    [
        ModelKind::Free,
        ModelKind::LogDriftCubic {
            beta: 0.2,
            alpha: [2.0 * PI / DESK_LENGTH, 0.0],
        },
        ModelKind::ChenLeeLiu { alpha: 0.5 },
        ModelKind::JackiwAglietti { lambda: 0.5 },
        ModelKind::Eip { kappa: 0.5 },
        ModelKind::DgSub { alpha: 0.05, beta: 0.02 },
        ModelKind::DgGeneral {
            d: 0.05,
            d_prime: 0.5,
            c: [0.1, -0.2, 0.05, 0.1, -0.05],
        },
        ModelKind::DerivFamily { alpha: 0.5, q: 0.0 },
        ModelKind::DerivFamily { alpha: 0.5, q: 0.5 },
        ModelKind::DerivFamily { alpha: 0.5, q: 1.0 },
        ModelKind::Eckhaus { alpha: 0.3, beta: 0.1 },
    ]
    .into_iter()
    .map(unit)
    .collect()
}

/// Nodeless probe whose gauge generator has a secular slope on the momentum
/// lattice of `g`: particle numbers are chosen so that `sigma` winds by one
/// unit, and the momentum-dependent generator of EIP gets a state with zero
/// total momentum.
pub fn lattice_probe(m: &Model, g: &Grid) -> Result<ComplexField> {
    let (h, mass) = (m.hbar(), m.mass());
    let base = |w: i64| modulated(g, 0.5, None, 3.0, &[w]);
    let per_unit_winding = |coeff: f64| 2.0 * PI * h * h / (mass * coeff);
    Ok(match *m.kind() {
        // grad sigma = -m coeff rho / hbar
        ModelKind::ChenLeeLiu { alpha } => scale_to_particle_number(&base(1)?, per_unit_winding(alpha / 2.0))?,
        ModelKind::JackiwAglietti { lambda } => {
            scale_to_particle_number(&base(1)?, per_unit_winding(lambda * h / (2.0 * mass)))?
        }
        ModelKind::DerivFamily { alpha, q } if q != -1.0 => {
            scale_to_particle_number(&base(1)?, per_unit_winding(alpha * (1.0 + q) / 2.0))?
        }
        ModelKind::Eckhaus { alpha, .. } => scale_to_particle_number(&base(1)?, per_unit_winding(alpha))?,
        ModelKind::Eip { .. } => {
            let l = g.lengths()[0];
            ComplexField::from_fn(g, |x| {
                let th = 2.0 * PI * x[0] / l;
                Complex64::from_polar(1.0 + 0.3 * th.cos(), th.cos())
            })
        }
        _ => base(1)?,
    })
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Removes the mean so fields defined up to a uniform constant compare.
fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

pub const DENSITY_GAP_TOL: f64 = 1e-5;
pub const CURRENT_GAP_TOL: f64 = 1e-4;
pub const REFINEMENT_FACTOR: f64 = 3.0;

fn equivalence_models() -> Vec<Model> {
    reference_models()
        .into_iter()
        .filter(|m| {
            matches!(
                m.kind(),
                ModelKind::ChenLeeLiu { .. }
                    | ModelKind::JackiwAglietti { .. }
                    | ModelKind::Eckhaus { .. }
                    | ModelKind::DerivFamily { .. }
                    | ModelKind::Eip { .. }
                    | ModelKind::DgSub { .. }
            )
        })
        .collect()
}

fn label(m: &Model) -> String {
    match *m.kind() {
        ModelKind::DerivFamily { q, .. } => format!("{}(q={q})", m.name()),
        _ => m.name().to_string(),
    }
}

pub fn dual_equivalence(parallel: bool) -> CheckResult {
    let mut c = CheckResult::new(1, "dual-evolution equivalence");
    let g = desk_grid(1);
    for m in equivalence_models() {
        let name = label(&m);
        let outcome = (|| -> Result<[f64; 4]> {
            let psi = lattice_probe(&m, &g)?;
            let rho_min = 1e-8;
            let a = dual_evolution(&psi, &m, DESK_T, StepConfig::new(DESK_DT), 1000, rho_min, parallel)?;
            let b = dual_evolution(&psi, &m, DESK_T, StepConfig::new(DESK_DT / 2.0), 2000, rho_min, parallel)?;
            Ok([a.density_gap, a.current_gap, b.density_gap, b.current_gap])
        })();
        match outcome {
            Ok([d1, j1, d2, j2]) => {
                c.metric(format!("{name}.density_gap"), d1, d1 <= DENSITY_GAP_TOL);
                c.metric(format!("{name}.current_gap"), j1, j1 <= CURRENT_GAP_TOL);
                c.metric(format!("{name}.density_ratio"), d1 / d2, d1 / d2 >= REFINEMENT_FACTOR);
                c.metric(format!("{name}.current_ratio"), j1 / j2, j1 / j2 >= REFINEMENT_FACTOR);
            }
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    c
}

pub const LINEARIZATION_TOL: f64 = 1e-8;

/// Transformed evolution against the exact linear propagator.
pub fn linearization_gap(m: &Model, phi0: &ComplexField, t_final: f64, dt: f64) -> Result<f64> {
    let tr = run(phi0, m, Leg::Transformed, t_final, StepConfig::new(dt), usize::MAX, 0.0)?;
    let exact = linear_propagate(phi0, m.hbar(), m.mass(), t_final);
    Ok(tr
        .last()
        .psi
        .values()
        .iter()
        .zip(exact.values())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm())))
}

pub fn eckhaus_linearization() -> CheckResult {
    let mut c = CheckResult::new(2, "Eckhaus linearization");
    let alpha: f64 = 0.3;
    let m = unit(ModelKind::Eckhaus {
        alpha,
        beta: -alpha * alpha / 2.0,
    });
    let g = desk_grid(1);
    match lattice_probe(&m, &g)
        .and_then(|psi| apply_gauge(&psi, &sigma_of_psi(&m, &psi)?))
        .and_then(|phi| linearization_gap(&m, &phi, DESK_T, DESK_DT))
    {
        Ok(gap) => c.metric("linearization_gap", gap, gap <= LINEARIZATION_TOL),
        Err(e) => c.fail(e),
    }
    c
}

pub const COEFFICIENT_TOL: f64 = 1e-10;

/// Closed-form transformed nonlinearities against direct assembly, modulo the
/// uniform constant the gauge leaves free.
pub fn transformed_coefficients() -> CheckResult {
    let mut c = CheckResult::new(3, "transformed-coefficient regressions");
    let g = desk_grid(1);
    let models = reference_models()
        .into_iter()
        .filter(|m| m.transformed_expr(1).is_some() && !matches!(m.kind(), ModelKind::Free | ModelKind::Eip { .. }));
    for m in models {
        let name = label(&m);
        let r = (|| -> Result<f64> {
            let psi = lattice_probe(&m, &g)?;
            let jet = Jet::from_psi(&psi, m.hbar())?;
            let closed = transformed_nonlinearity_on(&m, &jet)?;
            let assembled = assemble_transformed_on(&m, &jet)?;
            Ok(max_gap(&centered(&closed), &centered(&assembled)) / max_abs(&closed).max(1.0))
        })();
        match r {
            Ok(v) => c.metric(name, v, v <= COEFFICIENT_TOL),
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    c
}

pub const FD_ORACLE_TOL: f64 = 1e-6;

/// Spectral Euler-Lagrange derivatives of every catalog potential against
/// the finite-difference oracle.
pub fn functional_derivatives() -> CheckResult {
    let mut c = CheckResult::new(4, "functional-derivative oracle");
    let g = desk_grid(1);
    for m in reference_models().into_iter().filter(|m| m.is_canonical()) {
        let name = label(&m);
        let r = (|| -> Result<Vec<(&'static str, f64)>> {
            let psi = lattice_probe(&m, &g)?;
            let h = decompose(&psi, 1e-8, m.hbar())?;
            let u = m.potential_expr(1)?;
            let mut out = Vec::new();
            for (slot, target) in [("rho", Target::Rho), ("S", Target::S), ("S_x", Target::DS(0))] {
                let el = euler_lagrange(&u, target, &h)?;
                let fd = fd_oracle(&u, target, &h, DEFAULT_FD_EPS)?;
                let scale = max_abs(el.values()).max(1.0);
                out.push((slot, max_gap(el.values(), fd.values()) / scale));
            }
            Ok(out)
        })();
        match r {
            Ok(v) => v
                .into_iter()
                .for_each(|(slot, d)| c.metric(format!("{name}.{slot}"), d, d <= FD_ORACLE_TOL)),
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    c
}

pub const N_DRIFT_TOL: f64 = 1e-8;
pub const EP_DRIFT_TOL: f64 = 1e-6;

pub fn conservation(workers: usize) -> CheckResult {
    let mut c = CheckResult::new(5, "conservation");
    let g = desk_grid(1);
    let models = reference_models();
    let one = |m: &Model| -> Result<Vec<(String, f64, f64)>> {
        let name = label(m);
        let psi = lattice_probe(m, &g)?;
        let tr = run(&psi, m, Leg::Original, DESK_T, StepConfig::new(DESK_DT), usize::MAX, 1e-8)?;
        let end = &tr.last().psi;
        let (n0, n1) = (particle_number(&psi), particle_number(end));
        let mut out = vec![(format!("{name}.N_drift"), (n1 - n0).abs() / n0, N_DRIFT_TOL)];
        if m.is_canonical() {
            let (e0, e1) = (energy(m, &psi)?, energy(m, end)?);
            out.push((format!("{name}.E_drift"), (e1 - e0).abs() / e0.abs(), EP_DRIFT_TOL));
            let (p0, p1) = (momentum(&psi, m.hbar())?[0], momentum(end, m.hbar())?[0]);
            let scale = p0.abs().max(m.hbar() * n0 * 2.0 * PI / g.lengths()[0]);
            out.push((format!("{name}.P_drift"), (p1 - p0).abs() / scale, EP_DRIFT_TOL));
        }
        Ok(out)
    };
    let mut results: Vec<Result<Vec<(String, f64, f64)>>> = Vec::new();
    if workers >= 2 {
        for chunk in models.chunks(workers) {
            std::thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|m| s.spawn(move || one(m))).collect();
                results.extend(handles.into_iter().map(|h| h.join().expect("conservation run panicked")));
            });
        }
    } else {
        results = models.iter().map(one).collect();
    }
    for (m, r) in models.iter().zip(results) {
        match r {
            Ok(v) => v.into_iter().for_each(|(k, d, tol)| c.metric(k, d, d <= tol)),
            Err(e) => c.fail(format!("{}: {e}", label(m))),
        }
    }
    c
}

pub const CURRENT_REDUCTION_TOL: f64 = 1e-9;

/// `max |j(psi) - J(exp(i sigma/hbar) psi)|` at one instant.
pub fn current_reduction_gap(m: &Model, psi: &ComplexField) -> Result<f64> {
    let phi = apply_gauge(psi, &sigma_of_psi(m, psi)?)?;
    let j = model_current(m, psi)?;
    let big_j = bilinear_current(&phi, m.hbar(), m.mass())?;
    Ok(j.iter()
        .zip(&big_j)
        .map(|(a, b)| max_gap(a.values(), b.values()))
        .fold(0.0, f64::max))
}

pub fn current_reduction() -> CheckResult {
    let mut c = CheckResult::new(6, "current reduction");
    let g = desk_grid(1);
    for m in reference_models() {
        let name = label(&m);
        match lattice_probe(&m, &g).and_then(|psi| current_reduction_gap(&m, &psi)) {
            Ok(v) => c.metric(name, v, v <= CURRENT_REDUCTION_TOL),
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    c
}

pub const GALILEI_ZERO_TOL: f64 = 1e-12;
pub const GALILEI_ORACLE_TOL: f64 = 1e-5;

/// Localized packet on a faint background, so no probability flows through
/// the box boundary while the Galilei generator is differenced.
pub fn localized_packet(g: &Grid) -> ComplexField {
    let l = g.lengths()[0];
    ComplexField::from_fn(g, |x| {
        let env = (-((x[0] - l / 2.0) / 2.0).powi(2)).exp() + 1e-4;
        Complex64::from_polar(env, 2.0 * PI * x[0] / l)
    })
}

/// `dG/dt` at `t = 2 dt` by fourth-order differencing of `G` along a short run.
pub fn differenced_galilei_rate(m: &Model, psi: &ComplexField, dt: f64) -> Result<Vec<f64>> {
    use crate::diagnostics::galilei_generator;
    let tr = run(psi, m, Leg::Original, 4.0 * dt, StepConfig::new(dt), 1, 1e-12)?;
    let gs: Vec<Vec<f64>> = tr
        .samples
        .iter()
        .map(|s| galilei_generator(&s.psi, m.hbar(), m.mass(), s.t))
        .collect::<Result<_>>()?;
    Ok((0..gs[0].len())
        .map(|a| (gs[0][a] - 8.0 * gs[1][a] + 8.0 * gs[3][a] - gs[4][a]) / (12.0 * dt))
        .collect())
}

pub fn galilei() -> CheckResult {
    let mut c = CheckResult::new(7, "Galilei criterion");
    let g = desk_grid(1);
    for m in [unit(ModelKind::Free), unit(ModelKind::DerivFamily { alpha: 0.5, q: -1.0 })] {
        let name = label(&m);
        match lattice_probe(&m, &g).and_then(|psi| galilei_drift(&m, &psi)) {
            Ok(d) => c.metric(format!("{name}.drift"), d[0].abs(), d[0].abs() <= GALILEI_ZERO_TOL),
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    let psi = localized_packet(&g);
    for m in [unit(ModelKind::ChenLeeLiu { alpha: 0.5 }), unit(ModelKind::Eckhaus { alpha: 0.3, beta: 0.1 })] {
        let name = label(&m);
        let dt = 1e-4;
        let r = (|| -> Result<f64> {
            let oracle = differenced_galilei_rate(&m, &psi, dt)?[0];
            let tr = run(&psi, &m, Leg::Original, 2.0 * dt, StepConfig::new(dt), 1, 1e-12)?;
            let drift = galilei_drift(&m, &tr.last().psi)?[0];
            Ok((drift - oracle).abs() / oracle.abs())
        })();
        match r {
            Ok(v) => c.metric(format!("{name}.vs_differenced"), v, v <= GALILEI_ORACLE_TOL),
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    c
}

pub const CURL_TOL: f64 = 1e-10;

/// Nodeless two-dimensional probe with non-parallel density and phase
/// gradients.
pub fn probe_2d(g: &Grid) -> ComplexField {
    let (lx, ly) = (g.lengths()[0], g.lengths()[1]);
    ComplexField::from_fn(g, |x| {
        let r2 = ((x[0] - lx / 2.0) / 4.0).powi(2) + ((x[1] - ly / 2.0) / 3.0).powi(2);
        let amp = 0.6 * (1.0 + 0.5 * (-r2).exp());
        Complex64::from_polar(amp, 2.0 * PI * x[0] / lx + 0.3 * (2.0 * PI * x[1] / ly).sin())
    })
}

pub fn conditions_2d() -> CheckResult {
    let mut c = CheckResult::new(8, "2D integrability conditions");
    let g = desk_grid(2);
    let psi = probe_2d(&g);
    for m in reference_models()
        .into_iter()
        .filter(|m| matches!(m.kind(), ModelKind::DgSub { .. } | ModelKind::DgGeneral { .. }))
    {
        let name = label(&m);
        match Jet::from_psi(&psi, m.hbar()).and_then(|jet| condition_residual_on(&m, &jet)) {
            Ok(r) => c.metric(format!("{name}.curl_residual"), r.residual, r.residual <= CURL_TOL),
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    let eip = unit(ModelKind::Eip { kappa: 0.2 });
    let r = Jet::from_psi(&psi, 1.0).and_then(|jet| {
        let rep = condition_residual_on(&eip, &jet)?;
        Ok((rep.residual, compute_sigma_on(&eip, &jet)))
    });
    match r {
        Ok((res, refused)) => {
            c.metric("eip.rot_residual", res, res > crate::gauge::CONDITION_TOLERANCE);
            if !matches!(refused, Err(Error::ConditionResidual { .. })) {
                c.fail("eip: transform was not refused in 2D");
            }
        }
        Err(e) => c.fail(format!("eip: {e}")),
    }
    c
}

pub fn canonicity() -> CheckResult {
    let mut c = CheckResult::new(9, "canonicity classifier");
    let g = desk_grid(1);
    let cases = [
        (unit(ModelKind::DgSub { alpha: 0.05, beta: 0.02 }), true),
        (unit(ModelKind::DerivFamily { alpha: 0.5, q: 1.0 }), true),
        (unit(ModelKind::ChenLeeLiu { alpha: 0.5 }), false),
    ];
    for (m, expected) in cases {
        let name = label(&m);
        let r = lattice_probe(&m, &g)
            .and_then(|psi| Jet::from_psi(&psi, m.hbar()))
            .and_then(|jet| check_canonicity_transformed(|j| transformed_nonlinearity_on(&m, j), &jet));
        match r {
            Ok(rep) => {
                c.metric(format!("{name}.phase_sensitivity"), rep.max_difference, rep.canonical == expected);
                if m.transformed_is_canonical(1) != Some(expected) {
                    c.fail(format!("{name}: symbolic classification disagrees"));
                }
            }
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    c
}

pub const CHARGE_TOL: f64 = 1e-12;
pub const STRESS_TOL: f64 = 1e-4;

/// Worst stress-continuity residual over the interior of a Chen-Lee-Liu run.
pub fn stress_residual(m: &Model, psi: &ComplexField, t_final: f64, dt: f64, sample_every: usize) -> Result<f64> {
    let tr = run(psi, m, Leg::Original, t_final, StepConfig::new(dt), sample_every, 1e-8)?;
    Ok(record_trajectory(m, &tr)?
        .iter()
        .filter_map(|r| r.stress_continuity_residual)
        .fold(0.0, f64::max))
}

pub fn stress_energy() -> CheckResult {
    let mut c = CheckResult::new(10, "stress-energy tensor");
    let g = desk_grid(1);
    for m in reference_models().into_iter().filter(|m| m.is_canonical()) {
        let name = label(&m);
        let r = (|| -> Result<(f64, f64)> {
            let psi = lattice_probe(&m, &g)?;
            let st = stress_tensor(&m, &psi)?;
            let e = energy(&m, &psi)?;
            let p = momentum(&psi, m.hbar())?[0];
            let de = (g.integrate_slice(st.t00.values()) - e).abs() / e.abs().max(1.0);
            let dp = (g.integrate_slice(st.t0j[0].values()) - p).abs() / p.abs().max(1.0);
            Ok((de, dp))
        })();
        match r {
            Ok((de, dp)) => {
                c.metric(format!("{name}.T00_vs_E"), de, de <= CHARGE_TOL);
                c.metric(format!("{name}.T0x_vs_P"), dp, dp <= CHARGE_TOL);
            }
            Err(e) => c.fail(format!("{name}: {e}")),
        }
    }
    let m = unit(ModelKind::ChenLeeLiu { alpha: 0.5 });
    let r = lattice_probe(&m, &g).and_then(|psi| {
        let coarse = stress_residual(&m, &psi, DESK_T, DESK_DT, 10)?;
        let fine = stress_residual(&m, &psi, DESK_T, DESK_DT / 2.0, 20)?;
        Ok((coarse, fine))
    });
    match r {
        Ok((coarse, fine)) => {
            c.metric("chen_lee_liu.stress_residual", coarse, coarse <= STRESS_TOL);
            c.metric("chen_lee_liu.stress_residual_refined", fine, fine < coarse);
        }
        Err(e) => c.fail(format!("chen_lee_liu: {e}")),
    }
    c
}

/// Runs every check with at most `workers` threads (0 or 1: sequential).
pub fn run_suite(workers: usize) -> Vec<CheckResult> {
    let parallel = workers >= 2;
    vec![
        dual_equivalence(parallel),
        eckhaus_linearization(),
        transformed_coefficients(),
        functional_derivatives(),
        conservation(workers),
        current_reduction(),
        galilei(),
        conditions_2d(),
        canonicity(),
        stress_energy(),
    ]
}
