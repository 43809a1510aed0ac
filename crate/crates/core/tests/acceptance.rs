//! Acceptance run: one PASS/FAIL line per criterion at the desk preset.
//!
//! Every oracle here is computed on the test side: derivatives come from a
//! direct O(n^2) discrete Fourier transform, the original and transformed
//! equations are written out term by term, and time derivatives come from
//! finite differences along the flow.

use std::f64::consts::PI;
use std::process::ExitCode;

use gauge_nlse::diagnostics::{galilei_drift, stress_tensor};
use gauge_nlse::gauge::{compute_sigma_on, condition_residual_on, sigma_of_psi, transformed_nonlinearity_on};
use gauge_nlse::varcalc::{check_canonicity_transformed, DEFAULT_FD_EPS};
use gauge_nlse::{
    apply_gauge, decompose, euler_lagrange, fd_oracle, model_current, potential_density, run,
    ComplexField, Error, GaugeGenerator, Grid, Jet, Leg, Model, ModelKind, StepConfig, Target,
};
use num_complex::Complex64 as C;

const L: f64 = 32.0;
const N: usize = 256;
const DT: f64 = 1e-3;
const T: f64 = 1.0;

type Res<T> = Result<T, String>;

fn e(err: Error) -> String {
    err.to_string()
}

// ---------------------------------------------------------------- spectral

/// Naive DFT on a periodic interval of length `l`.
struct Dft {
    n: usize,
    l: f64,
    tw: Vec<C>,
}

impl Dft {
    fn new(n: usize, l: f64) -> Self {
        let tw = (0..n).map(|j| C::from_polar(1.0, -2.0 * PI * j as f64 / n as f64)).collect();
        Self { n, l, tw }
    }

    fn transform(&self, v: &[C], inverse: bool) -> Vec<C> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = C::new(0.0, 0.0);
                for (j, x) in v.iter().enumerate() {
                    let w = self.tw[(k * j) % n];
                    acc += x * if inverse { w.conj() } else { w };
                }
                if inverse {
                    acc / n as f64
                } else {
                    acc
                }
            })
            .collect()
    }

    fn k(&self, idx: usize) -> f64 {
        let s = if idx <= self.n / 2 { idx as f64 } else { idx as f64 - self.n as f64 };
        2.0 * PI * s / self.l
    }

    fn d(&self, v: &[C], order: u32) -> Vec<C> {
        let mut hat = self.transform(v, false);
        for (idx, h) in hat.iter_mut().enumerate() {
            if order % 2 == 1 && 2 * idx == self.n {
                *h = C::new(0.0, 0.0);
            } else {
                *h *= C::new(0.0, self.k(idx)).powu(order);
            }
        }
        self.transform(&hat, true)
    }

    fn dr(&self, v: &[f64], order: u32) -> Vec<f64> {
        let c: Vec<C> = v.iter().map(|x| C::new(*x, 0.0)).collect();
        self.d(&c, order).into_iter().map(|z| z.re).collect()
    }

    /// Exact free propagation over `t` for unit hbar and mass.
    fn free_flow(&self, v: &[C], t: f64) -> Vec<C> {
        let mut hat = self.transform(v, false);
        for (idx, h) in hat.iter_mut().enumerate() {
            let k = self.k(idx);
            *h *= C::from_polar(1.0, -0.5 * k * k * t);
        }
        self.transform(&hat, true)
    }
}

/// Derivative along one axis of an x-fastest `nx * ny` array.
fn d2(dft: &Dft, v: &[f64], nx: usize, ny: usize, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    if axis == 0 {
        for iy in 0..ny {
            let line = &v[iy * nx..(iy + 1) * nx];
            out[iy * nx..(iy + 1) * nx].copy_from_slice(&dft.dr(line, 1));
        }
    } else {
        for ix in 0..nx {
            let line: Vec<f64> = (0..ny).map(|iy| v[iy * nx + ix]).collect();
            for (iy, x) in dft.dr(&line, 1).into_iter().enumerate() {
                out[iy * nx + ix] = x;
            }
        }
    }
    out
}

// ---------------------------------------------------------------- helpers

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

fn unit(kind: ModelKind) -> Model {
    Model::new(kind, 1.0, 1.0).expect("finite parameters")
}

fn grid1() -> Grid {
    Grid::new_1d(L, N).unwrap()
}

fn xs() -> Vec<f64> {
    (0..N).map(|j| j as f64 * L / N as f64).collect()
}

fn field(v: Vec<C>) -> ComplexField {
    ComplexField::new(&grid1(), v).unwrap()
}

/// Local hydrodynamic data read straight off the wavefunction.
struct Hydro {
    rho: Vec<f64>,
    rho_x: Vec<f64>,
    rho_xx: Vec<f64>,
    s_x: Vec<f64>,
    s_xx: Vec<f64>,
}

fn hydro(dft: &Dft, psi: &[C]) -> Hydro {
    let d1 = dft.d(psi, 1);
    let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let s_x: Vec<f64> = (0..psi.len()).map(|j| (psi[j].conj() * d1[j]).im / rho[j]).collect();
    Hydro {
        rho_x: dft.dr(&rho, 1),
        rho_xx: dft.dr(&rho, 2),
        s_xx: dft.dr(&s_x, 1),
        rho,
        s_x,
    }
}

// ---------------------------------------------------------------- models

/// Catalog members exercised below, with `coeff` in `grad sigma = -coeff rho`
/// for the density-proportional generators.
fn catalog() -> Vec<(&'static str, Model, Option<f64>)> {
    vec![
        ("free", unit(ModelKind::Free), None),
        ("log_drift_cubic", unit(ModelKind::LogDriftCubic { beta: 0.2, alpha: [2.0 * PI / L, 0.0] }), None),
        ("chen_lee_liu", unit(ModelKind::ChenLeeLiu { alpha: 0.5 }), Some(0.25)),
        ("jackiw_aglietti", unit(ModelKind::JackiwAglietti { lambda: 0.5 }), Some(0.25)),
        ("eip", unit(ModelKind::Eip { kappa: 0.5 }), None),
        ("dg_sub", unit(ModelKind::DgSub { alpha: 0.05, beta: 0.02 }), None),
        (
            "dg_general",
            unit(ModelKind::DgGeneral { d: 0.05, d_prime: 0.5, c: [0.1, -0.2, 0.05, 0.1, -0.05] }),
            None,
        ),
        ("deriv_family(q=0)", unit(ModelKind::DerivFamily { alpha: 0.5, q: 0.0 }), Some(0.25)),
        ("deriv_family(q=0.5)", unit(ModelKind::DerivFamily { alpha: 0.5, q: 0.5 }), Some(0.375)),
        ("deriv_family(q=1)", unit(ModelKind::DerivFamily { alpha: 0.5, q: 1.0 }), Some(0.5)),
        ("eckhaus", unit(ModelKind::Eckhaus { alpha: 0.3, beta: 0.1 }), Some(0.3)),
    ]
}

/// Smooth nodeless state. With `coeff` set, the particle number is
/// `2 pi / coeff` so that `sigma` winds exactly once around the box.
fn probe(name: &str, coeff: Option<f64>) -> Vec<C> {
    let x = xs();
    if name == "eip" {
        return x
            .iter()
            .map(|&x| {
                let th = 2.0 * PI * x / L;
                C::from_polar(1.0 + 0.3 * th.cos(), th.cos())
            })
            .collect();
    }
    let mut v: Vec<C> = x
        .iter()
        .map(|&x| {
            let env = 1.0 + 0.5 * (-((x - L / 2.0) / 3.0).powi(2)).exp();
            C::from_polar(0.5 * env, 2.0 * PI * x / L)
        })
        .collect();
    if let Some(c) = coeff {
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * L / N as f64;
        let s = (2.0 * PI / c / n).sqrt();
        v.iter_mut().for_each(|z| *z *= s);
    }
    v
}

fn dg_invariants(h: &Hydro, j_over_rho: &[f64], dft: &Dft) -> [Vec<f64>; 5] {
    let n = h.rho.len();
    let j: Vec<f64> = (0..n).map(|i| j_over_rho[i] * h.rho[i]).collect();
    let dj = dft.dr(&j, 1);
    [
        (0..n).map(|i| dj[i] / h.rho[i]).collect(),
        (0..n).map(|i| h.rho_xx[i] / h.rho[i]).collect(),
        (0..n).map(|i| j_over_rho[i] * j_over_rho[i]).collect(),
        (0..n).map(|i| j_over_rho[i] * h.rho_x[i] / h.rho[i]).collect(),
        (0..n).map(|i| (h.rho_x[i] / h.rho[i]).powi(2)).collect(),
    ]
}

/// Complex nonlinearity `W + i Wcal` of the original equation, unit hbar and mass.
fn original_v(m: &Model, psi: &[C], dft: &Dft) -> Vec<C> {
    let h = hydro(dft, psi);
    let n = psi.len();
    let d1 = dft.d(psi, 1);
    let inv = dg_invariants(&h, &h.s_x, dft);
    (0..n)
        .map(|i| {
            let (r, rx, rxx, sx, sxx) = (h.rho[i], h.rho_x[i], h.rho_xx[i], h.s_x[i], h.s_xx[i]);
            match *m.kind() {
                ModelKind::Free => C::new(0.0, 0.0),
                ModelKind::LogDriftCubic { beta, alpha } => C::new(beta * r - alpha[0] * sx, 0.5 * alpha[0] * rx / r),
                ModelKind::ChenLeeLiu { alpha } => C::new(-alpha * sx * r, 0.5 * alpha * rx),
                // cubic coefficient fixed by the potential lambda^2 rho^3 / 8 - lambda S_x rho^2 / 2
                ModelKind::JackiwAglietti { lambda } => {
                    C::new(-lambda * (sx - 3.0 * lambda * r / 8.0) * r, 0.5 * lambda * rx)
                }
                ModelKind::Eip { kappa } => {
                    C::new(kappa * r * sx * sx, -0.5 * kappa / r * (2.0 * r * rx * sx + r * r * sxx))
                }
                ModelKind::DgSub { alpha, beta } => C::new(
                    alpha * sxx - 2.0 * beta * (rxx / r - 0.5 * (rx / r).powi(2)),
                    0.5 * alpha * rxx / r,
                ),
                ModelKind::DgGeneral { d, d_prime, c } => {
                    let w: f64 = (0..5).map(|k| c[k] * inv[k][i]).sum::<f64>() * d_prime;
                    C::new(w, 0.5 * d * inv[1][i])
                }
                ModelKind::DerivFamily { alpha, q } => {
                    C::new(0.0, alpha) * (psi[i].conj() * d1[i] + q * psi[i] * d1[i].conj())
                }
                ModelKind::Eckhaus { alpha, beta } => C::new(beta * r * r, alpha * rx),
                ModelKind::Generic { .. } => unreachable!("not in the acceptance catalog"),
            }
        })
        .collect()
}

/// `psi_t` from the original equation.
fn psi_t(m: &Model, psi: &[C], dft: &Dft) -> Vec<C> {
    let v = original_v(m, psi, dft);
    let dd = dft.d(psi, 2);
    (0..psi.len()).map(|i| C::new(0.0, -1.0) * (-0.5 * dd[i] + v[i] * psi[i])).collect()
}

/// Full generator values, secular ramp included.
fn sigma_values(g: &GaugeGenerator) -> Vec<f64> {
    let x = xs();
    g.periodic_part.values().iter().zip(&x).map(|(p, x)| p + g.secular_slope[0] * x).collect()
}

fn bilinear_j(dft: &Dft, phi: &[C]) -> Vec<f64> {
    let d1 = dft.d(phi, 1);
    phi.iter().zip(&d1).map(|(p, d)| (p.conj() * d).im).collect()
}

fn number(psi: &[C]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * L / N as f64
}

fn momentum(dft: &Dft, psi: &[C]) -> f64 {
    bilinear_j(dft, psi).iter().sum::<f64>() * L / N as f64
}

fn energy(dft: &Dft, m: &Model, psi: &[C]) -> Res<f64> {
    let d1 = dft.d(psi, 1);
    let f = field(psi.to_vec());
    let u = potential_density(m, &decompose(&f, 1e-12, 1.0).map_err(e)?).map_err(e)?;
    Ok((0..psi.len()).map(|i| 0.5 * d1[i].norm_sqr() + u.values()[i]).sum::<f64>() * L / N as f64)
}

fn fd4(f: impl Fn(f64) -> Res<f64>, eps: f64) -> Res<f64> {
    Ok((f(-2.0 * eps)? - 8.0 * f(-eps)? + 8.0 * f(eps)? - f(2.0 * eps)?) / (12.0 * eps))
}

fn fd4_vec(f: impl Fn(f64) -> Res<Vec<f64>>, eps: f64) -> Res<Vec<f64>> {
    let (a, b, c, d) = (f(-2.0 * eps)?, f(-eps)?, f(eps)?, f(2.0 * eps)?);
    Ok((0..a.len()).map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * eps)).collect())
}

struct Verdict {
    pass: bool,
    detail: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { pass: true, detail: Vec::new() }
    }

    fn metric(&mut self, label: impl Into<String>, value: f64, ok: bool) {
        self.pass &= ok;
        self.detail.push(format!("{} = {value:.3e}{}", label.into(), if ok { "" } else { " (!)" }));
    }
}

// ---------------------------------------------------------------- 1

fn dual_equivalence() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let wanted = [
        "chen_lee_liu",
        "jackiw_aglietti",
        "eckhaus",
        "deriv_family(q=0)",
        "deriv_family(q=0.5)",
        "deriv_family(q=1)",
        "eip",
        "dg_sub",
    ];
    let mut v = Verdict::new();
    for (name, m, coeff) in catalog().into_iter().filter(|(n, ..)| wanted.contains(n)) {
        let psi0 = field(probe(name, coeff));
        let phi0 = apply_gauge(&psi0, &sigma_of_psi(&m, &psi0).map_err(e)?).map_err(e)?;
        let mut gaps = Vec::new();
        for dt in [DT, DT / 2.0] {
            let every = (0.25 / dt).round() as usize;
            let o = run(&psi0, &m, Leg::Original, T, StepConfig::new(dt), every, 0.0).map_err(e)?;
            let t = run(&phi0, &m, Leg::Transformed, T, StepConfig::new(dt), every, 0.0).map_err(e)?;
            let (mut dg, mut cg) = (0.0_f64, 0.0_f64);
            for (a, b) in o.samples.iter().zip(&t.samples) {
                let (pa, pb) = (a.psi.values(), b.psi.values());
                for i in 0..N {
                    dg = dg.max((pa[i].norm_sqr() - pb[i].norm_sqr()).abs());
                }
                let j = model_current(&m, &a.psi).map_err(e)?;
                cg = cg.max(max_gap(j[0].values(), &bilinear_j(&dft, pb)));
            }
            gaps.push((dg, cg));
        }
        let (rd, rc) = (gaps[0].0 / gaps[1].0, gaps[0].1 / gaps[1].1);
        v.metric(format!("{name} density"), gaps[0].0, gaps[0].0 <= 1e-5);
        v.metric(format!("{name} current"), gaps[0].1, gaps[0].1 <= 1e-4);
        v.metric(format!("{name} density ratio"), rd, rd >= 3.0);
        v.metric(format!("{name} current ratio"), rc, rc >= 3.0);
    }
    Ok(v)
}

// ---------------------------------------------------------------- 2

fn eckhaus_linearization() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let alpha: f64 = 0.3;
    let m = unit(ModelKind::Eckhaus { alpha, beta: -alpha * alpha / 2.0 });
    let psi0 = field(probe("eckhaus", Some(alpha)));
    let phi0 = apply_gauge(&psi0, &sigma_of_psi(&m, &psi0).map_err(e)?).map_err(e)?;
    let tr = run(&phi0, &m, Leg::Transformed, T, StepConfig::new(DT), usize::MAX, 0.0).map_err(e)?;
    let exact = dft.free_flow(phi0.values(), T);
    let gap = tr.last().psi.values().iter().zip(&exact).fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
    let mut v = Verdict::new();
    v.metric("L-inf gap to exact free flow", gap, gap <= 1e-8);
    Ok(v)
}

// ---------------------------------------------------------------- 3

/// `W~` read off the transformed equation: `phi = exp(i sigma) psi` with
/// `sigma_t` differenced along `psi_t`. Returns the real part, the worst
/// imaginary residue and `phi`.
fn transformed_from_flow(m: &Model, psi: &[C], dft: &Dft) -> Res<(Vec<f64>, f64, Vec<C>)> {
    let pt = psi_t(m, psi, dft);
    let sigma_at = |s: f64| -> Res<Vec<f64>> {
        let p: Vec<C> = psi.iter().zip(&pt).map(|(a, b)| a + s * b).collect();
        Ok(sigma_values(&sigma_of_psi(m, &field(p)).map_err(e)?))
    };
    let sigma_t = fd4_vec(sigma_at, 1e-3)?;
    let s0 = sigma_at(0.0)?;
    let phi: Vec<C> = psi.iter().zip(&s0).map(|(p, s)| p * C::from_polar(1.0, *s)).collect();
    let phi_t: Vec<C> = (0..N)
        .map(|i| C::from_polar(1.0, s0[i]) * (pt[i] + C::new(0.0, sigma_t[i]) * psi[i]))
        .collect();
    let phi_xx = dft.d(&phi, 2);
    let wt: Vec<C> = (0..N).map(|i| (C::new(0.0, 1.0) * phi_t[i] + 0.5 * phi_xx[i]) / phi[i]).collect();
    let re = wt.iter().map(|z| z.re).collect();
    let im = wt.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    Ok((re, im, phi))
}

/// Coefficients of `R_1..R_5` after the transformation (unit hbar, mass).
fn dg_tilde(d: f64, d_prime: f64, c: [f64; 5]) -> [f64; 5] {
    let k = d_prime;
    [
        k * c[0] - d,
        k * (c[1] + d * c[0]),
        k * c[2],
        k * (c[3] + 2.0 * d * c[2]) + d,
        k * (c[4] + d * c[3] + d * d * c[2]) + 0.5 * d * d,
    ]
}

/// Closed-form transformed nonlinearities on the gauged state.
fn closed_form(m: &Model, phi: &[C], dft: &Dft) -> Vec<f64> {
    let h = hydro(dft, phi);
    let log_xx = {
        let lr: Vec<f64> = h.rho.iter().map(|r| r.ln()).collect();
        dft.dr(&lr, 2)
    };
    let inv = dg_invariants(&h, &h.s_x, dft);
    (0..phi.len())
        .map(|i| {
            let (r, rx, rxx, sx) = (h.rho[i], h.rho_x[i], h.rho_xx[i], h.s_x[i]);
            match *m.kind() {
                ModelKind::Free => 0.0,
                ModelKind::LogDriftCubic { beta, alpha } => beta * r + 0.5 * alpha[0] * alpha[0],
                ModelKind::ChenLeeLiu { alpha } => -alpha * (sx + 3.0 * alpha / 8.0 * r) * r,
                ModelKind::JackiwAglietti { lambda } => -lambda * sx * r,
                ModelKind::Eip { kappa } => kappa * r / (1.0 + kappa * r) * sx * sx - 0.25 * kappa * r * log_xx[i],
                ModelKind::DgSub { alpha, beta } => {
                    let gamma = alpha * alpha - 2.0 * beta;
                    gamma * (rxx / r - 0.5 * (rx / r).powi(2))
                }
                ModelKind::DgGeneral { d, d_prime, c } => {
                    let ct = dg_tilde(d, d_prime, c);
                    (0..5).map(|k| ct[k] * inv[k][i]).sum()
                }
                ModelKind::DerivFamily { alpha, q } => {
                    -alpha * ((1.0 - q) * sx + alpha / 8.0 * (3.0 - 2.0 * q - 5.0 * q * q) * r) * r
                }
                ModelKind::Eckhaus { alpha, beta } => (0.5 * alpha * alpha + beta) * r * r,
                ModelKind::Generic { .. } => unreachable!("not in the acceptance catalog"),
            }
        })
        .collect()
}

fn transformed_coefficients() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let mut v = Verdict::new();
    for (name, m, coeff) in catalog() {
        let psi = probe(name, coeff);
        let (flow, im, phi) = transformed_from_flow(&m, &psi, &dft)?;
        let closed = closed_form(&m, &phi, &dft);
        let scale = max_abs(&closed).max(1.0);
        let gap = max_gap(&centered(&flow), &centered(&closed)) / scale;
        v.metric(format!("{name} flow vs closed form"), gap, gap <= 1e-10);
        v.metric(format!("{name} imaginary residue"), im / scale, im / scale <= 1e-10);
        let jet = Jet::from_psi(&field(phi.clone()), 1.0).map_err(e)?;
        let lib = transformed_nonlinearity_on(&m, &jet).map_err(e)?;
        let gap = max_gap(&centered(&lib), &centered(&closed)) / scale;
        v.metric(format!("{name} library vs closed form"), gap, gap <= 1e-10);
    }
    // The general map must reduce to the sub-class display: with D = alpha,
    // D' c1 = -D' c4 = alpha, c3 = 0, D' c2 = -2 D' c5 = -2 beta.
    let (alpha, beta, dp) = (0.05, 0.02, 0.5);
    let c = [alpha / dp, -2.0 * beta / dp, 0.0, -alpha / dp, beta / dp];
    let ct = dg_tilde(alpha, dp, c);
    let gamma = alpha * alpha - 2.0 * beta;
    let want = [0.0, gamma, 0.0, 0.0, -0.5 * gamma];
    let red = ct.iter().zip(&want).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    v.metric("general map reduced to sub-class", red, red <= 1e-15);
    Ok(v)
}

// ---------------------------------------------------------------- 4

fn functional_derivatives() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let dx = L / N as f64;
    let x = xs();
    let eta: Vec<f64> = x.iter().map(|x| 0.2 * (4.0 * PI * x / L).cos() + 0.1 * (2.0 * PI * x / L).sin()).collect();
    let zeta: Vec<f64> = x.iter().map(|x| 0.3 * (2.0 * PI * x / L).sin() + 0.2 * (4.0 * PI * x / L).cos()).collect();
    let mut v = Verdict::new();
    for (name, m, coeff) in catalog().into_iter().filter(|(_, m, _)| m.is_canonical()) {
        if matches!(m.kind(), ModelKind::Free) {
            continue;
        }
        let psi = probe(name, coeff);
        let f = field(psi.clone());
        let h = decompose(&f, 1e-12, 1.0).map_err(e)?;
        let u = m.potential_expr(1).map_err(e)?;
        let action = |p: Vec<C>| -> Res<f64> {
            let h = decompose(&field(p), 1e-12, 1.0).map_err(e)?;
            Ok(potential_density(&m, &h).map_err(e)?.values().iter().sum::<f64>() * dx)
        };

        let el_rho = euler_lagrange(&u, Target::Rho, &h).map_err(e)?;
        let rho_dir = fd4(
            |s| action(psi.iter().zip(&eta).map(|(p, y)| p * (1.0 + s * y).sqrt()).collect()),
            1e-4,
        )?;
        // d rho = rho eta along this direction
        let paired: Vec<f64> = (0..N).map(|i| el_rho.values()[i] * h.rho.values()[i] * eta[i]).collect();
        let rel = (rho_dir - paired.iter().sum::<f64>() * dx).abs() / (max_abs(&paired) * L).max(1e-300);
        v.metric(format!("{name} delta/delta rho (directional)"), rel, rel <= 1e-6);

        let el_s = euler_lagrange(&u, Target::S, &h).map_err(e)?;
        let s_dir = fd4(
            |s| action(psi.iter().zip(&zeta).map(|(p, z)| p * C::from_polar(1.0, s * z)).collect()),
            1e-4,
        )?;
        let paired: Vec<f64> = (0..N).map(|i| el_s.values()[i] * zeta[i]).collect();
        let rel = (s_dir - paired.iter().sum::<f64>() * dx).abs() / (max_abs(&paired) * L).max(1e-12);
        v.metric(format!("{name} delta/delta S (directional)"), rel, rel <= 1e-6);

        // grad S slot against the S slot: dU/dS = -d_x (dU/dS_x)
        let el_ds = euler_lagrange(&u, Target::DS(0), &h).map_err(e)?;
        let div: Vec<f64> = dft.dr(el_ds.values(), 1).into_iter().map(|x| -x).collect();
        let rel = max_gap(&div, el_s.values()) / max_abs(el_s.values()).max(1.0);
        v.metric(format!("{name} grad S slot"), rel, rel <= 1e-6);

        for (slot, target) in [("rho", Target::Rho), ("S", Target::S), ("S_x", Target::DS(0))] {
            let el = euler_lagrange(&u, target, &h).map_err(e)?;
            let fd = fd_oracle(&u, target, &h, DEFAULT_FD_EPS).map_err(e)?;
            let rel = max_gap(el.values(), fd.values()) / max_abs(el.values()).max(1.0);
            v.metric(format!("{name} {slot} vs fd_oracle"), rel, rel <= 1e-6);
        }

        // generator: rho sigma_x / m = -F = dU/dS_x
        let gen = sigma_of_psi(&m, &f).map_err(e)?;
        let sx: Vec<f64> = dft.dr(gen.periodic_part.values(), 1).iter().map(|d| d + gen.secular_slope[0]).collect();
        let lhs: Vec<f64> = (0..N).map(|i| h.rho.values()[i] * sx[i]).collect();
        let rel = max_gap(&lhs, el_ds.values()) / max_abs(el_ds.values()).max(1.0);
        v.metric(format!("{name} generator relation"), rel, rel <= 1e-6);
    }
    Ok(v)
}

// ---------------------------------------------------------------- 5

fn conservation() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let mut v = Verdict::new();
    for (name, m, coeff) in catalog() {
        let psi0 = field(probe(name, coeff));
        let tr = run(&psi0, &m, Leg::Original, T, StepConfig::new(DT), usize::MAX, 0.0).map_err(e)?;
        let (a, b) = (psi0.values(), tr.last().psi.values());
        let (n0, n1) = (number(a), number(b));
        let dn = (n1 - n0).abs() / n0;
        v.metric(format!("{name} N"), dn, dn <= 1e-8);
        if m.is_canonical() {
            let (e0, e1) = (energy(&dft, &m, a)?, energy(&dft, &m, b)?);
            let de = (e1 - e0).abs() / e0.abs();
            v.metric(format!("{name} E"), de, de <= 1e-6);
            let (p0, p1) = (momentum(&dft, a), momentum(&dft, b));
            let dp = (p1 - p0).abs() / p0.abs().max(n0 * 2.0 * PI / L);
            v.metric(format!("{name} P"), dp, dp <= 1e-6);
        }
    }
    Ok(v)
}

// ---------------------------------------------------------------- 6

fn current_reduction() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let mut v = Verdict::new();
    for (name, m, coeff) in catalog() {
        let psi = probe(name, coeff);
        let f = field(psi.clone());
        let phi = apply_gauge(&f, &sigma_of_psi(&m, &f).map_err(e)?).map_err(e)?;
        let j = model_current(&m, &f).map_err(e)?;
        let gap = max_gap(j[0].values(), &bilinear_j(&dft, phi.values()));
        v.metric(format!("{name} j(psi) vs J(phi)"), gap, gap <= 1e-9);
        // the model current closes the continuity equation of the original flow
        let pt = psi_t(&m, &psi, &dft);
        let rho_t: Vec<f64> = (0..N).map(|i| 2.0 * (psi[i].conj() * pt[i]).re).collect();
        let div = dft.dr(j[0].values(), 1);
        let res: Vec<f64> = (0..N).map(|i| rho_t[i] + div[i]).collect();
        let rel = max_abs(&res) / max_abs(&div).max(1.0);
        v.metric(format!("{name} continuity"), rel, rel <= 1e-9);
    }
    Ok(v)
}

// ---------------------------------------------------------------- 7

fn localized_packet() -> Vec<C> {
    xs().iter()
        .map(|&x| C::from_polar((-((x - L / 2.0) / 2.0).powi(2)).exp() + 1e-4, 2.0 * PI * x / L))
        .collect()
}

/// `G = P t - m N x_c` with the plain first moment.
fn generator(dft: &Dft, psi: &[C], t: f64) -> f64 {
    let x = xs();
    let moment: f64 = psi.iter().zip(&x).map(|(p, x)| p.norm_sqr() * x).sum::<f64>() * L / N as f64;
    momentum(dft, psi) * t - moment
}

fn galilei() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let mut v = Verdict::new();
    for (name, m) in [
        ("free", unit(ModelKind::Free)),
        ("deriv_family(q=-1)", unit(ModelKind::DerivFamily { alpha: 0.5, q: -1.0 })),
        ("chen_lee_liu(alpha=0)", unit(ModelKind::ChenLeeLiu { alpha: 0.0 })),
    ] {
        let d = galilei_drift(&m, &field(probe(name, None))).map_err(e)?[0].abs();
        v.metric(format!("{name} drift"), d, d <= 1e-12);
    }
    let alpha = 0.5;
    let m = unit(ModelKind::ChenLeeLiu { alpha });
    let dt = 1e-4;
    let tr = run(&field(localized_packet()), &m, Leg::Original, 4.0 * dt, StepConfig::new(dt), 1, 0.0).map_err(e)?;
    let g: Vec<f64> = tr.samples.iter().map(|s| generator(&dft, s.psi.values(), s.t)).collect();
    let oracle = (g[0] - 8.0 * g[1] + 8.0 * g[3] - g[4]) / (12.0 * dt);
    let mid = &tr.samples[2].psi;
    let lib = galilei_drift(&m, mid).map_err(e)?[0];
    let closed = 0.5 * alpha * mid.values().iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * L / N as f64;
    let rel = (lib - oracle).abs() / oracle.abs();
    v.metric("chen_lee_liu drift vs differenced G", rel, rel <= 1e-5);
    let rel = (lib - closed).abs() / closed.abs();
    v.metric("chen_lee_liu drift vs (m alpha / 2 hbar) int rho^2", rel, rel <= 1e-12);
    Ok(v)
}

// ---------------------------------------------------------------- 8

fn conditions_2d() -> Res<Verdict> {
    let (nx, ny) = (N, N);
    let g = Grid::new_2d([L, L], [nx, ny]).map_err(e)?;
    let dft = Dft::new(N, L);
    let psi = ComplexField::from_fn(&g, |x| {
        let r2 = ((x[0] - L / 2.0) / 4.0).powi(2) + ((x[1] - L / 2.0) / 3.0).powi(2);
        C::from_polar(0.6 * (1.0 + 0.5 * (-r2).exp()), 2.0 * PI * x[0] / L + 0.3 * (2.0 * PI * x[1] / L).sin())
    });
    let jet = Jet::from_psi(&psi, 1.0).map_err(e)?;
    let curl = |vx: &[f64], vy: &[f64]| {
        let a = d2(&dft, vy, nx, ny, 0);
        let b = d2(&dft, vx, nx, ny, 1);
        max_gap(&a, &b)
    };
    let mut v = Verdict::new();
    for (name, m) in [
        ("dg_sub", unit(ModelKind::DgSub { alpha: 0.05, beta: 0.02 })),
        ("dg_general", unit(ModelKind::DgGeneral { d: 0.05, d_prime: 0.5, c: [0.1, -0.2, 0.05, 0.1, -0.05] })),
    ] {
        let f = m.current_f_on(&jet).map_err(e)?;
        let over: Vec<Vec<f64>> = f.iter().map(|fa| fa.iter().zip(&jet.rho).map(|(a, r)| a / r).collect()).collect();
        let res = curl(&over[0], &over[1]);
        v.metric(format!("{name} curl residual"), res, res <= 1e-10);
        let lib = condition_residual_on(&m, &jet).map_err(e)?.residual;
        v.metric(format!("{name} reported residual"), lib, lib <= 1e-10);
    }
    let kappa = 0.2;
    let eip = unit(ModelKind::Eip { kappa });
    // F / rho = -(kappa / m) rho grad S = -(kappa / m) Im(psi* grad psi)
    let re: Vec<f64> = psi.values().iter().map(|z| z.re).collect();
    let im: Vec<f64> = psi.values().iter().map(|z| z.im).collect();
    let flux = |axis: usize| -> Vec<f64> {
        let (dre, dim) = (d2(&dft, &re, nx, ny, axis), d2(&dft, &im, nx, ny, axis));
        (0..re.len()).map(|i| -kappa * (re[i] * dim[i] - im[i] * dre[i])).collect()
    };
    let res = curl(&flux(0), &flux(1));
    v.metric("eip rot residual", res, res > 1e-3);
    let lib = condition_residual_on(&eip, &jet).map_err(e)?.residual;
    v.metric("eip reported residual", lib, (lib - res).abs() <= 1e-9 * res);
    let refused = matches!(compute_sigma_on(&eip, &jet), Err(Error::ConditionResidual { .. }));
    v.metric("eip transform refused", refused as u8 as f64, refused);
    Ok(v)
}

// ---------------------------------------------------------------- 9

fn canonicity() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let zeta: Vec<f64> = xs().iter().map(|x| 0.4 * (2.0 * PI * x / L).sin()).collect();
    let mut v = Verdict::new();
    for (name, m, coeff, canonical) in [
        ("dg_sub", unit(ModelKind::DgSub { alpha: 0.05, beta: 0.02 }), None, true),
        ("deriv_family(q=1)", unit(ModelKind::DerivFamily { alpha: 0.5, q: 1.0 }), Some(0.5), true),
        ("chen_lee_liu", unit(ModelKind::ChenLeeLiu { alpha: 0.5 }), Some(0.25), false),
    ] {
        let psi = probe(name, coeff);
        let moved: Vec<C> = psi.iter().zip(&zeta).map(|(p, z)| p * C::from_polar(1.0, *z)).collect();
        let (w0, _, phi) = transformed_from_flow(&m, &psi, &dft)?;
        let (w1, _, _) = transformed_from_flow(&m, &moved, &dft)?;
        let change = max_gap(&centered(&w0), &centered(&w1)) / max_abs(&w0).max(1.0);
        let oracle = if canonical { change <= 1e-9 } else { change >= 1e-4 };
        v.metric(format!("{name} phase sensitivity"), change, oracle);
        let jet = Jet::from_psi(&field(phi), 1.0).map_err(e)?;
        let rep = check_canonicity_transformed(|j| transformed_nonlinearity_on(&m, j), &jet).map_err(e)?;
        v.metric(format!("{name} classifier"), rep.max_difference, rep.canonical == canonical);
    }
    Ok(v)
}

// ---------------------------------------------------------------- 10

fn stress_continuity(m: &Model, psi: &ComplexField, dt: f64, every: usize, dft: &Dft) -> Res<f64> {
    let tr = run(psi, m, Leg::Original, T, StepConfig::new(dt), every, 0.0).map_err(e)?;
    let tensors = tr.samples.iter().map(|s| stress_tensor(m, &s.psi)).collect::<Result<Vec<_>, _>>().map_err(e)?;
    let h = tr.samples[1].t - tr.samples[0].t;
    let mut worst = 0.0_f64;
    for k in 2..tensors.len() - 2 {
        let ddt = |get: &dyn Fn(usize) -> Vec<f64>| -> Vec<f64> {
            let (a, b, c, d) = (get(k - 2), get(k - 1), get(k + 1), get(k + 2));
            (0..N).map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h)).collect()
        };
        let pairs = [
            (ddt(&|i| tensors[i].t00.values().to_vec()), tensors[k].energy_flux[0].values().to_vec()),
            (ddt(&|i| tensors[i].t0j[0].values().to_vec()), tensors[k].momentum_flux[0][0].values().to_vec()),
        ];
        for (dens_t, flux) in pairs {
            let div = dft.dr(&flux, 1);
            let scale = max_abs(&div).max(max_abs(&flux) * 2.0 * PI / L);
            let res: Vec<f64> = (0..N).map(|i| dens_t[i] + div[i]).collect();
            worst = worst.max(max_abs(&res) / scale);
        }
    }
    Ok(worst)
}

fn stress_energy() -> Res<Verdict> {
    let dft = Dft::new(N, L);
    let dx = L / N as f64;
    let mut v = Verdict::new();
    for (name, m, coeff) in catalog().into_iter().filter(|(_, m, _)| m.is_canonical()) {
        let psi = probe(name, coeff);
        let st = stress_tensor(&m, &field(psi.clone())).map_err(e)?;
        let en = energy(&dft, &m, &psi)?;
        let p = momentum(&dft, &psi);
        let de = (st.t00.values().iter().sum::<f64>() * dx - en).abs() / en.abs().max(1.0);
        let dp = (st.t0j[0].values().iter().sum::<f64>() * dx - p).abs() / p.abs().max(1.0);
        v.metric(format!("{name} int T00 - E"), de, de <= 1e-12);
        v.metric(format!("{name} int T0x - P"), dp, dp <= 1e-12);
    }
    let m = unit(ModelKind::ChenLeeLiu { alpha: 0.5 });
    let psi = field(probe("chen_lee_liu", Some(0.25)));
    let coarse = stress_continuity(&m, &psi, DT, 10, &dft)?;
    let fine = stress_continuity(&m, &psi, DT / 2.0, 20, &dft)?;
    v.metric("chen_lee_liu stress continuity", coarse, coarse <= 1e-4);
    v.metric("chen_lee_liu refined", fine, fine < coarse);
    Ok(v)
}

// ---------------------------------------------------------------- main

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Res<Verdict>); 10] = [
        (1, "dual-evolution equivalence", dual_equivalence),
        (2, "Eckhaus linearization", eckhaus_linearization),
        (3, "transformed-coefficient regressions", transformed_coefficients),
        (4, "functional-derivative oracle", functional_derivatives),
        (5, "conservation", conservation),
        (6, "current reduction", current_reduction),
        (7, "Galilei criterion", galilei),
        (8, "2D condition checks", conditions_2d),
        (9, "canonicity classifier", canonicity),
        (10, "stress-energy", stress_energy),
    ];
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    let mut failed = 0;
    for (id, name, f) in criteria {
        let started = std::time::Instant::now();
        let v = f().unwrap_or_else(|msg| Verdict { pass: false, detail: vec![format!("error: {msg}")] });
        println!(
            "{} {id:>2} {name} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        if verbose || !v.pass {
            for d in &v.detail {
                println!("        {d}");
            }
        }
        failed += usize::from(!v.pass);
    }
    println!("{} of 10 criteria pass", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
