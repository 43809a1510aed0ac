//! Conserved quantities, balance-law residuals and the energy-momentum tensor.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{model_current, Leg, Trajectory};
use crate::expr::Sym;
use crate::fields::Jet;
use crate::gauge::bilinear_current;
use crate::grid::{ComplexField, Grid, RealField};
use crate::model::{divergence_values, Model};

/// `N = int |psi|^2`.
pub fn particle_number(psi: &ComplexField) -> f64 {
    psi.grid().integrate_slice(&psi.values().iter().map(|c| c.norm_sqr()).collect::<Vec<_>>())
}

fn grad_sq(psi: &ComplexField) -> Result<Vec<f64>> {
    let g = psi.grid();
    let mut out = vec![0.0; g.len()];
    for a in 0..g.dims() {
        for (o, d) in out.iter_mut().zip(g.deriv_complex_slice(psi.values(), a, 1)?) {
            *o += d.norm_sqr();
        }
    }
    Ok(out)
}

/// Energy density `hbar^2 |grad psi|^2 / 2m + U`.
pub fn energy_density(m: &Model, psi: &ComplexField) -> Result<Vec<f64>> {
    if !m.is_canonical() {
        return Err(Error::NoPotential(m.name().into()));
    }
    let jet = Jet::from_psi(psi, m.hbar())?;
    let u = m.potential_on(&jet)?;
    let k = m.hbar() * m.hbar() / (2.0 * m.mass());
    Ok(grad_sq(psi)?.iter().zip(&u).map(|(g, u)| k * g + u).collect())
}

/// Total energy; defined for canonical models only.
pub fn energy(m: &Model, psi: &ComplexField) -> Result<f64> {
    Ok(psi.grid().integrate_slice(&energy_density(m, psi)?))
}

/// Momentum density `hbar Im(psi* d_a psi)` per axis.
pub fn momentum_density(psi: &ComplexField, hbar: f64) -> Result<Vec<Vec<f64>>> {
    let g = psi.grid();
    let v = psi.values();
    (0..g.dims())
        .map(|a| {
            // Real-part derivatives keep a real field at exactly zero.
            let re: Vec<f64> = v.iter().map(|c| c.re).collect();
            let im: Vec<f64> = v.iter().map(|c| c.im).collect();
            let dre = g.deriv_real_slice(&re, a, 1)?;
            let dim = g.deriv_real_slice(&im, a, 1)?;
            Ok((0..v.len()).map(|j| hbar * (re[j] * dim[j] - im[j] * dre[j])).collect())
        })
        .collect()
}

/// `P = int hbar Im(psi* grad psi)`.
pub fn momentum(psi: &ComplexField, hbar: f64) -> Result<Vec<f64>> {
    Ok(momentum_density(psi, hbar)?
        .iter()
        .map(|p| psi.grid().integrate_slice(p))
        .collect())
}

/// Integral of `values` over every axis except `axis`, as a profile along it.
fn marginal(g: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let n = g.points()[axis];
    let mut out = vec![0.0; n];
    for (site, v) in values.iter().enumerate() {
        out[g.index_along(site, axis)] += v;
    }
    let w = g.cell_volume() / g.spacing(axis);
    out.iter_mut().for_each(|x| *x *= w);
    out
}

/// `int_0^L x p(x) dx` for the trigonometric interpolant of `p`; the Nyquist
/// mode is dropped, matching the first-derivative convention.
fn first_moment(p: &[f64], length: f64) -> f64 {
    let n = p.len();
    let mut acc = 0.5 * length * length * p.iter().sum::<f64>() / n as f64;
    for k in 1..n / 2 {
        let c: Complex64 = p
            .iter()
            .enumerate()
            .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
            .sum::<Complex64>()
            / n as f64;
        // Mode pair k, -k: 2 Re(c_k * (-i L / kappa_k)).
        let kappa = 2.0 * PI * k as f64 / length;
        acc += 2.0 * (c * Complex64::new(0.0, -length / kappa)).re;
    }
    acc
}

/// Centre of mass `int x rho / N` with coordinates in `[0, L)`.
pub fn center_of_mass(psi: &ComplexField) -> Vec<f64> {
    let g = psi.grid();
    let rho: Vec<f64> = psi.values().iter().map(|c| c.norm_sqr()).collect();
    let n = particle_number(psi);
    (0..g.dims())
        .map(|a| first_moment(&marginal(g, &rho, a), g.lengths()[a]) / n)
        .collect()
}

/// Galilei generator `G = P t - m N x_c`.
pub fn galilei_generator(psi: &ComplexField, hbar: f64, mass: f64, t: f64) -> Result<Vec<f64>> {
    let p = momentum(psi, hbar)?;
    let n = particle_number(psi);
    Ok(p.iter()
        .zip(center_of_mass(psi))
        .map(|(p, x)| p * t - mass * n * x)
        .collect())
}

/// `dG/dt = m int F`, which reduces to `-m int dU/d(grad S)` for canonical
/// models on the periodic box.
pub fn galilei_drift(m: &Model, psi: &ComplexField) -> Result<Vec<f64>> {
    let g = psi.grid();
    let jet = Jet::from_psi(psi, m.hbar())?;
    Ok(m.current_f_on(&jet)?
        .iter()
        .map(|f| m.mass() * g.integrate_slice(f))
        .collect())
}

/// Flux of `j_a` through the face `x_a = 0`.
fn boundary_flux(g: &Grid, j: &[f64], axis: usize) -> f64 {
    let w = g.cell_volume() / g.spacing(axis);
    j.iter()
        .enumerate()
        .filter(|(site, _)| g.index_along(*site, axis) == 0)
        .map(|(_, v)| v * w)
        .sum()
}

/// Energy-momentum tensor of a canonical model at one instant.
#[derive(Clone, Debug)]
pub struct StressTensor {
    /// Energy density `T00`.
    pub t00: RealField,
    /// Momentum density `T0j = hbar Im(psi* d_j psi)`.
    pub t0j: Vec<RealField>,
    /// Energy flux `T_a0` along axis `a`.
    pub energy_flux: Vec<RealField>,
    /// Momentum flux `T_ab`: flux along `a` of momentum component `b`.
    pub momentum_flux: Vec<Vec<RealField>>,
}

fn pointwise(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

/// Evaluates the tensor from the Hamiltonian density
/// `h = rho |grad S|^2 / 2m + hbar^2 |grad rho|^2 / 8 m rho + U`
/// with `rho_t = dH/dS` and `S_t = -dH/drho`.
pub fn stress_tensor(m: &Model, psi: &ComplexField) -> Result<StressTensor> {
    if !m.is_canonical() {
        return Err(Error::NoPotential(m.name().into()));
    }
    let g = psi.grid();
    let dims = g.dims();
    m.check_dims(dims)?;
    let (hbar, mass) = (m.hbar(), m.mass());
    let jet = Jet::from_psi(psi, hbar)?;
    jet.require_nodeless()?;
    let u = m.potential_expr(dims)?;
    let n = jet.len();
    let d = |v: &[f64], a: usize| g.deriv_real_slice(v, a, 1);
    let partial = |s: Sym| u.partial(s).eval(&jet);

    // Canonical momenta conjugate to each derivative slot.
    let mut p_ra = Vec::new();
    let mut p_raa = Vec::new();
    let mut p_sa = Vec::new();
    let mut p_saa = Vec::new();
    for a in 0..dims {
        let q = hbar * hbar / (4.0 * mass);
        let kin = pointwise(&jet.d_rho[a], &jet.rho, |r1, r| q * r1 / r);
        p_ra.push(pointwise(&kin, &partial(Sym::DRho { axis: a, order: 1 })?, |x, y| x + y));
        p_raa.push(partial(Sym::DRho { axis: a, order: 2 })?);
        let kin = pointwise(&jet.d_s[a], &jet.rho, |s1, r| r * s1 / mass);
        p_sa.push(pointwise(&kin, &partial(Sym::DS { axis: a, order: 1 })?, |x, y| x + y));
        p_saa.push(partial(Sym::DS { axis: a, order: 2 })?);
    }

    let (w, _) = m.nonlinearity_on(&jet)?;
    let f = m.current_f_on(&jet)?;
    let mut grad_s2 = vec![0.0; n];
    let mut grad_r2 = vec![0.0; n];
    let mut lap_r = vec![0.0; n];
    let mut j = Vec::new();
    for a in 0..dims {
        for i in 0..n {
            grad_s2[i] += jet.d_s[a][i].powi(2);
            grad_r2[i] += jet.d_rho[a][i].powi(2);
            lap_r[i] += jet.dd_rho[a][i];
        }
        j.push(
            (0..n)
                .map(|i| jet.rho[i] * jet.d_s[a][i] / mass - f[a][i])
                .collect::<Vec<_>>(),
        );
    }
    let q = hbar * hbar / mass;
    let dh_drho: Vec<f64> = (0..n)
        .map(|i| {
            let r = jet.rho[i];
            grad_s2[i] / (2.0 * mass) + q * grad_r2[i] / (8.0 * r * r) - q * lap_r[i] / (4.0 * r) + w[i]
        })
        .collect();
    let u_vals = u.eval(&jet)?;
    let h: Vec<f64> = (0..n)
        .map(|i| {
            let r = jet.rho[i];
            r * grad_s2[i] / (2.0 * mass) + q * grad_r2[i] / (8.0 * r) + u_vals[i]
        })
        .collect();
    let rho_t: Vec<f64> = divergence_values(&jet, &j)?.iter().map(|x| -x).collect();
    let s_t: Vec<f64> = dh_drho.iter().map(|x| -x).collect();

    // Slot coefficient (h_{u_a} - D_a h_{u_aa}) for both fields.
    let mut c_r = Vec::new();
    let mut c_s = Vec::new();
    for a in 0..dims {
        c_r.push(pointwise(&p_ra[a], &d(&p_raa[a], a)?, |x, y| x - y));
        c_s.push(pointwise(&p_sa[a], &d(&p_saa[a], a)?, |x, y| x - y));
    }

    let mut energy_flux = Vec::new();
    for a in 0..dims {
        let (r_at, s_at) = (d(&rho_t, a)?, d(&s_t, a)?);
        let v = (0..n)
            .map(|i| {
                -(c_r[a][i] * rho_t[i] + p_raa[a][i] * r_at[i] + c_s[a][i] * s_t[i] + p_saa[a][i] * s_at[i])
            })
            .collect();
        energy_flux.push(jet.field(v));
    }

    let mut momentum_flux = Vec::new();
    for a in 0..dims {
        let mut row = Vec::new();
        for b in 0..dims {
            let (r_ab, s_ab) = if a == b {
                (jet.dd_rho[a].clone(), jet.dd_s[a].clone())
            } else {
                (d(&jet.d_rho[b], a)?, d(&jet.d_s[b], a)?)
            };
            let v = (0..n)
                .map(|i| {
                    let mut t = c_r[a][i] * jet.d_rho[b][i]
                        + p_raa[a][i] * r_ab[i]
                        + c_s[a][i] * jet.d_s[b][i]
                        + p_saa[a][i] * s_ab[i];
                    if a == b {
                        t += jet.rho[i] * dh_drho[i] - h[i];
                    }
                    t
                })
                .collect();
            row.push(jet.field(v));
        }
        momentum_flux.push(row);
    }

    Ok(StressTensor {
        t00: jet.field(energy_density(m, psi)?),
        t0j: momentum_density(psi, hbar)?.into_iter().map(|p| jet.field(p)).collect(),
        energy_flux,
        momentum_flux,
    })
}

/// Diagnostics of one saved state. Windowed residuals are `None` within two
/// samples of either end of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub n: f64,
    /// Total energy; only for canonical models on the original leg.
    pub energy: Option<f64>,
    pub momentum: Vec<f64>,
    pub x_c: Vec<f64>,
    pub galilei: Vec<f64>,
    pub continuity_residual: Option<f64>,
    pub ehrenfest_residual: Option<Vec<f64>>,
    pub galilei_drift_rate: Option<Vec<f64>>,
    pub t00_int: Option<f64>,
    pub t0j_int: Option<Vec<f64>>,
    pub stress_continuity_residual: Option<f64>,
}

/// Per-sample fields needed by the windowed residuals.
struct Instant {
    rho: Vec<f64>,
    current: Vec<Vec<f64>>,
    div_current: Vec<f64>,
    /// `(density, divergence of flux, flux scale)` for each balance law of
    /// the stress tensor.
    stress: Option<Vec<(Vec<f64>, Vec<f64>, f64)>>,
}

/// `max |grad . v|`, floored by the fundamental-mode scale `max |v| 2 pi / L`
/// so that flux-free states do not divide by rounding noise.
fn flux_scale(g: &Grid, v: &[Vec<f64>], div: &[f64]) -> f64 {
    let l = g.lengths().iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
    div.iter().fold(vmax * 2.0 * PI / l, |m, x| m.max(x.abs()))
}

fn stress_balances(m: &Model, psi: &ComplexField) -> Result<Vec<(Vec<f64>, Vec<f64>, f64)>> {
    let g = psi.grid();
    let st = stress_tensor(m, psi)?;
    let jet = Jet::from_psi(psi, m.hbar())?;
    let mut out = Vec::new();
    let flux: Vec<Vec<f64>> = st.energy_flux.iter().map(|f| f.values().to_vec()).collect();
    let div = divergence_values(&jet, &flux)?;
    out.push((st.t00.values().to_vec(), div.clone(), flux_scale(g, &flux, &div)));
    for b in 0..g.dims() {
        let flux: Vec<Vec<f64>> = st.momentum_flux.iter().map(|row| row[b].values().to_vec()).collect();
        let div = divergence_values(&jet, &flux)?;
        out.push((st.t0j[b].values().to_vec(), div.clone(), flux_scale(g, &flux, &div)));
    }
    Ok(out)
}

/// Fourth-order central difference at the middle of five equally spaced
/// samples.
fn central_d5(f: [&[f64]; 5], h: f64) -> Vec<f64> {
    (0..f[0].len())
        .map(|i| (f[0][i] - 8.0 * f[1][i] + 8.0 * f[3][i] - f[4][i]) / (12.0 * h))
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Evaluates every diagnostic along a trajectory. The original leg uses the
/// model current `rho grad S / m - F`; the transformed leg uses the bilinear
/// current and reports no energy, stress or Galilei drift.
pub fn record_trajectory(m: &Model, traj: &Trajectory) -> Result<Vec<DiagnosticsRecord>> {
    let original = traj.leg == Leg::Original;
    let with_stress = original && m.is_canonical();
    let mut records = Vec::with_capacity(traj.samples.len());
    let mut instants = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let psi = &s.psi;
        let g = psi.grid();
        let jet = Jet::from_psi(psi, m.hbar())?;
        let current: Vec<Vec<f64>> = if original {
            model_current(m, psi)?
        } else {
            bilinear_current(psi, m.hbar(), m.mass())?
        }
        .into_iter()
        .map(|f| f.into_values())
        .collect();
        let div_current = divergence_values(&jet, &current)?;
        let stress = if with_stress { Some(stress_balances(m, psi)?) } else { None };
        let momentum = momentum(psi, m.hbar())?;
        records.push(DiagnosticsRecord {
            t: s.t,
            n: particle_number(psi),
            energy: if with_stress { Some(energy(m, psi)?) } else { None },
            x_c: center_of_mass(psi),
            galilei: galilei_generator(psi, m.hbar(), m.mass(), s.t)?,
            continuity_residual: None,
            ehrenfest_residual: None,
            galilei_drift_rate: if original { Some(galilei_drift(m, psi)?) } else { None },
            t00_int: stress.as_ref().map(|b| g.integrate_slice(&b[0].0)),
            t0j_int: stress
                .as_ref()
                .map(|b| b[1..].iter().map(|(d, _, _)| g.integrate_slice(d)).collect()),
            stress_continuity_residual: None,
            momentum,
        });
        instants.push(Instant {
            rho: jet.rho.clone(),
            current,
            div_current,
            stress,
        });
    }

    let h = traj.sample_dt;
    for i in 2..records.len().saturating_sub(2) {
        let uniform = (i - 2..i + 2).all(|k| ((records[k + 1].t - records[k].t) - h).abs() <= 1e-9 * h);
        if !uniform {
            continue;
        }
        let g = traj.samples[i].psi.grid();
        let w = [i - 2, i - 1, i, i + 1, i + 2];
        let inst = &instants[i];

        let rho_t = central_d5(w.map(|k| instants[k].rho.as_slice()), h);
        let res: Vec<f64> = rho_t.iter().zip(&inst.div_current).map(|(a, b)| a + b).collect();
        let scale = flux_scale(g, &inst.current, &inst.div_current);
        records[i].continuity_residual = Some(if scale > 0.0 { max_abs(&res) / scale } else { max_abs(&res) });

        let xs: Vec<Vec<f64>> = w.iter().map(|&k| records[k].x_c.clone()).collect();
        let dx = central_d5([&xs[0], &xs[1], &xs[2], &xs[3], &xs[4]], h);
        let n = records[i].n;
        let ehr = (0..g.dims())
            .map(|a| {
                let flow = g.integrate_slice(&inst.current[a])
                    - g.lengths()[a] * boundary_flux(g, &inst.current[a], a);
                (dx[a] - flow / n).abs()
            })
            .collect();
        records[i].ehrenfest_residual = Some(ehr);

        if let Some(balances) = &inst.stress {
            let mut worst = 0.0_f64;
            for (c, (_, div, scale)) in balances.iter().enumerate() {
                let dens = w.map(|k| instants[k].stress.as_ref().expect("stress on every sample")[c].0.as_slice());
                let dt = central_d5(dens, h);
                let r = max_abs(&dt.iter().zip(div).map(|(a, b)| a + b).collect::<Vec<_>>());
                worst = worst.max(if *scale > 0.0 { r / scale } else { r });
            }
            records[i].stress_continuity_residual = Some(worst);
        }
    }
    Ok(records)
}

const AXES: [&str; 2] = ["x", "y"];

/// CSV header for a `dims`-dimensional run.
pub fn csv_header(dims: usize) -> String {
    let mut cols = vec!["t".to_string(), "N".into(), "E".into()];
    let per_axis = |cols: &mut Vec<String>, p: &str| {
        for a in AXES.iter().take(dims) {
            cols.push(format!("{p}{a}"));
        }
    };
    per_axis(&mut cols, "P");
    per_axis(&mut cols, "x_c");
    per_axis(&mut cols, "G");
    cols.push("continuity_residual".into());
    per_axis(&mut cols, "ehrenfest_residual_");
    per_axis(&mut cols, "galilei_drift_rate_");
    cols.push("T00_int".into());
    for a in AXES.iter().take(dims) {
        cols.push(format!("T0{a}_int"));
    }
    cols.push("stress_continuity_residual".into());
    cols.join(",")
}

impl DiagnosticsRecord {
    /// One CSV row in [`csv_header`] order; missing values are empty cells.
    pub fn csv_row(&self) -> String {
        let dims = self.momentum.len();
        let one = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let many = |v: Option<&Vec<f64>>| match v {
            Some(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            None => vec![String::new(); dims],
        };
        let mut cells = vec![self.t.to_string(), self.n.to_string(), one(self.energy)];
        cells.extend(many(Some(&self.momentum)));
        cells.extend(many(Some(&self.x_c)));
        cells.extend(many(Some(&self.galilei)));
        cells.push(one(self.continuity_residual));
        cells.extend(many(self.ehrenfest_residual.as_ref()));
        cells.extend(many(self.galilei_drift_rate.as_ref()));
        cells.push(one(self.t00_int));
        cells.extend(many(self.t0j_int.as_ref()));
        cells.push(one(self.stress_continuity_residual));
        cells.join(",")
    }
}
