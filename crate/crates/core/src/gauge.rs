//! The unitary gauge `phi = exp(i sigma / hbar) psi` that removes the
//! imaginary nonlinearity, and the real nonlinearity it leaves behind.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{HydroFields, Jet};
use crate::grid::{ComplexField, Grid, RealField};
use crate::model::{divergence_values, Model};
use crate::varcalc::{check_curl_condition, ConditionReport};

/// Largest curl residual for which a two-dimensional generator is built.
pub const CONDITION_TOLERANCE: f64 = 1e-8;

/// Distance from an integer winding still accepted as momentum compatible.
pub const LATTICE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeGenerator {
    /// L-periodic part of `sigma`, zero at site 0.
    pub periodic_part: RealField,
    /// `sigma` contains `secular_slope[a] * x_a`.
    pub secular_slope: Vec<f64>,
    pub momentum_compatible: Vec<bool>,
    pub hbar: f64,
}

impl GaugeGenerator {
    fn new(periodic_part: RealField, secular_slope: Vec<f64>, hbar: f64) -> Self {
        let g = periodic_part.grid().clone();
        let momentum_compatible = secular_slope
            .iter()
            .enumerate()
            .map(|(a, &k)| {
                let w = k * g.lengths()[a] / (2.0 * PI * hbar);
                (w - w.round()).abs() <= LATTICE_TOLERANCE
            })
            .collect();
        Self {
            periodic_part,
            secular_slope,
            momentum_compatible,
            hbar,
        }
    }

    pub fn identity(grid: &Grid, hbar: f64) -> Self {
        Self::new(RealField::constant(grid, 0.0), vec![0.0; grid.dims()], hbar)
    }

    pub fn grid(&self) -> &Grid {
        self.periodic_part.grid()
    }

    /// Secular slope in units of the momentum lattice `2 pi hbar / L_a`.
    pub fn winding(&self) -> Vec<f64> {
        let g = self.grid();
        self.secular_slope
            .iter()
            .enumerate()
            .map(|(a, k)| k * g.lengths()[a] / (2.0 * PI * self.hbar))
            .collect()
    }

    /// Integer winding added to the wavefunction; errors when a slope is off
    /// the momentum lattice.
    pub fn winding_shift(&self) -> Result<Vec<i64>> {
        let g = self.grid();
        self.winding()
            .into_iter()
            .enumerate()
            .map(|(axis, w)| {
                if self.momentum_compatible[axis] {
                    Ok(w.round() as i64)
                } else {
                    Err(Error::GaugeIncompatible {
                        axis,
                        kappa: self.secular_slope[axis],
                        winding: w,
                        nearest: 2.0 * PI * self.hbar * w.round() / g.lengths()[axis],
                    })
                }
            })
            .collect()
    }

    /// Full generator `periodic_part + sum_a kappa_a x_a`.
    pub fn sigma(&self) -> RealField {
        let g = self.grid().clone();
        let v = self
            .periodic_part
            .values()
            .iter()
            .enumerate()
            .map(|(site, p)| p + ramp(&g, site, &self.secular_slope))
            .collect();
        RealField::new(&g, v).expect("same grid")
    }

    /// `grad sigma` per axis, differentiated spectrally.
    pub fn gradient(&self) -> Result<Vec<RealField>> {
        (0..self.grid().dims())
            .map(|a| {
                let d = crate::grid::deriv(&self.periodic_part, a, 1)?;
                Ok(d.map(|v| v + self.secular_slope[a]))
            })
            .collect()
    }
}

fn ramp(g: &Grid, site: usize, slopes: &[f64]) -> f64 {
    slopes
        .iter()
        .enumerate()
        .map(|(a, k)| k * g.coordinate(site, a))
        .sum()
}

/// Integrates a gradient field: along x on row 0, then along y in every
/// column. Returns the full potential (zero at site 0) and the slopes.
pub(crate) fn integrate_gradient(g: &Grid, grad: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let nx = g.points()[0];
    let mut out = vec![0.0; g.len()];
    let (per_x, kx) = g.antiderivative_line(&grad[0][..nx], 0);
    for ix in 0..nx {
        out[ix] = per_x[ix] + kx * g.coordinate(ix, 0);
    }
    let mut slopes = vec![kx];
    if g.dims() == 2 {
        let ny = g.points()[1];
        let hy = g.spacing(1);
        let mut ky0 = 0.0;
        for ix in 0..nx {
            let line: Vec<f64> = (0..ny).map(|iy| grad[1][iy * nx + ix]).collect();
            let (per, ky) = g.antiderivative_line(&line, 1);
            if ix == 0 {
                ky0 = ky;
            }
            for iy in 1..ny {
                out[iy * nx + ix] = out[ix] + per[iy] + ky * iy as f64 * hy;
            }
        }
        slopes.push(ky0);
    }
    (out, slopes)
}

fn generator_from_gradient(g: &Grid, grad: &[Vec<f64>], hbar: f64) -> GaugeGenerator {
    let (full, slopes) = integrate_gradient(g, grad);
    let periodic = full
        .iter()
        .enumerate()
        .map(|(site, s)| s - ramp(g, site, &slopes))
        .collect();
    GaugeGenerator::new(RealField::new(g, periodic).expect("grid length"), slopes, hbar)
}

/// Curl residual of `F / rho` on a two-dimensional jet.
pub fn condition_residual_on(m: &Model, jet: &Jet) -> Result<ConditionReport> {
    let f = m.current_f_any_dims(jet)?;
    let over_rho: Vec<RealField> = f
        .into_iter()
        .map(|fa| jet.field(fa.iter().zip(&jet.rho).map(|(f, r)| f / r).collect()))
        .collect();
    check_curl_condition(&over_rho)
}

/// Builds `sigma` from `grad sigma = -m F / rho` at the state described by
/// `jet`, with `sigma(site 0) = 0`.
pub fn compute_sigma_on(m: &Model, jet: &Jet) -> Result<GaugeGenerator> {
    let dims = jet.dims();
    if dims == 2 && m.isotropic_extension() {
        let rep = condition_residual_on(m, jet)?;
        if rep.residual > CONDITION_TOLERANCE {
            return Err(Error::ConditionResidual {
                residual: rep.residual,
                tolerance: CONDITION_TOLERANCE,
            });
        }
    }
    m.check_dims(dims)?;
    let f = m.current_f_on(jet)?;
    let grad: Vec<Vec<f64>> = f
        .iter()
        .map(|fa| fa.iter().zip(&jet.rho).map(|(f, r)| -m.mass() * f / r).collect())
        .collect();
    Ok(generator_from_gradient(jet.grid(), &grad, m.hbar()))
}

pub fn compute_sigma(m: &Model, h: &HydroFields) -> Result<GaugeGenerator> {
    compute_sigma_on(m, &Jet::from_hydro(h)?)
}

/// Generator for the state `psi` (phase derivatives taken from `psi`).
pub fn sigma_of_psi(m: &Model, psi: &ComplexField) -> Result<GaugeGenerator> {
    compute_sigma_on(m, &Jet::from_psi(psi, m.hbar())?)
}

/// `phi = exp(i sigma / hbar) psi`; the secular part is applied at its exact
/// lattice value so `phi` stays periodic.
pub fn apply_gauge(psi: &ComplexField, g: &GaugeGenerator) -> Result<ComplexField> {
    if psi.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = g.grid().clone();
    let shift = g.winding_shift()?;
    let lattice: Vec<f64> = shift
        .iter()
        .enumerate()
        .map(|(a, &w)| 2.0 * PI * g.hbar * w as f64 / grid.lengths()[a])
        .collect();
    let v = psi
        .values()
        .iter()
        .zip(g.periodic_part.values())
        .enumerate()
        .map(|(site, (p, s))| p * Complex64::from_polar(1.0, (s + ramp(&grid, site, &lattice)) / g.hbar))
        .collect();
    ComplexField::new(&grid, v)
}

/// Inverse gauge `psi = exp(-i sigma / hbar) phi`.
pub fn remove_gauge(phi: &ComplexField, g: &GaugeGenerator) -> Result<ComplexField> {
    let neg = GaugeGenerator {
        periodic_part: g.periodic_part.map(|v| -v),
        secular_slope: g.secular_slope.iter().map(|k| -k).collect(),
        momentum_compatible: g.momentum_compatible.clone(),
        hbar: g.hbar,
    };
    apply_gauge(phi, &neg)
}

/// `J = (hbar/m) Im(phi* grad phi)`.
pub fn bilinear_current(phi: &ComplexField, hbar: f64, mass: f64) -> Result<Vec<RealField>> {
    let g = phi.grid();
    (0..g.dims())
        .map(|a| {
            let re: Vec<f64> = phi.values().iter().map(|c| c.re).collect();
            let im: Vec<f64> = phi.values().iter().map(|c| c.im).collect();
            let d_re = g.deriv_real_slice(&re, a, 1)?;
            let d_im = g.deriv_real_slice(&im, a, 1)?;
            let v = (0..re.len())
                .map(|j| hbar / mass * (re[j] * d_im[j] - im[j] * d_re[j]))
                .collect();
            RealField::new(g, v)
        })
        .collect()
}

/// `W~` on the gauged state: the catalog closed form, or the direct assembly
/// for generic models.
pub fn transformed_nonlinearity_on(m: &Model, jet: &Jet) -> Result<Vec<f64>> {
    m.check_dims(jet.dims())?;
    match m.transformed_expr(jet.dims()) {
        Some(e) => {
            if !matches!(m.kind(), crate::model::ModelKind::Free) {
                jet.require_nodeless()?;
            }
            e.eval(jet)
        }
        None => assemble_transformed_on(m, jet),
    }
}

pub fn transformed_nonlinearity(m: &Model, h: &HydroFields) -> Result<RealField> {
    let jet = Jet::from_hydro(h)?;
    Ok(jet.field(transformed_nonlinearity_on(m, &jet)?))
}

/// Assembles `W~ = W[rho, S~ - sigma] + |grad sigma|^2/2m - grad S~ . grad sigma / m
/// - d sigma/dt` for a generator that depends on the density only, with
/// `d sigma / dt` obtained through `rho_t = -div(rho grad S~ / m)`.
///
/// The result is defined up to a spatially uniform term: `sigma` and its
/// time derivative are pinned to zero at site 0.
pub fn assemble_transformed_on(m: &Model, jet: &Jet) -> Result<Vec<f64>> {
    let dims = jet.dims();
    m.check_dims(dims)?;
    jet.require_nodeless()?;
    let gen = m.generator_exprs(dims)?;
    if gen.iter().any(|e| e.symbols().iter().any(|s| s.is_phase())) {
        return Err(Error::ImplicitGenerator);
    }
    let g = jet.grid().clone();
    let mass = m.mass();
    let grad: Vec<Vec<f64>> = gen.iter().map(|e| e.eval(jet)).collect::<Result<_>>()?;

    let mut original = jet.clone();
    for a in 0..dims {
        let d = g.deriv_real_slice(&grad[a], a, 1)?;
        for j in 0..jet.len() {
            original.d_s[a][j] -= grad[a][j];
            original.dd_s[a][j] -= d[j];
        }
    }
    if let Some(s) = original.s.as_mut() {
        let (sigma, _) = integrate_gradient(&g, &grad);
        for (v, sg) in s.iter_mut().zip(sigma) {
            *v -= sg;
        }
    }
    let (w, _) = m.nonlinearity_on(&original)?;

    let flux: Vec<Vec<f64>> = jet.bilinear_current(mass);
    let rho_t: Vec<f64> = divergence_values(jet, &flux)?.into_iter().map(|v| -v).collect();
    let mut grad_t = Vec::with_capacity(dims);
    for e in &gen {
        let mut acc = vec![0.0; jet.len()];
        for s in e.symbols() {
            let partial = e.partial(s).eval(jet)?;
            let moved = match (s.axis(), s.order()) {
                (None, _) => rho_t.clone(),
                (Some(axis), order) => g.deriv_real_slice(&rho_t, axis, order)?,
            };
            for ((a, p), r) in acc.iter_mut().zip(&partial).zip(&moved) {
                *a += p * r;
            }
        }
        grad_t.push(acc);
    }
    let (sigma_t, _) = integrate_gradient(&g, &grad_t);

    Ok((0..jet.len())
        .map(|j| {
            let mut v = w[j] - sigma_t[j];
            for a in 0..dims {
                v += grad[a][j] * grad[a][j] / (2.0 * mass) - jet.d_s[a][j] * grad[a][j] / mass;
            }
            v
        })
        .collect())
}
