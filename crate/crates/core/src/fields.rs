//! Polar (hydrodynamic) representation `psi = sqrt(rho) exp(i S / hbar)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Field, Grid, RealField};

/// Coefficient of `hbar^2/m` in the quantum potential as printed in the
/// source model (the textbook value is 1/2). Only the hydrodynamic display
/// uses it; the simulated equations never do.
pub const QUANTUM_POTENTIAL_COEFF: f64 = 0.25;

/// Relative node threshold: `rho_min = DEFAULT_RHO_MIN_FRACTION * max(rho)`.
pub const DEFAULT_RHO_MIN_FRACTION: f64 = 1e-12;

pub fn default_rho_min(rho: &[f64]) -> f64 {
    DEFAULT_RHO_MIN_FRACTION * rho.iter().fold(0.0_f64, |m, &r| m.max(r))
}

pub(crate) fn check_nodeless(rho: &[f64], rho_min: f64) -> Result<()> {
    match rho.iter().position(|&r| !(r >= rho_min)) {
        Some(site) => Err(Error::VacuumRegion {
            site,
            rho: rho[site],
            rho_min,
        }),
        None => Ok(()),
    }
}

/// Density and continuous phase. `S(x + L_a e_a) = S(x) + 2 pi hbar w_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct HydroFields {
    pub rho: RealField,
    pub s: RealField,
    pub winding: Vec<i64>,
    pub hbar: f64,
}

impl HydroFields {
    pub fn new(rho: RealField, s: RealField, winding: Vec<i64>, hbar: f64) -> Result<Self> {
        if rho.grid() != s.grid() {
            return Err(Error::GridMismatch);
        }
        if winding.len() != rho.grid().dims() {
            return Err(Error::InvalidGrid("one winding number per axis required".into()));
        }
        if let Some(site) = rho.values().iter().position(|&r| !(r >= 0.0)) {
            return Err(Error::VacuumRegion {
                site,
                rho: rho.values()[site],
                rho_min: 0.0,
            });
        }
        Ok(Self {
            rho,
            s,
            winding,
            hbar,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    /// `2 pi hbar w_a / L_a` per axis.
    pub fn secular_slopes(&self) -> Vec<f64> {
        let g = self.grid();
        self.winding
            .iter()
            .enumerate()
            .map(|(a, &w)| 2.0 * PI * self.hbar * w as f64 / g.lengths()[a])
            .collect()
    }

    /// `S` with the winding ramp removed; L-periodic.
    pub fn periodic_phase(&self) -> RealField {
        let g = self.grid().clone();
        let slopes = self.secular_slopes();
        let vals = self
            .s
            .values()
            .iter()
            .enumerate()
            .map(|(site, &s)| {
                s - slopes
                    .iter()
                    .enumerate()
                    .map(|(a, k)| k * g.coordinate(site, a))
                    .sum::<f64>()
            })
            .collect();
        RealField::new(&g, vals).expect("same grid")
    }
}

fn wrapped_step(from: Complex64, to: Complex64) -> f64 {
    (to * from.conj()).arg()
}

/// Splits `psi` into `(rho, S, winding)` by unwrapping the phase axis by
/// axis from site 0: row 0 along x, then every column along y.
pub fn decompose(psi: &ComplexField, rho_min: f64, hbar: f64) -> Result<HydroFields> {
    let g = psi.grid().clone();
    let v = psi.values();
    let rho: Vec<f64> = v.iter().map(|c| c.norm_sqr()).collect();
    check_nodeless(&rho, rho_min)?;

    let nx = g.points()[0];
    let ny = if g.dims() == 2 { g.points()[1] } else { 1 };
    let mut phase = vec![0.0; v.len()];

    let mut p0 = v[0].arg();
    if p0 < 0.0 {
        p0 += 2.0 * PI;
    }
    phase[0] = p0;
    for ix in 1..nx {
        phase[ix] = phase[ix - 1] + wrapped_step(v[ix - 1], v[ix]);
    }
    let jump_x = phase[nx - 1] + wrapped_step(v[nx - 1], v[0]) - phase[0];
    let mut winding = vec![(jump_x / (2.0 * PI)).round() as i64];

    if g.dims() == 2 {
        for ix in 0..nx {
            for iy in 1..ny {
                let (prev, cur) = ((iy - 1) * nx + ix, iy * nx + ix);
                phase[cur] = phase[prev] + wrapped_step(v[prev], v[cur]);
            }
        }
        let last = (ny - 1) * nx;
        let jump_y = phase[last] + wrapped_step(v[last], v[0]) - phase[0];
        winding.push((jump_y / (2.0 * PI)).round() as i64);
    }

    let s = phase.into_iter().map(|p| p * hbar).collect();
    HydroFields::new(
        RealField::new(&g, rho)?,
        RealField::new(&g, s)?,
        winding,
        hbar,
    )
}

/// `psi = sqrt(rho) exp(i S / hbar)`.
pub fn compose(h: &HydroFields) -> ComplexField {
    h.rho
        .zip_map(&h.s, |r, s| Complex64::from_polar(r.sqrt(), s / h.hbar))
        .expect("hydro fields share a grid")
}

/// `U_q = -c hbar^2/m * lap(sqrt rho)/sqrt rho` with `c` = [`QUANTUM_POTENTIAL_COEFF`].
pub fn quantum_potential(rho: &RealField, hbar: f64, mass: f64, rho_min: f64) -> Result<RealField> {
    check_nodeless(rho.values(), rho_min)?;
    let g = rho.grid();
    let amp: Vec<f64> = rho.values().iter().map(|r| r.sqrt()).collect();
    let mut lap = vec![0.0; amp.len()];
    for axis in 0..g.dims() {
        for (l, d) in lap.iter_mut().zip(g.deriv_real_slice(&amp, axis, 2)?) {
            *l += d;
        }
    }
    let c = -QUANTUM_POTENTIAL_COEFF * hbar * hbar / mass;
    RealField::new(g, lap.iter().zip(&amp).map(|(l, a)| c * l / a).collect())
}

/// Pointwise values of `rho`, `S` and their per-axis first and second
/// derivatives: everything a nonlinearity or potential density may read.
#[derive(Clone, Debug)]
pub struct Jet {
    grid: Grid,
    hbar: f64,
    rho_min: f64,
    pub rho: Vec<f64>,
    pub d_rho: Vec<Vec<f64>>,
    pub dd_rho: Vec<Vec<f64>>,
    /// The undifferentiated phase, when it is known.
    pub s: Option<Vec<f64>>,
    pub d_s: Vec<Vec<f64>>,
    pub dd_s: Vec<Vec<f64>>,
}

impl Jet {
    /// Builds the jet directly from the wavefunction through
    /// `rho grad S = hbar Im(psi* grad psi)`, so no phase unwrapping is needed.
    pub fn from_psi(psi: &ComplexField, hbar: f64) -> Result<Self> {
        let g = psi.grid().clone();
        let v = psi.values();
        let rho: Vec<f64> = v.iter().map(|c| c.norm_sqr()).collect();
        let mut d_rho = Vec::new();
        let mut dd_rho = Vec::new();
        let mut d_s = Vec::new();
        let mut dd_s = Vec::new();
        for axis in 0..g.dims() {
            let d1 = g.deriv_complex_slice(v, axis, 1)?;
            let d2 = g.deriv_complex_slice(v, axis, 2)?;
            let mut r1 = Vec::with_capacity(v.len());
            let mut r2 = Vec::with_capacity(v.len());
            let mut s1 = Vec::with_capacity(v.len());
            let mut s2 = Vec::with_capacity(v.len());
            for j in 0..v.len() {
                let c = v[j].conj();
                let a = c * d1[j];
                let b = c * d2[j];
                let rx = 2.0 * a.re;
                let rxx = 2.0 * b.re + 2.0 * d1[j].norm_sqr();
                let (sx, sxx) = if rho[j] > 0.0 {
                    let sx = hbar * a.im / rho[j];
                    (sx, (hbar * b.im - rx * sx) / rho[j])
                } else {
                    (0.0, 0.0)
                };
                r1.push(rx);
                r2.push(rxx);
                s1.push(sx);
                s2.push(sxx);
            }
            d_rho.push(r1);
            dd_rho.push(r2);
            d_s.push(s1);
            dd_s.push(s2);
        }
        let rho_min = default_rho_min(&rho);
        Ok(Self {
            grid: g,
            hbar,
            rho_min,
            rho,
            d_rho,
            dd_rho,
            s: None,
            d_s,
            dd_s,
        })
    }

    /// Builds the jet spectrally from `(rho, S)`; the winding ramp is
    /// differentiated analytically.
    pub fn from_hydro(h: &HydroFields) -> Result<Self> {
        let g = h.grid().clone();
        let per = h.periodic_phase();
        let slopes = h.secular_slopes();
        let mut d_s = Vec::new();
        let mut dd_s = Vec::new();
        for axis in 0..g.dims() {
            let d1 = g.deriv_real_slice(per.values(), axis, 1)?;
            d_s.push(d1.into_iter().map(|d| d + slopes[axis]).collect());
            dd_s.push(g.deriv_real_slice(per.values(), axis, 2)?);
        }
        let rho = h.rho.values().to_vec();
        let (d_rho, dd_rho) = rho_derivatives(&g, &rho)?;
        Ok(Self {
            rho_min: default_rho_min(&rho),
            grid: g,
            hbar: h.hbar,
            rho,
            d_rho,
            dd_rho,
            s: Some(h.s.values().to_vec()),
            d_s,
            dd_s,
        })
    }

    /// Builds a jet in which the phase gradient `d_s` is the primary field:
    /// second phase derivatives are `D_a d_s[a]`.
    pub fn from_phase_gradient(
        grid: &Grid,
        hbar: f64,
        rho: Vec<f64>,
        d_s: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rho.len() != grid.len() || d_s.len() != grid.dims() {
            return Err(Error::InvalidGrid("jet components do not match the grid".into()));
        }
        let (d_rho, dd_rho) = rho_derivatives(grid, &rho)?;
        let dd_s = d_s
            .iter()
            .enumerate()
            .map(|(a, v)| grid.deriv_real_slice(v, a, 1))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            hbar,
            rho_min: default_rho_min(&rho),
            rho,
            d_rho,
            dd_rho,
            s: None,
            d_s,
            dd_s,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn with_rho_min(mut self, rho_min: f64) -> Self {
        self.rho_min = rho_min;
        self
    }

    /// Errors if any site sits below the node threshold.
    pub fn require_nodeless(&self) -> Result<()> {
        check_nodeless(&self.rho, self.rho_min)
    }

    pub fn rho_field(&self) -> RealField {
        RealField::new(&self.grid, self.rho.clone()).expect("jet matches grid")
    }

    pub fn field(&self, values: Vec<f64>) -> RealField {
        RealField::new(&self.grid, values).expect("jet matches grid")
    }

    /// `rho grad S / m`, the bilinear current.
    pub fn bilinear_current(&self, mass: f64) -> Vec<Vec<f64>> {
        self.d_s
            .iter()
            .map(|ds| ds.iter().zip(&self.rho).map(|(s, r)| r * s / mass).collect())
            .collect()
    }

    /// Same density, phase shifted by the periodic field `delta` (which may
    /// also carry a linear ramp through `delta_slopes`).
    pub fn shift_phase(&self, delta: &RealField, delta_slopes: &[f64]) -> Result<Self> {
        if delta.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for axis in 0..self.dims() {
            let d1 = self.grid.deriv_real_slice(delta.values(), axis, 1)?;
            let d2 = self.grid.deriv_real_slice(delta.values(), axis, 2)?;
            let k = delta_slopes.get(axis).copied().unwrap_or(0.0);
            for j in 0..self.len() {
                out.d_s[axis][j] += d1[j] + k;
                out.dd_s[axis][j] += d2[j];
            }
        }
        if let Some(s) = out.s.as_mut() {
            for (site, v) in s.iter_mut().enumerate() {
                *v += delta.values()[site]
                    + (0..self.dims())
                        .map(|a| delta_slopes.get(a).copied().unwrap_or(0.0) * self.grid.coordinate(site, a))
                        .sum::<f64>();
            }
        }
        Ok(out)
    }
}

fn rho_derivatives(g: &Grid, rho: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for axis in 0..g.dims() {
        d1.push(g.deriv_real_slice(rho, axis, 1)?);
        d2.push(g.deriv_real_slice(rho, axis, 2)?);
    }
    Ok((d1, d2))
}

/// Values of a complex field reinterpreted as a [`Field`] of densities.
pub fn density(psi: &ComplexField) -> RealField {
    psi.map(|c| c.norm_sqr())
}

#[allow(dead_code)]
pub(crate) fn real_field(g: &Grid, v: Vec<f64>) -> RealField {
    Field::new(g, v).expect("length matches grid")
}
