//! Initial states.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::diagnostics::particle_number;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

fn carrier(g: &Grid, winding: &[i64], x: &[f64]) -> f64 {
    (0..g.dims())
        .map(|a| 2.0 * PI * winding.get(a).copied().unwrap_or(0) as f64 * x[a] / g.lengths()[a])
        .sum()
}

fn check_winding(g: &Grid, winding: &[i64]) -> Result<()> {
    if winding.len() > g.dims() {
        return Err(Error::Config(format!(
            "{} winding numbers given for a {}-dimensional grid",
            winding.len(),
            g.dims()
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and positive, got {v}")))
    }
}

/// `A exp(i k.x)` with `k_a = 2 pi w_a / L_a`.
pub fn plane_wave(g: &Grid, amplitude: f64, winding: &[i64]) -> Result<ComplexField> {
    check_positive("amplitude", amplitude)?;
    check_winding(g, winding)?;
    Ok(ComplexField::from_fn(g, |x| Complex64::from_polar(amplitude, carrier(g, winding, x))))
}

/// `A exp(-|x - c|^2 / w^2) exp(i k.x)`; `center` defaults to the box centre.
pub fn gaussian(g: &Grid, amplitude: f64, center: Option<&[f64]>, width: f64, winding: &[i64]) -> Result<ComplexField> {
    check_positive("amplitude", amplitude)?;
    check_positive("width", width)?;
    check_winding(g, winding)?;
    let c = resolve_center(g, center)?;
    Ok(ComplexField::from_fn(g, |x| {
        let r2: f64 = (0..g.dims()).map(|a| (x[a] - c[a]).powi(2)).sum();
        Complex64::from_polar(amplitude * (-r2 / (width * width)).exp(), carrier(g, winding, x))
    }))
}

/// Nodeless wave `A (1 + exp(-|x - c|^2 / w^2) / 2) exp(i k.x)`.
pub fn modulated(g: &Grid, amplitude: f64, center: Option<&[f64]>, width: f64, winding: &[i64]) -> Result<ComplexField> {
    check_positive("amplitude", amplitude)?;
    check_positive("width", width)?;
    check_winding(g, winding)?;
    let c = resolve_center(g, center)?;
    Ok(ComplexField::from_fn(g, |x| {
        let r2: f64 = (0..g.dims()).map(|a| (x[a] - c[a]).powi(2)).sum();
        let env = 1.0 + 0.5 * (-r2 / (width * width)).exp();
        Complex64::from_polar(amplitude * env, carrier(g, winding, x))
    }))
}

fn resolve_center(g: &Grid, center: Option<&[f64]>) -> Result<Vec<f64>> {
    match center {
        None => Ok(g.lengths().iter().map(|l| l / 2.0).collect()),
        Some(c) if c.len() == g.dims() && c.iter().all(|v| v.is_finite()) => Ok(c.to_vec()),
        Some(c) => Err(Error::Config(format!("center {c:?} does not fit a {}-dimensional grid", g.dims()))),
    }
}

/// Rescales `psi` so that its discrete particle number is exactly `n`.
pub fn scale_to_particle_number(psi: &ComplexField, n: f64) -> Result<ComplexField> {
    check_positive("particle_number", n)?;
    let n0 = particle_number(psi);
    if n0 <= 0.0 {
        return Err(Error::Config("cannot rescale a vanishing state".into()));
    }
    let k = (n / n0).sqrt();
    Ok(psi.map(|c| c * k))
}
