//! Functional derivatives of local densities, a brute-force oracle for them,
//! and the integrability conditions that decide whether a gauge generator
//! exists in two dimensions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::expr::{Expr, Sym};
use crate::fields::{HydroFields, Jet};
use crate::grid::{Grid, RealField};
use crate::model::Model;

/// Field with respect to which a functional derivative is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Rho,
    S,
    /// The first-derivative slot `d_a S`, treated as an independent field.
    DS(usize),
}

fn nonzero(e: &Expr) -> bool {
    *e != Expr::c(0.0)
}

fn add_deriv(acc: &mut [f64], g: &Grid, e: &Expr, jet: &Jet, axis: usize, order: usize, sign: f64) -> Result<()> {
    if !nonzero(e) {
        return Ok(());
    }
    let d = g.deriv_real_slice(&e.eval(jet)?, axis, order)?;
    for (a, v) in acc.iter_mut().zip(d) {
        *a += sign * v;
    }
    Ok(())
}

/// Euler-Lagrange expression of `density` with respect to `target`:
/// `dU/du - sum_a D_a dU/du_a + sum_a D_aa dU/du_aa`, with the total
/// derivatives taken spectrally.
pub fn functional_derivative(density: &Expr, target: Target, jet: &Jet) -> Result<Vec<f64>> {
    let g = jet.grid().clone();
    let dims = jet.dims();
    if let Some(s) = density.symbols().into_iter().find(|s| s.axis().is_some_and(|a| a >= dims)) {
        return Err(Error::AxisOutOfRange {
            axis: s.axis().unwrap_or(0),
            dims,
        });
    }
    let (base, d1, d2): (Sym, fn(usize) -> Sym, fn(usize) -> Sym) = match target {
        Target::Rho => (
            Sym::Rho,
            |axis| Sym::DRho { axis, order: 1 },
            |axis| Sym::DRho { axis, order: 2 },
        ),
        Target::S => (
            Sym::S,
            |axis| Sym::DS { axis, order: 1 },
            |axis| Sym::DS { axis, order: 2 },
        ),
        Target::DS(a) => {
            g.check_axis(a)?;
            let p1 = density.partial(Sym::DS { axis: a, order: 1 });
            let mut acc = p1.eval(jet)?;
            add_deriv(&mut acc, &g, &density.partial(Sym::DS { axis: a, order: 2 }), jet, a, 1, -1.0)?;
            return Ok(acc);
        }
    };
    let mut acc = density.partial(base).eval(jet)?;
    for a in 0..dims {
        add_deriv(&mut acc, &g, &density.partial(d1(a)), jet, a, 1, -1.0)?;
        add_deriv(&mut acc, &g, &density.partial(d2(a)), jet, a, 2, 1.0)?;
    }
    Ok(acc)
}

/// [`functional_derivative`] on hydrodynamic fields.
pub fn euler_lagrange(density: &Expr, target: Target, h: &HydroFields) -> Result<RealField> {
    let jet = Jet::from_hydro(h)?;
    Ok(jet.field(functional_derivative(density, target, &jet)?))
}

fn integral(density: &Expr, jet: &Jet) -> Result<f64> {
    Ok(density.eval(jet)?.iter().sum::<f64>() * jet.grid().cell_volume())
}

pub const DEFAULT_FD_EPS: f64 = 1e-6;

/// Brute-force discrete functional derivative: at every site the target
/// field is nudged by `+-eps` and the change of `integral(density)` is
/// divided by `2 eps` times the cell volume.
pub fn fd_oracle(density: &Expr, target: Target, h: &HydroFields, eps: f64) -> Result<RealField> {
    let g = h.grid().clone();
    let n = g.len();
    let cell = g.cell_volume();
    let mut out = vec![0.0; n];
    match target {
        Target::Rho | Target::S => {
            for (site, o) in out.iter_mut().enumerate() {
                let eval = |delta: f64| -> Result<f64> {
                    let mut p = h.clone();
                    let field = if target == Target::Rho { &mut p.rho } else { &mut p.s };
                    let mut v = field.values().to_vec();
                    v[site] += delta;
                    *field = RealField::new(&g, v)?;
                    integral(density, &Jet::from_hydro(&p)?)
                };
                *o = (eval(eps)? - eval(-eps)?) / (2.0 * eps * cell);
            }
        }
        Target::DS(a) => {
            g.check_axis(a)?;
            let base = Jet::from_hydro(h)?;
            for (site, o) in out.iter_mut().enumerate() {
                let eval = |delta: f64| -> Result<f64> {
                    let mut ds = base.d_s.clone();
                    ds[a][site] += delta;
                    let jet = Jet::from_phase_gradient(&g, h.hbar, base.rho.clone(), ds)?;
                    integral(density, &jet)
                };
                *o = (eval(eps)? - eval(-eps)?) / (2.0 * eps * cell);
            }
        }
    }
    RealField::new(&g, out)
}

/// Outcome of an integrability check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionReport {
    pub residual: f64,
    /// One-dimensional grids satisfy the condition trivially.
    pub vacuous: bool,
}

fn curl_residual(g: &Grid, v: &[Vec<f64>]) -> Result<f64> {
    let dx_vy = g.deriv_real_slice(&v[1], 0, 1)?;
    let dy_vx = g.deriv_real_slice(&v[0], 1, 1)?;
    Ok(dx_vy
        .iter()
        .zip(&dy_vx)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Curl of `(1/rho) dU/d(grad S)` for a canonical model: zero means a
/// gauge generator exists. Axis-isotropic models are extended to two
/// dimensions for this check even where they only declare one.
pub fn check_rot_condition_on(m: &Model, jet: &Jet) -> Result<ConditionReport> {
    if jet.dims() == 1 {
        return Ok(ConditionReport { residual: 0.0, vacuous: true });
    }
    let u = m.potential_expr(jet.dims())?;
    jet.require_nodeless()?;
    let v = (0..2)
        .map(|a| {
            functional_derivative(&u, Target::DS(a), jet)
                .map(|d| d.iter().zip(&jet.rho).map(|(x, r)| x / r).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(ConditionReport {
        residual: curl_residual(jet.grid(), &v)?,
        vacuous: false,
    })
}

pub fn check_rot_condition(m: &Model, h: &HydroFields) -> Result<ConditionReport> {
    check_rot_condition_on(m, &Jet::from_hydro(h)?)
}

/// `max |d_x (F_y/rho) - d_y (F_x/rho)|`.
pub fn check_curl_condition(f_over_rho: &[RealField]) -> Result<ConditionReport> {
    match f_over_rho {
        [_] => Ok(ConditionReport { residual: 0.0, vacuous: true }),
        [fx, fy] => {
            if fx.grid() != fy.grid() {
                return Err(Error::GridMismatch);
            }
            let v = vec![fx.values().to_vec(), fy.values().to_vec()];
            Ok(ConditionReport {
                residual: curl_residual(fx.grid(), &v)?,
                vacuous: false,
            })
        }
        _ => Err(Error::InvalidGrid("expected one vector component per axis (1 or 2)".into())),
    }
}

pub const CANONICITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicityReport {
    pub canonical: bool,
    pub max_difference: f64,
    /// First site where the difference exceeds the tolerance.
    pub witness: Option<usize>,
}

/// Decides whether a transformed nonlinearity depends on the phase by
/// evaluating it before and after a smooth phase perturbation at fixed
/// density.
pub fn check_canonicity_transformed(
    wt: impl Fn(&Jet) -> Result<Vec<f64>>,
    jet: &Jet,
) -> Result<CanonicityReport> {
    let g = jet.grid();
    let delta = RealField::from_fn(g, |c| {
        let x = 2.0 * PI * c[0] / g.lengths()[0];
        let y = c.get(1).map_or(0.0, |y| 2.0 * PI * y / g.lengths()[1]);
        0.7 * x.sin() + 0.4 * (2.0 * x + 0.3).cos() + 0.5 * y.sin()
    });
    let a = wt(jet)?;
    let b = wt(&jet.shift_phase(&delta, &[])?)?;
    let mut max_difference = 0.0_f64;
    let mut witness = None;
    for (site, (x, y)) in a.iter().zip(&b).enumerate() {
        let d = (x - y).abs();
        if d > CANONICITY_TOLERANCE && witness.is_none() {
            witness = Some(site);
        }
        max_difference = max_difference.max(d);
    }
    Ok(CanonicityReport {
        canonical: witness.is_none(),
        max_difference,
        witness,
    })
}
