//! Catalog of complex-nonlinearity models and the generic expression path.
//!
//! A model is described by its real and imaginary nonlinearities `(W, Wcal)`
//! in `i hbar psi_t = -hbar^2/(2m) lap psi + (W + i Wcal) psi`, by the
//! current correction `F` (`j = rho grad S / m - F`) and, when it is
//! canonical, by the nonlinear potential density `U[rho, S]`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Scope, Sym};
use crate::fields::{HydroFields, Jet};
use crate::grid::RealField;
use crate::varcalc::{functional_derivative, Target};

#[derive(Clone, Debug, PartialEq)]
pub enum GenericForm {
    /// Canonical model given by its potential density `U`.
    Canonical { potential: String },
    /// Noncanonical model given by `W` and one `F` component per axis.
    Noncanonical { w: String, f: Vec<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Free,
    /// `alpha` holds one drift component per axis (missing axes are zero).
    LogDriftCubic { beta: f64, alpha: [f64; 2] },
    ChenLeeLiu { alpha: f64 },
    JackiwAglietti { lambda: f64 },
    Eip { kappa: f64 },
    DgSub { alpha: f64, beta: f64 },
    DgGeneral { d: f64, d_prime: f64, c: [f64; 5] },
    DerivFamily { alpha: f64, q: f64 },
    Eckhaus { alpha: f64, beta: f64 },
    Generic { form: GenericForm, params: BTreeMap<String, f64> },
}

#[derive(Clone, Debug, PartialEq)]
enum Compiled {
    None,
    Canonical(Expr),
    Noncanonical { w: Expr, f: Vec<Expr> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    kind: ModelKind,
    hbar: f64,
    mass: f64,
    compiled: Compiled,
}

pub const KIND_NAMES: [&str; 10] = [
    "free",
    "log_drift_cubic",
    "chen_lee_liu",
    "jackiw_aglietti",
    "eip",
    "dg_sub",
    "dg_general",
    "deriv_family",
    "eckhaus",
    "generic",
];

fn r() -> Expr {
    Expr::rho()
}
fn ra(a: usize) -> Expr {
    Expr::d_rho(a, 1)
}
fn raa(a: usize) -> Expr {
    Expr::d_rho(a, 2)
}
fn sa(a: usize) -> Expr {
    Expr::d_s(a, 1)
}
fn saa(a: usize) -> Expr {
    Expr::d_s(a, 2)
}
fn sq(e: Expr) -> Expr {
    Expr::pow(e, 2, 1)
}
fn over_axes(dims: usize, f: impl Fn(usize) -> Expr) -> Expr {
    Expr::sum((0..dims).map(f))
}

/// The five invariants `R_1..R_5` built from `rho` and the bilinear current.
fn dg_invariants(dims: usize, mass: f64) -> [Expr; 5] {
    [
        (over_axes(dims, |a| ra(a) * sa(a)) + r() * over_axes(dims, saa)) / (mass * r()),
        over_axes(dims, raa) / r(),
        over_axes(dims, |a| sq(sa(a))) / (mass * mass),
        over_axes(dims, |a| sa(a) * ra(a)) / (mass * r()),
        over_axes(dims, |a| sq(ra(a))) / sq(r()),
    ]
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::ModelValidation(format!("parameter `{name}` must be finite, got {v}")))
    }
}

impl Model {
    pub fn new(kind: ModelKind, hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) || !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::ModelValidation("hbar and mass must be finite and positive".into()));
        }
        for (name, v) in kind_params(&kind) {
            finite(&name, v)?;
        }
        let compiled = match &kind {
            ModelKind::Generic { form, params } => compile_generic(form, params, hbar, mass)?,
            _ => Compiled::None,
        };
        Ok(Self {
            kind,
            hbar,
            mass,
            compiled,
        })
    }

    /// Builds a model from its configuration name and named parameters.
    pub fn from_params(
        kind: &str,
        params: &BTreeMap<String, f64>,
        generic: Option<GenericForm>,
        hbar: f64,
        mass: f64,
    ) -> Result<Self> {
        let known: &[&str] = match kind {
            "free" => &[],
            "log_drift_cubic" => &["beta", "alpha", "alpha_x", "alpha_y"],
            "chen_lee_liu" | "eckhaus" | "dg_sub" | "deriv_family" => match kind {
                "chen_lee_liu" => &["alpha"],
                "deriv_family" => &["alpha", "q"],
                _ => &["alpha", "beta"],
            },
            "jackiw_aglietti" => &["lambda"],
            "eip" => &["kappa"],
            "dg_general" => &["D", "D_prime", "c1", "c2", "c3", "c4", "c5"],
            "generic" => &[],
            other => return Err(Error::Config(format!("unknown model kind `{other}`"))),
        };
        if kind != "generic" {
            if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
                return Err(Error::Config(format!("unknown parameter `{k}` for model `{kind}`")));
            }
            if generic.is_some() {
                return Err(Error::Config(format!(
                    "expression fields are only accepted for the generic model, not `{kind}`"
                )));
            }
        }
        let get = |k: &str| -> Result<f64> {
            params
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("model `{kind}` requires parameter `{k}`")))
        };
        let opt = |k: &str| params.get(k).copied().unwrap_or(0.0);
        let kind = match kind {
            "free" => ModelKind::Free,
            "log_drift_cubic" => {
                if params.contains_key("alpha") && params.contains_key("alpha_x") {
                    return Err(Error::Config("give either `alpha` or `alpha_x`, not both".into()));
                }
                ModelKind::LogDriftCubic {
                    beta: get("beta")?,
                    alpha: [opt("alpha") + opt("alpha_x"), opt("alpha_y")],
                }
            }
            "chen_lee_liu" => ModelKind::ChenLeeLiu { alpha: get("alpha")? },
            "jackiw_aglietti" => ModelKind::JackiwAglietti { lambda: get("lambda")? },
            "eip" => ModelKind::Eip { kappa: get("kappa")? },
            "dg_sub" => ModelKind::DgSub {
                alpha: get("alpha")?,
                beta: get("beta")?,
            },
            "dg_general" => ModelKind::DgGeneral {
                d: get("D")?,
                d_prime: get("D_prime")?,
                c: [get("c1")?, get("c2")?, get("c3")?, get("c4")?, get("c5")?],
            },
            "deriv_family" => ModelKind::DerivFamily {
                alpha: get("alpha")?,
                q: get("q")?,
            },
            "eckhaus" => ModelKind::Eckhaus {
                alpha: get("alpha")?,
                beta: get("beta")?,
            },
            _ => ModelKind::Generic {
                form: generic.ok_or_else(|| {
                    Error::Config("generic model needs `potential` or `w` and `f`".into())
                })?,
                params: params.clone(),
            },
        };
        Self::new(kind, hbar, mass)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Free => "free",
            ModelKind::LogDriftCubic { .. } => "log_drift_cubic",
            ModelKind::ChenLeeLiu { .. } => "chen_lee_liu",
            ModelKind::JackiwAglietti { .. } => "jackiw_aglietti",
            ModelKind::Eip { .. } => "eip",
            ModelKind::DgSub { .. } => "dg_sub",
            ModelKind::DgGeneral { .. } => "dg_general",
            ModelKind::DerivFamily { .. } => "deriv_family",
            ModelKind::Eckhaus { .. } => "eckhaus",
            ModelKind::Generic { .. } => "generic",
        }
    }

    pub fn supported_dims(&self) -> Vec<usize> {
        match self.kind {
            ModelKind::Free | ModelKind::DgSub { .. } | ModelKind::DgGeneral { .. } => vec![1, 2],
            ModelKind::LogDriftCubic { alpha, .. } => {
                if alpha[1] == 0.0 {
                    vec![1, 2]
                } else {
                    vec![2]
                }
            }
            ModelKind::ChenLeeLiu { .. }
            | ModelKind::JackiwAglietti { .. }
            | ModelKind::Eip { .. }
            | ModelKind::DerivFamily { .. }
            | ModelKind::Eckhaus { .. } => vec![1],
            ModelKind::Generic { .. } => match &self.compiled {
                Compiled::Noncanonical { f, .. } => vec![f.len()],
                Compiled::Canonical(u) if u.max_axis() == Some(1) => vec![2],
                _ => vec![1, 2],
            },
        }
    }

    pub fn check_dims(&self, dims: usize) -> Result<()> {
        let supported = self.supported_dims();
        if supported.contains(&dims) {
            Ok(())
        } else {
            Err(Error::DimsMismatch { supported, got: dims })
        }
    }

    /// Whether the closed forms extend to two dimensions isotropically, so
    /// the integrability condition can be evaluated there.
    pub fn isotropic_extension(&self) -> bool {
        !matches!(
            self.kind,
            ModelKind::ChenLeeLiu { .. }
                | ModelKind::JackiwAglietti { .. }
                | ModelKind::DerivFamily { .. }
                | ModelKind::Eckhaus { .. }
        )
    }

    pub fn is_canonical(&self) -> bool {
        match self.kind {
            ModelKind::DgGeneral { .. } | ModelKind::DerivFamily { .. } | ModelKind::Eckhaus { .. } => false,
            ModelKind::Generic { .. } => matches!(self.compiled, Compiled::Canonical(_)),
            _ => true,
        }
    }

    /// True when the imaginary nonlinearity vanishes identically for every
    /// state, which makes the model Galilei invariant.
    pub fn wcal_vanishes(&self) -> bool {
        match self.kind {
            ModelKind::Free => true,
            ModelKind::LogDriftCubic { alpha, .. } => alpha == [0.0, 0.0],
            ModelKind::ChenLeeLiu { alpha } => alpha == 0.0,
            ModelKind::JackiwAglietti { lambda } => lambda == 0.0,
            ModelKind::Eip { kappa } => kappa == 0.0,
            ModelKind::DgSub { alpha, .. } => alpha == 0.0,
            ModelKind::DgGeneral { d, .. } => d == 0.0,
            ModelKind::DerivFamily { alpha, q } => alpha == 0.0 || q == -1.0,
            ModelKind::Eckhaus { alpha, .. } => alpha == 0.0,
            ModelKind::Generic { .. } => false,
        }
    }

    /// Potential density `U[rho, S]` as an expression on a `dims`-dimensional
    /// grid. Axis-isotropic models are written for any `dims`, which lets the
    /// two-dimensional integrability check run on one-dimensional models.
    pub fn potential_expr(&self, dims: usize) -> Result<Expr> {
        let (h, m) = (self.hbar, self.mass);
        Ok(match self.kind {
            ModelKind::Free => Expr::c(0.0),
            ModelKind::LogDriftCubic { beta, alpha } => {
                0.5 * beta * sq(r()) - r() * over_axes(dims, |a| alpha[a] * sa(a)) / h
            }
            ModelKind::ChenLeeLiu { alpha } => -alpha / (2.0 * h) * sa(0) * sq(r()),
            ModelKind::JackiwAglietti { lambda } => {
                lambda * lambda / (8.0 * m) * Expr::pow(r(), 3, 1) - lambda / (2.0 * m) * sa(0) * sq(r())
            }
            ModelKind::Eip { kappa } => kappa / (2.0 * m) * sq(r()) * over_axes(dims, |a| sq(sa(a))),
            ModelKind::DgSub { alpha, beta } => {
                alpha * r() * over_axes(dims, saa) + beta * h * h / m * over_axes(dims, |a| sq(ra(a))) / r()
            }
            ModelKind::Generic { .. } => match &self.compiled {
                Compiled::Canonical(u) => u.clone(),
                _ => return Err(Error::NoPotential(self.name().into())),
            },
            _ => return Err(Error::NoPotential(self.name().into())),
        })
    }

    /// Closed-form `(W, Wcal)`; `None` for generic canonical models, whose
    /// nonlinearity comes from the Euler-Lagrange equations of `U`.
    fn closed_nonlinearity(&self, dims: usize) -> Option<(Expr, Expr)> {
        let (h, m) = (self.hbar, self.mass);
        Some(match self.kind {
            ModelKind::Free => (Expr::c(0.0), Expr::c(0.0)),
            ModelKind::LogDriftCubic { beta, alpha } => (
                beta * r() - over_axes(dims, |a| alpha[a] * sa(a)) / h,
                0.5 * over_axes(dims, |a| alpha[a] * ra(a)) / r(),
            ),
            ModelKind::ChenLeeLiu { alpha } => (-alpha / h * sa(0) * r(), 0.5 * alpha * ra(0)),
            ModelKind::JackiwAglietti { lambda } => (
                -lambda / m * (sa(0) - 3.0 * lambda / 8.0 * r()) * r(),
                h * lambda / (2.0 * m) * ra(0),
            ),
            ModelKind::Eip { kappa } => (
                kappa / m * r() * over_axes(dims, |a| sq(sa(a))),
                -kappa * h / (2.0 * m) * over_axes(dims, |a| 2.0 * ra(a) * sa(a) + r() * saa(a)),
            ),
            ModelKind::DgSub { alpha, beta } => (
                alpha * over_axes(dims, saa)
                    - 2.0 * beta * h * h / m
                        * (over_axes(dims, raa) / r() - 0.5 * over_axes(dims, |a| sq(ra(a))) / sq(r())),
                0.5 * alpha * h * over_axes(dims, raa) / r(),
            ),
            ModelKind::DgGeneral { d, d_prime, c } => {
                let rr = dg_invariants(dims, m);
                (
                    Expr::sum(c.iter().zip(rr).map(|(ci, ri)| h * d_prime * ci * ri)),
                    0.5 * h * d * over_axes(dims, raa) / r(),
                )
            }
            ModelKind::DerivFamily { alpha, q } => (
                -alpha / h * (1.0 - q) * r() * sa(0),
                0.5 * alpha * (1.0 + q) * ra(0),
            ),
            ModelKind::Eckhaus { alpha, beta } => (beta * sq(r()), alpha * ra(0)),
            ModelKind::Generic { .. } => return None,
        })
    }

    /// Current correction `F` per axis as expressions, when it is known in
    /// closed form. Generic canonical models return `None`.
    pub fn f_exprs(&self, dims: usize) -> Option<Vec<Expr>> {
        let (h, m) = (self.hbar, self.mass);
        let per_axis = |f: &dyn Fn(usize) -> Expr| (0..dims).map(f).collect::<Vec<_>>();
        let x_only = |e: Expr| {
            let mut v = vec![e];
            v.resize(dims, Expr::c(0.0));
            v
        };
        Some(match self.kind {
            ModelKind::Free => per_axis(&|_| Expr::c(0.0)),
            ModelKind::LogDriftCubic { alpha, .. } => per_axis(&|a| alpha[a] / h * r()),
            ModelKind::ChenLeeLiu { alpha } => x_only(alpha / (2.0 * h) * sq(r())),
            ModelKind::JackiwAglietti { lambda } => x_only(lambda / (2.0 * m) * sq(r())),
            ModelKind::Eip { kappa } => per_axis(&|a| -kappa / m * sq(r()) * sa(a)),
            ModelKind::DgSub { alpha, .. } => per_axis(&|a| alpha * ra(a)),
            ModelKind::DgGeneral { d, .. } => per_axis(&|a| d * ra(a)),
            ModelKind::DerivFamily { alpha, q } => x_only(alpha * (1.0 + q) / (2.0 * h) * sq(r())),
            ModelKind::Eckhaus { alpha, .. } => x_only(alpha / h * sq(r())),
            ModelKind::Generic { .. } => match &self.compiled {
                Compiled::Noncanonical { f, .. } => f.clone(),
                _ => return None,
            },
        })
    }

    /// `grad sigma = -m F / rho` per axis as expressions (generic canonical
    /// models derive it symbolically from `U`).
    pub fn generator_exprs(&self, dims: usize) -> Result<Vec<Expr>> {
        let m = self.mass;
        if let Some(f) = self.f_exprs(dims) {
            return Ok(f.into_iter().map(|fa| -m * fa / r()).collect());
        }
        let u = self.potential_expr(dims)?;
        (0..dims)
            .map(|a| {
                // -F_a = dU/dS_a - D_a dU/dS_aa
                let first = u.partial(Sym::DS { axis: a, order: 1 });
                let second = u.partial(Sym::DS { axis: a, order: 2 }).total_derivative(a)?;
                Ok(m * (first - second) / r())
            })
            .collect()
    }

    /// Closed-form transformed nonlinearity `W~[rho, S~]`, where the jet
    /// variables `S_*` are read as derivatives of the gauged phase.
    pub fn transformed_expr(&self, dims: usize) -> Option<Expr> {
        let (h, m) = (self.hbar, self.mass);
        Some(match self.kind {
            ModelKind::Free => Expr::c(0.0),
            ModelKind::LogDriftCubic { beta, alpha } => {
                let a2: f64 = alpha[..dims].iter().map(|a| a * a).sum();
                beta * r() + m * a2 / (2.0 * h * h)
            }
            ModelKind::ChenLeeLiu { alpha } => {
                -alpha / h * (sa(0) + 3.0 * m * alpha / (8.0 * h) * r()) * r()
            }
            ModelKind::JackiwAglietti { lambda } => -lambda / m * sa(0) * r(),
            ModelKind::Eip { kappa } => {
                let log_xx = raa(0) / r() - sq(ra(0)) / sq(r());
                kappa / m * r() / (1.0 + kappa * r()) * sq(sa(0)) - kappa * h * h / (4.0 * m) * r() * log_xx
            }
            ModelKind::DgSub { alpha, beta } => {
                let gamma = m * alpha * alpha - 2.0 * beta * h * h / m;
                let rr = dg_invariants(dims, m);
                gamma * (rr[1].clone() - 0.5 * rr[4].clone())
            }
            ModelKind::DgGeneral { .. } => {
                let ct = self.dg_transformed_coefficients()?;
                Expr::sum(ct.into_iter().zip(dg_invariants(dims, m)).map(|(c, ri)| c * ri))
            }
            ModelKind::DerivFamily { alpha, q } => {
                -alpha / h * ((1.0 - q) * sa(0) + m * alpha / (8.0 * h) * (3.0 - 2.0 * q - 5.0 * q * q) * r())
                    * r()
            }
            ModelKind::Eckhaus { alpha, beta } => (m * alpha * alpha / (2.0 * h * h) + beta) * sq(r()),
            ModelKind::Generic { .. } => return None,
        })
    }

    /// True when the transformed equation is the free Schrodinger equation.
    pub fn transformed_is_linear(&self) -> bool {
        let (h, m) = (self.hbar, self.mass);
        let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        match self.kind {
            ModelKind::Free => true,
            ModelKind::Eckhaus { alpha, beta } => near(beta, -m * alpha * alpha / (2.0 * h * h)),
            ModelKind::DgSub { alpha, beta } => near(m * alpha * alpha, 2.0 * beta * h * h / m),
            _ => false,
        }
    }

    /// Coefficients of `R_1..R_5` in the transformed general DG model.
    pub fn dg_transformed_coefficients(&self) -> Option<[f64; 5]> {
        let ModelKind::DgGeneral { d, d_prime, c } = self.kind else {
            return None;
        };
        let (h, m) = (self.hbar, self.mass);
        let k = h * d_prime;
        Some([
            k * c[0] - m * d,
            k * (c[1] + d * c[0]),
            k * c[2],
            k * (c[3] + 2.0 * d * c[2]) + m * d,
            k * (c[4] + d * c[3] + d * d * c[2]) + 0.5 * m * d * d,
        ])
    }

    /// Whether the transformed equation is canonical (independent of the
    /// gauged phase) for these parameters.
    pub fn transformed_is_canonical(&self, dims: usize) -> Option<bool> {
        self.transformed_expr(dims)
            .map(|e| e.symbols().iter().all(|s| !s.is_phase()))
    }

    /// Potential density `U` at every site.
    pub fn potential_on(&self, jet: &Jet) -> Result<Vec<f64>> {
        self.check_dims(jet.dims())?;
        let u = self.potential_expr(jet.dims())?;
        self.require_nodeless(jet)?;
        u.eval(jet)
    }

    /// `(W, Wcal)` at every site.
    pub fn nonlinearity_on(&self, jet: &Jet) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dims(jet.dims())?;
        self.require_nodeless(jet)?;
        if let Some((w, wcal)) = self.closed_nonlinearity(jet.dims()) {
            return Ok((w.eval(jet)?, wcal.eval(jet)?));
        }
        match &self.compiled {
            Compiled::Canonical(u) => {
                let w = functional_derivative(u, Target::Rho, jet)?;
                let ds = functional_derivative(u, Target::S, jet)?;
                let wcal = ds
                    .iter()
                    .zip(&jet.rho)
                    .map(|(d, r)| self.hbar * d / (2.0 * r))
                    .collect();
                Ok((w, wcal))
            }
            Compiled::Noncanonical { w, f } => {
                let w = w.eval(jet)?;
                let div = divergence(jet, f)?;
                let wcal = div
                    .iter()
                    .zip(&jet.rho)
                    .map(|(d, r)| self.hbar * d / (2.0 * r))
                    .collect();
                Ok((w, wcal))
            }
            Compiled::None => unreachable!("catalog models have closed forms"),
        }
    }

    /// `F` per axis at every site.
    pub fn current_f_on(&self, jet: &Jet) -> Result<Vec<Vec<f64>>> {
        self.check_dims(jet.dims())?;
        self.current_f_any_dims(jet)
    }

    /// Like [`Model::current_f_on`] but without the declared-dims check, for
    /// integrability diagnostics of isotropic extensions.
    pub(crate) fn current_f_any_dims(&self, jet: &Jet) -> Result<Vec<Vec<f64>>> {
        self.require_nodeless(jet)?;
        if let Some(f) = self.f_exprs(jet.dims()) {
            return f.iter().map(|e| e.eval(jet)).collect();
        }
        let u = self.potential_expr(jet.dims())?;
        (0..jet.dims())
            .map(|a| {
                functional_derivative(&u, Target::DS(a), jet).map(|v| v.into_iter().map(|x| -x).collect())
            })
            .collect()
    }

    fn require_nodeless(&self, jet: &Jet) -> Result<()> {
        if matches!(self.kind, ModelKind::Free) {
            Ok(())
        } else {
            jet.require_nodeless()
        }
    }
}

/// `sum_a D_a v_a` computed spectrally.
pub(crate) fn divergence_values(jet: &Jet, v: &[Vec<f64>]) -> Result<Vec<f64>> {
    let g = jet.grid();
    let mut out = vec![0.0; jet.len()];
    for (a, va) in v.iter().enumerate() {
        for (o, d) in out.iter_mut().zip(g.deriv_real_slice(va, a, 1)?) {
            *o += d;
        }
    }
    Ok(out)
}

fn divergence(jet: &Jet, f: &[Expr]) -> Result<Vec<f64>> {
    let vals = f.iter().map(|e| e.eval(jet)).collect::<Result<Vec<_>>>()?;
    divergence_values(jet, &vals)
}

fn kind_params(kind: &ModelKind) -> Vec<(String, f64)> {
    let named = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    match kind {
        ModelKind::Free => vec![],
        ModelKind::LogDriftCubic { beta, alpha } => {
            named(&[("beta", *beta), ("alpha_x", alpha[0]), ("alpha_y", alpha[1])])
        }
        ModelKind::ChenLeeLiu { alpha } => named(&[("alpha", *alpha)]),
        ModelKind::JackiwAglietti { lambda } => named(&[("lambda", *lambda)]),
        ModelKind::Eip { kappa } => named(&[("kappa", *kappa)]),
        ModelKind::DgSub { alpha, beta } | ModelKind::Eckhaus { alpha, beta } => {
            named(&[("alpha", *alpha), ("beta", *beta)])
        }
        ModelKind::DgGeneral { d, d_prime, c } => named(&[
            ("D", *d),
            ("D_prime", *d_prime),
            ("c1", c[0]),
            ("c2", c[1]),
            ("c3", c[2]),
            ("c4", c[3]),
            ("c5", c[4]),
        ]),
        ModelKind::DerivFamily { alpha, q } => named(&[("alpha", *alpha), ("q", *q)]),
        ModelKind::Generic { params, .. } => params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
    }
}

fn compile_generic(
    form: &GenericForm,
    params: &BTreeMap<String, f64>,
    hbar: f64,
    mass: f64,
) -> Result<Compiled> {
    let mut scope: Scope = params.clone();
    for reserved in ["hbar", "m"] {
        if scope.contains_key(reserved) {
            return Err(Error::ModelValidation(format!(
                "parameter name `{reserved}` is reserved for the physical constant"
            )));
        }
    }
    scope.insert("hbar".into(), hbar);
    scope.insert("m".into(), mass);
    let bare_s = |what: &str, e: &Expr| -> Result<()> {
        if e.depends_on(Sym::S) {
            Err(Error::ModelValidation(format!(
                "{what} depends on the undifferentiated phase S; only derivatives of S are allowed"
            )))
        } else {
            Ok(())
        }
    };
    Ok(match form {
        GenericForm::Canonical { potential } => {
            let u = parse(potential, &scope)?;
            bare_s("potential", &u)?;
            Compiled::Canonical(u)
        }
        GenericForm::Noncanonical { w, f } => {
            if f.is_empty() || f.len() > 2 {
                return Err(Error::ModelValidation("`f` needs one expression per axis (1 or 2)".into()));
            }
            let w = parse(w, &scope)?;
            bare_s("w", &w)?;
            let f = f.iter().map(|s| parse(s, &scope)).collect::<Result<Vec<_>>>()?;
            for fa in &f {
                bare_s("f", fa)?;
            }
            let dims = f.len();
            if std::iter::once(&w).chain(&f).any(|e| e.max_axis().is_some_and(|a| a >= dims)) {
                return Err(Error::ModelValidation("expression uses an axis beyond the F components".into()));
            }
            Compiled::Noncanonical { w, f }
        }
    })
}

/// `(W, Wcal)` of `m` on hydrodynamic fields.
pub fn eval_nonlinearity(m: &Model, h: &HydroFields) -> Result<(RealField, RealField)> {
    let jet = Jet::from_hydro(h)?;
    let (w, wcal) = m.nonlinearity_on(&jet)?;
    Ok((jet.field(w), jet.field(wcal)))
}

/// Nonlinear potential density `U` of a canonical model.
pub fn potential_density(m: &Model, h: &HydroFields) -> Result<RealField> {
    let jet = Jet::from_hydro(h)?;
    Ok(jet.field(m.potential_on(&jet)?))
}

/// Current correction `F` with `j = rho grad S / m - F`.
pub fn current_f(m: &Model, h: &HydroFields) -> Result<Vec<RealField>> {
    let jet = Jet::from_hydro(h)?;
    Ok(m.current_f_on(&jet)?.into_iter().map(|v| jet.field(v)).collect())
}

/// Static description of one catalog entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub kind: &'static str,
    pub params: &'static [&'static str],
    pub example: &'static str,
    pub dims: &'static [usize],
    pub canonical: bool,
    pub transformed_canonical: &'static str,
    pub note: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            kind: "free",
            params: &[],
            example: "-",
            dims: &[1, 2],
            canonical: true,
            transformed_canonical: "yes",
            note: "linear Schrodinger equation",
        },
        CatalogEntry {
            kind: "log_drift_cubic",
            params: &["beta", "alpha_x", "alpha_y"],
            example: "i",
            dims: &[1, 2],
            canonical: true,
            transformed_canonical: "yes",
            note: "constant drift removed by a linear phase; needs m alpha L / (2 pi hbar^2) integral on a periodic box",
        },
        CatalogEntry {
            kind: "chen_lee_liu",
            params: &["alpha"],
            example: "ii",
            dims: &[1],
            canonical: true,
            transformed_canonical: "no",
            note: "derivative NLSE; transformed equation stays noncanonical",
        },
        CatalogEntry {
            kind: "jackiw_aglietti",
            params: &["lambda"],
            example: "iii",
            dims: &[1],
            canonical: true,
            transformed_canonical: "no",
            note: "chiral soliton model; same as deriv_family at q = -1",
        },
        CatalogEntry {
            kind: "eip",
            params: &["kappa"],
            example: "iv",
            dims: &[1],
            canonical: true,
            transformed_canonical: "no",
            note: "exclusion-inclusion principle; integrability condition fails in 2D",
        },
        CatalogEntry {
            kind: "dg_sub",
            params: &["alpha", "beta"],
            example: "v",
            dims: &[1, 2],
            canonical: true,
            transformed_canonical: "yes",
            note: "Doebner-Goldin subfamily; transformed gamma = m alpha^2 - 2 beta hbar^2 / m",
        },
        CatalogEntry {
            kind: "dg_general",
            params: &["D", "D_prime", "c1", "c2", "c3", "c4", "c5"],
            example: "vi",
            dims: &[1, 2],
            canonical: false,
            transformed_canonical: "when c~1 = c~3 = c~4 = 0",
            note: "general Doebner-Goldin family; generator -m D log rho",
        },
        CatalogEntry {
            kind: "deriv_family",
            params: &["alpha", "q"],
            example: "vii",
            dims: &[1],
            canonical: false,
            transformed_canonical: "only for q = 1",
            note: "q = 0 Chen-Lee-Liu, q = 1/2 Kaup-Newell, q = -1 Jackiw-Aglietti (Wcal = 0)",
        },
        CatalogEntry {
            kind: "eckhaus",
            params: &["alpha", "beta"],
            example: "viii",
            dims: &[1],
            canonical: false,
            transformed_canonical: "yes",
            note: "beta = -m alpha^2 / (2 hbar^2) linearizes the equation",
        },
        CatalogEntry {
            kind: "generic",
            params: &["potential | w + f", "<named constants>"],
            example: "-",
            dims: &[1, 2],
            canonical: true,
            transformed_canonical: "evaluated",
            note: "user expression; U may depend on S only through its derivatives",
        },
    ]
}
