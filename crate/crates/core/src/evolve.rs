//! Strang-split pseudo-spectral integration of the original and the gauged
//! equations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{check_nodeless, Jet};
use crate::gauge::{apply_gauge, bilinear_current, sigma_of_psi, transformed_nonlinearity_on};
use crate::grid::{ComplexField, Grid, RealField};
use crate::model::{Model, ModelKind};

/// Which equation a state evolves under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    /// `i hbar psi_t = -hbar^2/2m lap psi + (W + i Wcal) psi`.
    Original,
    /// `i hbar phi_t = -hbar^2/2m lap phi + W~ phi`.
    Transformed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    /// RK4 substeps of the nonlinear stage per step.
    pub substeps: usize,
}

impl StepConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, substeps: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveState {
    pub t: f64,
    pub psi: ComplexField,
    pub leg: Leg,
}

/// Bundles what every step needs.
#[derive(Clone, Debug)]
pub struct Integrator<'a> {
    pub model: &'a Model,
    pub leg: Leg,
    pub config: StepConfig,
    /// Absolute node threshold; states with `rho < rho_min` abort the run.
    pub rho_min: f64,
}

impl Integrator<'_> {
    fn rate(&self, grid: &Grid, psi: &[Complex64], t: f64, out: &mut [Complex64]) -> Result<()> {
        let field = ComplexField::new(grid, psi.to_vec())?;
        let jet = Jet::from_psi(&field, self.model.hbar())?.with_rho_min(self.rho_min);
        if let Err(Error::VacuumRegion { site, rho, .. }) = jet.require_nodeless() {
            return Err(Error::NodeFormation { t, site, rho });
        }
        let hbar = self.model.hbar();
        match self.leg {
            Leg::Original => {
                let (w, wcal) = self.model.nonlinearity_on(&jet)?;
                for j in 0..psi.len() {
                    out[j] = Complex64::new(wcal[j], -w[j]) * psi[j] / hbar;
                }
            }
            Leg::Transformed => {
                let wt = transformed_nonlinearity_on(self.model, &jet)?;
                for j in 0..psi.len() {
                    out[j] = Complex64::new(0.0, -wt[j]) * psi[j] / hbar;
                }
            }
        }
        Ok(())
    }

    fn nonlinear_stage(&self, grid: &Grid, psi: &mut [Complex64], t0: f64) -> Result<()> {
        if matches!(self.model.kind(), ModelKind::Free) {
            return Ok(());
        }
        let n = psi.len();
        let h = self.config.dt / self.config.substeps as f64;
        let mut k1 = vec![Complex64::default(); n];
        let mut k2 = k1.clone();
        let mut k3 = k1.clone();
        let mut k4 = k1.clone();
        let mut tmp = k1.clone();
        for s in 0..self.config.substeps {
            let t = t0 + s as f64 * h;
            self.rate(grid, psi, t, &mut k1)?;
            for j in 0..n {
                tmp[j] = psi[j] + 0.5 * h * k1[j];
            }
            self.rate(grid, &tmp, t + 0.5 * h, &mut k2)?;
            for j in 0..n {
                tmp[j] = psi[j] + 0.5 * h * k2[j];
            }
            self.rate(grid, &tmp, t + 0.5 * h, &mut k3)?;
            for j in 0..n {
                tmp[j] = psi[j] + h * k3[j];
            }
            self.rate(grid, &tmp, t + h, &mut k4)?;
            for j in 0..n {
                psi[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        Ok(())
    }

    /// One Strang step: free half step, nonlinear stage, free half step.
    pub fn step(&self, s: &EvolveState) -> Result<EvolveState> {
        let grid = s.psi.grid().clone();
        let (hbar, mass, dt) = (self.model.hbar(), self.model.mass(), self.config.dt);
        let mut v = s.psi.values().to_vec();
        grid.free_propagate(&mut v, hbar, mass, 0.5 * dt);
        self.nonlinear_stage(&grid, &mut v, s.t)?;
        grid.free_propagate(&mut v, hbar, mass, 0.5 * dt);
        let t = s.t + dt;
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        let rho: Vec<f64> = v.iter().map(|c| c.norm_sqr()).collect();
        if let Err(Error::VacuumRegion { site, rho, .. }) = check_nodeless(&rho, self.rho_min) {
            return Err(Error::NodeFormation { t, site, rho });
        }
        Ok(EvolveState {
            t,
            psi: ComplexField::new(&grid, v)?,
            leg: s.leg,
        })
    }
}

/// One saved state of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub psi: ComplexField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub leg: Leg,
    /// Time between consecutive samples.
    pub sample_dt: f64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds at least the initial state")
    }
}

/// Number of steps and the effective step that lands exactly on `t_final`.
pub fn step_plan(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final >= 0.0 && t_final.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config("t_final must be >= 0 and dt > 0".into()));
    }
    let n = (t_final / dt).round() as usize;
    if n == 0 {
        return Ok((0, dt));
    }
    Ok((n, t_final / n as f64))
}

/// Integrates `initial` to `t_final`, saving every `sample_every` steps (and
/// always the final state).
pub fn run(
    initial: &ComplexField,
    model: &Model,
    leg: Leg,
    t_final: f64,
    config: StepConfig,
    sample_every: usize,
    rho_min: f64,
) -> Result<Trajectory> {
    if config.substeps == 0 || sample_every == 0 {
        return Err(Error::Config("substeps and sample_every must be at least 1".into()));
    }
    model.check_dims(initial.grid().dims())?;
    let (n_steps, dt) = step_plan(t_final, config.dt)?;
    let integ = Integrator {
        model,
        leg,
        config: StepConfig { dt, ..config },
        rho_min,
    };
    let mut state = EvolveState {
        t: 0.0,
        psi: initial.clone(),
        leg,
    };
    let mut samples = vec![Sample {
        t: 0.0,
        psi: initial.clone(),
    }];
    for k in 1..=n_steps {
        state = integ.step(&state)?;
        // Accumulated sums drift; pin times to the step index.
        state.t = k as f64 * dt;
        if k % sample_every == 0 || k == n_steps {
            samples.push(Sample {
                t: state.t,
                psi: state.psi.clone(),
            });
        }
    }
    Ok(Trajectory {
        leg,
        sample_dt: dt * sample_every as f64,
        samples,
    })
}

/// Exact solution of the linear equation after time `t`.
pub fn linear_propagate(psi: &ComplexField, hbar: f64, mass: f64, t: f64) -> ComplexField {
    let mut v = psi.values().to_vec();
    psi.grid().free_propagate(&mut v, hbar, mass, t);
    ComplexField::new(psi.grid(), v).expect("same grid")
}

/// Outcome of evolving `psi` and its gauge image side by side.
#[derive(Clone, Debug)]
pub struct DualReport {
    pub original: Trajectory,
    pub transformed: Trajectory,
    /// `max |rho_psi(T) - rho_phi(T)|`.
    pub density_gap: f64,
    /// `max |j(psi(T)) - J(phi(T))|` over sites and axes.
    pub current_gap: f64,
}

/// Current of the original equation, `rho grad S / m - F`.
pub fn model_current(model: &Model, psi: &ComplexField) -> Result<Vec<RealField>> {
    let jet = Jet::from_psi(psi, model.hbar())?;
    let f = model.current_f_on(&jet)?;
    Ok(jet
        .bilinear_current(model.mass())
        .into_iter()
        .zip(f)
        .map(|(b, fa)| jet.field(b.iter().zip(&fa).map(|(x, y)| x - y).collect()))
        .collect())
}

/// Runs `psi0` under the original equation and `exp(i sigma/hbar) psi0` under
/// the transformed one, optionally on two threads.
#[allow(clippy::too_many_arguments)]
pub fn dual_evolution(
    psi0: &ComplexField,
    model: &Model,
    t_final: f64,
    config: StepConfig,
    sample_every: usize,
    rho_min: f64,
    parallel: bool,
) -> Result<DualReport> {
    let phi0 = apply_gauge(psi0, &sigma_of_psi(model, psi0)?)?;
    let leg = |psi: &ComplexField, leg: Leg| run(psi, model, leg, t_final, config, sample_every, rho_min);
    let (original, transformed) = if parallel {
        std::thread::scope(|s| {
            let a = s.spawn(|| leg(psi0, Leg::Original));
            let b = leg(&phi0, Leg::Transformed);
            (a.join().expect("original leg panicked"), b)
        })
    } else {
        (leg(psi0, Leg::Original), leg(&phi0, Leg::Transformed))
    };
    let (original, transformed) = (original?, transformed?);
    let psi_t = &original.last().psi;
    let phi_t = &transformed.last().psi;
    let density_gap = psi_t
        .values()
        .iter()
        .zip(phi_t.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a.norm_sqr() - b.norm_sqr()).abs()));
    let j = model_current(model, psi_t)?;
    let big_j = bilinear_current(phi_t, model.hbar(), model.mass())?;
    let current_gap = j.iter().zip(&big_j).fold(0.0_f64, |m, (a, b)| {
        a.values()
            .iter()
            .zip(b.values())
            .fold(m, |m, (x, y)| m.max((x - y).abs()))
    });
    Ok(DualReport {
        original,
        transformed,
        density_gap,
        current_gap,
    })
}
