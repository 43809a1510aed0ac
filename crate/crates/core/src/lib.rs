//! Gauge transformations for nonlinear Schrödinger equations with complex
//! nonlinearities, together with a pseudo-spectral integrator and
//! conservation-law diagnostics.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod fields;
pub mod evolve;
pub mod gauge;
pub mod grid;
pub mod initial;
pub mod model;
pub mod snapshot;
pub mod varcalc;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, Expr, Scope, Sym};
pub use fields::{compose, decompose, quantum_potential, HydroFields, Jet};
pub use grid::{cumulative_integral, deriv, integrate, ComplexField, Field, Grid, RealField};
pub use model::{catalog, current_f, eval_nonlinearity, potential_density, GenericForm, Model, ModelKind};
pub use varcalc::{euler_lagrange, fd_oracle, functional_derivative, Target};
pub use gauge::{apply_gauge, bilinear_current, compute_sigma, transformed_nonlinearity, GaugeGenerator};
pub use evolve::{dual_evolution, linear_propagate, model_current, run, DualReport, EvolveState, Integrator, Leg, Sample, StepConfig, Trajectory};
pub use diagnostics::{
    center_of_mass, energy, galilei_drift, galilei_generator, momentum, particle_number, record_trajectory,
    stress_tensor, DiagnosticsRecord, StressTensor,
};
pub use config::{Preset, RunConfig, Which};
