use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported derivative order {order} (supported: 1, 2)")]
    UnsupportedOrder { order: usize },

    #[error("axis {axis} out of range for a {dims}-dimensional grid")]
    AxisOutOfRange { axis: usize, dims: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    /// Density fell below the node threshold where the phase (or a 1/rho
    /// factor) is needed.
    #[error("vacuum region at site {site}: rho = {rho:e} < rho_min = {rho_min:e}")]
    VacuumRegion { site: usize, rho: f64, rho_min: f64 },

    #[error("model supports dims {supported:?}, grid has {got}")]
    DimsMismatch { supported: Vec<usize>, got: usize },

    #[error("model `{0}` is noncanonical and has no nonlinear potential")]
    NoPotential(String),

    #[error("model validation failed: {0}")]
    ModelValidation(String),

    #[error("expression references a derivative of order {order}; at most 2 is supported")]
    ExpressionOrder { order: usize },

    #[error("expression needs the undifferentiated phase S, which is unavailable here")]
    PhaseUnavailable,

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error(
        "gauge secular slope {kappa} on axis {axis} is off the momentum lattice \
         (winding {winding:.6}); nearest admissible slope is {nearest}"
    )]
    GaugeIncompatible {
        axis: usize,
        kappa: f64,
        winding: f64,
        nearest: f64,
    },

    #[error("integrability residual {residual:e} exceeds {tolerance:e}; transformation undefined")]
    ConditionResidual { residual: f64, tolerance: f64 },

    #[error("generic model has a phase-dependent generator; use a catalog closed form")]
    ImplicitGenerator,

    #[error("node formed at t = {t}: site {site}, rho = {rho:e}")]
    NodeFormation { t: f64, site: usize, rho: f64 },

    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}
