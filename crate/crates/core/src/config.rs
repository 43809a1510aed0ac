//! Run configuration as a single JSON document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::default_rho_min;
use crate::grid::{ComplexField, Grid};
use crate::initial;
use crate::model::{GenericForm, Model};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Optional when a preset supplies it.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Required by commands that evolve or transform a state.
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub constants: Constants,
    /// Absolute node threshold; defaults to `1e-12 max rho(0)`.
    #[serde(default)]
    pub rho_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Generic canonical models: potential density `U`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    /// Generic noncanonical models: real nonlinearity `W`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
    /// Generic noncanonical models: one current correction per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: usize,
    pub lengths: Vec<f64>,
    pub points: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    PlaneWave {
        amplitude: f64,
        #[serde(default)]
        winding: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        particle_number: Option<f64>,
    },
    Gaussian {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        width: f64,
        #[serde(default)]
        carrier_winding: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        particle_number: Option<f64>,
    },
    Modulated {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        width: f64,
        #[serde(default)]
        carrier_winding: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        particle_number: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    #[default]
    Original,
    Transformed,
    Both,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub sample_every: usize,
    #[serde(default)]
    pub which: Which,
    #[serde(default = "one")]
    pub substeps: usize,
}

pub const FORMATS: [&str; 3] = ["csv", "jsonl", "json"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default = "all_formats")]
    pub formats: Vec<String>,
}

fn all_formats() -> Vec<String> {
    FORMATS.iter().map(|s| s.to_string()).collect()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: all_formats(),
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

/// Named reference resolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `N = 256`, `L = 32`, `dt = 1e-3`, `T = 1`.
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

pub const DESK_POINTS: usize = 256;
pub const DESK_LENGTH: f64 = 32.0;
pub const DESK_DT: f64 = 1e-3;
pub const DESK_T: f64 = 1.0;

fn config_err(e: serde_json::Error) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(src).map_err(config_err)?;
        cfg.check_shape()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fills the grid and time stepping from `preset`, keeping the grid
    /// dimension and the sampling choices of the document.
    pub fn apply_preset(&mut self, preset: Preset) {
        match preset {
            Preset::Desk => {
                let dims = self.grid.as_ref().map_or(1, |g| g.dims);
                self.grid = Some(GridConfig {
                    dims,
                    lengths: vec![DESK_LENGTH; dims],
                    points: vec![DESK_POINTS; dims],
                });
                let ev = self.evolution.get_or_insert(EvolutionConfig {
                    t_final: DESK_T,
                    dt: DESK_DT,
                    sample_every: 10,
                    which: Which::Original,
                    substeps: 1,
                });
                ev.t_final = DESK_T;
                ev.dt = DESK_DT;
            }
        }
    }

    fn check_shape(&self) -> Result<()> {
        if let Some(g) = &self.grid {
            if g.lengths.len() != g.dims || g.points.len() != g.dims {
                return Err(Error::Config(format!(
                    "grid.dims = {} but {} lengths and {} points given",
                    g.dims,
                    g.lengths.len(),
                    g.points.len()
                )));
            }
        }
        if let Some(ev) = &self.evolution {
            if !(ev.dt > 0.0 && ev.dt.is_finite()) || !(ev.t_final >= 0.0 && ev.t_final.is_finite()) {
                return Err(Error::Config("evolution needs finite t_final >= 0 and dt > 0".into()));
            }
            if ev.sample_every == 0 || ev.substeps == 0 {
                return Err(Error::Config("sample_every and substeps must be at least 1".into()));
            }
        }
        if let Some(f) = self.outputs.formats.iter().find(|f| !FORMATS.contains(&f.as_str())) {
            return Err(Error::Config(format!("unknown output format `{f}`")));
        }
        if let Some(r) = self.rho_min {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config("rho_min must be finite and non-negative".into()));
            }
        }
        let nonfinite = self.model.params.iter().find(|(_, v)| !v.is_finite());
        if let Some((k, v)) = nonfinite {
            return Err(Error::Config(format!("parameter `{k}` must be finite, got {v}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("missing `grid` (or use a preset)".into()))?;
        Grid::new(&g.lengths, &g.points)
    }

    pub fn evolution(&self) -> Result<&EvolutionConfig> {
        self.evolution
            .as_ref()
            .ok_or_else(|| Error::Config("missing `evolution` (or use a preset)".into()))
    }

    pub fn model(&self) -> Result<Model> {
        let m = &self.model;
        let generic = match (&m.potential, &m.w, &m.f) {
            (None, None, None) => None,
            (Some(u), None, None) => Some(GenericForm::Canonical { potential: u.clone() }),
            (None, Some(w), Some(f)) => Some(GenericForm::Noncanonical {
                w: w.clone(),
                f: f.clone(),
            }),
            _ => {
                return Err(Error::Config(
                    "give either `potential`, or both `w` and `f`".into(),
                ))
            }
        };
        Model::from_params(&m.kind, &m.params, generic, self.constants.hbar, self.constants.mass)
    }

    pub fn initial_state(&self, g: &Grid) -> Result<ComplexField> {
        let initial = self
            .initial
            .as_ref()
            .ok_or_else(|| Error::Config("missing `initial`".into()))?;
        let (psi, n) = match initial {
            InitialConfig::PlaneWave {
                amplitude,
                winding,
                particle_number,
            } => (initial::plane_wave(g, *amplitude, winding)?, particle_number),
            InitialConfig::Gaussian {
                amplitude,
                center,
                width,
                carrier_winding,
                particle_number,
            } => (
                initial::gaussian(g, *amplitude, center.as_deref(), *width, carrier_winding)?,
                particle_number,
            ),
            InitialConfig::Modulated {
                amplitude,
                center,
                width,
                carrier_winding,
                particle_number,
            } => (
                initial::modulated(g, *amplitude, center.as_deref(), *width, carrier_winding)?,
                particle_number,
            ),
        };
        match n {
            Some(n) => initial::scale_to_particle_number(&psi, *n),
            None => Ok(psi),
        }
    }

    /// Absolute node threshold for a run starting from `psi0`.
    pub fn rho_min_for(&self, psi0: &ComplexField) -> f64 {
        self.rho_min.unwrap_or_else(|| {
            default_rho_min(&psi0.values().iter().map(|c| c.norm_sqr()).collect::<Vec<_>>())
        })
    }
}
