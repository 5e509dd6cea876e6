//! Run configuration read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::barotropic::BarotropicLaw;
use crate::error::{Error, Result};
use crate::evolution::{IntegrateOptions, ModeSpec};
use crate::illposed::IllposedSpec;
use crate::steady_state::{compute_rho0_plus, TwoFluidConfig};
use crate::synthesis::{SnapshotSpec, DEFAULT_ANGULAR_NODES, DEFAULT_RADIAL_NODES};
use crate::vgrid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyParams {
    /// Samples per slab, interface included on both sides.
    pub samples: usize,
}

impl Default for SteadyParams {
    fn default() -> Self {
        Self { samples: 101 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionParams {
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_count: usize,
    #[serde(default)]
    pub log: bool,
}

impl Default for DispersionParams {
    fn default() -> Self {
        Self { xi_min: 1.0, xi_max: 100.0, xi_count: 100, log: false }
    }
}

impl DispersionParams {
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if !(self.xi_min > 0.0 && self.xi_max >= self.xi_min && self.xi_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < xi_min <= xi_max, got {} and {}",
                self.xi_min, self.xi_max
            )));
        }
        if self.xi_count == 0 {
            return Err(Error::Config("xi_count must be at least 1".into()));
        }
        if self.xi_count == 1 {
            return Ok(vec![self.xi_min]);
        }
        let n = (self.xi_count - 1) as f64;
        Ok((0..self.xi_count)
            .map(|i| {
                let s = i as f64 / n;
                if i == 0 {
                    self.xi_min
                } else if i == self.xi_count - 1 {
                    self.xi_max
                } else if self.log {
                    (self.xi_min.ln() + s * (self.xi_max / self.xi_min).ln()).exp()
                } else {
                    self.xi_min + s * (self.xi_max - self.xi_min)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R3")]
    pub r3: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub k: usize,
    pub times: Vec<f64>,
    #[serde(default = "radial")]
    pub radial_nodes: usize,
    #[serde(default = "angular")]
    pub angular_nodes: usize,
    #[serde(default)]
    pub snapshot: Option<SnapshotSpec>,
}

fn one() -> f64 {
    1.0
}

fn radial() -> usize {
    DEFAULT_RADIAL_NODES
}

fn angular() -> usize {
    DEFAULT_ANGULAR_NODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub modes: Vec<ModeSpec>,
    pub t_end: f64,
    pub dt: f64,
    /// Band radius: data is projected onto `|ξ| ≤ R` and `Λ(R)` bounds the growth.
    #[serde(rename = "R", default)]
    pub r: Option<f64>,
    #[serde(default = "every")]
    pub sample_every: usize,
}

fn every() -> usize {
    10
}

impl EvolveParams {
    pub fn options(&self) -> IntegrateOptions {
        IntegrateOptions { sample_every: self.sample_every, ..IntegrateOptions::new(self.t_end, self.dt) }
    }
}

/// Everything a command needs. Fluid parameters sit at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRunConfig", into = "RawRunConfig")]
pub struct RunConfig {
    pub fluid: TwoFluidConfig,
    /// Derived from pressure continuity at the interface.
    pub rho0_plus: f64,
    pub grid: GridSpec,
    pub out_dir: Option<PathBuf>,
    /// Added to every random mode's seed in `evolve`.
    pub seed: u64,
    pub steady: SteadyParams,
    pub dispersion: DispersionParams,
    pub synth: Option<SynthParams>,
    pub evolve: Option<EvolveParams>,
    pub illposed: Option<IllposedSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    g: f64,
    m: f64,
    ell: f64,
    rho0_minus: f64,
    law_minus: BarotropicLaw,
    law_plus: BarotropicLaw,
    #[serde(default)]
    grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    steady: SteadyParams,
    #[serde(default)]
    dispersion: DispersionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    synth: Option<SynthParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    evolve: Option<EvolveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    illposed: Option<IllposedSpec>,
}

impl TryFrom<RawRunConfig> for RunConfig {
    type Error = Error;

    fn try_from(r: RawRunConfig) -> Result<Self> {
        let fluid = TwoFluidConfig::new(r.g, r.m, r.ell, r.rho0_minus, r.law_minus, r.law_plus)?;
        r.grid.build(fluid.m, fluid.ell)?;
        if let Some(s) = &r.illposed {
            s.validate()?;
        }
        Ok(RunConfig {
            rho0_plus: compute_rho0_plus(&fluid)?,
            fluid,
            grid: r.grid,
            out_dir: r.out_dir,
            seed: r.seed,
            steady: r.steady,
            dispersion: r.dispersion,
            synth: r.synth,
            evolve: r.evolve,
            illposed: r.illposed,
        })
    }
}

impl From<RunConfig> for RawRunConfig {
    fn from(c: RunConfig) -> Self {
        let f = c.fluid;
        RawRunConfig {
            g: f.g,
            m: f.m,
            ell: f.ell,
            rho0_minus: f.rho0_minus,
            law_minus: f.law_minus,
            law_plus: f.law_plus,
            grid: c.grid,
            out_dir: c.out_dir,
            seed: c.seed,
            steady: c.steady,
            dispersion: c.dispersion,
            synth: c.synth,
            evolve: c.evolve,
            illposed: c.illposed,
        }
    }
}

impl RunConfig {
    pub fn from_fluid(fluid: TwoFluidConfig) -> Result<Self> {
        Ok(RunConfig {
            rho0_plus: compute_rho0_plus(&fluid)?,
            fluid,
            grid: GridSpec::default(),
            out_dir: None,
            seed: 0,
            steady: SteadyParams::default(),
            dispersion: DispersionParams::default(),
            synth: None,
            evolve: None,
            illposed: None,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Parse { path, message: e.into_inner().to_string() }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_json_str(&text)
}
