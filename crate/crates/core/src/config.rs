//! Run configuration: one human-editable TOML file wiring bath, grid, pulse,
//! ensemble, objective and optimizer settings to the command-line tools.
//! Unknown keys are rejected, numeric fields are validated against module
//! bounds, and the file carries everything needed to reproduce a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bath::BathSpec;
use crate::dynamics::states;
use crate::optimizer::{DeConfig, EnsembleSpec, Objective, ParamDim, ParamName, ParameterSpace};
use crate::ptbuild::CouplingSpec;
use crate::pulse::{PhaseMask, PulseSpec, SlmSpec, TimeGrid};
use crate::tensornet::TruncationPolicy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read configuration {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("configuration section [{0}] is required for this command")]
    MissingSection(&'static str),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Time step in ps.
    pub dt: f64,
    /// Number of process-tensor steps (horizon = n_steps · dt).
    pub n_steps: usize,
    /// Memory time in ps; influences beyond it are dropped.
    pub memory_time: f64,
    /// Relative SVD cutoff as a power of ten, e.g. -6.5.
    pub cutoff_exponent: f64,
    /// Optional hard cap on bond dimensions in the truncation policy.
    #[serde(default)]
    pub max_bond: Option<usize>,
    /// Abort the build if a bond exceeds this.
    #[serde(default)]
    pub capacity_max_bond: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub tau: f64,
    pub delta: f64,
    pub theta: f64,
    /// Pulse center in ps; defaults to the middle of the horizon.
    #[serde(default)]
    pub t_center: Option<f64>,
    #[serde(default = "default_mask")]
    pub mask: PhaseMask,
}

fn default_mask() -> PhaseMask {
    PhaseMask::Flat
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub detunings: Vec<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            detunings: vec![0.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    /// "trace-distance" or "rms-equator".
    pub kind: String,
    /// Target state name for trace distance: y+, y-, x+, up, down.
    #[serde(default)]
    pub target: Option<String>,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        Self {
            kind: "trace-distance".into(),
            target: Some("y+".into()),
        }
    }
}

/// One bounded dimension by name: tau, delta, theta, phi, or slopeN.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimSection {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDimSection {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub dim1: SweepDimSection,
    pub dim2: SweepDimSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_population_per_dim")]
    pub population_per_dim: usize,
    #[serde(default = "default_mutation")]
    pub mutation: f64,
    #[serde(default = "default_crossover")]
    pub crossover: f64,
    pub max_generations: usize,
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    #[serde(default)]
    pub tol: f64,
    /// Checkpoint roughly every this many objective evaluations.
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
    pub dims: Vec<DimSection>,
    /// Members written over the random initial population; coordinates
    /// ordered as `dims`.
    #[serde(default)]
    pub initial_members: Vec<Vec<f64>>,
}

fn default_population_per_dim() -> usize {
    8
}

fn default_mutation() -> f64 {
    0.7
}

fn default_crossover() -> f64 {
    0.9
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    #[serde(default)]
    pub pt_cache: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub bath: BathSpec,
    pub grid: GridSection,
    pub pulse: PulseSection,
    #[serde(default)]
    pub slm: Option<SlmSpec>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub objective: ObjectiveSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default)]
    pub paths: PathsSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, hash_hex(text.as_bytes())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.bath
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let g = &self.grid;
        if !(g.dt > 0.0) {
            return Err(ConfigError::Invalid(format!("grid.dt must be > 0, got {}", g.dt)));
        }
        if g.n_steps < 1 {
            return Err(ConfigError::Invalid("grid.n_steps must be at least 1".into()));
        }
        if !(g.memory_time > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "grid.memory_time must be > 0, got {}",
                g.memory_time
            )));
        }
        self.policy()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.pulse.tau > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "pulse.tau must be > 0, got {}",
                self.pulse.tau
            )));
        }
        if !(self.pulse.theta >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "pulse.theta must be >= 0, got {}",
                self.pulse.theta
            )));
        }
        if let Some(slm) = &self.slm {
            slm.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.ensemble.detunings.is_empty() {
            return Err(ConfigError::Invalid("ensemble.detunings is empty".into()));
        }
        self.objective_value()?;
        if let Some(sw) = &self.sweep {
            for d in [&sw.dim1, &sw.dim2] {
                parse_param_name(&d.name)?;
                if !(d.lo.is_finite() && d.hi.is_finite() && d.hi >= d.lo) {
                    return Err(ConfigError::Invalid(format!(
                        "bad sweep bounds for {}",
                        d.name
                    )));
                }
                if d.n < 2 {
                    return Err(ConfigError::Invalid(format!(
                        "sweep dimension {} needs n >= 2",
                        d.name
                    )));
                }
            }
        }
        if let Some(opt) = &self.optimizer {
            if opt.dims.is_empty() {
                return Err(ConfigError::Invalid("optimizer.dims is empty".into()));
            }
            for d in &opt.dims {
                parse_param_name(&d.name)?;
                if !(d.lo.is_finite() && d.hi.is_finite() && d.hi >= d.lo) {
                    return Err(ConfigError::Invalid(format!(
                        "bad optimizer bounds for {}",
                        d.name
                    )));
                }
            }
            self.de_config(None)?
                .validate(opt.dims.len())
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn memory_steps(&self) -> usize {
        ((self.grid.memory_time / self.grid.dt).round() as usize).max(1)
    }

    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            rel_cutoff: 10f64.powf(self.grid.cutoff_exponent),
            max_bond: self.grid.max_bond,
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::new(0.0, self.grid.dt, self.grid.n_steps)
    }

    pub fn coupling(&self) -> CouplingSpec {
        CouplingSpec::qubit()
    }

    pub fn slm(&self) -> SlmSpec {
        self.slm.clone().unwrap_or_default()
    }

    pub fn pulse_spec(&self) -> PulseSpec {
        let horizon = self.grid.dt * self.grid.n_steps as f64;
        PulseSpec {
            tau: self.pulse.tau,
            delta: self.pulse.delta,
            theta: self.pulse.theta,
            t_center: self.pulse.t_center.unwrap_or(0.5 * horizon),
            mask: self.pulse.mask.clone(),
        }
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec {
            detunings: self.ensemble.detunings.clone(),
        }
    }

    pub fn objective_value(&self) -> Result<Objective, ConfigError> {
        match self.objective.kind.as_str() {
            "trace-distance" => {
                let name = self.objective.target.as_deref().unwrap_or("y+");
                let target = match name {
                    "y+" => states::y_plus(),
                    "y-" => states::y_minus(),
                    "x+" => states::x_plus(),
                    "up" => states::up(),
                    "down" => states::down(),
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "unknown target state \"{other}\""
                        )))
                    }
                };
                Ok(Objective::TraceDistanceTo(target))
            }
            "rms-equator" => Ok(Objective::RmsEquatorDistance),
            other => Err(ConfigError::Invalid(format!(
                "unknown objective kind \"{other}\""
            ))),
        }
    }

    /// Parameter space from the sweep section (two dimensions).
    pub fn sweep_space(&self) -> Result<(ParameterSpace, usize, usize), ConfigError> {
        let sw = self.sweep.as_ref().ok_or(ConfigError::MissingSection("sweep"))?;
        let dims = vec![
            ParamDim {
                name: parse_param_name(&sw.dim1.name)?,
                lo: sw.dim1.lo,
                hi: sw.dim1.hi,
            },
            ParamDim {
                name: parse_param_name(&sw.dim2.name)?,
                lo: sw.dim2.lo,
                hi: sw.dim2.hi,
            },
        ];
        let space = ParameterSpace {
            dims,
            base: self.pulse_spec(),
        };
        space
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok((space, sw.dim1.n, sw.dim2.n))
    }

    /// Parameter space from the optimizer section.
    pub fn optimizer_space(&self) -> Result<ParameterSpace, ConfigError> {
        let opt = self
            .optimizer
            .as_ref()
            .ok_or(ConfigError::MissingSection("optimizer"))?;
        let dims = opt
            .dims
            .iter()
            .map(|d| {
                Ok(ParamDim {
                    name: parse_param_name(&d.name)?,
                    lo: d.lo,
                    hi: d.hi,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let space = ParameterSpace {
            dims,
            base: self.pulse_spec(),
        };
        space
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(space)
    }

    pub fn de_config(&self, seed_override: Option<u64>) -> Result<DeConfig, ConfigError> {
        let opt = self
            .optimizer
            .as_ref()
            .ok_or(ConfigError::MissingSection("optimizer"))?;
        Ok(DeConfig {
            population_per_dim: opt.population_per_dim,
            mutation: opt.mutation,
            crossover: opt.crossover,
            max_generations: opt.max_generations,
            max_evaluations: opt.max_evaluations,
            budget_seconds: None,
            tol: opt.tol,
            seed: seed_override.unwrap_or(self.seed),
            initial_members: opt.initial_members.clone(),
        })
    }

    /// Provenance hash over everything that determines the process tensor:
    /// bath, discretization, memory, truncation policy, and coupling.
    pub fn bath_hash(&self) -> String {
        let payload = serde_json::json!({
            "bath": self.bath,
            "dt": self.grid.dt,
            "n_steps": self.grid.n_steps,
            "memory_steps": self.memory_steps(),
            "cutoff_exponent": self.grid.cutoff_exponent,
            "max_bond": self.grid.max_bond,
            "coupling": self.coupling(),
        });
        hash_hex(payload.to_string().as_bytes())
    }
}

/// First 16 hex characters of SHA-256.
pub fn hash_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join("")
}

pub fn parse_param_name(name: &str) -> Result<ParamName, ConfigError> {
    match name {
        "tau" => Ok(ParamName::Tau),
        "delta" => Ok(ParamName::Delta),
        "theta" => Ok(ParamName::Theta),
        "phi" => Ok(ParamName::Phi),
        other => {
            if let Some(idx) = other.strip_prefix("slope") {
                idx.parse::<usize>()
                    .map(ParamName::Slope)
                    .map_err(|_| ConfigError::Invalid(format!("bad parameter name \"{other}\"")))
            } else {
                Err(ConfigError::Invalid(format!(
                    "unknown parameter name \"{other}\""
                )))
            }
        }
    }
}
