//! Simulation config files. Paths inside a config are resolved relative to
//! the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use torquesplit::allocator::{PowertrainConfig, DEFAULT_GRID_STEP};
use torquesplit::cyclesim::{SimConfig, SimMethod};
use torquesplit::powertrain::{DriveCycle, LossMap, MotorSpec, SpeedBlend, SpeedSampling, TorqueCurve, VehicleParams};
use torquesplit::sos::DEFAULT_EPSILON;
use torquesplit::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorEntry {
    pub label: String,
    pub gear_ratio: f64,
    /// Loss map CSV.
    pub loss_map: PathBuf,
    #[serde(default)]
    pub max_torque_curve: Option<TorqueCurve>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub vehicle: VehicleParams,
    pub config: PowertrainConfig,
    pub front: MotorEntry,
    pub rear: MotorEntry,
    #[serde(default = "all_methods")]
    pub methods: Vec<SimMethod>,
    /// Cycle CSVs (`t_s,v_mps`).
    #[serde(default)]
    pub cycles: Vec<PathBuf>,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampling: SpeedSampling,
    #[serde(default)]
    pub blend: SpeedBlend,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn all_methods() -> Vec<SimMethod> {
    SimMethod::ALL.to_vec()
}
fn default_degree() -> usize {
    10
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_grid_step() -> f64 {
    DEFAULT_GRID_STEP
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A config file with its paths made absolute.
pub struct Loaded {
    pub file: ConfigFile,
    pub front: MotorSpec,
    pub rear: MotorSpec,
    pub cycles: Vec<DriveCycle>,
    pub output_dir: PathBuf,
}

fn motor(entry: &MotorEntry, base: &Path) -> Result<MotorSpec> {
    let map = LossMap::from_csv_path(base.join(&entry.loss_map))?;
    let spec = MotorSpec::new(entry.label.clone(), entry.gear_ratio, map)?;
    Ok(match &entry.max_torque_curve {
        Some(c) => spec.with_torque_curve(TorqueCurve::new(c.points().to_vec())?),
        None => spec,
    })
}

pub fn load(path: &Path, seed: Option<u64>) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)?;
    let mut file: ConfigFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if let Some(s) = seed {
        file.seed = s;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let front = motor(&file.front, base)?;
    let rear = motor(&file.rear, base)?;
    let cycles = file
        .cycles
        .iter()
        .map(|c| DriveCycle::from_csv_path(base.join(c)))
        .collect::<Result<Vec<_>>>()?;
    let output_dir = base.join(&file.output_dir);
    Ok(Loaded {
        file,
        front,
        rear,
        cycles,
        output_dir,
    })
}

impl Loaded {
    /// Module-level config for one cycle (an empty cycle for allocation and
    /// sweeps).
    pub fn sim_config(&self, methods: Vec<SimMethod>, cycle: Option<&DriveCycle>) -> Result<SimConfig> {
        let f = &self.file;
        let cycle = match cycle {
            Some(c) => c.clone(),
            None => DriveCycle::new("none", 1.0, Vec::new())?,
        };
        let mut cfg = SimConfig::new(f.vehicle, f.config, self.front.clone(), self.rear.clone(), methods, cycle);
        cfg.degree = f.degree;
        cfg.epsilon = f.epsilon;
        cfg.grid_step = f.grid_step;
        cfg.seed = f.seed;
        cfg.sampling = f.sampling;
        cfg.blend = f.blend;
        cfg.validate()?;
        Ok(cfg)
    }
}
