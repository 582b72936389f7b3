//! Experiment description, loadable from JSON.

use std::path::{Path, PathBuf};

use bregman_dlnn::{Algorithm, OptimizerConfig, Regularizer};
use serde::{Deserialize, Serialize};

use crate::data::Init;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Square 5×5 layers, X and Y uniform in [0, 1].
    Exp1,
    /// 2 outputs, 7 inputs and a noisy linear teacher.
    Exp2,
    /// X and Y read from CSV files.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    None,
    L2,
    L1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegSpec {
    pub kind: RegKind,
    pub lambda0: f64,
    /// One value for all layers.
    pub mu: f64,
}

impl Default for RegSpec {
    fn default() -> Self {
        Self { kind: RegKind::L2, lambda0: 0.1, mu: 0.1 }
    }
}

impl RegSpec {
    pub fn regularizer(&self, layers: usize) -> Regularizer {
        match self.kind {
            RegKind::None => Regularizer::None,
            RegKind::L2 => Regularizer::L2 { lambda0: self.lambda0 },
            RegKind::L1 => Regularizer::L1 { mu: vec![self.mu; layers] },
        }
    }
}

/// Optimizer tuning; unset fields keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub step: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub l_bar0: Option<f64>,
    pub nu: Option<f64>,
    pub lipschitz0: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub layers: usize,
    /// Layer widths `[d_1, …, d_{N+1}]`; derived from the experiment if absent.
    pub dims: Option<Vec<usize>>,
    pub samples: usize,
    pub reg: RegSpec,
    pub algorithms: Vec<String>,
    pub max_iters: usize,
    /// First seed; runs cover `seed .. seed + seeds`.
    pub seed: u64,
    pub seeds: u64,
    pub out: PathBuf,
    pub init: Init,
    pub rho: f64,
    pub optimizer: OptimizerSettings,
    pub x_csv: Option<PathBuf>,
    pub y_csv: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            experiment: Experiment::Exp1,
            layers: 3,
            dims: None,
            samples: 50,
            reg: RegSpec::default(),
            algorithms: Algorithm::all().iter().map(Algorithm::tag).collect(),
            max_iters: 2000,
            seed: 0,
            seeds: 1,
            out: PathBuf::from("results"),
            init: Init::Constant { value: 0.1 },
            rho: 1.0,
            optimizer: OptimizerSettings::default(),
            x_csv: None,
            y_csv: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn parsed_algorithms(&self) -> Result<Vec<Algorithm>> {
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("no algorithms selected".into()));
        }
        self.algorithms
            .iter()
            .map(|t| t.parse::<Algorithm>().map_err(BenchError::from))
            .collect()
    }

    /// Layer widths for this experiment, before looking at custom data.
    pub fn layer_dims(&self, data_rows: Option<(usize, usize)>) -> Result<Vec<usize>> {
        let dims = match (&self.dims, self.experiment) {
            (Some(d), _) => d.clone(),
            (None, Experiment::Exp1) => crate::data::experiment1_dims(self.layers),
            (None, Experiment::Exp2) => crate::data::experiment2_dims(self.layers),
            (None, Experiment::Custom) => {
                let (x_rows, y_rows) = data_rows
                    .ok_or_else(|| BenchError::Config("custom data not loaded".into()))?;
                let mut d = vec![x_rows; self.layers + 1];
                d[0] = y_rows;
                d
            }
        };
        if dims.len() != self.layers + 1 {
            return Err(BenchError::Config(format!(
                "{} layers need {} widths, got {:?}",
                self.layers,
                self.layers + 1,
                dims
            )));
        }
        if dims.contains(&0) {
            return Err(BenchError::Config(format!("layer widths must be positive: {dims:?}")));
        }
        Ok(dims)
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        let d = OptimizerConfig::default();
        OptimizerConfig {
            step: o.step.unwrap_or(d.step),
            max_iters: self.max_iters,
            delta: o.delta.unwrap_or(d.delta),
            epsilon: o.epsilon.unwrap_or(d.epsilon),
            l_bar0: o.l_bar0.unwrap_or(d.l_bar0),
            nu: o.nu.unwrap_or(d.nu),
            lipschitz0: o.lipschitz0.unwrap_or(d.lipschitz0),
            tolerance: o.tolerance.unwrap_or(d.tolerance),
            ..d
        }
    }

    /// Checks everything that can be checked without touching the disk.
    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 {
            return Err(BenchError::Config(format!("need at least 2 layers, got {}", self.layers)));
        }
        if self.seeds == 0 {
            return Err(BenchError::Config("seed range is empty".into()));
        }
        if self.max_iters == 0 {
            return Err(BenchError::Config("max_iters must be positive".into()));
        }
        if self.samples == 0 {
            return Err(BenchError::Config("need at least one sample".into()));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(BenchError::Config(format!("rho must be non-negative, got {}", self.rho)));
        }
        if self.experiment == Experiment::Custom && (self.x_csv.is_none() || self.y_csv.is_none()) {
            return Err(BenchError::Config("custom experiment needs x_csv and y_csv".into()));
        }
        self.init.validate()?;
        self.parsed_algorithms()?;
        self.reg.regularizer(self.layers).validate(self.layers)?;
        self.optimizer_config().validate()?;
        if self.experiment != Experiment::Custom {
            self.layer_dims(None)?;
        }
        Ok(())
    }

    pub fn seed_range(&self) -> std::ops::Range<u64> {
        self.seed..self.seed + self.seeds
    }
}
