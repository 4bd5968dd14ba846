use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Face, PenaltyConfig, SolverChoice};
use crate::inverse::ObjectiveWeighting;
use crate::operators::{Flavor, SUPPORTED_ORDERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Convergence1d,
    Convergence2d,
    Forward1d,
    Forward2d,
    Inverse1d,
    Inverse2d,
    CertifyOps,
}

impl Experiment {
    pub fn dim(self) -> usize {
        match self {
            Experiment::Convergence2d | Experiment::Forward2d | Experiment::Inverse2d => 2,
            _ => 1,
        }
    }
}

/// Time flavors `(i, j)`, written as `["minus", "center"]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlavorPair(pub Flavor, pub Flavor);

impl FlavorPair {
    pub fn all() -> Vec<FlavorPair> {
        Flavor::ALL.iter().flat_map(|&i| Flavor::ALL.iter().map(move |&j| FlavorPair(i, j))).collect()
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.0.label(), self.1.label())
    }
}

/// Block count shared by every grid or given per grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Blocks {
    Shared(usize),
    PerGrid(Vec<usize>),
}

impl Default for Blocks {
    fn default() -> Self {
        Blocks::Shared(1)
    }
}

impl Blocks {
    pub fn for_grid(&self, i: usize) -> usize {
        match self {
            Blocks::Shared(b) => *b,
            Blocks::PerGrid(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Initial {
    /// `Π cos(π x_a)`, the displacement with a closed-form solution.
    Cosine,
    /// `exp(-width · |x|²)`.
    Gaussian {
        width: f64,
    },
    Zero,
}

/// Robin parameters `α u_x + β u` of both faces of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceConfig {
    pub alpha_left: f64,
    pub beta_left: f64,
    pub alpha_right: f64,
    pub beta_right: f64,
}

impl FaceConfig {
    pub fn faces(&self) -> (Face, Face) {
        (Face::robin(self.alpha_left, self.beta_left), Face::robin(self.alpha_right, self.beta_right))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyOverride {
    pub mu1: f64,
    pub mu3: f64,
}

fn default_c() -> f64 {
    1.0
}

fn default_final_time() -> f64 {
    2.0
}

fn default_max_iter() -> usize {
    10
}

fn default_snapshots() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub order: usize,
    /// Defaults to all four pairs for convergence studies and
    /// `["minus", "minus"]` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavors: Option<Vec<FlavorPair>>,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Spacing `Δx = Δy = Δt` of each refinement level.
    #[serde(default)]
    pub grids: Vec<f64>,
    #[serde(default)]
    pub blocks: Blocks,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<PenaltyOverride>,
    /// One entry per axis; homogeneous Neumann when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<FaceConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default)]
    pub weighting: ObjectiveWeighting,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Number of evenly spaced forward snapshots.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn flavor_pairs(&self) -> Vec<FlavorPair> {
        match (&self.flavors, self.experiment) {
            (Some(f), _) => f.clone(),
            (None, Experiment::Convergence1d | Experiment::Convergence2d) => FlavorPair::all(),
            (None, _) => vec![FlavorPair(Flavor::Minus, Flavor::Minus)],
        }
    }

    pub fn penalty_config(&self) -> PenaltyConfig {
        self.penalty.map(|p| PenaltyConfig::with_mu(p.mu1, p.mu3)).unwrap_or_default()
    }

    pub fn initial_condition(&self) -> Initial {
        self.initial.unwrap_or(match self.experiment {
            Experiment::Inverse1d => Initial::Gaussian { width: 100.0 },
            Experiment::Inverse2d => Initial::Gaussian { width: 8.0 },
            _ => Initial::Cosine,
        })
    }

    /// Every violated constraint, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !SUPPORTED_ORDERS.contains(&self.order) {
            v.push(format!("order must be one of {SUPPORTED_ORDERS:?}, got {}", self.order));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            v.push(format!("c must be positive, got {}", self.c));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            v.push(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !(self.final_time > 0.0) {
            v.push(format!("final_time must be positive, got {}", self.final_time));
        }
        if self.experiment != Experiment::CertifyOps {
            if self.grids.is_empty() {
                v.push("grids must list at least one spacing".into());
            }
            let conv = matches!(self.experiment, Experiment::Convergence1d | Experiment::Convergence2d);
            if conv && self.grids.len() < 2 {
                v.push("a convergence study needs at least two grids".into());
            }
            if let Blocks::PerGrid(b) = &self.blocks {
                if b.len() != self.grids.len() {
                    v.push(format!("blocks lists {} counts for {} grids", b.len(), self.grids.len()));
                }
            }
            for (i, &d) in self.grids.iter().enumerate() {
                if !(d > 0.0) {
                    v.push(format!("grid spacing {d} must be positive"));
                    continue;
                }
                let nb = match &self.blocks {
                    Blocks::PerGrid(b) if i >= b.len() => continue,
                    b => b.for_grid(i),
                };
                if nb == 0 {
                    v.push("block counts must be positive".into());
                    continue;
                }
                if !is_whole(2.0 / d) {
                    v.push(format!("spacing {d} does not divide the domain length 2"));
                }
                let steps = self.final_time / d;
                if !is_whole(steps) || !(steps.round() as usize).is_multiple_of(nb) {
                    v.push(format!("spacing {d} does not split final time {} into {nb} equal blocks", self.final_time));
                }
            }
        }
        if let Some(faces) = &self.faces {
            if faces.len() != self.experiment.dim() {
                v.push(format!("faces lists {} axes for a {}D experiment", faces.len(), self.experiment.dim()));
            }
            for (a, f) in faces.iter().enumerate() {
                if f.alpha_left == 0.0 || f.alpha_right == 0.0 {
                    v.push(format!("axis {a}: alpha must be nonzero (Dirichlet faces are not supported)"));
                }
                if f.alpha_left * f.beta_left > 0.0 {
                    v.push(format!("axis {a}: alpha_left * beta_left <= 0 is violated"));
                }
                if f.alpha_right * f.beta_right < 0.0 {
                    v.push(format!("axis {a}: alpha_right * beta_right >= 0 is violated"));
                }
            }
        }
        let pen = self.penalty_config();
        v.extend(pen.violations());
        let inverse = matches!(self.experiment, Experiment::Inverse1d | Experiment::Inverse2d);
        if inverse && !pen.is_default_initial() {
            v.push("inversion requires the default penalties mu1 = mu3 = -1".into());
        }
        if let Some(Initial::Gaussian { width }) = self.initial {
            if !(width > 0.0) {
                v.push(format!("gaussian width must be positive, got {width}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

fn is_whole(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9 * x.abs().max(1.0)
}

/// Parses JSON text; syntax and schema errors carry their line and column.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}
