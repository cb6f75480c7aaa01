use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::DEFAULT_PRIOR;
use crate::error::{Error, Result};
use crate::evidence::UncertaintyMeasure;
use crate::kernel::KernelParams;
use crate::voxmap::{MapConfig, DEFAULT_MAX_RANGE, DEFAULT_MIN_WEIGHT};

/// Everything a build or evaluation run needs, read from one JSON file.
/// Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub num_classes: usize,
    pub voxel_size: f64,
    pub kernel: KernelParams<f64>,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
    #[serde(default = "default_min_weight")]
    pub min_weight: f64,
    /// Per-class prior concentration of the kernel baseline.
    #[serde(default = "default_prior")]
    pub sbki_prior: f64,
    #[serde(default = "default_ece_bins")]
    pub ece_bins: usize,
    #[serde(default = "default_ause_steps")]
    pub ause_steps: usize,
    /// Uncertainty exported for evidential maps.
    #[serde(default)]
    pub measure: UncertaintyMeasure,
}

fn default_max_range() -> f64 {
    DEFAULT_MAX_RANGE
}
fn default_min_weight() -> f64 {
    DEFAULT_MIN_WEIGHT
}
fn default_prior() -> f64 {
    DEFAULT_PRIOR
}
fn default_ece_bins() -> usize {
    15
}
fn default_ause_steps() -> usize {
    20
}

impl RunConfig {
    pub fn new(num_classes: usize, voxel_size: f64, kernel: KernelParams<f64>) -> Self {
        Self {
            num_classes,
            voxel_size,
            kernel,
            max_range: DEFAULT_MAX_RANGE,
            min_weight: DEFAULT_MIN_WEIGHT,
            sbki_prior: DEFAULT_PRIOR,
            ece_bins: default_ece_bins(),
            ause_steps: default_ause_steps(),
            measure: UncertaintyMeasure::Vacuity,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = super::read_json(path)?;
        cfg.validate()
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        self.map_config().validate()?;
        if !(self.sbki_prior.is_finite() && self.sbki_prior > 0.0) {
            return Err(Error::invalid("sbki_prior must be > 0"));
        }
        if self.ece_bins == 0 || self.ause_steps == 0 {
            return Err(Error::invalid("ece_bins and ause_steps must be >= 1"));
        }
        Ok(())
    }

    pub fn map_config(&self) -> MapConfig<f64> {
        MapConfig {
            num_classes: self.num_classes,
            voxel_size: self.voxel_size,
            kernel: self.kernel,
            max_range: self.max_range,
            min_weight: self.min_weight,
        }
    }
}
