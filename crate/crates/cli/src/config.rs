//! Run configuration, loaded from the `--config` JSON file. Every section
//! and field is optional; missing ones take their defaults.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use savsim_analytics::geoalign::{SelectionCriteria, DEFAULT_OVERLAP_THRESHOLD};
use savsim_analytics::stats::{StepwiseConfig, TransformConfig};
use savsim_core::SimConfig;

use crate::family::GenSpec;
use crate::sweep::SweepSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Minimum share of a zone's area inside the city boundary.
    pub overlap_threshold: f64,
    pub selection: SelectionCriteria,
    pub transform: TransformConfig,
    pub stepwise: StepwiseConfig,
    /// Permutation draws for Moran's I; 0 skips the permutation p-value.
    pub moran_permutations: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            selection: SelectionCriteria::default(),
            transform: TransformConfig::default(),
            stepwise: StepwiseConfig::default(),
            moran_permutations: 999,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            bail!("overlap_threshold = {} must lie in [0, 1]", self.overlap_threshold);
        }
        if !(0.0..=1.0).contains(&self.selection.min_share) {
            bail!("selection.min_share = {} must lie in [0, 1]", self.selection.min_share);
        }
        let s = &self.stepwise;
        if !(s.r_max > 0.0 && s.r_max <= 1.0) {
            bail!("stepwise.r_max = {} must lie in (0, 1]", s.r_max);
        }
        if !(s.vif_max >= 1.0) {
            bail!("stepwise.vif_max = {} must be at least 1", s.vif_max);
        }
        if !(s.alpha > 0.0 && s.alpha < 1.0) {
            bail!("stepwise.alpha = {} must lie in (0, 1)", s.alpha);
        }
        if !(self.transform.threshold >= 0.0) {
            bail!("transform.threshold = {} must be non-negative", self.transform.threshold);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sim: SimConfig,
    pub analysis: AnalysisConfig,
    pub sweep: SweepSpec,
    pub generate: GenSpec,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.analysis.validate()?;
        self.sweep.validate()?;
        self.generate.validate()?;
        Ok(())
    }
}
