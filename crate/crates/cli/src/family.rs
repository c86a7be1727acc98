//! Synthetic city families for the `gen` subcommand and the pipeline.
//!
//! `density` and `connectivity` families share one generator seed, so the
//! cities differ only in the knob being varied. `mixed` draws several knobs
//! per city from the master seed.

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use savsim_core::seed::derive_seed;
use savsim_core::{generate_synthetic_city, Scenario, SynthParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Mixed,
    Density,
    Connectivity,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Mixed => "mixed",
            Family::Density => "density",
            Family::Connectivity => "connectivity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub family: Family,
    pub count: usize,
    /// Parameters shared by every city before the family knobs are applied.
    pub base: SynthParams,
    /// Cities are assigned to this many regions in turn.
    pub regions: usize,
    /// Distance between neighbouring city locations (miles).
    pub spacing_miles: f64,
    /// Density multipliers span this range geometrically.
    pub density_range: [f64; 2],
    /// Link keep fractions span this range linearly.
    pub keep_range: [f64; 2],
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            family: Family::Mixed,
            count: 5,
            base: SynthParams {
                n_zones_side: 6,
                halo_rings: 1,
                ..SynthParams::default()
            },
            regions: 1,
            spacing_miles: 25.0,
            density_range: [0.4, 2.5],
            keep_range: [0.3, 1.0],
        }
    }
}

/// Uniform draw in `[0, 1)` from a labelled child seed.
fn unit(seed: u64, label: &str) -> f64 {
    (derive_seed(seed, label) >> 11) as f64 / (1u64 << 53) as f64
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            bail!("generate.count must be at least 1");
        }
        if self.regions == 0 {
            bail!("generate.regions must be at least 1");
        }
        if !(self.spacing_miles > 0.0 && self.spacing_miles.is_finite()) {
            bail!("generate.spacing_miles = {} must be > 0", self.spacing_miles);
        }
        let [dlo, dhi] = self.density_range;
        if !(dlo > 0.0 && dhi >= dlo && dhi.is_finite()) {
            bail!("generate.density_range {:?} must be positive and increasing", self.density_range);
        }
        let [klo, khi] = self.keep_range;
        if !(klo > 0.0 && khi >= klo && khi <= 1.0) {
            bail!("generate.keep_range {:?} must be increasing within (0, 1]", self.keep_range);
        }
        Ok(())
    }

    /// Position of city `i` within a family range: 0 for the first city,
    /// 1 for the last, 0.5 for a family of one.
    fn position(&self, i: usize) -> f64 {
        if self.count == 1 {
            0.5
        } else {
            i as f64 / (self.count - 1) as f64
        }
    }

    fn density_at(&self, t: f64) -> f64 {
        let [lo, hi] = self.density_range;
        lo * (hi / lo).powf(t)
    }

    fn keep_at(&self, t: f64) -> f64 {
        let [lo, hi] = self.keep_range;
        lo + (hi - lo) * t
    }

    /// Generator parameters and seed of every city, in order.
    pub fn city_params(&self, seed: u64) -> Vec<(SynthParams, u64)> {
        let side = (self.count as f64).sqrt().ceil() as usize;
        let family_seed = derive_seed(seed, &format!("gen:{}", self.family.name()));
        (0..self.count)
            .map(|i| {
                let name = format!("{}{:02}", self.family.name(), i);
                let mut p = self.base.clone();
                p.name = name.clone();
                p.region = format!("r{}", i % self.regions);
                p.location = [(i % side) as f64 * self.spacing_miles, (i / side) as f64 * self.spacing_miles];
                let t = self.position(i);
                let city_seed = match self.family {
                    Family::Density => {
                        p.density_multiplier = self.density_at(t);
                        family_seed
                    }
                    Family::Connectivity => {
                        p.link_keep_fraction = self.keep_at(t);
                        family_seed
                    }
                    Family::Mixed => {
                        let s = derive_seed(seed, &format!("gen:{name}"));
                        p.density_multiplier = self.density_at(unit(s, "density"));
                        p.link_keep_fraction = self.keep_at(unit(s, "keep"));
                        p.diversity_mix = 0.2 + 0.6 * unit(s, "diversity");
                        p.extra_diagonal_links = unit(s, "diagonal") < 0.3;
                        s
                    }
                };
                (p, city_seed)
            })
            .collect()
    }

    pub fn generate(&self, seed: u64) -> Result<Vec<Scenario>> {
        self.validate()?;
        self.city_params(seed)
            .iter()
            .map(|(p, s)| Ok(generate_synthetic_city(p, *s)?))
            .collect()
    }
}
