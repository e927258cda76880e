//! TOML experiment configuration.
//!
//! A config file has four sections plus two top-level keys:
//!
//! ```toml
//! seed = 7            # RNG seed; --seed overrides
//! trials = 100        # modified-ctr trial count
//!
//! [instance]          # auction parameters
//! [scorer]            # controller parameters (all optional)
//! [noise]             # dynamic-experiment perturbations
//! [output]            # output directory
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use wgsp::auction::AuctionInstance;
use wgsp::ctr::{CompetitorGroupCtr, CtrModel, ProductFormCtr};
use wgsp::ScorerParams;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Trial count for the modified-CTR experiment.
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub instance: InstanceConfig,
    #[serde(default)]
    pub scorer: ScorerSection,
    pub noise: Option<NoiseSection>,
    pub output: OutputSection,
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Product,
    CompetitorGroup,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub model: ModelKind,
    /// Per-click values; drawn per trial when absent (competitor-group).
    pub values: Option<Vec<f64>>,
    /// Ad-specific click factors; drawn per trial when absent.
    pub ad_factors: Option<Vec<f64>>,
    /// Position factors for the real slots; entries beyond the slot count
    /// must be zero and stand for undisplayed padding.
    pub position_factors: Vec<f64>,
    pub slots: usize,
    #[serde(default)]
    pub reserve_price: f64,
    /// Swap the leading `slots` entries of `ad_factors` and
    /// `position_factors`. Lets a config keep vectors exactly as published
    /// elsewhere while correcting transposed labels; the dynamic-experiment
    /// configs shipped in `configs/` rely on this.
    #[serde(default)]
    pub swap_factor_labels: bool,
    pub group1_size: Option<usize>,
    pub group2_size: Option<usize>,
    pub group1_users: Option<f64>,
    pub group2_users: Option<f64>,
    /// Inclusive integer range for per-trial value draws.
    #[serde(default = "default_value_range")]
    pub value_range: [u32; 2],
    /// Inclusive integer range for per-trial ad-factor draws.
    #[serde(default = "default_ad_factor_range")]
    pub ad_factor_range: [u32; 2],
}

fn default_value_range() -> [u32; 2] {
    [1, 20]
}

fn default_ad_factor_range() -> [u32; 2] {
    [5, 70]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSection {
    #[serde(default = "default_initial_score")]
    pub initial_score: f64,
    #[serde(default = "default_epsilon_ratio")]
    pub epsilon_ratio: f64,
    #[serde(default = "default_delta_ratio")]
    pub delta_ratio: f64,
    #[serde(default = "default_max_adjustments")]
    pub max_adjustments: usize,
}

fn default_initial_score() -> f64 {
    100.0
}

fn default_epsilon_ratio() -> f64 {
    1e-3
}

fn default_delta_ratio() -> f64 {
    1e-2
}

fn default_max_adjustments() -> usize {
    20_000
}

impl Default for ScorerSection {
    fn default() -> Self {
        Self {
            initial_score: default_initial_score(),
            epsilon_ratio: default_epsilon_ratio(),
            delta_ratio: default_delta_ratio(),
            max_adjustments: default_max_adjustments(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub value_variance: f64,
    pub ad_factor_variance: f64,
    pub position_factor_variance: f64,
    #[serde(default = "default_instances")]
    pub instances: usize,
}

fn default_instances() -> usize {
    11
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub epsilon_ratio: Option<f64>,
    pub delta_ratio: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.output.dir = out.clone();
        }
        if let Some(eps) = overrides.epsilon_ratio {
            self.scorer.epsilon_ratio = eps;
        }
        if let Some(delta) = overrides.delta_ratio {
            self.scorer.delta_ratio = delta;
        }
    }

    fn validate(&self) -> Result<()> {
        let inst = &self.instance;
        if inst.slots == 0 {
            bail!("[instance] slots must be positive");
        }
        if let Some(values) = &inst.values {
            if values.iter().any(|v| *v <= 0.0) {
                bail!("[instance] values must be positive");
            }
        }
        if inst.position_factors.is_empty() {
            bail!("[instance] position_factors must be non-empty");
        }
        if self.scorer.epsilon_ratio <= 0.0 || self.scorer.delta_ratio < 0.0 {
            bail!("[scorer] epsilon_ratio must be positive and delta_ratio non-negative");
        }
        if let Some(noise) = &self.noise {
            if noise.value_variance < 0.0
                || noise.ad_factor_variance < 0.0
                || noise.position_factor_variance < 0.0
            {
                bail!("[noise] variances must be non-negative");
            }
        }
        match inst.model {
            ModelKind::Product => {
                if inst.values.is_none() || inst.ad_factors.is_none() {
                    bail!("[instance] product model needs explicit values and ad_factors");
                }
            }
            ModelKind::CompetitorGroup => {
                if inst.group1_size.is_none()
                    || inst.group2_size.is_none()
                    || inst.group1_users.is_none()
                    || inst.group2_users.is_none()
                {
                    bail!(
                        "[instance] competitor-group model needs group1_size, group2_size, \
                         group1_users, group2_users"
                    );
                }
                if inst.group1_size == Some(0) {
                    bail!("[instance] group1_size must be positive");
                }
                if inst.value_range[0] == 0 || inst.value_range[0] > inst.value_range[1] {
                    bail!("[instance] value_range must be a non-empty positive range");
                }
                if inst.ad_factor_range[0] > inst.ad_factor_range[1] {
                    bail!("[instance] ad_factor_range must be non-empty");
                }
            }
        }
        Ok(())
    }

    pub fn scorer_params(&self) -> ScorerParams {
        ScorerParams {
            initial_score: self.scorer.initial_score,
            epsilon_ratio: self.scorer.epsilon_ratio,
            delta_ratio: self.scorer.delta_ratio,
            max_adjustments: self.scorer.max_adjustments,
            behavior: None,
        }
    }

    pub fn n_advertisers(&self) -> Result<usize> {
        match self.instance.model {
            ModelKind::Product => Ok(self
                .instance
                .values
                .as_ref()
                .expect("validated")
                .len()),
            ModelKind::CompetitorGroup => Ok(self.instance.group1_size.unwrap()
                + self.instance.group2_size.unwrap()),
        }
    }
}

/// Base product-form parameter set after label fixes and padding checks.
#[derive(Debug, Clone)]
pub struct ProductParams {
    pub values: Vec<f64>,
    pub ad_factors: Vec<f64>,
    /// Real-slot factors only, strictly descending.
    pub position_factors: Vec<f64>,
    pub slots: usize,
    pub reserve_price: f64,
}

impl ProductParams {
    pub fn instance(&self) -> Result<AuctionInstance<f64>> {
        let n = self.values.len();
        let ctr = CtrModel::Product(ProductFormCtr::new(
            self.ad_factors.clone(),
            self.position_factors.clone(),
            n,
            self.slots,
        )?);
        Ok(AuctionInstance::new(
            self.values.clone(),
            self.slots,
            self.reserve_price,
            ctr,
        )?)
    }
}

/// Trim a position vector to the real slots, insisting that any padding
/// entries beyond the slot count are zero.
fn real_slot_factors(position_factors: &[f64], slots: usize, n: usize) -> Result<Vec<f64>> {
    let n_real = slots.min(n);
    if position_factors.len() != n_real && position_factors.len() != n {
        bail!(
            "position_factors must list the {n_real} real slots (optionally padded with zeros \
             up to {n} entries), got {}",
            position_factors.len()
        );
    }
    if position_factors[n_real..].iter().any(|s| *s != 0.0) {
        bail!("position_factors beyond the slot count must be zero");
    }
    Ok(position_factors[..n_real].to_vec())
}

/// Resolve the product-form parameters from a config, applying the label
/// swap if requested.
pub fn product_params(config: &ExperimentConfig) -> Result<ProductParams> {
    let inst = &config.instance;
    if inst.model != ModelKind::Product {
        bail!("this experiment needs [instance] model = \"product\"");
    }
    let values = inst.values.clone().expect("validated");
    let n = values.len();
    let mut ad_factors = inst.ad_factors.clone().expect("validated");
    if ad_factors.len() != n {
        bail!("ad_factors must have one entry per advertiser ({n})");
    }
    let mut position_source = inst.position_factors.clone();
    if inst.swap_factor_labels {
        let k = inst.slots.min(n).min(ad_factors.len()).min(position_source.len());
        for j in 0..k {
            std::mem::swap(&mut ad_factors[j], &mut position_source[j]);
        }
    }
    let position_factors = real_slot_factors(&position_source, inst.slots, n)?;
    Ok(ProductParams {
        values,
        ad_factors,
        position_factors,
        slots: inst.slots,
        reserve_price: inst.reserve_price,
    })
}

/// Build a competitor-group instance for one trial's drawn values and
/// ad factors.
pub fn group_instance(
    config: &ExperimentConfig,
    values: Vec<f64>,
    ad_factors: Vec<f64>,
) -> Result<AuctionInstance<f64>> {
    let inst = &config.instance;
    if inst.model != ModelKind::CompetitorGroup {
        bail!("this experiment needs [instance] model = \"competitor-group\"");
    }
    let n = config.n_advertisers()?;
    if values.len() != n || ad_factors.len() != n {
        bail!("drawn parameters must have one entry per advertiser ({n})");
    }
    let group1: BTreeSet<usize> = (0..inst.group1_size.unwrap()).collect();
    let position_factors = real_slot_factors(&inst.position_factors, inst.slots, n)?;
    let ctr = CtrModel::CompetitorGroup(CompetitorGroupCtr::new(
        group1,
        inst.group1_users.unwrap(),
        inst.group2_users.unwrap(),
        ad_factors,
        position_factors,
        n,
        inst.slots,
    )?);
    Ok(AuctionInstance::new(values, inst.slots, inst.reserve_price, ctr)?)
}
