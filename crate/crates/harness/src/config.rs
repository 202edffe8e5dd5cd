//! JSON configuration documents for the subcommands. Unknown keys are
//! rejected so that typos do not silently fall back to defaults.

use std::f64::consts::PI;
use std::path::Path;

use randhmc::kernels::DEFAULT_STEP_CONSTANT;
use randhmc::{SpectrumKind, Variant};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse(&text).map_err(|e| HarnessError::usage(format!("{}: {e}", path.display())))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> std::result::Result<T, serde_json::Error> {
    serde_json::from_str(text)
}

fn default_alpha() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_replicas() -> usize {
    1000
}
fn default_level() -> f64 {
    0.01
}
fn default_min_pool() -> usize {
    1000
}
fn default_constant() -> f64 {
    DEFAULT_STEP_CONSTANT
}
fn default_true() -> bool {
    true
}
fn default_kind() -> SpectrumKind {
    SpectrumKind::TwoPoint
}

/// Convergence thresholds for pooled replica endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_level")]
    pub level: f64,
    /// Divide the per-coordinate KS level by `d`.
    #[serde(default = "default_true")]
    pub bonferroni: bool,
    /// Smallest pool of endpoints a convergence decision is made on.
    #[serde(default = "default_min_pool")]
    pub min_pool: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            level: default_level(),
            bonferroni: true,
            min_pool: default_min_pool(),
        }
    }
}

impl Thresholds {
    fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(HarnessError::usage("thresholds.level must lie in (0, 1)"));
        }
        if self.min_pool < 100 {
            return Err(HarnessError::usage("thresholds.min_pool must be at least 100"));
        }
        Ok(())
    }
}

/// Replacements for the derived step size, set parameter and step counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub k0: Option<usize>,
    /// Largest number of adjusted steps tried.
    #[serde(default)]
    pub k: Option<usize>,
    /// Constant in front of the default warm-up length.
    #[serde(default = "default_constant")]
    pub warmup_constant: f64,
    /// Constant in front of the default adjusted step count.
    #[serde(default = "default_constant")]
    pub adjusted_constant: f64,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            delta: None,
            gamma: None,
            k0: None,
            k: None,
            warmup_constant: DEFAULT_STEP_CONSTANT,
            adjusted_constant: DEFAULT_STEP_CONSTANT,
        }
    }
}

impl Overrides {
    fn validate(&self) -> Result<()> {
        if !(self.warmup_constant > 0.0 && self.adjusted_constant > 0.0) {
            return Err(HarnessError::usage("step-count constants must be positive"));
        }
        if matches!(self.gamma, Some(g) if !(g >= 1.0)) {
            return Err(HarnessError::usage("gamma must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "SweepConfig::default_id")]
    pub experiment_id: String,
    pub dims: Vec<usize>,
    pub kappas: Vec<f64>,
    /// Smallest eigenvalue; each grid point uses `beta = kappa * alpha`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_kind")]
    pub spectrum_kind: SpectrumKind,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub overrides: Overrides,
    /// Ablation: unadjusted kernel with the single time `n * delta` in place
    /// of the pipeline.
    #[serde(default)]
    pub fixed_time_steps: Option<usize>,
    #[serde(default)]
    pub record_wall_time: bool,
}

impl SweepConfig {
    fn default_id() -> String {
        "sweep".into()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(HarnessError::usage("replicas must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(HarnessError::usage("epsilon must lie in (0, 1/2)"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(HarnessError::usage("alpha must be positive"));
        }
        if self.dims.contains(&0) {
            return Err(HarnessError::usage("dimensions must be positive"));
        }
        if self.kappas.iter().any(|k| !(*k >= 1.0 && k.is_finite())) {
            return Err(HarnessError::usage("condition numbers must be >= 1"));
        }
        if self.fixed_time_steps == Some(0) {
            return Err(HarnessError::usage("fixed_time_steps must be positive"));
        }
        self.thresholds.validate()?;
        self.overrides.validate()?;
        let grid = self.dims.len() * self.kappas.len();
        if grid > 0 && self.replicas < self.thresholds.min_pool {
            return Err(HarnessError::usage(format!(
                "replicas ({}) must be at least thresholds.min_pool ({})",
                self.replicas, self.thresholds.min_pool
            )));
        }
        Ok(())
    }

    /// Grid points `(d, kappa)`, dimension-major.
    pub fn grid(&self) -> Vec<(usize, f64)> {
        self.dims
            .iter()
            .flat_map(|&d| self.kappas.iter().map(move |&k| (d, k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(default = "ChainConfig::default_id")]
    pub experiment_id: String,
    /// Kernel for the main phase; warm-up steps are always unadjusted.
    #[serde(default = "ChainConfig::default_variant")]
    pub variant: Variant,
    /// Defaults to lazy for the adjusted kernel only.
    #[serde(default)]
    pub lazy: Option<bool>,
    pub d: usize,
    pub kappa: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_kind")]
    pub spectrum_kind: SpectrumKind,
    /// Hide the eigenbasis behind a random rotation.
    #[serde(default)]
    pub rotate: bool,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "ChainConfig::default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Write every `n`-th state of every replica to the trajectory file.
    #[serde(default)]
    pub trajectory_thin: Option<usize>,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub fixed_time_steps: Option<usize>,
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ChainConfig {
    fn default_id() -> String {
        "chain".into()
    }
    fn default_variant() -> Variant {
        Variant::Adjusted
    }
    fn default_replicas() -> usize {
        1
    }

    pub fn is_lazy(&self) -> bool {
        self.lazy.unwrap_or(self.variant == Variant::Adjusted)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.replicas == 0 {
            return Err(HarnessError::usage("d and replicas must be at least 1"));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(HarnessError::usage("kappa must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(HarnessError::usage("alpha must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(HarnessError::usage("epsilon must lie in (0, 1/2)"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(HarnessError::usage("level must lie in (0, 1)"));
        }
        if matches!(&self.x0, Some(x) if x.len() != self.d) {
            return Err(HarnessError::usage("x0 must have d entries"));
        }
        if self.trajectory_thin == Some(0) || self.fixed_time_steps == Some(0) {
            return Err(HarnessError::usage(
                "trajectory_thin and fixed_time_steps must be positive",
            ));
        }
        self.overrides.validate()
    }
}

fn default_lemma_beta() -> f64 {
    100.0
}
fn default_lemma_d() -> usize {
    8
}
fn default_n_mc() -> usize {
    100_000
}
fn default_leapfrog_steps() -> usize {
    10_000
}
fn default_states() -> usize {
    1000
}
fn default_e_gamma_dim() -> usize {
    50
}
fn default_e_gamma_samples() -> usize {
    4_000_000
}

/// Settings for the lemma-check suite. All fields have defaults, so `{}` is
/// a valid document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_lemma_beta")]
    pub beta: f64,
    #[serde(default = "default_lemma_d")]
    pub d: usize,
    /// Defaults to `pi / (20 sqrt(beta))`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default = "default_leapfrog_steps")]
    pub leapfrog_steps: usize,
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default = "default_e_gamma_dim")]
    pub e_gamma_dim: usize,
    #[serde(default = "default_e_gamma_samples")]
    pub e_gamma_samples: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        parse("{}").expect("every field has a default")
    }
}

impl LemmaConfig {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(PI / (20.0 * self.beta.sqrt()))
    }

    pub fn validate(&self) -> Result<()> {
        randhmc::TimeSet::build(self.alpha, self.beta, self.delta())
            .map_err(|e| HarnessError::usage(format!("time set: {e}")))?;
        if self.d < 2 || self.e_gamma_dim == 0 {
            return Err(HarnessError::usage("d must be at least 2"));
        }
        if self.n_mc < 10_000 {
            return Err(HarnessError::usage("n_mc must be at least 10000"));
        }
        if self.leapfrog_steps == 0 || self.states == 0 || self.e_gamma_samples == 0 {
            return Err(HarnessError::usage("sample and step counts must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(HarnessError::usage("epsilon must lie in (0, 1/2)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sweep_document() {
        let c: SweepConfig = parse(r#"{"dims": [4], "kappas": [1, 4], "replicas": 1000}"#).unwrap();
        assert_eq!(c.grid(), vec![(4, 1.0), (4, 4.0)]);
        assert_eq!(c.overrides.warmup_constant, 40.0);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse::<SweepConfig>(r#"{"dims": [], "kappas": [], "replica": 3}"#).is_err());
        assert!(parse::<LemmaConfig>(r#"{"bta": 3}"#).is_err());
    }

    #[test]
    fn inconsistent_values_are_usage_errors() {
        let c: SweepConfig = parse(r#"{"dims": [4], "kappas": [4], "replicas": 10}"#).unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let c: SweepConfig = parse(r#"{"dims": [], "kappas": [], "epsilon": 0.7}"#).unwrap();
        assert!(c.validate().is_err());
        let c: LemmaConfig = parse(&format!(r#"{{"beta": 1, "delta": {}}}"#, PI / 10.0)).unwrap();
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        LemmaConfig::default().validate().unwrap();
    }

    #[test]
    fn chain_laziness_default() {
        let c: ChainConfig = parse(r#"{"d": 2, "kappa": 4}"#).unwrap();
        assert!(c.is_lazy());
        let c: ChainConfig = parse(r#"{"d": 2, "kappa": 4, "variant": "unadjusted"}"#).unwrap();
        assert!(!c.is_lazy());
    }
}
