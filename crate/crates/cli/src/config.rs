//! Run configuration: one JSON file per run, machine-diffable, with every
//! tolerance and threshold surfaced.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use torbesov::besov::Exponent;
use torbesov::estimates::SpectralEnvelope;
use torbesov::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CheckDyadic,
    KernelBound,
    BlockEstimate,
    CommutatorDecay,
    Opnorm,
    BesovNorm,
    Selftest,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ExperimentKind::CheckDyadic => "check-dyadic",
            ExperimentKind::KernelBound => "kernel-bound",
            ExperimentKind::BlockEstimate => "block-estimate",
            ExperimentKind::CommutatorDecay => "commutator-decay",
            ExperimentKind::Opnorm => "opnorm",
            ExperimentKind::BesovNorm => "besov-norm",
            ExperimentKind::Selftest => "selftest",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub n: usize,
    pub d: usize,
    pub kmax: i64,
    /// Points per axis; defaults to the Nyquist margin
    /// `2 (kmax + symbol x-bandwidth) + 1`.
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub plateau: f64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(default = "default_j_lo")]
    pub j_lo: usize,
    #[serde(default = "default_j_hi")]
    pub j_hi: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_p")]
    pub p: Exponent,
    #[serde(default = "default_q")]
    pub q: Exponent,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_growth")]
    pub growth_factor: f64,
    #[serde(default = "default_slope_tol")]
    pub slope_tolerance: f64,
    #[serde(default = "default_stability")]
    pub stability_factor: f64,
    #[serde(default = "default_guard")]
    pub denominator_guard: f64,
    /// Difference order for check-dyadic (defaults to n + 1 at run time).
    #[serde(default)]
    pub rho_check: Option<u32>,
    #[serde(default = "default_envelope")]
    pub envelope: SpectralEnvelope,
    /// Report-only operator-norm scan over s values.
    #[serde(default)]
    pub scan_s: Option<Vec<f64>>,
}

fn default_j_lo() -> usize {
    2
}
fn default_j_hi() -> usize {
    8
}
fn default_theta() -> f64 {
    tolerances::DEFAULT_THETA
}
fn default_s() -> f64 {
    0.5
}
fn default_p() -> Exponent {
    Exponent::two()
}
fn default_q() -> Exponent {
    Exponent::one()
}
fn default_trials() -> usize {
    8
}
fn default_growth() -> f64 {
    tolerances::GROWTH_FACTOR
}
fn default_slope_tol() -> f64 {
    tolerances::SLOPE_TOLERANCE
}
fn default_stability() -> f64 {
    tolerances::STABILITY_FACTOR
}
fn default_guard() -> f64 {
    tolerances::DENOMINATOR_GUARD
}
fn default_envelope() -> SpectralEnvelope {
    SpectralEnvelope::Flat
}

impl Default for EstimateConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults populate")
    }
}

/// Test function for the besov-norm experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    Constant { value: f64 },
    SingleFrequency { k: Vec<i64> },
    Random { seed: u64, trial: usize },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub geometry: Geometry,
    #[serde(default)]
    pub bump: Option<BumpConfig>,
    #[serde(default)]
    pub symbol: Option<SymbolConfig>,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub function: Option<FunctionConfig>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

impl RunConfig {
    /// Parse and validate; errors carry the JSON field path and position.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| format!("config field `{}`: {}", e.path(), e.inner()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        let g = &self.geometry;
        if g.n == 0 {
            return Err("geometry.n must be >= 1".into());
        }
        if g.d == 0 {
            return Err("geometry.d must be >= 1".into());
        }
        if g.kmax < 1 {
            return Err("geometry.kmax must be >= 1".into());
        }
        if let Some(points) = g.points {
            let required = (2 * g.kmax + 1) as usize;
            if points < required {
                return Err(format!(
                    "geometry.points = {points} violates the Nyquist rule N >= 2*Kmax+1 = {required}"
                ));
            }
        }
        if !(0.0 < self.estimate.theta && self.estimate.theta < 1.0) {
            return Err(format!(
                "estimate.theta must lie in (0,1), got {}",
                self.estimate.theta
            ));
        }
        if self.estimate.j_lo > self.estimate.j_hi {
            return Err(format!(
                "estimate j range is empty: {}..={}",
                self.estimate.j_lo, self.estimate.j_hi
            ));
        }
        if let Some(b) = &self.bump {
            if !(1.0 <= b.plateau && b.plateau < b.cutoff && b.cutoff <= 2.0) {
                return Err(format!(
                    "bump must satisfy 1 <= plateau < cutoff <= 2, got ({}, {})",
                    b.plateau, b.cutoff
                ));
            }
        }
        let needs_symbol = matches!(
            self.experiment,
            ExperimentKind::KernelBound
                | ExperimentKind::BlockEstimate
                | ExperimentKind::CommutatorDecay
                | ExperimentKind::Opnorm
        );
        if needs_symbol && self.symbol.is_none() {
            return Err(format!(
                "experiment `{}` requires a symbol section",
                self.experiment
            ));
        }
        if self.experiment == ExperimentKind::BesovNorm && self.function.is_none() {
            return Err("experiment `besov-norm` requires a function section".into());
        }
        Ok(())
    }
}
