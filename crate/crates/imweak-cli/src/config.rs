//! JSON run configuration: one document, complex numbers as `[re, im]`
//! pairs, exactly one command.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use imweak::dist::GridDistribution;
use imweak::qcore::{HermitianObservable, StateVector, TwoStateVector, OVERLAP_TOL};
use imweak::scenarios;

use crate::run::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// One of weakvalue | postselect | montecarlo | meter | scenario; must
    /// match the invoked subcommand.
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter: Option<MeterConfig>,
    /// Absorb the prior mean into the pre-selected state before computing
    /// first-order quantities (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_decomposition: Option<bool>,
    /// Weak-regime flag threshold on |Im C_w|·Δk (default 0.1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Row-major complex matrix, entries as [re, im].
    pub observable: Vec<Vec<[f64; 2]>>,
    /// Pre-selected state amplitudes as [re, im].
    pub pre: Vec<[f64; 2]>,
    /// Post-selected state amplitudes as [re, im].
    pub post: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    Gaussian { mean: f64, sigma: f64, n: usize, span: f64 },
    Exponential { rate: f64, n: usize, span: f64 },
    Uniform { a: f64, b: f64, n: usize },
    Table { nodes: Vec<f64>, values: Vec<f64> },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterConfig {
    pub sigma_p: f64,
    pub n: usize,
    pub span: f64,
    /// Interaction strength of the meter coupling e^{-ikPC}.
    pub k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// white_light_phase | michelson_fs | atomic_emission | doppler.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Post-selection angle from orthogonality for the default pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Spectrum override for the optical presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<DistributionConfig>,
    /// Temporal-profile override for the Doppler preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_profile: Option<DistributionConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("cannot parse config {}: {e}", path.display())))
    }

    pub fn build_system(&self) -> Result<(HermitianObservable, TwoStateVector), CliError> {
        let sys = self
            .system
            .as_ref()
            .ok_or_else(|| CliError::config("config is missing the `system` section"))?;
        sys.build()
    }

    pub fn build_distribution(&self, config_dir: &Path) -> Result<GridDistribution, CliError> {
        let spec = self
            .distribution
            .as_ref()
            .ok_or_else(|| CliError::config("config is missing the `distribution` section"))?;
        spec.build(config_dir)
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<(HermitianObservable, TwoStateVector), CliError> {
        let rows: Vec<Vec<C64>> = self
            .observable
            .iter()
            .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect();
        let observable = HermitianObservable::from_rows(rows).map_err(CliError::engine)?;
        let pre = StateVector::new(to_amplitudes(&self.pre)).map_err(CliError::engine)?;
        let post = StateVector::new(to_amplitudes(&self.post)).map_err(CliError::engine)?;
        let tsv =
            TwoStateVector::with_tolerance(pre, post, OVERLAP_TOL).map_err(CliError::engine)?;
        if observable.dim() != tsv.dim() {
            return Err(CliError::config(format!(
                "observable dimension {} does not match state dimension {}",
                observable.dim(),
                tsv.dim()
            )));
        }
        Ok((observable, tsv))
    }
}

fn to_amplitudes(pairs: &[[f64; 2]]) -> Vec<C64> {
    pairs.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

impl DistributionConfig {
    /// Build the distribution; relative CSV paths resolve against the config
    /// file's directory.
    pub fn build(&self, config_dir: &Path) -> Result<GridDistribution, CliError> {
        match self {
            Self::Gaussian { mean, sigma, n, span } => {
                GridDistribution::gaussian(*mean, *sigma, *n, *span).map_err(CliError::engine)
            }
            Self::Exponential { rate, n, span } => {
                GridDistribution::exponential(*rate, *n, *span).map_err(CliError::engine)
            }
            Self::Uniform { a, b, n } => {
                GridDistribution::uniform(*a, *b, *n).map_err(CliError::engine)
            }
            Self::Table { nodes, values } => {
                GridDistribution::from_table(nodes.clone(), values.clone())
                    .map_err(CliError::engine)
            }
            Self::Csv { path } => {
                let resolved = if path.is_absolute() {
                    path.clone()
                } else {
                    config_dir.join(path)
                };
                let file = std::fs::File::open(&resolved).map_err(|e| {
                    CliError::config(format!("cannot open CSV {}: {e}", resolved.display()))
                })?;
                GridDistribution::read_csv(file).map_err(CliError::engine)
            }
        }
    }
}

impl ScenarioConfig {
    pub fn run(
        &self,
        config_dir: &Path,
        system: Option<&SystemConfig>,
    ) -> Result<scenarios::ScenarioReport, CliError> {
        let epsilon = self.epsilon.unwrap_or(scenarios::DEFAULT_EPSILON);
        let custom = match system {
            Some(sys) => Some(sys.build()?),
            None => None,
        };
        match self.name.as_str() {
            "white_light_phase" | "michelson_fs" => {
                let defaults = if self.name == "white_light_phase" {
                    scenarios::presets::white_light()
                } else {
                    scenarios::presets::michelson()
                };
                let tau = self.tau.unwrap_or(defaults.tau);
                let spectrum = match &self.spectrum {
                    Some(d) => d.build(config_dir)?,
                    None => defaults.spectrum,
                };
                let (observable, tsv) = match custom {
                    Some(pair) => pair,
                    None => (
                        defaults.observable,
                        scenarios::near_orthogonal_tsv(epsilon).map_err(CliError::engine)?,
                    ),
                };
                let run = if self.name == "white_light_phase" {
                    scenarios::white_light_phase
                } else {
                    scenarios::michelson_fs
                };
                run(tau, &spectrum, &tsv, &observable).map_err(CliError::engine)
            }
            "atomic_emission" => {
                let defaults = scenarios::presets::atomic();
                let omega = self.omega.unwrap_or(defaults.omega);
                let gamma = self.gamma.unwrap_or(defaults.gamma);
                let (observable, tsv) = match custom {
                    Some(pair) => pair,
                    None => (
                        defaults.observable,
                        scenarios::near_orthogonal_tsv(epsilon).map_err(CliError::engine)?,
                    ),
                };
                scenarios::atomic_emission(omega, gamma, &tsv, &observable)
                    .map_err(CliError::engine)
            }
            "doppler" => {
                let defaults = scenarios::presets::doppler();
                let v = self.v.unwrap_or(defaults.v);
                let lambda = self.lambda.unwrap_or(defaults.lambda);
                let profile = match &self.temporal_profile {
                    Some(d) => d.build(config_dir)?,
                    None => defaults.profile,
                };
                let (observable, tsv) = match custom {
                    Some(pair) => pair,
                    None => (
                        defaults.observable,
                        scenarios::near_orthogonal_tsv(epsilon).map_err(CliError::engine)?,
                    ),
                };
                scenarios::doppler(v, lambda, &profile, &tsv, &observable)
                    .map_err(CliError::engine)
            }
            other => Err(CliError::config(format!(
                "unknown scenario `{other}`; expected white_light_phase, michelson_fs, \
                 atomic_emission or doppler"
            ))),
        }
    }
}
