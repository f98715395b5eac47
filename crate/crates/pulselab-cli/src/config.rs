//! Experiment configuration: a single JSON document naming the model, its
//! full parameter record, the run kind and the per-kind options. Parsing
//! is strict; unknown models, unknown or missing parameters, and unknown
//! option fields are validation errors that name the offending field.

use serde::Deserialize;
use std::collections::BTreeMap;

use pulselab::models::{CompetingParams, ThreeSpeciesParams, TwoSpeciesParams};
use pulselab::{ModelId, ModelInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Simulate,
    Spectrum,
    Cascade,
    Pulse,
    Scaling,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxOptions {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default)]
    pub omega_min: f64,
    pub omega_max: f64,
    #[serde(default = "default_grid")]
    pub nx: usize,
    #[serde(default = "default_grid")]
    pub ny: usize,
}

fn default_grid() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// Gamma list for scaling runs.
    #[serde(default)]
    pub gammas: Vec<f64>,
    /// Extra g0 values for spectrum runs (roots recomputed per value).
    #[serde(default)]
    pub g0_list: Vec<f64>,
    /// Root search box for spectrum runs.
    #[serde(default)]
    pub r#box: Option<BoxOptions>,
    /// Number of Hopf points per equilibrium in cascade runs.
    #[serde(default)]
    pub n_max: Option<usize>,
    /// Number of harmonics reported by simulate runs.
    #[serde(default)]
    pub harmonics: Option<usize>,
    /// Reversed-time span for the heteroclinic profile.
    #[serde(default)]
    pub theta_span: Option<f64>,
    /// Transient length in delay periods.
    #[serde(default)]
    pub transient_periods: Option<f64>,
    /// Analysis window in delay periods.
    #[serde(default)]
    pub record_periods: Option<f64>,
    /// Default output directory (lowest precedence).
    #[serde(default)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub parameters: BTreeMap<String, f64>,
    pub run: RunKind,
    #[serde(default)]
    pub options: RunOptions,
    #[serde(default)]
    pub workers: Option<usize>,
}

const THREE_SPECIES_KEYS: &[&str] = &["gamma", "T", "kappa", "mu", "q0", "beta", "s", "k", "g0", "alpha"];
const COMPETING_KEYS: &[&str] =
    &["gamma", "T", "kappa", "mu", "nu", "beta", "s", "k", "r", "m", "f", "g0", "alpha", "tau_death"];
const TWO_SPECIES_KEYS: &[&str] = &["gamma", "T", "kappa", "k", "g0", "alpha"];

fn parameter_keys(id: ModelId) -> &'static [&'static str] {
    match id {
        ModelId::Prototype | ModelId::LogisticQ | ModelId::LogisticQG => THREE_SPECIES_KEYS,
        ModelId::CompetingFast => COMPETING_KEYS,
        ModelId::ReducedA | ModelId::ReducedB => TWO_SPECIES_KEYS,
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config rejected: {e}"))
    }

    /// Full validation: model id, exact parameter-name set, positivity, and
    /// per-run requirements.
    pub fn build_model(&self) -> Result<ModelInstance, String> {
        let id = ModelId::parse(&self.model)
            .ok_or_else(|| format!("unknown model '{}'", self.model))?;
        let keys = parameter_keys(id);
        for key in self.parameters.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(format!("parameter '{key}' does not belong to model '{}'", self.model));
            }
        }
        let get = |name: &str| -> Result<f64, String> {
            let v = self
                .parameters
                .get(name)
                .copied()
                .ok_or_else(|| format!("missing parameter '{name}' for model '{}'", self.model))?;
            if v <= 0.0 || !v.is_finite() {
                return Err(format!("parameter '{name}' must be positive and finite, got {v}"));
            }
            Ok(v)
        };
        let model = match id {
            ModelId::Prototype | ModelId::LogisticQ | ModelId::LogisticQG => {
                let p = ThreeSpeciesParams {
                    gamma: get("gamma")?,
                    delay: get("T")?,
                    kappa: get("kappa")?,
                    mu: get("mu")?,
                    q0: get("q0")?,
                    beta: get("beta")?,
                    s: get("s")?,
                    k: get("k")?,
                    g0: get("g0")?,
                    alpha: get("alpha")?,
                };
                match id {
                    ModelId::Prototype => ModelInstance::Prototype(p),
                    ModelId::LogisticQ => ModelInstance::LogisticQ(p),
                    _ => ModelInstance::LogisticQG(p),
                }
            }
            ModelId::CompetingFast => ModelInstance::CompetingFast(CompetingParams {
                gamma: get("gamma")?,
                delay: get("T")?,
                kappa: get("kappa")?,
                mu: get("mu")?,
                nu: get("nu")?,
                beta: get("beta")?,
                s: get("s")?,
                k: get("k")?,
                r: get("r")?,
                m: get("m")?,
                f: get("f")?,
                g0: get("g0")?,
                alpha: get("alpha")?,
                tau_death: get("tau_death")?,
            }),
            ModelId::ReducedA | ModelId::ReducedB => {
                let p = TwoSpeciesParams {
                    gamma: get("gamma")?,
                    delay: get("T")?,
                    kappa: get("kappa")?,
                    k: get("k")?,
                    g0: get("g0")?,
                    alpha: get("alpha")?,
                };
                if id == ModelId::ReducedA {
                    ModelInstance::ReducedA(p)
                } else {
                    ModelInstance::ReducedB(p)
                }
            }
        };
        if self.run == RunKind::Scaling && self.options.gammas.is_empty() {
            return Err("scaling runs require a non-empty 'gammas' list".into());
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err("workers must be at least 1".into());
            }
        }
        Ok(model)
    }
}
