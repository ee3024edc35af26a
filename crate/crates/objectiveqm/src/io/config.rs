//! Command configuration schemas. Every config carries `format_version` and
//! a mandatory master `seed`; there is deliberately no wall-clock default
//! anywhere.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::model_file::ModelFileDoc;
use crate::io::FORMAT_VERSION;
use crate::model::MicroModel;
use crate::nogo::{KsContext, KsSystem};
use crate::oracle::{
    make_pure, mix, singlet_state, spin_observable, tensor_product_observable, DensityState,
    SpectralObservable,
};
use crate::presets;
use crate::synthesis::ChshTarget;

/// Quantum state specification: a named preset, a pure amplitude vector, or
/// a mixture of pure components. Amplitudes are [re, im] pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Preset { name: String },
    Pure { amplitudes: Vec<[f64; 2]> },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

fn amplitudes_to_vec(amplitudes: &[[f64; 2]]) -> Vec<Complex64> {
    amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

impl StateSpec {
    pub fn resolve(&self) -> Result<DensityState> {
        match self {
            StateSpec::Preset { name } => match name.as_str() {
                "singlet" => Ok(singlet_state()),
                other => Err(Error::invalid(format!("unknown state preset {other}"))),
            },
            StateSpec::Pure { amplitudes } => make_pure(&amplitudes_to_vec(amplitudes)),
            StateSpec::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, make_pure(&amplitudes_to_vec(&c.amplitudes))?)))
                    .collect::<Result<Vec<_>>>()?;
                mix(&parts)
            }
        }
    }
}

/// Oracle observable builders available to configs. `Product` refers to two
/// observables defined earlier in the same list and combines their values
/// multiplicatively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    Spin { label: String, direction: [f64; 3] },
    Product { label: String, left: String, right: String },
}

/// Resolves the observable list in order, allowing products of earlier
/// entries.
pub fn resolve_observables(configs: &[ObservableConfig]) -> Result<Vec<SpectralObservable>> {
    let mut by_label: BTreeMap<String, SpectralObservable> = BTreeMap::new();
    let mut ordered = Vec::with_capacity(configs.len());
    for config in configs {
        let obs = match config {
            ObservableConfig::Spin { label, direction } => spin_observable(*direction, label)?,
            ObservableConfig::Product { label, left, right } => {
                let l = by_label
                    .get(left)
                    .ok_or_else(|| Error::not_found(format!("observable {left}")))?;
                let r = by_label
                    .get(right)
                    .ok_or_else(|| Error::not_found(format!("observable {right}")))?;
                tensor_product_observable(l, r, |a, b| a * b, label)?
            }
        };
        if by_label.insert(obs.label().to_string(), obs.clone()).is_some() {
            return Err(Error::invalid(format!("duplicate observable label {}", obs.label())));
        }
        ordered.push(obs);
    }
    Ok(ordered)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyConfig {
    pub observable: String,
    pub delta: Vec<f64>,
    #[serde(default)]
    pub include_a0: bool,
}

/// Where a command finds its micro-model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    /// Path to a model file, relative to the config file's directory.
    Path { path: String },
    Inline { model: ModelFileDoc },
}

impl ModelSource {
    pub fn load(&self, config_dir: &Path) -> Result<MicroModel> {
        match self {
            ModelSource::Path { path } => {
                let full = config_dir.join(path);
                let bytes = std::fs::read(&full).map_err(|e| {
                    Error::invalid(format!("cannot read model file {}: {e}", full.display()))
                })?;
                let doc: ModelFileDoc = serde_json::from_slice(&bytes)
                    .map_err(|e| Error::invalid(format!("model file parse error: {e}")))?;
                doc.to_model()
            }
            ModelSource::Inline { model } => model.to_model(),
        }
    }
}

/// CHSH targets: the bundled preset or explicit correlations with optional
/// detected-block marginals (defaulting to unbiased).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChshTargetsSpec {
    Preset {
        name: String,
    },
    Explicit {
        e11: f64,
        e12: f64,
        e21: f64,
        e22: f64,
        #[serde(default)]
        a_marginals: [f64; 2],
        #[serde(default)]
        b_marginals: [f64; 2],
    },
}

impl ChshTargetsSpec {
    pub fn resolve(&self, eta: f64) -> Result<ChshTarget> {
        match self {
            ChshTargetsSpec::Preset { name } => match name.as_str() {
                "chsh-optimal" => presets::chsh_optimal().target(eta),
                other => Err(Error::invalid(format!("unknown targets preset {other}"))),
            },
            ChshTargetsSpec::Explicit { e11, e12, e21, e22, a_marginals, b_marginals } => {
                ChshTarget::with_marginals(
                    [[*e11, *e12], [*e21, *e22]],
                    *a_marginals,
                    *b_marginals,
                    eta,
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KsSystemSpec {
    Preset { name: String },
    Explicit { observables: Vec<String>, contexts: Vec<KsContextSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsContextSpec {
    pub members: Vec<String>,
    pub target: f64,
}

impl KsSystemSpec {
    pub fn resolve(&self) -> Result<KsSystem> {
        let system = match self {
            KsSystemSpec::Preset { name } => match name.as_str() {
                "peres-mermin" => presets::peres_mermin(),
                other => return Err(Error::invalid(format!("unknown system preset {other}"))),
            },
            KsSystemSpec::Explicit { observables, contexts } => KsSystem {
                observables: observables.clone(),
                contexts: contexts
                    .iter()
                    .map(|c| KsContext { members: c.members.clone(), target: c.target })
                    .collect(),
            },
        };
        system.validate()?;
        Ok(system)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornConfig {
    pub format_version: u32,
    pub seed: u64,
    pub state: StateSpec,
    pub observables: Vec<ObservableConfig>,
    pub properties: Vec<PropertyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub format_version: u32,
    pub seed: u64,
    pub model: ModelSource,
    pub property: PropertyConfig,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynthesisTask {
    Product { state: StateSpec, observables: Vec<ObservableConfig>, detect: f64 },
    Chsh { targets: ChshTargetsSpec, eta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub format_version: u32,
    pub seed: u64,
    pub task: SynthesisTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSpec {
    pub a: [String; 2],
    pub b: [String; 2],
}

impl Default for SettingsSpec {
    fn default() -> Self {
        SettingsSpec {
            a: ["A1".into(), "A2".into()],
            b: ["B1".into(), "B2".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshConfig {
    pub format_version: u32,
    pub seed: u64,
    pub model: ModelSource,
    #[serde(default)]
    pub settings: SettingsSpec,
    pub n_per_block: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsConfig {
    pub format_version: u32,
    pub seed: u64,
    pub system: KsSystemSpec,
    pub n_per_context: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub format_version: u32,
    pub seed: u64,
    pub targets: ChshTargetsSpec,
    pub tol: f64,
}

/// Shared envelope check.
pub fn check_format_version(format_version: u32) -> Result<()> {
    if format_version != FORMAT_VERSION {
        return Err(Error::invalid(format!(
            "unsupported format_version {format_version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}
