//! Command-line front end: configuration parsing, result serialization, and
//! reproducibility manifests.
//!
//! All structured outputs are JSON with floats at 17 significant digits
//! (exact round trip); bulk tallies are CSV. Every command writes a
//! `manifest.json` whose embedded config replays to byte-identical outputs,
//! independent of the worker count.

pub mod config;
pub mod json_fmt;
pub mod manifest;
pub mod model_file;
pub mod run;

/// Version stamped into every config, model file, and manifest.
pub const FORMAT_VERSION: u32 = 1;

pub use config::{
    BornConfig, ChshConfig, ChshTargetsSpec, KsConfig, ModelSource, ObservableConfig,
    PropertyConfig, SettingsSpec, SimulateConfig, StateSpec, SynthesisTask, SynthesizeConfig,
    ThresholdConfig,
};
pub use manifest::{OutputDigest, RunManifest};
pub use model_file::ModelFileDoc;
pub use run::{execute, replay, run_to_dir, CliError, ReplayOutcome, RunProducts, RunReport};
