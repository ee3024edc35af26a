//! Command implementations: parse a config, run the underlying machinery,
//! and produce deterministic output files plus a human-readable summary.
//! Every run writes a self-contained manifest (model sources are inlined)
//! whose replay reproduces the primary outputs byte for byte.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::ensemble::{convergence_from_tally, measure_ensemble, prepare, tally, EnsembleTally};
use crate::error::Error;
use crate::io::config::{
    check_format_version, resolve_observables, BornConfig, ChshConfig, KsConfig, ModelSource,
    PropertyConfig, SimulateConfig, SynthesisTask, SynthesizeConfig, ThresholdConfig,
};
use crate::io::json_fmt::{fmt_f64, to_json_bytes};
use crate::io::manifest::{build_manifest, sha256_hex, RunManifest};
use crate::io::model_file::ModelFileDoc;
use crate::model::{MacroProperty, MicroModel};
use crate::nogo::{
    chsh_blockwise, ks_context_check, ks_evasion_model, ks_global_search, ChshSettings,
    KsCheckReport, KsSystem,
};
use crate::oracle::{born_probability, OutcomeSet};
use crate::synthesis::{
    eta_threshold_with_marginals, synthesize_chsh, synthesize_product, ChshSynthesis,
    EtaThresholdReport, CHSH_LABELS,
};

/// CLI-level error with its exit code: 2 for configuration problems, 3 for
/// internal invariant violations.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(msg) => CliError::Internal(msg),
            Error::NumericallyAmbiguous { .. } => CliError::Internal(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Primary outputs plus presentation data for one command run.
#[derive(Debug)]
pub struct RunProducts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
    pub status: String,
}

struct CommandOutcome {
    products: RunProducts,
    /// Effective, self-contained config (model sources inlined) that the
    /// manifest snapshots.
    snapshot: serde_json::Value,
}

fn parse_config<T: DeserializeOwned>(value: &serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(value.clone()).map_err(|e| CliError::Config(e.to_string()))
}

fn snapshot_of<T: Serialize>(config: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(config).map_err(|e| CliError::Internal(e.to_string()))
}

fn json_file<T: Serialize>(name: &str, value: &T) -> Result<(String, Vec<u8>), CliError> {
    Ok((
        name.to_string(),
        to_json_bytes(value).map_err(|e| CliError::Internal(e.to_string()))?,
    ))
}

/// Report document with the mandatory format_version stamped in front.
#[derive(Serialize)]
struct Versioned<T: Serialize> {
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

fn report_file<T: Serialize>(name: &str, body: T) -> Result<(String, Vec<u8>), CliError> {
    json_file(name, &Versioned { format_version: crate::io::FORMAT_VERSION, body })
}

fn property_from_config(config: &PropertyConfig) -> Result<MacroProperty, CliError> {
    let delta = OutcomeSet::new(config.delta.clone(), config.include_a0)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(MacroProperty::new(config.observable.clone(), delta))
}

/// Renders rows as a fixed-width text table.
fn render_table(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; columns];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(&format!("{cell:>width$}", width = widths[i]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn fmt_short(value: f64) -> String {
    format!("{value:.6}")
}

fn delta_token(delta: &[f64], include_a0: bool) -> String {
    let mut parts: Vec<String> = delta.iter().map(|v| fmt_f64(*v)).collect();
    if include_a0 {
        parts.push("a0".to_string());
    }
    parts.join("|")
}

fn delta_short(delta: &[f64], include_a0: bool) -> String {
    let mut parts: Vec<String> = delta.iter().map(|v| format!("{v}")).collect();
    if include_a0 {
        parts.push("a0".to_string());
    }
    format!("{{{}}}", parts.join(", "))
}

fn run_born(config: &BornConfig) -> Result<CommandOutcome, CliError> {
    check_format_version(config.format_version)?;
    let state = config.state.resolve()?;
    let observables = resolve_observables(&config.observables)?;
    let mut csv = String::from("observable,delta,probability\n");
    let mut table = vec![vec!["observable".into(), "delta".into(), "probability".into()]];
    for prop in &config.properties {
        let obs = observables
            .iter()
            .find(|o| o.label() == prop.observable)
            .ok_or_else(|| CliError::Config(format!("observable {} not defined", prop.observable)))?;
        let delta = OutcomeSet::new(prop.delta.clone(), prop.include_a0)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let p = born_probability(&state, obs, &delta)?;
        csv.push_str(&format!(
            "{},{},{}\n",
            obs.label(),
            delta_token(delta.members(), delta.contains_a0()),
            fmt_f64(p)
        ));
        table.push(vec![
            obs.label().to_string(),
            delta_short(delta.members(), delta.contains_a0()),
            fmt_short(p),
        ]);
    }
    Ok(CommandOutcome {
        products: RunProducts {
            files: vec![("born.csv".to_string(), csv.into_bytes())],
            summary: render_table(&table),
            status: "ok".to_string(),
        },
        snapshot: snapshot_of(config)?,
    })
}

fn inline_model_source(
    source: &ModelSource,
    config_dir: &Path,
) -> Result<(ModelFileDoc, MicroModel), CliError> {
    let doc = match source {
        ModelSource::Inline { model } => model.clone(),
        ModelSource::Path { path } => {
            let full = config_dir.join(path);
            let bytes = std::fs::read(&full).map_err(|e| {
                CliError::Config(format!("cannot read model file {}: {e}", full.display()))
            })?;
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Config(format!("model file parse error: {e}")))?
        }
    };
    let model = doc.to_model()?;
    Ok((doc, model))
}

fn tally_csv(t: &EnsembleTally) -> String {
    let report = t.identity_report();
    let mut csv = String::from("class,n,n0,nf,nf_detected,eq_identity,dichotomy\n");
    for (i, c) in t.per_class.iter().enumerate() {
        let eq = match report.eq_class[i] {
            Some(true) => "true",
            Some(false) => "false",
            None => "undefined",
        };
        csv.push_str(&format!(
            "{i},{},{},{},{},{eq},{}\n",
            c.n, c.n0, c.nf, c.nf_detected, report.dichotomy[i]
        ));
    }
    let nf: u64 = t.per_class.iter().map(|c| c.nf).sum();
    let nf_detected: u64 = t.per_class.iter().map(|c| c.nf_detected).sum();
    let eq_state = match report.eq_state {
        Some(true) => "true",
        Some(false) => "false",
        None => "undefined",
    };
    csv.push_str(&format!("total,{},{},{nf},{nf_detected},{eq_state},\n", t.n, t.n0));
    csv
}

fn run_simulate(config: &SimulateConfig, config_dir: &Path) -> Result<CommandOutcome, CliError> {
    check_format_version(config.format_version)?;
    let (doc, model) = inline_model_source(&config.model, config_dir)?;
    let property = property_from_config(&config.property)?;
    if config.n == 0 {
        return Err(CliError::Config("n must be at least 1".into()));
    }
    let objects = prepare(&model, config.n, config.seed)?;
    let records = measure_ensemble(&objects, &property.observable, &model, config.seed)?;
    let t = tally(&objects, &records, &model, &property)?;
    let identity = t.identity_report();
    if !identity.all_hold() {
        // Impossible unless the implementation is broken.
        return Err(CliError::Internal(format!(
            "tally identities failed: {identity:?}"
        )));
    }
    let report = convergence_from_tally(&model, &property, &t)?;
    let summary = render_table(&[
        vec!["".into(), "frequency".into(), "analytic".into(), "|dev|".into(), "se".into()],
        vec![
            "total".into(),
            fmt_short(report.freq_total),
            fmt_short(report.analytic_total),
            fmt_short(report.deviation_total),
            fmt_short(report.se_total),
        ],
        vec![
            "detect".into(),
            fmt_short(report.freq_detect),
            fmt_short(report.analytic_detect),
            fmt_short(report.deviation_detect),
            fmt_short(report.se_detect),
        ],
        vec![
            "conditional".into(),
            report.freq_conditional.map_or("undefined".into(), fmt_short),
            report.analytic_conditional.map_or("undefined".into(), fmt_short),
            report.deviation_conditional.map_or("-".into(), fmt_short),
            report.se_conditional.map_or("-".into(), fmt_short),
        ],
    ]);
    let snapshot_config = SimulateConfig {
        model: ModelSource::Inline { model: doc },
        ..config.clone()
    };
    Ok(CommandOutcome {
        products: RunProducts {
            files: vec![
                ("tally.csv".to_string(), tally_csv(&t).into_bytes()),
                report_file("convergence.json", &report)?,
            ],
            summary,
            status: "ok".to_string(),
        },
        snapshot: snapshot_of(&snapshot_config)?,
    })
}

#[derive(Debug, Serialize)]
struct SynthesisReportDoc {
    status: String,
    task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase1_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_consistency_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditional_correlations: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unconditional_chsh: Option<f64>,
}

fn run_synthesize(config: &SynthesizeConfig) -> Result<CommandOutcome, CliError> {
    check_format_version(config.format_version)?;
    let snapshot = snapshot_of(config)?;
    let (files, summary, status) = match &config.task {
        SynthesisTask::Product { state, observables, detect } => {
            let rho = state.resolve()?;
            let resolved = resolve_observables(observables)?;
            let model = synthesize_product(&rho, &resolved, *detect)?;
            // Re-measure the consistency for the report.
            let mut properties = Vec::new();
            for obs in &resolved {
                for v in obs.spectrum() {
                    properties.push(MacroProperty::new(
                        obs.label(),
                        OutcomeSet::new(vec![v], false)?,
                    ));
                }
            }
            let consistency = model.quantum_consistency(&properties)?;
            let doc = ModelFileDoc::from_parts(&model, Some(state.clone()))?;
            let report = SynthesisReportDoc {
                status: "feasible".into(),
                task: "product".into(),
                phase1_objective: None,
                class_count: Some(model.classes().len()),
                max_consistency_deviation: Some(consistency.max_deviation),
                conditional_correlations: None,
                unconditional_chsh: None,
            };
            let summary = format!(
                "product model: {} classes, max Born deviation {:.3e}\n",
                model.classes().len(),
                consistency.max_deviation
            );
            (
                vec![json_file("model.json", &doc)?, report_file("synthesis.json", &report)?],
                summary,
                "feasible".to_string(),
            )
        }
        SynthesisTask::Chsh { targets, eta } => {
            let target = targets.resolve(*eta)?;
            match synthesize_chsh(&target)? {
                ChshSynthesis::Feasible(model) => {
                    let mut correlations = [[0.0; 2]; 2];
                    for x in 0..2 {
                        for y in 0..2 {
                            correlations[x][y] = model
                                .conditional_correlation(CHSH_LABELS[x], CHSH_LABELS[2 + y])?
                                .ok_or_else(|| {
                                    CliError::Internal("undefined conditional correlation".into())
                                })?;
                        }
                    }
                    let mut unconditional = [[0.0; 2]; 2];
                    for x in 0..2 {
                        for y in 0..2 {
                            unconditional[x][y] = model
                                .unconditional_correlation(CHSH_LABELS[x], CHSH_LABELS[2 + y])?;
                        }
                    }
                    let doc = ModelFileDoc::from_parts(&model, None)?;
                    let report = SynthesisReportDoc {
                        status: "feasible".into(),
                        task: "chsh".into(),
                        phase1_objective: None,
                        class_count: Some(model.classes().len()),
                        max_consistency_deviation: None,
                        conditional_correlations: Some(correlations),
                        unconditional_chsh: Some(
                            crate::synthesis::chsh_combination(&unconditional).abs(),
                        ),
                    };
                    let summary = format!(
                        "chsh model: {} classes, conditional S = {:.6}, unconditional S = {:.6}\n",
                        model.classes().len(),
                        crate::synthesis::chsh_combination(&correlations).abs(),
                        crate::synthesis::chsh_combination(&unconditional).abs()
                    );
                    (
                        vec![json_file("model.json", &doc)?, report_file("synthesis.json", &report)?],
                        summary,
                        "feasible".to_string(),
                    )
                }
                ChshSynthesis::Infeasible { phase1_objective } => {
                    let report = SynthesisReportDoc {
                        status: "infeasible".into(),
                        task: "chsh".into(),
                        phase1_objective: Some(phase1_objective),
                        class_count: None,
                        max_consistency_deviation: None,
                        conditional_correlations: None,
                        unconditional_chsh: None,
                    };
                    (
                        vec![report_file("synthesis.json", &report)?],
                        format!(
                            "infeasible: no local objective model reproduces these targets (phase-1 objective {:.3e})\n",
                            phase1_objective
                        ),
                        "infeasible".to_string(),
                    )
                }
            }
        }
    };
    Ok(CommandOutcome {
        products: RunProducts { files, summary, status },
        snapshot,
    })
}

fn run_chsh(config: &ChshConfig, config_dir: &Path) -> Result<CommandOutcome, CliError> {
    check_format_version(config.format_version)?;
    let (doc, model) = inline_model_source(&config.model, config_dir)?;
    let settings = ChshSettings { a: config.settings.a.clone(), b: config.settings.b.clone() };
    let report = chsh_blockwise(&model, &settings, config.n_per_block, config.seed)?;
    let mut table = vec![vec![
        "pair".into(),
        "coincidences".into(),
        "E".into(),
        "se".into(),
        "analytic".into(),
    ]];
    for block in &report.blocks {
        table.push(vec![
            format!("{}{}", block.pair.0, block.pair.1),
            block.coincidences.to_string(),
            block.correlation.map_or("undefined".into(), fmt_short),
            block.standard_error.map_or("-".into(), fmt_short),
            block.analytic_conditional.map_or("undefined".into(), fmt_short),
        ]);
    }
    let mut summary = render_table(&table);
    summary.push_str(&format!(
        "S estimate = {} (se {}), analytic conditional S = {}, analytic unconditional S = {:.6}\n",
        report.s_estimate.map_or("undefined".into(), fmt_short),
        report.s_standard_error.map_or("-".into(), fmt_short),
        report.analytic_conditional_s.map_or("undefined".into(), fmt_short),
        report.analytic_unconditional_s
    ));
    let snapshot_config = ChshConfig {
        model: ModelSource::Inline { model: doc },
        ..config.clone()
    };
    Ok(CommandOutcome {
        products: RunProducts {
            files: vec![report_file("chsh_report.json", &report)?],
            summary,
            status: "ok".to_string(),
        },
        snapshot: snapshot_of(&snapshot_config)?,
    })
}

#[derive(Debug, Serialize)]
struct KsSearchDoc {
    num_assignments: u64,
    satisfying_count: usize,
    min_violations: usize,
    witness: BTreeMap<String, f64>,
    /// At most 64 satisfying assignments, in enumeration order.
    satisfying_sample: Vec<BTreeMap<String, f64>>,
}

#[derive(Debug, Serialize)]
struct KsReportDoc {
    system: KsSystem,
    search: KsSearchDoc,
    evasion_status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    evasion_class_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<KsCheckReport>,
}

fn run_ks(config: &KsConfig) -> Result<CommandOutcome, CliError> {
    check_format_version(config.format_version)?;
    let system = config.system.resolve()?;
    let search = ks_global_search(&system)?;
    let search_doc = KsSearchDoc {
        num_assignments: search.num_assignments,
        satisfying_count: search.satisfying.len(),
        min_violations: search.min_violations,
        witness: search.witness.values(&system),
        satisfying_sample: search
            .satisfying
            .iter()
            .take(64)
            .map(|a| a.values(&system))
            .collect(),
    };
    let (evasion_status, model) = match ks_evasion_model(&system, &search) {
        Ok(model) => ("ok".to_string(), Some(model)),
        Err(Error::InfeasibleEvasion(msg)) => (format!("infeasible_evasion: {msg}"), None),
        Err(other) => return Err(other.into()),
    };
    let (check, files_model) = match &model {
        Some(m) => {
            let check = ks_context_check(m, &system, config.n_per_context, config.seed)?;
            let doc = ModelFileDoc::from_parts(m, None)?;
            (Some(check), Some(json_file("evasion_model.json", &doc)?))
        }
        None => (None, None),
    };
    let report = KsReportDoc {
        system: system.clone(),
        search: search_doc,
        evasion_status: evasion_status.clone(),
        evasion_class_count: model.as_ref().map(|m| m.classes().len()),
        check: check.clone(),
    };

    let mut table = vec![vec![
        "context".into(),
        "target".into(),
        "coincidences".into(),
        "violations".into(),
        "status".into(),
    ]];
    if let Some(check) = &check {
        for ctx in &check.contexts {
            table.push(vec![
                ctx.members.join("*"),
                format!("{:+}", ctx.target as i64),
                ctx.coincidences.to_string(),
                ctx.violations.to_string(),
                format!("{:?}", ctx.status),
            ]);
        }
    }
    let mut summary = format!(
        "search: {} assignments, {} satisfying, min violations {}\n",
        search.num_assignments,
        search.satisfying.len(),
        search.min_violations
    );
    summary.push_str(&render_table(&table));

    let mut files = vec![report_file("ks_report.json", &report)?];
    if let Some(f) = files_model {
        files.push(f);
    }
    let status = if model.is_some() { "ok".to_string() } else { "infeasible_evasion".to_string() };
    Ok(CommandOutcome {
        products: RunProducts { files, summary, status },
        snapshot: snapshot_of(config)?,
    })
}

#[derive(Debug, Serialize)]
struct ThresholdReportDoc {
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<EtaThresholdReport>,
}

fn run_threshold(config: &ThresholdConfig) -> Result<CommandOutcome, CliError> {
    check_format_version(config.format_version)?;
    // Eta enters through the scan itself; resolve targets at a placeholder.
    let target = config.targets.resolve(1.0)?;
    let outcome = eta_threshold_with_marginals(
        &target.correlations,
        target.a_marginals,
        target.b_marginals,
        config.tol,
    );
    let (doc, summary, status) = match outcome {
        Ok(report) => {
            let summary = format!(
                "eta* = {:.6} (bracket [{:.6}, {:.6}], {} bisection steps, {} LP solves)\n",
                report.eta_star,
                report.bracket_low,
                report.bracket_high,
                report.bisection_steps,
                report.lp_solves
            );
            (
                ThresholdReportDoc { status: "ok".into(), report: Some(report) },
                summary,
                "ok".to_string(),
            )
        }
        Err(Error::NoThreshold { eta_min }) => (
            ThresholdReportDoc { status: "no_threshold".into(), report: None },
            format!("no feasible efficiency at or above eta = {eta_min}\n"),
            "no_threshold".to_string(),
        ),
        Err(other) => return Err(other.into()),
    };
    Ok(CommandOutcome {
        products: RunProducts {
            files: vec![report_file("threshold.json", &doc)?],
            summary,
            status,
        },
        snapshot: snapshot_of(config)?,
    })
}

fn execute_inner(
    command: &str,
    config: &serde_json::Value,
    config_dir: &Path,
) -> Result<CommandOutcome, CliError> {
    match command {
        "born" => run_born(&parse_config(config)?),
        "simulate" => run_simulate(&parse_config(config)?, config_dir),
        "synthesize" => run_synthesize(&parse_config(config)?),
        "chsh" => run_chsh(&parse_config(config)?, config_dir),
        "ks" => run_ks(&parse_config(config)?),
        "threshold" => run_threshold(&parse_config(config)?),
        other => Err(CliError::Config(format!("unknown command {other}"))),
    }
}

/// Runs a command against an in-memory config; returns the products and the
/// manifest-ready config snapshot.
pub fn execute(
    command: &str,
    config: &serde_json::Value,
    config_dir: &Path,
) -> Result<(RunProducts, serde_json::Value), CliError> {
    let outcome = execute_inner(command, config, config_dir)?;
    Ok((outcome.products, outcome.snapshot))
}

fn config_seed(config: &serde_json::Value) -> Result<u64, CliError> {
    config
        .get("seed")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| CliError::Config("config is missing the mandatory integer seed".into()))
}

/// Full run report: where things were written and the manifest.
#[derive(Debug)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub products: RunProducts,
}

/// Loads a config file, applies an optional seed override, executes, and
/// writes outputs plus `manifest.json` into `out_dir`.
pub fn run_to_dir(
    command: &str,
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, CliError> {
    let bytes = std::fs::read(config_path).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let mut config: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
    if let Some(seed) = seed_override {
        match config.as_object_mut() {
            Some(map) => {
                map.insert("seed".to_string(), serde_json::Value::from(seed));
            }
            None => return Err(CliError::Config("config root must be a JSON object".into())),
        }
    }
    let config_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let (products, snapshot) = execute(command, &config, config_dir)?;
    let seed = config_seed(&snapshot)?;
    let manifest = build_manifest(command, seed, snapshot, &products.files);
    write_outputs(out_dir, &products, &manifest)?;
    Ok(RunReport { manifest, products })
}

fn write_outputs(
    out_dir: &Path,
    products: &RunProducts,
    manifest: &RunManifest,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    for (name, bytes) in &products.files {
        std::fs::write(out_dir.join(name), bytes)
            .map_err(|e| CliError::Config(format!("cannot write {name}: {e}")))?;
    }
    let manifest_bytes =
        to_json_bytes(manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(out_dir.join("manifest.json"), manifest_bytes)
        .map_err(|e| CliError::Config(format!("cannot write manifest.json: {e}")))?;
    Ok(())
}

/// Replay result: per-file digest agreement with the original manifest.
#[derive(Debug)]
pub struct ReplayOutcome {
    pub report: RunReport,
    pub per_file: Vec<(String, bool)>,
    pub matches: bool,
}

/// Re-executes a manifest's command on its embedded config and verifies the
/// regenerated outputs digest-for-digest.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<ReplayOutcome, CliError> {
    let bytes = std::fs::read(manifest_path).map_err(|e| {
        CliError::Config(format!("cannot read manifest {}: {e}", manifest_path.display()))
    })?;
    let manifest: RunManifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("manifest parse error: {e}")))?;
    let config_dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let (products, snapshot) = execute(&manifest.command, &manifest.config, config_dir)?;
    let seed = config_seed(&snapshot)?;
    let new_manifest = build_manifest(&manifest.command, seed, snapshot, &products.files);
    write_outputs(out_dir, &products, &new_manifest)?;

    let mut per_file = Vec::new();
    let mut matches = products.files.len() == manifest.outputs.len();
    for (name, bytes) in &products.files {
        let expected = manifest.outputs.iter().find(|o| &o.file == name);
        let ok = match expected {
            Some(o) => o.sha256 == sha256_hex(bytes),
            None => false,
        };
        matches &= ok;
        per_file.push((name.clone(), ok));
    }
    Ok(ReplayOutcome {
        report: RunReport { manifest: new_manifest, products },
        per_file,
        matches,
    })
}
