//! Model synthesis: constructions that produce micro-models whose
//! detection-conditional statistics reproduce given quantum targets.
//!
//! The single-observable construction is closed-form. The CHSH construction
//! reduces to a linear-feasibility problem over the 81 joint local strategies
//! (three symbols per setting: +1, -1, no-detect) and is solved with the
//! in-crate simplex; infeasibility is a meaningful scientific outcome, not a
//! failure.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    default_a0, ExtendedObservable, MacroProperty, MicroClass, MicroModel, ModelMode,
    ObservableBase, ObservableRegistry, Response,
};
use crate::oracle::{born_probability, DensityState, OutcomeSet, SpectralObservable};
use crate::simplex::{lp_feasibility, FeasibilityProblem, LpOutcome};

/// Setting labels of every synthesized CHSH model, side A then side B.
pub const CHSH_LABELS: [&str; 4] = ["A1", "A2", "B1", "B2"];

/// Weight below which a synthesized class is dropped (remainder renormalized).
pub const CLASS_PRUNE_TOL: f64 = 1e-12;

/// Per-setting response of one side's deterministic strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyOutcome {
    Plus,
    Minus,
    NoDetect,
}

impl StrategyOutcome {
    pub fn detects(self) -> bool {
        self != StrategyOutcome::NoDetect
    }

    /// Reported value when detected; the NoDetect value is immaterial.
    pub fn value(self) -> f64 {
        match self {
            StrategyOutcome::Minus => -1.0,
            _ => 1.0,
        }
    }

    fn from_digit(d: usize) -> Self {
        match d {
            0 => StrategyOutcome::Plus,
            1 => StrategyOutcome::Minus,
            _ => StrategyOutcome::NoDetect,
        }
    }
}

/// Total per-setting response of one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalStrategy {
    pub responses: Vec<StrategyOutcome>,
}

/// All 3^n single-side strategies in a fixed base-3 order.
pub fn enumerate_local_strategies(num_settings: usize) -> Vec<LocalStrategy> {
    let count = 3usize.pow(num_settings as u32);
    (0..count)
        .map(|mut code| {
            let mut responses = vec![StrategyOutcome::Plus; num_settings];
            for slot in (0..num_settings).rev() {
                responses[slot] = StrategyOutcome::from_digit(code % 3);
                code /= 3;
            }
            LocalStrategy { responses }
        })
        .collect()
}

/// All joint strategy pairs; count is 3^{|A|} * 3^{|B|}.
pub fn enumerate_joint_strategies(
    a_settings: &[String],
    b_settings: &[String],
) -> Result<Vec<(LocalStrategy, LocalStrategy)>> {
    if a_settings.is_empty() || b_settings.is_empty() {
        return Err(Error::invalid("each side needs at least one setting"));
    }
    let a = enumerate_local_strategies(a_settings.len());
    let b = enumerate_local_strategies(b_settings.len());
    let mut joint = Vec::with_capacity(a.len() * b.len());
    for sa in &a {
        for sb in &b {
            joint.push((sa.clone(), sb.clone()));
        }
    }
    Ok(joint)
}

/// Detected-block targets: conditional correlations for the four setting
/// pairs, conditional one-sided expectations per setting, and the per-side
/// detection efficiency the model must exhibit.
///
/// The marginal targets matter: with correlations alone the model may bias
/// its detected blocks and survive up to eta = cos^2(pi/8) ~ 0.8536, whereas
/// the quantum statistics being reproduced fix the marginals too (zero for
/// the singlet), which brings the threshold down to 2/(1 + sqrt(2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshTarget {
    /// `correlations[x][y]` is the target E for settings (A x+1, B y+1).
    pub correlations: [[f64; 2]; 2],
    /// Conditional expectation of side A's outcome at each setting, enforced
    /// within every coincidence block containing that setting.
    pub a_marginals: [f64; 2],
    pub b_marginals: [f64; 2],
    pub eta: f64,
}

impl ChshTarget {
    /// Targets with unbiased (zero) conditional marginals, as for any
    /// maximally entangled state.
    pub fn new(correlations: [[f64; 2]; 2], eta: f64) -> Result<Self> {
        Self::with_marginals(correlations, [0.0; 2], [0.0; 2], eta)
    }

    pub fn with_marginals(
        correlations: [[f64; 2]; 2],
        a_marginals: [f64; 2],
        b_marginals: [f64; 2],
        eta: f64,
    ) -> Result<Self> {
        for row in &correlations {
            for &e in row {
                if !e.is_finite() || e.abs() > 1.0 {
                    return Err(Error::invalid(format!("correlation {e} outside [-1, 1]")));
                }
            }
        }
        for &m in a_marginals.iter().chain(&b_marginals) {
            if !m.is_finite() || m.abs() > 1.0 {
                return Err(Error::invalid(format!("marginal {m} outside [-1, 1]")));
            }
        }
        if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
            return Err(Error::invalid(format!("eta {eta} outside (0, 1]")));
        }
        Ok(ChshTarget { correlations, a_marginals, b_marginals, eta })
    }
}

/// The CHSH combination E11 + E12 + E21 - E22.
pub fn chsh_combination(e: &[[f64; 2]; 2]) -> f64 {
    e[0][0] + e[0][1] + e[1][0] - e[1][1]
}

/// Outcome of the CHSH synthesis: a model, or a certified empty polytope.
#[derive(Debug, Clone, PartialEq)]
pub enum ChshSynthesis {
    Feasible(Box<MicroModel>),
    Infeasible {
        /// Least achievable total constraint violation.
        phase1_objective: f64,
    },
}

impl ChshSynthesis {
    pub fn is_feasible(&self) -> bool {
        matches!(self, ChshSynthesis::Feasible(_))
    }

    pub fn model(&self) -> Option<&MicroModel> {
        match self {
            ChshSynthesis::Feasible(m) => Some(m),
            ChshSynthesis::Infeasible { .. } => None,
        }
    }
}

struct StrategyColumns {
    strategies: Vec<(LocalStrategy, LocalStrategy)>,
}

impl StrategyColumns {
    fn new() -> Self {
        let labels: Vec<String> = CHSH_LABELS.iter().map(|s| s.to_string()).collect();
        let strategies =
            enumerate_joint_strategies(&labels[..2], &labels[2..]).expect("fixed settings");
        StrategyColumns { strategies }
    }

    fn len(&self) -> usize {
        self.strategies.len()
    }

    fn a_detect(&self, s: usize, x: usize) -> f64 {
        if self.strategies[s].0.responses[x].detects() { 1.0 } else { 0.0 }
    }

    fn b_detect(&self, s: usize, y: usize) -> f64 {
        if self.strategies[s].1.responses[y].detects() { 1.0 } else { 0.0 }
    }

    fn a_value(&self, s: usize, x: usize) -> f64 {
        self.strategies[s].0.responses[x].value()
    }

    fn b_value(&self, s: usize, y: usize) -> f64 {
        self.strategies[s].1.responses[y].value()
    }

    fn product(&self, s: usize, x: usize, y: usize) -> f64 {
        self.a_value(s, x) * self.b_value(s, y)
    }
}

/// Core constraint system: conditional correlations and conditional
/// marginals linearized through the coincidence rate, per-side-per-setting
/// detection rates pinned to eta, per-block coincidence rates pinned to
/// eta^2, and normalization. Detection rates are equalities so the threshold
/// scan stays well-posed; the "at most eta" variant is the same rows with a
/// slack column appended to each rate row.
fn chsh_rows(target: &ChshTarget, columns: &StrategyColumns) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = columns.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(21);
    let mut rhs = Vec::with_capacity(21);
    for x in 0..2 {
        for y in 0..2 {
            let e = target.correlations[x][y];
            rows.push(
                (0..n)
                    .map(|s| {
                        columns.a_detect(s, x)
                            * columns.b_detect(s, y)
                            * (columns.product(s, x, y) - e)
                    })
                    .collect(),
            );
            rhs.push(0.0);
            // Conditional one-sided expectations within the same block.
            let ma = target.a_marginals[x];
            rows.push(
                (0..n)
                    .map(|s| {
                        columns.a_detect(s, x)
                            * columns.b_detect(s, y)
                            * (columns.a_value(s, x) - ma)
                    })
                    .collect(),
            );
            rhs.push(0.0);
            let mb = target.b_marginals[y];
            rows.push(
                (0..n)
                    .map(|s| {
                        columns.a_detect(s, x)
                            * columns.b_detect(s, y)
                            * (columns.b_value(s, y) - mb)
                    })
                    .collect(),
            );
            rhs.push(0.0);
        }
    }
    for x in 0..2 {
        rows.push((0..n).map(|s| columns.a_detect(s, x)).collect());
        rhs.push(target.eta);
    }
    for y in 0..2 {
        rows.push((0..n).map(|s| columns.b_detect(s, y)).collect());
        rhs.push(target.eta);
    }
    // Coincidence rates: detection independent across sides in the target
    // statistics, so every block coincides at rate eta^2. Without this the
    // model may anti-correlate its detections across the sides, which the
    // data being reproduced would expose.
    for x in 0..2 {
        for y in 0..2 {
            rows.push(
                (0..n)
                    .map(|s| columns.a_detect(s, x) * columns.b_detect(s, y))
                    .collect(),
            );
            rhs.push(target.eta * target.eta);
        }
    }
    rows.push(vec![1.0; n]);
    rhs.push(1.0);
    (rows, rhs)
}

fn chsh_problem(target: &ChshTarget, columns: &StrategyColumns) -> FeasibilityProblem {
    let n = columns.len();
    let (rows, rhs) = chsh_rows(target, columns);
    FeasibilityProblem::new(n, rows, rhs).expect("well-formed by construction")
}

/// Builds a micro-model whose detected-block correlations reproduce the
/// targets at per-side efficiency eta, or certifies that no local objective
/// model does.
pub fn synthesize_chsh(target: &ChshTarget) -> Result<ChshSynthesis> {
    let target = ChshTarget::with_marginals(
        target.correlations,
        target.a_marginals,
        target.b_marginals,
        target.eta,
    )?;
    let columns = StrategyColumns::new();
    let problem = chsh_problem(&target, &columns);
    let n = columns.len();
    let solution = match lp_feasibility(&problem)? {
        LpOutcome::Feasible(x) => x,
        LpOutcome::Infeasible { objective, .. } => {
            return Ok(ChshSynthesis::Infeasible { phase1_objective: objective })
        }
    };
    let weights = &solution[..n];

    // Post-hoc coincidence positivity: pinned to eta^2 by the constraints,
    // re-checked here because an undefined conditional correlation would
    // make the returned model meaningless.
    for x in 0..2 {
        for y in 0..2 {
            let rate: f64 = (0..n)
                .map(|s| weights[s] * columns.a_detect(s, x) * columns.b_detect(s, y))
                .sum();
            if rate <= 1e-9 {
                return Err(Error::internal(format!(
                    "block ({}, {}) lost its coincidence rate despite the eta^2 constraint",
                    x + 1,
                    y + 1
                )));
            }
        }
    }

    let model = strategies_to_model(&columns, weights)?;
    // Round trip: the model itself must reproduce the targets analytically.
    #[allow(clippy::needless_range_loop)] // x pairs A-labels with target rows
    for x in 0..2 {
        for y in 0..2 {
            let got = model
                .conditional_correlation(CHSH_LABELS[x], CHSH_LABELS[2 + y])?
                .ok_or_else(|| Error::internal("coincidence vanished after pruning"))?;
            let want = target.correlations[x][y];
            if (got - want).abs() > 1e-9 {
                return Err(Error::internal(format!(
                    "synthesized model misses target E{}{} by {:.3e}",
                    x + 1,
                    y + 1,
                    (got - want).abs()
                )));
            }
            // Conditional one-sided expectations inside the same block.
            let mut num_a = 0.0;
            let mut num_b = 0.0;
            let mut den = 0.0;
            for class in model.classes() {
                let ra = class.response(CHSH_LABELS[x])?;
                let rb = class.response(CHSH_LABELS[2 + y])?;
                let coincidence = class.weight * ra.detect * rb.detect;
                num_a += coincidence * ra.value;
                num_b += coincidence * rb.value;
                den += coincidence;
            }
            if (num_a / den - target.a_marginals[x]).abs() > 1e-9
                || (num_b / den - target.b_marginals[y]).abs() > 1e-9
            {
                return Err(Error::internal(format!(
                    "synthesized model misses a conditional marginal in block ({}, {})",
                    x + 1,
                    y + 1
                )));
            }
        }
    }
    let mut e = [[0.0; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            e[x][y] = model.unconditional_correlation(CHSH_LABELS[x], CHSH_LABELS[2 + y])?;
        }
    }
    if chsh_combination(&e).abs() > 2.0 + 1e-12 {
        return Err(Error::internal(
            "synthesized model broke the unconditional local bound",
        ));
    }
    Ok(ChshSynthesis::Feasible(Box::new(model)))
}

fn strategies_to_model(columns: &StrategyColumns, weights: &[f64]) -> Result<MicroModel> {
    let mut registry = ObservableRegistry::new();
    for label in CHSH_LABELS {
        registry.insert(ExtendedObservable::elementary(
            label,
            ObservableBase::Abstract(vec![1.0, -1.0]),
            0.0,
        ))?;
    }
    let kept: Vec<(usize, f64)> = weights
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, w)| *w >= CLASS_PRUNE_TOL)
        .collect();
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Err(Error::internal("all synthesized weights pruned"));
    }
    let classes: Vec<MicroClass> = kept
        .into_iter()
        .map(|(s, w)| {
            let (sa, sb) = &columns.strategies[s];
            let mut responses = BTreeMap::new();
            for (x, label) in CHSH_LABELS[..2].iter().enumerate() {
                let r = sa.responses[x];
                responses.insert(
                    label.to_string(),
                    Response {
                        detect: if r.detects() { 1.0 } else { 0.0 },
                        value: r.value(),
                    },
                );
            }
            for (y, label) in CHSH_LABELS[2..].iter().enumerate() {
                let r = sb.responses[y];
                responses.insert(
                    label.to_string(),
                    Response {
                        detect: if r.detects() { 1.0 } else { 0.0 },
                        value: r.value(),
                    },
                );
            }
            MicroClass { weight: w / total, responses }
        })
        .collect();
    MicroModel::new(registry, classes, None, ModelMode::Deterministic)
}

/// Detection-threshold scan report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaThresholdReport {
    /// Largest efficiency found feasible (within `tol`).
    pub eta_star: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    /// Every probed efficiency with its feasibility verdict, in probe order.
    pub probes: Vec<(f64, bool)>,
    /// Bisection iterations (excludes the two bracket probes).
    pub bisection_steps: usize,
    pub lp_solves: usize,
}

/// Bisects the largest per-side efficiency at which the CHSH targets stay
/// classically reproducible, with unbiased detected-block marginals.
pub fn eta_threshold(correlations: &[[f64; 2]; 2], tol: f64) -> Result<EtaThresholdReport> {
    eta_threshold_with_marginals(correlations, [0.0; 2], [0.0; 2], tol)
}

/// As [`eta_threshold`] with explicit marginal targets.
///
/// Feasibility is monotone decreasing in eta: given a model at eta2, blind
/// each side independently with probability 1 - eta1/eta2 (expanding every
/// strategy into its four side-blinded variants), which scales singles by
/// eta1/eta2 and coincidences by its square while leaving the detected-block
/// statistics untouched. The scan asserts this monotonicity on every probe.
pub fn eta_threshold_with_marginals(
    correlations: &[[f64; 2]; 2],
    a_marginals: [f64; 2],
    b_marginals: [f64; 2],
    tol: f64,
) -> Result<EtaThresholdReport> {
    if !(tol > 1e-4 && tol < 0.1) {
        return Err(Error::invalid(format!("tol {tol} outside (1e-4, 0.1)")));
    }
    let columns = StrategyColumns::new();
    let mut probes: Vec<(f64, bool)> = Vec::new();
    let mut lp_solves = 0usize;
    let mut probe = |eta: f64, probes: &mut Vec<(f64, bool)>| -> Result<bool> {
        let target = ChshTarget::with_marginals(*correlations, a_marginals, b_marginals, eta)?;
        let problem = chsh_problem(&target, &columns);
        lp_solves += 1;
        let feasible = lp_feasibility(&problem)?.is_feasible();
        probes.push((eta, feasible));
        // Monotonicity: every feasible probe must sit below every infeasible one.
        let max_feasible = probes
            .iter()
            .filter(|(_, f)| *f)
            .map(|(e, _)| *e)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_infeasible = probes
            .iter()
            .filter(|(_, f)| !*f)
            .map(|(e, _)| *e)
            .fold(f64::INFINITY, f64::min);
        if max_feasible >= min_infeasible {
            return Err(Error::internal(format!(
                "feasibility not monotone in eta: feasible at {max_feasible} but infeasible at {min_infeasible}"
            )));
        }
        Ok(feasible)
    };

    if probe(1.0, &mut probes)? {
        return Ok(EtaThresholdReport {
            eta_star: 1.0,
            bracket_low: 1.0,
            bracket_high: 1.0,
            probes,
            bisection_steps: 0,
            lp_solves,
        });
    }
    if !probe(tol, &mut probes)? {
        return Err(Error::NoThreshold { eta_min: tol });
    }
    let mut lo = tol;
    let mut hi = 1.0;
    let mut steps = 0usize;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut probes)? {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Ok(EtaThresholdReport {
        eta_star: lo,
        bracket_low: lo,
        bracket_high: hi,
        probes,
        bisection_steps: steps,
        lp_solves,
    })
}

/// Builds the product model over one state and a list of observables: one
/// class per outcome tuple, weighted by the product of Born marginals, all
/// with uniform detection probability `d`. Reproduces every single-observable
/// marginal exactly; it makes no attempt at joint correlations.
pub fn synthesize_product(
    rho: &DensityState,
    observables: &[SpectralObservable],
    d: f64,
) -> Result<MicroModel> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::invalid(format!(
            "detection probability {d} outside (0, 1]; at 0 every conditional is undefined"
        )));
    }
    if observables.is_empty() {
        return Err(Error::invalid("no observables given"));
    }
    let mut registry = ObservableRegistry::new();
    let mut branch_probs: Vec<Vec<f64>> = Vec::with_capacity(observables.len());
    for obs in observables {
        if obs.dim() != rho.dim() {
            return Err(Error::invalid(format!(
                "observable {} dim {} does not match state dim {}",
                obs.label(),
                obs.dim(),
                rho.dim()
            )));
        }
        let spectrum = obs.spectrum();
        registry.insert(ExtendedObservable::elementary(
            obs.label(),
            ObservableBase::Spectral(obs.clone()),
            default_a0(&spectrum),
        ))?;
        let probs = spectrum
            .iter()
            .map(|&v| born_probability(rho, obs, &OutcomeSet::new(vec![v], false)?))
            .collect::<Result<Vec<f64>>>()?;
        branch_probs.push(probs);
    }

    // Cartesian product over branch indices.
    let mut tuples: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
    for probs in &branch_probs {
        let mut next = Vec::with_capacity(tuples.len() * probs.len());
        for (prefix, weight) in &tuples {
            for (bi, p) in probs.iter().enumerate() {
                let mut ext = prefix.clone();
                ext.push(bi);
                next.push((ext, weight * p));
            }
        }
        tuples = next;
    }
    let kept: Vec<(Vec<usize>, f64)> = tuples
        .into_iter()
        .filter(|(_, w)| *w >= CLASS_PRUNE_TOL)
        .collect();
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    if kept.is_empty() || total <= 0.0 {
        return Err(Error::internal("every outcome tuple had negligible weight"));
    }
    let classes: Vec<MicroClass> = kept
        .into_iter()
        .map(|(branches, w)| {
            let mut responses = BTreeMap::new();
            for (obs, &bi) in observables.iter().zip(&branches) {
                responses.insert(
                    obs.label().to_string(),
                    Response { detect: d, value: obs.branches()[bi].eigenvalue },
                );
            }
            MicroClass { weight: w / total, responses }
        })
        .collect();
    let mode = if d == 1.0 { ModelMode::Deterministic } else { ModelMode::StochasticDetection };
    let model = MicroModel::new(registry, classes, Some(rho.clone()), mode)?;

    // Self-check: exact marginal agreement for every outcome subset.
    let mut properties = Vec::new();
    for obs in observables {
        let spectrum = obs.spectrum();
        for mask in 0..(1usize << spectrum.len()) {
            let subset: Vec<f64> = spectrum
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| *v)
                .collect();
            properties.push(MacroProperty::new(
                obs.label(),
                OutcomeSet::new(subset, false)?,
            ));
        }
    }
    let report = model.quantum_consistency(&properties)?;
    if !report.passes(1e-12) {
        return Err(Error::internal(format!(
            "product synthesis deviates from the Born rule by {:.3e}",
            report.max_deviation
        )));
    }
    Ok(model)
}
