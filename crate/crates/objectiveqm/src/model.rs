//! The objective ontology: extended observables with a no-registration
//! outcome, micro-classes carrying per-observable detection probabilities and
//! deterministic outcomes, and objective states as weighted class mixtures.
//!
//! All probability breakdowns here are exact analytic evaluations; the Monte
//! Carlo realization lives in [`crate::ensemble`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::oracle::{
    born_probability, tensor_product_observable, DensityState, OutcomeSet, SpectralObservable,
};

/// Absolute tolerance for class-weight normalization.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Spectrum source for an elementary observable: either full spectral data
/// (oracle-backed) or a bare outcome list (oracle-free).
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableBase {
    Spectral(SpectralObservable),
    Abstract(Vec<f64>),
}

impl ObservableBase {
    pub fn outcomes(&self) -> Vec<f64> {
        match self {
            ObservableBase::Spectral(obs) => obs.spectrum(),
            ObservableBase::Abstract(outcomes) => outcomes.clone(),
        }
    }
}

/// How a composite observable folds its members' outcomes into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    Product,
}

impl Combiner {
    pub fn apply(&self, values: &[f64]) -> f64 {
        match self {
            Combiner::Product => values.iter().product(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Combiner::Product => "product",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    Elementary(ObservableBase),
    Composite { members: Vec<String>, combiner: Combiner },
}

/// Observable with spectrum extended by the no-registration outcome `a0`,
/// which must not belong to the base spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedObservable {
    pub label: String,
    pub a0: f64,
    pub spec: ObservableSpec,
}

impl ExtendedObservable {
    pub fn elementary(label: impl Into<String>, base: ObservableBase, a0: f64) -> Self {
        ExtendedObservable { label: label.into(), a0, spec: ObservableSpec::Elementary(base) }
    }

    pub fn composite(
        label: impl Into<String>,
        members: Vec<String>,
        combiner: Combiner,
        a0: f64,
    ) -> Self {
        ExtendedObservable {
            label: label.into(),
            a0,
            spec: ObservableSpec::Composite { members, combiner },
        }
    }

    pub fn is_elementary(&self) -> bool {
        matches!(self.spec, ObservableSpec::Elementary(_))
    }

    pub fn spectral(&self) -> Option<&SpectralObservable> {
        match &self.spec {
            ObservableSpec::Elementary(ObservableBase::Spectral(obs)) => Some(obs),
            _ => None,
        }
    }
}

/// Default no-registration outcome for a spectrum: 0 unless taken.
pub fn default_a0(outcomes: &[f64]) -> f64 {
    if !outcomes.contains(&0.0) {
        0.0
    } else {
        outcomes.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0
    }
}

/// Label-keyed registry; composites must reference previously inserted
/// elementary observables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableRegistry {
    map: BTreeMap<String, ExtendedObservable>,
}

impl ObservableRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, obs: ExtendedObservable) -> Result<()> {
        if self.map.contains_key(&obs.label) {
            return Err(Error::invalid(format!("duplicate observable label {}", obs.label)));
        }
        if !obs.a0.is_finite() {
            return Err(Error::invalid(format!("observable {}: a0 not finite", obs.label)));
        }
        match &obs.spec {
            ObservableSpec::Elementary(base) => {
                let outcomes = base.outcomes();
                if outcomes.is_empty() {
                    return Err(Error::invalid(format!(
                        "observable {}: empty spectrum",
                        obs.label
                    )));
                }
                if outcomes.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!(
                        "observable {}: non-finite outcome",
                        obs.label
                    )));
                }
                for (i, v) in outcomes.iter().enumerate() {
                    if outcomes[..i].contains(v) {
                        return Err(Error::invalid(format!(
                            "observable {}: duplicate outcome {v}",
                            obs.label
                        )));
                    }
                }
                if outcomes.contains(&obs.a0) {
                    return Err(Error::invalid(format!(
                        "observable {}: a0 = {} collides with the spectrum",
                        obs.label, obs.a0
                    )));
                }
            }
            ObservableSpec::Composite { members, combiner } => {
                if members.is_empty() {
                    return Err(Error::invalid(format!(
                        "composite {}: no members",
                        obs.label
                    )));
                }
                for (i, m) in members.iter().enumerate() {
                    if members[..i].contains(m) {
                        return Err(Error::invalid(format!(
                            "composite {}: duplicate member {m}",
                            obs.label
                        )));
                    }
                    match self.map.get(m) {
                        None => {
                            return Err(Error::not_found(format!(
                                "composite {}: member {m} not registered",
                                obs.label
                            )))
                        }
                        Some(member) if !member.is_elementary() => {
                            return Err(Error::invalid(format!(
                                "composite {}: member {m} is not elementary",
                                obs.label
                            )))
                        }
                        Some(_) => {}
                    }
                }
                let combined = self.combined_outcomes(members, *combiner)?;
                if combined.contains(&obs.a0) {
                    return Err(Error::invalid(format!(
                        "composite {}: a0 = {} collides with the combined spectrum",
                        obs.label, obs.a0
                    )));
                }
            }
        }
        self.map.insert(obs.label.clone(), obs);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Result<&ExtendedObservable> {
        self.map
            .get(label)
            .ok_or_else(|| Error::not_found(format!("observable {label}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ExtendedObservable> {
        self.map.values()
    }

    pub fn elementary_labels(&self) -> Vec<String> {
        self.map
            .values()
            .filter(|o| o.is_elementary())
            .map(|o| o.label.clone())
            .collect()
    }

    /// The spectrum of a registered observable (combined values for
    /// composites), excluding a0.
    pub fn outcomes(&self, label: &str) -> Result<Vec<f64>> {
        let obs = self.get(label)?;
        match &obs.spec {
            ObservableSpec::Elementary(base) => Ok(base.outcomes()),
            ObservableSpec::Composite { members, combiner } => {
                self.combined_outcomes(members, *combiner)
            }
        }
    }

    fn combined_outcomes(&self, members: &[String], combiner: Combiner) -> Result<Vec<f64>> {
        let mut tuples: Vec<Vec<f64>> = vec![vec![]];
        for m in members {
            let member_outcomes = self.outcomes(m)?;
            let mut next = Vec::with_capacity(tuples.len() * member_outcomes.len());
            for t in &tuples {
                for &v in &member_outcomes {
                    let mut t2 = t.clone();
                    t2.push(v);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        let mut combined: Vec<f64> = tuples.iter().map(|t| combiner.apply(t)).collect();
        combined.sort_by(|a, b| a.partial_cmp(b).unwrap());
        combined.dedup();
        Ok(combined)
    }
}

/// Per-observable response of a micro-class: detection probability and the
/// deterministic outcome reported when detection occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub detect: f64,
    pub value: f64,
}

/// Equivalence class of prepared objects sharing all microscopic properties.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroClass {
    pub weight: f64,
    pub responses: BTreeMap<String, Response>,
}

impl MicroClass {
    pub fn response(&self, label: &str) -> Result<Response> {
        self.responses
            .get(label)
            .copied()
            .ok_or_else(|| Error::not_found(format!("class has no response for {label}")))
    }
}

/// Macroscopic property F = (observable, outcome set); the outcome set may
/// include a0.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroProperty {
    pub observable: String,
    pub delta: OutcomeSet,
}

impl MacroProperty {
    pub fn new(observable: impl Into<String>, delta: OutcomeSet) -> Self {
        MacroProperty { observable: observable.into(), delta }
    }
}

/// Microscopic property: in bijection with the macroscopic properties whose
/// outcome set excludes a0.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroProperty {
    pub id: String,
    macro_property: MacroProperty,
}

impl MicroProperty {
    pub fn new(id: impl Into<String>, macro_property: MacroProperty) -> Result<Self> {
        if macro_property.delta.contains_a0() {
            return Err(Error::invalid(
                "microscopic properties correspond only to outcome sets without a0",
            ));
        }
        Ok(MicroProperty { id: id.into(), macro_property })
    }

    pub fn macro_property(&self) -> &MacroProperty {
        &self.macro_property
    }
}

/// Whether class detection probabilities are restricted to {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    Deterministic,
    StochasticDetection,
}

impl ModelMode {
    pub fn name(&self) -> &'static str {
        match self {
            ModelMode::Deterministic => "deterministic",
            ModelMode::StochasticDetection => "stochastic-detection",
        }
    }
}

/// Exact probability factorization for one property: overall probability,
/// detection probability, and the probability conditional on detection
/// (undefined when detection never occurs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBreakdown {
    pub total: f64,
    pub detect: f64,
    pub conditional: Option<f64>,
}

/// Objective state: a weighted set of micro-classes over an observable
/// registry, optionally paired with a quantum target state.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroModel {
    observables: ObservableRegistry,
    classes: Vec<MicroClass>,
    target: Option<DensityState>,
    mode: ModelMode,
}

impl MicroModel {
    /// Validating constructor; rejects any model with violations.
    pub fn new(
        observables: ObservableRegistry,
        classes: Vec<MicroClass>,
        target: Option<DensityState>,
        mode: ModelMode,
    ) -> Result<Self> {
        let model = Self::new_unvalidated(observables, classes, target, mode);
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(Error::invalid(violations.join("; ")))
        }
    }

    /// Assembles without validation. Intended for negative-control tests and
    /// for callers that run [`MicroModel::validate`] themselves.
    pub fn new_unvalidated(
        observables: ObservableRegistry,
        classes: Vec<MicroClass>,
        target: Option<DensityState>,
        mode: ModelMode,
    ) -> Self {
        MicroModel { observables, classes, target, mode }
    }

    pub fn observables(&self) -> &ObservableRegistry {
        &self.observables
    }

    pub fn classes(&self) -> &[MicroClass] {
        &self.classes
    }

    pub fn target(&self) -> Option<&DensityState> {
        self.target.as_ref()
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    /// Replaces one class wholesale; for negative-control experiments.
    pub fn corrupt_class(&mut self, index: usize, class: MicroClass) {
        self.classes[index] = class;
    }

    /// Checks every model invariant and returns human-readable violations;
    /// empty iff the model is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.classes.is_empty() {
            violations.push("model has no classes".to_string());
        }
        let weight_sum: f64 = self.classes.iter().map(|c| c.weight).sum();
        if (weight_sum - 1.0).abs() > WEIGHT_TOL {
            violations.push(format!("class weights sum to {weight_sum}, expected 1"));
        }
        let elementary = self.observables.elementary_labels();
        for (i, class) in self.classes.iter().enumerate() {
            if !(class.weight.is_finite() && class.weight > 0.0) {
                violations.push(format!("class {i}: weight {} not positive", class.weight));
            }
            for label in &elementary {
                match class.responses.get(label) {
                    None => violations.push(format!("class {i}: missing response for {label}")),
                    Some(r) => {
                        if !(r.detect.is_finite() && (0.0..=1.0).contains(&r.detect)) {
                            violations.push(format!(
                                "class {i}: detection probability {} for {label} outside [0, 1]",
                                r.detect
                            ));
                        }
                        if self.mode == ModelMode::Deterministic
                            && r.detect != 0.0
                            && r.detect != 1.0
                        {
                            violations.push(format!(
                                "class {i}: detection probability {} for {label} not 0/1 in deterministic mode",
                                r.detect
                            ));
                        }
                        match self.observables.outcomes(label) {
                            Ok(outcomes) if outcomes.contains(&r.value) => {}
                            Ok(_) => violations.push(format!(
                                "class {i}: value {} for {label} outside its spectrum",
                                r.value
                            )),
                            Err(e) => violations.push(e.to_string()),
                        }
                    }
                }
            }
            for label in class.responses.keys() {
                if !elementary.contains(label) {
                    violations.push(format!(
                        "class {i}: response for unregistered or non-elementary observable {label}"
                    ));
                }
            }
        }
        violations
    }

    /// Detection probability and would-be outcome of one class for an
    /// elementary or composite observable.
    pub fn class_response(&self, class_index: usize, label: &str) -> Result<Response> {
        let class = self
            .classes
            .get(class_index)
            .ok_or_else(|| Error::not_found(format!("class {class_index}")))?;
        let obs = self.observables.get(label)?;
        match &obs.spec {
            ObservableSpec::Elementary(_) => class.response(label),
            ObservableSpec::Composite { members, combiner } => {
                let mut detect = 1.0;
                let mut values = Vec::with_capacity(members.len());
                for m in members {
                    let r = class.response(m)?;
                    detect *= r.detect;
                    values.push(r.value);
                }
                Ok(Response { detect, value: combiner.apply(&values) })
            }
        }
    }

    /// Per-class probability factorization for one property.
    pub fn class_breakdown(
        &self,
        class_index: usize,
        property: &MacroProperty,
    ) -> Result<ProbabilityBreakdown> {
        self.check_property(property)?;
        let response = self.class_response(class_index, &property.observable)?;
        let conditional = if property.delta.contains(response.value) { 1.0 } else { 0.0 };
        let total = if property.delta.contains_a0() {
            (1.0 - response.detect) + response.detect * conditional
        } else {
            response.detect * conditional
        };
        Ok(ProbabilityBreakdown {
            total,
            detect: response.detect,
            conditional: Some(conditional),
        })
    }

    /// State-level probability factorization: weight-averaged totals and
    /// detection rates, with the conditional term undefined when nothing is
    /// ever detected.
    pub fn state_breakdown(&self, property: &MacroProperty) -> Result<ProbabilityBreakdown> {
        self.check_property(property)?;
        let mut total = 0.0;
        let mut detect = 0.0;
        let mut detected_part = 0.0;
        for i in 0..self.classes.len() {
            let weight = self.classes[i].weight;
            let b = self.class_breakdown(i, property)?;
            total += weight * b.total;
            detect += weight * b.detect;
            detected_part += weight * b.detect * b.conditional.unwrap_or(0.0);
        }
        let conditional = if detect == 0.0 { None } else { Some(detected_part / detect) };
        Ok(ProbabilityBreakdown { total, detect, conditional })
    }

    fn check_property(&self, property: &MacroProperty) -> Result<()> {
        let outcomes = self.observables.outcomes(&property.observable)?;
        if !property.delta.is_subset_of(&outcomes) {
            return Err(Error::invalid(format!(
                "outcome set {:?} is not a subset of the spectrum of {}",
                property.delta.members(),
                property.observable
            )));
        }
        Ok(())
    }

    /// Class possesses the micro-property iff its would-be outcome lies in
    /// the property's outcome set. Derived, never stored.
    pub fn class_possesses(&self, class_index: usize, property: &MicroProperty) -> Result<bool> {
        let response =
            self.class_response(class_index, &property.macro_property().observable)?;
        Ok(property.macro_property().delta.contains(response.value))
    }

    fn dichotomic_elementary(&self, label: &str) -> Result<()> {
        let obs = self.observables.get(label)?;
        if !obs.is_elementary() {
            return Err(Error::domain(format!("{label} is not elementary")));
        }
        let mut outcomes = self.observables.outcomes(label)?;
        outcomes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if outcomes != [-1.0, 1.0] {
            return Err(Error::domain(format!("{label} is not dichotomic (+1/-1)")));
        }
        Ok(())
    }

    /// Correlation among jointly detected pairs only: the detected-block
    /// statistic that quantum probabilities describe. Undefined when the
    /// coincidence rate vanishes.
    pub fn conditional_correlation(&self, a: &str, b: &str) -> Result<Option<f64>> {
        self.dichotomic_elementary(a)?;
        self.dichotomic_elementary(b)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for class in &self.classes {
            let ra = class.response(a)?;
            let rb = class.response(b)?;
            let coincidence = class.weight * ra.detect * rb.detect;
            num += coincidence * ra.value * rb.value;
            den += coincidence;
        }
        Ok(if den == 0.0 { None } else { Some(num / den) })
    }

    /// Correlation over all prepared objects with the no-registration outcome
    /// mapped to 0.
    pub fn unconditional_correlation(&self, a: &str, b: &str) -> Result<f64> {
        self.dichotomic_elementary(a)?;
        self.dichotomic_elementary(b)?;
        let mut e = 0.0;
        for class in &self.classes {
            let ra = class.response(a)?;
            let rb = class.response(b)?;
            e += class.weight * (ra.detect * ra.value) * (rb.detect * rb.value);
        }
        Ok(e)
    }

    /// Compares the model's detection-conditional probabilities against the
    /// quantum target for each property (all of which must exclude a0).
    pub fn quantum_consistency(&self, properties: &[MacroProperty]) -> Result<ConsistencyReport> {
        let target = self
            .target
            .as_ref()
            .ok_or_else(|| Error::invalid("model has no quantum target state"))?;
        let mut entries = Vec::with_capacity(properties.len());
        let mut max_deviation: f64 = 0.0;
        for property in properties {
            if property.delta.contains_a0() {
                return Err(Error::invalid(
                    "quantum consistency is defined only for properties without a0",
                ));
            }
            let spectral = self.spectral_for(&property.observable)?;
            let quantum = born_probability(target, &spectral, &property.delta)?;
            let model_conditional = self
                .state_breakdown(property)?
                .conditional
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "conditional probability undefined for {} (zero detection)",
                        property.observable
                    ))
                })?;
            let deviation = (model_conditional - quantum).abs();
            max_deviation = max_deviation.max(deviation);
            entries.push(ConsistencyEntry {
                observable: property.observable.clone(),
                delta: property.delta.members().to_vec(),
                model_conditional,
                quantum,
                deviation,
            });
        }
        Ok(ConsistencyReport { entries, max_deviation })
    }

    /// Spectral representation of a registered observable, folding composite
    /// members with their combiner; requires every elementary involved to
    /// carry spectral data.
    pub fn spectral_for(&self, label: &str) -> Result<SpectralObservable> {
        let obs = self.observables.get(label)?;
        match &obs.spec {
            ObservableSpec::Elementary(ObservableBase::Spectral(s)) => Ok(s.clone()),
            ObservableSpec::Elementary(ObservableBase::Abstract(_)) => Err(Error::invalid(
                format!("observable {label} has no spectral backing"),
            )),
            ObservableSpec::Composite { members, combiner } => {
                let mut acc: Option<SpectralObservable> = None;
                for m in members {
                    let next = self.spectral_for(m)?;
                    acc = Some(match acc {
                        None => next,
                        Some(prev) => match combiner {
                            Combiner::Product => {
                                tensor_product_observable(&prev, &next, |x, y| x * y, label)?
                            }
                        },
                    });
                }
                acc.ok_or_else(|| Error::internal("composite with no members slipped through"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyEntry {
    pub observable: String,
    pub delta: Vec<f64>,
    pub model_conditional: f64,
    pub quantum: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub entries: Vec<ConsistencyEntry>,
    pub max_deviation: f64,
}

impl ConsistencyReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OutcomeSet;
    use crate::testkit;
    use proptest::prelude::*;

    fn dichotomic_registry(labels: &[&str]) -> ObservableRegistry {
        let mut reg = ObservableRegistry::new();
        for label in labels {
            reg.insert(ExtendedObservable::elementary(
                *label,
                ObservableBase::Abstract(vec![1.0, -1.0]),
                0.0,
            ))
            .unwrap();
        }
        reg
    }

    fn single_class_model(detect: f64, value: f64) -> MicroModel {
        let reg = dichotomic_registry(&["A"]);
        let mut responses = BTreeMap::new();
        responses.insert("A".to_string(), Response { detect, value });
        MicroModel::new(
            reg,
            vec![MicroClass { weight: 1.0, responses }],
            None,
            ModelMode::StochasticDetection,
        )
        .unwrap()
    }

    fn prop(delta: Vec<f64>, a0: bool) -> MacroProperty {
        MacroProperty::new("A", OutcomeSet::new(delta, a0).unwrap())
    }

    #[test]
    fn class_breakdown_examples() {
        let m = single_class_model(1.0, 1.0);
        let b = m.class_breakdown(0, &prop(vec![1.0], false)).unwrap();
        assert_eq!((b.total, b.detect, b.conditional), (1.0, 1.0, Some(1.0)));

        let m = single_class_model(0.6, 1.0);
        let b = m.class_breakdown(0, &prop(vec![-1.0], false)).unwrap();
        assert_eq!((b.total, b.detect, b.conditional), (0.0, 0.6, Some(0.0)));

        // a0 in delta: the two detection branches give (1 - 0.6) * 1 + 0.6 * 0.
        let b = m.class_breakdown(0, &prop(vec![-1.0], true)).unwrap();
        assert!((b.total - 0.4).abs() < 1e-15);
        assert_eq!(b.detect, 0.6);
        assert_eq!(b.conditional, Some(0.0));
    }

    #[test]
    fn class_breakdown_unknown_class_or_observable() {
        let m = single_class_model(1.0, 1.0);
        assert!(matches!(
            m.class_breakdown(3, &prop(vec![1.0], false)),
            Err(Error::NotFound(_))
        ));
        let missing = MacroProperty::new("B", OutcomeSet::new(vec![1.0], false).unwrap());
        assert!(matches!(m.class_breakdown(0, &missing), Err(Error::NotFound(_))));
    }

    fn two_class_model(d: [f64; 2], v: [f64; 2]) -> MicroModel {
        let reg = dichotomic_registry(&["A"]);
        let classes = (0..2)
            .map(|i| {
                let mut responses = BTreeMap::new();
                responses.insert("A".to_string(), Response { detect: d[i], value: v[i] });
                MicroClass { weight: 0.5, responses }
            })
            .collect();
        MicroModel::new(reg, classes, None, ModelMode::StochasticDetection).unwrap()
    }

    #[test]
    fn state_breakdown_examples() {
        let m = single_class_model(1.0, 1.0);
        let f = prop(vec![1.0], false);
        assert_eq!(m.state_breakdown(&f).unwrap(), m.class_breakdown(0, &f).unwrap());

        let m = two_class_model([1.0, 1.0], [1.0, -1.0]);
        let b = m.state_breakdown(&f).unwrap();
        assert_eq!((b.total, b.detect, b.conditional), (0.5, 1.0, Some(0.5)));

        // Hand arithmetic: total = 0.5*0.8*1 + 0.5*0.4*0 = 0.4, detect = 0.6.
        let m = two_class_model([0.8, 0.4], [1.0, -1.0]);
        let b = m.state_breakdown(&f).unwrap();
        assert!((b.total - 0.4).abs() < 1e-15);
        assert!((b.detect - 0.6).abs() < 1e-15);
        assert!((b.conditional.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn state_breakdown_zero_detection_is_undefined_not_an_error() {
        let m = single_class_model(0.0, 1.0);
        let b = m.state_breakdown(&prop(vec![1.0], false)).unwrap();
        assert_eq!(b.conditional, None);
        assert_eq!(b.detect, 0.0);
        assert_eq!(b.total, 0.0);
    }

    fn bipartite_model(
        weights: &[f64],
        responses: &[[(f64, f64); 4]],
    ) -> MicroModel {
        let reg = dichotomic_registry(&["A1", "A2", "B1", "B2"]);
        let labels = ["A1", "A2", "B1", "B2"];
        let classes = weights
            .iter()
            .zip(responses)
            .map(|(w, resp)| {
                let mut map = BTreeMap::new();
                for (label, (d, v)) in labels.iter().zip(resp) {
                    map.insert(label.to_string(), Response { detect: *d, value: *v });
                }
                MicroClass { weight: *w, responses: map }
            })
            .collect();
        MicroModel::new(reg, classes, None, ModelMode::StochasticDetection).unwrap()
    }

    #[test]
    fn correlation_examples() {
        // Perfectly correlated, always detected.
        let m = bipartite_model(
            &[0.5, 0.5],
            &[
                [(1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (1.0, 1.0)],
                [(1.0, -1.0), (1.0, -1.0), (1.0, -1.0), (1.0, -1.0)],
            ],
        );
        assert_eq!(m.conditional_correlation("A1", "B1").unwrap(), Some(1.0));
        // Full detection: conditional equals unconditional.
        assert!(
            (m.conditional_correlation("A1", "B2").unwrap().unwrap()
                - m.unconditional_correlation("A1", "B2").unwrap())
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn correlation_with_one_sided_efficiency_scales() {
        let eta = 0.37;
        let m = bipartite_model(
            &[0.5, 0.5],
            &[
                [(eta, 1.0), (eta, 1.0), (1.0, 1.0), (1.0, -1.0)],
                [(eta, -1.0), (eta, -1.0), (1.0, -1.0), (1.0, -1.0)],
            ],
        );
        let cond = m.conditional_correlation("A1", "B1").unwrap().unwrap();
        let unc = m.unconditional_correlation("A1", "B1").unwrap();
        assert!((unc - eta * cond).abs() < 1e-15);
    }

    #[test]
    fn correlation_all_undetected() {
        let m = bipartite_model(
            &[1.0],
            &[[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]],
        );
        assert_eq!(m.conditional_correlation("A1", "B1").unwrap(), None);
        assert_eq!(m.unconditional_correlation("A1", "B1").unwrap(), 0.0);
    }

    #[test]
    fn correlation_brute_force_cross_check() {
        let mut rng = crate::rng::SeqRng::new(97);
        for _ in 0..50 {
            let model = testkit::random_bipartite_model(&mut rng);
            let mut num = 0.0;
            let mut den = 0.0;
            let mut unc = 0.0;
            for class in model.classes() {
                let a = class.response("A1").unwrap();
                let b = class.response("B2").unwrap();
                num += class.weight * a.detect * b.detect * a.value * b.value;
                den += class.weight * a.detect * b.detect;
                unc += class.weight * a.detect * a.value * b.detect * b.value;
            }
            let cond = model.conditional_correlation("A1", "B2").unwrap();
            match cond {
                Some(c) => assert!((c - num / den).abs() < 1e-12),
                None => assert_eq!(den, 0.0),
            }
            assert!((model.unconditional_correlation("A1", "B2").unwrap() - unc).abs() < 1e-15);
        }
    }

    #[test]
    fn correlation_rejects_non_dichotomic() {
        let mut reg = dichotomic_registry(&["A"]);
        reg.insert(ExtendedObservable::elementary(
            "T",
            ObservableBase::Abstract(vec![0.0, 1.0, 2.0]),
            -1.0,
        ))
        .unwrap();
        let mut responses = BTreeMap::new();
        responses.insert("A".to_string(), Response { detect: 1.0, value: 1.0 });
        responses.insert("T".to_string(), Response { detect: 1.0, value: 0.0 });
        let m = MicroModel::new(
            reg,
            vec![MicroClass { weight: 1.0, responses }],
            None,
            ModelMode::StochasticDetection,
        )
        .unwrap();
        assert!(matches!(m.conditional_correlation("A", "T"), Err(Error::Domain(_))));
        assert!(matches!(m.unconditional_correlation("T", "A"), Err(Error::Domain(_))));
    }

    #[test]
    fn noncontextuality_is_structural() {
        // The same elementary observable contributes the same stored value
        // through two different composites.
        let mut reg = dichotomic_registry(&["A", "B", "C"]);
        reg.insert(ExtendedObservable::composite(
            "AB",
            vec!["A".into(), "B".into()],
            Combiner::Product,
            0.0,
        ))
        .unwrap();
        reg.insert(ExtendedObservable::composite(
            "AC",
            vec!["A".into(), "C".into()],
            Combiner::Product,
            0.0,
        ))
        .unwrap();
        let mut responses = BTreeMap::new();
        responses.insert("A".to_string(), Response { detect: 1.0, value: -1.0 });
        responses.insert("B".to_string(), Response { detect: 1.0, value: 1.0 });
        responses.insert("C".to_string(), Response { detect: 1.0, value: 1.0 });
        let m = MicroModel::new(
            reg,
            vec![MicroClass { weight: 1.0, responses }],
            None,
            ModelMode::Deterministic,
        )
        .unwrap();
        let via_ab = m.class_response(0, "AB").unwrap().value;
        let via_ac = m.class_response(0, "AC").unwrap().value;
        assert_eq!(via_ab, -1.0);
        assert_eq!(via_ac, -1.0);
    }

    #[test]
    fn validate_reports_violations() {
        let reg = dichotomic_registry(&["A"]);
        let mut responses = BTreeMap::new();
        responses.insert("A".to_string(), Response { detect: 1.0, value: 1.0 });
        let bad_weight = MicroModel::new_unvalidated(
            reg.clone(),
            vec![MicroClass { weight: 0.9, responses: responses.clone() }],
            None,
            ModelMode::Deterministic,
        );
        assert!(!bad_weight.validate().is_empty());

        let mut bad_value_responses = BTreeMap::new();
        bad_value_responses.insert("A".to_string(), Response { detect: 1.0, value: 0.5 });
        let bad_value = MicroModel::new_unvalidated(
            reg.clone(),
            vec![MicroClass { weight: 1.0, responses: bad_value_responses }],
            None,
            ModelMode::Deterministic,
        );
        assert!(bad_value.validate().iter().any(|v| v.contains("outside its spectrum")));

        let good = MicroModel::new_unvalidated(
            reg,
            vec![MicroClass { weight: 1.0, responses }],
            None,
            ModelMode::Deterministic,
        );
        assert!(good.validate().is_empty());
    }

    #[test]
    fn quantum_consistency_on_perturbed_weights() {
        use crate::oracle::{make_pure, spin_observable};
        use num_complex::Complex64;

        let rho = make_pure(&[Complex64::ONE, Complex64::ONE]).unwrap();
        let obs = spin_observable([0.0, 0.0, 1.0], "Z").unwrap();
        let model =
            crate::synthesis::synthesize_product(&rho, &[obs], 1.0).unwrap();
        let f = MacroProperty::new("Z", OutcomeSet::new(vec![1.0], false).unwrap());
        let report = model.quantum_consistency(std::slice::from_ref(&f)).unwrap();
        assert!(report.passes(1e-12));

        // Empty property list: max deviation 0.
        assert_eq!(model.quantum_consistency(&[]).unwrap().max_deviation, 0.0);

        // Perturb one weight: deviation appears.
        let mut classes = model.classes().to_vec();
        classes[0].weight += 0.01;
        classes[1].weight -= 0.01;
        let perturbed = MicroModel::new_unvalidated(
            model.observables().clone(),
            classes,
            model.target().cloned(),
            model.mode(),
        );
        let report = perturbed.quantum_consistency(&[f]).unwrap();
        assert!(report.max_deviation > 1e-3);
    }

    #[test]
    fn micro_property_rejects_a0_and_possession_is_derived() {
        let delta_a0 = OutcomeSet::new(vec![1.0], true).unwrap();
        assert!(MicroProperty::new("f", MacroProperty::new("A", delta_a0)).is_err());

        let m = single_class_model(0.3, 1.0);
        let f = MicroProperty::new(
            "f",
            MacroProperty::new("A", OutcomeSet::new(vec![1.0], false).unwrap()),
        )
        .unwrap();
        assert!(m.class_possesses(0, &f).unwrap());
        let g = MicroProperty::new(
            "g",
            MacroProperty::new("A", OutcomeSet::new(vec![-1.0], false).unwrap()),
        )
        .unwrap();
        assert!(!m.class_possesses(0, &g).unwrap());
    }

    proptest! {
        /// Factorization identity: total = detect * conditional for a0-free
        /// properties, and total = (1 - detect) + detect * conditional
        /// otherwise, exact to 1e-15 relative.
        #[test]
        fn factorization_identity(seed in any::<u64>()) {
            let mut rng = crate::rng::SeqRng::new(seed);
            let model = testkit::random_model(&mut rng, &testkit::ModelShape::default());
            let property = testkit::random_property(&mut rng, &model);
            let b = model.state_breakdown(&property).unwrap();
            if let Some(cond) = b.conditional {
                let expected = if property.delta.contains_a0() {
                    (1.0 - b.detect) + b.detect * cond
                } else {
                    b.detect * cond
                };
                prop_assert!((b.total - expected).abs() <= 1e-15 * b.total.abs().max(1.0));
            }
            if !property.delta.contains_a0() {
                prop_assert!(b.total <= b.detect + 1e-15);
            }
        }

        /// Merging two identical classes leaves every breakdown unchanged.
        #[test]
        fn mixture_linearity(seed in any::<u64>()) {
            let mut rng = crate::rng::SeqRng::new(seed);
            let model = testkit::random_model(&mut rng, &testkit::ModelShape::default());
            let property = testkit::random_property(&mut rng, &model);

            // Split class 0 into two half-weight copies.
            let mut classes = model.classes().to_vec();
            let mut split = classes[0].clone();
            split.weight /= 2.0;
            classes[0] = split.clone();
            classes.insert(0, split);
            let split_model = MicroModel::new_unvalidated(
                model.observables().clone(),
                classes,
                None,
                model.mode(),
            );

            let a = model.state_breakdown(&property).unwrap();
            let b = split_model.state_breakdown(&property).unwrap();
            prop_assert!((a.total - b.total).abs() <= 1e-15);
            prop_assert!((a.detect - b.detect).abs() <= 1e-15);
            match (a.conditional, b.conditional) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12),
                (x, y) => prop_assert_eq!(x, y),
            }
        }

        /// Locality is structural: the unconditional CHSH combination of any
        /// bipartite model respects the classical bound.
        #[test]
        fn unconditional_chsh_respects_local_bound(seed in any::<u64>()) {
            let mut rng = crate::rng::SeqRng::new(seed);
            let model = testkit::random_bipartite_model(&mut rng);
            let e = |a: &str, b: &str| model.unconditional_correlation(a, b).unwrap();
            let s = e("A1", "B1") + e("A1", "B2") + e("A2", "B1") - e("A2", "B2");
            prop_assert!(s.abs() <= 2.0 + 1e-12);
        }
    }
}
