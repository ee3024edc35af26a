//! Seeded Monte Carlo realization of the preparation/measurement story.
//!
//! Objects are prepared by drawing a hidden class per object, measured by
//! drawing detection per (object, elementary observable), and counted into
//! tallies whose frequency identities are checked in exact integer
//! arithmetic. Every draw comes from a counter-based stream keyed by
//! (seed, object id, observable label), so results are bit-identical for a
//! fixed seed no matter how the work is split across threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MacroProperty, MicroModel, ObservableSpec, ProbabilityBreakdown};
use crate::rng::{draw_unit, fnv1a};

const TAG_PREPARE: u64 = 1;
const TAG_DETECT: u64 = 2;

/// One prepared sample with its hidden class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhysicalObject {
    pub id: u64,
    pub class_index: usize,
}

/// Result of measuring one observable on one object; `outcome` is either a
/// spectrum value or the observable's a0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeRecord {
    pub object_id: u64,
    pub observable: String,
    pub outcome: f64,
}

/// Exact ratio of counter values; numerator/denominator are never reduced so
/// they stay readable as counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Frequency {
    pub num: u64,
    pub den: u64,
}

impl Frequency {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact test of self == a * b over the rationals.
    pub fn equals_product(self, a: Frequency, b: Frequency) -> bool {
        (self.num as u128) * (a.den as u128) * (b.den as u128)
            == (self.den as u128) * (a.num as u128) * (b.num as u128)
    }
}

/// Per-class counters for one measured property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    /// Objects prepared in this class.
    pub n: u64,
    /// Objects of this class that were not detected.
    pub n0: u64,
    /// Objects of this class possessing the property (undetected objects
    /// count when the outcome set contains a0).
    pub nf: u64,
    /// Detected objects of this class possessing the property.
    pub nf_detected: u64,
}

/// Counters of one ensemble run plus their exact frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleTally {
    pub observable: String,
    pub delta: Vec<f64>,
    pub contains_a0: bool,
    pub n: u64,
    pub n0: u64,
    pub per_class: Vec<ClassCounts>,
    pub freq_total: Frequency,
    pub freq_detect: Frequency,
    pub freq_conditional: Option<Frequency>,
}

/// Exact-arithmetic verdicts on the tally's frequency identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallyIdentityReport {
    /// Per class: frequency factorization, None when no object of the class
    /// was detected (the conditional term does not exist).
    pub eq_class: Vec<Option<bool>>,
    /// State-level frequency factorization, None when nothing was detected.
    pub eq_state: Option<bool>,
    /// Per class: the detected-possessor count is all-or-nothing.
    pub dichotomy: Vec<bool>,
    /// Class counters add up to the ensemble counters.
    pub sums_consistent: bool,
}

impl TallyIdentityReport {
    pub fn all_hold(&self) -> bool {
        self.sums_consistent
            && self.dichotomy.iter().all(|&d| d)
            && self.eq_class.iter().all(|e| e.unwrap_or(true))
            && self.eq_state.unwrap_or(true)
    }
}

impl EnsembleTally {
    /// Checks the frequency identities exactly over the integers.
    pub fn identity_report(&self) -> TallyIdentityReport {
        let mut eq_class = Vec::with_capacity(self.per_class.len());
        let mut dichotomy = Vec::with_capacity(self.per_class.len());
        for c in &self.per_class {
            let detected = c.n - c.n0;
            if c.n > 0 && detected > 0 {
                let lhs = Frequency { num: c.nf, den: c.n };
                let det = Frequency { num: detected, den: c.n };
                let cond = Frequency { num: c.nf_detected, den: detected };
                // With a0 in delta the undetected objects possess the
                // property too, so the detected part carries the identity.
                let lhs_detected = Frequency { num: c.nf_detected, den: c.n };
                eq_class.push(Some(
                    lhs_detected.equals_product(det, cond)
                        && if self.contains_a0 {
                            c.nf == c.nf_detected + c.n0
                        } else {
                            lhs.equals_product(det, cond)
                        },
                ));
            } else {
                eq_class.push(None);
            }
            dichotomy.push(c.nf_detected == 0 || c.nf_detected == c.n - c.n0);
        }
        let detected = self.n - self.n0;
        let eq_state = if detected > 0 {
            let nf_det_sum: u64 = self.per_class.iter().map(|c| c.nf_detected).sum();
            let lhs = Frequency { num: nf_det_sum, den: self.n };
            let det = Frequency { num: detected, den: self.n };
            let cond = Frequency { num: nf_det_sum, den: detected };
            Some(lhs.equals_product(det, cond))
        } else {
            None
        };
        let sums_consistent = self.per_class.iter().map(|c| c.n).sum::<u64>() == self.n
            && self.per_class.iter().map(|c| c.n0).sum::<u64>() == self.n0
            && self.per_class.iter().all(|c| c.n0 <= c.n && c.nf <= c.n);
        TallyIdentityReport { eq_class, eq_state, dichotomy, sums_consistent }
    }
}

/// Prepares `n` objects with ids starting at 0.
pub fn prepare(model: &MicroModel, n: u64, seed: u64) -> Result<Vec<PhysicalObject>> {
    prepare_range(model, 0, n, seed)
}

/// Prepares `n` objects with ids `first_id .. first_id + n`; disjoint id
/// ranges give statistically independent ensembles under one seed.
pub fn prepare_range(
    model: &MicroModel,
    first_id: u64,
    n: u64,
    seed: u64,
) -> Result<Vec<PhysicalObject>> {
    if n == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(Error::invalid(format!("invalid model: {}", violations.join("; "))));
    }
    let cumulative: Vec<f64> = model
        .classes()
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();
    let objects = (0..n)
        .into_par_iter()
        .map(|k| {
            let id = first_id + k;
            let u = draw_unit(seed, &[TAG_PREPARE, id]);
            let class_index = cumulative
                .iter()
                .position(|&edge| u < edge)
                .unwrap_or(cumulative.len() - 1);
            PhysicalObject { id, class_index }
        })
        .collect();
    Ok(objects)
}

/// Measures one registered observable on every object. For composites, each
/// member detection is drawn from the member's own (object, label) stream;
/// any member failing to detect yields the composite's a0. Measuring the
/// members separately under the same seed therefore reproduces the joint
/// measurement draw for draw.
pub fn measure_ensemble(
    objects: &[PhysicalObject],
    observable: &str,
    model: &MicroModel,
    seed: u64,
) -> Result<Vec<OutcomeRecord>> {
    let obs = model.observables().get(observable)?;
    let member_labels: Vec<String> = match &obs.spec {
        ObservableSpec::Elementary(_) => vec![obs.label.clone()],
        ObservableSpec::Composite { members, .. } => members.clone(),
    };
    let member_hashes: Vec<u64> = member_labels.iter().map(|l| fnv1a(l.as_bytes())).collect();
    let a0 = obs.a0;

    let records = objects
        .par_iter()
        .map(|object| {
            let class = &model.classes()[object.class_index];
            let mut all_detected = true;
            for (label, hash) in member_labels.iter().zip(&member_hashes) {
                let detect = class.responses.get(label).map(|r| r.detect).unwrap_or(0.0);
                let u = draw_unit(seed, &[TAG_DETECT, object.id, *hash]);
                if u >= detect {
                    all_detected = false;
                }
            }
            let outcome = if all_detected {
                model
                    .class_response(object.class_index, observable)
                    .expect("registered observable")
                    .value
            } else {
                a0
            };
            OutcomeRecord {
                object_id: object.id,
                observable: observable.to_string(),
                outcome,
            }
        })
        .collect();
    Ok(records)
}

/// Counts an ensemble run into per-class counters and exact frequencies.
pub fn tally(
    objects: &[PhysicalObject],
    records: &[OutcomeRecord],
    model: &MicroModel,
    property: &MacroProperty,
) -> Result<EnsembleTally> {
    if objects.len() != records.len() {
        return Err(Error::invalid(format!(
            "{} objects but {} records",
            objects.len(),
            records.len()
        )));
    }
    let obs = model.observables().get(&property.observable)?;
    let outcomes = model.observables().outcomes(&property.observable)?;
    if !property.delta.is_subset_of(&outcomes) {
        return Err(Error::invalid(format!(
            "outcome set is not a subset of the spectrum of {}",
            property.observable
        )));
    }
    let a0 = obs.a0;
    let mut per_class = vec![
        ClassCounts { n: 0, n0: 0, nf: 0, nf_detected: 0 };
        model.classes().len()
    ];
    let mut n0_total: u64 = 0;
    for (object, record) in objects.iter().zip(records) {
        if record.object_id != object.id {
            return Err(Error::invalid(format!(
                "record for object {} does not match object {}",
                record.object_id, object.id
            )));
        }
        if record.observable != property.observable {
            return Err(Error::invalid(format!(
                "record measures {} but the property concerns {}",
                record.observable, property.observable
            )));
        }
        let counts = &mut per_class[object.class_index];
        counts.n += 1;
        if record.outcome == a0 {
            counts.n0 += 1;
            n0_total += 1;
            if property.delta.contains_a0() {
                counts.nf += 1;
            }
        } else if property.delta.contains(record.outcome) {
            counts.nf += 1;
            counts.nf_detected += 1;
        }
    }
    let n = objects.len() as u64;
    let nf_total: u64 = per_class.iter().map(|c| c.nf).sum();
    let detected = n - n0_total;
    let nf_detected_total: u64 = per_class.iter().map(|c| c.nf_detected).sum();
    Ok(EnsembleTally {
        observable: property.observable.clone(),
        delta: property.delta.members().to_vec(),
        contains_a0: property.delta.contains_a0(),
        n,
        n0: n0_total,
        per_class,
        freq_total: Frequency { num: nf_total, den: n },
        freq_detect: Frequency { num: detected, den: n },
        freq_conditional: if detected > 0 {
            Some(Frequency { num: nf_detected_total, den: detected })
        } else {
            None
        },
    })
}

/// Empirical frequencies vs the analytic breakdown, with binomial standard
/// errors at the analytic probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n: u64,
    pub detected: u64,
    pub analytic_total: f64,
    pub analytic_detect: f64,
    pub analytic_conditional: Option<f64>,
    pub freq_total: f64,
    pub freq_detect: f64,
    pub freq_conditional: Option<f64>,
    pub deviation_total: f64,
    pub deviation_detect: f64,
    pub deviation_conditional: Option<f64>,
    pub se_total: f64,
    pub se_detect: f64,
    pub se_conditional: Option<f64>,
    pub identities_hold: bool,
}

impl ConvergenceReport {
    /// True when every deviation lies within `k` standard errors, requiring
    /// exact agreement where the standard error vanishes.
    pub fn within_sigma(&self, k: f64) -> bool {
        let check = |dev: f64, se: f64| {
            if se == 0.0 {
                dev == 0.0
            } else {
                dev <= k * se
            }
        };
        check(self.deviation_total, self.se_total)
            && check(self.deviation_detect, self.se_detect)
            && match (self.deviation_conditional, self.se_conditional) {
                (Some(dev), Some(se)) => check(dev, se),
                _ => true,
            }
    }
}

fn binomial_se(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Runs prepare/measure/tally and compares against the analytic breakdown.
pub fn convergence_report(
    model: &MicroModel,
    property: &MacroProperty,
    n: u64,
    seed: u64,
) -> Result<ConvergenceReport> {
    let objects = prepare(model, n, seed)?;
    let records = measure_ensemble(&objects, &property.observable, model, seed)?;
    let t = tally(&objects, &records, model, property)?;
    convergence_from_tally(model, property, &t)
}

/// Compares an existing tally against the analytic breakdown.
pub fn convergence_from_tally(
    model: &MicroModel,
    property: &MacroProperty,
    t: &EnsembleTally,
) -> Result<ConvergenceReport> {
    let analytic = analytic_breakdown(model, property)?;
    let n = t.n;
    let identities_hold = t.identity_report().all_hold();
    let freq_total = t.freq_total.to_f64();
    let freq_detect = t.freq_detect.to_f64();
    let freq_conditional = t.freq_conditional.map(Frequency::to_f64);
    let detected = t.n - t.n0;
    let deviation_conditional = match (freq_conditional, analytic.conditional) {
        (Some(f), Some(a)) => Some((f - a).abs()),
        _ => None,
    };
    Ok(ConvergenceReport {
        n,
        detected,
        analytic_total: analytic.total,
        analytic_detect: analytic.detect,
        analytic_conditional: analytic.conditional,
        freq_total,
        freq_detect,
        freq_conditional,
        deviation_total: (freq_total - analytic.total).abs(),
        deviation_detect: (freq_detect - analytic.detect).abs(),
        deviation_conditional,
        se_total: binomial_se(analytic.total, n),
        se_detect: binomial_se(analytic.detect, n),
        se_conditional: analytic.conditional.map(|p| binomial_se(p, detected)),
        identities_hold,
    })
}

fn analytic_breakdown(model: &MicroModel, property: &MacroProperty) -> Result<ProbabilityBreakdown> {
    model.state_breakdown(property)
}
