//! Executable no-go demonstrations: block-wise CHSH estimation on fresh
//! ensembles per settings pair, and Kochen-Specker context checking with an
//! evasion construction that hides every would-be violation behind the
//! no-registration outcome.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ensemble::{measure_ensemble, prepare_range};
use crate::error::{Error, Result};
use crate::model::{
    ExtendedObservable, MicroClass, MicroModel, ModelMode, ObservableBase, ObservableRegistry,
    Response,
};
use crate::rng::{draw, fnv1a};
use crate::synthesis::chsh_combination;

/// The four elementary setting labels of a CHSH run, two per side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshSettings {
    pub a: [String; 2],
    pub b: [String; 2],
}

impl ChshSettings {
    pub fn standard() -> Self {
        ChshSettings {
            a: ["A1".into(), "A2".into()],
            b: ["B1".into(), "B2".into()],
        }
    }
}

/// One settings-pair block: a fresh ensemble, its coincidence statistics,
/// and the analytic value it should converge to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshBlock {
    /// 1-based (x, y) settings pair.
    pub pair: (usize, usize),
    pub a_label: String,
    pub b_label: String,
    /// First object id of the block; blocks use disjoint id ranges.
    pub first_id: u64,
    pub n: u64,
    pub coincidences: u64,
    pub correlation: Option<f64>,
    pub standard_error: Option<f64>,
    pub analytic_conditional: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshBlockReport {
    pub n_per_block: u64,
    pub seed: u64,
    pub blocks: Vec<ChshBlock>,
    /// |E11 + E12 + E21 - E22| over the four block estimates; None when any
    /// block had no coincidences.
    pub s_estimate: Option<f64>,
    pub s_standard_error: Option<f64>,
    pub analytic_conditional_s: Option<f64>,
    pub analytic_unconditional_s: f64,
}

/// Estimates the four CHSH correlations on four disjoint fresh ensembles,
/// conditioning on coincident detections, and compares with the analytic
/// conditional and unconditional values.
pub fn chsh_blockwise(
    model: &MicroModel,
    settings: &ChshSettings,
    n_per_block: u64,
    seed: u64,
) -> Result<ChshBlockReport> {
    if n_per_block < 1_000 {
        return Err(Error::invalid("n_per_block must be at least 1000"));
    }
    let mut blocks = Vec::with_capacity(4);
    let mut estimates = [[None::<(f64, f64)>; 2]; 2];
    for (k, (x, y)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let a_label = &settings.a[x];
        let b_label = &settings.b[y];
        let block_key = format!("block-{}{}", x + 1, y + 1);
        let block_seed = draw(seed, &[fnv1a(block_key.as_bytes())]);
        let first_id = k as u64 * n_per_block;
        let objects = prepare_range(model, first_id, n_per_block, block_seed)?;
        let records_a = measure_ensemble(&objects, a_label, model, block_seed)?;
        let records_b = measure_ensemble(&objects, b_label, model, block_seed)?;
        let a0_a = model.observables().get(a_label)?.a0;
        let a0_b = model.observables().get(b_label)?.a0;

        let mut coincidences = 0u64;
        let mut product_sum = 0.0;
        for (ra, rb) in records_a.iter().zip(&records_b) {
            if ra.outcome != a0_a && rb.outcome != a0_b {
                coincidences += 1;
                product_sum += ra.outcome * rb.outcome;
            }
        }
        let (correlation, standard_error) = if coincidences > 0 {
            let e = product_sum / coincidences as f64;
            let variance = (1.0 - e * e).max(0.0);
            (Some(e), Some((variance / coincidences as f64).sqrt()))
        } else {
            (None, None)
        };
        if let (Some(e), Some(se)) = (correlation, standard_error) {
            estimates[x][y] = Some((e, se));
        }
        blocks.push(ChshBlock {
            pair: (x + 1, y + 1),
            a_label: a_label.clone(),
            b_label: b_label.clone(),
            first_id,
            n: n_per_block,
            coincidences,
            correlation,
            standard_error,
            analytic_conditional: model.conditional_correlation(a_label, b_label)?,
        });
    }

    let (s_estimate, s_standard_error) = if estimates.iter().flatten().all(Option::is_some) {
        let e = |x: usize, y: usize| estimates[x][y].unwrap();
        let s = e(0, 0).0 + e(0, 1).0 + e(1, 0).0 - e(1, 1).0;
        let var: f64 = estimates
            .iter()
            .flatten()
            .map(|pair| pair.unwrap().1.powi(2))
            .sum();
        (Some(s.abs()), Some(var.sqrt()))
    } else {
        (None, None)
    };

    let mut analytic_cond = [[None::<f64>; 2]; 2];
    let mut analytic_unc = [[0.0; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            analytic_cond[x][y] =
                model.conditional_correlation(&settings.a[x], &settings.b[y])?;
            analytic_unc[x][y] =
                model.unconditional_correlation(&settings.a[x], &settings.b[y])?;
        }
    }
    let analytic_conditional_s = if analytic_cond.iter().flatten().all(Option::is_some) {
        let e = [
            [analytic_cond[0][0].unwrap(), analytic_cond[0][1].unwrap()],
            [analytic_cond[1][0].unwrap(), analytic_cond[1][1].unwrap()],
        ];
        Some(chsh_combination(&e).abs())
    } else {
        None
    };

    Ok(ChshBlockReport {
        n_per_block,
        seed,
        blocks,
        s_estimate,
        s_standard_error,
        analytic_conditional_s,
        analytic_unconditional_s: chsh_combination(&analytic_unc).abs(),
    })
}

/// A functional constraint among jointly measurable dichotomic observables:
/// the product of the assigned values over `members` must equal `target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsContext {
    pub members: Vec<String>,
    pub target: f64,
}

/// A finite system of dichotomic observables and product contexts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsSystem {
    pub observables: Vec<String>,
    pub contexts: Vec<KsContext>,
}

impl KsSystem {
    pub fn validate(&self) -> Result<()> {
        if self.observables.is_empty() {
            return Err(Error::invalid("system has no observables"));
        }
        for (i, label) in self.observables.iter().enumerate() {
            if self.observables[..i].contains(label) {
                return Err(Error::invalid(format!("duplicate observable {label}")));
            }
        }
        if self.contexts.is_empty() {
            return Err(Error::invalid("system has no contexts"));
        }
        for (ci, context) in self.contexts.iter().enumerate() {
            if context.target != 1.0 && context.target != -1.0 {
                return Err(Error::invalid(format!(
                    "context {ci}: target {} is not +1/-1",
                    context.target
                )));
            }
            if context.members.is_empty() {
                return Err(Error::invalid(format!("context {ci} has no members")));
            }
            for (i, m) in context.members.iter().enumerate() {
                if context.members[..i].contains(m) {
                    return Err(Error::invalid(format!("context {ci}: duplicate member {m}")));
                }
                if !self.observables.contains(m) {
                    return Err(Error::not_found(format!(
                        "context {ci}: member {m} not among the observables"
                    )));
                }
            }
        }
        Ok(())
    }

    fn index_of(&self, label: &str) -> usize {
        self.observables.iter().position(|o| o == label).expect("validated member")
    }
}

/// Total +/-1 assignment over a system's observables, stored compactly: a set
/// bit means -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Assignment {
    bits: u32,
    num_observables: usize,
}

impl Assignment {
    pub fn value_at(&self, index: usize) -> f64 {
        if self.bits & (1 << index) != 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn value_for(&self, system: &KsSystem, label: &str) -> Result<f64> {
        let index = system
            .observables
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| Error::not_found(format!("observable {label}")))?;
        Ok(self.value_at(index))
    }

    /// The assignment as an explicit label -> value map.
    pub fn values(&self, system: &KsSystem) -> BTreeMap<String, f64> {
        system
            .observables
            .iter()
            .enumerate()
            .map(|(i, label)| (label.clone(), self.value_at(i)))
            .collect()
    }

    /// Number of contexts whose product constraint this assignment violates.
    pub fn violations(&self, system: &KsSystem) -> usize {
        system
            .contexts
            .iter()
            .filter(|context| {
                let product: f64 = context
                    .members
                    .iter()
                    .map(|m| self.value_at(system.index_of(m)))
                    .product();
                product != context.target
            })
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsSearchResult {
    pub num_assignments: u64,
    pub satisfying: Vec<Assignment>,
    pub min_violations: usize,
    /// An assignment achieving `min_violations`.
    pub witness: Assignment,
}

/// Exhaustive search over all 2^n value assignments; the system is
/// contradictory iff no assignment satisfies every context.
pub fn ks_global_search(system: &KsSystem) -> Result<KsSearchResult> {
    system.validate()?;
    let n = system.observables.len();
    if n > 24 {
        return Err(Error::TooLarge(format!(
            "{n} observables exceeds the brute-force cap of 24"
        )));
    }
    // Per context: member bitmask and whether the target is -1 (odd parity).
    let masks: Vec<(u32, bool)> = system
        .contexts
        .iter()
        .map(|context| {
            let mask = context
                .members
                .iter()
                .fold(0u32, |m, label| m | (1 << system.index_of(label)));
            (mask, context.target == -1.0)
        })
        .collect();

    let mut satisfying = Vec::new();
    let mut min_violations = usize::MAX;
    let mut witness_bits = 0u32;
    for bits in 0..(1u64 << n) as u32 {
        let violations = masks
            .iter()
            .filter(|(mask, odd)| (((bits & mask).count_ones() & 1) == 1) != *odd)
            .count();
        if violations < min_violations {
            min_violations = violations;
            witness_bits = bits;
        }
        if violations == 0 {
            satisfying.push(Assignment { bits, num_observables: n });
        }
    }
    Ok(KsSearchResult {
        num_assignments: 1u64 << n,
        satisfying,
        min_violations,
        witness: Assignment { bits: witness_bits, num_observables: n },
    })
}

/// Builds a micro-model over the system's observables in which no violating
/// value pattern is ever jointly detected: every minimum-violation class
/// blinds one member of each context it violates.
///
/// Guarantees, verified before returning: (a) in every context, every class
/// with nonzero joint detection satisfies the context's product constraint;
/// (b) every context retains strictly positive coincidence probability.
pub fn ks_evasion_model(system: &KsSystem, search: &KsSearchResult) -> Result<MicroModel> {
    system.validate()?;
    let n = system.observables.len();
    let mut registry = ObservableRegistry::new();
    for label in &system.observables {
        registry.insert(ExtendedObservable::elementary(
            label.clone(),
            ObservableBase::Abstract(vec![1.0, -1.0]),
            0.0,
        ))?;
    }

    if search.min_violations == 0 {
        // Satisfiable system: one always-detected class realizes every
        // context at once.
        let witness = search
            .satisfying
            .first()
            .copied()
            .unwrap_or(search.witness);
        let mut responses = BTreeMap::new();
        for (i, label) in system.observables.iter().enumerate() {
            responses.insert(
                label.clone(),
                Response { detect: 1.0, value: witness.value_at(i) },
            );
        }
        return MicroModel::new(
            registry,
            vec![MicroClass { weight: 1.0, responses }],
            None,
            ModelMode::Deterministic,
        );
    }

    // All minimum-violation assignments become classes.
    let min_violation_bits: Vec<u32> = (0..(1u64 << n) as u32)
        .filter(|&bits| {
            Assignment { bits, num_observables: n }.violations(system) == search.min_violations
        })
        .collect();
    if min_violation_bits.is_empty() {
        return Err(Error::internal("search reported a minimum no assignment achieves"));
    }

    // The blinded member of each violated context rotates with the class
    // rank; if some context ends up with zero coincidence probability, retry
    // with a shifted rotation before giving up.
    let max_members = system.contexts.iter().map(|c| c.members.len()).max().unwrap_or(1);
    'offsets: for offset in 0..max_members {
        let classes = build_evasion_classes(system, &min_violation_bits, offset)?;
        let model = MicroModel::new(registry.clone(), classes, None, ModelMode::Deterministic)?;
        // (b) every context must keep positive coincidence probability.
        for context in &system.contexts {
            let coincidence: f64 = model
                .classes()
                .iter()
                .map(|class| {
                    class.weight
                        * context
                            .members
                            .iter()
                            .map(|m| class.responses[m].detect)
                            .product::<f64>()
                })
                .sum();
            if coincidence <= 0.0 {
                continue 'offsets;
            }
        }
        // (a) any jointly detected class satisfies the context it is detected in.
        for context in &system.contexts {
            for class in model.classes() {
                let jointly_detected = context
                    .members
                    .iter()
                    .all(|m| class.responses[m].detect > 0.0);
                if jointly_detected {
                    let product: f64 =
                        context.members.iter().map(|m| class.responses[m].value).product();
                    if product != context.target {
                        return Err(Error::internal(
                            "evasion construction left a detectable violation",
                        ));
                    }
                }
            }
        }
        return Ok(model);
    }
    Err(Error::InfeasibleEvasion(
        "no blinding rotation gives every context positive coincidence probability".into(),
    ))
}

fn build_evasion_classes(
    system: &KsSystem,
    min_violation_bits: &[u32],
    offset: usize,
) -> Result<Vec<MicroClass>> {
    let n = system.observables.len();
    let weight = 1.0 / min_violation_bits.len() as f64;
    min_violation_bits
        .iter()
        .enumerate()
        .map(|(rank, &bits)| {
            let assignment = Assignment { bits, num_observables: n };
            let mut blinded: Vec<&str> = Vec::new();
            let mut violated_rank = 0usize;
            for context in &system.contexts {
                let product: f64 = context
                    .members
                    .iter()
                    .map(|m| assignment.value_at(system.index_of(m)))
                    .product();
                if product != context.target {
                    let pick = (rank + violated_rank + offset) % context.members.len();
                    blinded.push(&context.members[pick]);
                    violated_rank += 1;
                }
            }
            let mut responses = BTreeMap::new();
            for (i, label) in system.observables.iter().enumerate() {
                let detect = if blinded.contains(&label.as_str()) { 0.0 } else { 1.0 };
                responses.insert(
                    label.clone(),
                    Response { detect, value: assignment.value_at(i) },
                );
            }
            Ok(MicroClass { weight, responses })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContextStatus {
    /// Coincidences occurred and every single one satisfied the constraint.
    Verified,
    /// At least one coincident run violated the constraint.
    Violated,
    /// No coincident run occurred; nothing can be asserted.
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsContextReport {
    pub members: Vec<String>,
    pub target: f64,
    pub n: u64,
    pub coincidences: u64,
    pub violations: u64,
    pub coincidence_rate: f64,
    pub status: ContextStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsCheckReport {
    pub n_per_context: u64,
    pub seed: u64,
    pub contexts: Vec<KsContextReport>,
    pub total_violations: u64,
    pub all_verified: bool,
}

/// Simulates a joint measurement of every context on fresh ensembles and
/// checks, run by run, that coincident outcomes satisfy the product
/// constraint.
pub fn ks_context_check(
    model: &MicroModel,
    system: &KsSystem,
    n_per_context: u64,
    seed: u64,
) -> Result<KsCheckReport> {
    system.validate()?;
    if n_per_context == 0 {
        return Err(Error::invalid("n_per_context must be at least 1"));
    }
    let mut contexts = Vec::with_capacity(system.contexts.len());
    let mut total_violations = 0u64;
    for (ci, context) in system.contexts.iter().enumerate() {
        let ctx_seed = draw(seed, &[fnv1a(b"context"), ci as u64]);
        let first_id = ci as u64 * n_per_context;
        let objects = prepare_range(model, first_id, n_per_context, ctx_seed)?;
        let member_records = context
            .members
            .iter()
            .map(|m| measure_ensemble(&objects, m, model, ctx_seed))
            .collect::<Result<Vec<_>>>()?;
        let a0s = context
            .members
            .iter()
            .map(|m| model.observables().get(m).map(|o| o.a0))
            .collect::<Result<Vec<_>>>()?;

        let mut coincidences = 0u64;
        let mut violations = 0u64;
        for k in 0..objects.len() {
            let mut all_detected = true;
            let mut product = 1.0;
            for (records, a0) in member_records.iter().zip(&a0s) {
                let outcome = records[k].outcome;
                if outcome == *a0 {
                    all_detected = false;
                    break;
                }
                product *= outcome;
            }
            if all_detected {
                coincidences += 1;
                if product != context.target {
                    violations += 1;
                }
            }
        }
        total_violations += violations;
        contexts.push(KsContextReport {
            members: context.members.clone(),
            target: context.target,
            n: n_per_context,
            coincidences,
            violations,
            coincidence_rate: coincidences as f64 / n_per_context as f64,
            status: if coincidences == 0 {
                ContextStatus::Unverifiable
            } else if violations > 0 {
                ContextStatus::Violated
            } else {
                ContextStatus::Verified
            },
        });
    }
    let all_verified = contexts.iter().all(|c| c.status == ContextStatus::Verified);
    Ok(KsCheckReport {
        n_per_context,
        seed,
        contexts,
        total_violations,
        all_verified,
    })
}
