//! Model file format: a versioned JSON document carrying the observable
//! registry (with full spectral data where available), the weighted classes,
//! the mode flag, and an optional target-state specification. Parsing always
//! revalidates, so any document that loads is a valid model.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::StateSpec;
use crate::io::FORMAT_VERSION;
use crate::linalg::ComplexMatrix;
use crate::model::{
    Combiner, ExtendedObservable, MicroClass, MicroModel, ModelMode, ObservableBase,
    ObservableRegistry, ObservableSpec, Response,
};
use crate::oracle::{SpectralBranch, SpectralObservable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFileDoc {
    pub format_version: u32,
    /// "deterministic" or "stochastic-detection".
    pub mode: String,
    pub observables: Vec<ObservableDoc>,
    pub classes: Vec<ClassDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<StateSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableDoc {
    Elementary {
        label: String,
        a0: f64,
        outcomes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectral: Option<SpectralDoc>,
    },
    Composite {
        label: String,
        a0: f64,
        members: Vec<String>,
        combiner: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDoc {
    pub dim: usize,
    pub branches: Vec<BranchDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub eigenvalue: f64,
    /// Row-major complex entries as [re, im] pairs.
    pub projector: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDoc {
    pub weight: f64,
    pub responses: BTreeMap<String, ResponseDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseDoc {
    pub detect: f64,
    pub value: f64,
}

fn spectral_to_doc(obs: &SpectralObservable) -> SpectralDoc {
    SpectralDoc {
        dim: obs.dim(),
        branches: obs
            .branches()
            .iter()
            .map(|b| BranchDoc {
                eigenvalue: b.eigenvalue,
                projector: (0..obs.dim())
                    .map(|r| {
                        (0..obs.dim())
                            .map(|c| {
                                let z = b.projector.get(r, c);
                                [z.re, z.im]
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn spectral_from_doc(label: &str, doc: &SpectralDoc) -> Result<SpectralObservable> {
    let branches = doc
        .branches
        .iter()
        .map(|b| {
            let mut entries = Vec::with_capacity(doc.dim * doc.dim);
            if b.projector.len() != doc.dim {
                return Err(Error::invalid(format!(
                    "observable {label}: projector has {} rows, expected {}",
                    b.projector.len(),
                    doc.dim
                )));
            }
            for row in &b.projector {
                if row.len() != doc.dim {
                    return Err(Error::invalid(format!(
                        "observable {label}: ragged projector row"
                    )));
                }
                for &[re, im] in row {
                    entries.push(Complex64::new(re, im));
                }
            }
            Ok(SpectralBranch {
                eigenvalue: b.eigenvalue,
                projector: ComplexMatrix::from_rows(doc.dim, entries)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralObservable::new(label, doc.dim, branches)
}

impl ModelFileDoc {
    /// Serializes a model. The quantum target, when present, must be supplied
    /// as the state specification it was built from (a density matrix does
    /// not decompose uniquely back into one).
    pub fn from_parts(model: &MicroModel, target: Option<StateSpec>) -> Result<Self> {
        if let Some(spec) = &target {
            let declared = spec.resolve()?;
            match model.target() {
                Some(actual) if actual == &declared => {}
                _ => {
                    return Err(Error::invalid(
                        "target specification does not reproduce the model's target state",
                    ))
                }
            }
        } else if model.target().is_some() {
            return Err(Error::invalid(
                "model has a target state but no specification was given for it",
            ));
        }
        let observables = model
            .observables()
            .iter()
            .map(|obs| match &obs.spec {
                ObservableSpec::Elementary(base) => ObservableDoc::Elementary {
                    label: obs.label.clone(),
                    a0: obs.a0,
                    outcomes: base.outcomes(),
                    spectral: match base {
                        ObservableBase::Spectral(s) => Some(spectral_to_doc(s)),
                        ObservableBase::Abstract(_) => None,
                    },
                },
                ObservableSpec::Composite { members, combiner } => ObservableDoc::Composite {
                    label: obs.label.clone(),
                    a0: obs.a0,
                    members: members.clone(),
                    combiner: combiner.name().to_string(),
                },
            })
            .collect();
        let classes = model
            .classes()
            .iter()
            .map(|class| ClassDoc {
                weight: class.weight,
                responses: class
                    .responses
                    .iter()
                    .map(|(label, r)| {
                        (label.clone(), ResponseDoc { detect: r.detect, value: r.value })
                    })
                    .collect(),
            })
            .collect();
        Ok(ModelFileDoc {
            format_version: FORMAT_VERSION,
            mode: model.mode().name().to_string(),
            observables,
            classes,
            target,
        })
    }

    /// Parses and validates into a model.
    pub fn to_model(&self) -> Result<MicroModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format_version {}",
                self.format_version
            )));
        }
        let mode = match self.mode.as_str() {
            "deterministic" => ModelMode::Deterministic,
            "stochastic-detection" => ModelMode::StochasticDetection,
            other => return Err(Error::invalid(format!("unknown mode {other}"))),
        };
        let mut registry = ObservableRegistry::new();
        // Composites may reference elementaries listed after them; insert
        // elementaries first, preserving relative order.
        for doc in self.observables.iter().filter(|d| matches!(d, ObservableDoc::Elementary { .. }))
        {
            if let ObservableDoc::Elementary { label, a0, outcomes, spectral } = doc {
                let base = match spectral {
                    Some(sdoc) => {
                        let obs = spectral_from_doc(label, sdoc)?;
                        if &obs.spectrum() != outcomes {
                            return Err(Error::invalid(format!(
                                "observable {label}: outcomes disagree with spectral data"
                            )));
                        }
                        ObservableBase::Spectral(obs)
                    }
                    None => ObservableBase::Abstract(outcomes.clone()),
                };
                registry.insert(ExtendedObservable::elementary(label.clone(), base, *a0))?;
            }
        }
        for doc in self.observables.iter().filter(|d| matches!(d, ObservableDoc::Composite { .. }))
        {
            if let ObservableDoc::Composite { label, a0, members, combiner } = doc {
                let combiner = match combiner.as_str() {
                    "product" => Combiner::Product,
                    other => return Err(Error::invalid(format!("unknown combiner {other}"))),
                };
                registry.insert(ExtendedObservable::composite(
                    label.clone(),
                    members.clone(),
                    combiner,
                    *a0,
                ))?;
            }
        }
        let classes = self
            .classes
            .iter()
            .map(|doc| MicroClass {
                weight: doc.weight,
                responses: doc
                    .responses
                    .iter()
                    .map(|(label, r)| {
                        (label.clone(), Response { detect: r.detect, value: r.value })
                    })
                    .collect(),
            })
            .collect();
        let target = self.target.as_ref().map(StateSpec::resolve).transpose()?;
        MicroModel::new(registry, classes, target, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::json_fmt::to_json_bytes;
    use crate::oracle::{make_pure, spin_observable};
    use crate::synthesis::{synthesize_chsh, synthesize_product, ChshSynthesis, ChshTarget};
    use num_complex::Complex64;

    #[test]
    fn synthesized_chsh_model_round_trips_bit_exactly() {
        let target = ChshTarget::new([[0.5, 0.5], [0.5, -0.5]], 0.7).unwrap();
        let model = match synthesize_chsh(&target).unwrap() {
            ChshSynthesis::Feasible(m) => *m,
            other => panic!("expected feasible, got {other:?}"),
        };
        let doc = ModelFileDoc::from_parts(&model, None).unwrap();
        let bytes = to_json_bytes(&doc).unwrap();
        let parsed: ModelFileDoc = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(parsed, doc);
        let model2 = parsed.to_model().unwrap();
        assert_eq!(model2, model);
        // Serialize -> parse -> serialize is byte-identical.
        let doc2 = ModelFileDoc::from_parts(&model2, None).unwrap();
        assert_eq!(to_json_bytes(&doc2).unwrap(), bytes);
    }

    #[test]
    fn spectral_observables_and_targets_survive_round_trip() {
        let spec = StateSpec::Pure { amplitudes: vec![[0.6, 0.0], [0.0, 0.8]] };
        let rho = spec.resolve().unwrap();
        let z = spin_observable([0.0, 0.0, 1.0], "Z").unwrap();
        let x = spin_observable([1.0, 0.0, 0.0], "X").unwrap();
        let model = synthesize_product(&rho, &[z, x], 0.9).unwrap();
        let doc = ModelFileDoc::from_parts(&model, Some(spec)).unwrap();
        let bytes = to_json_bytes(&doc).unwrap();
        let parsed: ModelFileDoc = serde_json::from_slice(&bytes).unwrap();
        let model2 = parsed.to_model().unwrap();
        assert_eq!(model2, model);
    }

    #[test]
    fn mismatched_target_spec_is_rejected() {
        let rho = make_pure(&[Complex64::ONE, Complex64::ZERO]).unwrap();
        let z = spin_observable([0.0, 0.0, 1.0], "Z").unwrap();
        let model = synthesize_product(&rho, &[z], 1.0).unwrap();
        let wrong = StateSpec::Pure { amplitudes: vec![[0.0, 0.0], [1.0, 0.0]] };
        assert!(ModelFileDoc::from_parts(&model, Some(wrong)).is_err());
        assert!(ModelFileDoc::from_parts(&model, None).is_err());
    }

    proptest::proptest! {
        /// serialize -> parse -> rebuild is the identity on random models,
        /// byte for byte.
        #[test]
        fn random_models_round_trip(seed in proptest::prelude::any::<u64>()) {
            let mut rng = crate::rng::SeqRng::new(seed);
            let model = crate::testkit::random_model(
                &mut rng,
                &crate::testkit::ModelShape::default(),
            );
            let doc = ModelFileDoc::from_parts(&model, None).unwrap();
            let bytes = to_json_bytes(&doc).unwrap();
            let parsed: ModelFileDoc = serde_json::from_slice(&bytes).unwrap();
            let reopened = parsed.to_model().unwrap();
            proptest::prop_assert_eq!(&reopened, &model);
            let bytes_again = to_json_bytes(&ModelFileDoc::from_parts(&reopened, None).unwrap())
                .unwrap();
            proptest::prop_assert_eq!(bytes_again, bytes);
        }
    }

    #[test]
    fn invalid_documents_are_rejected_on_parse() {
        let target = ChshTarget::new([[0.0; 2]; 2], 1.0).unwrap();
        let model = match synthesize_chsh(&target).unwrap() {
            ChshSynthesis::Feasible(m) => *m,
            other => panic!("expected feasible, got {other:?}"),
        };
        let mut doc = ModelFileDoc::from_parts(&model, None).unwrap();
        doc.classes[0].weight += 0.5;
        assert!(doc.to_model().is_err());

        let mut bad_mode = ModelFileDoc::from_parts(&model, None).unwrap();
        bad_mode.mode = "sometimes".into();
        assert!(bad_mode.to_model().is_err());
    }
}
