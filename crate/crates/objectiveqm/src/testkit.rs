//! Deterministic generators for randomized tests and demos.
//!
//! Everything here is driven by [`SeqRng`] so property tests and the
//! acceptance suite are reproducible run to run.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::model::{
    default_a0, Combiner, ExtendedObservable, MacroProperty, MicroClass, MicroModel, ModelMode,
    ObservableBase, ObservableRegistry, Response,
};
use crate::oracle::{
    make_pure, mix, spin_observable, tensor_product_observable, DensityState, OutcomeSet,
    SpectralObservable,
};
use crate::rng::SeqRng;

/// Uniform direction on the unit sphere.
pub fn random_direction(rng: &mut SeqRng) -> [f64; 3] {
    let z = rng.next_range(-1.0, 1.0);
    let phi = rng.next_range(0.0, std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Random density matrix: a mixture of up to three random pure states.
pub fn random_density(rng: &mut SeqRng, dim: usize) -> DensityState {
    let k = 1 + rng.next_index(3);
    let mut raw: Vec<f64> = (0..k).map(|_| rng.next_range(0.1, 1.0)).collect();
    let sum: f64 = raw.iter().sum();
    for w in &mut raw {
        *w /= sum;
    }
    let components: Vec<(f64, DensityState)> = raw
        .into_iter()
        .map(|w| {
            let amps: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0)))
                .collect();
            (w, make_pure(&amps).expect("random amplitudes are valid"))
        })
        .collect();
    mix(&components).expect("normalized mixture")
}

/// Random spectral observable of dim 2 (a spin) or dim 4 (a tensor pairing
/// of two spins with distinct combined eigenvalues).
pub fn random_observable(rng: &mut SeqRng, dim: usize, label: &str) -> SpectralObservable {
    match dim {
        2 => spin_observable(random_direction(rng), label).unwrap(),
        4 => {
            let a = spin_observable(random_direction(rng), "left").unwrap();
            let b = spin_observable(random_direction(rng), "right").unwrap();
            tensor_product_observable(&a, &b, |x, y| 2.0 * x + y, label).unwrap()
        }
        other => panic!("random_observable supports dims 2 and 4, not {other}"),
    }
}

/// Shape knobs for [`random_model`].
#[derive(Debug, Clone)]
pub struct ModelShape {
    pub max_classes: usize,
    pub max_observables: usize,
    pub with_composite: bool,
    /// Lower bound on stochastic detection probabilities; deterministic-mode
    /// models ignore it.
    pub min_detect: f64,
    /// Probability of generating a deterministic-mode model.
    pub deterministic_fraction: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_classes: 5,
            max_observables: 3,
            with_composite: true,
            min_detect: 0.0,
            deterministic_fraction: 0.3,
        }
    }
}

const OUTCOME_POOL: [f64; 7] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0];

/// Random oracle-free model: a handful of abstract finite-spectrum
/// observables (optionally one product composite) and weighted classes with
/// random responses.
pub fn random_model(rng: &mut SeqRng, shape: &ModelShape) -> MicroModel {
    let n_obs = 1 + rng.next_index(shape.max_observables);
    let mut registry = ObservableRegistry::new();
    let mut spectra: Vec<(String, Vec<f64>)> = Vec::new();
    for i in 0..n_obs {
        let size = 2 + rng.next_index(3);
        let mut pool = OUTCOME_POOL.to_vec();
        for k in (1..pool.len()).rev() {
            pool.swap(k, rng.next_index(k + 1));
        }
        let outcomes: Vec<f64> = pool.into_iter().take(size).collect();
        let label = format!("O{i}");
        registry
            .insert(ExtendedObservable::elementary(
                label.clone(),
                ObservableBase::Abstract(outcomes.clone()),
                default_a0(&outcomes),
            ))
            .unwrap();
        spectra.push((label, outcomes));
    }
    if shape.with_composite && n_obs >= 2 && rng.next_bool(0.5) {
        let combined: Vec<f64> = spectra[0]
            .1
            .iter()
            .flat_map(|a| spectra[1].1.iter().map(move |b| a * b))
            .collect();
        registry
            .insert(ExtendedObservable::composite(
                "C01",
                vec![spectra[0].0.clone(), spectra[1].0.clone()],
                Combiner::Product,
                default_a0(&combined),
            ))
            .unwrap();
    }

    let deterministic = rng.next_bool(shape.deterministic_fraction);
    let n_classes = 1 + rng.next_index(shape.max_classes);
    let mut weights: Vec<f64> = (0..n_classes).map(|_| rng.next_range(0.1, 1.0)).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    let classes = weights
        .into_iter()
        .map(|weight| {
            let mut responses = BTreeMap::new();
            for (label, outcomes) in &spectra {
                let detect = if deterministic {
                    if rng.next_bool(0.8) {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    rng.next_range(shape.min_detect, 1.0)
                };
                let value = outcomes[rng.next_index(outcomes.len())];
                responses.insert(label.clone(), Response { detect, value });
            }
            MicroClass { weight, responses }
        })
        .collect();

    MicroModel::new(
        registry,
        classes,
        None,
        if deterministic { ModelMode::Deterministic } else { ModelMode::StochasticDetection },
    )
    .expect("generated model is valid")
}

/// Random property over one of the model's observables: a random subset of
/// its spectrum, possibly with a0.
pub fn random_property(rng: &mut SeqRng, model: &MicroModel) -> MacroProperty {
    let labels: Vec<String> = model.observables().iter().map(|o| o.label.clone()).collect();
    let label = labels[rng.next_index(labels.len())].clone();
    let outcomes = model.observables().outcomes(&label).unwrap();
    let mut members = Vec::new();
    for v in &outcomes {
        if rng.next_bool(0.5) {
            members.push(*v);
        }
    }
    let contains_a0 = rng.next_bool(0.3);
    MacroProperty::new(label, OutcomeSet::new(members, contains_a0).unwrap())
}

/// Random bipartite model over the standard 2x2 setting labels A1, A2, B1,
/// B2, all dichotomic.
pub fn random_bipartite_model(rng: &mut SeqRng) -> MicroModel {
    let mut registry = ObservableRegistry::new();
    for label in ["A1", "A2", "B1", "B2"] {
        registry
            .insert(ExtendedObservable::elementary(
                label,
                ObservableBase::Abstract(vec![1.0, -1.0]),
                0.0,
            ))
            .unwrap();
    }
    let deterministic = rng.next_bool(0.5);
    let n_classes = 1 + rng.next_index(6);
    let mut weights: Vec<f64> = (0..n_classes).map(|_| rng.next_range(0.1, 1.0)).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    let classes = weights
        .into_iter()
        .map(|weight| {
            let mut responses = BTreeMap::new();
            for label in ["A1", "A2", "B1", "B2"] {
                let detect = if deterministic {
                    if rng.next_bool(0.8) {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    rng.next_f64()
                };
                let value = if rng.next_bool(0.5) { 1.0 } else { -1.0 };
                responses.insert(label.to_string(), Response { detect, value });
            }
            MicroClass { weight, responses }
        })
        .collect();
    MicroModel::new(
        registry,
        classes,
        None,
        if deterministic { ModelMode::Deterministic } else { ModelMode::StochasticDetection },
    )
    .expect("generated model is valid")
}
