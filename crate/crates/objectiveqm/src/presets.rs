//! Bundled desk-scale instances used by the CLI and the acceptance tests.

use crate::nogo::{KsContext, KsSystem};
use crate::oracle::{correlation, singlet_state, spin_observable};
use crate::synthesis::ChshTarget;

/// The CHSH settings achieving the quantum maximum on the singlet: in-plane
/// angles {pi/2, 0} on side A and {pi/4, 3pi/4} on side B, ordered so the
/// standard combination E11 + E12 + E21 - E22 reaches magnitude 2*sqrt(2).
#[derive(Debug, Clone, PartialEq)]
pub struct ChshPreset {
    pub a_directions: [[f64; 3]; 2],
    pub b_directions: [[f64; 3]; 2],
    /// Singlet correlations at these settings, computed from the oracle.
    pub correlations: [[f64; 2]; 2],
}

impl ChshPreset {
    pub fn target(&self, eta: f64) -> crate::error::Result<ChshTarget> {
        ChshTarget::new(self.correlations, eta)
    }
}

fn in_plane(theta: f64) -> [f64; 3] {
    [theta.sin(), 0.0, theta.cos()]
}

/// Singlet optimal-angle preset ("chsh-optimal").
pub fn chsh_optimal() -> ChshPreset {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let a_directions = [in_plane(FRAC_PI_2), in_plane(0.0)];
    let b_directions = [in_plane(FRAC_PI_4), in_plane(3.0 * FRAC_PI_4)];
    let singlet = singlet_state();
    let mut correlations = [[0.0; 2]; 2];
    for (x, da) in a_directions.iter().enumerate() {
        for (y, db) in b_directions.iter().enumerate() {
            let a = spin_observable(*da, "a").expect("unit direction");
            let b = spin_observable(*db, "b").expect("unit direction");
            correlations[x][y] = correlation(&singlet, &a, &b).expect("valid correlation");
        }
    }
    ChshPreset { a_directions, b_directions, correlations }
}

/// The 3x3 square of two-qubit observables ("peres-mermin"): rows multiply
/// to +1, the first two columns to +1, and the third column to -1, so no
/// global +/-1 assignment satisfies all six contexts.
pub fn peres_mermin() -> KsSystem {
    let observables: Vec<String> = (1..=3)
        .flat_map(|r| (1..=3).map(move |c| format!("M{r}{c}")))
        .collect();
    let mut contexts = Vec::with_capacity(6);
    for r in 1..=3 {
        contexts.push(KsContext {
            members: (1..=3).map(|c| format!("M{r}{c}")).collect(),
            target: 1.0,
        });
    }
    for c in 1..=3 {
        contexts.push(KsContext {
            members: (1..=3).map(|r| format!("M{r}{c}")).collect(),
            target: if c == 3 { -1.0 } else { 1.0 },
        });
    }
    KsSystem { observables, contexts }
}
