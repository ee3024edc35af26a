//! Objective local hidden-property measurement model.
//!
//! An objective state is a weighted mixture of micro-classes, each carrying a
//! per-observable detection probability and a deterministic outcome. The
//! measured statistics factor into detection and detection-conditional parts;
//! the conditional part is matched to quantum (Born-rule) probabilities while
//! the unconditional statistics stay local and noncontextual. The pieces:
//!
//! - [`oracle`]: dense finite-dimensional quantum calculator (the target side);
//! - [`model`]: the micro-class ontology with exact analytic breakdowns;
//! - [`ensemble`]: seeded, reproducible Monte Carlo realization and tallies;
//! - [`synthesis`]: constructions of models matching quantum targets,
//!   including a linear-feasibility solver ([`simplex`]);
//! - [`nogo`]: block-wise CHSH and Kochen-Specker demonstrations;
//! - [`io`]: CLI configuration, model files, reports, and run manifests.
//!
//! ```
//! use objectiveqm::presets;
//! use objectiveqm::synthesis::{synthesize_chsh, ChshSynthesis};
//!
//! // Singlet optimal-angle targets are infeasible at full efficiency (Bell's
//! // theorem) but feasible at eta = 0.5, where the detected blocks show the
//! // full quantum correlations.
//! let preset = presets::chsh_optimal();
//! assert!(!synthesize_chsh(&preset.target(1.0)?)?.is_feasible());
//! match synthesize_chsh(&preset.target(0.5)?)? {
//!     ChshSynthesis::Feasible(model) => {
//!         let e = model.conditional_correlation("A1", "B1")?.unwrap();
//!         assert!((e + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
//!     }
//!     ChshSynthesis::Infeasible { .. } => unreachable!(),
//! }
//! # Ok::<(), objectiveqm::Error>(())
//! ```

pub mod ensemble;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod nogo;
pub mod oracle;
pub mod presets;
pub mod rng;
pub mod simplex;
pub mod synthesis;
pub mod testkit;

pub use error::{Error, Result};
