//! Finite-dimensional quantum calculator.
//!
//! Supplies the quantum probabilities that a micro-model must reproduce
//! conditionally on detection. States are density matrices built from pure
//! vectors and convex mixtures; observables are given by their spectral data
//! (eigenvalue plus projector per branch), never by raw Hermitian matrices,
//! so no eigensolver is needed at these dimensions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Absolute tolerance for construction-time checks (Hermiticity, trace,
/// idempotence, orthogonality, completeness).
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Trace-one Hermitian positive matrix. Positivity is guaranteed
/// constructively: the only ways to build one are [`make_pure`] and [`mix`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    dim: usize,
    rho: ComplexMatrix,
}

impl DensityState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    fn validate(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::invalid("density matrix has non-finite entries"));
        }
        if !rho.is_hermitian(CONSTRUCTION_TOL) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > CONSTRUCTION_TOL || tr.im.abs() > CONSTRUCTION_TOL {
            return Err(Error::invalid(format!(
                "density matrix trace {} + {}i is not 1",
                tr.re, tr.im
            )));
        }
        Ok(DensityState { dim: rho.dim(), rho })
    }
}

/// One spectral branch: an eigenvalue and its projector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBranch {
    pub eigenvalue: f64,
    pub projector: ComplexMatrix,
}

/// Observable specified by its spectral decomposition. Branch projectors are
/// validated to be Hermitian, idempotent, mutually orthogonal, and complete.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralObservable {
    label: String,
    dim: usize,
    branches: Vec<SpectralBranch>,
}

impl SpectralObservable {
    pub fn new(label: impl Into<String>, dim: usize, branches: Vec<SpectralBranch>) -> Result<Self> {
        let label = label.into();
        if branches.is_empty() {
            return Err(Error::invalid(format!("observable {label}: no branches")));
        }
        for (i, b) in branches.iter().enumerate() {
            if !b.eigenvalue.is_finite() {
                return Err(Error::invalid(format!(
                    "observable {label}: branch {i} eigenvalue not finite"
                )));
            }
            if b.projector.dim() != dim {
                return Err(Error::invalid(format!(
                    "observable {label}: branch {i} projector dim mismatch"
                )));
            }
            if !b.projector.is_hermitian(CONSTRUCTION_TOL) {
                return Err(Error::invalid(format!(
                    "observable {label}: branch {i} projector not Hermitian"
                )));
            }
            if !b.projector.is_idempotent(CONSTRUCTION_TOL) {
                return Err(Error::invalid(format!(
                    "observable {label}: branch {i} projector not idempotent"
                )));
            }
            for (j, other) in branches.iter().enumerate().take(i) {
                if b.eigenvalue == other.eigenvalue {
                    return Err(Error::invalid(format!(
                        "observable {label}: branches {j} and {i} share eigenvalue {}",
                        b.eigenvalue
                    )));
                }
                let prod = b.projector.matmul(&other.projector);
                if prod.max_abs_diff(&ComplexMatrix::zeros(dim)) > CONSTRUCTION_TOL {
                    return Err(Error::invalid(format!(
                        "observable {label}: branches {j} and {i} not orthogonal"
                    )));
                }
            }
        }
        let mut sum = ComplexMatrix::zeros(dim);
        for b in &branches {
            sum = sum.add(&b.projector);
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > CONSTRUCTION_TOL {
            return Err(Error::invalid(format!(
                "observable {label}: projectors do not sum to the identity"
            )));
        }
        Ok(SpectralObservable { label, dim, branches })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> &[SpectralBranch] {
        &self.branches
    }

    /// The spectrum as an ordered list of eigenvalues.
    pub fn spectrum(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.eigenvalue).collect()
    }

    /// True iff the spectrum is exactly {+1, -1}.
    pub fn is_dichotomic(&self) -> bool {
        let mut s = self.spectrum();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s == [-1.0, 1.0]
    }
}

/// Finite outcome set, standing in for a Borel set. Observables here have
/// finite spectra, so any Borel set is physically equivalent to the subset of
/// outcomes it contains; the no-registration outcome is carried as a flag.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSet {
    members: Vec<f64>,
    contains_a0: bool,
}

impl OutcomeSet {
    pub fn new(mut members: Vec<f64>, contains_a0: bool) -> Result<Self> {
        if members.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("outcome set has non-finite member"));
        }
        members.sort_by(|a, b| a.partial_cmp(b).unwrap());
        members.dedup();
        Ok(OutcomeSet { members, contains_a0 })
    }

    pub fn members(&self) -> &[f64] {
        &self.members
    }

    pub fn contains_a0(&self) -> bool {
        self.contains_a0
    }

    /// Membership of a registered (non-a0) outcome value. Outcome values are
    /// constructed reals, so exact comparison is intended.
    pub fn contains(&self, value: f64) -> bool {
        self.members.contains(&value)
    }

    pub fn is_subset_of(&self, spectrum: &[f64]) -> bool {
        self.members.iter().all(|&m| spectrum.contains(&m))
    }
}

/// Normalized pure-state density matrix from an amplitude vector.
pub fn make_pure(amplitudes: &[Complex64]) -> Result<DensityState> {
    if amplitudes.is_empty() {
        return Err(Error::invalid("empty amplitude vector"));
    }
    if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::invalid("amplitude vector has non-finite entries"));
    }
    let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if norm_sq <= 0.0 {
        return Err(Error::invalid("zero amplitude vector"));
    }
    let dim = amplitudes.len();
    let mut rho = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            rho.set(i, j, amplitudes[i] * amplitudes[j].conj() / norm_sq);
        }
    }
    DensityState::validate(rho)
}

/// Convex combination of density states. Weights must be nonnegative and sum
/// to 1 within construction tolerance.
pub fn mix(components: &[(f64, DensityState)]) -> Result<DensityState> {
    if components.is_empty() {
        return Err(Error::invalid("empty mixture"));
    }
    let dim = components[0].1.dim();
    let mut weight_sum = 0.0;
    for (w, state) in components {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::invalid(format!("mixture weight {w} is negative or not finite")));
        }
        if state.dim() != dim {
            return Err(Error::invalid("mixture components have mismatched dims"));
        }
        weight_sum += w;
    }
    if (weight_sum - 1.0).abs() > CONSTRUCTION_TOL {
        return Err(Error::invalid(format!(
            "mixture weights sum to {weight_sum}, expected 1"
        )));
    }
    let mut rho = ComplexMatrix::zeros(dim);
    for (w, state) in components {
        rho = rho.add(&state.matrix().scale(Complex64::new(*w, 0.0)));
    }
    DensityState::validate(rho)
}

/// Spin observable along a unit 3-vector: eigenvalues +1/-1 with projectors
/// (I +/- n.sigma)/2 built from the three standard Hermitian basis matrices.
pub fn spin_observable(direction: [f64; 3], label: impl Into<String>) -> Result<SpectralObservable> {
    let [nx, ny, nz] = direction;
    let norm = (nx * nx + ny * ny + nz * nz).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "spin direction has norm {norm}, expected 1 within 1e-9"
        )));
    }
    // n.sigma = [[nz, nx - i ny], [nx + i ny, -nz]]
    let n_sigma = ComplexMatrix::from_rows(
        2,
        vec![
            Complex64::new(nz, 0.0),
            Complex64::new(nx, -ny),
            Complex64::new(nx, ny),
            Complex64::new(-nz, 0.0),
        ],
    )?;
    let half = Complex64::new(0.5, 0.0);
    let ident = ComplexMatrix::identity(2);
    let plus = ident.add(&n_sigma).scale(half);
    let minus = ident.sub(&n_sigma).scale(half);
    SpectralObservable::new(
        label,
        2,
        vec![
            SpectralBranch { eigenvalue: 1.0, projector: plus },
            SpectralBranch { eigenvalue: -1.0, projector: minus },
        ],
    )
}

/// Tensor-product observable: branch projectors are Kronecker products and
/// branch eigenvalues come from `value_combiner(a, b)`. Branches whose
/// combined value coincides are merged by summing their projectors.
pub fn tensor_product_observable(
    a: &SpectralObservable,
    b: &SpectralObservable,
    value_combiner: impl Fn(f64, f64) -> f64,
    label: impl Into<String>,
) -> Result<SpectralObservable> {
    let dim = a.dim() * b.dim();
    let mut merged: Vec<SpectralBranch> = Vec::new();
    for ba in a.branches() {
        for bb in b.branches() {
            let value = value_combiner(ba.eigenvalue, bb.eigenvalue);
            let proj = ba.projector.kron(&bb.projector);
            match merged.iter_mut().find(|m| m.eigenvalue == value) {
                Some(existing) => existing.projector = existing.projector.add(&proj),
                None => merged.push(SpectralBranch { eigenvalue: value, projector: proj }),
            }
        }
    }
    SpectralObservable::new(label, dim, merged)
}

/// Quantum probability Tr(rho * sum of projectors over delta). The quantum
/// side has no no-registration outcome, so `delta` must not contain a0.
pub fn born_probability(
    rho: &DensityState,
    obs: &SpectralObservable,
    delta: &OutcomeSet,
) -> Result<f64> {
    if delta.contains_a0() {
        return Err(Error::domain(
            "no quantum counterpart for outcome sets containing a0",
        ));
    }
    if rho.dim() != obs.dim() {
        return Err(Error::invalid(format!(
            "state dim {} does not match observable dim {}",
            rho.dim(),
            obs.dim()
        )));
    }
    let mut p = 0.0;
    for branch in obs.branches() {
        if delta.contains(branch.eigenvalue) {
            p += rho.matrix().matmul(&branch.projector).trace().re;
        }
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Quantum correlation of two dichotomic observables measured on the two
/// tensor factors of `rho`: the expectation of the product observable.
pub fn correlation(
    rho: &DensityState,
    a: &SpectralObservable,
    b: &SpectralObservable,
) -> Result<f64> {
    if !a.is_dichotomic() || !b.is_dichotomic() {
        return Err(Error::domain("correlation requires dichotomic (+1/-1) observables"));
    }
    if rho.dim() != a.dim() * b.dim() {
        return Err(Error::invalid(format!(
            "state dim {} does not match product dim {}",
            rho.dim(),
            a.dim() * b.dim()
        )));
    }
    let product = tensor_product_observable(a, b, |x, y| x * y, "product")?;
    let mut e = 0.0;
    for branch in product.branches() {
        let delta = OutcomeSet::new(vec![branch.eigenvalue], false)?;
        e += branch.eigenvalue * born_probability(rho, &product, &delta)?;
    }
    Ok(e)
}

/// Two-qubit singlet state, the canonical correlation test state.
pub fn singlet_state() -> DensityState {
    make_pure(&[
        Complex64::ZERO,
        Complex64::ONE,
        -Complex64::ONE,
        Complex64::ZERO,
    ])
    .expect("singlet amplitudes are valid")
}
