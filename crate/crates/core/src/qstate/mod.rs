//! Dense state-vector and density-matrix kernel.
//!
//! Amplitudes are indexed row-major over the layout's declared register
//! order, so the first register is the most significant digit. For the
//! five-register laboratory `[atom, poison, cat, bob, paper]`, the basis state
//! `|atom=1, poison=0, cat=0, bob=0, paper=1⟩` sits at index `0b10001 = 17`.
//!
//! Rotations use `R_y(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.

mod density;
mod gate;
mod layout;
mod state;

pub use density::DensityMatrix;
pub use gate::GateSpec;
pub use layout::{Register, RegisterLayout};
pub use state::{Measurement, PureState};

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on squared norms, traces and fidelities.
pub const NORM_TOL: f64 = 1e-10;
/// Frobenius tolerance on `U U† − I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on entropies (eigensolver noise).
pub const ENTROPY_TOL: f64 = 1e-9;
/// Eigenvalues at or below this are treated as zero in entropy logs.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Anything that can be reduced onto a subset of its registers.
pub trait Reducible {
    fn layout(&self) -> &RegisterLayout;
    fn reduce(&self, keep: &[&str]) -> Result<DensityMatrix>;
}

impl Reducible for PureState {
    fn layout(&self) -> &RegisterLayout {
        PureState::layout(self)
    }

    fn reduce(&self, keep: &[&str]) -> Result<DensityMatrix> {
        self.partial_trace(keep)
    }
}

impl Reducible for DensityMatrix {
    fn layout(&self) -> &RegisterLayout {
        DensityMatrix::layout(self)
    }

    fn reduce(&self, keep: &[&str]) -> Result<DensityMatrix> {
        self.partial_trace(keep)
    }
}

pub fn make_basis_state(layout: RegisterLayout, values: &[(&str, usize)]) -> Result<PureState> {
    PureState::basis(layout, values)
}

pub fn apply_gate(state: &PureState, gate: &GateSpec) -> Result<PureState> {
    state.apply_gate(gate)
}

pub fn partial_trace<S: Reducible + ?Sized>(state: &S, keep: &[&str]) -> Result<DensityMatrix> {
    state.reduce(keep)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    rho.von_neumann_entropy()
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    let (da, db) = (a.layout().total_dim(), b.layout().total_dim());
    if da != db {
        return Err(Error::DimensionMismatch(da, db));
    }
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.trace_distance(b)
}

pub fn measure<R: Rng + ?Sized>(state: &PureState, subsystem: &str, rng: &mut R) -> Result<Measurement> {
    state.measure(subsystem, rng)
}

/// `⟨state| target⟩⟨target |state⟩`: the expectation of the projector onto
/// `target`. Estimating it does not disturb `state` beyond the usual
/// two-outcome projective statistics.
pub fn expectation_projector(state: &PureState, target: &PureState) -> Result<f64> {
    fidelity(target, state)
}
