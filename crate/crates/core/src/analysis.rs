//! Branch structure, mixedness and local inaccessibility of protocol states.
//!
//! "Superposition" versus "mixture" is read off in the pointer (computational)
//! basis: a register is in a genuine local superposition when its reduced
//! state has off-diagonal weight, and merely mixed when the coherence lives
//! only in the global state.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::protocol::{build_wigner_script, run_script, BOB, BOB_OBSERVES};
use crate::qstate::{DensityMatrix, PureState, Reducible};

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: usize,
    pub weight: f64,
    pub state: PureState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchDecomposition {
    pub pointer: String,
    /// Nonzero-weight branches in outcome order.
    pub branches: Vec<Branch>,
}

impl BranchDecomposition {
    /// `Σ w |branch⟩⟨branch|`.
    pub fn mixture(&self) -> Result<DensityMatrix> {
        let parts: Vec<(f64, &PureState)> = self.branches.iter().map(|b| (b.weight, &b.state)).collect();
        DensityMatrix::mixture(&parts)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.weight).collect()
    }
}

/// Splits `state` into its normalized projections onto each level of
/// `pointer`, with Born weights. Zero-weight branches are dropped.
pub fn branch_decomposition(state: &PureState, pointer: &str) -> Result<BranchDecomposition> {
    let dim = state.layout().dim_of(pointer)?;
    let mut branches = Vec::new();
    for outcome in 0..dim {
        if let Some((weight, s)) = state.project(pointer, outcome)? {
            branches.push(Branch { outcome, weight, state: s });
        }
    }
    Ok(BranchDecomposition { pointer: pointer.to_string(), branches })
}

/// `|ψ⟩⟨ψ|` with every coherence between different levels of `pointer` removed.
pub fn dephase(state: &PureState, pointer: &str) -> Result<DensityMatrix> {
    let layout = state.layout();
    let p = layout.position(pointer)?;
    let a = state.amplitudes();
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |r, c| {
        if layout.digit(r, p) == layout.digit(c, p) {
            a[r] * a[c].conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityMatrix::new(layout.clone(), m)
}

/// Trace distance between the reduced states of `a` and `b` on `subsystem`.
/// Zero means no experiment confined to that subsystem can tell them apart.
pub fn local_indistinguishability<A, B>(a: &A, b: &B, subsystem: &str) -> Result<f64>
where
    A: Reducible + ?Sized,
    B: Reducible + ?Sized,
{
    if a.layout() != b.layout() {
        return Err(Error::LayoutMismatch);
    }
    let ra = a.reduce(&[subsystem])?;
    let rb = b.reduce(&[subsystem])?;
    ra.trace_distance(&rb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceWitness {
    /// Frobenius norm of the global `|ψ⟩⟨ψ|` block coupling the two heaviest
    /// pointer branches.
    pub global: f64,
    /// Magnitude of the corresponding off-diagonal entry of the pointer's
    /// reduced state.
    pub reduced: f64,
}

impl CoherenceWitness {
    /// Coherent globally but not locally: entangled, locally mixed.
    pub fn certifies_entanglement(&self, tol: f64) -> bool {
        self.global > tol && self.reduced <= tol
    }
}

/// Zero for both values when `state` has fewer than two branches.
pub fn coherence_witness(state: &PureState, pointer: &str) -> Result<CoherenceWitness> {
    let decomposition = branch_decomposition(state, pointer)?;
    if decomposition.branches.len() < 2 {
        return Ok(CoherenceWitness { global: 0.0, reduced: 0.0 });
    }
    let mut ranked: Vec<&Branch> = decomposition.branches.iter().collect();
    ranked.sort_by(|x, y| y.weight.total_cmp(&x.weight).then(x.outcome.cmp(&y.outcome)));
    let (o0, o1) = (ranked[0].outcome, ranked[1].outcome);

    let layout = state.layout();
    let p = layout.position(pointer)?;
    let a = state.amplitudes();
    let rows: Vec<Complex64> = (0..a.len()).filter(|&i| layout.digit(i, p) == o0).map(|i| a[i]).collect();
    let cols: Vec<Complex64> = (0..a.len()).filter(|&i| layout.digit(i, p) == o1).map(|i| a[i]).collect();
    let mut block = 0.0;
    for r in &rows {
        for c in &cols {
            block += (r * c.conj()).norm_sqr();
        }
    }

    let rho = state.partial_trace(&[pointer])?;
    Ok(CoherenceWitness { global: block.sqrt(), reduced: rho.matrix()[(o0, o1)].norm() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    /// Entropy of Bob's memory after the cascade.
    pub entropy_bob_bits: f64,
    /// Smallest purity of the paper's reduced state over the whole run.
    pub purity_paper: f64,
    pub fidelity_final: f64,
}

/// One unitary run of the definite-query script per angle.
pub fn entropy_sweep(theta_grid: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    theta_grid
        .iter()
        .map(|&theta| {
            let script = build_wigner_script(theta)?;
            let trace = run_script(&script, &DynamicsModel::UnitaryOnly, &mut rng)?;
            let entropy_bob_bits = trace
                .record(BOB_OBSERVES)
                .map(|r| r.entropy_bits[BOB])
                .ok_or_else(|| Error::UnknownStep(BOB_OBSERVES.into()))?;
            let purity_paper = trace
                .steps
                .iter()
                .filter_map(|r| r.record_purity)
                .fold(f64::INFINITY, f64::min);
            Ok(SweepRow { theta, entropy_bob_bits, purity_paper, fidelity_final: trace.return_fidelity })
        })
        .collect()
}

/// `steps` evenly spaced angles from `min` to `max` inclusive.
pub fn theta_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("steps must be at least 2, got {steps}")));
    }
    if !(min > 0.0 && min < max && max < std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!("need 0 < theta_min < theta_max < pi, got [{min}, {max}]")));
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i == steps - 1 { max } else { min + h * i as f64 }).collect())
}

/// CSV with header `theta,entropy_bob_bits,purity_paper,fidelity_final`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["theta", "entropy_bob_bits", "purity_paper", "fidelity_final"])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{laboratory_layout, ATOM, CAT, PAPER, POISON};
    use crate::qstate::RegisterLayout;
    use std::f64::consts::PI;

    /// `cos|00000⟩ + sin|11110⟩`, placed by hand.
    fn cascade_state(theta: f64) -> PureState {
        let (s, c) = (theta / 2.0).sin_cos();
        let mut a = vec![Complex64::new(0.0, 0.0); 32];
        a[0b00000] = Complex64::new(c, 0.0);
        a[0b11110] = Complex64::new(s, 0.0);
        PureState::new(laboratory_layout(), a).unwrap()
    }

    #[test]
    fn branches_of_cascade_state() {
        let d = branch_decomposition(&cascade_state(PI / 2.0), BOB).unwrap();
        assert_eq!(d.branches.len(), 2);
        for b in &d.branches {
            assert!((b.weight - 0.5).abs() < 1e-12);
        }
        let alive = PureState::basis(laboratory_layout(), &[(ATOM, 0), (POISON, 0), (CAT, 0), (BOB, 0), (PAPER, 0)]).unwrap();
        assert!((d.branches[0].state.inner(&alive).unwrap().norm() - 1.0).abs() < 1e-12);

        let w = branch_decomposition(&cascade_state(PI / 3.0), BOB).unwrap().weights();
        assert!((w[0] - 0.75).abs() < 1e-12 && (w[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_one_branch() {
        let s = PureState::zero(laboratory_layout());
        let d = branch_decomposition(&s, BOB).unwrap();
        assert_eq!(d.branches.len(), 1);
        assert_eq!(d.branches[0].weight, 1.0);
        assert!(branch_decomposition(&s, "dog").is_err());
    }

    #[test]
    fn mixture_matches_dephasing() {
        for theta in [0.4, PI / 3.0, PI / 2.0, 2.9] {
            let s = cascade_state(theta);
            let mix = branch_decomposition(&s, BOB).unwrap().mixture().unwrap();
            let deph = dephase(&s, BOB).unwrap();
            let diff = (mix.matrix() - deph.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10);
        }
    }

    #[test]
    fn indistinguishability_examples() {
        let s = cascade_state(PI / 2.0);
        let deph = dephase(&s, BOB).unwrap();
        assert!(local_indistinguishability(&s, &deph, BOB).unwrap() < 1e-10);
        assert!(local_indistinguishability(&s, &s, BOB).unwrap() < 1e-12);
        let alive = PureState::zero(laboratory_layout());
        assert!((local_indistinguishability(&s, &alive, BOB).unwrap() - 0.5).abs() < 1e-10);
        let other = PureState::zero(RegisterLayout::qubits(&["q"]).unwrap());
        assert!(matches!(local_indistinguishability(&s, &other, BOB), Err(Error::LayoutMismatch)));
    }

    #[test]
    fn witness_examples() {
        let w = coherence_witness(&cascade_state(PI / 2.0), BOB).unwrap();
        assert!((w.global - 0.5).abs() < 1e-12);
        assert!(w.reduced < 1e-12);
        assert!(w.certifies_entanglement(1e-10));

        let l = RegisterLayout::qubits(&["a", "b"]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(l.clone(), vec![Complex64::new(h, 0.0), Complex64::new(0.0, 0.0), Complex64::new(h, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let w = coherence_witness(&plus, "a").unwrap();
        assert!((w.global - 0.5).abs() < 1e-12);
        assert!((w.reduced - 0.5).abs() < 1e-12);
        assert!(!w.certifies_entanglement(1e-10));

        let w = coherence_witness(&PureState::zero(l), "a").unwrap();
        assert_eq!((w.global, w.reduced), (0.0, 0.0));
    }

    #[test]
    fn grid_endpoints() {
        let g = theta_grid(0.1, 1.0, 2).unwrap();
        assert_eq!(g, vec![0.1, 1.0]);
        assert!(theta_grid(0.1, 1.0, 1).is_err());
        assert!(theta_grid(1.0, 0.1, 3).is_err());
        assert!(theta_grid(0.0, 1.0, 3).is_err());
        assert!(theta_grid(0.1, PI, 3).is_err());
    }

    #[test]
    fn sweep_rejects_bad_theta() {
        assert!(entropy_sweep(&[PI / 2.0, 0.0]).is_err());
    }

    #[test]
    fn sweep_half_pi_row() {
        let rows = entropy_sweep(&[PI / 2.0, 1e-3]).unwrap();
        assert!((rows[0].entropy_bob_bits - 1.0).abs() < 1e-9);
        assert!((rows[0].purity_paper - 1.0).abs() < 1e-10);
        assert!((rows[0].fidelity_final - 1.0).abs() < 1e-10);
        assert!(rows[1].entropy_bob_bits < 1e-5);
    }

    #[test]
    fn csv_header() {
        let rows = entropy_sweep(&[PI / 4.0]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "theta,entropy_bob_bits,purity_paper,fidelity_final");
        assert_eq!(text.lines().count(), 2);
    }
}
