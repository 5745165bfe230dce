use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::density::DensityMatrix;
use super::gate::GateSpec;
use super::layout::RegisterLayout;
use super::NORM_TOL;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Normalized amplitude vector over a [`RegisterLayout`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PureState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

/// Outcome of a projective measurement in a register's computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: usize,
    /// Born weight of `outcome` before the measurement.
    pub probability: f64,
    pub state: PureState,
}

impl PureState {
    /// Wraps `amplitudes`, requiring unit norm within `NORM_TOL`.
    pub fn new(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::LengthMismatch { expected: layout.total_dim(), actual: amplitudes.len() });
        }
        let n = norm_sqr(&amplitudes);
        if n.is_nan() || (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(layout: RegisterLayout, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::LengthMismatch { expected: layout.total_dim(), actual: amplitudes.len() });
        }
        let n = norm_sqr(&amplitudes);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized(n));
        }
        let scale = 1.0 / n.sqrt();
        amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(Self { layout, amplitudes })
    }

    /// Computational basis state. Every register must be assigned exactly once.
    pub fn basis(layout: RegisterLayout, values: &[(&str, usize)]) -> Result<Self> {
        let mut digits: Vec<Option<usize>> = vec![None; layout.len()];
        for &(name, value) in values {
            let p = layout.position(name)?;
            let dim = layout.dim(p);
            if value >= dim {
                return Err(Error::ValueOutOfRange { name: name.to_string(), value, dim });
            }
            if digits[p].replace(value).is_some() {
                return Err(Error::DuplicateSubsystem(name.to_string()));
            }
        }
        let digits = digits
            .into_iter()
            .zip(layout.names())
            .map(|(d, name)| d.ok_or_else(|| Error::Unassigned { name: name.to_string() }))
            .collect::<Result<Vec<_>>>()?;
        let index = layout.flat_index(&digits)?;
        Ok(Self::basis_index(layout, index))
    }

    /// All registers in level 0.
    pub fn zero(layout: RegisterLayout) -> Self {
        Self::basis_index(layout, 0)
    }

    pub(crate) fn basis_index(layout: RegisterLayout, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; layout.total_dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { layout, amplitudes }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Nonzero amplitudes labelled by register values, in index order.
    pub fn labeled_amplitudes(&self, cutoff: f64) -> Vec<(String, Complex64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > cutoff)
            .map(|(i, a)| (self.layout.basis_label(i), *a))
            .collect()
    }

    pub fn apply_gate(&self, gate: &GateSpec) -> Result<PureState> {
        let mut out = self.clone();
        out.apply_gate_in_place(gate)?;
        Ok(out)
    }

    /// Applies `gate ⊗ I` without materialising the full operator: for every
    /// joint value of the untouched registers, the `k` amplitudes addressed by
    /// the targets are gathered, multiplied by the `k×k` matrix, and scattered
    /// back.
    pub fn apply_gate_in_place(&mut self, gate: &GateSpec) -> Result<()> {
        let layout = &self.layout;
        let mut positions = Vec::with_capacity(gate.targets().len());
        for t in gate.targets() {
            positions.push(layout.position(t)?);
        }
        let k: usize = positions.iter().map(|&p| layout.dim(p)).product();
        if k != gate.dim() {
            return Err(Error::GateDimension {
                name: gate.name().to_string(),
                expected: k,
                actual: gate.dim(),
            });
        }
        let deviation = gate.unitarity_deviation();
        if deviation.is_nan() || deviation > super::UNITARY_TOL {
            return Err(Error::NonUnitary { name: gate.name().to_string(), deviation });
        }

        let offsets = layout.offsets(&positions);
        let rest = layout.complement(&positions);
        let rest_dims: Vec<usize> = rest.iter().map(|&p| layout.dim(p)).collect();
        let rest_strides: Vec<usize> = rest.iter().map(|&p| layout.stride(p)).collect();
        let n_blocks = layout.total_dim() / k;
        let m = gate.matrix();
        let amps = &mut self.amplitudes;

        let mut digits = vec![0usize; rest.len()];
        let mut base = 0usize;
        let mut buf = vec![ZERO; k];
        for _ in 0..n_blocks {
            if k == 2 {
                let (i0, i1) = (base + offsets[0], base + offsets[1]);
                let (a0, a1) = (amps[i0], amps[i1]);
                amps[i0] = m[0] * a0 + m[1] * a1;
                amps[i1] = m[2] * a0 + m[3] * a1;
            } else {
                for (b, &off) in buf.iter_mut().zip(&offsets) {
                    *b = amps[base + off];
                }
                for (row, &off) in m.chunks_exact(k).zip(&offsets) {
                    amps[base + off] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
                }
            }
            // odometer over the untouched registers, last register fastest
            for j in (0..rest.len()).rev() {
                digits[j] += 1;
                base += rest_strides[j];
                if digits[j] < rest_dims[j] {
                    break;
                }
                base -= rest_dims[j] * rest_strides[j];
                digits[j] = 0;
            }
        }
        Ok(())
    }

    /// Born probabilities for each level of `subsystem`.
    pub fn probabilities(&self, subsystem: &str) -> Result<Vec<f64>> {
        let p = self.layout.position(subsystem)?;
        let mut probs = vec![0.0; self.layout.dim(p)];
        for (i, a) in self.amplitudes.iter().enumerate() {
            probs[self.layout.digit(i, p)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Normalized projection onto `subsystem = outcome`, with its Born weight.
    /// `None` when the branch has zero weight.
    pub fn project(&self, subsystem: &str, outcome: usize) -> Result<Option<(f64, PureState)>> {
        let p = self.layout.position(subsystem)?;
        let dim = self.layout.dim(p);
        if outcome >= dim {
            return Err(Error::ValueOutOfRange { name: subsystem.to_string(), value: outcome, dim });
        }
        let mut amps = self.amplitudes.clone();
        for (i, a) in amps.iter_mut().enumerate() {
            if self.layout.digit(i, p) != outcome {
                *a = ZERO;
            }
        }
        let weight = norm_sqr(&amps);
        if weight == 0.0 {
            return Ok(None);
        }
        let scale = 1.0 / weight.sqrt();
        amps.iter_mut().for_each(|a| *a *= scale);
        Ok(Some((weight, PureState { layout: self.layout.clone(), amplitudes: amps })))
    }

    /// Projective measurement of `subsystem` in its computational basis.
    pub fn measure<R: Rng + ?Sized>(&self, subsystem: &str, rng: &mut R) -> Result<Measurement> {
        let probs = self.probabilities(subsystem)?;
        let outcome = sample_index(&probs, rng.random::<f64>())
            .ok_or_else(|| Error::ZeroProbabilityBranch(subsystem.to_string()))?;
        let (probability, state) = self
            .project(subsystem, outcome)?
            .ok_or_else(|| Error::ZeroProbabilityBranch(subsystem.to_string()))?;
        Ok(Measurement { outcome, probability, state })
    }

    /// Samples a flat computational-basis index with Born weights.
    pub fn sample_basis<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let total = self.norm_sqr();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            acc += w / total;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Reduced state on `keep`, in layout order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let kept = self.layout.positions_sorted(keep)?;
        let rest = self.layout.complement(&kept);
        let keep_off = self.layout.offsets(&kept);
        let rest_off = self.layout.offsets(&rest);
        let dk = keep_off.len();
        let mut rho = nalgebra::DMatrix::<Complex64>::zeros(dk, dk);
        for &r in &rest_off {
            for a in 0..dk {
                let x = self.amplitudes[keep_off[a] + r];
                if x == ZERO {
                    continue;
                }
                for b in 0..dk {
                    rho[(a, b)] += x * self.amplitudes[keep_off[b] + r].conj();
                }
            }
        }
        DensityMatrix::new(self.layout.subset(&kept), rho)
    }
}

/// First index whose cumulative weight exceeds `u`, skipping zero-weight
/// entries. Falls back to the last positive entry when round-off leaves `u`
/// above the total.
fn sample_index(probs: &[f64], u: f64) -> Option<usize> {
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p / total;
        last = Some(i);
        if u < acc {
            return last;
        }
    }
    last
}

pub(crate) fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}
