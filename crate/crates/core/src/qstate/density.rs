use nalgebra::DMatrix;
use num_complex::Complex64;

use super::layout::RegisterLayout;
use super::state::PureState;
use super::{EIGEN_CLAMP, NORM_TOL};
use crate::error::{Error, Result};

/// Hermitian, positive-semidefinite, unit-trace operator over a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: RegisterLayout,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates shape, hermiticity, trace and positivity (all within 1e-10).
    pub fn new(layout: RegisterLayout, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}x{}, layout requires {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for r in 0..n {
            for c in r..n {
                if (matrix[(r, c)] - matrix[(c, r)].conj()).norm() > NORM_TOL {
                    return Err(Error::InvalidDensity(format!("not Hermitian at ({r},{c})")));
                }
            }
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let rho = Self { layout, matrix };
        let min = rho.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -NORM_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(rho)
    }

    pub fn from_pure(state: &PureState) -> Self {
        let a = state.amplitudes();
        let n = a.len();
        let matrix = DMatrix::from_fn(n, n, |r, c| a[r] * a[c].conj());
        Self { layout: state.layout().clone(), matrix }
    }

    /// `Σ w_i |ψ_i⟩⟨ψ_i|`. Weights must be non-negative and sum to one.
    pub fn mixture(components: &[(f64, &PureState)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let layout = first.layout().clone();
        let n = layout.total_dim();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for &(w, s) in components {
            if s.layout() != &layout {
                return Err(Error::LayoutMismatch);
            }
            if w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative weight {w}")));
            }
            let a = s.amplitudes();
            for r in 0..n {
                if a[r].norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    m[(r, c)] += a[r] * a[c].conj() * w;
                }
            }
        }
        Self::new(layout, m)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Von Neumann entropy in bits. Eigenvalues below 1e-12 count as zero.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        let ev = self.eigenvalues();
        if let Some(&min) = ev.first() {
            if min < -NORM_TOL {
                return Err(Error::NotPositive(min));
            }
        }
        Ok(ev
            .into_iter()
            .filter(|&l| l > EIGEN_CLAMP)
            .map(|l| -l * l.log2())
            .sum::<f64>()
            .max(0.0))
    }

    /// `½‖A − B‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        let diff = &self.matrix - &other.matrix;
        let ev = diff.symmetric_eigenvalues();
        Ok((0.5 * ev.iter().map(|l| l.abs()).sum::<f64>()).min(1.0))
    }

    /// Reduced operator on `keep`, in layout order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let kept = self.layout.positions_sorted(keep)?;
        let rest = self.layout.complement(&kept);
        let keep_off = self.layout.offsets(&kept);
        let rest_off = self.layout.offsets(&rest);
        let dk = keep_off.len();
        let mut out = DMatrix::<Complex64>::zeros(dk, dk);
        for &r in &rest_off {
            for a in 0..dk {
                for b in 0..dk {
                    out[(a, b)] += self.matrix[(keep_off[a] + r, keep_off[b] + r)];
                }
            }
        }
        DensityMatrix::new(self.layout.subset(&kept), out)
    }
}
