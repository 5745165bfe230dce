use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::UNITARY_TOL;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A unitary acting on an ordered list of named registers. The matrix is
/// stored row-major and indexed row-major over `targets` in the given order
/// (first target is the most significant digit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRepr")]
pub struct GateSpec {
    name: String,
    targets: Vec<String>,
    dim: usize,
    matrix: Vec<Complex64>,
}

#[derive(Deserialize)]
struct GateRepr {
    name: String,
    targets: Vec<String>,
    dim: usize,
    matrix: Vec<Complex64>,
}

impl TryFrom<GateRepr> for GateSpec {
    type Error = Error;

    fn try_from(r: GateRepr) -> Result<Self> {
        GateSpec::new(r.name, r.targets, r.dim, r.matrix)
    }
}

impl GateSpec {
    /// Validates target distinctness, matrix shape and unitarity.
    pub fn new(
        name: impl Into<String>,
        targets: Vec<String>,
        dim: usize,
        matrix: Vec<Complex64>,
    ) -> Result<Self> {
        let name = name.into();
        if targets.is_empty() {
            return Err(Error::NoTargets(name));
        }
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(Error::DuplicateSubsystem(t.clone()));
            }
        }
        if dim == 0 || matrix.len() != dim * dim {
            return Err(Error::GateDimension { name, expected: dim * dim, actual: matrix.len() });
        }
        let gate = Self { name, targets, dim, matrix };
        let deviation = gate.unitarity_deviation();
        if deviation.is_nan() || deviation > UNITARY_TOL {
            return Err(Error::NonUnitary { name: gate.name, deviation });
        }
        Ok(gate)
    }

    pub fn from_rows(name: impl Into<String>, targets: &[&str], rows: &[&[Complex64]]) -> Result<Self> {
        let dim = rows.len();
        let mut matrix = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::GateDimension {
                    name: name.into(),
                    expected: dim,
                    actual: row.len(),
                });
            }
            matrix.extend_from_slice(row);
        }
        Self::new(name, targets.iter().map(|t| t.to_string()).collect(), dim, matrix)
    }

    pub fn identity(target: &str, dim: usize) -> Self {
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = ONE;
        }
        Self::trusted("id", vec![target.into()], dim, m)
    }

    pub fn x(target: &str) -> Self {
        Self::trusted("x", vec![target.into()], 2, vec![ZERO, ONE, ONE, ZERO])
    }

    pub fn h(target: &str) -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::trusted("h", vec![target.into()], 2, vec![s, s, s, -s])
    }

    /// `R_y(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
    pub fn ry(target: &str, theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::trusted(
            "ry",
            vec![target.into()],
            2,
            vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0), Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        )
    }

    pub fn rz(target: &str, theta: f64) -> Self {
        let half = theta / 2.0;
        Self::trusted(
            "rz",
            vec![target.into()],
            2,
            vec![Complex64::from_polar(1.0, -half), ZERO, ZERO, Complex64::from_polar(1.0, half)],
        )
    }

    /// Controlled-NOT with `control` as the most significant target.
    pub fn cnot(control: &str, target: &str) -> Self {
        assert_ne!(control, target, "cnot control and target must differ");
        let mut m = vec![ZERO; 16];
        m[0] = ONE;
        m[5] = ONE;
        m[2 * 4 + 3] = ONE;
        m[3 * 4 + 2] = ONE;
        Self::trusted("cnot", vec![control.into(), target.into()], 4, m)
    }

    fn trusted(name: &str, targets: Vec<String>, dim: usize, matrix: Vec<Complex64>) -> Self {
        Self { name: name.to_string(), targets, dim, matrix }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    pub fn is_self_inverse(&self) -> bool {
        let n = self.dim;
        (0..n).all(|r| (0..n).all(|c| self.entry(r, c) == self.entry(c, r).conj()))
    }

    /// Conjugate transpose. Hermitian gates keep their name; otherwise a
    /// trailing `†` is toggled.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut m = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                m[c * n + r] = self.entry(r, c).conj();
            }
        }
        let name = if self.is_self_inverse() {
            self.name.clone()
        } else if let Some(base) = self.name.strip_suffix('†') {
            base.to_string()
        } else {
            format!("{}†", self.name)
        };
        Self { name, targets: self.targets.clone(), dim: n, matrix: m }
    }

    /// Frobenius norm of `U U† − I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.entry(r, k) * self.entry(c, k).conj();
                }
                if r == c {
                    s -= ONE;
                }
                acc += s.norm_sqr();
            }
        }
        acc.sqrt()
    }
}
