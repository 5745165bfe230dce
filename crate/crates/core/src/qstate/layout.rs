use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named subsystem with its local Hilbert-space dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered set of named registers. Flat indices are row-major over the
/// declared order: the first register is the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Register>", into = "Vec<Register>")]
pub struct RegisterLayout {
    registers: Vec<Register>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl RegisterLayout {
    pub fn new<I, S>(registers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let registers: Vec<Register> = registers
            .into_iter()
            .map(|(name, dim)| Register { name: name.into(), dim })
            .collect();
        Self::from_registers(registers)
    }

    /// Layout of qubits with the given names.
    pub fn qubits(names: &[&str]) -> Result<Self> {
        Self::new(names.iter().map(|n| (*n, 2)))
    }

    fn from_registers(registers: Vec<Register>) -> Result<Self> {
        if registers.is_empty() {
            return Err(Error::InvalidLayout("no registers".into()));
        }
        for (i, r) in registers.iter().enumerate() {
            if r.name.is_empty() {
                return Err(Error::InvalidLayout("empty register name".into()));
            }
            if r.dim < 2 {
                return Err(Error::InvalidLayout(format!(
                    "register `{}` has dimension {} (< 2)",
                    r.name, r.dim
                )));
            }
            if registers[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::DuplicateSubsystem(r.name.clone()));
            }
        }
        let mut strides = vec![0; registers.len()];
        let mut acc: usize = 1;
        for (i, r) in registers.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc
                .checked_mul(r.dim)
                .ok_or_else(|| Error::InvalidLayout("total dimension overflows".into()))?;
        }
        Ok(Self { registers, strides, total_dim: acc })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.registers.iter().map(|r| r.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownSubsystem(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn dim(&self, pos: usize) -> usize {
        self.registers[pos].dim
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].dim)
    }

    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    /// Digit of register `pos` in flat index `index`.
    #[inline]
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.registers[pos].dim
    }

    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        (0..self.len()).map(|p| self.digit(index, p)).collect()
    }

    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: digits.len() });
        }
        let mut index = 0;
        for (p, (&d, r)) in digits.iter().zip(&self.registers).enumerate() {
            if d >= r.dim {
                return Err(Error::ValueOutOfRange { name: r.name.clone(), value: d, dim: r.dim });
            }
            index += d * self.strides[p];
        }
        Ok(index)
    }

    /// `atom=0,poison=1,...` label for a flat index.
    pub fn basis_label(&self, index: usize) -> String {
        self.registers
            .iter()
            .enumerate()
            .map(|(p, r)| format!("{}={}", r.name, self.digit(index, p)))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Resolve names to positions sorted in layout order, rejecting
    /// unknown names, duplicates and the empty set.
    pub(crate) fn positions_sorted(&self, names: &[&str]) -> Result<Vec<usize>> {
        if names.is_empty() {
            return Err(Error::EmptyKeep);
        }
        let mut positions = Vec::with_capacity(names.len());
        for name in names {
            let p = self.position(name)?;
            if positions.contains(&p) {
                return Err(Error::DuplicateSubsystem(name.to_string()));
            }
            positions.push(p);
        }
        positions.sort_unstable();
        Ok(positions)
    }

    /// Layout of the registers at `positions`, in the given order.
    pub(crate) fn subset(&self, positions: &[usize]) -> RegisterLayout {
        Self::from_registers(positions.iter().map(|&p| self.registers[p].clone()).collect())
            .expect("subset of a valid layout is valid")
    }

    /// Flat-index offsets contributed by every joint value of the registers at
    /// `positions`, enumerated row-major in the given order.
    pub(crate) fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let count: usize = positions.iter().map(|&p| self.dim(p)).product();
        let mut out = Vec::with_capacity(count);
        for m in 0..count {
            let mut rem = m;
            let mut off = 0;
            for &p in positions.iter().rev() {
                let d = self.dim(p);
                off += (rem % d) * self.strides[p];
                rem /= d;
            }
            out.push(off);
        }
        out
    }

    pub(crate) fn complement(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|p| !positions.contains(p)).collect()
    }
}

impl TryFrom<Vec<Register>> for RegisterLayout {
    type Error = Error;

    fn try_from(registers: Vec<Register>) -> Result<Self> {
        Self::from_registers(registers)
    }
}

impl From<RegisterLayout> for Vec<Register> {
    fn from(layout: RegisterLayout) -> Self {
        layout.registers
    }
}
