//! Reference implementations used as independent oracles.

#![allow(dead_code)]

use num_complex::Complex64;
use wigner_friend::qstate::GateSpec;

pub type Amps = Vec<Complex64>;

/// Digits of `index` for register dimensions `dims`, first register most
/// significant.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub fn undigits(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Dense operator of `gate` on the full space, built entry by entry.
pub fn full_operator(gate: &GateSpec, names: &[&str], dims: &[usize]) -> Vec<Vec<Complex64>> {
    let total: usize = dims.iter().product();
    let pos: Vec<usize> = gate
        .targets()
        .iter()
        .map(|t| names.iter().position(|n| n == t).expect("target in layout"))
        .collect();
    let sub_dims: Vec<usize> = pos.iter().map(|&p| dims[p]).collect();
    let mut op = vec![vec![Complex64::new(0.0, 0.0); total]; total];
    for (row, op_row) in op.iter_mut().enumerate() {
        let r = digits(row, dims);
        for (col, entry) in op_row.iter_mut().enumerate() {
            let c = digits(col, dims);
            let spectators_match = (0..dims.len()).filter(|i| !pos.contains(i)).all(|i| r[i] == c[i]);
            if !spectators_match {
                continue;
            }
            let sr = undigits(&pos.iter().map(|&p| r[p]).collect::<Vec<_>>(), &sub_dims);
            let sc = undigits(&pos.iter().map(|&p| c[p]).collect::<Vec<_>>(), &sub_dims);
            *entry = gate.entry(sr, sc);
        }
    }
    op
}

pub fn matvec(op: &[Vec<Complex64>], v: &[Complex64]) -> Amps {
    op.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Reduced density matrix of `keep` (positions, ascending), by explicit
/// summation over every pair of full basis indices.
pub fn brute_partial_trace(psi: &[Complex64], dims: &[usize], keep: &[usize]) -> Vec<Vec<Complex64>> {
    let kdims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let kd: usize = kdims.iter().product();
    let mut rho = vec![vec![Complex64::new(0.0, 0.0); kd]; kd];
    for i in 0..psi.len() {
        let di = digits(i, dims);
        for j in 0..psi.len() {
            let dj = digits(j, dims);
            let traced_equal = (0..dims.len()).filter(|p| !keep.contains(p)).all(|p| di[p] == dj[p]);
            if traced_equal {
                let a = undigits(&keep.iter().map(|&p| di[p]).collect::<Vec<_>>(), &kdims);
                let b = undigits(&keep.iter().map(|&p| dj[p]).collect::<Vec<_>>(), &kdims);
                rho[a][b] += psi[i] * psi[j].conj();
            }
        }
    }
    rho
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Haar-ish unitary of size `n` from the QR factor of a complex matrix.
pub fn unitary_from_entries(n: usize, entries: &[(f64, f64)]) -> Vec<Complex64> {
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        let (re, im) = entries[(r * n + c) % entries.len()];
        Complex64::new(re + if r == c { 0.5 } else { 0.0 }, im)
    });
    let q = m.qr().q();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            out.push(q[(r, c)]);
        }
    }
    out
}
