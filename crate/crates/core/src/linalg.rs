//! Dense complex matrix helpers shared by the operator modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// max |U U^† - 1|
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(n, n))
}

pub fn hermiticity_deviation(h: &CMatrix) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

/// `exp(coeff * m)` for a nilpotent `m`, summed until the power series terminates.
///
/// Panics if `m` is not nilpotent within `dim + 1` terms.
pub fn nilpotent_exp(m: &CMatrix, coeff: Complex64) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=n + 1 {
        term = (&term * m) * (coeff / k as f64);
        if term.iter().all(|z| *z == ZERO) {
            return out;
        }
        out += &term;
    }
    panic!("nilpotent_exp: matrix is not nilpotent");
}

/// `exp(coeff * diag(d))` as a full matrix.
pub fn diagonal_exp(diag: &[f64], coeff: Complex64) -> CMatrix {
    let v = CVector::from_iterator(diag.len(), diag.iter().map(|&d| (coeff * d).exp()));
    CMatrix::from_diagonal(&v)
}

pub fn real_diagonal(m: &CMatrix) -> Vec<f64> {
    m.diagonal().iter().map(|z| z.re).collect()
}
