//! Dense operators on a finite (possibly truncated) Hilbert space.
//!
//! Basis conventions follow the column vectors used throughout the crate:
//! the qubit basis is ordered `[|e>, |g>]`, the qutrit basis `[|1>, |2>, |3>]`,
//! and Fock spaces `[|0>, |1>, ..., |N-1>]`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default Hermiticity tolerance, relative to the largest entry magnitude.
pub const TOL_HERM: f64 = 1e-10;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Square complex matrix acting on a `dim`-dimensional Hilbert space.
///
/// Rates are stored pre-multiplied (e.g. `sqrt(kappa) * sigma_z`); no units are tracked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|row| row.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.iter().map(|row| row.len()).max().unwrap_or(0),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| r(rows[i][j])))
    }

    /// Row-major complex entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|row| row.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.iter().map(|row| row.len()).max().unwrap_or(0),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `|i><j|` on a `dim`-dimensional space.
    pub fn transition(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = r(1.0);
        Self(m)
    }

    /// `|psi><psi|`.
    pub fn projector(psi: &DVector<Complex64>) -> Self {
        Self(psi * psi.adjoint())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                r(values[i])
            } else {
                r(0.0)
            }
        }))
    }

    // Qubit operators in the [|e>, |g>] basis.

    /// `sigma_z = |e><e| - |g><g|`.
    pub fn sigma_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    /// `sigma_- = |g><e|`.
    pub fn sigma_minus() -> Self {
        Self::transition(2, 1, 0)
    }

    /// `sigma_+ = |e><g|`.
    pub fn sigma_plus() -> Self {
        Self::transition(2, 0, 1)
    }

    // Truncated harmonic oscillator.

    /// Annihilation operator `a|n> = sqrt(n)|n-1>` on `[|0>, ..., |N-1>]`.
    pub fn annihilation(truncation: usize) -> Self {
        Self(DMatrix::from_fn(truncation, truncation, |i, j| {
            if j == i + 1 {
                r((j as f64).sqrt())
            } else {
                r(0.0)
            }
        }))
    }

    pub fn creation(truncation: usize) -> Self {
        Self::annihilation(truncation).dagger()
    }

    pub fn number(truncation: usize) -> Self {
        let values: Vec<f64> = (0..truncation).map(|n| n as f64).collect();
        Self::diagonal(&values)
    }

    /// `q = (a + a^dagger) / sqrt(2)`, so that `[q, p] = i` away from the cutoff.
    pub fn position(truncation: usize) -> Self {
        let a = Self::annihilation(truncation);
        (&a + &a.dagger()).scale(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// `p = (a - a^dagger) / (i sqrt(2))`.
    pub fn momentum(truncation: usize) -> Self {
        let a = Self::annihilation(truncation);
        (&a - &a.dagger()).scale_c(c(0.0, -std::f64::consts::FRAC_1_SQRT_2))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(&self.0 * r(factor))
    }

    pub fn scale_c(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max|M - M^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian within `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol * self.max_abs()
    }

    pub(crate) fn require_hermitian(&self, what: &str) -> Result<()> {
        if self.is_hermitian(TOL_HERM) {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                what: what.to_string(),
                deviation: self.hermiticity_error(),
            })
        }
    }

    pub(crate) fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            })
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.0 * v
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Operator) -> Operator {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `max_ij |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl From<Operator> for DMatrix<Complex64> {
    fn from(op: Operator) -> Self {
        op.0
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.0 += &rhs.0;
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator(self.0 * rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

/// Wire format: `{"dim": n, "re": [[...]], "im": [[...]]}`, rows first.
#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<OperatorRepr> for Operator {
    type Error = String;

    fn try_from(repr: OperatorRepr) -> std::result::Result<Self, String> {
        let n = repr.dim;
        if n == 0 {
            return Err("dim must be >= 1".into());
        }
        for (name, part) in [("re", &repr.re), ("im", &repr.im)] {
            if part.len() != n {
                return Err(format!("{name}: expected {n} rows, found {}", part.len()));
            }
            if let Some((i, row)) = part.iter().enumerate().find(|(_, row)| row.len() != n) {
                return Err(format!(
                    "{name}[{i}]: expected {n} columns, found {}",
                    row.len()
                ));
            }
        }
        Ok(Operator(DMatrix::from_fn(n, n, |i, j| {
            c(repr.re[i][j], repr.im[i][j])
        })))
    }
}

impl From<Operator> for OperatorRepr {
    fn from(op: Operator) -> Self {
        let n = op.dim();
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| f(&op.0[(i, j)])).collect())
                .collect()
        };
        OperatorRepr {
            dim: n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

/// Normalized column vector from complex components.
pub fn ket(components: &[Complex64]) -> DVector<Complex64> {
    let v = DVector::from_column_slice(components);
    let norm = v.norm();
    v / r(norm)
}

/// `|index>` in a `dim`-dimensional space.
pub fn basis(dim: usize, index: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[index] = r(1.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_basis_convention() {
        let sz = Operator::sigma_z();
        assert_eq!(sz.matrix()[(0, 0)], r(1.0));
        assert_eq!(sz.matrix()[(1, 1)], r(-1.0));
        // sigma_- |e> = |g>
        let g = Operator::sigma_minus().apply(&basis(2, 0));
        assert_eq!(g, basis(2, 1));
        assert_eq!(Operator::sigma_plus(), Operator::sigma_minus().dagger());
    }

    #[test]
    fn ladder_algebra_below_cutoff() {
        let n = 8;
        let a = Operator::annihilation(n);
        let num = &a.dagger() * &a;
        assert!(num.max_abs_diff(&Operator::number(n)) < 1e-14);
        let q = Operator::position(n);
        let p = Operator::momentum(n);
        assert!(q.is_hermitian(1e-14) && p.is_hermitian(1e-14));
        let comm = q.commutator(&p);
        // [q, p] = i except in the last diagonal entry
        for k in 0..n - 1 {
            assert!((comm.matrix()[(k, k)] - I).norm() < 1e-13);
        }
    }

    #[test]
    fn hermiticity_is_relative() {
        let mut m = Operator::sigma_z().scale(1e6).into_matrix();
        m[(0, 1)] = c(1e-6, 0.0);
        let op = Operator::new(m).unwrap();
        assert!(op.is_hermitian(TOL_HERM));
        assert!(!Operator::sigma_minus().is_hermitian(TOL_HERM));
    }

    #[test]
    fn rejects_non_square() {
        assert!(Operator::new(DMatrix::zeros(2, 3)).is_err());
        assert!(Operator::new(DMatrix::zeros(0, 0)).is_err());
        assert!(Operator::from_real_rows(&[&[1.0, 2.0], &[3.0]]).is_err());
    }

    #[test]
    fn json_wire_format() {
        let op = Operator::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, -2.0)],
            vec![c(0.0, 2.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        let text = serde_json::to_string(&op).unwrap();
        assert_eq!(
            text,
            r#"{"dim":2,"re":[[1.0,0.0],[0.0,-1.0]],"im":[[0.0,-2.0],[2.0,0.0]]}"#
        );
        let back: Operator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, op);

        let bad = r#"{"dim":2,"re":[[1.0,0.0],[0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#;
        let err = serde_json::from_str::<Operator>(bad)
            .unwrap_err()
            .to_string();
        assert!(err.contains("re[1]"), "{err}");
    }
}
