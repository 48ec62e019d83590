//! Master-equation dynamics on dense density matrices.
//!
//! `drho/dt = -i[H, rho] + sum_k (L_k rho L_k^† - {L_k^† L_k, rho} / 2)`

mod functionals;
mod integrate;
mod steady;

pub use functionals::{
    bloch_vector, coherent_state, fidelity, purity, q_function, trace_distance, PhaseGrid, QGrid,
};
pub use integrate::{integrate, IntegratorConfig, Trajectory};
pub use steady::{
    kernel_dimension, steady_state, steady_state_with, SteadyMethod, SteadyStateConfig,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{c, r, Operator, I, TOL_HERM};
use crate::slh::SlhTriple;

/// Default cap on the number of rows of the vectorized Liouvillian (dim <= 64).
pub const LIOUVILLIAN_CAP: usize = 4096;

const TOL_TRACE: f64 = 1e-8;
const TOL_POSITIVITY: f64 = 1e-8;

/// Total Hamiltonian plus dissipation channels.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladSystem {
    h: Operator,
    channels: Vec<Operator>,
}

impl LindbladSystem {
    pub fn new(h: Operator, channels: Vec<Operator>) -> Result<Self> {
        h.require_hermitian("Hamiltonian")?;
        for l in &channels {
            l.require_dim(h.dim())?;
        }
        Ok(Self { h, channels })
    }

    /// Single-channel system generated by an SLH triple; the scattering phase
    /// does not enter the master equation.
    pub fn from_slh(g: &SlhTriple) -> Self {
        Self {
            h: g.h().clone(),
            channels: vec![g.l().clone()],
        }
    }

    /// Adds a Hermitian term such as a detuning `H_delta` to the Hamiltonian.
    pub fn with_hamiltonian_term(mut self, term: &Operator) -> Result<Self> {
        term.require_dim(self.dim())?;
        term.require_hermitian("Hamiltonian term")?;
        self.h += term;
        Ok(self)
    }

    pub fn with_channel(mut self, l: Operator) -> Result<Self> {
        l.require_dim(self.dim())?;
        self.channels.push(l);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn channels(&self) -> &[Operator] {
        &self.channels
    }

    /// `K = iH + sum_k L_k^† L_k / 2`, so that `L rho = -K rho - rho K^† + sum_k L_k rho L_k^†`.
    pub fn damping_generator(&self) -> DMatrix<Complex64> {
        let mut k = self.h.matrix() * I;
        for l in &self.channels {
            k += l.matrix().adjoint() * l.matrix() * r(0.5);
        }
        k
    }

    pub(crate) fn apply_with(
        &self,
        k: &DMatrix<Complex64>,
        rho: &DMatrix<Complex64>,
    ) -> DMatrix<Complex64> {
        // -(K rho + (K rho)^†) would save a product but is only valid for exactly
        // Hermitian rho; its action on rounding-level anti-Hermitian parts is unstable.
        let mut out = -(k * rho) - rho * k.adjoint();
        for l in &self.channels {
            out += l.matrix() * rho * l.matrix().adjoint();
        }
        out
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Operator", into = "Operator")]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self(Operator::new(m)?.into_matrix());
        rho.validate(TOL_TRACE, TOL_POSITIVITY)?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    /// `|psi><psi|` for a vector normalized here.
    pub fn pure(psi: &DVector<Complex64>) -> Self {
        let norm = psi.norm();
        let v = psi / r(norm);
        Self(&v * v.adjoint())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self(Operator::transition(dim, index, index).into_matrix())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim) * r(1.0 / dim as f64))
    }

    /// Random full-rank state `G G^† / Tr(G G^†)` with a complex Ginibre `G`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace();
        Self(m / tr)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn to_operator(&self) -> Operator {
        Operator::new(self.0.clone()).expect("density matrices are square")
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.to_operator().hermiticity_error()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.0 + self.0.adjoint()) * r(0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `<k|rho|k>`.
    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    pub fn expectation(&self, op: &Operator) -> Complex64 {
        (op.matrix() * &self.0).trace()
    }

    /// Checks the density-matrix invariants at the given tolerances.
    pub fn validate(&self, tol_trace: f64, tol_positivity: f64) -> Result<()> {
        let op = self.to_operator();
        if !op.is_hermitian(TOL_HERM) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {:.3e})",
                op.hermiticity_error()
            )));
        }
        let tr = self.0.trace();
        if (tr - r(1.0)).norm() > tol_trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -tol_positivity {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }
}

impl TryFrom<Operator> for DensityMatrix {
    type Error = Error;
    fn try_from(op: Operator) -> Result<Self> {
        Self::new(op.into_matrix())
    }
}

impl From<DensityMatrix> for Operator {
    fn from(rho: DensityMatrix) -> Self {
        Operator::new(rho.0).expect("density matrices are square")
    }
}

/// `drho/dt` for the given state.
pub fn liouvillian_apply(sys: &LindbladSystem, rho: &DensityMatrix) -> Result<Operator> {
    if rho.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho.dim(),
        });
    }
    let k = sys.damping_generator();
    Operator::new(sys.apply_with(&k, rho.matrix()))
}

/// Column-stacked superoperator `M` with `vec(drho/dt) = M vec(rho)`,
/// where `vec(rho)[i + j*dim] = rho[i][j]`.
pub fn liouvillian_matrix(sys: &LindbladSystem, cap: usize) -> Result<DMatrix<Complex64>> {
    let d = sys.dim();
    let size = d * d;
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let id = DMatrix::<Complex64>::identity(d, d);
    let k = sys.damping_generator();
    // vec(A X B) = (B^T kron A) vec(X)
    let mut m = -id.kronecker(&k) - k.map(|z| z.conj()).kronecker(&id);
    for l in &sys.channels {
        m += l.matrix().map(|z| z.conj()).kronecker(l.matrix());
    }
    Ok(m)
}

pub fn vectorize(rho: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn decay(gamma: f64) -> LindbladSystem {
        LindbladSystem::new(
            Operator::zeros(2),
            vec![Operator::sigma_minus().scale(gamma.sqrt())],
        )
        .unwrap()
    }

    #[test]
    fn empty_system_has_zero_generator() {
        let sys = LindbladSystem::new(Operator::zeros(3), vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = DensityMatrix::random(3, &mut rng);
        assert_eq!(liouvillian_apply(&sys, &rho).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn excited_state_decay_rate() {
        let gamma = 0.7;
        let out = liouvillian_apply(&decay(gamma), &DensityMatrix::basis(2, 0)).unwrap();
        let expected = Operator::diagonal(&[-gamma, gamma]);
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn generator_is_traceless_and_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = DensityMatrix::random(4, &mut rng).to_operator().scale(3.0);
        let l = Operator::from_fn(4, |i, j| {
            c((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2)
        });
        let sys = LindbladSystem::new(h, vec![l]).unwrap();
        let rho = DensityMatrix::random(4, &mut rng);
        let out = liouvillian_apply(&sys, &rho).unwrap();
        assert!(out.trace().norm() < 1e-12);
        assert!(out.hermiticity_error() < 1e-12);
    }

    #[test]
    fn unitary_generator_has_imaginary_spectrum() {
        let sys = LindbladSystem::new(Operator::diagonal(&[0.0, 1.0, 2.5]), vec![]).unwrap();
        let m = liouvillian_matrix(&sys, LIOUVILLIAN_CAP).unwrap();
        // diagonal H gives a diagonal superoperator
        for i in 0..9 {
            for j in 0..9 {
                if i == j {
                    assert!(m[(i, j)].re.abs() < 1e-15);
                } else {
                    assert_eq!(m[(i, j)], r(0.0));
                }
            }
        }
    }

    #[test]
    fn cap_enforced() {
        let sys = LindbladSystem::new(Operator::zeros(65), vec![]).unwrap();
        assert!(matches!(
            liouvillian_matrix(&sys, LIOUVILLIAN_CAP),
            Err(Error::CapExceeded {
                size: 4225,
                cap: 4096
            })
        ));
    }

    #[test]
    fn dimension_checks() {
        assert!(LindbladSystem::new(Operator::zeros(2), vec![Operator::zeros(3)]).is_err());
        assert!(LindbladSystem::new(Operator::sigma_minus(), vec![]).is_err());
        let sys = decay(1.0);
        assert!(matches!(
            liouvillian_apply(&sys, &DensityMatrix::basis(3, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(DMatrix::identity(2, 2)).is_err());
        let not_psd = DMatrix::from_row_slice(2, 2, &[r(1.2), r(0.0), r(0.0), r(-0.2)]);
        assert!(DensityMatrix::new(not_psd).is_err());
        let rho = DensityMatrix::pure(&(basis(2, 0) + basis(2, 1)));
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        let text = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-15);
    }
}
