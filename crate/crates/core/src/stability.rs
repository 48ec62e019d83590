//! Pure steady states: the common-eigenvector criterion, a uniqueness test for
//! single-channel systems and the qutrit gain design.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::LindbladSystem;
use crate::models::{qutrit_cf, qutrit_drive, qutrit_eigenbasis, QutritTarget};
use crate::operator::{r, Operator, I};

/// Eigen-residuals of a candidate pure steady state.
#[derive(Clone, Debug, Serialize)]
pub struct PureSteadyReport {
    pub is_steady: bool,
    /// `||L psi - <L> psi||`.
    pub l_residual: f64,
    /// `||K psi - <K> psi||` with `K = iH + L^† L / 2`.
    pub k_residual: f64,
    pub l_eigenvalue: Complex64,
    pub k_eigenvalue: Complex64,
}

/// Default residual tolerance: `1e-8` relative to `max(1, |L|_max)`.
pub fn default_tolerance(l: &Operator) -> f64 {
    1e-8 * l.max_abs().max(1.0)
}

/// Component of `m psi` orthogonal to `psi`, and the Rayleigh quotient.
fn eigen_residual(m: &DMatrix<Complex64>, psi: &DVector<Complex64>) -> (f64, Complex64) {
    let mp = m * psi;
    let lambda = psi.dotc(&mp);
    ((mp - psi * lambda).norm(), lambda)
}

fn require_unit(psi: &DVector<Complex64>, dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: psi.len(),
        });
    }
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "state must be normalized, |psi| = {n}"
        )));
    }
    Ok(())
}

/// `|psi><psi|` is stationary for the single-channel system `(L, H)` iff `psi`
/// is a common eigenvector of `L` and `iH + L^† L / 2`.
pub fn check_pure_steady(
    l: &Operator,
    h: &Operator,
    psi: &DVector<Complex64>,
    tol: f64,
) -> Result<PureSteadyReport> {
    let d = l.dim();
    h.require_dim(d)?;
    require_unit(psi, d)?;
    let k = h.matrix() * I + l.matrix().adjoint() * l.matrix() * r(0.5);
    let (l_residual, l_eigenvalue) = eigen_residual(l.matrix(), psi);
    let (k_residual, k_eigenvalue) = eigen_residual(&k, psi);
    Ok(PureSteadyReport {
        is_steady: l_residual <= tol && k_residual <= tol,
        l_residual,
        k_residual,
        l_eigenvalue,
        k_eigenvalue,
    })
}

/// Outcome of [`unique_dark_state_test`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Uniqueness {
    /// No eigenvector of `L` lies in the orthogonal complement of the dark space.
    Unique,
    /// Some eigenvector of `L` is orthogonal to the dark space.
    NotUnique { eigenvalue: Complex64 },
    /// `L` is defective or its eigenbasis is too ill-conditioned to decide.
    Inconclusive { condition: f64 },
}

impl Uniqueness {
    pub fn is_unique(&self) -> bool {
        matches!(self, Uniqueness::Unique)
    }
}

const ORTHOGONALITY_TOL: f64 = 1e-8;
const MAX_CONDITION: f64 = 1e8;

/// Orthonormal basis of the null space of `m` (singular values below `tol`).
fn null_space(m: DMatrix<Complex64>, tol: f64) -> DMatrix<Complex64> {
    let n = m.ncols();
    let svd = SVD::new(m, false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let cols: Vec<DVector<Complex64>> = (0..n)
        .filter(|&k| k >= svd.singular_values.len() || svd.singular_values[k] < tol)
        .map(|k| v_t.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn orthonormalize(vectors: &[DVector<Complex64>], dim: usize) -> Result<DMatrix<Complex64>> {
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    if vectors.is_empty() {
        return Ok(DMatrix::zeros(dim, 0));
    }
    let q = DMatrix::from_columns(vectors).qr().q();
    Ok(q)
}

/// Uniqueness of the steady states supported on `span(dark)` for a single
/// coupling `L`.
///
/// Any `L`-invariant subspace orthogonal to the dark space contains an
/// eigenvector of `L`; if none of the eigenvectors is orthogonal to
/// `span(dark)`, no such subspace exists and the dark states are the only
/// steady states.
pub fn unique_dark_state_test(l: &Operator, dark: &[DVector<Complex64>]) -> Result<Uniqueness> {
    let d = l.dim();
    let q = orthonormalize(dark, d)?;
    let scale = l.max_abs().max(1.0);
    let eig_tol = 1e-8 * scale;

    let schur = l.matrix().clone().schur();
    let eigenvalues = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("Schur form did not converge".into()))?;
    let mut distinct: Vec<Complex64> = Vec::new();
    for &lam in eigenvalues.iter() {
        if distinct.iter().all(|&mu| (mu - lam).norm() > 1e-6 * scale) {
            distinct.push(lam);
        }
    }

    let mut eigvecs: Vec<DVector<Complex64>> = Vec::new();
    for &lam in &distinct {
        let shifted = l.matrix() - DMatrix::identity(d, d) * lam;
        let n = null_space(shifted, eig_tol);
        if n.ncols() == 0 {
            continue;
        }
        eigvecs.extend(n.column_iter().map(|c| c.into_owned()));
        // eigenvectors in this eigenspace orthogonal to the dark space:
        // kernel of Q^H N
        let overlap = q.adjoint() * &n;
        let orthogonal = if n.ncols() > overlap.nrows() {
            true
        } else {
            overlap.singular_values().min() < ORTHOGONALITY_TOL
        };
        if orthogonal {
            return Ok(Uniqueness::NotUnique { eigenvalue: lam });
        }
    }

    if eigvecs.len() < d {
        return Ok(Uniqueness::Inconclusive {
            condition: f64::INFINITY,
        });
    }
    let sv = DMatrix::from_columns(&eigvecs).singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_CONDITION) {
        return Ok(Uniqueness::Inconclusive { condition });
    }
    Ok(Uniqueness::Unique)
}

/// `(Phi1, Phi2, Phi3)`, each checked to be an eigenvector of the closed-loop
/// coupling `L = L2 + L1`.
pub fn qutrit_dark_basis(kappa: f64, gamma: f64) -> Result<[DVector<Complex64>; 3]> {
    let sys = qutrit_cf(kappa, gamma, 0.0, 0.0, None)?;
    let l = sys.channels()[0].matrix();
    let basis = qutrit_eigenbasis(kappa, gamma);
    let tol = 1e-10 * l.norm().max(1.0);
    for (k, phi) in basis.iter().enumerate() {
        let (res, _) = eigen_residual(l, phi);
        if res > tol {
            return Err(Error::Numerical(format!(
                "qutrit eigenvector {} has residual {res:e}",
                k + 1
            )));
        }
    }
    Ok(basis)
}

fn qutrit_target_vector(
    target: QutritTarget,
    kappa: f64,
    gamma: f64,
) -> Result<DVector<Complex64>> {
    let [p1, p2, p3] = qutrit_dark_basis(kappa, gamma)?;
    Ok(match target {
        QutritTarget::Phi1 => p1,
        QutritTarget::Phi2 => p2,
        QutritTarget::Phi3 => p3,
    })
}

/// Drive gains `(u1, u2)` making the target an eigenvector of `iH + L^† L / 2`.
///
/// The eigen-equation is linear in `(u1, u2, lambda)`; it is split into real
/// and imaginary parts and solved in the least-squares sense. The
/// minimum-norm solution leaves gains the equation does not constrain at 0.
pub fn solve_qutrit_gains(target: QutritTarget, kappa: f64, gamma: f64) -> Result<(f64, f64)> {
    let phi = qutrit_target_vector(target, kappa, gamma)?;
    let k0 = qutrit_cf(kappa, gamma, 0.0, 0.0, None)?.damping_generator();
    let k1 = qutrit_drive(1.0, 0.0).matrix() * I;
    let k2 = qutrit_drive(0.0, 1.0).matrix() * I;
    let cols = [&k1 * &phi, &k2 * &phi, -&phi, -(&phi * I)];
    let rhs_c = -(&k0 * &phi);
    let a = DMatrix::from_fn(6, 4, |i, j| {
        let z = cols[j][i % 3];
        if i < 3 {
            z.re
        } else {
            z.im
        }
    });
    let b = DVector::from_fn(6, |i, _| if i < 3 { rhs_c[i].re } else { rhs_c[i - 3].im });
    // Equilibrate columns (the gain columns are small when the target is close
    // to a basis state), solve, then refine once against the original system.
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let scaled = DMatrix::from_fn(6, 4, |i, j| {
        if norms[j] > 0.0 {
            a[(i, j)] / norms[j]
        } else {
            0.0
        }
    });
    let svd = SVD::new(scaled, true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    let solve = |rhs: &DVector<f64>| -> Result<DVector<f64>> {
        let y = svd
            .solve(rhs, cutoff)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(DVector::from_fn(4, |j, _| {
            if norms[j] > 0.0 {
                y[j] / norms[j]
            } else {
                0.0
            }
        }))
    };
    let mut x = solve(&b)?;
    x += solve(&(&b - &a * &x))?;
    let residual = (&a * &x - &b).norm();
    if residual > 1e-10 * b.norm().max(1.0) {
        return Err(Error::Numerical(format!(
            "no gains make {target:?} an eigenvector (residual {residual:e})"
        )));
    }
    Ok((x[0], x[1]))
}

/// `min_lambda ||(K + i H_delta) Phi - lambda Phi||` with the given gains:
/// how far detuning pushes the target off being an eigenvector.
#[allow(clippy::too_many_arguments)]
pub fn detuning_robustness_residual(
    kappa: f64,
    gamma: f64,
    delta1: f64,
    delta2: f64,
    u1: f64,
    u2: f64,
    target: QutritTarget,
) -> Result<f64> {
    let phi = qutrit_target_vector(target, kappa, gamma)?;
    let imp = crate::models::ImperfectionSpec {
        delta1,
        delta2,
        ..Default::default()
    };
    let sys: LindbladSystem = qutrit_cf(kappa, gamma, u1, u2, Some(&imp))?;
    Ok(eigen_residual(&sys.damping_generator(), &phi).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{qubit_cf, qubit_target};
    use crate::operator::basis;

    #[test]
    fn qubit_target_is_steady_and_ground_is_not() {
        let (kappa, gamma, phi) = (0.7, 1.3, 0.4);
        let sys = qubit_cf(kappa, gamma, phi, None).unwrap();
        let (l, h) = (&sys.channels()[0], sys.hamiltonian());
        let tol = default_tolerance(l);
        let rep = check_pure_steady(l, h, &qubit_target(kappa, gamma, phi), tol).unwrap();
        assert!(rep.is_steady, "{rep:?}");
        let rep = check_pure_steady(l, h, &basis(2, 1), tol).unwrap();
        assert!(!rep.is_steady);
        assert!(rep.l_residual < 1e-15 && rep.k_residual > 0.1);
    }

    #[test]
    fn diagonal_coupling_basis_states() {
        let l = Operator::diagonal(&[1.0, -2.0, 0.5]);
        for k in 0..3 {
            let rep = check_pure_steady(&l, &Operator::zeros(3), &basis(3, k), 1e-12).unwrap();
            assert!(rep.is_steady);
        }
    }

    #[test]
    fn dephasing_is_not_unique() {
        let v = unique_dark_state_test(&Operator::sigma_z(), &[basis(2, 0)]).unwrap();
        assert!(matches!(v, Uniqueness::NotUnique { .. }));
    }

    #[test]
    fn qutrit_target_unique() {
        let sys = qutrit_cf(3.0, 1.0, 0.0, 0.0, None).unwrap();
        let [p1, ..] = qutrit_dark_basis(3.0, 1.0).unwrap();
        assert!(unique_dark_state_test(&sys.channels()[0], &[p1])
            .unwrap()
            .is_unique());
    }

    #[test]
    fn nilpotent_coupling() {
        // sigma_- has the single eigenvector |g>; a dark |e> is orthogonal to it.
        let v = unique_dark_state_test(&Operator::sigma_minus(), &[basis(2, 0)]).unwrap();
        assert!(matches!(v, Uniqueness::NotUnique { .. }));
        // with |g> dark the eigenbasis is incomplete
        let v = unique_dark_state_test(&Operator::sigma_minus(), &[basis(2, 1)]).unwrap();
        assert!(matches!(v, Uniqueness::Inconclusive { .. }));
    }

    #[test]
    fn symmetric_phi2() {
        let [_, p2, _] = qutrit_dark_basis(1.0, 1.0).unwrap();
        let s = 0.5f64.sqrt();
        assert!((p2[1].re - s).abs() < 1e-15 && (p2[2].re - s).abs() < 1e-15);
    }

    #[test]
    fn gains_match_closed_form() {
        let (kappa, gamma): (f64, f64) = (5.0, 2.0);
        let kg = (kappa * gamma).sqrt();
        let expected = [(-kg / 2.0, 0.0), (0.0, kg / 2.0), (0.0, kg)];
        for (t, (e1, e2)) in QutritTarget::ALL.into_iter().zip(expected) {
            let (u1, u2) = solve_qutrit_gains(t, kappa, gamma).unwrap();
            assert!(
                (u1 - e1).abs() <= 1e-12 * kg && (u2 - e2).abs() <= 1e-12 * kg,
                "{t:?}: {u1} {u2}"
            );
        }
    }

    #[test]
    fn detuning_residual_scales_linearly() {
        let (kappa, gamma) = (100.0, 1.0);
        let (u1, u2) = solve_qutrit_gains(QutritTarget::Phi1, kappa, gamma).unwrap();
        let r0 = detuning_robustness_residual(kappa, gamma, 0.0, 0.0, u1, u2, QutritTarget::Phi1)
            .unwrap();
        assert!(r0 < 1e-10);
        let d = 1e-3 * kappa;
        let r1 =
            detuning_robustness_residual(kappa, gamma, d, d, u1, u2, QutritTarget::Phi1).unwrap();
        let r2 = detuning_robustness_residual(
            kappa,
            gamma,
            2.0 * d,
            2.0 * d,
            u1,
            u2,
            QutritTarget::Phi1,
        )
        .unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-6, "{}", r2 / r1);
    }
}
