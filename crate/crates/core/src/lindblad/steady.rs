use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{liouvillian_matrix, unvectorize, DensityMatrix, LindbladSystem, LIOUVILLIAN_CAP};
use crate::error::{Error, Result};
use crate::operator::r;

/// How the Liouvillian kernel is extracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteadyMethod {
    /// Full SVD: kernel dimension from the singular values, state from the
    /// smallest right singular vector.
    Svd,
    /// LU solve of the generator with one redundant row replaced by the trace
    /// condition. Cubic in `dim^2` with a much smaller constant than the SVD.
    TraceConstrainedLu,
    /// SVD up to `svd_max_dim`, LU above.
    Auto,
}

#[derive(Clone, Debug)]
pub struct SteadyStateConfig {
    pub method: SteadyMethod,
    pub svd_max_dim: usize,
    pub cap: usize,
    /// Singular values (or LU pivots) below `kernel_tol * max` count as zero.
    pub kernel_tol: f64,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        Self {
            method: SteadyMethod::Auto,
            svd_max_dim: 24,
            cap: LIOUVILLIAN_CAP,
            kernel_tol: 1e-10,
        }
    }
}

pub fn steady_state(sys: &LindbladSystem) -> Result<DensityMatrix> {
    steady_state_with(sys, &SteadyStateConfig::default())
}

/// Unique stationary state of the master equation, Hermitized, projected onto
/// the PSD cone and normalized to unit trace.
pub fn steady_state_with(sys: &LindbladSystem, cfg: &SteadyStateConfig) -> Result<DensityMatrix> {
    let d = sys.dim();
    let m = liouvillian_matrix(sys, cfg.cap)?;
    let use_svd = match cfg.method {
        SteadyMethod::Svd => true,
        SteadyMethod::TraceConstrainedLu => false,
        SteadyMethod::Auto => d <= cfg.svd_max_dim,
    };
    let v = if use_svd {
        svd_kernel_vector(m, cfg.kernel_tol)?
    } else {
        lu_kernel_vector(m, d, cfg.kernel_tol)?
    };
    finish(unvectorize(&v, d))
}

/// Number of singular values of the vectorized Liouvillian below `1e-10 * sigma_max`.
pub fn kernel_dimension(sys: &LindbladSystem) -> Result<usize> {
    let m = liouvillian_matrix(sys, LIOUVILLIAN_CAP)?;
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    Ok(sv.iter().filter(|&&s| s < 1e-10 * max).count())
}

fn svd_kernel_vector(m: DMatrix<Complex64>, tol: f64) -> Result<DVector<Complex64>> {
    let svd = m.svd(false, true);
    let sv = &svd.singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let kernel_dim = sv.iter().filter(|&&s| s < tol * max).count();
    if kernel_dim > 1 {
        return Err(Error::DegenerateKernel { kernel_dim });
    }
    let idx = sv.imin();
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return V^H".into()))?;
    Ok(v_t.row(idx).adjoint())
}

fn lu_kernel_vector(mut m: DMatrix<Complex64>, d: usize, tol: f64) -> Result<DVector<Complex64>> {
    // Row 0 is the equation for d rho_00/dt; the diagonal rows sum to zero
    // (trace preservation), so it is redundant and can carry Tr(rho) = 1.
    let n = d * d;
    m.row_mut(0).fill(r(0.0));
    for i in 0..d {
        m[(0, i + i * d)] = r(1.0);
    }
    let mut rhs = DVector::zeros(n);
    rhs[0] = r(1.0);
    let lu = m.lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let max = pivots.iter().copied().fold(0.0, f64::max);
    let small = pivots.iter().filter(|&&p| p < tol * max).count();
    if small > 0 {
        return Err(Error::DegenerateKernel {
            kernel_dim: small + 1,
        });
    }
    lu.solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular trace-constrained generator".into()))
}

fn finish(raw: DMatrix<Complex64>) -> Result<DensityMatrix> {
    let tr = raw.trace();
    if tr.norm() < 1e-300 {
        return Err(Error::Numerical("kernel vector has zero trace".into()));
    }
    let scaled = raw / tr;
    let herm = (&scaled + scaled.adjoint()) * r(0.5);
    let eig = SymmetricEigen::new(herm.clone());
    let projected = if eig.eigenvalues.iter().any(|&l| l < 0.0) {
        let clipped = eig.eigenvalues.map(|l| r(l.max(0.0)));
        let v = &eig.eigenvectors;
        v * DMatrix::from_diagonal(&clipped) * v.adjoint()
    } else {
        herm
    };
    let tr = projected.trace();
    let rho = &projected / tr;
    // Hermitian part again: the eigen reconstruction leaves ulp-level asymmetry.
    Ok(DensityMatrix::from_matrix_unchecked(
        (&rho + rho.adjoint()) * r(0.5),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::liouvillian_apply;
    use crate::operator::Operator;

    #[test]
    fn amplified_decay_reaches_ground() {
        let sys = LindbladSystem::new(
            Operator::sigma_z().scale(0.3),
            vec![Operator::sigma_minus()],
        )
        .unwrap();
        let rho = steady_state(&sys).unwrap();
        assert!((rho.population(1) - 1.0).abs() < 1e-12);
        assert!(liouvillian_apply(&sys, &rho).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn detailed_balance_thermal_state() {
        // emission rate 1, absorption rate 0.25 -> p_e / p_g = 0.25
        let sys = LindbladSystem::new(
            Operator::zeros(2),
            vec![Operator::sigma_minus(), Operator::sigma_plus().scale(0.5)],
        )
        .unwrap();
        for method in [SteadyMethod::Svd, SteadyMethod::TraceConstrainedLu] {
            let cfg = SteadyStateConfig {
                method,
                ..Default::default()
            };
            let rho = steady_state_with(&sys, &cfg).unwrap();
            assert!((rho.population(0) - 0.2).abs() < 1e-12);
            assert!((rho.population(1) - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_kernel_reported() {
        let sys = LindbladSystem::new(Operator::zeros(2), vec![Operator::sigma_z()]).unwrap();
        assert_eq!(kernel_dimension(&sys).unwrap(), 2);
        for method in [SteadyMethod::Svd, SteadyMethod::TraceConstrainedLu] {
            let cfg = SteadyStateConfig {
                method,
                ..Default::default()
            };
            match steady_state_with(&sys, &cfg) {
                Err(Error::DegenerateKernel { kernel_dim }) => assert_eq!(kernel_dim, 2),
                other => panic!("expected degenerate kernel, got {other:?}"),
            }
        }
    }
}
