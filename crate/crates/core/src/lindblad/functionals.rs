use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::operator::{c, r};

/// `<psi|rho|psi>`, clamped to `[0, 1]`.
pub fn fidelity(psi: &DVector<Complex64>, rho: &DensityMatrix) -> Result<f64> {
    if psi.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "target vector must be normalized, |psi| = {norm}"
        )));
    }
    let f = (psi.adjoint() * rho.matrix() * psi)[(0, 0)];
    Ok(f.re.clamp(0.0, 1.0))
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// `||rho - sigma||_1 / 2`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let diff = rho.matrix() - sigma.matrix();
    let herm = (&diff + diff.adjoint()) * r(0.5);
    Ok(0.5
        * SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .sum::<f64>())
}

/// `(x, y, z)` with `rho = (I + x X + y Y + z Z) / 2` in the `[|e>, |g>]` basis.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<[f64; 3]> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    let m = rho.matrix();
    let off = m[(0, 1)];
    Ok([2.0 * off.re, -2.0 * off.im, m[(0, 0)].re - m[(1, 1)].re])
}

/// Coherent state `|alpha>` expanded on the first `truncation` Fock states
/// (not renormalized after truncation).
pub fn coherent_state(alpha: Complex64, truncation: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(truncation);
    let mut amp = r((-0.5 * alpha.norm_sqr()).exp());
    for n in 0..truncation {
        if n > 0 {
            amp *= alpha / (n as f64).sqrt();
        }
        v[n] = amp;
    }
    v
}

/// Rectangular grid of complex amplitudes `re + i im`.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl PhaseGrid {
    /// `points x points` grid on `[-extent, extent]^2`.
    pub fn square(extent: f64, points: usize) -> Self {
        let axis: Vec<f64> = (0..points)
            .map(|k| {
                if points == 1 {
                    0.0
                } else {
                    -extent + 2.0 * extent * k as f64 / (points - 1) as f64
                }
            })
            .collect();
        Self {
            re: axis.clone(),
            im: axis,
        }
    }

    fn spacing(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            0.0
        } else {
            (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
        }
    }
}

/// Husimi function sampled on a [`PhaseGrid`]; `values[i][j]` is at `re[i] + i im[j]`.
#[derive(Clone, Debug)]
pub struct QGrid {
    pub grid: PhaseGrid,
    pub values: Vec<Vec<f64>>,
}

impl QGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Trapezoidal estimate of `∫ Q d^2 alpha` over the grid.
    pub fn integral(&self) -> f64 {
        let (hx, hy) = (
            PhaseGrid::spacing(&self.grid.re),
            PhaseGrid::spacing(&self.grid.im),
        );
        let (nx, ny) = (self.grid.re.len(), self.grid.im.len());
        let w = |k: usize, n: usize| if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let mut sum = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                sum += w(i, nx) * w(j, ny) * self.values[i][j];
            }
        }
        sum * hx * hy
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV `re_alpha,im_alpha,q`, one row per grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re_alpha", "im_alpha", "q"])?;
        for (i, x) in self.grid.re.iter().enumerate() {
            for (j, y) in self.grid.im.iter().enumerate() {
                w.write_record([x.to_string(), y.to_string(), self.values[i][j].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `Q(alpha) = <alpha|rho|alpha> / pi` on a Fock-truncated state.
///
/// Points with `|alpha|^2 > N/2` are rejected: the truncated coherent state
/// no longer represents `|alpha>` faithfully there.
pub fn q_function(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<QGrid> {
    let n = rho.dim();
    let limit = n as f64 / 2.0;
    for &x in &grid.re {
        for &y in &grid.im {
            let alpha_sq = x * x + y * y;
            if alpha_sq > limit * (1.0 + 1e-12) {
                return Err(Error::TruncationUnsafe {
                    alpha_sq,
                    limit,
                    truncation: n,
                });
            }
        }
    }
    let values = grid
        .re
        .iter()
        .map(|&x| {
            grid.im
                .iter()
                .map(|&y| {
                    let a = coherent_state(c(x, y), n);
                    let q = (a.adjoint() * rho.matrix() * &a)[(0, 0)].re / PI;
                    q.max(0.0)
                })
                .collect()
        })
        .collect();
    Ok(QGrid {
        grid: grid.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::basis;

    #[test]
    fn basis_fidelities() {
        let rho0 = DensityMatrix::basis(3, 0);
        assert_eq!(fidelity(&basis(3, 0), &rho0).unwrap(), 1.0);
        assert_eq!(fidelity(&basis(3, 1), &rho0).unwrap(), 0.0);
        assert!(fidelity(&(basis(3, 1) * r(2.0)), &rho0).is_err());
        assert!(fidelity(&basis(2, 1), &rho0).is_err());
    }

    #[test]
    fn purity_extremes() {
        assert!((purity(&DensityMatrix::basis(4, 2)) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed(3)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bloch_vectors() {
        assert_eq!(
            bloch_vector(&DensityMatrix::basis(2, 0)).unwrap(),
            [0.0, 0.0, 1.0]
        );
        assert_eq!(
            bloch_vector(&DensityMatrix::maximally_mixed(2)).unwrap(),
            [0.0, 0.0, 0.0]
        );
        // rho_eg = -i/2 for (|e> + i|g>)/sqrt(2), i.e. +y
        let psi = crate::operator::ket(&[r(1.0), c(0.0, 1.0)]);
        let b = bloch_vector(&DensityMatrix::pure(&psi)).unwrap();
        assert!((b[0]).abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-15 && b[2].abs() < 1e-15);
        assert!(bloch_vector(&DensityMatrix::basis(3, 0)).is_err());
    }

    #[test]
    fn vacuum_husimi_closed_form() {
        let rho = DensityMatrix::basis(70, 0);
        let grid = PhaseGrid::square(4.0, 41);
        let q = q_function(&rho, &grid).unwrap();
        assert!((q.at(20, 20) - 1.0 / PI).abs() < 1e-15);
        for (i, x) in grid.re.iter().enumerate().step_by(7) {
            for (j, y) in grid.im.iter().enumerate().step_by(5) {
                let expected = (-(x * x + y * y)).exp() / PI;
                assert!((q.at(i, j) - expected).abs() < 1e-14);
            }
        }
        assert!((q.integral() - 1.0).abs() < 1e-6, "{}", q.integral());
    }

    #[test]
    fn truncation_guard() {
        let rho = DensityMatrix::basis(8, 0);
        assert!(q_function(&rho, &PhaseGrid::square(1.4, 3)).is_ok());
        assert!(matches!(
            q_function(&rho, &PhaseGrid::square(1.5, 3)),
            Err(Error::TruncationUnsafe { truncation: 8, .. })
        ));
    }

    #[test]
    fn trace_distance_orthogonal() {
        let d = trace_distance(&DensityMatrix::basis(2, 0), &DensityMatrix::basis(2, 1)).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }
}
