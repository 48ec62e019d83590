//! Single-mode linear quantum systems: quadratic Hamiltonian `H = x^T G x / 2`
//! and linear coupling `L = c1 q + c2 p` with `x = (q, p)`, `[q, p] = i`.
//!
//! Under vacuum input the state stays Gaussian and the first and second moments obey
//!
//! ```text
//! d<x>/dt = A <x>,      dV/dt = A V + V A^T + D,
//! A = Sigma (G + Im(C^† C)),   D = Sigma Re(C^† C) Sigma^T,   Sigma = [[0, 1], [-1, 0]].
//! ```
//!
//! Vacuum variance is 1/2.

use std::io::Write;

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector2, Vector3, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::{DensityMatrix, LindbladSystem};
use crate::operator::{r, Operator};

const TOL_HEISENBERG: f64 = 1e-8;

fn sigma() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianModel {
    g: Matrix2<f64>,
    c: [Complex64; 2],
}

impl GaussianModel {
    pub fn new(g: Matrix2<f64>, c: [Complex64; 2]) -> Result<Self> {
        if g[(0, 1)] != g[(1, 0)] {
            return Err(Error::InvalidParameter(format!(
                "G must be symmetric, got off-diagonal {} and {}",
                g[(0, 1)],
                g[(1, 0)]
            )));
        }
        Ok(Self { g, c })
    }

    pub fn g(&self) -> &Matrix2<f64> {
        &self.g
    }

    pub fn c(&self) -> [Complex64; 2] {
        self.c
    }

    /// The same `(L, H)` on a Fock space truncated to `truncation` levels.
    pub fn to_fock(&self, truncation: usize) -> Result<LindbladSystem> {
        let q = Operator::position(truncation);
        let p = Operator::momentum(truncation);
        let qp = &q * &p;
        let pq = &p * &q;
        let h = &(&(&q * &q).scale(0.5 * self.g[(0, 0)])
            + &(&qp + &pq).scale(0.5 * self.g[(0, 1)]))
            + &(&p * &p).scale(0.5 * self.g[(1, 1)]);
        let h = (&h + &h.dagger()).scale(0.5);
        let l = &q.scale_c(self.c[0]) + &p.scale_c(self.c[1]);
        LindbladSystem::new(h, vec![l])
    }
}

/// Drift `A` and diffusion `D` of the moment equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSystem {
    pub a: Matrix2<f64>,
    pub d: Matrix2<f64>,
}

impl LinearSystem {
    /// Largest real part among the eigenvalues of `A`.
    pub fn max_real_eigenvalue(&self) -> f64 {
        let tr = self.a.trace();
        let det = self.a.determinant();
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            tr / 2.0 + disc.sqrt()
        } else {
            tr / 2.0
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        self.max_real_eigenvalue() < -1e-12
    }

    /// `max |A V + V A^T + D|`.
    pub fn lyapunov_residual(&self, v: &Matrix2<f64>) -> f64 {
        (self.a * v + v * self.a.transpose() + self.d).abs().max()
    }

    /// Moment ODE on `(Vqq, Vqp, Vpp, 1)` as a homogeneous linear system.
    fn covariance_generator(&self) -> Matrix4<f64> {
        let a = &self.a;
        let d = &self.d;
        Matrix4::new(
            2.0 * a[(0, 0)],
            2.0 * a[(0, 1)],
            0.0,
            d[(0, 0)],
            a[(1, 0)],
            a[(0, 0)] + a[(1, 1)],
            a[(0, 1)],
            d[(0, 1)],
            0.0,
            2.0 * a[(1, 0)],
            2.0 * a[(1, 1)],
            d[(1, 1)],
            0.0,
            0.0,
            0.0,
            0.0,
        )
    }
}

/// Mean vector and symmetric covariance matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianState {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        Self {
            mean: Vector2::zeros(),
            cov: Matrix2::identity() * 0.5,
        }
    }

    /// Smallest eigenvalue of the Hermitian matrix `V + i Sigma / 2`; physical
    /// states have it non-negative.
    pub fn uncertainty_margin(&self) -> f64 {
        let v = &self.cov;
        let off = Complex64::new(0.5 * (v[(0, 1)] + v[(1, 0)]), 0.5);
        let mean = 0.5 * (v[(0, 0)] + v[(1, 1)]);
        let half_gap = (0.25 * (v[(0, 0)] - v[(1, 1)]).powi(2) + off.norm_sqr()).sqrt();
        mean - half_gap
    }

    pub fn satisfies_uncertainty(&self) -> bool {
        self.uncertainty_margin() >= -TOL_HEISENBERG
    }

    /// Moments of a density matrix on a truncated Fock space.
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let n = rho.dim();
        let q = Operator::position(n);
        let p = Operator::momentum(n);
        let mq = rho.expectation(&q).re;
        let mp = rho.expectation(&p).re;
        let qq = rho.expectation(&(&q * &q)).re - mq * mq;
        let pp = rho.expectation(&(&p * &p)).re - mp * mp;
        let sym = &(&q * &p) + &(&p * &q);
        let qp = 0.5 * rho.expectation(&sym).re - mq * mp;
        Self {
            mean: Vector2::new(mq, mp),
            cov: Matrix2::new(qq, qp, qp, pp),
        }
    }
}

/// `A = Sigma (G + Im(C^† C))`, `D = Sigma Re(C^† C) Sigma^T`.
pub fn build_linear_system(model: &GaussianModel) -> LinearSystem {
    let c = model.c;
    let ctc = |i: usize, j: usize| c[i].conj() * c[j];
    let re = Matrix2::new(ctc(0, 0).re, ctc(0, 1).re, ctc(1, 0).re, ctc(1, 1).re);
    let im = Matrix2::new(ctc(0, 0).im, ctc(0, 1).im, ctc(1, 0).im, ctc(1, 1).im);
    let s = sigma();
    LinearSystem {
        a: s * (model.g + im),
        d: s * re * s.transpose(),
    }
}

/// Exact moments at each requested time (`times` non-decreasing, starting at or after 0).
pub fn evolve_moments(
    sys: &LinearSystem,
    state0: &GaussianState,
    times: &[f64],
) -> Result<Vec<GaussianState>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter(
            "time grid must be non-negative and increasing".into(),
        ));
    }
    let gen = sys.covariance_generator();
    let v0 = &state0.cov;
    let z0 = Vector4::new(v0[(0, 0)], 0.5 * (v0[(0, 1)] + v0[(1, 0)]), v0[(1, 1)], 1.0);
    Ok(times
        .iter()
        .map(|&t| {
            let mean = (sys.a * t).exp() * state0.mean;
            let z = (gen * t).exp() * z0;
            GaussianState {
                mean,
                cov: Matrix2::new(z[0], z[1], z[1], z[2]),
            }
        })
        .collect())
}

/// Unique solution of `A V + V A^T + D = 0` for Hurwitz `A`.
pub fn steady_covariance(sys: &LinearSystem) -> Result<Matrix2<f64>> {
    if !sys.is_hurwitz() {
        return Err(Error::NotHurwitz {
            max_re: sys.max_real_eigenvalue(),
        });
    }
    let a = &sys.a;
    let d = &sys.d;
    let m = Matrix3::new(
        2.0 * a[(0, 0)],
        2.0 * a[(0, 1)],
        0.0,
        a[(1, 0)],
        a[(0, 0)] + a[(1, 1)],
        a[(0, 1)],
        0.0,
        2.0 * a[(1, 0)],
        2.0 * a[(1, 1)],
    );
    let rhs = -Vector3::new(d[(0, 0)], 0.5 * (d[(0, 1)] + d[(1, 0)]), d[(1, 1)]);
    let v = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov operator".into()))?;
    let cov = Matrix2::new(v[0], v[1], v[1], v[2]);
    let state = GaussianState {
        mean: Vector2::zeros(),
        cov,
    };
    if !state.satisfies_uncertainty() {
        return Err(Error::Numerical(format!(
            "steady covariance violates the uncertainty relation (margin {:.3e}); (A, D) is not physical",
            state.uncertainty_margin()
        )));
    }
    Ok(cov)
}

/// Smaller eigenvalue of a symmetric 2x2 covariance.
pub fn min_eigenvalue(v: &Matrix2<f64>) -> f64 {
    let mean = 0.5 * (v[(0, 0)] + v[(1, 1)]);
    let off = 0.5 * (v[(0, 1)] + v[(1, 0)]);
    mean - (0.25 * (v[(0, 0)] - v[(1, 1)]).powi(2) + off * off).sqrt()
}

/// `-10 log10(lambda_min(V) / (1/2))`; positive means squeezed below vacuum.
pub fn squeezing_db(v: &Matrix2<f64>) -> f64 {
    10.0 * (0.5 / min_eigenvalue(v)).log10()
}

/// `Tr(rho^2) = 1 / sqrt(4 det V)` for a Gaussian state.
pub fn gaussian_purity(v: &Matrix2<f64>) -> f64 {
    1.0 / (4.0 * v.determinant()).sqrt()
}

/// CSV `t,Vqq,Vpp,Vqp,dB`.
pub fn write_moments_csv<W: Write>(times: &[f64], states: &[GaussianState], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "Vqq", "Vpp", "Vqp", "dB"])?;
    for (t, s) in times.iter().zip(states) {
        w.write_record([
            t.to_string(),
            s.cov[(0, 0)].to_string(),
            s.cov[(1, 1)].to_string(),
            s.cov[(0, 1)].to_string(),
            squeezing_db(&s.cov).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `[c1, i c2]`.
pub(crate) fn complex_pair(c1: f64, c2_im: f64) -> [Complex64; 2] {
    [r(c1), Complex64::new(0.0, c2_im)]
}
