//! Random instances shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use cohfeed::{Operator, SlhTriple};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_c<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix scaled to unit entry variance over `dim`.
pub fn random_matrix<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let scale = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |_, _| gaussian_c(rng) * scale)
}

pub fn random_operator<R: Rng>(dim: usize, rng: &mut R) -> Operator {
    Operator::new(random_matrix(dim, rng)).unwrap()
}

pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> Operator {
    let m = random_matrix(dim, rng);
    Operator::new((&m + m.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

pub fn random_unit_vector<R: Rng>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| gaussian_c(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

pub fn random_triple<R: Rng>(dim: usize, rng: &mut R) -> SlhTriple {
    let s = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
    SlhTriple::new(s, random_operator(dim, rng), random_hermitian(dim, rng)).unwrap()
}

/// Largest entry-wise difference between two triples (scattering included).
pub fn triple_distance(a: &SlhTriple, b: &SlhTriple) -> f64 {
    (a.s() - b.s())
        .norm()
        .max(a.l().max_abs_diff(b.l()))
        .max(a.h().max_abs_diff(b.h()))
}

/// A single-channel system `(L, H)` built so that `psi` is a common eigenvector
/// of `L` and `iH + L^† L / 2`, and therefore a pure stationary state.
///
/// `L = lambda psi psi^† + X (1 - psi psi^†)` makes `psi` an eigenvector of `L`.
/// With `v = L^† L psi / 2`, choosing `H psi = w := -i (mu psi - v)` makes it an
/// eigenvector of `K`; `mu = |lambda|^2 / 2 + i r` keeps `<psi|w> = r` real, so
/// `H = w psi^† + psi w^† - r psi psi^† + P R P` (`P` the complement projector)
/// is Hermitian with `H psi = w`.
pub struct Planted {
    pub l: Operator,
    pub h: Operator,
    pub psi: DVector<Complex64>,
}

pub fn planted_system<R: Rng>(dim: usize, rng: &mut R) -> Planted {
    let i = Complex64::i();
    let psi = random_unit_vector(dim, rng);
    let proj = &psi * psi.adjoint();
    let comp = DMatrix::<Complex64>::identity(dim, dim) - &proj;
    let lambda = gaussian_c(rng);
    let l = &proj * lambda + random_matrix(dim, rng) * &comp;
    let v = l.adjoint() * (&l * &psi) * Complex64::new(0.5, 0.0);
    let rr: f64 = rng.sample(StandardNormal);
    let mu = Complex64::new(0.5 * lambda.norm_sqr(), rr);
    let w = -(&psi * mu - &v) * i;
    let h = &w * psi.adjoint() + &psi * w.adjoint() - &proj * Complex64::new(rr, 0.0)
        + &comp * random_hermitian(dim, rng).matrix() * &comp;
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    Planted {
        l: Operator::new(l).unwrap(),
        h: Operator::new(h).unwrap(),
        psi,
    }
}
