//! SLH triples for single-channel open systems and their cascade composition.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{r, Operator, I};

const TOL_UNIT: f64 = 1e-10;

/// `(S, L, H)` with a scalar scattering coefficient: one probe field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripleRepr", into = "TripleRepr")]
pub struct SlhTriple {
    s: Complex64,
    l: Operator,
    h: Operator,
}

impl SlhTriple {
    pub fn new(s: Complex64, l: Operator, h: Operator) -> Result<Self> {
        if (s.norm() - 1.0).abs() > TOL_UNIT {
            return Err(Error::NonUnitScattering { modulus: s.norm() });
        }
        h.require_dim(l.dim())?;
        h.require_hermitian("Hamiltonian")?;
        Ok(Self { s, l, h })
    }

    /// `(1, L, H)`.
    pub fn open_system(l: Operator, h: Operator) -> Result<Self> {
        Self::new(r(1.0), l, h)
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub fn l(&self) -> &Operator {
        &self.l
    }

    pub fn h(&self) -> &Operator {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn into_parts(self) -> (Complex64, Operator, Operator) {
        (self.s, self.l, self.h)
    }

    /// `self ▷ next`: the field leaving `self` drives `next`.
    pub fn then(&self, next: &SlhTriple) -> Result<SlhTriple> {
        series_product(self, next)
    }
}

/// Cascade `g1 ▷ g2` through one field, both systems on the same Hilbert space:
///
/// `(s2 s1, l2 + s2 l1, h1 + h2 + (l2^† s2 l1 - l1^† s2^* l2) / 2i)`.
pub fn series_product(g1: &SlhTriple, g2: &SlhTriple) -> Result<SlhTriple> {
    g2.l.require_dim(g1.dim())?;
    let s = g2.s * g1.s;
    if (s.norm() - 1.0).abs() > TOL_UNIT {
        return Err(Error::NonUnitScattering { modulus: s.norm() });
    }
    let l = &g2.l + &g1.l.scale_c(g2.s);
    let cross = (&g2.l.dagger() * &g1.l).scale_c(g2.s);
    // (X - X^dagger) / 2i is Hermitian by construction.
    let correction = (&cross - &cross.dagger()).scale_c(r(0.5) / I);
    let h = &(&g1.h + &g2.h) + &correction;
    Ok(SlhTriple { s, l, h })
}

/// Static phase shift `e^{i phi}` on the field, acting trivially on a `dim`-dimensional system.
pub fn phase_shifter(phi: f64, dim: usize) -> SlhTriple {
    SlhTriple {
        s: Complex64::from_polar(1.0, phi),
        l: Operator::zeros(dim),
        h: Operator::zeros(dim),
    }
}

/// Coherent feedback loop: dispersive coupling `l1` (Hermitian), a phase shifter
/// `e^{i phi}` on the returning field, then the dissipative coupling `l2`:
///
/// `(1, l1, h_sys) ▷ (e^{i phi}, 0, 0) ▷ (1, l2, 0)`
///
/// which gives `L = l2 + e^{i phi} l1` and
/// `H = h_sys + (e^{i phi} l2^† l1 - e^{-i phi} l1 l2) / 2i`.
pub fn coherent_feedback(
    l1: &Operator,
    l2: &Operator,
    h_sys: &Operator,
    phi: f64,
) -> Result<SlhTriple> {
    let dim = l1.dim();
    l2.require_dim(dim)?;
    h_sys.require_dim(dim)?;
    l1.require_hermitian("dispersive coupling l1")?;
    h_sys.require_hermitian("system Hamiltonian")?;

    let phase = Complex64::from_polar(1.0, phi);
    let l = l2 + &l1.scale_c(phase);
    let forward = (&l2.dagger() * l1).scale_c(phase);
    let backward = (l1 * l2).scale_c(phase.conj());
    let h = h_sys + &(&forward - &backward).scale_c(r(0.5) / I);
    // Round-off can leave the assembled Hamiltonian a few ulps away from Hermitian.
    let h = (&h + &h.dagger()).scale(0.5);
    // The output field is rotated by the phase shifter.
    Ok(SlhTriple { s: phase, l, h })
}

#[derive(Serialize, Deserialize)]
struct ComplexRepr {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    s: ComplexRepr,
    l: Operator,
    h: Operator,
}

impl TryFrom<TripleRepr> for SlhTriple {
    type Error = String;
    fn try_from(t: TripleRepr) -> std::result::Result<Self, String> {
        SlhTriple::new(Complex64::new(t.s.re, t.s.im), t.l, t.h).map_err(|e| e.to_string())
    }
}

impl From<SlhTriple> for TripleRepr {
    fn from(t: SlhTriple) -> Self {
        TripleRepr {
            s: ComplexRepr {
                re: t.s.re,
                im: t.s.im,
            },
            l: t.l,
            h: t.h,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c;
    use std::f64::consts::PI;

    fn qubit_feedback(kappa: f64, gamma: f64, phi: f64) -> SlhTriple {
        coherent_feedback(
            &Operator::sigma_z().scale(kappa.sqrt()),
            &Operator::sigma_minus().scale(gamma.sqrt()),
            &Operator::zeros(2),
            phi,
        )
        .unwrap()
    }

    #[test]
    fn trivial_system_is_identity_of_product() {
        let l1 = Operator::from_real_rows(&[&[0.3, 1.0], &[-0.2, 0.7]]).unwrap();
        let h1 = Operator::from_real_rows(&[&[1.0, 0.5], &[0.5, -2.0]]).unwrap();
        let g1 = SlhTriple::open_system(l1.clone(), h1.clone()).unwrap();
        let id = SlhTriple::open_system(Operator::zeros(2), Operator::zeros(2)).unwrap();
        let out = series_product(&g1, &id).unwrap();
        assert_eq!(out.s(), r(1.0));
        assert!(out.l().max_abs_diff(&l1) < 1e-15);
        assert!(out.h().max_abs_diff(&h1) < 1e-15);
    }

    #[test]
    fn qubit_feedback_matches_printed_matrices() {
        for &(kappa, gamma, phi) in &[(1.0, 1.0, 0.0), (2.5, 0.7, 0.9), (0.3, 4.0, -2.2)] {
            let g = qubit_feedback(kappa, gamma, phi);
            let e = Complex64::from_polar(1.0, phi);
            let (sk, sg) = (r(kappa.sqrt()), r(gamma.sqrt()));
            let l = Operator::from_rows(&[vec![e * sk, r(0.0)], vec![sg, -e * sk]]).unwrap();
            let pref = r((kappa * gamma).sqrt()) / (I * 2.0);
            let h = Operator::from_rows(&[vec![r(0.0), -e * pref], vec![e.conj() * pref, r(0.0)]])
                .unwrap();
            assert!(g.l().max_abs_diff(&l) < 1e-12);
            assert!(g.h().max_abs_diff(&h) < 1e-12);
        }
    }

    #[test]
    fn feedback_equals_cascade_with_phase_shifter() {
        let l1 =
            Operator::from_real_rows(&[&[1.0, 0.2, 0.0], &[0.2, 0.0, -0.4], &[0.0, -0.4, -1.0]])
                .unwrap();
        let l2 = Operator::from_rows(&[
            vec![r(0.0), c(0.1, 0.3), r(0.0)],
            vec![r(1.2), r(0.0), r(0.0)],
            vec![r(0.0), c(0.5, -0.5), r(0.0)],
        ])
        .unwrap();
        let h = Operator::from_real_rows(&[&[0.5, 0.0, 0.1], &[0.0, 0.0, 0.0], &[0.1, 0.0, -0.3]])
            .unwrap();
        for phi in [0.0, 0.4, PI / 2.0, PI, -2.0] {
            let direct = coherent_feedback(&l1, &l2, &h, phi).unwrap();
            let chain = SlhTriple::open_system(l1.clone(), h.clone())
                .unwrap()
                .then(&phase_shifter(phi, 3))
                .unwrap()
                .then(&SlhTriple::open_system(l2.clone(), Operator::zeros(3)).unwrap())
                .unwrap();
            assert!((direct.s() - chain.s()).norm() < 1e-12);
            assert!(direct.l().max_abs_diff(chain.l()) < 1e-12);
            assert!(direct.h().max_abs_diff(chain.h()) < 1e-12);
        }
    }

    #[test]
    fn phase_shifter_values() {
        assert!((phase_shifter(0.0, 2).s() - r(1.0)).norm() < 1e-15);
        assert!((phase_shifter(PI, 2).s() - r(-1.0)).norm() < 1e-15);
        assert_eq!(phase_shifter(PI, 4).l(), &Operator::zeros(4));
    }

    #[test]
    fn zero_dispersive_coupling_is_pure_decay() {
        let l2 = Operator::sigma_minus().scale(2.0);
        let g = coherent_feedback(&Operator::zeros(2), &l2, &Operator::zeros(2), 1.3).unwrap();
        assert!(g.l().max_abs_diff(&l2) < 1e-15);
        assert!(g.h().max_abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_dispersive_coupling_rejected() {
        let err = coherent_feedback(
            &Operator::sigma_minus(),
            &Operator::sigma_z(),
            &Operator::zeros(2),
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
        assert!(err.to_string().contains("l1"));
    }

    #[test]
    fn construction_errors() {
        let z2 = Operator::zeros(2);
        assert!(matches!(
            SlhTriple::new(r(1.1), z2.clone(), z2.clone()),
            Err(Error::NonUnitScattering { .. })
        ));
        assert!(matches!(
            SlhTriple::new(r(1.0), z2.clone(), Operator::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            SlhTriple::new(r(1.0), z2.clone(), Operator::sigma_minus()),
            Err(Error::NotHermitian { .. })
        ));
        let g2 = phase_shifter(0.0, 2);
        let g3 = phase_shifter(0.0, 3);
        assert!(matches!(
            series_product(&g2, &g3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn triple_json_round_trip() {
        let g = qubit_feedback(1.0, 2.0, 0.3);
        let text = serde_json::to_string(&g).unwrap();
        let back: SlhTriple = serde_json::from_str(&text).unwrap();
        assert!(back.h().max_abs_diff(g.h()) < 1e-15);
        let bad = text.replace("\"s\":{\"re\":", "\"s\":{\"re\":2.0,\"x\":");
        assert!(serde_json::from_str::<SlhTriple>(&bad).is_err());
    }
}
