//! Prebuilt coherent-feedback systems: qubit, qutrit, spin squeezing and Fock
//! state generation, each in its ideal form and with the usual imperfections.

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{complex_pair, GaussianModel};
use crate::lindblad::LindbladSystem;
use crate::operator::{c, ket, r, Operator};
use crate::slh::{coherent_feedback, phase_shifter, series_product, SlhTriple};

/// Deviations from the ideal setup. Unused fields stay at zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImperfectionSpec {
    /// Qubit detuning, `H_delta = delta sigma_z`.
    pub delta: f64,
    /// Qutrit detunings, `H_delta = delta1 |1><1| + delta2 |2><2|`.
    pub delta1: f64,
    pub delta2: f64,
    /// Photon leakage `sqrt(eps) a` (Fock model).
    pub eps: f64,
    /// Extra decay channels: qubit `sqrt(eps1) sigma_-`, `sqrt(eps2) sigma_z`;
    /// qutrit `sqrt(eps1) |2><1|`, `sqrt(eps2) |3><2|`.
    pub eps1: f64,
    pub eps2: f64,
    /// Relative drive-gain error: `u -> (1 + gain_mismatch) u`.
    pub gain_mismatch: f64,
}

impl ImperfectionSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a non-negative rate, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("delta", self.delta),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if !(self.gain_mismatch.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gain_mismatch must satisfy |Delta| < 1, got {}",
                self.gain_mismatch
            )));
        }
        Ok(())
    }
}

fn require_rates(pairs: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in pairs {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be a positive rate, got {v}"
            )));
        }
    }
    Ok(())
}

fn add_channel_if(sys: LindbladSystem, rate: f64, op: Operator) -> Result<LindbladSystem> {
    if rate > 0.0 {
        sys.with_channel(op.scale(rate.sqrt()))
    } else {
        Ok(sys)
    }
}

// ---------------------------------------------------------------- qubit

/// Dispersive `sqrt(kappa) sigma_z` followed by decay `sqrt(gamma) sigma_-`.
pub fn qubit_cf_triple(kappa: f64, gamma: f64, phi: f64) -> Result<SlhTriple> {
    coherent_feedback(
        &Operator::sigma_z().scale(kappa.sqrt()),
        &Operator::sigma_minus().scale(gamma.sqrt()),
        &Operator::zeros(2),
        phi,
    )
}

/// Qubit under coherent feedback; imperfections add `delta sigma_z` to the
/// Hamiltonian and the channels `sqrt(eps1) sigma_-`, `sqrt(eps2) sigma_z`.
pub fn qubit_cf(
    kappa: f64,
    gamma: f64,
    phi: f64,
    imperfection: Option<&ImperfectionSpec>,
) -> Result<LindbladSystem> {
    require_rates(&[("gamma", gamma)])?;
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be >= 0, got {kappa}"
        )));
    }
    let mut sys = LindbladSystem::from_slh(&qubit_cf_triple(kappa, gamma, phi)?);
    if let Some(imp) = imperfection {
        imp.validate()?;
        sys = sys.with_hamiltonian_term(&Operator::sigma_z().scale(imp.delta))?;
        sys = add_channel_if(sys, imp.eps1, Operator::sigma_minus())?;
        sys = add_channel_if(sys, imp.eps2, Operator::sigma_z())?;
    }
    Ok(sys)
}

/// Pure steady state `(2 e^{i phi} sqrt(kappa), sqrt(gamma)) / sqrt(4 kappa + gamma)`.
pub fn qubit_target(kappa: f64, gamma: f64, phi: f64) -> DVector<Complex64> {
    let norm = (4.0 * kappa + gamma).sqrt();
    DVector::from_vec(vec![
        Complex64::from_polar(2.0 * kappa.sqrt() / norm, phi),
        r(gamma.sqrt() / norm),
    ])
}

/// Bloch `z` of the target: `(4 kappa/gamma - 1) / (4 kappa/gamma + 1)`.
pub fn qubit_target_z(kappa: f64, gamma: f64) -> f64 {
    let x = 4.0 * kappa / gamma;
    (x - 1.0) / (x + 1.0)
}

/// Inverse of [`qubit_target_z`]: `kappa = gamma (1 + z) / (4 (1 - z))`, for `z` in `[-1, 1)`.
pub fn qubit_kappa_for_z(z: f64, gamma: f64) -> Result<f64> {
    if !(-1.0..1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!(
            "target z must lie in [-1, 1), got {z}"
        )));
    }
    Ok(gamma * (1.0 + z) / (4.0 * (1.0 - z)))
}

/// The couplings in the opposite order: decay first, then the dispersive probe.
pub fn qubit_wrong_order(kappa: f64, gamma: f64, phi: f64) -> Result<LindbladSystem> {
    let first = SlhTriple::open_system(
        Operator::sigma_minus().scale(gamma.sqrt()),
        Operator::zeros(2),
    )?;
    let second =
        SlhTriple::open_system(Operator::sigma_z().scale(kappa.sqrt()), Operator::zeros(2))?;
    let g = series_product(&series_product(&first, &phase_shifter(phi, 2))?, &second)?;
    Ok(LindbladSystem::from_slh(&g))
}

// ---------------------------------------------------------------- qutrit

/// Qutrit targets: the three eigenvectors of the closed-loop coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QutritTarget {
    Phi1,
    Phi2,
    Phi3,
}

impl QutritTarget {
    pub const ALL: [QutritTarget; 3] = [QutritTarget::Phi1, QutritTarget::Phi2, QutritTarget::Phi3];

    /// Index of the basis state `|1>, |2>, |3>` the target approaches for `kappa >> gamma`.
    pub fn level(self) -> usize {
        match self {
            QutritTarget::Phi1 => 0,
            QutritTarget::Phi2 => 1,
            QutritTarget::Phi3 => 2,
        }
    }

    /// Parses `1`, `2`, `3` or `Phi1`.. (case-insensitive).
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().trim_start_matches("phi") {
            "1" => Some(QutritTarget::Phi1),
            "2" => Some(QutritTarget::Phi2),
            "3" => Some(QutritTarget::Phi3),
            _ => None,
        }
    }
}

/// `(L1, L2)`: dispersive `sqrt(kappa) diag(1, 0, -1)` and ladder decay
/// `sqrt(gamma) (|2><1| + |3><2|)`.
pub fn qutrit_couplings(kappa: f64, gamma: f64) -> (Operator, Operator) {
    let l1 = Operator::diagonal(&[1.0, 0.0, -1.0]).scale(kappa.sqrt());
    let l2 = (&Operator::transition(3, 1, 0) + &Operator::transition(3, 2, 1)).scale(gamma.sqrt());
    (l1, l2)
}

/// `u1 i(|2><1| - |1><2|) + u2 i(|3><2| - |2><3|)`.
pub fn qutrit_drive(u1: f64, u2: f64) -> Operator {
    let x12 = &Operator::transition(3, 1, 0) - &Operator::transition(3, 0, 1);
    let x23 = &Operator::transition(3, 2, 1) - &Operator::transition(3, 1, 2);
    &x12.scale_c(c(0.0, u1)) + &x23.scale_c(c(0.0, u2))
}

/// Qutrit under coherent feedback (`phi = 0`) with drive gains `(u1, u2)`.
/// Gain mismatch rescales both gains; detunings and extra decay channels are
/// added on top.
pub fn qutrit_cf(
    kappa: f64,
    gamma: f64,
    u1: f64,
    u2: f64,
    imperfection: Option<&ImperfectionSpec>,
) -> Result<LindbladSystem> {
    require_rates(&[("kappa", kappa), ("gamma", gamma)])?;
    let scale = match imperfection {
        Some(imp) => {
            imp.validate()?;
            1.0 + imp.gain_mismatch
        }
        None => 1.0,
    };
    let (l1, l2) = qutrit_couplings(kappa, gamma);
    let g = coherent_feedback(&l1, &l2, &qutrit_drive(scale * u1, scale * u2), 0.0)?;
    let mut sys = LindbladSystem::from_slh(&g);
    if let Some(imp) = imperfection {
        let h_delta = Operator::diagonal(&[imp.delta1, imp.delta2, 0.0]);
        sys = sys.with_hamiltonian_term(&h_delta)?;
        sys = add_channel_if(sys, imp.eps1, Operator::transition(3, 1, 0))?;
        sys = add_channel_if(sys, imp.eps2, Operator::transition(3, 2, 1))?;
    }
    Ok(sys)
}

/// `(Phi1, Phi2, Phi3)` normalized: `[2 kappa, 2 sqrt(kappa gamma), gamma]`,
/// `[0, sqrt(kappa), sqrt(gamma)]` and `|3>`.
pub fn qutrit_eigenbasis(kappa: f64, gamma: f64) -> [DVector<Complex64>; 3] {
    let kg = (kappa * gamma).sqrt();
    [
        ket(&[r(2.0 * kappa), r(2.0 * kg), r(gamma)]),
        ket(&[r(0.0), r(kappa.sqrt()), r(gamma.sqrt())]),
        ket(&[r(0.0), r(0.0), r(1.0)]),
    ]
}

// ---------------------------------------------------------------- spin squeezing

/// Sequence of the dispersive and dissipative couplings along the loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingOrder {
    /// Dispersive `sqrt(kappa) q` first, then decay.
    Normal,
    /// Decay first, then the dispersive coupling.
    Wrong,
}

/// Bosonized collective spin: `L = (sqrt(kappa) + sqrt(gamma)) q + i sqrt(gamma) p`
/// and `H = -+ sqrt(kappa gamma) (qp + pq) / 2` for the normal / wrong order.
pub fn spin_squeezing_model(kappa: f64, gamma: f64, order: CouplingOrder) -> Result<GaussianModel> {
    require_rates(&[("kappa", kappa), ("gamma", gamma)])?;
    let kg = (kappa * gamma).sqrt();
    let off = match order {
        CouplingOrder::Normal => -kg,
        CouplingOrder::Wrong => kg,
    };
    GaussianModel::new(
        Matrix2::new(0.0, off, off, 0.0),
        complex_pair(kappa.sqrt() + gamma.sqrt(), gamma.sqrt()),
    )
}

// ---------------------------------------------------------------- Fock state

/// Cavity with cross-Kerr probe `sqrt(kappa) n`, decay `sqrt(gamma) a` and
/// displacement drive `i g (a^† - a)`; optional leakage `sqrt(epsilon) a`.
pub fn fock_cf(
    kappa: f64,
    gamma: f64,
    g: f64,
    truncation: usize,
    epsilon: Option<f64>,
) -> Result<LindbladSystem> {
    require_rates(&[("kappa", kappa), ("gamma", gamma)])?;
    if truncation < 10 {
        return Err(Error::InvalidParameter(format!(
            "Fock truncation must be at least 10, got {truncation}"
        )));
    }
    let a = Operator::annihilation(truncation);
    let drive = (&a.dagger() - &a).scale_c(c(0.0, g));
    let triple = coherent_feedback(
        &Operator::number(truncation).scale(kappa.sqrt()),
        &a.scale(gamma.sqrt()),
        &drive,
        0.0,
    )?;
    let sys = LindbladSystem::from_slh(&triple);
    match epsilon {
        Some(eps) if eps < 0.0 => Err(Error::InvalidParameter(format!(
            "leakage rate must be >= 0, got {eps}"
        ))),
        Some(eps) => add_channel_if(sys, eps, a),
        None => Ok(sys),
    }
}
