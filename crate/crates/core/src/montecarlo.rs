//! Robustness of qutrit stabilization against random detuning and gain errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{fidelity, liouvillian_apply, steady_state};
use crate::models::{qutrit_cf, ImperfectionSpec, QutritTarget};
use crate::operator::basis;
use crate::stability::solve_qutrit_gains;

/// Ensemble parameters. Unset ranges default to the rates of the model:
/// detunings uniform on `[-sqrt(kappa gamma), sqrt(kappa gamma)]`, extra decay
/// `sqrt(kappa gamma) / 1000` on both ladder transitions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    pub kappa: f64,
    pub gamma: f64,
    pub target: QutritTarget,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub detuning_range: Option<f64>,
    #[serde(default = "default_mismatch_range")]
    pub mismatch_range: f64,
    #[serde(default)]
    pub extra_decay: Option<f64>,
}

fn default_mismatch_range() -> f64 {
    0.01
}

impl RobustnessConfig {
    pub fn new(kappa: f64, gamma: f64, target: QutritTarget, samples: usize, seed: u64) -> Self {
        Self {
            kappa,
            gamma,
            target,
            samples,
            seed,
            detuning_range: None,
            mismatch_range: default_mismatch_range(),
            extra_decay: None,
        }
    }

    fn detuning_range(&self) -> f64 {
        self.detuning_range
            .unwrap_or_else(|| (self.kappa * self.gamma).sqrt())
    }

    fn extra_decay(&self) -> f64 {
        self.extra_decay
            .unwrap_or_else(|| (self.kappa * self.gamma).sqrt() / 1000.0)
    }
}

/// One ensemble member.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trial {
    pub index: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub gain_mismatch: f64,
    /// Population of the target level in the stationary state.
    pub fidelity: f64,
    /// `max |L rho|` of the returned stationary state.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub samples: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            samples: n,
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Independent random stream for `trial`, fixed by `(seed, trial)` alone.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs the ensemble in parallel; the result does not depend on the thread count.
pub fn qutrit_robustness(cfg: &RobustnessConfig) -> Result<(Vec<Trial>, Summary)> {
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    if !(cfg.mismatch_range >= 0.0 && cfg.mismatch_range < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mismatch_range must lie in [0, 1), got {}",
            cfg.mismatch_range
        )));
    }
    let (u1, u2) = solve_qutrit_gains(cfg.target, cfg.kappa, cfg.gamma)?;
    let target = basis(3, cfg.target.level());
    let (dr, mr, eps) = (cfg.detuning_range(), cfg.mismatch_range, cfg.extra_decay());
    let trials = (0..cfg.samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = trial_rng(cfg.seed, index);
            let mut draw = |range: f64| {
                if range > 0.0 {
                    rng.gen_range(-range..=range)
                } else {
                    0.0
                }
            };
            let imp = ImperfectionSpec {
                delta1: draw(dr),
                delta2: draw(dr),
                gain_mismatch: draw(mr),
                eps1: eps,
                eps2: eps,
                ..Default::default()
            };
            let sys = qutrit_cf(cfg.kappa, cfg.gamma, u1, u2, Some(&imp))?;
            let rho = steady_state(&sys)?;
            Ok(Trial {
                index,
                delta1: imp.delta1,
                delta2: imp.delta2,
                gain_mismatch: imp.gain_mismatch,
                fidelity: fidelity(&target, &rho)?,
                residual: liouvillian_apply(&sys, &rho)?.max_abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fids: Vec<f64> = trials.iter().map(|t| t.fidelity).collect();
    let summary = Summary::of(&fids);
    Ok((trials, summary))
}
