use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DensityMatrix, LindbladSystem};
use crate::error::{Error, Result};
use crate::operator::r;

/// Adaptive Dormand–Prince 5(4) settings. States are recorded on `samples`
/// equally spaced times from 0 to `t_end` inclusive.
#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub t_end: f64,
    pub samples: usize,
    pub dt_max: f64,
    /// Absolute and relative tolerance on every matrix entry.
    pub tol: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn new(t_end: f64, samples: usize) -> Self {
        Self {
            t_end,
            samples,
            dt_max: f64::INFINITY,
            tol: 1e-9,
            max_steps: 5_000_000,
        }
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.samples;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.t_end
                } else {
                    self.t_end * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Sampled solution of the master equation plus named scalar series.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    observables: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("trajectories hold at least two samples")
    }

    /// Evaluates `f` on every stored state and records it under `name`.
    pub fn add_observable(&mut self, name: &str, f: impl Fn(&DensityMatrix) -> f64) -> &[f64] {
        let values: Vec<f64> = self.states.iter().map(f).collect();
        self.observables.retain(|(n, _)| n != name);
        self.observables.push((name.to_string(), values));
        &self.observables.last().unwrap().1
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn observable_names(&self) -> impl Iterator<Item = &str> {
        self.observables.iter().map(|(n, _)| n.as_str())
    }

    /// CSV with header `t,<observable>...`, one row per sample.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.observables.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.observables.iter().map(|(_, v)| v[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau. The generator is time-independent, so the
// nodes c_i never enter.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Mat = DMatrix<Complex64>;

fn lincomb(y: &Mat, h: f64, terms: &[(f64, &Mat)]) -> Mat {
    let mut out = y.clone();
    for (coef, k) in terms {
        let a = r(h * coef);
        out.zip_apply(*k, |o, x| *o += a * x);
    }
    out
}

/// Integrates the master equation from `rho0` without trace renormalization.
pub fn integrate(
    sys: &LindbladSystem,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho0.dim(),
        });
    }
    if !(cfg.t_end > 0.0) || !cfg.t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end must be positive and finite, got {}",
            cfg.t_end
        )));
    }
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter(
            "at least two samples (t = 0 and t_end) are required".into(),
        ));
    }
    if !(cfg.tol > 0.0) || !(cfg.dt_max > 0.0) {
        return Err(Error::InvalidParameter(
            "tolerance and dt_max must be positive".into(),
        ));
    }

    let k_gen = sys.damping_generator();
    let rhs = |rho: &Mat| sys.apply_with(&k_gen, rho);
    let err_norm = |y0: &Mat, y1: &Mat, e: &Mat| -> f64 {
        let mut worst = 0.0f64;
        for ((a, b), d) in y0.iter().zip(y1.iter()).zip(e.iter()) {
            let scale = cfg.tol + cfg.tol * a.norm().max(b.norm());
            let ratio = d.norm() / scale;
            // f64::max skips NaN; an overflowing trial step must be rejected
            if !ratio.is_finite() || !b.re.is_finite() || !b.im.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(ratio);
        }
        worst
    };

    let times = cfg.sample_times();
    let mut states = Vec::with_capacity(times.len());
    let mut y = rho0.matrix().clone();
    states.push(DensityMatrix::from_matrix_unchecked(y.clone()));

    let mut t = 0.0;
    let mut k1 = rhs(&y);
    let mut dt = {
        let slope = k1.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let guess = if slope > 0.0 { 0.01 / slope } else { cfg.t_end };
        guess.min(cfg.dt_max).min(cfg.t_end)
    };
    let mut steps = 0usize;

    for &target in &times[1..] {
        while t < target {
            steps += 1;
            if steps > cfg.max_steps {
                return Err(Error::Numerical(format!(
                    "step budget of {} exhausted at t = {t:.6e}",
                    cfg.max_steps
                )));
            }
            let remaining = target - t;
            let h = dt.min(remaining).min(cfg.dt_max);
            let landing = h >= remaining;
            if h < 1e-13 * t.abs().max(1.0) && !landing {
                return Err(Error::StepUnderflow { t, dt: h });
            }

            let k2 = rhs(&lincomb(&y, h, &[(A21, &k1)]));
            let k3 = rhs(&lincomb(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(&lincomb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(&lincomb(
                &y,
                h,
                &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            ));
            let k6 = rhs(&lincomb(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y_new = lincomb(
                &y,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = rhs(&y_new);
            let err = lincomb(
                &Mat::zeros(y.nrows(), y.ncols()),
                h,
                &[
                    (E1, &k1),
                    (E3, &k3),
                    (E4, &k4),
                    (E5, &k5),
                    (E6, &k6),
                    (E7, &k7),
                ],
            );
            let e = err_norm(&y, &y_new, &err);

            if e <= 1.0 {
                t = if landing { target } else { t + h };
                y = y_new;
                k1 = k7;
                let grow = if e == 0.0 {
                    5.0
                } else {
                    (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A step shortened to land on a sample time says nothing about the natural step.
                if !landing || h == dt {
                    dt = (h * grow).min(cfg.dt_max);
                }
            } else {
                dt = h * (0.9 * e.powf(-0.2)).clamp(0.1, 1.0);
                if dt < 1e-13 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, dt });
                }
            }
            if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Numerical(format!("non-finite state at t = {t:.6e}")));
            }
        }
        states.push(DensityMatrix::from_matrix_unchecked(y.clone()));
    }

    Ok(Trajectory {
        times,
        states,
        observables: Vec::new(),
    })
}
