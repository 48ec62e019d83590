//! End-to-end scenarios: configuration schema, runners, result files and
//! the reference checks reported for each run.
//!
//! A run is split into [`prepare`] (schema-level validation and loading of
//! referenced files) and [`run`] (the numerics), so that callers can tell
//! configuration errors from numerical failures. Outputs are held in memory
//! and are byte-identical for identical configurations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::gaussian::{
    build_linear_system, evolve_moments, gaussian_purity, min_eigenvalue, squeezing_db,
    steady_covariance, write_moments_csv, GaussianState,
};
use crate::lindblad::{
    fidelity, integrate, purity, q_function, steady_state, DensityMatrix, IntegratorConfig,
    PhaseGrid,
};
use crate::models::{
    fock_cf, qubit_cf, qubit_kappa_for_z, qubit_target, qubit_target_z, qutrit_cf,
    qutrit_eigenbasis, spin_squeezing_model, CouplingOrder, ImperfectionSpec, QutritTarget,
};
use crate::montecarlo::{qutrit_robustness, trial_rng, RobustnessConfig};
use crate::operator::{basis, Operator};
use crate::slh::{series_product, SlhTriple};
use crate::stability::solve_qutrit_gains;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Qubit fidelity across the target Bloch `z`.
    QubitSweep,
    /// Qutrit trajectories from random initial states.
    Qutrit,
    /// Qutrit robustness ensemble.
    QutritMc,
    /// Spin-squeezing moments, normal and wrong coupling order.
    Squeeze,
    /// Single-photon generation: fidelity, purity and Q function.
    Fock,
    /// Arbitrary cascade of SLH triples read from files.
    Compose,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::QubitSweep => "qubit-sweep",
            ScenarioKind::Qutrit => "qutrit",
            ScenarioKind::QutritMc => "qutrit-mc",
            ScenarioKind::Squeeze => "squeeze",
            ScenarioKind::Fock => "fock",
            ScenarioKind::Compose => "compose",
        }
    }
}

/// Model parameters; each scenario reads the fields it needs and falls back
/// to its defaults for the rest. Rates are in units of `gamma` (default 1).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub phi: f64,
    /// Displacement gain of the Fock scenario (default `kappa / 2`).
    pub g: Option<f64>,
    pub truncation: Option<usize>,
    /// Monte Carlo ensemble size (default 200).
    pub samples: Option<usize>,
    /// Qubit sweep: number of `z` points on `[-1, 1]` (default 41; `z = 1` becomes 0.99).
    pub z_points: Option<usize>,
    /// Qubit sweep: explicit `kappa / gamma` values instead of the `z` grid.
    pub kappa_over_gamma: Option<Vec<f64>>,
    /// Qubit sweep: dephasing rate `eps2` as a fraction of `kappa` at each point.
    pub eps2_per_kappa: Option<f64>,
    /// Qutrit: number of random initial states (default 5).
    pub initial_states: Option<usize>,
    /// Fock: times at which the Q function is sampled (default 0, 1.1, 4).
    pub snaps: Option<Vec<f64>>,
    pub q_points: Option<usize>,
    /// Fock: half-width of the square Q grid (default `sqrt(N / 4)`).
    pub q_extent: Option<f64>,
    /// Compose: SLH triple files, cascaded in order.
    pub stages: Vec<PathBuf>,
    /// Compose: basis state the trajectory starts from.
    pub initial: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ScenarioKind,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub imperfections: ImperfectionSpec,
    /// Qutrit target level 1, 2 or 3.
    #[serde(default)]
    pub target: Option<u8>,
    #[serde(default)]
    pub time: Option<TimeGrid>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub fn new(model: ScenarioKind) -> Self {
        Self {
            model,
            params: Params::default(),
            imperfections: ImperfectionSpec::default(),
            target: None,
            time: None,
            seed: None,
        }
    }
}

/// Expected value of a reported quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expected {
    Approx { target: f64, tol: f64 },
    Range { lo: f64, hi: f64 },
    AtLeast { min: f64 },
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub quantity: String,
    pub got: f64,
    pub expected: Expected,
    /// `None` for informational rows.
    pub pass: Option<bool>,
}

impl Row {
    fn new(quantity: &str, got: f64, expected: Expected) -> Self {
        let pass = match expected {
            Expected::Approx { target, tol } => Some((got - target).abs() <= tol),
            Expected::Range { lo, hi } => Some((lo..=hi).contains(&got)),
            Expected::AtLeast { min } => Some(got >= min),
            Expected::Info => None,
        };
        Self {
            quantity: quantity.to_string(),
            got,
            expected,
            pass,
        }
    }

    pub fn approx(quantity: &str, got: f64, target: f64, tol: f64) -> Self {
        Self::new(quantity, got, Expected::Approx { target, tol })
    }

    pub fn range(quantity: &str, got: f64, lo: f64, hi: f64) -> Self {
        Self::new(quantity, got, Expected::Range { lo, hi })
    }

    pub fn at_least(quantity: &str, got: f64, min: f64) -> Self {
        Self::new(quantity, got, Expected::AtLeast { min })
    }

    pub fn info(quantity: &str, got: f64) -> Self {
        Self::new(quantity, got, Expected::Info)
    }
}

fn num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e4).contains(&x.abs()) {
        format!("{x:.4}")
    } else {
        format!("{x:.3e}")
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        match self.expected {
            Expected::Approx { target, tol } => write!(
                f,
                "{}: target {} (±{}), got {}, {status}",
                self.quantity,
                num(target),
                num(tol),
                num(self.got)
            ),
            Expected::Range { lo, hi } => write!(
                f,
                "{}: target [{}, {}], got {}, {status}",
                self.quantity,
                num(lo),
                num(hi),
                num(self.got)
            ),
            Expected::AtLeast { min } => {
                write!(
                    f,
                    "{}: target >= {}, got {}, {status}",
                    self.quantity,
                    num(min),
                    num(self.got)
                )
            }
            Expected::Info => write!(f, "{}: got {}, {status}", self.quantity, num(self.got)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn file_name(&self) -> String {
        format!("{}.report.json", self.scenario)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.scenario)?;
        for row in &self.rows {
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<OutputFile>,
    pub report: Report,
}

impl Outcome {
    /// Writes every output file plus `<scenario>.report.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len() + 1);
        for file in &self.files {
            let path = dir.join(&file.name);
            fs::write(&path, &file.contents)?;
            written.push(path);
        }
        let path = dir.join(self.report.file_name());
        fs::write(&path, to_json(&self.report)?)?;
        written.push(path);
        Ok(written)
    }

    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }
}

/// All `*.report.json` files in `dir`, sorted by file name.
pub fn load_reports(dir: &Path) -> Result<Vec<Report>> {
    let missing = || Error::MissingResults(dir.display().to_string());
    let entries = fs::read_dir(dir).map_err(|_| missing())?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".report.json"))
        })
        .collect();
    if paths.is_empty() {
        return Err(missing());
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::from(e).context(p.display().to_string()))
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

// ---------------------------------------------------------------- preparation

/// A validated configuration with its referenced files loaded.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ScenarioConfig,
    stages: Vec<SlhTriple>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(invalid(format!("params.{name} must be positive, got {x}")))
        }
        _ => Ok(()),
    }
}

/// Validates `config` and loads compose stages (relative to `base`).
pub fn prepare(config: ScenarioConfig, base: &Path) -> Result<Prepared> {
    let p = &config.params;
    positive("kappa", p.kappa)?;
    positive("gamma", p.gamma)?;
    config.imperfections.validate()?;
    if let Some(t) = config.target {
        if !(1..=3).contains(&t) {
            return Err(invalid(format!("target must be 1, 2 or 3, got {t}")));
        }
    }
    if let Some(time) = config.time {
        if !(time.t_end > 0.0 && time.t_end.is_finite()) {
            return Err(invalid(format!(
                "time.t_end must be positive, got {}",
                time.t_end
            )));
        }
        if time.samples < 2 {
            return Err(invalid("time.samples must be at least 2"));
        }
    }
    if p.samples == Some(0) {
        return Err(invalid("params.samples must be positive"));
    }
    if p.z_points.is_some_and(|n| n < 2) {
        return Err(invalid("params.z_points must be at least 2"));
    }
    if p.q_points == Some(0) {
        return Err(invalid("params.q_points must be positive"));
    }
    if p.initial_states == Some(0) {
        return Err(invalid("params.initial_states must be positive"));
    }
    if let Some(r) = p.eps2_per_kappa {
        if !(r >= 0.0) {
            return Err(invalid(format!(
                "params.eps2_per_kappa must be >= 0, got {r}"
            )));
        }
    }
    if let Some(list) = &p.kappa_over_gamma {
        if list.is_empty() || list.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(invalid(
                "params.kappa_over_gamma must be a non-empty list of rates >= 0",
            ));
        }
    }
    let mut stages = Vec::new();
    match config.model {
        ScenarioKind::Fock => {
            if p.truncation.is_some_and(|n| n < 10) {
                return Err(invalid("params.truncation must be at least 10"));
            }
            let t_end = config.time.map_or(FOCK_T_END, |t| t.t_end);
            let samples = config.time.map_or(FOCK_SAMPLES, |t| t.samples);
            for &s in p.snaps.as_deref().unwrap_or(&FOCK_SNAPS) {
                snap_index(s, t_end, samples)?;
            }
        }
        ScenarioKind::Squeeze => {
            if p.truncation.is_some_and(|n| n < 2) {
                return Err(invalid("params.truncation must be at least 2"));
            }
        }
        ScenarioKind::Compose => {
            if p.stages.is_empty() {
                return Err(invalid(
                    "params.stages must list at least one SLH triple file",
                ));
            }
            for path in &p.stages {
                let full = base.join(path);
                let text = fs::read_to_string(&full)
                    .map_err(|e| Error::from(e).context(format!("reading {}", full.display())))?;
                let triple: SlhTriple = serde_json::from_str(&text)
                    .map_err(|e| Error::from(e).context(format!("parsing {}", full.display())))?;
                stages.push(triple);
            }
            let d = stages[0].dim();
            if let Some(k) = p.initial {
                if k >= d {
                    return Err(invalid(format!(
                        "params.initial = {k} out of range for dim {d}"
                    )));
                }
            }
        }
        _ => {}
    }
    Ok(Prepared { config, stages })
}

/// Runs a prepared scenario; numerical errors carry the scenario name.
pub fn run(prepared: &Prepared) -> Result<Outcome> {
    let cfg = &prepared.config;
    let out = match cfg.model {
        ScenarioKind::QubitSweep => run_qubit_sweep(cfg),
        ScenarioKind::Qutrit => run_qutrit(cfg),
        ScenarioKind::QutritMc => run_qutrit_mc(cfg),
        ScenarioKind::Squeeze => run_squeeze(cfg),
        ScenarioKind::Fock => run_fock(cfg),
        ScenarioKind::Compose => run_compose(cfg, &prepared.stages),
    };
    out.map_err(|e| e.context(format!("{} scenario", cfg.model.name())))
}

// ---------------------------------------------------------------- qubit sweep

/// `linspace(-1, 1, n)` with the singular endpoint `z = 1` moved to 0.99.
pub fn qubit_z_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let z = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
            if z >= 1.0 {
                0.99
            } else {
                z
            }
        })
        .collect()
}

fn run_qubit_sweep(cfg: &ScenarioConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let gamma = p.gamma.unwrap_or(1.0);
    let imp = &cfg.imperfections;
    let points: Vec<(f64, f64)> = match &p.kappa_over_gamma {
        Some(list) => list
            .iter()
            .map(|&r| (qubit_target_z(r * gamma, gamma), r * gamma))
            .collect(),
        None => qubit_z_grid(p.z_points.unwrap_or(41))
            .into_iter()
            .map(|z| Ok((z, qubit_kappa_for_z(z, gamma)?)))
            .collect::<Result<_>>()?,
    };
    let results: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&(_, kappa)| {
            let point_imp = ImperfectionSpec {
                eps2: p.eps2_per_kappa.map_or(imp.eps2, |r| r * kappa),
                ..imp.clone()
            };
            let ideal = point_imp == ImperfectionSpec::default();
            let sys = qubit_cf(kappa, gamma, p.phi, (!ideal).then_some(&point_imp))?;
            let rho = steady_state(&sys)?;
            Ok((
                fidelity(&qubit_target(kappa, gamma, p.phi), &rho)?,
                purity(&rho),
            ))
        })
        .collect::<Result<_>>()?;

    let header = ["z", "kappa_over_gamma", "fidelity", "purity"].map(String::from);
    let csv = csv_bytes(
        &header,
        points
            .iter()
            .zip(&results)
            .map(|(&(z, k), &(f, pu))| vec![z, k / gamma, f, pu]),
    )?;

    let fids: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (imin, fmin) = fids
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, f)| if f < acc.1 { (i, f) } else { acc },
        );
    let z_min = points[imin].0;
    let last = fids.len() - 1;
    let at_zero = points.iter().position(|&(z, _)| z.abs() < 1e-12);

    let ideal = *imp == ImperfectionSpec::default() && p.eps2_per_kappa.unwrap_or(0.0) == 0.0;
    let realistic = close(imp.eps1, 0.01 * gamma)
        && p.eps2_per_kappa.is_some_and(|r| close(r, 0.01))
        && imp.delta1 == 0.0
        && imp.delta2 == 0.0;
    let mut rows = Vec::new();
    if ideal {
        rows.push(Row::approx("min F(z)", fmin, 1.0, 1e-8));
    } else if realistic && imp.delta == 0.0 {
        if let Some(i) = at_zero {
            rows.push(Row::at_least("F(z=0)", fids[i], 0.99));
        }
        rows.push(Row::info("min F(z)", fmin));
    } else if realistic && close(imp.delta, 0.3 * gamma) && p.kappa_over_gamma.is_none() {
        rows.push(Row::range("min F(z)", fmin, 0.84, 0.88));
        rows.push(Row::approx("argmin z", z_min, -0.1, 0.1));
        rows.push(Row::range(
            &format!("F(z={})", points[last].0),
            fids[last],
            0.95,
            0.99,
        ));
    } else {
        rows.push(Row::info("min F(z)", fmin));
        rows.push(Row::info("argmin z", z_min));
        rows.push(Row::info(&format!("F(z={})", points[last].0), fids[last]));
    }
    Ok(Outcome {
        files: vec![OutputFile {
            name: "qubit_sweep.csv".into(),
            contents: csv,
        }],
        report: Report {
            scenario: "qubit-sweep".into(),
            rows,
        },
    })
}

// ---------------------------------------------------------------- qutrit

const QUTRIT_KAPPA: f64 = 100.0;

fn qutrit_targets(cfg: &ScenarioConfig) -> Vec<QutritTarget> {
    match cfg.target {
        Some(t) => vec![QutritTarget::ALL[t as usize - 1]],
        None => QutritTarget::ALL.to_vec(),
    }
}

fn run_qutrit(cfg: &ScenarioConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (kappa, gamma) = (p.kappa.unwrap_or(QUTRIT_KAPPA), p.gamma.unwrap_or(1.0));
    let time = cfg.time.unwrap_or(TimeGrid {
        t_end: 20.0 / gamma,
        samples: 401,
    });
    let n_init = p.initial_states.unwrap_or(5);
    let seed = cfg.seed.unwrap_or(0);
    let ideal = cfg.imperfections == ImperfectionSpec::default();
    let icfg = IntegratorConfig::new(time.t_end, time.samples);
    let initial: Vec<DensityMatrix> = (0..n_init)
        .map(|i| DensityMatrix::random(3, &mut trial_rng(seed, i)))
        .collect();
    let eigenbasis = qutrit_eigenbasis(kappa, gamma);

    let mut files = Vec::new();
    let mut rows = Vec::new();
    for target in qutrit_targets(cfg) {
        let k = target.level() + 1;
        let (u1, u2) = solve_qutrit_gains(target, kappa, gamma)?;
        let sys = qutrit_cf(kappa, gamma, u1, u2, (!ideal).then_some(&cfg.imperfections))?;
        let phi = &eigenbasis[target.level()];
        let trajs = initial
            .par_iter()
            .map(|rho0| integrate(&sys, rho0, &icfg))
            .collect::<Result<Vec<_>>>()?;
        let diff = |rho: &DensityMatrix| rho.population(0) - rho.population(2);
        let mut header = vec!["t".to_string()];
        header.extend((0..n_init).map(|i| format!("rho11_minus_rho33_{i}")));
        header.extend((0..n_init).map(|i| format!("fidelity_{i}")));
        let fid = |rho: &DensityMatrix| fidelity(phi, rho);
        let mut table = Vec::with_capacity(time.samples);
        for (s, &t) in trajs[0].times.iter().enumerate() {
            let mut row = vec![t];
            row.extend(trajs.iter().map(|tr| diff(&tr.states[s])));
            for tr in &trajs {
                row.push(fid(&tr.states[s])?);
            }
            table.push(row);
        }
        files.push(OutputFile {
            name: format!("qutrit_phi{k}.csv"),
            contents: csv_bytes(&header, table.into_iter())?,
        });

        let finals: Vec<&DensityMatrix> = trajs.iter().map(|tr| tr.final_state()).collect();
        let min_fid = finals
            .iter()
            .map(|r| fid(r))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let target_diff = expected_diff(phi);
        let worst_diff = finals
            .iter()
            .map(|r| diff(r))
            .max_by(|a, b| (a - target_diff).abs().total_cmp(&(b - target_diff).abs()))
            .expect("at least one initial state");
        let name = format!("Phi{k}");
        if ideal {
            rows.push(Row::at_least(
                &format!("min final fidelity ({name})"),
                min_fid,
                0.999,
            ));
            rows.push(Row::approx(
                &format!("rho11-rho33 final ({name})"),
                worst_diff,
                target_diff,
                1e-3,
            ));
        } else {
            rows.push(Row::info(&format!("min final fidelity ({name})"), min_fid));
            rows.push(Row::info(
                &format!("rho11-rho33 final ({name})"),
                worst_diff,
            ));
        }
    }
    Ok(Outcome {
        files,
        report: Report {
            scenario: "qutrit".into(),
            rows,
        },
    })
}

fn expected_diff(phi: &nalgebra::DVector<num_complex::Complex64>) -> f64 {
    phi[0].norm_sqr() - phi[2].norm_sqr()
}

fn run_qutrit_mc(cfg: &ScenarioConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (kappa, gamma) = (p.kappa.unwrap_or(QUTRIT_KAPPA), p.gamma.unwrap_or(1.0));
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for target in qutrit_targets(cfg) {
        let k = target.level() + 1;
        let rc = RobustnessConfig::new(
            kappa,
            gamma,
            target,
            p.samples.unwrap_or(200),
            cfg.seed.unwrap_or(0),
        );
        let (trials, summary) = qutrit_robustness(&rc)?;
        let header = [
            "trial",
            "delta1",
            "delta2",
            "gain_mismatch",
            "fidelity",
            "residual",
        ]
        .map(String::from);
        files.push(OutputFile {
            name: format!("qutrit_mc_target{k}.csv"),
            contents: csv_bytes(
                &header,
                trials.iter().map(|t| {
                    vec![
                        t.index as f64,
                        t.delta1,
                        t.delta2,
                        t.gain_mismatch,
                        t.fidelity,
                        t.residual,
                    ]
                }),
            )?,
        });
        let quantity = format!("mean fidelity (target {k})");
        let canonical = close(kappa, 100.0 * gamma);
        rows.push(match (canonical, target) {
            (true, QutritTarget::Phi1) => Row::approx(&quantity, summary.mean, 0.9531, 0.03),
            (true, _) => Row::at_least(&quantity, summary.mean, 0.95),
            (false, _) => Row::info(&quantity, summary.mean),
        });
        rows.push(Row::info(
            &format!("std fidelity (target {k})"),
            summary.std,
        ));
        let max_res = trials.iter().map(|t| t.residual).fold(0.0, f64::max);
        rows.push(Row::info(&format!("max |L rho| (target {k})"), max_res));
        summaries.push(json!({ "target": k, "config": rc, "summary": summary }));
    }
    files.push(OutputFile {
        name: "qutrit_mc_summary.json".into(),
        contents: to_json(&summaries)?,
    });
    Ok(Outcome {
        files,
        report: Report {
            scenario: "qutrit-mc".into(),
            rows,
        },
    })
}

// ---------------------------------------------------------------- squeezing

const SQUEEZE_KAPPA: f64 = 9.0;

/// Steady `Vqq = sqrt(gamma) / (4 sqrt(kappa) + 2 sqrt(gamma))`.
pub fn squeezed_vqq(kappa: f64, gamma: f64) -> f64 {
    gamma.sqrt() / (4.0 * kappa.sqrt() + 2.0 * gamma.sqrt())
}

/// Steady `Vpp = (sqrt(kappa) + sqrt(gamma))^2 / (2 gamma)`.
pub fn squeezed_vpp(kappa: f64, gamma: f64) -> f64 {
    (kappa.sqrt() + gamma.sqrt()).powi(2) / (2.0 * gamma)
}

fn run_squeeze(cfg: &ScenarioConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (kappa, gamma) = (p.kappa.unwrap_or(SQUEEZE_KAPPA), p.gamma.unwrap_or(1.0));
    let time = cfg.time.unwrap_or(TimeGrid {
        t_end: 5.0 / gamma,
        samples: 501,
    });
    let normal = spin_squeezing_model(kappa, gamma, CouplingOrder::Normal)?;
    let wrong = spin_squeezing_model(kappa, gamma, CouplingOrder::Wrong)?;
    let lin_n = build_linear_system(&normal);
    let lin_w = build_linear_system(&wrong);
    let v = steady_covariance(&lin_n)?;
    let vw = steady_covariance(&lin_w)?;
    let times = IntegratorConfig::new(time.t_end, time.samples).sample_times();
    let states = evolve_moments(&lin_n, &GaussianState::vacuum(), &times)?;
    let mut csv = Vec::new();
    write_moments_csv(&times, &states, &mut csv)?;

    let (db, pur, wmin) = (squeezing_db(&v), gaussian_purity(&v), min_eigenvalue(&vw));
    let mut rows = vec![
        Row::approx("Δq²", v[(0, 0)], squeezed_vqq(kappa, gamma), 1e-10),
        Row::approx(
            "Δp²",
            v[(1, 1)],
            squeezed_vpp(kappa, gamma),
            1e-10 * squeezed_vpp(kappa, gamma).max(1.0),
        ),
    ];
    if close(kappa, 9.0 * gamma) {
        rows.push(Row::approx("squeezing [dB]", db, 8.45, 0.05));
        rows.push(Row::approx("purity", pur, 0.66, 0.01));
    } else {
        rows.push(Row::info("squeezing [dB]", db));
        rows.push(Row::info("purity", pur));
    }
    rows.push(Row::approx("min variance (wrong order)", wmin, 0.5, 1e-10));
    if let Some(n) = p.truncation {
        let rho = steady_state(&normal.to_fock(n)?)?;
        let fock = GaussianState::from_density(&rho).cov;
        rows.push(Row::approx(
            &format!("Δq² (Fock N={n})"),
            fock[(0, 0)],
            v[(0, 0)],
            0.01 * v[(0, 0)],
        ));
        rows.push(Row::approx(
            &format!("Δp² (Fock N={n})"),
            fock[(1, 1)],
            v[(1, 1)],
            0.01 * v[(1, 1)],
        ));
    }
    let cov = |m: &nalgebra::Matrix2<f64>| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
    let summary = json!({
        "kappa": kappa,
        "gamma": gamma,
        "normal": { "cov": cov(&v), "squeezing_db": db, "purity": pur },
        "wrong": { "cov": cov(&vw), "min_variance": wmin, "squeezing_db": squeezing_db(&vw) },
    });
    Ok(Outcome {
        files: vec![
            OutputFile {
                name: "squeeze_moments.csv".into(),
                contents: csv,
            },
            OutputFile {
                name: "squeeze_summary.json".into(),
                contents: to_json(&summary)?,
            },
        ],
        report: Report {
            scenario: "squeeze".into(),
            rows,
        },
    })
}

// ---------------------------------------------------------------- Fock state

const FOCK_T_END: f64 = 8.0;
const FOCK_SAMPLES: usize = 801;
const FOCK_SNAPS: [f64; 3] = [0.0, 1.1, 4.0];

fn snap_index(snap: f64, t_end: f64, samples: usize) -> Result<usize> {
    let pos = snap / t_end * (samples - 1) as f64;
    let k = pos.round();
    if !(0.0..=t_end).contains(&snap) || (pos - k).abs() > 1e-6 {
        return Err(invalid(format!(
            "snapshot time {snap} is not on the sample grid (t_end = {t_end}, samples = {samples})"
        )));
    }
    Ok(k as usize)
}

fn run_fock(cfg: &ScenarioConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let gamma = p.gamma.unwrap_or(1.0);
    let kappa = p.kappa.unwrap_or(4.0 * gamma);
    let g = p.g.unwrap_or(kappa / 2.0);
    let n = p.truncation.unwrap_or(20);
    let eps = cfg.imperfections.eps;
    let time = cfg.time.unwrap_or(TimeGrid {
        t_end: FOCK_T_END / gamma,
        samples: FOCK_SAMPLES,
    });
    let sys = fock_cf(kappa, gamma, g, n, (eps > 0.0).then_some(eps))?;
    let mut traj = integrate(
        &sys,
        &DensityMatrix::basis(n, 0),
        &IntegratorConfig::new(time.t_end, time.samples),
    )?;
    let number = Operator::number(n);
    traj.add_observable("fidelity", |rho| rho.population(1));
    traj.add_observable("purity", purity);
    traj.add_observable("mean_n", |rho| rho.expectation(&number).re);
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    let mut files = vec![OutputFile {
        name: "fock_trajectory.csv".into(),
        contents: csv,
    }];

    let extent = p.q_extent.unwrap_or((n as f64 / 4.0).sqrt());
    let grid = PhaseGrid::square(extent, p.q_points.unwrap_or(41));
    for &snap in p.snaps.as_deref().unwrap_or(&FOCK_SNAPS) {
        let k = snap_index(snap, time.t_end, time.samples)?;
        let q = q_function(&traj.states[k], &grid)?;
        let mut out = Vec::new();
        q.write_csv(&mut out)?;
        files.push(OutputFile {
            name: format!("fock_q_t{snap}.csv"),
            contents: out,
        });
    }

    let fid = traj.observable("fidelity").expect("added above");
    let (kpeak, fpeak) =
        fid.iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, f)| if f > acc.1 { (i, f) } else { acc },
            );
    let tpeak = gamma * traj.times[kpeak];
    let rho_inf = steady_state(&sys)?;
    let (f_inf, p_inf) = (rho_inf.population(1), purity(&rho_inf));

    let canonical = close(kappa, 4.0 * gamma) && close(g, kappa / 2.0) && n >= 20;
    let mut rows = Vec::new();
    if canonical && eps == 0.0 {
        rows.push(Row::range("F peak", fpeak, 0.84, 0.88));
        rows.push(Row::approx("γt at peak", tpeak, 1.1, 0.1));
        rows.push(Row::range("F(∞)", f_inf, 0.74, 0.78));
        rows.push(Row::range("P(∞)", p_inf, 0.69, 0.73));
    } else if canonical && close(eps, kappa / 50.0) {
        rows.push(Row::range("F peak", fpeak, 0.82, 0.86));
        rows.push(Row::info("γt at peak", tpeak));
        rows.push(Row::info("F(∞)", f_inf));
        rows.push(Row::info("P(∞)", p_inf));
    } else {
        rows.push(Row::info("F peak", fpeak));
        rows.push(Row::info("γt at peak", tpeak));
        rows.push(Row::info("F(∞)", f_inf));
        rows.push(Row::info("P(∞)", p_inf));
    }
    Ok(Outcome {
        files,
        report: Report {
            scenario: "fock".into(),
            rows,
        },
    })
}

// ---------------------------------------------------------------- compose

fn run_compose(cfg: &ScenarioConfig, stages: &[SlhTriple]) -> Result<Outcome> {
    let mut total = stages[0].clone();
    for next in &stages[1..] {
        total = series_product(&total, next)?;
    }
    let d = total.dim();
    let sys = crate::lindblad::LindbladSystem::from_slh(&total);
    let mut files = vec![OutputFile {
        name: "compose_triple.json".into(),
        contents: to_json(&total)?,
    }];
    let mut rows = Vec::new();
    match steady_state(&sys) {
        Ok(rho) => {
            rows.push(Row::info("kernel dimension", 1.0));
            rows.push(Row::info("steady purity", purity(&rho)));
            files.push(OutputFile {
                name: "compose_steady.json".into(),
                contents: to_json(&rho)?,
            });
        }
        Err(Error::DegenerateKernel { kernel_dim }) => {
            rows.push(Row::info("kernel dimension", kernel_dim as f64));
        }
        Err(e) => return Err(e),
    }
    if let Some(time) = cfg.time {
        let k0 = cfg.params.initial.unwrap_or(0);
        let rho0 = DensityMatrix::pure(&basis(d, k0));
        let mut traj = integrate(
            &sys,
            &rho0,
            &IntegratorConfig::new(time.t_end, time.samples),
        )?;
        traj.add_observable("purity", purity);
        for k in 0..d {
            traj.add_observable(&format!("p{k}"), |rho| rho.population(k));
        }
        let mut csv = Vec::new();
        traj.write_csv(&mut csv)?;
        files.push(OutputFile {
            name: "compose_trajectory.csv".into(),
            contents: csv,
        });
    }
    Ok(Outcome {
        files,
        report: Report {
            scenario: "compose".into(),
            rows,
        },
    })
}
