//! `cohfeed`: run coherent-feedback scenarios and tabulate their reference checks.
//!
//! Exit status: 0 when every reference row passes, 1 on a numerical failure
//! or a failing row, 2 on a configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cohfeed::models::ImperfectionSpec;
use cohfeed::scenario::{self, load_reports, Outcome, ScenarioConfig, ScenarioKind, TimeGrid};
use cohfeed::Error;

#[derive(Parser)]
#[command(
    name = "cohfeed",
    version,
    about = "Coherent-feedback state preparation scenarios"
)]
struct Cli {
    /// Directory for result files.
    #[arg(
        long,
        global = true,
        env = "COHFEED_OUT_DIR",
        default_value = "results"
    )]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Qubit steady-state fidelity across the target Bloch z.
    QubitSweep {
        /// Explicit kappa/gamma values (comma separated) instead of the z grid.
        #[arg(long, value_delimiter = ',')]
        kappa_over_gamma_grid: Option<Vec<f64>>,
        #[arg(long)]
        z_points: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Dephasing rate as a fraction of kappa.
        #[arg(long)]
        eps2_per_kappa: Option<f64>,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        imperfections: Imperfections,
    },
    /// Qutrit trajectories from random initial states.
    Qutrit {
        /// Target level 1, 2 or 3 (all three if omitted).
        #[arg(long)]
        target: Option<u8>,
        #[arg(long)]
        initial_states: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        time: Time,
        #[command(flatten)]
        imperfections: Imperfections,
    },
    /// Qutrit robustness ensemble under random detuning and gain error.
    QutritMc {
        #[arg(long)]
        target: Option<u8>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        rates: Rates,
    },
    /// Spin-squeezing covariance, normal and wrong coupling order.
    Squeeze {
        /// Also compare with a Fock-space steady state at this truncation.
        #[arg(long)]
        truncation: Option<usize>,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        time: Time,
    },
    /// Single-photon generation: fidelity, purity and Q function snapshots.
    Fock {
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        truncation: Option<usize>,
        /// Photon leakage rate.
        #[arg(long)]
        eps: Option<f64>,
        /// Times of the Q-function snapshots (comma separated).
        #[arg(long, value_delimiter = ',')]
        snap: Option<Vec<f64>>,
        #[arg(long)]
        q_points: Option<usize>,
        #[arg(long)]
        q_extent: Option<f64>,
        #[command(flatten)]
        rates: Rates,
        #[command(flatten)]
        time: Time,
    },
    /// Cascade SLH triples read from JSON files and solve the result.
    Compose {
        #[arg(required = true)]
        stages: Vec<PathBuf>,
        /// Basis state the trajectory starts from.
        #[arg(long)]
        initial: Option<usize>,
        #[command(flatten)]
        time: Time,
    },
    /// Run a JSON scenario configuration.
    Run { config: PathBuf },
    /// Tabulate the reference checks of previous runs.
    Report { dir: PathBuf },
}

#[derive(Args)]
struct Rates {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct Time {
    #[arg(long, requires = "samples")]
    t_end: Option<f64>,
    #[arg(long, requires = "t_end")]
    samples: Option<usize>,
}

impl Time {
    fn grid(&self) -> Option<TimeGrid> {
        Some(TimeGrid {
            t_end: self.t_end?,
            samples: self.samples?,
        })
    }
}

#[derive(Args)]
struct Imperfections {
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    delta1: f64,
    #[arg(long, default_value_t = 0.0)]
    delta2: f64,
    #[arg(long, default_value_t = 0.0)]
    eps1: f64,
    #[arg(long, default_value_t = 0.0)]
    eps2: f64,
    #[arg(long, default_value_t = 0.0)]
    gain_mismatch: f64,
}

impl Imperfections {
    fn spec(&self) -> ImperfectionSpec {
        ImperfectionSpec {
            delta: self.delta,
            delta1: self.delta1,
            delta2: self.delta2,
            eps1: self.eps1,
            eps2: self.eps2,
            gain_mismatch: self.gain_mismatch,
            ..Default::default()
        }
    }
}

enum Failure {
    Config(String),
    Numerical(String),
}

fn config_for(command: Command) -> Result<(ScenarioConfig, PathBuf), Failure> {
    let here = PathBuf::from(".");
    let with_rates = |kind, rates: &Rates| {
        let mut cfg = ScenarioConfig::new(kind);
        cfg.params.kappa = rates.kappa;
        cfg.params.gamma = rates.gamma;
        cfg
    };
    let cfg = match command {
        Command::QubitSweep {
            kappa_over_gamma_grid,
            z_points,
            phi,
            eps2_per_kappa,
            rates,
            imperfections,
        } => {
            if rates.kappa.is_some() {
                return Err(Failure::Config(
                    "qubit-sweep sets kappa from the grid; use --kappa-over-gamma-grid".into(),
                ));
            }
            let mut cfg = with_rates(ScenarioKind::QubitSweep, &rates);
            cfg.params.kappa_over_gamma = kappa_over_gamma_grid;
            cfg.params.z_points = z_points;
            cfg.params.phi = phi;
            cfg.params.eps2_per_kappa = eps2_per_kappa;
            cfg.imperfections = imperfections.spec();
            cfg
        }
        Command::Qutrit {
            target,
            initial_states,
            seed,
            rates,
            time,
            imperfections,
        } => {
            let mut cfg = with_rates(ScenarioKind::Qutrit, &rates);
            cfg.target = target;
            cfg.params.initial_states = initial_states;
            cfg.seed = seed;
            cfg.time = time.grid();
            cfg.imperfections = imperfections.spec();
            cfg
        }
        Command::QutritMc {
            target,
            samples,
            seed,
            rates,
        } => {
            let mut cfg = with_rates(ScenarioKind::QutritMc, &rates);
            cfg.target = target;
            cfg.params.samples = samples;
            cfg.seed = seed;
            cfg
        }
        Command::Squeeze {
            truncation,
            rates,
            time,
        } => {
            let mut cfg = with_rates(ScenarioKind::Squeeze, &rates);
            cfg.params.truncation = truncation;
            cfg.time = time.grid();
            cfg
        }
        Command::Fock {
            g,
            truncation,
            eps,
            snap,
            q_points,
            q_extent,
            rates,
            time,
        } => {
            let mut cfg = with_rates(ScenarioKind::Fock, &rates);
            cfg.params.g = g;
            cfg.params.truncation = truncation;
            cfg.params.snaps = snap;
            cfg.params.q_points = q_points;
            cfg.params.q_extent = q_extent;
            cfg.imperfections.eps = eps.unwrap_or(0.0);
            cfg.time = time.grid();
            cfg
        }
        Command::Compose {
            stages,
            initial,
            time,
        } => {
            let mut cfg = ScenarioConfig::new(ScenarioKind::Compose);
            cfg.params.stages = stages;
            cfg.params.initial = initial;
            cfg.time = time.grid();
            cfg
        }
        Command::Run { config } => return read_config(&config),
        Command::Report { .. } => unreachable!("handled separately"),
    };
    Ok((cfg, here))
}

/// Parses a configuration file, naming the offending field on schema errors.
fn read_config(path: &Path) -> Result<(ScenarioConfig, PathBuf), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        Failure::Config(format!("{}: at `{at}`: {}", path.display(), e.into_inner()))
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn execute(out: &Path, cfg: ScenarioConfig, base: &Path) -> Result<Outcome, Failure> {
    let prepared = scenario::prepare(cfg, base).map_err(|e| Failure::Config(e.to_string()))?;
    let outcome = scenario::run(&prepared).map_err(|e| Failure::Numerical(e.to_string()))?;
    outcome
        .write_to(out)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Report { dir } => match load_reports(&dir) {
            Ok(reports) => {
                for r in &reports {
                    print!("{r}");
                }
                Ok(reports.iter().all(|r| r.all_pass()))
            }
            Err(e @ Error::MissingResults(_)) => Err(Failure::Config(e.to_string())),
            Err(e) => Err(Failure::Numerical(e.to_string())),
        },
        command => config_for(command).and_then(|(cfg, base)| {
            let outcome = execute(&cli.out, cfg, &base)?;
            for f in &outcome.files {
                println!("wrote {}", cli.out.join(&f.name).display());
            }
            print!("{}", outcome.report);
            Ok(outcome.report.all_pass())
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
