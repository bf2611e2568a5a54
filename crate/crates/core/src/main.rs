use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use orbital_forge::config::{ModelChoice, RunConfig};
use orbital_forge::experiments::{self, RunReport};
use orbital_forge::{Error, Result};

#[derive(Parser)]
#[command(name = "orbital-forge", version, about = "Orbital state preparation in a 2D optical lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV and JSON reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone, Default)]
struct Schedule {
    /// Total duration in ω⁻¹.
    #[arg(long)]
    total_time: Option<f64>,
    /// Switch time as a fraction of the total duration.
    #[arg(long)]
    ts_fraction: Option<f64>,
    /// Drive detuning (ω_x − ω_d)/ω.
    #[arg(long, allow_hyphen_values = true)]
    detuning: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct Solver {
    /// Lattice depth v in units of ħω.
    #[arg(long)]
    depth: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Time step as ω_d·dt.
    #[arg(long)]
    dt_factor: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Rwa,
    PreRwa,
}

#[derive(Subcommand)]
enum Command {
    /// Single-site eigenstates.
    Eigs {
        #[command(flatten)]
        common: Common,
        /// Also write the sampled eigenfunctions.
        #[arg(long)]
        dump_states: bool,
    },
    /// Coupling coefficients over a depth scan.
    Couplings {
        #[command(flatten)]
        common: Common,
    },
    /// Pulse schedule and physical drive.
    Pulse {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: Schedule,
    },
    /// Four-level model.
    Sim4l {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: Schedule,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Full 2D Schrödinger solver.
    Sim2d {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: Schedule,
        #[command(flatten)]
        solver: Solver,
    },
    /// Fidelity against the switch time.
    SweepTs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
    },
    /// Fidelity against total time and depth.
    SweepTv {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
    },
    /// Fidelity against drive detuning.
    Resonance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
    },
    /// Second-band tunneling rate.
    Tunneling {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        depth: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
        /// Propagation horizon in ω⁻¹.
        #[arg(long)]
        horizon: Option<f64>,
    },
}

fn apply_schedule(cfg: &mut RunConfig, s: &Schedule) {
    if let Some(t) = s.total_time {
        cfg.total_time = t;
    }
    if let Some(f) = s.ts_fraction {
        cfg.switch_fraction = f;
    }
    if let Some(d) = s.detuning {
        cfg.drive_detuning = d;
    }
}

fn apply_solver(cfg: &mut RunConfig, s: &Solver) {
    if let Some(v) = s.depth {
        cfg.depth_hbar_omega = v;
    }
    if let Some(n) = s.grid {
        cfg.grid_n = n;
    }
    if let Some(f) = s.dt_factor {
        cfg.dt_factor = f;
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ORBITAL_FORGE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("ORBITAL_FORGE_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<RunReport> {
    init_threads()?;
    let load = |c: &Common| RunConfig::load(&c.config);
    let (report, out) = match cli.command {
        Command::Eigs { common, dump_states } => (experiments::eigs_report(&load(&common)?, dump_states)?, common.out),
        Command::Couplings { common } => (experiments::couplings_report(&load(&common)?)?, common.out),
        Command::Pulse { common, schedule } => {
            let mut cfg = load(&common)?;
            apply_schedule(&mut cfg, &schedule);
            cfg.validate()?;
            (experiments::pulse_report(&cfg)?, common.out)
        }
        Command::Sim4l { common, schedule, model } => {
            let mut cfg = load(&common)?;
            apply_schedule(&mut cfg, &schedule);
            if let Some(m) = model {
                cfg.model = match m {
                    ModelArg::Rwa => ModelChoice::Rwa,
                    ModelArg::PreRwa => ModelChoice::PreRwa,
                };
            }
            cfg.validate()?;
            (experiments::sim4l_report(&cfg)?, common.out)
        }
        Command::Sim2d { common, schedule, solver } => {
            let mut cfg = load(&common)?;
            apply_schedule(&mut cfg, &schedule);
            apply_solver(&mut cfg, &solver);
            cfg.validate()?;
            (experiments::sim2d_report(&cfg)?, common.out)
        }
        Command::SweepTs { common, solver } => {
            let mut cfg = load(&common)?;
            apply_solver(&mut cfg, &solver);
            cfg.validate()?;
            (experiments::ts_sweep_report(&cfg)?, common.out)
        }
        Command::SweepTv { common, solver } => {
            let mut cfg = load(&common)?;
            apply_solver(&mut cfg, &solver);
            cfg.validate()?;
            (experiments::tv_sweep_report(&cfg)?, common.out)
        }
        Command::Resonance { common, solver } => {
            let mut cfg = load(&common)?;
            apply_solver(&mut cfg, &solver);
            cfg.validate()?;
            (experiments::resonance_report(&cfg)?, common.out)
        }
        Command::Tunneling { common, depth, cells, horizon } => {
            let mut cfg = load(&common)?;
            if let Some(v) = depth {
                cfg.depth_hbar_omega = v;
            }
            if let Some(c) = cells {
                cfg.tunneling.cells = c;
            }
            if let Some(h) = horizon {
                cfg.tunneling.horizon = h;
            }
            cfg.validate()?;
            let (report, result) = experiments::tunneling_report(&cfg)?;
            experiments::emit_tunneling_result(&result, &common.out)?;
            (report, common.out)
        }
    };
    let files = experiments::emit_report(&report, &out)?;
    println!("wrote {} and {}", files.csv.display(), files.json.display());
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            for c in &report.checks {
                let status = match (c.passed, c.enforced) {
                    (true, _) => "PASS",
                    (false, true) => "FAIL",
                    (false, false) => "WARN",
                };
                println!("{status} {}: {}", c.name, c.detail);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
