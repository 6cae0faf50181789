use std::path::PathBuf;
use std::process::ExitCode;

use beatlaser_cli::commands::{self, Fault, Outcome};
use beatlaser_cli::config::{parse_config, ConfigError, Mode, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "beatlaser", version, about = "Two-mode entanglement in a driven V-type quantum beat laser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory; write trajectory.csv and summary.json.
    Simulate(Common),
    /// Cartesian parameter sweep; write sweep.csv.
    Sweep(Common),
    /// Gain matrix and drift spectrum; write stability.json.
    Stability(Common),
    /// Cross-check closed forms, integrators and invariants.
    Verify(Common),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct Common {
    /// TOML configuration file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "P", value_name = "P")]
    p: Option<f64>,
    #[arg(long)]
    omega_abs: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma_a: Option<f64>,
    #[arg(long)]
    kappa1: Option<f64>,
    #[arg(long)]
    kappa2: Option<f64>,
    #[arg(long)]
    g1: Option<f64>,
    #[arg(long)]
    g2: Option<f64>,
    /// Initial coherent amplitude of mode 1, `RE` or `RE,IM`.
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    alpha1: Option<String>,
    /// Initial coherent amplitude of mode 2, `RE` or `RE,IM`.
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    alpha2: Option<String>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Keep every STRIDE-th integration step.
    #[arg(long)]
    stride: Option<usize>,
    /// `rk4` or `exact`.
    #[arg(long)]
    method: Option<String>,
    /// Sweep axis, repeatable.
    #[arg(long, value_name = "NAME=v1,v2,...", allow_hyphen_values = true)]
    axis: Vec<String>,
    /// Also write one trajectory CSV per sweep point.
    #[arg(long)]
    trajectories: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed of the verification grid.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, hide = true)]
    inject_fault: Option<Fault>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            gamma: self.gamma,
            p: self.p,
            omega_abs: self.omega_abs,
            phi: self.phi,
            delta: self.delta,
            gamma_a: self.gamma_a,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            g1: self.g1,
            g2: self.g2,
            alpha1: self.alpha1.clone(),
            alpha2: self.alpha2.clone(),
            t_max: self.t_max,
            dt: self.dt,
            stride: self.stride,
            method: self.method.clone(),
            axes: self.axis.clone(),
            out: self.out.clone(),
            seed: self.seed,
            write_trajectories: self.trajectories,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Stability(a) => (Mode::Stability, a),
        Command::Verify(a) => (Mode::Verify, a),
    };
    let config = match parse_config(mode, args.config.as_deref(), &args.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                ConfigError::Validation(inner) => commands::exit_code(inner),
                _ => commands::EXIT_INVALID,
            };
            return ExitCode::from(code as u8);
        }
    };
    let result = match mode {
        Mode::Simulate => commands::run_simulate(&config),
        Mode::Sweep => commands::run_sweep_command(&config),
        Mode::Stability => commands::run_stability(&config),
        Mode::Verify => commands::run_verify(&config, args.inject_fault),
    };
    match result {
        Ok(Outcome { code, report }) => {
            print!("{report}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
