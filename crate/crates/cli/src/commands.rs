//! Subcommand implementations. Each returns an [`Outcome`] whose exit code
//! the binary passes to the shell.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use beatlaser::analysis::{observables, spectral_summary, summarize};
use beatlaser::harness::{
    beta_oracle, compare_alpha_paths, compare_beta_paths, hermiticity_residual,
    photon_imag_residual, random_grid, run_sweep, trajectory_deviation, SweepSpec,
    DEFAULT_GRID_POINTS,
};
use beatlaser::{
    coherent_initial_state, gain_matrix, propagate_exact, relative_error, simulate, AlphaMatrix64,
    DriftSystem64, Error, Method, Moment, ModelParams64, RunSettings64,
};
use num_complex::Complex64;
use thiserror::Error as ThisError;

use crate::config::RunConfig;
use crate::output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFiniteState { .. } | Error::NonPhysicalState { .. } => EXIT_BLOW_UP,
        _ => EXIT_INVALID,
    }
}

#[derive(Debug, ThisError)]
pub enum CommandError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Io { .. } => EXIT_INVALID,
            CommandError::Model(e) => exit_code(e),
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    /// Human-readable report for stdout.
    pub report: String,
}

fn write_file(path: &Path, content: &str) -> Result<(), CommandError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CommandError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    fs::write(path, content).map_err(|source| CommandError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn out_dir(config: &RunConfig) -> &Path {
    config
        .out
        .as_deref()
        .unwrap_or_else(|| Path::new(crate::config::DEFAULT_OUT_DIR))
}

/// Integrates one trajectory; writes `trajectory.csv` and `summary.json`.
/// On failure a summary with the error tag (and blow-up time) is written.
pub fn run_simulate(config: &RunConfig) -> Result<Outcome, CommandError> {
    let dir = out_dir(config);
    let summary_path = dir.join("summary.json");
    let result = (|| {
        let system = DriftSystem64::from_params(&config.params)?;
        let initial = coherent_initial_state(config.alpha1, config.alpha2);
        let traj = simulate(&system, &initial, &config.run)?;
        let obs = observables(&traj)?;
        let summary = summarize(&traj)?;
        Ok::<_, Error>((system, traj, obs, summary))
    })();
    let (system, traj, obs, summary) = match result {
        Ok(v) => v,
        Err(e) => {
            write_file(&summary_path, &output::failure_json(&config.params, &config.run, &e))?;
            return Err(e.into());
        }
    };
    let spectrum = spectral_summary(&system);
    write_file(&dir.join("trajectory.csv"), &output::trajectory_csv(&traj, &obs))?;
    write_file(
        &summary_path,
        &output::summary_json(&config.params, &summary, &spectrum, &config.run),
    )?;
    let mut report = String::new();
    let _ = writeln!(report, "samples             {}", traj.len());
    let _ = writeln!(report, "v_min               {:.6} at t = {:.4}", summary.v_min, summary.t_at_vmin);
    let _ = writeln!(report, "n_max               {:.6} at t = {:.4}", summary.n_max, summary.t_at_nmax);
    let _ = writeln!(report, "entanglement windows {}", summary.windows.len());
    let _ = writeln!(report, "max Re(eigenvalue)  {:.6e}", spectrum.max_real_part);
    if summary.max_imag_residual > beatlaser::analysis::IMAG_REPORT_THRESHOLD {
        let _ = writeln!(report, "warning: imaginary residual {:e} in V", summary.max_imag_residual);
    }
    let _ = writeln!(report, "wrote {}", dir.display());
    Ok(Outcome {
        code: EXIT_OK,
        report,
    })
}

pub fn sweep_spec(config: &RunConfig) -> SweepSpec<f64> {
    let mut spec = SweepSpec::new(config.params, config.axes.clone());
    spec.initial = (config.alpha1, config.alpha2);
    spec.run = config.run;
    spec.keep_trajectories = config.write_trajectories;
    spec
}

/// Runs the Cartesian sweep; writes `sweep.csv` and, on request,
/// `trajectories/point_NNNNN.csv`.
pub fn run_sweep_command(config: &RunConfig) -> Result<Outcome, CommandError> {
    let dir = out_dir(config);
    let rows = run_sweep(&sweep_spec(config))?;
    write_file(&dir.join("sweep.csv"), &output::sweep_csv(&rows))?;
    for row in &rows {
        if let Some((traj, obs)) = &row.trajectory {
            let path = dir
                .join("trajectories")
                .join(format!("point_{:05}.csv", row.index));
            write_file(&path, &output::trajectory_csv(traj, obs))?;
        }
    }
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    let mut report = format!("{} grid points, {} failed\n", rows.len(), failed);
    for row in rows.iter().filter_map(|r| r.outcome.as_ref().err().map(|e| (r.index, e))) {
        let _ = writeln!(report, "  point {}: {}", row.0, row.1);
    }
    let _ = writeln!(report, "wrote {}", dir.join("sweep.csv").display());
    Ok(Outcome {
        code: EXIT_OK,
        report,
    })
}

/// Gain matrix and drift spectrum; writes `stability.json`.
pub fn run_stability(config: &RunConfig) -> Result<Outcome, CommandError> {
    let system = DriftSystem64::from_params(&config.params)?;
    let spectrum = spectral_summary(&system);
    let json = output::stability_json(&config.params, system.alphas(), &spectrum);
    write_file(&out_dir(config).join("stability.json"), &json)?;
    Ok(Outcome {
        code: EXIT_OK,
        report: json,
    })
}

/// Deliberate corruption of the closed-form gain path, for exercising
/// `verify` itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    GainSign,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gain-sign" => Ok(Fault::GainSign),
            other => Err(format!("unknown fault `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Driven-case beta deviations; informational only.
    pub beta_table: String,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn render(&self) -> String {
        let mut s = format!("verify (seed {:#x})\n", self.seed);
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "[{tag}] {:<34} {}", c.name, c.detail);
        }
        s.push_str("\nbeta_oracle deviation from closed forms (driven points, diagnostic)\n");
        s.push_str(&self.beta_table);
        if !self.passed() {
            let _ = writeln!(s, "\nfailed: {}", self.failed_names().join(", "));
        }
        s
    }
}

fn gain_path(fault: Option<Fault>) -> impl Fn(&ModelParams64) -> beatlaser::Result<AlphaMatrix64> {
    move |p| {
        let a = gain_matrix(p)?;
        Ok(match fault {
            Some(Fault::GainSign) => a.map(|z| -z),
            None => a,
        })
    }
}

const EQUIVALENCE_TOL: f64 = 1e-10;
const INTEGRATOR_TOL: f64 = 1e-6;
const HERMITICITY_TOL: f64 = 1e-8;
const ANALYTIC_TOL: f64 = 1e-8;

/// Runs every hard check on the seeded grid and the reference parameters.
pub fn verify(seed: u64, fault: Option<Fault>) -> VerifyReport {
    let grid = random_grid::<f64>(seed, DEFAULT_GRID_POINTS);
    let mut checks = Vec::new();

    let alpha = compare_alpha_paths(&grid, EQUIVALENCE_TOL, gain_path(fault));
    checks.push(Check {
        name: "gain_matrix vs alpha_oracle",
        passed: alpha.passed(),
        detail: format!(
            "{} points, max rel err {:.3e}, {} over tolerance, {} skipped",
            alpha.points,
            alpha.max_error,
            alpha.failures.len(),
            alpha.skipped
        ),
    });

    let undriven: Vec<_> = grid
        .iter()
        .map(|p| ModelParams64 { omega_abs: 0.0, ..*p })
        .collect();
    let beta = compare_beta_paths(&undriven, EQUIVALENCE_TOL);
    checks.push(Check {
        name: "atomic_betas vs beta_oracle (drive off)",
        passed: beta.passed(),
        detail: format!("{} points, max rel err {:.3e}", beta.points, beta.max_error),
    });

    let reference = ModelParams64::default();
    let start = coherent_initial_state(Complex64::new(10.0, 0.0), Complex64::new(-10.0, 0.0));
    let run = |method| RunSettings64 {
        t_max: 10.0,
        dt: 1e-3,
        stride: 10,
        method,
    };
    let trajectories = DriftSystem64::from_params(&reference).and_then(|sys| {
        let rk = simulate(&sys, &start, &run(Method::Rk4))?;
        let ex = simulate(&sys, &start, &run(Method::Exact))?;
        Ok((rk, ex))
    });
    match &trajectories {
        Ok((rk, ex)) => {
            let dev = trajectory_deviation(rk, ex);
            checks.push(Check {
                name: "rk4 vs exact propagator",
                passed: dev < INTEGRATOR_TOL,
                detail: format!("sup rel deviation {dev:.3e} over t in [0, 10]"),
            });
            let herm = hermiticity_residual(rk);
            let imag = photon_imag_residual(rk);
            checks.push(Check {
                name: "hermiticity along rk4 trajectory",
                passed: herm < HERMITICITY_TOL && imag < HERMITICITY_TOL,
                detail: format!("pair residual {herm:.3e}, Im n residual {imag:.3e}"),
            });
        }
        Err(e) => {
            for name in ["rk4 vs exact propagator", "hermiticity along rk4 trajectory"] {
                checks.push(Check {
                    name,
                    passed: false,
                    detail: e.to_string(),
                });
            }
        }
    }

    let decoupled = ModelParams64 {
        p: 0.0,
        omega_abs: 0.0,
        phi: 0.0,
        ..reference
    };
    let analytic = DriftSystem64::from_params(&decoupled).and_then(|sys| {
        let a11 = Complex64::new(-1.25, 1.25);
        [1.0, 2.0, 5.0].into_iter().try_fold(0.0f64, |worst, t| {
            let s = propagate_exact(&sys, &start, t)?;
            let want = (-(a11 + decoupled.kappa1) * t).exp() * 10.0;
            Ok(worst.max(relative_error(s[Moment::M1], want)))
        })
    });
    checks.push(match analytic {
        Ok(err) => Check {
            name: "decoupled analytic amplitude",
            passed: err < ANALYTIC_TOL,
            detail: format!("max rel err {err:.3e} at t = 1, 2, 5"),
        },
        Err(e) => Check {
            name: "decoupled analytic amplitude",
            passed: false,
            detail: e.to_string(),
        },
    });

    let mut beta_table = String::from("  point      |Omega|   beta_aa    beta_bb    beta_ab    beta_ba\n");
    for (k, p) in grid.iter().enumerate().take(10) {
        let _ = match beta_oracle(p) {
            Ok(r) => writeln!(
                beta_table,
                "  {k:>5} {:>12.4} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}",
                p.omega_abs, r.deviation[0], r.deviation[1], r.deviation[2], r.deviation[3]
            ),
            Err(e) => writeln!(beta_table, "  {k:>5} {:>12.4} {e}", p.omega_abs),
        };
    }

    VerifyReport {
        seed,
        checks,
        beta_table,
    }
}

/// `verify` as a command: prints the report, writes `verify.txt` when an
/// output directory was given.
pub fn run_verify(config: &RunConfig, fault: Option<Fault>) -> Result<Outcome, CommandError> {
    let report = verify(config.seed, fault);
    let text = report.render();
    if let Some(dir) = &config.out {
        write_file(&dir.join("verify.txt"), &text)?;
    }
    Ok(Outcome {
        code: if report.passed() {
            EXIT_OK
        } else {
            EXIT_VERIFY_FAILED
        },
        report: text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_passes_and_fault_is_named() {
        let good = verify(beatlaser::harness::DEFAULT_SEED, None);
        assert!(good.passed(), "{}", good.render());
        let bad = verify(beatlaser::harness::DEFAULT_SEED, Some(Fault::GainSign));
        assert_eq!(bad.failed_names(), vec!["gain_matrix vs alpha_oracle"]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NonFiniteState { time: 1.0 }), EXIT_BLOW_UP);
        assert_eq!(exit_code(&Error::OutOfRangeP(2.0)), EXIT_INVALID);
    }
}
