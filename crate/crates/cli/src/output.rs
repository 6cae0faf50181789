//! Deterministic CSV and JSON artifacts.
//!
//! CSV cells use `{:.16e}` (17 significant digits), which round-trips every
//! finite `f64`. JSON numbers use serde_json's shortest round-trip form.

use std::fmt::Write as _;

use beatlaser::analysis::{EntanglementWindow, Observables, SpectralSummary, TrajectorySummary};
use beatlaser::harness::SweepRow;
use beatlaser::{AlphaMatrix64, Error, Moment, ModelParams64, RunSettings64, Trajectory64};
use num_complex::Complex64;
use serde::Serialize;

/// Formats a CSV cell with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

const PARAM_COLUMNS: [&str; 10] = [
    "gamma", "P", "omega_abs", "phi", "delta", "gamma_a", "kappa1", "kappa2", "g1", "g2",
];

fn param_values(p: &ModelParams64) -> [f64; 10] {
    [
        p.gamma, p.p, p.omega_abs, p.phi, p.delta, p.gamma_a, p.kappa1, p.kappa2, p.g1, p.g2,
    ]
}

/// Trajectory table: `t, V, N`, then `re_<m>, im_<m>` for each moment.
pub fn trajectory_csv(traj: &Trajectory64, obs: &Observables<f64>) -> String {
    let mut out = String::from("t,V,N");
    for m in Moment::ALL {
        let _ = write!(out, ",re_{0},im_{0}", m.name());
    }
    out.push('\n');
    for (k, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        out.push_str(&num(*t));
        out.push(',');
        out.push_str(&num(obs.v[k]));
        out.push(',');
        out.push_str(&num(obs.n[k]));
        for z in s.as_array() {
            out.push(',');
            out.push_str(&num(z.re));
            out.push(',');
            out.push_str(&num(z.im));
        }
        out.push('\n');
    }
    out
}

/// Short machine-readable tag of an error variant.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::OutOfRangeP(_) => "out_of_range_p",
        Error::DegenerateParameters { .. } => "degenerate_parameters",
        Error::NonFiniteState { .. } => "non_finite_state",
        Error::NonPhysicalState { .. } => "non_physical_state",
        Error::SingularSystem { .. } => "singular_system",
        Error::InvalidRun { .. } => "invalid_run",
        Error::InvalidSweep(_) => "invalid_sweep",
    }
}

const SWEEP_METRIC_COLUMNS: [&str; 8] = [
    "v_min",
    "t_at_vmin",
    "first_window_duration",
    "first_window_open",
    "n_max",
    "t_at_nmax",
    "max_real_eigenvalue",
    "status",
];

/// One line per grid point. Failed points leave the metric cells empty and
/// carry the error tag in `status`.
pub fn sweep_csv(rows: &[SweepRow<f64>]) -> String {
    let mut out = String::from("index");
    for c in PARAM_COLUMNS.iter().chain(&SWEEP_METRIC_COLUMNS) {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.index.to_string());
        for v in param_values(&row.params) {
            out.push(',');
            out.push_str(&num(v));
        }
        match &row.outcome {
            Ok(m) => {
                let (dur, open) = match m.first_window {
                    Some(w) => (num(w.duration()), w.open.to_string()),
                    None => (String::new(), String::new()),
                };
                let _ = write!(
                    out,
                    ",{},{},{},{},{},{},{},ok",
                    num(m.v_min),
                    num(m.t_at_vmin),
                    dur,
                    open,
                    num(m.n_max),
                    num(m.t_at_nmax),
                    num(m.max_real_eigenvalue)
                );
            }
            Err(e) => {
                out.push_str(",,,,,,,,");
                out.push_str(error_kind(e));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
pub struct ParamsJson {
    pub gamma: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub omega_abs: f64,
    pub phi: f64,
    pub delta: f64,
    pub gamma_a: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub g1: f64,
    pub g2: f64,
}

impl From<&ModelParams64> for ParamsJson {
    fn from(p: &ModelParams64) -> Self {
        Self {
            gamma: p.gamma,
            p: p.p,
            omega_abs: p.omega_abs,
            phi: p.phi,
            delta: p.delta,
            gamma_a: p.gamma_a,
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            g1: p.g1,
            g2: p.g2,
        }
    }
}

#[derive(Serialize)]
pub struct GridJson {
    pub t_max: f64,
    pub dt: f64,
    pub stride: usize,
}

impl From<&RunSettings64> for GridJson {
    fn from(r: &RunSettings64) -> Self {
        Self {
            t_max: r.t_max,
            dt: r.dt,
            stride: r.stride,
        }
    }
}

#[derive(Serialize)]
pub struct WindowJson {
    pub t_start: f64,
    pub t_end: f64,
    pub duration: f64,
    pub v_min: f64,
    pub t_at_min: f64,
    pub open: bool,
}

impl From<&EntanglementWindow<f64>> for WindowJson {
    fn from(w: &EntanglementWindow<f64>) -> Self {
        Self {
            t_start: w.t_start,
            t_end: w.t_end,
            duration: w.duration(),
            v_min: w.v_min,
            t_at_min: w.t_at_min,
            open: w.open,
        }
    }
}

#[derive(Serialize)]
pub struct SummaryJson {
    pub params: ParamsJson,
    pub v_min: f64,
    pub t_at_vmin: f64,
    pub windows: Vec<WindowJson>,
    pub n_max: f64,
    pub t_at_nmax: f64,
    pub max_real_eigenvalue: f64,
    pub method: &'static str,
    pub grid: GridJson,
}

pub fn summary_json(
    params: &ModelParams64,
    summary: &TrajectorySummary<f64>,
    spectrum: &SpectralSummary<f64>,
    run: &RunSettings64,
) -> String {
    to_json(&SummaryJson {
        params: params.into(),
        v_min: summary.v_min,
        t_at_vmin: summary.t_at_vmin,
        windows: summary.windows.iter().map(Into::into).collect(),
        n_max: summary.n_max,
        t_at_nmax: summary.t_at_nmax,
        max_real_eigenvalue: spectrum.max_real_part,
        method: run.method.name(),
        grid: run.into(),
    })
}

#[derive(Serialize)]
struct FailureJson {
    params: ParamsJson,
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    blow_up_time: Option<f64>,
    method: &'static str,
    grid: GridJson,
}

/// Summary written when a run stops on an error.
pub fn failure_json(params: &ModelParams64, run: &RunSettings64, err: &Error) -> String {
    let blow_up_time = match err {
        Error::NonFiniteState { time } => Some(*time),
        _ => None,
    };
    to_json(&FailureJson {
        params: params.into(),
        error: error_kind(err),
        message: err.to_string(),
        blow_up_time,
        method: run.method.name(),
        grid: run.into(),
    })
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
struct StabilityJson {
    params: ParamsJson,
    alpha: [[[f64; 2]; 2]; 2],
    eigenvalues: Vec<[f64; 2]>,
    max_real_eigenvalue: f64,
    net_gain: bool,
}

/// Gain matrix entries as `[re, im]` pairs and the drift spectrum.
pub fn stability_json(
    params: &ModelParams64,
    alphas: &AlphaMatrix64,
    spectrum: &SpectralSummary<f64>,
) -> String {
    let e = alphas.entries();
    to_json(&StabilityJson {
        params: params.into(),
        alpha: [[pair(e[0][0]), pair(e[0][1])], [pair(e[1][0]), pair(e[1][1])]],
        eigenvalues: spectrum.eigenvalues.iter().map(|z| pair(*z)).collect(),
        max_real_eigenvalue: spectrum.max_real_part,
        net_gain: spectrum.net_gain,
    })
}

fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}
