//! Run configuration: TOML file, command-line overrides, defaults.

use std::path::{Path, PathBuf};

use beatlaser::harness::{SweepAxis, DEFAULT_SEED};
use beatlaser::{Method, ModelParams64, RunSettings64};
use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Sweep,
    Stability,
    Verify,
}

/// Fully resolved configuration of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: ModelParams64,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub run: RunSettings64,
    /// Artifact directory. `None` only for `verify` without `--out`.
    pub out: Option<PathBuf>,
    pub axes: Vec<(SweepAxis, Vec<f64>)>,
    pub seed: u64,
    pub write_trajectories: bool,
}

pub const DEFAULT_OUT_DIR: &str = "out";

/// Values given on the command line. Every field overrides the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub omega_abs: Option<f64>,
    pub phi: Option<f64>,
    pub delta: Option<f64>,
    pub gamma_a: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub alpha1: Option<String>,
    pub alpha2: Option<String>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub method: Option<String>,
    pub axes: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub write_trajectories: bool,
}

/// On-disk layout. Keys mirror the long flag names with `_` for `-`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    gamma: Option<f64>,
    #[serde(rename = "P", alias = "p")]
    p: Option<f64>,
    omega_abs: Option<f64>,
    phi: Option<f64>,
    delta: Option<f64>,
    gamma_a: Option<f64>,
    kappa1: Option<f64>,
    kappa2: Option<f64>,
    g1: Option<f64>,
    g2: Option<f64>,
    alpha1: Option<[f64; 2]>,
    alpha2: Option<[f64; 2]>,
    t_max: Option<f64>,
    dt: Option<f64>,
    stride: Option<usize>,
    method: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    trajectories: Option<bool>,
    #[serde(default)]
    axes: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", describe_parse(.line, .key, .message))]
pub struct ParseError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

fn describe_parse(line: &Option<usize>, key: &Option<String>, message: &str) -> String {
    let mut s = String::from("config parse error");
    if let Some(l) = line {
        s.push_str(&format!(" at line {l}"));
    }
    if let Some(k) = key {
        s.push_str(&format!(" (key `{k}`)"));
    }
    format!("{s}: {message}")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid value for {flag}: {reason}")]
    Flag { flag: String, reason: String },
    #[error("validation error: {0}")]
    Validation(#[from] beatlaser::Error),
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

fn key_at(src: &str, offset: usize) -> Option<String> {
    let line_start = src[..offset.min(src.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = src[line_start..].lines().next()?;
    let (key, _) = line.split_once('=')?;
    let key = key.trim();
    (!key.is_empty()).then(|| key.to_string())
}

fn parse_file(src: &str) -> Result<FileConfig, ParseError> {
    toml::from_str(src).map_err(|e| {
        let offset = e.span().map(|s| s.start);
        let message = e.message().trim().to_string();
        ParseError {
            line: offset.map(|o| line_of(src, o)),
            key: backticked(&message).or_else(|| offset.and_then(|o| key_at(src, o))),
            message,
        }
    })
}

fn flag_err(flag: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Flag {
        flag: flag.to_string(),
        reason: reason.into(),
    }
}

/// Parses `RE` or `RE,IM`.
pub fn parse_complex(flag: &str, s: &str) -> Result<Complex64, ConfigError> {
    let mut parts = s.split(',').map(str::trim);
    let mut next = |what: &str| -> Result<Option<f64>, ConfigError> {
        parts
            .next()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| flag_err(flag, format!("bad {what} part `{p}`")))
            })
            .transpose()
    };
    let re = next("real")?.ok_or_else(|| flag_err(flag, "empty value"))?;
    let im = next("imaginary")?.unwrap_or(0.0);
    if parts.next().is_some() {
        return Err(flag_err(flag, "expected RE or RE,IM"));
    }
    Ok(Complex64::new(re, im))
}

/// Parses `NAME=v1,v2,...`.
pub fn parse_axis(s: &str) -> Result<(SweepAxis, Vec<f64>), ConfigError> {
    let (name, values) = s
        .split_once('=')
        .ok_or_else(|| flag_err("--axis", format!("expected NAME=v1,v2,... in `{s}`")))?;
    let axis = SweepAxis::parse(name)
        .ok_or_else(|| flag_err("--axis", format!("unknown parameter `{}`", name.trim())))?;
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| flag_err("--axis", format!("bad number `{v}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((axis, values))
}

fn file_axes(table: &toml::Table) -> Result<Vec<(SweepAxis, Vec<f64>)>, ConfigError> {
    table
        .iter()
        .map(|(name, value)| {
            let axis = SweepAxis::parse(name).ok_or_else(|| ParseError {
                line: None,
                key: Some(format!("axes.{name}")),
                message: "unknown sweep parameter".into(),
            })?;
            let bad = || ParseError {
                line: None,
                key: Some(format!("axes.{name}")),
                message: "expected an array of numbers".into(),
            };
            let values = value
                .as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(bad)?;
            Ok((axis, values))
        })
        .collect()
}

/// Reads `path` (if any), applies `overrides` on top and the defaults
/// underneath, then validates.
pub fn parse_config(
    mode: Mode,
    path: Option<&Path>,
    overrides: &Overrides,
) -> Result<RunConfig, ConfigError> {
    let file = match path {
        Some(p) => {
            let src = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            parse_file(&src)?
        }
        None => FileConfig::default(),
    };
    resolve(mode, file, overrides)
}

/// Same as [`parse_config`] with the file content given directly.
pub fn parse_config_str(
    mode: Mode,
    src: &str,
    overrides: &Overrides,
) -> Result<RunConfig, ConfigError> {
    resolve(mode, parse_file(src)?, overrides)
}

fn resolve(mode: Mode, file: FileConfig, o: &Overrides) -> Result<RunConfig, ConfigError> {
    let d = ModelParams64::default();
    let params = ModelParams64 {
        gamma: o.gamma.or(file.gamma).unwrap_or(d.gamma),
        p: o.p.or(file.p).unwrap_or(d.p),
        omega_abs: o.omega_abs.or(file.omega_abs).unwrap_or(d.omega_abs),
        phi: o.phi.or(file.phi).unwrap_or(d.phi),
        delta: o.delta.or(file.delta).unwrap_or(d.delta),
        gamma_a: o.gamma_a.or(file.gamma_a).unwrap_or(d.gamma_a),
        kappa1: o.kappa1.or(file.kappa1).unwrap_or(d.kappa1),
        kappa2: o.kappa2.or(file.kappa2).unwrap_or(d.kappa2),
        g1: o.g1.or(file.g1).unwrap_or(d.g1),
        g2: o.g2.or(file.g2).unwrap_or(d.g2),
    };

    let alpha = |flag: &str, cli: &Option<String>, f: Option<[f64; 2]>, default: f64| {
        match cli {
            Some(s) => parse_complex(flag, s),
            None => Ok(f.map_or(Complex64::new(default, 0.0), |[r, i]| Complex64::new(r, i))),
        }
    };
    let alpha1 = alpha("--alpha1", &o.alpha1, file.alpha1, 10.0)?;
    let alpha2 = alpha("--alpha2", &o.alpha2, file.alpha2, -10.0)?;

    let dr = RunSettings64::default();
    let method = match o.method.as_deref().or(file.method.as_deref()) {
        Some(m) => m.parse::<Method>().map_err(|_| {
            flag_err("--method", format!("unknown method `{m}` (rk4 or exact)"))
        })?,
        None => dr.method,
    };
    let run = RunSettings64 {
        t_max: o.t_max.or(file.t_max).unwrap_or(dr.t_max),
        dt: o.dt.or(file.dt).unwrap_or(dr.dt),
        stride: o.stride.or(file.stride).unwrap_or(dr.stride),
        method,
    };

    let axes = if o.axes.is_empty() {
        file_axes(&file.axes)?
    } else {
        o.axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?
    };

    let out = o.out.clone().or(file.out).or_else(|| match mode {
        Mode::Verify => None,
        _ => Some(PathBuf::from(DEFAULT_OUT_DIR)),
    });

    if !alpha1.re.is_finite() || !alpha1.im.is_finite() {
        return Err(flag_err("--alpha1", "must be finite"));
    }
    if !alpha2.re.is_finite() || !alpha2.im.is_finite() {
        return Err(flag_err("--alpha2", "must be finite"));
    }
    let config = RunConfig {
        mode,
        params: params.validate()?,
        alpha1,
        alpha2,
        run: run.validate()?,
        out,
        axes,
        seed: o.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        write_trajectories: o.write_trajectories || file.trajectories.unwrap_or(false),
    };
    Ok(config)
}
