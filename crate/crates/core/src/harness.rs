//! Independent oracles for the closed-form coefficients, consistency
//! diagnostics for trajectories, and the parameter-sweep engine.
//!
//! The oracles solve the underlying steady-state linear systems numerically
//! instead of evaluating closed forms, so agreement between the two routes
//! is a meaningful check of both.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{spectral_summary, summarize, EntanglementWindow, Observables};
use crate::dynamics::{
    apply_propagator, coherent_initial_state, propagate_exact, simulate, DriftSystem, MomentState,
    RunSettings, Trajectory,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{atomic_betas, AlphaMatrix, BetaSet, ModelParams, EPS_DEG};
use crate::scalar::{cx, i_unit, re, relative_error, Cx, Real};

/// Seed of the reproducible oracle grid.
pub const DEFAULT_SEED: u64 = 0xB3A7;

/// Size of the oracle grid.
pub const DEFAULT_GRID_POINTS: usize = 100;

fn beta_error_as_singular(e: Error) -> Error {
    match e {
        Error::DegenerateParameters { magnitude, .. } => Error::SingularSystem {
            system: "zeroth-order atomic",
            pivot: magnitude,
        },
        other => other,
    }
}

/// Gain matrix from a direct numerical solve of the stationary first-order
/// coherence equations for `g1 ρ_ac` and `g2 ρ_bc`, with `ρ_cc = 0`.
pub fn alpha_oracle<T: Real>(params: &ModelParams<T>) -> Result<AlphaMatrix<T>> {
    let params = params.validate()?;
    let b = atomic_betas(&params).map_err(beta_error_as_singular)?;
    let i = i_unit::<T>();
    let om = params.omega();
    let g12 = re(params.gamma12());
    let gamma = re(params.gamma);
    let delta = re(params.delta);

    // Stationary coherences: M · [ρ_ac, ρ_bc]^T = (g1 β_·a a1 + g2 β_·b a2)
    let m = CMatrix::from_rows(&[
        vec![delta - i * gamma, -om - i * g12],
        vec![-om.conj() - i * g12, delta - i * gamma],
    ]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det.norm().is_nan() || det.norm() <= T::lit(EPS_DEG) {
        return Err(Error::SingularSystem {
            system: "first-order coherence",
            pivot: det.norm().as_f64(),
        });
    }
    let (g1, g2) = (re(params.g1), re(params.g2));
    // Columns: coefficient of a1, coefficient of a2.
    let rhs = CMatrix::from_rows(&[
        vec![g1 * b.beta_aa, g2 * b.beta_ab],
        vec![g1 * b.beta_ba, g2 * b.beta_bb],
    ]);
    let x = m.solve(&rhs, T::zero()).ok_or(Error::SingularSystem {
        system: "first-order coherence",
        pivot: 0.0,
    })?;
    Ok(AlphaMatrix {
        a11: i * g1 * x[(0, 0)],
        a12: i * g1 * x[(0, 1)],
        a21: i * g2 * x[(1, 0)],
        a22: i * g2 * x[(1, 1)],
        d1: -det,
    })
}

/// Zeroth-order steady state from the numerical solve and its deviation from
/// the closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaOracleReport<T> {
    /// Solved coefficients; `d2` holds the determinant of the 4×4 system.
    pub oracle: BetaSet<T>,
    pub closed_form: BetaSet<T>,
    /// Relative deviation of `[aa, bb, ab, ba]`.
    pub deviation: [T; 4],
}

impl<T: Real> BetaOracleReport<T> {
    pub fn max_deviation(&self) -> T {
        self.deviation.iter().copied().fold(T::zero(), T::max)
    }
}

/// Solves the stationary zeroth-order equations for
/// `(ρ_aa, ρ_bb, ρ_ab, ρ_ba)` with incoherent pumping `gamma_a` into `|a>`.
pub fn beta_oracle<T: Real>(params: &ModelParams<T>) -> Result<BetaOracleReport<T>> {
    let params = params.validate()?;
    let i = i_unit::<T>();
    let om = params.omega();
    let omc = om.conj();
    let g12 = re(params.gamma12());
    let decay = i * re(T::lit(2.0) * params.gamma);
    let z = Cx::new(T::zero(), T::zero());

    let m = CMatrix::from_rows(&[
        vec![-decay, z, -i * g12 + omc, -i * g12 - om],
        vec![z, -decay, -i * g12 - omc, -i * g12 + om],
        vec![-i * g12 + om, -i * g12 - om, -decay, z],
        vec![-i * g12 - omc, -i * g12 + omc, z, -decay],
    ]);
    let lu = m.lu(T::lit(EPS_DEG)).ok_or(Error::SingularSystem {
        system: "zeroth-order atomic",
        pivot: 0.0,
    })?;
    let rhs = [-i * re(params.gamma_a), z, z, z];
    let x = lu.solve_vec(&rhs);
    let oracle = BetaSet {
        beta_aa: x[0],
        beta_bb: x[1],
        beta_ab: x[2],
        beta_ba: x[3],
        d2: lu.determinant(),
    };
    let closed_form = atomic_betas(&params)?;
    let deviation = [
        relative_error(oracle.beta_aa, closed_form.beta_aa),
        relative_error(oracle.beta_bb, closed_form.beta_bb),
        relative_error(oracle.beta_ab, closed_form.beta_ab),
        relative_error(oracle.beta_ba, closed_form.beta_ba),
    ];
    Ok(BetaOracleReport {
        oracle,
        closed_form,
        deviation,
    })
}

/// Largest normalized conjugate-pair residual over a trajectory.
pub fn hermiticity_residual<T: Real>(traj: &Trajectory<T>) -> T {
    traj.states
        .iter()
        .map(|s| s.conjugate_residual())
        .fold(T::zero(), T::max)
}

/// Largest normalized `|Im n1|`, `|Im n2|` over a trajectory.
pub fn photon_imag_residual<T: Real>(traj: &Trajectory<T>) -> T {
    traj.states
        .iter()
        .map(|s| s.photon_imag_residual())
        .fold(T::zero(), T::max)
}

/// Sup over samples of the relative sup-norm deviation of `a` from `b`.
/// The trajectories must share their time grid.
pub fn trajectory_deviation<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> T {
    assert_eq!(a.times.len(), b.times.len(), "trajectories differ in length");
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| x.relative_deviation(y))
        .fold(T::zero(), T::max)
}

/// Least-squares slope of `ln ||M(t)||∞` over `t ∈ [t_end/2, t_end]`,
/// sampled with the exact propagator.
pub fn measured_growth_rate<T: Real>(
    system: &DriftSystem<T>,
    initial: &MomentState<T>,
    t_end: T,
) -> Result<T> {
    let samples = 21usize;
    let half = t_end / T::lit(2.0);
    let step = half / T::lit((samples - 1) as f64);
    let mut state = propagate_exact(system, initial, half)?;
    let e = system.propagator(step);
    let mut pts = Vec::with_capacity(samples);
    for k in 0..samples {
        if k > 0 {
            state = apply_propagator(&e, &state);
        }
        pts.push((half + step * T::lit(k as f64), state.norm_inf().ln()));
    }
    let n = T::lit(samples as f64);
    let mean_t = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let mean_y = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (num, den) = pts.iter().fold((T::zero(), T::zero()), |(nu, de), &(t, y)| {
        (nu + (t - mean_t) * (y - mean_y), de + (t - mean_t) * (t - mean_t))
    });
    Ok(num / den)
}

/// Reproducible pseudo-random parameter grid spanning
/// `gamma ∈ [0.5, 2]`, `P ∈ [0, 0.9]`, `|Ω| ∈ [0, 20]`, `Δ ∈ [-10, 10]`,
/// `gamma_a ∈ [1, 10]`, `φ ∈ [0, 2π)`; the other fields keep their defaults.
pub fn random_grid<T: Real>(seed: u64, points: usize) -> Vec<ModelParams<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..points)
        .map(|_| {
            let gamma = rng.random_range(0.5..=2.0);
            let p = rng.random_range(0.0..=0.9);
            let omega_abs = rng.random_range(0.0..=20.0);
            let delta = rng.random_range(-10.0..=10.0);
            let gamma_a = rng.random_range(1.0..=10.0);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            ModelParams {
                gamma: T::lit(gamma),
                p: T::lit(p),
                omega_abs: T::lit(omega_abs),
                phi: T::lit(phi),
                delta: T::lit(delta),
                gamma_a: T::lit(gamma_a),
                ..ModelParams::default()
            }
        })
        .collect()
}

/// Outcome of comparing two coefficient routes over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathComparison<T> {
    pub points: usize,
    /// Points where either route reported degeneracy.
    pub skipped: usize,
    pub max_error: T,
    pub worst_index: Option<usize>,
    /// Indices whose error reached the tolerance.
    pub failures: Vec<usize>,
}

impl<T: Real> PathComparison<T> {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.skipped < self.points
    }
}

fn compare_over<T: Real>(
    grid: &[ModelParams<T>],
    tol: T,
    err: impl Fn(&ModelParams<T>) -> Option<T>,
) -> PathComparison<T> {
    let mut out = PathComparison {
        points: grid.len(),
        skipped: 0,
        max_error: T::zero(),
        worst_index: None,
        failures: Vec::new(),
    };
    for (k, p) in grid.iter().enumerate() {
        match err(p) {
            None => out.skipped += 1,
            Some(e) => {
                if e.is_nan() || e >= tol {
                    out.failures.push(k);
                }
                if e > out.max_error || e.is_nan() || out.worst_index.is_none() {
                    out.max_error = e;
                    out.worst_index = Some(k);
                }
            }
        }
    }
    out
}

/// Compares `gain` (normally [`gain_matrix`]) against [`alpha_oracle`].
pub fn compare_alpha_paths<T: Real>(
    grid: &[ModelParams<T>],
    tol: T,
    gain: impl Fn(&ModelParams<T>) -> Result<AlphaMatrix<T>>,
) -> PathComparison<T> {
    compare_over(grid, tol, |p| {
        let a = gain(p).ok()?;
        let b = alpha_oracle(p).ok()?;
        Some(a.max_relative_error(&b))
    })
}

/// Compares [`beta_oracle`] against [`atomic_betas`].
pub fn compare_beta_paths<T: Real>(grid: &[ModelParams<T>], tol: T) -> PathComparison<T> {
    compare_over(grid, tol, |p| beta_oracle(p).ok().map(|r| r.max_deviation()))
}

/// Parameters a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Gamma,
    P,
    Delta,
    OmegaAbs,
    Phi,
    Kappa1,
    Kappa2,
    GammaA,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 8] = [
        SweepAxis::Gamma,
        SweepAxis::P,
        SweepAxis::Delta,
        SweepAxis::OmegaAbs,
        SweepAxis::Phi,
        SweepAxis::Kappa1,
        SweepAxis::Kappa2,
        SweepAxis::GammaA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::P => "P",
            SweepAxis::Delta => "delta",
            SweepAxis::OmegaAbs => "omega_abs",
            SweepAxis::Phi => "phi",
            SweepAxis::Kappa1 => "kappa1",
            SweepAxis::Kappa2 => "kappa2",
            SweepAxis::GammaA => "gamma_a",
        }
    }

    /// Accepts the canonical name, its hyphenated form, and `p` for `P`.
    pub fn parse(name: &str) -> Option<Self> {
        let norm = name.trim().replace('-', "_");
        if norm == "p" {
            return Some(SweepAxis::P);
        }
        Self::ALL.into_iter().find(|a| a.name() == norm)
    }

    pub fn apply<T: Real>(self, params: &mut ModelParams<T>, value: T) {
        let slot = match self {
            SweepAxis::Gamma => &mut params.gamma,
            SweepAxis::P => &mut params.p,
            SweepAxis::Delta => &mut params.delta,
            SweepAxis::OmegaAbs => &mut params.omega_abs,
            SweepAxis::Phi => &mut params.phi,
            SweepAxis::Kappa1 => &mut params.kappa1,
            SweepAxis::Kappa2 => &mut params.kappa2,
            SweepAxis::GammaA => &mut params.gamma_a,
        };
        *slot = value;
    }
}

/// Default cap on the number of sweep grid points.
pub const DEFAULT_GRID_CAP: usize = 10_000;

/// Cartesian parameter sweep around a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec<T> {
    pub base: ModelParams<T>,
    /// Varied parameters; the first axis varies slowest.
    pub axes: Vec<(SweepAxis, Vec<T>)>,
    pub initial: (Cx<T>, Cx<T>),
    pub run: RunSettings<T>,
    pub grid_cap: usize,
    /// Keep each point's trajectory and observables in its row.
    pub keep_trajectories: bool,
}

impl<T: Real> SweepSpec<T> {
    pub fn new(base: ModelParams<T>, axes: Vec<(SweepAxis, Vec<T>)>) -> Self {
        Self {
            base,
            axes,
            initial: (cx(T::lit(10.0), T::zero()), cx(T::lit(-10.0), T::zero())),
            run: RunSettings::default(),
            grid_cap: DEFAULT_GRID_CAP,
            keep_trajectories: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, (axis, values)) in self.axes.iter().enumerate() {
            if values.is_empty() {
                return Err(Error::InvalidSweep(format!("axis `{}` has no values", axis.name())));
            }
            if self.axes[..k].iter().any(|(a, _)| a == axis) {
                return Err(Error::InvalidSweep(format!("axis `{}` given twice", axis.name())));
            }
        }
        let size = self.grid_size();
        if size > self.grid_cap {
            return Err(Error::InvalidSweep(format!(
                "grid has {size} points, cap is {}",
                self.grid_cap
            )));
        }
        self.run.validate()?;
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.axes
            .iter()
            .map(|(_, v)| v.len())
            .fold(1usize, |acc, n| acc.saturating_mul(n))
    }

    /// Parameters of the `index`-th grid point in lexicographic order.
    pub fn point(&self, index: usize) -> ModelParams<T> {
        let mut params = self.base;
        let mut rem = index;
        for (axis, values) in self.axes.iter().rev() {
            axis.apply(&mut params, values[rem % values.len()]);
            rem /= values.len();
        }
        params
    }
}

/// Headline metrics of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepMetrics<T> {
    pub v_min: T,
    pub t_at_vmin: T,
    pub first_window: Option<EntanglementWindow<T>>,
    pub window_count: usize,
    pub n_max: T,
    pub t_at_nmax: T,
    pub max_real_eigenvalue: T,
}

impl<T: Real> SweepMetrics<T> {
    pub fn first_window_duration(&self) -> Option<T> {
        self.first_window.map(|w| w.duration())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub index: usize,
    pub params: ModelParams<T>,
    pub outcome: Result<SweepMetrics<T>>,
    pub trajectory: Option<(Trajectory<T>, Observables<T>)>,
}

fn run_point<T: Real>(spec: &SweepSpec<T>, index: usize) -> SweepRow<T> {
    let params = spec.point(index);
    let mut trajectory = None;
    let outcome = (|| {
        let system = DriftSystem::from_params(&params)?;
        let initial = coherent_initial_state(spec.initial.0, spec.initial.1);
        let traj = simulate(&system, &initial, &spec.run)?;
        let summary = summarize(&traj)?;
        let spectrum = spectral_summary(&system);
        if spec.keep_trajectories {
            trajectory = Some((traj.clone(), crate::analysis::observables(&traj)?));
        }
        Ok(SweepMetrics {
            v_min: summary.v_min,
            t_at_vmin: summary.t_at_vmin,
            first_window: summary.first_window().copied(),
            window_count: summary.windows.len(),
            n_max: summary.n_max,
            t_at_nmax: summary.t_at_nmax,
            max_real_eigenvalue: spectrum.max_real_part,
        })
    })();
    SweepRow {
        index,
        params,
        outcome,
        trajectory,
    }
}

/// Runs every grid point through validate → gain matrix → drift →
/// simulation → analysis. Points run in parallel; rows come back in grid
/// order. Per-point failures are stored in the row.
pub fn run_sweep<T: Real>(spec: &SweepSpec<T>) -> Result<Vec<SweepRow<T>>> {
    spec.validate()?;
    Ok((0..spec.grid_size())
        .into_par_iter()
        .map(|k| run_point(spec, k))
        .collect())
}
