//! Two-mode quantum beat laser: zeroth- and first-order atomic steady
//! states, the closed linear moment system for the cavity fields, and the
//! Duan–Giedke–Cirac–Zoller entanglement criterion evaluated along its
//! trajectories.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the scalar.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod scalar;

pub use analysis::{
    duan_variance, entanglement_windows, observables, spectral_summary, summarize,
    total_photon_number, EntanglementWindow, Observables, SpectralSummary, TrajectorySummary,
};
pub use dynamics::{
    build_drift, coherent_initial_state, propagate_exact, simulate, step_rk4, DriftSystem, Method,
    Moment, MomentState, RunSettings, Trajectory, DIM,
};
pub use error::{Error, Result};
pub use model::{atomic_betas, gain_matrix, AlphaMatrix, BetaSet, ModelParams, EPS_DEG};
pub use scalar::{relative_error, Cx, Real};

pub type ModelParams64 = ModelParams<f64>;
pub type ModelParams32 = ModelParams<f32>;
pub type AlphaMatrix64 = AlphaMatrix<f64>;
pub type AlphaMatrix32 = AlphaMatrix<f32>;
pub type MomentState64 = MomentState<f64>;
pub type MomentState32 = MomentState<f32>;
pub type DriftSystem64 = DriftSystem<f64>;
pub type DriftSystem32 = DriftSystem<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type RunSettings64 = RunSettings<f64>;
pub type RunSettings32 = RunSettings<f32>;
