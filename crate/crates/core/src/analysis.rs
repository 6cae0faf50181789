//! Entanglement and photon-number observables, and the gain spectrum of the
//! drift generator.

use std::cmp::Ordering;

use crate::dynamics::{DriftSystem, Moment, MomentState, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Conjugate-pair residual above which a state is rejected as non-physical.
pub const PHYSICAL_TOLERANCE: f64 = 1e-6;

/// Imaginary part of the variance bracket worth reporting.
pub const IMAG_REPORT_THRESHOLD: f64 = 1e-8;

/// Duan variance together with the discarded imaginary part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuanVariance<T> {
    pub value: T,
    pub imag_residual: T,
}

impl<T: Real> DuanVariance<T> {
    pub fn imag_is_significant(&self) -> bool {
        self.imag_residual > T::lit(IMAG_REPORT_THRESHOLD)
    }
}

fn require_physical<T: Real>(state: &MomentState<T>) -> Result<()> {
    let residual = state.conjugate_residual();
    if residual <= T::lit(PHYSICAL_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::NonPhysicalState {
            residual: residual.as_f64(),
            tolerance: PHYSICAL_TOLERANCE,
        })
    }
}

/// Total variance of the EPR-type quadrature combinations,
/// `V = 2[1 + <a1†a1> + <a2†a2> + <a1a2> + <a1†a2†> - <a1><a1†> - <a2><a2†>
/// - <a1><a2> - <a1†><a2†>]`, with its imaginary residual.
pub fn duan_variance_detailed<T: Real>(state: &MomentState<T>) -> Result<DuanVariance<T>> {
    require_physical(state)?;
    use Moment::*;
    let s = state;
    let one = Cx::new(T::one(), T::zero());
    let bracket = one + s[N1] + s[N2] + s[S12] + s[S12d]
        - s[M1] * s[M1d]
        - s[M2] * s[M2d]
        - s[M1] * s[M2]
        - s[M1d] * s[M2d];
    let two = T::lit(2.0);
    Ok(DuanVariance {
        value: two * bracket.re,
        imag_residual: (two * bracket.im).abs(),
    })
}

/// Duan variance; the two modes are entangled when it is strictly below 2.
pub fn duan_variance<T: Real>(state: &MomentState<T>) -> Result<T> {
    duan_variance_detailed(state).map(|v| v.value)
}

/// `Re <a1†a1> + Re <a2†a2>`
pub fn total_photon_number<T: Real>(state: &MomentState<T>) -> Result<T> {
    require_physical(state)?;
    Ok(state[Moment::N1].re + state[Moment::N2].re)
}

/// Per-sample `V(t)` and `N(t)` of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables<T> {
    pub v: Vec<T>,
    pub n: Vec<T>,
    /// Largest imaginary residual of the variance bracket over all samples.
    pub max_imag_residual: T,
}

pub fn observables<T: Real>(traj: &Trajectory<T>) -> Result<Observables<T>> {
    let mut v = Vec::with_capacity(traj.len());
    let mut n = Vec::with_capacity(traj.len());
    let mut max_imag_residual = T::zero();
    for s in &traj.states {
        let dv = duan_variance_detailed(s)?;
        max_imag_residual = max_imag_residual.max(dv.imag_residual);
        v.push(dv.value);
        n.push(total_photon_number(s)?);
    }
    Ok(Observables {
        v,
        n,
        max_imag_residual,
    })
}

/// Maximal interval on which `V < 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementWindow<T> {
    pub t_start: T,
    pub t_end: T,
    pub v_min: T,
    pub t_at_min: T,
    /// Still entangled at the last sample; `t_end` is then the horizon.
    pub open: bool,
}

impl<T: Real> EntanglementWindow<T> {
    pub fn duration(&self) -> T {
        self.t_end - self.t_start
    }
}

/// Time at which the segment `(t0, v0) -> (t1, v1)` crosses `V = 2`.
fn crossing<T: Real>(t0: T, v0: T, t1: T, v1: T) -> T {
    let two = T::lit(2.0);
    let dv = v1 - v0;
    if dv == T::zero() {
        return t0;
    }
    t0 + (two - v0) / dv * (t1 - t0)
}

/// Locates the entanglement windows of a sampled `V(t)` series. Crossings of
/// `V = 2` are placed by linear interpolation between bracketing samples.
pub fn entanglement_windows<T: Real>(times: &[T], v: &[T]) -> Vec<EntanglementWindow<T>> {
    assert_eq!(times.len(), v.len(), "times and V must have equal length");
    let two = T::lit(2.0);
    let mut out = Vec::new();
    let mut current: Option<EntanglementWindow<T>> = None;
    for k in 0..times.len() {
        let inside = v[k] < two;
        match (&mut current, inside) {
            (None, true) => {
                let t_start = if k == 0 {
                    times[0]
                } else {
                    crossing(times[k - 1], v[k - 1], times[k], v[k])
                };
                current = Some(EntanglementWindow {
                    t_start,
                    t_end: times[k],
                    v_min: v[k],
                    t_at_min: times[k],
                    open: true,
                });
            }
            (Some(w), true) => {
                if v[k] < w.v_min {
                    w.v_min = v[k];
                    w.t_at_min = times[k];
                }
            }
            (Some(w), false) => {
                w.t_end = crossing(times[k - 1], v[k - 1], times[k], v[k]);
                w.open = false;
                out.push(*w);
                current = None;
            }
            (None, false) => {}
        }
    }
    if let Some(mut w) = current {
        w.t_end = *times.last().expect("non-empty when a window is open");
        out.push(w);
    }
    out
}

/// Headline numbers of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySummary<T> {
    pub v_min: T,
    pub t_at_vmin: T,
    pub n_max: T,
    pub t_at_nmax: T,
    pub windows: Vec<EntanglementWindow<T>>,
    pub max_imag_residual: T,
}

impl<T: Real> TrajectorySummary<T> {
    /// The first window, taken as the entanglement period.
    pub fn first_window(&self) -> Option<&EntanglementWindow<T>> {
        self.windows.first()
    }
}

pub fn summarize<T: Real>(traj: &Trajectory<T>) -> Result<TrajectorySummary<T>> {
    let obs = observables(traj)?;
    let argext = |xs: &[T], better: fn(T, T) -> bool| {
        let mut best = 0;
        for (i, &x) in xs.iter().enumerate() {
            if better(x, xs[best]) {
                best = i;
            }
        }
        best
    };
    let iv = argext(&obs.v, |a, b| a < b);
    let in_ = argext(&obs.n, |a, b| a > b);
    Ok(TrajectorySummary {
        v_min: obs.v[iv],
        t_at_vmin: traj.times[iv],
        n_max: obs.n[in_],
        t_at_nmax: traj.times[in_],
        windows: entanglement_windows(&traj.times, &obs.v),
        max_imag_residual: obs.max_imag_residual,
    })
}

/// Eigenvalues of the drift generator and whether any mode grows.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary<T> {
    /// Sorted by descending real part, then descending imaginary part.
    pub eigenvalues: Vec<Cx<T>>,
    pub max_real_part: T,
    pub net_gain: bool,
}

pub fn spectral_summary<T: Real>(system: &DriftSystem<T>) -> SpectralSummary<T> {
    let mut eigenvalues = system.generator().eigenvalues();
    eigenvalues.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
    });
    let max_real_part = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(T::neg_infinity(), T::max);
    SpectralSummary {
        net_gain: max_real_part > T::zero(),
        max_real_part,
        eigenvalues,
    }
}
