//! Field-moment dynamics.
//!
//! The fourteen first- and second-order moments of the two cavity modes obey
//! a closed affine system `dM/dt = A·M + b` with constant coefficients set by
//! the gain matrix and the cavity losses. It is propagated either with
//! fixed-step RK4 or exactly through the exponential of the augmented
//! generator `[[A, b], [0, 0]]`.

use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{gain_matrix, AlphaMatrix, ModelParams};
use crate::scalar::{is_finite_cx, re, Cx, Real};

/// Number of tracked moments.
pub const DIM: usize = 14;

/// Moment labels in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Moment {
    /// `<a1>`
    M1,
    /// `<a2>`
    M2,
    /// `<a1†>`
    M1d,
    /// `<a2†>`
    M2d,
    /// `<a1† a1>`
    N1,
    /// `<a2† a2>`
    N2,
    /// `<a1† a2>`
    C12d,
    /// `<a1 a2†>`
    C1d2,
    /// `<a1 a2>`
    S12,
    /// `<a1 a1>`
    S11,
    /// `<a2 a2>`
    S22,
    /// `<a1† a2†>`
    S12d,
    /// `<a1† a1†>`
    S11d,
    /// `<a2† a2†>`
    S22d,
}

impl Moment {
    pub const ALL: [Moment; DIM] = [
        Moment::M1,
        Moment::M2,
        Moment::M1d,
        Moment::M2d,
        Moment::N1,
        Moment::N2,
        Moment::C12d,
        Moment::C1d2,
        Moment::S12,
        Moment::S11,
        Moment::S22,
        Moment::S12d,
        Moment::S11d,
        Moment::S22d,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Moment::M1 => "m1",
            Moment::M2 => "m2",
            Moment::M1d => "m1d",
            Moment::M2d => "m2d",
            Moment::N1 => "n1",
            Moment::N2 => "n2",
            Moment::C12d => "c12d",
            Moment::C1d2 => "c1d2",
            Moment::S12 => "s12",
            Moment::S11 => "s11",
            Moment::S22 => "s22",
            Moment::S12d => "s12d",
            Moment::S11d => "s11d",
            Moment::S22d => "s22d",
        }
    }

    /// The moment whose expectation is the complex conjugate of this one.
    pub fn partner(self) -> Moment {
        match self {
            Moment::M1 => Moment::M1d,
            Moment::M1d => Moment::M1,
            Moment::M2 => Moment::M2d,
            Moment::M2d => Moment::M2,
            Moment::N1 => Moment::N1,
            Moment::N2 => Moment::N2,
            Moment::C12d => Moment::C1d2,
            Moment::C1d2 => Moment::C12d,
            Moment::S12 => Moment::S12d,
            Moment::S12d => Moment::S12,
            Moment::S11 => Moment::S11d,
            Moment::S11d => Moment::S11,
            Moment::S22 => Moment::S22d,
            Moment::S22d => Moment::S22,
        }
    }
}

/// The six (moment, conjugate) pairs that must agree for a physical state.
const CONJUGATE_PAIRS: [(Moment, Moment); 6] = [
    (Moment::M1, Moment::M1d),
    (Moment::M2, Moment::M2d),
    (Moment::S12, Moment::S12d),
    (Moment::S11, Moment::S11d),
    (Moment::S22, Moment::S22d),
    (Moment::C12d, Moment::C1d2),
];

/// Fourteen complex field moments in canonical order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentState<T> {
    values: [Cx<T>; DIM],
}

impl<T: Real> MomentState<T> {
    pub fn from_array(values: [Cx<T>; DIM]) -> Self {
        Self { values }
    }

    pub fn vacuum() -> Self {
        Self {
            values: [Cx::zero(); DIM],
        }
    }

    /// Factorized moments of the two-mode coherent state `|alpha1, alpha2>`.
    pub fn coherent(alpha1: Cx<T>, alpha2: Cx<T>) -> Self {
        let (c1, c2) = (alpha1.conj(), alpha2.conj());
        Self {
            values: [
                alpha1,
                alpha2,
                c1,
                c2,
                re(alpha1.norm_sqr()),
                re(alpha2.norm_sqr()),
                c1 * alpha2,
                alpha1 * c2,
                alpha1 * alpha2,
                alpha1 * alpha1,
                alpha2 * alpha2,
                c1 * c2,
                c1 * c1,
                c2 * c2,
            ],
        }
    }

    pub fn as_array(&self) -> &[Cx<T>; DIM] {
        &self.values
    }

    pub fn norm_inf(&self) -> T {
        self.values.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|&z| is_finite_cx(z))
    }

    pub fn scaled(&self, c: Cx<T>) -> Self {
        Self {
            values: self.values.map(|z| z * c),
        }
    }

    /// `max |x† - conj(x)|` over conjugate pairs, divided by `1 + ||M||∞`.
    pub fn conjugate_residual(&self) -> T {
        let worst = CONJUGATE_PAIRS
            .iter()
            .map(|&(a, b)| (self[b] - self[a].conj()).norm())
            .fold(T::zero(), T::max);
        worst / (T::one() + self.norm_inf())
    }

    /// `max(|Im n1|, |Im n2|)`, divided by `1 + ||M||∞`.
    pub fn photon_imag_residual(&self) -> T {
        self[Moment::N1].im.abs().max(self[Moment::N2].im.abs()) / (T::one() + self.norm_inf())
    }

    /// `||self - other||∞ / ||other||∞` (absolute when `other` vanishes).
    pub fn relative_deviation(&self, other: &Self) -> T {
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max);
        let scale = other.norm_inf();
        if scale > T::zero() {
            diff / scale
        } else {
            diff
        }
    }
}

/// Moments of the coherent state `|alpha1, alpha2>`.
pub fn coherent_initial_state<T: Real>(alpha1: Cx<T>, alpha2: Cx<T>) -> MomentState<T> {
    MomentState::coherent(alpha1, alpha2)
}

impl<T> Index<Moment> for MomentState<T> {
    type Output = Cx<T>;
    #[inline]
    fn index(&self, m: Moment) -> &Cx<T> {
        &self.values[m as usize]
    }
}

impl<T> IndexMut<Moment> for MomentState<T> {
    #[inline]
    fn index_mut(&mut self, m: Moment) -> &mut Cx<T> {
        &mut self.values[m as usize]
    }
}

/// Constant affine generator of the moment equations.
#[derive(Clone, Debug)]
pub struct DriftSystem<T> {
    generator: CMatrix<T>,
    inhomogeneity: [Cx<T>; DIM],
    alphas: AlphaMatrix<T>,
    kappa1: T,
    kappa2: T,
    params: Option<ModelParams<T>>,
}

/// Assembles the moment equations for the given gain matrix and losses.
pub fn build_drift<T: Real>(alphas: &AlphaMatrix<T>, kappa1: T, kappa2: T) -> DriftSystem<T> {
    use Moment::*;
    let AlphaMatrix { a11, a12, a21, a22, .. } = *alphas;
    let (k1, k2) = (re(kappa1), re(kappa2));
    let two = re(T::lit(2.0));
    let mut a = CMatrix::zeros(DIM);
    let mut b = [Cx::zero(); DIM];
    let mut set = |row: Moment, col: Moment, v: Cx<T>| a[(row.index(), col.index())] = v;

    set(M1, M1, -(a11 + k1));
    set(M1, M2, -a12);
    set(M2, M2, -(a22 + k2));
    set(M2, M1, -a21);
    set(M1d, M1d, -(a11.conj() + k1));
    set(M1d, M2d, -a12.conj());
    set(M2d, M2d, -(a22.conj() + k2));
    set(M2d, M1d, -a21.conj());

    set(N1, N1, -(a11 + a11.conj() + two * k1));
    set(N1, C12d, -a12);
    set(N1, C1d2, -a12.conj());
    set(N2, N2, -(a22 + a22.conj() + two * k2));
    set(N2, C12d, -a21.conj());
    set(N2, C1d2, -a21);
    set(C12d, N1, -a21);
    set(C12d, N2, -a12.conj());
    set(C12d, C12d, -(a11.conj() + a22 + k1 + k2));
    set(C1d2, N1, -a21.conj());
    set(C1d2, N2, -a12);
    set(C1d2, C1d2, -(a11 + a22.conj() + k1 + k2));

    set(S12, S11, -a21);
    set(S12, S22, -a12);
    set(S12, S12, -(a11 + a22 + k1 + k2));
    set(S11, S11, -two * (a11 + k1));
    set(S11, S12, -two * a12);
    set(S22, S22, -two * (a22 + k2));
    set(S22, S12, -two * a21);
    set(S12d, S11d, -a21.conj());
    set(S12d, S22d, -a12.conj());
    set(S12d, S12d, -(a11.conj() + a22.conj() + k1 + k2));
    set(S11d, S11d, -two * (a11.conj() + k1));
    set(S11d, S12d, -two * a12.conj());
    set(S22d, S22d, -two * (a22.conj() + k2));
    set(S22d, S12d, -two * a21.conj());

    b[N1.index()] = -(a11 + a11.conj());
    b[N2.index()] = -(a22 + a22.conj());
    b[C12d.index()] = -(a12.conj() + a21);
    b[C1d2.index()] = -(a12 + a21.conj());

    DriftSystem {
        generator: a,
        inhomogeneity: b,
        alphas: *alphas,
        kappa1,
        kappa2,
        params: None,
    }
}

impl<T: Real> DriftSystem<T> {
    /// Validates `params`, evaluates the gain matrix and assembles the drift.
    pub fn from_params(params: &ModelParams<T>) -> Result<Self> {
        let params = params.validate()?;
        let alphas = gain_matrix(&params)?;
        let mut sys = build_drift(&alphas, params.kappa1, params.kappa2);
        sys.params = Some(params);
        Ok(sys)
    }

    /// Raw generator with no physical provenance (alphas recorded as zero).
    pub fn from_generator(generator: CMatrix<T>, inhomogeneity: [Cx<T>; DIM]) -> Self {
        assert_eq!(generator.dim(), DIM, "generator must be {DIM}x{DIM}");
        Self {
            generator,
            inhomogeneity,
            alphas: AlphaMatrix::zero(),
            kappa1: T::zero(),
            kappa2: T::zero(),
            params: None,
        }
    }

    pub fn generator(&self) -> &CMatrix<T> {
        &self.generator
    }

    pub fn inhomogeneity(&self) -> &[Cx<T>; DIM] {
        &self.inhomogeneity
    }

    pub fn alphas(&self) -> &AlphaMatrix<T> {
        &self.alphas
    }

    pub fn kappas(&self) -> (T, T) {
        (self.kappa1, self.kappa2)
    }

    pub fn params(&self) -> Option<&ModelParams<T>> {
        self.params.as_ref()
    }

    /// Same generator with the source vector removed.
    pub fn homogeneous(&self) -> Self {
        Self {
            inhomogeneity: [Cx::zero(); DIM],
            ..self.clone()
        }
    }

    /// `A·M + b`
    pub fn rate(&self, state: &MomentState<T>) -> MomentState<T> {
        let mut out = self.inhomogeneity;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .generator
                .row(i)
                .iter()
                .zip(state.as_array())
                .fold(*o, |acc, (&a, &m)| acc + a * m);
        }
        MomentState::from_array(out)
    }

    /// The 15×15 generator `[[A, b], [0, 0]]` acting on `(M, 1)`.
    pub fn augmented(&self) -> CMatrix<T> {
        let mut g = CMatrix::zeros(DIM + 1);
        for i in 0..DIM {
            for j in 0..DIM {
                g[(i, j)] = self.generator[(i, j)];
            }
            g[(i, DIM)] = self.inhomogeneity[i];
        }
        g
    }

    /// Exact propagator over a duration `t`, as a 15×15 matrix.
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        self.augmented().scaled(re(t)).expm()
    }
}

pub(crate) fn apply_propagator<T: Real>(e: &CMatrix<T>, state: &MomentState<T>) -> MomentState<T> {
    let mut x = [Cx::zero(); DIM];
    for (i, xi) in x.iter_mut().enumerate() {
        let row = e.row(i);
        *xi = state
            .as_array()
            .iter()
            .zip(row)
            .fold(row[DIM], |acc, (&m, &a)| acc + a * m);
    }
    MomentState::from_array(x)
}

fn axpy<T: Real>(state: &MomentState<T>, h: T, k: &MomentState<T>) -> MomentState<T> {
    let mut out = *state.as_array();
    for (o, &ki) in out.iter_mut().zip(k.as_array()) {
        *o = *o + ki * h;
    }
    MomentState::from_array(out)
}

fn rk4_unchecked<T: Real>(system: &DriftSystem<T>, state: &MomentState<T>, dt: T) -> MomentState<T> {
    let half = dt / T::lit(2.0);
    let k1 = system.rate(state);
    let k2 = system.rate(&axpy(state, half, &k1));
    let k3 = system.rate(&axpy(state, half, &k2));
    let k4 = system.rate(&axpy(state, dt, &k3));
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut out = *state.as_array();
    for (i, o) in out.iter_mut().enumerate() {
        let incr = k1.as_array()[i]
            + k2.as_array()[i] * two
            + k3.as_array()[i] * two
            + k4.as_array()[i];
        *o = *o + incr * sixth;
    }
    MomentState::from_array(out)
}

/// One classical fourth-order Runge–Kutta step.
pub fn step_rk4<T: Real>(
    system: &DriftSystem<T>,
    state: &MomentState<T>,
    dt: T,
) -> Result<MomentState<T>> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::InvalidRun {
            field: "dt",
            reason: "must be finite and > 0",
        });
    }
    let next = rk4_unchecked(system, state, dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFiniteState { time: dt.as_f64() })
    }
}

/// Exact solution after time `t` from `state`.
pub fn propagate_exact<T: Real>(
    system: &DriftSystem<T>,
    state: &MomentState<T>,
    t: T,
) -> Result<MomentState<T>> {
    if !(t >= T::zero() && t.is_finite()) {
        return Err(Error::InvalidRun {
            field: "t",
            reason: "must be finite and >= 0",
        });
    }
    if t == T::zero() {
        return Ok(*state);
    }
    Ok(apply_propagator(&system.propagator(t), state))
}

/// Integrator selection for [`simulate`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Method {
    #[default]
    Rk4,
    Exact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Exact => "exact",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "exact" | "expm" => Ok(Method::Exact),
            other => Err(format!("unknown method `{other}` (expected rk4 or exact)")),
        }
    }
}

/// Time grid and integrator for a simulation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSettings<T> {
    pub t_max: T,
    pub dt: T,
    /// Steps between stored samples.
    pub stride: usize,
    pub method: Method,
}

impl<T: Real> Default for RunSettings<T> {
    /// `t_max = 10`, `dt = 1e-3`, `stride = 10`, RK4. The default step
    /// resolves a Rabi period of `2π/10` with about 600 steps.
    fn default() -> Self {
        Self {
            t_max: T::lit(10.0),
            dt: T::lit(1e-3),
            stride: 10,
            method: Method::Rk4,
        }
    }
}

impl<T: Real> RunSettings<T> {
    pub fn validate(self) -> Result<Self> {
        if !(self.t_max > T::zero() && self.t_max.is_finite()) {
            return Err(Error::InvalidRun {
                field: "t_max",
                reason: "must be finite and > 0",
            });
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::InvalidRun {
                field: "dt",
                reason: "must be finite and > 0",
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidRun {
                field: "stride",
                reason: "must be >= 1",
            });
        }
        Ok(self)
    }

    /// Number of whole `dt` steps that fit in `t_max`.
    pub fn total_steps(&self) -> usize {
        // Tolerate t_max/dt landing a hair below an integer.
        let ratio = (self.t_max / self.dt).as_f64();
        (ratio * (1.0 + 1e-12)).floor() as usize
    }

    pub fn sample_count(&self) -> usize {
        self.total_steps() / self.stride + 1
    }
}

/// Time-sampled moment trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<MomentState<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(T, &MomentState<T>)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Integrates the moment equations from `initial` and samples every
/// `stride` steps, starting with the initial state at `t = 0`.
pub fn simulate<T: Real>(
    system: &DriftSystem<T>,
    initial: &MomentState<T>,
    run: &RunSettings<T>,
) -> Result<Trajectory<T>> {
    let run = run.validate()?;
    let samples = run.sample_count();
    let mut times = Vec::with_capacity(samples);
    let mut states = Vec::with_capacity(samples);
    times.push(T::zero());
    states.push(*initial);

    let sample_span = run.dt * T::from_usize(run.stride).expect("stride fits scalar");
    let sample_time = |k: usize| sample_span * T::from_usize(k).expect("index fits scalar");
    let mut state = *initial;
    match run.method {
        Method::Rk4 => {
            for k in 1..samples {
                for s in 0..run.stride {
                    state = rk4_unchecked(system, &state, run.dt);
                    if !state.is_finite() {
                        let step = (k - 1) * run.stride + s + 1;
                        let t = run.dt * T::from_usize(step).expect("step fits scalar");
                        return Err(Error::NonFiniteState { time: t.as_f64() });
                    }
                }
                times.push(sample_time(k));
                states.push(state);
            }
        }
        Method::Exact => {
            let e = system.propagator(sample_span);
            for k in 1..samples {
                state = apply_propagator(&e, &state);
                if !state.is_finite() {
                    return Err(Error::NonFiniteState {
                        time: sample_time(k).as_f64(),
                    });
                }
                times.push(sample_time(k));
                states.push(state);
            }
        }
    }
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gain_matrix;
    use crate::scalar::cx;

    type C = Cx<f64>;

    fn decoupled_system() -> DriftSystem<f64> {
        let p = ModelParams {
            p: 0.0,
            omega_abs: 0.0,
            phi: 0.0,
            ..ModelParams::default()
        };
        DriftSystem::from_params(&p).unwrap()
    }

    fn reference_system() -> DriftSystem<f64> {
        DriftSystem::from_params(&ModelParams::default()).unwrap()
    }

    #[test]
    fn coherent_state_moments() {
        let s = coherent_initial_state(cx(10.0, 0.0), cx(-10.0, 0.0));
        assert_eq!(s[Moment::N1], cx(100.0, 0.0));
        assert_eq!(s[Moment::N2], cx(100.0, 0.0));
        assert_eq!(s[Moment::S12], cx(-100.0, 0.0));
        assert_eq!(s[Moment::C12d], cx(-100.0, 0.0));
        assert_eq!(s[Moment::M1], cx(10.0, 0.0));
        assert_eq!(s[Moment::M2], cx(-10.0, 0.0));
        assert_eq!(s.conjugate_residual(), 0.0);

        let s = coherent_initial_state(cx(0.0, 3.0), cx(4.0, 0.0));
        assert_eq!(s[Moment::S11], cx(-9.0, 0.0));
        assert_eq!(s[Moment::S12], cx(0.0, 12.0));
        assert_eq!(s[Moment::N1], cx(9.0, 0.0));

        let v = coherent_initial_state(C::zero(), C::zero());
        assert_eq!(v, MomentState::vacuum());
    }

    #[test]
    fn partner_is_an_involution() {
        for m in Moment::ALL {
            assert_eq!(m.partner().partner(), m);
        }
        for (i, m) in Moment::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
        }
    }

    #[test]
    fn decoupled_drift_first_row() {
        let sys = decoupled_system();
        let a = sys.generator();
        let d = a[(0, 0)];
        assert!((d - cx(1.249, -1.25)).norm() < 1e-14);
        for j in 1..DIM {
            assert_eq!(a[(0, j)], C::zero());
        }
    }

    #[test]
    fn drift_structure() {
        let sys = reference_system();
        let a = sys.generator();
        let b = sys.inhomogeneity();
        let al = sys.alphas();
        let (k1, k2) = sys.kappas();
        for i in 0..DIM {
            assert!(a.count_nonzero_in_row(i) <= 3, "row {i}");
        }
        assert!((b[Moment::N1.index()] - cx(-2.0 * al.a11.re, 0.0)).norm() < 1e-15);
        for m in [Moment::M1, Moment::M2, Moment::S12, Moment::S11d] {
            assert_eq!(b[m.index()], C::zero());
        }
        let s12 = Moment::S12.index();
        let nz: Vec<usize> = (0..DIM).filter(|&j| a[(s12, j)] != C::zero()).collect();
        assert_eq!(nz, vec![s12, Moment::S11.index(), Moment::S22.index()]);
        assert_eq!(a[(s12, s12)], -(al.a11 + al.a22 + k1 + k2));
        assert_eq!(a[(s12, Moment::S11.index())], -al.a21);
        assert_eq!(a[(s12, Moment::S22.index())], -al.a12);
    }

    #[test]
    fn conjugation_symmetry_of_rows() {
        let sys = reference_system();
        let a = sys.generator();
        let b = sys.inhomogeneity();
        for mi in Moment::ALL {
            let pi = mi.partner();
            assert_eq!(b[mi.index()].conj(), b[pi.index()]);
            for mj in Moment::ALL {
                assert_eq!(
                    a[(mi.index(), mj.index())].conj(),
                    a[(pi.index(), mj.partner().index())],
                    "{} / {}",
                    mi.name(),
                    mj.name()
                );
            }
        }
    }

    #[test]
    fn null_generator_leaves_state() {
        let sys = DriftSystem::from_generator(CMatrix::zeros(DIM), [C::zero(); DIM]);
        let s = coherent_initial_state(cx(1.0, 2.0), cx(-3.0, 0.5));
        assert_eq!(step_rk4(&sys, &s, 0.1).unwrap(), s);
        assert_eq!(propagate_exact(&sys, &s, 3.0).unwrap(), s);
    }

    #[test]
    fn rk4_rejects_bad_step() {
        let sys = reference_system();
        let s = MomentState::vacuum();
        assert!(matches!(step_rk4(&sys, &s, 0.0), Err(Error::InvalidRun { .. })));
        assert!(matches!(step_rk4(&sys, &s, -1e-3), Err(Error::InvalidRun { .. })));
    }

    #[test]
    fn rk4_tracks_decoupled_exponential() {
        let sys = decoupled_system();
        let mut s = coherent_initial_state(cx(10.0, 0.0), cx(-10.0, 0.0));
        for _ in 0..1000 {
            s = step_rk4(&sys, &s, 1e-3).unwrap();
        }
        let rate = cx(-1.25, 1.25) + 0.001;
        let want = (-rate).exp() * 10.0;
        assert!((s[Moment::M1] - want).norm() / want.norm() < 1e-9);
    }

    #[test]
    fn exact_matches_decoupled_exponential() {
        let sys = decoupled_system();
        let s0 = coherent_initial_state(cx(10.0, 0.0), cx(-10.0, 0.0));
        let s = propagate_exact(&sys, &s0, 2.0).unwrap();
        let rate = cx(-1.25, 1.25) + 0.001;
        let want = (-rate * 2.0).exp() * 10.0;
        assert!((s[Moment::M1] - want).norm() / want.norm() < 1e-12);
        assert_eq!(propagate_exact(&sys, &s0, 0.0).unwrap(), s0);
        assert!(propagate_exact(&sys, &s0, -1.0).is_err());
    }

    #[test]
    fn single_rk4_step_matches_exact() {
        let sys = reference_system();
        let s0 = coherent_initial_state(cx(10.0, 0.0), cx(-10.0, 0.0));
        let a = step_rk4(&sys, &s0, 1e-3).unwrap();
        let b = propagate_exact(&sys, &s0, 1e-3).unwrap();
        let scale = s0.norm_inf();
        for (x, y) in a.as_array().iter().zip(b.as_array()) {
            assert!((x - y).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn exact_semigroup() {
        let sys = reference_system();
        let s0 = coherent_initial_state(cx(10.0, 0.0), cx(-10.0, 0.0));
        let once = propagate_exact(&sys, &s0, 5.0).unwrap();
        let half = propagate_exact(&sys, &s0, 2.5).unwrap();
        let twice = propagate_exact(&sys, &half, 2.5).unwrap();
        assert!(twice.relative_deviation(&once) < 1e-10);
    }

    #[test]
    fn homogeneous_propagation_is_linear() {
        let sys = reference_system().homogeneous();
        let s0 = coherent_initial_state(cx(1.0, -2.0), cx(0.5, 3.0));
        let c = cx(-2.5, 0.75);
        let a = propagate_exact(&sys, &s0.scaled(c), 4.0).unwrap();
        let b = propagate_exact(&sys, &s0, 4.0).unwrap().scaled(c);
        assert!(a.relative_deviation(&b) < 1e-13);
    }

    #[test]
    fn simulate_grid() {
        let sys = reference_system();
        let run = RunSettings {
            t_max: 1.0,
            dt: 0.1,
            stride: 1,
            method: Method::Rk4,
        };
        let traj = simulate(&sys, &MomentState::vacuum(), &run).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.times[0], 0.0);
        assert!((traj.times[10] - 1.0).abs() < 1e-15);
        for w in traj.times.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert_eq!(traj.states[0], MomentState::vacuum());
    }

    #[test]
    fn simulate_stride_keeps_last_whole_sample() {
        let run = RunSettings {
            t_max: 1.0,
            dt: 0.1,
            stride: 3,
            method: Method::Exact,
        };
        assert_eq!(run.sample_count(), 4);
        let traj = simulate(&reference_system(), &MomentState::vacuum(), &run).unwrap();
        assert!((traj.times[3] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn simulate_rejects_bad_settings() {
        let sys = reference_system();
        let s = MomentState::vacuum();
        for run in [
            RunSettings { t_max: 0.0, ..RunSettings::default() },
            RunSettings { dt: -1.0, ..RunSettings::default() },
            RunSettings { stride: 0, ..RunSettings::default() },
        ] {
            assert!(matches!(simulate(&sys, &s, &run), Err(Error::InvalidRun { .. })));
        }
    }

    #[test]
    fn blow_up_reports_time() {
        // Huge gain makes RK4 overflow well inside the horizon.
        let alphas = gain_matrix(&ModelParams::<f64>::default()).unwrap().map(|z| z * 1e5);
        let sys = build_drift(&alphas, 0.0, 0.0);
        let run = RunSettings {
            t_max: 10.0,
            dt: 1e-2,
            stride: 1,
            method: Method::Rk4,
        };
        let s0 = coherent_initial_state(cx(10.0, 0.0), cx(-10.0, 0.0));
        match simulate(&sys, &s0, &run) {
            Err(Error::NonFiniteState { time }) => assert!(time > 0.0 && time < 10.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn rk4_and_exact_agree_over_default_horizon() {
        let sys = reference_system();
        let s0 = coherent_initial_state(cx(10.0, 0.0), cx(-10.0, 0.0));
        let rk = simulate(&sys, &s0, &RunSettings::default()).unwrap();
        let ex = simulate(
            &sys,
            &s0,
            &RunSettings {
                method: Method::Exact,
                ..RunSettings::default()
            },
        )
        .unwrap();
        assert_eq!(rk.times, ex.times);
        let worst = rk
            .states
            .iter()
            .zip(&ex.states)
            .map(|(a, b)| a.relative_deviation(b))
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst:e}");
    }
}
