//! Physical parameters and the closed-form steady-state coefficients of the
//! driven V-type atom.
//!
//! All rates, detunings and couplings are expressed in units of the
//! mode coupling `g`. Both upper levels decay at the same rate `gamma`
//! (written `R` in the closed forms) and both modes share one detuning.

use std::f64::consts::TAU;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cx, i_unit, re, Cx, Real};

/// Degeneracy tolerance for the closed-form denominators `D1` and `D2`.
pub const EPS_DEG: f64 = 1e-9;

/// Physical parameters of the atom–cavity system, in units of `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// Upper-level decay rate, shared by both transitions.
    pub gamma: T,
    /// Dipole alignment factor `P = cos θ` controlling the cross-damping
    /// `gamma12 = P gamma`.
    pub p: T,
    /// Magnitude of the microwave Rabi frequency.
    pub omega_abs: T,
    /// Drive phase in radians, `[0, 2π)`.
    pub phi: T,
    /// Common detuning of both cavity modes.
    pub delta: T,
    /// Incoherent pump rate into the upper level `|a>`.
    pub gamma_a: T,
    pub kappa1: T,
    pub kappa2: T,
    pub g1: T,
    pub g2: T,
}

impl<T: Real> Default for ModelParams<T> {
    /// Reference operating point: `gamma = 1`, `P = 0.5`, `|Ω| = 10`,
    /// `φ = π/2`, `Δ = 1`, `gamma_a = 5`, `κ = 0.001`, `g1 = g2 = 1`.
    fn default() -> Self {
        Self {
            gamma: T::one(),
            p: T::lit(0.5),
            omega_abs: T::lit(10.0),
            phi: T::FRAC_PI_2(),
            delta: T::one(),
            gamma_a: T::lit(5.0),
            kappa1: T::lit(0.001),
            kappa2: T::lit(0.001),
            g1: T::one(),
            g2: T::one(),
        }
    }
}

impl<T: Real> ModelParams<T> {
    /// Checks every parameter bound and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self> {
        fn positive<T: Real>(field: &'static str, v: T) -> Result<()> {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    field,
                    bound: "> 0",
                    value: v.as_f64(),
                })
            }
        }
        fn non_negative<T: Real>(field: &'static str, v: T) -> Result<()> {
            if v.is_finite() && v >= T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    field,
                    bound: ">= 0",
                    value: v.as_f64(),
                })
            }
        }

        positive("gamma", self.gamma)?;
        if !(self.p >= T::zero() && self.p <= T::one()) {
            return Err(Error::OutOfRangeP(self.p.as_f64()));
        }
        non_negative("omega_abs", self.omega_abs)?;
        if !(self.phi >= T::zero() && self.phi < T::lit(TAU)) {
            return Err(Error::InvalidParameter {
                field: "phi",
                bound: "in [0, 2π)",
                value: self.phi.as_f64(),
            });
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter {
                field: "delta",
                bound: "finite",
                value: self.delta.as_f64(),
            });
        }
        positive("gamma_a", self.gamma_a)?;
        non_negative("kappa1", self.kappa1)?;
        non_negative("kappa2", self.kappa2)?;
        positive("g1", self.g1)?;
        positive("g2", self.g2)?;
        Ok(self)
    }

    /// Complex drive `Ω = |Ω| e^{iφ}`.
    pub fn omega(&self) -> Cx<T> {
        Cx::from_polar(self.omega_abs, self.phi)
    }

    pub fn gamma12(&self) -> T {
        interference_rate(self.gamma, self.p)
    }
}

/// Cross-damping `gamma12 = P sqrt(gamma1 gamma2)` with equal decay rates.
pub fn interference_rate<T: Real>(gamma: T, p: T) -> T {
    p * gamma
}

/// Zeroth-order (drive-dressed, field-free) atomic steady state, per unit
/// field density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSet<T> {
    pub beta_aa: Cx<T>,
    pub beta_bb: Cx<T>,
    pub beta_ab: Cx<T>,
    pub beta_ba: Cx<T>,
    pub d2: Cx<T>,
}

/// Gain and cross-coupling coefficients of the two cavity modes.
///
/// Each entry already carries its coupling prefactor (`g1²`, `g1 g2` or
/// `g2²`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaMatrix<T> {
    pub a11: Cx<T>,
    pub a12: Cx<T>,
    pub a21: Cx<T>,
    pub a22: Cx<T>,
    pub d1: Cx<T>,
}

impl<T: Real> AlphaMatrix<T> {
    pub fn entries(&self) -> [[Cx<T>; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    /// Applies `f` to each of the four coefficients, keeping `d1`.
    pub fn map(self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        Self {
            a11: f(self.a11),
            a12: f(self.a12),
            a21: f(self.a21),
            a22: f(self.a22),
            d1: self.d1,
        }
    }

    /// Largest entrywise relative difference to `other`.
    pub fn max_relative_error(&self, other: &Self) -> T {
        let a = self.entries();
        let b = other.entries();
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max(crate::scalar::relative_error(a[i][j], b[i][j]));
            }
        }
        worst
    }
}

fn check_denominator<T: Real>(name: &'static str, d: Cx<T>) -> Result<()> {
    let magnitude = d.norm();
    if magnitude.is_finite() && magnitude > T::lit(EPS_DEG) {
        Ok(())
    } else {
        Err(Error::DegenerateParameters {
            denominator: name,
            magnitude: magnitude.as_f64(),
            tolerance: EPS_DEG,
        })
    }
}

/// Closed-form zeroth-order atomic coefficients.
///
/// The coherences `beta_ab`, `beta_ba` carry `gamma_a` without an extra
/// factor of `R`, which keeps all four coefficients dimensionless and makes
/// them the exact steady state of the zeroth-order population/coherence
/// equations for any `R`.
pub fn atomic_betas<T: Real>(params: &ModelParams<T>) -> Result<BetaSet<T>> {
    let r = params.gamma;
    let g12 = params.gamma12();
    let om = params.omega();
    let omc = om.conj();
    let w2 = params.omega_abs * params.omega_abs;
    let i = i_unit::<T>();
    let two = T::lit(2.0);
    let four = T::lit(4.0);

    let om_sum = om + omc;
    let d2 = re(four * r.powi(4) + four * r * r * w2 - four * r * r * g12 * g12)
        - om_sum * om_sum * re(g12 * g12);
    check_denominator("D2", d2)?;

    let pump = params.gamma_a;
    let beta_aa = re((two * r * r - g12 * g12 + w2) * r * pump) / d2;
    let beta_bb = (re(g12) + i * om) * (re(g12) - i * omc) * re(r * pump) / d2;
    let beta_ab = -(re(g12) + i * om) * (re(two * r * r) - i * om * g12 - i * omc * g12) * re(pump)
        / (d2 * re(two));
    let beta_ba = -(re(g12) - i * omc) * (re(two * r * r) + i * om * g12 + i * omc * g12)
        * re(pump)
        / (d2 * re(two));

    Ok(BetaSet {
        beta_aa,
        beta_bb,
        beta_ab,
        beta_ba,
        d2,
    })
}

/// Closed-form mode gain / cross-coupling matrix.
pub fn gain_matrix<T: Real>(params: &ModelParams<T>) -> Result<AlphaMatrix<T>> {
    let b = atomic_betas(params)?;
    let i = i_unit::<T>();
    let g12 = re(params.gamma12());
    let om = params.omega();

    let p = cx(params.gamma, params.delta);
    let q = i * om - g12;
    let r = i * om.conj() - g12;
    let d1 = p * p - q * r;
    check_denominator("D1", d1)?;

    let (g1, g2) = (params.g1, params.g2);
    let a11 = -re(g1 * g1) * (p * b.beta_aa + q * b.beta_ba) / d1;
    let a12 = -re(g1 * g2) * (p * b.beta_ab + q * b.beta_bb) / d1;
    let a22 = -re(g2 * g2) * (p * b.beta_bb + r * b.beta_ab) / d1;
    let a21 = -re(g1 * g2) * (p * b.beta_ba + r * b.beta_aa) / d1;
    Ok(AlphaMatrix {
        a11,
        a12,
        a21,
        a22,
        d1,
    })
}

impl<T: Real> AlphaMatrix<T> {
    /// Exactly zero matrix with unit `d1`; useful for null generators.
    pub fn zero() -> Self {
        Self {
            a11: Cx::zero(),
            a12: Cx::zero(),
            a21: Cx::zero(),
            a22: Cx::zero(),
            d1: re(T::one()),
        }
    }
}
