//! The real secular curve `F(s, t) = 2s·sin 2s + 2t·sinh 2t = 0`, the branch
//! hyperbolas `t = z_eff / 2s`, and the shift function `ε(t)` describing the
//! ground-pair oval as `s = π - ε(t)`.
//!
//! `ε(t)` is defined implicitly by `(π - ε)·sin 2ε = t·sinh 2t` and computed by
//! the fixed-point sweep `ε ← ½·arcsin[t·sinh 2t / (π - ε)]`. The sweep map is
//! increasing in `ε`, so seeding it at `π/4` gives iterates that decrease onto
//! the fixed point and seeding at `0` gives iterates that increase onto it.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::Serialize;
use thiserror::Error;

use crate::model::DEFAULT_TOL;
use crate::numeric::safeguarded_newton;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SecularError {
    #[error("s must be positive, got {0}")]
    NonPositiveS(f64),
    #[error("arcsin argument {argument} > 1 at t = {t}: no real shift exists past the osculation regime")]
    BeyondCritical { t: f64, argument: f64 },
    #[error("tangent of the shift function is singular at t = {t}, ε = {epsilon}")]
    TangentSingularity { t: f64, epsilon: f64 },
    #[error("shift iteration did not settle at t = {t} after {iterations} sweeps")]
    NoFixedPoint { t: f64, iterations: usize },
}

/// `F(s, t) = 2s·sin 2s + 2t·sinh 2t`.
pub fn secular_f(s: f64, t: f64) -> f64 {
    2.0 * s * (2.0 * s).sin() + 2.0 * t * (2.0 * t).sinh()
}

/// `(∂F/∂s, ∂F/∂t)`.
pub fn secular_gradient(s: f64, t: f64) -> (f64, f64) {
    let ds = 2.0 * (2.0 * s).sin() + 4.0 * s * (2.0 * s).cos();
    let dt = 2.0 * (2.0 * t).sinh() + 4.0 * t * (2.0 * t).cosh();
    (ds, dt)
}

pub fn hyperbola_t(z_eff: f64, s: f64) -> Result<f64, SecularError> {
    if s.is_nan() || s <= 0.0 {
        return Err(SecularError::NonPositiveS(s));
    }
    Ok(z_eff / (2.0 * s))
}

/// `g(s) = F(s, z_eff / 2s)`: the secular function restricted to one branch
/// hyperbola. Its zeros are the bound states of that branch.
pub fn restricted_secular(z_eff: f64, s: f64) -> f64 {
    secular_f(s, z_eff / (2.0 * s))
}

/// `dg/ds` along the hyperbola.
pub fn restricted_secular_ds(z_eff: f64, s: f64) -> f64 {
    let t = z_eff / (2.0 * s);
    let (fs, ft) = secular_gradient(s, t);
    fs - ft * z_eff / (2.0 * s * s)
}

/// Positive `t` on the oval through abscissa `s`, if the oval reaches `s`.
///
/// For fixed `s`, `2t·sinh 2t` increases with `|t|`, so a root exists exactly
/// when `sin 2s <= 0` and is unique up to the mirror `t -> -t`.
pub fn oval_t(s: f64) -> Option<f64> {
    let target = -2.0 * s * (2.0 * s).sin();
    if !(s > 0.0) {
        return None;
    }
    // sin 2s carries roundoff at the axis crossings s = kπ/2.
    if target.abs() <= 8.0 * f64::EPSILON * s {
        return Some(0.0);
    }
    if target < 0.0 {
        return None;
    }
    let mut hi = 1.0_f64;
    while 2.0 * hi * (2.0 * hi).sinh() < target {
        hi *= 2.0;
    }
    safeguarded_newton(
        |t| {
            (
                2.0 * t * (2.0 * t).sinh() - target,
                2.0 * (2.0 * t).sinh() + 4.0 * t * (2.0 * t).cosh(),
            )
        },
        0.0,
        hi,
        1e-16,
        200,
    )
}

/// Starting value of the shift iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    /// `ε₀ = π/4`; iterates decrease and bound `ε` from above, which bounds
    /// the critical coupling from below.
    Lower,
    /// `ε₀ = 0`; iterates increase and bound `ε` from below.
    Upper,
}

impl Seed {
    pub fn value(self) -> f64 {
        match self {
            Seed::Lower => FRAC_PI_4,
            Seed::Upper => 0.0,
        }
    }
}

/// Which form of the sweep to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// `ε ← ½·arcsin[t·sinh 2t / (π - ε)]`, consistent with the implicit
    /// definition and its derivative.
    Corrected,
    /// `ε ← ½·arcsin[2·t·sinh 2t / (π - ε)]`, the variant with a stray factor
    /// of two. Kept only to show that it does not reproduce the critical
    /// coupling.
    Printed,
}

impl Recipe {
    fn factor(self) -> f64 {
        match self {
            Recipe::Corrected => 1.0,
            Recipe::Printed => 2.0,
        }
    }
}

/// Result of a fixed number of shift sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftFunction {
    pub t: f64,
    pub epsilon: f64,
    pub seed: Seed,
    pub iterations: usize,
}

impl ShiftFunction {
    /// `(π - ε)·sin 2ε - t·sinh 2t`; zero at the exact shift.
    pub fn implicit_residual(&self) -> f64 {
        implicit_residual(self.t, self.epsilon)
    }
}

pub fn implicit_residual(t: f64, epsilon: f64) -> f64 {
    (PI - epsilon) * (2.0 * epsilon).sin() - t * (2.0 * t).sinh()
}

fn asin_argument(recipe: Recipe, t: f64, epsilon: f64, tol: f64) -> Result<f64, SecularError> {
    let argument = recipe.factor() * t * (2.0 * t).sinh() / (PI - epsilon);
    if argument > 1.0 + tol || argument.is_nan() {
        return Err(SecularError::BeyondCritical { t, argument });
    }
    Ok(argument.min(1.0))
}

/// Applies `iterations` corrected sweeps starting from `seed`.
pub fn epsilon_iterate(t: f64, seed: Seed, iterations: usize) -> Result<ShiftFunction, SecularError> {
    epsilon_iterate_with(Recipe::Corrected, t, seed, iterations, DEFAULT_TOL)
}

pub fn epsilon_iterate_with(
    recipe: Recipe,
    t: f64,
    seed: Seed,
    iterations: usize,
    tol: f64,
) -> Result<ShiftFunction, SecularError> {
    let mut epsilon = seed.value();
    for _ in 0..iterations {
        epsilon = 0.5 * asin_argument(recipe, t, epsilon, tol)?.asin();
    }
    Ok(ShiftFunction {
        t,
        epsilon,
        seed,
        iterations,
    })
}

/// Converged shift `ε(t)`: sweeps from the upper seed until successive
/// iterates agree to `tol`.
pub fn epsilon_fixed_point(t: f64, tol: f64) -> Result<f64, SecularError> {
    const MAX_SWEEPS: usize = 10_000;
    let mut epsilon = Seed::Upper.value();
    for _ in 0..MAX_SWEEPS {
        let next = 0.5 * asin_argument(Recipe::Corrected, t, epsilon, tol)?.asin();
        if (next - epsilon).abs() <= tol {
            return Ok(next);
        }
        epsilon = next;
    }
    Err(SecularError::NoFixedPoint {
        t,
        iterations: MAX_SWEEPS,
    })
}

/// Slope of the exact shift function, from implicit differentiation of
/// `(π - ε)·sin 2ε = t·sinh 2t`.
pub fn epsilon_derivative(t: f64, epsilon: f64) -> Result<f64, SecularError> {
    let denominator = 2.0 * (PI - epsilon) * (2.0 * epsilon).cos() - (2.0 * epsilon).sin();
    if denominator.abs() < DEFAULT_TOL {
        return Err(SecularError::TangentSingularity { t, epsilon });
    }
    Ok(((2.0 * t).sinh() + 2.0 * t * (2.0 * t).cosh()) / denominator)
}

/// Value and first two `t`-derivatives of an iterated shift approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `ε_N(t)` after `sweeps` applications of `recipe` from `seed`, with its
/// exact first and second derivatives propagated through every sweep.
///
/// Because the seeds are constants, `ε_N` is an explicit function of `t`; the
/// jet describes that function, not the exact shift it approximates.
pub fn epsilon_jet(
    recipe: Recipe,
    t: f64,
    seed: Seed,
    sweeps: usize,
    tol: f64,
) -> Result<EpsilonJet, SecularError> {
    let c = recipe.factor();
    let sh = (2.0 * t).sinh();
    let ch = (2.0 * t).cosh();
    let a = t * sh;
    let a1 = sh + 2.0 * t * ch;
    let a2 = 4.0 * ch + 4.0 * t * sh;

    let mut jet = EpsilonJet {
        value: seed.value(),
        d1: 0.0,
        d2: 0.0,
    };
    for _ in 0..sweeps {
        let u = asin_argument(recipe, t, jet.value, tol)?;
        let d = PI - jet.value;
        let d1 = -jet.d1;
        let d2 = -jet.d2;
        let num1 = a1 * d - a * d1;
        let u1 = c * num1 / (d * d);
        let u2 = c * ((a2 * d - a * d2) / (d * d) - 2.0 * d1 * num1 / (d * d * d));
        let w = (1.0 - u * u).sqrt();
        jet = EpsilonJet {
            value: 0.5 * u.asin(),
            d1: 0.5 * u1 / w,
            d2: 0.5 * (u2 / w + u * u1 * u1 / (w * w * w)),
        };
    }
    Ok(jet)
}
