//! Critical coupling `Z_crit`: the value at which the two lowest levels of a
//! branch merge.
//!
//! At the merger the hyperbola `s = Z / 2t` osculates the oval `s = π - ε(t)`,
//! so both curves and both slopes agree:
//!
//! ```text
//! ε(t) = π - Z / 2t,        ε'(t) = Z / 2t²
//! ```
//!
//! Replacing `ε` by its `N`-sweep approximations from the two seeds gives a
//! lower and an upper bound on `Z_crit` for every `N`. An independent route
//! solves the tangency `g = ∂g/∂s = 0` of the restricted secular function.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::model::branch_energy;
use crate::numeric::solve2;
use crate::secular::{epsilon_jet, restricted_secular, restricted_secular_ds, EpsilonJet, Recipe, Seed};

const MAX_NEWTON_STEPS: usize = 200;
const MAX_HALVINGS: usize = 40;

/// Starting point `(t, Z)` of the osculation Newton solve.
pub const OSCULATION_SEED: (f64, f64) = (0.84, 4.48);
/// Starting point `(s, Z)` of the tangency oracle.
pub const ORACLE_SEED: (f64, f64) = (2.7, 4.5);

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CriticalError {
    #[error("Newton did not converge after {steps} steps: last iterate ({x0}, {x1}), residual {residual:e}")]
    NoConvergence {
        steps: usize,
        x0: f64,
        x1: f64,
        residual: f64,
    },
}

/// Osculation point of one `N`-sweep approximation with its hyperbola.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OsculationPoint {
    pub seed: Seed,
    pub sweeps: usize,
    pub t: f64,
    pub z: f64,
    /// `π - ε_N(t)`
    pub s: f64,
    pub energy: f64,
    pub residual: f64,
    pub newton_steps: usize,
}

/// Paired bounds for one row of the critical-coupling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    /// Row label `N`.
    pub n: usize,
    /// Number of sweeps actually applied to each seed, `N + 1`.
    pub sweeps: usize,
    pub z_crit_lower: f64,
    pub z_crit_upper: f64,
    pub t_crit_lower: f64,
    pub t_crit_upper: f64,
    pub s_crit_lower: f64,
    pub s_crit_upper: f64,
    pub e_crit_lower: f64,
    pub e_crit_upper: f64,
}

impl CriticalPoint {
    pub fn width(&self) -> f64 {
        self.z_crit_upper - self.z_crit_lower
    }
}

/// Critical point from the direct tangency solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleCriticalPoint {
    pub z_crit: f64,
    pub t_crit: f64,
    pub s_crit: f64,
    pub e_crit: f64,
    /// `|g(s_crit)|`
    pub g_residual: f64,
    /// `|∂g/∂s (s_crit)|`
    pub dg_residual: f64,
}

/// Sweeps applied for table row `N`: row `N = 0` is the first explicit
/// approximation, one sweep away from the constant seed.
pub fn sweeps_for_row(n: usize) -> usize {
    n + 1
}

fn osculation_residual(jet: &EpsilonJet, t: f64, z: f64) -> [f64; 2] {
    [jet.value - PI + z / (2.0 * t), jet.d1 - z / (2.0 * t * t)]
}

fn max_abs(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

struct Evaluated {
    jet: EpsilonJet,
    residual: [f64; 2],
}

fn evaluate(recipe: Recipe, seed: Seed, sweeps: usize, tol: f64, t: f64, z: f64) -> Option<Evaluated> {
    if !(t > 0.0) || !z.is_finite() {
        return None;
    }
    let jet = epsilon_jet(recipe, t, seed, sweeps, tol).ok()?;
    let residual = osculation_residual(&jet, t, z);
    if residual.iter().all(|r| r.is_finite()) && jet.d2.is_finite() {
        Some(Evaluated { jet, residual })
    } else {
        None
    }
}

/// Sign change of `(π - ε_N) - t·ε_N'` (the osculation conditions with `Z`
/// eliminated) on a coarse `t` grid; used when the default seed is not
/// inside the region where the sweep is defined.
fn scan_seed(recipe: Recipe, seed: Seed, sweeps: usize, tol: f64) -> Option<(f64, f64)> {
    let mut previous: Option<(f64, f64)> = None;
    for i in 1..=400 {
        let t = 0.005 * i as f64;
        let Ok(jet) = epsilon_jet(recipe, t, seed, sweeps, tol) else {
            break;
        };
        let h = (PI - jet.value) - t * jet.d1;
        if let Some((_, h_prev)) = previous {
            if h_prev > 0.0 && h <= 0.0 {
                return Some((t, 2.0 * t * (PI - jet.value)));
            }
        }
        previous = Some((t, h));
    }
    None
}

fn newton_from(
    recipe: Recipe,
    seed: Seed,
    sweeps: usize,
    tol: f64,
    start: (f64, f64),
) -> Result<OsculationPoint, CriticalError> {
    let (mut t, mut z) = start;
    let fail = |steps, t, z, residual| CriticalError::NoConvergence {
        steps,
        x0: t,
        x1: z,
        residual,
    };
    let Some(mut current) = evaluate(recipe, seed, sweeps, tol, t, z) else {
        return Err(fail(0, t, z, f64::INFINITY));
    };
    for step in 0..MAX_NEWTON_STEPS {
        let norm = max_abs(current.residual);
        let jet = current.jet;
        let jacobian = [
            [jet.d1 - z / (2.0 * t * t), 1.0 / (2.0 * t)],
            [jet.d2 + z / (t * t * t), -1.0 / (2.0 * t * t)],
        ];
        let Some(dx) = solve2(jacobian, current.residual) else {
            return Err(fail(step, t, z, norm));
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let (tn, zn) = (t - lambda * dx[0], z - lambda * dx[1]);
            if let Some(next) = evaluate(recipe, seed, sweeps, tol, tn, zn) {
                if max_abs(next.residual) < norm || max_abs(next.residual) <= tol {
                    accepted = Some((tn, zn, next));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((tn, zn, next)) = accepted else {
            if norm <= tol {
                break;
            }
            return Err(fail(step, t, z, norm));
        };
        let moved = (tn - t).abs().max((zn - z).abs());
        t = tn;
        z = zn;
        current = next;
        let norm = max_abs(current.residual);
        if norm <= tol && moved <= 1e-14 * z.abs() {
            return Ok(finish(seed, sweeps, t, z, &current, step + 1));
        }
    }
    let norm = max_abs(current.residual);
    if norm <= tol {
        Ok(finish(seed, sweeps, t, z, &current, MAX_NEWTON_STEPS))
    } else {
        Err(fail(MAX_NEWTON_STEPS, t, z, norm))
    }
}

fn finish(seed: Seed, sweeps: usize, t: f64, z: f64, at: &Evaluated, steps: usize) -> OsculationPoint {
    let s = PI - at.jet.value;
    OsculationPoint {
        seed,
        sweeps,
        t,
        z,
        s,
        energy: branch_energy(s, t),
        residual: max_abs(at.residual),
        newton_steps: steps,
    }
}

/// Damped Newton on the two osculation conditions for the `sweeps`-fold
/// approximation grown from `seed`.
pub fn osculation(recipe: Recipe, seed: Seed, sweeps: usize, tol: f64) -> Result<OsculationPoint, CriticalError> {
    match newton_from(recipe, seed, sweeps, tol, OSCULATION_SEED) {
        Ok(p) => Ok(p),
        Err(first) => match scan_seed(recipe, seed, sweeps, tol) {
            Some(start) => newton_from(recipe, seed, sweeps, tol, start),
            None => Err(first),
        },
    }
}

pub fn solve_critical(n: usize, tol: f64) -> Result<CriticalPoint, CriticalError> {
    solve_critical_with(Recipe::Corrected, n, tol)
}

pub fn solve_critical_with(recipe: Recipe, n: usize, tol: f64) -> Result<CriticalPoint, CriticalError> {
    let sweeps = sweeps_for_row(n);
    let lower = osculation(recipe, Seed::Lower, sweeps, tol)?;
    let upper = osculation(recipe, Seed::Upper, sweeps, tol)?;
    Ok(CriticalPoint {
        n,
        sweeps,
        z_crit_lower: lower.z,
        z_crit_upper: upper.z,
        t_crit_lower: lower.t,
        t_crit_upper: upper.t,
        s_crit_lower: lower.s,
        s_crit_upper: upper.s,
        e_crit_lower: lower.energy,
        e_crit_upper: upper.energy,
    })
}

/// Rows `N = 0, 2, 4, …, n_max`.
pub fn critical_table(n_max: usize, tol: f64) -> Result<Vec<CriticalPoint>, CriticalError> {
    (0..=n_max).step_by(2).map(|n| solve_critical(n, tol)).collect()
}

fn tangency(s: f64, z: f64) -> [f64; 2] {
    [restricted_secular(z, s), restricted_secular_ds(z, s)]
}

/// Solves `g(s) = ∂g/∂s = 0` with `g(s) = F(s, Z/2s)` for `(s, Z)` by Newton
/// with a central finite-difference Jacobian.
pub fn solve_critical_oracle(tol: f64) -> Result<OracleCriticalPoint, CriticalError> {
    let (mut s, mut z) = ORACLE_SEED;
    let mut r = tangency(s, z);
    let mut steps = 0;
    while steps < MAX_NEWTON_STEPS {
        steps += 1;
        let hs = 1e-6 * s;
        let hz = 1e-6 * z;
        let (sp, sm) = (tangency(s + hs, z), tangency(s - hs, z));
        let (zp, zm) = (tangency(s, z + hz), tangency(s, z - hz));
        let jacobian = [
            [(sp[0] - sm[0]) / (2.0 * hs), (zp[0] - zm[0]) / (2.0 * hz)],
            [(sp[1] - sm[1]) / (2.0 * hs), (zp[1] - zm[1]) / (2.0 * hz)],
        ];
        let Some(dx) = solve2(jacobian, r) else { break };
        s -= dx[0];
        z -= dx[1];
        r = tangency(s, z);
        if dx[0].abs() <= 4.0 * f64::EPSILON * s && dx[1].abs() <= 4.0 * f64::EPSILON * z {
            break;
        }
    }
    if !(r[0].abs() <= tol && r[1].abs() <= 100.0 * tol) {
        return Err(CriticalError::NoConvergence {
            steps,
            x0: s,
            x1: z,
            residual: max_abs(r),
        });
    }
    let t = z / (2.0 * s);
    Ok(OracleCriticalPoint {
        z_crit: z,
        t_crit: t,
        s_crit: s,
        e_crit: branch_energy(s, t),
        g_residual: r[0].abs(),
        dg_residual: r[1].abs(),
    })
}

/// `Z_crit` from the tangency oracle at tolerance `1e-12`, computed once per
/// process.
pub fn z_crit() -> f64 {
    static Z_CRIT: OnceLock<f64> = OnceLock::new();
    *Z_CRIT.get_or_init(|| {
        solve_critical_oracle(1e-12)
            .expect("tangency oracle converges from its fixed seed")
            .z_crit
    })
}
