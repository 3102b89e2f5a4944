//! Real bound states of each branch.
//!
//! Along the hyperbola `t = z_eff / 2s` the secular condition becomes
//! `g(s) = 2s·sin 2s + (z_eff/s)·sinh(z_eff/s) = 0`. The second term is
//! positive, so roots live where `sin 2s < 0`, i.e. on the lobes
//! `(kπ - π/2, kπ)`, `k = 1, 2, …`. Each lobe carries the pair of levels
//! `n = 2k - 2, 2k - 1` that sit at the lobe edges in the Hermitian limit. A
//! pair merges when the minimum of `g` on its lobe reaches zero and turns
//! complex beyond that.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::critical;
use crate::model::{branch_energy, secular_determinant, CouplingParams, Sigma};
use crate::numeric::{golden_min, safeguarded_newton};
use crate::secular::{restricted_secular, restricted_secular_ds, secular_f};

/// Samples per lobe used to locate the minimum of `g` before refinement.
const PRESCAN_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpectrumError {
    #[error(
        "levels n = {lower}, {upper} of branch {sigma} have merged into a complex pair (min g = {min_g:e})"
    )]
    ComplexPair {
        sigma: Sigma,
        lower: usize,
        upper: usize,
        min_g: f64,
    },
    #[error("(s, t) = ({s}, {t}) is not a bound state of branch {sigma}")]
    InvalidRoot { sigma: Sigma, s: f64, t: f64 },
    #[error("need at least two sample points, got {0}")]
    TooFewSamples(usize),
}

/// A simultaneous solution of the secular equation and a branch hyperbola.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootPair {
    pub n: usize,
    pub sigma: Sigma,
    pub s: f64,
    pub t: f64,
    pub energy: f64,
    /// `(-1)ⁿ·(s - (n+1)π/2)`
    pub epsilon_n: f64,
    /// The level has merged with its lobe partner (exceptional point).
    pub confluent: bool,
}

impl RootPair {
    fn new(n: usize, sigma: Sigma, z_eff: f64, s: f64, confluent: bool) -> Self {
        let t = z_eff / (2.0 * s);
        let hermitian = (n + 1) as f64 * FRAC_PI_2;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        RootPair {
            n,
            sigma,
            s,
            t,
            energy: branch_energy(s, t),
            epsilon_n: sign * (s - hermitian),
            confluent,
        }
    }

    pub fn secular_residual(&self) -> f64 {
        secular_f(self.s, self.t)
    }

    pub fn kappa_right(&self) -> Complex64 {
        Complex64::new(self.s, self.t)
    }

    pub fn kappa_left(&self) -> Complex64 {
        Complex64::new(self.s, -self.t)
    }
}

/// What one lobe of `g` holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LobeOutcome {
    Distinct { left: f64, right: f64 },
    /// Touching minimum within `√tol` of zero: the two levels coincide.
    Confluent { s: f64 },
    Complex { s_min: f64, g_min: f64 },
}

/// Lobe `k >= 1` spans `(kπ - π/2, kπ)`.
pub fn lobe_bounds(k: usize) -> (f64, f64) {
    let b = k as f64 * PI;
    (b - FRAC_PI_2, b)
}

fn lobe_minimum(z_eff: f64, a: f64, b: f64) -> f64 {
    let g = |s| restricted_secular(z_eff, s);
    let step = (b - a) / PRESCAN_SAMPLES as f64;
    let sample = |i: usize| a + (i as f64 + 0.5) * step;
    let best = (0..PRESCAN_SAMPLES)
        .min_by(|&i, &j| g(sample(i)).total_cmp(&g(sample(j))))
        .unwrap_or(0);
    let lo = (sample(best) - step).max(a);
    let hi = (sample(best) + step).min(b);
    let dg = |s| restricted_secular_ds(z_eff, s);
    if dg(lo) < 0.0 && dg(hi) > 0.0 {
        let (mut lo, mut hi) = (lo, hi);
        while hi - lo > 4.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if dg(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    } else {
        golden_min(g, lo, hi, 1e-12).0
    }
}

fn refine_root(z_eff: f64, a: f64, b: f64) -> f64 {
    let f = |s| (restricted_secular(z_eff, s), restricted_secular_ds(z_eff, s));
    safeguarded_newton(f, a, b, 1e-16, 200).unwrap_or(0.5 * (a + b))
}

/// Classifies lobe `k` of branch coupling `z_eff` and locates its roots.
pub fn lobe_outcome(z_eff: f64, k: usize, tol: f64) -> LobeOutcome {
    assert!(k >= 1, "lobes are numbered from 1");
    let (a, b) = lobe_bounds(k);
    if z_eff == 0.0 {
        return LobeOutcome::Distinct { left: a, right: b };
    }
    let s_min = lobe_minimum(z_eff, a, b);
    let g_min = restricted_secular(z_eff, s_min);
    if g_min < 0.0 {
        // For tiny |z_eff| the edge values are at roundoff level and may
        // carry the wrong sign; the root then coincides with the edge.
        let left = if restricted_secular(z_eff, a) <= 0.0 {
            a
        } else {
            refine_root(z_eff, a, s_min)
        };
        let right = if restricted_secular(z_eff, b) <= 0.0 {
            b
        } else {
            refine_root(z_eff, s_min, b)
        };
        LobeOutcome::Distinct { left, right }
    } else if g_min <= tol.sqrt() {
        LobeOutcome::Confluent { s: s_min }
    } else {
        LobeOutcome::Complex { s_min, g_min }
    }
}

/// A lobe whose two levels have left the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexPair {
    pub lower: usize,
    pub upper: usize,
    pub s_min: f64,
    pub g_min: f64,
}

/// Every lobe up to `n_max` of one branch, without failing on complex pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchScan {
    pub sigma: Sigma,
    pub z_eff: f64,
    pub roots: Vec<RootPair>,
    pub complex_pairs: Vec<ComplexPair>,
}

pub fn scan_branch(params: &CouplingParams, sigma: Sigma, n_max: usize) -> BranchScan {
    let z_eff = sigma.z_eff(params);
    let mut roots = Vec::new();
    let mut complex_pairs = Vec::new();
    for k in 1..=(n_max / 2 + 1) {
        let (lower, upper) = (2 * k - 2, 2 * k - 1);
        match lobe_outcome(z_eff, k, params.tol()) {
            LobeOutcome::Distinct { left, right } => {
                roots.push(RootPair::new(lower, sigma, z_eff, left, false));
                roots.push(RootPair::new(upper, sigma, z_eff, right, false));
            }
            LobeOutcome::Confluent { s } => {
                roots.push(RootPair::new(lower, sigma, z_eff, s, true));
                roots.push(RootPair::new(upper, sigma, z_eff, s, true));
            }
            LobeOutcome::Complex { s_min, g_min } => complex_pairs.push(ComplexPair {
                lower,
                upper,
                s_min,
                g_min,
            }),
        }
    }
    roots.retain(|r| r.n <= n_max);
    BranchScan {
        sigma,
        z_eff,
        roots,
        complex_pairs,
    }
}

/// All real levels `n <= n_max` of branch `sigma`, sorted by `n`.
pub fn find_roots(params: &CouplingParams, sigma: Sigma, n_max: usize) -> Result<Vec<RootPair>, SpectrumError> {
    let scan = scan_branch(params, sigma, n_max);
    if let Some(pair) = scan.complex_pairs.first() {
        return Err(SpectrumError::ComplexPair {
            sigma,
            lower: pair.lower,
            upper: pair.upper,
            min_g: pair.g_min,
        });
    }
    Ok(scan.roots)
}

/// A bound state with its piecewise amplitudes.
///
/// Each channel is `eigvec[c]·C_L·sin κ_L(x+1)` on `(-1, 0)` and
/// `eigvec[c]·C_R·sin κ_R(1-x)` on `(0, 1)`, with `C_R = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub root: RootPair,
    pub eigvec: [f64; 3],
    pub amplitude_left: Complex64,
    pub amplitude_right: Complex64,
    /// Largest violation of value and slope continuity at `x = 0`.
    pub matching_residual: f64,
    /// Secular determinant at `(s, t, E)`.
    pub determinant: Complex64,
    /// `sin κ_L` vanishes to tolerance: the level has a node at the junction
    /// and `C_L` came from the slope condition.
    pub junction_node: bool,
}

impl BoundState {
    pub fn channel_amplitudes_left(&self) -> [Complex64; 3] {
        self.eigvec.map(|v| self.amplitude_left * v)
    }

    pub fn channel_amplitudes_right(&self) -> [Complex64; 3] {
        self.eigvec.map(|v| self.amplitude_right * v)
    }

    /// Scalar profile shared by all channels.
    pub fn profile(&self, x: f64) -> Complex64 {
        if x < 0.0 {
            self.amplitude_left * (self.root.kappa_left() * (x + 1.0)).sin()
        } else {
            self.amplitude_right * (self.root.kappa_right() * (1.0 - x)).sin()
        }
    }
}

pub fn assemble_state(params: &CouplingParams, root: RootPair) -> Result<BoundState, SpectrumError> {
    let z_eff = root.sigma.z_eff(params);
    let invalid = SpectrumError::InvalidRoot {
        sigma: root.sigma,
        s: root.s,
        t: root.t,
    };
    if !(root.s > 0.0)
        || (2.0 * root.s * root.t - z_eff).abs() > 1e-9 * z_eff.abs().max(1.0)
        || root.secular_residual().abs() > 1e-8 * root.s.max(1.0)
    {
        return Err(invalid);
    }
    let kl = root.kappa_left();
    let kr = root.kappa_right();
    let amplitude_right = Complex64::new(1.0, 0.0);
    let (sin_l, sin_r) = (kl.sin(), kr.sin());
    let (slope_l, slope_r) = (kl * kl.cos(), kr * kr.cos());
    // Use whichever matching line is better conditioned.
    let amplitude_left = if sin_l.norm() >= slope_l.norm() {
        sin_r / sin_l
    } else {
        -slope_r / slope_l
    };
    let value_gap = (amplitude_left * sin_l - amplitude_right * sin_r).norm();
    let slope_gap = (amplitude_left * slope_l + amplitude_right * slope_r).norm();
    Ok(BoundState {
        root,
        eigvec: root.sigma.eigvec(),
        amplitude_left,
        amplitude_right,
        matching_residual: value_gap.max(slope_gap),
        determinant: secular_determinant(params, root.s, root.t, root.energy),
        junction_node: sin_l.norm() < params.tol(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavefunctionSample {
    pub x: f64,
    pub phi: [Complex64; 3],
}

/// Samples the three channel components on a uniform grid over `[-1, 1]`.
pub fn sample_wavefunction(state: &BoundState, x_count: usize) -> Result<Vec<WavefunctionSample>, SpectrumError> {
    if x_count < 2 {
        return Err(SpectrumError::TooFewSamples(x_count));
    }
    let last = x_count - 1;
    Ok((0..x_count)
        .map(|i| {
            let x = if i == last {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / last as f64
            };
            let u = state.profile(x);
            WavefunctionSample {
                x,
                phi: state.eigvec.map(|v| u * v),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchReality {
    pub sigma: Sigma,
    pub z_eff: f64,
    pub real: bool,
}

/// Which branches keep a real spectrum at given couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealityClassification {
    pub z_crit: f64,
    pub branches: [BranchReality; 3],
    pub all_real: bool,
    /// Branch with the largest `|z_eff|`, i.e. the first to turn complex.
    pub binding: Sigma,
}

impl RealityClassification {
    pub fn complex_branches(&self) -> impl Iterator<Item = &BranchReality> {
        self.branches.iter().filter(|b| !b.real)
    }
}

/// Reality test against the cached critical coupling.
pub fn classify_reality(params: &CouplingParams) -> RealityClassification {
    classify_reality_with(params, critical::z_crit())
}

/// A branch stays real while `|z_eff| <= z_crit`. For `Y > 0` the conjunction
/// over branches is `Y - z_crit <= Z <= z_crit - 2Y`.
pub fn classify_reality_with(params: &CouplingParams, z_crit: f64) -> RealityClassification {
    let branches = Sigma::ALL.map(|sigma| {
        let z_eff = sigma.z_eff(params);
        BranchReality {
            sigma,
            z_eff,
            real: z_eff.abs() <= z_crit,
        }
    });
    let binding = branches
        .iter()
        .fold(branches[0], |best, b| if b.z_eff.abs() > best.z_eff.abs() { *b } else { best })
        .sigma;
    RealityClassification {
        z_crit,
        branches,
        all_real: branches.iter().all(|b| b.real),
        binding,
    }
}
