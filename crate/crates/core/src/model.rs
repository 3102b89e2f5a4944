//! Couplings, the 3×3 channel coupling matrices and their branch decomposition.
//!
//! Inside the box every channel carries the same imaginary step potential
//! `i·Z·sgn` on the diagonal and `i·Y·sgn` between channels, with `sgn = +1`
//! on `(-1, 0)` and `-1` on `(0, 1)`. Because all off-diagonal entries are
//! equal, the channel matrix is diagonalized by a fixed, coupling-independent
//! basis, and each eigenvector ("branch") behaves like a single-channel well
//! with an effective coupling `z_eff`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Default convergence tolerance for the downstream solvers.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("coupling {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error(
        "Y = 0: the channels decouple, every branch has z_eff = Z and the polynomial system is trivial"
    )]
    DegenerateCouplings,
}

/// The two real couplings plus the tolerance used by the solvers.
///
/// Units are fixed: `ħ = 2m = 1`, box `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    y: f64,
    z: f64,
    tol: f64,
}

/// How a parameter pair relates to its canonical (`Y >= 0`) form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Canonical,
    /// `(Y, Z) -> (-Y, -Z)`: every `z_eff` flips sign, so every `t` flips
    /// sign while `s` and the energies are unchanged.
    Mirrored,
}

impl CouplingParams {
    pub fn new(y: f64, z: f64) -> Result<Self, ModelError> {
        if !y.is_finite() {
            return Err(ModelError::NonFinite { name: "Y", value: y });
        }
        if !z.is_finite() {
            return Err(ModelError::NonFinite { name: "Z", value: z });
        }
        Ok(Self {
            y,
            z,
            tol: DEFAULT_TOL,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self, ModelError> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ModelError::BadTolerance(tol));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Maps `Y < 0` onto `Y > 0` by the joint sign flip `(Y, Z) -> (-Y, -Z)`.
    pub fn canonical(&self) -> (CouplingParams, Orientation) {
        if self.y < 0.0 {
            (
                CouplingParams {
                    y: -self.y,
                    z: -self.z,
                    tol: self.tol,
                },
                Orientation::Mirrored,
            )
        } else {
            (*self, Orientation::Canonical)
        }
    }

    /// The three branches in the fixed order `σ = 1, 2, 3`.
    pub fn branches(&self) -> [Branch; 3] {
        branch_decomposition(self)
    }
}

/// Branch label `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sigma {
    One,
    Two,
    Three,
}

impl Sigma {
    pub const ALL: [Sigma; 3] = [Sigma::One, Sigma::Two, Sigma::Three];

    pub fn index(self) -> u8 {
        match self {
            Sigma::One => 1,
            Sigma::Two => 2,
            Sigma::Three => 3,
        }
    }

    pub fn from_index(index: u8) -> Option<Sigma> {
        match index {
            1 => Some(Sigma::One),
            2 => Some(Sigma::Two),
            3 => Some(Sigma::Three),
            _ => None,
        }
    }

    /// `Z + 2Y` for the symmetric branch, `Z - Y` for the degenerate pair.
    pub fn z_eff(self, params: &CouplingParams) -> f64 {
        match self {
            Sigma::One => params.z + 2.0 * params.y,
            Sigma::Two | Sigma::Three => params.z - params.y,
        }
    }

    /// Unnormalized channel eigenvector. The degenerate pair uses the
    /// Jacobi-coordinate convention `(1, -1, 0)`, `(1, 1, -2)`.
    pub fn eigvec(self) -> [f64; 3] {
        match self {
            Sigma::One => [1.0, 1.0, 1.0],
            Sigma::Two => [1.0, -1.0, 0.0],
            Sigma::Three => [1.0, 1.0, -2.0],
        }
    }

    /// Eigenvalue of `J - I` (all-ones matrix minus identity) on this branch.
    pub fn offdiagonal_weight(self) -> f64 {
        match self {
            Sigma::One => 2.0,
            Sigma::Two | Sigma::Three => -1.0,
        }
    }

    pub fn degeneracy_partner(self) -> Option<Sigma> {
        match self {
            Sigma::One => None,
            Sigma::Two => Some(Sigma::Three),
            Sigma::Three => Some(Sigma::Two),
        }
    }
}

impl std::fmt::Display for Sigma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// One eigenbranch of the channel coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub sigma: Sigma,
    pub z_eff: f64,
    pub eigvec: [f64; 3],
    pub degeneracy_partner: Option<Sigma>,
}

/// Half of the box a channel matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `x ∈ (-1, 0)`
    Left,
    /// `x ∈ (0, 1)`
    Right,
}

impl Side {
    /// Sign of the imaginary potential on this side.
    pub fn potential_sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// The matrix obtained by inserting `sin κ(...)` into the coupled equations on
/// one half of the box; its eigenvalues are the admissible energies.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrixSide {
    pub side: Side,
    pub kappa: Complex64,
    pub entries: Matrix3<Complex64>,
}

pub fn build_channel_matrix(params: &CouplingParams, side: Side, kappa: Complex64) -> ChannelMatrixSide {
    let sign = side.potential_sign();
    let diag = kappa * kappa + Complex64::new(0.0, sign * params.z);
    let off = Complex64::new(0.0, sign * params.y);
    let entries = Matrix3::from_fn(|i, j| if i == j { diag } else { off });
    ChannelMatrixSide {
        side,
        kappa,
        entries,
    }
}

pub fn branch_decomposition(params: &CouplingParams) -> [Branch; 3] {
    Sigma::ALL.map(|sigma| Branch {
        sigma,
        z_eff: sigma.z_eff(params),
        eigvec: sigma.eigvec(),
        degeneracy_partner: sigma.degeneracy_partner(),
    })
}

/// Real energy of a bound state parametrized by `κ_R = s + i t`.
pub fn branch_energy(s: f64, t: f64) -> f64 {
    s * s - t * t
}

/// Determinant of `M_R(s + i t) - E·I`, the secular determinant on the
/// right half of the box. Vanishes at every bound state.
pub fn secular_determinant(params: &CouplingParams, s: f64, t: f64, energy: f64) -> Complex64 {
    let m = build_channel_matrix(params, Side::Right, Complex64::new(s, t));
    let shifted = m.entries - Matrix3::from_diagonal_element(Complex64::new(energy, 0.0));
    shifted.determinant()
}

/// A real solution `(α, β)` of the reduced polynomial system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolySolution {
    pub alpha: f64,
    pub beta: f64,
    pub multiplicity: usize,
    /// `max(|eq₁|, |eq₂|) / |Y|³`
    pub residual: f64,
}

/// Why a root of the `α ≠ 0` trial branch is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// `α² = 0`, contradicting the `α ≠ 0` assumption.
    AlphaVanishes,
    /// `α² < 0`, so `α` is not real.
    AlphaComplex,
}

/// A root `β` of the cubic obtained under the trial assumption `α ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TentativeRoot {
    pub beta: f64,
    pub multiplicity: usize,
    /// `3(β² - Y²)`
    pub alpha_squared: f64,
    /// `None` would mean a consistent `α ≠ 0` solution exists.
    pub rejection: Option<Rejection>,
}

/// Outcome of [`verify_alpha_zero`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaZeroReport {
    pub y: f64,
    pub solutions: Vec<PolySolution>,
    pub tentative: Vec<TentativeRoot>,
    /// Every `α ≠ 0` candidate was rejected and every residual is within tol.
    pub confirmed: bool,
}

impl AlphaZeroReport {
    /// The `β` values of all real solutions, repeated by multiplicity, ascending.
    pub fn betas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .solutions
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.beta, s.multiplicity))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Residuals of the real and imaginary parts of the secular determinant
/// written in `α = s² - t² - E`, `β = 2st - Z`:
/// `α³ - 3α(β² - Y²)` and `β³ - 3β(α² + Y²) + 2Y³`.
pub fn alpha_beta_residuals(alpha: f64, beta: f64, y: f64) -> (f64, f64) {
    let re = alpha.powi(3) - 3.0 * alpha * (beta * beta - y * y);
    let im = beta.powi(3) - 3.0 * beta * (alpha * alpha + y * y) + 2.0 * y.powi(3);
    (re, im)
}

/// Confirms numerically that the only real solutions of the reduced
/// polynomial system have `α = 0`, i.e. `E = s² - t²` on every branch.
pub fn verify_alpha_zero(params: &CouplingParams) -> Result<AlphaZeroReport, ModelError> {
    let y = params.y;
    if y == 0.0 {
        return Err(ModelError::DegenerateCouplings);
    }
    let scale = y.abs().powi(3);

    // α = 0 reduces the second equation to β³ - 3Y²β + 2Y³ = 0.
    let solutions: Vec<PolySolution> = real_roots(depressed_cubic(-3.0 * y * y, 2.0 * y.powi(3)))
        .into_iter()
        .map(|(beta, multiplicity)| {
            let (r1, r2) = alpha_beta_residuals(0.0, beta, y);
            PolySolution {
                alpha: 0.0,
                beta,
                multiplicity,
                residual: r1.abs().max(r2.abs()) / scale,
            }
        })
        .collect();

    // α ≠ 0 forces α² = 3(β² - Y²); substituting gives 4β³ - 3Y²β - Y³ = 0.
    let tentative: Vec<TentativeRoot> =
        real_roots(depressed_cubic(-0.75 * y * y, -0.25 * y.powi(3)))
            .into_iter()
            .map(|(beta, multiplicity)| {
                let alpha_squared = 3.0 * (beta * beta - y * y);
                let rejection = if alpha_squared.abs() <= params.tol * y * y {
                    Some(Rejection::AlphaVanishes)
                } else if alpha_squared < 0.0 {
                    Some(Rejection::AlphaComplex)
                } else {
                    None
                };
                TentativeRoot {
                    beta,
                    multiplicity,
                    alpha_squared,
                    rejection,
                }
            })
            .collect();

    let confirmed = tentative.iter().all(|r| r.rejection.is_some())
        && solutions.iter().all(|s| s.residual <= params.tol)
        && solutions.iter().map(|s| s.multiplicity).sum::<usize>() == 3;

    Ok(AlphaZeroReport {
        y,
        solutions,
        tentative,
        confirmed,
    })
}

/// Roots of `x³ + p x + q`, with multiplicities.
#[derive(Debug, Clone, PartialEq)]
enum CubicRoots {
    ThreeReal([f64; 3]),
    /// `(simple, double)`
    DoubleReal(f64, f64),
    OneReal(f64, Complex64),
}

fn depressed_cubic(p: f64, q: f64) -> CubicRoots {
    let four_p3 = 4.0 * p * p * p;
    let q2_27 = 27.0 * q * q;
    let disc = -(four_p3 + q2_27);
    if disc.abs() <= 64.0 * f64::EPSILON * (four_p3.abs() + q2_27) {
        if p == 0.0 {
            return CubicRoots::DoubleReal(0.0, 0.0);
        }
        return CubicRoots::DoubleReal(3.0 * q / p, -1.5 * q / p);
    }
    if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = ((3.0 * q / (p * m)).clamp(-1.0, 1.0)).acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        let mut roots = [0, 1, 2].map(|k| m * (theta - two_pi_3 * k as f64).cos());
        roots.iter_mut().for_each(|x| *x = polish(*x, p, q));
        CubicRoots::ThreeReal(roots)
    } else {
        let d = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let x = polish((-q / 2.0 + d).cbrt() + (-q / 2.0 - d).cbrt(), p, q);
        // Deflate: x² + x₁ x + (p + x₁²) = 0.
        let c = p + x * x;
        let half = -x / 2.0;
        let im = (c - half * half).max(0.0).sqrt();
        CubicRoots::OneReal(x, Complex64::new(half, im))
    }
}

fn polish(x: f64, p: f64, q: f64) -> f64 {
    let f = x * x * x + p * x + q;
    let df = 3.0 * x * x + p;
    if df == 0.0 {
        x
    } else {
        x - f / df
    }
}

fn real_roots(roots: CubicRoots) -> Vec<(f64, usize)> {
    match roots {
        CubicRoots::ThreeReal(r) => r.iter().map(|&x| (x, 1)).collect(),
        CubicRoots::DoubleReal(simple, double) if simple == double => vec![(simple, 3)],
        CubicRoots::DoubleReal(simple, double) => vec![(simple, 1), (double, 2)],
        CubicRoots::OneReal(x, _) => vec![(x, 1)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_couplings_give_scaled_identity() {
        let p = CouplingParams::new(0.0, 0.0).unwrap();
        let m = build_channel_matrix(&p, Side::Left, c(PI / 2.0, 0.0));
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { PI * PI / 4.0 } else { 0.0 };
                assert_eq!(m.entries[(i, j)], c(expected, 0.0));
            }
        }
    }

    #[test]
    fn left_and_right_matrices_are_conjugate() {
        let p = CouplingParams::new(1.0, 2.0).unwrap();
        let left = build_channel_matrix(&p, Side::Left, c(1.0, 0.0));
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { c(1.0, 2.0) } else { c(0.0, 1.0) };
                assert_eq!(left.entries[(i, j)], expected);
            }
        }
        let kappa = c(0.7, -0.3);
        let left = build_channel_matrix(&p, Side::Left, kappa);
        let right = build_channel_matrix(&p, Side::Right, kappa.conj());
        assert_eq!(right.entries, left.entries.map(|z| z.conj()));
    }

    #[test]
    fn branch_table() {
        let b = branch_decomposition(&CouplingParams::new(1.0, 1.0).unwrap());
        assert_eq!(b.map(|b| b.z_eff), [3.0, 0.0, 0.0]);
        assert_eq!(b[0].eigvec, [1.0, 1.0, 1.0]);
        assert_eq!(b[1].eigvec, [1.0, -1.0, 0.0]);
        assert_eq!(b[2].eigvec, [1.0, 1.0, -2.0]);
        assert_eq!(b[1].degeneracy_partner, Some(Sigma::Three));

        let b = branch_decomposition(&CouplingParams::new(0.0, 5.0).unwrap());
        assert_eq!(b.map(|b| b.z_eff), [5.0, 5.0, 5.0]);
    }

    #[test]
    fn eigenvectors_are_orthogonal() {
        for a in Sigma::ALL {
            for b in Sigma::ALL {
                if a != b {
                    let dot: f64 = a.eigvec().iter().zip(b.eigvec()).map(|(x, y)| x * y).sum();
                    assert_eq!(dot, 0.0);
                }
            }
        }
    }

    #[test]
    fn eigenvectors_diagonalize_both_sides() {
        let p = CouplingParams::new(0.8, -1.3).unwrap();
        let kappa = c(2.1, 0.4);
        for side in [Side::Left, Side::Right] {
            let k = if side == Side::Left { kappa } else { kappa.conj() };
            let m = build_channel_matrix(&p, side, k);
            for sigma in Sigma::ALL {
                let v = Vector3::from(sigma.eigvec().map(|x| c(x, 0.0)));
                let mv = m.entries * v;
                let lambda = k * k
                    + c(0.0, side.potential_sign() * sigma.z_eff(&p));
                for i in 0..3 {
                    assert!((mv[i] - lambda * v[i]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn energy_formula() {
        assert_eq!(branch_energy(PI / 2.0, 0.0), PI * PI / 4.0);
        let e = branch_energy(2.665799, 0.839393);
        assert!((e - 6.4019).abs() < 1e-4);
        assert_eq!(branch_energy(1.3, 0.4), branch_energy(-1.3, -0.4));
    }

    #[test]
    fn alpha_zero_unit_coupling() {
        let r = verify_alpha_zero(&CouplingParams::new(1.0, 0.3).unwrap()).unwrap();
        assert!(r.confirmed);
        assert_eq!(r.betas(), vec![-2.0, 1.0, 1.0]);
        assert!(r.solutions.iter().all(|s| s.alpha == 0.0));
        // The α ≠ 0 trial branch: β = Y gives α = 0, β = -Y/2 gives α² < 0.
        let mut rej: Vec<_> = r.tentative.iter().map(|t| (t.beta, t.rejection)).collect();
        rej.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(rej[0], (-0.5, Some(Rejection::AlphaComplex)));
        assert_eq!(rej[1], (1.0, Some(Rejection::AlphaVanishes)));
        let complex = r.tentative.iter().find(|t| t.beta < 0.0).unwrap();
        assert!((complex.alpha_squared + 9.0 / 4.0).abs() < 1e-14);
    }

    #[test]
    fn alpha_zero_scales_with_y() {
        let r = verify_alpha_zero(&CouplingParams::new(2.0, 0.0).unwrap()).unwrap();
        assert!(r.confirmed);
        assert_eq!(r.betas(), vec![-4.0, 2.0, 2.0]);
        let r = verify_alpha_zero(&CouplingParams::new(0.37, 0.0).unwrap()).unwrap();
        assert!(r.confirmed);
        let b = r.betas();
        assert!((b[0] + 0.74).abs() < 1e-14 && (b[1] - 0.37).abs() < 1e-14);
    }

    #[test]
    fn alpha_zero_rejects_decoupled() {
        let p = CouplingParams::new(0.0, 1.0).unwrap();
        assert_eq!(verify_alpha_zero(&p), Err(ModelError::DegenerateCouplings));
    }

    #[test]
    fn cubic_three_real_roots() {
        // (x - 1)(x - 2)(x + 3) = x³ - 7x + 6
        match depressed_cubic(-7.0, 6.0) {
            CubicRoots::ThreeReal(mut r) => {
                r.sort_by(f64::total_cmp);
                assert!((r[0] + 3.0).abs() < 1e-14);
                assert!((r[1] - 1.0).abs() < 1e-14);
                assert!((r[2] - 2.0).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
        match depressed_cubic(1.0, 1.0) {
            CubicRoots::OneReal(x, z) => {
                assert!((x * x * x + x + 1.0).abs() < 1e-14);
                assert!((z * z * z + z + 1.0).norm() < 1e-13);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_orientation() {
        let p = CouplingParams::new(-1.0, 0.5).unwrap();
        let (q, o) = p.canonical();
        assert_eq!(o, Orientation::Mirrored);
        assert_eq!((q.y(), q.z()), (1.0, -0.5));
        for sigma in Sigma::ALL {
            assert_eq!(sigma.z_eff(&q), -sigma.z_eff(&p));
        }
        assert!(CouplingParams::new(f64::NAN, 0.0).is_err());
        assert!(CouplingParams::new(0.0, 0.0).unwrap().with_tol(0.0).is_err());
    }

    #[test]
    fn determinant_vanishes_on_branch_hyperbola() {
        let p = CouplingParams::new(0.6, 1.1).unwrap();
        let s = 1.9;
        for sigma in Sigma::ALL {
            let t = sigma.z_eff(&p) / (2.0 * s);
            let d = secular_determinant(&p, s, t, branch_energy(s, t));
            assert!(d.norm() < 1e-12, "{sigma}: {d}");
        }
    }
}
