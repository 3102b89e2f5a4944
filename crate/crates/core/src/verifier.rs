//! Finite-difference discretization of the three-channel Hamiltonian and the
//! parity-type operators acting on it.
//!
//! The grid holds `grid_n` interior points per channel, `x_j = -1 + j·h`,
//! `h = 2/(grid_n + 1)`, with Dirichlet walls at `±1`. For even `grid_n` the
//! node `x = 0` is absent, so the sign of the potential is never ambiguous.
//! Vectors are stored channel-major: index `c·grid_n + j`.
//!
//! P, Π and S are permutations, so they are kept as index maps and applied by
//! moving entries. The identities between them and `H` are then exact, with no
//! floating-point arithmetic involved.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::{CouplingParams, Sigma};

pub const MIN_GRID: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifierError {
    #[error("grid_n must be even and at least {MIN_GRID}, got {0}")]
    BadGrid(usize),
    #[error("eigenvalue iteration did not converge on a {0}x{0} matrix")]
    NoConvergence(usize),
    #[error("identity {label} violated: residual {residual:e}")]
    IdentityViolation { label: &'static str, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorLabel {
    Hamiltonian,
    GeneralizedParity,
    BlockParity,
    HiddenSymmetry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedOperator {
    pub grid_n: usize,
    pub label: OperatorLabel,
    pub matrix: DMatrix<Complex64>,
}

fn check_grid(grid_n: usize) -> Result<(), VerifierError> {
    if grid_n < MIN_GRID || grid_n % 2 != 0 {
        return Err(VerifierError::BadGrid(grid_n));
    }
    Ok(())
}

pub fn grid_spacing(grid_n: usize) -> f64 {
    2.0 / (grid_n + 1) as f64
}

/// Interior nodes `x_1 … x_grid_n`, symmetric about the origin.
pub fn grid_points(grid_n: usize) -> Vec<f64> {
    let h = grid_spacing(grid_n);
    (1..=grid_n)
        .map(|j| {
            // Mirror the right half so that x_j = -x_{n+1-j} holds bitwise.
            if 2 * j <= grid_n {
                -1.0 + j as f64 * h
            } else {
                1.0 - (grid_n + 1 - j) as f64 * h
            }
        })
        .collect()
}

fn potential_sign(x: f64) -> f64 {
    if x < 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `-Δ_h ⊗ I + i·sgn(-x)·(Z on the diagonal, Y between channels)`.
pub fn build_hamiltonian(params: &CouplingParams, grid_n: usize) -> Result<DiscretizedOperator, VerifierError> {
    check_grid(grid_n)?;
    let n = grid_n;
    let h2 = grid_spacing(n).powi(2);
    let xs = grid_points(n);
    let mut m = DMatrix::<Complex64>::zeros(3 * n, 3 * n);
    for c in 0..3 {
        for j in 0..n {
            let row = c * n + j;
            m[(row, row)] = Complex64::new(2.0 / h2, 0.0);
            if j > 0 {
                m[(row, row - 1)] = Complex64::new(-1.0 / h2, 0.0);
            }
            if j + 1 < n {
                m[(row, row + 1)] = Complex64::new(-1.0 / h2, 0.0);
            }
            let sign = potential_sign(xs[j]);
            for d in 0..3 {
                let strength = if c == d { params.z() } else { params.y() };
                m[(row, d * n + j)] += Complex64::new(0.0, sign * strength);
            }
        }
    }
    Ok(DiscretizedOperator {
        grid_n,
        label: OperatorLabel::Hamiltonian,
        matrix: m,
    })
}

/// Single-channel reduction of `H` onto branch `sigma`: the same Laplacian
/// with scalar potential `i·sgn(-x)·z_eff`.
pub fn branch_hamiltonian(params: &CouplingParams, sigma: Sigma, grid_n: usize) -> Result<DMatrix<Complex64>, VerifierError> {
    check_grid(grid_n)?;
    let n = grid_n;
    let h2 = grid_spacing(n).powi(2);
    let z_eff = sigma.z_eff(params);
    let xs = grid_points(n);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(2.0 / h2, potential_sign(xs[i]) * z_eff)
        } else if i.abs_diff(j) == 1 {
            Complex64::new(-1.0 / h2, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Eigenvalues of a dense complex matrix, sorted by real part.
pub fn dense_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>, VerifierError> {
    let max_iter = 100 * m.nrows().max(1);
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, max_iter)
        .ok_or(VerifierError::NoConvergence(m.nrows()))?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<Complex64> = t.diagonal().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Eigenvalue of smallest real part over all three branches.
pub fn lowest_eigenvalue(params: &CouplingParams, grid_n: usize) -> Result<Complex64, VerifierError> {
    let mut best: Option<Complex64> = None;
    let mut done: Vec<f64> = Vec::new();
    for sigma in Sigma::ALL {
        // Branches with equal z_eff share their spectrum.
        let z_eff = sigma.z_eff(params);
        if done.contains(&z_eff) {
            continue;
        }
        done.push(z_eff);
        let ev = dense_eigenvalues(&branch_hamiltonian(params, sigma, grid_n)?)?[0];
        if best.is_none_or(|b| ev.re < b.re) {
            best = Some(ev);
        }
    }
    Ok(best.expect("three branches"))
}

/// Permutation operator on `3·grid_n` basis vectors: `e_b ↦ e_{map[b]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Permutation { map: (0..len).collect() }
    }

    /// Channel `c ↦ c + shift (mod 3)`, optionally with `x ↦ -x`.
    fn channel_shift(grid_n: usize, shift: usize, reflect: bool) -> Self {
        let n = grid_n;
        let map = (0..3 * n)
            .map(|b| {
                let (c, j) = (b / n, b % n);
                let j = if reflect { n - 1 - j } else { j };
                ((c + shift) % 3) * n + j
            })
            .collect();
        Permutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (b, &a) in self.map.iter().enumerate() {
            inv[a] = b;
        }
        Permutation { map: inv }
    }

    /// Real orthogonal, so the adjoint is the inverse.
    pub fn adjoint(&self) -> Self {
        self.inverse()
    }

    /// `self · other`.
    pub fn compose(&self, other: &Permutation) -> Self {
        Permutation {
            map: other.map.iter().map(|&b| self.map[b]).collect(),
        }
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Permutation::identity(self.len()), |acc, _| self.compose(&acc))
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let len = self.len();
        let mut m = DMatrix::zeros(len, len);
        for (b, &a) in self.map.iter().enumerate() {
            m[(a, b)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `Q·M·Q⁻¹` by moving entries: `(Q M Q⁻¹)[q(a), q(b)] = M[a, b]`.
    pub fn conjugate(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for a in 0..m.nrows() {
            for b in 0..m.ncols() {
                out[(self.map[a], self.map[b])] = m[(a, b)];
            }
        }
        out
    }

    /// Cycle lengths; each cycle of length `L` contributes the `L`-th roots
    /// of unity to the spectrum.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut lengths = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut b = start;
            while !seen[b] {
                seen[b] = true;
                b = self.map[b];
                len += 1;
            }
            lengths.push(len);
        }
        lengths
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.eigenpairs().into_iter().map(|(w, _)| w).collect()
    }

    /// Eigenpairs built from the cycles: on a cycle `b, q(b), q²(b), …` of
    /// length `L`, the vector `Σ_k ω^(-k) e_{q^k(b)}` has eigenvalue `ω`.
    pub fn eigenpairs(&self) -> Vec<(Complex64, Vec<Complex64>)> {
        let mut seen = vec![false; self.len()];
        let mut pairs = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut b = start;
            while !seen[b] {
                seen[b] = true;
                orbit.push(b);
                b = self.map[b];
            }
            let l = orbit.len();
            for k in 0..l {
                let w = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / l as f64);
                let mut v = vec![Complex64::new(0.0, 0.0); self.len()];
                for (m, &b) in orbit.iter().enumerate() {
                    v[b] = w.powi(-(m as i32));
                }
                pairs.push((w, v));
            }
        }
        pairs
    }

    /// Number of positions where the two permutations differ.
    pub fn mismatches(&self, other: &Permutation) -> usize {
        self.map.iter().zip(&other.map).filter(|(a, b)| a != b).count()
    }
}

/// The generalized parity, the block parity and the hidden symmetry on one grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityOps {
    pub grid_n: usize,
    /// `(Pψ)_a(x) = ψ_c(-x)`, `(Pψ)_b(x) = ψ_a(-x)`, `(Pψ)_c(x) = ψ_b(-x)`.
    pub p: Permutation,
    /// `Π = I ⊗ reflection`.
    pub block_parity: Permutation,
    /// `S = P⁻¹·P†`.
    pub s: Permutation,
}

impl ParityOps {
    pub fn operator(&self, label: OperatorLabel) -> Option<DiscretizedOperator> {
        let perm = match label {
            OperatorLabel::GeneralizedParity => &self.p,
            OperatorLabel::BlockParity => &self.block_parity,
            OperatorLabel::HiddenSymmetry => &self.s,
            OperatorLabel::Hamiltonian => return None,
        };
        Some(DiscretizedOperator {
            grid_n: self.grid_n,
            label,
            matrix: perm.to_matrix(),
        })
    }
}

pub fn build_parity_ops(grid_n: usize) -> Result<ParityOps, VerifierError> {
    check_grid(grid_n)?;
    let p = Permutation::channel_shift(grid_n, 1, true);
    let block_parity = Permutation::channel_shift(grid_n, 0, true);
    let s = p.inverse().compose(&p.adjoint());
    Ok(ParityOps {
        grid_n,
        p,
        block_parity,
        s,
    })
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub grid_n: usize,
    /// `‖P H P⁻¹ - H†‖`
    pub pseudo_hermiticity: f64,
    /// `‖H S - S H‖`
    pub hidden_symmetry: f64,
    /// `‖Π H Π⁻¹ - H†‖`
    pub block_parity: f64,
    /// `‖P - P†‖`, must stay away from zero.
    pub parity_asymmetry: f64,
    /// `‖P² - I‖`, nonzero because P is not an involution.
    pub involution_distance: f64,
    pub cube_is_block_parity: bool,
    pub adjoint_inverse_is_p: bool,
    /// `S` is a pure channel rotation, of order 3.
    pub s_is_channel_rotation: bool,
    /// `‖P - P⁻²‖`; recorded only. The two differ by the reflection.
    pub p_minus_inverse_square: f64,
    pub max_parity_eigen_imag: f64,
}

impl IdentityReport {
    /// Entries in check order, as `(label, value)`.
    pub fn residuals(&self) -> [(&'static str, f64); 3] {
        [
            ("pseudo_hermiticity", self.pseudo_hermiticity),
            ("hidden_symmetry", self.hidden_symmetry),
            ("block_parity", self.block_parity),
        ]
    }
}

/// All residuals for a given (possibly modified) Hamiltonian.
pub fn identity_residuals(h: &DiscretizedOperator, ops: &ParityOps) -> IdentityReport {
    let hm = &h.matrix;
    let h_adj = hm.adjoint();
    let hs = ops.s.to_matrix();
    let p = ops.p.to_matrix();
    let id = Permutation::identity(ops.p.len()).to_matrix();
    IdentityReport {
        grid_n: ops.grid_n,
        pseudo_hermiticity: max_abs_diff(&ops.p.conjugate(hm), &h_adj),
        hidden_symmetry: max_abs_diff(&ops.s.conjugate(hm), hm),
        block_parity: max_abs_diff(&ops.block_parity.conjugate(hm), &h_adj),
        parity_asymmetry: max_abs_diff(&p, &ops.p.adjoint().to_matrix()),
        involution_distance: max_abs_diff(&ops.p.pow(2).to_matrix(), &id),
        cube_is_block_parity: ops.p.pow(3) == ops.block_parity,
        adjoint_inverse_is_p: ops.p.adjoint().inverse() == ops.p,
        s_is_channel_rotation: ops.s == Permutation::channel_shift(ops.grid_n, 1, false)
            && ops.s.pow(3) == Permutation::identity(ops.s.len())
            && ops.s != Permutation::identity(ops.s.len()),
        p_minus_inverse_square: max_abs_diff(&p, &hs),
        max_parity_eigen_imag: ops.p.eigenvalues().iter().map(|e| e.im.abs()).fold(0.0, f64::max),
    }
}

/// Builds H, P, Π, S and fails on the first identity exceeding `tol`, or if
/// P turns out Hermitian.
pub fn check_identities(params: &CouplingParams, grid_n: usize, tol: f64) -> Result<IdentityReport, VerifierError> {
    let h = build_hamiltonian(params, grid_n)?;
    let ops = build_parity_ops(grid_n)?;
    let report = identity_residuals(&h, &ops);
    for (label, residual) in report.residuals() {
        if !(residual <= tol) {
            return Err(VerifierError::IdentityViolation { label, residual });
        }
    }
    if report.parity_asymmetry < 1.0 {
        return Err(VerifierError::IdentityViolation {
            label: "parity_asymmetry",
            residual: report.parity_asymmetry,
        });
    }
    Ok(report)
}
