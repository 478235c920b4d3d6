//! Two-qubit states and their Pauli-basis correlation data.
//!
//! The Pauli frame used throughout the crate is
//!
//! ```text
//! sigma1 = diag(-1, 1)       = -Z
//! sigma2 = [[0, 1], [1, 0]]  =  X
//! sigma3 = [[0, i], [-i, 0]] = -Y
//! ```
//!
//! in terms of the conventional `(X, Y, Z)`. The triple is right-handed
//! (`sigma1 sigma2 = i sigma3`), so SU(2) acts on it through ordinary SO(3)
//! rotations. Local filters `diag(x, 1)` are diagonal in this frame, aligned
//! with the `sigma1` axis.

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix2 = Matrix2<Complex64>;
pub type CMatrix4 = Matrix4<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// The four single-qubit basis operators `sigma0..sigma3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliBasis {
    pub sigma: [CMatrix2; 4],
}

impl PauliBasis {
    pub fn new() -> Self {
        PauliBasis {
            sigma: [sigma(0), sigma(1), sigma(2), sigma(3)],
        }
    }
}

impl Default for PauliBasis {
    fn default() -> Self {
        Self::new()
    }
}

/// `sigma_k` for `k` in `0..4`.
pub fn sigma(k: usize) -> CMatrix2 {
    match k {
        0 => CMatrix2::new(ONE, ZERO, ZERO, ONE),
        1 => CMatrix2::new(-ONE, ZERO, ZERO, ONE),
        2 => CMatrix2::new(ZERO, ONE, ONE, ZERO),
        3 => CMatrix2::new(ZERO, I, -I, ZERO),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Kronecker product `a ⊗ b`, with `a` acting on the first qubit.
pub fn kron(a: &CMatrix2, b: &CMatrix2) -> CMatrix4 {
    CMatrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `sigma_alpha ⊗ sigma_beta`.
pub fn sigma_pair(alpha: usize, beta: usize) -> CMatrix4 {
    kron(&sigma(alpha), &sigma(beta))
}

fn trace_product(a: &CMatrix4, b: &CMatrix4) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for k in 0..4 {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn min_hermitian_eigenvalue(m: &CMatrix4) -> f64 {
    // symmetrize first; the eigensolver assumes exact Hermiticity
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix4,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix4) -> Result<Self> {
        let herm = (entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = entries.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::TraceNotOne(tr.re));
        }
        let min_eig = min_hermitian_eigenvalue(&entries);
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(DensityMatrix { entries })
    }

    pub fn entries(&self) -> &CMatrix4 {
        &self.entries
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            entries: CMatrix4::identity() * Complex64::new(0.25, 0.0),
        }
    }

    /// Projector onto `(|01> - |10>)/sqrt(2)`.
    pub fn singlet() -> Self {
        let mut m = CMatrix4::zeros();
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        m[(2, 2)] = Complex64::new(0.5, 0.0);
        m[(1, 2)] = Complex64::new(-0.5, 0.0);
        m[(2, 1)] = Complex64::new(-0.5, 0.0);
        DensityMatrix { entries: m }
    }

    /// `tr[rho sigma_alpha ⊗ sigma_beta]`, complex so callers can inspect the residue.
    pub fn expectation(&self, op: &CMatrix4) -> Complex64 {
        trace_product(&self.entries, op)
    }

    pub fn rank(&self, tol: f64) -> usize {
        let h = (self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .filter(|&&e| e > tol)
            .count()
    }

    /// `tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        trace_product(&self.entries, &self.entries).re
    }

    pub fn to_state_file(&self) -> StateFile {
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                re[r][c] = self.entries[(r, c)].re;
                im[r][c] = self.entries[(r, c)].im;
            }
        }
        StateFile { re, im }
    }
}

/// On-disk state format: real and imaginary parts, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

impl StateFile {
    pub fn to_density(&self) -> Result<DensityMatrix> {
        make_density(CMatrix4::from_fn(|r, c| {
            Complex64::new(self.re[r][c], self.im[r][c])
        }))
    }

    pub fn from_json(text: &str) -> Result<DensityMatrix> {
        let file: StateFile =
            serde_json::from_str(text).map_err(|e| Error::StateFile(e.to_string()))?;
        file.to_density()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state file serializes")
    }
}

pub fn make_density(entries: CMatrix4) -> Result<DensityMatrix> {
    DensityMatrix::new(entries)
}

fn from_pauli_terms(terms: &[(usize, usize, f64)]) -> CMatrix4 {
    let mut m = CMatrix4::zeros();
    for &(a, b, coeff) in terms {
        m += sigma_pair(a, b) * Complex64::new(0.25 * coeff, 0.0);
    }
    m
}

/// `p |psi-><psi-| + (1 - p) I/4`, physical for `-1/3 <= p <= 1`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    if !(-1.0 / 3.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            allowed: "[-1/3, 1]",
        });
    }
    make_density(from_pauli_terms(&[
        (0, 0, 1.0),
        (1, 1, -p),
        (2, 2, -p),
        (3, 3, -p),
    ]))
}

/// `(I⊗I + r sigma1⊗I - p Σ sigma_i⊗sigma_i)/4`.
pub fn rho1(p: f64, r: f64) -> Result<DensityMatrix> {
    make_density(from_pauli_terms(&[
        (0, 0, 1.0),
        (1, 0, r),
        (1, 1, -p),
        (2, 2, -p),
        (3, 3, -p),
    ]))
}

/// `(I⊗I + p sigma1⊗I + p Σ sigma_i⊗sigma_i)/4`.
pub fn rho2(p: f64) -> Result<DensityMatrix> {
    make_density(from_pauli_terms(&[
        (0, 0, 1.0),
        (1, 0, p),
        (1, 1, p),
        (2, 2, p),
        (3, 3, p),
    ]))
}

/// The bordered correlation matrix `[[1, r], [s, T]]` with
/// `ttilde[alpha][beta] = tr[rho sigma_alpha ⊗ sigma_beta]`.
///
/// `r` is the top row tail (second qubit's Bloch vector), `s` the left
/// column tail (first qubit's Bloch vector).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedCorrelation {
    ttilde: Matrix4<f64>,
}

impl ExtendedCorrelation {
    /// Wraps a bordered matrix; the corner must be exactly 1.
    pub fn from_matrix(ttilde: Matrix4<f64>) -> Result<Self> {
        if ttilde[(0, 0)] != 1.0 {
            return Err(Error::InvalidInput(format!(
                "extended correlation corner is {}, expected 1",
                ttilde[(0, 0)]
            )));
        }
        Ok(ExtendedCorrelation { ttilde })
    }

    pub(crate) fn from_matrix_unchecked(mut ttilde: Matrix4<f64>) -> Self {
        ttilde[(0, 0)] = 1.0;
        ExtendedCorrelation { ttilde }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.ttilde
    }

    pub fn r(&self) -> Vector3<f64> {
        Vector3::new(self.ttilde[(0, 1)], self.ttilde[(0, 2)], self.ttilde[(0, 3)])
    }

    pub fn s(&self) -> Vector3<f64> {
        Vector3::new(self.ttilde[(1, 0)], self.ttilde[(2, 0)], self.ttilde[(3, 0)])
    }

    pub fn t(&self) -> Matrix3<f64> {
        self.ttilde.fixed_view::<3, 3>(1, 1).into_owned()
    }

    /// `rho = 1/4 Σ ttilde[a][b] sigma_a ⊗ sigma_b`, unvalidated.
    pub fn reconstruct(&self) -> CMatrix4 {
        let mut m = CMatrix4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                m += sigma_pair(a, b) * Complex64::new(0.25 * self.ttilde[(a, b)], 0.0);
            }
        }
        m
    }
}

pub fn correlation_data(rho: &DensityMatrix) -> ExtendedCorrelation {
    let mut tt = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let v = rho.expectation(&sigma_pair(a, b));
            debug_assert!(v.im.abs() <= 1e-12, "imaginary trace residue {}", v.im);
            tt[(a, b)] = v.re;
        }
    }
    ExtendedCorrelation::from_matrix_unchecked(tt)
}

/// Partial transpose over the second qubit.
pub fn partial_transpose_b(m: &CMatrix4) -> CMatrix4 {
    CMatrix4::from_fn(|r, c| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (c / 2, c % 2);
        m[(2 * i + l, 2 * k + j)]
    })
}

/// Minimal eigenvalue of `rho^{T_B}`; negative iff the state is entangled.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> f64 {
    min_hermitian_eigenvalue(&partial_transpose_b(rho.entries()))
}
