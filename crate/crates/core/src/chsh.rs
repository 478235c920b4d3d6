//! Maximal CHSH violation from the correlation matrix, the settings that
//! achieve it, and the teleportation / Holevo figures derived from it.

use std::f64::consts::SQRT_2;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{kron, sigma, CMatrix2, CMatrix4, DensityMatrix};

pub const TSIRELSON: f64 = 2.0 * SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshResult {
    pub value: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub violating: bool,
}

/// Bloch directions of the two observables on each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a1: Vector3<f64>,
    pub a2: Vector3<f64>,
    pub b1: Vector3<f64>,
    pub b2: Vector3<f64>,
}

/// Eigenpairs of a symmetric 3x3 matrix, sorted by decreasing eigenvalue.
/// Equal eigenvalues keep the solver's index order.
pub(crate) fn sorted_eigen(m: Matrix3<f64>) -> [(f64, Vector3<f64>); 3] {
    let eig = SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    idx.map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
}

/// Two largest eigenvalues of `M^T M`, clamped at zero.
pub(crate) fn top_two_gram_eigenvalues(m: &Matrix3<f64>) -> (f64, f64) {
    let [(t1, _), (t2, _), _] = sorted_eigen(m.transpose() * m);
    (t1.max(0.0), t2.max(0.0))
}

/// `2 sqrt(tau1 + tau2)` for the two largest eigenvalues of `T^T T`.
pub fn mvci(t: &Matrix3<f64>) -> ChshResult {
    let (tau1, tau2) = top_two_gram_eigenvalues(t);
    let value = 2.0 * (tau1 + tau2).sqrt();
    ChshResult {
        value,
        tau1,
        tau2,
        violating: value > 2.0,
    }
}

fn any_orthogonal(v: &Vector3<f64>) -> Vector3<f64> {
    let seed = if v.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    (seed - v * v.dot(&seed)).normalize()
}

/// Settings whose CHSH expectation equals `mvci(t).value`.
pub fn optimal_chsh_settings(t: &Matrix3<f64>) -> Result<ChshSettings> {
    let [(tau1, c1), (tau2, c2), _] = sorted_eigen(t.transpose() * t);
    if tau1 < 1e-12 {
        return Err(Error::DegenerateCorrelation(tau1));
    }
    let tau2 = tau2.max(0.0);
    let theta = (tau2 / tau1).sqrt().atan();
    let (s, c) = theta.sin_cos();
    let b1 = c1 * c + c2 * s;
    let b2 = c1 * c - c2 * s;
    let a1 = (t * c1).normalize();
    let tc2 = t * c2;
    let a2 = if tc2.norm() > 1e-12 {
        tc2.normalize()
    } else {
        // tau2 = 0 gives theta = 0, so a2 never contributes
        any_orthogonal(&a1)
    };
    Ok(ChshSettings { a1, a2, b1, b2 })
}

/// `Σ_k v_k sigma_k`.
pub fn observable(v: &Vector3<f64>) -> CMatrix2 {
    (1..4).fold(CMatrix2::zeros(), |acc, k| {
        acc + sigma(k) * Complex64::new(v[k - 1], 0.0)
    })
}

/// `A1⊗B1 + A1⊗B2 + A2⊗B1 - A2⊗B2`.
pub fn chsh_operator(settings: &ChshSettings) -> CMatrix4 {
    let (a1, a2) = (observable(&settings.a1), observable(&settings.a2));
    let (b1, b2) = (observable(&settings.b1), observable(&settings.b2));
    kron(&a1, &b1) + kron(&a1, &b2) + kron(&a2, &b1) - kron(&a2, &b2)
}

pub fn chsh_expectation(rho: &DensityMatrix, settings: &ChshSettings) -> f64 {
    rho.expectation(&chsh_operator(settings)).re
}

/// `(1 + mvci/12) / 2`, with the coefficient 1/12 as printed in the source
/// relation. The familiar Horodecki bound `(1 + mvci/6) / 2`, which maps
/// `mvci = 2` to the classical fidelity 2/3, is stronger.
pub fn teleportation_fidelity_bound(mvci_value: f64) -> Result<f64> {
    if !(0.0..=TSIRELSON + 1e-9).contains(&mvci_value) {
        return Err(Error::OutOfRange {
            name: "mvci",
            value: mvci_value,
            allowed: "[0, 2 sqrt 2]",
        });
    }
    Ok(0.5 * (1.0 + mvci_value / 12.0))
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// `h((1 + sqrt((mvci/2)^2 - 1)) / 2)`, defined for `2 <= mvci <= 2 sqrt 2`.
pub fn holevo_bound(mvci_value: f64) -> Result<f64> {
    if !(2.0..=TSIRELSON + 1e-9).contains(&mvci_value) {
        return Err(Error::OutOfRange {
            name: "mvci",
            value: mvci_value,
            allowed: "[2, 2 sqrt 2]",
        });
    }
    let root = ((0.5 * mvci_value).powi(2) - 1.0).clamp(0.0, 1.0).sqrt();
    Ok(binary_entropy(0.5 * (1.0 + root)))
}
