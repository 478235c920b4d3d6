//! SO(3) rotations of Pauli coefficient vectors and their SU(2) lifts.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4};
use num_complex::Complex64;

use crate::pauli::{sigma, CMatrix2, ExtendedCorrelation};

/// Proper rotation built from ZYZ Euler angles about the Pauli axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    matrix: Matrix3<f64>,
    euler: [f64; 3],
}

fn about_axis3(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn about_axis2(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// `exp(i t sigma_k / 2)`.
fn half_angle(k: usize, t: f64) -> CMatrix2 {
    let (s, c) = (0.5 * t).sin_cos();
    CMatrix2::identity() * Complex64::new(c, 0.0) + sigma(k) * Complex64::new(0.0, s)
}

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3 {
            matrix: Matrix3::identity(),
            euler: [0.0; 3],
        }
    }

    /// `R = Rz(alpha) Ry(beta) Rz(gamma)` with axis 3 = sigma3, axis 2 = sigma2.
    pub fn from_euler(alpha: f64, beta: f64, gamma: f64) -> Self {
        Rotation3 {
            matrix: about_axis3(alpha) * about_axis2(beta) * about_axis3(gamma),
            euler: [alpha, beta, gamma],
        }
    }

    /// Same rotation with angles wrapped into `[0, 2pi) x [0, pi] x [0, 2pi)`.
    pub fn canonical_euler(&self) -> [f64; 3] {
        wrap_euler(self.euler)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn euler(&self) -> [f64; 3] {
        self.euler
    }

    /// `diag(1, R)`.
    pub fn embedded(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(&self.matrix);
        m
    }

    /// A unitary `U` with `U sigma_i U^† = Σ_j R_ij sigma_j`.
    pub fn unitary(&self) -> CMatrix2 {
        let [a, b, g] = self.euler;
        half_angle(3, g) * half_angle(2, b) * half_angle(3, a)
    }
}

/// Maps arbitrary ZYZ angles to an equivalent triple in the canonical box.
pub fn wrap_euler([a, b, g]: [f64; 3]) -> [f64; 3] {
    let two_pi = 2.0 * PI;
    let mut beta = b.rem_euclid(two_pi);
    let (mut alpha, mut gamma) = (a, g);
    if beta > PI {
        // Ry(-b) = Rz(pi) Ry(b) Rz(pi)
        beta = two_pi - beta;
        alpha += PI;
        gamma += PI;
    }
    [alpha.rem_euclid(two_pi), beta, gamma.rem_euclid(two_pi)]
}

pub fn euler_to_rotation(alpha: f64, beta: f64, gamma: f64) -> Rotation3 {
    Rotation3::from_euler(alpha, beta, gamma)
}

/// `Õ_A T̃ Õ_B^T` with `Õ = diag(1, O)`.
pub fn local_unitary_rotate(
    tt: &ExtendedCorrelation,
    oa: &Rotation3,
    ob: &Rotation3,
) -> ExtendedCorrelation {
    ExtendedCorrelation::from_matrix_unchecked(
        oa.embedded() * tt.matrix() * ob.embedded().transpose(),
    )
}
