#![allow(dead_code)]

use std::f64::consts::PI;

use bellfilter::pauli::CMatrix4;
use bellfilter::{DensityMatrix, FilterParams, Rotation3};
use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// `G G^† / tr` for a complex Gaussian `4 x rank` matrix.
pub fn random_state_rank<R: Rng>(rng: &mut R, rank: usize) -> DensityMatrix {
    let mut g = nalgebra::DMatrix::<Complex64>::zeros(4, rank);
    for z in g.iter_mut() {
        *z = Complex64::new(gaussian(rng), gaussian(rng));
    }
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let mut out = CMatrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[(i, j)] = m[(i, j)] / tr;
        }
    }
    let out = (out + out.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(out).expect("Ginibre state is valid")
}

pub fn random_state<R: Rng>(rng: &mut R) -> DensityMatrix {
    let rank = rng.random_range(1..=4);
    random_state_rank(rng, rank)
}

pub fn random_euler<R: Rng>(rng: &mut R) -> [f64; 3] {
    [
        2.0 * PI * rng.random::<f64>(),
        PI * rng.random::<f64>(),
        2.0 * PI * rng.random::<f64>(),
    ]
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation3 {
    let [a, b, g] = random_euler(rng);
    Rotation3::from_euler(a, b, g)
}

pub fn random_filter<R: Rng>(rng: &mut R) -> FilterParams {
    let x = 0.05 + 0.95 * rng.random::<f64>();
    let y = 0.05 + 0.95 * rng.random::<f64>();
    FilterParams::new(x, y, random_euler(rng), random_euler(rng)).unwrap()
}

pub fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}
