//! Monte-Carlo check of the explicit local-hidden-variable model for the
//! one-sided-noise state `rho2(-q)`.
//!
//! With probability `q` both parties share `λ` drawn with density
//! `|a·λ|/(2π)` and answer `a = -sgn(a·λ)`, `b = sgn(b·λ)`. Otherwise Alice
//! samples her marginal of the separable part and Bob flips a fair coin.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Shards per simulation; each draws from its own ChaCha8 stream.
pub const SHARDS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhvModel {
    pub q: f64,
    pub marginal_axis: Vector3<f64>,
}

impl LhvModel {
    /// Model for `rho2(-q)`, marginal along the sigma1 axis.
    pub fn new(q: f64) -> Result<Self> {
        Self::with_axis(q, Vector3::x())
    }

    pub fn with_axis(q: f64, marginal_axis: Vector3<f64>) -> Result<Self> {
        if !(q > 0.0 && q <= 0.5) {
            return Err(Error::OutOfRange {
                name: "q",
                value: q,
                allowed: "(0, 1/2]",
            });
        }
        check_unit(&marginal_axis)?;
        Ok(LhvModel { q, marginal_axis })
    }
}

fn check_unit(v: &Vector3<f64>) -> Result<()> {
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::OutOfRange {
            name: "|direction|",
            value: v.norm(),
            allowed: "1 within 1e-10",
        });
    }
    Ok(())
}

/// Probabilities of the outcome pairs `(+,+), (+,-), (-,+), (-,-)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointDistribution {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointDistribution {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    fn from_array([p_pp, p_pm, p_mp, p_mm]: [f64; 4]) -> Self {
        JointDistribution {
            p_pp,
            p_pm,
            p_mp,
            p_mm,
        }
    }

    pub fn get(&self, a: i8, b: i8) -> f64 {
        match (a > 0, b > 0) {
            (true, true) => self.p_pp,
            (true, false) => self.p_pm,
            (false, true) => self.p_mp,
            (false, false) => self.p_mm,
        }
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// `E[ab]`.
    pub fn correlator(&self) -> f64 {
        self.p_pp - self.p_pm - self.p_mp + self.p_mm
    }

    /// `(E[a], E[b])`.
    pub fn marginals(&self) -> (f64, f64) {
        (
            self.p_pp + self.p_pm - self.p_mp - self.p_mm,
            self.p_pp - self.p_pm + self.p_mp - self.p_mm,
        )
    }
}

/// `p(a,b) = (1 - q ab (a·b))/4 - a a_m q / 4`, `a_m` the component of `a`
/// along the marginal axis.
pub fn quantum_joint(model: &LhvModel, avec: &Vector3<f64>, bvec: &Vector3<f64>) -> Result<JointDistribution> {
    check_unit(avec)?;
    check_unit(bvec)?;
    let q = model.q;
    let ab = avec.dot(bvec);
    let am = avec.dot(&model.marginal_axis);
    let p = |a: f64, b: f64| (1.0 - q * a * b * ab) / 4.0 - a * am * q / 4.0;
    Ok(JointDistribution::from_array([
        p(1.0, 1.0),
        p(1.0, -1.0),
        p(-1.0, 1.0),
        p(-1.0, -1.0),
    ]))
}

fn orthonormal_pair(a: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (seed - a * a.dot(&seed)).normalize();
    let e2 = a.cross(&e1);
    (e1, e2)
}

/// Draws `λ` on the sphere with density `|a·λ|/(2π)`.
///
/// `|cos θ|` about `a` has CDF `t²`, so `cos θ = ±sqrt(u)`; the azimuth is uniform.
pub fn sample_biased_lambda<R: Rng + ?Sized>(avec: &Vector3<f64>, rng: &mut R) -> Vector3<f64> {
    let (e1, e2) = orthonormal_pair(avec);
    sample_in_frame(avec, &e1, &e2, rng)
}

fn sample_in_frame<R: Rng + ?Sized>(
    a: &Vector3<f64>,
    e1: &Vector3<f64>,
    e2: &Vector3<f64>,
    rng: &mut R,
) -> Vector3<f64> {
    let u: f64 = rng.random();
    let z = if rng.random::<bool>() { u.sqrt() } else { -u.sqrt() };
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    a * z + (e1 * c + e2 * s) * r
}

fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

fn shard_counts(model: &LhvModel, avec: &Vector3<f64>, bvec: &Vector3<f64>, trials: u64, seed: u64, shard: u64) -> [u64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    let (e1, e2) = orthonormal_pair(avec);
    let q = model.q;
    let alice_plus = 0.5 * (1.0 - q / (1.0 - q) * avec.dot(&model.marginal_axis));
    let mut counts = [0u64; 4];
    for _ in 0..trials {
        let (a, b) = if rng.random::<f64>() < q {
            let lambda = sample_in_frame(avec, &e1, &e2, &mut rng);
            (-sign(avec.dot(&lambda)), sign(bvec.dot(&lambda)))
        } else {
            let a = if rng.random::<f64>() < alice_plus { 1 } else { -1 };
            let b = if rng.random::<bool>() { 1 } else { -1 };
            (a, b)
        };
        let idx = match (a > 0, b > 0) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        counts[idx] += 1;
    }
    counts
}

/// Empirical outcome frequencies of `n` trials of the model.
///
/// Trials are split over [`SHARDS`] independent ChaCha8 streams of `seed`,
/// so the result is fixed by `(seed, n)` whatever the thread count.
pub fn simulate_lhv(
    model: &LhvModel,
    avec: &Vector3<f64>,
    bvec: &Vector3<f64>,
    n: u64,
    seed: u64,
) -> Result<JointDistribution> {
    check_unit(avec)?;
    check_unit(bvec)?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            allowed: "[1, inf)",
        });
    }
    let per = n / SHARDS;
    let extra = n % SHARDS;
    let counts: Vec<[u64; 4]> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let trials = per + u64::from(s < extra);
            shard_counts(model, avec, bvec, trials, seed, s)
        })
        .collect();
    let mut total = [0u64; 4];
    for c in counts {
        for k in 0..4 {
            total[k] += c[k];
        }
    }
    Ok(JointDistribution::from_array(total.map(|c| c as f64 / n as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LhvReport {
    pub max_abs_deviation: f64,
    /// Largest `|empirical - exact| / sqrt(p(1-p)/n)` over all entries.
    pub max_sigma: f64,
    pub pairs: usize,
    pub trials: u64,
}

impl LhvReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.max_sigma <= sigmas
    }
}

/// Simulates every direction pair and compares with the exact statistics.
pub fn lhv_report(
    model: &LhvModel,
    pairs: &[(Vector3<f64>, Vector3<f64>)],
    n: u64,
    seed: u64,
) -> Result<LhvReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no measurement direction pairs".into()));
    }
    let mut max_abs_deviation: f64 = 0.0;
    let mut max_sigma: f64 = 0.0;
    for (i, (a, b)) in pairs.iter().enumerate() {
        let sub_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
        let sim = simulate_lhv(model, a, b, n, sub_seed)?;
        let exact = quantum_joint(model, a, b)?;
        for (e, p) in sim.as_array().iter().zip(exact.as_array()) {
            let dev = (e - p).abs();
            max_abs_deviation = max_abs_deviation.max(dev);
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            if sd > 0.0 {
                max_sigma = max_sigma.max(dev / sd);
            } else if dev > 0.0 {
                max_sigma = f64::INFINITY;
            }
        }
    }
    Ok(LhvReport {
        max_abs_deviation,
        max_sigma,
        pairs: pairs.len(),
        trials: n,
    })
}

/// Uniformly random unit vector.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let r = (1.0 - z * z).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

/// `count` reproducible random direction pairs.
pub fn random_pairs(count: usize, seed: u64) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (random_direction(&mut rng), random_direction(&mut rng)))
        .collect()
}
