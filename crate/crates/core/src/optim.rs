//! Derivative-free maximization: Nelder–Mead simplex with multi-start
//! seeding from a shifted Halton sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Knobs shared by every optimizer entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            restarts: 16,
            max_iter: 2000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `f` starting from `x0` with initial edge lengths `step`.
///
/// Infeasible points should evaluate to `f64::NEG_INFINITY`; NaN is
/// treated the same way.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], max_iter: usize, tol: f64) -> Maximum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(step.len(), n);
    // minimize g = -f internally
    let g = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), g(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = g(&x);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let along = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (ci - wi)).collect()
    };

    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if best.is_finite()
            && worst.is_finite()
            && (worst - best).abs() <= tol * (1.0 + best.abs())
            && diameter <= tol.sqrt()
        {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }

        let reflected = along(&centroid, &simplex[n].0, alpha);
        let fr = g(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(&centroid, &simplex[n].0, gamma);
            let fe = g(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < simplex[n].1 {
            let x = along(&centroid, &simplex[n].0, rho);
            let v = g(&x);
            (x, v)
        } else {
            let x = along(&centroid, &simplex[n].0, -rho);
            let v = g(&x);
            (x, v)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        // shrink toward the best vertex
        let best_x = simplex[0].0.clone();
        for (x, v) in simplex[1..].iter_mut() {
            for (xi, bi) in x.iter_mut().zip(&best_x) {
                *xi = bi + sigma * (*xi - bi);
            }
            *v = g(x);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, v) = simplex.swap_remove(0);
    Maximum {
        point,
        value: -v,
        iterations,
        converged,
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    out
}

/// Halton points in `[0,1)^dim` with a seeded Cranley–Patterson shift.
pub fn halton_points(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports up to 16 dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
                .collect()
        })
        .collect()
}

/// Result of running several Nelder–Mead searches and keeping the best.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub best: Maximum,
    pub best_start: usize,
    pub starts: usize,
}

/// Runs one Nelder–Mead search per start and keeps the best result.
/// Ties go to the lowest start index, so the outcome does not depend on
/// scheduling.
pub fn multi_start<F>(f: &F, starts: &[Vec<f64>], step: &[f64], max_iter: usize, tol: f64) -> MultiStart
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(!starts.is_empty());
    let runs: Vec<Maximum> = starts
        .par_iter()
        .map(|x0| nelder_mead(f, x0, step, max_iter, tol))
        .collect();
    let mut best_start = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value > runs[best_start].value {
            best_start = i;
        }
    }
    MultiStart {
        best: runs[best_start].clone(),
        best_start,
        starts: starts.len(),
    }
}

/// Folds `v` into `[lo, hi]` by mirror reflection.
pub fn reflect_into(v: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let t = (v - lo).rem_euclid(2.0 * width);
    lo + if t > width { 2.0 * width - t } else { t }
}
