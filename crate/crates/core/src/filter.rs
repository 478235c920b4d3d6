//! Local filtering `rho -> (F_A ⊗ F_B) rho (F_A ⊗ F_B)^† / N` and the
//! maximization of the filtered CHSH violation.
//!
//! A positive filter is written `F = U diag(x, 1) U^†`. Conjugating the
//! state by `U ⊗ V` rotates its bordered correlation matrix,
//! `W = Õ_A T̃ Õ_B^T`, where `U sigma_i U^† = Σ_j (O_A)_ij sigma_j`.
//! In that rotated frame the filtered correlations are `X / N` with
//!
//! ```text
//! X = C W D^T,   N = Σ_{α,β ∈ {0,1}} c_α d_β W[α][β],
//! ```
//!
//! `C`, `D` the 3x4 coefficient matrices of `diag(x,1) sigma_k diag(x,1)`
//! and `c = ((1+x²)/2, (1-x²)/2)` the coefficients of `diag(x², 1)`.
//! The filtered state itself has `T' = O_A^T X O_B / N`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3x4, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use crate::chsh::{mvci, top_two_gram_eigenvalues};
use crate::error::{Error, Result};
use crate::optim::{halton_points, multi_start, nelder_mead, reflect_into, OptimizerOptions};
use crate::pauli::{correlation_data, kron, CMatrix2, DensityMatrix, ExtendedCorrelation};
use crate::rotation::{local_unitary_rotate, wrap_euler, Rotation3};

/// Normalizations below this are treated as a filter that kills the state.
pub const NORM_FLOOR: f64 = 1e-9;

/// Filter strengths and the two local frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterParams {
    pub x: f64,
    pub y: f64,
    pub euler_a: [f64; 3],
    pub euler_b: [f64; 3],
}

impl FilterParams {
    pub fn new(x: f64, y: f64, euler_a: [f64; 3], euler_b: [f64; 3]) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    allowed: "[0, inf)",
                });
            }
        }
        Ok(FilterParams {
            x,
            y,
            euler_a,
            euler_b,
        })
    }

    pub fn identity() -> Self {
        FilterParams {
            x: 1.0,
            y: 1.0,
            euler_a: [0.0; 3],
            euler_b: [0.0; 3],
        }
    }

    pub fn rotation_a(&self) -> Rotation3 {
        let [a, b, g] = self.euler_a;
        Rotation3::from_euler(a, b, g)
    }

    pub fn rotation_b(&self) -> Rotation3 {
        let [a, b, g] = self.euler_b;
        Rotation3::from_euler(a, b, g)
    }

    /// `(F_A, F_B)` with `F = U diag(x, 1) U^†`, `U` the lift of each rotation.
    pub fn operators(&self) -> (CMatrix2, CMatrix2) {
        let build = |strength: f64, rot: Rotation3| {
            let u = rot.unitary();
            let diag = CMatrix2::new(
                Complex64::new(strength, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            );
            u * diag * u.adjoint()
        };
        (build(self.x, self.rotation_a()), build(self.y, self.rotation_b()))
    }

    /// Packs as `[x, y, alpha_a, beta_a, gamma_a, alpha_b, beta_b, gamma_b]`.
    pub fn to_vec(&self) -> [f64; 8] {
        let [a1, b1, g1] = self.euler_a;
        let [a2, b2, g2] = self.euler_b;
        [self.x, self.y, a1, b1, g1, a2, b2, g2]
    }
}

/// `X` and `N` for a filtered state, in the rotated frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredCorrelation {
    pub x: Matrix3<f64>,
    pub n: f64,
}

impl FilteredCorrelation {
    /// Correlation block of the normalized filtered state, up to local rotation.
    pub fn normalized(&self) -> Matrix3<f64> {
        self.x / self.n
    }

    /// `2 sqrt(tau1' + tau2')` for the eigenvalues of `X^T X / N²`.
    pub fn mvci(&self) -> f64 {
        let (t1, t2) = top_two_gram_eigenvalues(&self.normalized());
        2.0 * (t1 + t2).sqrt()
    }
}

/// Rows express `diag(x,1) sigma_k diag(x,1)`, `k = 1..3`, in `sigma_0..sigma_3`.
pub fn filter_coefficients(x: f64) -> Result<Matrix3x4<f64>> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            allowed: "[0, inf)",
        });
    }
    let x2 = x * x;
    #[rustfmt::skip]
    let c = Matrix3x4::new(
        0.5 * (1.0 - x2), 0.5 * (1.0 + x2), 0.0, 0.0,
        0.0, 0.0, x, 0.0,
        0.0, 0.0, 0.0, x,
    );
    Ok(c)
}

/// `X = C W D^T` and `N = tr[diag(x²,1) ⊗ diag(y²,1) ϱ]`.
pub fn filtered_correlation(tt: &ExtendedCorrelation, fp: &FilterParams) -> Result<FilteredCorrelation> {
    let w = local_unitary_rotate(tt, &fp.rotation_a(), &fp.rotation_b());
    filtered_from_rotated(w.matrix(), fp.x, fp.y)
}

pub(crate) fn filtered_from_rotated(w: &Matrix4<f64>, x: f64, y: f64) -> Result<FilteredCorrelation> {
    let c = filter_coefficients(x)?;
    let d = filter_coefficients(y)?;
    let xm = c * w * d.transpose();
    let (xp, xn) = (0.5 * (1.0 + x * x), 0.5 * (1.0 - x * x));
    let (yp, yn) = (0.5 * (1.0 + y * y), 0.5 * (1.0 - y * y));
    let n = xp * yp * w[(0, 0)] + xp * yn * w[(0, 1)] + xn * yp * w[(1, 0)] + xn * yn * w[(1, 1)];
    if !(n >= NORM_FLOOR) {
        return Err(Error::VanishingNorm(n));
    }
    Ok(FilteredCorrelation { x: xm, n })
}

fn is_positive_semidefinite(f: &CMatrix2) -> bool {
    let herm = (f - f.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-12 {
        return false;
    }
    // 2x2 Hermitian: PSD iff trace >= 0 and det >= 0
    let tr = f.trace().re;
    let det = f.determinant().re;
    tr >= -1e-12 && det >= -1e-12
}

/// `(F_A ⊗ F_B) rho (F_A ⊗ F_B)^† / N`, computed directly.
pub fn apply_filter_density(rho: &DensityMatrix, fa: &CMatrix2, fb: &CMatrix2) -> Result<DensityMatrix> {
    if !is_positive_semidefinite(fa) || !is_positive_semidefinite(fb) {
        return Err(Error::InvalidInput(
            "filters must be positive semidefinite".into(),
        ));
    }
    let k = kron(fa, fb);
    let out = k * rho.entries() * k.adjoint();
    let n = out.trace().re;
    if !(n >= NORM_FLOOR) {
        return Err(Error::VanishingNorm(n));
    }
    let out = (out + out.adjoint()) * Complex64::new(0.5 / n, 0.0);
    DensityMatrix::new(out)
}

/// Filtered CHSH value for one choice of filter.
pub fn filtered_mvci_objective(tt: &ExtendedCorrelation, fp: &FilterParams) -> Result<f64> {
    Ok(filtered_correlation(tt, fp)?.mvci())
}

/// Box for the filter strengths. It must contain 1 so that the identity
/// filter stays feasible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrengthBox {
    pub lo: f64,
    pub hi: f64,
}

impl Default for StrengthBox {
    fn default() -> Self {
        StrengthBox { lo: 1e-3, hi: 1.0 }
    }
}

/// Search coordinates per filter side.
pub(crate) const SIDE_DIM: usize = 3;
/// Search coordinates for a pair of filters.
pub(crate) const FILTER_DIM: usize = 2 * SIDE_DIM;

impl StrengthBox {
    fn check(&self) {
        assert!(
            self.lo > 0.0 && self.lo <= 1.0 && self.hi >= 1.0,
            "strength box must satisfy 0 < lo <= 1 <= hi"
        );
    }

    /// Largest `|1 - x| / (1 + x)` over the box.
    fn radius(&self) -> f64 {
        let k = |x: f64| ((1.0 - x) / (1.0 + x)).abs();
        k(self.lo).max(k(self.hi))
    }

    /// Filter pair for an unconstrained search point.
    ///
    /// Up to scale `U diag(x, 1) U^† = I + k n·sigma` with `k = (1-x)/(1+x)`
    /// and `n` the first row of the rotation, and `x ↦ 1/x` is `n ↦ -n`.
    /// Each side is searched as `v = k n` in a ball, reached from `u ∈ R³`
    /// by folding `|u|` back into `[0, radius]`. This drops the Euler angle
    /// that spins about `n`, which is flat, and makes the identity filter a
    /// smooth interior point.
    pub(crate) fn params_from_search(&self, u: &[f64]) -> FilterParams {
        let side = |u: &[f64]| -> (f64, [f64; 3]) {
            let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            if norm == 0.0 {
                return (1.0, [0.0; 3]);
            }
            let k = reflect_into(norm, 0.0, self.radius());
            let n = [u[0] / norm, u[1] / norm, u[2] / norm];
            let x = ((1.0 - k) / (1.0 + k)).max(self.lo);
            // first row of Rz(0) Ry(b) Rz(g) is (cos b cos g, -cos b sin g, sin b)
            let beta = n[2].clamp(-1.0, 1.0).asin();
            let gamma = (-n[1]).atan2(n[0]);
            (x, wrap_euler([0.0, beta, gamma]))
        };
        let (x, euler_a) = side(&u[..SIDE_DIM]);
        let (y, euler_b) = side(&u[SIDE_DIM..FILTER_DIM]);
        FilterParams { x, y, euler_a, euler_b }
    }
}

/// Initial Nelder–Mead edge lengths in search coordinates.
pub(crate) fn filter_steps(strengths: StrengthBox) -> [f64; FILTER_DIM] {
    [0.4 * strengths.radius(); FILTER_DIM]
}

/// Restart points: the identity filter first, then shifted Halton points
/// spread over the direction sphere and radius of each side.
pub(crate) fn filter_starts(count: usize, seed: u64, strengths: StrengthBox) -> Vec<Vec<f64>> {
    let radius = strengths.radius();
    let mut starts = vec![vec![0.0; FILTER_DIM]];
    for h in halton_points(count.saturating_sub(1), 2 * SIDE_DIM, seed) {
        let mut p = Vec::with_capacity(FILTER_DIM);
        for s in h.chunks(SIDE_DIM) {
            let z = 2.0 * s[0] - 1.0;
            let phi = 2.0 * PI * s[1];
            let r = (1.0 - z * z).sqrt();
            let len = radius * s[2];
            p.extend([len * r * phi.cos(), len * r * phi.sin(), len * z]);
        }
        starts.push(p);
    }
    starts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterResult {
    pub value: f64,
    pub params: FilterParams,
    pub restarts_used: usize,
    pub converged: bool,
}

pub fn maximize_filtered_mvci(rho: &DensityMatrix, opts: &OptimizerOptions) -> FilterResult {
    maximize_filtered_mvci_in(rho, opts, StrengthBox::default())
}

/// Multi-start search over `(x, y)` in `strengths` and both Euler triples.
pub fn maximize_filtered_mvci_in(
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
    strengths: StrengthBox,
) -> FilterResult {
    strengths.check();
    let tt = correlation_data(rho);
    let objective = |v: &[f64]| {
        let fp = strengths.params_from_search(v);
        filtered_mvci_objective(&tt, &fp).unwrap_or(f64::NEG_INFINITY)
    };
    let starts = filter_starts(opts.restarts.max(1), opts.seed, strengths);
    let steps = filter_steps(strengths);
    let search = multi_start(&objective, &starts, &steps, opts.max_iter, opts.tol);
    // one polishing pass from the winner with a fresh, smaller simplex
    let small: Vec<f64> = steps.iter().map(|s| 0.1 * s).collect();
    let polished = nelder_mead(objective, &search.best.point, &small, opts.max_iter, opts.tol);
    let best = if polished.value > search.best.value {
        polished
    } else {
        search.best
    };

    let identity = mvci(&tt.t()).value;
    let params = strengths.params_from_search(&best.point);
    if best.value >= identity {
        FilterResult {
            value: best.value,
            params,
            restarts_used: search.starts,
            converged: best.converged,
        }
    } else {
        FilterResult {
            value: identity,
            params: FilterParams::identity(),
            restarts_used: search.starts,
            converged: best.converged,
        }
    }
}
