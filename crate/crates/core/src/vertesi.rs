//! Integral lower bound on the Vértesi-inequality violation over pairs of
//! spherical bands, for raw and locally filtered states.
//!
//! For a band `Ω_a^b = {x ∈ S² : a <= polar(x) <= b}` with area `s_ab`,
//! the bound for correlation matrix `X` and normalization `N` is
//!
//! ```text
//! (1/N) [ |<m_ab, X m_cd>| / (s_ab s_cd)
//!       + 1/(2 s_cd²) ∬_{Ω_c^d²} |X(x - y)|
//!       + 1/(2 s_ab²) ∬_{Ω_a^b²} |X^T(x - y)| ]
//! ```
//!
//! where `m` is the band's first moment. Points are parameterized as
//! `(sin φ1 sin φ2, sin φ1 cos φ2, cos φ1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::{filter_starts, filter_steps, filtered_correlation, FilterParams, StrengthBox, FILTER_DIM};
use crate::optim::{nelder_mead, reflect_into, OptimizerOptions};
use crate::pauli::{correlation_data, DensityMatrix, ExtendedCorrelation};

const EDGE_TOL: f64 = 1e-12;

/// Polar-angle bounds of the two bands, `0 <= a < b <= π/2`, `0 <= c < d <= π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapWindow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CapWindow {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (lo, hi) in [(a, b), (c, d)] {
            check_half(lo, hi)?;
            if lo >= hi {
                return Err(Error::BadWindow(format!("need lower < upper, got [{lo}, {hi}]")));
            }
        }
        Ok(CapWindow { a, b, c, d })
    }

    pub fn hemispheres() -> Self {
        CapWindow {
            a: 0.0,
            b: FRAC_PI_2,
            c: 0.0,
            d: FRAC_PI_2,
        }
    }
}

fn check_half(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > FRAC_PI_2 + EDGE_TOL || lo > hi {
        return Err(Error::BadWindow(format!(
            "band [{lo}, {hi}] must satisfy 0 <= lower <= upper <= pi/2"
        )));
    }
    Ok(())
}

/// `2π (cos a - cos b)`.
pub fn cap_area(a: f64, b: f64) -> Result<f64> {
    check_half(a, b)?;
    Ok(2.0 * PI * (a.cos() - b.cos()))
}

/// `∫ x dμ` over the band: `(0, 0, π (cos² a - cos² b))`.
pub fn cap_first_moment(a: f64, b: f64) -> Result<Vector3<f64>> {
    check_half(a, b)?;
    Ok(Vector3::new(0.0, 0.0, PI * (a.cos().powi(2) - b.cos().powi(2))))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule on a band: Gauss–Legendre in the polar angle (with the
/// `sin φ1` Jacobian folded into the weights) times the periodic
/// trapezoid rule in the azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    n_polar: usize,
    n_azimuth: usize,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    azimuth_sin: Vec<f64>,
    azimuth_cos: Vec<f64>,
}

/// Quadrature points on one band, stored by coordinate.
///
/// Each node also carries the two tangent edges of the cell it stands for,
/// `d φ1 · e_φ1` and `sin φ1 d φ2 · e_φ2`, used by [`pair_term`].
#[derive(Debug, Clone, PartialEq)]
pub struct CapRule {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
    pub weights: Vec<f64>,
    pub edges: Vec<(Vector3<f64>, Vector3<f64>)>,
}

impl CapRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> Vector3<f64> {
        Vector3::new(self.xs[i], self.ys[i], self.zs[i])
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate<F: Fn(Vector3<f64>) -> f64>(&self, f: F) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.point(i))).sum()
    }
}

impl Quadrature {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Self {
        assert!(n_polar >= 1 && n_azimuth >= 1);
        let (gl_nodes, gl_weights) = gauss_legendre(n_polar);
        let (azimuth_sin, azimuth_cos) = (0..n_azimuth)
            .map(|k| (2.0 * PI * k as f64 / n_azimuth as f64).sin_cos())
            .unzip();
        Quadrature {
            n_polar,
            n_azimuth,
            gl_nodes,
            gl_weights,
            azimuth_sin,
            azimuth_cos,
        }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.n_polar, self.n_azimuth)
    }

    pub fn cap(&self, a: f64, b: f64) -> CapRule {
        let size = self.n_polar * self.n_azimuth;
        let mut rule = CapRule {
            xs: Vec::with_capacity(size),
            ys: Vec::with_capacity(size),
            zs: Vec::with_capacity(size),
            weights: Vec::with_capacity(size),
            edges: Vec::with_capacity(size),
        };
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let az_w = 2.0 * PI / self.n_azimuth as f64;
        for (t, w) in self.gl_nodes.iter().zip(&self.gl_weights) {
            let phi = mid + half * t;
            let (s, c) = phi.sin_cos();
            let weight = half * w * s * az_w;
            for (sa, ca) in self.azimuth_sin.iter().zip(&self.azimuth_cos) {
                rule.xs.push(s * sa);
                rule.ys.push(s * ca);
                rule.zs.push(c);
                rule.weights.push(weight);
                rule.edges.push((
                    Vector3::new(c * sa, c * ca, -s) * (half * w),
                    Vector3::new(*ca, -sa, 0.0) * (s * az_w),
                ));
            }
        }
        rule
    }
}

/// `E|p A + q B| / 2` for `p, q` differences of two uniforms on
/// `[-1/2, 1/2]`, i.e. with triangular densities on `[-1, 1]`.
fn cell_mean_distance(a: &Vector3<f64>, b: &Vector3<f64>, sub: &[(f64, f64)]) -> f64 {
    let mut e = 0.0;
    for &(p, wp) in sub {
        for &(q, wq) in sub {
            e += wp * wq * ((a * p + b * q).norm() + (a * p - b * q).norm());
        }
    }
    e
}

/// `1/(2 s²) ∬ |M(x - y)| dμ dμ` over one band by the full tensor sum.
///
/// The kink of `|M(x - y)|` on the diagonal is what limits the product
/// rule, so each node's own cell is added back as `w_i² E|M(u - v)|` with
/// `u, v` uniform on the flat cell spanned by its edges.
pub fn pair_term(m: &Matrix3<f64>, rule: &CapRule, area: f64) -> f64 {
    let n = rule.len();
    let mut vx = Vec::with_capacity(n);
    let mut vy = Vec::with_capacity(n);
    let mut vz = Vec::with_capacity(n);
    for i in 0..n {
        let v = m * rule.point(i);
        vx.push(v.x);
        vy.push(v.y);
        vz.push(v.z);
    }
    let w = &rule.weights;
    let mut total = 0.0;
    for i in 0..n {
        let (xi, yi, zi) = (vx[i], vy[i], vz[i]);
        let mut row = 0.0;
        for j in (i + 1)..n {
            let dx = xi - vx[j];
            let dy = yi - vy[j];
            let dz = zi - vz[j];
            row += w[j] * (dx * dx + dy * dy + dz * dz).sqrt();
        }
        total += w[i] * row;
    }
    // triangular weight (1 - p) folded into a Gauss rule on [0, 1]
    let (gt, gw) = gauss_legendre(6);
    let sub: Vec<(f64, f64)> = gt
        .iter()
        .zip(&gw)
        .map(|(t, w)| {
            let p = 0.5 * (t + 1.0);
            (p, 0.5 * w * (1.0 - p))
        })
        .collect();
    let mut cells = 0.0;
    for (i, (ea, eb)) in rule.edges.iter().enumerate() {
        cells += w[i] * w[i] * cell_mean_distance(&(m * ea), &(m * eb), &sub);
    }
    // off-diagonal pairs counted once, so the 1/2 cancels against the factor 2
    (total + cells) / (area * area)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertesiTerms {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
}

impl VertesiTerms {
    pub fn sum(&self) -> f64 {
        self.term1 + self.term2 + self.term3
    }
}

pub fn vertesi_terms(x: &Matrix3<f64>, w: &CapWindow, q: &Quadrature) -> Result<VertesiTerms> {
    let s_ab = cap_area(w.a, w.b)?;
    let s_cd = cap_area(w.c, w.d)?;
    if s_ab <= 0.0 || s_cd <= 0.0 {
        return Err(Error::BadWindow("band has zero area".into()));
    }
    let m_ab = cap_first_moment(w.a, w.b)?;
    let m_cd = cap_first_moment(w.c, w.d)?;
    let term1 = m_ab.dot(&(x * m_cd)).abs() / (s_ab * s_cd);
    let term2 = pair_term(x, &q.cap(w.c, w.d), s_cd);
    let term3 = pair_term(&x.transpose(), &q.cap(w.a, w.b), s_ab);
    Ok(VertesiTerms {
        term1,
        term2,
        term3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertesiResult {
    pub bound: f64,
    pub window: CapWindow,
    pub filter: Option<FilterParams>,
    pub violating: bool,
    pub terms: VertesiTerms,
    pub norm: f64,
    pub quad_n: usize,
}

fn correlation_and_norm(
    tt: &ExtendedCorrelation,
    fp: Option<&FilterParams>,
) -> Result<(Matrix3<f64>, f64)> {
    match fp {
        None => Ok((tt.t(), 1.0)),
        Some(fp) => {
            let fc = filtered_correlation(tt, fp)?;
            Ok((fc.x, fc.n))
        }
    }
}

/// The bound for one window, with or without a filter.
pub fn vertesi_lower_bound(
    tt: &ExtendedCorrelation,
    fp: Option<&FilterParams>,
    w: &CapWindow,
    q: &Quadrature,
) -> Result<VertesiResult> {
    let (x, n) = correlation_and_norm(tt, fp)?;
    let terms = vertesi_terms(&x, w, q)?;
    let bound = terms.sum() / n;
    Ok(VertesiResult {
        bound,
        window: *w,
        filter: fp.copied(),
        violating: bound > 1.0,
        terms,
        norm: n,
        quad_n: q.resolution().0,
    })
}

/// Resolution schedule and search effort for [`maximize_vertesi_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertesiOptions {
    pub optimizer: OptimizerOptions,
    /// Resolution for the final polish.
    pub quad_n: usize,
    /// Resolution used while searching.
    pub coarse_n: usize,
    /// Resolution of the grid scan that seeds windows.
    pub grid_n: usize,
    /// Resolution at which the reported bound is evaluated.
    pub report_n: usize,
    /// Grid levels per window coordinate.
    pub grid_levels: usize,
    /// Grid cells refined in the unfiltered search.
    pub grid_keep: usize,
    pub strengths: StrengthBox,
}

impl Default for VertesiOptions {
    fn default() -> Self {
        VertesiOptions {
            optimizer: OptimizerOptions::default(),
            quad_n: 24,
            coarse_n: 12,
            grid_n: 8,
            report_n: 48,
            grid_levels: 8,
            grid_keep: 5,
            strengths: StrengthBox::default(),
        }
    }
}

impl VertesiOptions {
    pub fn with_quad_n(mut self, n: usize) -> Self {
        self.quad_n = n;
        self.report_n = self.report_n.max(2 * n);
        self
    }
}

fn window_from_search(u: &[f64]) -> Option<CapWindow> {
    let fold = |v: f64| reflect_into(v, 0.0, FRAC_PI_2);
    let (u1, u2, u3, u4) = (fold(u[0]), fold(u[1]), fold(u[2]), fold(u[3]));
    let (a, b) = (u1.min(u2), u1.max(u2));
    let (c, d) = (u3.min(u4), u3.max(u4));
    if b - a < 1e-6 || d - c < 1e-6 {
        return None;
    }
    Some(CapWindow { a, b, c, d })
}

/// Every `(a, b, c, d)` on the grid with `a < b`, `c < d`.
fn window_grid(levels: usize) -> Vec<CapWindow> {
    let h = FRAC_PI_2 / levels as f64;
    let mut bands = Vec::new();
    for i in 0..levels {
        for j in i..levels {
            bands.push((i as f64 * h, (j + 1) as f64 * h));
        }
    }
    let mut out = Vec::with_capacity(bands.len() * bands.len());
    for &(a, b) in &bands {
        for &(c, d) in &bands {
            out.push(CapWindow { a, b, c, d });
        }
    }
    out
}

/// Windows ranked by their bound for a fixed `x`, best first.
fn rank_windows(x: &Matrix3<f64>, n: f64, levels: usize, q: &Quadrature) -> Vec<(f64, CapWindow)> {
    let mut scored: Vec<(f64, CapWindow)> = window_grid(levels)
        .into_iter()
        .map(|w| {
            let v = vertesi_terms(x, &w, q).map(|t| t.sum() / n).unwrap_or(f64::NEG_INFINITY);
            (v, w)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored
}

/// Maximizes the bound over windows, and over filters when `with_filter`.
pub fn maximize_vertesi_bound(rho: &DensityMatrix, with_filter: bool, opts: &VertesiOptions) -> VertesiResult {
    let tt = correlation_data(rho);
    if with_filter {
        maximize_filtered(&tt, opts)
    } else {
        maximize_unfiltered(&tt, opts)
    }
}

fn window_objective<'q>(x: &Matrix3<f64>, n: f64, q: &'q Quadrature) -> impl Fn(&[f64]) -> f64 + 'q {
    let x = *x;
    move |u: &[f64]| match window_from_search(u) {
        Some(w) => vertesi_terms(&x, &w, q).map(|t| t.sum() / n).unwrap_or(f64::NEG_INFINITY),
        None => f64::NEG_INFINITY,
    }
}

fn window_vec(w: &CapWindow) -> Vec<f64> {
    vec![w.a, w.b, w.c, w.d]
}

fn maximize_unfiltered(tt: &ExtendedCorrelation, opts: &VertesiOptions) -> VertesiResult {
    let x = tt.t();
    let (coarse, fine) = (Quadrature::square(opts.coarse_n), Quadrature::square(opts.quad_n));
    let ranked = rank_windows(&x, 1.0, opts.grid_levels, &Quadrature::square(opts.grid_n));
    let step = [0.1; 4];
    let it = opts.optimizer.max_iter;
    let tol = opts.optimizer.tol;

    let coarse_obj = window_objective(&x, 1.0, &coarse);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, w) in ranked.iter().take(opts.grid_keep.max(1)) {
        let m = nelder_mead(&coarse_obj, &window_vec(w), &step, it, tol);
        if best.as_ref().map_or(true, |(v, _)| m.value > *v) {
            best = Some((m.value, m.point));
        }
    }
    let (_, point) = best.expect("at least one grid cell");
    let fine_obj = window_objective(&x, 1.0, &fine);
    let polished = nelder_mead(&fine_obj, &point, &[0.02; 4], it, tol);
    let window = window_from_search(&polished.point)
        .or_else(|| window_from_search(&point))
        .unwrap_or_else(CapWindow::hemispheres);
    report(tt, None, &window, opts)
}

fn maximize_filtered(tt: &ExtendedCorrelation, opts: &VertesiOptions) -> VertesiResult {
    let strengths = opts.strengths;
    let grid_q = Quadrature::square(opts.grid_n);
    let coarse = Quadrature::square(opts.coarse_n);
    let fine = Quadrature::square(opts.quad_n);
    let it = opts.optimizer.max_iter;
    let tol = opts.optimizer.tol;

    let objective = |q: &Quadrature, v: &[f64]| -> f64 {
        let fp = strengths.params_from_search(&v[..FILTER_DIM]);
        let Some(w) = window_from_search(&v[FILTER_DIM..]) else {
            return f64::NEG_INFINITY;
        };
        vertesi_lower_bound(tt, Some(&fp), &w, q)
            .map(|r| r.bound)
            .unwrap_or(f64::NEG_INFINITY)
    };

    let mut step = filter_steps(strengths).to_vec();
    step.extend([0.1; 4]);

    let starts = filter_starts(opts.optimizer.restarts.max(1), opts.optimizer.seed, strengths);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let fp = strengths.params_from_search(&start);
        let Ok(fc) = filtered_correlation(tt, &fp) else {
            continue;
        };
        let ranked = rank_windows(&fc.x, fc.n, opts.grid_levels, &grid_q);
        let mut v0 = start.clone();
        v0.extend(window_vec(&ranked[0].1));
        let m = nelder_mead(|v: &[f64]| objective(&coarse, v), &v0, &step, it, tol);
        if best.as_ref().map_or(true, |(v, _)| m.value > *v) {
            best = Some((m.value, m.point));
        }
    }
    let Some((_, point)) = best else {
        // every start annihilated the state; fall back to no filter at all
        let mut r = maximize_unfiltered(tt, opts);
        r.filter = Some(FilterParams::identity());
        return r;
    };
    let small: Vec<f64> = step.iter().map(|s| 0.1 * s).collect();
    let polished = nelder_mead(|v: &[f64]| objective(&fine, v), &point, &small, it, tol);
    let chosen = if polished.value.is_finite() { &polished.point } else { &point };
    let fp = strengths.params_from_search(&chosen[..FILTER_DIM]);
    let window = window_from_search(&chosen[FILTER_DIM..]).unwrap_or_else(CapWindow::hemispheres);
    let filtered = report(tt, Some(&fp), &window, opts);
    // the identity filter is always available
    let raw = maximize_unfiltered(tt, opts);
    if raw.bound > filtered.bound {
        VertesiResult {
            filter: Some(FilterParams::identity()),
            ..raw
        }
    } else {
        filtered
    }
}

fn report(tt: &ExtendedCorrelation, fp: Option<&FilterParams>, w: &CapWindow, opts: &VertesiOptions) -> VertesiResult {
    let q = Quadrature::square(opts.report_n.max(opts.quad_n));
    vertesi_lower_bound(tt, fp, w, &q).unwrap_or(VertesiResult {
        bound: 0.0,
        window: *w,
        filter: fp.copied(),
        violating: false,
        terms: VertesiTerms {
            term1: 0.0,
            term2: 0.0,
            term3: 0.0,
        },
        norm: f64::NAN,
        quad_n: q.resolution().0,
    })
}
