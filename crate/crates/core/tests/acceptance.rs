//! One check per acceptance criterion. Each prints a single PASS/FAIL line
//! with the measured figures, then asserts.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use bellfilter::harness::{run_sweep, Computation, StateFamily, SweepSpec};
use bellfilter::lhv::random_pairs;
use bellfilter::optim::{halton_points, multi_start, nelder_mead};
use bellfilter::pauli::kron;
use bellfilter::rotation::wrap_euler;
use bellfilter::{
    apply_filter_density, cap_area, cap_first_moment, correlation_data, filtered_correlation,
    local_unitary_rotate, lhv_report, maximize_filtered_mvci, maximize_vertesi_bound, mvci,
    ppt_min_eigenvalue, rho1, rho2, sample_biased_lambda, vertesi_lower_bound, werner, CapWindow,
    FilterParams, LhvModel, OptimizerOptions, Quadrature, VertesiOptions, TSIRELSON,
};
use common::{max_abs, random_filter, random_rotation, random_state, rng};
use nalgebra::Vector3;
use rand::Rng;

fn verdict(id: u32, title: &str, pass: bool, detail: &str, elapsed: Duration) {
    println!(
        "[{}] criterion {id}: {title} | {detail} | {:.1} s",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn sweep(family: StateFamily, start: f64, stop: f64, steps: usize, computation: Computation) -> Option<f64> {
    let spec = SweepSpec {
        family,
        start,
        stop,
        steps,
        computation,
        options: VertesiOptions::default(),
        onset_tol: 1e-4,
    };
    run_sweep(&spec).expect("sweep runs").onset
}

/// Bisection for the sign change of `f` on `[lo, hi]`.
fn root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo) > 0.0;
    assert_ne!(flo, f(hi) > 0.0, "no sign change on [{lo}, {hi}]");
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_1_werner_exactness() {
    let t = Instant::now();
    let worst = (1..=10)
        .map(|i| {
            let p = i as f64 / 10.0;
            (mvci(&correlation_data(&werner(p).unwrap()).t()).value - TSIRELSON * p).abs()
        })
        .fold(0.0, f64::max);
    let el = t.elapsed();
    verdict(
        1,
        "Werner MVCI = 2 sqrt2 p, p = 0.1..1.0",
        worst < 1e-9 && el < Duration::from_secs(1),
        &format!("max error {worst:.1e} (tol 1e-9)"),
        el,
    );
}

#[test]
fn criterion_2_case_two() {
    let t = Instant::now();
    let rho = rho1(0.7050, 0.0400).unwrap();
    let tt = correlation_data(&rho);
    let raw = mvci(&tt.t()).value;
    let filtered = maximize_filtered_mvci(&rho, &OptimizerOptions::default()).value;

    // x = y = 1.1 and the printed window; only the rotations are searched
    let window = CapWindow::new(0.1671, 1.1096, 0.1671, 1.1096).unwrap();
    let params = |v: &[f64]| FilterParams {
        x: 1.1,
        y: 1.1,
        euler_a: wrap_euler([v[0], v[1], v[2]]),
        euler_b: wrap_euler([v[3], v[4], v[5]]),
    };
    let bound_at = |q: &Quadrature, v: &[f64]| {
        vertesi_lower_bound(&tt, Some(&params(v)), &window, q)
            .map(|r| r.bound)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (q12, q24, q48) = (Quadrature::square(12), Quadrature::square(24), Quadrature::square(48));
    let starts: Vec<Vec<f64>> = halton_points(16, 6, 0)
        .into_iter()
        .map(|h| h.iter().enumerate().map(|(i, u)| if i % 3 == 1 { PI * u } else { 2.0 * PI * u }).collect())
        .collect();
    let coarse = multi_start(&|v: &[f64]| bound_at(&q12, v), &starts, &[0.6, 0.4, 0.6, 0.6, 0.4, 0.6], 2000, 1e-10);
    let fine = nelder_mead(|v: &[f64]| bound_at(&q24, v), &coarse.best.point, &[0.05; 6], 2000, 1e-12);
    let vertesi24 = fine.value;
    let vertesi48 = bound_at(&q48, &fine.point);
    let el = t.elapsed();

    let pass = (raw - 1.994).abs() <= 0.002
        && (filtered - 1.9988).abs() <= 0.002
        && vertesi24 >= 1.0
        && (vertesi24 - 1.0005).abs() <= 0.0005
        && el < Duration::from_secs(120);
    verdict(
        2,
        "Case 2 rho1(0.7050, 0.0400)",
        pass,
        &format!(
            "MVCI {raw:.5} (1.994 ± 0.002), filtered {filtered:.5} (1.9988 ± 0.002), \
             Vertesi at x=y=1.1 {vertesi24:.6} @ n=24, {vertesi48:.6} @ n=48 (>= 1, 1.0005 ± 0.0005)"
        ),
        el,
    );
}

#[test]
fn criterion_3_case_one_thresholds() {
    let t = Instant::now();
    let family = StateFamily::Rho1 { r: 0.3 };
    let chsh_onset = sweep(family, 0.55, 0.7, 4, Computation::ChshFiltered);
    let vertesi_onset = sweep(family, 0.55, 0.7, 4, Computation::VertesiFiltered);

    let opts = VertesiOptions::default();
    let mut worst_chsh: f64 = 0.0;
    let mut worst_vertesi: f64 = 0.0;
    for i in 0..20 {
        let p = -0.31 + (0.7 + 0.31) * i as f64 / 19.0;
        let rho = rho1(p, 0.3).unwrap();
        worst_chsh = worst_chsh.max(mvci(&correlation_data(&rho).t()).value);
        worst_vertesi = worst_vertesi.max(maximize_vertesi_bound(&rho, false, &opts).bound);
    }
    let el = t.elapsed();

    let near = |o: Option<f64>, target: f64, tol: f64| o.is_some_and(|v| (v - target).abs() <= tol);
    let pass = near(chsh_onset, 0.6164, 0.005)
        && near(vertesi_onset, 0.6291, 0.01)
        && worst_chsh <= 2.0
        && worst_vertesi <= 1.0
        && el < Duration::from_secs(600);
    verdict(
        3,
        "Case 1 rho1(p, 0.3) onsets",
        pass,
        &format!(
            "filtered CHSH onset {chsh_onset:?} (0.6164 ± 0.005), filtered Vertesi onset {vertesi_onset:?} \
             (0.6291 ± 0.01), unfiltered max MVCI {worst_chsh:.4} (<= 2), max Vertesi {worst_vertesi:.4} (<= 1)"
        ),
        el,
    );
}

#[test]
fn criterion_4_rho2_filtered_onset() {
    let t = Instant::now();
    let onset = sweep(StateFamily::Rho2, -0.5, -0.309, 8, Computation::ChshFiltered);
    let worst = (0..=100)
        .map(|i| {
            let p = -0.5 + (0.309 + 0.5) * i as f64 / 100.0;
            mvci(&correlation_data(&rho2(p).unwrap()).t()).value
        })
        .fold(0.0, f64::max);
    let el = t.elapsed();
    let pass = onset.is_some_and(|v| (v + 0.4859).abs() <= 0.005) && worst <= 2.0 && el < Duration::from_secs(300);
    verdict(
        4,
        "rho2 filtered CHSH onset",
        pass,
        &format!("onset {onset:?} (-0.4859 ± 0.005), unfiltered max MVCI on [-0.5, 0.309] {worst:.4} (<= 2)"),
        el,
    );
}

#[test]
fn criterion_5_oracle_equivalence() {
    let t = Instant::now();
    let mut r = rng(55);
    let (mut worst_t, mut worst_n): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let rho = random_state(&mut r);
        let fp = random_filter(&mut r);
        let (fa, fb) = fp.operators();
        let direct = apply_filter_density(&rho, &fa, &fb).unwrap();
        let fc = filtered_correlation(&correlation_data(&rho), &fp).unwrap();
        let closed = fp.rotation_a().matrix().transpose() * fc.normalized() * fp.rotation_b().matrix();
        worst_t = worst_t.max(max_abs(&(closed - correlation_data(&direct).t())));
        let k = kron(&fa, &fb);
        worst_n = worst_n.max((fc.n - (k * rho.entries() * k.adjoint()).trace().re).abs());
    }
    let el = t.elapsed();
    verdict(
        5,
        "filtered T' and N vs density-matrix oracle, 100 pairs",
        worst_t < 1e-10 && worst_n < 1e-10 && el < Duration::from_secs(5),
        &format!("max |dT'| {worst_t:.1e}, max |dN| {worst_n:.1e} (tol 1e-10)"),
        el,
    );
}

#[test]
fn criterion_6_invariance() {
    let t = Instant::now();
    let mut r = rng(66);
    let mut worst_rot: f64 = 0.0;
    for _ in 0..200 {
        let tt = correlation_data(&random_state(&mut r));
        let rotated = local_unitary_rotate(&tt, &random_rotation(&mut r), &random_rotation(&mut r));
        worst_rot = worst_rot.max((mvci(&tt.t()).value - mvci(&rotated.t()).value).abs());
    }
    let opts = OptimizerOptions::default();
    let (mut top_raw, mut top_filtered): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let rho = random_state(&mut r);
        top_raw = top_raw.max(mvci(&correlation_data(&rho).t()).value);
        top_filtered = top_filtered.max(maximize_filtered_mvci(&rho, &opts).value);
    }
    let el = t.elapsed();
    let ceiling = TSIRELSON + 1e-9;
    verdict(
        6,
        "LU invariance and Tsirelson ceiling",
        worst_rot < 1e-10 && top_raw <= ceiling && top_filtered <= ceiling,
        &format!(
            "max rotation change {worst_rot:.1e} (tol 1e-10, 200 cases); max MVCI {top_raw:.6}, \
             max filtered {top_filtered:.6} over 500 states (<= 2 sqrt2 + 1e-9)"
        ),
        el,
    );
}

#[test]
fn criterion_7_quadrature() {
    let t = Instant::now();
    let mut r = rng(77);
    let q16 = Quadrature::square(16);
    let mut worst_closed: f64 = 0.0;
    for _ in 0..50 {
        let u: f64 = r.random_range(0.0..1.5);
        let v: f64 = r.random_range(0.0..1.5);
        let (a, b) = (u.min(v), u.max(v) + 0.05);
        let rule = q16.cap(a, b);
        let m = cap_first_moment(a, b).unwrap();
        let got = Vector3::new(rule.integrate(|p| p.x), rule.integrate(|p| p.y), rule.integrate(|p| p.z));
        worst_closed = worst_closed
            .max((rule.integrate(|_| 1.0) - cap_area(a, b).unwrap()).abs())
            .max((got - m).amax());
    }
    let q32 = Quadrature::square(32);
    let mut worst_conv: f64 = 0.0;
    for _ in 0..50 {
        let tt = correlation_data(&random_state(&mut r));
        let band = |r: &mut rand_chacha::ChaCha8Rng| {
            let (u, v): (f64, f64) = (r.random_range(0.0..1.52), r.random_range(0.0..1.52));
            (u.min(v), u.max(v) + 0.05)
        };
        let (a, b) = band(&mut r);
        let (c, d) = band(&mut r);
        let w = CapWindow::new(a, b, c, d).unwrap();
        let b16 = vertesi_lower_bound(&tt, None, &w, &q16).unwrap().bound;
        let b32 = vertesi_lower_bound(&tt, None, &w, &q32).unwrap().bound;
        worst_conv = worst_conv.max((b16 - b32).abs());
    }
    let el = t.elapsed();
    verdict(
        7,
        "cap quadrature and bound convergence",
        worst_closed < 1e-8 && worst_conv < 1e-3,
        &format!("closed forms vs n=16 {worst_closed:.1e} (tol 1e-8); max |bound16 - bound32| {worst_conv:.1e} over 50 states (tol 1e-3)"),
        el,
    );
}

#[test]
fn criterion_8_lhv_model() {
    let t = Instant::now();
    let pairs = random_pairs(20, 2024);
    let mut lines = Vec::new();
    let mut pass = true;
    for q in [0.309, 0.45, 0.5] {
        let rep = lhv_report(&LhvModel::new(q).unwrap(), &pairs, 1_000_000, 8).unwrap();
        pass &= rep.passes(4.0);
        lines.push(format!("q={q}: max dev {:.2e}, {:.2} sigma", rep.max_abs_deviation, rep.max_sigma));
    }
    let mut r = rng(88);
    let a = Vector3::new(0.0, 0.6, 0.8);
    let n = 1_000_000;
    let (mut s_abs, mut s_sq) = (0.0, 0.0);
    for _ in 0..n {
        let z = a.dot(&sample_biased_lambda(&a, &mut r));
        s_abs += z.abs();
        s_sq += z * z;
    }
    let (m_abs, m_sq) = (s_abs / n as f64, s_sq / n as f64);
    let sig_abs = (m_abs - 2.0 / 3.0).abs() / (1.0 / 18.0 / n as f64).sqrt();
    let sig_sq = (m_sq - 0.5).abs() / (1.0 / 12.0 / n as f64).sqrt();
    pass &= sig_abs < 4.0 && sig_sq < 4.0;
    let el = t.elapsed();
    pass &= el < Duration::from_secs(60);
    verdict(
        8,
        "LHV model vs exact rho2 statistics",
        pass,
        &format!(
            "{}; E|z| {m_abs:.5} ({sig_abs:.2} sigma), E z^2 {m_sq:.5} ({sig_sq:.2} sigma), 4 sigma limit",
            lines.join("; ")
        ),
        el,
    );
}

#[test]
fn criterion_9_ppt_windows() {
    let t = Instant::now();
    let ppt1 = |p: f64| ppt_min_eigenvalue(&rho1(p, 0.3).unwrap());
    let upper = root(ppt1, 0.0, 0.7);
    // the lower end of the window is where rho1 itself stops being positive
    let lower = root(
        |p: f64| if rho1(p, 0.3).is_ok() { 1.0 } else { -1.0 },
        -0.5,
        0.0,
    );
    let separable_inside = (0..=40).all(|i| {
        let p = lower + 1e-9 + (upper - lower - 2e-9) * i as f64 / 40.0;
        ppt1(p) >= -1e-10
    });
    let ent2 = root(|p: f64| ppt_min_eigenvalue(&rho2(p).unwrap()), -0.5, 0.0);
    let el = t.elapsed();
    let pass = (upper - 0.3104).abs() <= 0.0005
        && (lower + 0.3104).abs() <= 0.0005
        && separable_inside
        && (ent2 + 0.3090).abs() <= 0.0005;
    verdict(
        9,
        "PPT windows",
        pass,
        &format!(
            "rho1(., 0.3) separable on [{lower:.5}, {upper:.5}] (|p| = 0.3104 ± 0.0005); \
             rho2 entangled below {ent2:.5} (-0.3090 ± 0.0005)"
        ),
        el,
    );
}
