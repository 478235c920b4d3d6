mod common;

use std::f64::consts::PI;

use bellfilter::optim::{halton_points, nelder_mead, reflect_into};
use bellfilter::pauli::{kron, CMatrix4};
use bellfilter::rotation::wrap_euler;
use bellfilter::{
    apply_filter_density, correlation_data, filtered_correlation, filtered_mvci_objective,
    maximize_filtered_mvci,
    maximize_filtered_mvci_in, mvci, werner, DensityMatrix, FilterParams, OptimizerOptions, StrengthBox, TSIRELSON,
};
use common::{max_abs, random_filter, random_state, rng};
use num_complex::Complex64;

/// `T' = O_A^T X O_B / N` against the directly filtered density matrix.
#[test]
fn closed_form_matches_density_oracle() {
    let mut r = rng(2024);
    for _ in 0..100 {
        let rho = random_state(&mut r);
        let fp = random_filter(&mut r);
        let (fa, fb) = fp.operators();
        let direct = apply_filter_density(&rho, &fa, &fb).unwrap();
        let fc = filtered_correlation(&correlation_data(&rho), &fp).unwrap();

        let oa = *fp.rotation_a().matrix();
        let ob = *fp.rotation_b().matrix();
        let t_closed = oa.transpose() * fc.normalized() * ob;
        let t_direct = correlation_data(&direct).t();
        assert!(max_abs(&(t_closed - t_direct)) < 1e-10);

        let k = kron(&fa, &fb);
        let n_trace = (k * rho.entries() * k.adjoint()).trace().re;
        assert!((fc.n - n_trace).abs() < 1e-10, "N {} vs trace {}", fc.n, n_trace);
        assert!((fc.mvci() - mvci(&t_direct).value).abs() < 1e-10);
    }
}

#[test]
fn printed_factor_four_normalization_fails_oracle() {
    // N with factors of 4 on every term disagrees with the trace
    let mut r = rng(5);
    let rho = random_state(&mut r);
    let fp = random_filter(&mut r);
    let (fa, fb) = fp.operators();
    let k = kron(&fa, &fb);
    let n_trace = (k * rho.entries() * k.adjoint()).trace().re;
    let fc = filtered_correlation(&correlation_data(&rho), &fp).unwrap();
    assert!((4.0 * fc.n - n_trace).abs() > 1e-3);
}

#[test]
fn werner_diagonal_filter_keeps_x_diagonal() {
    let tt = correlation_data(&werner(0.6).unwrap());
    let fp = FilterParams::new(0.4, 0.4, [0.0; 3], [0.0; 3]).unwrap();
    let x = filtered_correlation(&tt, &fp).unwrap().x;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert!(x[(i, j)].abs() < 1e-15);
            }
        }
    }
}

#[test]
fn product_filter_keeps_pure_states_pure() {
    let mut r = rng(9);
    let rho = common::random_state_rank(&mut r, 1);
    let fp = random_filter(&mut r);
    let (fa, fb) = fp.operators();
    let out = apply_filter_density(&rho, &fa, &fb).unwrap();
    assert!((out.purity() - 1.0).abs() < 1e-10);
}

#[test]
fn overall_filter_scale_is_irrelevant() {
    let mut r = rng(17);
    let rho = random_state(&mut r);
    let fp = random_filter(&mut r);
    let (fa, fb) = fp.operators();
    let a = apply_filter_density(&rho, &fa, &fb).unwrap();
    let b = apply_filter_density(&rho, &(fa * Complex64::new(3.0, 0.0)), &(fb * Complex64::new(0.2, 0.0))).unwrap();
    let diff: CMatrix4 = a.entries() - b.entries();
    assert!(diff.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
}

#[test]
fn optimum_never_below_unfiltered_nor_above_tsirelson() {
    let mut r = rng(77);
    let opts = OptimizerOptions { restarts: 4, ..Default::default() };
    for _ in 0..40 {
        let rho = random_state(&mut r);
        let raw = mvci(&correlation_data(&rho).t()).value;
        let f = maximize_filtered_mvci(&rho, &opts);
        assert!(f.value >= raw - 1e-9, "{} < {}", f.value, raw);
        assert!(f.value <= TSIRELSON + 1e-9);
    }
}

/// Independent search in the raw `(x, y, Euler, Euler)` coordinates over
/// the wide box `x, y ∈ [1e-3, 3]`.
fn raw_wide_search(rho: &DensityMatrix, starts: usize) -> f64 {
    let tt = correlation_data(rho);
    let f = |v: &[f64]| {
        let fp = FilterParams {
            x: reflect_into(v[0], 1e-3, 3.0),
            y: reflect_into(v[1], 1e-3, 3.0),
            euler_a: wrap_euler([v[2], v[3], v[4]]),
            euler_b: wrap_euler([v[5], v[6], v[7]]),
        };
        filtered_mvci_objective(&tt, &fp).unwrap_or(f64::NEG_INFINITY)
    };
    let step = [0.5, 0.5, 0.6, 0.4, 0.6, 0.6, 0.4, 0.6];
    halton_points(starts, 8, 99)
        .into_iter()
        .map(|h| {
            let x0: Vec<f64> = h
                .iter()
                .enumerate()
                .map(|(i, u)| if i < 2 { 1e-3 + 3.0 * u } else { 2.0 * PI * u })
                .collect();
            nelder_mead(f, &x0, &step, 4000, 1e-12).value
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Strengths above 1 are the inverse strength with a flipped filter axis,
/// so the box (0, 1] loses nothing against (0, 3].
#[test]
fn unit_strength_box_loses_no_optima() {
    let mut r = rng(31);
    let opts = OptimizerOptions::default();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let rho = random_state(&mut r);
        let narrow = maximize_filtered_mvci_in(&rho, &opts, StrengthBox { lo: 1e-3, hi: 1.0 });
        let wide = maximize_filtered_mvci_in(&rho, &opts, StrengthBox { lo: 1e-3, hi: 3.0 });
        let raw = raw_wide_search(&rho, 64);
        worst = worst.max((narrow.value - wide.value).abs()).max(raw - narrow.value);
    }
    assert!(worst < 1e-6, "largest shortfall {worst:e}");
}
