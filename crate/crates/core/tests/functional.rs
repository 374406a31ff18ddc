use std::f64::consts::PI;

use rotpatch::functional::{multiplier, shift_entry};
use rotpatch::{
    invertibility_margin, jacobian_numeric, kirchhoff_check, linearization_analytic, linearization_swapped_band,
    margin_term, residual_single, residual_single_with, spectrum_comparison, FourierBoundary, ResidualOptions,
};

#[test]
fn jacobian_matches_analytic_operator() {
    for q in [0.1, 0.3, 0.45] {
        let s = spectrum_comparison(q, 8, 1e-3, 128).unwrap();
        assert!(s.max_abs_diff < 1e-5, "Q={q}: {}", s.max_abs_diff);
        assert!(s.off_band_max < 1e-5, "Q={q}: {}", s.off_band_max);
    }
}

#[test]
fn discrepancy_is_second_order_in_eps() {
    let a = spectrum_comparison(0.3, 6, 1e-2, 128).unwrap().max_abs_diff;
    let b = spectrum_comparison(0.3, 6, 5e-3, 128).unwrap().max_abs_diff;
    let ratio = a / b;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn swapped_band_layout_does_not_fit() {
    let q = 0.3;
    let b = FourierBoundary::new(q, 1e-3, vec![0.0; 7]).unwrap();
    let j = jacobian_numeric(&b, 1e-6, 128).unwrap();
    let swapped = linearization_swapped_band(q, 8).unwrap();
    // the swapped operator acts on (B₂..B_N) → sin 1..N; compare the matching sub-block
    let mut worst: f64 = 0.0;
    for (r, &n) in swapped.row_modes.iter().enumerate() {
        for (c, &k) in swapped.col_modes.iter().enumerate() {
            worst = worst.max((j[(n - 1, k)] - swapped.matrix()[(r, c)]).abs());
        }
    }
    assert!(worst > 0.05, "swapped layout unexpectedly fits ({worst})");
}

#[test]
fn low_mode_entries() {
    let q = 0.3;
    let l = linearization_analytic(q, 6).unwrap();
    assert!((l.entry(1, 0) - shift_entry(q)).abs() < 1e-15);
    assert!((shift_entry(q) - 0.91 * 1.3 / (2.0 * PI)).abs() < 1e-15);
    assert!((l.entry(2, 1) - 2.0 * q * q / PI).abs() < 1e-15);
    assert!((l.entry(3, 2) + multiplier(q, 3)).abs() < 1e-15);
    assert!((l.entry(3, 4) - q * multiplier(q, 3)).abs() < 1e-15);
}

#[test]
fn free_space_ellipse_is_exact() {
    let b = FourierBoundary::new(0.3, 0.01, vec![0.0; 7]).unwrap();
    let r = residual_single_with(&b, 256, ResidualOptions { image: false }).unwrap();
    assert!(r.nodal_max < 1e-12, "{}", r.nodal_max);
    assert!(kirchhoff_check(0.1, 256).unwrap() < 1e-10);
    assert!(kirchhoff_check(0.3, 256).unwrap() < 1e-10);
}

#[test]
fn image_forcing_is_third_order() {
    // the wall strain acts on sin 2θ only, at O(ε³) after scaling
    let f = |eps: f64| residual_single(&FourierBoundary::new(0.3, eps, vec![0.0; 7]).unwrap(), 128).unwrap();
    let (a, b) = (f(0.02), f(0.01));
    let ratio = a.spectrum.mode(2) / b.spectrum.mode(2);
    assert!((ratio - 8.0).abs() < 0.01, "ratio {ratio}");
    for n in [1, 3, 4, 5, 6, 7, 8] {
        assert!(a.spectrum.mode(n).abs() < 1e-12, "mode {n}: {}", a.spectrum.mode(n));
    }
}

#[test]
fn invertibility_margin_values() {
    let (v, n) = invertibility_margin(0.3, 64).unwrap();
    assert_eq!(n, 3);
    assert!((v - (0.91 * 1.5 - 1.027)).abs() < 1e-14);
    assert!(margin_term(0.5, 3).abs() < 1e-14);
    assert!(margin_term(0.49, 3) > 0.0);
    assert!(invertibility_margin(0.3, 2).is_err());
    assert!(invertibility_margin(0.5, 8).is_err());
}
