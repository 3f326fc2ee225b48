//! End-to-end checks of the coupled half-line family against its closed-form
//! reference: iterate error windows, contraction rate, the constant
//! recurrence, and the analytic structure of the auxiliary functions.

use num_complex::Complex64 as C64;

use whiter_core::analytic_core::{max_abs, LineGrid, OneSided};
use whiter_core::families::{lookup, FamilyConfig, FamilyOutput};
use whiter_core::oracles::{contraction_scan, example2_exact, example2_iterates};
use whiter_core::splitting::{additive_split, window_plus};
use whiter_core::whsolver::SolveError;

fn series<'a>(out: &'a FamilyOutput, name: &str) -> &'a Vec<C64> {
    &out.constants.iter().find(|(n, _)| n == name).unwrap().1
}

fn unknown<'a>(out: &'a FamilyOutput, name: &str) -> &'a Vec<C64> {
    &out.unknowns.iter().find(|(n, _)| n == name).unwrap().1
}

fn run(lam: f64, len: f64, stop_tol: f64) -> FamilyOutput {
    let fam = lookup("example2").unwrap();
    let mut cfg = FamilyConfig::new(C64::new(lam, 0.0), len);
    cfg.stop_tol = stop_tol;
    fam.run(cfg).unwrap()
}

#[test]
fn weak_coupling_errors_fall_inside_the_expected_windows() {
    let out = run(0.1, 1e-4, 1e-10);
    assert!(out.converged && !out.diverged);
    assert!(out.iterations <= 8, "iterations {}", out.iterations);

    let u2 = out.oracle_errors.iter().find(|o| o.unknown == "u2").unwrap();
    assert!(
        (1e-5..1e-3).contains(&u2.max_abs[0]),
        "iterate 0 error {:.3e}",
        u2.max_abs[0]
    );
    assert!(
        (1e-7..1e-5).contains(&u2.max_abs[1]),
        "iterate 1 error {:.3e}",
        u2.max_abs[1]
    );
    for o in &out.oracle_errors {
        let last = *o.l2.last().unwrap();
        assert!(last <= 1e-12, "{} final l2 {:.3e}", o.unknown, last);
    }

    let (r1, r2, scale) = out.residuals.unwrap();
    assert!(r1 <= 1e-12 * scale && r2 <= 1e-12 * scale, "{:.3e} {:.3e}", r1, r2);

    // the advertised rate is exactly the squared cross constant
    let b = series(&out, "b")[0].re;
    assert!((out.estimate.q - b * b).abs() <= 1e-12 * b * b);
}

#[test]
fn strong_coupling_increments_contract_at_the_squared_rate() {
    let out = run(-15.0, 0.04, 0.0);
    assert_eq!(out.iterations, 16);
    assert!(!out.diverged);

    let q = out.estimate.q;
    assert!((q - 0.0747).abs() <= 1e-4, "q {:.6}", q);
    assert!(out.increments[0] > 1e-3);
    for k in 0..8 {
        let ratio = out.increments[k + 1] / out.increments[k];
        assert!(
            (ratio - q).abs() <= 0.05 * q,
            "cycle {} ratio {:.6} vs q {:.6}",
            k,
            ratio,
            q
        );
    }

    let u2 = out.oracle_errors.iter().find(|o| o.unknown == "u2").unwrap();
    assert!(*u2.max_abs.last().unwrap() <= 1e-12);
    let (r1, r2, scale) = out.residuals.unwrap();
    assert!(r1 <= 1e-12 * scale && r2 <= 1e-12 * scale, "{:.3e} {:.3e}", r1, r2);
}

#[test]
fn constant_updates_follow_the_cross_coupling_recurrence() {
    let out = run(-15.0, 0.04, 0.0);
    let c1s = series(&out, "c1");
    let c2s = series(&out, "c2");
    let d1 = series(&out, "d1")[0];
    let d2 = series(&out, "d2")[0];
    let b = series(&out, "b")[0];

    // first cycle starts from a zero cross term
    assert!(c1s[0].norm() <= 1e-14);
    assert!((c2s[0] - d2).norm() <= 1e-13);
    for k in 1..c1s.len() {
        assert!((c1s[k] - (d1 + b * c2s[k - 1])).norm() <= 1e-12, "cycle {}", k);
        assert!((c2s[k] - (d2 - b * c1s[k])).norm() <= 1e-12, "cycle {}", k);
    }
}

#[test]
fn fitted_constants_land_on_their_analytic_values() {
    for (lam, len) in [(0.1, 1e-4), (-15.0, 0.04)] {
        let out = run(lam, len, 1e-13);
        let r = example2_exact(lam, len);
        assert!((series(&out, "d1")[0] - r.d1).norm() <= 1e-12, "d1 at {}", lam);
        assert!((series(&out, "d2")[0] - r.d2).norm() <= 1e-12, "d2 at {}", lam);
        assert!((series(&out, "b")[0] - C64::new(r.b, 0.0)).norm() <= 1e-12);
        assert!((series(&out, "c1").last().unwrap() - r.c1).norm() <= 1e-12);
        assert!((series(&out, "c2").last().unwrap() - r.c2).norm() <= 1e-12);
    }
}

#[test]
fn seeded_two_step_constant_matches_its_polynomial_form() {
    for (lam, len) in [(0.1, 1e-4), (-15.0, 0.04)] {
        let out = run(lam, len, 1e-10);
        let d1 = series(&out, "d1")[0];
        let d2 = series(&out, "d2")[0];
        let b = series(&out, "b")[0];

        // two updates of the seeded recurrence, driven by fitted constants
        let mut p1 = d1;
        let mut p2 = d2 - b * d1;
        for _ in 0..2 {
            p1 = d1 + b * p2;
            p2 = d2 - b * p1;
        }
        let poly = example2_exact(lam, len).seeded_c1_step2_polynomial();
        assert!(
            (p1 - poly).norm() <= 1e-8 * poly.norm(),
            "at ({}, {}): {:.3e}",
            lam,
            len,
            (p1 - poly).norm() / poly.norm()
        );
    }
}

#[test]
fn reference_recurrence_is_stationary_at_its_fixed_point() {
    for (lam, len) in [(0.1, 1e-4), (-15.0, 0.04), (0.2, 1.0), (-0.3, 0.5)] {
        let r = example2_exact(lam, len);
        assert!((r.d1 + r.b * r.c2 - r.c1).norm() <= 1e-15);
        assert!((r.d2 - r.b * r.c1 - r.c2).norm() <= 1e-15);
        let (p1, p2) = example2_iterates(lam, len, 60);
        assert!((p1[2] - r.seeded_c1_step2_polynomial()).norm() <= 1e-15);
        assert!((p1[60] - r.c1).norm() <= 1e-14);
        assert!((p2[60] - r.c2).norm() <= 1e-14);
    }
}

#[test]
fn auxiliary_row_functions_keep_their_analytic_sides() {
    let out = run(-15.0, 0.04, 0.0);
    let r = example2_exact(-15.0, 0.04);
    let g0 = LineGrid::new(0.0, 2.5, 2048);

    let h1 = unknown(&out, "h1");
    let h2 = unknown(&out, "h2");
    let dh1: Vec<C64> = g0.alpha.iter().zip(h1).map(|(&z, v)| v - r.h1(z)).collect();
    let dh2: Vec<C64> = g0.alpha.iter().zip(h2).map(|(&z, v)| v - r.h2(z)).collect();
    assert!(max_abs(&dh1) <= 1e-12, "h1 err {:.3e}", max_abs(&dh1));
    assert!(max_abs(&dh2) <= 1e-12, "h2 err {:.3e}", max_abs(&dh2));

    // the first auxiliary lives entirely below the line
    let (plus, _) = additive_split(&g0, h1);
    let leak = max_abs(&plus.eval_grid(&g0));
    assert!(leak <= 1e-12 * max_abs(h1), "plus leak {:.3e}", leak);
}

#[test]
fn windowed_cross_channel_matches_the_determinant_side_at_convergence() {
    let lam = -15.0;
    let len = 0.04;
    let out = run(lam, len, 0.0);
    let r = example2_exact(lam, len);
    let g0 = LineGrid::new(0.0, 2.5, 2048);
    let i = C64::i();

    let h1 = unknown(&out, "h1");
    let u2 = unknown(&out, "u2");
    let hsamp: Vec<C64> = g0
        .alpha
        .iter()
        .zip(h1)
        .map(|(&z, v)| 2.0 * lam * (i / (z + 2.0 * i) + v) / ((z + i * r.l0) * (z - i * r.l1)))
        .collect();
    let (plus, _) = additive_split(&g0, &hsamp);
    let windowed = window_plus(&plus, len).eval_grid(&g0);
    let ydet: Vec<C64> = g0
        .alpha
        .iter()
        .zip(u2)
        .map(|(&z, v)| v * (z + i * r.l1) / (z + i * r.l0))
        .collect();
    let d: Vec<C64> = windowed.iter().zip(&ydet).map(|(a, b)| a - b).collect();
    assert!(
        max_abs(&d) <= 1e-12 * max_abs(&ydet),
        "transport gap {:.3e}",
        max_abs(&d)
    );
}

#[test]
fn closed_form_pair_satisfies_both_rows_on_the_line() {
    for (lam, len) in [(0.1, 1e-4), (-15.0, 0.04), (0.2, 1.0), (-0.3, 0.5)] {
        let r = example2_exact(lam, len);
        let i = C64::i();
        for j in 0..400 {
            let a = C64::new(-40.0 + 80.0 * (j as f64 + 0.5) / 400.0, 0.0);
            let m = (a * a + r.l0 * r.l0) / (a * a + 1.0);
            let nu = 2.0 * lam / (a * a + 1.0);
            let f = i / (a + 2.0 * i);
            let row1 = m * r.u1(a) - nu * (i * a * len).exp() * r.u2(a) - f - r.h1(a);
            let row2 = m * r.u2(a) - nu * (-i * a * len).exp() * r.u1(a) - r.h2(a);
            assert!(row1.norm() <= 1e-13, "row1 {:.3e} at {}", row1.norm(), a.re);
            assert!(row2.norm() <= 1e-13, "row2 {:.3e} at {}", row2.norm(), a.re);
        }
    }
}

#[test]
fn zero_coupling_decouples_the_rows() {
    let out = run(0.0, 1.0, 1e-10);
    assert!(out.converged);
    assert!(out.iterations <= 2);
    for o in &out.oracle_errors {
        assert!(*o.max_abs.last().unwrap() <= 1e-13, "{}", o.unknown);
    }
    for c in series(&out, "c1") {
        assert!(c.norm() <= 1e-15);
    }
    let (_, r2, _) = out.residuals.unwrap();
    assert!(r2 <= 1e-15);
}

#[test]
fn family_rejects_out_of_class_parameters() {
    let fam = lookup("example2").unwrap();
    let cases: Vec<(FamilyConfig, bool)> = vec![
        // coupling at or past the quarter threshold kills the zero-free strip
        (FamilyConfig::new(C64::new(0.3, 0.0), 1.0), true),
        (FamilyConfig::new(C64::new(0.25, 0.0), 1.0), true),
        // complex coupling is outside this family
        (FamilyConfig::new(C64::new(0.1, 0.1), 1.0), false),
        // symbol zero collides with the forcing pole
        (FamilyConfig::new(C64::new(-1.5, 0.0), 1.0), false),
        // degenerate carrier length
        (FamilyConfig::new(C64::new(0.1, 0.0), 0.0), false),
    ];
    for (cfg, class) in cases {
        match fam.run(cfg) {
            Err(SolveError::ClassViolation(_)) => assert!(class),
            Err(SolveError::Config(_)) => assert!(!class),
            other => panic!("expected an error, got {:?}", other.map(|o| o.iterations)),
        }
    }
    let mut cfg = FamilyConfig::new(C64::new(0.1, 0.0), 1.0);
    cfg.map_scale = Some(2.0);
    assert!(matches!(fam.run(cfg), Err(SolveError::Config(_))));
}

#[test]
fn coupling_scan_over_the_parameter_box_stays_bounded() {
    let s = contraction_scan(100);
    assert!(s.max_coupling_sq <= 0.19, "max {:.4}", s.max_coupling_sq);
    assert!((s.max_coupling_sq - 0.171548612900746).abs() <= 1e-9);
    // the maximum sits at the short-length, near-threshold corner
    assert!(s.at.0 > 0.2499 && s.at.1 < 1e-3);
}
