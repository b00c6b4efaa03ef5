use std::f64::consts::PI;

use mulab_core::evolution::rhs;
use mulab_core::geometry::{
    affine_structure_residual, affine_structure_residual_with, ca2_to_much_residual, ca3_constraint,
    ca3_to_mudp_residual, pss_structure_residual, pss_structure_residual_with, AffineTable, Ca3Data,
};
use mulab_core::peakon::{m_flatness, multipeakon_field, traveling_wave_residual, PeakonConfig};
use mulab_core::{ModelParams, PeriodicField, PeriodicGrid};

const TWO_PI: f64 = 2.0 * PI;

/// Thresholds from the refinement study (c = 1.3, exclusion 0.1):
///
/// | n    | residual / c^2 | m-flatness |
/// |------|----------------|------------|
/// | 256  | 1.74e-8        | 0.180      |
/// | 1024 | 1.09e-9        | 0.046      |
/// | 4096 | 6.79e-11       | 0.0116     |
///
/// The residual converges at second order (trapezoid rule across the corner) and the
/// spectral `m` tail at first order.
const TW_RESIDUAL_1024: f64 = 2e-9;
const M_FLAT_1024: f64 = 0.05;
const M_FLAT_RATIO: f64 = 3.5;
const STRUCTURE_TOL: f64 = 1e-10;

fn band_limited(n: usize) -> PeriodicField {
    let g = PeriodicGrid::new(n).unwrap();
    PeriodicField::from_fn(&g, |x| {
        0.2 + (TWO_PI * x).sin() + 0.3 * (2.0 * TWO_PI * x).cos() - 0.1 * (3.0 * TWO_PI * x).sin()
    })
}

#[test]
fn one_peakon_residual_converges() {
    for c in [1.3, -0.7] {
        let coarse = traveling_wave_residual(c, 256, 0.1).unwrap();
        let fine = traveling_wave_residual(c, 1024, 0.1).unwrap();
        assert!(fine <= 0.5 * coarse, "{fine:e} vs {coarse:e}");
        assert!(fine <= TW_RESIDUAL_1024, "{fine:e}");
    }
}

#[test]
fn one_peakon_is_flat_off_the_corner() {
    let coarse = m_flatness(1.3, 256, 0.1).unwrap();
    let fine = m_flatness(1.3, 1024, 0.1).unwrap();
    assert!(fine <= M_FLAT_1024, "{fine}");
    assert!(coarse / fine >= M_FLAT_RATIO, "{coarse} / {fine}");
}

#[test]
fn multipeakon_mean_is_amplitude_sum() {
    let g = PeriodicGrid::new(2048).unwrap();
    let cfg = PeakonConfig {
        p: vec![0.4, -1.1, 2.0],
        q: vec![0.05, 0.5, 0.77],
        s: None,
    };
    let f = multipeakon_field(&cfg, &g).unwrap();
    assert!((f.mean() - 1.3).abs() < 1e-6);
}

#[test]
fn curve_flow_reductions() {
    let u = band_limited(256);
    let ca2 = ca2_to_much_residual(&u).unwrap();
    assert!(ca2.residual_sup <= 1e-9, "{ca2:?}");
    let ca3 = ca3_to_mudp_residual(&u).unwrap();
    assert!(ca3.residual_sup <= 1e-9, "{ca3:?}");
    // With beta = 0 the arc-length constraint is off by F + G_s = 2/3.
    let c = ca3_constraint(&Ca3Data::from_solution(&u, 0.0).unwrap()).unwrap();
    assert!((c.max() - 2.0 / 3.0).abs() < 1e-12 && (c.min() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn structure_equations_hold_and_controls_fail() {
    for n in [128, 256, 512] {
        let u = band_limited(n);
        for l in [0.5, 1.0, -2.0] {
            let pss = pss_structure_residual(&u, l).unwrap();
            assert!(pss.residual_sup <= STRUCTURE_TOL, "{pss:?}");
            let aff = affine_structure_residual(&u, l).unwrap();
            assert!(aff.residual_sup <= STRUCTURE_TOL, "{aff:?}");
            assert!(aff.check("trace").unwrap() <= 1e-14);

            let p2 = ModelParams::from_initial(&u, 2.0).unwrap();
            let wrong = &rhs(&u, &p2).unwrap() + 1.0;
            let bad = pss_structure_residual_with(&u, &wrong, l).unwrap();
            assert!(bad.residual_sup >= 100.0 * STRUCTURE_TOL.max(pss.residual_sup));

            let p3 = ModelParams::from_initial(&u, 3.0).unwrap();
            let ut = rhs(&u, &p3).unwrap();
            let table = AffineTable::standard().with_perturbation(2, 3, 1e-3);
            let bad = affine_structure_residual_with(&u, &ut, l, &table).unwrap();
            assert!(bad.residual_sup >= 100.0 * STRUCTURE_TOL.max(aff.residual_sup));
        }
    }
}

#[test]
fn wrong_family_member_breaks_structure_equations() {
    // The pseudo-spherical forms encode lambda = 2; feeding the lambda = 3 velocity must fail.
    let u = band_limited(128);
    let p3 = ModelParams::from_initial(&u, 3.0).unwrap();
    let ut = rhs(&u, &p3).unwrap();
    let r = pss_structure_residual_with(&u, &ut, 1.0).unwrap();
    assert!(r.residual_sup > 1e-3);
}
