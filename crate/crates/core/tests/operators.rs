use std::f64::consts::PI;

use mulab_core::evolution::rhs;
use mulab_core::operator::{ainv_dx, ainv_dx_closed_form, apply_a, invert_a, InverseMethod};
use mulab_core::{ModelParams, PeriodicField, PeriodicGrid};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TWO_PI: f64 = 2.0 * PI;

/// `mean + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)` as a closure and its derivative.
#[derive(Clone, Debug)]
struct Trig {
    mean: f64,
    modes: Vec<(f64, f64, f64)>,
}

impl Trig {
    fn random(rng: &mut StdRng, k_max: usize) -> Self {
        let modes = (1..=k_max)
            .map(|k| (k as f64, rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(-1.0..1.0) / k as f64))
            .collect();
        Self {
            mean: rng.gen_range(-1.0..1.0),
            modes,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .map(|(k, a, b)| a * (TWO_PI * k * x).cos() + b * (TWO_PI * k * x).sin())
                .sum::<f64>()
    }

    fn slope(&self, x: f64) -> f64 {
        self.modes
            .iter()
            .map(|(k, a, b)| TWO_PI * k * (b * (TWO_PI * k * x).cos() - a * (TWO_PI * k * x).sin()))
            .sum()
    }

    fn field(&self, g: &PeriodicGrid) -> PeriodicField {
        PeriodicField::from_fn(g, |x| self.eval(x))
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut z = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let step = p1 / dp;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            (0.5 * (z + 1.0), 0.5 * w)
        })
        .collect()
}

#[test]
fn gauss_legendre_is_exact_on_polynomials() {
    let rule = gauss_legendre(12);
    let total: f64 = rule.iter().map(|(_, w)| w).sum();
    assert!((total - 1.0).abs() < 1e-14);
    let p9: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
    assert!((p9 - 0.1).abs() < 1e-14);
}

/// The nonlocal term as `int_0^1 (z - 1/2) w(x - z) dz`, the derivative of the Green's function
/// being smooth on `(0, 1)`.
fn nonlocal_by_quadrature(w: impl Fn(f64) -> f64, x: f64, rule: &[(f64, f64)]) -> f64 {
    rule.iter().map(|(z, wt)| wt * (z - 0.5) * w(x - z)).sum()
}

#[test]
fn rhs_matches_quadrature_of_green_kernel() {
    let g = PeriodicGrid::new(256).unwrap();
    let rule = gauss_legendre(48);
    let mut rng = StdRng::seed_from_u64(7);
    for lambda in [0.5, 2.0, 3.0] {
        let trig = Trig::random(&mut rng, 5);
        let u = trig.field(&g);
        let p = ModelParams::from_initial(&u, lambda).unwrap();
        let (a, b) = (lambda * p.mu0, 0.5 * (3.0 - lambda));
        let w = |y: f64| a * trig.eval(y) + b * trig.slope(y).powi(2);
        let expected = PeriodicField::from_fn(&g, |x| {
            -trig.eval(x) * trig.slope(x) - nonlocal_by_quadrature(w, x, &rule)
        });
        let err = rhs(&u, &p).unwrap().sup_distance(&expected);
        assert!(err <= 1e-10, "lambda {lambda}: {err:e}");
    }
}

#[test]
fn inverse_methods_agree_on_random_fields() {
    let g = PeriodicGrid::new(256).unwrap();
    let mut rng = StdRng::seed_from_u64(20);
    for _ in 0..20 {
        let w = Trig::random(&mut rng, 12).field(&g);
        let sols: Vec<_> = InverseMethod::ALL
            .iter()
            .map(|m| invert_a(&w, *m).unwrap())
            .collect();
        for i in 0..sols.len() {
            for j in i + 1..sols.len() {
                assert!(sols[i].sup_distance(&sols[j]) <= 1e-8);
            }
            let back = apply_a(&sols[i]).unwrap();
            assert!(back.sup_distance(&w) <= 1e-9);
        }
    }
}

#[test]
fn nonlocal_derivative_forms_agree() {
    let g = PeriodicGrid::new(128).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let w = Trig::random(&mut rng, 8).field(&g);
    let a = ainv_dx(&w).unwrap();
    let b = ainv_dx_closed_form(&w).unwrap();
    assert!(a.sup_distance(&b) <= 1e-11);
    // A^{-1} d_x w = d_x A^{-1} w.
    let c = invert_a(&w, InverseMethod::Fourier).unwrap().derivative(1).unwrap();
    assert!(a.sup_distance(&c) <= 1e-11);
}

fn trig_strategy() -> impl Strategy<Value = Trig> {
    (
        -2.0..2.0f64,
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..10),
    )
        .prop_map(|(mean, coeffs)| Trig {
            mean,
            modes: coeffs
                .into_iter()
                .enumerate()
                .map(|(i, (a, b))| ((i + 1) as f64, a, b))
                .collect(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_is_linear(f in trig_strategy(), h in trig_strategy(), s in -3.0..3.0f64) {
        let g = PeriodicGrid::new(64).unwrap();
        let (f, h) = (f.field(&g), h.field(&g));
        let combo = &f + &(&h * s);
        for m in InverseMethod::ALL {
            let lhs = invert_a(&combo, m).unwrap();
            let rhs = &invert_a(&f, m).unwrap() + &(&invert_a(&h, m).unwrap() * s);
            let scale = combo.sup_norm().max(1.0);
            prop_assert!(lhs.sup_distance(&rhs) <= 1e-11 * scale);
        }
    }

    #[test]
    fn inverse_preserves_mean(f in trig_strategy()) {
        // mu(A^{-1} w) = mu(w) because A acts on the mean as the identity.
        let g = PeriodicGrid::new(64).unwrap();
        let w = f.field(&g);
        let v = invert_a(&w, InverseMethod::ClosedForm).unwrap();
        prop_assert!((v.mean() - w.mean()).abs() <= 1e-12 * w.sup_norm().max(1.0));
    }

    #[test]
    fn rhs_preserves_mean(f in trig_strategy(), lambda in 0.0..4.0f64) {
        let g = PeriodicGrid::new(64).unwrap();
        let u = f.field(&g);
        let p = ModelParams::from_initial(&u, lambda).unwrap();
        let ut = rhs(&u, &p).unwrap();
        prop_assert!(ut.mean().abs() <= 1e-10 * ut.sup_norm().max(1.0));
    }
}
