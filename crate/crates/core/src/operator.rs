//! The nonlocal operator `A = mu - d_x^2` and its inverse.
//!
//! `A` maps `u` to `mean(u) - u_xx`. Its inverse has three realizations that are kept
//! deliberately independent so they can check each other:
//!
//! * [`InverseMethod::ClosedForm`] evaluates the explicit double/triple cumulative
//!   integral formula for `A^{-1}`.
//! * [`InverseMethod::GreenConvolution`] convolves with the Green's function
//!   `g(x) = x(x-1)/2 + 13/12` by direct quadrature.
//! * [`InverseMethod::Fourier`] divides mode `k != 0` by `4 pi^2 k^2` and keeps the mean.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{PeriodicField, PeriodicGrid, Primitive};

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Green's function of `A^{-1}` on the circle, `x` reduced mod 1.
pub fn green(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    0.5 * y * (y - 1.0) + 13.0 / 12.0
}

/// Derivative of [`green`], with the value 0 assigned at the kink `x = 0`.
pub fn green_prime(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y == 0.0 {
        0.0
    } else {
        y - 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseMethod {
    ClosedForm,
    GreenConvolution,
    Fourier,
}

impl InverseMethod {
    pub const ALL: [InverseMethod; 3] = [
        InverseMethod::ClosedForm,
        InverseMethod::GreenConvolution,
        InverseMethod::Fourier,
    ];
}

/// `A u = mean(u) - u_xx`.
pub fn apply_a(u: &PeriodicField) -> Result<PeriodicField> {
    let uxx = u.derivative(2)?;
    let mu = u.mean();
    Ok(uxx.map(|v| mu - v))
}

/// `v = A^{-1} w` by the requested method.
pub fn invert_a(w: &PeriodicField, method: InverseMethod) -> Result<PeriodicField> {
    w.check_finite()?;
    Ok(match method {
        InverseMethod::ClosedForm => invert_a_closed_form(w),
        InverseMethod::GreenConvolution => MuOperatorKernel::new(w.grid()).convolve(w)?,
        InverseMethod::Fourier => invert_a_fourier(w),
    })
}

fn invert_a_fourier(w: &PeriodicField) -> PeriodicField {
    w.apply_symbol(|k| {
        if k == 0 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(1.0 / (FOUR_PI_SQ * (k * k) as f64), 0.0)
        }
    })
}

fn invert_a_closed_form(w: &PeriodicField) -> PeriodicField {
    let mean = w.mean();
    let first = Primitive::from_periodic(w.clone()).integral_from_origin();
    let second = first.integral_from_origin();
    let third = second.integral_from_origin();
    let second_at_one = second.value_at_one();
    let third_at_one = third.value_at_one();
    let second_samples = second.samples();
    let grid = w.grid();
    let values = grid
        .points()
        .zip(second_samples.values())
        .map(|(x, w2)| {
            (0.5 * x * x - 0.5 * x + 13.0 / 12.0) * mean + (x - 0.5) * second_at_one - w2
                + third_at_one
        })
        .collect();
    PeriodicField::new(grid, values).expect("grid-sized output")
}

/// `A^{-1} d_x w` by Fourier multiplier (the production path).
pub fn ainv_dx(w: &PeriodicField) -> Result<PeriodicField> {
    w.check_finite()?;
    Ok(ainv_dx_fourier(w))
}

pub(crate) fn ainv_dx_fourier(w: &PeriodicField) -> PeriodicField {
    let grid = w.grid().clone();
    w.apply_symbol(|k| {
        if k == 0 || grid.is_nyquist(k) {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, 1.0 / (2.0 * PI * k as f64))
        }
    })
}

/// `A^{-1} d_x w` from the cumulative-integral identity
/// `(x - 1/2) int_0^1 w - int_0^x w + int_0^1 int_0^x w`.
pub fn ainv_dx_closed_form(w: &PeriodicField) -> Result<PeriodicField> {
    w.check_finite()?;
    let mean = w.mean();
    let first = Primitive::from_periodic(w.clone()).integral_from_origin();
    let second_at_one = first.integral_from_origin().value_at_one();
    let first_samples = first.samples();
    let grid = w.grid();
    let values = grid
        .points()
        .zip(first_samples.values())
        .map(|(x, w1)| (x - 0.5) * mean - w1 + second_at_one)
        .collect();
    PeriodicField::new(grid, values)
}

/// The same identity as [`ainv_dx_closed_form`] with the cumulative integrals taken by the
/// trapezoid rule. Second-order only, but free of Gibbs oscillations for data with corners.
pub fn ainv_dx_trapezoid(w: &PeriodicField) -> Result<PeriodicField> {
    w.check_finite()?;
    let n = w.len();
    let h = w.grid().spacing();
    let wv = w.values();
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    for j in 0..n {
        let next = wv[(j + 1) % n];
        cumulative.push(cumulative[j] + 0.5 * h * (wv[j] + next));
    }
    let total = cumulative[n];
    let second: f64 = cumulative.windows(2).map(|p| 0.5 * h * (p[0] + p[1])).sum();
    let values = w
        .grid()
        .points()
        .zip(&cumulative)
        .map(|(x, c)| (x - 0.5) * total - c + second)
        .collect();
    PeriodicField::new(w.grid(), values)
}

/// `A^{-1} d_x^2 w = -w + mean(w)`.
pub fn ainv_dxx(w: &PeriodicField) -> Result<PeriodicField> {
    w.check_finite()?;
    let mean = w.mean();
    Ok(w.map(|v| mean - v))
}

/// Green's function tables for one grid.
#[derive(Debug, Clone)]
pub struct MuOperatorKernel {
    grid: PeriodicGrid,
    green_samples: Vec<f64>,
    green_prime_samples: Vec<f64>,
}

impl MuOperatorKernel {
    pub fn new(grid: &PeriodicGrid) -> Self {
        Self {
            grid: grid.clone(),
            green_samples: grid.points().map(green).collect(),
            green_prime_samples: grid.points().map(green_prime).collect(),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn green_samples(&self) -> &[f64] {
        &self.green_samples
    }

    pub fn green_prime_samples(&self) -> &[f64] {
        &self.green_prime_samples
    }

    /// `(g * w)(x_i) = int_0^1 g(x_i - y) w(y) dy` by trapezoid quadrature.
    ///
    /// The integrand is smooth on `[x_i, x_i + 1]` but its odd derivatives jump at the
    /// node `y = x_i`; the jump of the `(2k-1)`-th derivative is `(2k-1) w^(2k-2)(x_i)`.
    /// The Euler-Maclaurin terms through `h^6` are subtracted, with the derivatives of
    /// `w` taken by central differences so the result stays independent of the FFT.
    pub fn convolve(&self, w: &PeriodicField) -> Result<PeriodicField> {
        w.check_finite()?;
        let n = self.grid.len();
        if w.len() != n {
            return Err(crate::error::Error::GridMismatch {
                left: n,
                right: w.len(),
            });
        }
        let h = self.grid.spacing();
        let wv = w.values();
        let at = |i: usize, off: isize| wv[(i as isize + off).rem_euclid(n as isize) as usize];
        let values = (0..n)
            .map(|i| {
                let sum: f64 = (0..n)
                    .map(|j| self.green_samples[(i + n - j) % n] * wv[j])
                    .sum();
                let d2 = at(i, 1) - 2.0 * at(i, 0) + at(i, -1);
                let d4 = at(i, 2) - 4.0 * at(i, 1) + 6.0 * at(i, 0) - 4.0 * at(i, -1) + at(i, -2);
                let correction = wv[i] / 12.0 - d2 / 240.0 + 31.0 * d4 / 60480.0;
                h * sum - h * h * correction
            })
            .collect();
        PeriodicField::new(&self.grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TWO_PI: f64 = 2.0 * PI;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn green_values() {
        assert_eq!(green(0.0), 13.0 / 12.0);
        assert_abs_diff_eq!(green(0.5), 23.0 / 24.0, epsilon = 1e-15);
        assert_abs_diff_eq!(green(1.25), green(0.25), epsilon = 1e-15);
        assert_eq!(green_prime(0.0), 0.0);
        assert_eq!(green_prime(1.0), 0.0);
        assert_abs_diff_eq!(green_prime(0.75), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(green_prime(-0.25), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn green_has_unit_mean() {
        // Exact integral of x(x-1)/2 + 13/12 over [0,1] is -1/12 + 13/12.
        let k = MuOperatorKernel::new(&grid(4096));
        let mean: f64 = k.green_samples().iter().sum::<f64>() / 4096.0;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn apply_a_examples() {
        let g = grid(64);
        let one = PeriodicField::constant(&g, 1.0);
        assert!(apply_a(&one).unwrap().sup_distance(&one) < 1e-15);

        let s = PeriodicField::from_fn(&g, |x| (TWO_PI * x).sin());
        let expected = &s * (4.0 * PI * PI);
        assert!(apply_a(&s).unwrap().sup_distance(&expected) < 1e-11);

        let u = PeriodicField::from_fn(&g, |x| 0.3 + (2.0 * TWO_PI * x).cos());
        let expected = PeriodicField::from_fn(&g, |x| 0.3 + 16.0 * PI * PI * (2.0 * TWO_PI * x).cos());
        assert!(apply_a(&u).unwrap().sup_distance(&expected) < 1e-10);
    }

    #[test]
    fn invert_constant_and_sine_all_methods() {
        let g = grid(128);
        let one = PeriodicField::constant(&g, 1.0);
        let s = PeriodicField::from_fn(&g, |x| (TWO_PI * x).sin());
        let w = &s * (4.0 * PI * PI);
        for method in InverseMethod::ALL {
            let v = invert_a(&one, method).unwrap();
            assert!(v.sup_distance(&one) < 1e-10, "{method:?}: {}", v.sup_distance(&one));
            let v = invert_a(&w, method).unwrap();
            assert!(v.sup_distance(&s) <= 1e-10, "{method:?}: {}", v.sup_distance(&s));
        }
    }

    #[test]
    fn ainv_dx_examples() {
        let g = grid(64);
        let c = PeriodicField::constant(&g, 3.5);
        assert!(ainv_dx(&c).unwrap().sup_norm() < 1e-15);
        assert!(ainv_dx_closed_form(&c).unwrap().sup_norm() < 1e-14);

        let cos = PeriodicField::from_fn(&g, |x| (TWO_PI * x).cos());
        let expected = PeriodicField::from_fn(&g, |x| -(TWO_PI * x).sin() / TWO_PI);
        assert!(ainv_dx(&cos).unwrap().sup_distance(&expected) < 1e-15);
        assert!(ainv_dx_closed_form(&cos).unwrap().sup_distance(&expected) < 1e-14);
    }

    #[test]
    fn ainv_dxx_examples() {
        let g = grid(32);
        let c = PeriodicField::constant(&g, 7.0);
        assert_eq!(ainv_dxx(&c).unwrap().sup_norm(), 0.0);
        let s = PeriodicField::from_fn(&g, |x| (TWO_PI * x).sin());
        assert!(ainv_dxx(&s).unwrap().sup_distance(&(-&s)) < 1e-15);
    }

    #[test]
    fn corrupted_input_is_rejected() {
        let g = grid(16);
        let mut v = vec![1.0; 16];
        v[5] = f64::INFINITY;
        let w = PeriodicField::new(&g, v).unwrap();
        assert!(apply_a(&w).is_err());
        for method in InverseMethod::ALL {
            assert!(invert_a(&w, method).is_err());
        }
        assert!(ainv_dx(&w).is_err());
        assert!(ainv_dxx(&w).is_err());
    }
}
