//! Periodic grids, sampled fields and the spectral calculus on the unit circle.
//!
//! A [`PeriodicGrid`] of `n` points samples `x_j = j / n`, `j = 0..n`, on `S = R/Z`.
//! Derivatives and antiderivatives are discrete-Fourier multipliers; quadrature is
//! the uniform trapezoid rule, which on a periodic grid is the sample average.
//!
//! Odd-order derivatives zero the Nyquist mode so that they stay real and
//! skew-symmetric; even orders keep it.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// FFT plans and wavenumbers shared by every grid of the same size.
struct SpectralPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan_for(n: usize) -> Arc<SpectralPlan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<SpectralPlan>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(SpectralPlan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Uniform grid of `n` points on the unit circle.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    plan: Arc<SpectralPlan>,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n, plan: plan_for(n) })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.point(j))
    }

    /// Signed wavenumber stored at FFT index `idx`; the Nyquist slot maps to `-n/2`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, k: i64) -> bool {
        k == -(self.n as i64 / 2)
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.plan.forward.process(&mut buf);
        buf
    }

    pub(crate) fn inverse(&self, mut coeffs: Vec<Complex<f64>>) -> Vec<f64> {
        self.plan.inverse.process(&mut coeffs);
        let scale = 1.0 / self.n as f64;
        coeffs.into_iter().map(|c| c.re * scale).collect()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for PeriodicGrid {}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).finish()
    }
}

/// Integration constant selector for [`PeriodicField::antiderivative`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantRule {
    ZeroAtOrigin,
    ZeroMean,
    /// Value of the primitive at `x = 0`.
    Explicit(f64),
}

/// Result of [`PeriodicField::antiderivative`].
#[derive(Debug, Clone)]
pub struct Antiderivative {
    pub field: PeriodicField,
    /// `false` when the integrand had a nonzero mean, in which case `field` holds the
    /// cumulative integral `F(x) = F(0) + int_0^x f`, which is not periodic.
    pub periodic: bool,
}

/// Samples of a real 1-periodic function.
#[derive(Clone, PartialEq)]
pub struct PeriodicField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl fmt::Debug for PeriodicField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicField")
            .field("n", &self.grid.n)
            .field("values", &self.values)
            .finish()
    }
}

impl PeriodicField {
    pub fn new(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.points().map(f).collect(),
        }
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fails with [`Error::Corrupted`] at the first NaN or infinite sample.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::Corrupted {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = j;
            }
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn try_zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Pointwise combination.
    ///
    /// Panics when the fields live on different grids; use [`Self::try_zip_map`] to
    /// get an error instead.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.try_zip_map(other, f)
            .unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            });
        }
        Ok(())
    }

    /// Largest absolute pointwise difference.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.zip_map(other, |a, b| a - b).sup_norm()
    }

    /// Trapezoid quadrature over one period (the sample average).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `int_S f dx`; identical to [`Self::mean`] on the unit circle.
    pub fn integrate(&self) -> f64 {
        self.mean()
    }

    /// Unnormalized discrete Fourier coefficients.
    pub fn spectrum(&self) -> Vec<Complex<f64>> {
        self.grid.forward(&self.values)
    }

    /// Applies a Fourier multiplier indexed by signed wavenumber.
    pub fn apply_symbol(&self, symbol: impl Fn(i64) -> Complex<f64>) -> Self {
        let mut coeffs = self.spectrum();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c *= symbol(self.grid.wavenumber(idx));
        }
        Self {
            grid: self.grid.clone(),
            values: self.grid.inverse(coeffs),
        }
    }

    /// Spectral derivative of order 1, 2 or 3.
    pub fn derivative(&self, order: u32) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        self.check_finite()?;
        Ok(self.derivative_unchecked(order))
    }

    pub(crate) fn derivative_unchecked(&self, order: u32) -> Self {
        let odd = order % 2 == 1;
        let grid = &self.grid;
        self.apply_symbol(|k| {
            if odd && grid.is_nyquist(k) {
                return Complex::new(0.0, 0.0);
            }
            Complex::new(0.0, TWO_PI * k as f64).powu(order)
        })
    }

    /// Spectral antiderivative with the integration constant fixed by `rule`.
    pub fn antiderivative(&self, rule: ConstantRule) -> Result<Antiderivative> {
        self.check_finite()?;
        let mean = self.mean();
        let scale = self.sup_norm().max(1.0);
        let periodic = mean.abs() <= 1e-12 * scale;
        let primitive = Primitive::from_periodic(self.clone()).integral_from_origin();
        let mut field = primitive.samples();
        let shift = match rule {
            ConstantRule::ZeroAtOrigin => 0.0,
            ConstantRule::ZeroMean => -field.mean(),
            ConstantRule::Explicit(c) => c,
        };
        if shift != 0.0 {
            field = field.map(|v| v + shift);
        }
        Ok(Antiderivative { field, periodic })
    }

    /// Zero-mean spectral antiderivative of a zero-mean field.
    pub(crate) fn periodic_primitive(&self) -> Self {
        let grid = &self.grid;
        self.apply_symbol(|k| {
            if k == 0 || grid.is_nyquist(k) {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, -1.0 / (TWO_PI * k as f64))
            }
        })
    }

    /// Fraction of gradient energy outside the top third of the resolved spectrum.
    ///
    /// Returns 1 for a field whose gradient vanishes. Values below ~0.99 mean the
    /// grid no longer resolves the solution.
    pub fn resolvedness(&self) -> f64 {
        let coeffs = self.spectrum();
        let cutoff = self.grid.len() as f64 / 3.0;
        let mut total = 0.0;
        let mut top = 0.0;
        for (idx, c) in coeffs.iter().enumerate() {
            let k = self.grid.wavenumber(idx) as f64;
            let e = k * k * c.norm_sqr();
            total += e;
            if k.abs() > cutoff {
                top += e;
            }
        }
        if total > 0.0 {
            (1.0 - top / total).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }
}

impl<'a> Add for &'a PeriodicField {
    type Output = PeriodicField;
    fn add(self, rhs: Self) -> PeriodicField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a> Sub for &'a PeriodicField {
    type Output = PeriodicField;
    fn sub(self, rhs: Self) -> PeriodicField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<'a> Mul for &'a PeriodicField {
    type Output = PeriodicField;
    fn mul(self, rhs: Self) -> PeriodicField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl<'a> Mul<f64> for &'a PeriodicField {
    type Output = PeriodicField;
    fn mul(self, rhs: f64) -> PeriodicField {
        self.map(|a| a * rhs)
    }
}

impl<'a> Add<f64> for &'a PeriodicField {
    type Output = PeriodicField;
    fn add(self, rhs: f64) -> PeriodicField {
        self.map(|a| a + rhs)
    }
}

impl<'a> Neg for &'a PeriodicField {
    type Output = PeriodicField;
    fn neg(self) -> PeriodicField {
        self.map(|a| -a)
    }
}

/// A function on `[0, 1)` written as polynomial plus periodic part,
/// `F(x) = sum_i a_i x^i + p(x)`.
///
/// Repeated cumulative integrals `int_0^x` stay exact in this form: the mean of the
/// periodic part moves into the polynomial and the rest is integrated spectrally.
#[derive(Debug, Clone)]
pub struct Primitive {
    poly: Vec<f64>,
    periodic: PeriodicField,
}

impl Primitive {
    pub fn from_periodic(periodic: PeriodicField) -> Self {
        Self {
            poly: vec![0.0],
            periodic,
        }
    }

    pub fn polynomial(&self) -> &[f64] {
        &self.poly
    }

    /// `x -> int_0^x F(s) ds`.
    pub fn integral_from_origin(&self) -> Self {
        let mut poly = vec![0.0; self.poly.len() + 1];
        for (i, a) in self.poly.iter().enumerate() {
            poly[i + 1] = a / (i + 1) as f64;
        }
        let mean = self.periodic.mean();
        let periodic = self.periodic.map(|v| v - mean).periodic_primitive();
        poly[1] += mean;
        poly[0] -= periodic.values[0];
        Self { poly, periodic }
    }

    fn poly_at(&self, x: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    /// Limit of `F(x)` as `x -> 1` from the left.
    pub fn value_at_one(&self) -> f64 {
        self.poly.iter().sum::<f64>() + self.periodic.values[0]
    }

    pub fn samples(&self) -> PeriodicField {
        let grid = self.periodic.grid();
        let values = grid
            .points()
            .zip(&self.periodic.values)
            .map(|(x, p)| self.poly_at(x) + p)
            .collect();
        PeriodicField {
            grid: grid.clone(),
            values,
        }
    }
}

/// Trigonometric interpolant of a grid field, evaluable at any real point.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    /// Normalized coefficients for k = 0..n/2 (the Nyquist entry is stored last).
    coeffs: Vec<Complex<f64>>,
    n: usize,
}

impl TrigInterpolant {
    pub fn new(field: &PeriodicField) -> Self {
        let n = field.len();
        let spectrum = field.spectrum();
        let scale = 1.0 / n as f64;
        let coeffs = spectrum[..=n / 2].iter().map(|c| c * scale).collect();
        Self { coeffs, n }
    }

    /// Interpolant of the spectral first derivative (Nyquist term dropped).
    pub fn derivative(&self) -> Self {
        let half = self.n / 2;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == half {
                    Complex::new(0.0, 0.0)
                } else {
                    c * Complex::new(0.0, TWO_PI * k as f64)
                }
            })
            .collect();
        Self { coeffs, n: self.n }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let half = self.n / 2;
        let z = Complex::from_polar(1.0, TWO_PI * x.rem_euclid(1.0));
        let mut zk = z;
        let mut acc = self.coeffs[0].re;
        for c in &self.coeffs[1..half] {
            acc += 2.0 * (c * zk).re;
            zk *= z;
        }
        // zk is now z^(n/2); the Nyquist mode is carried as a cosine.
        acc + self.coeffs[half].re * zk.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sine(grid: &PeriodicGrid, k: f64) -> PeriodicField {
        PeriodicField::from_fn(grid, |x| (TWO_PI * k * x).sin())
    }

    #[test]
    fn rejects_small_or_odd_grids() {
        assert_eq!(PeriodicGrid::new(6).unwrap_err(), Error::InvalidGrid(6));
        assert_eq!(PeriodicGrid::new(33).unwrap_err(), Error::InvalidGrid(33));
        let g = PeriodicGrid::new(8).unwrap();
        assert_eq!(g.points().last().unwrap(), 7.0 / 8.0);
    }

    #[test]
    fn first_derivative_of_sine() {
        let g = PeriodicGrid::new(64).unwrap();
        let d = sine(&g, 1.0).derivative(1).unwrap();
        let expected = PeriodicField::from_fn(&g, |x| TWO_PI * (TWO_PI * x).cos());
        assert!(d.sup_distance(&expected) <= 1e-12);
    }

    #[test]
    fn second_derivative_of_sine() {
        let g = PeriodicGrid::new(64).unwrap();
        let d = sine(&g, 1.0).derivative(2).unwrap();
        let expected = &sine(&g, 1.0) * (-TWO_PI * TWO_PI);
        assert!(d.sup_distance(&expected) <= 1e-11);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = PeriodicGrid::new(32).unwrap();
        let d = PeriodicField::constant(&g, 5.0).derivative(1).unwrap();
        assert!(d.sup_norm() <= 1e-14);
    }

    #[test]
    fn derivative_rejects_corruption_and_bad_order() {
        let g = PeriodicGrid::new(16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        let f = PeriodicField::new(&g, v).unwrap();
        assert!(matches!(f.derivative(1), Err(Error::Corrupted { index: 3, .. })));
        let ok = PeriodicField::zeros(&g);
        assert_eq!(ok.derivative(4).unwrap_err(), Error::UnsupportedOrder(4));
    }

    #[test]
    fn nyquist_is_dropped_for_odd_orders() {
        let g = PeriodicGrid::new(16).unwrap();
        let alternating = PeriodicField::from_fn(&g, |x| (PI * 16.0 * x).cos());
        assert!(alternating.derivative(1).unwrap().sup_norm() < 1e-12);
        let second = alternating.derivative(2).unwrap();
        assert_abs_diff_eq!(second.values()[0], -(PI * 16.0).powi(2), epsilon = 1e-8);
    }

    #[test]
    fn quadrature_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        assert_eq!(PeriodicField::constant(&g, 1.0).mean(), 1.0);
        assert!(sine(&g, 1.0).mean().abs() <= 1e-14);
        for k in 1..32 {
            let c = PeriodicField::from_fn(&g, |x| (TWO_PI * k as f64 * x).cos());
            assert!(c.integrate().abs() <= 1e-14, "mode {k}");
        }
    }

    #[test]
    fn antiderivative_of_cosine() {
        let g = PeriodicGrid::new(64).unwrap();
        let f = PeriodicField::from_fn(&g, |x| (TWO_PI * x).cos());
        let a = f.antiderivative(ConstantRule::ZeroAtOrigin).unwrap();
        assert!(a.periodic);
        let expected = &sine(&g, 1.0) * (1.0 / TWO_PI);
        assert!(a.field.sup_distance(&expected) <= 1e-14);
    }

    #[test]
    fn antiderivative_of_zero_is_zero() {
        let g = PeriodicGrid::new(16).unwrap();
        let a = PeriodicField::zeros(&g)
            .antiderivative(ConstantRule::ZeroMean)
            .unwrap();
        assert_eq!(a.field.sup_norm(), 0.0);
    }

    #[test]
    fn antiderivative_reconstructs_from_derivative() {
        let g = PeriodicGrid::new(128).unwrap();
        let u = PeriodicField::from_fn(&g, |x| {
            0.3 + (TWO_PI * x).sin() - 0.2 * (3.0 * TWO_PI * x + 0.4).cos()
        });
        let minus_ux = -&u.derivative(1).unwrap();
        let a = minus_ux
            .antiderivative(ConstantRule::Explicit(-u.values()[0]))
            .unwrap();
        assert!(a.field.sup_distance(&(-&u)) <= 1e-12);
    }

    #[test]
    fn antiderivative_of_nonzero_mean_is_flagged_cumulative() {
        let g = PeriodicGrid::new(32).unwrap();
        let f = PeriodicField::from_fn(&g, |x| 2.0 + (TWO_PI * x).cos());
        let a = f.antiderivative(ConstantRule::ZeroAtOrigin).unwrap();
        assert!(!a.periodic);
        let expected = PeriodicField::from_fn(&g, |x| 2.0 * x + (TWO_PI * x).sin() / TWO_PI);
        assert!(a.field.sup_distance(&expected) <= 1e-13);
    }

    #[test]
    fn primitive_value_at_one_matches_closed_form() {
        let g = PeriodicGrid::new(32).unwrap();
        // int_0^x int_0^y (1 + cos 2 pi s) ds dy at x = 1 is 1/2.
        let f = PeriodicField::from_fn(&g, |x| 1.0 + (TWO_PI * x).cos());
        let twice = Primitive::from_periodic(f)
            .integral_from_origin()
            .integral_from_origin();
        assert_abs_diff_eq!(twice.value_at_one(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn interpolant_reproduces_band_limited_function() {
        let g = PeriodicGrid::new(32).unwrap();
        let f = |x: f64| 0.4 + (TWO_PI * x).sin() + 0.3 * (5.0 * TWO_PI * x + 1.0).cos();
        let interp = TrigInterpolant::new(&PeriodicField::from_fn(&g, f));
        let dinterp = interp.derivative();
        for &x in &[0.013, 0.5, 0.77, 1.31, -0.2] {
            assert_abs_diff_eq!(interp.eval(x), f(x), epsilon = 1e-13);
            let df = TWO_PI * (TWO_PI * x).cos() - 0.3 * 5.0 * TWO_PI * (5.0 * TWO_PI * x + 1.0).sin();
            assert_abs_diff_eq!(dinterp.eval(x), df, epsilon = 1e-11);
        }
    }

    #[test]
    fn resolvedness_separates_smooth_from_rough() {
        let g = PeriodicGrid::new(64).unwrap();
        assert_eq!(PeriodicField::constant(&g, 2.0).resolvedness(), 1.0);
        assert!(sine(&g, 1.0).resolvedness() > 0.999_999);
        let rough = PeriodicField::from_fn(&g, |x| (TWO_PI * 30.0 * x).sin());
        assert!(rough.resolvedness() < 1e-10);
    }
}
