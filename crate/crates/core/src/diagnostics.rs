//! Conserved quantities, a-priori bounds and inequality oracles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{ModelParams, SolutionRecord};
use crate::field::PeriodicField;
use crate::operator::{ainv_dx, apply_a};

/// Scalar summary of one recorded state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub dt: f64,
    pub min_ux: f64,
    pub max_ux: f64,
    pub sup_u: f64,
    #[serde(rename = "H0")]
    pub h0: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    #[serde(rename = "Ht0")]
    pub ht0: f64,
    #[serde(rename = "Ht1")]
    pub ht1: f64,
    #[serde(rename = "Ht2")]
    pub ht2: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub resolvedness: f64,
}

impl DiagnosticsRow {
    pub fn compute(t: f64, dt: f64, u: &PeriodicField) -> Result<Self> {
        u.check_finite()?;
        let ux = u.derivative(1)?;
        let (h0, h1, h2) = conserved_mu_ch(u)?;
        let (ht0, ht1, ht2) = conserved_mu_dp(u)?;
        Ok(Self {
            t,
            dt,
            min_ux: ux.min(),
            max_ux: ux.max(),
            sup_u: u.sup_norm(),
            h0,
            h1,
            h2,
            ht0,
            ht1,
            ht2,
            v: ux.map(|d| d * d * d).integrate(),
            resolvedness: u.resolvedness(),
        })
    }

    /// The three quantities conserved by the flow with parameter `lambda`, if any.
    pub fn conserved(&self, lambda: f64) -> Option<[f64; 3]> {
        if is_lambda(lambda, 2.0) {
            Some([self.h0, self.h1, self.h2])
        } else if is_lambda(lambda, 3.0) {
            Some([self.ht0, self.ht1, self.ht2])
        } else {
            None
        }
    }
}

pub(crate) fn is_lambda(lambda: f64, target: f64) -> bool {
    (lambda - target).abs() <= 1e-12
}

/// `(H0, H1, H2)` of the lambda = 2 hierarchy.
pub fn conserved_mu_ch(u: &PeriodicField) -> Result<(f64, f64, f64)> {
    let m = apply_a(u)?;
    let ux = u.derivative(1)?;
    let mu = u.mean();
    let h0 = m.mean();
    let h1 = 0.5 * (&m * u).integrate();
    let h2 = u.zip_map(&ux, |a, d| mu * a * a + 0.5 * a * d * d).integrate();
    Ok((h0, h1, h2))
}

/// `(Ht0, Ht1, Ht2)` of the lambda = 3 hierarchy.
pub fn conserved_mu_dp(u: &PeriodicField) -> Result<(f64, f64, f64)> {
    let mu = u.mean();
    let m = apply_a(u)?;
    let ht0 = -4.5 * m.integrate();
    let ht1 = 0.5 * u.map(|a| a * a).integrate();
    let q = ainv_dx(u)?;
    let ht2 = u
        .zip_map(&q, |a, b| 1.5 * mu * b * b + a * a * a / 6.0)
        .integrate();
    Ok((ht0, ht1, ht2))
}

/// `|mu0| + (sqrt 3 / 6) mu1 - sup|u|`.
pub fn apriori_sup_bound(u: &PeriodicField, params: &ModelParams) -> f64 {
    params.mu0.abs() + 3f64.sqrt() / 6.0 * params.mu1 - u.sup_norm()
}

/// Margin of `sup|u(t)| <= ((3/2) mu0^2 + 6 |mu0| mu2) t + sup|u0|` at each diagnostics row.
pub fn linear_growth_margins(record: &SolutionRecord) -> Result<Vec<f64>> {
    let p = &record.params;
    if !is_lambda(p.lambda, 3.0) {
        return Err(Error::NotApplicable("the linear growth bound", 3.0));
    }
    let rate = 1.5 * p.mu0 * p.mu0 + 6.0 * p.mu0.abs() * p.mu2;
    let sup0 = record
        .fields
        .first()
        .map(PeriodicField::sup_norm)
        .ok_or_else(|| Error::InvalidArgument("empty record".into()))?;
    Ok(record
        .diagnostics
        .iter()
        .map(|row| rate * row.t + sup0 - row.sup_u)
        .collect())
}

/// Worst of [`linear_growth_margins`] over a record.
pub fn linear_growth_bound(record: &SolutionRecord) -> Result<f64> {
    Ok(linear_growth_margins(record)?.into_iter().fold(f64::INFINITY, f64::min))
}

fn require_zero_mean(f: &PeriodicField) -> Result<()> {
    let mean = f.mean();
    if mean.abs() > 1e-10 * f.sup_norm().max(1.0) {
        return Err(Error::NonZeroMean(mean));
    }
    Ok(())
}

/// `(1/12) int f_x^2 - max f^2` for zero-mean `f`.
pub fn sobolev_oracle(f: &PeriodicField) -> Result<f64> {
    require_zero_mean(f)?;
    let fx = f.derivative(1)?;
    let sup = f.sup_norm();
    Ok(fx.map(|d| d * d).integrate() / 12.0 - sup * sup)
}

/// `(1 / 4 pi^2) int f_x^2 - int f^2` for zero-mean `f`.
pub fn wirtinger_oracle(f: &PeriodicField) -> Result<f64> {
    require_zero_mean(f)?;
    let fx = f.derivative(1)?;
    Ok(fx.map(|d| d * d).integrate() / (4.0 * PI * PI) - f.map(|a| a * a).integrate())
}

/// `V = int u_x^3`.
pub fn lyapunov_v(u: &PeriodicField) -> Result<f64> {
    Ok(u.derivative(1)?.map(|d| d * d * d).integrate())
}

/// Largest relative change of the conserved triple against the first row, over the
/// leading rows whose resolvedness stays at least `min_resolvedness`.
pub fn conservation_drift(rows: &[DiagnosticsRow], lambda: f64, min_resolvedness: f64) -> Option<f64> {
    let first = rows.first()?.conserved(lambda)?;
    let drift = rows
        .iter()
        .take_while(|r| r.resolvedness >= min_resolvedness)
        .filter_map(|r| r.conserved(lambda))
        .flat_map(|c| (0..3).map(move |i| (c[i] - first[i]).abs() / first[i].abs().max(1.0)))
        .fold(0.0, f64::max);
    Some(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PeriodicGrid;
    use approx::assert_abs_diff_eq;

    const TWO_PI: f64 = 2.0 * PI;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn hierarchy_on_constants() {
        let g = grid(32);
        for c in [-1.5, 0.0, 0.7] {
            let u = PeriodicField::constant(&g, c);
            let (h0, h1, h2) = conserved_mu_ch(&u).unwrap();
            assert_abs_diff_eq!(h0, c, epsilon = 1e-14);
            assert_abs_diff_eq!(h1, c * c / 2.0, epsilon = 1e-14);
            assert_abs_diff_eq!(h2, c * c * c, epsilon = 1e-14);
            let (t0, t1, t2) = conserved_mu_dp(&u).unwrap();
            assert_abs_diff_eq!(t0, -4.5 * c, epsilon = 1e-14);
            assert_abs_diff_eq!(t1, c * c / 2.0, epsilon = 1e-14);
            assert_abs_diff_eq!(t2, c * c * c / 6.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn h1_of_shifted_sine() {
        let g = grid(64);
        let (mu0, a) = (0.3, 0.8);
        let u = PeriodicField::from_fn(&g, |x| mu0 + a * (TWO_PI * x).sin());
        let (_, h1, _) = conserved_mu_ch(&u).unwrap();
        assert_abs_diff_eq!(h1, mu0 * mu0 / 2.0 + PI * PI * a * a, epsilon = 1e-12);
    }

    #[test]
    fn odd_symmetry_zeros() {
        let g = grid(64);
        let s = PeriodicField::from_fn(&g, |x| (TWO_PI * x).sin());
        assert!(conserved_mu_ch(&s).unwrap().2.abs() < 1e-14);
        assert!(conserved_mu_dp(&s).unwrap().2.abs() < 1e-14);
        assert!(lyapunov_v(&s).unwrap().abs() < 1e-12);
        let z = PeriodicField::zeros(&g);
        assert_eq!(conserved_mu_dp(&z).unwrap(), (0.0, 0.0, 0.0));
        assert_eq!(lyapunov_v(&PeriodicField::constant(&g, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn oracle_examples() {
        let g = grid(128);
        let s1 = PeriodicField::from_fn(&g, |x| (TWO_PI * x).sin());
        assert_abs_diff_eq!(sobolev_oracle(&s1).unwrap(), PI * PI / 6.0 - 1.0, epsilon = 1e-12);
        assert!(wirtinger_oracle(&s1).unwrap().abs() <= 1e-12);

        // int sin^2(4 pi x) = 1/2 and (1/4pi^2) int (4 pi cos)^2 = 2.
        let s2 = PeriodicField::from_fn(&g, |x| (2.0 * TWO_PI * x).sin());
        assert_abs_diff_eq!(wirtinger_oracle(&s2).unwrap(), 1.5, epsilon = 1e-12);

        let z = PeriodicField::zeros(&g);
        assert_eq!(sobolev_oracle(&z).unwrap(), 0.0);
        assert_eq!(wirtinger_oracle(&z).unwrap(), 0.0);

        let shifted = &s1 + 0.01;
        assert!(matches!(sobolev_oracle(&shifted), Err(Error::NonZeroMean(_))));
        assert!(matches!(wirtinger_oracle(&shifted), Err(Error::NonZeroMean(_))));
    }

    #[test]
    fn apriori_margin_detects_violation() {
        let g = grid(64);
        let u0 = PeriodicField::from_fn(&g, |x| 0.4 + 0.2 * (TWO_PI * x).cos());
        let p = ModelParams::from_initial(&u0, 2.0).unwrap();
        let flat = PeriodicField::constant(&g, p.mu0);
        assert_abs_diff_eq!(apriori_sup_bound(&flat, &p), 3f64.sqrt() / 6.0 * p.mu1, epsilon = 1e-14);
        assert!(apriori_sup_bound(&u0, &p) >= 0.0);
        let big = PeriodicField::constant(&g, 2.0 * (p.mu0.abs() + 3f64.sqrt() / 6.0 * p.mu1));
        assert!(apriori_sup_bound(&big, &p) < 0.0);
    }

    #[test]
    fn drift_is_relative_to_unit_floor() {
        let base = DiagnosticsRow::compute(0.0, 0.0, &PeriodicField::constant(&grid(16), 0.5)).unwrap();
        let mut later = base;
        later.h1 += 1e-3;
        later.resolvedness = 0.5;
        let rows = [base, later];
        assert_eq!(conservation_drift(&rows, 2.0, 0.99), Some(0.0));
        assert_abs_diff_eq!(conservation_drift(&rows, 2.0, 0.0).unwrap(), 1e-3, epsilon = 1e-15);
        assert_eq!(conservation_drift(&rows, 0.5, 0.0), None);
    }
}
