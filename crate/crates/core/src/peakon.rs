//! Peaked travelling waves and Green's-function superpositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{PeriodicField, PeriodicGrid};
use crate::operator::{ainv_dx_trapezoid, apply_a, green, green_prime};

/// Signed distance from `x` to the nearest integer, in `[-1/2, 1/2)`.
fn centered(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y < 0.5 {
        y
    } else {
        y - 1.0
    }
}

/// `phi(x) = (c / 26)(12 x^2 + 23)` on `[-1/2, 1/2]`, extended periodically.
pub fn one_peakon_profile(c: f64, x: f64) -> f64 {
    let y = centered(x);
    c / 26.0 * (12.0 * y * y + 23.0)
}

/// Derivative of [`one_peakon_profile`] away from the corner at `x = 1/2`.
pub fn one_peakon_slope(c: f64, x: f64) -> f64 {
    12.0 * c / 13.0 * centered(x)
}

pub fn one_peakon(c: f64, grid: &PeriodicGrid) -> PeriodicField {
    PeriodicField::from_fn(grid, |x| one_peakon_profile(c, x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakonConfig {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub s: Option<Vec<f64>>,
}

impl PeakonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() {
            return Err(Error::InvalidArgument("at least one peakon is required".into()));
        }
        if self.q.len() != self.p.len() || self.s.as_ref().is_some_and(|s| s.len() != self.p.len()) {
            return Err(Error::InvalidArgument("p, q and s must have equal lengths".into()));
        }
        if let Some(q) = self.q.iter().find(|q| !(0.0..1.0).contains(*q)) {
            return Err(Error::InvalidArgument(format!("position {q} is outside [0, 1)")));
        }
        let all = self.p.iter().chain(&self.q).chain(self.s.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite peakon parameter".into()));
        }
        Ok(())
    }
}

/// `sum_i p_i g(x - q_i)`.
pub fn multipeakon_field(cfg: &PeakonConfig, grid: &PeriodicGrid) -> Result<PeriodicField> {
    cfg.validate()?;
    Ok(PeriodicField::from_fn(grid, |x| {
        cfg.p.iter().zip(&cfg.q).map(|(p, q)| p * green(x - q)).sum()
    }))
}

/// `sum_i [p_i g(x - q_i) + s_i g'(x - q_i)]`; missing `s` means all zero.
pub fn shockpeakon_field(cfg: &PeakonConfig, grid: &PeriodicGrid) -> Result<PeriodicField> {
    let base = multipeakon_field(cfg, grid)?;
    let Some(s) = &cfg.s else {
        return Ok(base);
    };
    let shock = PeriodicField::from_fn(grid, |x| {
        s.iter().zip(&cfg.q).map(|(s, q)| s * green_prime(x - q)).sum()
    });
    Ok(&base + &shock)
}

/// Grid points farther than `exclusion` from the corner at `x = 1/2`, never including the
/// two samples nearest to it.
fn smooth_points(grid: &PeriodicGrid, exclusion: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    let h = grid.spacing();
    grid.points()
        .enumerate()
        .filter(move |(_, x)| {
            let d = (x - 0.5).abs();
            d > exclusion && d > h
        })
}

fn check_exclusion(exclusion: f64) -> Result<()> {
    if !(exclusion > 0.0 && exclusion < 0.25) {
        return Err(Error::InvalidArgument(format!(
            "exclusion must lie in (0, 1/4), got {exclusion}"
        )));
    }
    Ok(())
}

/// Largest residual of `u(t, x) = phi(x - c t)` in the evolution equation with lambda = 2,
/// away from the corner, divided by `c^2`.
///
/// The profile slope is analytic and the nonlocal term uses trapezoid quadrature. All
/// terms are quadratic in `c`, so the normalized value does not depend on `c`.
pub fn traveling_wave_residual(c: f64, n: usize, exclusion: f64) -> Result<f64> {
    check_exclusion(exclusion)?;
    let grid = PeriodicGrid::new(n)?;
    if c == 0.0 {
        return Ok(0.0);
    }
    let phi = one_peakon(c, &grid);
    let dphi = PeriodicField::from_fn(&grid, |x| one_peakon_slope(c, x));
    let mu = phi.mean();
    let w = phi.zip_map(&dphi, |v, d| 2.0 * mu * v + 0.5 * d * d);
    let nonlocal = ainv_dx_trapezoid(&w)?;
    let (pv, dv, nv) = (phi.values(), dphi.values(), nonlocal.values());
    let worst = smooth_points(&grid, exclusion)
        .map(|(j, _)| (-c * dv[j] + pv[j] * dv[j] + nv[j]).abs())
        .fold(0.0, f64::max);
    Ok(worst / (c * c))
}

/// Largest `|m|` of the one-peakon away from the corner, divided by `|c|`.
/// The continuum value is zero; the spectral second derivative leaves a tail that decays
/// like `1/n`.
pub fn m_flatness(c: f64, n: usize, exclusion: f64) -> Result<f64> {
    check_exclusion(exclusion)?;
    let grid = PeriodicGrid::new(n)?;
    if c == 0.0 {
        return Ok(0.0);
    }
    let m = apply_a(&one_peakon(c, &grid))?;
    let mv = m.values();
    Ok(smooth_points(&grid, exclusion)
        .map(|(j, _)| mv[j].abs())
        .fold(0.0, f64::max)
        / c.abs())
}
