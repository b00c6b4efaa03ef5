//! Residual checks for the geometric descriptions of the family: curvature flows of
//! centro-equiaffine curves, pseudo-spherical one-forms for lambda = 2 and affine
//! Maurer-Cartan forms for lambda = 3.
//!
//! Conventions: `dx ^ dt` is positively oriented,
//! `d(a dx + b dt) = (b_x - a_t) dx ^ dt` and
//! `(a dx + b dt) ^ (a' dx + b' dt) = (a b' - a' b) dx ^ dt`.
//! Time derivatives of form coefficients come from the chain rule: every coefficient is
//! evaluated on dual numbers whose infinitesimal parts carry `u_t`, `u_tx` and `m_t`.

use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{rhs, ModelParams};
use crate::field::{ConstantRule, PeriodicField};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// `v + d eps` with `eps^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub const fn constant(v: f64) -> Self {
        Self { v, d: 0.0 }
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Dual::constant(v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.v * o.d + self.d * o.v,
        }
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self * o.v,
            d: self * o.d,
        }
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, c: f64) -> Dual {
        Dual { v: self.v + c, d: self.d }
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, c: f64) -> Dual {
        Dual { v: self.v - c, d: self.d }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }
}

/// Relative spectral level below which a Fourier coefficient counts as roundoff.
const BAND_THRESHOLD: f64 = 1e-11;

/// Spectral differentiation restricted to `|k| <= band`.
///
/// The identities checked here hold exactly on band-limited fields, and every term stays
/// inside a few multiples of the input bandwidth. Projecting before each derivative keeps
/// rounding noise in the empty high modes from being amplified by `k^p`.
#[derive(Debug, Clone, Copy)]
struct Calculus {
    band: Option<i64>,
}

impl Calculus {
    const FULL: Calculus = Calculus { band: None };

    /// Band of `4 K` for an input with highest significant mode `K`, or the full grid when
    /// that band does not fit below the Nyquist mode.
    fn for_input(u: &PeriodicField) -> Self {
        let spec = u.spectrum();
        let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let grid = u.grid();
        let k_max = spec
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > BAND_THRESHOLD * peak)
            .map(|(i, _)| grid.wavenumber(i).abs())
            .max()
            .unwrap_or(0);
        let band = 4 * k_max.max(1);
        if 2 * band < u.len() as i64 {
            Calculus { band: Some(band) }
        } else {
            Self::FULL
        }
    }

    /// `d^order f / dx^order` with the band cut applied in the same Fourier multiplier;
    /// projecting in a separate pass would reintroduce rounding in every mode.
    fn d(&self, f: &PeriodicField, order: u32) -> Result<PeriodicField> {
        let Some(band) = self.band else {
            return f.derivative(order);
        };
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        f.check_finite()?;
        Ok(f.apply_symbol(|k| {
            if k.abs() > band {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, TWO_PI * k as f64).powu(order)
            }
        }))
    }

    fn apply_a(&self, f: &PeriodicField) -> Result<PeriodicField> {
        let mu = f.mean();
        Ok(self.d(f, 2)?.map(|v| mu - v))
    }
}

/// Pointwise jet of the solution: `u`, `u_x`, `m` and `mu(u)` with their time derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub u: Dual,
    pub ux: Dual,
    pub m: Dual,
    pub mu: Dual,
}

/// A form coefficient as a function of the jet and the spectral parameter.
pub type Coeff = Box<dyn Fn(&Jet, f64) -> Dual + Send + Sync>;

/// `a dx + b dt` with coefficients given symbolically.
pub struct FormSpec {
    pub a: Coeff,
    pub b: Coeff,
}

impl FormSpec {
    pub fn new(
        a: impl Fn(&Jet, f64) -> Dual + Send + Sync + 'static,
        b: impl Fn(&Jet, f64) -> Dual + Send + Sync + 'static,
    ) -> Self {
        Self {
            a: Box::new(a),
            b: Box::new(b),
        }
    }
}

/// Sampled one-form: `a` with its time derivative, and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormCoeffs {
    pub a: PeriodicField,
    pub a_t: PeriodicField,
    pub b: PeriodicField,
}

impl OneFormCoeffs {
    /// Coefficient of `dx ^ dt` in `d omega`.
    pub fn exterior_derivative(&self) -> Result<PeriodicField> {
        self.exterior_derivative_in(Calculus::FULL)
    }

    fn exterior_derivative_in(&self, calc: Calculus) -> Result<PeriodicField> {
        Ok(&calc.d(&self.b, 1)? - &self.a_t)
    }

    pub fn wedge(&self, other: &Self) -> PeriodicField {
        &(&self.a * &other.b) - &(&other.a * &self.b)
    }
}

/// Samples of the jet on the grid of `u`, with `u_t` supplied by the caller.
pub struct JetField {
    jets: Vec<Jet>,
    grid_template: PeriodicField,
}

impl JetField {
    pub fn new(u: &PeriodicField, u_t: &PeriodicField) -> Result<Self> {
        Self::new_in(Calculus::FULL, u, u_t)
    }

    fn new_in(calc: Calculus, u: &PeriodicField, u_t: &PeriodicField) -> Result<Self> {
        u.ensure_same_grid(u_t)?;
        u_t.check_finite()?;
        let ux = calc.d(u, 1)?;
        let m = calc.apply_a(u)?;
        let utx = calc.d(u_t, 1)?;
        let mt = calc.apply_a(u_t)?;
        let mu = u.mean();
        let mu_t = u_t.mean();
        let jets = (0..u.len())
            .map(|i| Jet {
                u: Dual {
                    v: u.values()[i],
                    d: u_t.values()[i],
                },
                ux: Dual {
                    v: ux.values()[i],
                    d: utx.values()[i],
                },
                m: Dual {
                    v: m.values()[i],
                    d: mt.values()[i],
                },
                mu: Dual { v: mu, d: mu_t },
            })
            .collect();
        Ok(Self {
            jets,
            grid_template: u.clone(),
        })
    }

    pub fn sample(&self, form: &FormSpec, lambda: f64) -> OneFormCoeffs {
        let grid = self.grid_template.grid();
        let a: Vec<Dual> = self.jets.iter().map(|j| (form.a)(j, lambda)).collect();
        let b = self.jets.iter().map(|j| (form.b)(j, lambda).v).collect();
        let field = |v: Vec<f64>| PeriodicField::new(grid, v).expect("grid-sized");
        OneFormCoeffs {
            a: field(a.iter().map(|x| x.v).collect()),
            a_t: field(a.iter().map(|x| x.d).collect()),
            b: field(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResidual {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryResidualReport {
    pub test_id: String,
    /// Worst entry of `checks`.
    pub residual_sup: f64,
    pub n: usize,
    pub lambda_spec: Option<f64>,
    pub checks: Vec<CheckResidual>,
}

impl GeometryResidualReport {
    fn new(test_id: &str, n: usize, lambda_spec: Option<f64>, checks: Vec<CheckResidual>) -> Self {
        let residual_sup = checks.iter().map(|c| c.residual).fold(0.0, f64::max);
        Self {
            test_id: test_id.to_string(),
            residual_sup,
            n,
            lambda_spec,
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.residual)
    }
}

fn check(name: impl Into<String>, field: &PeriodicField) -> CheckResidual {
    CheckResidual {
        name: name.into(),
        residual: field.sup_norm(),
    }
}

fn require_lambda(lambda_spec: f64) -> Result<()> {
    if lambda_spec == 0.0 || !lambda_spec.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "spectral parameter must be finite and nonzero, got {lambda_spec}"
        )));
    }
    Ok(())
}

/// `f_ss + 4 phi f + 2 phi_s d^{-1} f`, where `d^{-1} f` is the primitive taking the value
/// `inv_constant` at the origin.
pub fn ca2_curvature_rhs(phi: &PeriodicField, f: &PeriodicField, inv_constant: f64) -> Result<PeriodicField> {
    ca2_rhs(Calculus::FULL, phi, f, inv_constant)
}

fn ca2_rhs(calc: Calculus, phi: &PeriodicField, f: &PeriodicField, inv_constant: f64) -> Result<PeriodicField> {
    phi.ensure_same_grid(f)?;
    let mean = f.mean();
    if mean.abs() > 1e-10 * f.sup_norm().max(1.0) {
        return Err(Error::NonZeroMean(mean));
    }
    let fss = calc.d(f, 2)?;
    let primitive = f.antiderivative(ConstantRule::Explicit(inv_constant))?.field;
    let phi_s = calc.d(phi, 1)?;
    let mut out = fss;
    out = &out + &(&(phi * f) * 4.0);
    out = &out + &(&(&phi_s * &primitive) * 2.0);
    Ok(out)
}

/// Checks that the plane curvature flow with `phi = m`, `f = -u_x` and primitive `-u`
/// yields `-(u_xxx + 4 m u_x + 2 u m_x)`, and that a moving frame plus `u -> 2u` turns it
/// into the lambda = 2 evolution: `2 (phi_t - m_x) = m_t[2u]`.
pub fn ca2_to_much_residual(u: &PeriodicField) -> Result<GeometryResidualReport> {
    let calc = Calculus::for_input(u);
    let ux = calc.d(u, 1)?;
    let uxxx = calc.d(u, 3)?;
    let m = calc.apply_a(u)?;
    let mx = calc.d(&m, 1)?;
    let flow = ca2_rhs(calc, &m, &-&ux, -u.values()[0])?;
    let nonlinear = &(&(&m * &ux) * 4.0) + &(&(u * &mx) * 2.0);
    let reduction = &flow + &(&uxxx + &nonlinear);

    let doubled = u * 2.0;
    let p = ModelParams::from_initial(&doubled, 2.0)?;
    let m_t = calc.apply_a(&rhs(&doubled, &p)?)?;
    let frame = &(&(&flow - &mx) * 2.0) - &m_t;

    Ok(GeometryResidualReport::new(
        "ca2_reduction",
        u.len(),
        None,
        vec![check("curvature_flow", &reduction), check("moving_frame", &frame)],
    ))
}

/// Velocities and curvatures of a space-curve flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Ca3Data {
    pub alpha: PeriodicField,
    pub beta: PeriodicField,
    pub f: PeriodicField,
    pub g: PeriodicField,
    pub h: PeriodicField,
}

impl Ca3Data {
    fn same_grid(&self) -> Result<()> {
        for other in [&self.beta, &self.f, &self.g, &self.h] {
            self.alpha.ensure_same_grid(other)?;
        }
        Ok(())
    }

    /// `beta = beta_const`, `F = u_s + 2/3`, `G = -u`, `H = -1`, `alpha = -(c - u_ss)` where
    /// `c` is `mean(u)` when `beta_const = 0` and `u` itself when `beta_const = 1`.
    pub fn from_solution(u: &PeriodicField, beta_const: f64) -> Result<Self> {
        Self::from_solution_in(Calculus::FULL, u, beta_const)
    }

    fn from_solution_in(calc: Calculus, u: &PeriodicField, beta_const: f64) -> Result<Self> {
        let grid = u.grid();
        let us = calc.d(u, 1)?;
        let uss = calc.d(u, 2)?;
        let alpha = if beta_const == 0.0 {
            let mu = u.mean();
            uss.map(|v| v - mu)
        } else {
            &uss - u
        };
        Ok(Self {
            alpha,
            beta: PeriodicField::constant(grid, beta_const),
            f: &us + 2.0 / 3.0,
            g: -u,
            h: PeriodicField::constant(grid, -1.0),
        })
    }
}

/// Evolution of the curvatures `(alpha_t, beta_t)` under `gamma_t = F gamma + G gamma_s + H gamma_ss`.
pub fn ca3_curvature_rhs(d: &Ca3Data) -> Result<(PeriodicField, PeriodicField)> {
    ca3_rhs(Calculus::FULL, d)
}

fn ca3_rhs(calc: Calculus, d: &Ca3Data) -> Result<(PeriodicField, PeriodicField)> {
    d.same_grid()?;
    let ds = |f: &PeriodicField| calc.d(f, 1);
    let dss = |f: &PeriodicField| calc.d(f, 2);
    let (alpha, beta, f, g, h) = (&d.alpha, &d.beta, &d.f, &d.g, &d.h);
    let (alpha_s, beta_s) = (ds(alpha)?, ds(beta)?);
    let (f_s, g_s, h_s) = (ds(f)?, ds(g)?, ds(h)?);
    let (f_ss, g_ss, h_ss) = (dss(f)?, dss(g)?, dss(h)?);
    let g_2hs = g + &(&h_s * 2.0);

    let inner_a = &(&f_ss + &(alpha * &g_2hs)) + &(&alpha_s * h);
    let alpha_t = &(&(&ds(&inner_a)? + &(&(alpha * &g_s) * 2.0)) - &(beta * &f_s)) + &(alpha * &h_ss);

    let inner_b = &(&(&(&f_s * 3.0) + &g_ss) + &(beta * &g_2hs)) + &(&(alpha + &beta_s) * h);
    let beta_t = &(&(&(&ds(&inner_b)? + &(&(alpha * &h_s) * 2.0)) + &(beta * &h_ss)) + &(beta * &g_s)) + &(&alpha_s * h);
    Ok((alpha_t, beta_t))
}

/// Arc-length preservation: `F + G_s + (2/3) beta H + (1/3) H_ss`.
pub fn ca3_constraint(d: &Ca3Data) -> Result<PeriodicField> {
    ca3_constraint_in(Calculus::FULL, d)
}

fn ca3_constraint_in(calc: Calculus, d: &Ca3Data) -> Result<PeriodicField> {
    d.same_grid()?;
    let g_s = calc.d(&d.g, 1)?;
    let h_ss = calc.d(&d.h, 2)?;
    Ok(&(&(&d.f + &g_s) + &(&(&d.beta * &d.h) * (2.0 / 3.0))) + &(&h_ss * (1.0 / 3.0)))
}

/// Space-curve reductions: with `beta = 0` the curvature flow gives the lambda = 3
/// evolution and `beta_t = 0`; with `beta = 1` it gives the mean-free analogue with
/// `m = u - u_ss` and the arc-length constraint holds.
pub fn ca3_to_mudp_residual(u: &PeriodicField) -> Result<GeometryResidualReport> {
    let n = u.len();
    let calc = Calculus::for_input(u);
    let mut checks = Vec::new();

    let periodic = Ca3Data::from_solution_in(calc, u, 0.0)?;
    let (alpha_t, beta_t) = ca3_rhs(calc, &periodic)?;
    let p = ModelParams::from_initial(u, 3.0)?;
    let m_t = calc.apply_a(&rhs(u, &p)?)?;
    checks.push(check("periodic_alpha", &(&alpha_t + &m_t)));
    checks.push(check("periodic_beta", &beta_t));

    let line = Ca3Data::from_solution_in(calc, u, 1.0)?;
    let (alpha_t, beta_t) = ca3_rhs(calc, &line)?;
    let m = u - &calc.d(u, 2)?;
    let us = calc.d(u, 1)?;
    let expected = &(&(&m * &us) * 3.0) + &(u * &calc.d(&m, 1)?);
    checks.push(check("unit_beta_alpha", &(&alpha_t - &expected)));
    checks.push(check("unit_beta_beta", &beta_t));
    checks.push(check("unit_beta_constraint", &ca3_constraint_in(calc, &line)?));

    Ok(GeometryResidualReport::new("ca3_reduction", n, None, checks))
}

/// One-forms of the pseudo-spherical description for lambda = 2, spectral parameter `l`.
pub fn pss_forms() -> [FormSpec; 3] {
    let b_common = |j: &Jet, l: f64| 0.5 * (l * l / 2.0) * j.u - 0.5 * l * (j.ux + j.u * j.m + 0.5);
    [
        FormSpec::new(
            |j, l| 0.5 * (l * j.m - (l * l / 2.0 - 2.0)),
            move |j, l| b_common(j, l) + 0.5 * (j.mu - 2.0 * j.u + 2.0 / l),
        ),
        FormSpec::new(|_, l| Dual::constant(l), |j, l| (j.ux - l * j.u) + 1.0),
        FormSpec::new(
            |j, l| 0.5 * (l * j.m - (l * l / 2.0 + 2.0)),
            move |j, l| b_common(j, l) + 0.5 * (j.mu + 2.0 * j.u - 2.0 / l),
        ),
    ]
}

/// Residuals of `d w1 = w3 ^ w2`, `d w2 = w1 ^ w3`, `d w3 = w1 ^ w2` with `u_t` from the
/// lambda = 2 evolution.
pub fn pss_structure_residual(u: &PeriodicField, lambda_spec: f64) -> Result<GeometryResidualReport> {
    let p = ModelParams::from_initial(u, 2.0)?;
    let u_t = rhs(u, &p)?;
    pss_structure_residual_with(u, &u_t, lambda_spec)
}

/// As [`pss_structure_residual`] with an explicit `u_t`.
pub fn pss_structure_residual_with(
    u: &PeriodicField,
    u_t: &PeriodicField,
    lambda_spec: f64,
) -> Result<GeometryResidualReport> {
    require_lambda(lambda_spec)?;
    let calc = Calculus::for_input(u);
    let jets = JetField::new_in(calc, u, u_t)?;
    let [f1, f2, f3] = pss_forms();
    let w1 = jets.sample(&f1, lambda_spec);
    let w2 = jets.sample(&f2, lambda_spec);
    let w3 = jets.sample(&f3, lambda_spec);
    let checks = vec![
        check("dw1 = w3^w2", &(&w1.exterior_derivative_in(calc)? - &w3.wedge(&w2))),
        check("dw2 = w1^w3", &(&w2.exterior_derivative_in(calc)? - &w1.wedge(&w3))),
        check("dw3 = w1^w2", &(&w3.exterior_derivative_in(calc)? - &w1.wedge(&w2))),
    ];
    Ok(GeometryResidualReport::new("pss_structure", u.len(), Some(lambda_spec), checks))
}

/// Maurer-Cartan coefficients `w_j^k` (row `j`, column `k`) and the coframe `w^1, w^2`
/// for the affine description of the lambda = 3 flow.
pub struct AffineTable {
    pub omega: [[FormSpec; 3]; 3],
    pub coframe: [FormSpec; 2],
}

fn zero_form() -> FormSpec {
    FormSpec::new(|_, _| Dual::constant(0.0), |_, _| Dual::constant(0.0))
}

impl AffineTable {
    pub fn standard() -> Self {
        let omega = [
            [
                FormSpec::new(|_, _| 0.0.into(), |j, l| -j.ux + 1.0 / (2.0 * l)),
                FormSpec::new(
                    |j, l| l * j.m,
                    |j, l| -(1.0 / (4.0 * l)) * ((4.0 * l * l) * (j.u * j.m) - (4.0 * l) * j.ux + 1.0),
                ),
                FormSpec::new(|_, l| (1.0 / (2.0 * l)).into(), |j, l| -(1.0 / (2.0 * l)) * (2.0 * j.mu + j.u)),
            ],
            [
                FormSpec::new(|_, _| 0.0.into(), |_, l| (1.0 / l).into()),
                FormSpec::new(|_, _| 0.0.into(), |j, l| j.ux - 1.0 / (2.0 * l)),
                FormSpec::new(|_, l| (1.0 / l).into(), |j, l| -(1.0 / l) * j.u),
            ],
            [
                FormSpec::new(|_, l| (-l).into(), |j, l| l * j.u),
                FormSpec::new(|_, l| (l / 2.0).into(), |j, l| l * (j.mu - 0.5 * j.u)),
                zero_form(),
            ],
        ];
        let coframe = [
            FormSpec::new(|_, _| 1.0.into(), |j, _| -j.u),
            FormSpec::new(|_, _| (-0.5).into(), |j, _| 0.5 * j.u - j.mu),
        ];
        Self { omega, coframe }
    }

    /// Adds `eps` to the `dt` coefficient of `w_row^col` (1-based indices).
    pub fn with_perturbation(mut self, row: usize, col: usize, eps: f64) -> Self {
        let slot = &mut self.omega[row - 1][col - 1];
        let old = std::mem::replace(&mut slot.b, Box::new(|_, _| 0.0.into()));
        slot.b = Box::new(move |j, l| old(j, l) + eps);
        self
    }
}

/// Structure-equation residuals of the affine description with `u_t` from the lambda = 3
/// evolution.
pub fn affine_structure_residual(u: &PeriodicField, lambda_spec: f64) -> Result<GeometryResidualReport> {
    let p = ModelParams::from_initial(u, 3.0)?;
    let u_t = rhs(u, &p)?;
    affine_structure_residual_with(u, &u_t, lambda_spec, &AffineTable::standard())
}

/// Trace, Maurer-Cartan, symmetry and coframe residuals for an arbitrary table and `u_t`.
pub fn affine_structure_residual_with(
    u: &PeriodicField,
    u_t: &PeriodicField,
    lambda_spec: f64,
    table: &AffineTable,
) -> Result<GeometryResidualReport> {
    require_lambda(lambda_spec)?;
    let calc = Calculus::for_input(u);
    let jets = JetField::new_in(calc, u, u_t)?;
    let w: Vec<Vec<OneFormCoeffs>> = table
        .omega
        .iter()
        .map(|row| row.iter().map(|f| jets.sample(f, lambda_spec)).collect())
        .collect();
    let h: Vec<OneFormCoeffs> = table.coframe.iter().map(|f| jets.sample(f, lambda_spec)).collect();

    let mut checks = Vec::new();
    let trace_a = &(&w[0][0].a + &w[1][1].a) + &w[2][2].a;
    let trace_b = &(&w[0][0].b + &w[1][1].b) + &w[2][2].b;
    checks.push(CheckResidual {
        name: "trace".into(),
        residual: trace_a.sup_norm().max(trace_b.sup_norm()),
    });
    for j in 0..3 {
        for l in 0..3 {
            let mut r = w[j][l].exterior_derivative_in(calc)?;
            for k in 0..3 {
                r = &r - &w[j][k].wedge(&w[k][l]);
            }
            checks.push(check(format!("maurer_cartan_{}{}", j + 1, l + 1), &r));
        }
    }
    let sym = &h[0].wedge(&w[0][2]) + &h[1].wedge(&w[1][2]);
    checks.push(check("symmetry", &sym));
    for i in 0..2 {
        let mut r = h[i].exterior_derivative_in(calc)?;
        r = &r - &h[0].wedge(&w[0][i]);
        r = &r - &h[1].wedge(&w[1][i]);
        checks.push(check(format!("coframe_{}", i + 1), &r));
    }
    Ok(GeometryResidualReport::new("affine_structure", u.len(), Some(lambda_spec), checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PeriodicGrid;
    use std::f64::consts::PI;

    const TWO_PI: f64 = 2.0 * PI;

    fn sample_u(n: usize) -> PeriodicField {
        let g = PeriodicGrid::new(n).unwrap();
        PeriodicField::from_fn(&g, |x| 0.2 + 0.5 * (TWO_PI * x).sin())
    }

    #[test]
    fn dual_arithmetic() {
        let x = Dual { v: 3.0, d: 1.0 };
        let y = x * x * x - 2.0 * x + 1.0;
        assert_eq!(y.v, 22.0);
        assert_eq!(y.d, 25.0);
    }

    #[test]
    fn ca2_trivial_cases() {
        let g = PeriodicGrid::new(64).unwrap();
        let phi = PeriodicField::constant(&g, 0.3);
        let zero = PeriodicField::zeros(&g);
        assert_eq!(ca2_curvature_rhs(&phi, &zero, 0.0).unwrap().sup_norm(), 0.0);

        let s = PeriodicField::from_fn(&g, |x| (TWO_PI * x).sin());
        let out = ca2_curvature_rhs(&phi, &s, 0.0).unwrap();
        let expected = &s * (4.0 * 0.3 - 4.0 * PI * PI);
        assert!(out.sup_distance(&expected) < 1e-11);

        assert!(matches!(
            ca2_curvature_rhs(&phi, &(&s + 1.0), 0.0),
            Err(Error::NonZeroMean(_))
        ));
    }

    #[test]
    fn ca3_zero_inputs() {
        let g = PeriodicGrid::new(32).unwrap();
        let z = PeriodicField::zeros(&g);
        let d = Ca3Data {
            alpha: z.clone(),
            beta: z.clone(),
            f: z.clone(),
            g: z.clone(),
            h: z,
        };
        let (a, b) = ca3_curvature_rhs(&d).unwrap();
        assert_eq!(a.sup_norm(), 0.0);
        assert_eq!(b.sup_norm(), 0.0);
    }

    #[test]
    fn arc_length_constraint_needs_unit_beta() {
        let u = sample_u(128);
        let unit = ca3_constraint(&Ca3Data::from_solution(&u, 1.0).unwrap()).unwrap();
        assert!(unit.sup_norm() < 1e-12);
        // With beta = 0 the substitution leaves F + G_s = 2/3.
        let zero = ca3_constraint(&Ca3Data::from_solution(&u, 0.0).unwrap()).unwrap();
        assert!(zero.sup_distance(&PeriodicField::constant(u.grid(), 2.0 / 3.0)) < 1e-12);
    }

    #[test]
    fn zero_lambda_rejected() {
        let u = sample_u(32);
        assert!(pss_structure_residual(&u, 0.0).is_err());
        assert!(affine_structure_residual(&u, 0.0).is_err());
    }

    #[test]
    fn affine_trace_is_exact() {
        for u in [sample_u(64), PeriodicField::zeros(&PeriodicGrid::new(64).unwrap())] {
            for l in [1.0, -0.3, 2.5] {
                let r = affine_structure_residual(&u, l).unwrap();
                assert!(r.check("trace").unwrap() <= 1e-14);
            }
        }
    }

    #[test]
    fn forms_on_zero_field() {
        let z = PeriodicField::zeros(&PeriodicGrid::new(32).unwrap());
        let pss = pss_structure_residual(&z, 1.0).unwrap();
        assert!(pss.residual_sup < 1e-14, "{pss:?}");
        let aff = affine_structure_residual(&z, 1.0).unwrap();
        assert!(aff.residual_sup < 1e-14, "{aff:?}");
    }
}
