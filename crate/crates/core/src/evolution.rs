//! Time integration of the recast family equation
//! `u_t = -u u_x - A^{-1} d_x (lambda mu0 u + ((3 - lambda)/2) u_x^2)`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::field::{PeriodicField, PeriodicGrid, TrigInterpolant};
use crate::operator::{ainv_dx_fourier, apply_a};
use crate::stepper;

/// Family parameter and the invariants frozen from the initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    /// Mean of `u0`.
    pub mu0: f64,
    /// `||u0_x||_{L^2}`.
    pub mu1: f64,
    /// `||u0||_{L^2}`.
    pub mu2: f64,
}

impl ModelParams {
    pub fn from_initial(u0: &PeriodicField, lambda: f64) -> Result<Self> {
        u0.check_finite()?;
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
        }
        let ux = u0.derivative(1)?;
        Ok(Self {
            lambda,
            mu0: u0.mean(),
            mu1: ux.map(|d| d * d).integrate().sqrt(),
            mu2: u0.map(|a| a * a).integrate().sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n: usize,
    pub dt0: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Stop once `min u_x <= slope_stop`.
    pub slope_stop: f64,
    pub dt_min: f64,
    pub t_max: f64,
    /// Record every this many accepted steps; the final state is always recorded.
    pub record_every: usize,
    /// Advective cap `dt <= cfl / (n max|u|)`.
    pub cfl: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 256,
            dt0: 1e-4,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            slope_stop: -1e4,
            dt_min: 1e-12,
            t_max: 1.0,
            record_every: 1,
            cfl: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        PeriodicGrid::new(self.n).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt0) {
            return bad("need 0 < dt_min < dt0");
        }
        if !(self.slope_stop < 0.0) {
            return bad("slope_stop must be negative");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive and finite");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if !(self.cfl > 0.0) {
            return bad("cfl must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTmax,
    SlopeStopHit,
    DtCollapse,
    Corruption,
}

impl Termination {
    pub fn is_breakdown(self) -> bool {
        matches!(self, Termination::SlopeStopHit | Termination::DtCollapse)
    }
}

#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub params: ModelParams,
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub fields: Vec<PeriodicField>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub termination: Termination,
    pub final_time: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl SolutionRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_field(&self) -> &PeriodicField {
        self.fields.last().expect("records always hold the initial state")
    }
}

/// Right-hand side of the evolution equation.
pub fn rhs(u: &PeriodicField, params: &ModelParams) -> Result<PeriodicField> {
    u.check_finite()?;
    let drift = (u.mean() - params.mu0).abs();
    if drift > 1e-6 {
        log::warn!("mean of u differs from mu0 by {drift:e}");
    }
    Ok(rhs_unchecked(u, params))
}

fn rhs_unchecked(u: &PeriodicField, params: &ModelParams) -> PeriodicField {
    let lambda = params.lambda;
    let ux = u.derivative_unchecked(1);
    let a = lambda * params.mu0;
    let b = 0.5 * (3.0 - lambda);
    let w = u.zip_map(&ux, |v, d| a * v + b * d * d);
    let nonlocal = ainv_dx_fourier(&w);
    let values = u
        .values()
        .iter()
        .zip(ux.values())
        .zip(nonlocal.values())
        .map(|((v, d), q)| -v * d - q)
        .collect();
    PeriodicField::new(u.grid(), values).expect("grid-sized output")
}

/// Advances `u0` until `t_max`, slope breakdown, step collapse or corruption.
pub fn evolve(u0: &PeriodicField, params: &ModelParams, config: &SolverConfig) -> Result<SolutionRecord> {
    config.validate()?;
    u0.check_finite()?;
    if u0.len() != config.n {
        return Err(Error::InvalidConfig(format!(
            "initial field has {} samples but n = {}",
            u0.len(),
            config.n
        )));
    }
    let grid = u0.grid().clone();
    let n = grid.len();
    let mut mean_warned = false;
    let mut f = |_t: f64, y: &[f64]| -> Option<Vec<f64>> {
        let u = PeriodicField::new(&grid, y.to_vec()).ok()?;
        if !u.is_finite() {
            return None;
        }
        Some(rhs_unchecked(&u, params).into_values())
    };

    let mut record = SolutionRecord {
        params: *params,
        config: config.clone(),
        times: vec![0.0],
        fields: vec![u0.clone()],
        diagnostics: vec![DiagnosticsRow::compute(0.0, 0.0, u0)?],
        termination: Termination::ReachedTmax,
        final_time: 0.0,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    if record.diagnostics[0].min_ux <= config.slope_stop {
        record.termination = Termination::SlopeStopHit;
        return Ok(record);
    }

    let mut t = 0.0;
    let mut y = u0.values().to_vec();
    let mut dy = f(t, &y).ok_or(Error::Corrupted {
        index: 0,
        value: f64::NAN,
    })?;
    let mut h = config.dt0;
    let mut last_dt = 0.0;
    let mut collapsed_dt = None;
    let mut last_recorded = true;

    let termination = loop {
        let remaining = config.t_max - t;
        if remaining <= config.dt_min.min(1e-14 * config.t_max.max(1.0)) {
            break Termination::ReachedTmax;
        }
        let sup = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cap = if sup > 0.0 { config.cfl / (n as f64 * sup) } else { f64::INFINITY };
        let landing = h.min(cap) >= remaining;
        let step = if landing { remaining } else { h.min(cap) };
        if step < config.dt_min {
            collapsed_dt = Some(step);
            break Termination::DtCollapse;
        }

        let Some(tr) = stepper::trial(&mut f, t, &y, &dy, step) else {
            record.rejected_steps += 1;
            h = step * stepper::MIN_FACTOR;
            if h < config.dt_min {
                collapsed_dt = Some(h);
                break Termination::Corruption;
            }
            continue;
        };
        let norm = stepper::error_norm(&y, &tr.y, &tr.err, config.rel_tol, config.abs_tol);
        if !norm.is_finite() || norm > 1.0 {
            record.rejected_steps += 1;
            h = step * stepper::step_factor(norm).min(1.0);
            if !norm.is_finite() {
                h = step * stepper::MIN_FACTOR;
            }
            if h < config.dt_min {
                collapsed_dt = Some(h);
                break Termination::DtCollapse;
            }
            continue;
        }

        t = if landing { config.t_max } else { t + step };
        y = tr.y;
        dy = tr.dy;
        last_dt = step;
        h = step * stepper::step_factor(norm);
        record.accepted_steps += 1;

        let u = PeriodicField::new(&grid, y.clone())?;
        if !mean_warned && (u.mean() - params.mu0).abs() > 1e-6 {
            log::warn!("mean drifted by {:e} at t = {t}", u.mean() - params.mu0);
            mean_warned = true;
        }
        let min_ux = u.derivative_unchecked(1).min();
        let stop = min_ux <= config.slope_stop;
        last_recorded = false;
        if stop || record.accepted_steps % config.record_every == 0 {
            push(&mut record, t, step, u)?;
            last_recorded = true;
        }
        if stop {
            break Termination::SlopeStopHit;
        }
    };

    if !last_recorded {
        let u = PeriodicField::new(&grid, y)?;
        push(&mut record, t, last_dt, u)?;
    }
    if let Some(dt) = collapsed_dt {
        // The final row carries the step size that triggered the stop.
        if let Some(row) = record.diagnostics.last_mut() {
            row.dt = dt;
        }
    }
    record.termination = termination;
    record.final_time = t;
    Ok(record)
}

fn push(record: &mut SolutionRecord, t: f64, dt: f64, u: PeriodicField) -> Result<()> {
    record.diagnostics.push(DiagnosticsRow::compute(t, dt, &u)?);
    record.times.push(t);
    record.fields.push(u);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPoint {
    pub t: f64,
    pub q: f64,
    pub qx: f64,
    /// `exp(int_0^t u_x(s, q(s)) ds)`, integrated separately from `qx`.
    pub exp_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub x0: f64,
    pub points: Vec<CharacteristicPoint>,
    /// Estimated error in `q` caused by linear interpolation in time.
    pub interpolation_error: f64,
    /// Set when `interpolation_error` exceeds [`SPARSE_RECORD_TOL`].
    pub sparse_warning: bool,
}

pub const SPARSE_RECORD_TOL: f64 = 1e-6;
const CHARACTERISTIC_TOL: f64 = 1e-12;

/// Spatial interpolants of `u` and `u_x` at every recorded time.
pub struct CharacteristicTracker<'a> {
    record: &'a SolutionRecord,
    u: Vec<TrigInterpolant>,
    ux: Vec<TrigInterpolant>,
}

impl<'a> CharacteristicTracker<'a> {
    pub fn new(record: &'a SolutionRecord) -> Result<Self> {
        if record.is_empty() {
            return Err(Error::InvalidArgument("empty record".into()));
        }
        let u: Vec<_> = record.fields.iter().map(TrigInterpolant::new).collect();
        let ux = u.iter().map(TrigInterpolant::derivative).collect();
        Ok(Self { record, u, ux })
    }

    fn velocity(&self, j: usize, t: f64, q: f64) -> (f64, f64) {
        let times = &self.record.times;
        let theta = (t - times[j]) / (times[j + 1] - times[j]);
        let lerp = |a: &TrigInterpolant, b: &TrigInterpolant| {
            (1.0 - theta) * a.eval(q) + theta * b.eval(q)
        };
        (
            lerp(&self.u[j], &self.u[j + 1]),
            lerp(&self.ux[j], &self.ux[j + 1]),
        )
    }

    /// Follows `dq/dt = u(t, q)`, `dq_x/dt = u_x(t, q) q_x` from `q(0) = x0`.
    pub fn track(&self, x0: f64) -> Result<Characteristic> {
        let times = &self.record.times;
        let mut points = vec![CharacteristicPoint {
            t: times[0],
            q: x0,
            qx: 1.0,
            exp_integral: 1.0,
        }];
        let mut state = vec![x0, 1.0, 0.0];
        let mut h = f64::INFINITY;
        for j in 0..times.len() - 1 {
            let span = times[j + 1] - times[j];
            let mut f = |t: f64, y: &[f64]| {
                let (v, d) = self.velocity(j, t, y[0]);
                Some(vec![v, d * y[1], d])
            };
            let (next, last) = stepper::integrate(
                &mut f,
                times[j],
                state,
                times[j + 1],
                h.min(span),
                CHARACTERISTIC_TOL,
                CHARACTERISTIC_TOL,
            )
            .ok_or_else(|| Error::Inconsistent(format!("characteristic from {x0} stalled at t = {}", times[j])))?;
            h = last * stepper::MAX_FACTOR;
            state = next;
            points.push(CharacteristicPoint {
                t: times[j + 1],
                q: state[0],
                qx: state[1],
                exp_integral: state[2].exp(),
            });
        }
        let interpolation_error = self.interpolation_error(&points);
        Ok(Characteristic {
            x0,
            points,
            interpolation_error,
            sparse_warning: interpolation_error > SPARSE_RECORD_TOL,
        })
    }

    /// Sum over intervals of `dt * dt^2/8 * |u_tt|`, with `u_tt` from second divided
    /// differences of the recorded fields at the characteristic position.
    fn interpolation_error(&self, points: &[CharacteristicPoint]) -> f64 {
        let times = &self.record.times;
        let mut total = 0.0;
        for j in 1..times.len().saturating_sub(1) {
            let q = points[j].q;
            let (t0, t1, t2) = (times[j - 1], times[j], times[j + 1]);
            let (u0, u1, u2) = (self.u[j - 1].eval(q), self.u[j].eval(q), self.u[j + 1].eval(q));
            let utt = 2.0 * ((u2 - u1) / (t2 - t1) - (u1 - u0) / (t1 - t0)) / (t2 - t0);
            let dt = t2 - t1;
            total += dt * dt * dt / 8.0 * utt.abs();
        }
        total
    }
}

pub fn characteristics(record: &SolutionRecord, x0: f64) -> Result<Characteristic> {
    CharacteristicTracker::new(record)?.track(x0)
}

/// `|m(t, q) q_x^lambda - m0(x0)| / (|m0(x0)| + 1)` at each recorded time.
pub fn local_conservation_residual(record: &SolutionRecord, x0: f64) -> Result<Vec<(f64, f64)>> {
    let path = characteristics(record, x0)?;
    conservation_along(record, &path)
}

/// As [`local_conservation_residual`] for an already tracked characteristic.
pub fn conservation_along(record: &SolutionRecord, path: &Characteristic) -> Result<Vec<(f64, f64)>> {
    let lambda = record.params.lambda;
    let mut out = Vec::with_capacity(path.points.len());
    let mut m0 = None;
    for (field, p) in record.fields.iter().zip(&path.points) {
        let m = TrigInterpolant::new(&apply_a(field)?).eval(p.q);
        let invariant = m * p.qx.powf(lambda);
        let base = *m0.get_or_insert(invariant);
        out.push((p.t, (invariant - base).abs() / (base.abs() + 1.0)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TWO_PI: f64 = 2.0 * PI;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    fn config(n: usize, t_max: f64) -> SolverConfig {
        SolverConfig {
            n,
            t_max,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn params_from_shifted_sine() {
        let g = grid(64);
        let u = PeriodicField::from_fn(&g, |x| 0.1 + (TWO_PI * x).sin());
        let p = ModelParams::from_initial(&u, 2.0).unwrap();
        assert!((p.mu0 - 0.1).abs() < 1e-15);
        assert!((p.mu1 - PI * 2f64.sqrt()).abs() < 1e-12);
        assert!((p.mu2 - (0.01f64 + 0.5).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constants_are_steady() {
        let g = grid(32);
        for lambda in [0.5, 2.0, 3.0] {
            let u = PeriodicField::constant(&g, 0.7);
            let p = ModelParams::from_initial(&u, lambda).unwrap();
            assert_eq!(rhs(&u, &p).unwrap().sup_norm(), 0.0);
        }
    }

    #[test]
    fn burgers_limit() {
        let g = grid(64);
        let u = PeriodicField::from_fn(&g, |x| (TWO_PI * x).sin() + 0.3 * (2.0 * TWO_PI * x).cos());
        let p = ModelParams::from_initial(&u, 3.0).unwrap();
        let expected = -&(&u * &u.derivative(1).unwrap());
        assert!(rhs(&u, &p).unwrap().sup_distance(&expected) < 1e-12);
    }

    #[test]
    fn rhs_has_zero_mean() {
        let g = grid(128);
        let u = PeriodicField::from_fn(&g, |x| 0.1 + (TWO_PI * x).sin() + 0.2 * (3.0 * TWO_PI * x).cos());
        for lambda in [0.5, 2.0, 3.0] {
            let p = ModelParams::from_initial(&u, lambda).unwrap();
            assert!(rhs(&u, &p).unwrap().mean().abs() < 1e-13);
        }
    }

    #[test]
    fn constant_run_reaches_tmax() {
        let g = grid(32);
        let u = PeriodicField::constant(&g, 0.5);
        let p = ModelParams::from_initial(&u, 2.0).unwrap();
        let rec = evolve(&u, &p, &config(32, 1.0)).unwrap();
        assert_eq!(rec.termination, Termination::ReachedTmax);
        assert_eq!(rec.final_time, 1.0);
        assert!(rec.last_field().sup_distance(&u) < 1e-12);
        assert!(rec.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rec.diagnostics.len(), rec.fields.len());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SolverConfig::default();
        let cases = [
            SolverConfig { dt_min: 1.0, ..base.clone() },
            SolverConfig { slope_stop: 1.0, ..base.clone() },
            SolverConfig { rel_tol: 0.0, ..base.clone() },
            SolverConfig { record_every: 0, ..base.clone() },
            SolverConfig { n: 30 + 1, ..base.clone() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn record_cadence_keeps_final_state() {
        let g = grid(64);
        let u = PeriodicField::from_fn(&g, |x| 0.5 + 0.1 * (TWO_PI * x).sin());
        let p = ModelParams::from_initial(&u, 2.0).unwrap();
        let cfg = SolverConfig {
            record_every: 1000,
            ..config(64, 0.2)
        };
        let rec = evolve(&u, &p, &cfg).unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(*rec.times.last().unwrap(), 0.2);
    }

    #[test]
    fn characteristic_of_constant_flow() {
        let g = grid(32);
        let u = PeriodicField::constant(&g, 0.3);
        let p = ModelParams::from_initial(&u, 2.0).unwrap();
        let rec = evolve(&u, &p, &config(32, 1.0)).unwrap();
        let path = characteristics(&rec, 0.25).unwrap();
        for pt in &path.points {
            assert!((pt.q - (0.25 + 0.3 * pt.t)).abs() < 1e-12);
            assert!((pt.qx - 1.0).abs() < 1e-12);
        }
        let res = local_conservation_residual(&rec, 0.25).unwrap();
        assert!(res.iter().all(|(_, r)| *r < 1e-12));
    }
}
