//! Wave-breaking criteria from initial data, and breakdown-time / rate estimates from runs.
//!
//! Each criterion returns whether its hypothesis holds for the data and, when it does,
//! an explicit upper bound on the maximal existence time `T`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{conserved_mu_ch, conserved_mu_dp, is_lambda, lyapunov_v};
use crate::error::{Error, Result};
use crate::evolution::{evolve, ModelParams, SolutionRecord, SolverConfig, Termination};
use crate::field::PeriodicField;

/// Hypothesis outcome and optional bound on `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub holds: bool,
    pub t_bound: Option<f64>,
}

impl Criterion {
    const FALSE: Criterion = Criterion {
        holds: false,
        t_bound: None,
    };

    fn bounded(t: f64) -> Self {
        Self {
            holds: true,
            t_bound: Some(t),
        }
    }
}

/// Minimizes `f` over the open interval `(lo, hi)` by golden-section search in `ln(alpha)`,
/// keeping a relative margin of `1e-9` from both ends where the objective diverges.
///
/// The returned value never exceeds `f` at the interval midpoint.
pub fn minimize_on_interval(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    debug_assert!(0.0 < lo && lo < hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = (lo * (1.0 + 1e-9)).ln();
    let mut b = (hi * (1.0 - 1e-9)).ln();
    let g = |s: f64| f(s.exp());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    let (mut arg, mut val) = if fc < fd { (c.exp(), fc) } else { (d.exp(), fd) };
    let mid = 0.5 * (lo + hi);
    let fmid = f(mid);
    if !(val <= fmid) {
        log::warn!("golden-section search ended above the midpoint value ({val} > {fmid})");
        arg = mid;
        val = fmid;
    }
    (arg, val)
}

/// `6 / (1 - 6 a |mu0|) + 4 pi^2 a (1 + |I3|) / (6 pi^2 a mu1^4 - 3 |mu0| mu1^2)`.
pub fn ch_energy_objective(alpha: f64, mu0: f64, mu1: f64, i3: f64) -> f64 {
    let m = mu0.abs();
    let p2 = PI * PI;
    6.0 / (1.0 - 6.0 * alpha * m)
        + 4.0 * p2 * alpha * (1.0 + i3.abs()) / (6.0 * p2 * alpha * mu1.powi(4) - 3.0 * m * mu1 * mu1)
}

/// lambda = 2 criterion: `(sqrt 3 / pi) |mu0| < mu1`.
pub fn ch_energy_criterion(mu0: f64, mu1: f64, i3: f64) -> Result<Criterion> {
    if !(mu1 > 0.0) {
        return Err(Error::InvalidArgument(format!("mu1 must be positive, got {mu1}")));
    }
    if 3f64.sqrt() / PI * mu0.abs() >= mu1 {
        return Ok(Criterion::FALSE);
    }
    if mu0 == 0.0 {
        // The admissible interval is (0, inf) and the objective does not depend on alpha.
        return Ok(Criterion::bounded(6.0 + 2.0 * (1.0 + i3.abs()) / (3.0 * mu1.powi(4))));
    }
    let m = mu0.abs();
    let lo = m / (2.0 * PI * PI * mu1 * mu1);
    let hi = 1.0 / (6.0 * m);
    let (_, t) = minimize_on_interval(|a| ch_energy_objective(a, mu0, mu1, i3), lo, hi);
    Ok(Criterion::bounded(t))
}

/// `K = sqrt(2 mu1 ((sqrt 3 / 3) |mu0| - mu1 / 2))`, if real.
pub fn steep_slope_k(mu0: f64, mu1: f64) -> Option<f64> {
    let k2 = 2.0 * mu1 * (3f64.sqrt() / 3.0 * mu0.abs() - 0.5 * mu1);
    (k2 >= 0.0).then(|| k2.sqrt())
}

/// lambda = 2 criterion for large mean: `(sqrt 3 / pi) |mu0| >= mu1` and `inf u0_x < -K`.
pub fn ch_steep_slope_criterion(mu0: f64, mu1: f64, inf_u0x: f64) -> Criterion {
    if 3f64.sqrt() / PI * mu0.abs() < mu1 {
        return Criterion::FALSE;
    }
    match steep_slope_k(mu0, mu1) {
        Some(k) if inf_u0x < -k => Criterion::bounded(-2.0 / (inf_u0x + (-k * inf_u0x).sqrt())),
        _ => Criterion::FALSE,
    }
}

/// lambda = 2 criterion: `mu1^4 + 4 mu0^2 mu1^2 > 8 mu0 H2`.
pub fn ch_hamiltonian_criterion(mu0: f64, mu1: f64, h2: f64, i3: f64) -> Result<Criterion> {
    if !(mu1 > 0.0) {
        return Err(Error::InvalidArgument(format!("mu1 must be positive, got {mu1}")));
    }
    let (m2, n2) = (mu0 * mu0, mu1 * mu1);
    if n2 * n2 + 4.0 * m2 * n2 <= 8.0 * mu0 * h2 {
        return Ok(Criterion::FALSE);
    }
    let denom = 1.5 * n2 * n2 + 6.0 * m2 * n2 - 12.0 * mu0 * h2;
    Ok(Criterion::bounded(6.0 + (1.0 + i3.abs()) / denom))
}

/// `6 / (4 - 9 a |mu0|) + 2 a (1 + |I3|) / (72 pi^2 a mu0^2 (mu2^2 - mu0^2) - 9 |mu0| mu2^2)`.
pub fn dp_energy_objective(alpha: f64, mu0: f64, mu2: f64, i3: f64) -> f64 {
    let m = mu0.abs();
    let gap = mu2 * mu2 - mu0 * mu0;
    6.0 / (4.0 - 9.0 * alpha * m)
        + 2.0 * alpha * (1.0 + i3.abs())
            / (72.0 * PI * PI * alpha * mu0 * mu0 * gap - 9.0 * m * mu2 * mu2)
}

/// `sqrt((32 pi^2 - 9) / (32 pi^2))`.
pub fn dp_energy_ratio() -> f64 {
    let p = 32.0 * PI * PI;
    ((p - 9.0) / p).sqrt()
}

/// lambda = 3 criterion: `|mu0| < sqrt((32 pi^2 - 9)/(32 pi^2)) mu2`.
pub fn dp_energy_criterion(mu0: f64, mu2: f64, i3: f64) -> Criterion {
    if mu0.abs() >= dp_energy_ratio() * mu2 {
        return Criterion::FALSE;
    }
    if mu0 == 0.0 {
        return Criterion {
            holds: true,
            t_bound: None,
        };
    }
    let m = mu0.abs();
    let lo = mu2 * mu2 / (8.0 * PI * PI * m * (mu2 * mu2 - mu0 * mu0));
    let hi = 4.0 / (9.0 * m);
    let (_, t) = minimize_on_interval(|a| dp_energy_objective(a, mu0, mu2, i3), lo, hi);
    Criterion::bounded(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignCriterion {
    pub holds: bool,
    pub t_bound: Option<f64>,
    /// Grid point used for the bound.
    pub xi0: Option<f64>,
}

/// lambda = 3 criterion: `mu0 Ht2(u0) <= 0`.
pub fn dp_sign_criterion(u0: &PeriodicField) -> Result<SignCriterion> {
    let mu0 = u0.mean();
    let (_, _, ht2) = conserved_mu_dp(u0)?;
    if mu0 * ht2 > 0.0 {
        return Ok(SignCriterion {
            holds: false,
            t_bound: None,
            xi0: None,
        });
    }
    if mu0 == 0.0 {
        return Ok(SignCriterion {
            holds: true,
            t_bound: None,
            xi0: None,
        });
    }
    let ux = u0.derivative(1)?;
    let best = u0
        .values()
        .iter()
        .zip(ux.values())
        .enumerate()
        .filter(|(_, (u, _))| mu0 * **u <= 0.0)
        .min_by(|a, b| a.1 .1.abs().total_cmp(&b.1 .1.abs()));
    let Some((j, (_, slope))) = best else {
        return Err(Error::Inconsistent(
            "no grid point with mu0 * u0 <= 0; the grid is too coarse".into(),
        ));
    };
    Ok(SignCriterion {
        holds: true,
        t_bound: Some(1.0 + (1.0 + slope.abs()) / (3.0 * mu0 * mu0)),
        xi0: Some(u0.grid().point(j)),
    })
}

/// Settings for fitting `-1 / min u_x` against `t` near breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Only rows with `min_ux <= w_gate` enter the fit.
    pub w_gate: f64,
    /// Only rows at least this well resolved enter the fit.
    pub min_resolvedness: f64,
    pub min_samples: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            w_gate: -50.0,
            min_resolvedness: 0.99,
            min_samples: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownFit {
    pub t_star: Option<f64>,
    pub rate_sigma: Option<f64>,
    pub samples: usize,
    pub note: Option<String>,
}

/// Least-squares fit of `y = -1 / w` against `t` with `w ~ -sigma / (T - t)`.
pub fn fit_hyperbola(times: &[f64], slopes: &[f64]) -> Option<(f64, f64)> {
    let n = times.len() as f64;
    if times.len() < 2 {
        return None;
    }
    let ys: Vec<f64> = slopes.iter().map(|w| -1.0 / w).collect();
    let tm = times.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in times.iter().zip(&ys) {
        sxy += (t - tm) * (y - ym);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return None;
    }
    let s = sxy / sxx;
    if !(s < 0.0) {
        return None;
    }
    let intercept = ym - s * tm;
    Some((-intercept / s, -1.0 / s))
}

/// Breakdown time and rate from the gated tail of a run.
pub fn estimate_breakdown(record: &SolutionRecord, fit: &FitConfig) -> BreakdownFit {
    let none = |samples, note: String| BreakdownFit {
        t_star: None,
        rate_sigma: None,
        samples,
        note: Some(note),
    };
    if !record.termination.is_breakdown() {
        return none(0, format!("run ended with {:?}, not a breakdown", record.termination));
    }
    let (times, slopes): (Vec<f64>, Vec<f64>) = record
        .diagnostics
        .iter()
        .filter(|r| r.min_ux <= fit.w_gate && r.resolvedness >= fit.min_resolvedness)
        .map(|r| (r.t, r.min_ux))
        .unzip();
    if times.len() < fit.min_samples {
        return none(
            times.len(),
            format!(
                "{} rows with min_ux <= {} and resolvedness >= {}; need {}",
                times.len(),
                fit.w_gate,
                fit.min_resolvedness,
                fit.min_samples
            ),
        );
    }
    match fit_hyperbola(&times, &slopes) {
        Some((t_star, sigma)) => BreakdownFit {
            t_star: Some(t_star),
            rate_sigma: Some(sigma),
            samples: times.len(),
            note: None,
        },
        None => none(times.len(), "-1/min_ux is not decreasing over the window".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremEntry {
    pub id: String,
    pub applicable: bool,
    pub hypothesis_holds: bool,
    pub t_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub termination: Termination,
    pub final_time: f64,
    pub t_star: Option<f64>,
    pub min_slope_final: f64,
    pub rate_sigma: Option<f64>,
    pub fit_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Observation {
    pub fn from_record(record: &SolutionRecord, fit: &FitConfig) -> Self {
        let f = estimate_breakdown(record, fit);
        Self {
            termination: record.termination,
            final_time: record.final_time,
            t_star: f.t_star,
            min_slope_final: record.diagnostics.last().map_or(f64::NAN, |r| r.min_ux),
            rate_sigma: f.rate_sigma,
            fit_samples: f.samples,
            note: f.note,
        }
    }

    /// Fitted breakdown time, or the last reached time when the fit is unavailable.
    pub fn breakdown_time(&self) -> Option<f64> {
        if !self.termination.is_breakdown() {
            return None;
        }
        Some(self.t_star.unwrap_or(self.final_time))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub params: ModelParams,
    pub theorems: Vec<TheoremEntry>,
    pub observed: Option<Observation>,
    /// Whether the observed breakdown time respects every applicable bound.
    pub consistency: Option<bool>,
}

/// Relative slack allowed when comparing an observed breakdown time with a bound.
pub const BOUND_SLACK: f64 = 1e-2;

impl BlowupReport {
    pub fn new(params: ModelParams, theorems: Vec<TheoremEntry>, observed: Option<Observation>) -> Self {
        // Without a breakdown, a run that outlives an applicable bound contradicts it too.
        let consistency = observed.as_ref().map(|o| {
            let t = o.breakdown_time().unwrap_or(o.final_time);
            theorems
                .iter()
                .filter(|e| e.applicable)
                .filter_map(|e| e.t_bound)
                .all(|b| t <= b * (1.0 + BOUND_SLACK))
        });
        Self {
            params,
            theorems,
            observed,
            consistency,
        }
    }

    pub fn entry(&self, id: &str) -> Option<&TheoremEntry> {
        self.theorems.iter().find(|e| e.id == id)
    }

    /// Smallest bound among applicable criteria whose hypothesis holds.
    pub fn best_bound(&self) -> Option<f64> {
        self.theorems
            .iter()
            .filter(|e| e.applicable)
            .filter_map(|e| e.t_bound)
            .reduce(f64::min)
    }
}

pub const CH_ENERGY: &str = "ch_energy";
pub const CH_STEEP_SLOPE: &str = "ch_steep_slope";
pub const CH_HAMILTONIAN: &str = "ch_hamiltonian";
pub const DP_ENERGY: &str = "dp_energy";
pub const DP_SIGN: &str = "dp_sign";

/// Every criterion evaluated on `u0`; those not meant for `lambda` are marked inapplicable.
pub fn theorem_entries(u0: &PeriodicField, lambda: f64) -> Result<Vec<TheoremEntry>> {
    let p = ModelParams::from_initial(u0, lambda)?;
    let i3 = lyapunov_v(u0)?;
    let inf_u0x = u0.derivative(1)?.min();
    let (_, _, h2) = conserved_mu_ch(u0)?;
    let ch = is_lambda(lambda, 2.0);
    let dp = is_lambda(lambda, 3.0);

    let entry = |id: &str, applicable: bool, c: Criterion, note: Option<String>| TheoremEntry {
        id: id.to_string(),
        applicable,
        hypothesis_holds: c.holds,
        t_bound: c.t_bound,
        note,
    };
    let flat = p.mu1 == 0.0;
    let flat_note = || Some("mu1 = 0: the datum is constant".to_string());
    let mut out = Vec::with_capacity(5);
    out.push(if flat {
        entry(CH_ENERGY, ch, Criterion::FALSE, flat_note())
    } else {
        let c = ch_energy_criterion(p.mu0, p.mu1, i3)?;
        let note = (c.holds && p.mu0 == 0.0).then(|| "zero mean: alpha ranges over (0, inf)".to_string());
        entry(CH_ENERGY, ch, c, note)
    });
    out.push(entry(
        CH_STEEP_SLOPE,
        ch,
        ch_steep_slope_criterion(p.mu0, p.mu1, inf_u0x),
        None,
    ));
    out.push(if flat {
        entry(CH_HAMILTONIAN, ch, Criterion::FALSE, flat_note())
    } else {
        entry(CH_HAMILTONIAN, ch, ch_hamiltonian_criterion(p.mu0, p.mu1, h2, i3)?, None)
    });
    let c = dp_energy_criterion(p.mu0, p.mu2, i3);
    let note = (c.holds && c.t_bound.is_none())
        .then(|| "zero mean: breakdown known without a quantitative bound".to_string());
    out.push(entry(DP_ENERGY, dp, c, note));
    let s = dp_sign_criterion(u0)?;
    let note = match (s.holds, s.xi0) {
        (true, Some(x)) => Some(format!("xi0 = {x}")),
        (true, None) => Some("zero mean: breakdown known without a quantitative bound".to_string()),
        _ => None,
    };
    out.push(TheoremEntry {
        id: DP_SIGN.to_string(),
        applicable: dp,
        hypothesis_holds: s.holds,
        t_bound: s.t_bound,
        note,
    });
    Ok(out)
}

/// Criteria for `u0`, plus an observed run when `config` is given.
pub fn evaluate_all(u0: &PeriodicField, lambda: f64, config: Option<&SolverConfig>) -> Result<BlowupReport> {
    evaluate_with_fit(u0, lambda, config, &FitConfig::default()).map(|(report, _)| report)
}

/// As [`evaluate_all`], also returning the run.
pub fn evaluate_with_fit(
    u0: &PeriodicField,
    lambda: f64,
    config: Option<&SolverConfig>,
    fit: &FitConfig,
) -> Result<(BlowupReport, Option<SolutionRecord>)> {
    let params = ModelParams::from_initial(u0, lambda)?;
    let theorems = theorem_entries(u0, lambda)?;
    let record = config.map(|c| evolve(u0, &params, c)).transpose()?;
    let observed = record.as_ref().map(|r| Observation::from_record(r, fit));
    Ok((BlowupReport::new(params, theorems, observed), record))
}
