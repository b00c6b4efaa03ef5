//! Dormand-Prince 5(4) embedded pair.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) const SAFETY: f64 = 0.9;
pub(crate) const MIN_FACTOR: f64 = 0.2;
pub(crate) const MAX_FACTOR: f64 = 5.0;

/// Outcome of one attempted step.
pub(crate) struct Trial {
    pub y: Vec<f64>,
    /// Derivative at the new point (first stage of the next step).
    pub dy: Vec<f64>,
    pub err: Vec<f64>,
}

/// Attempts a step of size `h` from `(t, y)` with `dy = f(t, y)` already known.
/// `f` returns `None` on a non-finite evaluation, which aborts the trial.
pub(crate) fn trial<F>(f: &mut F, t: f64, y: &[f64], dy: &[f64], h: f64) -> Option<Trial>
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
{
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(dy.to_vec());
    let mut stage = vec![0.0; n];
    for s in 1..7 {
        for (i, out) in stage.iter_mut().enumerate() {
            let incr: f64 = A[s].iter().zip(&k).map(|(a, ks)| a * ks[i]).sum();
            *out = y[i] + h * incr;
        }
        let ks = f(t + C[s] * h, &stage)?;
        if ks.iter().any(|v| !v.is_finite()) {
            return None;
        }
        k.push(ks);
    }
    // The last stage point is the fifth-order solution (FSAL).
    let err = (0..n)
        .map(|i| h * E.iter().zip(&k).map(|(e, ks)| e * ks[i]).sum::<f64>())
        .collect();
    let dy_new = k.pop().expect("seven stages");
    Some(Trial {
        y: stage,
        dy: dy_new,
        err,
    })
}

/// Scaled RMS error norm; a step is acceptable when this is at most 1.
pub(crate) fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], rel_tol: f64, abs_tol: f64) -> f64 {
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let scale = abs_tol + rel_tol * a.abs().max(b.abs());
            (e / scale).powi(2)
        })
        .sum();
    (sum / y.len() as f64).sqrt()
}

pub(crate) fn step_factor(norm: f64) -> f64 {
    if norm == 0.0 {
        MAX_FACTOR
    } else {
        (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    }
}

/// Integrates a small system from `t0` to `t1` exactly landing on `t1`.
/// Returns the final state and the last accepted step size.
pub(crate) fn integrate<F>(
    f: &mut F,
    t0: f64,
    y0: Vec<f64>,
    t1: f64,
    h0: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Option<(Vec<f64>, f64)>
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
{
    let mut t = t0;
    let mut y = y0;
    let mut dy = f(t, &y)?;
    let mut h = h0.min(t1 - t0);
    let mut last = h;
    let span = (t1 - t0).abs().max(f64::MIN_POSITIVE);
    while t < t1 {
        let remaining = t1 - t;
        let landing = h >= remaining;
        let step = if landing { remaining } else { h };
        if step <= 1e-14 * span {
            return None;
        }
        match trial(f, t, &y, &dy, step) {
            Some(tr) => {
                let norm = error_norm(&y, &tr.y, &tr.err, rel_tol, abs_tol);
                if norm <= 1.0 {
                    t = if landing { t1 } else { t + step };
                    y = tr.y;
                    dy = tr.dy;
                    last = step;
                    h = step * step_factor(norm);
                } else {
                    h = step * step_factor(norm).min(1.0);
                }
            }
            None => h = step * MIN_FACTOR,
        }
    }
    Some((y, last))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_consistent() {
        for s in 1..7 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-14, "row {s}");
        }
        assert!(E.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn exponential_decay_to_tolerance() {
        let mut f = |_t: f64, y: &[f64]| Some(vec![-y[0], y[0]]);
        let (y, _) = integrate(&mut f, 0.0, vec![1.0, 0.0], 2.0, 0.1, 1e-12, 1e-14).unwrap();
        assert!((y[0] - (-2f64).exp()).abs() < 1e-11);
        assert!((y[1] - (1.0 - (-2f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn fifth_order_convergence() {
        // Local error of the propagated solution scales like h^6 on y' = y cos t.
        let exact = |t: f64| t.sin().exp();
        let mut f = |t: f64, y: &[f64]| Some(vec![y[0] * t.cos()]);
        let t0 = 0.3f64;
        let y0 = exact(t0);
        let dy0 = [y0 * t0.cos()];
        let mut err = |h: f64| (trial(&mut f, t0, &[y0], &dy0, h).unwrap().y[0] - exact(t0 + h)).abs();
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 40.0 && ratio < 90.0, "ratio {ratio}");
    }

    #[test]
    fn nonfinite_stage_aborts_trial() {
        let mut g = |_t: f64, _y: &[f64]| Some(vec![f64::NAN]);
        assert!(trial(&mut g, 0.0, &[0.0], &[0.0], 0.1).is_none());
    }
}
