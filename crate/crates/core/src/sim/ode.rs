//! Dormand–Prince 5(4) with FSAL and step clipping onto requested output times.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest permitted norm of the first `watched` state components.
    pub divergence_bound: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, divergence_bound: 1e6, max_steps: 5_000_000 }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// fifth- minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo(y: &DVector<f64>, h: f64, ks: &[DVector<f64>], coef: &[f64]) -> DVector<f64> {
    let mut out = y.clone();
    for (k, c) in ks.iter().zip(coef) {
        if *c != 0.0 {
            out.axpy(h * c, k, 1.0);
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at each
/// time in `outputs` (sorted, all ≥ `t0`). Steps are shortened so every
/// output time is hit exactly.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: DVector<f64>,
    outputs: &[f64],
    watched: usize,
    opts: &OdeOptions,
) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = outputs.last().map_or(0.0, |last| last - t0).max(1e-3);
    let mut h = (span * 1e-3).max(1e-6);
    let mut out = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;

    for &target in outputs {
        if target < t {
            return Err(Error::Integration { t, reason: format!("output time {target} precedes {t}") });
        }
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integration { t, reason: "step budget exhausted".into() });
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let hs = if clipped { remaining } else { h };
            if hs < 1e-13 * t.abs().max(1.0) && !clipped {
                return Err(Error::Integration { t, reason: format!("step size collapsed to {hs:e}") });
            }
            let mut ks = vec![k1.clone()];
            for (stage, coef) in [&A2[..], &A3[..], &A4[..], &A5[..], &A6[..]].iter().enumerate() {
                let yi = combo(&y, hs, &ks, coef);
                ks.push(f(t + C[stage + 1] * hs, &yi));
            }
            let y_new = combo(&y, hs, &ks, &B5);
            let k7 = f(t + hs, &y_new);
            ks.push(k7);

            let mut err = 0.0;
            for i in 0..y.len() {
                let mut e = 0.0;
                for (k, c) in ks.iter().zip(E) {
                    e += c * k[i];
                }
                let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err += (hs * e / scale).powi(2);
            }
            let err = (err / y.len().max(1) as f64).sqrt();
            if !err.is_finite() {
                h = hs * 0.2;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if clipped { target } else { t + hs };
                y = y_new;
                k1 = ks.pop().expect("seven stages");
                let norm = y.rows(0, watched).norm();
                if !norm.is_finite() || norm > opts.divergence_bound {
                    return Err(Error::Integration {
                        t,
                        reason: format!("state norm {norm:e} exceeds divergence bound {:e}", opts.divergence_bound),
                    });
                }
                if !clipped {
                    h = hs * factor;
                }
            } else {
                h = hs * factor;
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_outputs() {
        let res = integrate(|_, y| -y, 0.0, DVector::from_element(1, 1.0), &[0.5, 1.0, 3.0], 1, &OdeOptions::default())
            .unwrap();
        for (y, t) in res.iter().zip([0.5f64, 1.0, 3.0]) {
            assert!((y[0] - (-t).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn forced_oscillator() {
        // x' = -x + cos t, x(0) = 0  =>  x = (cos t + sin t - e^{-t}) / 2
        let f = |t: f64, y: &DVector<f64>| DVector::from_element(1, -y[0] + t.cos());
        let ts: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let res = integrate(f, 0.0, DVector::zeros(1), &ts, 1, &OdeOptions::default()).unwrap();
        for (y, t) in res.iter().zip(&ts) {
            let want = (t.cos() + t.sin() - (-t).exp()) / 2.0;
            assert!((y[0] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let f = |_: f64, y: &DVector<f64>| y.map(|v| v * v);
        let err = integrate(f, 0.0, DVector::from_element(1, 1.0), &[2.0], 1, &OdeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }
}
