//! Dormand–Prince 5(4) explicit Runge–Kutta with embedded error control.

use thiserror::Error;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e}, accepted {accepted}, rejected {rejected})")]
    StepSizeUnderflow {
        t: f64,
        h: f64,
        accepted: usize,
        rejected: usize,
    },
    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),
    #[error("right-hand side failed at t = {t}: {reason}")]
    RhsFailure { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Largest scaled local error estimate among accepted steps (≤ 1).
    pub max_error_estimate: f64,
}

/// Accepted-step output of [`integrate`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1`, recording every
/// accepted step. The right-hand side writes into its output slice and may
/// fail, which aborts integration.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: OdeOptions,
) -> Result<Solution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), String>,
{
    let n = y0.len();
    let span = t1 - t0;
    assert!(span > 0.0, "integration span must be positive");

    let mut stats = StepStats::default();
    let mut call = |t: f64, y: &[f64], out: &mut [f64], stats: &mut StepStats| {
        stats.rhs_evaluations += 1;
        rhs(t, y, out).map_err(|reason| OdeError::RhsFailure { t, reason })
    };

    let mut k = vec![vec![0.0; n]; 7];
    let mut y = y0.to_vec();
    let mut t = t0;
    call(t, &y, &mut k[0], &mut stats)?;

    let mut h = opts.initial_step.unwrap_or_else(|| {
        let norm = |v: &[f64]| {
            (v.iter()
                .zip(&y)
                .map(|(vi, yi)| (vi / (opts.atol + opts.rtol * yi.abs())).powi(2))
                .sum::<f64>()
                / n as f64)
                .sqrt()
        };
        let (d0, d1) = (norm(&y), norm(&k[0]));
        let guess = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        guess.min(span).min(opts.max_step)
    });

    let mut times = vec![t];
    let mut states = vec![y.clone()];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(OdeError::StepSizeUnderflow {
                t,
                h,
                accepted: stats.accepted,
                rejected: stats.rejected,
            });
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            call(t + C[s] * h, &stage, &mut k[s], &mut stats)?;
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }

        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (h * e / sc).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            // first-same-as-last
            k.swap(0, 6);
            times.push(t);
            states.push(y.clone());
            stats.accepted += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(opts.max_step);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }

    Ok(Solution {
        times,
        states,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = integrate(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            5.0,
            &[1.0],
            OdeOptions::default(),
        )
        .unwrap();
        assert_eq!(*sol.times.last().unwrap(), 5.0);
        let y = sol.states.last().unwrap()[0];
        assert!((y - (-5f64).exp()).abs() < 1e-10);
        assert!(sol.stats.max_error_estimate <= 1.0);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            20.0,
            &[1.0, 0.0],
            OdeOptions::default(),
        )
        .unwrap();
        let y = sol.states.last().unwrap();
        assert!((y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((y[1] + 20f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos t, y(0) = 0
        let sol = integrate(
            |t, _, dy| {
                dy[0] = t.cos();
                Ok(())
            },
            0.0,
            3.0,
            &[0.0],
            OdeOptions::default(),
        )
        .unwrap();
        assert!((sol.states.last().unwrap()[0] - 3f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn rhs_failure_propagates() {
        let err = integrate(
            |t, _, dy| {
                if t > 0.5 {
                    return Err("boom".into());
                }
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            1.0,
            &[0.0],
            OdeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::RhsFailure { .. }));
    }
}
