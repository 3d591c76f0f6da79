//! Time steppers for the geodesic flow on T*M.
//!
//! Two symplectic fixed-step collocation schemes (implicit midpoint, order
//! 2, and the two-stage Gauss-Legendre method, order 4) plus an adaptive
//! Dormand-Prince 5(4) pair for accuracy studies. The implicit stages are
//! solved by fixed-point iteration, which converges for the step sizes used
//! here (h times the local Lipschitz constant stays well below 1).

use crate::error::{Error, Result};

pub type State = [f64; 6];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    ImplicitMidpoint { step: f64 },
    GaussLegendre4 { step: f64 },
    AdaptiveRk54 { tol: f64 },
}

impl Integrator {
    /// Fixed-step symplectic default used by the conservation studies.
    pub fn default_symplectic() -> Self {
        Integrator::GaussLegendre4 { step: 2e-3 }
    }

    /// Adaptive default used by accuracy studies and shooting.
    pub fn default_adaptive() -> Self {
        Integrator::AdaptiveRk54 { tol: 1e-12 }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            Integrator::ImplicitMidpoint { step } | Integrator::GaussLegendre4 { step } => *step,
            Integrator::AdaptiveRk54 { tol } => *tol,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_step: f64,
}

fn axpy(z: &State, h: f64, k: &State) -> State {
    let mut out = *z;
    for i in 0..6 {
        out[i] += h * k[i];
    }
    out
}

const FP_MAX_ITERS: usize = 200;
const FP_TOL: f64 = 5e-16;

/// One implicit-midpoint step: z' = z + h f((z + z')/2).
fn midpoint_step<F>(f: &mut F, t: f64, z: &State, h: f64) -> Result<State>
where
    F: FnMut(&State) -> Result<State>,
{
    let mut k = f(z)?;
    let mut residual = f64::INFINITY;
    let mut prev = f64::INFINITY;
    for _ in 0..FP_MAX_ITERS {
        let mid = axpy(z, 0.5 * h, &k);
        let k_new = f(&mid)?;
        residual = (0..6).map(|i| (k_new[i] - k[i]).abs()).fold(0.0, f64::max);
        let scale = 1.0 + (0..6).map(|i| k_new[i].abs()).fold(0.0, f64::max);
        k = k_new;
        // converged, or bouncing on the roundoff floor
        if residual <= FP_TOL * scale || (residual >= 0.5 * prev && residual <= 1e-12 * scale) {
            return Ok(axpy(z, h, &k));
        }
        prev = residual;
    }
    Err(Error::ImplicitSolverStalled { t, residual })
}

/// One two-stage Gauss-Legendre step (order 4).
fn gauss4_step<F>(f: &mut F, t: f64, z: &State, h: f64) -> Result<State>
where
    F: FnMut(&State) -> Result<State>,
{
    let s3 = 3.0_f64.sqrt();
    let a11 = 0.25;
    let a12 = 0.25 - s3 / 6.0;
    let a21 = 0.25 + s3 / 6.0;
    let a22 = 0.25;

    let k0 = f(z)?;
    let mut k1 = k0;
    let mut k2 = k0;
    let mut residual = f64::INFINITY;
    let mut prev = f64::INFINITY;
    for _ in 0..FP_MAX_ITERS {
        let z1 = {
            let mut v = *z;
            for i in 0..6 {
                v[i] += h * (a11 * k1[i] + a12 * k2[i]);
            }
            v
        };
        let z2 = {
            let mut v = *z;
            for i in 0..6 {
                v[i] += h * (a21 * k1[i] + a22 * k2[i]);
            }
            v
        };
        let n1 = f(&z1)?;
        let n2 = f(&z2)?;
        residual = (0..6)
            .map(|i| (n1[i] - k1[i]).abs().max((n2[i] - k2[i]).abs()))
            .fold(0.0, f64::max);
        let scale = 1.0
            + (0..6)
                .map(|i| n1[i].abs().max(n2[i].abs()))
                .fold(0.0, f64::max);
        k1 = n1;
        k2 = n2;
        if residual <= FP_TOL * scale || (residual >= 0.5 * prev && residual <= 1e-12 * scale) {
            let mut out = *z;
            for i in 0..6 {
                out[i] += 0.5 * h * (k1[i] + k2[i]);
            }
            return Ok(out);
        }
        prev = residual;
    }
    Err(Error::ImplicitSolverStalled { t, residual })
}

// Dormand-Prince 5(4) tableau. The abscissae are kept for reference even
// though the geodesic field is autonomous.
#[allow(dead_code)]
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
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
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct DpStep {
    z_new: State,
    err: f64,
}

fn dp54_attempt<F>(f: &mut F, z: &State, h: f64, tol: f64, k0: &State) -> Result<DpStep>
where
    F: FnMut(&State) -> Result<State>,
{
    let mut k = [[0.0; 6]; 7];
    k[0] = *k0;
    for s in 1..7 {
        let mut zs = *z;
        for i in 0..6 {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += DP_A[s][j] * kj[i];
            }
            zs[i] += h * acc;
        }
        k[s] = f(&zs)?;
    }
    let mut z5 = *z;
    let mut z4 = *z;
    for i in 0..6 {
        let mut acc5 = 0.0;
        let mut acc4 = 0.0;
        for s in 0..7 {
            acc5 += DP_B5[s] * k[s][i];
            acc4 += DP_B4[s] * k[s][i];
        }
        z5[i] += h * acc5;
        z4[i] += h * acc4;
    }
    let mut err: f64 = 0.0;
    for i in 0..6 {
        let scale = tol + tol * z[i].abs().max(z5[i].abs());
        err += ((z5[i] - z4[i]) / scale).powi(2);
    }
    Ok(DpStep { z_new: z5, err: (err / 6.0).sqrt() })
}

/// Integrate from `t0` to `t1` (t1 > t0), returning the end state and
/// accumulating step statistics. `f` is the vector field.
pub fn advance<F>(
    f: &mut F,
    scheme: Integrator,
    t0: f64,
    t1: f64,
    z0: &State,
    stats: &mut StepStats,
) -> Result<State>
where
    F: FnMut(&State) -> Result<State>,
{
    debug_assert!(t1 > t0);
    match scheme {
        Integrator::ImplicitMidpoint { step } | Integrator::GaussLegendre4 { step } => {
            if !(step > 0.0) {
                return Err(Error::InvalidArgument {
                    name: "step",
                    reason: format!("step must be positive, got {step}"),
                });
            }
            let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
            let h = (t1 - t0) / n as f64;
            let mut z = *z0;
            let mut t = t0;
            for _ in 0..n {
                z = match scheme {
                    Integrator::ImplicitMidpoint { .. } => midpoint_step(f, t, &z, h)?,
                    _ => gauss4_step(f, t, &z, h)?,
                };
                t += h;
                stats.steps += 1;
                stats.max_step = stats.max_step.max(h);
            }
            Ok(z)
        }
        Integrator::AdaptiveRk54 { tol } => {
            if !(tol > 0.0) {
                return Err(Error::InvalidArgument {
                    name: "tol",
                    reason: format!("tolerance must be positive, got {tol}"),
                });
            }
            let mut z = *z0;
            let mut t = t0;
            let span = t1 - t0;
            let mut h = (span / 100.0).min(1e-2).max(1e-8);
            let h_min = span * 1e-15;
            let mut k0 = f(&z)?;
            while t < t1 {
                if h < h_min {
                    return Err(Error::StepUnderflow {
                        t,
                        reason: "adaptive step fell below the representable minimum",
                    });
                }
                let clipped = h.min(t1 - t);
                let attempt = dp54_attempt(f, &z, clipped, tol, &k0)?;
                if attempt.err <= 1.0 {
                    t += clipped;
                    z = attempt.z_new;
                    k0 = f(&z)?;
                    stats.steps += 1;
                    stats.max_step = stats.max_step.max(clipped);
                    let grow = 0.9 * attempt.err.max(1e-10).powf(-0.2);
                    h = clipped * grow.clamp(0.2, 5.0);
                } else {
                    stats.rejected += 1;
                    h = clipped * (0.9 * attempt.err.powf(-0.2)).clamp(0.1, 0.9);
                }
            }
            Ok(z)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // harmonic oscillator q'' = -q as a 6D field on the first two slots
    fn osc(z: &State) -> Result<State> {
        Ok([z[1], -z[0], 0.0, 0.0, 0.0, 0.0])
    }

    fn endpoint_error(scheme: Integrator, t1: f64) -> f64 {
        let mut stats = StepStats::default();
        let z = advance(&mut osc, scheme, 0.0, t1, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &mut stats)
            .unwrap();
        ((z[0] - t1.cos()).powi(2) + (z[1] + t1.sin()).powi(2)).sqrt()
    }

    #[test]
    fn midpoint_is_second_order() {
        let e1 = endpoint_error(Integrator::ImplicitMidpoint { step: 0.02 }, 10.0);
        let e2 = endpoint_error(Integrator::ImplicitMidpoint { step: 0.01 }, 10.0);
        assert!(e1 / e2 > 3.4, "ratio {}", e1 / e2);
    }

    #[test]
    fn gauss4_is_fourth_order() {
        let e1 = endpoint_error(Integrator::GaussLegendre4 { step: 0.08 }, 10.0);
        let e2 = endpoint_error(Integrator::GaussLegendre4 { step: 0.04 }, 10.0);
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn adaptive_meets_tolerance() {
        let e = endpoint_error(Integrator::AdaptiveRk54 { tol: 1e-12 }, 10.0);
        assert!(e < 1e-9, "error {e}");
    }

    #[test]
    fn adaptive_tightening_tolerance_reduces_error() {
        let e1 = endpoint_error(Integrator::AdaptiveRk54 { tol: 1e-8 }, 10.0);
        let e2 = endpoint_error(Integrator::AdaptiveRk54 { tol: 1e-10 }, 10.0);
        assert!(e2 < e1, "{e1} vs {e2}");
    }
}
