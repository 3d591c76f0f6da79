//! Helix fits for high-momentum geodesics.
//!
//! A unit-speed geodesic with Reeb momentum ρ, |ρ| = h₀ large, stays close
//! to the helix
//!
//!   t ↦ Γ(s J₀ t / 2) + Re(w) X + Im(w) Y,   w(t) = J₀ e^{i(φ − s t / J₀)}
//!
//! where Γ is a Reeb orbit through an anchor Q₀, s = sign ρ, and the frame
//! is evaluated along Γ (constant for the models handled here). The fit
//! recovers J₀ = h₀⁻¹ + O(h₀⁻³) and a sup deviation of order J₀².

use super::GeodesicTrajectory;
use crate::contact::{ContactModel, ModelId};
use crate::error::{Error, Result};
use crate::util::solve_dense;
use serde::Serialize;

/// Result of fitting the helix model to a trajectory window.
#[derive(Debug, Clone, Serialize)]
pub struct SpiralFit {
    /// Transverse momentum scale |ρ| of the datum.
    pub h0: f64,
    /// Fitted inverse rotation rate (equals the helix radius).
    pub j0_estimate: f64,
    /// Fitted anchor of the Reeb orbit the geodesic spirals along.
    pub anchor: [f64; 3],
    /// Sup-norm distance between the geodesic and the fitted helix.
    pub deviation: f64,
    /// Time window used for the fit.
    pub window: (f64, f64),
    /// Sign of the Reeb momentum (rotation direction).
    pub rotation_sign: f64,
    /// Fitted transverse phase at t = 0.
    pub phase: f64,
}

/// Default lower bound on h₀ below which the asymptotic regime is not
/// trusted.
pub const H0_MIN_DEFAULT: f64 = 5.0;

fn helix_position(
    model: &ContactModel,
    reeb: [f64; 3],
    params: &[f64; 5],
    sign: f64,
    t: f64,
) -> [f64; 3] {
    let [qx, qy, qz, j, phi] = *params;
    let anchor = [qx, qy, qz];
    let (fx, fy) = model.frame(anchor);
    let tau = sign * j * t / 2.0;
    let theta = phi - sign * t / j;
    let a = j * theta.cos();
    let b = j * theta.sin();
    [
        anchor[0] + tau * reeb[0] + a * fx[0] + b * fy[0],
        anchor[1] + tau * reeb[1] + a * fx[1] + b * fy[1],
        anchor[2] + tau * reeb[2] + a * fx[2] + b * fy[2],
    ]
}

/// Least-squares fit of the helix model over the window t ∈ [0, c·h₀].
///
/// Preconditions: unit-speed trajectory (g* = 1), |ρ| ≥ `h0_min`, and a
/// model whose frame is invariant along the Reeb flow (Heisenberg or a
/// constant-b magnetic torus). Fails if the fitted deviation exceeds
/// 10·J₀².
pub fn spiral_fit(
    traj: &GeodesicTrajectory,
    model: &ContactModel,
    window_c: f64,
    h0_min: f64,
) -> Result<SpiralFit> {
    match model.id {
        ModelId::Heisenberg | ModelId::MagneticTorus { .. } => {}
        _ => {
            return Err(Error::Unsupported {
                op: "spiral_fit",
                model: model.name(),
                reason: "parallel transport along Reeb is only frame-constant for the compact models",
            })
        }
    }
    let p0 = &traj.samples[0].1;
    let g = model.cometric(p0)?;
    if (g - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument {
            name: "traj",
            reason: format!("helix fit expects a unit-speed trajectory, got g* = {g}"),
        });
    }
    let rho = model.reeb_momentum(p0)?;
    let h0 = rho.abs();
    if h0 < h0_min {
        return Err(Error::InvalidArgument {
            name: "traj",
            reason: format!(
                "transverse momentum h0 = {h0} below the asymptotic threshold {h0_min} \
                 (pure Reeb-limit data are rejected)"
            ),
        });
    }
    let sign = rho.signum();
    let t_max = window_c * h0;
    let pts: Vec<(f64, [f64; 3])> = traj
        .samples
        .iter()
        .filter(|(t, _)| *t <= t_max + 1e-12)
        .map(|(t, pt)| (*t, pt.position))
        .collect();
    if pts.len() < 32 {
        return Err(Error::InvalidArgument {
            name: "traj",
            reason: format!(
                "only {} samples inside the window [0, {t_max}]; sample the trajectory densely",
                pts.len()
            ),
        });
    }

    let reeb = model.reeb_field(p0.position)?;
    let (fx, fy) = model.frame(p0.position);
    let u = ContactModel::pair(p0.momentum, fx);
    let v = ContactModel::pair(p0.momentum, fy);

    // initial guess from the exact relations of the flat model: the
    // transverse displacement is (i/ρ)(u + iv), the anchor sits at the
    // rotation center.
    let disp_re = -v / rho;
    let disp_im = u / rho;
    let mut params = [
        p0.position[0] - disp_re,
        p0.position[1] - disp_im,
        0.0,
        1.0 / h0,
        disp_im.atan2(disp_re),
    ];
    // anchor z chosen so the helix passes through the initial position
    let (fx_a, fy_a) = model.frame([params[0], params[1], 0.0]);
    params[2] = p0.position[2] - disp_re * fx_a[2] - disp_im * fy_a[2];

    // Gauss-Newton on (Qx, Qy, Qz, J, φ) with a finite-difference Jacobian
    let n = pts.len();
    let residual = |prm: &[f64; 5]| -> Vec<f64> {
        let mut r = Vec::with_capacity(3 * n);
        for (t, pos) in &pts {
            let h = helix_position(model, reeb, prm, sign, *t);
            r.push(pos[0] - h[0]);
            r.push(pos[1] - h[1]);
            r.push(pos[2] - h[2]);
        }
        r
    };
    let mut res = residual(&params);
    let mut res_norm2: f64 = res.iter().map(|x| x * x).sum();
    for _ in 0..60 {
        let steps = [1e-7, 1e-7, 1e-7, 1e-9 * params[3].max(1e-6), 1e-7];
        let mut jac: Vec<Vec<f64>> = Vec::with_capacity(5);
        for p in 0..5 {
            let mut plus = params;
            plus[p] += steps[p];
            let mut minus = params;
            minus[p] -= steps[p];
            let rp = residual(&plus);
            let rm = residual(&minus);
            jac.push(
                rp.iter()
                    .zip(&rm)
                    .map(|(a, b)| (a - b) / (2.0 * steps[p]))
                    .collect(),
            );
        }
        // normal equations J^T J dx = -J^T r
        let mut jtj = vec![vec![0.0; 5]; 5];
        let mut jtr = vec![0.0; 5];
        for p in 0..5 {
            for q in p..5 {
                let s: f64 = jac[p].iter().zip(&jac[q]).map(|(a, b)| a * b).sum();
                jtj[p][q] = s;
                jtj[q][p] = s;
            }
            jtr[p] = -jac[p].iter().zip(&res).map(|(a, b)| a * b).sum::<f64>();
        }
        // mild Levenberg damping keeps the step sane far from the optimum
        for (p, row) in jtj.iter_mut().enumerate() {
            row[p] *= 1.0 + 1e-12;
        }
        let Some(dx) = solve_dense(&jtj, &jtr) else { break };
        let mut next = params;
        for p in 0..5 {
            next[p] += dx[p];
        }
        let next_res = residual(&next);
        let next_norm2: f64 = next_res.iter().map(|x| x * x).sum();
        if next_norm2 >= res_norm2 {
            break;
        }
        let rel_drop = (res_norm2 - next_norm2) / res_norm2.max(1e-300);
        params = next;
        res = next_res;
        res_norm2 = next_norm2;
        if rel_drop < 1e-14 {
            break;
        }
    }

    let mut deviation: f64 = 0.0;
    for chunk in res.chunks_exact(3) {
        let d = (chunk[0] * chunk[0] + chunk[1] * chunk[1] + chunk[2] * chunk[2]).sqrt();
        deviation = deviation.max(d);
    }
    let j0 = params[3];
    if !(j0 > 0.0) || deviation > 10.0 * j0 * j0 {
        return Err(Error::Fit(format!(
            "helix deviation {deviation:.3e} exceeds 10 J0^2 = {:.3e}; \
             h0 may be below the asymptotic regime",
            10.0 * j0 * j0
        )));
    }
    Ok(SpiralFit {
        h0,
        j0_estimate: j0,
        anchor: [params[0], params[1], params[2]],
        deviation,
        window: (0.0, t_max),
        rotation_sign: sign,
        phase: params[4],
    })
}

/// Integrate a unit-speed geodesic with Reeb momentum `rho` from `q0` and
/// fit the helix model on the window [0, c·|ρ|].
pub fn spiral_experiment(
    model: &ContactModel,
    q0: [f64; 3],
    phase: f64,
    rho: f64,
    window_c: f64,
    samples_per_loop: usize,
) -> Result<(GeodesicTrajectory, SpiralFit)> {
    let h0 = rho.abs();
    let p0 = super::unit_energy_datum(model, q0, phase, rho)?;
    let t_end = window_c * h0;
    let loops = (t_end * h0 / crate::contact::TAU).ceil() as usize;
    let samples = (loops.max(1) * samples_per_loop + 1).max(64);
    let traj = super::integrate_geodesic(
        model,
        &p0,
        t_end,
        super::Integrator::AdaptiveRk54 { tol: 1e-11 },
        samples,
    )?;
    let fit = spiral_fit(&traj, model, window_c, H0_MIN_DEFAULT)?;
    Ok((traj, fit))
}
