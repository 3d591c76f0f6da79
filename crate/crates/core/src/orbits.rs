//! Closed geodesics spiraling around closed Reeb orbits.
//!
//! Shooting parameterizes the initial datum by (a, ρ, T): the start point
//! sits at distance I_k from the Reeb anchor along X, the momentum is the
//! unit-energy covector with horizontal components (a, −√(1−a²)) and Reeb
//! momentum ρ, and T is the candidate period. Gauss-Newton drives the
//! lattice-aware return residual of the 6D phase point to zero. Seeds come
//! from the closure data of the model flow, which are exact for the
//! Heisenberg quotient, so the iteration typically converges in a couple of
//! steps.

use crate::contact::{ContactModel, ModelId, PhasePoint};
use crate::error::{Error, Result};
use crate::flow::{self, Integrator};
use crate::util::{least_squares, solve_dense};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOrbitResult {
    /// Winding index around the Reeb orbit.
    pub k: u32,
    /// Initial phase point of the closed geodesic.
    pub init: PhasePoint,
    /// Period of the orbit (equals the length for unit-speed data).
    pub period: f64,
    /// Length of the closed geodesic.
    pub length: f64,
    /// Final lattice-aware closure residual.
    pub residual: f64,
    /// Gauss-Newton iterations used.
    pub iterations: usize,
    /// Set when the model's closed Reeb orbits form a degenerate family
    /// (every fiber of the magnetic torus), where the non-degeneracy
    /// hypothesis behind the length asymptotics fails.
    pub degenerate_reeb_family: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Convergence threshold on the 6D closure residual.
    pub tol: f64,
    pub max_iterations: usize,
    /// Fixed step of the Gauss-Legendre integrator used for the return map.
    pub step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 30, step: 5e-3 }
    }
}

fn shooting_datum(
    model: &ContactModel,
    anchor: [f64; 3],
    radius: f64,
    a: f64,
    rho: f64,
) -> Result<PhasePoint> {
    let start = [anchor[0] + radius, anchor[1], anchor[2]];
    // unit-energy momentum with ⟨ξ,X⟩ = a, ⟨ξ,Y⟩ = −√(1−a²): the branch
    // matches the seed, which starts due east of the anchor moving
    // clockwise.
    let v = -(1.0 - a * a).max(0.0).sqrt();
    let phase = v.atan2(a);
    flow::unit_energy_datum(model, start, phase, rho)
}

fn return_residual(
    model: &ContactModel,
    init: &PhasePoint,
    t: f64,
    step: f64,
) -> Result<[f64; 6]> {
    let end = flow::flow_endpoint(model, init, t, Integrator::GaussLegendre4 { step })?;
    let lat = model.lattice().ok_or(Error::Unsupported {
        op: "shoot_periodic",
        model: model.name(),
        reason: "closure needs the compact lattice structure",
    })?;
    let moved = lat.deck(lat.closure_offset(init, &end), init);
    let mut f = [0.0; 6];
    for i in 0..3 {
        f[i] = end.position[i] - moved.position[i];
        f[i + 3] = end.momentum[i] - moved.momentum[i];
    }
    Ok(f)
}

fn norm6(f: &[f64; 6]) -> f64 {
    f.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Find the closed geodesic of winding index `k` around the closed Reeb
/// orbit through `anchor`.
pub fn shoot_periodic(
    model: &ContactModel,
    anchor: [f64; 3],
    k: u32,
    opts: &ShootingOptions,
) -> Result<PeriodicOrbitResult> {
    if k == 0 {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: "winding index starts at 1".into(),
        });
    }
    let t0 = flow::reeb_period(model)?;
    let (action, length_seed) = flow::closure_prediction(k, t0);
    let radius = action;
    let mut x = [0.0_f64, 1.0 / action, length_seed]; // (a, rho, T)

    let eval = |x: &[f64; 3]| -> Result<[f64; 6]> {
        let init = shooting_datum(model, anchor, radius, x[0], x[1])?;
        return_residual(model, &init, x[2], opts.step)
    };

    let mut f = eval(&x)?;
    let mut best = norm6(&f);
    let mut iterations = 0;
    while best > opts.tol && iterations < opts.max_iterations {
        iterations += 1;
        // central-difference Jacobian, 6 x 3
        let deltas = [1e-7, 1e-7 * x[1].abs().max(1.0), 1e-7 * x[2].abs().max(1.0)];
        let mut jac = [[0.0; 3]; 6];
        for p in 0..3 {
            let mut xp = x;
            xp[p] += deltas[p];
            let mut xm = x;
            xm[p] -= deltas[p];
            let fp = eval(&xp)?;
            let fm = eval(&xm)?;
            for r in 0..6 {
                jac[r][p] = (fp[r] - fm[r]) / (2.0 * deltas[p]);
            }
        }
        let mut jtj = vec![vec![0.0; 3]; 3];
        let mut jtf = vec![0.0; 3];
        for p in 0..3 {
            for q in 0..3 {
                jtj[p][q] = (0..6).map(|r| jac[r][p] * jac[r][q]).sum();
            }
            jtf[p] = -(0..6).map(|r| jac[r][p] * f[r]).sum::<f64>();
        }
        for (p, row) in jtj.iter_mut().enumerate() {
            row[p] *= 1.0 + 1e-10;
        }
        let step = solve_dense(&jtj, &jtf).ok_or(Error::ShootingSingular { k })?;

        // backtracking keeps the iteration inside the basin
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let mut xn = x;
            for p in 0..3 {
                xn[p] += lambda * step[p];
            }
            xn[0] = xn[0].clamp(-0.9, 0.9);
            if let Ok(fn_) = eval(&xn) {
                let n = norm6(&fn_);
                if n < best {
                    x = xn;
                    f = fn_;
                    best = n;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if best > opts.tol {
        return Err(Error::ShootingFailed {
            k,
            iterations,
            residual: best,
        });
    }
    let init = shooting_datum(model, anchor, radius, x[0], x[1])?;
    Ok(PeriodicOrbitResult {
        k,
        init,
        period: x[2],
        length: x[2],
        residual: best,
        iterations,
        degenerate_reeb_family: matches!(model.id, ModelId::MagneticTorus { .. }),
    })
}

/// Lengths of the closed geodesics γ_1 … γ_{k_max} around the Reeb orbit
/// through `anchor`, with per-index failures reported instead of aborting
/// the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct LengthSpectrum {
    pub model: String,
    pub t0_reeb: f64,
    pub orbits: Vec<PeriodicOrbitResult>,
    /// Sorted, de-duplicated lengths.
    pub lengths: Vec<f64>,
    pub failures: Vec<(u32, String)>,
}

pub fn length_spectrum(
    model: &ContactModel,
    anchor: [f64; 3],
    k_max: u32,
    opts: &ShootingOptions,
) -> Result<LengthSpectrum> {
    if k_max < 1 {
        return Err(Error::InvalidArgument {
            name: "k_max",
            reason: "need at least one winding index".into(),
        });
    }
    let results: Vec<(u32, Result<PeriodicOrbitResult>)> = (1..=k_max)
        .into_par_iter()
        .map(|k| (k, shoot_periodic(model, anchor, k, opts)))
        .collect();
    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for (k, res) in results {
        match res {
            Ok(orbit) => orbits.push(orbit),
            Err(e) => failures.push((k, e.to_string())),
        }
    }
    orbits.sort_by_key(|o| o.k);
    let mut lengths: Vec<f64> = orbits.iter().map(|o| o.length).collect();
    lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lengths.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(LengthSpectrum {
        model: model.name().to_string(),
        t0_reeb: flow::reeb_period(model)?,
        orbits,
        lengths,
        failures,
    })
}

/// Weighted least-squares fit of lengths against
/// c₀ k^{1/2} + a₁ k^{−1/2} + a₂ k^{−1}, recovering the Reeb period
/// T₀ = c₀²/(4π).
#[derive(Debug, Clone, Serialize)]
pub struct ReebPeriodFit {
    pub t0_estimate: f64,
    pub leading_coefficient: f64,
    pub a1: f64,
    pub a2: f64,
    pub rms_residual: f64,
}

pub fn fit_reeb_period(
    lengths: &[f64],
    k_indices: &[u32],
    weights: Option<&[f64]>,
) -> Result<ReebPeriodFit> {
    if lengths.len() != k_indices.len() {
        return Err(Error::InvalidArgument {
            name: "k_indices",
            reason: "lengths and indices must pair up".into(),
        });
    }
    if lengths.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 lengths to fit the period expansion, got {}",
            lengths.len()
        )));
    }
    let basis: Vec<Vec<f64>> = k_indices
        .iter()
        .map(|&k| {
            let kf = k as f64;
            vec![kf.sqrt(), 1.0 / kf.sqrt(), 1.0 / kf]
        })
        .collect();
    let coeffs = least_squares(&basis, lengths, weights)
        .ok_or_else(|| Error::Fit("ill-conditioned period fit (collinear data)".into()))?;
    let c0 = coeffs[0];
    if !(c0 > 0.0) {
        return Err(Error::Fit(format!(
            "leading coefficient must be positive, got {c0}"
        )));
    }
    let mut ss = 0.0;
    for (row, &l) in basis.iter().zip(lengths) {
        let fit: f64 = row.iter().zip(&coeffs).map(|(b, c)| b * c).sum();
        ss += (l - fit).powi(2);
    }
    Ok(ReebPeriodFit {
        t0_estimate: c0 * c0 / (4.0 * std::f64::consts::PI),
        leading_coefficient: c0,
        a1: coeffs[1],
        a2: coeffs[2],
        rms_residual: (ss / lengths.len() as f64).sqrt(),
    })
}

/// JSON export of a length-spectrum run:
/// `{"model": ..., "T0_reeb": ..., "orbits": [{"k":, "length":, "residual":}]}`.
pub fn write_length_spectrum_json<W: Write>(
    spectrum: &LengthSpectrum,
    mut w: W,
) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct OrbitRow {
        k: u32,
        length: f64,
        residual: f64,
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        model: &'a str,
        #[serde(rename = "T0_reeb")]
        t0_reeb: f64,
        orbits: Vec<OrbitRow>,
    }
    let doc = Doc {
        model: &spectrum.model,
        t0_reeb: spectrum.t0_reeb,
        orbits: spectrum
            .orbits
            .iter()
            .map(|o| OrbitRow { k: o.k, length: o.length, residual: o.residual })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{closure_distance, TAU};

    #[test]
    fn heisenberg_k1_length() {
        let model = ContactModel::heisenberg();
        let orbit =
            shoot_periodic(&model, [0.0; 3], 1, &ShootingOptions::default()).unwrap();
        let exact = TAU * 2.0_f64.sqrt();
        assert!(
            (orbit.length - exact).abs() < 1e-6,
            "length {} vs {exact}",
            orbit.length
        );
        assert!(orbit.residual <= 1e-10);
        assert!(!orbit.degenerate_reeb_family);
    }

    #[test]
    fn heisenberg_k4_length() {
        let model = ContactModel::heisenberg();
        let orbit =
            shoot_periodic(&model, [0.0; 3], 4, &ShootingOptions::default()).unwrap();
        let exact = TAU * 8.0_f64.sqrt(); // 2π√8 = 4π√2
        assert!((orbit.length - exact).abs() < 1e-6, "length {}", orbit.length);
    }

    #[test]
    fn seed_converges_fast() {
        // the closure seed is exact for the Heisenberg quotient, so the
        // iteration needs at most a few corrections
        let model = ContactModel::heisenberg();
        let orbit =
            shoot_periodic(&model, [0.1, 0.4, 0.0], 2, &ShootingOptions::default()).unwrap();
        assert!(orbit.iterations <= 3, "iterations {}", orbit.iterations);
        let seed = flow::closure_prediction(2, TAU).1;
        assert!((orbit.length - seed).abs() < 1e-7);
    }

    #[test]
    fn fit_reeb_period_synthetic_exact() {
        // L_k = 2√(π k) corresponds to T0 = 1 with vanishing corrections
        let ks: Vec<u32> = (1..=8).collect();
        let lengths: Vec<f64> = ks
            .iter()
            .map(|&k| 2.0 * (std::f64::consts::PI * k as f64).sqrt())
            .collect();
        let fit = fit_reeb_period(&lengths, &ks, None).unwrap();
        assert!((fit.t0_estimate - 1.0).abs() < 1e-12);
        assert!(fit.a1.abs() < 1e-10 && fit.a2.abs() < 1e-10);
    }

    #[test]
    fn fit_reeb_period_recovers_perturbation() {
        let ks: Vec<u32> = (1..=10).collect();
        let lengths: Vec<f64> = ks
            .iter()
            .map(|&k| {
                let kf = k as f64;
                2.0 * (std::f64::consts::PI * kf).sqrt() + 0.1 / kf.sqrt()
            })
            .collect();
        let fit = fit_reeb_period(&lengths, &ks, None).unwrap();
        assert!((fit.t0_estimate - 1.0).abs() < 1e-10);
        assert!((fit.a1 - 0.1).abs() < 0.005, "a1 = {}", fit.a1);
    }

    #[test]
    fn fit_needs_enough_data() {
        let err = fit_reeb_period(&[1.0, 2.0, 3.0], &[1, 2, 3], None);
        assert!(err.is_err());
    }

    #[test]
    fn magnetic_torus_orbits_flagged_degenerate() {
        let model = ContactModel::magnetic_torus(1.0).unwrap();
        let orbit =
            shoot_periodic(&model, [0.2, 0.3, 0.0], 1, &ShootingOptions::default()).unwrap();
        assert!(orbit.degenerate_reeb_family);
        // b = 1 cross-validates against the Heisenberg lengths
        assert!((orbit.length - TAU * 2.0_f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn closure_residual_grows_linearly_over_periods() {
        let model = ContactModel::heisenberg();
        let opts = ShootingOptions::default();
        let orbit = shoot_periodic(&model, [0.0; 3], 1, &opts).unwrap();
        let end = flow::flow_endpoint(
            &model,
            &orbit.init,
            3.0 * orbit.period,
            Integrator::GaussLegendre4 { step: opts.step },
        )
        .unwrap();
        let d = closure_distance(&model, &orbit.init, &end);
        // linear growth of the defect plus a small roundoff allowance for
        // the longer integration
        assert!(
            d <= 3.0 * orbit.residual + 1e-11,
            "3-period closure {d} vs residual {}",
            orbit.residual
        );
    }
}
