//! Geodesic flow of the Hamiltonian H = ½ g*, Reeb flow, and the exact
//! model flow on Σ × R² that organizes the high-momentum dynamics.

pub mod integrators;
pub mod spiral;

use crate::contact::{ContactModel, ModelId, PhasePoint};
use crate::error::{Error, Result};
use crate::util::fmt_f64;
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

pub use integrators::{Integrator, StepStats};

/// The Hamiltonian H = ½ g*(q, ξ).
pub fn hamiltonian(model: &ContactModel, pt: &PhasePoint) -> Result<f64> {
    Ok(0.5 * model.cometric(pt)?)
}

/// The Hamiltonian vector field of H = ½ g*:
/// q̇ = u X + v Y, ξ̇_j = −(u ⟨ξ, ∂_j X⟩ + v ⟨ξ, ∂_j Y⟩)
/// with u = ⟨ξ, X⟩, v = ⟨ξ, Y⟩, all coefficients in closed form.
pub fn hamiltonian_vector_field(
    model: &ContactModel,
    pt: &PhasePoint,
) -> Result<([f64; 3], [f64; 3])> {
    model.chart_check(pt.position)?;
    let (fx, fy) = model.frame(pt.position);
    let (dx, dy) = model.frame_jacobian(pt.position);
    let u = ContactModel::pair(pt.momentum, fx);
    let v = ContactModel::pair(pt.momentum, fy);
    let qdot = [
        u * fx[0] + v * fy[0],
        u * fx[1] + v * fy[1],
        u * fx[2] + v * fy[2],
    ];
    let mut pdot = [0.0; 3];
    for j in 0..3 {
        let dxj = [dx[0][j], dx[1][j], dx[2][j]];
        let dyj = [dy[0][j], dy[1][j], dy[2][j]];
        pdot[j] = -(u * ContactModel::pair(pt.momentum, dxj)
            + v * ContactModel::pair(pt.momentum, dyj));
    }
    Ok((qdot, pdot))
}

fn field_state(model: &ContactModel, z: &integrators::State) -> Result<integrators::State> {
    let pt = PhasePoint::new([z[0], z[1], z[2]], [z[3], z[4], z[5]]);
    let (qd, pd) = hamiltonian_vector_field(model, &pt)?;
    Ok([qd[0], qd[1], qd[2], pd[0], pd[1], pd[2]])
}

fn to_state(pt: &PhasePoint) -> integrators::State {
    [
        pt.position[0],
        pt.position[1],
        pt.position[2],
        pt.momentum[0],
        pt.momentum[1],
        pt.momentum[2],
    ]
}

fn from_state(z: &integrators::State) -> PhasePoint {
    PhasePoint::new([z[0], z[1], z[2]], [z[3], z[4], z[5]])
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_step: f64,
    pub tolerance: f64,
}

/// A time-sampled integral curve of the geodesic flow together with its
/// energy log. Integration happens in the universal cover; no lattice
/// reduction is applied to the samples.
#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    pub model: ModelId,
    pub samples: Vec<(f64, PhasePoint)>,
    pub energy_log: Vec<f64>,
    pub stats: IntegratorStats,
}

impl GeodesicTrajectory {
    /// Maximum relative energy drift over the window.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.energy_log[0];
        self.energy_log
            .iter()
            .map(|h| (h - h0).abs() / h0.abs())
            .fold(0.0, f64::max)
    }

    pub fn end(&self) -> &PhasePoint {
        &self.samples.last().expect("non-empty trajectory").1
    }

    /// CSV export: `t,x,y,z,xi_x,xi_y,xi_z,H`, one row per sample,
    /// round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y,z,xi_x,xi_y,xi_z,H")?;
        for ((t, pt), h) in self.samples.iter().zip(&self.energy_log) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(*t),
                fmt_f64(pt.position[0]),
                fmt_f64(pt.position[1]),
                fmt_f64(pt.position[2]),
                fmt_f64(pt.momentum[0]),
                fmt_f64(pt.momentum[1]),
                fmt_f64(pt.momentum[2]),
                fmt_f64(*h),
            )?;
        }
        Ok(())
    }
}

/// Integrate the geodesic flow from `p0` for time `t_end`, sampling at
/// `samples` evenly spaced times (including both endpoints).
pub fn integrate_geodesic(
    model: &ContactModel,
    p0: &PhasePoint,
    t_end: f64,
    scheme: Integrator,
    samples: usize,
) -> Result<GeodesicTrajectory> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument {
            name: "t_end",
            reason: format!("integration time must be positive and finite, got {t_end}"),
        });
    }
    if samples < 2 {
        return Err(Error::InvalidArgument {
            name: "samples",
            reason: "need at least the two endpoint samples".into(),
        });
    }
    let h0 = hamiltonian(model, p0)?;
    if !(h0 > 0.0) {
        return Err(Error::InvalidArgument {
            name: "p0",
            reason: "initial datum must have positive energy (momentum off the characteristic cone)"
                .into(),
        });
    }

    let mut f = |z: &integrators::State| field_state(model, z);
    let mut stats = integrators::StepStats::default();
    let mut out = Vec::with_capacity(samples);
    let mut energy = Vec::with_capacity(samples);
    let mut z = to_state(p0);
    out.push((0.0, *p0));
    energy.push(h0);
    for i in 1..samples {
        let t0 = t_end * (i - 1) as f64 / (samples - 1) as f64;
        let t1 = t_end * i as f64 / (samples - 1) as f64;
        z = integrators::advance(&mut f, scheme, t0, t1, &z, &mut stats)?;
        let pt = from_state(&z);
        energy.push(hamiltonian(model, &pt)?);
        out.push((t1, pt));
    }
    Ok(GeodesicTrajectory {
        model: model.id,
        samples: out,
        energy_log: energy,
        stats: IntegratorStats {
            steps: stats.steps,
            rejected: stats.rejected,
            max_step: stats.max_step,
            tolerance: scheme.tolerance(),
        },
    })
}

/// Endpoint-only integration (used by the shooting loops, which do not
/// need dense output).
pub fn flow_endpoint(
    model: &ContactModel,
    p0: &PhasePoint,
    t_end: f64,
    scheme: Integrator,
) -> Result<PhasePoint> {
    let mut f = |z: &integrators::State| field_state(model, z);
    let mut stats = integrators::StepStats::default();
    let z = integrators::advance(&mut f, scheme, 0.0, t_end, &to_state(p0), &mut stats)?;
    Ok(from_state(&z))
}

/// Flow of the Reeb field sampled at `samples` evenly spaced times. Exact
/// for the models whose Reeb field is constant in the chart; integrated
/// numerically otherwise.
pub fn integrate_reeb(
    model: &ContactModel,
    x0: [f64; 3],
    t_end: f64,
    samples: usize,
) -> Result<Vec<(f64, [f64; 3])>> {
    if !t_end.is_finite() {
        return Err(Error::InvalidArgument {
            name: "t_end",
            reason: "Reeb flow time must be finite".into(),
        });
    }
    model.chart_check(x0)?;
    let mut out = Vec::with_capacity(samples);
    match model.id {
        ModelId::Heisenberg | ModelId::MagneticTorus { .. } => {
            let r = model.reeb_field(x0)?;
            for i in 0..samples {
                let t = t_end * i as f64 / (samples - 1).max(1) as f64;
                out.push((t, [x0[0] + t * r[0], x0[1] + t * r[1], x0[2] + t * r[2]]));
            }
        }
        ModelId::KeplerHeisenberg => {
            let mut f = |z: &integrators::State| -> Result<integrators::State> {
                let r = model.reeb_field([z[0], z[1], z[2]])?;
                Ok([r[0], r[1], r[2], 0.0, 0.0, 0.0])
            };
            let mut stats = integrators::StepStats::default();
            let mut z = [x0[0], x0[1], x0[2], 0.0, 0.0, 0.0];
            out.push((0.0, x0));
            for i in 1..samples {
                let t0 = t_end * (i - 1) as f64 / (samples - 1) as f64;
                let t1 = t_end * i as f64 / (samples - 1) as f64;
                z = integrators::advance(
                    &mut f,
                    Integrator::AdaptiveRk54 { tol: 1e-12 },
                    t0,
                    t1,
                    &z,
                    &mut stats,
                )?;
                out.push((t1, [z[0], z[1], z[2]]));
            }
        }
    }
    Ok(out)
}

/// Period of the closed Reeb orbit through the chart (the fiber circle) for
/// the compact catalog models.
pub fn reeb_period(model: &ContactModel) -> Result<f64> {
    match model.id {
        ModelId::Heisenberg => Ok(crate::contact::TAU),
        ModelId::MagneticTorus { b } => Ok(crate::contact::TAU / b),
        ModelId::KeplerHeisenberg => Err(Error::Unsupported {
            op: "reeb_period",
            model: model.name(),
            reason: "no closed Reeb orbit in the chart catalog",
        }),
    }
}

/// A point of the characteristic cone reduced to the data the model flow
/// needs: the time parameter along its Reeb orbit and the Reeb momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPoint {
    pub reeb_time: f64,
    pub rho: f64,
}

/// Exact flow of the model Hamiltonian ½ ρ I on Σ × R²: the base moves by
/// Reeb time I·t/2 and the transverse coordinate rotates by e^{iρt}
/// (I = |w|²).
pub fn model_flow_h0(sigma: &SigmaPoint, w: Complex64, t: f64) -> Result<(SigmaPoint, Complex64)> {
    if !(sigma.rho > 0.0) {
        return Err(Error::InvalidArgument {
            name: "sigma.rho",
            reason: format!("the model flow needs positive Reeb momentum, got {}", sigma.rho),
        });
    }
    let action = w.norm_sqr();
    let advanced = SigmaPoint {
        reeb_time: sigma.reeb_time + 0.5 * action * t,
        rho: sigma.rho,
    };
    Ok((advanced, w * Complex64::from_polar(1.0, sigma.rho * t)))
}

/// Unit-speed form of the model flow: the energy normalization ties
/// ρ = 1/I, so the phase advances as e^{it/I}. A pure Reeb datum (I = 0)
/// is rejected.
pub fn model_flow_h0_unit(w: Complex64, t: f64) -> Result<(SigmaPoint, Complex64)> {
    let action = w.norm_sqr();
    if action <= 0.0 {
        return Err(Error::InvalidArgument {
            name: "w",
            reason: "pure Reeb datum (I = 0) has no unit-speed normalization".into(),
        });
    }
    let sigma = SigmaPoint { reeb_time: 0.0, rho: 1.0 / action };
    model_flow_h0(&sigma, w, t)
}

/// Closure data for index k around a Reeb orbit of period `t0` in the
/// model flow: transverse action I_k = sqrt(t0 / (π k)) and geodesic
/// length l_k = 2 sqrt(π k t0).
pub fn closure_prediction(k: u32, t0: f64) -> (f64, f64) {
    let kf = k as f64;
    let action = (t0 / (std::f64::consts::PI * kf)).sqrt();
    let length = 2.0 * (std::f64::consts::PI * kf * t0).sqrt();
    (action, length)
}

/// Build a unit-energy phase point at `q` with horizontal components
/// (⟨ξ,X⟩, ⟨ξ,Y⟩) = (cos φ, sin φ) and Reeb momentum ρ.
pub fn unit_energy_datum(
    model: &ContactModel,
    q: [f64; 3],
    phase: f64,
    rho: f64,
) -> Result<PhasePoint> {
    model.chart_check(q)?;
    let (fx, fy) = model.frame(q);
    let r = model.reeb_field(q)?;
    let rows = vec![fx.to_vec(), fy.to_vec(), r.to_vec()];
    let rhs = [phase.cos(), phase.sin(), rho];
    let xi = crate::util::solve_dense(&rows, &rhs).ok_or(Error::InvalidArgument {
        name: "q",
        reason: "frame and Reeb field are linearly dependent (should not happen)".into(),
    })?;
    Ok(PhasePoint::new(q, [xi[0], xi[1], xi[2]]))
}
