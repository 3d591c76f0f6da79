//! Model catalog and pointwise contact geometry.
//!
//! Each model is a 3D contact manifold with an oriented rank-2 distribution
//! D = ker α, an orthonormal frame (X, Y) of D, the normalized contact form
//! α (dα restricted to D equals the metric area form), and the Reeb field R
//! (α(R) = 1, dα(R, ·) = 0).
//!
//! Catalog:
//! * `Heisenberg` — the quotient of the Heisenberg group by the lattice with
//!   (x, y) in √(2π)Z² and z in 2πZ; frame X = ∂x, Y = ∂y − x∂z,
//!   α = dz + x dy, R = ∂z.
//! * `MagneticTorus { b }` — a circle bundle over the flat torus
//!   R²/√(2π)Z² with constant curvature b; the connection is pinned so that
//!   b = 1 reproduces the Heisenberg frame with θ in place of z.
//! * `KeplerHeisenberg` — the cometric √D(q)·g₀* on R³ \ 0 with
//!   D = (x² + y²)² + 16 z², invariant under the dilations
//!   (x, y, z) → (λx, λy, λ²z).

use crate::error::{Error, Result};
use crate::util::SplitMix64;
use serde::{Deserialize, Serialize};

pub const TAU: f64 = std::f64::consts::TAU;

/// Side length of the square torus used by the compact models.
pub fn torus_side() -> f64 {
    TAU.sqrt()
}

/// A point of the cotangent bundle in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub position: [f64; 3],
    pub momentum: [f64; 3],
}

impl PhasePoint {
    pub fn new(position: [f64; 3], momentum: [f64; 3]) -> Self {
        Self { position, momentum }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.momentum.iter()).all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelId {
    Heisenberg,
    MagneticTorus { b: f64 },
    KeplerHeisenberg,
}

impl ModelId {
    pub fn name(&self) -> &'static str {
        match self {
            ModelId::Heisenberg => "heisenberg",
            ModelId::MagneticTorus { .. } => "magnetic-torus",
            ModelId::KeplerHeisenberg => "kepler",
        }
    }
}

/// Lattice identifications of the compact charts. The x-translation deck
/// element twists z by `-twist * a * y` (and momenta accordingly), matching
/// the group structure of the Heisenberg quotient.
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    /// Period in x and y.
    pub a: f64,
    /// Period in z (the fiber).
    pub c: f64,
    /// Twist coefficient of the x-deck action on z.
    pub twist: f64,
}

impl Lattice {
    /// Apply the deck transformation indexed by integers (p, q, r).
    pub fn deck(&self, n: [i64; 3], pt: &PhasePoint) -> PhasePoint {
        let shift_x = n[0] as f64 * self.a;
        let [x, y, z] = pt.position;
        let [gx, gy, gz] = pt.momentum;
        PhasePoint {
            position: [
                x + shift_x,
                y + n[1] as f64 * self.a,
                z + n[2] as f64 * self.c - self.twist * shift_x * y,
            ],
            momentum: [gx, gy + self.twist * shift_x * gz, gz],
        }
    }

    /// Deck indices that bring `start` closest to `end`.
    pub fn closure_offset(&self, start: &PhasePoint, end: &PhasePoint) -> [i64; 3] {
        let p = ((end.position[0] - start.position[0]) / self.a).round() as i64;
        let q = ((end.position[1] - start.position[1]) / self.a).round() as i64;
        let shift_x = p as f64 * self.a;
        let r = ((end.position[2] - start.position[2] + self.twist * shift_x * start.position[1])
            / self.c)
            .round() as i64;
        [p, q, r]
    }
}

/// Distance between two phase points modulo the lattice action (plain
/// Euclidean distance when the model has no lattice).
pub fn closure_distance(model: &ContactModel, start: &PhasePoint, end: &PhasePoint) -> f64 {
    let moved = match model.lattice() {
        Some(lat) => lat.deck(lat.closure_offset(start, end), start),
        None => *start,
    };
    let mut s = 0.0;
    for i in 0..3 {
        s += (moved.position[i] - end.position[i]).powi(2);
        s += (moved.momentum[i] - end.momentum[i]).powi(2);
    }
    s.sqrt()
}

/// A catalog model together with the chart data needed by the flow and
/// spectra modules.
#[derive(Debug, Clone)]
pub struct ContactModel {
    pub id: ModelId,
    /// Radius of the excluded ball around the Kepler-Heisenberg singularity.
    pub kepler_min_radius: f64,
}

impl ContactModel {
    pub fn heisenberg() -> Self {
        Self { id: ModelId::Heisenberg, kepler_min_radius: 0.0 }
    }

    pub fn magnetic_torus(b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidArgument {
                name: "b",
                reason: format!("magnetic scalar must be positive and finite, got {b}"),
            });
        }
        Ok(Self { id: ModelId::MagneticTorus { b }, kepler_min_radius: 0.0 })
    }

    pub fn kepler_heisenberg() -> Self {
        Self { id: ModelId::KeplerHeisenberg, kepler_min_radius: 1e-3 }
    }

    /// Look a model up by its CLI identifier.
    pub fn by_name(name: &str, b: f64) -> Result<Self> {
        match name {
            "heisenberg" => Ok(Self::heisenberg()),
            "magnetic-torus" => Self::magnetic_torus(b),
            "kepler" => Ok(Self::kepler_heisenberg()),
            other => Err(Error::InvalidArgument {
                name: "model",
                reason: format!(
                    "unknown model `{other}` (expected heisenberg, magnetic-torus or kepler)"
                ),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        self.id.name()
    }

    /// Chart validity check. Only the Kepler-Heisenberg chart excludes
    /// points (a ball around the metric singularity at the origin).
    pub fn chart_check(&self, q: [f64; 3]) -> Result<()> {
        if q.iter().any(|c| !c.is_finite()) {
            return Err(Error::ChartDomain {
                model: self.name(),
                x: q[0],
                y: q[1],
                z: q[2],
                reason: "non-finite coordinates",
            });
        }
        if let ModelId::KeplerHeisenberg = self.id {
            let r2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
            if r2 <= self.kepler_min_radius * self.kepler_min_radius {
                return Err(Error::ChartDomain {
                    model: self.name(),
                    x: q[0],
                    y: q[1],
                    z: q[2],
                    reason: "inside the excluded ball around the singular origin",
                });
            }
        }
        Ok(())
    }

    /// Lattice identifications of the compact charts; `None` for the
    /// non-compact Kepler-Heisenberg model.
    pub fn lattice(&self) -> Option<Lattice> {
        let a = torus_side();
        match self.id {
            ModelId::Heisenberg => Some(Lattice { a, c: TAU, twist: 1.0 }),
            ModelId::MagneticTorus { b } => Some(Lattice { a, c: TAU, twist: b }),
            ModelId::KeplerHeisenberg => None,
        }
    }

    /// The orthonormal frame (X, Y) of the distribution at `q`.
    pub fn frame(&self, q: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        match self.id {
            ModelId::Heisenberg => ([1.0, 0.0, 0.0], [0.0, 1.0, -q[0]]),
            ModelId::MagneticTorus { b } => ([1.0, 0.0, 0.0], [0.0, 1.0, -b * q[0]]),
            ModelId::KeplerHeisenberg => {
                let p = kepler_d(q).powf(0.25);
                ([p, 0.0, 0.0], [0.0, p, -q[0] * p])
            }
        }
    }

    /// Component-by-coordinate Jacobians (dX^i/dq^j, dY^i/dq^j) of the
    /// frame, in closed form (no numerical differentiation).
    pub fn frame_jacobian(&self, q: [f64; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
        let zero = [[0.0; 3]; 3];
        match self.id {
            ModelId::Heisenberg => {
                let mut dy = zero;
                dy[2][0] = -1.0;
                (zero, dy)
            }
            ModelId::MagneticTorus { b } => {
                let mut dy = zero;
                dy[2][0] = -b;
                (zero, dy)
            }
            ModelId::KeplerHeisenberg => {
                let d = kepler_d(q);
                let dg = kepler_d_grad(q);
                let p = d.powf(0.25);
                // dP/dq^j = P' = (1/4) D^{-3/4} D_j
                let pp: [f64; 3] = {
                    let f = 0.25 * d.powf(-0.75);
                    [f * dg[0], f * dg[1], f * dg[2]]
                };
                let mut dx = zero;
                dx[0] = pp;
                let mut dy = zero;
                dy[1] = pp;
                dy[2] = [-p - q[0] * pp[0], -q[0] * pp[1], -q[0] * pp[2]];
                (dx, dy)
            }
        }
    }

    /// Coefficients of the normalized contact form α at `q`.
    pub fn alpha(&self, q: [f64; 3]) -> [f64; 3] {
        match self.id {
            ModelId::Heisenberg => [0.0, q[0], 1.0],
            ModelId::MagneticTorus { b } => [0.0, q[0], 1.0 / b],
            ModelId::KeplerHeisenberg => {
                let c = kepler_d(q).powf(-0.5);
                [0.0, q[0] * c, c]
            }
        }
    }

    /// The three independent components (Ω_xy, Ω_xz, Ω_yz) of dα at `q`,
    /// where Ω_ij = ∂_i α_j − ∂_j α_i, from closed-form derivatives.
    pub fn dalpha(&self, q: [f64; 3]) -> (f64, f64, f64) {
        match self.id {
            ModelId::Heisenberg | ModelId::MagneticTorus { .. } => (1.0, 0.0, 0.0),
            ModelId::KeplerHeisenberg => {
                let d = kepler_d(q);
                let dg = kepler_d_grad(q);
                let c = d.powf(-0.5);
                let f = -0.5 * d.powf(-1.5);
                let (cx, cy, cz) = (f * dg[0], f * dg[1], f * dg[2]);
                (c + q[0] * cx, cx, cy - q[0] * cz)
            }
        }
    }

    /// Evaluate a 1-form on a vector.
    pub fn pair(form: [f64; 3], vector: [f64; 3]) -> f64 {
        form[0] * vector[0] + form[1] * vector[1] + form[2] * vector[2]
    }

    /// dα(v, w) from the component triple.
    pub fn dalpha_eval(&self, q: [f64; 3], v: [f64; 3], w: [f64; 3]) -> f64 {
        let (oxy, oxz, oyz) = self.dalpha(q);
        oxy * (v[0] * w[1] - v[1] * w[0])
            + oxz * (v[0] * w[2] - v[2] * w[0])
            + oyz * (v[1] * w[2] - v[2] * w[1])
    }

    /// The Reeb vector field at `q`: the kernel direction of dα normalized
    /// by α(R) = 1. Closed form for the catalog models; the generic kernel
    /// construction is exercised by the Kepler-Heisenberg branch.
    pub fn reeb_field(&self, q: [f64; 3]) -> Result<[f64; 3]> {
        self.chart_check(q)?;
        Ok(match self.id {
            ModelId::Heisenberg => [0.0, 0.0, 1.0],
            ModelId::MagneticTorus { b } => [0.0, 0.0, b],
            ModelId::KeplerHeisenberg => {
                // Kernel of dα is spanned by v = (Ω_yz, -Ω_xz, Ω_xy).
                let (oxy, oxz, oyz) = self.dalpha(q);
                let v = [oyz, -oxz, oxy];
                let s = Self::pair(self.alpha(q), v);
                [v[0] / s, v[1] / s, v[2] / s]
            }
        })
    }

    /// Squared cometric norm g*(q, ξ) = ⟨ξ, X⟩² + ⟨ξ, Y⟩².
    pub fn cometric(&self, pt: &PhasePoint) -> Result<f64> {
        self.chart_check(pt.position)?;
        let (x, y) = self.frame(pt.position);
        let u = Self::pair(pt.momentum, x);
        let v = Self::pair(pt.momentum, y);
        Ok(u * u + v * v)
    }

    /// Momentum along the Reeb field, ρ(q, ξ) = ⟨ξ, R(q)⟩. On the
    /// characteristic cone, ρ(s α) = s.
    pub fn reeb_momentum(&self, pt: &PhasePoint) -> Result<f64> {
        let r = self.reeb_field(pt.position)?;
        Ok(Self::pair(pt.momentum, r))
    }

    /// Whether (q, ξ) lies on the characteristic cone Σ = D^⊥ \ 0 within
    /// tolerance: the cometric vanishes but the momentum does not.
    pub fn on_characteristic_cone(&self, pt: &PhasePoint, tol: f64) -> Result<bool> {
        let g = self.cometric(pt)?;
        let norm2: f64 = pt.momentum.iter().map(|c| c * c).sum();
        Ok(g < tol * tol * norm2 && norm2 > 0.0)
    }

    /// Total Popp volume ∫ |α ∧ dα| in closed form. Errors for the
    /// non-compact Kepler-Heisenberg model.
    pub fn popp_volume(&self) -> Result<f64> {
        match self.id {
            // |dz ∧ dx ∧ dy| over [0,√(2π)]² × [0,2π]
            ModelId::Heisenberg => Ok(4.0 * std::f64::consts::PI * std::f64::consts::PI),
            // α ∧ dα = (1/b) dθ ∧ dx ∧ dy over the same fundamental domain
            ModelId::MagneticTorus { b } => {
                Ok(4.0 * std::f64::consts::PI * std::f64::consts::PI / b)
            }
            ModelId::KeplerHeisenberg => Err(Error::Unsupported {
                op: "popp_volume",
                model: self.name(),
                reason: "the model is non-compact; the total Popp volume diverges",
            }),
        }
    }

    /// Popp volume by deterministic midpoint quadrature of |α ∧ dα| over
    /// the fundamental domain on an n³ grid; cross-validates the closed
    /// form.
    pub fn popp_volume_quadrature(&self, n: usize) -> Result<f64> {
        let lat = self.lattice().ok_or(Error::Unsupported {
            op: "popp_volume_quadrature",
            model: self.name(),
            reason: "no compact fundamental domain",
        })?;
        let (hx, hz) = (lat.a / n as f64, lat.c / n as f64);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let q = [
                        (i as f64 + 0.5) * hx,
                        (j as f64 + 0.5) * hx,
                        (k as f64 + 0.5) * hz,
                    ];
                    total += self.popp_density(q).abs();
                }
            }
        }
        Ok(total * hx * hx * hz)
    }

    /// Density of α ∧ dα against dx ∧ dy ∧ dz.
    pub fn popp_density(&self, q: [f64; 3]) -> f64 {
        let a = self.alpha(q);
        let (oxy, oxz, oyz) = self.dalpha(q);
        a[0] * oyz - a[1] * oxz + a[2] * oxy
    }

    /// Draw a deterministic sample of chart points (used by the invariant
    /// checks and the CLI verification paths).
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = SplitMix64::new(seed);
        let mut pts = Vec::with_capacity(count);
        while pts.len() < count {
            let q = match self.id {
                ModelId::Heisenberg | ModelId::MagneticTorus { .. } => {
                    let a = torus_side();
                    [rng.range(0.0, a), rng.range(0.0, a), rng.range(0.0, TAU)]
                }
                ModelId::KeplerHeisenberg => [
                    rng.range(-2.0, 2.0),
                    rng.range(-2.0, 2.0),
                    rng.range(-2.0, 2.0),
                ],
            };
            if self.chart_check(q).is_ok() {
                pts.push(q);
            }
        }
        pts
    }
}

fn kepler_d(q: [f64; 3]) -> f64 {
    let r2 = q[0] * q[0] + q[1] * q[1];
    r2 * r2 + 16.0 * q[2] * q[2]
}

fn kepler_d_grad(q: [f64; 3]) -> [f64; 3] {
    let r2 = q[0] * q[0] + q[1] * q[1];
    [4.0 * q[0] * r2, 4.0 * q[1] * r2, 32.0 * q[2]]
}

/// Kepler-Heisenberg dilation δ_λ on phase space:
/// (x, y, z) → (λx, λy, λ²z), (ξx, ξy, ξz) → (ξx/λ, ξy/λ, ξz/λ²).
/// The cometric is invariant under δ_λ, so unit-speed geodesics map to
/// unit-speed geodesics with the same time parameter.
pub fn kepler_dilation(lambda: f64, pt: &PhasePoint) -> PhasePoint {
    let [x, y, z] = pt.position;
    let [gx, gy, gz] = pt.momentum;
    PhasePoint {
        position: [lambda * x, lambda * y, lambda * lambda * z],
        momentum: [gx / lambda, gy / lambda, gz / (lambda * lambda)],
    }
}

/// Frame/contact-form invariant report over a deterministic point sample:
/// max |α(X)|, |α(Y)|, |α(R) − 1|, |dα(X, Y) − 1| and |dα(R, ·)|.
#[derive(Debug, Clone, Serialize)]
pub struct FrameInvariants {
    pub model: String,
    pub points: usize,
    pub max_alpha_x: f64,
    pub max_alpha_y: f64,
    pub max_alpha_reeb_dev: f64,
    pub max_area_dev: f64,
    pub max_reeb_contraction: f64,
}

pub fn verify_frame_invariants(
    model: &ContactModel,
    count: usize,
    seed: u64,
) -> Result<FrameInvariants> {
    let mut inv = FrameInvariants {
        model: model.name().to_string(),
        points: count,
        max_alpha_x: 0.0,
        max_alpha_y: 0.0,
        max_alpha_reeb_dev: 0.0,
        max_area_dev: 0.0,
        max_reeb_contraction: 0.0,
    };
    for q in model.sample_points(count, seed) {
        let (x, y) = model.frame(q);
        let a = model.alpha(q);
        let r = model.reeb_field(q)?;
        inv.max_alpha_x = inv.max_alpha_x.max(ContactModel::pair(a, x).abs());
        inv.max_alpha_y = inv.max_alpha_y.max(ContactModel::pair(a, y).abs());
        inv.max_alpha_reeb_dev =
            inv.max_alpha_reeb_dev.max((ContactModel::pair(a, r) - 1.0).abs());
        inv.max_area_dev = inv.max_area_dev.max((model.dalpha_eval(q, x, y) - 1.0).abs());
        for e in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            inv.max_reeb_contraction =
                inv.max_reeb_contraction.max(model.dalpha_eval(q, r, e).abs());
        }
    }
    Ok(inv)
}
