//! Shared test oracles, independent of the library's integration paths.

use reeblab::contact::PhasePoint;

/// Closed-form Heisenberg geodesic through (q0, xi0), derived directly
/// from the conservation of xi_y and xi_z and the resulting circular
/// motion of the horizontal momentum components: with h = xi_z,
/// u + iv rotates as e^{-iht}, (x, y) integrates to a circle of radius
/// |w0|/|h|, and z comes from the antiderivative of -x v.
pub struct HeisenbergGeodesic {
    x0: f64,
    y0: f64,
    z0: f64,
    u0: f64,
    v0: f64,
    xi_y: f64,
    h: f64,
}

impl HeisenbergGeodesic {
    pub fn new(p0: &PhasePoint) -> Self {
        let [x0, y0, z0] = p0.position;
        let [xi_x, xi_y, xi_z] = p0.momentum;
        Self {
            x0,
            y0,
            z0,
            u0: xi_x,
            v0: xi_y - x0 * xi_z,
            xi_y,
            h: xi_z,
        }
    }

    pub fn at(&self, t: f64) -> PhasePoint {
        let (x0, y0, z0, u0, v0, h) = (self.x0, self.y0, self.z0, self.u0, self.v0, self.h);
        if h.abs() < 1e-12 {
            // straight-line limit
            let x = x0 + u0 * t;
            let y = y0 + v0 * t;
            let z = z0 - v0 * (x0 * t + 0.5 * u0 * t * t);
            return PhasePoint::new([x, y, z], [u0, self.xi_y, h]);
        }
        let (st, ct) = (h * t).sin_cos();
        let s2t = (2.0 * h * t).sin();
        let x = x0 + (u0 * st + v0 * (1.0 - ct)) / h;
        let y = y0 + (v0 * st - u0 * (1.0 - ct)) / h;
        // z = z0 - x0 (y - y0) - (1/h) * [ u0 v0 st^2/h - (u0^2+v0^2) t/2
        //       + (u0^2 - v0^2) s2t/(4h) + v0^2 st/h - u0 v0 (1-ct)/h ]
        let bracket = u0 * v0 * st * st / h - (u0 * u0 + v0 * v0) * t / 2.0
            + (u0 * u0 - v0 * v0) * s2t / (4.0 * h)
            + v0 * v0 * st / h
            - u0 * v0 * (1.0 - ct) / h;
        let z = z0 - x0 * (y - y0) - bracket / h;
        let u = u0 * ct + v0 * st;
        PhasePoint::new([x, y, z], [u, self.xi_y, h])
    }
}

/// Sup distance in phase space between a trajectory sample list and the
/// oracle.
pub fn sup_oracle_error(
    oracle: &HeisenbergGeodesic,
    samples: &[(f64, PhasePoint)],
) -> f64 {
    let mut sup: f64 = 0.0;
    for (t, pt) in samples {
        let exact = oracle.at(*t);
        for i in 0..3 {
            sup = sup.max((pt.position[i] - exact.position[i]).abs());
            sup = sup.max((pt.momentum[i] - exact.momentum[i]).abs());
        }
    }
    sup
}

#[allow(dead_code)]
pub fn assert_close(actual: f64, expected: f64, tol: f64, label: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{label}: {actual} vs {expected} (tol {tol})"
    );
}
