//! Per-mode magnetic Schrödinger operators on the twisted torus.
//!
//! The z-Fourier mode m of the sub-Riemannian Laplacian acts on functions
//! over the square torus of side L = √(2π) as
//!
//!   H_m = −∂x² − (∂y − i m b x)²
//!
//! with the twisted boundary condition f(x + L, y) = e^{i m b L y} f(x, y)
//! and plain periodicity in y. The discretization is second-order finite
//! differences with magnetic link phases: y-links carry the Landau-gauge
//! Peierls phase e^{−i β i} (β = 2π φ / N², φ = m b flux quanta) and the
//! x-wrap links carry the twist e^{i γ j} (γ = 2π φ / N), which keeps the
//! flux per plaquette uniform at 2π φ / N² over the whole torus, seam
//! columns included.
//!
//! When the grid size N is a multiple of φ, translation by N/φ sites in y
//! commutes with the discrete operator, so the matrix splits into φ sectors
//! of dimension N²/φ; this is what makes the high-mode solves cheap. The
//! dense path covers every other grid.

use crate::contact::{ContactModel, ModelId};
use crate::error::{Error, Result};
use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;

/// Grid side length of the compact models.
fn side() -> f64 {
    crate::contact::TAU.sqrt()
}

/// Magnetic scalar of the model (flux density per unit area).
fn magnetic_scalar(model: &ContactModel) -> Result<f64> {
    match model.id {
        ModelId::Heisenberg => Ok(1.0),
        ModelId::MagneticTorus { b } => Ok(b),
        ModelId::KeplerHeisenberg => Err(Error::Unsupported {
            op: "magnetic_mode_spectrum",
            model: model.name(),
            reason: "mode decomposition needs the compact circle-bundle structure",
        }),
    }
}

/// Integer flux quanta of mode `m`; errors when the mode field does not
/// quantize (the twisted boundary condition would be multivalued).
pub fn mode_flux_quanta(model: &ContactModel, m: i64) -> Result<i64> {
    if m == 0 {
        return Err(Error::Discretization {
            mode: 0,
            reason: "mode 0 is the flat torus sector; it carries no magnetic field".into(),
        });
    }
    let b = magnetic_scalar(model)?;
    let flux = m as f64 * b;
    let quanta = flux.round();
    if (flux - quanta).abs() > 1e-9 || quanta == 0.0 {
        return Err(Error::Discretization {
            mode: m,
            reason: format!(
                "mode field m·b = {flux} is not an integer number of flux quanta; \
                 the twisted boundary condition is inconsistent"
            ),
        });
    }
    Ok(quanta as i64)
}

/// Dense discretization of mode `m` on an N×N grid (complex Hermitian,
/// dimension N²). Exposed for oracle tests and the bounded-potential
/// perturbation checks.
pub fn mode_matrix_dense(model: &ContactModel, m: i64, n: usize) -> Result<Array2<Complex64>> {
    let phi = mode_flux_quanta(model, m)?;
    check_grid(n, phi, m)?;
    let dim = n * n;
    let h = side() / n as f64;
    let inv_h2 = 1.0 / (h * h);
    let beta = crate::contact::TAU * phi as f64 / (n * n) as f64;
    let gamma = crate::contact::TAU * phi as f64 / n as f64;
    let idx = |i: usize, j: usize| i + n * j;
    let mut mat = Array2::<Complex64>::zeros((dim, dim));
    for j in 0..n {
        for i in 0..n {
            let row = idx(i, j);
            mat[[row, row]] += Complex64::new(4.0 * inv_h2, 0.0);
            // x-link: twist phase on the wrap column
            let (ip, ux) = if i + 1 < n {
                (i + 1, Complex64::new(1.0, 0.0))
            } else {
                (0, Complex64::from_polar(1.0, gamma * j as f64))
            };
            let hop = -ux * inv_h2;
            mat[[row, idx(ip, j)]] += hop;
            mat[[idx(ip, j), row]] += hop.conj();
            // y-link: Landau phase e^{iβ i}
            let jp = (j + 1) % n;
            let uy = Complex64::from_polar(1.0, -beta * i as f64);
            let hop = -uy * inv_h2;
            mat[[row, idx(i, jp)]] += hop;
            mat[[idx(i, jp), row]] += hop.conj();
        }
    }
    Ok(mat)
}

fn check_grid(n: usize, phi: i64, m: i64) -> Result<()> {
    // at least a few grid points per magnetic length 1/sqrt(|φ|)
    let min_n = (7.2 * (phi.unsigned_abs() as f64).sqrt()).ceil() as usize;
    if n < min_n.max(8) {
        return Err(Error::Discretization {
            mode: m,
            reason: format!(
                "grid {n} too coarse for {phi} flux quanta (need at least {})",
                min_n.max(8)
            ),
        });
    }
    Ok(())
}

/// Translation-sector matrices for the blocked solve (valid when φ | N):
/// sector r of the y-translation by N/φ sites, dimension N·(N/φ).
fn mode_matrix_sector(
    n: usize,
    phi: i64,
    sector: i64,
) -> Array2<Complex64> {
    let q = phi.unsigned_abs() as usize;
    let s = n / q;
    let dim = n * s;
    let h = side() / n as f64;
    let inv_h2 = 1.0 / (h * h);
    let beta = crate::contact::TAU * phi as f64 / (n * n) as f64;
    let gamma = crate::contact::TAU * phi as f64 / n as f64;
    let omega = Complex64::from_polar(1.0, crate::contact::TAU * sector as f64 / q as f64);
    let idx = |i: usize, j: usize| i + n * j;
    let mut mat = Array2::<Complex64>::zeros((dim, dim));
    for j in 0..s {
        for i in 0..n {
            let row = idx(i, j);
            mat[[row, row]] += Complex64::new(4.0 * inv_h2, 0.0);
            let (ip, ux) = if i + 1 < n {
                (i + 1, Complex64::new(1.0, 0.0))
            } else {
                (0, Complex64::from_polar(1.0, gamma * j as f64))
            };
            let hop = -ux * inv_h2;
            mat[[row, idx(ip, j)]] += hop;
            mat[[idx(ip, j), row]] += hop.conj();
            // y-link: crossing the strip boundary picks up the sector phase
            let uy = Complex64::from_polar(1.0, -beta * i as f64) * inv_h2;
            let (jp, phase) = if j + 1 < s {
                (j + 1, Complex64::new(1.0, 0.0))
            } else {
                (0, omega)
            };
            let hop = -uy * phase;
            mat[[row, idx(i, jp)]] += hop;
            mat[[idx(i, jp), row]] += hop.conj();
        }
    }
    mat
}

fn eigvals(mat: Array2<Complex64>) -> Result<Vec<f64>> {
    let vals = mat
        .eigvalsh(UPLO::Lower)
        .map_err(|e| Error::Eigensolve(format!("{e}")))?;
    Ok(vals.to_vec())
}

/// All eigenvalues of the mode-m discretization below `cutoff`, sorted.
/// Chooses the blocked solve when the sector structure applies.
pub fn mode_eigenvalues(
    model: &ContactModel,
    m: i64,
    n: usize,
    cutoff: f64,
) -> Result<Vec<f64>> {
    let phi = mode_flux_quanta(model, m)?;
    check_grid(n, phi, m)?;
    let q = phi.unsigned_abs() as usize;
    let mut vals: Vec<f64> = if q > 1 && n % q == 0 {
        let mut all = Vec::new();
        for sector in 0..q as i64 {
            all.extend(eigvals(mode_matrix_sector(n, phi, sector))?);
        }
        all
    } else {
        eigvals(mode_matrix_dense(model, m, n)?)?
    };
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.retain(|&v| v <= cutoff);
    Ok(vals)
}

/// Automatic grid size for mode `m`: large enough that the second-order
/// link-phase scheme resolves every Landau level below `cutoff` to roughly
/// one percent, rounded up to a multiple of the flux so the sector solve
/// applies.
pub fn auto_grid(model: &ContactModel, m: i64, cutoff: f64) -> Result<usize> {
    let phi = mode_flux_quanta(model, m)?.unsigned_abs() as f64;
    // highest level retained below the cutoff
    let lmax = (((cutoff / phi) - 1.0) / 2.0).floor().max(0.0);
    // leading FD coefficient: the relative eigenvalue error of level l is
    // about h² φ (2l² + 2l + 1) / (8 (2l + 1))
    let coeff = phi * (2.0 * lmax * lmax + 2.0 * lmax + 1.0) / (8.0 * (2.0 * lmax + 1.0));
    let target = 0.01;
    let h = (target / coeff).sqrt();
    let mut n = (side() / h).ceil() as usize;
    let q = phi as usize;
    if q > 1 {
        n = n.div_ceil(q) * q;
    }
    Ok(n.clamp(8, 128))
}

/// Eigenvalues of the flat (mode-0) sector of the same discretization:
/// the periodic five-point Laplacian diagonalizes in discrete plane waves,
/// λ_{p,q} = (4 − 2cos(2πp/N) − 2cos(2πq/N))/h². Returns
/// (λ, p, q) triples below the cutoff.
pub fn flat_mode_eigenvalues(n: usize, cutoff: f64) -> Vec<(f64, i32, i32)> {
    let h = side() / n as f64;
    let inv_h2 = 1.0 / (h * h);
    let half = n as i32 / 2;
    let lo = -half + if n % 2 == 0 { 1 } else { 0 };
    let mut out = Vec::new();
    for p in lo..=half {
        for q in lo..=half {
            let lam = inv_h2
                * (4.0
                    - 2.0 * (crate::contact::TAU * p as f64 / n as f64).cos()
                    - 2.0 * (crate::contact::TAU * q as f64 / n as f64).cos());
            if lam <= cutoff {
                out.push((lam, p, q));
            }
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_matrix_is_hermitian() {
        let model = ContactModel::heisenberg();
        let mat = mode_matrix_dense(&model, 2, 12).unwrap();
        let n = mat.nrows();
        for i in 0..n {
            for j in 0..n {
                let d = (mat[[i, j]] - mat[[j, i]].conj()).norm();
                assert!(d < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn sector_solve_matches_dense() {
        let model = ContactModel::heisenberg();
        let n = 12;
        let m = 2;
        let mut dense = eigvals(mode_matrix_dense(&model, m, n).unwrap()).unwrap();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut blocked = Vec::new();
        for sector in 0..2 {
            blocked.extend(eigvals(mode_matrix_sector(n, 2, sector)).unwrap());
        }
        blocked.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(dense.len(), blocked.len());
        for (a, b) in dense.iter().zip(&blocked) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn mode_one_gives_odd_integers() {
        let model = ContactModel::heisenberg();
        let vals = mode_eigenvalues(&model, 1, 32, 8.0).unwrap();
        // lowest Landau levels 1, 3, 5, 7 with unit multiplicity
        assert!(vals.len() >= 4);
        for (idx, expect) in [1.0, 3.0, 5.0, 7.0].iter().enumerate() {
            let rel = (vals[idx] - expect) / expect;
            assert!(rel.abs() < 0.02, "level {idx}: {} vs {expect}", vals[idx]);
        }
    }

    #[test]
    fn mode_two_levels_are_doubly_degenerate() {
        let model = ContactModel::heisenberg();
        let vals = mode_eigenvalues(&model, 2, 32, 10.0).unwrap();
        assert!(vals.len() >= 4);
        // 2, 2, 6, 6
        assert!((vals[0] - vals[1]).abs() < 1e-6);
        assert!((vals[0] - 2.0).abs() / 2.0 < 0.02);
        assert!((vals[2] - vals[3]).abs() < 1e-6);
        assert!((vals[2] - 6.0).abs() / 6.0 < 0.02);
    }

    #[test]
    fn mode_zero_rejected() {
        let model = ContactModel::heisenberg();
        assert!(mode_flux_quanta(&model, 0).is_err());
    }

    #[test]
    fn fractional_flux_rejected() {
        let model = ContactModel::magnetic_torus(0.5).unwrap();
        assert!(mode_flux_quanta(&model, 1).is_err());
        // mode 2 at b = 0.5 carries exactly one quantum
        assert_eq!(mode_flux_quanta(&model, 2).unwrap(), 1);
    }

    #[test]
    fn flat_mode_matches_dense_laplacian() {
        // the separable template equals a brute-force eigensolve of the
        // phase-free matrix
        let n = 8;
        let h = side() / n as f64;
        let inv_h2 = 1.0 / (h * h);
        let dim = n * n;
        let idx = |i: usize, j: usize| i + n * j;
        let mut mat = Array2::<Complex64>::zeros((dim, dim));
        for j in 0..n {
            for i in 0..n {
                let row = idx(i, j);
                mat[[row, row]] += Complex64::new(4.0 * inv_h2, 0.0);
                for (ip, jp) in [((i + 1) % n, j), (i, (j + 1) % n)] {
                    let hop = Complex64::new(-inv_h2, 0.0);
                    mat[[row, idx(ip, jp)]] += hop;
                    mat[[idx(ip, jp), row]] += hop;
                }
            }
        }
        let mut dense = eigvals(mat).unwrap();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sep: Vec<f64> = flat_mode_eigenvalues(n, f64::INFINITY)
            .into_iter()
            .map(|(l, _, _)| l)
            .collect();
        assert_eq!(dense.len(), sep.len());
        for (a, b) in dense.iter().zip(&sep) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn auto_grid_is_flux_aligned() {
        let model = ContactModel::heisenberg();
        for m in [2_i64, 3, 7, 30] {
            let n = auto_grid(&model, m, 30.0).unwrap();
            assert_eq!(n % m.unsigned_abs() as usize, 0, "m = {m}, n = {n}");
        }
    }
}
