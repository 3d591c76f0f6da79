//! Heat-type traces of the band sector and their Poisson closed form.
//!
//! The band sector of the Heisenberg spectrum sums to
//!
//!   Z_o(z) = Σ_{m≥1} 2m Σ_{n≥0} e^{−(2n+1)mz} = Σ_{m≥1} m / sinh(mz),
//!
//! and Poisson summation of m z/sinh(mz) (whose Fourier transform is
//! π²/(1 + cosh(π·))) turns this into the closed form
//!
//!   Z_o(z) = π²/(4z²) − 1/(2z) + (π²/z²) Σ_{l≥1} 1/(1 + cosh(2π²l/z)).
//!
//! The correction series carries the lengths of the closed geodesics: each
//! exponent 2π²l equals L²/4 for L = 2π√(2l). On the boundary Re z → 0⁺
//! the closed form has pole locations at z = 2πil/(2k+1), the Reeb-period
//! resonances probed by [`pole_probe`].

use crate::error::{Error, Result};
use crate::spectra::SpectrumTable;
use crate::util::{fmt_f64, least_squares};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

const PI: f64 = std::f64::consts::PI;

/// 1/sinh(w) evaluated as 2e^{−w}/(1 − e^{−2w}); stable for Re w > 0 of
/// any size.
fn inv_sinh(w: Complex64) -> Complex64 {
    let e = (-w).exp();
    2.0 * e / (1.0 - e * e)
}

/// 1/(1 + cosh(a)) evaluated as 2e^{−a}/(1 + e^{−a})²; stable for large
/// Re a.
fn inv_one_plus_cosh(a: Complex64) -> Complex64 {
    let e = (-a).exp();
    2.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Partial band-sector trace Σ_{m≤cutoff} 2m Σ_{n≥0} e^{−(2n+1)mz} with the
/// inner geometric sum in closed form, plus a rigorous tail bound for the
/// omitted m > cutoff terms.
pub fn trace_partial(z: Complex64, cutoff: usize) -> Result<(Complex64, f64)> {
    if !(z.re > 0.0) {
        return Err(Error::InvalidArgument {
            name: "z",
            reason: format!("the trace needs Re z > 0, got {z}"),
        });
    }
    if cutoff < 1 {
        return Err(Error::InvalidArgument {
            name: "cutoff",
            reason: "cutoff must be at least 1".into(),
        });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 1..=cutoff {
        let mf = m as f64;
        sum += mf * inv_sinh(mf * z);
    }
    // tail: |m / sinh(m z)| ≤ 2 m e^{−mσ} / (1 − e^{−2(M+1)σ}), σ = Re z,
    // and Σ_{m>M} m x^m = x^{M+1}((M+1)(1−x) + x)/(1−x)².
    let sigma = z.re;
    let x = (-sigma).exp();
    let mp1 = (cutoff + 1) as f64;
    let geom = x.powf(mp1) * (mp1 * (1.0 - x) + x) / ((1.0 - x) * (1.0 - x));
    let tail = 2.0 * geom / (1.0 - (-2.0 * mp1 * sigma).exp());
    Ok((sum, tail))
}

/// The exponentially small correction series
/// (π²/z²) Σ_{l≥1} 1/(1 + cosh(2π²l/z)), evaluated stably (this is the
/// remainder of the closed form after its power part).
pub fn trace_remainder(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(Error::InvalidArgument {
            name: "z",
            reason: format!("the trace needs Re z > 0, got {z}"),
        });
    }
    let c = (1.0 / z).re; // Re(1/z) > 0 for Re z > 0
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 1..=256 {
        let a = 2.0 * PI * PI * l as f64 / z;
        let term = inv_one_plus_cosh(a);
        sum += term;
        // the terms decay like e^{−2π² l Re(1/z)}
        if 2.0 * (-2.0 * PI * PI * (l + 1) as f64 * c).exp() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    Ok(PI * PI / (z * z) * sum)
}

/// Closed form of the band-sector trace:
/// π²/(4z²) − 1/(2z) + (π²/z²) Σ_{l≥1} 1/(1 + cosh(2π²l/z)).
pub fn heisenberg_trace_closed(z: Complex64) -> Result<Complex64> {
    let remainder = trace_remainder(z)?;
    Ok(PI * PI / (4.0 * z * z) - 0.5 / z + remainder)
}

/// Trace profile over a z-grid: partial sums, closed-form values,
/// residuals, and tail bounds.
#[derive(Debug, Clone, Serialize)]
pub struct TraceProfile {
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub z: (f64, f64),
    pub partial: (f64, f64),
    pub closed: (f64, f64),
    pub residual: f64,
    pub tail_bound: f64,
}

/// Cutoff that pushes the partial-sum tail below 1e−12 at Re z = sigma.
pub fn default_cutoff(sigma: f64) -> usize {
    ((45.0 / sigma).ceil() as usize).max(64)
}

pub fn trace_profile(z_grid: &[Complex64]) -> Result<TraceProfile> {
    let mut rows = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let cutoff = default_cutoff(z.re);
        let (partial, tail) = trace_partial(z, cutoff)?;
        let closed = heisenberg_trace_closed(z)?;
        rows.push(TraceRow {
            z: (z.re, z.im),
            partial: (partial.re, partial.im),
            closed: (closed.re, closed.im),
            residual: (partial - closed).norm(),
            tail_bound: tail,
        });
    }
    Ok(TraceProfile { rows })
}

impl TraceProfile {
    /// CSV with columns
    /// `re_z,im_z,partial_re,partial_im,closed_re,closed_im,residual,tail_bound`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "re_z,im_z,partial_re,partial_im,closed_re,closed_im,residual,tail_bound"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(r.z.0),
                fmt_f64(r.z.1),
                fmt_f64(r.partial.0),
                fmt_f64(r.partial.1),
                fmt_f64(r.closed.0),
                fmt_f64(r.closed.1),
                fmt_f64(r.residual),
                fmt_f64(r.tail_bound)
            )?;
        }
        Ok(())
    }
}

/// One remainder sample R(z) of the trace after removing the power part.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RemainderSample {
    pub z: f64,
    pub remainder: f64,
}

/// Remainder from the closed form (stable at any z > 0, including the
/// deep asymptotic range z ≤ 0.2 where the power part dwarfs the
/// correction by hundreds of orders of magnitude).
pub fn remainder_samples_closed(z_grid: &[f64]) -> Result<Vec<RemainderSample>> {
    z_grid
        .iter()
        .map(|&z| {
            let r = trace_remainder(Complex64::new(z, 0.0))?;
            Ok(RemainderSample { z, remainder: r.re })
        })
        .collect()
}

/// Remainder from the direct partial sum, R = Z_o − π²/(4z²) + 1/(2z).
/// Only meaningful at moderate z (roughly z ≥ 0.5) where the correction
/// stays above the double-precision floor of the subtraction.
pub fn remainder_samples_partial(z_grid: &[f64]) -> Result<Vec<RemainderSample>> {
    z_grid
        .iter()
        .map(|&z| {
            let zc = Complex64::new(z, 0.0);
            let (partial, _) = trace_partial(zc, default_cutoff(z))?;
            let power = PI * PI / (4.0 * z * z) - 0.5 / z;
            Ok(RemainderSample { z, remainder: partial.re - power })
        })
        .collect()
}

/// Extracted geodesic length estimates from the exponential decay of the
/// trace remainder.
#[derive(Debug, Clone, Serialize)]
pub struct LengthExtraction {
    /// Fitted exponents E in R ≈ (A/z²) e^{−E/z}.
    pub exponents: Vec<f64>,
    /// Lengths L = 2√E.
    pub lengths: Vec<f64>,
}

/// Fit log(z² R(z)) against a − E/z and convert each exponent to a length.
/// A second exponent is reported when the residual after removing the
/// leading term still behaves like a clean exponential.
pub fn extract_lengths(samples: &[RemainderSample]) -> Result<LengthExtraction> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 remainder samples, got {}",
            samples.len()
        )));
    }
    let fit_once = |pts: &[RemainderSample]| -> Result<(f64, f64)> {
        for s in pts {
            if !(s.z > 0.0) || !s.remainder.is_finite() || s.remainder <= 0.0 {
                return Err(Error::Fit(format!(
                    "remainder at z = {} is below numerical noise (value {}); \
                     refine the z-grid or move to smaller z",
                    s.z, s.remainder
                )));
            }
        }
        let rows: Vec<Vec<f64>> = pts.iter().map(|s| vec![1.0, -1.0 / s.z]).collect();
        let rhs: Vec<f64> = pts
            .iter()
            .map(|s| (s.remainder * s.z * s.z).ln())
            .collect();
        let c = least_squares(&rows, &rhs, None)
            .ok_or_else(|| Error::Fit("degenerate z-grid for the exponent fit".into()))?;
        Ok((c[0], c[1]))
    };
    let (log_a, e1) = fit_once(samples)?;
    if !(e1 > 0.0) {
        return Err(Error::Fit(format!(
            "fitted exponent {e1} is not positive; the grid does not resolve the correction"
        )));
    }
    let mut exponents = vec![e1];
    // try the next exponent after peeling the fitted leading term
    let peeled: Vec<RemainderSample> = samples
        .iter()
        .map(|s| RemainderSample {
            z: s.z,
            remainder: s.remainder - (log_a - e1 / s.z).exp() / (s.z * s.z),
        })
        .collect();
    if peeled.iter().all(|s| s.remainder > 0.0) {
        if let Ok((_, e2)) = fit_once(&peeled) {
            if e2 > e1 * 1.5 && e2.is_finite() {
                exponents.push(e2);
            }
        }
    }
    let lengths = exponents.iter().map(|e| 2.0 * e.sqrt()).collect();
    Ok(LengthExtraction { exponents, lengths })
}

/// Growth probe of |Z_o(ε + iτ)| as ε ↓ 0 with the cutoff rule
/// M(ε) = ceil(rule/ε). The fitted exponent p in |Z| ~ ε^{−p} detects the
/// boundary poles: p ≈ 2 at the Reeb resonances τ = 2πl/(2k+1), bounded
/// values elsewhere.
#[derive(Debug, Clone, Serialize)]
pub struct PoleProbe {
    pub tau: f64,
    pub rows: Vec<PoleProbeRow>,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoleProbeRow {
    pub epsilon: f64,
    pub abs_value: f64,
    pub cutoff: usize,
    pub tail_bound: f64,
}

pub fn pole_probe(tau: f64, epsilons: &[f64], cutoff_rule: f64) -> Result<PoleProbe> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidArgument {
            name: "epsilons",
            reason: "need at least two ε values to fit a growth exponent".into(),
        });
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument {
                name: "epsilons",
                reason: format!("ε must be positive, got {eps}"),
            });
        }
        let cutoff = ((cutoff_rule / eps).ceil() as usize).max(8);
        let (value, tail) = trace_partial(Complex64::new(eps, tau), cutoff)?;
        rows.push(PoleProbeRow {
            epsilon: eps,
            abs_value: value.norm(),
            cutoff,
            tail_bound: tail,
        });
    }
    // log |Z| = const + p log(1/ε)
    let basis: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![1.0, (1.0 / r.epsilon).ln()])
        .collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.abs_value.max(1e-300).ln()).collect();
    let c = least_squares(&basis, &rhs, None)
        .ok_or_else(|| Error::Fit("degenerate ε ladder".into()))?;
    Ok(PoleProbe { tau, rows, exponent: c[1] })
}

pub fn write_pole_probe_csv<W: Write>(probe: &PoleProbe, mut w: W) -> std::io::Result<()> {
    writeln!(w, "tau,epsilon,abs_value,cutoff,tail_bound,exponent")?;
    for r in &probe.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(probe.tau),
            fmt_f64(r.epsilon),
            fmt_f64(r.abs_value),
            r.cutoff,
            fmt_f64(r.tail_bound),
            fmt_f64(probe.exponent)
        )?;
    }
    Ok(())
}

/// Heat-type trace of an assembled spectrum table, Σ mult·e^{−λz}, with
/// the spectral truncation bounded through the Weyl growth of the omitted
/// part (density ≈ popp/16 · λ dλ beyond the table cutoff).
pub fn trace_from_table(
    table: &SpectrumTable,
    popp_volume: f64,
    z: Complex64,
) -> Result<(Complex64, f64)> {
    if !(z.re > 0.0) {
        return Err(Error::InvalidArgument {
            name: "z",
            reason: format!("the trace needs Re z > 0, got {z}"),
        });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for e in &table.entries {
        sum += e.multiplicity as f64 * (-z * e.lambda).exp();
    }
    let sigma = z.re;
    let lam = table.lambda_max;
    let tail = popp_volume / 16.0 * (-sigma * lam).exp() * (lam / sigma + 1.0 / (sigma * sigma));
    Ok((sum, tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn partial_matches_direct_double_sum() {
        // the two routes to the band trace: the geometric closed form per
        // mode against the raw double sum
        let z = 0.8;
        let mut direct = 0.0;
        for m in 1..=60 {
            for n in 0..200 {
                direct += 2.0 * m as f64 * (-((2 * n + 1) * m) as f64 * z).exp();
            }
        }
        let (val, _) = trace_partial(c(z, 0.0), 60).unwrap();
        assert!((val.re - direct).abs() < 1e-12, "{} vs {direct}", val.re);
    }

    #[test]
    fn closed_form_identity_on_real_axis() {
        for z in [0.1, 0.2, 0.5, 1.0, 2.0] {
            let cutoff = default_cutoff(z);
            let (partial, tail) = trace_partial(c(z, 0.0), cutoff).unwrap();
            let closed = heisenberg_trace_closed(c(z, 0.0)).unwrap();
            let residual = (partial - closed).norm();
            assert!(
                residual <= tail + 1e-10,
                "z = {z}: residual {residual}, tail {tail}"
            );
            assert!(residual <= 1e-8, "z = {z}: residual {residual}");
        }
    }

    #[test]
    fn large_z_dominated_by_first_term() {
        // the (m, n) = (1, 0) term 2e^{−z} carries the whole sum; the next
        // contributions are 4e^{−2z} (m = 2) and 2e^{−3z} (n = 1)
        let z = 10.0;
        let (val, _) = trace_partial(c(z, 0.0), 64).unwrap();
        let leading = 2.0 * (-z).exp();
        let rel = ((val.re - leading) / leading).abs();
        assert!(rel < 2.1 * (-z).exp(), "relative truncation error {rel}");
    }

    #[test]
    fn weyl_limit_of_the_trace() {
        // z² Z_o → π²/4 from below, and the −1/(2z) correction accounts for
        // the gap
        let mut prev = 0.0;
        for z in [0.1, 0.05, 0.02] {
            let v = heisenberg_trace_closed(c(z, 0.0)).unwrap().re;
            let scaled = v * z * z;
            assert!(scaled > prev, "monotone trend violated at z = {z}");
            prev = scaled;
            let corrected = (v + 0.5 / z) * 4.0 * z * z / (PI * PI);
            assert!((0.999..=1.001).contains(&corrected), "z = {z}: {corrected}");
        }
        assert!((prev - PI * PI / 4.0).abs() / (PI * PI / 4.0) < 0.01);
    }

    #[test]
    fn correction_series_is_small_and_positive() {
        let z = 0.5;
        let r = trace_remainder(c(z, 0.0)).unwrap().re;
        assert!(r > 0.0);
        let bound = PI * PI / (z * z) * 2.0 * (-2.0 * PI * PI / z).exp() * 1.01;
        assert!(r < bound, "remainder {r} vs bound {bound}");
    }

    #[test]
    fn extract_length_from_closed_remainder() {
        let grid: Vec<f64> = (0..=12).map(|i| 0.08 + 0.01 * i as f64).collect();
        let samples = remainder_samples_closed(&grid).unwrap();
        let ext = extract_lengths(&samples).unwrap();
        let exact = crate::contact::TAU * 2.0_f64.sqrt();
        assert!(
            (ext.lengths[0] - exact).abs() / exact < 0.01,
            "L1 = {} vs {exact}",
            ext.lengths[0]
        );
        assert!((ext.exponents[0] - 2.0 * PI * PI).abs() < 1e-6);
    }

    #[test]
    fn extract_length_synthetic() {
        // R(z) = e^{−5/z}/z² recovers E = 5 exactly
        let samples: Vec<RemainderSample> = (1..=8)
            .map(|i| {
                let z = 0.1 * i as f64;
                RemainderSample { z, remainder: (-5.0 / z).exp() / (z * z) }
            })
            .collect();
        let ext = extract_lengths(&samples).unwrap();
        assert!((ext.exponents[0] - 5.0).abs() < 1e-10);
        assert!((ext.lengths[0] - 2.0 * 5.0_f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn extraction_from_partial_sums_at_moderate_z() {
        // fully independent route: raw partial sums minus the power part
        // still resolve the leading exponent at moderate z
        let grid: Vec<f64> = (0..=7).map(|i| 0.7 + 0.1 * i as f64).collect();
        let samples = remainder_samples_partial(&grid).unwrap();
        let ext = extract_lengths(&samples).unwrap();
        let exact = crate::contact::TAU * 2.0_f64.sqrt();
        assert!(
            (ext.lengths[0] - exact).abs() / exact < 0.005,
            "L1 = {}",
            ext.lengths[0]
        );
    }

    #[test]
    fn tail_bound_decreases_with_cutoff() {
        let z = c(0.5, 0.0);
        let (_, t1) = trace_partial(z, 50).unwrap();
        let (_, t2) = trace_partial(z, 100).unwrap();
        let (_, t3) = trace_partial(z, 200).unwrap();
        assert!(t1 > t2 && t2 > t3, "{t1} {t2} {t3}");
    }

    #[test]
    fn extraction_stable_under_grid_refinement() {
        let coarse: Vec<f64> = (0..=12).map(|i| 0.08 + 0.01 * i as f64).collect();
        let fine: Vec<f64> = (0..=24).map(|i| 0.08 + 0.005 * i as f64).collect();
        let l_coarse = extract_lengths(&remainder_samples_closed(&coarse).unwrap())
            .unwrap()
            .lengths[0];
        let l_fine = extract_lengths(&remainder_samples_closed(&fine).unwrap())
            .unwrap()
            .lengths[0];
        assert!(
            (l_coarse - l_fine).abs() / l_fine < 0.002,
            "{l_coarse} vs {l_fine}"
        );
    }

    #[test]
    fn rejects_noise_floor_input() {
        let samples: Vec<RemainderSample> = (1..=6)
            .map(|i| RemainderSample { z: 0.1 * i as f64, remainder: -1e-20 })
            .collect();
        assert!(extract_lengths(&samples).is_err());
    }

    #[test]
    fn pole_probe_detects_reeb_resonance() {
        let eps = [0.1, 0.05, 0.025];
        let probe = pole_probe(crate::contact::TAU, &eps, 10.0).unwrap();
        assert!(
            (1.8..=2.2).contains(&probe.exponent),
            "exponent {}",
            probe.exponent
        );
        // the incommensurate point grows far slower than the resonance;
        // the boundary pole set is dense, so the growth never quite
        // vanishes (the exponent on this ladder sits near 0.53)
        let probe = pole_probe(1.0, &eps, 10.0).unwrap();
        assert!(probe.exponent < 0.7, "exponent {}", probe.exponent);
        assert!(probe.rows.iter().all(|r| r.abs_value < 20.0));
    }

    #[test]
    fn pole_probe_odd_fraction_resonance() {
        let eps = [0.1, 0.05, 0.025];
        let probe = pole_probe(crate::contact::TAU / 3.0, &eps, 10.0).unwrap();
        assert!(probe.exponent > 1.0, "exponent {}", probe.exponent);
    }

    #[test]
    fn conjugate_symmetry() {
        for (re, im) in [(0.3, 0.7), (0.08, 2.0), (1.2, -0.4)] {
            let (a, _) = trace_partial(c(re, im), 200).unwrap();
            let (b, _) = trace_partial(c(re, -im), 200).unwrap();
            assert!((a.conj() - b).norm() < 1e-12);
            let ca = heisenberg_trace_closed(c(re, im)).unwrap();
            let cb = heisenberg_trace_closed(c(re, -im)).unwrap();
            assert!((ca.conj() - cb).norm() < 1e-12);
        }
    }

    #[test]
    fn table_trace_matches_band_trace() {
        // the assembled analytic table reproduces the band trace once the
        // torus sector is subtracted
        let table = crate::spectra::heisenberg_spectrum(60.0).unwrap();
        let z = c(1.0, 0.0);
        let popp = 4.0 * PI * PI;
        let (total, tail) = trace_from_table(&table, popp, z).unwrap();
        let mut torus = Complex64::new(0.0, 0.0);
        for e in &table.entries {
            if matches!(e.sector, crate::spectra::Sector::Torus { .. }) {
                torus += e.multiplicity as f64 * (-z * e.lambda).exp();
            }
        }
        let (band, _) = trace_partial(z, 200).unwrap();
        let diff = (total - torus - band).norm();
        assert!(diff <= tail + 1e-10, "diff {diff}, tail {tail}");
    }
}
