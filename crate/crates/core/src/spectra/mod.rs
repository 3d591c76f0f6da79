//! Spectra of the sub-Riemannian Laplacian with sector labels.
//!
//! For the Heisenberg quotient the spectrum is known in closed form: the
//! flat-torus sector contributes λ = 2π(p² + q²) (one eigenfunction per
//! lattice point) and the band sector contributes λ = m(2l + 1) with
//! multiplicity 2m per (m, l) label. The numeric path reproduces the band
//! sector through per-mode magnetic Schrödinger eigensolves and the torus
//! sector through the same discretization at mode 0.
//!
//! Counting checks implemented here:
//! * Weyl law N(λ) ~ (Popp volume / 32) λ²  (π²λ²/8 for Heisenberg),
//! * Landau band counts N_l(λ) ~ C λ²/(2π(2l+1))² with C the Popp volume,
//! * the vanishing torus-sector fraction.

pub mod magnetic;

use crate::contact::{ContactModel, ModelId, TAU};
use crate::error::{Error, Result};
use crate::util::{cluster_sorted, fmt_f64};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Sector {
    /// Flat-torus sector, labeled by the plane-wave lattice point.
    Torus { p: i32, q: i32 },
    /// Landau band l of the z-Fourier mode m (m ≥ 1 aggregates ±m).
    Band { l: u32, m: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub lambda: f64,
    pub multiplicity: usize,
    pub sector: Sector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Provenance {
    Analytic,
    Numeric { base_grid: usize, cluster_tol: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTable {
    pub model: String,
    pub lambda_max: f64,
    /// Sorted ascending by eigenvalue.
    pub entries: Vec<SpectrumEntry>,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

const COUNT_EPS: f64 = 1e-9;

impl SpectrumTable {
    /// Eigenvalue counting function N(λ) = Σ multiplicities with λ_j ≤ λ.
    pub fn count(&self, lambda: f64) -> usize {
        self.entries
            .iter()
            .take_while(|e| e.lambda <= lambda + COUNT_EPS)
            .map(|e| e.multiplicity)
            .sum()
    }

    /// Torus-sector count up to λ.
    pub fn torus_count(&self, lambda: f64) -> usize {
        self.entries
            .iter()
            .take_while(|e| e.lambda <= lambda + COUNT_EPS)
            .filter(|e| matches!(e.sector, Sector::Torus { .. }))
            .map(|e| e.multiplicity)
            .sum()
    }

    /// Count of band-l eigenvalues up to λ (aggregating over modes).
    pub fn band_count(&self, l: u32, lambda: f64) -> usize {
        self.entries
            .iter()
            .take_while(|e| e.lambda <= lambda + COUNT_EPS)
            .filter(|e| matches!(e.sector, Sector::Band { l: bl, .. } if bl == l))
            .map(|e| e.multiplicity)
            .sum()
    }

    /// Aggregate multiplicity of the eigenvalue nearest `lambda` within
    /// `tol` (summed over sectors).
    pub fn aggregate_multiplicity(&self, lambda: f64, tol: f64) -> usize {
        self.entries
            .iter()
            .filter(|e| (e.lambda - lambda).abs() <= tol)
            .map(|e| e.multiplicity)
            .sum()
    }

    /// Largest band index present.
    pub fn max_band(&self) -> Option<u32> {
        self.entries
            .iter()
            .filter_map(|e| match e.sector {
                Sector::Band { l, .. } => Some(l),
                _ => None,
            })
            .max()
    }

    fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            a.lambda
                .partial_cmp(&b.lambda)
                .unwrap()
                .then_with(|| sector_order(&a.sector).cmp(&sector_order(&b.sector)))
        });
    }

    /// JSON export with the documented schema:
    /// `{"model":, "lambda_max":, "entries": [{"lambda":, "mult":, "sector": "torus"|{"band": l, "mode": m}}]}`.
    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|e| {
                let sector = match e.sector {
                    Sector::Torus { .. } => serde_json::json!("torus"),
                    Sector::Band { l, m } => serde_json::json!({"band": l, "mode": m}),
                };
                serde_json::json!({
                    "lambda": e.lambda,
                    "mult": e.multiplicity,
                    "sector": sector,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "model": self.model,
            "lambda_max": self.lambda_max,
            "entries": entries,
        });
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)
    }

    /// CSV mirror with columns `lambda,mult,sector,l,m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lambda,mult,sector,l,m")?;
        for e in &self.entries {
            match e.sector {
                Sector::Torus { .. } => writeln!(
                    w,
                    "{},{},torus,,",
                    fmt_f64(e.lambda),
                    e.multiplicity
                )?,
                Sector::Band { l, m } => writeln!(
                    w,
                    "{},{},band,{},{}",
                    fmt_f64(e.lambda),
                    e.multiplicity,
                    l,
                    m
                )?,
            }
        }
        Ok(())
    }
}

fn sector_order(s: &Sector) -> (u8, i64, i64) {
    match s {
        Sector::Torus { p, q } => (0, *p as i64, *q as i64),
        Sector::Band { l, m } => (1, *l as i64, *m),
    }
}

/// Exact Heisenberg spectrum up to `lambda_max`.
pub fn heisenberg_spectrum(lambda_max: f64) -> Result<SpectrumTable> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidArgument {
            name: "lambda_max",
            reason: format!("spectral cutoff must be positive, got {lambda_max}"),
        });
    }
    let mut entries = Vec::new();
    // torus sector: plane waves of R²/√(2π)Z², one entry per lattice point
    let pmax = (lambda_max / TAU).sqrt().ceil() as i32;
    for p in -pmax..=pmax {
        for q in -pmax..=pmax {
            let lambda = TAU * (p * p + q * q) as f64;
            if lambda <= lambda_max + COUNT_EPS {
                entries.push(SpectrumEntry {
                    lambda,
                    multiplicity: 1,
                    sector: Sector::Torus { p, q },
                });
            }
        }
    }
    // band sector: λ = m(2l+1), multiplicity 2m per (m, l)
    let mmax = lambda_max.floor() as i64;
    for m in 1..=mmax {
        let mut l = 0u32;
        loop {
            let lambda = (m * (2 * l as i64 + 1)) as f64;
            if lambda > lambda_max + COUNT_EPS {
                break;
            }
            entries.push(SpectrumEntry {
                lambda,
                multiplicity: (2 * m) as usize,
                sector: Sector::Band { l, m },
            });
            l += 1;
        }
    }
    let mut table = SpectrumTable {
        model: "heisenberg".into(),
        lambda_max,
        entries,
        provenance: Provenance::Analytic,
        warnings: Vec::new(),
    };
    table.sort();
    Ok(table)
}

/// Discretization controls for the numeric path.
#[derive(Debug, Clone, Copy)]
pub struct Discretization {
    /// Grid override; `None` selects the per-mode automatic size.
    pub grid: Option<usize>,
    /// Tolerance for aggregating near-degenerate numeric eigenvalues.
    pub cluster_tol: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { grid: None, cluster_tol: 0.05 }
    }
}

/// Clustered low spectrum of the mode-m magnetic Schrödinger operator:
/// (level, multiplicity within the mode) pairs up to `cutoff`.
pub fn magnetic_mode_spectrum(
    model: &ContactModel,
    m: i64,
    disc: &Discretization,
    cutoff: f64,
) -> Result<Vec<(f64, usize)>> {
    let n = match disc.grid {
        Some(n) => n,
        None => magnetic::auto_grid(model, m, cutoff)?,
    };
    let vals = magnetic::mode_eigenvalues(model, m, n, cutoff)?;
    Ok(cluster_sorted(&vals, disc.cluster_tol))
}

/// Assemble the numeric spectrum: flat sector (mode 0) plus the band
/// sectors of every mode whose ground state can reach `lambda_max`.
/// `m_max` overrides the automatic first-omitted-mode rule (the smallest m
/// whose mode field exceeds the cutoff).
pub fn assemble_spectrum(
    model: &ContactModel,
    lambda_max: f64,
    m_max: Option<i64>,
    disc: &Discretization,
) -> Result<SpectrumTable> {
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidArgument {
            name: "lambda_max",
            reason: format!("spectral cutoff must be positive, got {lambda_max}"),
        });
    }
    let b = match model.id {
        ModelId::Heisenberg => 1.0,
        ModelId::MagneticTorus { b } => b,
        ModelId::KeplerHeisenberg => {
            return Err(Error::Unsupported {
                op: "assemble_spectrum",
                model: model.name(),
                reason: "spectral assembly needs the compact circle-bundle models",
            })
        }
    };
    let mut warnings = Vec::new();
    // first omitted mode: smallest m with mode field m·b > lambda_max
    let auto_m_max = (lambda_max / b).floor() as i64 + 1;
    let m_max = m_max.unwrap_or(auto_m_max);
    if (m_max as f64) * b <= lambda_max {
        warnings.push(format!(
            "truncation: the ground state of omitted mode {m_max} (≈ {}) lies below \
             lambda_max = {lambda_max}; the table is incomplete",
            (m_max as f64) * b
        ));
    }

    // flat sector from the same discretization at mode 0
    let n0 = disc.grid.unwrap_or(34);
    let mut entries: Vec<SpectrumEntry> = magnetic::flat_mode_eigenvalues(n0, lambda_max)
        .into_iter()
        .map(|(lambda, p, q)| SpectrumEntry {
            lambda,
            multiplicity: 1,
            sector: Sector::Torus { p, q },
        })
        .collect();

    // band sectors: modes 1..m_max-1, each level doubled for ±m
    let modes: Vec<i64> = (1..m_max).collect();
    let solved: Vec<Result<Vec<SpectrumEntry>>> = modes
        .par_iter()
        .map(|&m| {
            let levels = magnetic_mode_spectrum(model, m, disc, lambda_max)?;
            Ok(levels
                .into_iter()
                .enumerate()
                .map(|(l, (lambda, count))| SpectrumEntry {
                    lambda,
                    multiplicity: 2 * count,
                    sector: Sector::Band { l: l as u32, m },
                })
                .collect())
        })
        .collect();
    for res in solved {
        entries.extend(res?);
    }

    let mut table = SpectrumTable {
        model: model.name().into(),
        lambda_max,
        entries,
        provenance: Provenance::Numeric {
            base_grid: n0,
            cluster_tol: disc.cluster_tol,
        },
        warnings,
    };
    table.sort();
    Ok(table)
}

/// Weyl-law check report: N(λ) against (Popp/32) λ² on a λ-grid.
#[derive(Debug, Clone, Serialize)]
pub struct WeylReport {
    pub model: String,
    pub popp_volume: f64,
    pub rows: Vec<WeylRow>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeylRow {
    pub lambda: f64,
    pub count: usize,
    /// N(λ) · 32 / (λ² · Popp): tends to 1 under the Weyl law.
    pub ratio: f64,
}

pub fn weyl_count(table: &SpectrumTable, lambda: f64) -> usize {
    table.count(lambda)
}

pub fn weyl_check(model: &ContactModel, table: &SpectrumTable, lambdas: &[f64]) -> Result<WeylReport> {
    let popp = model.popp_volume()?;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let count = table.count(lambda);
            WeylRow {
                lambda,
                count,
                ratio: count as f64 * 32.0 / (lambda * lambda * popp),
            }
        })
        .collect();
    Ok(WeylReport {
        model: model.name().into(),
        popp_volume: popp,
        rows,
    })
}

pub fn write_weyl_csv<W: Write>(report: &WeylReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "lambda,count,ratio")?;
    for r in &report.rows {
        writeln!(w, "{},{},{}", fmt_f64(r.lambda), r.count, fmt_f64(r.ratio))?;
    }
    Ok(())
}

/// Landau band count N_l(λ) together with the Liouville-constant
/// prediction C λ²/(2π(2l+1))², C = Popp volume.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandCountRow {
    pub l: u32,
    pub lambda: f64,
    pub count: usize,
    pub predicted: f64,
    /// count / predicted
    pub ratio: f64,
}

pub fn landau_band_count(
    model: &ContactModel,
    table: &SpectrumTable,
    l: u32,
    lambda: f64,
) -> Result<BandCountRow> {
    let popp = model.popp_volume()?;
    let count = table.band_count(l, lambda);
    let denom = (TAU * (2.0 * l as f64 + 1.0)).powi(2);
    let predicted = popp * lambda * lambda / denom;
    Ok(BandCountRow {
        l,
        lambda,
        count,
        predicted,
        ratio: count as f64 / predicted,
    })
}

/// Fraction of the counting function carried by the torus sector; decays
/// like 1/λ, mirroring the concentration of eigenfunctions on the
/// characteristic cone.
pub fn torus_fraction(table: &SpectrumTable, lambda: f64) -> f64 {
    let total = table.count(lambda);
    if total == 0 {
        return 1.0;
    }
    table.torus_count(lambda) as f64 / total as f64
}

/// Match a numeric table against an analytic oracle: every numeric entry
/// below the verification cutoff must sit within `rel_tol` of its nearest
/// analytic eigenvalue, and the multiplicities assigned to each analytic
/// eigenvalue must add up.
#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub verified_up_to: f64,
    pub pairs: usize,
    pub max_rel_error: f64,
    pub mismatches: Vec<String>,
}

impl MatchReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn sector_class(s: &Sector) -> u8 {
    match s {
        Sector::Torus { .. } => 0,
        Sector::Band { .. } => 1,
    }
}

pub fn match_tables(
    numeric: &SpectrumTable,
    analytic: &SpectrumTable,
    rel_tol: f64,
    verify_up_to: f64,
) -> MatchReport {
    // aggregate the analytic eigenvalues by (sector class, value); the
    // torus and band sectors decouple, and keeping them apart prevents a
    // downshifted 2πn plane wave from being paired with a nearby integer
    // Landau value
    let mut analytic_values: Vec<(u8, f64, usize)> = Vec::new();
    for e in &analytic.entries {
        let class = sector_class(&e.sector);
        match analytic_values
            .iter_mut()
            .find(|(c, v, _)| *c == class && (*v - e.lambda).abs() < 1e-9)
        {
            Some((_, _, mult)) => *mult += e.multiplicity,
            None => analytic_values.push((class, e.lambda, e.multiplicity)),
        }
    }
    analytic_values.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

    let mut assigned = vec![0usize; analytic_values.len()];
    let mut mismatches = Vec::new();
    let mut max_rel: f64 = 0.0;
    let mut pairs = 0;
    for e in &numeric.entries {
        if e.lambda > verify_up_to * (1.0 + rel_tol) {
            continue;
        }
        let class = sector_class(&e.sector);
        let nearest = analytic_values
            .iter()
            .enumerate()
            .filter(|(_, (c, _, _))| *c == class)
            .min_by(|(_, (_, a, _)), (_, (_, b, _))| {
                (a - e.lambda).abs().partial_cmp(&(b - e.lambda).abs()).unwrap()
            });
        let Some((idx, (_, val, _))) = nearest else {
            mismatches.push(format!(
                "numeric eigenvalue {} has no analytic sector partner",
                e.lambda
            ));
            continue;
        };
        let rel = if *val > 0.0 {
            (e.lambda - val).abs() / val
        } else {
            e.lambda.abs()
        };
        if rel > rel_tol {
            if e.lambda <= verify_up_to {
                mismatches.push(format!(
                    "numeric eigenvalue {} has no analytic partner within {:.1}% (nearest {})",
                    e.lambda,
                    rel_tol * 100.0,
                    val
                ));
            }
            continue;
        }
        assigned[idx] += e.multiplicity;
        max_rel = max_rel.max(rel);
        pairs += 1;
    }
    for (i, (_, val, mult)) in analytic_values.iter().enumerate() {
        if *val > verify_up_to {
            continue;
        }
        if assigned[i] != *mult {
            mismatches.push(format!(
                "analytic eigenvalue {val}: assigned numeric multiplicity {} vs expected {mult}",
                assigned[i]
            ));
        }
    }
    MatchReport {
        verified_up_to: verify_up_to,
        pairs,
        max_rel_error: max_rel,
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicity_of_low_eigenvalues() {
        let t = heisenberg_spectrum(20.0).unwrap();
        // λ = 1 comes from (m, l) = (1, 0) with multiplicity 2
        assert_eq!(t.aggregate_multiplicity(1.0, 1e-9), 2);
        // λ = 3: (3, 0) and (1, 1) give 6 + 2 = 8
        assert_eq!(t.aggregate_multiplicity(3.0, 1e-9), 8);
        // λ = 2π: torus lattice points (±1, 0), (0, ±1)
        assert_eq!(t.aggregate_multiplicity(TAU, 1e-9), 4);
        // λ = 15: (15,0),(5,1),(3,2),(1,7) give 30+10+6+2 = 48
        assert_eq!(t.aggregate_multiplicity(15.0, 1e-9), 48);
    }

    #[test]
    fn band_and_torus_partition_the_count() {
        let t = heisenberg_spectrum(60.0).unwrap();
        let lambda = 55.0;
        let total = t.count(lambda);
        let torus = t.torus_count(lambda);
        let mut bands = 0;
        for l in 0..=t.max_band().unwrap() {
            bands += t.band_count(l, lambda);
        }
        assert_eq!(total, torus + bands);
    }

    #[test]
    fn count_at_zero_is_the_constant() {
        let t = heisenberg_spectrum(10.0).unwrap();
        assert_eq!(t.count(0.0), 1);
        assert_eq!(t.count(0.5), 1);
    }

    #[test]
    fn weyl_ratio_near_one() {
        let t = heisenberg_spectrum(210.0).unwrap();
        let model = ContactModel::heisenberg();
        let report = weyl_check(&model, &t, &[200.0]).unwrap();
        let ratio = report.rows[0].ratio;
        assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
        // popp/32 = π²/8
        assert!((report.popp_volume / 32.0 - std::f64::consts::PI.powi(2) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn weyl_ratio_trends_to_one() {
        let t = heisenberg_spectrum(410.0).unwrap();
        let model = ContactModel::heisenberg();
        let lambdas: Vec<f64> = (2..=8).map(|i| 50.0 * i as f64).collect();
        let report = weyl_check(&model, &t, &lambdas).unwrap();
        for row in &report.rows {
            assert!(
                (0.9..=1.1).contains(&row.ratio),
                "lambda {}: ratio {}",
                row.lambda,
                row.ratio
            );
        }
        let first = (report.rows.first().unwrap().ratio - 1.0).abs();
        let last = (report.rows.last().unwrap().ratio - 1.0).abs();
        assert!(last <= first, "no trend toward 1: {first} vs {last}");
    }

    #[test]
    fn landau_band_counts_near_prediction() {
        let model = ContactModel::heisenberg();
        let t = heisenberg_spectrum(110.0).unwrap();
        for l in 0..3 {
            let row = landau_band_count(&model, &t, l, 100.0).unwrap();
            assert!(
                (0.85..=1.15).contains(&row.ratio),
                "l = {l}: ratio {}",
                row.ratio
            );
        }
        // l = 0 band count is the arithmetic sum Σ 2m = M(M+1)
        let row = landau_band_count(&model, &t, 0, 100.0).unwrap();
        assert_eq!(row.count, 100 * 101);
    }

    #[test]
    fn torus_fraction_decays() {
        let t = heisenberg_spectrum(210.0).unwrap();
        let f100 = torus_fraction(&t, 100.0);
        assert!(f100 < 0.06, "fraction {f100}");
        for lambda in [25.0, 50.0, 100.0] {
            assert!(
                torus_fraction(&t, 2.0 * lambda) < torus_fraction(&t, lambda),
                "fraction not decreasing at {lambda}"
            );
        }
        // at tiny λ only the constant survives
        assert_eq!(torus_fraction(&t, 0.5), 1.0);
    }

    #[test]
    fn torus_band_values_never_collide() {
        // 2π(p²+q²) is irrational for (p,q) ≠ 0 and the band values are
        // integers, so aggregation never mixes sectors
        let t = heisenberg_spectrum(100.0).unwrap();
        for e in &t.entries {
            if let Sector::Torus { p, q } = e.sector {
                if (p, q) != (0, 0) {
                    assert!((e.lambda - e.lambda.round()).abs() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn spectrum_json_schema() {
        let t = heisenberg_spectrum(3.5).unwrap();
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc["model"], "heisenberg");
        let entries = doc["entries"].as_array().unwrap();
        assert!(entries
            .iter()
            .any(|e| e["sector"] == serde_json::json!("torus")));
        assert!(entries
            .iter()
            .any(|e| e["sector"] == serde_json::json!({"band": 0, "mode": 1})));
    }

    #[test]
    fn csv_mirror_has_documented_columns() {
        let t = heisenberg_spectrum(3.5).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,mult,sector,l,m\n"));
        assert!(text.contains(",torus,,"));
        assert!(text.contains(",band,0,1"));
    }

    #[test]
    fn entries_sorted_and_label_unique() {
        let t = heisenberg_spectrum(50.0).unwrap();
        for w in t.entries.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
        let mut labels: Vec<(u64, i64, i64, i64)> = t
            .entries
            .iter()
            .map(|e| match e.sector {
                Sector::Torus { p, q } => (e.lambda.to_bits(), 0, p as i64, q as i64),
                Sector::Band { l, m } => (e.lambda.to_bits(), 1, l as i64, m),
            })
            .collect();
        let before = labels.len();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(before, labels.len(), "(lambda, sector) pairs must be unique");
    }

    #[test]
    fn rejects_nonpositive_cutoff() {
        assert!(heisenberg_spectrum(0.0).is_err());
        assert!(heisenberg_spectrum(-3.0).is_err());
    }
}
