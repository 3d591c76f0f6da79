//! reeblab command line: deterministic experiments on 3D contact
//! sub-Riemannian models with CSV/JSON artifacts and run manifests.

mod artifacts;
mod config;

use artifacts::{default_out, Emitter};
use config::{parse_list, parse_triple, require_min_u32, require_positive, FileConfig};
use num_complex::Complex64;
use reeblab::contact::{ContactModel, PhasePoint, TAU};
use reeblab::flow::{
    integrate_geodesic, integrate_reeb, reeb_period, spiral::spiral_experiment, Integrator,
};
use reeblab::orbits::{fit_reeb_period, length_spectrum, write_length_spectrum_json, ShootingOptions};
use reeblab::spectra::{
    assemble_spectrum, heisenberg_spectrum, landau_band_count, torus_fraction, weyl_check,
    write_weyl_csv, Discretization,
};
use reeblab::traces::{
    extract_lengths, pole_probe, remainder_samples_closed, trace_profile, write_pole_probe_csv,
};
use reeblab::util::fmt_f64;
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
reeblab — numerical experiments on 3D contact sub-Riemannian models

USAGE: reeblab <SUBCOMMAND> [flags]

SUBCOMMANDS
  geodesic    integrate one geodesic and export t,x,y,z,xi_x,xi_y,xi_z,H
  reeb        integrate the Reeb flow
  spiral      fit the helix model to a high-momentum geodesic
  periodic    shoot closed geodesics around a Reeb orbit (JSON)
  spectrum    eigenvalue table, analytic or numeric (JSON + CSV mirror)
  weyl        eigenvalue counting against the Weyl law (CSV)
  bands       Landau-band counts with the model prediction (CSV)
  trace       band trace vs Poisson closed form on a z-grid (CSV)
  poles       boundary growth exponents of the trace (CSV)
  conjecture  recover the Reeb period from geometry, lengths, and trace

COMMON FLAGS
  --model NAME      heisenberg | magnetic-torus | kepler  [heisenberg]
  --b VALUE         magnetic scalar for magnetic-torus  [1]
  --config FILE     key = value defaults (flags win)
  --out PATH        primary artifact path (default depends on subcommand;
                    the REEBLAB_OUT_DIR environment variable sets the
                    default directory)
  --seed N          recorded in the manifest  [0]
  --print-config    echo the effective configuration and exit

Run `reeblab <SUBCOMMAND> --help` for the subcommand flags.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help" {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            // machine-readable error report on stderr
            let report = json!({"error": msg, "command": args.first()});
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}

/// Minimal strict flag parser: every flag takes one value except the listed
/// boolean switches. Unknown flags abort.
struct Flags {
    values: std::collections::BTreeMap<String, String>,
    switches: Vec<String>,
}

impl Flags {
    fn parse(args: &[String], known: &[&str], known_switches: &[&str]) -> Result<Self, String> {
        if args.iter().any(|a| a == "--help" || a == "-h") {
            let mut all: Vec<&str> = known.to_vec();
            all.sort_unstable();
            return Err(format!(
                "flags (each takes a value): {}; switches: {}",
                all.iter().map(|f| format!("--{f}")).collect::<Vec<_>>().join(" "),
                known_switches
                    .iter()
                    .map(|f| format!("--{f}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
        }
        let mut values = std::collections::BTreeMap::new();
        let mut switches = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(name) = arg.strip_prefix("--") else {
                return Err(format!("unexpected argument `{arg}` (flags start with --)"));
            };
            if known_switches.contains(&name) {
                switches.push(name.to_string());
                i += 1;
                continue;
            }
            if !known.contains(&name) {
                return Err(format!("unknown flag `--{name}`"));
            }
            let Some(value) = args.get(i + 1) else {
                return Err(format!("flag `--{name}` needs a value"));
            };
            if values.insert(name.to_string(), value.clone()).is_some() {
                return Err(format!("flag `--{name}` given twice"));
            }
            i += 2;
        }
        Ok(Self { values, switches })
    }

    fn get<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, String> {
        match self.values.get(name) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| format!("flag `--{name}`: cannot parse `{raw}`")),
            None => Ok(None),
        }
    }

    fn has(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }
}

struct Common {
    model: ContactModel,
    model_name: String,
    b: f64,
    seed: u64,
    out: Option<PathBuf>,
    print_config: bool,
    file: FileConfig,
}

const COMMON_FLAGS: &[&str] = &["model", "b", "config", "out", "seed"];
const COMMON_SWITCHES: &[&str] = &["print-config"];

fn common(flags: &Flags) -> Result<Common, String> {
    let file = match flags.get::<PathBuf>("config")? {
        Some(path) => FileConfig::load(&path)?,
        None => FileConfig::empty(),
    };
    let model_name: String = file.resolve("model", flags.get("model")?, "heisenberg".into())?;
    let b: f64 = file.resolve("b", flags.get("b")?, 1.0)?;
    let model = ContactModel::by_name(&model_name, b).map_err(|e| e.to_string())?;
    let seed: u64 = file.resolve("seed", flags.get("seed")?, 0)?;
    let out: Option<PathBuf> = file.resolve_opt("out", flags.get("out")?)?;
    Ok(Common {
        model,
        model_name,
        b,
        seed,
        out,
        print_config: flags.has("print-config"),
        file,
    })
}

fn print_or_run<F>(
    common: &Common,
    command: &str,
    cfg: serde_json::Value,
    body: F,
) -> Result<(), String>
where
    F: FnOnce(Emitter) -> Result<(), String>,
{
    common.file.finish()?;
    if common.print_config {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({"command": command, "config": cfg}))
                .expect("config echo")
        );
        return Ok(());
    }
    body(Emitter::new(command, cfg, common.seed))
}

fn run(args: &[String]) -> Result<(), String> {
    let sub = args[0].as_str();
    let rest = &args[1..];
    match sub {
        "geodesic" => cmd_geodesic(rest),
        "reeb" => cmd_reeb(rest),
        "spiral" => cmd_spiral(rest),
        "periodic" => cmd_periodic(rest),
        "spectrum" => cmd_spectrum(rest),
        "weyl" => cmd_weyl(rest),
        "bands" => cmd_bands(rest),
        "trace" => cmd_trace(rest),
        "poles" => cmd_poles(rest),
        "conjecture" => cmd_conjecture(rest),
        other => Err(format!("unknown subcommand `{other}`; see `reeblab --help`")),
    }
}

fn integrator_from(name: &str, step: f64, tol: f64) -> Result<Integrator, String> {
    match name {
        "adaptive" => Ok(Integrator::AdaptiveRk54 { tol }),
        "gauss4" => Ok(Integrator::GaussLegendre4 { step }),
        "midpoint" => Ok(Integrator::ImplicitMidpoint { step }),
        other => Err(format!(
            "`integrator` must be adaptive, gauss4 or midpoint, got `{other}`"
        )),
    }
}

fn cmd_geodesic(args: &[String]) -> Result<(), String> {
    let mut known = vec!["q0", "xi", "t-max", "tol", "step", "samples", "integrator"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let q0_raw: String = c.file.resolve("q0", flags.get("q0")?, "0,0,0".into())?;
    let xi_raw: String = c.file.resolve("xi", flags.get("xi")?, "1,0,0".into())?;
    let t_max = require_positive("t-max", c.file.resolve("t-max", flags.get("t-max")?, 10.0)?)?;
    let tol = require_positive("tol", c.file.resolve("tol", flags.get("tol")?, 1e-12)?)?;
    let step = require_positive("step", c.file.resolve("step", flags.get("step")?, 2e-3)?)?;
    let samples = c.file.resolve("samples", flags.get("samples")?, 1001usize)?;
    let scheme_name: String =
        c.file
            .resolve("integrator", flags.get("integrator")?, "adaptive".into())?;
    let scheme = integrator_from(&scheme_name, step, tol)?;
    let q0 = parse_triple("q0", &q0_raw)?;
    let xi = parse_triple("xi", &xi_raw)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("geodesic.csv"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "q0": q0, "xi": xi, "t_max": t_max,
        "tol": tol, "step": step, "samples": samples, "integrator": scheme_name,
        "out": out.display().to_string(),
    });
    print_or_run(&c, "geodesic", cfg, |mut emit| {
        let traj = integrate_geodesic(&c.model, &PhasePoint::new(q0, xi), t_max, scheme, samples)
            .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).map_err(|e| e.to_string())?;
        emit.write(&out, &buf)?;
        emit.finish(&out)?;
        println!(
            "geodesic: {} samples over t in [0, {}], energy drift {:.3e} -> {}",
            samples,
            fmt_f64(t_max),
            traj.energy_drift(),
            out.display()
        );
        Ok(())
    })
}

fn cmd_reeb(args: &[String]) -> Result<(), String> {
    let mut known = vec!["x0", "t-max", "samples"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let x0_raw: String = c.file.resolve("x0", flags.get("x0")?, "0,0,0".into())?;
    let t_max = require_positive("t-max", c.file.resolve("t-max", flags.get("t-max")?, TAU)?)?;
    let samples = c.file.resolve("samples", flags.get("samples")?, 101usize)?;
    let x0 = parse_triple("x0", &x0_raw)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("reeb.csv"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "x0": x0, "t_max": t_max,
        "samples": samples, "out": out.display().to_string(),
    });
    print_or_run(&c, "reeb", cfg, |mut emit| {
        let orbit = integrate_reeb(&c.model, x0, t_max, samples).map_err(|e| e.to_string())?;
        let mut buf = String::from("t,x,y,z\n");
        for (t, x) in &orbit {
            buf.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(*t),
                fmt_f64(x[0]),
                fmt_f64(x[1]),
                fmt_f64(x[2])
            ));
        }
        emit.write(&out, buf.as_bytes())?;
        emit.finish(&out)?;
        println!("reeb: {} samples -> {}", orbit.len(), out.display());
        Ok(())
    })
}

fn cmd_spiral(args: &[String]) -> Result<(), String> {
    let mut known = vec!["q0", "h0", "phase", "window-c", "samples-per-loop"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let q0_raw: String = c.file.resolve("q0", flags.get("q0")?, "0,0,0".into())?;
    let h0 = require_positive("h0", c.file.resolve("h0", flags.get("h0")?, 10.0)?)?;
    let phase: f64 = c.file.resolve("phase", flags.get("phase")?, 0.0)?;
    let window_c = require_positive(
        "window-c",
        c.file.resolve("window-c", flags.get("window-c")?, 0.5)?,
    )?;
    let spl = c
        .file
        .resolve("samples-per-loop", flags.get("samples-per-loop")?, 24usize)?;
    let q0 = parse_triple("q0", &q0_raw)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("spiral.json"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "q0": q0, "h0": h0, "phase": phase,
        "window_c": window_c, "samples_per_loop": spl, "out": out.display().to_string(),
    });
    print_or_run(&c, "spiral", cfg, |mut emit| {
        let (_, fit) =
            spiral_experiment(&c.model, q0, phase, h0, window_c, spl).map_err(|e| e.to_string())?;
        let doc = serde_json::to_string_pretty(&fit).map_err(|e| e.to_string())?;
        emit.write(&out, format!("{doc}\n").as_bytes())?;
        emit.finish(&out)?;
        println!(
            "spiral: h0 = {}, J0 = {}, deviation = {:.3e} -> {}",
            fmt_f64(fit.h0),
            fmt_f64(fit.j0_estimate),
            fit.deviation,
            out.display()
        );
        Ok(())
    })
}

fn cmd_periodic(args: &[String]) -> Result<(), String> {
    let mut known = vec!["anchor", "k-max", "tol", "step"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let anchor_raw: String = c.file.resolve("anchor", flags.get("anchor")?, "0,0,0".into())?;
    let k_max = require_min_u32("k-max", c.file.resolve("k-max", flags.get("k-max")?, 5u32)?, 1)?;
    let tol = require_positive("tol", c.file.resolve("tol", flags.get("tol")?, 1e-10)?)?;
    let step = require_positive("step", c.file.resolve("step", flags.get("step")?, 5e-3)?)?;
    let anchor = parse_triple("anchor", &anchor_raw)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("periodic.json"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "anchor": anchor, "k_max": k_max,
        "tol": tol, "step": step, "out": out.display().to_string(),
    });
    print_or_run(&c, "periodic", cfg, |mut emit| {
        let opts = ShootingOptions {
            tol,
            max_iterations: 30,
            step,
        };
        let spec = length_spectrum(&c.model, anchor, k_max, &opts).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_length_spectrum_json(&spec, &mut buf).map_err(|e| e.to_string())?;
        emit.write(&out, &buf)?;
        emit.finish(&out)?;
        println!(
            "periodic: {} orbits, {} failures -> {}",
            spec.orbits.len(),
            spec.failures.len(),
            out.display()
        );
        for (k, err) in &spec.failures {
            eprintln!("  k = {k}: {err}");
        }
        Ok(())
    })
}

fn cmd_spectrum(args: &[String]) -> Result<(), String> {
    let mut known = vec!["lambda-max", "grid", "m-max", "cluster-tol"];
    known.extend_from_slice(COMMON_FLAGS);
    let mut switches = vec!["numeric"];
    switches.extend_from_slice(COMMON_SWITCHES);
    let flags = Flags::parse(args, &known, &switches)?;
    let c = common(&flags)?;
    let lambda_max = require_positive(
        "lambda-max",
        c.file.resolve("lambda-max", flags.get("lambda-max")?, 30.0)?,
    )?;
    let numeric = flags.has("numeric") || c.file.resolve("numeric", None, false)?;
    let grid: Option<usize> = c.file.resolve_opt("grid", flags.get("grid")?)?;
    let m_max: Option<i64> = c.file.resolve_opt("m-max", flags.get("m-max")?)?;
    let cluster_tol = require_positive(
        "cluster-tol",
        c.file.resolve("cluster-tol", flags.get("cluster-tol")?, 0.05)?,
    )?;
    let out = c.out.clone().unwrap_or_else(|| default_out("spectrum.json"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "lambda_max": lambda_max, "numeric": numeric,
        "grid": grid, "m_max": m_max, "cluster_tol": cluster_tol,
        "out": out.display().to_string(),
    });
    print_or_run(&c, "spectrum", cfg, |mut emit| {
        let table = if numeric {
            assemble_spectrum(
                &c.model,
                lambda_max,
                m_max,
                &Discretization { grid, cluster_tol },
            )
            .map_err(|e| e.to_string())?
        } else {
            if c.model_name != "heisenberg" {
                return Err(format!(
                    "analytic tables exist only for heisenberg; pass `--numeric` for {}",
                    c.model_name
                ));
            }
            heisenberg_spectrum(lambda_max).map_err(|e| e.to_string())?
        };
        for w in &table.warnings {
            eprintln!("warning: {w}");
        }
        let mut buf = Vec::new();
        table.write_json(&mut buf).map_err(|e| e.to_string())?;
        emit.write(&out, &buf)?;
        let csv_path = out.with_extension("csv");
        let mut csv = Vec::new();
        table.write_csv(&mut csv).map_err(|e| e.to_string())?;
        emit.write(&csv_path, &csv)?;
        emit.finish(&out)?;
        println!(
            "spectrum: {} entries, N({}) = {} -> {} (+ CSV mirror)",
            table.entries.len(),
            fmt_f64(lambda_max),
            table.count(lambda_max),
            out.display()
        );
        Ok(())
    })
}

fn cmd_weyl(args: &[String]) -> Result<(), String> {
    let mut known = vec!["lambda-max", "grid-points"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let lambda_max = require_positive(
        "lambda-max",
        c.file.resolve("lambda-max", flags.get("lambda-max")?, 400.0)?,
    )?;
    let grid_points: usize = c.file.resolve("grid-points", flags.get("grid-points")?, 16usize)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("weyl.csv"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "lambda_max": lambda_max,
        "grid_points": grid_points, "out": out.display().to_string(),
    });
    print_or_run(&c, "weyl", cfg, |mut emit| {
        if c.model_name != "heisenberg" {
            return Err("the Weyl check uses the analytic heisenberg table".into());
        }
        let table = heisenberg_spectrum(lambda_max).map_err(|e| e.to_string())?;
        let lambdas: Vec<f64> = (1..=grid_points)
            .map(|i| lambda_max * i as f64 / grid_points as f64)
            .collect();
        let report = weyl_check(&c.model, &table, &lambdas).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_weyl_csv(&report, &mut buf).map_err(|e| e.to_string())?;
        emit.write(&out, &buf)?;
        emit.finish(&out)?;
        let last = report.rows.last().expect("non-empty grid");
        println!(
            "weyl: ratio at lambda = {} is {} -> {}",
            fmt_f64(last.lambda),
            fmt_f64(last.ratio),
            out.display()
        );
        Ok(())
    })
}

fn cmd_bands(args: &[String]) -> Result<(), String> {
    let mut known = vec!["lambda-max", "l-max"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let lambda_max = require_positive(
        "lambda-max",
        c.file.resolve("lambda-max", flags.get("lambda-max")?, 100.0)?,
    )?;
    let l_max: u32 = c.file.resolve("l-max", flags.get("l-max")?, 4u32)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("bands.csv"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "lambda_max": lambda_max, "l_max": l_max,
        "out": out.display().to_string(),
    });
    print_or_run(&c, "bands", cfg, |mut emit| {
        if c.model_name != "heisenberg" {
            return Err("band counting uses the analytic heisenberg table".into());
        }
        let table = heisenberg_spectrum(lambda_max * 1.05).map_err(|e| e.to_string())?;
        let mut buf = String::from("l,lambda,count,predicted,ratio,torus_fraction\n");
        for l in 0..=l_max {
            let row =
                landau_band_count(&c.model, &table, l, lambda_max).map_err(|e| e.to_string())?;
            buf.push_str(&format!(
                "{},{},{},{},{},{}\n",
                l,
                fmt_f64(lambda_max),
                row.count,
                fmt_f64(row.predicted),
                fmt_f64(row.ratio),
                fmt_f64(torus_fraction(&table, lambda_max)),
            ));
        }
        emit.write(&out, buf.as_bytes())?;
        emit.finish(&out)?;
        println!(
            "bands: l = 0..{} at lambda = {} -> {}",
            l_max,
            fmt_f64(lambda_max),
            out.display()
        );
        Ok(())
    })
}

fn cmd_trace(args: &[String]) -> Result<(), String> {
    let mut known = vec!["z-min", "z-max", "points"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let z_min = require_positive("z-min", c.file.resolve("z-min", flags.get("z-min")?, 0.1)?)?;
    let z_max = require_positive("z-max", c.file.resolve("z-max", flags.get("z-max")?, 2.0)?)?;
    let points: usize = c.file.resolve("points", flags.get("points")?, 20usize)?;
    if z_max < z_min {
        return Err("`z-max` must be at least `z-min`".into());
    }
    let out = c.out.clone().unwrap_or_else(|| default_out("trace.csv"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "z_min": z_min, "z_max": z_max,
        "points": points, "out": out.display().to_string(),
    });
    print_or_run(&c, "trace", cfg, |mut emit| {
        if c.model_name != "heisenberg" {
            return Err("the closed trace form exists for heisenberg".into());
        }
        let grid: Vec<Complex64> = (0..points)
            .map(|i| {
                let t = if points == 1 {
                    0.0
                } else {
                    i as f64 / (points - 1) as f64
                };
                Complex64::new(z_min + (z_max - z_min) * t, 0.0)
            })
            .collect();
        let profile = trace_profile(&grid).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        profile.write_csv(&mut buf).map_err(|e| e.to_string())?;
        emit.write(&out, &buf)?;
        emit.finish(&out)?;
        let worst = profile
            .rows
            .iter()
            .map(|r| r.residual)
            .fold(0.0_f64, f64::max);
        println!(
            "trace: {} grid points, max |partial - closed| = {worst:.3e} -> {}",
            points,
            out.display()
        );
        Ok(())
    })
}

fn cmd_poles(args: &[String]) -> Result<(), String> {
    let mut known = vec!["tau", "epsilons", "cutoff-rule"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let tau: f64 = c.file.resolve("tau", flags.get("tau")?, TAU)?;
    let eps_raw: String =
        c.file
            .resolve("epsilons", flags.get("epsilons")?, "0.1,0.05,0.025".into())?;
    let cutoff_rule = require_positive(
        "cutoff-rule",
        c.file.resolve("cutoff-rule", flags.get("cutoff-rule")?, 10.0)?,
    )?;
    let epsilons = parse_list("epsilons", &eps_raw)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("poles.csv"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "tau": tau, "epsilons": epsilons,
        "cutoff_rule": cutoff_rule, "out": out.display().to_string(),
    });
    print_or_run(&c, "poles", cfg, |mut emit| {
        if c.model_name != "heisenberg" {
            return Err("the boundary probe uses the heisenberg band trace".into());
        }
        let probe = pole_probe(tau, &epsilons, cutoff_rule).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_pole_probe_csv(&probe, &mut buf).map_err(|e| e.to_string())?;
        emit.write(&out, &buf)?;
        emit.finish(&out)?;
        println!(
            "poles: tau = {}, growth exponent p = {} -> {}",
            fmt_f64(tau),
            fmt_f64(probe.exponent),
            out.display()
        );
        Ok(())
    })
}

#[derive(Serialize)]
struct ConjectureReport {
    model: String,
    t0_geometry: f64,
    t0_length_fit: f64,
    t0_trace: f64,
    lengths: Vec<f64>,
    length_fit_a1: f64,
    length_fit_a2: f64,
    trace_l1: f64,
    max_pairwise_gap: f64,
}

fn cmd_conjecture(args: &[String]) -> Result<(), String> {
    let mut known = vec!["k-max", "tol"];
    known.extend_from_slice(COMMON_FLAGS);
    let flags = Flags::parse(args, &known, COMMON_SWITCHES)?;
    let c = common(&flags)?;
    let k_max = require_min_u32("k-max", c.file.resolve("k-max", flags.get("k-max")?, 6u32)?, 4)?;
    let tol = require_positive("tol", c.file.resolve("tol", flags.get("tol")?, 1e-10)?)?;
    let out = c.out.clone().unwrap_or_else(|| default_out("conjecture.json"));
    let cfg = json!({
        "model": c.model_name, "b": c.b, "k_max": k_max, "tol": tol,
        "out": out.display().to_string(),
    });
    print_or_run(&c, "conjecture", cfg, |mut emit| {
        // period recovery along three routes: the Reeb flow itself, the
        // length asymptotics of closed geodesics, and the trace exponents
        let t0_geometry = reeb_period(&c.model).map_err(|e| e.to_string())?;
        let opts = ShootingOptions { tol, ..Default::default() };
        let spec =
            length_spectrum(&c.model, [0.0, 0.0, 0.0], k_max, &opts).map_err(|e| e.to_string())?;
        if spec.orbits.len() < 4 {
            return Err(format!(
                "only {} closed orbits converged; need at least 4 for the period fit",
                spec.orbits.len()
            ));
        }
        let lengths: Vec<f64> = spec.orbits.iter().map(|o| o.length).collect();
        let ks: Vec<u32> = spec.orbits.iter().map(|o| o.k).collect();
        let fit = fit_reeb_period(&lengths, &ks, None).map_err(|e| e.to_string())?;
        if c.model_name != "heisenberg" {
            return Err("the trace route is implemented for heisenberg".into());
        }
        let grid: Vec<f64> = (0..=12).map(|i| 0.08 + 0.01 * i as f64).collect();
        let samples = remainder_samples_closed(&grid).map_err(|e| e.to_string())?;
        let ext = extract_lengths(&samples).map_err(|e| e.to_string())?;
        let l1 = ext.lengths[0];
        // L1 = 2 sqrt(pi T0) for the k = 1 orbit
        let t0_trace = l1 * l1 / (4.0 * std::f64::consts::PI);
        let ts = [t0_geometry, fit.t0_estimate, t0_trace];
        let max_gap = ts
            .iter()
            .flat_map(|a| ts.iter().map(move |b| (a - b).abs()))
            .fold(0.0_f64, f64::max);
        let report = ConjectureReport {
            model: c.model_name.clone(),
            t0_geometry,
            t0_length_fit: fit.t0_estimate,
            t0_trace,
            lengths,
            length_fit_a1: fit.a1,
            length_fit_a2: fit.a2,
            trace_l1: l1,
            max_pairwise_gap: max_gap,
        };
        let doc = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        emit.write(&out, format!("{doc}\n").as_bytes())?;
        emit.finish(&out)?;
        println!(
            "conjecture: T0 from geometry {}, from lengths {}, from trace {} (max gap {:.3e}) -> {}",
            fmt_f64(t0_geometry),
            fmt_f64(fit.t0_estimate),
            fmt_f64(t0_trace),
            max_gap,
            out.display()
        );
        Ok(())
    })
}
