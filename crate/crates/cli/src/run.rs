//! Command execution and artifact writing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nlgp::closed_form::{gp_soliton, gp_soliton_invariants};
use nlgp::curve::{diagnose, sweep_solutions, CurvePoint};
use nlgp::dynamics::{aligned_distance, distance_d, evolve_with, perturb_complex, DistanceFn};
use nlgp::fields::{apriori_check, energy, momentum, reconstruct_complex, ComplexField};
use nlgp::hypotheses::HypothesisReport;
use nlgp::io;
use nlgp::kernels::{dispersion, dispersion_extrema};
use nlgp::minimizer::{initial_field, kernel_omega, minimize, perturb_hydro, Init, SolitonSolution};
use nlgp::{Grid, InteractionKernel};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{self, Command, DistanceMode, Initial, RunConfig, Seed};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("config error: {0}")]
    Config(String),
    #[error("not converged: {0}")]
    NonConvergence(String),
    #[error("{0}")]
    Blowup(String),
    #[error("{0}")]
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Runtime(_) => 1,
            Failure::NonConvergence(_) => 2,
            Failure::Blowup(_) => 3,
        }
    }

    fn status(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config_error",
            Failure::NonConvergence(_) => "not_converged",
            Failure::Blowup(_) => "blowup",
            Failure::Runtime(_) => "error",
        }
    }
}

impl From<nlgp::Error> for Failure {
    fn from(e: nlgp::Error) -> Self {
        match e {
            nlgp::Error::Blowup { .. } => Failure::Blowup(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> nlgp::Result<()>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
        write(&mut out)?;
        out.flush().map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_owned());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_owned());
        Ok(())
    }
}

struct Timings(Vec<(String, f64)>);

impl Timings {
    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0.push((label.to_owned(), t.elapsed().as_secs_f64()));
        out
    }
}

/// What a command leaves behind for meta.json. A non-convergence is
/// reported after the artifacts are written.
struct Report {
    results: Value,
    not_converged: Option<String>,
}

impl Report {
    fn ok(results: Value) -> Self {
        Self { results, not_converged: None }
    }
}

/// SHA-256 of the resolved config without its output directory.
pub fn config_hash(config: &RunConfig) -> String {
    let text = serde_json::to_string(&RunConfig { output_dir: None, ..config.clone() }).expect("config serializes");
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Runs a validated config, writing all artifacts and meta.json into
/// `dir`. Returns the failure, if any, after meta.json is on disk.
pub fn execute(config: &RunConfig, kernel: &InteractionKernel, grid: &Grid, dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let start = Instant::now();
    let mut art = Artifacts { dir: dir.to_owned(), files: Vec::new() };
    let mut timings = Timings(Vec::new());
    let outcome = match config.command {
        Command::Solve => solve(config, kernel, grid, &mut art, &mut timings),
        Command::Sweep => sweep(config, kernel, grid, &mut art, &mut timings),
        Command::Dispersion => dispersion_cmd(config, kernel, &mut art, &mut timings),
        Command::Check => check(config, kernel, &mut art, &mut timings),
        Command::Evolve => evolve(config, kernel, grid, &mut art, &mut timings),
        Command::Oracle => oracle(config, grid, &mut art, &mut timings),
    };
    let (status, error, results, failure) = match outcome {
        Ok(Report { results, not_converged: None }) => ("ok", None, results, None),
        Ok(Report { results, not_converged: Some(m) }) => {
            let f = Failure::NonConvergence(m);
            (f.status(), Some(f.to_string()), results, Some(f))
        }
        Err(f) => (f.status(), Some(f.to_string()), Value::Null, Some(f)),
    };
    timings.0.push(("total".into(), start.elapsed().as_secs_f64()));
    let meta = json!({
        "command": config::name(config.command),
        "status": status,
        "error": error,
        "config": config,
        "config_hash": config_hash(config),
        "versions": {
            "nlgp": nlgp::VERSION,
            "nlgp_cli": env!("CARGO_PKG_VERSION"),
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
        },
        "grid": {
            "n_points": grid.n_points(),
            "length": grid.length(),
            "spacing": grid.spacing(),
        },
        "kernel": {
            "spec": kernel.to_spec(),
            "name": kernel.name(),
            "speed_of_sound": kernel.speed_of_sound().ok(),
            "omega": kernel_omega(kernel),
        },
        "timings_s": timings.0.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "results": results,
        "files": art.files,
    });
    art.json("meta.json", &meta)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn init_of(s: Seed) -> Init {
    match s {
        Seed::Kdv => Init::Kdv,
        Seed::Gp => Init::Gp,
    }
}

fn solution_summary(s: &SolitonSolution) -> Value {
    json!({
        "q": s.q,
        "E": s.energy,
        "c_est": s.c_est,
        "residual": s.residual_norm,
        "iterations": s.iterations,
        "converged": s.converged,
        "grad_norm": s.grad_norm,
        "multiplier": s.multiplier,
        "clamp_active": s.clamp_active,
        "line_search_failed": s.line_search_failed,
        "max_eta": s.field.max_eta(),
        "apriori": apriori_check(s.energy, s.q, &s.field),
    })
}

fn solve(config: &RunConfig, kernel: &InteractionKernel, grid: &Grid, art: &mut Artifacts, t: &mut Timings) -> Result<Report, Failure> {
    let s = config.solve.as_ref().expect("validated");
    let mcfg = config.minimizer.clone().unwrap_or_default();
    let mut init = init_of(s.init);
    if s.noise > 0.0 {
        let base = initial_field(kernel, s.q, init, grid, mcfg.eta_cap)?;
        init = Init::Field(perturb_hydro(&base, s.noise, config.seed));
    }
    let sol = t.time("minimize", || minimize(kernel, s.q, init, grid, &mcfg))?;
    let rows = io::field_rows_hydro(&sol.field)?;
    art.csv("field.csv", |w| io::write_field_csv(w, &rows))?;
    let not_converged = (!sol.converged).then(|| {
        format!(
            "minimizer stopped after {} iterations at q = {} (gradient {:.3e}, residual {:.3e})",
            sol.iterations, sol.q, sol.grad_norm, sol.residual_norm
        )
    });
    Ok(Report { results: solution_summary(&sol), not_converged })
}

fn sweep(config: &RunConfig, kernel: &InteractionKernel, grid: &Grid, art: &mut Artifacts, t: &mut Timings) -> Result<Report, Failure> {
    let s = config.sweep.as_ref().expect("validated");
    let mcfg = config.minimizer.clone().unwrap_or_default();
    let qs = s.q_grid.values();
    let first = match s.first {
        Seed::Kdv => None,
        Seed::Gp => Some(Init::Gp),
    };
    let sols = t.time("sweep", || sweep_solutions(kernel, &qs, grid, &mcfg, first))?;
    let pts: Vec<CurvePoint> = sols.iter().map(CurvePoint::from).collect();
    art.csv("curve.csv", |w| io::write_curve_csv(w, &pts))?;
    let diag = match diagnose(&pts, kernel_omega(kernel)) {
        Ok(d) => serde_json::to_value(d).expect("diagnostics serialize"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    art.json("diagnostics.json", &diag)?;
    let apriori: Vec<_> = sols.iter().filter(|s| s.converged).map(|s| apriori_check(s.energy, s.q, &s.field)).collect();
    let failed: Vec<f64> = pts.iter().filter(|p| !p.converged).map(|p| p.q).collect();
    let results = json!({
        "points": pts.len(),
        "converged": pts.len() - failed.len(),
        "not_converged_q": failed,
        "concave": diag.get("concave"),
        "q_star_estimate": diag.get("q_star_estimate"),
        "apriori_ok": apriori.iter().all(|a| a.ok()),
    });
    let not_converged = (!failed.is_empty()).then(|| format!("{} of {} sweep points, at q = {failed:?}", failed.len(), pts.len()));
    Ok(Report { results, not_converged })
}

fn dispersion_cmd(config: &RunConfig, kernel: &InteractionKernel, art: &mut Artifacts, t: &mut Timings) -> Result<Report, Failure> {
    let d = config.dispersion.expect("validated");
    let n = d.n_samples;
    let rows = t.time("sample", || {
        (0..n)
            .map(|i| {
                let xi = d.xi_min + (d.xi_max - d.xi_min) * i as f64 / (n - 1) as f64;
                dispersion(kernel, xi).map(|omega| io::DispersionRow { xi, omega })
            })
            .collect::<nlgp::Result<Vec<_>>>()
    })?;
    art.csv("dispersion.csv", |w| io::write_dispersion_csv(w, &rows))?;
    // the extremum search needs a positive left end
    let lo = d.xi_min.max(1e-6 * d.xi_max);
    let extrema = t.time("extrema", || dispersion_extrema(kernel, lo, d.xi_max, n.max(200)))?;
    Ok(Report::ok(json!({ "extrema": extrema })))
}

fn check(config: &RunConfig, kernel: &InteractionKernel, art: &mut Artifacts, t: &mut Timings) -> Result<Report, Failure> {
    let c = config.check.expect("validated");
    let report = t.time("hypotheses", || HypothesisReport::full(kernel, c.xi_max, c.n_samples, c.search_budget));
    let h2 = report.h2prime.as_ref().map(|v| v.is_verified());
    let out = json!({
        "kernel": kernel.to_spec(),
        "h0_ok": report.h0_ok(),
        "h1_ok": report.h1_ok(),
        "h2prime_verified_on_family": h2,
        "report": report,
    });
    art.json("hypotheses.json", &out)?;
    Ok(Report::ok(json!({ "h0_ok": report.h0_ok(), "h1_ok": report.h1_ok(), "h2prime_verified_on_family": h2 })))
}

/// Recorded step nearest to time `t`.
fn nearest_recorded(t: f64, dt: f64, every: usize, n_steps: usize) -> usize {
    let s = t / dt;
    let lo = ((s / every as f64).floor() as usize * every).min(n_steps);
    let hi = (lo + every).min(n_steps);
    [lo, hi, n_steps].into_iter().min_by(|a, b| (*a as f64 - s).abs().total_cmp(&(*b as f64 - s).abs())).unwrap()
}

fn evolve(config: &RunConfig, kernel: &InteractionKernel, grid: &Grid, art: &mut Artifacts, t: &mut Timings) -> Result<Report, Failure> {
    let e = config.evolve.as_ref().expect("validated");
    let ev = &e.evolution;
    let (base, initial_info) = match e.initial {
        Initial::GpSoliton { c } => (gp_soliton(c, grid)?.complex, json!({ "gp_soliton": { "c": c } })),
        Initial::Minimizer { q, init } => {
            let mcfg = config.minimizer.clone().unwrap_or_default();
            let sol = t.time("minimize", || minimize(kernel, q, init_of(init), grid, &mcfg))?;
            if !sol.converged {
                return Ok(Report {
                    results: json!({ "initial": solution_summary(&sol) }),
                    not_converged: Some(format!("initial minimizer at q = {q} (residual {:.3e})", sol.residual_norm)),
                });
            }
            (reconstruct_complex(&sol.field)?, json!({ "minimizer": solution_summary(&sol) }))
        }
    };
    let start = if ev.perturbation_amplitude > 0.0 { perturb_complex(&base, ev.perturbation_amplitude, ev.seed) } else { base.clone() };

    let n_steps = ev.n_steps();
    let targets: Vec<usize> = e.snapshots.iter().map(|&s| nearest_recorded(s, ev.dt, ev.record_every, n_steps)).collect();
    let mut snaps: Vec<(usize, f64, ComplexField)> = Vec::new();
    let observer = |time: f64, f: &ComplexField| {
        let step = (time / ev.dt).round() as usize;
        for (i, &s) in targets.iter().enumerate() {
            if s == step {
                snaps.push((i, time, f.clone()));
            }
        }
    };
    let plain = |f: &ComplexField| distance_d(f, &base);
    let aligned = |f: &ComplexField| aligned_distance(f, &base);
    let dist: Option<DistanceFn> = match e.distance {
        DistanceMode::None => None,
        DistanceMode::Plain => Some(&plain),
        DistanceMode::Aligned => Some(&aligned),
    };
    let summary = t.time("evolve", || evolve_with(&start, kernel, ev, dist, observer))?;
    art.csv("trajectory.csv", |w| io::write_trajectory_csv(w, &summary))?;
    snaps.sort_by_key(|s| s.0);
    let mut snap_meta = Vec::new();
    for (i, time, f) in &snaps {
        let name = format!("snapshot_{i:03}.csv");
        let rows = io::field_rows_complex(f)?;
        art.csv(&name, |w| io::write_field_csv(w, &rows))?;
        snap_meta.push(json!({ "file": name, "requested_t": e.snapshots[*i], "t": time }));
    }
    let dists: Vec<f64> = summary.distances.iter().flatten().copied().collect();
    let results = json!({
        "initial": initial_info,
        "steps": n_steps,
        "records": summary.len(),
        "within_dt_guard": ev.within_guard(grid),
        "energy_drift": summary.energy_drift(),
        "momentum_drift": summary.momentum_drift(),
        "min_modulus": summary.min_modulus.iter().copied().fold(f64::INFINITY, f64::min),
        "initial_distance": dists.first(),
        "max_distance": dists.iter().copied().reduce(f64::max),
        "snapshots": snap_meta,
    });
    Ok(Report::ok(results))
}

fn oracle(config: &RunConfig, grid: &Grid, art: &mut Artifacts, t: &mut Timings) -> Result<Report, Failure> {
    let o = config.oracle.as_ref().expect("validated");
    let k = InteractionKernel::dirac();
    let sol = gp_soliton(o.c, grid)?;
    let h = sol.hydro.as_ref().expect("c > 0");
    let rows = io::field_rows_hydro(h)?;
    art.csv("field.csv", |w| io::write_field_csv(w, &rows))?;
    let (e, p) = t.time("invariants", || gp_soliton_invariants(o.c))?;
    let mut results = json!({
        "c": o.c,
        "E": e,
        "p": p,
        "grid_E": energy(h, &k)?,
        "grid_p": momentum(h),
    });
    if let Some(cv) = o.curve {
        // descending c gives ascending momentum
        let pts = t.time("curve", || {
            (0..cv.n)
                .map(|i| {
                    let c = cv.c_max - (cv.c_max - cv.c_min) * i as f64 / (cv.n - 1) as f64;
                    gp_soliton_invariants(c).map(|(e, q)| CurvePoint {
                        q,
                        energy: e,
                        c_est: c,
                        residual_norm: 0.0,
                        converged: true,
                        iterations: 0,
                    })
                })
                .collect::<nlgp::Result<Vec<_>>>()
        })?;
        art.csv("oracle_curve.csv", |w| io::write_curve_csv(w, &pts))?;
        results["curve_points"] = json!(pts.len());
    }
    Ok(Report::ok(results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_steps() {
        // records at 0, 10, 20, 25
        assert_eq!(nearest_recorded(0.0, 0.1, 10, 25), 0);
        assert_eq!(nearest_recorded(1.4, 0.1, 10, 25), 10);
        assert_eq!(nearest_recorded(1.6, 0.1, 10, 25), 20);
        assert_eq!(nearest_recorded(2.4, 0.1, 10, 25), 25);
        assert_eq!(nearest_recorded(2.5, 0.1, 10, 25), 25);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse(r#"{"command":"oracle","oracle":{"c":1}}"#).unwrap();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.output_dir = Some("elsewhere".into());
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
