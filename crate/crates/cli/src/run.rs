//! Executes a configured method and writes `trajectory.csv`,
//! `summary.json` and, for scans, `surface.csv`.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use dmetgeo::co_optimizer::{
    co_optimize, nested_baseline, potential_surface_scan, surface_csv, Outcome, Record, ScanMode, Trajectory,
};
use dmetgeo::dmet::{total_energy, DmetSystem};
use dmetgeo::integrals::{build_basis, compute_ao_integrals, load_cached, write_cache};
use dmetgeo::vqe_engine::VqeSolver;

use crate::config::{inspect, ConfigError, Method, Prepared, RunConfig};

pub const LOCK_FILE: &str = ".dmetgeo.lock";

/// How a run ended once its inputs were accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finish {
    Converged,
    NotConverged,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub method: String,
    pub converged: bool,
    pub x_star: Vec<f64>,
    pub energy_ha: Option<f64>,
    pub total_vqe_iterations: usize,
    pub qubits_full: usize,
    pub qubits_embedded_max: usize,
    pub wall_time_s: f64,
    pub parameter_names: Vec<String>,
    pub dissociated: Vec<bool>,
    pub mu: Option<f64>,
    pub error: Option<String>,
}

/// Removes the lock file when the run ends, however it ends.
struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self, ConfigError> {
        fs::create_dir_all(dir)
            .map_err(|e| ConfigError::new("output.dir", format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(LOCK_FILE);
        OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            let why = if e.kind() == std::io::ErrorKind::AlreadyExists {
                "another run holds this directory (delete the lock file if it is stale)".to_string()
            } else {
                e.to_string()
            };
            ConfigError::new("output.dir", format!("{}: {why}", path.display()))
        })?;
        Ok(Lock(path))
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), ConfigError> {
    fs::write(dir.join(name), contents)
        .map_err(|e| ConfigError::new("output.dir", format!("cannot write {name}: {e}")))
}

/// Run `method` (the config's own unless overridden by the `scan` command).
pub fn execute(cfg: &RunConfig, method: Method) -> Result<Finish, ConfigError> {
    cfg.check_required(method)?;
    let prep = Prepared::new(cfg)?;
    let report = inspect(cfg, &prep, method);
    if let Some(p) = report.problems.first() {
        return Err(p.clone());
    }
    let _lock = Lock::acquire(&cfg.output_dir)?;
    let start = Instant::now();
    let n = prep.param.len();
    let names = prep.param.parameter_names().to_vec();
    let qubits_full = report.qubits_full.unwrap_or(0);
    let projected_max = report.qubits_embedded_max().unwrap_or(qubits_full);
    let fragments = cfg.fragments.clone().unwrap_or_default();

    let (trajectory, summary, surface) = match method {
        Method::CoOpt | Method::Nested => {
            let result = if method == Method::CoOpt {
                co_optimize(&prep.param, &prep.x0, &fragments, &cfg.co_opt, &cfg.vqe)
            } else {
                nested_baseline(&prep.param, &prep.x0, &fragments, &cfg.co_opt, &cfg.vqe)
            };
            match result {
                Ok(out) => (out.trajectory.clone(), outcome_summary(&out, names), None),
                Err(failure) => {
                    log::error!("{failure}");
                    let t = failure.trajectory;
                    let s = failed_summary(method, &t, names, qubits_full, projected_max, start, failure.error.to_string());
                    (t, s, None)
                }
            }
        }
        Method::SinglePoint => single_point(cfg, &prep, &fragments, names, start, qubits_full, projected_max)?,
        Method::Scan => {
            let scan = cfg.scan.as_ref().expect("checked above");
            let points = potential_surface_scan(&prep.param, &prep.x0, &scan.axes, scan.mode, &fragments, &cfg.vqe)
                .map_err(|e| ConfigError::new("scan", e.to_string()))?;
            let best = points
                .iter()
                .filter_map(|p| p.energy.map(|e| (e, p)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let missing = points.iter().filter(|p| p.energy.is_none()).count();
            let summary = Summary {
                method: method.name().into(),
                converged: missing == 0,
                x_star: best.map(|(_, p)| p.x.clone()).unwrap_or_default(),
                energy_ha: best.map(|(e, _)| e),
                total_vqe_iterations: points.iter().map(|p| p.vqe_iterations).sum(),
                qubits_full,
                qubits_embedded_max: if scan.mode == ScanMode::Fci { qubits_full } else { projected_max },
                wall_time_s: start.elapsed().as_secs_f64(),
                parameter_names: names,
                dissociated: vec![false; n],
                mu: None,
                error: (missing > 0).then(|| format!("{missing} grid points could not be evaluated")),
            };
            (Trajectory::default(), summary, Some(surface_csv(&points)))
        }
    };

    let dir = &cfg.output_dir;
    write(dir, "trajectory.csv", &trajectory.to_csv(n))?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(dir, "summary.json", &(json + "\n"))?;
    if let Some(csv) = surface {
        write(dir, "surface.csv", &csv)?;
    }
    // make sure the lock never outlives the outputs on disk
    File::open(dir.join("summary.json")).and_then(|f| f.sync_all()).ok();
    Ok(if summary.converged { Finish::Converged } else { Finish::NotConverged })
}

fn outcome_summary(out: &Outcome, names: Vec<String>) -> Summary {
    Summary {
        method: out.method.into(),
        converged: out.converged,
        x_star: out.x.clone(),
        energy_ha: Some(out.energy),
        total_vqe_iterations: out.trajectory.cumulative_vqe_iterations(),
        qubits_full: out.qubits_full,
        qubits_embedded_max: out.qubits_embedded_max,
        wall_time_s: out.wall_time_s,
        parameter_names: names,
        dissociated: out.dissociated.clone(),
        mu: Some(out.state.mu),
        error: None,
    }
}

fn failed_summary(
    method: Method,
    t: &Trajectory,
    names: Vec<String>,
    qubits_full: usize,
    qubits_embedded_max: usize,
    start: Instant,
    error: String,
) -> Summary {
    let last = t.last();
    Summary {
        method: method.name().into(),
        converged: false,
        x_star: last.map(|r| r.x.clone()).unwrap_or_default(),
        energy_ha: last.map(|r| r.energy),
        total_vqe_iterations: t.cumulative_vqe_iterations(),
        qubits_full,
        qubits_embedded_max,
        wall_time_s: start.elapsed().as_secs_f64(),
        dissociated: vec![false; names.len()],
        parameter_names: names,
        mu: last.map(|r| r.mu),
        error: Some(error),
    }
}

fn single_point(
    cfg: &RunConfig,
    prep: &Prepared,
    fragments: &[Vec<usize>],
    names: Vec<String>,
    start: Instant,
    qubits_full: usize,
    projected_max: usize,
) -> Result<(Trajectory, Summary, Option<String>), ConfigError> {
    let mol = prep.param.apply(&prep.x0).map_err(|e| ConfigError::new("parameterization.initial", e.to_string()))?;
    let solve = || -> dmetgeo::Result<(DmetSystem, dmetgeo::dmet::DmetState, f64, usize)> {
        let cached = match &cfg.integral_cache {
            Some(path) => load_cached(path, &mol)?,
            None => None,
        };
        let ao = match cached {
            Some(ao) => {
                log::info!("integrals loaded from cache");
                ao
            }
            None => {
                let ao = compute_ao_integrals(&mol, &build_basis(&mol)?)?;
                if let Some(path) = &cfg.integral_cache {
                    write_cache(path, &mol, &ao)?;
                }
                ao
            }
        };
        let system = DmetSystem::from_integrals(&mol, ao, fragments, None)?;
        let solver = VqeSolver::new(cfg.vqe.clone(), true);
        let state = system.converge_mu(&solver, 0.0)?;
        let energy = total_energy(&state, system.e_nuc())?;
        Ok((system, state, energy, solver.total_iterations()))
    };
    let mut trajectory = Trajectory::default();
    let summary = match solve() {
        Ok((system, state, energy, iterations)) => {
            trajectory.push(Record {
                iteration: 0,
                x: prep.x0.clone(),
                energy,
                fragment_energies: state.fragment_results.iter().map(|f| f.energy).collect(),
                mu: state.mu,
                theta_norms: state
                    .fragment_results
                    .iter()
                    .map(|f| f.theta.iter().map(|t| t * t).sum::<f64>().sqrt())
                    .collect(),
                grad_x_norm: f64::NAN,
                cumulative_vqe_iterations: iterations,
            });
            Summary {
                method: Method::SinglePoint.name().into(),
                converged: state.converged,
                x_star: prep.x0.clone(),
                energy_ha: Some(energy),
                total_vqe_iterations: iterations,
                qubits_full: system.qubits_full(),
                qubits_embedded_max: system.qubits_embedded_max(),
                wall_time_s: start.elapsed().as_secs_f64(),
                dissociated: vec![false; names.len()],
                parameter_names: names,
                mu: Some(state.mu),
                error: None,
            }
        }
        Err(e) => {
            log::error!("{e}");
            failed_summary(Method::SinglePoint, &trajectory, names, qubits_full, projected_max, start, e.to_string())
        }
    };
    Ok((trajectory, summary, None))
}
