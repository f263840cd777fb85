//! The conventional nested loop: every energy is a complete DMET+VQE solve.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use super::{
    build_system, central_differences, clamp_parameters, fail, is_length, max_abs, project_gradient, CoOptConfig, OptResult,
    Outcome, Record, StepSizes, Trajectory, MAX_BACKTRACKS,
};
use crate::dmet::{total_energy, DmetState, DmetSystem};
use crate::error::{Error, Result};
use crate::geometry::GeometryParameterization;
use crate::vqe_engine::{OptimizerConfig, VqeSolver};

/// A converged DMET+VQE calculation at one geometry.
#[derive(Debug, Clone)]
pub struct FullSolve {
    pub system: DmetSystem,
    pub state: DmetState,
    pub energy: f64,
    pub vqe_iterations: usize,
}

/// Integrals, mean field, baths, a fresh μ search and cold-started VQE.
pub fn full_solve(
    param: &GeometryParameterization,
    x: &[f64],
    fragments: &[Vec<usize>],
    vqe: &OptimizerConfig,
) -> Result<FullSolve> {
    let system = build_system(param, x, fragments, None)?;
    let solver = VqeSolver::new(vqe.clone(), true);
    let state = system.converge_mu(&solver, 0.0)?;
    let energy = total_energy(&state, system.e_nuc())?;
    Ok(FullSolve { system, state, energy, vqe_iterations: solver.total_iterations() })
}

fn record(iteration: usize, x: &[f64], s: &FullSolve, g: f64, cum: usize) -> Record {
    Record {
        iteration,
        x: x.to_vec(),
        energy: s.energy,
        fragment_energies: s.state.fragment_results.iter().map(|f| f.energy).collect(),
        mu: s.state.mu,
        theta_norms: s
            .state
            .fragment_results
            .iter()
            .map(|f| f.theta.iter().map(|t| t * t).sum::<f64>().sqrt())
            .collect(),
        grad_x_norm: g,
        cumulative_vqe_iterations: cum,
    }
}

/// Finite-difference gradient descent on x in which every energy is a
/// full DMET+VQE solve. Uses the same step rule and thresholds as
/// [`co_optimize`](super::co_optimize).
pub fn nested_baseline(
    param: &GeometryParameterization,
    x0: &[f64],
    fragments: &[Vec<usize>],
    cfg: &CoOptConfig,
    vqe: &OptimizerConfig,
) -> OptResult {
    let start = Instant::now();
    let mut trajectory = Trajectory::default();
    let check = || -> Result<()> {
        cfg.validate()?;
        vqe.validate()?;
        if x0.len() != param.len() {
            return Err(Error::DimensionMismatch { expected: param.len(), got: x0.len() });
        }
        Ok(())
    };
    check().map_err(|e| fail(e, &trajectory))?;

    let mut x = clamp_parameters(param, x0, cfg.bond_cap);
    let mut current = full_solve(param, &x, fragments, vqe).map_err(|e| fail(e, &trajectory))?;
    let mut cum = current.vqe_iterations;
    trajectory.push(record(0, &x, &current, f64::NAN, cum));

    let mut sizes = StepSizes::new(x.len(), cfg.x_learning_rate);
    let mut previous_energy = f64::INFINITY;
    let mut converged = false;
    let mut dissociated = vec![false; x.len()];
    let mut iteration = 0;
    while iteration < cfg.max_outer_iterations {
        let spent = AtomicUsize::new(0);
        let raw = central_differences(&x, cfg.x_gradient_step, |xd| {
            let s = full_solve(param, xd, fragments, vqe)?;
            spent.fetch_add(s.vqe_iterations, Ordering::Relaxed);
            Ok(s.energy)
        })
        .map_err(|e| fail(e, &trajectory))?;
        cum += spent.into_inner();
        let (g, diss) = project_gradient(param, &x, &raw, cfg.bond_cap);
        dissociated = diss;
        let gnorm = max_abs(&g);
        log::debug!("nested iter {iteration}: E={:.10} |g|={gnorm:.3e} x={x:?}", current.energy);
        if gnorm < cfg.gradient_threshold && (current.energy - previous_energy).abs() < cfg.energy_threshold {
            // bonds still pushed outward go to the cap if that is lower
            let mut snapped = false;
            for i in 0..x.len() {
                if !is_length(param, i) || raw[i] >= 0.0 || x[i] >= cfg.bond_cap {
                    continue;
                }
                let mut trial = x.clone();
                trial[i] = cfg.bond_cap;
                let Ok(s) = full_solve(param, &trial, fragments, vqe) else { continue };
                cum += s.vqe_iterations;
                if s.energy < current.energy {
                    previous_energy = current.energy;
                    x = trial;
                    current = s;
                    iteration += 1;
                    trajectory.push(record(iteration, &x, &current, gnorm, cum));
                    snapped = true;
                }
            }
            if !snapped {
                converged = true;
                break;
            }
            continue;
        }

        sizes.adapt(&g);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = sizes.trial(param, &x, &g, cfg.bond_cap);
            if trial == x {
                break;
            }
            match full_solve(param, &trial, fragments, vqe) {
                Ok(s) => {
                    cum += s.vqe_iterations;
                    if s.energy < current.energy {
                        accepted = Some((trial, s));
                        break;
                    }
                }
                Err(Error::InvalidGeometry(_)) => {}
                Err(e) => return Err(fail(e, &trajectory)),
            }
            trajectory.rejected_steps += 1;
            sizes.shrink();
        }
        let Some((trial, s)) = accepted else {
            log::warn!("nested baseline: no descending step with |g| = {gnorm:.3e}");
            // one more gradient cannot help when the line search already failed
            converged = gnorm < cfg.gradient_threshold;
            break;
        };
        previous_energy = current.energy;
        x = trial;
        current = s;
        iteration += 1;
        trajectory.push(record(iteration, &x, &current, gnorm, cum));
    }

    let mut state = current.state;
    state.converged = converged && state.converged;
    Ok(Outcome {
        method: "nested",
        thetas: state.fragment_results.iter().map(|f| f.theta.clone()).collect(),
        energy: current.energy,
        converged,
        dissociated,
        qubits_full: current.system.qubits_full(),
        qubits_embedded_max: current.system.qubits_embedded_max(),
        state,
        trajectory,
        x,
        outer_iterations: iteration,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
