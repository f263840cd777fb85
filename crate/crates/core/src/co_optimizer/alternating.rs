//! Alternating θ/x descent inside the chemical-potential loop.

use std::time::Instant;

use rayon::prelude::*;

use super::{
    build_system, clamp_parameters, fail, is_length, max_abs, nuclear_gradient, nuclear_gradient_full, project_gradient,
    CoOptConfig, GradientMode, OptResult, Outcome, Record, StepSizes, Trajectory, MAX_BACKTRACKS,
};
use crate::dmet::{
    assemble_state, fragment_result, total_energy, DmetState, DmetSystem, FragmentSolution, ELECTRON_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::GeometryParameterization;
use crate::simulator::{apply_uccsd, energy, measure_rdms, Rdms, UccsdAnsatz};
use crate::vqe_engine::{gradient_step, warm_start, OptimizerConfig, VqeSolver};

/// Chemical-potential cycles before giving up.
const MAX_MU_CYCLES: usize = 10;

/// Circuit state of one fragment.
#[derive(Debug, Clone)]
struct Live {
    ansatz: UccsdAnsatz,
    theta: Vec<f64>,
    /// RDMs of ψ(θ) in the simulation basis; they depend on θ only.
    rdms: Rdms,
    /// ⟨H_emb(μ)⟩ at θ for the current Hamiltonian, if known.
    energy: Option<f64>,
    /// max |∂E/∂θ| at the last θ step.
    gradient_max: f64,
}

impl Live {
    fn new(n_qubits: usize, n_electrons: usize, previous: Option<&[f64]>) -> Result<Self> {
        let ansatz = UccsdAnsatz::new(n_qubits, n_electrons)?;
        let theta = warm_start(previous, &ansatz).theta;
        let mut live = Live { ansatz, theta, rdms: Rdms::zeros(n_qubits), energy: None, gradient_max: f64::INFINITY };
        live.remeasure()?;
        Ok(live)
    }

    fn remeasure(&mut self) -> Result<()> {
        let psi = apply_uccsd(&self.ansatz, &self.theta, &self.ansatz.reference()?)?;
        self.rdms = measure_rdms(&psi, self.ansatz.n_qubits())?;
        Ok(())
    }
}

/// Carry circuit states over to a rebuilt system, cold-starting fragments
/// whose embedded size changed.
fn carry_over(system: &DmetSystem, live: &[Live]) -> Result<Vec<Live>> {
    system
        .problems
        .iter()
        .zip(live)
        .map(|(p, l)| {
            if l.ansatz.n_qubits() == p.n_qubits() && l.ansatz.n_occ_spin() == p.n_electrons_emb {
                Ok(Live { energy: None, ..l.clone() })
            } else {
                log::info!("fragment {} changed size; cold-starting its circuit", p.fragment.label);
                Live::new(p.n_qubits(), p.n_electrons_emb, None)
            }
        })
        .collect()
}

fn state_from_live(system: &DmetSystem, live: &[Live], mu: f64, vqe: &OptimizerConfig) -> Result<DmetState> {
    let results = system
        .problems
        .iter()
        .zip(live)
        .map(|(p, l)| {
            let sol = FragmentSolution {
                embedded_energy: l.energy.unwrap_or(f64::NAN),
                rdms: l.rdms.clone(),
                theta: l.theta.clone(),
                iterations: 0,
                converged: l.gradient_max < vqe.gradient_tolerance,
            };
            fragment_result(p, sol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_state(system, mu, results))
}

/// Up to `steps` gradient steps on every fragment's θ; returns the accepted count.
fn theta_steps(system: &DmetSystem, live: &mut [Live], mu: f64, steps: usize, vqe: &OptimizerConfig) -> Result<usize> {
    let counts = system
        .problems
        .par_iter()
        .zip(live.par_iter_mut())
        .map(|(p, l)| -> Result<usize> {
            let h = p.qubit_hamiltonian(mu);
            let mut e = match l.energy {
                Some(e) => e,
                None => energy(&l.ansatz, &l.theta, &h)?,
            };
            let mut moved = 0;
            for _ in 0..steps {
                let s = gradient_step(&h, &l.ansatz, &l.theta, Some(e), vqe)?;
                l.gradient_max = s.gradient_max;
                if !s.moved {
                    break;
                }
                moved += 1;
                l.theta = s.theta;
                e = s.energy;
            }
            l.energy = Some(e);
            if moved > 0 {
                l.remeasure()?;
            }
            Ok(moved)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(counts.iter().sum())
}

fn record(iteration: usize, x: &[f64], state: &DmetState, e: f64, g: f64, cum: usize) -> Record {
    Record {
        iteration,
        x: x.to_vec(),
        energy: e,
        fragment_energies: state.fragment_results.iter().map(|f| f.energy).collect(),
        mu: state.mu,
        theta_norms: state.fragment_results.iter().map(|f| f.theta.iter().map(|t| t * t).sum::<f64>().sqrt()).collect(),
        grad_x_norm: g,
        cumulative_vqe_iterations: cum,
    }
}

struct Run<'a> {
    param: &'a GeometryParameterization,
    fragments: &'a [Vec<usize>],
    cfg: &'a CoOptConfig,
    vqe: &'a OptimizerConfig,
    x: Vec<f64>,
    system: DmetSystem,
    live: Vec<Live>,
    mu: f64,
    state: DmetState,
    energy: f64,
    sizes: StepSizes,
    trajectory: Trajectory,
    vqe_iterations: usize,
    iteration: usize,
    grad_norm: f64,
    dissociated: Vec<bool>,
}

enum Inner {
    Converged,
    Budget,
    Stalled,
}

impl Run<'_> {
    fn gradient(&mut self) -> Result<Vec<f64>> {
        match self.cfg.gradient_mode {
            GradientMode::FrozenRdm => {
                nuclear_gradient(self.param, &self.x, self.fragments, &self.system, &self.state, self.cfg)
            }
            GradientMode::FullFiniteDifference => {
                let thetas: Vec<Vec<f64>> = self.live.iter().map(|l| l.theta.clone()).collect();
                let (g, spent) = nuclear_gradient_full(
                    self.param,
                    &self.x,
                    self.fragments,
                    &self.system,
                    &self.state,
                    &thetas,
                    self.vqe,
                    self.cfg,
                )?;
                self.vqe_iterations += spent;
                Ok(g)
            }
        }
    }

    /// Alternate θ and x steps at fixed μ until the joint cost settles.
    fn inner(&mut self) -> Result<Inner> {
        loop {
            if self.iteration >= self.cfg.max_outer_iterations {
                return Ok(Inner::Budget);
            }
            self.vqe_iterations +=
                theta_steps(&self.system, &mut self.live, self.mu, self.cfg.theta_steps_per_x_step, self.vqe)?;
            self.state = state_from_live(&self.system, &self.live, self.mu, self.vqe)?;
            let e_theta = total_energy(&self.state, self.system.e_nuc())?;
            let raw = self.gradient()?;
            let (g, dissociated) = project_gradient(self.param, &self.x, &raw, self.cfg.bond_cap);
            self.dissociated = dissociated;
            self.grad_norm = max_abs(&g);
            let theta_settled = self.live.iter().all(|l| l.gradient_max < 10.0 * self.vqe.gradient_tolerance);
            log::debug!(
                "co-opt iter {}: E={e_theta:.10} |g_x|={:.3e} |g_theta|max={:.3e} x={:?}",
                self.iteration,
                self.grad_norm,
                self.live.iter().map(|l| l.gradient_max).fold(0.0, f64::max),
                self.x
            );
            if self.grad_norm < self.cfg.gradient_threshold
                && theta_settled
                && (e_theta - self.energy).abs() < self.cfg.energy_threshold
            {
                self.energy = e_theta;
                return Ok(Inner::Converged);
            }
            self.energy = e_theta;

            self.sizes.adapt(&g);
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial = self.sizes.trial(self.param, &self.x, &g, self.cfg.bond_cap);
                if trial == self.x {
                    break;
                }
                let candidate = match build_system(self.param, &trial, self.fragments, Some(&self.system)) {
                    Ok(s) => s,
                    Err(Error::InvalidGeometry(msg)) => {
                        log::debug!("trial geometry rejected: {msg}");
                        self.trajectory.rejected_steps += 1;
                        self.sizes.shrink();
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let live = carry_over(&candidate, &self.live)?;
                let state = state_from_live(&candidate, &live, self.mu, self.vqe)?;
                let e = total_energy(&state, candidate.e_nuc())?;
                if e < e_theta {
                    accepted = Some((trial, candidate, live, state, e));
                    break;
                }
                log::debug!("x step rejected: {e:.12} >= {e_theta:.12}");
                self.trajectory.rejected_steps += 1;
                self.sizes.shrink();
            }
            match accepted {
                Some((x, system, live, state, e)) => {
                    self.x = x;
                    self.system = system;
                    self.live = live;
                    self.state = state;
                    self.energy = e;
                    self.iteration += 1;
                    self.trajectory.push(record(
                        self.iteration,
                        &self.x,
                        &self.state,
                        e,
                        self.grad_norm,
                        self.vqe_iterations,
                    ));
                }
                None if theta_settled => {
                    // the frozen-RDM gradient is not exactly the slope of the
                    // frozen-θ energy, so tiny gradients can fail the line search
                    if self.grad_norm < self.cfg.gradient_threshold {
                        return Ok(Inner::Converged);
                    }
                    log::warn!("no descending x step found with |g_x| = {:.3e}", self.grad_norm);
                    return Ok(Inner::Stalled);
                }
                None => {}
            }
        }
    }

    /// After convergence, move bonds still pushed outward to the cap when
    /// that lowers the energy. Returns whether anything moved.
    fn probe_cap(&mut self) -> Result<bool> {
        let raw = self.gradient()?;
        let mut moved = false;
        for i in 0..self.x.len() {
            if !is_length(self.param, i) || raw[i] >= 0.0 || self.x[i] >= self.cfg.bond_cap {
                continue;
            }
            let mut trial = self.x.clone();
            trial[i] = self.cfg.bond_cap;
            let candidate = match build_system(self.param, &trial, self.fragments, Some(&self.system)) {
                Ok(s) => s,
                Err(Error::InvalidGeometry(_)) => continue,
                Err(e) => return Err(e),
            };
            // compare relaxed circuits: frozen θ flatters the far geometry
            let mut live = carry_over(&candidate, &self.live)?;
            self.vqe_iterations += theta_steps(&candidate, &mut live, self.mu, self.vqe.max_iterations, self.vqe)?;
            let state = state_from_live(&candidate, &live, self.mu, self.vqe)?;
            let e = total_energy(&state, candidate.e_nuc())?;
            if e < self.energy {
                log::info!("parameter {i} moved from {:.4} to the cap {}", self.x[i], self.cfg.bond_cap);
                self.x = trial;
                self.system = candidate;
                self.live = live;
                self.state = state;
                self.energy = e;
                self.iteration += 1;
                self.trajectory.push(record(
                    self.iteration,
                    &self.x,
                    &self.state,
                    e,
                    self.grad_norm,
                    self.vqe_iterations,
                ));
                moved = true;
            }
        }
        Ok(moved)
    }

    /// Re-converge μ with VQE warm-started from the current circuits.
    fn converge_mu(&mut self) -> Result<()> {
        let solver = VqeSolver::new(self.vqe.clone(), true);
        solver.set_thetas(self.live.iter().map(|l| Some(l.theta.clone())).collect());
        let state = self.system.converge_mu(&solver, self.mu)?;
        self.vqe_iterations += solver.total_iterations();
        self.mu = state.mu;
        for (l, f) in self.live.iter_mut().zip(&state.fragment_results) {
            if f.theta.len() == l.ansatz.n_parameters() {
                l.theta = f.theta.clone();
            }
            l.energy = None;
            l.gradient_max = f64::INFINITY;
            l.remeasure()?;
        }
        self.state = state_from_live(&self.system, &self.live, self.mu, self.vqe)?;
        self.energy = total_energy(&self.state, self.system.e_nuc())?;
        self.iteration += 1;
        self.trajectory.push(record(
            self.iteration,
            &self.x,
            &self.state,
            self.energy,
            self.grad_norm,
            self.vqe_iterations,
        ));
        Ok(())
    }
}

/// Optimize geometry and circuits together.
///
/// 1. Build integrals, mean field and baths at x₀ with θ = 0, μ = 0.
/// 2. Repeat: `theta_steps_per_x_step` gradient steps on every fragment's θ,
///    then one backtracking gradient step on x using the frozen-RDM nuclear
///    gradient; each accepted x rebuilds the embedding and keeps θ.
/// 3. Once gradient and energy settle, bonds still pushed outward are
///    tried at the cap; if that lowers the energy they are moved there
///    (dissociated) and 2 resumes.
/// 4. Re-converge μ if the electron count is off and go back to 2.
pub fn co_optimize(
    param: &GeometryParameterization,
    x0: &[f64],
    fragments: &[Vec<usize>],
    cfg: &CoOptConfig,
    vqe: &OptimizerConfig,
) -> OptResult {
    let start = Instant::now();
    let mut trajectory = Trajectory::default();
    let setup = || -> Result<()> {
        cfg.validate()?;
        vqe.validate()?;
        if x0.len() != param.len() {
            return Err(Error::DimensionMismatch { expected: param.len(), got: x0.len() });
        }
        Ok(())
    };
    setup().map_err(|e| fail(e, &trajectory))?;
    let x = clamp_parameters(param, x0, cfg.bond_cap);
    let system = build_system(param, &x, fragments, None).map_err(|e| fail(e, &trajectory))?;
    let live = system
        .problems
        .iter()
        .map(|p| Live::new(p.n_qubits(), p.n_electrons_emb, None))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| fail(e, &trajectory))?;
    let state = state_from_live(&system, &live, 0.0, vqe).map_err(|e| fail(e, &trajectory))?;
    let energy = total_energy(&state, system.e_nuc()).map_err(|e| fail(e, &trajectory))?;
    trajectory.push(record(0, &x, &state, energy, f64::NAN, 0));

    let mut run = Run {
        param,
        fragments,
        cfg,
        vqe,
        sizes: StepSizes::new(x.len(), cfg.x_learning_rate),
        dissociated: vec![false; x.len()],
        x,
        system,
        live,
        mu: 0.0,
        state,
        energy,
        trajectory,
        vqe_iterations: 0,
        iteration: 0,
        grad_norm: f64::NAN,
    };

    let mut converged = false;
    let mut cycles = 0;
    for _ in 0..MAX_MU_CYCLES {
        cycles += 1;
        let inner = loop {
            let r = run.inner().map_err(|e| fail(e, &run.trajectory))?;
            if matches!(r, Inner::Converged) && run.probe_cap().map_err(|e| fail(e, &run.trajectory))? {
                continue;
            }
            break r;
        };
        if !matches!(inner, Inner::Converged) {
            break;
        }
        let deviation = run.state.electron_deviation();
        if deviation.abs() < ELECTRON_TOL {
            converged = true;
            break;
        }
        log::info!("electron count off by {deviation:+.3e}; re-converging mu from {:.6}", run.mu);
        run.converge_mu().map_err(|e| fail(e, &run.trajectory))?;
    }
    run.state.converged = converged;

    Ok(Outcome {
        method: "co-opt",
        thetas: run.live.iter().map(|l| l.theta.clone()).collect(),
        energy: run.energy,
        converged,
        dissociated: run.dissociated,
        qubits_full: run.system.qubits_full(),
        qubits_embedded_max: run.system.qubits_embedded_max(),
        state: run.state,
        trajectory: run.trajectory,
        x: run.x,
        outer_iterations: cycles,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
