//! Joint optimization of geometry parameters x and circuit parameters θ
//! inside the DMET chemical-potential loop, the nested-loop baseline, and
//! potential-surface scans.

mod alternating;
mod gradient;
mod nested;
mod scan;

use std::fmt::Write as _;

pub use alternating::co_optimize;
pub use gradient::{frozen_rdm_energy, nuclear_gradient, nuclear_gradient_full};
use gradient::central_differences;
pub use nested::{full_solve, nested_baseline, FullSolve};
pub use scan::{fci_energy, potential_surface_scan, surface_csv, ScanAxis, ScanMode, ScanPoint, FCI_MAX_SPIN_ORBITALS};

use crate::dmet::{DmetState, DmetSystem};
use crate::error::{Error, Result};
use crate::geometry::{GeometryParameterization, Molecule, ParameterKind};

/// Shortest bond length a step may produce, Å.
pub const MIN_BOND_LENGTH: f64 = 0.3;
/// Largest change of any parameter in one x step.
pub const MAX_X_STEP: f64 = 0.1;
/// Step halvings tried before an x step is abandoned.
pub const MAX_BACKTRACKS: usize = 10;
/// Growth of a component's step size while its gradient keeps its sign.
const STEP_GROWTH: f64 = 1.2;
/// Upper bound on a component's step size relative to the base rate.
const MAX_STEP_RATIO: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Hellmann–Feynman: rebuild integrals and baths, keep fragment RDMs.
    FrozenRdm,
    /// Re-optimize θ at every displaced geometry.
    FullFiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoOptConfig {
    pub theta_steps_per_x_step: usize,
    /// Initial step size of x ← x − η∇E, Å²/Ha.
    pub x_learning_rate: f64,
    /// Central-difference displacement, Å (radians for angles).
    pub x_gradient_step: f64,
    /// Cap on accepted x steps.
    pub max_outer_iterations: usize,
    /// Converged when max |∂E/∂x| (dissociated components excluded) is below this, Ha/Å.
    pub gradient_threshold: f64,
    /// ... and the energy changed by less than this over the last step, Ha.
    pub energy_threshold: f64,
    /// Bond parameters are capped here; a bond pushed against the cap is dissociated.
    pub bond_cap: f64,
    pub gradient_mode: GradientMode,
}

impl Default for CoOptConfig {
    fn default() -> Self {
        CoOptConfig {
            theta_steps_per_x_step: 5,
            x_learning_rate: 0.05,
            x_gradient_step: 1e-3,
            max_outer_iterations: 2000,
            gradient_threshold: 1e-4,
            energy_threshold: 1e-7,
            bond_cap: 3.0,
            gradient_mode: GradientMode::FrozenRdm,
        }
    }
}

impl CoOptConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.x_learning_rate,
            self.x_gradient_step,
            self.gradient_threshold,
            self.energy_threshold,
            self.bond_cap,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || self.theta_steps_per_x_step == 0
            || self.max_outer_iterations == 0
        {
            return Err(Error::InvalidConfig(format!("co-optimizer settings out of range: {self:?}")));
        }
        if self.bond_cap <= MIN_BOND_LENGTH {
            return Err(Error::InvalidConfig(format!("bond cap {} Å is below {MIN_BOND_LENGTH} Å", self.bond_cap)));
        }
        Ok(())
    }
}

/// One accepted iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub energy: f64,
    pub fragment_energies: Vec<f64>,
    pub mu: f64,
    pub theta_norms: Vec<f64>,
    /// max |∂E/∂x| at the geometry the step started from.
    pub grad_x_norm: f64,
    pub cumulative_vqe_iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    /// Trial geometries rejected by backtracking.
    pub rejected_steps: usize,
}

impl Trajectory {
    /// Append a record; iteration indices must increase and the VQE count must not drop.
    pub fn push(&mut self, record: Record) {
        if let Some(last) = self.records.last() {
            assert!(record.iteration > last.iteration, "trajectory iterations must increase");
            assert!(
                record.cumulative_vqe_iterations >= last.cumulative_vqe_iterations,
                "cumulative VQE count must not decrease"
            );
        }
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn cumulative_vqe_iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.cumulative_vqe_iterations)
    }

    /// `iter,cum_vqe_iters,energy_ha,mu,grad_x_norm,x_0,...` with 12 significant digits.
    pub fn to_csv(&self, n_params: usize) -> String {
        let mut out = String::from("iter,cum_vqe_iters,energy_ha,mu,grad_x_norm");
        for i in 0..n_params {
            let _ = write!(out, ",x_{i}");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                r.iteration,
                r.cumulative_vqe_iterations,
                fmt12(r.energy),
                fmt12(r.mu),
                fmt12(r.grad_x_norm)
            );
            for v in &r.x {
                let _ = write!(out, ",{}", fmt12(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Twelve significant digits in scientific notation; `nan` for non-finite values.
pub fn fmt12(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        "nan".into()
    }
}

/// Result of a geometry optimization.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub method: &'static str,
    pub x: Vec<f64>,
    /// Final θ per fragment.
    pub thetas: Vec<Vec<f64>>,
    pub energy: f64,
    pub converged: bool,
    /// Length parameters pressed against the bond cap.
    pub dissociated: Vec<bool>,
    pub trajectory: Trajectory,
    pub state: DmetState,
    pub qubits_full: usize,
    pub qubits_embedded_max: usize,
    /// Chemical-potential cycles.
    pub outer_iterations: usize,
    pub wall_time_s: f64,
}

/// An error together with the trajectory recorded before it happened.
#[derive(Debug, Clone)]
pub struct Failure {
    pub error: Error,
    pub trajectory: Trajectory,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} recorded iterations)", self.error, self.trajectory.records.len())
    }
}

impl std::error::Error for Failure {}

pub type OptResult = std::result::Result<Outcome, Box<Failure>>;

pub(crate) fn fail(error: Error, trajectory: &Trajectory) -> Box<Failure> {
    Box::new(Failure { error, trajectory: trajectory.clone() })
}

/// Geometry and DMET system at x, aligned with `previous` when given.
pub fn build_system(
    param: &GeometryParameterization,
    x: &[f64],
    fragments: &[Vec<usize>],
    previous: Option<&DmetSystem>,
) -> Result<DmetSystem> {
    let mol: Molecule = param.apply(x)?;
    DmetSystem::build(&mol, fragments, previous)
}

pub(crate) fn is_length(param: &GeometryParameterization, i: usize) -> bool {
    param.parameter_kinds()[i] == ParameterKind::Length
}

/// Keep bond parameters inside [MIN_BOND_LENGTH, cap].
pub fn clamp_parameters(param: &GeometryParameterization, x: &[f64], cap: f64) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| if is_length(param, i) { v.clamp(MIN_BOND_LENGTH, cap) } else { v })
        .collect()
}

/// Zero the gradient of bonds held at a bound and pushed against it.
/// Returns the projected gradient and the dissociation flags.
pub fn project_gradient(param: &GeometryParameterization, x: &[f64], g: &[f64], cap: f64) -> (Vec<f64>, Vec<bool>) {
    let mut out = g.to_vec();
    let mut dissociated = vec![false; g.len()];
    for i in 0..g.len() {
        if !is_length(param, i) {
            continue;
        }
        if x[i] >= cap - 1e-12 && g[i] <= 0.0 {
            out[i] = 0.0;
            dissociated[i] = true;
        } else if x[i] <= MIN_BOND_LENGTH + 1e-12 && g[i] >= 0.0 {
            out[i] = 0.0;
        }
    }
    (out, dissociated)
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Per-component step sizes for x ← x − η∘∇E. A component's η grows while
/// its gradient keeps its sign and halves when the sign flips; every η
/// halves when backtracking rejects a trial step.
#[derive(Debug, Clone)]
pub(crate) struct StepSizes {
    eta: Vec<f64>,
    base: f64,
    previous: Option<Vec<f64>>,
}

impl StepSizes {
    pub(crate) fn new(n: usize, base: f64) -> Self {
        StepSizes { eta: vec![base; n], base, previous: None }
    }

    pub(crate) fn adapt(&mut self, g: &[f64]) {
        if let Some(prev) = &self.previous {
            for i in 0..g.len() {
                let s = g[i] * prev[i];
                if s > 0.0 {
                    self.eta[i] = (self.eta[i] * STEP_GROWTH).min(self.base * MAX_STEP_RATIO);
                } else if s < 0.0 {
                    self.eta[i] *= 0.5;
                }
            }
        }
        self.previous = Some(g.to_vec());
    }

    pub(crate) fn shrink(&mut self) {
        for e in &mut self.eta {
            *e *= 0.5;
        }
    }

    pub(crate) fn trial(&self, param: &GeometryParameterization, x: &[f64], g: &[f64], cap: f64) -> Vec<f64> {
        let stepped: Vec<f64> = x
            .iter()
            .zip(g)
            .zip(&self.eta)
            .map(|((xi, gi), e)| xi - (e * gi).clamp(-MAX_X_STEP, MAX_X_STEP))
            .collect();
        clamp_parameters(param, &stepped, cap)
    }
}
