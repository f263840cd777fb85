//! Variational fragment solver: UCCSD on the statevector simulator,
//! minimized by gradient descent with backtracking.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::dmet::{EmbeddedProblem, FragmentSolution, FragmentSolver};
use crate::error::{Error, Result};
use crate::fermion_ops::QubitOperator;
use crate::simulator::{apply_uccsd, energy, measure_rdms, parameter_shift_gradient, Rdms, UccsdAnsatz};

/// Halvings of the step before a line search gives up.
const MAX_HALVINGS: usize = 30;
/// Energy rise above the reference that counts as divergence, Ha.
const DIVERGENCE_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// η of θ ← θ − η∇E.
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop when max |∂E/∂θ| drops below this.
    pub gradient_tolerance: f64,
    /// Stop when an accepted step lowers the energy by less than this
    /// (and the gradient is within 10× its tolerance).
    pub energy_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { learning_rate: 0.1, max_iterations: 500, gradient_tolerance: 1e-5, energy_tolerance: 1e-9 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.gradient_tolerance > 0.0
            && self.energy_tolerance > 0.0
            && self.max_iterations >= 1
            && self.learning_rate.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("optimizer settings out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct VqeResult {
    pub theta: Vec<f64>,
    pub energy: f64,
    pub rdms: Rdms,
    /// Accepted gradient steps.
    pub iterations: usize,
    pub converged: bool,
    /// Energy at θ₀ followed by the energy after every accepted step.
    pub energy_trace: Vec<f64>,
    /// max |∂E/∂θ| at the last gradient evaluation.
    pub gradient_max: f64,
}

impl VqeResult {
    pub fn one_rdm(&self) -> &nalgebra::DMatrix<f64> {
        &self.rdms.one
    }

    pub fn two_rdm(&self) -> &crate::integrals::Tensor4 {
        &self.rdms.two
    }
}

/// Outcome of one gradient step.
#[derive(Debug, Clone)]
pub struct Step {
    pub theta: Vec<f64>,
    /// Energy after the step (before it, if no step was taken).
    pub energy: f64,
    /// Energy before the step.
    pub previous_energy: f64,
    pub gradient_max: f64,
    /// False when the gradient was already below tolerance.
    pub moved: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One gradient-descent step from θ with backtracking halving of η.
pub fn gradient_step(
    h: &QubitOperator,
    ansatz: &UccsdAnsatz,
    theta: &[f64],
    current_energy: Option<f64>,
    cfg: &OptimizerConfig,
) -> Result<Step> {
    let e0 = match current_energy {
        Some(e) => e,
        None => energy(ansatz, theta, h)?,
    };
    let grad = parameter_shift_gradient(ansatz, theta, h)?;
    let gmax = max_abs(&grad);
    if gmax < cfg.gradient_tolerance || grad.is_empty() {
        return Ok(Step { theta: theta.to_vec(), energy: e0, previous_energy: e0, gradient_max: gmax, moved: false });
    }
    let mut eta = cfg.learning_rate;
    for _ in 0..=MAX_HALVINGS {
        let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - eta * g).collect();
        let e = energy(ansatz, &trial, h)?;
        if e <= e0 {
            return Ok(Step { theta: trial, energy: e, previous_energy: e0, gradient_max: gmax, moved: true });
        }
        log::trace!("vqe backtrack: eta={eta:.3e} energy {e:.12} > {e0:.12}");
        eta *= 0.5;
    }
    // the gradient is numerically nonzero but no descent is possible
    Ok(Step { theta: theta.to_vec(), energy: e0, previous_energy: e0, gradient_max: gmax, moved: false })
}

/// Minimize ⟨ψ(θ)|H|ψ(θ)⟩ from θ₀ and measure RDMs at the optimum.
pub fn solve_fragment(
    h: &QubitOperator,
    ansatz: &UccsdAnsatz,
    theta0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<VqeResult> {
    cfg.validate()?;
    if theta0.len() != ansatz.n_parameters() {
        return Err(Error::DimensionMismatch { expected: ansatz.n_parameters(), got: theta0.len() });
    }
    h.real_terms(1e-10)?;
    let reference_energy = energy(ansatz, &vec![0.0; ansatz.n_parameters()], h)?;
    let mut theta = theta0.to_vec();
    let mut e = energy(ansatz, &theta, h)?;
    let mut trace = vec![e];
    let mut iterations = 0;
    let mut converged = false;
    let mut gmax = f64::INFINITY;
    while iterations < cfg.max_iterations {
        let step = gradient_step(h, ansatz, &theta, Some(e), cfg)?;
        gmax = step.gradient_max;
        if !step.moved {
            converged = gmax < cfg.gradient_tolerance;
            if !converged {
                log::warn!("vqe line search stalled with gradient {gmax:.3e}");
            }
            break;
        }
        iterations += 1;
        theta = step.theta;
        e = step.energy;
        trace.push(e);
        if e > reference_energy + DIVERGENCE_MARGIN {
            return Err(Error::OptimizerFailure(format!(
                "energy {e:.6} rose more than {DIVERGENCE_MARGIN} Ha above the reference {reference_energy:.6}"
            )));
        }
        // a stalled energy only counts once the gradient is small as well
        if step.previous_energy - e < cfg.energy_tolerance && gmax < 10.0 * cfg.gradient_tolerance {
            converged = true;
            break;
        }
    }
    let psi = apply_uccsd(ansatz, &theta, &ansatz.reference()?)?;
    Ok(VqeResult {
        rdms: measure_rdms(&psi, ansatz.n_qubits())?,
        theta,
        energy: e,
        iterations,
        converged,
        energy_trace: trace,
        gradient_max: gmax,
    })
}

/// Initial θ for the next solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub theta: Vec<f64>,
    /// The previous θ could not be reused.
    pub cold: bool,
}

/// Reuse the previous θ when its length matches the ansatz; zeros otherwise.
pub fn warm_start(previous: Option<&[f64]>, ansatz: &UccsdAnsatz) -> WarmStart {
    let n = ansatz.n_parameters();
    match previous {
        Some(t) if t.len() == n => WarmStart { theta: t.to_vec(), cold: false },
        Some(t) => {
            log::info!("warm start discarded: {} parameters stored, ansatz has {n}", t.len());
            WarmStart { theta: vec![0.0; n], cold: true }
        }
        None => WarmStart { theta: vec![0.0; n], cold: false },
    }
}

/// CSV rows `fragment,iteration,energy_ha` of an energy trace.
pub fn trace_rows(label: &str, result: &VqeResult) -> Vec<String> {
    result
        .energy_trace
        .iter()
        .enumerate()
        .map(|(i, e)| format!("{label},{i},{e:.12e}"))
        .collect()
}

/// DMET fragment solver running VQE, warm-starting each fragment from
/// its own last θ.
#[derive(Debug)]
pub struct VqeSolver {
    pub config: OptimizerConfig,
    warm: Mutex<Vec<Option<Vec<f64>>>>,
    cold_starts: Mutex<usize>,
    total_iterations: AtomicUsize,
    use_warm_start: bool,
}

impl VqeSolver {
    pub fn new(config: OptimizerConfig, use_warm_start: bool) -> Self {
        VqeSolver {
            config,
            warm: Mutex::new(Vec::new()),
            cold_starts: Mutex::new(0),
            total_iterations: AtomicUsize::new(0),
            use_warm_start,
        }
    }

    /// θ per fragment from the latest solves.
    pub fn thetas(&self) -> Vec<Option<Vec<f64>>> {
        self.warm.lock().expect("warm-start store poisoned").clone()
    }

    pub fn set_thetas(&self, thetas: Vec<Option<Vec<f64>>>) {
        *self.warm.lock().expect("warm-start store poisoned") = thetas;
    }

    /// Accepted VQE steps over every solve run by this solver.
    pub fn total_iterations(&self) -> usize {
        self.total_iterations.load(Ordering::Relaxed)
    }

    /// Number of stored θ that had to be discarded for a shape change.
    pub fn cold_starts(&self) -> usize {
        *self.cold_starts.lock().expect("counter poisoned")
    }
}

impl FragmentSolver for VqeSolver {
    fn solve(&self, index: usize, problem: &EmbeddedProblem, h: &QubitOperator) -> Result<FragmentSolution> {
        let ansatz = UccsdAnsatz::new(problem.n_qubits(), problem.n_electrons_emb)?;
        let previous = if self.use_warm_start {
            self.warm.lock().expect("warm-start store poisoned").get(index).cloned().flatten()
        } else {
            None
        };
        let start = warm_start(previous.as_deref(), &ansatz);
        if start.cold {
            *self.cold_starts.lock().expect("counter poisoned") += 1;
        }
        let r = solve_fragment(h, &ansatz, &start.theta, &self.config)?;
        self.total_iterations.fetch_add(r.iterations, Ordering::Relaxed);
        for row in trace_rows(&problem.fragment.label, &r) {
            log::trace!("vqe,{row}");
        }
        {
            let mut store = self.warm.lock().expect("warm-start store poisoned");
            if store.len() <= index {
                store.resize(index + 1, None);
            }
            store[index] = Some(r.theta.clone());
        }
        Ok(FragmentSolution {
            embedded_energy: r.energy,
            rdms: r.rdms,
            theta: r.theta,
            iterations: r.iterations,
            converged: r.converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmet::{exact_solver, solve_fragments, total_energy, DmetSystem};
    use crate::fermion_ops::{from_integrals, jordan_wigner};
    use crate::geometry::{parse_xyz, Molecule};
    use crate::integrals::{build_basis, compute_ao_integrals, transform_to_mo};
    use crate::scf::run_rhf;
    use crate::simulator::{exact_ground_state, finite_difference_gradient, FD_STEP};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn chain(z: &[f64]) -> Molecule {
        let body: String = z.iter().map(|z| format!("H 0 0 {z}\n")).collect();
        parse_xyz(&format!("{}\n\n{body}", z.len())).unwrap()
    }

    fn molecular_hamiltonian(mol: &Molecule) -> QubitOperator {
        let ao = compute_ao_integrals(mol, &build_basis(mol).unwrap()).unwrap();
        let mf = run_rhf(&ao.tensors, &ao.overlap, mol.n_electrons(), None).unwrap();
        let mo = transform_to_mo(&ao.tensors, &mf.mo_coefficients).unwrap();
        jordan_wigner(&from_integrals(&mo.one_body, &mo.two_body, mo.e_nuc).unwrap())
    }

    fn tight() -> OptimizerConfig {
        OptimizerConfig { max_iterations: 5000, gradient_tolerance: 1e-7, energy_tolerance: 1e-13, ..Default::default() }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        for bad in [
            OptimizerConfig { learning_rate: 0.0, ..Default::default() },
            OptimizerConfig { max_iterations: 0, ..Default::default() },
            OptimizerConfig { gradient_tolerance: -1.0, ..Default::default() },
            OptimizerConfig { energy_tolerance: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn h2_reaches_fci() {
        for r in [0.6, 0.7414, 1.2, 2.0] {
            let h = molecular_hamiltonian(&chain(&[0.0, r]));
            let ansatz = UccsdAnsatz::new(4, 2).unwrap();
            let res = solve_fragment(&h, &ansatz, &[0.0; 3], &tight()).unwrap();
            let (fci, _) = exact_ground_state(&h, 4, 2).unwrap();
            assert!(res.converged);
            assert!((res.energy - fci).abs() < 1e-7, "r={r}: {} vs {fci}", res.energy);
            assert!(res.energy >= fci - 1e-9);
            assert!((energy(&ansatz, &res.theta, &h).unwrap() - res.energy).abs() < 1e-10);
            assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0]));
            assert!((res.rdms.particle_number() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn converged_start_returns_immediately() {
        let h = molecular_hamiltonian(&chain(&[0.0, 0.7414]));
        let ansatz = UccsdAnsatz::new(4, 2).unwrap();
        let first = solve_fragment(&h, &ansatz, &[0.0; 3], &tight()).unwrap();
        let again = solve_fragment(&h, &ansatz, &first.theta, &OptimizerConfig::default()).unwrap();
        assert!(again.iterations <= 1);
        assert!(again.converged);
        assert!(again.gradient_max < 10.0 * OptimizerConfig::default().gradient_tolerance);
    }

    #[test]
    fn identity_hamiltonian_is_trivial() {
        let h = QubitOperator::identity(-0.4);
        let ansatz = UccsdAnsatz::new(4, 2).unwrap();
        let res = solve_fragment(&h, &ansatz, &[0.1, -0.2, 0.3], &OptimizerConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.converged);
        assert_eq!(res.gradient_max, 0.0);
        assert!((res.energy + 0.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = molecular_hamiltonian(&chain(&[0.0, 0.7414]));
        let ansatz = UccsdAnsatz::new(4, 2).unwrap();
        assert!(solve_fragment(&h, &ansatz, &[0.0; 2], &OptimizerConfig::default()).is_err());
        let bad = &h + &QubitOperator::from_term(crate::fermion_ops::PauliString::IDENTITY, Complex64::new(0.0, 1e-3));
        assert!(matches!(
            solve_fragment(&bad, &ansatz, &[0.0; 3], &OptimizerConfig::default()),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn warm_start_rules() {
        let ansatz = UccsdAnsatz::new(4, 2).unwrap();
        assert_eq!(warm_start(None, &ansatz), WarmStart { theta: vec![0.0; 3], cold: false });
        assert_eq!(warm_start(Some(&[0.1, 0.2, 0.3]), &ansatz).theta, vec![0.1, 0.2, 0.3]);
        let w = warm_start(Some(&[0.1]), &ansatz);
        assert!(w.cold && w.theta == vec![0.0; 3]);
    }

    #[test]
    fn deterministic_traces() {
        let h = molecular_hamiltonian(&chain(&[0.0, 1.1]));
        let ansatz = UccsdAnsatz::new(4, 2).unwrap();
        let a = solve_fragment(&h, &ansatz, &[0.0; 3], &OptimizerConfig::default()).unwrap();
        let b = solve_fragment(&h, &ansatz, &[0.0; 3], &OptimizerConfig::default()).unwrap();
        assert_eq!(a.energy_trace, b.energy_trace);
        assert_eq!(trace_rows("H0", &a)[0], format!("H0,0,{:.12e}", a.energy_trace[0]));
    }

    #[test]
    fn h4_fragment_vqe_matches_exact_and_warm_start_helps() {
        let frags: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
        let mol = chain(&[0.0, 0.734, 3.734, 4.468]);
        let sys = DmetSystem::build(&mol, &frags, None).unwrap();
        let p = &sys.problems[0];
        let h = p.qubit_hamiltonian(0.0);
        let ansatz = UccsdAnsatz::new(4, 2).unwrap();
        let res = solve_fragment(&h, &ansatz, &[0.0; 3], &tight()).unwrap();
        let (exact, _) = exact_ground_state(&h, 4, 2).unwrap();
        assert!((res.energy - exact).abs() < 1e-7);

        // perturb the geometry by 1e-3 Å and compare warm and cold starts
        let moved = chain(&[0.0, 0.735, 3.734, 4.468]);
        let sys2 = DmetSystem::build(&moved, &frags, Some(&sys)).unwrap();
        let h2 = sys2.problems[0].qubit_hamiltonian(0.0);
        let cfg = OptimizerConfig::default();
        let cold = solve_fragment(&h2, &ansatz, &[0.0; 3], &cfg).unwrap();
        let warm = solve_fragment(&h2, &ansatz, &res.theta, &cfg).unwrap();
        assert!(warm.iterations < cold.iterations, "{} vs {}", warm.iterations, cold.iterations);
    }

    #[test]
    fn vqe_solver_reproduces_exact_dmet() {
        let frags: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
        let sys = DmetSystem::build(&chain(&[0.0, 0.8, 2.0, 2.9]), &frags, None).unwrap();
        let solver = VqeSolver::new(tight(), true);
        // same μ for both: the μ search itself stops anywhere inside its tolerance
        let vqe = solve_fragments(&sys, 0.05, &solver).unwrap();
        let exact = solve_fragments(&sys, 0.05, &exact_solver).unwrap();
        // densities are first order in the residual gradient, energies second order
        assert!((vqe.total_electrons() - exact.total_electrons()).abs() < 1e-5);
        assert!(sys.converge_mu(&solver, 0.0).unwrap().converged);
        let (ev, ee) = (total_energy(&vqe, sys.e_nuc()).unwrap(), total_energy(&exact, sys.e_nuc()).unwrap());
        assert!((ev - ee).abs() < 1e-5, "{ev} vs {ee}");
        assert!(solver.thetas().iter().all(|t| t.as_ref().map(|t| t.len()) == Some(3)));
        assert_eq!(solver.cold_starts(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn variational_and_stationary(r in 0.5f64..2.5, t in proptest::collection::vec(-0.5f64..0.5, 3)) {
            let h = molecular_hamiltonian(&chain(&[0.0, r]));
            let ansatz = UccsdAnsatz::new(4, 2).unwrap();
            let cfg = OptimizerConfig::default();
            let res = solve_fragment(&h, &ansatz, &t, &cfg).unwrap();
            let (fci, _) = exact_ground_state(&h, 4, 2).unwrap();
            prop_assert!(res.energy >= fci - 1e-9);
            prop_assert!(res.energy <= res.energy_trace[0] + 1e-14);
            if res.converged {
                let g = finite_difference_gradient(&ansatz, &res.theta, &h, FD_STEP).unwrap();
                prop_assert!(res.gradient_max < 10.0 * cfg.gradient_tolerance);
                prop_assert!(max_abs(&g) < 10.0 * cfg.gradient_tolerance);
            }
        }
    }
}
