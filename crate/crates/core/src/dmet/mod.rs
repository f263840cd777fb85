//! Density matrix embedding: fragments, Schmidt baths, embedded
//! Hamiltonians, chemical-potential self-consistency and energy assembly.
//!
//! All orbital spaces live in the Löwdin-orthogonalized AO basis. A
//! fragment owns the orthogonalized AOs centred on its atoms. Each embedded
//! problem is simulated in a semi-canonical rotation of its fragment+bath
//! space in which the projected mean-field determinant occupies the first
//! orbitals; RDMs are rotated back before energies are assembled.

mod mu;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use mu::{optimize_mu, ELECTRON_TOL, MAX_MU_ITERATIONS, MU_LIMIT};

use crate::error::{Error, Result};
use crate::fermion_ops::{add_chemical_potential, from_integrals, jordan_wigner, FermionOperator, QubitOperator};
use crate::geometry::Molecule;
use crate::integrals::{compute_ao_integrals, build_basis, transform_to_mo, AoIntegrals, IntegralTensors, Tensor4};
use crate::linalg::symmetric_eigen;
use crate::scf::{mean_field_potential, run_rhf, MeanFieldResult};
use crate::simulator::{exact_ground_state, measure_rdms, Rdms};

/// Schmidt singular values at or below this are not turned into bath orbitals.
pub const BATH_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub atom_indices: Vec<usize>,
    /// Orthogonalized AOs sitting on the fragment atoms.
    pub orbital_indices: Vec<usize>,
    pub label: String,
}

/// Upper bound on the embedded qubit count of a fragment holding `l_frag`
/// of `l_total` spatial orbitals with `n_occ` of them doubly occupied. The
/// bath cannot outgrow the rank of the fragment–environment block of an
/// idempotent mean-field density.
pub fn projected_embedding_qubits(l_frag: usize, l_total: usize, n_occ: usize) -> usize {
    let bath = l_frag.min(l_total.saturating_sub(l_frag)).min(n_occ).min(l_total.saturating_sub(n_occ));
    2 * (l_frag + bath)
}

/// Build fragments from atom-index lists; they must be non-empty, disjoint
/// and cover every atom.
pub fn make_fragments(mol: &Molecule, atom_lists: &[Vec<usize>], orbital_atoms: &[usize]) -> Result<Vec<Fragment>> {
    if atom_lists.is_empty() {
        return Err(Error::InvalidFragments("no fragments given".into()));
    }
    let mut owner = vec![None; mol.len()];
    for (k, list) in atom_lists.iter().enumerate() {
        if list.is_empty() {
            return Err(Error::InvalidFragments(format!("fragment {k} is empty")));
        }
        for &a in list {
            if a >= mol.len() {
                return Err(Error::InvalidFragments(format!(
                    "fragment {k} names atom {a}, molecule has {} atoms",
                    mol.len()
                )));
            }
            if let Some(prev) = owner[a] {
                return Err(Error::InvalidFragments(format!("atom {a} is in fragments {prev} and {k}")));
            }
            owner[a] = Some(k);
        }
    }
    if let Some(a) = owner.iter().position(|o| o.is_none()) {
        return Err(Error::InvalidFragments(format!("atom {a} is not in any fragment")));
    }
    Ok(atom_lists
        .iter()
        .map(|list| {
            let mut atom_indices = list.clone();
            atom_indices.sort_unstable();
            let orbital_indices = orbital_atoms
                .iter()
                .enumerate()
                .filter(|(_, a)| atom_indices.contains(a))
                .map(|(i, _)| i)
                .collect();
            let label = atom_indices
                .iter()
                .map(|&a| format!("{}{}", mol.atoms()[a].element, a))
                .collect::<Vec<_>>()
                .join("+");
            Fragment { atom_indices, orbital_indices, label }
        })
        .collect())
}

/// A fragment's embedded problem at one geometry.
#[derive(Debug, Clone)]
pub struct EmbeddedProblem {
    pub fragment: Fragment,
    /// L × L_B bath orbitals (zero on fragment rows).
    pub bath_orbitals: DMatrix<f64>,
    /// L × (L_A + L_B): fragment unit vectors first, then bath orbitals.
    pub embedding_basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Fewer bath orbitals than fragment orbitals.
    pub degenerate_bath: bool,
    /// Bᵀ h B.
    pub bare_one_body: DMatrix<f64>,
    /// Bᵀ (J[D_env] − ½K[D_env]) B.
    pub env_potential: DMatrix<f64>,
    /// Bare one-body plus the environment potential.
    pub projected_one_body: DMatrix<f64>,
    pub projected_two_body: Tensor4,
    /// Environment determinant energy plus nuclear repulsion.
    pub core_energy: f64,
    /// Spin-summed density of the environment core, L × L.
    pub d_env: DMatrix<f64>,
    pub mu: f64,
    pub n_electrons_emb: usize,
    /// Columns: simulation orbitals in the fragment+bath basis, occupied first.
    pub canonical_rotation: DMatrix<f64>,
    canonical_two_body: Tensor4,
    qubit_base: QubitOperator,
    qubit_fragment_number: QubitOperator,
}

fn procrustes(current: &DMatrix<f64>, target: &DMatrix<f64>) -> DMatrix<f64> {
    // rotation R maximizing tr(Rᵀ currentᵀ target)
    let m = current.transpose() * target;
    let svd = m.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => u * vt,
        _ => DMatrix::identity(current.ncols(), current.ncols()),
    }
}

/// Make the largest-magnitude entry of each column positive.
fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let (mut best, mut val) = (0.0f64, 0.0);
        for v in col.iter() {
            if v.abs() > best + 1e-10 {
                best = v.abs();
                val = *v;
            }
        }
        if val < 0.0 {
            col.neg_mut();
        }
    }
}

impl EmbeddedProblem {
    pub fn n_fragment_orbitals(&self) -> usize {
        self.fragment.orbital_indices.len()
    }

    pub fn n_orbitals(&self) -> usize {
        self.embedding_basis.ncols()
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orbitals()
    }

    /// Qubit image of the embedded Hamiltonian with chemical potential μ, in
    /// the simulation basis. The core energy is not included.
    pub fn qubit_hamiltonian(&self, mu: f64) -> QubitOperator {
        if mu == 0.0 {
            return self.qubit_base.clone();
        }
        &self.qubit_base - &self.qubit_fragment_number.scale(Complex64::new(mu, 0.0))
    }

    /// Convert RDMs measured in the simulation basis to the fragment+bath basis.
    pub fn rdms_to_embedding_basis(&self, rdms: &Rdms) -> Result<Rdms> {
        rdms.rotate(&self.canonical_rotation.transpose())
    }

    /// Embedded Hamiltonian written directly in the fragment+bath basis,
    /// μ applied through the fragment number operator.
    pub fn fermion_operator_embedding_basis(&self, mu: f64) -> Result<FermionOperator> {
        let op = from_integrals(&self.projected_one_body, &self.projected_two_body, 0.0)?;
        let frag: Vec<usize> = (0..self.n_fragment_orbitals()).collect();
        Ok(add_chemical_potential(&op, mu, &frag))
    }
}

/// Schmidt decomposition of the mean-field determinant for one fragment,
/// followed by projection of the integrals into fragment+bath space.
///
/// `orth` holds the integrals in the orthogonalized basis. When `previous`
/// is the same fragment's problem at a nearby geometry, bath and
/// simulation orbitals are rotated to overlap it maximally so that RDMs and
/// circuit parameters carry over.
pub fn build_bath(
    mf: &MeanFieldResult,
    orth: &IntegralTensors,
    fragment: &Fragment,
    previous: Option<&EmbeddedProblem>,
) -> Result<EmbeddedProblem> {
    let l = orth.n_orb;
    let d = &mf.density_matrix;
    if d.nrows() != l {
        return Err(Error::DimensionMismatch { expected: l, got: d.nrows() });
    }
    let frag = &fragment.orbital_indices;
    let la = frag.len();
    if la == 0 {
        return Err(Error::InvalidFragments(format!("fragment {} has no orbitals", fragment.label)));
    }
    let env: Vec<usize> = (0..l).filter(|i| !frag.contains(i)).collect();

    let mut bath = DMatrix::zeros(l, 0);
    let mut singular_values = Vec::new();
    if !env.is_empty() {
        let block = DMatrix::from_fn(env.len(), la, |i, j| d[(env[i], frag[j])]);
        let svd = block.svd(true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let kept: Vec<usize> = order
            .into_iter()
            .filter(|&k| svd.singular_values[k] > BATH_THRESHOLD)
            .collect();
        singular_values = kept.iter().map(|&k| svd.singular_values[k]).collect();
        bath = DMatrix::zeros(l, kept.len());
        for (c, &k) in kept.iter().enumerate() {
            for (i, &e) in env.iter().enumerate() {
                bath[(e, c)] = u[(i, k)];
            }
        }
        fix_signs(&mut bath);
        if let Some(prev) = previous {
            if prev.bath_orbitals.shape() == bath.shape() && bath.ncols() > 0 {
                bath = &bath * procrustes(&bath, &prev.bath_orbitals);
            }
        }
    }
    let lb = bath.ncols();
    let degenerate_bath = lb < la.min(env.len());
    if degenerate_bath {
        log::warn!("fragment {}: degenerate bath ({lb} bath orbitals for {la} fragment orbitals)", fragment.label);
    }

    let n_emb = la + lb;
    let mut basis = DMatrix::zeros(l, n_emb);
    for (c, &p) in frag.iter().enumerate() {
        basis[(p, c)] = 1.0;
    }
    basis.columns_mut(la, lb).copy_from(&bath);

    // environment core: occupied part of D outside the embedding space
    let proj_out = DMatrix::identity(l, l) - &basis * basis.transpose();
    let d_out = &proj_out * d * &proj_out;
    let (occ_vals, occ_vecs) = symmetric_eigen(&d_out);
    let mut d_env = DMatrix::zeros(l, l);
    let mut n_core = 0;
    for k in 0..l {
        if occ_vals[k] > 1.0 {
            let c = occ_vecs.column(k);
            d_env += 2.0 * &c * c.transpose();
            n_core += 1;
        }
    }
    let d_emb = basis.transpose() * d * &basis;
    let n_proj = d_emb.trace();
    let n_electrons_emb = 2 * ((n_proj / 2.0).round().max(0.0) as usize);
    let total = mf.n_occ_spatial * 2;
    if n_electrons_emb + 2 * n_core != total {
        log::warn!(
            "fragment {}: embedded count {n_electrons_emb} + core {} differs from {total}",
            fragment.label,
            2 * n_core
        );
    }

    // integrals
    let v_env = mean_field_potential(orth, &d_env);
    let h_orth = &orth.one_body;
    let core_energy = (h_orth + &v_env * 0.5).component_mul(&d_env).sum() + orth.e_nuc;
    let emb_ints = transform_to_mo(orth, &basis)?;
    let bare_one_body = emb_ints.one_body.clone();
    let env_potential = basis.transpose() * &v_env * &basis;
    let projected_one_body = &bare_one_body + &env_potential;
    let projected_two_body = emb_ints.two_body;

    // simulation orbitals: occupied/virtual split of the projected density,
    // semi-canonical with respect to the projected Fock matrix
    let n_occ = n_electrons_emb / 2;
    let (dv, dvec) = symmetric_eigen(&d_emb);
    let occ = DMatrix::from_fn(n_emb, n_occ, |i, j| dvec[(i, n_emb - 1 - j)]);
    let vir = DMatrix::from_fn(n_emb, n_emb - n_occ, |i, j| dvec[(i, j)]);
    let _ = dv;
    let fock = basis.transpose() * &mf.fock_orth * &basis;
    let semi = |space: &DMatrix<f64>, prev: Option<DMatrix<f64>>| -> DMatrix<f64> {
        if space.ncols() == 0 {
            return space.clone();
        }
        let (_, w) = symmetric_eigen(&(space.transpose() * &fock * space));
        let mut out = space * w;
        fix_signs(&mut out);
        if let Some(p) = prev {
            if p.shape() == out.shape() {
                out = &out * procrustes(&out, &p);
            }
        }
        out
    };
    let prev_rot = previous.filter(|p| p.n_orbitals() == n_emb && p.n_electrons_emb == n_electrons_emb);
    let occ = semi(&occ, prev_rot.map(|p| p.canonical_rotation.columns(0, n_occ).into_owned()));
    let vir = semi(&vir, prev_rot.map(|p| p.canonical_rotation.columns(n_occ, n_emb - n_occ).into_owned()));
    let mut rot = DMatrix::zeros(n_emb, n_emb);
    rot.columns_mut(0, n_occ).copy_from(&occ);
    rot.columns_mut(n_occ, n_emb - n_occ).copy_from(&vir);

    let mut canonical_two_body = projected_two_body.clone();
    for axis in 0..4 {
        canonical_two_body = canonical_two_body.contract_axis(axis, &rot)?;
    }
    let h_can = rot.transpose() * &projected_one_body * &rot;
    let frag_proj = DMatrix::from_fn(n_emb, n_emb, |i, j| if i == j && i < la { 1.0 } else { 0.0 });
    let n_frag_can = rot.transpose() * frag_proj * &rot;
    let qubit_base = jordan_wigner(&from_integrals(&h_can, &canonical_two_body, 0.0)?);
    let qubit_fragment_number =
        jordan_wigner(&from_integrals(&n_frag_can, &Tensor4::cube(n_emb), 0.0)?);

    Ok(EmbeddedProblem {
        fragment: fragment.clone(),
        bath_orbitals: bath,
        embedding_basis: basis,
        singular_values,
        degenerate_bath,
        bare_one_body,
        env_potential,
        projected_one_body,
        projected_two_body,
        core_energy,
        d_env,
        mu: 0.0,
        n_electrons_emb,
        canonical_rotation: rot,
        canonical_two_body,
        qubit_base,
        qubit_fragment_number,
    })
}

/// Embedded Hamiltonian in the simulation basis with chemical potential μ,
/// and the scalar core energy kept outside the operator.
pub fn assemble_embedded_hamiltonian(emb: &EmbeddedProblem, mu: f64) -> Result<(FermionOperator, f64)> {
    let rot = &emb.canonical_rotation;
    let n = emb.n_orbitals();
    let la = emb.n_fragment_orbitals();
    let frag_proj = DMatrix::from_fn(n, n, |i, j| if i == j && i < la { 1.0 } else { 0.0 });
    let h = rot.transpose() * (&emb.projected_one_body - frag_proj * mu) * rot;
    Ok((from_integrals(&h, &emb.canonical_two_body, 0.0)?, emb.core_energy))
}

/// Fragment energy from RDMs in the fragment+bath basis:
///
/// E^A = Σ_{p∈A} [ Σ_s (h_ps + ½ V^env_ps) D_ps + ½ Σ_{qrs} ⟨pq|rs⟩ P_{pq s r} ]
///
/// with p running over both spins of the fragment orbitals.
pub fn fragment_energy(emb: &EmbeddedProblem, rdms: &Rdms) -> Result<f64> {
    let n = emb.n_orbitals();
    if rdms.n_spin_orbitals() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, got: rdms.n_spin_orbitals() });
    }
    let la = emb.n_fragment_orbitals();
    let h = &emb.bare_one_body + &emb.env_potential * 0.5;
    let g = &emb.projected_two_body;
    let mut e = 0.0;
    for p in 0..2 * la {
        let (pp, sp) = (p / 2, p % 2);
        for s in (sp..2 * n).step_by(2) {
            e += h[(pp, s / 2)] * rdms.one[(p, s)];
        }
        for q in 0..2 * n {
            let sq = q % 2;
            for r in (sp..2 * n).step_by(2) {
                for s in (sq..2 * n).step_by(2) {
                    let v = g.get(pp, q / 2, r / 2, s / 2);
                    if v != 0.0 {
                        e += 0.5 * v * rdms.two.get(p, q, s, r);
                    }
                }
            }
        }
    }
    Ok(e)
}

/// Electrons on the fragment orbitals (both spins) from fragment+bath RDMs.
pub fn fragment_electrons(emb: &EmbeddedProblem, rdms: &Rdms) -> f64 {
    (0..2 * emb.n_fragment_orbitals()).map(|p| rdms.one[(p, p)]).sum()
}

/// Everything that depends only on the geometry and fragment partition.
#[derive(Debug, Clone)]
pub struct DmetSystem {
    pub molecule: Molecule,
    pub ao: AoIntegrals,
    pub mean_field: MeanFieldResult,
    /// Integrals in the orthogonalized AO basis.
    pub orth: IntegralTensors,
    pub fragments: Vec<Fragment>,
    pub problems: Vec<EmbeddedProblem>,
    pub n_electrons: usize,
}

impl DmetSystem {
    /// Integrals, RHF, and one embedded problem per fragment.
    pub fn build(mol: &Molecule, fragment_atoms: &[Vec<usize>], previous: Option<&DmetSystem>) -> Result<Self> {
        let ao = compute_ao_integrals(mol, &build_basis(mol)?)?;
        Self::from_integrals(mol, ao, fragment_atoms, previous)
    }

    /// As [`build`](Self::build) with precomputed (e.g. cached) AO integrals.
    pub fn from_integrals(
        mol: &Molecule,
        ao: AoIntegrals,
        fragment_atoms: &[Vec<usize>],
        previous: Option<&DmetSystem>,
    ) -> Result<Self> {
        let n_electrons = mol.n_electrons();
        let guess = previous.map(|p| p.mean_field.density_ao());
        let mean_field = match run_rhf(&ao.tensors, &ao.overlap, n_electrons, guess.as_ref()) {
            Ok(mf) => mf,
            Err(e) if guess.is_some() => {
                log::warn!("RHF from previous density failed ({e}); retrying from core guess");
                run_rhf(&ao.tensors, &ao.overlap, n_electrons, None)?
            }
            Err(e) => return Err(e),
        };
        let orth = transform_to_mo(&ao.tensors, &mean_field.lowdin)?;
        let fragments = make_fragments(mol, fragment_atoms, &ao.tensors.basis_labels)?;
        let problems = fragments
            .par_iter()
            .enumerate()
            .map(|(k, f)| {
                let prev = previous.and_then(|p| p.problems.get(k)).filter(|p| p.fragment == *f);
                build_bath(&mean_field, &orth, f, prev)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DmetSystem { molecule: mol.clone(), ao, mean_field, orth, fragments, problems, n_electrons })
    }

    pub fn e_nuc(&self) -> f64 {
        self.orth.e_nuc
    }

    pub fn qubits_full(&self) -> usize {
        2 * self.orth.n_orb
    }

    pub fn qubits_embedded_max(&self) -> usize {
        self.problems.iter().map(|p| p.n_qubits()).max().unwrap_or(0)
    }

    /// Mean-field electrons on orbitals outside every fragment; zero when the
    /// fragments cover the molecule.
    pub fn n_mf(&self) -> f64 {
        let covered: Vec<bool> = (0..self.orth.n_orb)
            .map(|i| self.fragments.iter().any(|f| f.orbital_indices.contains(&i)))
            .collect();
        covered
            .iter()
            .enumerate()
            .filter(|(_, c)| !**c)
            .map(|(i, _)| self.mean_field.density_matrix[(i, i)])
            .sum()
    }
}

/// What a fragment solver returns: RDMs in the simulation basis.
#[derive(Debug, Clone)]
pub struct FragmentSolution {
    /// ⟨H_emb(μ)⟩ without the core energy.
    pub embedded_energy: f64,
    pub rdms: Rdms,
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fragment solver callback: (fragment index, problem, Hamiltonian at μ).
pub trait FragmentSolver: Sync {
    fn solve(&self, index: usize, problem: &EmbeddedProblem, hamiltonian: &QubitOperator) -> Result<FragmentSolution>;
}

impl<F> FragmentSolver for F
where
    F: Fn(usize, &EmbeddedProblem, &QubitOperator) -> Result<FragmentSolution> + Sync,
{
    fn solve(&self, index: usize, problem: &EmbeddedProblem, hamiltonian: &QubitOperator) -> Result<FragmentSolution> {
        self(index, problem, hamiltonian)
    }
}

/// Exact diagonalization of the embedded problem in its (N, Sz = 0) sector.
pub fn exact_solver(_: usize, problem: &EmbeddedProblem, h: &QubitOperator) -> Result<FragmentSolution> {
    let (e, psi) = exact_ground_state(h, problem.n_qubits(), problem.n_electrons_emb)?;
    Ok(FragmentSolution {
        embedded_energy: e,
        rdms: measure_rdms(&psi, problem.n_qubits())?,
        theta: Vec::new(),
        iterations: 0,
        converged: true,
    })
}

#[derive(Debug, Clone)]
pub struct FragmentResult {
    pub label: String,
    /// E^A.
    pub energy: f64,
    /// RDMs in the fragment+bath basis.
    pub rdms: Rdms,
    pub electrons: f64,
    pub embedded_energy: f64,
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct DmetState {
    pub mu: f64,
    pub fragment_results: Vec<FragmentResult>,
    pub n_mf: f64,
    /// Target electron count.
    pub n_occ: usize,
    pub cost: f64,
    pub converged: bool,
    /// (μ, electron-count deviation) at every evaluation.
    pub mu_trace: Vec<(f64, f64)>,
}

impl DmetState {
    pub fn total_electrons(&self) -> f64 {
        self.fragment_results.iter().map(|f| f.electrons).sum::<f64>() + self.n_mf
    }

    pub fn electron_deviation(&self) -> f64 {
        self.total_electrons() - self.n_occ as f64
    }

    pub fn vqe_iterations(&self) -> usize {
        self.fragment_results.iter().map(|f| f.iterations).sum()
    }
}

/// (Σ_A Σ_{r∈A} D^A_rr + N_mf − N_occ)².
pub fn dmet_cost(state: &DmetState) -> f64 {
    state.electron_deviation().powi(2)
}

/// Σ_A E^A + E_nuc.
pub fn total_energy(state: &DmetState, e_nuc: f64) -> Result<f64> {
    if state.fragment_results.is_empty() {
        return Err(Error::InvalidFragments("no fragment results to sum".into()));
    }
    Ok(state.fragment_results.iter().map(|f| f.energy).sum::<f64>() + e_nuc)
}

/// Turn solver output into a fragment result.
pub fn fragment_result(problem: &EmbeddedProblem, sol: FragmentSolution) -> Result<FragmentResult> {
    let rdms = problem.rdms_to_embedding_basis(&sol.rdms)?;
    Ok(FragmentResult {
        label: problem.fragment.label.clone(),
        energy: fragment_energy(problem, &rdms)?,
        electrons: fragment_electrons(problem, &rdms),
        rdms,
        embedded_energy: sol.embedded_energy,
        theta: sol.theta,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Solve every fragment at chemical potential μ (concurrently).
pub fn solve_fragments<S: FragmentSolver + ?Sized>(system: &DmetSystem, mu: f64, solver: &S) -> Result<DmetState> {
    let results = system
        .problems
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let h = p.qubit_hamiltonian(mu);
            let sol = solver.solve(k, p, &h)?;
            fragment_result(p, sol)
        })
        .collect::<Result<Vec<_>>>()?;
    for (p, r) in system.problems.iter().zip(&results) {
        log::debug!("fragment {} mu={mu:.6} E_A={:.10} N_A={:.6}", p.fragment.label, r.energy, r.electrons);
    }
    Ok(assemble_state(system, mu, results))
}

/// Collect fragment results at μ into a state with its cost.
pub fn assemble_state(system: &DmetSystem, mu: f64, results: Vec<FragmentResult>) -> DmetState {
    let mut state = DmetState {
        mu,
        fragment_results: results,
        n_mf: system.n_mf(),
        n_occ: system.n_electrons,
        cost: 0.0,
        converged: false,
        mu_trace: Vec::new(),
    };
    state.cost = dmet_cost(&state);
    state.mu_trace.push((mu, state.electron_deviation()));
    state
}
