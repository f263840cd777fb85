//! Exact statevector simulation.
//!
//! Qubit k is bit k of the amplitude index, so qubit k holds the occupation
//! of spin-orbital k under Jordan–Wigner.

mod rdm;
mod uccsd;

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use rdm::{measure_rdms, measure_rdms_jw, Rdms};
pub use uccsd::{
    apply_uccsd, energy, finite_difference_gradient, parameter_shift_gradient, Excitation,
    UccsdAnsatz, FD_STEP,
};

use crate::error::{Error, Result};
use crate::fermion_ops::{PauliString, QubitOperator};
use crate::linalg::symmetric_eigen;

/// Largest register the simulator accepts (2²⁴ amplitudes ≈ 256 MB).
pub const MAX_QUBITS: usize = 24;
/// Largest (N, Sz) sector handed to dense diagonalization.
pub const MAX_SECTOR_DIM: usize = 4096;
const HERMITIAN_TOL: f64 = 1e-10;
/// Above this register size expectation values fan out over terms.
const PARALLEL_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        Self::basis_state(n_qubits, 0)
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCap { requested: n_qubits, cap: MAX_QUBITS });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, got: index });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    /// Wrap and normalize raw amplitudes.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCap { requested: n_qubits, cap: MAX_QUBITS });
        }
        if amps.len() != 1usize << n_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << n_qubits, got: amps.len() });
        }
        let mut s = Statevector { n_qubits, amps };
        let n = s.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidConfig("statevector has zero norm".into()));
        }
        s.amps.iter_mut().for_each(|a| *a /= n);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// ⟨N⟩ = Σ_b |ψ_b|² popcount(b).
    pub fn particle_number(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * b.count_ones() as f64)
            .sum()
    }
}

/// Hartree–Fock reference: the first `n_occ_spin` qubits set.
pub fn prepare_reference(n_qubits: usize, n_occ_spin: usize) -> Result<Statevector> {
    if n_occ_spin > n_qubits {
        return Err(Error::DimensionMismatch { expected: n_qubits, got: n_occ_spin });
    }
    Statevector::basis_state(n_qubits, (1usize << n_occ_spin) - 1)
}

/// state ← exp(−i·angle·P)·state = cos(angle)·state − i·sin(angle)·P·state.
pub fn apply_pauli_exponential(state: &mut Statevector, p: &PauliString, angle: f64) {
    debug_assert!(p.width() <= state.n_qubits);
    if angle == 0.0 {
        return;
    }
    let (c, s) = (angle.cos(), angle.sin());
    let mis = Complex64::new(0.0, -s);
    let amps = &mut state.amps;
    if p.x == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            let (_, ph) = p.act(b);
            *a *= c + mis * ph;
        }
        return;
    }
    let top = 1usize << (63 - p.x.leading_zeros());
    for b in 0..amps.len() {
        if b & top != 0 {
            continue;
        }
        let (b2, ph1) = p.act(b);
        let (_, ph2) = p.act(b2);
        let (u, v) = (amps[b], amps[b2]);
        amps[b] = u * c + mis * ph2 * v;
        amps[b2] = v * c + mis * ph1 * u;
    }
}

fn term_expectation(amps: &[Complex64], p: &PauliString) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, a) in amps.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let (b2, ph) = p.act(b);
        acc += amps[b2].conj() * ph * a;
    }
    acc
}

/// ⟨ψ|op|ψ⟩ for a Hermitian operator. Terms are reduced in a fixed order.
pub fn expectation(state: &Statevector, op: &QubitOperator) -> Result<f64> {
    let terms = op.real_terms(HERMITIAN_TOL)?;
    if op.n_qubits() > state.n_qubits {
        return Err(Error::DimensionMismatch { expected: state.n_qubits, got: op.n_qubits() });
    }
    let amps = &state.amps;
    let values: Vec<f64> = if state.n_qubits >= PARALLEL_QUBITS {
        terms
            .par_iter()
            .map(|(p, c)| c * term_expectation(amps, p).re)
            .collect()
    } else {
        terms.iter().map(|(p, c)| c * term_expectation(amps, p).re).collect()
    };
    Ok(values.iter().sum())
}

/// ⟨ψ|op|ψ⟩ for an arbitrary (possibly non-Hermitian) operator.
pub fn expectation_complex(state: &Statevector, op: &QubitOperator) -> Result<Complex64> {
    if op.n_qubits() > state.n_qubits {
        return Err(Error::DimensionMismatch { expected: state.n_qubits, got: op.n_qubits() });
    }
    Ok(op
        .terms()
        .iter()
        .map(|(p, c)| c * term_expectation(&state.amps, p))
        .sum())
}

/// Basis indices with `n_electrons` set bits split evenly between even (α)
/// and odd (β) qubits.
pub fn sz0_sector(n_qubits: usize, n_electrons: usize) -> Vec<usize> {
    const EVEN: usize = 0x5555_5555_5555_5555;
    if n_electrons % 2 != 0 {
        return Vec::new();
    }
    (0..1usize << n_qubits)
        .filter(|b| {
            b.count_ones() as usize == n_electrons
                && (b & EVEN).count_ones() as usize == n_electrons / 2
        })
        .collect()
}

/// Real symmetric matrix of a number- and spin-conserving operator on a
/// basis-index sector.
pub fn sector_matrix(op: &QubitOperator, sector: &[usize]) -> Result<DMatrix<f64>> {
    let terms = op.real_terms(HERMITIAN_TOL)?;
    let index: HashMap<usize, usize> = sector.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut m = DMatrix::<Complex64>::zeros(sector.len(), sector.len());
    for (j, &b) in sector.iter().enumerate() {
        for (p, c) in &terms {
            let (b2, ph) = p.act(b);
            if let Some(&i) = index.get(&b2) {
                m[(i, j)] += ph * *c;
            }
        }
    }
    let im = m.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if im > 1e-9 {
        return Err(Error::NonHermitian(im));
    }
    Ok(m.map(|c| c.re))
}

/// Exact ground state of `op` restricted to N = `n_electrons`, Sz = 0, by
/// dense diagonalization.
pub fn exact_ground_state(
    op: &QubitOperator,
    n_qubits: usize,
    n_electrons: usize,
) -> Result<(f64, Statevector)> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::QubitCap { requested: n_qubits, cap: MAX_QUBITS });
    }
    let sector = sz0_sector(n_qubits, n_electrons);
    if sector.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no Sz = 0 sector with {n_electrons} electrons on {n_qubits} qubits"
        )));
    }
    if sector.len() > MAX_SECTOR_DIM {
        return Err(Error::InvalidConfig(format!(
            "sector dimension {} exceeds dense-diagonalization limit {MAX_SECTOR_DIM}",
            sector.len()
        )));
    }
    let m = sector_matrix(op, &sector)?;
    let (vals, vecs) = symmetric_eigen(&m);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    for (i, &b) in sector.iter().enumerate() {
        amps[b] = Complex64::new(vecs[(i, 0)], 0.0);
    }
    Ok((vals[0], Statevector::from_amplitudes(n_qubits, amps)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion_ops::{from_integrals, jordan_wigner};
    use crate::geometry::parse_xyz;
    use crate::integrals::{build_basis, compute_ao_integrals, transform_to_mo};
    use crate::scf::run_rhf;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn h2_qubit_hamiltonian(r: f64) -> (QubitOperator, f64) {
        let mol = parse_xyz(&format!("2\n\nH 0 0 0\nH 0 0 {r}")).unwrap();
        let ao = compute_ao_integrals(&mol, &build_basis(&mol).unwrap()).unwrap();
        let mf = run_rhf(&ao.tensors, &ao.overlap, 2, None).unwrap();
        let mo = transform_to_mo(&ao.tensors, &mf.mo_coefficients).unwrap();
        let op = from_integrals(&mo.one_body, &mo.two_body, mo.e_nuc).unwrap();
        (jordan_wigner(&op), mf.hf_energy)
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Statevector {
        let amps = (0..1 << n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Statevector::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn reference_states() {
        assert_eq!(prepare_reference(2, 2).unwrap(), Statevector::basis_state(2, 0b11).unwrap());
        let r = prepare_reference(4, 2).unwrap();
        assert_eq!(r.amplitudes()[0b0011], Complex64::new(1.0, 0.0));
        assert!(prepare_reference(2, 3).is_err());
        assert!(matches!(Statevector::zero_state(25), Err(Error::QubitCap { .. })));
    }

    #[test]
    fn reference_energy_is_rhf_energy() {
        let (h, e_hf) = h2_qubit_hamiltonian(0.7414);
        let e = expectation(&prepare_reference(4, 2).unwrap(), &h).unwrap();
        assert!((e - e_hf).abs() < 1e-8);
    }

    #[test]
    fn pauli_exponential_examples() {
        let mut s = Statevector::zero_state(1).unwrap();
        apply_pauli_exponential(&mut s, &PauliString::single(0, 'X').unwrap(), 0.0);
        assert_eq!(s, Statevector::zero_state(1).unwrap());
        let z = PauliString::single(0, 'Z').unwrap();
        apply_pauli_exponential(&mut s, &z, std::f64::consts::FRAC_PI_2);
        assert!((s.amplitudes()[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let th: f64 = rng.random_range(-3.0..3.0);
            let mut s = Statevector::zero_state(1).unwrap();
            apply_pauli_exponential(&mut s, &PauliString::single(0, 'X').unwrap(), th);
            // 2×2 oracle: exp(−iθX) = cos θ I − i sin θ X
            assert!((s.amplitudes()[0] - Complex64::new(th.cos(), 0.0)).norm() < 1e-14);
            assert!((s.amplitudes()[1] - Complex64::new(0.0, -th.sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn pauli_exponential_matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 3;
        for _ in 0..30 {
            let p = PauliString::new(rng.random_range(0..8), rng.random_range(0..8));
            let th: f64 = rng.random_range(-2.0..2.0);
            let s0 = random_state(n, &mut rng);
            let mut s = s0.clone();
            apply_pauli_exponential(&mut s, &p, th);
            let pm = QubitOperator::from_term(p, Complex64::new(1.0, 0.0)).to_dense(n);
            let u = DMatrix::<Complex64>::identity(8, 8) * Complex64::new(th.cos(), 0.0)
                - pm * Complex64::new(0.0, th.sin());
            let v = u * nalgebra::DVector::from_column_slice(s0.amplitudes());
            for b in 0..8 {
                assert!((v[b] - s.amplitudes()[b]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn norm_preserved_over_many_applications() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = random_state(4, &mut rng);
        for _ in 0..10_000 {
            let p = PauliString::new(rng.random_range(0..16), rng.random_range(0..16));
            apply_pauli_exponential(&mut s, &p, rng.random_range(-3.2..3.2));
        }
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simple_expectations() {
        let z0: QubitOperator = "1 [Z0]".parse().unwrap();
        assert_eq!(expectation(&Statevector::zero_state(3).unwrap(), &z0).unwrap(), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Statevector::from_amplitudes(1, vec![Complex64::new(h, 0.0); 2]).unwrap();
        let x: QubitOperator = "1 [X0]".parse().unwrap();
        assert!((expectation(&plus, &x).unwrap() - 1.0).abs() < 1e-15);
        let bad: QubitOperator = "(0+1i) [X0]".parse().unwrap();
        assert!(matches!(expectation(&plus, &bad), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn expectation_matches_dense_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s = random_state(3, &mut rng);
            let mut op = QubitOperator::zero();
            for _ in 0..6 {
                let p = PauliString::new(rng.random_range(0..8), rng.random_range(0..8));
                op.add_term(p, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
            }
            let m = op.to_dense(3);
            let v = nalgebra::DVector::from_column_slice(s.amplitudes());
            let oracle = (v.adjoint() * m * &v)[(0, 0)].re;
            assert!((expectation(&s, &op).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_ground_state_below_hf_and_matches_full_spectrum() {
        let (h, e_hf) = h2_qubit_hamiltonian(0.7414);
        let (e0, psi) = exact_ground_state(&h, 4, 2).unwrap();
        assert!(e0 < e_hf);
        assert!((e0 - (-1.137)).abs() < 1e-3);
        assert!((expectation(&psi, &h).unwrap() - e0).abs() < 1e-10);
        assert!((psi.particle_number() - 2.0).abs() < 1e-12);
        assert_eq!(sz0_sector(4, 2).len(), 4);
        assert_eq!(sz0_sector(8, 4).len(), 36);
    }

    proptest! {
        #[test]
        fn pauli_exponential_is_unitary(x in 0u64..16, z in 0u64..16, th in -4.0f64..4.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = random_state(4, &mut rng);
            apply_pauli_exponential(&mut s, &PauliString::new(x, z), th);
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }
}
