use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{apply_pauli_exponential, expectation, prepare_reference, Statevector, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::fermion_ops::{jordan_wigner, FermionOperator, PauliString};

/// Central finite-difference step for the fallback gradient.
pub const FD_STEP: f64 = 1e-5;

/// Spin-orbital excitation out of the reference determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Excitation {
    /// a_virt† a_occ
    Single { occ: usize, virt: usize },
    /// a_virt.1† a_virt.0† a_occ.0 a_occ.1 with occ.0 < occ.1, virt.0 < virt.1
    Double { occ: (usize, usize), virt: (usize, usize) },
}

impl Excitation {
    /// The excitation operator T (without the −T† part).
    pub fn operator(&self) -> FermionOperator {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            Excitation::Single { occ, virt } => FermionOperator::from_term(vec![(virt, true), (occ, false)], one),
            Excitation::Double { occ: (i, j), virt: (a, b) } => FermionOperator::from_term(
                vec![(b, true), (a, true), (i, false), (j, false)],
                one,
            ),
        }
    }
}

/// Disentangled UCCSD ansatz, one first-order Trotter step:
/// ∏_k exp(θ_k (T_k − T_k†)) applied in excitation order (singles, then
/// doubles, each lexicographic).
#[derive(Debug, Clone)]
pub struct UccsdAnsatz {
    n_qubits: usize,
    n_occ_spin: usize,
    excitations: Vec<Excitation>,
    /// Per excitation: mutually commuting (P_j, r_j) with
    /// JW(T − T†) = i Σ_j r_j P_j.
    generators: Vec<Vec<(PauliString, f64)>>,
}

impl UccsdAnsatz {
    /// Spin-conserving occupied→virtual singles and doubles over an
    /// interleaved-spin register whose first `n_occ_spin` qubits are occupied.
    pub fn new(n_qubits: usize, n_occ_spin: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCap { requested: n_qubits, cap: MAX_QUBITS });
        }
        if n_occ_spin > n_qubits {
            return Err(Error::DimensionMismatch { expected: n_qubits, got: n_occ_spin });
        }
        let occ: Vec<usize> = (0..n_occ_spin).collect();
        let virt: Vec<usize> = (n_occ_spin..n_qubits).collect();
        let mut excitations = Vec::new();
        for &i in &occ {
            for &a in &virt {
                if i % 2 == a % 2 {
                    excitations.push(Excitation::Single { occ: i, virt: a });
                }
            }
        }
        for (x, &i) in occ.iter().enumerate() {
            for &j in &occ[x + 1..] {
                for (y, &a) in virt.iter().enumerate() {
                    for &b in &virt[y + 1..] {
                        if i % 2 + j % 2 == a % 2 + b % 2 {
                            excitations.push(Excitation::Double { occ: (i, j), virt: (a, b) });
                        }
                    }
                }
            }
        }
        let generators = excitations
            .iter()
            .map(|e| {
                let t = e.operator();
                let g = &t + &t.hermitian_conjugate().scale(Complex64::new(-1.0, 0.0));
                let q = jordan_wigner(&g);
                q.terms()
                    .iter()
                    .map(|(p, c)| {
                        debug_assert!(c.re.abs() < 1e-12);
                        (*p, c.im)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(UccsdAnsatz { n_qubits, n_occ_spin, excitations, generators })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_occ_spin(&self) -> usize {
        self.n_occ_spin
    }

    pub fn excitations(&self) -> &[Excitation] {
        &self.excitations
    }

    pub fn n_parameters(&self) -> usize {
        self.excitations.len()
    }

    pub fn generators(&self) -> &[Vec<(PauliString, f64)>] {
        &self.generators
    }

    pub fn reference(&self) -> Result<Statevector> {
        prepare_reference(self.n_qubits, self.n_occ_spin)
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.excitations.len() {
            return Err(Error::DimensionMismatch { expected: self.excitations.len(), got: theta.len() });
        }
        Ok(())
    }

    /// Circuit with factor `j` of generator `k` shifted by `delta` in its
    /// exp(−iφP) angle.
    fn run(&self, theta: &[f64], reference: &Statevector, shift: Option<(usize, usize, f64)>) -> Statevector {
        let mut s = reference.clone();
        for (k, (gen, &t)) in self.generators.iter().zip(theta).enumerate() {
            for (j, (p, r)) in gen.iter().enumerate() {
                let mut phi = -t * r;
                if let Some((sk, sj, d)) = shift {
                    if sk == k && sj == j {
                        phi += d;
                    }
                }
                apply_pauli_exponential(&mut s, p, phi);
            }
        }
        s
    }
}

/// |ψ(θ)⟩ = U(θ)|reference⟩.
pub fn apply_uccsd(ansatz: &UccsdAnsatz, theta: &[f64], reference: &Statevector) -> Result<Statevector> {
    ansatz.check(theta)?;
    if reference.n_qubits() != ansatz.n_qubits {
        return Err(Error::DimensionMismatch { expected: ansatz.n_qubits, got: reference.n_qubits() });
    }
    Ok(ansatz.run(theta, reference, None))
}

/// ⟨ψ(θ)|op|ψ(θ)⟩ starting from the ansatz reference.
pub fn energy(ansatz: &UccsdAnsatz, theta: &[f64], op: &crate::fermion_ops::QubitOperator) -> Result<f64> {
    let psi = apply_uccsd(ansatz, theta, &ansatz.reference()?)?;
    expectation(&psi, op)
}

/// Exact gradient by the shift rule applied to every Pauli factor. For a
/// factor exp(−iφP) with P² = I, dE/dφ = E(φ + π/4) − E(φ − π/4); in the
/// rotation-gate convention R(α) = exp(−iαP/2) these are the usual ±π/2
/// shifts. Factor contributions are chained through φ = −θ_k r_j.
pub fn parameter_shift_gradient(
    ansatz: &UccsdAnsatz,
    theta: &[f64],
    op: &crate::fermion_ops::QubitOperator,
) -> Result<Vec<f64>> {
    ansatz.check(theta)?;
    op.real_terms(1e-10)?;
    // the constant term has no gradient; dropping it avoids norm round-off
    let op = &(op - &crate::fermion_ops::QubitOperator::identity(op.constant()));
    let reference = ansatz.reference()?;
    (0..ansatz.n_parameters())
        .into_par_iter()
        .map(|k| {
            let mut g = 0.0;
            for (j, (_, r)) in ansatz.generators[k].iter().enumerate() {
                let ep = expectation(&ansatz.run(theta, &reference, Some((k, j, FRAC_PI_4))), op)?;
                let em = expectation(&ansatz.run(theta, &reference, Some((k, j, -FRAC_PI_4))), op)?;
                g += -r * (ep - em);
            }
            Ok(g)
        })
        .collect()
}

/// Central finite differences with step `h`.
pub fn finite_difference_gradient(
    ansatz: &UccsdAnsatz,
    theta: &[f64],
    op: &crate::fermion_ops::QubitOperator,
    h: f64,
) -> Result<Vec<f64>> {
    ansatz.check(theta)?;
    (0..ansatz.n_parameters())
        .into_par_iter()
        .map(|k| {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[k] += h;
            tm[k] -= h;
            Ok((energy(ansatz, &tp, op)? - energy(ansatz, &tm, op)?) / (2.0 * h))
        })
        .collect()
}
