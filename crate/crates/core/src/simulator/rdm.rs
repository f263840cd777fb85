use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{expectation_complex, Statevector};
use crate::error::{Error, Result};
use crate::fermion_ops::{jordan_wigner, FermionOperator};
use crate::integrals::Tensor4;

/// Memory budget for cached two-hole vectors during 2-RDM measurement.
const PAIR_BUDGET_BYTES: usize = 256 << 20;

/// Spin-orbital reduced density matrices:
/// `one[p,q] = ⟨a_p†a_q⟩`, `two[p,q,r,s] = ⟨a_p†a_q†a_r a_s⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rdms {
    pub one: DMatrix<f64>,
    pub two: Tensor4,
}

impl Rdms {
    pub fn zeros(n_spin_orbitals: usize) -> Self {
        Rdms {
            one: DMatrix::zeros(n_spin_orbitals, n_spin_orbitals),
            two: Tensor4::cube(n_spin_orbitals),
        }
    }

    pub fn n_spin_orbitals(&self) -> usize {
        self.one.nrows()
    }

    pub fn particle_number(&self) -> f64 {
        self.one.trace()
    }

    /// γ_pq = Σ_σ ⟨a_pσ†a_qσ⟩ over spatial orbitals.
    pub fn spin_summed_one(&self) -> DMatrix<f64> {
        let n = self.one.nrows() / 2;
        DMatrix::from_fn(n, n, |p, q| self.one[(2 * p, 2 * q)] + self.one[(2 * p + 1, 2 * q + 1)])
    }

    /// Rotate both RDMs by a spatial orbital rotation `u` (new = old · u),
    /// applied identically to both spins: D' = UᵀDU on each index.
    pub fn rotate(&self, u: &DMatrix<f64>) -> Result<Rdms> {
        let n = self.one.nrows();
        if u.nrows() * 2 != n || !u.is_square() {
            return Err(Error::DimensionMismatch { expected: n / 2, got: u.nrows() });
        }
        let mut us = DMatrix::zeros(n, n);
        for p in 0..n / 2 {
            for q in 0..n / 2 {
                us[(2 * p, 2 * q)] = u[(p, q)];
                us[(2 * p + 1, 2 * q + 1)] = u[(p, q)];
            }
        }
        let one = us.transpose() * &self.one * &us;
        let mut two = self.two.clone();
        for axis in 0..4 {
            two = two.contract_axis(axis, &us)?;
        }
        Ok(Rdms { one, two })
    }

    /// Enforce D = Dᵀ and the antisymmetry/Hermiticity of P.
    fn symmetrize(&mut self) {
        let n = self.one.nrows();
        self.one = (&self.one + self.one.transpose()) * 0.5;
        let old = self.two.clone();
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = old.get(p, q, r, s) - old.get(q, p, r, s) - old.get(p, q, s, r)
                            + old.get(q, p, s, r)
                            + old.get(s, r, q, p)
                            - old.get(s, r, p, q)
                            - old.get(r, s, q, p)
                            + old.get(r, s, p, q);
                        self.two.set(p, q, r, s, v / 8.0);
                    }
                }
            }
        }
    }
}

fn annihilate(p: usize, amps: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    let bit = 1usize << p;
    let below = bit - 1;
    for (b, a) in amps.iter().enumerate() {
        if b & bit != 0 && (a.re != 0.0 || a.im != 0.0) {
            let sign = if (b & below).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[b ^ bit] = a * sign;
        }
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// 1- and 2-RDMs by applying ladder operators to the amplitudes:
/// D_pq = ⟨a_pψ|a_qψ⟩ and P_pqrs = ⟨a_q a_p ψ|a_r a_s ψ⟩.
pub fn measure_rdms(state: &Statevector, n_spin_orbitals: usize) -> Result<Rdms> {
    let n = n_spin_orbitals;
    if n != state.n_qubits() {
        return Err(Error::DimensionMismatch { expected: state.n_qubits(), got: n });
    }
    let amps = state.amplitudes();
    let singles: Vec<Vec<Complex64>> = (0..n).into_par_iter().map(|p| annihilate(p, amps)).collect();
    let mut rdm = Rdms::zeros(n);
    for p in 0..n {
        for q in 0..n {
            rdm.one[(p, q)] = dot(&singles[p], &singles[q]).re;
        }
    }

    // two-hole vectors φ_xy = a_x a_y ψ for x < y, processed in blocks
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let vec_bytes = amps.len() * std::mem::size_of::<Complex64>();
    let block = (PAIR_BUDGET_BYTES / 2 / vec_bytes.max(1)).max(1);
    let build = |chunk: &[(usize, usize)]| -> Vec<Vec<Complex64>> {
        chunk.par_iter().map(|&(x, y)| annihilate(x, &singles[y])).collect()
    };
    let m = pairs.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let chunks: Vec<(usize, &[(usize, usize)])> =
        pairs.chunks(block).enumerate().map(|(i, c)| (i * block, c)).collect();
    for (i0, c1) in &chunks {
        let v1 = build(c1);
        for (j0, c2) in chunks.iter().filter(|(j0, _)| j0 >= i0) {
            let owned;
            let v2: &Vec<Vec<Complex64>> = if j0 == i0 {
                &v1
            } else {
                owned = build(c2);
                &owned
            };
            let v1r = &v1;
            let vals: Vec<(usize, usize, f64)> = (0..v1.len())
                .into_par_iter()
                .flat_map_iter(|a| {
                    (0..v2.len()).map(move |b| (a, b, dot(&v1r[a], &v2[b]).re))
                })
                .collect();
            for (a, b, v) in vals {
                gram[(i0 + a, j0 + b)] = v;
                gram[(j0 + b, i0 + a)] = v;
            }
        }
    }
    let pair_index = |x: usize, y: usize| -> Option<(usize, f64)> {
        if x == y {
            return None;
        }
        let (lo, hi, sign) = if x < y { (x, y, 1.0) } else { (y, x, -1.0) };
        // index of (lo, hi) in the row-major upper-triangle listing
        let idx = lo * (2 * n - lo - 1) / 2 + (hi - lo - 1);
        Some((idx, sign))
    };
    for p in 0..n {
        for q in 0..n {
            let Some((u, su)) = pair_index(q, p) else { continue };
            for r in 0..n {
                for s in 0..n {
                    let Some((v, sv)) = pair_index(r, s) else { continue };
                    rdm.two.set(p, q, r, s, su * sv * gram[(u, v)]);
                }
            }
        }
    }
    rdm.symmetrize();
    Ok(rdm)
}

/// Same quantities measured as expectation values of the Jordan–Wigner
/// images of a_p†a_q and a_p†a_q†a_r a_s. Slow; used as a cross-check.
pub fn measure_rdms_jw(state: &Statevector, n_spin_orbitals: usize) -> Result<Rdms> {
    let n = n_spin_orbitals;
    if n != state.n_qubits() {
        return Err(Error::DimensionMismatch { expected: state.n_qubits(), got: n });
    }
    let one_c = Complex64::new(1.0, 0.0);
    let mut rdm = Rdms::zeros(n);
    for p in 0..n {
        for q in 0..n {
            let op = FermionOperator::from_term(vec![(p, true), (q, false)], one_c);
            rdm.one[(p, q)] = expectation_complex(state, &jordan_wigner(&op))?.re;
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let op = FermionOperator::from_term(vec![(p, true), (q, true), (r, false), (s, false)], one_c);
                    if op.is_empty() {
                        continue;
                    }
                    let v = expectation_complex(state, &jordan_wigner(&op))?.re;
                    rdm.two.set(p, q, r, s, v);
                }
            }
        }
    }
    rdm.symmetrize();
    Ok(rdm)
}

#[cfg(test)]
mod tests {
    use super::super::{expectation, prepare_reference};
    use super::*;
    use crate::fermion_ops::from_integrals;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fixed_n(n: usize, n_el: usize, seed: u64) -> Statevector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1usize << n)
            .map(|b| {
                if b.count_ones() as usize == n_el {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Statevector::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn reference_rdm() {
        let r = measure_rdms(&prepare_reference(4, 2).unwrap(), 4).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]));
        assert!((r.one - expect).amax() < 1e-15);
        assert!((r.two.get(0, 1, 1, 0) - 1.0).abs() < 1e-15);
        assert!((r.two.get(0, 1, 0, 1) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ladder_route_matches_jw_route() {
        let s = random_fixed_n(4, 2, 1);
        let a = measure_rdms(&s, 4).unwrap();
        let b = measure_rdms_jw(&s, 4).unwrap();
        assert!((&a.one - &b.one).amax() < 1e-12);
        assert!(a.two.max_abs_diff(&b.two) < 1e-12);
    }

    #[test]
    fn energy_from_rdms_matches_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 3;
        let h = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let h = &h + h.transpose();
        let mut g = Tensor4::cube(n);
        let mut chem = Tensor4::cube(n);
        for p in 0..n {
            for q in 0..=p {
                for r in 0..n {
                    for s in 0..=r {
                        if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                            continue;
                        }
                        let v = rng.random_range(-0.5..0.5);
                        for (a, b, c, d) in [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                                             (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)] {
                            chem.set(a, b, c, d, v);
                        }
                    }
                }
            }
        }
        for p in 0..n { for q in 0..n { for r in 0..n { for s in 0..n {
            g.set(p, q, r, s, chem.get(p, r, q, s));
        }}}}
        let op = jordan_wigner(&from_integrals(&h, &g, 0.0).unwrap());
        let s = random_fixed_n(2 * n, 3, 4);
        let rdm = measure_rdms(&s, 2 * n).unwrap();
        // E = Σ h D + ½ Σ ⟨pq|rs⟩ P_{pq s r} over spin-orbitals
        let mut e = 0.0;
        for i in 0..2 * n {
            for j in 0..2 * n {
                if i % 2 == j % 2 {
                    e += h[(i / 2, j / 2)] * rdm.one[(i, j)];
                }
            }
        }
        for i in 0..2 * n { for j in 0..2 * n { for k in 0..2 * n { for l in 0..2 * n {
            if i % 2 == k % 2 && j % 2 == l % 2 {
                e += 0.5 * g.get(i / 2, j / 2, k / 2, l / 2) * rdm.two.get(i, j, l, k);
            }
        }}}}
        assert!((e - expectation(&s, &op).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn rotation_preserves_trace() {
        let s = random_fixed_n(4, 2, 5);
        let r = measure_rdms(&s, 4).unwrap();
        let (c, sn) = (0.3f64.cos(), 0.3f64.sin());
        let u = DMatrix::from_row_slice(2, 2, &[c, -sn, sn, c]);
        let rr = r.rotate(&u).unwrap();
        assert!((rr.particle_number() - r.particle_number()).abs() < 1e-12);
        let back = rr.rotate(&u.transpose()).unwrap();
        assert!((back.one - &r.one).amax() < 1e-12);
        assert!(back.two.max_abs_diff(&r.two) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sum_rules(seed in 0u64..10_000, n_el in 1usize..5) {
            let n = 6;
            let s = random_fixed_n(n, n_el, seed);
            let r = measure_rdms(&s, n).unwrap();
            prop_assert!((r.particle_number() - n_el as f64).abs() < 1e-10);
            for p in 0..n {
                for q in 0..n {
                    let c: f64 = (0..n).map(|k| r.two.get(p, k, k, q)).sum();
                    prop_assert!((c - (n_el as f64 - 1.0) * r.one[(p, q)]).abs() < 1e-8);
                }
            }
        }
    }
}
