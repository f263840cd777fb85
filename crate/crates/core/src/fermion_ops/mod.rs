//! Second-quantized operators over spin-orbitals and the Jordan–Wigner map.
//!
//! Spin-orbitals are interleaved: spatial orbital p carries spin-orbitals
//! 2p (α) and 2p+1 (β). Qubit k represents spin-orbital k.

mod pauli;

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use pauli::{PauliString, QubitOperator};

use crate::error::{Error, Result};
use crate::integrals::Tensor4;

/// Coefficients with modulus below this are dropped.
pub const PRUNE_TOL: f64 = 1e-12;

/// A ladder operator: (spin-orbital index, is_creation).
pub type Ladder = (usize, bool);

/// Sum of products of ladder operators, each product stored left to right.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FermionOperator {
    terms: BTreeMap<Vec<Ladder>, Complex64>,
}

impl FermionOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut op = Self::zero();
        op.add_term(Vec::new(), Complex64::new(c, 0.0));
        op
    }

    pub fn from_term(ops: Vec<Ladder>, c: Complex64) -> Self {
        let mut op = Self::zero();
        op.add_term(ops, c);
        op
    }

    /// a_p† a_q.
    pub fn hopping(p: usize, q: usize, c: f64) -> Self {
        Self::from_term(vec![(p, true), (q, false)], Complex64::new(c, 0.0))
    }

    /// Add `c · ops`, dropping products that vanish because the same ladder
    /// operator appears twice in a row.
    pub fn add_term(&mut self, ops: Vec<Ladder>, c: Complex64) {
        if ops.windows(2).any(|w| w[0] == w[1]) {
            return;
        }
        match self.terms.get_mut(&ops) {
            Some(e) => {
                *e += c;
                if e.norm() < PRUNE_TOL {
                    self.terms.remove(&ops);
                }
            }
            None if c.norm() >= PRUNE_TOL => {
                self.terms.insert(ops, c);
            }
            None => {}
        }
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Ladder>, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of spin-orbitals referenced (max index + 1).
    pub fn n_modes(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|t| t.iter().map(|(p, _)| p + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for (t, v) in &self.terms {
            out.add_term(t.clone(), v * c);
        }
        out
    }

    pub fn hermitian_conjugate(&self) -> Self {
        let mut out = Self::zero();
        for (t, v) in &self.terms {
            let ops = t.iter().rev().map(|&(p, d)| (p, !d)).collect();
            out.add_term(ops, v.conj());
        }
        out
    }
}

impl Add for &FermionOperator {
    type Output = FermionOperator;
    fn add(self, rhs: &FermionOperator) -> FermionOperator {
        let mut out = self.clone();
        for (t, v) in &rhs.terms {
            out.add_term(t.clone(), *v);
        }
        out
    }
}

impl Mul for &FermionOperator {
    type Output = FermionOperator;
    fn mul(self, rhs: &FermionOperator) -> FermionOperator {
        let mut out = FermionOperator::zero();
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                let mut t = a.clone();
                t.extend_from_slice(b);
                out.add_term(t, x * y);
            }
        }
        out
    }
}

/// Electronic Hamiltonian over interleaved spin-orbitals:
///
/// constant + Σ h_pq a_p†a_q + ½ Σ ⟨pq|rs⟩ a_p†a_q†a_s a_r
///
/// with `two_body` in physicist order ⟨pq|rs⟩ = (pr|qs) over spatial
/// orbitals; spin is conserved along p→r and q→s.
pub fn from_integrals(
    one_body: &DMatrix<f64>,
    two_body: &Tensor4,
    constant: f64,
) -> Result<FermionOperator> {
    let n = one_body.nrows();
    if one_body.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: one_body.ncols() });
    }
    if two_body.dims() != [n; 4] {
        return Err(Error::DimensionMismatch { expected: n, got: two_body.dims()[0] });
    }
    let mut op = FermionOperator::constant(constant);
    let re = |v: f64| Complex64::new(v, 0.0);
    for p in 0..n {
        for q in 0..n {
            let h = one_body[(p, q)];
            if h.abs() < PRUNE_TOL {
                continue;
            }
            for s in 0..2 {
                op.add_term(vec![(2 * p + s, true), (2 * q + s, false)], re(h));
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = two_body.get(p, q, r, s);
                    if v.abs() < PRUNE_TOL {
                        continue;
                    }
                    for sa in 0..2 {
                        for sb in 0..2 {
                            let (i, j) = (2 * p + sa, 2 * q + sb);
                            let (k, l) = (2 * r + sa, 2 * s + sb);
                            if i == j || k == l {
                                continue;
                            }
                            op.add_term(vec![(i, true), (j, true), (l, false), (k, false)], re(0.5 * v));
                        }
                    }
                }
            }
        }
    }
    Ok(op)
}

/// op − μ Σ_{p∈A} (n_{pα} + n_{pβ}) for spatial fragment orbitals A.
pub fn add_chemical_potential(op: &FermionOperator, mu: f64, fragment_orbitals: &[usize]) -> FermionOperator {
    let mut out = op.clone();
    if mu == 0.0 {
        return out;
    }
    for &p in fragment_orbitals {
        for s in 0..2 {
            out.add_term(vec![(2 * p + s, true), (2 * p + s, false)], Complex64::new(-mu, 0.0));
        }
    }
    out
}

/// Total number operator Σ_p a_p†a_p over `n_modes` spin-orbitals.
pub fn number_operator(n_modes: usize) -> FermionOperator {
    let mut op = FermionOperator::zero();
    for p in 0..n_modes {
        op.add_term(vec![(p, true), (p, false)], Complex64::new(1.0, 0.0));
    }
    op
}

/// JW image of a single ladder operator:
/// a_p† → Z_0…Z_{p−1}(X_p − iY_p)/2, a_p → Z_0…Z_{p−1}(X_p + iY_p)/2.
pub fn ladder_image(p: usize, dagger: bool) -> [(PauliString, Complex64); 2] {
    let chain = (1u64 << p) - 1;
    let b = 1u64 << p;
    let sign = if dagger { -0.5 } else { 0.5 };
    [
        (PauliString::new(b, chain), Complex64::new(0.5, 0.0)),
        (PauliString::new(b, chain | b), Complex64::new(0.0, sign)),
    ]
}

fn term_image(ops: &[Ladder], c: Complex64, out: &mut BTreeMap<PauliString, Complex64>) {
    let mut acc: Vec<(PauliString, Complex64)> = vec![(PauliString::IDENTITY, c)];
    for &(p, d) in ops {
        let img = ladder_image(p, d);
        let mut next: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (s, a) in &acc {
            for (q, b) in &img {
                let (ph, r) = s.multiply(q);
                *next.entry(r).or_default() += a * b * ph;
            }
        }
        acc = next.into_iter().filter(|(_, v)| v.norm() >= PRUNE_TOL).collect();
    }
    for (s, v) in acc {
        *out.entry(s).or_default() += v;
    }
}

const JW_CHUNK: usize = 256;

/// Jordan–Wigner transform. Large operators are expanded in fixed-size
/// chunks concurrently; chunks are merged in order so the result does not
/// depend on the thread count.
pub fn jordan_wigner(op: &FermionOperator) -> QubitOperator {
    let terms: Vec<(&Vec<Ladder>, &Complex64)> = op.terms.iter().collect();
    let partials: Vec<BTreeMap<PauliString, Complex64>> = terms
        .par_chunks(JW_CHUNK)
        .map(|chunk| {
            let mut m = BTreeMap::new();
            for (t, c) in chunk {
                term_image(t, **c, &mut m);
            }
            m
        })
        .collect();
    let mut out = QubitOperator::zero();
    for m in partials {
        for (p, c) in m {
            out.add_term(p, c);
        }
    }
    out
}
