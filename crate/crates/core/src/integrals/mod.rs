//! STO-3G Gaussian integrals and their transformation between orbital bases.
//!
//! Two-electron integrals are stored in physicist order,
//! `two_body[p, q, r, s] = ⟨pq|rs⟩ = ∫∫ φ_p(1) φ_q(2) r₁₂⁻¹ φ_r(1) φ_s(2)`,
//! which is `(pr|qs)` in chemist order. The matching second-quantized
//! operator is `½ Σ ⟨pq|rs⟩ a†_p a†_q a_s a_r`.

mod basis;
mod boys;
mod cache;
mod md;

pub use basis::{build_basis, sto3g_function_count, ContractedGaussian};
pub use boys::{boys_array, boys_function};
pub use cache::{load_cached, write_cache};
pub use md::{electron_repulsion, kinetic, nuclear_attraction, overlap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{nuclear_repulsion, Molecule};

/// Dense rank-4 tensor, row-major over `[p, q, r, s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Tensor4 {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn cube(n: usize) -> Self {
        Self::zeros([n; 4])
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor4 { dims, data })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    fn offset(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.dims[1] + q) * self.dims[2] + r) * self.dims[3] + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.offset(p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let o = self.offset(p, q, r, s);
        self.data[o] = v;
    }

    #[inline]
    pub fn add(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let o = self.offset(p, q, r, s);
        self.data[o] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Contract axis `axis` with the columns of `c`: `out[.., j, ..] = Σ_i c[i, j] t[.., i, ..]`.
    pub fn contract_axis(&self, axis: usize, c: &DMatrix<f64>) -> Result<Tensor4> {
        if c.nrows() != self.dims[axis] {
            return Err(Error::DimensionMismatch {
                expected: self.dims[axis],
                got: c.nrows(),
            });
        }
        let mut dims = self.dims;
        dims[axis] = c.ncols();
        let mut out = Tensor4::zeros(dims);
        let [d0, d1, d2, d3] = self.dims;
        for p in 0..d0 {
            for q in 0..d1 {
                for r in 0..d2 {
                    for s in 0..d3 {
                        let v = self.get(p, q, r, s);
                        if v == 0.0 {
                            continue;
                        }
                        let idx = [p, q, r, s];
                        let i = idx[axis];
                        for j in 0..c.ncols() {
                            let w = c[(i, j)];
                            if w == 0.0 {
                                continue;
                            }
                            let mut o = idx;
                            o[axis] = j;
                            out.add(o[0], o[1], o[2], o[3], v * w);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Nuclear repulsion plus one- and two-electron integrals over one orbital basis.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralTensors {
    pub n_orb: usize,
    /// Hartree.
    pub e_nuc: f64,
    /// d_pq = T + V, Hartree.
    pub one_body: DMatrix<f64>,
    /// ⟨pq|rs⟩, Hartree.
    pub two_body: Tensor4,
    /// Atom index of each orbital (meaningful for atom-centred bases).
    pub basis_labels: Vec<usize>,
}

impl IntegralTensors {
    /// Chemist-order accessor `(pq|rs)`.
    #[inline]
    pub fn chem(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two_body.get(p, r, q, s)
    }

    /// Largest deviation from the 8-fold real-orbital permutational symmetry.
    pub fn symmetry_error(&self) -> f64 {
        let n = self.n_orb;
        let g = &self.two_body;
        let mut err = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = g.get(p, q, r, s);
                        for w in [
                            g.get(q, p, s, r),
                            g.get(r, s, p, q),
                            g.get(s, r, q, p),
                            g.get(r, q, p, s),
                            g.get(p, s, r, q),
                            g.get(s, p, q, r),
                            g.get(q, r, s, p),
                        ] {
                            err = err.max((v - w).abs());
                        }
                    }
                }
            }
        }
        let h = &self.one_body;
        err.max((h - h.transpose()).amax())
    }
}

/// AO integrals plus the overlap matrix the SCF needs.
#[derive(Debug, Clone, PartialEq)]
pub struct AoIntegrals {
    pub tensors: IntegralTensors,
    pub overlap: DMatrix<f64>,
    pub kinetic: DMatrix<f64>,
    pub potential: DMatrix<f64>,
}

/// Smallest overlap eigenvalue tolerated.
pub const LINEAR_DEPENDENCE_TOL: f64 = 1e-8;

pub fn compute_ao_integrals(mol: &Molecule, basis: &[ContractedGaussian]) -> Result<AoIntegrals> {
    let n = basis.len();
    let charges: Vec<_> = mol
        .atoms()
        .iter()
        .map(|a| (a.atomic_number as f64, a.position_bohr()))
        .collect();
    let mut s = DMatrix::zeros(n, n);
    let mut t = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let sij = if i == j { 1.0 } else { overlap(&basis[i], &basis[j]) };
            let tij = kinetic(&basis[i], &basis[j]);
            let vij = nuclear_attraction(&basis[i], &basis[j], &charges);
            s[(i, j)] = sij;
            s[(j, i)] = sij;
            t[(i, j)] = tij;
            t[(j, i)] = tij;
            v[(i, j)] = vij;
            v[(j, i)] = vij;
        }
    }
    let min_eig = crate::linalg::symmetric_eigen(&s).0.min();
    if min_eig < LINEAR_DEPENDENCE_TOL {
        return Err(Error::IllConditioned(min_eig));
    }
    let chem = md::eri_tensor(basis);
    let mut two_body = Tensor4::cube(n);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s_ in 0..n {
                    // ⟨pq|rs⟩ = (pr|qs)
                    two_body.set(p, q, r, s_, chem[((p * n + r) * n + q) * n + s_]);
                }
            }
        }
    }
    let tensors = IntegralTensors {
        n_orb: n,
        e_nuc: nuclear_repulsion(mol)?,
        one_body: &t + &v,
        two_body,
        basis_labels: basis.iter().map(|g| g.atom).collect(),
    };
    Ok(AoIntegrals {
        tensors,
        overlap: s,
        kinetic: t,
        potential: v,
    })
}

/// Re-express integrals in the basis given by the columns of `c`
/// (`L × M`; M may be smaller than L for a projected subspace).
/// The two-body transform runs as four one-index contractions.
pub fn transform_to_mo(ao: &IntegralTensors, c: &DMatrix<f64>) -> Result<IntegralTensors> {
    if c.nrows() != ao.n_orb {
        return Err(Error::DimensionMismatch {
            expected: ao.n_orb,
            got: c.nrows(),
        });
    }
    let one_body = c.transpose() * &ao.one_body * c;
    let mut g = ao.two_body.clone();
    for axis in 0..4 {
        g = g.contract_axis(axis, c)?;
    }
    let labels = (0..c.ncols())
        .map(|j| {
            // atom carrying the largest coefficient
            let (imax, _) = c
                .column(j)
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            ao.basis_labels.get(imax).copied().unwrap_or(0)
        })
        .collect();
    Ok(IntegralTensors {
        n_orb: c.ncols(),
        e_nuc: ao.e_nuc,
        one_body,
        two_body: g,
        basis_labels: labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_xyz;
    use nalgebra::Vector3;

    fn h2() -> Molecule {
        parse_xyz("2\n\nH 0 0 0\nH 0 0 0.7414").unwrap()
    }

    fn water() -> Molecule {
        parse_xyz("3\n\nO 0 0 0.1173\nH 0 0.7572 -0.4692\nH 0 -0.7572 -0.4692").unwrap()
    }

    fn ao(mol: &Molecule) -> AoIntegrals {
        compute_ao_integrals(mol, &build_basis(mol).unwrap()).unwrap()
    }

    /// Two-centre s-overlap by cylindrical quadrature on a (ρ, z) grid.
    fn quadrature_overlap(g1: &ContractedGaussian, g2: &ContractedGaussian) -> f64 {
        let dz = (g2.center - g1.center).norm();
        let eval = |g: &ContractedGaussian, rho: f64, z: f64, z0: f64| -> f64 {
            let r2 = rho * rho + (z - z0) * (z - z0);
            g.primitives().map(|(a, w)| w * (-a * r2).exp()).sum()
        };
        let midpoint = |nr: usize, nz: usize| {
            let (rmax, zmin, zmax) = (8.0, -8.0, dz + 8.0);
            let hr = rmax / nr as f64;
            let hz = (zmax - zmin) / nz as f64;
            let mut s = 0.0;
            for i in 0..nr {
                let rho = (i as f64 + 0.5) * hr;
                for k in 0..nz {
                    let z = zmin + (k as f64 + 0.5) * hz;
                    s += 2.0 * std::f64::consts::PI * rho * eval(g1, rho, z, 0.0) * eval(g2, rho, z, dz);
                }
            }
            s * hr * hz
        };
        // Richardson on the O(h²) midpoint error
        let coarse = midpoint(400, 800);
        let fine = midpoint(800, 1600);
        (4.0 * fine - coarse) / 3.0
    }

    #[test]
    fn h2_overlap_matches_quadrature() {
        let mol = h2();
        let basis = build_basis(&mol).unwrap();
        let ints = ao(&mol);
        assert_eq!(ints.overlap[(0, 0)], 1.0);
        let q = quadrature_overlap(&basis[0], &basis[1]);
        assert!((ints.overlap[(0, 1)] - q).abs() < 1e-6, "{} vs {q}", ints.overlap[(0, 1)]);
        assert!((ints.overlap[(0, 1)] - 0.6593).abs() < 5e-4);
    }

    #[test]
    fn h2_reference_values() {
        // Szabo–Ostlund STO-3G H2 at R = 1.4 a.u.
        let mol = parse_xyz(&format!("2\n\nH 0 0 0\nH 0 0 {}", 1.4 / 1.8897259886)).unwrap();
        let i = ao(&mol);
        assert!((i.kinetic[(0, 0)] - 0.7600).abs() < 1e-4);
        assert!((i.kinetic[(0, 1)] - 0.2365).abs() < 1e-4);
        assert!((i.tensors.one_body[(0, 0)] - (-1.1204)).abs() < 1e-4);
        assert!((i.tensors.one_body[(0, 1)] - (-0.9584)).abs() < 1e-4);
        assert!((i.tensors.chem(0, 0, 0, 0) - 0.7746).abs() < 1e-4);
        assert!((i.tensors.chem(0, 0, 1, 1) - 0.5697).abs() < 1e-4);
        assert!((i.tensors.chem(1, 0, 0, 0) - 0.4441).abs() < 1e-4);
        assert!((i.tensors.chem(1, 0, 1, 0) - 0.2970).abs() < 1e-4);
    }

    #[test]
    fn symmetry_and_positivity() {
        let i = ao(&water());
        let n = i.tensors.n_orb;
        assert_eq!(n, 7);
        assert!(i.tensors.symmetry_error() < 1e-10);
        for k in 0..n {
            assert!((i.overlap[(k, k)] - 1.0).abs() < 1e-10);
        }
        let t_eigs = crate::linalg::symmetric_eigen(&i.kinetic).0;
        assert!(t_eigs.min() > -1e-10);
        // chemist pair matrix (pq),(rs) must be positive semidefinite
        let m = DMatrix::from_fn(n * n, n * n, |a, b| {
            i.tensors.chem(a / n, a % n, b / n, b % n)
        });
        assert!(crate::linalg::symmetric_eigen(&m).0.min() > -1e-8);
    }

    #[test]
    fn translation_leaves_s_t_eri_unchanged() {
        let mol = water();
        let moved = mol.translated(Vector3::new(0.7, -1.3, 2.1)).unwrap();
        let (a, b) = (ao(&mol), ao(&moved));
        assert!((&a.overlap - &b.overlap).amax() < 1e-10);
        assert!((&a.kinetic - &b.kinetic).amax() < 1e-10);
        assert!(a.tensors.two_body.max_abs_diff(&b.tensors.two_body) < 1e-10);
        assert!((&a.potential - &b.potential).amax() < 1e-9);
    }

    #[test]
    fn p_function_orientation() {
        // p functions perpendicular to the bond have zero overlap with the partner s
        let mol = parse_xyz("2\n\nO 0 0 0\nH 0 0 1.0").unwrap();
        let b = build_basis(&mol).unwrap();
        assert!(overlap(&b[2], &b[5]).abs() < 1e-14); // px · s_H
        assert!(overlap(&b[3], &b[5]).abs() < 1e-14); // py · s_H
        assert!(overlap(&b[4], &b[5]) > 0.0); // pz points at H
    }

    #[test]
    fn identity_transform_is_noop() {
        let i = ao(&h2());
        // make an orthonormal-AO fake by using the tensors directly with C = I
        let c = DMatrix::identity(2, 2);
        let t = transform_to_mo(&i.tensors, &c).unwrap();
        assert!((&t.one_body - &i.tensors.one_body).amax() < 1e-14);
        assert!(t.two_body.max_abs_diff(&i.tensors.two_body) < 1e-14);
        assert_eq!(t.e_nuc, i.tensors.e_nuc);
    }

    #[test]
    fn trace_invariant_under_rotation() {
        let i = ao(&water());
        let n = i.tensors.n_orb;
        let a = DMatrix::from_fn(n, n, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0);
        let q = (a.clone() + a.transpose()).symmetric_eigen().eigenvectors;
        let t = transform_to_mo(&i.tensors, &q).unwrap();
        assert!((t.one_body.trace() - i.tensors.one_body.trace()).abs() < 1e-10);
        assert!(t.symmetry_error() < 1e-10);
    }

    #[test]
    fn mo_transform_matches_naive_quadruple_loop() {
        let i = ao(&water());
        let n = i.tensors.n_orb;
        let c = DMatrix::from_fn(n, 3, |r, k| ((r + 2 * k) as f64 * 0.37).sin());
        let fast = transform_to_mo(&i.tensors, &c).unwrap();
        let g = &i.tensors.two_body;
        for (a, b, cc, d) in [(0, 0, 0, 0), (0, 1, 2, 1), (2, 1, 0, 2), (1, 1, 2, 2)] {
            let mut naive = 0.0;
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            naive += c[(p, a)] * c[(q, b)] * c[(r, cc)] * c[(s, d)] * g.get(p, q, r, s);
                        }
                    }
                }
            }
            assert!((fast.two_body.get(a, b, cc, d) - naive).abs() < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let i = ao(&h2());
        let c = DMatrix::identity(3, 3);
        assert!(matches!(
            transform_to_mo(&i.tensors, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
