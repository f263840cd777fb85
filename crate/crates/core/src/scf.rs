//! Closed-shell restricted Hartree–Fock with DIIS.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::integrals::IntegralTensors;
use crate::linalg::symmetric_eigen;

pub const MAX_ITERATIONS: usize = 200;
pub const ENERGY_TOL: f64 = 1e-10;
pub const DENSITY_TOL: f64 = 1e-8;
const DIIS_SIZE: usize = 8;
const ILL_CONDITIONED: f64 = 1e-8;

/// Converged RHF solution.
#[derive(Debug, Clone)]
pub struct MeanFieldResult {
    /// AO → MO coefficients, columns ordered by orbital energy.
    pub mo_coefficients: DMatrix<f64>,
    pub orbital_energies: DVector<f64>,
    /// Spin-summed 1-RDM in the Löwdin-orthogonalized AO basis.
    pub density_matrix: DMatrix<f64>,
    /// Fock matrix in the Löwdin-orthogonalized AO basis.
    pub fock_orth: DMatrix<f64>,
    /// S^{-1/2}.
    pub lowdin: DMatrix<f64>,
    /// S^{1/2}.
    pub lowdin_inverse: DMatrix<f64>,
    /// Total energy including nuclear repulsion.
    pub hf_energy: f64,
    pub n_occ_spatial: usize,
    pub iterations: usize,
}

impl MeanFieldResult {
    /// Spin-summed density in the AO basis.
    pub fn density_ao(&self) -> DMatrix<f64> {
        let c_occ = self.mo_coefficients.columns(0, self.n_occ_spatial);
        2.0 * &c_occ * c_occ.transpose()
    }

    /// MO coefficients expressed in the orthogonalized basis (orthonormal columns).
    pub fn mo_coefficients_orth(&self) -> DMatrix<f64> {
        &self.lowdin_inverse * &self.mo_coefficients
    }
}

fn sym_power(s: &DMatrix<f64>, power: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = symmetric_eigen(s);
    let min = vals.min();
    if min < ILL_CONDITIONED {
        return Err(Error::IllConditioned(min));
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| v.powf(power)));
    Ok(&vecs * d * vecs.transpose())
}

/// X = S^{-1/2}, so that XᵀSX = I and each orthogonalized orbital keeps
/// the atom assignment of the AO it came from.
pub fn lowdin_orthogonalize(overlap: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !overlap.is_square() {
        return Err(Error::DimensionMismatch {
            expected: overlap.nrows(),
            got: overlap.ncols(),
        });
    }
    sym_power(overlap, -0.5)
}

/// Two-electron mean-field potential J[D] − ½K[D] for a spin-summed density
/// `d` expressed in the same basis as `ints`.
pub fn mean_field_potential(ints: &IntegralTensors, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = ints.n_orb;
    let mut v = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let mut acc = 0.0;
            for r in 0..n {
                for s in 0..n {
                    let drs = d[(r, s)];
                    if drs == 0.0 {
                        continue;
                    }
                    acc += drs * (ints.chem(p, q, r, s) - 0.5 * ints.chem(p, r, q, s));
                }
            }
            v[(p, q)] = acc;
            v[(q, p)] = acc;
        }
    }
    v
}

/// RHF for an even electron count, starting from `guess` (AO density) or
/// the core Hamiltonian.
pub fn run_rhf(
    ao: &IntegralTensors,
    overlap: &DMatrix<f64>,
    n_electrons: usize,
    guess: Option<&DMatrix<f64>>,
) -> Result<MeanFieldResult> {
    if n_electrons % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "closed-shell RHF needs an even electron count, got {n_electrons}"
        )));
    }
    let n = ao.n_orb;
    if overlap.nrows() != n || overlap.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: overlap.nrows(),
        });
    }
    let n_occ = n_electrons / 2;
    if n_occ > n {
        return Err(Error::InvalidConfig(format!(
            "{n_electrons} electrons do not fit in {n} spatial orbitals"
        )));
    }
    let x = lowdin_orthogonalize(overlap)?;
    let x_inv = sym_power(overlap, 0.5)?;
    let h = &ao.one_body;

    let diagonalize = |f: &DMatrix<f64>| -> (DVector<f64>, DMatrix<f64>) {
        let fp = x.transpose() * f * &x;
        let (e, cp) = symmetric_eigen(&fp);
        (e, &x * cp)
    };
    let density = |c: &DMatrix<f64>| -> DMatrix<f64> {
        let occ = c.columns(0, n_occ);
        2.0 * &occ * occ.transpose()
    };
    let energy = |d: &DMatrix<f64>, f: &DMatrix<f64>| 0.5 * d.component_mul(&(h + f)).sum();

    let mut d = match guess {
        Some(g) if g.nrows() == n && g.ncols() == n => g.clone(),
        _ => density(&diagonalize(h).1),
    };
    let mut e_old = f64::INFINITY;
    let mut focks: Vec<DMatrix<f64>> = Vec::new();
    let mut errors: Vec<DMatrix<f64>> = Vec::new();
    let mut residual = f64::INFINITY;

    for iter in 1..=MAX_ITERATIONS {
        let f = h + mean_field_potential(ao, &d);
        let e_elec = energy(&d, &f);
        let err = x.transpose() * (&f * &d * overlap - overlap * &d * &f) * &x;
        residual = err.amax();

        focks.push(f.clone());
        errors.push(err);
        if focks.len() > DIIS_SIZE {
            focks.remove(0);
            errors.remove(0);
        }
        let f_extrap = diis_extrapolate(&focks, &errors).unwrap_or(f);
        let (_, c) = diagonalize(&f_extrap);
        let d_new = density(&c);
        let delta_d = (&d_new - &d).amax();
        let delta_e = (e_elec - e_old).abs();
        d = d_new;
        e_old = e_elec;

        if delta_e < ENERGY_TOL && delta_d < DENSITY_TOL {
            // final consistent Fock/energy at the converged density
            let f = h + mean_field_potential(ao, &d);
            let (eps, c) = diagonalize(&f);
            let e_final = energy(&d, &f) + ao.e_nuc;
            let d_orth = &x_inv * &d * &x_inv;
            let fock_orth = x.transpose() * &f * &x;
            return Ok(MeanFieldResult {
                mo_coefficients: c,
                orbital_energies: eps,
                density_matrix: d_orth,
                fock_orth,
                lowdin: x,
                lowdin_inverse: x_inv,
                hf_energy: e_final,
                n_occ_spatial: n_occ,
                iterations: iter,
            });
        }
    }
    Err(Error::ScfFailure {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn diis_extrapolate(focks: &[DMatrix<f64>], errors: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    let m = focks.len();
    if m < 2 {
        return None;
    }
    let mut b = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..=i {
            let v = errors[i].dot(&errors[j]);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
        b[(i, m)] = -1.0;
        b[(m, i)] = -1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = -1.0;
    let coef = b.lu().solve(&rhs)?;
    if coef.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let mut f = DMatrix::zeros(focks[0].nrows(), focks[0].ncols());
    for (c, fi) in coef.iter().take(m).zip(focks) {
        f += fi * *c;
    }
    Some(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{parse_xyz, Molecule};
    use crate::integrals::{build_basis, compute_ao_integrals, AoIntegrals};
    use proptest::prelude::*;

    fn ao(mol: &Molecule) -> AoIntegrals {
        compute_ao_integrals(mol, &build_basis(mol).unwrap()).unwrap()
    }

    fn check_invariants(mf: &MeanFieldResult, ints: &AoIntegrals, n_el: usize) {
        let d = &mf.density_matrix;
        assert!((d * d - 2.0 * d).amax() < 1e-6);
        assert!((d.trace() - n_el as f64).abs() < 1e-8);
        let ctsc = mf.mo_coefficients.transpose() * &ints.overlap * &mf.mo_coefficients;
        assert!((ctsc - DMatrix::identity(ints.tensors.n_orb, ints.tensors.n_orb)).amax() < 1e-8);
        for w in mf.orbital_energies.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn h2_energy() {
        let mol = parse_xyz("2\n\nH 0 0 0\nH 0 0 0.7414").unwrap();
        let ints = ao(&mol);
        let mf = run_rhf(&ints.tensors, &ints.overlap, 2, None).unwrap();
        assert!((mf.hf_energy - (-1.1167)).abs() < 1e-4, "{}", mf.hf_energy);
        check_invariants(&mf, &ints, 2);
    }

    #[test]
    fn water_energy() {
        // STO-3G water at this geometry: −74.9629 Ha (standard reference value)
        let mol = parse_xyz("3\n\nO 0 0 0.1173\nH 0 0.7572 -0.4692\nH 0 -0.7572 -0.4692").unwrap();
        let ints = ao(&mol);
        let mf = run_rhf(&ints.tensors, &ints.overlap, 10, None).unwrap();
        assert!((mf.hf_energy - (-74.9629)).abs() < 2e-3, "{}", mf.hf_energy);
        check_invariants(&mf, &ints, 10);
    }

    #[test]
    fn empty_occupation_gives_nuclear_energy() {
        let mol = parse_xyz("1\n\nH 0 0 0").unwrap();
        let ints = ao(&mol);
        let mf = run_rhf(&ints.tensors, &ints.overlap, 0, None).unwrap();
        assert_eq!(mf.hf_energy, ints.tensors.e_nuc);
    }

    #[test]
    fn odd_electrons_rejected() {
        let mol = parse_xyz("1\n\nH 0 0 0").unwrap();
        let ints = ao(&mol);
        assert!(run_rhf(&ints.tensors, &ints.overlap, 1, None).is_err());
    }

    #[test]
    fn translation_invariance() {
        let mol = parse_xyz("4\n\nH 0 0 0\nH 0 0 1.0\nH 0 0 2.0\nH 0 0 3.0").unwrap();
        let moved = mol.translated(nalgebra::Vector3::new(3.0, -1.0, 0.5)).unwrap();
        let (a, b) = (ao(&mol), ao(&moved));
        let ea = run_rhf(&a.tensors, &a.overlap, 4, None).unwrap().hf_energy;
        let eb = run_rhf(&b.tensors, &b.overlap, 4, None).unwrap().hf_energy;
        assert!((ea - eb).abs() < 1e-8);
    }

    #[test]
    fn lowdin_identity_and_2x2() {
        let x = lowdin_orthogonalize(&DMatrix::identity(3, 3)).unwrap();
        assert!((x - DMatrix::identity(3, 3)).amax() < 1e-14);
        // S = [[1, s], [s, 1]]: eigenpairs (1±s, (1,±1)/√2)
        let s = 0.6;
        let sm = DMatrix::from_row_slice(2, 2, &[1.0, s, s, 1.0]);
        let x = lowdin_orthogonalize(&sm).unwrap();
        let a = 0.5 * (1.0 / (1.0 + s).sqrt() + 1.0 / (1.0 - s).sqrt());
        let b = 0.5 * (1.0 / (1.0 + s).sqrt() - 1.0 / (1.0 - s).sqrt());
        assert!((x[(0, 0)] - a).abs() < 1e-12 && (x[(0, 1)] - b).abs() < 1e-12);
        assert!((x[(1, 1)] - a).abs() < 1e-12 && (x[(1, 0)] - b).abs() < 1e-12);
    }

    #[test]
    fn lowdin_rejects_singular() {
        let sm = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(lowdin_orthogonalize(&sm), Err(Error::IllConditioned(_))));
    }

    proptest! {
        #[test]
        fn lowdin_defining_property(vals in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let a = DMatrix::from_row_slice(4, 4, &vals);
            let s = &a * a.transpose() + DMatrix::identity(4, 4) * 0.5;
            let x = lowdin_orthogonalize(&s).unwrap();
            let xsx = x.transpose() * &s * &x;
            prop_assert!((xsx - DMatrix::identity(4, 4)).amax() < 1e-10);
        }
    }
}
