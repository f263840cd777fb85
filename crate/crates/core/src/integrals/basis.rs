use nalgebra::Vector3;

use super::md;
use crate::error::{Error, Result};
use crate::geometry::Molecule;

/// Contracted Cartesian Gaussian x^l y^m z^n Σ_k c_k exp(−α_k r²).
#[derive(Debug, Clone, PartialEq)]
pub struct ContractedGaussian {
    /// Centre in Bohr.
    pub center: Vector3<f64>,
    pub angular_momentum: (u32, u32, u32),
    pub exponents: Vec<f64>,
    /// Contraction coefficients as published (for normalized primitives).
    pub coefficients: Vec<f64>,
    /// Effective weight per primitive: coefficient × primitive norm × contraction norm.
    weights: Vec<f64>,
    /// Index of the atom this function sits on.
    pub atom: usize,
}

fn double_factorial(n: i64) -> f64 {
    let mut r = 1.0;
    let mut k = n;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}

fn primitive_norm(alpha: f64, (l, m, n): (u32, u32, u32)) -> f64 {
    let big_l = (l + m + n) as i32;
    let pi = std::f64::consts::PI;
    (2.0 * alpha / pi).powf(0.75) * (4.0 * alpha).powf(big_l as f64 / 2.0)
        / (double_factorial(2 * l as i64 - 1)
            * double_factorial(2 * m as i64 - 1)
            * double_factorial(2 * n as i64 - 1))
        .sqrt()
}

impl ContractedGaussian {
    pub fn new(
        center: Vector3<f64>,
        angular_momentum: (u32, u32, u32),
        exponents: Vec<f64>,
        coefficients: Vec<f64>,
        atom: usize,
    ) -> Result<Self> {
        if exponents.is_empty() || exponents.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: exponents.len(),
                got: coefficients.len(),
            });
        }
        if exponents.iter().any(|&a| a <= 0.0 || !a.is_finite()) {
            return Err(Error::InvalidGeometry("Gaussian exponents must be positive".into()));
        }
        let weights = exponents
            .iter()
            .zip(&coefficients)
            .map(|(&a, &c)| c * primitive_norm(a, angular_momentum))
            .collect();
        let mut g = ContractedGaussian {
            center,
            angular_momentum,
            exponents,
            coefficients,
            weights,
            atom,
        };
        let self_overlap = md::overlap(&g, &g);
        let scale = 1.0 / self_overlap.sqrt();
        for w in &mut g.weights {
            *w *= scale;
        }
        Ok(g)
    }

    pub(crate) fn primitives(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.exponents.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn shell_label(&self) -> &'static str {
        match self.angular_momentum {
            (0, 0, 0) => "s",
            (1, 0, 0) => "px",
            (0, 1, 0) => "py",
            (0, 0, 1) => "pz",
            _ => "?",
        }
    }
}

// STO-3G exponents and contraction coefficients as distributed by the EMSL
// Basis Set Exchange (sto-3g, H/C/O).
const STO3G_1S_COEF: [f64; 3] = [0.154_328_97, 0.535_328_14, 0.444_634_54];
const STO3G_2S_COEF: [f64; 3] = [-0.099_967_23, 0.399_512_83, 0.700_115_47];
const STO3G_2P_COEF: [f64; 3] = [0.155_916_27, 0.607_683_72, 0.391_957_39];

struct Sto3gElement {
    z: u32,
    one_s: [f64; 3],
    two_sp: Option<[f64; 3]>,
}

const STO3G: [Sto3gElement; 3] = [
    Sto3gElement {
        z: 1,
        one_s: [3.425_250_91, 0.623_913_73, 0.168_855_40],
        two_sp: None,
    },
    Sto3gElement {
        z: 6,
        one_s: [71.616_837_0, 13.045_096_0, 3.530_512_2],
        two_sp: Some([2.941_249_4, 0.683_483_1, 0.222_289_9]),
    },
    Sto3gElement {
        z: 8,
        one_s: [130.709_320_0, 23.808_861_0, 6.443_608_3],
        two_sp: Some([5.033_151_3, 1.169_596_1, 0.380_389_0]),
    },
];

/// Number of STO-3G spatial functions on an element, if supported.
pub fn sto3g_function_count(z: u32) -> Option<usize> {
    STO3G
        .iter()
        .find(|e| e.z == z)
        .map(|e| if e.two_sp.is_some() { 5 } else { 1 })
}

/// STO-3G basis for `mol` in atom order: 1s for H; 1s, 2s, 2px, 2py, 2pz for C and O.
pub fn build_basis(mol: &Molecule) -> Result<Vec<ContractedGaussian>> {
    let mut basis = Vec::new();
    for (idx, atom) in mol.atoms().iter().enumerate() {
        let data = STO3G
            .iter()
            .find(|e| e.z == atom.atomic_number)
            .ok_or_else(|| Error::UnsupportedBasis(atom.element.clone()))?;
        let center = atom.position_bohr();
        basis.push(ContractedGaussian::new(
            center,
            (0, 0, 0),
            data.one_s.to_vec(),
            STO3G_1S_COEF.to_vec(),
            idx,
        )?);
        if let Some(sp) = data.two_sp {
            basis.push(ContractedGaussian::new(
                center,
                (0, 0, 0),
                sp.to_vec(),
                STO3G_2S_COEF.to_vec(),
                idx,
            )?);
            for lmn in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                basis.push(ContractedGaussian::new(
                    center,
                    lmn,
                    sp.to_vec(),
                    STO3G_2P_COEF.to_vec(),
                    idx,
                )?);
            }
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_xyz;

    #[test]
    fn basis_sizes() {
        let h2 = parse_xyz("2\n\nH 0 0 0\nH 0 0 0.74").unwrap();
        assert_eq!(build_basis(&h2).unwrap().len(), 2);
        let h2o2 = parse_xyz("4\n\nO 0 0 0\nO 0 0 1.45\nH 0.9 0 -0.3\nH 0.9 0 1.75").unwrap();
        let b = build_basis(&h2o2).unwrap();
        assert_eq!(b.len(), 12);
        assert_eq!(2 * b.len(), 24);
    }

    #[test]
    fn glycolic_acid_counts() {
        let xyz = "9\n\nC 0 0 0\nC 1.52 0 0\nO -0.6 1.2 0\nO 2.2 1.0 0\nO 2.1 -1.1 0\n\
                   H -0.35 -0.5 0.9\nH -0.35 -0.5 -0.9\nH -1.5 1.1 0\nH 3.0 -0.9 0";
        let mol = parse_xyz(xyz).unwrap();
        let b = build_basis(&mol).unwrap();
        assert_eq!(b.len(), 29);
        assert_eq!(2 * b.len(), 58);
    }

    #[test]
    fn unsupported_element() {
        let mol = parse_xyz("1\n\nN 0 0 0").unwrap();
        assert_eq!(build_basis(&mol), Err(Error::UnsupportedBasis("N".into())));
    }

    #[test]
    fn functions_are_normalized() {
        let mol = parse_xyz("2\n\nO 0 0 0\nH 0 0 1").unwrap();
        for g in build_basis(&mol).unwrap() {
            assert!((md::overlap(&g, &g) - 1.0).abs() < 1e-10, "{}", g.shell_label());
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        let r = ContractedGaussian::new(Vector3::zeros(), (0, 0, 0), vec![-1.0], vec![1.0], 0);
        assert!(r.is_err());
    }
}
