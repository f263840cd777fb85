use nalgebra::{Rotation3, Unit, Vector3};

use super::{Molecule, MIN_DISTANCE};
use crate::error::{Error, Result};

/// Reproduction tolerance for the reference structure, Å.
const REFERENCE_TOL: f64 = 1e-10;

/// Physical meaning of a single optimization parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterKind {
    /// Interatomic distance, Å. Subject to the dissociation cap.
    Length,
    /// Angle in radians.
    Angle,
    /// A raw Cartesian component, Å.
    Cartesian,
}

/// One attached atom placed in spherical coordinates around its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalAttachment {
    pub child: usize,
    pub parent: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// x is the flattened list of all coordinates, Å.
    Cartesian,
    /// Collinear chain. `gap_order[k]` names the chain gap (between
    /// `chain[g]` and `chain[g + 1]`) driven by parameter `k`.
    BondChain {
        chain: Vec<usize>,
        gap_order: Vec<usize>,
        axis: Vector3<f64>,
    },
    /// Two axis atoms with attached atoms in spherical coordinates about
    /// their parent. The local frame of an attachment has z pointing
    /// outward along the axis bond (away from the other axis atom), x the
    /// component of `aux` orthogonal to z, and y = z × x. Frames on the two
    /// axis atoms are therefore related by a C₂ rotation about x.
    ///
    /// Parameters (shared): `[d1, d2, theta, phi]` with d1 the attachment
    /// distance, d2 the axis distance, theta the azimuth about z measured
    /// from x, phi the polar angle from z. Unshared: `[d2]` followed by
    /// `(d1_k, theta_k, phi_k)` per attachment.
    SphericalAttachment {
        axis_atoms: (usize, usize),
        attachments: Vec<SphericalAttachment>,
        shared: bool,
        aux: Vector3<f64>,
    },
    /// Rotation of `group` about `pivot`: first by R_y about the y axis,
    /// then by R_z about the z axis.
    RigidGroupRotation { pivot: usize, group: Vec<usize> },
}

/// Map from a parameter vector to molecular coordinates, anchored on a
/// reference structure.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParameterization {
    scheme: Scheme,
    parameter_names: Vec<String>,
    kinds: Vec<ParameterKind>,
    reference: Molecule,
    reference_x: Vec<f64>,
}

fn check_index(mol: &Molecule, i: usize) -> Result<()> {
    if i >= mol.len() {
        Err(Error::InvalidGeometry(format!(
            "atom index {i} out of range for {} atoms",
            mol.len()
        )))
    } else {
        Ok(())
    }
}

fn local_frame(z: Vector3<f64>, aux: &Vector3<f64>) -> Result<[Vector3<f64>; 3]> {
    let x = aux - z * aux.dot(&z);
    let norm = x.norm();
    if norm < 1e-6 {
        return Err(Error::InvalidGeometry(
            "auxiliary frame direction is parallel to the bond axis".into(),
        ));
    }
    let x = x / norm;
    let y = z.cross(&x);
    Ok([x, y, z])
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

impl GeometryParameterization {
    pub fn cartesian(reference: Molecule) -> Result<Self> {
        let mut names = Vec::new();
        for i in 0..reference.len() {
            for c in ["x", "y", "z"] {
                names.push(format!("{c}{i}"));
            }
        }
        let kinds = vec![ParameterKind::Cartesian; names.len()];
        Self::finish(Scheme::Cartesian, names, kinds, reference)
    }

    /// Collinear chain over all atoms. `chain` defaults to file order and
    /// `gap_order` to the natural gap order.
    pub fn bond_chain(
        reference: Molecule,
        chain: Option<Vec<usize>>,
        gap_order: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = reference.len();
        if n < 2 {
            return Err(Error::InvalidGeometry("bond chain needs at least two atoms".into()));
        }
        let chain = chain.unwrap_or_else(|| (0..n).collect());
        let mut seen = vec![false; n];
        for &i in &chain {
            check_index(&reference, i)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidGeometry(format!("atom {i} repeated in chain")));
            }
        }
        if chain.len() != n {
            return Err(Error::InvalidGeometry(
                "bond chain must list every atom exactly once".into(),
            ));
        }
        let gap_order = gap_order.unwrap_or_else(|| (0..n - 1).collect());
        let mut sorted = gap_order.clone();
        sorted.sort_unstable();
        if sorted != (0..n - 1).collect::<Vec<_>>() {
            return Err(Error::InvalidGeometry(format!(
                "gap order must be a permutation of 0..{}",
                n - 1
            )));
        }
        let first = reference.atoms()[chain[0]].position;
        let last = reference.atoms()[chain[n - 1]].position;
        let axis = (last - first).normalize();
        let names = (1..n).map(|k| format!("d{k}")).collect();
        let kinds = vec![ParameterKind::Length; n - 1];
        Self::finish(
            Scheme::BondChain {
                chain,
                gap_order,
                axis,
            },
            names,
            kinds,
            reference,
        )
    }

    pub fn spherical_attachment(
        reference: Molecule,
        axis_atoms: (usize, usize),
        attachments: Vec<SphericalAttachment>,
        shared: bool,
        aux: Option<Vector3<f64>>,
    ) -> Result<Self> {
        check_index(&reference, axis_atoms.0)?;
        check_index(&reference, axis_atoms.1)?;
        if axis_atoms.0 == axis_atoms.1 || attachments.is_empty() {
            return Err(Error::InvalidGeometry(
                "spherical attachment needs two distinct axis atoms and at least one attachment"
                    .into(),
            ));
        }
        for a in &attachments {
            check_index(&reference, a.child)?;
            if a.parent != axis_atoms.0 && a.parent != axis_atoms.1 {
                return Err(Error::InvalidGeometry(format!(
                    "attachment parent {} is not an axis atom",
                    a.parent
                )));
            }
            if a.child == axis_atoms.0 || a.child == axis_atoms.1 {
                return Err(Error::InvalidGeometry("an axis atom cannot be attached".into()));
            }
        }
        let (names, kinds) = if shared {
            (
                vec!["d1".into(), "d2".into(), "theta".into(), "phi".into()],
                vec![
                    ParameterKind::Length,
                    ParameterKind::Length,
                    ParameterKind::Angle,
                    ParameterKind::Angle,
                ],
            )
        } else {
            let mut names = vec!["d2".to_string()];
            let mut kinds = vec![ParameterKind::Length];
            for k in 0..attachments.len() {
                names.extend([format!("d1_{k}"), format!("theta_{k}"), format!("phi_{k}")]);
                kinds.extend([ParameterKind::Length, ParameterKind::Angle, ParameterKind::Angle]);
            }
            (names, kinds)
        };
        let aux = aux.unwrap_or_else(|| Vector3::new(1.0, 0.0, 0.0));
        Self::finish(
            Scheme::SphericalAttachment {
                axis_atoms,
                attachments,
                shared,
                aux,
            },
            names,
            kinds,
            reference,
        )
    }

    pub fn rigid_group_rotation(reference: Molecule, pivot: usize, group: Vec<usize>) -> Result<Self> {
        check_index(&reference, pivot)?;
        if group.is_empty() {
            return Err(Error::InvalidGeometry("rotation group is empty".into()));
        }
        for &g in &group {
            check_index(&reference, g)?;
        }
        Self::finish(
            Scheme::RigidGroupRotation { pivot, group },
            vec!["R_y".into(), "R_z".into()],
            vec![ParameterKind::Angle, ParameterKind::Angle],
            reference,
        )
    }

    fn finish(
        scheme: Scheme,
        parameter_names: Vec<String>,
        kinds: Vec<ParameterKind>,
        reference: Molecule,
    ) -> Result<Self> {
        let mut p = GeometryParameterization {
            scheme,
            parameter_names,
            kinds,
            reference_x: Vec::new(),
            reference,
        };
        p.reference_x = p.extract(&p.reference)?;
        let rebuilt = p.apply(&p.reference_x)?;
        for (a, b) in rebuilt.atoms().iter().zip(p.reference.atoms()) {
            let dev = (a.position - b.position).norm();
            if dev > REFERENCE_TOL {
                return Err(Error::InvalidGeometry(format!(
                    "reference structure is not reproducible by this parameterization \
                     (deviation {dev:.3e} Å); check collinearity or symmetry"
                )));
            }
        }
        Ok(p)
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn kind_name(&self) -> &'static str {
        match self.scheme {
            Scheme::Cartesian => "cartesian",
            Scheme::BondChain { .. } => "bond-chain",
            Scheme::SphericalAttachment { .. } => "spherical-attachment",
            Scheme::RigidGroupRotation { .. } => "rigid-group-rotation",
        }
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    pub fn parameter_kinds(&self) -> &[ParameterKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameter_names.is_empty()
    }

    pub fn reference(&self) -> &Molecule {
        &self.reference
    }

    /// Parameter values that reproduce the reference structure.
    pub fn reference_parameters(&self) -> &[f64] {
        &self.reference_x
    }

    /// Build the molecule for parameter vector `x`.
    pub fn apply(&self, x: &[f64]) -> Result<Molecule> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        for ((name, kind), v) in self.parameter_names.iter().zip(&self.kinds).zip(x) {
            if !v.is_finite() {
                return Err(Error::InvalidGeometry(format!("parameter {name} is not finite")));
            }
            if *kind == ParameterKind::Length && *v <= MIN_DISTANCE {
                return Err(Error::InvalidGeometry(format!(
                    "bond parameter {name} = {v} Å is below {MIN_DISTANCE} Å"
                )));
            }
        }
        let mut pos = self.reference.positions();
        match &self.scheme {
            Scheme::Cartesian => {
                for (i, p) in pos.iter_mut().enumerate() {
                    *p = Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
                }
            }
            Scheme::BondChain {
                chain,
                gap_order,
                axis,
            } => {
                let mut gaps = vec![0.0; chain.len() - 1];
                for (k, &g) in gap_order.iter().enumerate() {
                    gaps[g] = x[k];
                }
                let origin = pos[chain[0]];
                let mut along = 0.0;
                for (k, &atom) in chain.iter().enumerate().skip(1) {
                    along += gaps[k - 1];
                    pos[atom] = origin + axis * along;
                }
            }
            Scheme::SphericalAttachment {
                axis_atoms: (a, b),
                attachments,
                shared,
                aux,
            } => {
                let d2 = if *shared { x[1] } else { x[0] };
                let u = (pos[*b] - pos[*a]).normalize();
                pos[*b] = pos[*a] + u * d2;
                for (k, att) in attachments.iter().enumerate() {
                    let (r, theta, phi) = if *shared {
                        (x[0], x[2], x[3])
                    } else {
                        (x[1 + 3 * k], x[2 + 3 * k], x[3 + 3 * k])
                    };
                    let other = if att.parent == *a { *b } else { *a };
                    let z = (pos[att.parent] - pos[other]).normalize();
                    let [fx, fy, fz] = local_frame(z, aux)?;
                    let dir = fx * (phi.sin() * theta.cos())
                        + fy * (phi.sin() * theta.sin())
                        + fz * phi.cos();
                    pos[att.child] = pos[att.parent] + dir * r;
                }
            }
            Scheme::RigidGroupRotation { pivot, group } => {
                let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), x[1])
                    * Rotation3::from_axis_angle(&Vector3::y_axis(), x[0]);
                let centre = pos[*pivot];
                for &g in group {
                    pos[g] = centre + rot * (pos[g] - centre);
                }
            }
        }
        self.reference.with_positions(&pos)
    }

    /// Read the internal coordinates of `mol` back out. Inverse of
    /// [`apply`](Self::apply) for the cartesian, bond-chain and
    /// spherical-attachment schemes. For rigid rotations the angles are
    /// recovered from the first group atom not on the rotation axes.
    pub fn extract(&self, mol: &Molecule) -> Result<Vec<f64>> {
        if mol.len() != self.reference.len() {
            return Err(Error::DimensionMismatch {
                expected: self.reference.len(),
                got: mol.len(),
            });
        }
        let pos = mol.positions();
        let x = match &self.scheme {
            Scheme::Cartesian => pos.iter().flat_map(|p| [p.x, p.y, p.z]).collect(),
            Scheme::BondChain { chain, gap_order, .. } => gap_order
                .iter()
                .map(|&g| (pos[chain[g + 1]] - pos[chain[g]]).norm())
                .collect(),
            Scheme::SphericalAttachment {
                axis_atoms: (a, b),
                attachments,
                shared,
                aux,
            } => {
                let spherical = |att: &SphericalAttachment| -> Result<[f64; 3]> {
                    let other = if att.parent == *a { *b } else { *a };
                    let z = (pos[att.parent] - pos[other]).normalize();
                    let [fx, fy, fz] = local_frame(z, aux)?;
                    let v = pos[att.child] - pos[att.parent];
                    let r = v.norm();
                    let phi = (v.dot(&fz) / r).clamp(-1.0, 1.0).acos();
                    let theta = wrap_angle(v.dot(&fy).atan2(v.dot(&fx)));
                    Ok([r, theta, phi])
                };
                let d2 = (pos[*b] - pos[*a]).norm();
                if *shared {
                    let [r, theta, phi] = spherical(&attachments[0])?;
                    vec![r, d2, theta, phi]
                } else {
                    let mut x = vec![d2];
                    for att in attachments {
                        x.extend(spherical(att)?);
                    }
                    x
                }
            }
            Scheme::RigidGroupRotation { pivot, group } => {
                let reference = self.reference.positions();
                let centre = reference[*pivot];
                let probe = group
                    .iter()
                    .copied()
                    .find(|&g| (reference[g] - centre).norm() > 1e-8);
                match probe {
                    None => vec![0.0, 0.0],
                    Some(g) => {
                        let v0 = reference[g] - centre;
                        let v1 = pos[g] - pos[*pivot];
                        rotation_angles(&v0, &v1)
                    }
                }
            }
        };
        Ok(x)
    }
}

/// Best-effort (R_y, R_z) with Rz·Ry·v0 ≈ v1.
fn rotation_angles(v0: &Vector3<f64>, v1: &Vector3<f64>) -> Vec<f64> {
    // Ry changes the polar angle of v0 in the xz-plane; Rz then spins about z.
    // Solve for Ry from the z component, then Rz from the azimuth.
    let rho = (v0.x * v0.x + v0.z * v0.z).sqrt();
    if rho < 1e-12 {
        let az = v1.y.atan2(v1.x) - v0.y.atan2(v0.x);
        return vec![0.0, wrap_angle(az)];
    }
    // Ry(t) maps rho·(cos a, ·, sin a) to z' = rho·sin(a - t); Rz keeps z.
    // Two branches reproduce z; take the smaller R_y.
    let alpha = v0.z.atan2(v0.x);
    let s = (v1.z / rho).clamp(-1.0, 1.0).asin();
    let t1 = wrap_angle(alpha - s);
    let t2 = wrap_angle(alpha - (std::f64::consts::PI - s));
    let t = if t1.abs() <= t2.abs() { t1 } else { t2 };
    let ry = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::y()), t);
    let w = ry * v0;
    let rz = v1.y.atan2(v1.x) - w.y.atan2(w.x);
    vec![wrap_angle(t), wrap_angle(rz)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_xyz;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn h4() -> Molecule {
        parse_xyz("4\n\nH 0 0 0\nH 0 0 1.0\nH 0 0 2.0\nH 0 0 3.0").unwrap()
    }

    fn h2o2_reference() -> Molecule {
        // C2-symmetric under the outward-z / aux-x frame convention
        parse_xyz("4\n\nO 0 0 0\nO 0 0 1.45\nH 0.9 0 -0.3\nH 0.9 0 1.75").unwrap()
    }

    fn h2o2_param() -> GeometryParameterization {
        GeometryParameterization::spherical_attachment(
            h2o2_reference(),
            (0, 1),
            vec![
                SphericalAttachment { child: 2, parent: 0 },
                SphericalAttachment { child: 3, parent: 1 },
            ],
            true,
            None,
        )
        .unwrap()
    }

    #[test]
    fn bond_chain_places_gaps() {
        let p = GeometryParameterization::bond_chain(h4(), None, None).unwrap();
        assert_eq!(p.len(), 3);
        let m = p.apply(&[0.734, 0.734, 3.0]).unwrap();
        assert_abs_diff_eq!(m.distance(0, 1), 0.734, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distance(1, 2), 0.734, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distance(2, 3), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distance(0, 3), 4.468, epsilon = 1e-12);
    }

    #[test]
    fn bond_chain_gap_order_maps_outer_bonds_first() {
        let p = GeometryParameterization::bond_chain(h4(), None, Some(vec![0, 2, 1])).unwrap();
        let m = p.apply(&[0.7, 0.8, 2.5]).unwrap();
        assert_abs_diff_eq!(m.distance(0, 1), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distance(2, 3), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distance(1, 2), 2.5, epsilon = 1e-12);
        assert_eq!(p.extract(&m).unwrap().len(), 3);
    }

    #[test]
    fn bond_chain_rejects_bent_reference() {
        let bent = parse_xyz("3\n\nH 0 0 0\nH 0 0 1\nH 0 1 1").unwrap();
        assert!(GeometryParameterization::bond_chain(bent, None, None).is_err());
    }

    #[test]
    fn reference_parameters_reproduce_reference() {
        let p = GeometryParameterization::bond_chain(h4(), None, None).unwrap();
        assert_eq!(p.reference_parameters(), &[1.0, 1.0, 1.0]);
        let m = p.apply(p.reference_parameters()).unwrap();
        for (a, b) in m.atoms().iter().zip(h4().atoms()) {
            assert!((a.position - b.position).norm() < 1e-10);
        }
    }

    #[test]
    fn apply_rejects_bad_inputs() {
        let p = GeometryParameterization::bond_chain(h4(), None, None).unwrap();
        assert!(matches!(
            p.apply(&[1.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(p.apply(&[1.0, 0.05, 1.0]), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn spherical_attachment_h2o2() {
        let p = h2o2_param();
        assert_eq!(p.parameter_names(), &["d1", "d2", "theta", "phi"]);
        let m = p.apply(&[1.0, 1.4, 0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(m.distance(0, 2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distance(1, 3), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distance(0, 1), 1.4, epsilon = 1e-12);
        // polar angle measured from the outward O–O direction on each oxygen
        let h = m.atoms()[2].position - m.atoms()[0].position;
        let out = m.atoms()[0].position - m.atoms()[1].position;
        assert_abs_diff_eq!(h.angle(&out), 0.5, epsilon = 1e-12);
        // C2 image: both H–O–O angles equal, H–H distance symmetric
        let h2 = m.atoms()[3].position - m.atoms()[1].position;
        let out2 = m.atoms()[1].position - m.atoms()[0].position;
        assert_abs_diff_eq!(h2.angle(&out2), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn spherical_attachment_rejects_asymmetric_shared_reference() {
        let asym = parse_xyz("4\n\nO 0 0 0\nO 0 0 1.45\nH 0.9 0 -0.3\nH 0.5 0.5 1.75").unwrap();
        let r = GeometryParameterization::spherical_attachment(
            asym,
            (0, 1),
            vec![
                SphericalAttachment { child: 2, parent: 0 },
                SphericalAttachment { child: 3, parent: 1 },
            ],
            true,
            None,
        );
        assert!(r.is_err());
    }

    #[test]
    fn rigid_rotation_identity_and_distances() {
        let mol = parse_xyz(
            "5\n\nC 0 0 0\nC 1.5 0 0\nO -0.7 1.2 0\nH -1.6 1.0 0.2\nO 2.1 1.0 0.3",
        )
        .unwrap();
        let p = GeometryParameterization::rigid_group_rotation(mol.clone(), 0, vec![2, 3]).unwrap();
        let same = p.apply(&[0.0, 0.0]).unwrap();
        assert_eq!(same, mol);
        let rotated = p.apply(&[0.4, -1.1]).unwrap();
        assert_abs_diff_eq!(rotated.distance(2, 3), mol.distance(2, 3), epsilon = 1e-12);
        assert_abs_diff_eq!(rotated.distance(0, 2), mol.distance(0, 2), epsilon = 1e-12);
        assert_abs_diff_eq!(rotated.distance(0, 3), mol.distance(0, 3), epsilon = 1e-12);
        assert_eq!(rotated.atoms()[1], mol.atoms()[1]);
        // y first, then z
        let v0 = mol.atoms()[2].position;
        let expected = Rotation3::from_axis_angle(&Vector3::z_axis(), -1.1)
            * Rotation3::from_axis_angle(&Vector3::y_axis(), 0.4)
            * v0;
        assert!((rotated.atoms()[2].position - expected).norm() < 1e-12);
        let back = p.extract(&rotated).unwrap();
        let again = p.apply(&back).unwrap();
        assert!((again.atoms()[2].position - rotated.atoms()[2].position).norm() < 1e-10);
    }

    #[test]
    fn collisions_are_reported() {
        let p = GeometryParameterization::cartesian(h4()).unwrap();
        let mut x = p.reference_parameters().to_vec();
        x[5] = 0.02; // atom 1 z → onto atom 0
        assert!(matches!(p.apply(&x), Err(Error::InvalidGeometry(_))));
    }

    proptest! {
        #[test]
        fn bond_chain_round_trip(d in proptest::collection::vec(0.3f64..3.0, 3)) {
            let p = GeometryParameterization::bond_chain(h4(), None, Some(vec![0, 2, 1])).unwrap();
            let back = p.extract(&p.apply(&d).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&d) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn spherical_round_trip(d1 in 0.8f64..1.3, d2 in 1.2f64..1.8,
                                theta in -3.0f64..3.0, phi in 0.3f64..1.8) {
            let p = h2o2_param();
            let x = [d1, d2, theta, phi];
            let back = p.extract(&p.apply(&x).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-10, "{:?} vs {:?}", back, x);
            }
        }

        #[test]
        fn rigid_rotation_preserves_group(ry in -3.0f64..3.0, rz in -3.0f64..3.0) {
            let mol = parse_xyz("4\n\nC 0 0 0\nO -0.7 1.2 0\nH -1.6 1.0 0.2\nC 1.5 0 0").unwrap();
            let p = GeometryParameterization::rigid_group_rotation(mol.clone(), 0, vec![1, 2]).unwrap();
            let m = p.apply(&[ry, rz]).unwrap();
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                prop_assert!((m.distance(i, j) - mol.distance(i, j)).abs() < 1e-12);
            }
        }
    }
}
