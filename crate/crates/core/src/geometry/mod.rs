//! Molecules, XYZ parsing, and the maps from optimization parameters to
//! Cartesian coordinates.
//!
//! All user-facing lengths are in Ångström. Conversion to Bohr happens at the
//! integral boundary via [`BOHR_PER_ANGSTROM`].

mod parameterization;

pub use parameterization::{GeometryParameterization, ParameterKind, Scheme, SphericalAttachment};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Bohr per Ångström.
pub const BOHR_PER_ANGSTROM: f64 = 1.8897259886;

/// Minimum allowed interatomic distance, Å.
pub const MIN_DISTANCE: f64 = 0.1;

const SYMBOLS: [&str; 18] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar",
];

/// Atomic number of an element symbol (case-insensitive on the trailing letter).
pub fn atomic_number(symbol: &str) -> Option<u32> {
    let mut chars = symbol.chars();
    let first = chars.next()?.to_ascii_uppercase();
    let rest: String = chars.map(|c| c.to_ascii_lowercase()).collect();
    let normalized = format!("{first}{rest}");
    SYMBOLS
        .iter()
        .position(|s| *s == normalized)
        .map(|i| i as u32 + 1)
}

pub fn element_symbol(z: u32) -> Option<&'static str> {
    SYMBOLS.get((z as usize).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: String,
    pub atomic_number: u32,
    /// Position in Ångström.
    pub position: Vector3<f64>,
}

impl Atom {
    pub fn new(element: &str, position: [f64; 3]) -> Result<Self> {
        let z = atomic_number(element)
            .ok_or_else(|| Error::InvalidGeometry(format!("unknown element symbol '{element}'")))?;
        let position = Vector3::from(position);
        if position.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "non-finite coordinate for {element}"
            )));
        }
        Ok(Atom {
            element: element_symbol(z).unwrap().to_string(),
            atomic_number: z,
            position,
        })
    }

    pub fn position_bohr(&self) -> Vector3<f64> {
        self.position * BOHR_PER_ANGSTROM
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    charge: i32,
    n_electrons: usize,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>, charge: i32) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidGeometry("molecule has no atoms".into()));
        }
        check_distances(&atoms)?;
        let total_z: i64 = atoms.iter().map(|a| a.atomic_number as i64).sum();
        let n = total_z - charge as i64;
        if n < 0 {
            return Err(Error::InvalidGeometry(format!(
                "charge {charge} leaves a negative electron count"
            )));
        }
        Ok(Molecule {
            atoms,
            charge,
            n_electrons: n as usize,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn charge(&self) -> i32 {
        self.charge
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    /// Copy of this molecule with new positions (Å), re-validated.
    pub fn with_positions(&self, positions: &[Vector3<f64>]) -> Result<Self> {
        if positions.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.atoms.len(),
                got: positions.len(),
            });
        }
        let atoms = self
            .atoms
            .iter()
            .zip(positions)
            .map(|(a, p)| {
                if p.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidGeometry("non-finite coordinate".into()));
                }
                Ok(Atom {
                    position: *p,
                    ..a.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Molecule::new(atoms, self.charge)
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.atoms.iter().map(|a| a.position).collect()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.atoms[i].position - self.atoms[j].position).norm()
    }

    /// Rigidly translated copy.
    pub fn translated(&self, shift: Vector3<f64>) -> Result<Self> {
        let p: Vec<_> = self.positions().iter().map(|p| p + shift).collect();
        self.with_positions(&p)
    }

    pub fn to_xyz(&self, comment: &str) -> String {
        let mut s = format!("{}\n{}\n", self.atoms.len(), comment);
        for a in &self.atoms {
            s.push_str(&format!(
                "{} {:.10} {:.10} {:.10}\n",
                a.element, a.position.x, a.position.y, a.position.z
            ));
        }
        s
    }
}

fn check_distances(atoms: &[Atom]) -> Result<()> {
    for i in 0..atoms.len() {
        for j in 0..i {
            let d = (atoms[i].position - atoms[j].position).norm();
            if d < MIN_DISTANCE {
                return Err(Error::InvalidGeometry(format!(
                    "atoms {j} and {i} are {d:.4} Å apart (minimum {MIN_DISTANCE} Å)"
                )));
            }
        }
    }
    Ok(())
}

/// Parse a standard XYZ file (Ångström). Charge defaults to zero.
pub fn parse_xyz(text: &str) -> Result<Molecule> {
    let mut lines = text.lines().enumerate();
    let (_, count_line) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let count: usize = count_line.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        message: format!("malformed atom count '{}'", count_line.trim()),
    })?;
    // comment line
    if lines.next().is_none() && count > 0 {
        return Err(Error::Parse {
            line: 2,
            message: "missing comment line".into(),
        });
    }
    let mut atoms = Vec::with_capacity(count);
    for (idx, line) in lines {
        if atoms.len() == count {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("more than {count} atom lines"),
            });
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(Error::Parse {
                line: lineno,
                message: "expected element and three coordinates".into(),
            });
        }
        let z = atomic_number(fields[0]).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("unknown element '{}'", fields[0]),
        })?;
        let mut pos = [0.0; 3];
        for (k, f) in fields[1..4].iter().enumerate() {
            pos[k] = f.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("non-numeric coordinate '{f}'"),
            })?;
            if !pos[k].is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite coordinate '{f}'"),
                });
            }
        }
        atoms.push(Atom::new(element_symbol(z).unwrap(), pos)?);
    }
    if atoms.len() != count {
        return Err(Error::Parse {
            line: count + 2,
            message: format!("expected {count} atoms, found {}", atoms.len()),
        });
    }
    Molecule::new(atoms, 0)
}

/// Σ_{I<J} Z_I Z_J / R_IJ in Hartree (distances converted to Bohr).
pub fn nuclear_repulsion(mol: &Molecule) -> Result<f64> {
    let atoms = mol.atoms();
    let mut e = 0.0;
    for i in 0..atoms.len() {
        for j in 0..i {
            let r = (atoms[i].position_bohr() - atoms[j].position_bohr()).norm();
            if r < 1e-12 {
                return Err(Error::InvalidGeometry(format!(
                    "atoms {j} and {i} coincide"
                )));
            }
            e += (atoms[i].atomic_number * atoms[j].atomic_number) as f64 / r;
        }
    }
    Ok(e)
}
