//! Binary cache for AO integrals.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    8 bytes   b"DMGEOINT"
//! version  u32       1
//! n_atoms  u64
//! atoms    n_atoms × (atomic_number u64, x f64, y f64, z f64)   [Bohr]
//! n_orb    u64       L
//! e_nuc    f64
//! overlap  L·L f64   row-major
//! kinetic  L·L f64
//! potential L·L f64
//! two_body L⁴ f64    ⟨pq|rs⟩ row-major
//! labels   L × u64
//! ```
//!
//! A cache is only accepted when the stored atoms match the requested
//! molecule bit-for-bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{AoIntegrals, IntegralTensors, Tensor4};
use crate::error::{Error, Result};
use crate::geometry::Molecule;

const MAGIC: &[u8; 8] = b"DMGEOINT";
const VERSION: u32 = 1;

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn put_matrix(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            put_f64(w, m[(i, j)])?;
        }
    }
    Ok(())
}

fn get_matrix(r: &mut impl Read, n: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = get_f64(r)?;
        }
    }
    Ok(m)
}

fn atom_records(mol: &Molecule) -> Vec<(u64, [f64; 3])> {
    mol.atoms()
        .iter()
        .map(|a| {
            let p = a.position_bohr();
            (a.atomic_number as u64, [p.x, p.y, p.z])
        })
        .collect()
}

pub fn write_cache(path: &Path, mol: &Molecule, ints: &AoIntegrals) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let atoms = atom_records(mol);
    put_u64(&mut w, atoms.len() as u64)?;
    for (z, p) in &atoms {
        put_u64(&mut w, *z)?;
        for c in p {
            put_f64(&mut w, *c)?;
        }
    }
    let t = &ints.tensors;
    put_u64(&mut w, t.n_orb as u64)?;
    put_f64(&mut w, t.e_nuc)?;
    put_matrix(&mut w, &ints.overlap)?;
    put_matrix(&mut w, &ints.kinetic)?;
    put_matrix(&mut w, &ints.potential)?;
    for v in t.two_body.as_slice() {
        put_f64(&mut w, *v)?;
    }
    for l in &t.basis_labels {
        put_u64(&mut w, *l as u64)?;
    }
    w.flush()?;
    Ok(())
}

/// Load a cache written for exactly this molecule. `Ok(None)` when the file
/// is absent or was written for a different geometry.
pub fn load_cached(path: &Path, mol: &Molecule) -> Result<Option<AoIntegrals>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io(format!("{}: not an integral cache", path.display())));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb)?;
    if u32::from_le_bytes(vb) != VERSION {
        return Ok(None);
    }
    let n_atoms = get_u64(&mut r)? as usize;
    let mut stored = Vec::with_capacity(n_atoms);
    for _ in 0..n_atoms {
        let z = get_u64(&mut r)?;
        let p = [get_f64(&mut r)?, get_f64(&mut r)?, get_f64(&mut r)?];
        stored.push((z, p));
    }
    if stored != atom_records(mol) {
        return Ok(None);
    }
    let n = get_u64(&mut r)? as usize;
    let e_nuc = get_f64(&mut r)?;
    let overlap = get_matrix(&mut r, n)?;
    let kinetic = get_matrix(&mut r, n)?;
    let potential = get_matrix(&mut r, n)?;
    let mut data = vec![0.0; n * n * n * n];
    for v in data.iter_mut() {
        *v = get_f64(&mut r)?;
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(get_u64(&mut r)? as usize);
    }
    Ok(Some(AoIntegrals {
        tensors: IntegralTensors {
            n_orb: n,
            e_nuc,
            one_body: &kinetic + &potential,
            two_body: Tensor4::from_vec([n; 4], data)?,
            basis_labels: labels,
        },
        overlap,
        kinetic,
        potential,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_xyz;
    use crate::integrals::{build_basis, compute_ao_integrals};

    #[test]
    fn round_trip_and_geometry_guard() {
        let dir = std::env::temp_dir().join(format!("dmetgeo-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("h2o.bin");
        let mol = parse_xyz("3\n\nO 0 0 0.1173\nH 0 0.7572 -0.4692\nH 0 -0.7572 -0.4692").unwrap();
        let ints = compute_ao_integrals(&mol, &build_basis(&mol).unwrap()).unwrap();
        write_cache(&path, &mol, &ints).unwrap();
        let back = load_cached(&path, &mol).unwrap().unwrap();
        assert_eq!(back, ints);
        let other = mol.translated(nalgebra::Vector3::new(0.0, 0.0, 0.1)).unwrap();
        assert!(load_cached(&path, &other).unwrap().is_none());
        // header: magic, version, atom count
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 3);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
